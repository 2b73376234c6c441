"""CSV exports and summary files."""

import json
import os

import numpy as np

from wittenlab import build_series, evolve, initial_delta, ricci_bakry_emery
from wittenlab import reports


def test_curvature_csv_columns(circle_cos, tmp_path):
    cf = ricci_bakry_emery(circle_cos, 2.0)
    text = reports.curvature_csv(circle_cos, cf)
    lines = text.splitlines()
    assert lines[0].startswith("# wittenlab curvature v1:")
    assert lines[1] == "node_index,x,ric_mn_value"
    assert len(lines) == 2 + 256
    first = lines[2].split(",")
    assert first[0] == "0"
    assert float(first[2]) == cf.values[0]


def test_torus_field_csv_has_two_coords(torus_flat):
    values = np.zeros(torus_flat.shape)
    text = reports.field_csv(torus_flat, values, name="v")
    assert text.splitlines()[1] == "node_index,x,y,v"
    assert len(text.splitlines()) == 2 + 64 * 64


def test_snapshot_and_manifest_csv(circle_cos, tmp_path):
    s = initial_delta(circle_cos, 0, t0=0.05)
    manifest = []
    snaps = evolve(circle_cos, s, [0.1], manifest=manifest)
    snap_text = reports.snapshots_csv(circle_cos, snaps)
    assert snap_text.splitlines()[1] == "t,node_index,x,u"
    man_text = reports.manifest_csv(manifest)
    assert man_text.splitlines()[1] == "t,dt,error_estimate"
    assert len(man_text.splitlines()) == 2 + len(manifest)


def test_entropy_series_csv_with_margin(circle_cos):
    s = initial_delta(circle_cos, 0, t0=0.05)
    snaps = evolve(circle_cos, s, [0.1, 0.5])
    series = build_series(circle_cos, snaps, 3.0, 1.0)
    text = reports.entropy_series_csv(series, flow_margin=[0.0, 0.1])
    header = text.splitlines()[1].split(",")
    assert header[0] == "t"
    assert header[-1] == "flow_margin"
    assert len(text.splitlines()) == 2 + 2


def test_atomic_write_and_summary(tmp_path):
    base = str(tmp_path / "sub" / "summary")
    reports.write_summary(base, {"alpha": {"ok": True, "value": 1.5}})
    text = open(base + ".txt").read()
    assert "[PASS] alpha" in text
    data = json.loads(open(base + ".json").read())
    assert data["alpha"]["ok"] is True
    # overwrite is atomic and idempotent
    reports.write_summary(base, {"alpha": {"ok": False}})
    assert "[FAIL] alpha" in open(base + ".txt").read()
    assert not [f for f in os.listdir(tmp_path / "sub") if f.startswith(".tmp_")]
