"""CSV and summary exports.

Every CSV starts with a versioned comment line naming its columns, so
downstream plotting stays stable; files are written atomically (temp
file plus rename) and floats use shortest round-trip formatting, which
makes outputs byte-identical across runs of the same configuration.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

CSV_VERSION = "v1"

__all__ = [
    "atomic_write",
    "curvature_csv",
    "field_csv",
    "snapshots_csv",
    "harnack_csv",
    "integrated_csv",
    "entropy_series_csv",
    "flow_margin_csv",
    "manifest_csv",
    "write_summary",
]


def atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _node_rows(manifold):
    coords = manifold.coordinates()
    for flat, idx in enumerate(np.ndindex(*manifold.shape)):
        yield flat, idx, [coords[a][idx] for a in range(manifold.dim_n)]


def _coord_names(manifold):
    return ["x", "y"][: manifold.dim_n]


def curvature_csv(manifold, curvature):
    cols = ["node_index", *_coord_names(manifold), "ric_mn_value"]
    lines = [f"# wittenlab curvature {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for flat, idx, xyz in _node_rows(manifold):
        lines.append(
            ",".join([str(flat), *(_fmt(c) for c in xyz), _fmt(curvature.values[idx])])
        )
    return "\n".join(lines) + "\n"


def field_csv(manifold, values, name="value"):
    cols = ["node_index", *_coord_names(manifold), name]
    lines = [f"# wittenlab field {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for flat, idx, xyz in _node_rows(manifold):
        lines.append(",".join([str(flat), *(_fmt(c) for c in xyz), _fmt(values[idx])]))
    return "\n".join(lines) + "\n"


def snapshots_csv(manifold, snapshots):
    cols = ["t", "node_index", *_coord_names(manifold), "u"]
    lines = [f"# wittenlab snapshots {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for s in snapshots:
        for flat, idx, xyz in _node_rows(manifold):
            lines.append(
                ",".join(
                    [_fmt(s.t), str(flat), *(_fmt(c) for c in xyz), _fmt(s.u[idx])]
                )
            )
    return "\n".join(lines) + "\n"


def harnack_csv(reports):
    cols = ["inequality", "t", "m", "K", "min_defect", "argmin_node", "tol", "ok"]
    lines = [f"# wittenlab harnack {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for r in reports:
        node = "/".join(str(i) for i in r.argmin_node)
        lines.append(
            ",".join(
                [
                    r.inequality,
                    _fmt(r.t),
                    _fmt(r.m),
                    _fmt(r.K),
                    _fmt(r.min_defect),
                    node,
                    _fmt(r.tol),
                    _fmt(r.ok),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def integrated_csv(reports):
    cols = ["x", "y", "tau", "T", "m", "K", "distance", "lhs", "rhs", "ok"]
    lines = [f"# wittenlab integrated-harnack {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for r in reports:
        lines.append(
            ",".join(
                [
                    "/".join(str(i) for i in r.x),
                    "/".join(str(i) for i in r.y),
                    _fmt(r.tau),
                    _fmt(r.T),
                    _fmt(r.m),
                    _fmt(r.K),
                    _fmt(r.distance),
                    _fmt(r.lhs),
                    _fmt(r.rhs),
                    _fmt(r.ok),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def entropy_series_csv(series, flow_margin=None):
    cols = [
        "t",
        "H",
        "dH_dt",
        "d2H_dt2",
        "Phi",
        "H_mK",
        "W_mK",
        "dW_dt_numeric",
        "T1",
        "T2",
        "T3",
        "T4",
        "dW_dt_formula",
        "residual",
        "monotonicity_bound",
    ]
    if flow_margin is not None:
        cols.append("flow_margin")
    lines = [f"# wittenlab entropy-series {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for i, t in enumerate(series.times):
        row = [
            _fmt(t),
            _fmt(series.H[i]),
            _fmt(series.dH_dt[i]),
            _fmt(series.d2H_dt2[i]),
            _fmt(series.Phi[i]),
            _fmt(series.H_mK[i]),
            _fmt(series.W_mK[i]),
            _fmt(series.dW_dt_numeric[i]),
            _fmt(series.T1[i]),
            _fmt(series.T2[i]),
            _fmt(series.T3[i]),
            _fmt(series.T4[i]),
            _fmt(series.dW_dt_formula[i]),
            _fmt(series.residual[i]),
            _fmt(series.monotonicity_bound[i]),
        ]
        if flow_margin is not None:
            row.append(_fmt(flow_margin[i]))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def flow_margin_csv(reports):
    cols = ["t", "m", "K", "min_margin", "ok"]
    lines = [f"# wittenlab flow-margin {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for r in reports:
        lines.append(
            ",".join([_fmt(r.t), _fmt(r.m), _fmt(r.K), _fmt(r.min_value), _fmt(r.ok)])
        )
    return "\n".join(lines) + "\n"


def manifest_csv(rows):
    cols = ["t", "dt", "error_estimate"]
    lines = [f"# wittenlab evolution-manifest {CSV_VERSION}: " + ",".join(cols)]
    lines.append(",".join(cols))
    for r in rows:
        lines.append(",".join([_fmt(r["t"]), _fmt(r["dt"]), _fmt(r["error_estimate"])]))
    return "\n".join(lines) + "\n"


def write_summary(path_base, summary):
    """Write a plain-text and a JSON summary of check outcomes.

    ``summary`` maps check names to dicts with at least ``ok`` and a few
    scalar diagnostics (worst defects, residuals, parameters).
    """
    lines = []
    for name in sorted(summary):
        entry = summary[name]
        status = "PASS" if entry.get("ok") else "FAIL"
        detail = ", ".join(
            f"{k}={_fmt(v)}" for k, v in sorted(entry.items()) if k != "ok"
        )
        lines.append(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
    atomic_write(path_base + ".txt", "\n".join(lines) + "\n")
    atomic_write(
        path_base + ".json",
        json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n",
    )
