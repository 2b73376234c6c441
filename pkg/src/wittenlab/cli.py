"""Config-driven experiment runner.

Subcommands select which families of checks from the configuration are
run: ``curvature``, ``simulate``, ``harnack``, ``entropy``, ``flow``, or
``all``.  Exit code 0 means every asserted check passed, 1 means at
least one failed or a numerical error occurred, 2 means the
configuration was invalid.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from importlib import resources

import numpy as np

from . import entropy as entropy_mod
from . import harnack as harnack_mod
from . import reports
from .config import ConfigError, load_config, validate_experiment
from .geometry import build_manifold, ricci_bakry_emery, ball_volume_ratio_check
from .heatflow import (
    PositivityError,
    SolverConvergenceError,
    evolve,
    initial_delta,
)
from .operators import (
    bochner_residual,
    mu_inner,
    random_band_limited,
    witten_laplacian,
)
from .ricciflow import (
    evolve_heat_on_flow,
    fit_super_flow_constant,
    make_flow,
    super_ricci_flow_margin,
    w_decomposition_on_flow,
    w_entropy_on_flow,
)

SUBCOMMAND_CHECKS = {
    "curvature": ("curvature", "ball_ratio", "operators_selftest"),
    "simulate": ("mass",),
    "harnack": ("li_yau", "hamilton", "sup_bound", "integrated", "kernel_bounds"),
    "entropy": ("entropy", "tilde_identity"),
    "flow": ("flow_margin", "flow_entropy"),
}
SUBCOMMAND_CHECKS["all"] = tuple(
    name for group in SUBCOMMAND_CHECKS.values() for name in group
)


def _flow_series(flow, snapshots, m, K):
    """EntropySeries assembled along a flow (metric-aware quadratures)."""
    from .entropy import EntropySeries, phi_mK
    from .ricciflow import entropy_dissipation_on_flow

    times = np.array([s.t for s in snapshots])
    H = np.empty_like(times)
    dH = np.empty_like(times)
    H_mK = np.empty_like(times)
    W = np.empty_like(times)
    Phi = np.empty_like(times)
    T = np.empty((4, times.size))
    for i, s in enumerate(snapshots):
        vals = w_entropy_on_flow(flow, s, m, K)
        H[i], dH[i] = vals["H"], vals["dH_dt"]
        H_mK[i], W[i] = vals["H_mK"], vals["W_mK"]
        Phi[i] = phi_mK(s.t, m, K)
        dec = w_decomposition_on_flow(flow, s, m, K)
        T[:, i] = (dec.T1, dec.T2, dec.T3, dec.T4)
    d2H = np.array(
        [row["d2H_dt2"] for row in entropy_dissipation_on_flow(flow, snapshots)]
    )
    dW_num = np.gradient(W, times) if times.size > 1 else np.zeros_like(times)
    formula = T.sum(axis=0)
    return EntropySeries(
        m=float(m),
        K=float(K),
        times=times,
        H=H,
        dH_dt=dH,
        d2H_dt2=d2H,
        Phi=Phi,
        H_mK=H_mK,
        W_mK=W,
        dW_dt_numeric=dW_num,
        T1=T[0],
        T2=T[1],
        T3=T[2],
        T4=T[3],
        dW_dt_formula=formula,
        residual=dW_num - formula,
        monotonicity_bound=T[3].copy(),
    )


def bundled_config_path(name):
    """Resolve a bundled configuration by bare name."""
    ref = resources.files("wittenlab").joinpath("configs", f"{name}.yaml")
    if not ref.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return str(ref)


def _resolve_K(check, m, manifold, flow):
    if check.K_mode == "explicit":
        return check.K_value
    if check.K_mode == "admissible":
        return ricci_bakry_emery(manifold, m).admissible_K
    if flow is None:
        raise ConfigError(f"check {check.name}: K mode 'fitted' needs a flow")
    return fit_super_flow_constant(flow, m)


class _Runner:
    def __init__(self, config, selected, seed):
        self.config = config
        self.selected = selected
        self.seed = seed
        self.summary = {}
        self.manifold = build_manifold(config.manifold)
        self.flow = None
        if config.flow is not None:
            self.flow = make_flow(
                self.manifold,
                config.flow.get("family"),
                config.flow.get("params"),
                config.flow.get("horizon", config.solver.times[-1]),
            )
        self._snapshots = None
        self._manifest = None

    # ------------------------------------------------------------ helpers
    def out(self, filename):
        return os.path.join(self.config.out_dir, filename)

    def snapshots(self):
        if self._snapshots is None:
            solver = self.config.solver
            x0 = solver.x0 if len(solver.x0) == self.manifold.dim_n else (0,) * self.manifold.dim_n
            s0 = initial_delta(self.manifold, x0, t0=solver.t0)
            self._manifest = []
            times = solver.times
            if abs(times[0] - solver.t0) < 1e-15:
                times = times
            self._snapshots = evolve(
                self.manifold,
                s0,
                times,
                local_error=solver.local_error,
                manifest=self._manifest,
            )
        return self._snapshots

    def record(self, name, ok, **detail):
        entry = {"ok": bool(ok)}
        entry.update(detail)
        self.summary[name] = entry

    # ------------------------------------------------------------- checks
    def run_check(self, check):
        handler = getattr(self, f"check_{check.name}")
        handler(check)

    def check_curvature(self, check):
        for m in check.m_values or (self.manifold.dim_n + 1.0,):
            cf = ricci_bakry_emery(self.manifold, m)
            reports.atomic_write(
                self.out(f"curvature_m{m:g}.csv"),
                reports.curvature_csv(self.manifold, cf),
            )
            self.record(
                f"curvature_m{m:g}",
                True,
                min_value=cf.min_value,
                admissible_K=cf.admissible_K,
            )

    def check_ball_ratio(self, check):
        opts = check.options
        r = float(opts.get("r", 0.5))
        R = float(opts.get("R", 1.0))
        y = opts.get("center", 0)
        for m in check.m_values or (2.0,):
            K = _resolve_K(check, m, self.manifold, self.flow)
            rep = ball_volume_ratio_check(self.manifold, m, K, y, r, R)
            self.record(
                f"ball_ratio_m{m:g}", rep.ok, ratio=rep.ratio, bound=rep.bound
            )

    def check_operators_selftest(self, check):
        count = int(check.options.get("count", 20))
        rng = np.random.default_rng(self.seed)
        worst_res = 0.0
        worst_adj = 0.0
        for _ in range(count):
            f = random_band_limited(self.manifold, rng)
            h = random_band_limited(self.manifold, rng)
            res = bochner_residual(self.manifold, f)
            scale = 1.0 + float(np.abs(f).max())
            worst_res = max(worst_res, float(np.abs(res).max()) / scale)
            a = mu_inner(self.manifold, f, witten_laplacian(self.manifold, h))
            b = mu_inner(self.manifold, h, witten_laplacian(self.manifold, f))
            worst_adj = max(worst_adj, abs(a - b) / max(1.0, abs(a)))
        ok = worst_res <= 1e-7 and worst_adj <= 1e-10
        self.record(
            "operators_selftest",
            ok,
            worst_bochner_residual=worst_res,
            worst_adjointness_gap=worst_adj,
            seed=self.seed,
            fields=count,
        )

    def check_mass(self, check):
        snaps = self.snapshots()
        drift = max(abs(s.mass - 1.0) for s in snaps)
        ok = drift <= 1e-10
        reports.atomic_write(
            self.out("snapshots.csv"), reports.snapshots_csv(self.manifold, snaps)
        )
        reports.atomic_write(
            self.out("evolution_manifest.csv"), reports.manifest_csv(self._manifest)
        )
        self.record("mass_conservation", ok, max_drift=drift, snapshots=len(snaps))

    def _pointwise_harnack(self, check, fn_name):
        snaps = self.snapshots()
        out_reports = []
        all_ok = True
        dump_fields = bool(check.options.get("dump_defects", False))
        for m in check.m_values:
            K = _resolve_K(check, m, self.manifold, self.flow)
            for s in snaps:
                if fn_name == "li_yau":
                    rep = harnack_mod.li_yau_defect(self.manifold, s, m)
                elif fn_name == "hamilton":
                    rep = harnack_mod.hamilton_harnack_defect(self.manifold, s, m, K)
                else:
                    A = max(float(x.u.max()) for x in snaps) * (1.0 + 1e-12)
                    rep = harnack_mod.sup_bound_defect(self.manifold, s, m, K, A)
                out_reports.append(rep)
                all_ok = all_ok and rep.ok
                if dump_fields:
                    reports.atomic_write(
                        self.out(f"defect_{fn_name}_m{m:g}_t{s.t:g}.csv"),
                        reports.field_csv(self.manifold, rep.defect, name="defect"),
                    )
        reports.atomic_write(
            self.out(f"harnack_{fn_name}.csv"), reports.harnack_csv(out_reports)
        )
        worst = min(r.min_defect for r in out_reports)
        self.record(f"harnack_{fn_name}", all_ok, worst_defect=worst)

    def check_li_yau(self, check):
        self._pointwise_harnack(check, "li_yau")

    def check_hamilton(self, check):
        self._pointwise_harnack(check, "hamilton")

    def check_sup_bound(self, check):
        self._pointwise_harnack(check, "sup_bound")

    def check_integrated(self, check):
        snaps = self.snapshots()
        opts = check.options
        n_nodes = int(opts.get("nodes", 4))
        pairs = opts.get("pairs")
        if pairs is None:
            ts = [s.t for s in snaps]
            pairs = [[ts[0], ts[-1]]] if len(ts) >= 2 else []
        shape = self.manifold.shape
        sample = []
        if self.manifold.dim_n == 1:
            for i in range(n_nodes):
                sample.append((i * shape[0] // n_nodes,))
        else:
            side = max(1, int(round(math.sqrt(n_nodes))))
            for i in range(side):
                for j in range(side):
                    sample.append((i * shape[0] // side, j * shape[1] // side))
        out_reports = []
        all_ok = True
        for m in check.m_values:
            K = _resolve_K(check, m, self.manifold, self.flow)
            for tau, T in pairs:
                for x in sample:
                    for y in sample:
                        rep = harnack_mod.integrated_harnack_check(
                            snaps, x, y, float(tau), float(T), m, K
                        )
                        out_reports.append(rep)
                        all_ok = all_ok and rep.ok
        reports.atomic_write(
            self.out("harnack_integrated.csv"), reports.integrated_csv(out_reports)
        )
        self.record("harnack_integrated", all_ok, pairs=len(out_reports))

    def check_kernel_bounds(self, check):
        snaps = self.snapshots()
        all_ok = True
        for m in check.m_values:
            K = _resolve_K(check, m, self.manifold, self.flow)
            rep = harnack_mod.kernel_dt_log_bounds(self.manifold, snaps, m, K)
            all_ok = all_ok and rep.ok
            self.record(
                f"kernel_bounds_m{m:g}",
                rep.ok,
                min_margin=rep.min_margin,
                fitted_upper_constant=rep.fitted_upper_constant,
            )
        if not all_ok:
            self.record("kernel_bounds", False)

    def check_entropy(self, check):
        snaps = self.snapshots()
        for m in check.m_values:
            K = _resolve_K(check, m, self.manifold, self.flow)
            series = entropy_mod.build_series(self.manifold, snaps, m, K)
            ok = entropy_mod.w_monotonicity_check(series)
            dH_ok = bool(np.all(series.dH_dt >= -1e-12))
            reports.atomic_write(
                self.out(f"entropy_series_m{m:g}.csv"),
                reports.entropy_series_csv(series),
            )
            self.record(
                f"entropy_m{m:g}",
                ok and dH_ok,
                worst_monotonicity_gap=float(
                    (series.dW_dt_formula - series.monotonicity_bound).max()
                ),
                K=K,
            )

    def check_tilde_identity(self, check):
        worst = 0.0
        for m in check.m_values or (2.0,):
            for K in (0.0, 0.5, 1.0):
                for t in np.linspace(0.05, 1.2, 10):
                    out = entropy_mod.tilde_w_comparison(m, K, float(t))
                    worst = max(worst, abs(out["identity_residual"]))
        ok = worst <= 1e-9
        self.record("tilde_identity", ok, worst_residual=worst)

    def check_flow_margin(self, check):
        flow = self.flow
        margin_reports = []
        for m in check.m_values:
            all_ok = True
            K = _resolve_K(check, m, self.manifold, flow)
            worst = None
            for t in np.linspace(0.0, flow.horizon, 9):
                rep = super_ricci_flow_margin(flow, m, K, float(t))
                margin_reports.append(rep)
                all_ok = all_ok and rep.ok
                if worst is None or rep.min_value < worst.min_value:
                    worst = rep
            reports.atomic_write(
                self.out(f"flow_margin_field_m{m:g}.csv"),
                reports.field_csv(
                    self.manifold, worst.min_eigenvalue_field, name="margin"
                ),
            )
            self.record(f"flow_margin_m{m:g}", all_ok, K=K, worst_margin=worst.min_value)
        reports.atomic_write(
            self.out("flow_margin.csv"), reports.flow_margin_csv(margin_reports)
        )

    def check_flow_entropy(self, check):
        flow = self.flow
        solver = self.config.solver
        x0 = solver.x0 if len(solver.x0) == self.manifold.dim_n else (0,) * self.manifold.dim_n
        s0 = initial_delta(self.manifold, x0, t0=solver.t0)
        times = [t for t in solver.times if t <= flow.horizon + 1e-12]
        snaps = evolve_heat_on_flow(flow, s0, times, local_error=solver.local_error)
        for m in check.m_values:
            all_ok = True
            K = _resolve_K(check, m, self.manifold, flow)
            series = _flow_series(flow, snaps, m, K)
            margins = [
                super_ricci_flow_margin(flow, m, K, s.t).min_value for s in snaps
            ]
            worst_gap = float((series.dW_dt_formula - series.T4).max())
            if np.any(
                series.dW_dt_formula > series.T4 + 1e-9 * (1.0 + np.abs(series.T4))
            ):
                all_ok = False
            reports.atomic_write(
                self.out(f"flow_entropy_series_m{m:g}.csv"),
                reports.entropy_series_csv(series, flow_margin=margins),
            )
            self.record(f"flow_entropy_m{m:g}", all_ok, worst_gap=worst_gap, K=K)

    # -------------------------------------------------------------- entry
    def run(self):
        ran_any = False
        for check in self.config.checks:
            if check.name not in self.selected:
                continue
            ran_any = True
            self.run_check(check)
        if not ran_any:
            raise ConfigError(
                "no configured check matches the requested subcommand/selection"
            )
        reports.write_summary(self.out("summary"), self.summary)
        return 0 if all(entry["ok"] for entry in self.summary.values()) else 1


def run_experiment(config, selected=None, seed=0):
    """Run the selected checks of a validated experiment; return exit code."""
    selected = set(selected if selected is not None else SUBCOMMAND_CHECKS["all"])
    runner = _Runner(config, selected, seed)
    return runner.run()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wittenlab",
        description="Heat flow, Harnack, and W-entropy checks on weighted periodic models",
    )
    parser.add_argument(
        "subcommand",
        choices=sorted(SUBCOMMAND_CHECKS),
        help="which family of configured checks to run",
    )
    parser.add_argument(
        "--config",
        required=True,
        help="path to a YAML experiment file, or the name of a bundled one",
    )
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--check",
        default=None,
        help="comma-separated check names; further restricts the subcommand set",
    )
    parser.add_argument(
        "--grid-scale",
        type=int,
        default=1,
        help="multiply grid sizes for refinement studies",
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="seed for randomized self-test fields"
    )
    args = parser.parse_args(argv)

    try:
        path = args.config
        if not os.path.exists(path):
            path = bundled_config_path(args.config)
        raw = load_config(path)
        config = validate_experiment(raw, out_override=args.out, grid_scale=args.grid_scale)
        selected = set(SUBCOMMAND_CHECKS[args.subcommand])
        if args.check:
            wanted = {name.strip() for name in args.check.split(",") if name.strip()}
            unknown = wanted - set(SUBCOMMAND_CHECKS["all"])
            if unknown:
                raise ConfigError(f"unknown check names: {sorted(unknown)}")
            selected &= wanted
        return run_experiment(config, selected, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PositivityError, SolverConvergenceError, RuntimeError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
