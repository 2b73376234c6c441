"""Conformal metric flows coupled to the potential by measure invariance.

Supported flows scale the flat base metric by a space-constant factor
e^{2 lam(t)} and move the potential by phi(t) = phi0 + n (lam(t) - lam(0)),
which is exactly the coupling that freezes the weighted measure.  Within
this family every tensor stays diagonal: the time-dependent operator is
e^{-2 lam(t)} times the base operator, and curvature quadratics pick up
explicit powers of the conformal factor.

The margin field of the super-flow condition, the heat flow of the
time-dependent operator, the flow version of the dW/dt decomposition and
the entropy dissipation identities all live here; with a static flow each
reduces to its fixed-metric counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import (
    M_EQUALS_N_TOL,
    WDecomposition,
    monotonicity_bound,
    phi_mK,
    phi_mK_prime,
)
from .geometry import WeightedManifold, bakry_emery_tensor, ricci_bakry_emery
from .heatflow import _adaptive_evolve, _advance
from .operators import gradient, hessian, integrate_mu, witten_laplacian

__all__ = [
    "FlowSpec",
    "FlowMarginReport",
    "make_flow",
    "super_ricci_flow_margin",
    "fit_super_flow_constant",
    "evolve_heat_on_flow",
    "w_decomposition_on_flow",
    "entropy_dissipation_on_flow",
    "w_entropy_on_flow",
]


@dataclass(frozen=True)
class FlowSpec:
    """Space-constant conformal flow over a fixed time horizon."""

    base: WeightedManifold
    family: str
    params: dict
    horizon: float

    def log_factor(self, t):
        """Conformal log-factor lam(t)."""
        p = self.params
        if self.family == "static":
            return 0.0
        if self.family == "constant_rate":
            return p["lambda0"] + p["rate"] * t
        if self.family == "sinusoidal":
            return p["lambda0"] + p["amplitude"] * math.sin(p["frequency"] * t)
        raise ValueError(f"unknown flow family {self.family!r}")

    def log_factor_rate(self, t):
        """d lam / dt."""
        p = self.params
        if self.family == "static":
            return 0.0
        if self.family == "constant_rate":
            return p["rate"]
        if self.family == "sinusoidal":
            return p["amplitude"] * p["frequency"] * math.cos(p["frequency"] * t)
        raise ValueError(f"unknown flow family {self.family!r}")

    def potential(self, t):
        """phi(t) = phi0 + n (lam(t) - lam(0)); keeps the measure fixed."""
        shift = self.base.dim_n * (self.log_factor(t) - self.log_factor(0.0))
        return self.base.potential + shift

    def measure_weights(self, t):
        """Weights e^{-phi(t)} sqrt(det g(t)) * cell; independent of t."""
        n = self.base.dim_n
        det_half = math.exp(n * self.log_factor(t))
        return np.exp(-self.potential(t)) * det_half * self.base.cell_volume

    def operator_scale(self, t):
        """L(t) = operator_scale(t) * L_base for space-constant factors."""
        return math.exp(-2.0 * self.log_factor(t))


@dataclass(frozen=True)
class FlowMarginReport:
    t: float
    m: float
    K: float
    min_eigenvalue_field: np.ndarray
    min_value: float
    tol: float
    ok: bool

    def __post_init__(self):
        self.min_eigenvalue_field.setflags(write=False)


def make_flow(base, family="static", params=None, horizon=1.0):
    """Build a :class:`FlowSpec` and verify measure invariance numerically."""
    if horizon <= 0.0:
        raise ValueError("flow horizon must be positive")
    params = dict(params or {})
    if family == "static":
        params = {}
    elif family == "constant_rate":
        params.setdefault("lambda0", 0.0)
        params.setdefault("rate", 0.0)
    elif family == "sinusoidal":
        params.setdefault("lambda0", 0.0)
        params.setdefault("amplitude", 0.0)
        params.setdefault("frequency", 1.0)
    else:
        raise ValueError(f"unknown flow family {family!r}")
    for key, val in params.items():
        if not math.isfinite(float(val)):
            raise ValueError(f"flow parameter {key} must be finite")
    flow = FlowSpec(base=base, family=family, params=params, horizon=float(horizon))
    w0 = flow.measure_weights(0.0)
    for t in np.linspace(0.0, horizon, 7):
        wt = flow.measure_weights(float(t))
        if np.abs(wt - w0).max() > 1e-14 * np.abs(w0).max():
            raise RuntimeError("measure invariance violated by flow construction")
    return flow


def _flow_manifold_at(flow, t):
    """Fixed-metric snapshot of the flow geometry at time t.

    Coordinates are unchanged; the metric scale enters only through the
    explicit conformal factors in the formulas below, so the snapshot
    manifold carries the flow potential and the t-invariant weights.
    """
    return WeightedManifold(
        model=flow.base.model,
        grid_sizes=flow.base.grid_sizes,
        circumferences=flow.base.circumferences,
        metric_factor=flow.base.metric_factor * math.exp(2.0 * flow.log_factor(t)),
        potential=flow.potential(t),
        measure_weights=flow.measure_weights(0.0),
        dim_n=flow.base.dim_n,
    )


def super_ricci_flow_margin(flow, m, K, t, tol=1e-10):
    """Smallest eigenvalue field of (1/2) dg/dt + Ric_mn + K g at time t.

    Eigenvalues are taken with respect to g(t); for space-constant
    conformal factors the endomorphism is lam'(t) + K + e^{-2 lam} times
    the base-tensor eigenvalue.
    """
    base_eigs = ricci_bakry_emery(_flow_manifold_at(flow, t), m).values
    field = flow.log_factor_rate(t) + K + flow.operator_scale(t) * base_eigs
    min_value = float(field.min())
    return FlowMarginReport(
        t=float(t),
        m=float(m),
        K=float(K),
        min_eigenvalue_field=field,
        min_value=min_value,
        tol=float(tol),
        ok=bool(min_value >= -tol),
    )


def fit_super_flow_constant(flow, m, t_samples=None):
    """Smallest K >= 0 for which the super-flow margin is nonnegative."""
    if t_samples is None:
        t_samples = np.linspace(0.0, flow.horizon, 33)
    worst = math.inf
    for t in t_samples:
        base_eigs = ricci_bakry_emery(_flow_manifold_at(flow, float(t)), m).values
        field = flow.log_factor_rate(float(t)) + flow.operator_scale(float(t)) * base_eigs
        worst = min(worst, float(field.min()))
    return max(0.0, -worst)


def evolve_heat_on_flow(
    flow,
    state,
    times,
    local_error=1e-8,
    dt_init=None,
    dt_max=0.25,
    manifest=None,
):
    """Heat flow of the time-dependent operator, adaptive as in the base flow.

    The operator is e^{-2 lam(t)} L_base; each implicit midpoint step
    evaluates the conformal factor at the step midpoint, retaining second
    order in time.
    """
    times = [float(t) for t in times]
    if times and times[-1] > flow.horizon + 1e-12:
        raise ValueError("snapshot beyond the flow horizon")
    manifold = flow.base

    def advance_fn(u, t, h):
        scale = flow.operator_scale(t + 0.5 * h)
        return _advance(manifold, u, h, "crank_nicolson", gamma_scale=scale)

    return _adaptive_evolve(
        manifold, state, times, advance_fn, local_error, dt_init, dt_max, manifest,
        label="flow evolve",
    )


def dt_log_on_flow(flow, state):
    """Lu/u for the time-dependent operator at the state's time."""
    manifold = _flow_manifold_at(flow, state.t)
    return flow.operator_scale(state.t) * witten_laplacian(manifold, state.u) / state.u


def w_entropy_on_flow(flow, state, m, K):
    """H_mK and W_mK along the flow; gradients taken in g(t)."""
    t = state.t
    manifold = flow.base
    u = state.u
    H = -integrate_mu(manifold, u * np.log(u))
    G = gradient(manifold, np.log(u))
    sq = np.einsum("a...,a...->...", G, G)
    dH = flow.operator_scale(t) * integrate_mu(manifold, sq * u)
    H_mK = H - phi_mK(t, m, K)
    W_mK = H_mK + t * (dH - phi_mK_prime(t, m, K))
    return {"H": H, "dH_dt": dH, "H_mK": H_mK, "W_mK": W_mK}


def w_decomposition_on_flow(flow, state, m, K):
    """Four-term dW/dt split with tensors evaluated in the flow metric.

    Identical to the fixed-metric decomposition except that the curvature
    quadratic uses (1/2) dg/dt + Ric_mn + K g.
    """
    manifold = flow.base
    n = manifold.dim_n
    if m < n - M_EQUALS_N_TOL:
        raise ValueError(f"need m >= n, got m={m}, n={n}")
    t = state.t
    if t <= 0.0:
        raise ValueError("state time must be positive")
    lam = flow.log_factor(t)
    lam_rate = flow.log_factor_rate(t)
    e2 = math.exp(-2.0 * lam)
    e4 = e2 * e2
    u = state.u
    logu = np.log(u)
    Hs = hessian(manifold, logu)
    G = gradient(manifold, logu)
    sq = np.einsum("a...,a...->...", G, G)
    c = 0.5 * K + 0.5 / t

    # |hess log u + c g(t)|^2 in g(t): components pick up c e^{2 lam} delta
    shift = c * math.exp(2.0 * lam)
    completed = Hs + shift * np.eye(n).reshape((n, n) + (1,) * n)
    T1 = -2.0 * t * e4 * integrate_mu(
        manifold, np.einsum("ab...,ab...->...", completed, completed) * u
    )

    manifold_t = _flow_manifold_at(flow, t)
    ric = bakry_emery_tensor(manifold_t, m if m - n > M_EQUALS_N_TOL else math.inf)
    quad = (
        e4 * np.einsum("ab...,a...,b...->...", ric, G, G)
        + (lam_rate + K) * e2 * sq
    )
    T2 = -2.0 * t * integrate_mu(manifold, quad * u)

    if m - n > M_EQUALS_N_TOL:
        grad_phi = gradient(manifold, manifold_t.potential)
        align = e2 * np.einsum("a...,a...->...", grad_phi, G) - (m - n) * (
            1.0 + K * t
        ) / (2.0 * t)
        T3 = -(2.0 * t / (m - n)) * integrate_mu(manifold, align * align * u)
    else:
        if np.ptp(manifold.potential) > 1e-13 * (1.0 + np.abs(manifold.potential).max()):
            raise ValueError("m == n requires a constant potential")
        T3 = 0.0

    T4 = monotonicity_bound(t, m, K)
    return WDecomposition(T1=float(T1), T2=float(T2), T3=float(T3), T4=float(T4))


def entropy_dissipation_on_flow(flow, snapshots):
    """First and second entropy derivatives along the flow, per snapshot.

    dH/dt = int |grad log u|^2_{g(t)} u dmu and
    d2H/dt2 = -2 int [ |hess log u|^2_{g(t)}
                       + ((1/2) dg/dt + Ric + hess phi)(grad log u, ...) ] u dmu.

    With three or more snapshots, each row also carries the residuals of
    these quadratures against temporal finite differences of H, which
    shrink at the scheme/spacing order.
    """
    manifold = flow.base
    rows = []
    H_values = []
    for s in snapshots:
        t = s.t
        e2 = flow.operator_scale(t)
        e4 = e2 * e2
        lam_rate = flow.log_factor_rate(t)
        u = s.u
        logu = np.log(u)
        G = gradient(manifold, logu)
        sq = np.einsum("a...,a...->...", G, G)
        Hs = hessian(manifold, logu)
        manifold_t = _flow_manifold_at(flow, t)
        ric_inf = bakry_emery_tensor(manifold_t, math.inf)
        dH = e2 * integrate_mu(manifold, sq * u)
        quad = (
            e4 * np.einsum("ab...,ab...->...", Hs, Hs)
            + e4 * np.einsum("ab...,a...,b...->...", ric_inf, G, G)
            + lam_rate * e2 * sq
        )
        d2H = -2.0 * integrate_mu(manifold, quad * u)
        H_values.append(-integrate_mu(manifold, u * np.log(u)))
        rows.append({"t": t, "dH_dt": dH, "d2H_dt2": d2H})
    if len(rows) >= 3:
        times = np.array([r["t"] for r in rows])
        H_arr = np.array(H_values)
        fd1 = np.gradient(H_arr, times)
        fd2 = np.full_like(H_arr, np.nan)
        h1 = times[1:-1] - times[:-2]
        h2 = times[2:] - times[1:-1]
        fd2[1:-1] = 2.0 * (
            h1 * H_arr[2:] - (h1 + h2) * H_arr[1:-1] + h2 * H_arr[:-2]
        ) / (h1 * h2 * (h1 + h2))
        for i, r in enumerate(rows):
            r["residual_dH"] = r["dH_dt"] - fd1[i]
            r["residual_d2H"] = r["d2H_dt2"] - fd2[i]
    return rows
