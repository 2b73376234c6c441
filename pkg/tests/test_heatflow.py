"""Heat flow: kernels, conservation, positivity, convergence order."""

import math

import numpy as np
import pytest

from wittenlab import (
    PositivityError,
    dt_log_u,
    evolve,
    initial_delta,
    kernel_state,
    make_state,
    step,
    uniform_state,
)
from wittenlab.heatflow import grad_log_u
from wittenlab.kernels import eigen_sum_circle, wrapped_gaussian
from wittenlab.operators import witten_laplacian


def mode_state(M, t, amplitude=0.9, k=1):
    """(1 + a e^{-k^2 t} cos(k x)) / mu: exact single-mode decay solution.

    Amplitude below 1 keeps the state strictly positive on the grid.
    """
    x = M.axis_coordinates(0)
    u = (1.0 + amplitude * math.exp(-(k**2) * t) * np.cos(k * x)) / M.mu_total
    return make_state(M, u, t)


def test_wrapped_gaussian_matches_eigen_sum():
    theta = np.linspace(-np.pi, np.pi, 37)
    for t in (0.01, 0.1, 1.0):
        a = wrapped_gaussian(theta, t, 2 * np.pi)
        b = eigen_sum_circle(theta, t, 2 * np.pi)
        assert np.abs(a - b).max() < 1e-12


def test_initial_delta_on_diagonal_value(circle_flat):
    s = initial_delta(circle_flat, 0, t0=0.01)
    assert s.u[0] == pytest.approx((4 * np.pi * 0.01) ** -0.5, abs=1e-12)
    assert s.mass == pytest.approx(1.0, abs=1e-13)


def test_initial_delta_torus_separates(torus_flat):
    s = initial_delta(torus_flat, (0, 0), t0=0.02)
    x = torus_flat.axis_coordinates(0)
    k1 = wrapped_gaussian(x, 0.02, 2 * np.pi)
    product = np.outer(k1, k1)
    assert np.abs(s.u - product).max() < 1e-12


def test_initial_delta_default_t0_and_mass(circle_cos):
    s = initial_delta(circle_cos, 5)
    assert s.t == pytest.approx(max(circle_cos.spacings) ** 2)
    assert s.mass == pytest.approx(1.0, abs=1e-12)
    assert s.u.min() > 0.0


def test_initial_delta_rejects_bad_t0(circle_flat):
    with pytest.raises(ValueError):
        initial_delta(circle_flat, 0, t0=-0.1)


def test_kernel_symmetry(circle_flat):
    s = initial_delta(circle_flat, 64, t0=0.01)
    u = np.roll(s.u, -64)  # center the source at index 0
    assert np.abs(u[1:] - u[:0:-1]).max() < 1e-12


def test_uniform_state_is_stationary(circle_cos):
    s = uniform_state(circle_cos, t=0.3)
    out = step(circle_cos, s, 0.05)
    assert np.abs(out.u - s.u).max() < 1e-13


def test_step_conserves_mass(circle_cos):
    s = initial_delta(circle_cos, 0, t0=0.05)
    out = step(circle_cos, s, 0.01)
    assert out.mass == pytest.approx(s.mass, abs=1e-12)
    assert out.t == pytest.approx(0.06)


def test_single_mode_decay_against_oracle(circle_flat):
    T = 0.5
    s = mode_state(circle_flat, 0.0)
    n_steps = 100
    for _ in range(n_steps):
        s = step(circle_flat, s, T / n_steps)
    exact = mode_state(circle_flat, T)
    assert np.abs(s.u - exact.u).max() < 5e-7


def test_scheme_second_order(circle_flat):
    # halving dt shrinks the error against the exact mode decay about 4x
    T = 0.4

    def error(n_steps):
        s = mode_state(circle_flat, 0.0)
        for _ in range(n_steps):
            s = step(circle_flat, s, T / n_steps)
        return np.abs(s.u - mode_state(circle_flat, T).u).max()

    ratio = error(20) / error(40)
    assert 3.6 < ratio < 4.4


def test_implicit_euler_first_order(circle_flat):
    T = 0.4

    def error(n_steps):
        s = mode_state(circle_flat, 0.0)
        for _ in range(n_steps):
            s = step(circle_flat, s, T / n_steps, scheme="implicit_euler")
        return np.abs(s.u - mode_state(circle_flat, T).u).max()

    ratio = error(20) / error(40)
    assert 1.7 < ratio < 2.3


def test_evolve_hits_targets_and_matches_oracle(circle_flat):
    s0 = mode_state(circle_flat, 0.0)
    snaps = evolve(circle_flat, s0, [0.25, 0.5, 1.0], local_error=1e-9)
    for s in snaps:
        exact = mode_state(circle_flat, s.t)
        assert np.abs(s.u - exact.u).max() < 1e-6
        assert s.mass == pytest.approx(1.0, abs=1e-11)


def test_evolve_manifest_records_steps(circle_flat):
    s0 = mode_state(circle_flat, 0.0)
    manifest = []
    evolve(circle_flat, s0, [0.2], manifest=manifest)
    assert manifest and all(r["dt"] > 0 for r in manifest)
    assert manifest[-1]["t"] == pytest.approx(0.2)


def test_evolve_rejects_bad_times(circle_flat):
    s0 = mode_state(circle_flat, 0.5)
    with pytest.raises(ValueError):
        evolve(circle_flat, s0, [0.4])
    with pytest.raises(ValueError):
        evolve(circle_flat, s0, [0.6, 0.6])


def test_equilibration_to_uniform(circle_flat):
    s0 = mode_state(circle_flat, 0.0)
    (final,) = evolve(circle_flat, s0, [20.0], local_error=1e-9, dt_max=0.5)
    assert np.abs(final.u - 1.0 / circle_flat.mu_total).max() < 1e-8


def test_monotone_equilibration_with_potential(circle_cos):
    s = initial_delta(circle_cos, 0, t0=0.05)
    snaps = evolve(circle_cos, s, [0.2, 0.8, 2.0, 6.0])
    uniform = 1.0 / circle_cos.mu_total
    sup_dist = [np.abs(s.u - uniform).max() for s in snaps]
    assert all(b < a for a, b in zip(sup_dist, sup_dist[1:]))


def test_decay_rate_matches_spectral_gap(circle_cos):
    # the slowest transient decays like the smallest nonzero eigenvalue of -L
    M = circle_cos
    n = M.shape[0]
    dense = np.empty((n, n))
    basis = np.eye(n)
    for j in range(n):
        dense[:, j] = witten_laplacian(M, basis[:, j])
    sym = np.diag(np.exp(-M.potential / 2)) @ dense @ np.diag(np.exp(M.potential / 2))
    eigs = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    # skip the null modes (constants, plus the sawtooth the spectral first
    # derivative cannot see) to find the spectral gap
    lam1 = -eigs[eigs < -1e-8].max()
    s = initial_delta(M, 0, t0=0.05)
    t_grid = [3.0, 4.0, 5.0]
    snaps = evolve(M, s, t_grid, local_error=1e-10)
    uniform = 1.0 / M.mu_total
    sup = np.array([np.abs(s.u - uniform).max() for s in snaps])
    slope = (np.log(sup[0]) - np.log(sup[-1])) / (t_grid[-1] - t_grid[0])
    assert slope == pytest.approx(lam1, rel=2e-2)


def test_dt_log_u_stationary(circle_cos):
    s = uniform_state(circle_cos, t=1.0)
    assert np.abs(dt_log_u(circle_cos, s)).max() < 1e-10


def test_dt_log_u_mode_closed_form(circle_flat):
    t, a = 0.7, 0.9
    s = mode_state(circle_flat, t, amplitude=a)
    x = circle_flat.axis_coordinates(0)
    decayed = a * math.exp(-t) * np.cos(x)
    expected = -decayed / (1.0 + decayed)
    assert np.abs(dt_log_u(circle_flat, s) - expected).max() < 1e-10


def test_dt_log_u_matches_finite_differences(circle_cos):
    s = initial_delta(circle_cos, 0, t0=0.1)
    d = 1e-3
    snaps = evolve(circle_cos, s, [0.3 - d, 0.3, 0.3 + d], local_error=1e-11)
    fd = (np.log(snaps[2].u) - np.log(snaps[0].u)) / (2 * d)
    rate = dt_log_u(circle_cos, snaps[1])
    # the gap is second order in the finite-difference spacing
    assert np.abs(rate - fd).max() < 2e-4


def test_dt_log_u_kernel_on_diagonal_small_t(circle_flat):
    s = kernel_state(circle_flat, (0,), 1e-3)
    rate = dt_log_u(circle_flat, s)
    assert rate[0] == pytest.approx(-0.5 / 1e-3, rel=1e-10)


def test_grad_log_analytic_matches_spectral_at_moderate_t(circle_flat):
    s = kernel_state(circle_flat, (0,), 0.25)
    g_analytic = grad_log_u(circle_flat, s)
    g_spectral = np.stack([np.real(np.fft.ifft(
        1j * np.where(np.abs(np.fft.fftfreq(256, 1 / 256)) == 128, 0,
                      np.fft.fftfreq(256, 1 / 256)) * np.fft.fft(s.u)))]) / s.u
    mask = s.u > 1e-8
    assert np.abs((g_analytic[0] - g_spectral[0])[mask]).max() < 1e-6


def test_positivity_guard_raises_on_gross_negativity(circle_flat):
    x = circle_flat.axis_coordinates(0)
    with pytest.raises(PositivityError):
        make_state(circle_flat, np.cos(x), 0.1)


def test_oversized_step_reports_positivity_violation(circle_flat):
    # implicit midpoint overshoots on a sharply peaked state with a huge dt
    s = initial_delta(circle_flat, 0, t0=2e-3)
    with pytest.raises(PositivityError) as err:
        step(circle_flat, s, 5.0)
    assert err.value.node is not None


def test_solver_convergence_error(circle_cos, monkeypatch):
    from wittenlab import heatflow as hf

    s = initial_delta(circle_cos, 0, t0=0.05)
    monkeypatch.setattr(hf, "CG_MAXITER", 1)
    with pytest.raises(hf.SolverConvergenceError):
        step(circle_cos, s, 0.1)


def test_kernel_state_rejects_nonconstant_potential(circle_cos):
    with pytest.raises(ValueError, match="constant"):
        kernel_state(circle_cos, (0,), 0.01)


def test_evolved_kernel_keeps_symmetry(circle_flat):
    s = initial_delta(circle_flat, 64, t0=0.01)
    (out,) = evolve(circle_flat, s, [0.2])
    u = np.roll(out.u, -64)
    assert np.abs(u[1:] - u[:0:-1]).max() < 1e-12


def test_kernel_mass_drift_over_long_run(circle_flat):
    s = initial_delta(circle_flat, 0, t0=1e-3)
    snaps = evolve(circle_flat, s, [0.01, 0.1, 0.5, 1.0, 2.0])
    for out in snaps:
        assert abs(out.mass - 1.0) <= 1e-10
        assert out.u.min() > 0.0
