"""Tests for the simplex mirror-descent core.

The oracles here are deliberately independent of the implementation:
direct formula evaluation, dense grid search over the 1-simplex, and
forward re-substitution of returned solutions.
"""

import numpy as np
import pytest

from pathbandits.errors import DomainError, SolverError
from pathbandits.omd import (
    RegularizerKind,
    Regularizer,
    bregman_divergence,
    grad_inverse_coordinate,
    omd_simplex_step,
)


# ---------------------------------------------------------------------------
# independent oracle helpers


def psi_direct(reg, x):
    x = np.asarray(x, dtype=float)
    total = np.sum(np.log(1.0 / x)) / reg.eta
    if reg.kind is RegularizerKind.HYBRID:
        total += (reg.num_arms / reg.eta) * np.sum(x * np.log(x))
    return total


def grad_direct(reg, x):
    x = np.asarray(x, dtype=float)
    g = -1.0 / (reg.eta * x)
    if reg.kind is RegularizerKind.HYBRID:
        g = g + (reg.num_arms / reg.eta) * (np.log(x) + 1.0)
    return g


def bregman_direct(reg, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return psi_direct(reg, x) - psi_direct(reg, y) - grad_direct(reg, y) @ (x - y)


def grid_minimize_k2(reg, anchor, loss, resolution=1e-6):
    """Brute-force minimizer of <x, loss> + D(x, anchor) on the 2-simplex."""
    p = np.arange(resolution, 1.0, resolution)
    q = 1.0 - p
    # objective evaluated directly from the formulas, vectorized over the grid
    psi = (np.log(1.0 / p) + np.log(1.0 / q)) / reg.eta
    if reg.kind is RegularizerKind.HYBRID:
        psi += (reg.num_arms / reg.eta) * (p * np.log(p) + q * np.log(q))
    ga = grad_direct(reg, anchor)
    lin = p * (loss[0] - ga[0]) + q * (loss[1] - ga[1])
    obj = lin + psi
    k = int(np.argmin(obj))
    return np.array([p[k], q[k]])


def random_simplex(rng, k):
    v = rng.dirichlet(np.ones(k))
    # keep coordinates visible to the oracles
    return 0.9 * v + 0.1 / k


# ---------------------------------------------------------------------------
# regularizer values and Bregman divergences


def test_log_barrier_value_matches_formula():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.25, num_arms=3)
    x = np.array([0.2, 0.3, 0.5])
    assert reg.value(x) == pytest.approx(psi_direct(reg, x), rel=1e-14)
    assert np.allclose(reg.grad(x), grad_direct(reg, x), rtol=1e-14)


def test_hybrid_value_matches_formula():
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.01, num_arms=4)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    assert reg.value(x) == pytest.approx(psi_direct(reg, x), rel=1e-14)
    assert np.allclose(reg.grad(x), grad_direct(reg, x), rtol=1e-14)


def test_bregman_zero_at_equal_points():
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.02, num_arms=3)
    x = np.array([0.5, 0.25, 0.25])
    assert abs(bregman_divergence(reg, x, x)) < 1e-12


def test_bregman_log_barrier_frozen_value():
    # D((0.9, 0.1), (0.1, 0.9)) at eta = 1 is exactly 64/9 by hand:
    # ln(1/.9)+ln(1/.1) - ln(1/.1)-ln(1/.9) = 0, and the gradient term is
    # -(-10*0.8 + -10/9*(-0.8)) = 8 - 8/9.
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=1.0, num_arms=2)
    d = bregman_divergence(reg, [0.9, 0.1], [0.1, 0.9])
    assert d == pytest.approx(64.0 / 9.0, rel=1e-12)


def test_bregman_hybrid_frozen_value():
    # value frozen from a high-precision evaluation of the defining formula
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.005, num_arms=2)
    d = bregman_divergence(reg, [0.6, 0.4], [0.5, 0.5])
    assert d == pytest.approx(16.218604324326574, rel=1e-12)


def test_bregman_positive_off_diagonal():
    rng = np.random.default_rng(7)
    for kind in RegularizerKind:
        reg = Regularizer(kind, eta=0.05, num_arms=4)
        for _ in range(25):
            x = random_simplex(rng, 4)
            y = random_simplex(rng, 4)
            if np.allclose(x, y):
                continue
            assert bregman_divergence(reg, x, y) > 0.0


def test_bregman_rejects_nonpositive_coordinates():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=2)
    with pytest.raises(DomainError):
        bregman_divergence(reg, [1.0, 0.0], [0.5, 0.5])
    with pytest.raises(DomainError):
        bregman_divergence(reg, [0.5, 0.5], [-0.1, 1.1])


def test_regularizer_rejects_bad_params():
    with pytest.raises(DomainError):
        Regularizer(RegularizerKind.LOG_BARRIER, eta=0.0, num_arms=2)
    with pytest.raises(DomainError):
        Regularizer(RegularizerKind.HYBRID, eta=0.1, num_arms=0)


# ---------------------------------------------------------------------------
# coordinate gradient inversion


def test_grad_inverse_log_barrier_closed_form():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=1.0, num_arms=2)
    assert grad_inverse_coordinate(reg, -2.0) == pytest.approx(0.5, rel=1e-14)
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.25, num_arms=2)
    assert grad_inverse_coordinate(reg, -8.0) == pytest.approx(0.5, rel=1e-14)


def test_grad_inverse_log_barrier_rejects_nonnegative_target():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=1.0, num_arms=2)
    with pytest.raises(DomainError):
        grad_inverse_coordinate(reg, 0.0)
    with pytest.raises(DomainError):
        grad_inverse_coordinate(reg, 3.0)


def test_grad_inverse_hybrid_forward_oracle():
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.01, num_arms=4)

    def g_scalar(v):
        return (-1.0 / v + reg.num_arms * (np.log(v) + 1.0)) / reg.eta

    targets = np.concatenate(
        [
            -np.logspace(-3, 5, 40),
            np.logspace(-3, 4, 40),
            [0.0, g_scalar(1e-9), g_scalar(50.0)],
        ]
    )
    for t in targets:
        v = grad_inverse_coordinate(reg, float(t))
        assert v > 0.0
        assert abs(g_scalar(v) - t) <= 1e-10 * max(1.0, abs(t))


def test_grad_inverse_hybrid_round_trips_grad():
    rng = np.random.default_rng(3)
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.2, num_arms=6)
    for _ in range(30):
        v = float(10.0 ** rng.uniform(-8, 2))
        t = grad_direct(reg, np.array([v]))[0]
        back = grad_inverse_coordinate(reg, t)
        assert back == pytest.approx(v, rel=1e-9)


# ---------------------------------------------------------------------------
# the constrained step itself


def test_step_zero_loss_returns_anchor():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=3)
    anchor = np.array([0.2, 0.5, 0.3])
    x, report = omd_simplex_step(reg, anchor, np.zeros(3))
    assert np.array_equal(x, anchor)
    assert report.kkt_residual == 0.0


def test_step_constant_loss_returns_anchor():
    # a constant vector is absorbed by the simplex multiplier
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.02, num_arms=4)
    anchor = np.array([0.1, 0.4, 0.2, 0.3])
    x, report = omd_simplex_step(reg, anchor, np.full(4, 3.7))
    assert np.array_equal(x, anchor)
    assert report.multiplier == pytest.approx(-3.7)


def test_step_matches_grid_oracle_spec_instance():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=2)
    anchor = np.array([0.5, 0.5])
    loss = np.array([1.0, 0.0])
    x, _ = omd_simplex_step(reg, anchor, loss)
    xg = grid_minimize_k2(reg, anchor, loss)
    assert np.max(np.abs(x - xg)) < 1e-4
    assert x[0] < x[1]  # mass moves away from the lossy arm


@pytest.mark.parametrize("kind", list(RegularizerKind))
def test_step_matches_grid_oracle_random(kind):
    rng = np.random.default_rng(11 if kind is RegularizerKind.LOG_BARRIER else 13)
    for _ in range(8):
        eta = float(10.0 ** rng.uniform(-2.3, -0.3))
        reg = Regularizer(kind, eta=eta, num_arms=2)
        anchor = random_simplex(rng, 2)
        loss = rng.uniform(-2.0, 2.0, size=2)
        x, report = omd_simplex_step(reg, anchor, loss)
        xg = grid_minimize_k2(reg, anchor, loss)
        assert np.max(np.abs(x - xg)) < 1e-4
        assert report.kkt_residual <= 1e-8


def test_step_log_barrier_stationarity_closed_form():
    # the returned point must satisfy x_i = 1 / (1/a_i + eta*(g_i + mu))
    rng = np.random.default_rng(5)
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=1.0 / 162.0, num_arms=5)
    for _ in range(20):
        anchor = random_simplex(rng, 5)
        loss = rng.uniform(-1.0, 30.0, size=5)
        x, report = omd_simplex_step(reg, anchor, loss)
        mu = report.multiplier
        recon = 1.0 / (1.0 / anchor + reg.eta * (loss + mu))
        assert np.max(np.abs(x - recon)) < 1e-8
        assert abs(np.sum(x) - 1.0) <= 1e-10


@pytest.mark.parametrize("k", [2, 3, 5])
def test_step_beats_random_simplex_points(k):
    # duality-gap style check: no sampled feasible point does better
    rng = np.random.default_rng(100 + k)
    for _ in range(34):
        kind = RegularizerKind.LOG_BARRIER if rng.random() < 0.5 else RegularizerKind.HYBRID
        reg = Regularizer(kind, eta=float(10.0 ** rng.uniform(-2.5, -0.5)), num_arms=k)
        anchor = random_simplex(rng, k)
        loss = rng.uniform(-2.0, 2.0, size=k)
        x, _ = omd_simplex_step(reg, anchor, loss)

        def objective(pts):
            vals = pts @ loss
            for row in range(pts.shape[0]):
                vals[row] += bregman_direct(reg, pts[row], anchor)
            return vals

        candidates = rng.dirichlet(np.ones(k), size=1000)
        candidates = np.clip(candidates, 1e-12, None)
        candidates /= candidates.sum(axis=1, keepdims=True)
        best_rand = float(np.min(objective(candidates)))
        ours = float(objective(x[None, :])[0])
        assert ours <= best_rand + 1e-12 * max(1.0, abs(best_rand))


def test_step_permutation_equivariance():
    rng = np.random.default_rng(21)
    reg = Regularizer(RegularizerKind.HYBRID, eta=0.05, num_arms=4)
    anchor = random_simplex(rng, 4)
    loss = rng.uniform(0.0, 3.0, size=4)
    perm = np.array([2, 0, 3, 1])
    x, _ = omd_simplex_step(reg, anchor, loss)
    xp, _ = omd_simplex_step(reg, anchor[perm], loss[perm])
    assert np.allclose(xp, x[perm], rtol=1e-9, atol=1e-12)


def test_step_interior_for_extreme_losses():
    for kind in RegularizerKind:
        reg = Regularizer(kind, eta=1.0 / 162.0, num_arms=4)
        anchor = np.full(4, 0.25)
        loss = np.array([1e8, 0.0, -3.0, 2.0])
        x, _ = omd_simplex_step(reg, anchor, loss)
        assert np.all(x > 0.0)
        assert np.all(x < 1.0)
        assert abs(x.sum() - 1.0) <= 1e-10


def test_step_single_arm():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=1)
    x, report = omd_simplex_step(reg, np.array([1.0]), np.array([0.4]))
    assert np.array_equal(x, np.array([1.0]))
    assert report.multiplier == pytest.approx(-0.4)


def test_step_rejects_bad_anchor():
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=3)
    with pytest.raises(DomainError):
        omd_simplex_step(reg, np.array([0.5, 0.5, 0.5]), np.zeros(3))
    with pytest.raises(DomainError):
        omd_simplex_step(reg, np.array([1.0, 0.0, 0.0]), np.zeros(3))
    with pytest.raises(DomainError):
        omd_simplex_step(reg, np.array([0.5, 0.5]), np.zeros(3))


def test_step_solver_error_carries_report(monkeypatch):
    import pathbandits.omd as omd_mod

    monkeypatch.setattr(omd_mod, "_MAX_OUTER_ITER", 1)
    reg = Regularizer(RegularizerKind.LOG_BARRIER, eta=0.1, num_arms=3)
    with pytest.raises(SolverError) as info:
        omd_simplex_step(reg, np.array([0.2, 0.3, 0.5]), np.array([1.0, 0.0, 0.5]))
    assert info.value.report is not None
    assert info.value.report.iterations == 1
