"""Mirror-descent steps on the probability simplex.

Two regularizers are supported: a pure log-barrier and a hybrid that adds
a scaled negative-entropy term. Both make the constrained step

    argmin_{x in simplex} <x, loss> + D(x, anchor)

solvable by a one-dimensional search over the simplex multiplier, since
the coordinate map of the regularizer gradient is invertible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverError

_MAX_OUTER_ITER = 200
_MAX_INNER_ITER = 100
_SIMPLEX_SUM_TOL = 1e-9


class RegularizerKind(enum.Enum):
    LOG_BARRIER = "log-barrier"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Regularizer:
    """A barrier regularizer on the open simplex with learning rate eta.

    The log-barrier is (1/eta) * sum_i ln(1/x_i). The hybrid adds
    (K/eta) * sum_i x_i ln x_i on top, where K = num_arms.
    """

    kind: RegularizerKind
    eta: float
    num_arms: int

    def __post_init__(self):
        if not (self.eta > 0.0 and np.isfinite(self.eta)):
            raise DomainError(f"eta must be positive and finite, got {self.eta}")
        if self.num_arms < 1:
            raise DomainError(f"num_arms must be at least 1, got {self.num_arms}")

    def value(self, x) -> float:
        x = _interior_point(x, self.num_arms)
        total = -np.sum(np.log(x)) / self.eta
        if self.kind is RegularizerKind.HYBRID:
            total += (self.num_arms / self.eta) * float(np.sum(x * np.log(x)))
        return float(total)

    def grad(self, x) -> np.ndarray:
        x = _interior_point(x, self.num_arms)
        g = -1.0 / (self.eta * x)
        if self.kind is RegularizerKind.HYBRID:
            g = g + (self.num_arms / self.eta) * (np.log(x) + 1.0)
        return g


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics for one constrained step."""

    iterations: int
    kkt_residual: float
    multiplier: float


def _interior_point(x, expected_len) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != expected_len:
        raise DomainError(f"expected a vector of length {expected_len}, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("point must have strictly positive finite coordinates")
    return x


def check_simplex(x, num_arms: int) -> np.ndarray:
    """Validate a strictly interior simplex point and return it as an array."""
    x = _interior_point(x, num_arms)
    if abs(float(np.sum(x)) - 1.0) > _SIMPLEX_SUM_TOL:
        raise DomainError(f"coordinates sum to {np.sum(x)!r}, not 1")
    return x


def bregman_divergence(reg: Regularizer, x, y) -> float:
    """D(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>."""
    x = _interior_point(x, reg.num_arms)
    y = _interior_point(y, reg.num_arms)
    return reg.value(x) - reg.value(y) - float(reg.grad(y) @ (x - y))


def _raw_hybrid(v: np.ndarray, k: int) -> np.ndarray:
    # eta * grad of the hybrid regularizer, coordinate-wise
    return -1.0 / v + k * (np.log(v) + 1.0)


def _raw_hybrid_inverse(theta: np.ndarray, k: int) -> np.ndarray:
    """Solve -1/v + K ln v + K = theta coordinate-wise for v > 0.

    Newton in u = ln v. The map is increasing and concave in u, so every
    Newton step from a point left of the root stays left of it and the
    iteration is monotone. Both initial guesses below start on that side.
    """
    theta = np.asarray(theta, dtype=float)
    u = np.where(
        theta >= k - 1.0,
        (theta - k) / k,
        -np.log(np.maximum(k - theta, 1.0)),
    )
    tol = 1e-12 * np.maximum(1.0, np.abs(theta))
    active = np.ones(theta.shape, dtype=bool)
    for _ in range(_MAX_INNER_ITER):
        e = np.exp(-u[active])
        f = -e + k * u[active] + k - theta[active]
        done = np.abs(f) <= tol[active]
        u[active] = u[active] - f / (e + k)
        still = np.zeros_like(active)
        still[active] = ~done
        active = still
        if not active.any():
            break
    else:
        raise SolverError("coordinate gradient inversion did not converge")
    return np.exp(u)


def grad_inverse_coordinate(reg: Regularizer, target: float) -> float:
    """Invert one coordinate of the regularizer gradient map."""
    target = float(target)
    if not np.isfinite(target):
        raise DomainError("target must be finite")
    if reg.kind is RegularizerKind.LOG_BARRIER:
        if target >= 0.0:
            raise DomainError("the log-barrier coordinate gradient is always negative")
        return -1.0 / (reg.eta * target)
    theta = np.array([reg.eta * target])
    return float(_raw_hybrid_inverse(theta, reg.num_arms)[0])


def _solve_log_barrier(tau: np.ndarray, eta: float, tol: float):
    # coordinates are x_i(mu) = 1 / (eta * (mu - tau_i)), defined for mu > max tau
    pole = float(np.max(tau))
    k = tau.shape[0]

    def evaluate(mu):
        x = 1.0 / (eta * (mu - tau))
        f = float(np.sum(x)) - 1.0
        fp = -eta * float(np.sum(x * x))
        return x, f, fp

    lo = pole + 1.0 / (eta * k)
    hi = pole + k / eta
    for _ in range(60):
        if evaluate(lo)[1] > 0.0:
            break
        lo = pole + 0.25 * (lo - pole)
    for _ in range(60):
        if evaluate(hi)[1] < 0.0:
            break
        hi = pole + 2.0 * (hi - pole)
    return _newton_bisect(evaluate, lo, hi, tol)


def _solve_hybrid(tau: np.ndarray, eta: float, k: int, tol: float):
    tau_max = float(np.max(tau))

    def evaluate(mu):
        v = _raw_hybrid_inverse(eta * (tau - mu), k)
        f = float(np.sum(v)) - 1.0
        fp = -eta * float(np.sum(v * v / (1.0 + k * v)))
        return v, f, fp

    lo = tau_max - (k - 1.0) / eta
    hi = tau_max + k * (1.0 + np.log(2.0 * k)) / eta
    span = max(1.0, hi - lo)
    for _ in range(60):
        if evaluate(lo)[1] > 0.0:
            break
        lo -= span
        span *= 2.0
    span = max(1.0, hi - lo)
    for _ in range(60):
        if evaluate(hi)[1] < 0.0:
            break
        hi += span
        span *= 2.0
    return _newton_bisect(evaluate, lo, hi, tol)


def _newton_bisect(evaluate, lo, hi, tol):
    """Root-find on a strictly decreasing f with a valid [lo, hi] bracket."""
    mu = 0.5 * (lo + hi)
    for iteration in range(1, _MAX_OUTER_ITER + 1):
        x, f, fp = evaluate(mu)
        if abs(f) <= tol:
            return x, mu, iteration
        if f > 0.0:
            lo = mu
        else:
            hi = mu
        if fp < 0.0:
            candidate = mu - f / fp
            mu = candidate if lo < candidate < hi else 0.5 * (lo + hi)
        else:
            mu = 0.5 * (lo + hi)
    raise SolverError(
        f"simplex step stalled at residual {abs(f):.3e}",
        report=SolveReport(iterations=_MAX_OUTER_ITER, kkt_residual=abs(f), multiplier=mu),
    )


def omd_simplex_step(reg: Regularizer, anchor, loss, tol: float = 1e-10):
    """One mirror-descent step from anchor against a loss vector.

    Returns (x, report) where x is strictly interior and sums to one
    within tol, and report carries the iteration count, the KKT residual,
    and the simplex multiplier.
    """
    anchor = check_simplex(anchor, reg.num_arms)
    loss = np.asarray(loss, dtype=float)
    if loss.shape != anchor.shape:
        raise DomainError(f"loss shape {loss.shape} does not match anchor {anchor.shape}")
    if not np.all(np.isfinite(loss)):
        raise DomainError("loss must be finite")

    # a constant loss vector is absorbed entirely by the simplex multiplier
    if reg.num_arms == 1 or np.all(loss == loss[0]):
        return anchor.copy(), SolveReport(0, 0.0, -float(loss[0]))

    tau = reg.grad(anchor) - loss
    if reg.kind is RegularizerKind.LOG_BARRIER:
        x, mu, iters = _solve_log_barrier(tau, reg.eta, tol)
    else:
        x, mu, iters = _solve_hybrid(tau, reg.eta, reg.num_arms, tol)

    sum_residual = abs(float(np.sum(x)) - 1.0)
    shifted = tau - mu
    stationarity = float(
        np.max(np.abs(reg.grad(x) - shifted) / np.maximum(1.0, np.abs(shifted)))
    )
    report = SolveReport(iters, max(sum_residual, stationarity), mu)
    return x, report
