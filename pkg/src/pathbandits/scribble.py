"""Linear bandit learning on the unit 2-ball.

The sampling scheme plays endpoints of the Dikin ellipsoid of the ball
barrier -ln(1 - ||x||^2), whose Hessian has one radial eigenvalue and a
(d-1)-fold tangential one, both in closed form. The mirror-descent step
against this barrier reduces to a scalar radial equation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleSliceError, SolverError, StabilityError

_CONTAINMENT_SLACK = 1e-9


class PredictionKind(enum.Enum):
    GRADIENT = "gradient"
    CHASE = "chase"
    FROZEN = "frozen"


class BallBarrier:
    """Self-concordant barrier -ln(1 - ||x||^2) on the open unit ball."""

    nu = 1.0

    def __init__(self, dimension: int):
        if dimension < 1:
            raise DomainError(f"dimension must be at least 1, got {dimension}")
        self.dimension = dimension

    def _interior(self, x) -> tuple[np.ndarray, float]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DomainError(f"expected a vector of length {self.dimension}")
        s2 = float(x @ x)
        if not np.all(np.isfinite(x)) or s2 >= 1.0:
            raise DomainError("point must lie strictly inside the unit ball")
        return x, s2

    def value(self, x) -> float:
        _, s2 = self._interior(x)
        return -math.log1p(-s2)

    def grad(self, x) -> np.ndarray:
        x, s2 = self._interior(x)
        return 2.0 * x / (1.0 - s2)

    def hessian(self, x) -> np.ndarray:
        x, s2 = self._interior(x)
        gap = 1.0 - s2
        return 2.0 / gap * np.eye(self.dimension) + 4.0 / gap**2 * np.outer(x, x)

    def eigen_structure(self, x):
        """Eigenvalues and an orthonormal eigenbasis of the Hessian.

        The first column is the radial direction; the rest complete it
        against coordinate vectors, dropping the coordinate most aligned
        with the radial axis before orthonormalizing.
        """
        x, s2 = self._interior(x)
        d = self.dimension
        gap = 1.0 - s2
        if s2 < 1e-24:
            return np.full(d, 2.0), np.eye(d)
        radial = x / math.sqrt(s2)
        drop = int(np.argmax(np.abs(x)))
        frame = np.empty((d, d))
        frame[:, 0] = radial
        cols = [i for i in range(d) if i != drop]
        frame[:, 1:] = np.eye(d)[:, cols]
        q, _ = np.linalg.qr(frame)
        if float(q[:, 0] @ radial) < 0.0:
            q[:, 0] = -q[:, 0]
        lams = np.full(d, 2.0 / gap)
        lams[0] = (2.0 + 2.0 * s2) / gap**2
        return lams, q


@dataclass(frozen=True)
class DikinSample:
    """One sampled action: an endpoint of a Dikin ellipsoid axis."""

    point: np.ndarray
    axis: int
    sign: float
    eigenvalue: float
    direction: np.ndarray


def dikin_sample(barrier: BallBarrier, x, rng: np.random.Generator) -> DikinSample:
    """Draw one of the 2d Dikin ellipsoid axis endpoints uniformly."""
    lams, vecs = barrier.eigen_structure(x)
    i = int(rng.integers(barrier.dimension))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    w = np.asarray(x, dtype=float) + (sign / math.sqrt(lams[i])) * vecs[:, i]
    n2 = float(w @ w)
    if n2 > 1.0:
        if n2 > 1.0 + _CONTAINMENT_SLACK:
            raise StabilityError(f"sampled action left the ball, |w|^2 = {n2!r}")
        w /= math.sqrt(n2)
        while float(w @ w) > 1.0:
            w *= 1.0 - 4e-16
    if n2 == 0.0:
        raise StabilityError("sampled action collapsed to the origin")
    return DikinSample(point=w, axis=i, sign=sign, eigenvalue=float(lams[i]), direction=vecs[:, i])


def linear_estimator(cost: float, sample: DikinSample, baseline) -> np.ndarray:
    """Unbiased loss-vector estimate from a single observed cost.

    Averaged over the 2d equally likely samples at the same iterate, the
    estimate equals the true loss vector exactly.
    """
    baseline = np.asarray(baseline, dtype=float)
    cost = float(cost)
    if not math.isfinite(cost):
        raise DomainError("cost must be finite")
    d = baseline.shape[0]
    innovation = cost - float(sample.point @ baseline)
    if innovation == 0.0:
        return baseline.copy()
    scale = d * innovation * sample.sign * math.sqrt(sample.eigenvalue)
    return baseline + scale * sample.direction


def _newton_inverse_gradient(barrier: BallBarrier, target, x0) -> np.ndarray:
    """Generic damped-Newton solve of grad(x) = target, for cross-checks
    and barriers without a radial shortcut."""
    target = np.asarray(target, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    scale = max(1.0, float(np.linalg.norm(target)))
    for _ in range(100):
        residual = barrier.grad(x) - target
        if float(np.linalg.norm(residual)) <= 1e-12 * scale:
            return x
        step = np.linalg.solve(barrier.hessian(x), -residual)
        t = 1.0
        for _ in range(60):
            trial = x + t * step
            if float(trial @ trial) < 1.0:
                break
            t *= 0.5
        x = x + t * step
    raise SolverError("Newton inversion of the barrier gradient stalled")


def scribble_step(barrier: BallBarrier, anchor, gradient, eta: float, tol: float = 1e-10) -> np.ndarray:
    """Minimize eta*<x, gradient> + D(x, anchor) over the ball.

    The stationarity condition grad(x) = grad(anchor) - eta*gradient is
    radial for this barrier: with r the norm of the right side, the
    solution lies at distance r / (1 + sqrt(1 + r^2)) along it.
    """
    anchor = np.asarray(anchor, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if not np.all(np.isfinite(gradient)):
        raise DomainError("gradient must be finite")
    if not eta > 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    if np.all(eta * gradient == 0.0):
        barrier._interior(anchor)
        return anchor.copy()
    target = barrier.grad(anchor) - eta * gradient
    r = float(np.linalg.norm(target))
    x = target / (1.0 + math.sqrt(1.0 + r * r))
    # for r beyond ~2e15 the exact solution sits within one ulp of the
    # boundary and the division above can round onto it; pull back inside
    norm_sq = float(x @ x)
    if norm_sq >= 1.0 - 1e-15:
        x *= math.sqrt((1.0 - 1e-15) / norm_sq)
    # re-evaluating the gradient at x loses accuracy near the boundary,
    # where 1 - |x|^2 cancels; widen the acceptance by that noise level
    allowed = tol * max(1.0, r) + 1e-15 * (1.0 + r * r)
    residual = float(np.linalg.norm(barrier.grad(x) - target))
    if residual > allowed:
        x = _newton_inverse_gradient(barrier, target, x)
        residual = float(np.linalg.norm(barrier.grad(x) - target))
        if residual > allowed:
            raise SolverError(f"barrier step residual {residual:.3e} exceeds tolerance")
    return x


def predict_gradient(baseline, action, cost: float) -> np.ndarray:
    """Quarter-step of gradient descent on the squared cost gap, then
    projected back onto the unit ball."""
    baseline = np.asarray(baseline, dtype=float)
    action = np.asarray(action, dtype=float)
    p = baseline - 0.25 * (float(action @ baseline) - float(cost)) * action
    n2 = float(p @ p)
    if n2 > 1.0:
        p /= math.sqrt(n2)
    return p


def project_slice(baseline, action, cost: float) -> np.ndarray:
    """Nearest point to baseline on {m in ball : <action, m> = cost}.

    Projects onto the hyperplane first; if that point leaves the ball,
    the solution lies on the rim of the slice disk, reached by moving
    from the disk center toward the hyperplane projection.
    """
    baseline = np.asarray(baseline, dtype=float)
    action = np.asarray(action, dtype=float)
    cost = float(cost)
    n2 = float(action @ action)
    if n2 == 0.0 or not math.isfinite(n2):
        raise DomainError("action must be a nonzero finite vector")
    center = (cost / n2) * action
    c2 = float(center @ center)
    if c2 > 1.0:
        if c2 > 1.0 + _CONTAINMENT_SLACK:
            raise InfeasibleSliceError(
                f"hyperplane <w, m> = {cost} misses the unit ball"
            )
        return center / math.sqrt(c2)
    p = baseline + ((cost - float(action @ baseline)) / n2) * action
    p2 = float(p @ p)
    if p2 <= 1.0:
        return p
    diff = p - center
    radius = math.sqrt(max(0.0, 1.0 - c2))
    out = center + (radius / float(np.linalg.norm(diff))) * diff
    while float(out @ out) > 1.0:
        out *= 1.0 - 4e-16
    return out


def chase_greedy(slices, start) -> np.ndarray:
    """Greedy chasing across hyperplane slices of the ball.

    Each step projects the previous point onto the next slice; the full
    trajectory (one point per slice) is returned.
    """
    m = np.asarray(start, dtype=float).copy()
    if float(m @ m) > 1.0:
        raise DomainError("start must lie in the unit ball")
    out = []
    for action, cost in slices:
        m = project_slice(m, action, cost)
        out.append(m)
    return np.array(out)


class ScribbleLearner:
    """Optimistic barrier-based learner for bandit linear optimization.

    ``act`` plays a random Dikin ellipsoid axis endpoint of the current
    iterate; ``observe`` consumes the scalar cost of that action. The
    held-out prediction vector is updated by the configured strategy and
    steered into the second half of a two-step mirror-descent update.
    """

    def __init__(self, dimension: int, eta: float, prediction: PredictionKind = PredictionKind.CHASE):
        self.barrier = BallBarrier(dimension)
        self.dimension = dimension
        self.eta = float(eta)
        if not self.eta > 0.0:
            raise DomainError(f"eta must be positive, got {eta}")
        self.prediction_kind = prediction
        self._x = np.zeros(dimension)
        self._x_aux = np.zeros(dimension)
        self._m = np.zeros(dimension)
        self._pending: DikinSample | None = None

    @property
    def x(self) -> np.ndarray:
        return self._x.copy()

    @property
    def predictions(self) -> np.ndarray:
        return self._m.copy()

    def act(self, rng: np.random.Generator) -> np.ndarray:
        self._pending = dikin_sample(self.barrier, self._x, rng)
        return self._pending.point.copy()

    def observe(self, cost: float) -> None:
        if self._pending is None:
            raise DomainError("observe requires a preceding act")
        cost = float(cost)
        # the cost of a unit-ball action against a unit-ball loss
        if not (math.isfinite(cost) and abs(cost) <= 1.0 + 1e-9):
            raise DomainError(f"cost must lie in [-1, 1], got {cost}")
        sample = self._pending
        self._pending = None

        est = linear_estimator(cost, sample, self._m)
        if self.prediction_kind is PredictionKind.GRADIENT:
            m_next = predict_gradient(self._m, sample.point, cost)
        elif self.prediction_kind is PredictionKind.CHASE:
            m_next = project_slice(self._m, sample.point, cost)
        else:
            m_next = self._m
        if float(m_next @ m_next) > 1.0 + 1e-9:
            raise StabilityError("prediction left the unit ball")

        x_aux = scribble_step(self.barrier, self._x_aux, est, self.eta)
        x_new = scribble_step(self.barrier, x_aux, m_next, self.eta)
        self._x_aux = x_aux
        self._x = x_new
        self._m = m_next
