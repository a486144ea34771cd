"""Bandit learners on the probability simplex.

All learners share the same interface: ``act(rng)`` draws an arm from the
current sampling distribution ``w`` without mutating state, and
``observe(arm, loss)`` feeds back the scalar loss of the played arm. The
``predictions`` property exposes the loss guesses the learner holds for
the upcoming round, which the optimistic updates play against.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, DomainError, StabilityError
from .omd import Regularizer, RegularizerKind, omd_simplex_step

# the largest learning rate under which the recency-biased update keeps
# its sampling-bias and stability guarantees
ETA_CAP = 1.0 / 162.0
ALPHA_FACTOR = 8.0


def importance_weighted_estimator(observed_loss, baseline, weights, played) -> np.ndarray:
    """Unbiased loss-vector estimate from one bandit observation.

    Coordinates default to the baseline guess; only the played arm is
    corrected by the importance-weighted innovation, so the estimate
    differs from the baseline in at most one coordinate and its
    expectation over the played arm equals the true loss vector.
    """
    baseline = np.asarray(baseline, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if baseline.shape != weights.shape or baseline.ndim != 1:
        raise DomainError("baseline and weights must be vectors of equal length")
    if not 0 <= played < baseline.shape[0]:
        raise DomainError(f"played arm {played} out of range")
    if weights[played] <= 0.0:
        raise DomainError("played arm must have positive sampling weight")
    observed_loss = float(observed_loss)
    if not math.isfinite(observed_loss):
        raise DomainError("observed loss must be finite")
    est = baseline.copy()
    est[played] += (observed_loss - baseline[played]) / weights[played]
    return est


def recency_tuned_eta(num_arms: int, horizon: int, path_length: float) -> float:
    """Learning rate sqrt(K ln T / V) for the recency-biased learner, capped."""
    if horizon < 2:
        raise ConfigError("horizon must be at least 2")
    v = max(float(path_length), 1e-12)
    return min(ETA_CAP, math.sqrt(num_arms * math.log(horizon) / v))


def exp3_tuned_rate(num_arms: int, horizon: int) -> float:
    return math.sqrt(2.0 * math.log(num_arms) / (horizon * num_arms))


class _SimplexLearner:
    """Shared sampling and validation plumbing."""

    def __init__(self, num_arms: int):
        if num_arms < 1:
            raise ConfigError(f"num_arms must be at least 1, got {num_arms}")
        self.num_arms = num_arms

    @property
    def x(self) -> np.ndarray:
        return self._x

    @property
    def w(self) -> np.ndarray:
        return self._w

    def act(self, rng: np.random.Generator) -> int:
        u = rng.random()
        idx = int(np.searchsorted(np.cumsum(self.w), u, side="right"))
        return min(idx, self.num_arms - 1)

    def _check_round(self, arm: int, loss: float) -> float:
        if not 0 <= arm < self.num_arms:
            raise DomainError(f"arm {arm} out of range for {self.num_arms} arms")
        loss = float(loss)
        if not (math.isfinite(loss) and 0.0 <= loss <= 1.0):
            raise DomainError(f"loss must lie in [0, 1], got {loss}")
        return loss


class RecencyBiasOMD(_SimplexLearner):
    """Log-barrier mirror descent centered on the most recent cost.

    The loss estimate for every arm defaults to the cost paid in the
    previous round, and the sampling distribution mixes a small point
    mass on the last played arm back into the iterate. Cheap rounds
    shrink that mass toward zero.
    """

    def __init__(self, num_arms: int, eta: float | None = None, alpha: float | None = None):
        super().__init__(num_arms)
        self.eta = ETA_CAP if eta is None else float(eta)
        if not 0.0 < self.eta <= ETA_CAP * (1.0 + 1e-12):
            raise ConfigError(f"eta must lie in (0, 1/162], got {self.eta}")
        self.alpha = ALPHA_FACTOR * self.eta if alpha is None else float(alpha)
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        self._reg = Regularizer(RegularizerKind.LOG_BARRIER, self.eta, num_arms)
        self._x = np.full(num_arms, 1.0 / num_arms)
        self._w = self._x.copy()
        self._prev_cost = 0.0

    @property
    def predictions(self) -> np.ndarray:
        return np.full(self.num_arms, self._prev_cost)

    def observe(self, arm: int, loss: float) -> None:
        loss = self._check_round(arm, loss)
        est = importance_weighted_estimator(loss, self.predictions, self._w, arm)
        x_new, _ = omd_simplex_step(self._reg, self._x, est)
        a = self.alpha * (1.0 - loss) / (1.0 + self.alpha * (1.0 - loss))
        w_new = (1.0 - a) * x_new
        w_new[arm] += a
        ratio = x_new / w_new
        played_ratio = ratio[arm]
        ratio[arm] = 0.0
        # sampling bias must stay within 1 + alpha off the played arm
        if ratio.max() > (1.0 + self.alpha) * (1.0 + 1e-12) or played_ratio > 1.0 + 1e-12:
            raise StabilityError("sampling bias exceeded its 1 + alpha envelope")
        self._x = x_new
        self._w = w_new
        self._prev_cost = loss


class HybridGroupOMD(_SimplexLearner):
    """Optimistic mirror descent with a hybrid barrier-entropy regularizer.

    Arms whose iterate mass sits below ``beta`` form a minority group.
    Minority arms share the cost of the most recent round that played
    inside the group as their common prediction; every other arm predicts
    the loss it last revealed. The sampling mixture moves a small amount
    of minority mass onto that group's most recently played arm.
    """

    def __init__(
        self,
        num_arms: int,
        eta: float | None = None,
        alpha: float | None = None,
        beta: float | None = None,
    ):
        super().__init__(num_arms)
        cap = min(1.0 / num_arms, ETA_CAP)
        self.eta = cap if eta is None else float(eta)
        if not 0.0 < self.eta <= cap * (1.0 + 1e-12):
            raise ConfigError(f"eta must lie in (0, {cap:.6g}] for {num_arms} arms")
        self.alpha = ALPHA_FACTOR * self.eta if alpha is None else float(alpha)
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        self.beta = 1.0 / (2.0 * num_arms) if beta is None else float(beta)
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        self._reg = Regularizer(RegularizerKind.HYBRID, self.eta, num_arms)
        self._x = np.full(num_arms, 1.0 / num_arms)
        self._x_aux = self._x.copy()
        self._w = self._x.copy()
        self._minority = np.ones(num_arms, dtype=bool)
        self._m = np.zeros(num_arms)
        self._last_observed = np.zeros(num_arms)
        self._anchor_arm: int | None = None
        self._anchor_cost = 0.0

    @property
    def minority(self) -> np.ndarray:
        return self._minority.copy()

    @property
    def anchor_arm(self):
        return self._anchor_arm

    @property
    def predictions(self) -> np.ndarray:
        return self._m.copy()

    def observe(self, arm: int, loss: float) -> None:
        loss = self._check_round(arm, loss)
        if self._minority[arm]:
            self._anchor_arm = arm
            self._anchor_cost = loss
        minority_next = self._x < self.beta
        est = importance_weighted_estimator(loss, self._m, self._w, arm)
        self._last_observed[arm] = loss
        m_next = np.where(minority_next, self._anchor_cost, self._last_observed)

        x_aux_new, _ = omd_simplex_step(self._reg, self._x_aux, est)
        x_new, _ = omd_simplex_step(self._reg, x_aux_new, m_next)
        drift = max(float((x_new / self._x).max()), float((self._x / x_new).max()))
        if drift > 2.0:
            raise StabilityError(f"iterate moved by factor {drift:.4f} in one round")

        a = self.alpha * (1.0 - self._anchor_cost) / (1.0 + self.alpha * (1.0 - self._anchor_cost))
        w_new = x_new.copy()
        transfer = minority_next.copy()
        transfer[self._anchor_arm] = False
        if transfer.any():
            moved = a * float(x_new[transfer].sum())
            w_new[transfer] *= 1.0 - a
            w_new[self._anchor_arm] += moved

        self._x_aux = x_aux_new
        self._x = x_new
        self._w = w_new
        self._minority = minority_next
        self._m = m_next


class LastObservedOMD(_SimplexLearner):
    """Optimistic mirror descent predicting each arm's last revealed loss.

    Plays the iterate directly, with no extra mixing.
    """

    def __init__(self, num_arms: int, eta: float, kind: RegularizerKind = RegularizerKind.LOG_BARRIER):
        super().__init__(num_arms)
        self.eta = float(eta)
        if not self.eta > 0.0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        self._reg = Regularizer(kind, self.eta, num_arms)
        self._x = np.full(num_arms, 1.0 / num_arms)
        self._x_aux = self._x.copy()
        self._last_observed = np.zeros(num_arms)

    @property
    def w(self) -> np.ndarray:
        return self._x

    @property
    def predictions(self) -> np.ndarray:
        return self._last_observed.copy()

    def observe(self, arm: int, loss: float) -> None:
        loss = self._check_round(arm, loss)
        est = importance_weighted_estimator(loss, self._last_observed, self._x, arm)
        self._last_observed[arm] = loss
        x_aux_new, _ = omd_simplex_step(self._reg, self._x_aux, est)
        x_new, _ = omd_simplex_step(self._reg, x_aux_new, self._last_observed)
        self._x_aux = x_aux_new
        self._x = x_new


class Exp3(_SimplexLearner):
    """Multiplicative weights on importance-weighted losses."""

    def __init__(self, num_arms: int, learning_rate: float):
        super().__init__(num_arms)
        self.learning_rate = float(learning_rate)
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        self._cum = np.zeros(num_arms)
        self._w = np.full(num_arms, 1.0 / num_arms)

    @property
    def x(self) -> np.ndarray:
        return self._w

    @property
    def predictions(self) -> np.ndarray:
        return np.zeros(self.num_arms)

    def observe(self, arm: int, loss: float) -> None:
        loss = self._check_round(arm, loss)
        self._cum[arm] += loss / self._w[arm]
        # shift before exponentiating so the weights never underflow together
        z = self._cum - self._cum.min()
        p = np.exp(-self.learning_rate * z)
        self._w = p / p.sum()
