"""Loss-sequence constructions and path-length accounting.

Oblivious streams are precomputed tables; the adaptive stream reacts to
the play history round by round. All randomness is drawn from a
generator seeded at construction, so a stream is a pure function of its
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PathLengths:
    """Cumulative movement of a vector sequence, measured from zero."""

    l1: float
    l2: float
    linf: float


def path_lengths(sequence) -> PathLengths:
    """Total per-round movement of a loss sequence under three norms.

    The sequence is compared against a zero vector prepended at time
    zero, so a constant stream contributes exactly one jump.
    """
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise DomainError("sequence must be a nonempty (T, width) array")
    padded = np.vstack([np.zeros((1, seq.shape[1])), seq])
    diffs = np.diff(padded, axis=0)
    return PathLengths(
        l1=float(np.abs(diffs).sum(axis=1).sum()),
        l2=float(np.sqrt((diffs**2).sum(axis=1)).sum()),
        linf=float(np.abs(diffs).max(axis=1).sum()),
    )


class LossStream:
    """Interface shared by every stream: next(t, history) for t = 1..T."""

    kind = "oblivious"

    def __init__(self, horizon: int, width: int):
        if horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {horizon}")
        if width < 1:
            raise ConfigError(f"width must be at least 1, got {width}")
        self.horizon = horizon
        self.width = width

    def next(self, t: int, history) -> np.ndarray:
        raise NotImplementedError

    def _check_round(self, t: int) -> None:
        if not 1 <= t <= self.horizon:
            raise DomainError(f"round {t} outside horizon {self.horizon}")


class TableStream(LossStream):
    """Oblivious stream backed by a precomputed (T, width) table."""

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2:
            raise DomainError("table must be two-dimensional")
        super().__init__(table.shape[0], table.shape[1])
        self._table = table

    @property
    def table(self) -> np.ndarray:
        return self._table.copy()

    def next(self, t: int, history) -> np.ndarray:
        self._check_round(t)
        return self._table[t - 1].copy()


def from_table(table) -> TableStream:
    return TableStream(table)


def oblivious_piecewise(num_arms: int, horizon: int, num_switches: int, gap: float, seed: int) -> TableStream:
    """Piecewise-constant losses with a cheap arm that changes at switches.

    Every segment gives its best arm a common base loss and every other
    arm the base plus a per-segment margin drawn from [gap, 1.25*gap]
    (clipped at 1). Each switch therefore moves the outgoing best arm by
    at least gap, changes the best arm's identity, and changes the mean
    margin.
    """
    if num_arms < 2:
        raise ConfigError("num_arms must be at least 2")
    if not 0 <= num_switches <= horizon - 1:
        raise ConfigError(f"num_switches must lie in [0, horizon - 1], got {num_switches}")
    if not 0.0 < gap <= 1.0:
        raise ConfigError(f"gap must lie in (0, 1], got {gap}")
    rng = np.random.default_rng(seed)
    margin_hi = min(1.0, 1.25 * gap)
    base = float(rng.uniform(0.0, 1.0 - margin_hi))

    switch_rounds = np.sort(rng.choice(np.arange(2, horizon + 1), size=num_switches, replace=False))
    boundaries = [1, *switch_rounds.tolist(), horizon + 1]

    table = np.empty((horizon, num_arms))
    best = int(rng.integers(num_arms))
    for j in range(num_switches + 1):
        if j > 0:
            shift = int(rng.integers(num_arms - 1))
            best = (best + 1 + shift) % num_arms
        margin = float(rng.uniform(gap, margin_hi))
        row = np.full(num_arms, base + margin)
        row[best] = base
        table[boundaries[j] - 1 : boundaries[j + 1] - 1] = row
    return TableStream(table)


class AdaptiveLowerBound(LossStream):
    """Bernoulli losses that reshuffle only the coordinate just played.

    One hidden arm gets a slightly lower success probability. After the
    active phase (a gamma fraction of the horizon) all losses are zero,
    which keeps the stream's total path length proportional to gamma*T.
    """

    kind = "adaptive"

    def __init__(self, num_arms: int, horizon: int, gamma: float, seed: int):
        if num_arms < 2:
            raise ConfigError("num_arms must be at least 2")
        super().__init__(horizon, num_arms)
        if not num_arms / horizon <= gamma <= 1.0:
            raise ConfigError(
                f"gamma must lie in [num_arms/horizon, 1] = [{num_arms / horizon:.4g}, 1], got {gamma}"
            )
        self.gamma = float(gamma)
        self.active_rounds = int(math.floor(gamma * horizon))
        self._rng = np.random.default_rng(seed)
        self.special_arm = int(self._rng.integers(num_arms))
        self._probs = np.full(num_arms, 0.5)
        self._probs[self.special_arm] = max(0.0, 0.5 - 0.25 * math.sqrt(num_arms / (horizon * gamma)))
        self._current: np.ndarray | None = None

    def next(self, t: int, history) -> np.ndarray:
        self._check_round(t)
        if t > self.active_rounds:
            return np.zeros(self.width)
        if t == 1 or self._current is None:
            self._current = (self._rng.random(self.width) < self._probs).astype(float)
        else:
            if len(history) == 0:
                raise DomainError("adaptive stream needs the previous play in history")
            arm = int(history[-1])
            if not 0 <= arm < self.width:
                raise DomainError(f"played arm {arm} out of range")
            self._current[arm] = float(self._rng.random() < self._probs[arm])
        return self._current.copy()


def adaptive_lowerbound(num_arms: int, horizon: int, gamma: float, seed: int) -> AdaptiveLowerBound:
    return AdaptiveLowerBound(num_arms, horizon, gamma, seed)


def linear_drift(dimension: int, horizon: int, step_size: float, seed: int) -> TableStream:
    """Loss vectors in the unit ball taking random steps of a fixed size."""
    if dimension < 1:
        raise ConfigError("dimension must be at least 1")
    if step_size < 0.0:
        raise ConfigError(f"step_size must be nonnegative, got {step_size}")
    rng = np.random.default_rng(seed)
    table = np.empty((horizon, dimension))
    direction = rng.normal(size=dimension)
    direction /= np.linalg.norm(direction)
    current = direction * rng.uniform() ** (1.0 / dimension)
    table[0] = current
    for t in range(1, horizon):
        direction = rng.normal(size=dimension)
        norm = float(np.linalg.norm(direction))
        if norm > 0:
            direction /= norm
        candidate = current + step_size * direction
        n = float(np.linalg.norm(candidate))
        if n > 1.0:
            candidate /= n
            while float(candidate @ candidate) > 1.0:
                candidate *= 1.0 - 4e-16
        current = candidate
        table[t] = current
    return TableStream(table)
