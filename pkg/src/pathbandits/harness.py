"""Experiment runner: single runs, parameter sweeps, and their summaries.

A run is driven by one root seed that splits into two independent
sub-streams, one for the loss stream and one for the learner's sampling,
so changing the learner never perturbs an oblivious adversary's draws.
"""

from __future__ import annotations

import itertools
import math
import os
import subprocess
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, PathBanditsError, RoundError
from .mab import (
    ETA_CAP,
    Exp3,
    HybridGroupOMD,
    LastObservedOMD,
    RecencyBiasOMD,
    exp3_tuned_rate,
    recency_tuned_eta,
)
from .omd import RegularizerKind
from .scribble import PredictionKind, ScribbleLearner
from .streams import (
    AdaptiveLowerBound,
    from_table,
    linear_drift,
    oblivious_piecewise,
    path_lengths,
)

_MAB_LEARNERS = {"recency-bias", "hybrid-group", "last-observed", "exp3"}
_LINEAR_LEARNERS = {"scribble-gradient", "scribble-chase", "scribble-frozen"}
_LEARNER_PARAMS = {
    "recency-bias": {"eta", "alpha", "v_hat"},
    "hybrid-group": {"eta", "alpha", "beta"},
    "last-observed": {"eta", "regularizer"},
    "exp3": {"learning_rate"},
    "scribble-gradient": {"eta", "v_hat"},
    "scribble-chase": {"eta", "v_hat"},
    "scribble-frozen": {"eta", "v_hat"},
}
_STREAM_PARAMS = {
    "piecewise": {"num_arms", "num_switches", "gap"},
    "adaptive": {"num_arms", "gamma"},
    "drift": {"dimension", "step_size"},
    "table": {"losses"},
}
_MAB_STREAMS = {"piecewise", "adaptive", "table"}
_LINEAR_STREAMS = {"drift", "table"}
_SCRIBBLE_KIND = {
    "scribble-gradient": PredictionKind.GRADIENT,
    "scribble-chase": PredictionKind.CHASE,
    "scribble-frozen": PredictionKind.FROZEN,
}

_CONFIG_KEYS = {
    "kind",
    "horizon",
    "learner",
    "stream",
    "seeds",
    "grid",
    "workers",
    "record_rows",
    "out",
    "fmt",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one experiment (or a sweep of them)."""

    kind: str
    horizon: int
    learner: dict
    stream: dict
    seeds: tuple = (0,)
    grid: dict = field(default_factory=dict)
    workers: int | None = None
    record_rows: bool = True
    out: str | None = None
    fmt: str = "json"

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be a mapping, got {type(raw).__name__}")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("kind", "horizon", "learner", "stream"):
            if key not in raw:
                raise ConfigError(f"config requires '{key}'")

        kind = raw["kind"]
        if kind not in ("mab", "linear"):
            raise ConfigError(f"kind must be 'mab' or 'linear', got {kind!r}")
        horizon = raw["horizon"]
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
            raise ConfigError(f"horizon must be a positive integer, got {horizon!r}")

        learner = _checked_section(raw["learner"], "learner", _LEARNER_PARAMS)
        stream = _checked_section(raw["stream"], "stream", _STREAM_PARAMS)
        lname, sname = learner["name"], stream["name"]
        if lname not in (_MAB_LEARNERS if kind == "mab" else _LINEAR_LEARNERS):
            raise ConfigError(f"learner {lname!r} does not run under kind {kind!r}")
        if sname not in (_MAB_STREAMS if kind == "mab" else _LINEAR_STREAMS):
            raise ConfigError(f"stream {sname!r} does not run under kind {kind!r}")
        missing = _STREAM_PARAMS[sname] - set(stream)
        if missing:
            raise ConfigError(f"stream {sname!r} requires {sorted(missing)}")
        if sname == "table":
            _check_table(stream["losses"], horizon)

        seeds = raw.get("seeds", [0])
        if (
            not isinstance(seeds, (list, tuple))
            or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)
        ):
            raise ConfigError("seeds must be a non-empty list of integers")

        grid = raw.get("grid", {})
        if not isinstance(grid, dict):
            raise ConfigError("grid must be a mapping of dotted keys to value lists")
        for key, values in grid.items():
            if not isinstance(key, str) or key.split(".")[0] not in ("learner", "stream"):
                raise ConfigError(f"grid keys must start with 'learner.' or 'stream.', got {key!r}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigError(f"grid values for {key!r} must be a non-empty list")

        workers = raw.get("workers")
        if workers is not None and (not isinstance(workers, int) or workers < 1):
            raise ConfigError(f"workers must be a positive integer, got {workers!r}")
        fmt = raw.get("fmt", "json")
        if fmt not in ("json", "csv"):
            raise ConfigError(f"fmt must be 'json' or 'csv', got {fmt!r}")
        out = raw.get("out")
        if out is not None and not isinstance(out, str):
            raise ConfigError("out must be a path string")

        return ExperimentConfig(
            kind=kind,
            horizon=horizon,
            learner=learner,
            stream=stream,
            seeds=tuple(seeds),
            grid={k: list(v) for k, v in grid.items()},
            workers=workers,
            record_rows=bool(raw.get("record_rows", True)),
            out=out,
            fmt=fmt,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "learner": dict(self.learner),
            "stream": dict(self.stream),
            "seeds": list(self.seeds),
            "grid": {k: list(v) for k, v in self.grid.items()},
            "workers": self.workers,
            "record_rows": self.record_rows,
            "out": self.out,
            "fmt": self.fmt,
        }


def _checked_section(section, label: str, registry: dict) -> dict:
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError(f"{label} must be a mapping with a 'name'")
    name = section["name"]
    if name not in registry:
        raise ConfigError(f"unknown {label} {name!r}; valid: {sorted(registry)}")
    extra = set(section) - registry[name] - {"name"}
    if extra:
        raise ConfigError(f"{label} {name!r} does not accept {sorted(extra)}")
    return dict(section)


def _check_table(losses, horizon: int) -> None:
    if not isinstance(losses, (list, tuple)) or not losses:
        raise ConfigError("table losses must be a non-empty list of rows")
    width = len(losses[0])
    if width < 1 or any(len(row) != width for row in losses):
        raise ConfigError("table losses must be rectangular with at least one column")
    if len(losses) != horizon:
        raise ConfigError(f"table has {len(losses)} rows but horizon is {horizon}")


def stream_width(config: ExperimentConfig) -> int:
    """Number of arms (mab) or the ambient dimension (linear)."""
    stream = config.stream
    name = stream["name"]
    if name in ("piecewise", "adaptive"):
        return int(stream["num_arms"])
    if name == "drift":
        return int(stream["dimension"])
    return len(stream["losses"][0])


def build_stream(config: ExperimentConfig, seed):
    stream = config.stream
    name = stream["name"]
    try:
        if name == "piecewise":
            return oblivious_piecewise(
                int(stream["num_arms"]),
                config.horizon,
                int(stream["num_switches"]),
                float(stream["gap"]),
                seed,
            )
        if name == "adaptive":
            return AdaptiveLowerBound(
                int(stream["num_arms"]), config.horizon, float(stream["gamma"]), seed
            )
        if name == "drift":
            return linear_drift(
                int(stream["dimension"]), config.horizon, float(stream["step_size"]), seed
            )
        return from_table(np.asarray(stream["losses"], dtype=float))
    except DomainError as exc:
        raise ConfigError(f"stream {name!r}: {exc}") from exc


def build_learner(config: ExperimentConfig):
    """Instantiate the configured learner; returns (learner, resolved params)."""
    name = config.learner["name"]
    params = {k: v for k, v in config.learner.items() if k != "name"}
    width = stream_width(config)
    horizon = config.horizon
    try:
        if name == "recency-bias":
            eta = params.get("eta")
            if eta is None:
                v_hat = params.get("v_hat")
                eta = ETA_CAP if v_hat is None else recency_tuned_eta(width, max(horizon, 2), v_hat)
            learner = RecencyBiasOMD(width, eta=eta, alpha=params.get("alpha"))
            resolved = {"eta": learner.eta, "alpha": learner.alpha}
        elif name == "hybrid-group":
            learner = HybridGroupOMD(
                width,
                eta=params.get("eta"),
                alpha=params.get("alpha"),
                beta=params.get("beta"),
            )
            resolved = {"eta": learner.eta, "alpha": learner.alpha, "beta": learner.beta}
        elif name == "last-observed":
            reg = RegularizerKind(params.get("regularizer", "log-barrier"))
            learner = LastObservedOMD(width, params.get("eta", ETA_CAP), kind=reg)
            resolved = {"eta": learner.eta, "regularizer": reg.value}
        elif name == "exp3":
            rate = params.get("learning_rate")
            if rate is None:
                rate = exp3_tuned_rate(width, max(horizon, 2))
            learner = Exp3(width, learning_rate=rate)
            resolved = {"learning_rate": learner.learning_rate}
        else:
            eta = params.get("eta")
            if eta is None:
                v_hat = float(params.get("v_hat", 1.0))
                if not v_hat > 0.0:
                    raise ConfigError(f"v_hat must be positive, got {v_hat}")
                eta = math.sqrt(math.log(max(horizon, 2)) / (width * width * v_hat))
            learner = ScribbleLearner(width, eta, prediction=_SCRIBBLE_KIND[name])
            resolved = {"eta": learner.eta}
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"learner {name!r}: {exc}") from exc
    return learner, resolved


@dataclass
class RunRecord:
    """One run's config echo, scalar summary, and optional per-round rows."""

    meta: dict
    summary: dict
    rows: list


@lru_cache(maxsize=1)
def _commit_tag():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.TimeoutExpired):
        return None
    tag = out.stdout.strip()
    return tag if out.returncode == 0 and tag else None


def _config_echo(config: ExperimentConfig) -> dict:
    # delivery details do not identify the experiment, so two invocations
    # differing only in output destination echo the same config
    echo = config.to_dict()
    del echo["out"], echo["fmt"]
    return echo


def _meta(config: ExperimentConfig, seed, resolved: dict) -> dict:
    return {
        "package": "pathbandits",
        "version": __version__,
        "commit": _commit_tag(),
        "seed": seed,
        "config": _config_echo(config),
        "learner_resolved": resolved,
    }


def run_mab(config: ExperimentConfig, seed: int) -> RunRecord:
    if config.kind != "mab":
        raise ConfigError(f"run_mab requires kind 'mab', got {config.kind!r}")
    stream_seed, learner_seed = np.random.SeedSequence(seed).spawn(2)
    stream = build_stream(config, stream_seed)
    learner, resolved = build_learner(config)
    rng = np.random.default_rng(learner_seed)

    horizon, num_arms = config.horizon, stream_width(config)
    losses = np.empty((horizon, num_arms))
    plays: list[int] = []
    rows: list[dict] = []
    total = 0.0
    gap_sq = 0.0
    replayable = stream.kind == "oblivious"
    for t in range(1, horizon + 1):
        try:
            loss_vec = stream.next(t, plays)
            predicted = learner.predictions
            arm = learner.act(rng)
            cost = float(loss_vec[arm])
            learner.observe(arm, cost)
        except PathBanditsError as exc:
            raise RoundError(t, exc) from exc
        plays.append(arm)
        losses[t - 1] = loss_vec
        total += cost
        gap = cost - float(predicted[arm])
        gap_sq += gap * gap
        if config.record_rows:
            row = {"t": t, "action": arm, "loss": cost, "prediction": float(predicted[arm])}
            if replayable:
                row["loss_vector"] = [float(v) for v in loss_vec]
            rows.append(row)

    comparator = float(losses.sum(axis=0).min())
    lengths = path_lengths(losses)
    summary = {
        "kind": "mab",
        "learner": config.learner["name"],
        "horizon": horizon,
        "num_arms": num_arms,
        "learner_loss": total,
        "comparator_loss": comparator,
        "regret": total - comparator,
        "path_l1": lengths.l1,
        "path_l2": lengths.l2,
        "path_linf": lengths.linf,
        "prediction_gap_sq": gap_sq,
    }
    return RunRecord(_meta(config, seed, resolved), summary, rows)


def run_linear(config: ExperimentConfig, seed: int) -> RunRecord:
    if config.kind != "linear":
        raise ConfigError(f"run_linear requires kind 'linear', got {config.kind!r}")
    stream_seed, learner_seed = np.random.SeedSequence(seed).spawn(2)
    stream = build_stream(config, stream_seed)
    learner, resolved = build_learner(config)
    rng = np.random.default_rng(learner_seed)

    horizon, dim = config.horizon, stream_width(config)
    losses = np.empty((horizon, dim))
    rows: list[dict] = []
    total = 0.0
    innovation_sq = 0.0
    for t in range(1, horizon + 1):
        try:
            loss_vec = stream.next(t, [])
            predicted = learner.predictions
            action = learner.act(rng)
            cost = float(action @ loss_vec)
            learner.observe(cost)
        except PathBanditsError as exc:
            raise RoundError(t, exc) from exc
        losses[t - 1] = loss_vec
        total += cost
        innovation = cost - float(action @ predicted)
        innovation_sq += innovation * innovation
        if config.record_rows:
            rows.append(
                {
                    "t": t,
                    "action": [float(v) for v in action],
                    "loss": cost,
                    "prediction": float(action @ predicted),
                    "loss_vector": [float(v) for v in loss_vec],
                    "iterate_norm": float(np.linalg.norm(learner.x)),
                }
            )

    comparator = -float(np.linalg.norm(losses.sum(axis=0)))
    lengths = path_lengths(losses)
    eta = resolved["eta"]
    summary = {
        "kind": "linear",
        "learner": config.learner["name"],
        "horizon": horizon,
        "dimension": dim,
        "learner_loss": total,
        "comparator_loss": comparator,
        "regret": total - comparator,
        "path_l1": lengths.l1,
        "path_l2": lengths.l2,
        "path_linf": lengths.linf,
        "innovation_sq": innovation_sq,
        "eta": eta,
        "barrier_term": math.log(max(horizon, 2)) / eta,
        "variance_term": eta * dim * dim * innovation_sq,
    }
    return RunRecord(_meta(config, seed, resolved), summary, rows)


def run(config: ExperimentConfig, seed: int) -> RunRecord:
    """Run one seed of the configured experiment."""
    return run_mab(config, seed) if config.kind == "mab" else run_linear(config, seed)


# ---------------------------------------------------------------------------
# sweeps


def apply_override(raw: dict, dotted: str, value) -> None:
    """Set a possibly-nested config entry named by a dotted path."""
    parts = dotted.split(".")
    node = raw
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[parts[-1]] = value


def _cell_config(config: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    raw = config.to_dict()
    raw["grid"] = {}
    raw["record_rows"] = False
    for key, value in overrides.items():
        apply_override(raw, key, value)
    return ExperimentConfig.from_dict(raw)


def _sweep_job(raw_config: dict, seed: int):
    """Top-level so process pools can pickle it. Returns (ok, payload)."""
    try:
        record = run(ExperimentConfig.from_dict(raw_config), seed)
    except Exception as exc:  # noqa: BLE001 - a cell failure must not kill the sweep
        return False, f"{type(exc).__name__}: {exc}"
    return True, record.summary


_AGGREGATED_KEYS = (
    "learner_loss",
    "comparator_loss",
    "path_l1",
    "path_l2",
    "path_linf",
    "prediction_gap_sq",
    "innovation_sq",
)


def sweep(config: ExperimentConfig) -> RunRecord:
    """Run the full grid x seed product; one result row per grid cell."""
    keys = sorted(config.grid)
    combos = list(itertools.product(*(config.grid[k] for k in keys)))
    cells = [dict(zip(keys, combo)) for combo in combos]
    cell_configs = [_cell_config(config, overrides) for overrides in cells]

    jobs = [(ci, seed) for ci in range(len(cells)) for seed in config.seeds]
    workers = config.workers if config.workers is not None else (os.cpu_count() or 1)
    workers = min(workers, len(jobs))
    outcomes: dict[tuple[int, int], tuple[bool, object]] = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                (ci, seed): pool.submit(_sweep_job, cell_configs[ci].to_dict(), seed)
                for ci, seed in jobs
            }
            for key, future in futures.items():
                outcomes[key] = future.result()
    else:
        for ci, seed in jobs:
            outcomes[(ci, seed)] = _sweep_job(cell_configs[ci].to_dict(), seed)

    rows = []
    for ci, overrides in enumerate(cells):
        summaries = []
        errors = []
        for seed in config.seeds:
            ok, payload = outcomes[(ci, seed)]
            (summaries if ok else errors).append(payload)
        row = dict(overrides)
        row["seeds_ok"] = len(summaries)
        row["error"] = errors[0] if errors else ""
        if summaries:
            regrets = np.array([s["regret"] for s in summaries])
            row["regret_mean"] = float(regrets.mean())
            row["regret_stderr"] = (
                float(regrets.std(ddof=1) / math.sqrt(len(regrets))) if len(regrets) > 1 else 0.0
            )
            for key in _AGGREGATED_KEYS:
                if key in summaries[0]:
                    row[f"{key}_mean"] = float(np.mean([s[key] for s in summaries]))
        rows.append(row)

    meta = {
        "package": "pathbandits",
        "version": __version__,
        "commit": _commit_tag(),
        "config": _config_echo(config),
    }
    summary = {
        "kind": "sweep",
        "num_cells": len(cells),
        "seeds": list(config.seeds),
        "grid_keys": keys,
    }
    return RunRecord(meta, summary, rows)
