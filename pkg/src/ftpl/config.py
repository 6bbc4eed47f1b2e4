"""Experiment configuration files: parsing, validation and object construction.

A config is a YAML mapping. Every field that fails validation is reported
with its dotted path (``learner.eta``, ``T_list[2]``) so that callers can
point at the offending line.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .adversary import GENERATORS
from .domain import Box, Stream
from .learner import GUESSES, MODES, VARIANTS, LearnerConfig, default_eta
from .oracle import (
    DEFAULT_GRID_BUDGET,
    GridOracle,
    LocalSearchOracle,
    Oracle,
    PWL1DOracle,
    grid_size,
    suggest_grid_h,
)
from .probes import SUITES

KINDS = ("regret-sweep", "probe-suite", "stability", "killer", "saddle", "oracle-audit")
ORACLES = ("pwl1d", "grid", "local_search")
PAYOFFS = ("bilinear", "hinge", "zero")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        self.message = message
        super().__init__(f"{field_path}: {message}")


@dataclass
class ExperimentConfig:
    """A validated config. ``raw`` keeps the mapping as written, with defaults filled in."""

    kind: str
    seed: int
    out: str
    raw: dict
    warnings: list = field(default_factory=list)

    @property
    def experiment_id(self) -> str:
        return str(self.raw.get("experiment_id", self.kind))

    @property
    def stream(self) -> Stream:
        return Stream(self.seed)

    def box(self, key: str = "box") -> Box:
        return build_box(self.raw[key])

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=True, default_flow_style=None)


# -- small typed getters ------------------------------------------------------


def _need(m: dict, key: str, path: str):
    if not isinstance(m, dict):
        raise ConfigError(path, "expected a mapping")
    if key not in m or m[key] is None:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return m[key]


def _int(v, path: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {v}")
    return int(v)


def _num(v, path: str, positive: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    v = float(v)
    if math.isnan(v):
        raise ConfigError(path, "NaN is not allowed")
    if positive and not v > 0:
        raise ConfigError(path, f"must be > 0, got {v}")
    return v


def _choice(v, options, path: str) -> str:
    if v not in options:
        raise ConfigError(path, f"expected one of {list(options)}, got {v!r}")
    return v


def _increasing_ints(v, path: str) -> list:
    if not isinstance(v, list) or not v:
        raise ConfigError(path, "expected a non-empty list of integers")
    out = [_int(x, f"{path}[{k}]", 1) for k, x in enumerate(v)]
    for k in range(1, len(out)):
        if out[k] <= out[k - 1]:
            raise ConfigError(f"{path}[{k}]", "T list must be strictly increasing")
    return out


# -- component builders -------------------------------------------------------


def build_box(spec) -> Box:
    if not isinstance(spec, dict) or "lo" not in spec or "hi" not in spec:
        raise ConfigError("box", "expected a mapping with lo and hi")
    lo, hi = np.atleast_1d(np.asarray(spec["lo"], dtype=float)), np.atleast_1d(np.asarray(spec["hi"], dtype=float))
    try:
        return Box(lo, hi)
    except ValueError as exc:
        raise ConfigError("box", str(exc)) from exc


def _check_box(raw: dict, key: str) -> Box:
    spec = _need(raw, key, "")
    if not isinstance(spec, dict):
        raise ConfigError(key, "expected a mapping with lo and hi")
    for side in ("lo", "hi"):
        v = _need(spec, side, key)
        items = v if isinstance(v, list) else [v]
        for k, x in enumerate(items):
            _num(x, f"{key}.{side}[{k}]" if isinstance(v, list) else f"{key}.{side}")
    try:
        return build_box(spec)
    except ConfigError as exc:
        raise ConfigError(key, exc.message) from exc


def build_oracle(spec: dict, stream: Stream | None = None) -> Oracle:
    name = spec["name"]
    if name == "pwl1d":
        return PWL1DOracle()
    if name == "grid":
        return GridOracle(float(spec["h"]), int(spec.get("budget", DEFAULT_GRID_BUDGET)))
    return LocalSearchOracle(int(spec.get("restarts", 8)), int(spec.get("steps", 200)), stream or Stream(0))


def _check_oracle(spec, path: str, box: Box, warnings: list) -> None:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a mapping with a name")
    name = _choice(_need(spec, "name", path), ORACLES, f"{path}.name")
    if name == "pwl1d" and box.d != 1:
        raise ConfigError(f"{path}.name", f"pwl1d needs a 1-d box, got d={box.d}")
    if name == "grid":
        h = _num(_need(spec, "h", path), f"{path}.h", positive=True)
        budget = _int(spec.get("budget", DEFAULT_GRID_BUDGET), f"{path}.budget", 1)
        n = grid_size(box, h)
        if n > budget:
            warnings.append({
                "field": f"{path}.h",
                "warning": "grid-budget-exceeded",
                "n_points": n,
                "budget": budget,
                "suggested_h": suggest_grid_h(box, budget),
            })
    if name == "local_search":
        _int(spec.get("restarts", 8), f"{path}.restarts", 1)
        _int(spec.get("steps", 200), f"{path}.steps", 1)


def _check_learner(spec, path: str, box: Box, warnings: list, allow_ftl: bool = True) -> None:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a mapping")
    variant = _choice(_need(spec, "variant", path), VARIANTS, f"{path}.variant")
    if variant == "ftl" and not allow_ftl:
        raise ConfigError(f"{path}.variant", "this experiment needs ftpl or oftpl")
    if variant != "ftl":
        eta = _need(spec, "eta", path)
        if eta != "default":
            _num(eta, f"{path}.eta", positive=True)
    _choice(spec.get("perturbation_mode", "fresh"), MODES, f"{path}.perturbation_mode")
    if variant == "oftpl":
        _choice(_need(spec, "guess_strategy", path), GUESSES, f"{path}.guess_strategy")
    _check_oracle(_need(spec, "oracle", path), f"{path}.oracle", box, warnings)


def build_learner(spec: dict, L: float, d: int, T: int, stream: Stream | None = None) -> LearnerConfig:
    """``eta: default`` resolves to ``default_eta(L, d, T)`` for the given horizon."""
    variant = spec["variant"]
    eta = spec.get("eta", 1.0)
    if variant == "ftl":
        eta = math.inf
    elif eta == "default":
        eta = default_eta(L, d, T)
    return LearnerConfig(
        variant=variant,
        eta=float(eta),
        oracle=build_oracle(spec["oracle"], stream),
        perturbation_mode=spec.get("perturbation_mode", "fresh"),
        guess_strategy=spec.get("guess_strategy"),
    )


def _check_adversary(spec, path: str) -> None:
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected a mapping with a name")
    _choice(_need(spec, "name", path), GENERATORS, f"{path}.name")
    if "D" in spec:
        _num(spec["D"], f"{path}.D", positive=True)
    if "block" in spec:
        _int(spec["block"], f"{path}.block", 1)


def _learners(raw: dict) -> dict:
    """``learners: {label: spec}`` or a single ``learner: spec`` (labelled by experiment id)."""
    if "learners" in raw:
        return raw["learners"]
    return {str(raw.get("experiment_id", raw["kind"])): raw["learner"]}


# -- top level ----------------------------------------------------------------


def validate(raw, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Schema and semantic checks; raises ``ConfigError`` naming the first bad field."""
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a mapping")
    raw = copy.deepcopy(raw)
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = out
    kind = _choice(_need(raw, "kind", ""), KINDS, "kind")
    seed_v = _int(_need(raw, "seed", ""), "seed", 0)
    out_v = raw.get("out", f"results/{kind}")
    if not isinstance(out_v, str):
        raise ConfigError("out", "expected a directory path")
    raw["out"] = out_v
    if "experiment_id" in raw and not isinstance(raw["experiment_id"], str):
        raise ConfigError("experiment_id", "expected a string")
    warnings: list = []
    raw["replications"] = _int(raw.get("replications", 1), "replications", 1)
    checker = _CHECKS[kind]
    checker(raw, warnings)
    return ExperimentConfig(kind, seed_v, out_v, raw, warnings)


def _check_game(raw: dict, warnings: list, allow_ftl: bool = True) -> Box:
    box = _check_box(raw, "box")
    _check_adversary(_need(raw, "adversary", ""), "adversary")
    if "learners" in raw:
        ls = raw["learners"]
        if not isinstance(ls, dict) or not ls:
            raise ConfigError("learners", "expected a non-empty mapping label -> learner")
        for label, spec in ls.items():
            _check_learner(spec, f"learners.{label}", box, warnings, allow_ftl)
    else:
        _check_learner(_need(raw, "learner", ""), "learner", box, warnings, allow_ftl)
    if "reference_oracle" in raw:
        _check_oracle(raw["reference_oracle"], "reference_oracle", box, warnings)
    return box


def _check_sweep(raw, warnings):
    _check_game(raw, warnings)
    _increasing_ints(_need(raw, "T_list", ""), "T_list")
    if "round_replications" in raw:
        _int(raw["round_replications"], "round_replications", 0)
    if "slope_range" in raw:
        rng = raw["slope_range"]
        if not isinstance(rng, list) or len(rng) != 2:
            raise ConfigError("slope_range", "expected [low, high]")
        lo, hi = (_num(v, f"slope_range[{k}]") for k, v in enumerate(rng))
        if lo > hi:
            raise ConfigError("slope_range", "low must not exceed high")
    if "min_r2" in raw:
        _num(raw["min_r2"], "min_r2")
    if not isinstance(raw.get("paired_check", False), bool):
        raise ConfigError("paired_check", "expected true or false")


def _check_killer(raw, warnings):
    _check_game(raw, warnings)
    if raw["adversary"]["name"] != "killer":
        raise ConfigError("adversary.name", "killer experiments need the killer adversary")
    _int(_need(raw, "T", ""), "T", 1)


def _check_stability(raw, warnings):
    box = _check_game(raw, warnings, allow_ftl=False)
    _int(_need(raw, "T", ""), "T", 1)
    etas = _need(raw, "eta_list", "")
    if not isinstance(etas, list) or not etas:
        raise ConfigError("eta_list", "expected a non-empty list of positive numbers")
    for k, e in enumerate(etas):
        _num(e, f"eta_list[{k}]", positive=True)
    if raw["replications"] < 30:
        raise ConfigError("replications", "the stability check needs >= 30 replications")
    if "diameter" in raw:
        _num(raw["diameter"], "diameter", positive=True)
    del box


def _check_probes(raw, warnings):
    box = _check_box(raw, "box")
    suites = _need(raw, "suites", "")
    if not isinstance(suites, list) or not suites:
        raise ConfigError("suites", f"expected a non-empty list drawn from {list(SUITES)}")
    for k, s in enumerate(suites):
        _choice(s, SUITES, f"suites[{k}]")
    _int(_need(raw, "n", ""), "n", 1)
    _check_oracle(_need(raw, "oracle", ""), "oracle", box, warnings)
    if "D" in raw:
        _num(raw["D"], "D", positive=True)
    if "btl" in raw:
        btl = raw["btl"]
        if not isinstance(btl, dict):
            raise ConfigError("btl", "expected a mapping")
        _int(_need(btl, "traces", "btl"), "btl.traces", 1)
        _int(_need(btl, "T", "btl"), "btl.T", 1)
        _int(btl.get("grid_points", 201), "btl.grid_points", 2)
        _num(_need(btl, "eta", "btl"), "btl.eta", positive=True)


def _check_saddle(raw, warnings):
    payoff = _need(raw, "payoff", "")
    if not isinstance(payoff, dict):
        raise ConfigError("payoff", "expected a mapping with a name")
    name = _choice(_need(payoff, "name", "payoff"), PAYOFFS, "payoff.name")
    bx = _check_box(raw, "box_x")
    by = _check_box(raw, "box_y")
    if name == "bilinear":
        A = _need(payoff, "A", "payoff")
        try:
            arr = np.atleast_2d(np.asarray(A, dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError("payoff.A", "expected a numeric matrix") from exc
        if arr.shape != (bx.d, by.d):
            raise ConfigError("payoff.A", f"shape {arr.shape} does not match boxes ({bx.d}, {by.d})")
    if name == "hinge":
        _num(_need(payoff, "D", "payoff"), "payoff.D", positive=True)
        if bx != by:
            raise ConfigError("box_y", "the hinge payoff needs identical boxes")
    _int(_need(raw, "T", ""), "T", 1)
    _check_learner(_need(raw, "learner_x", ""), "learner_x", bx, warnings, allow_ftl=False)
    _check_learner(_need(raw, "learner_y", ""), "learner_y", by, warnings, allow_ftl=False)
    _check_oracle(_need(raw, "reference_oracle", ""), "reference_oracle", bx, warnings)
    _check_oracle(raw["reference_oracle"], "reference_oracle", by, warnings)


def _check_audit(raw, warnings):
    box = _check_box(raw, "box")
    if box.d != 1:
        raise ConfigError("box", "the oracle audit compares against the exact 1-d oracle")
    hs = _need(raw, "grid_h", "")
    if not isinstance(hs, list) or not hs:
        raise ConfigError("grid_h", "expected a non-empty list of spacings")
    for k, h in enumerate(hs):
        _num(h, f"grid_h[{k}]", positive=True)
        _check_oracle({"name": "grid", "h": h}, f"grid_h[{k}]", box, warnings)
    _int(_need(raw, "n", ""), "n", 1)
    _num(raw.get("fine_h", 1e-4), "fine_h", positive=True)
    if "D" in raw:
        _num(raw["D"], "D", positive=True)


_CHECKS = {
    "regret-sweep": _check_sweep,
    "killer": _check_killer,
    "stability": _check_stability,
    "probe-suite": _check_probes,
    "saddle": _check_saddle,
    "oracle-audit": _check_audit,
}


def load(path, seed: int | None = None, out: str | None = None) -> ExperimentConfig:
    """Read and validate a YAML config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from exc
    return validate(raw, seed=seed, out=out)
