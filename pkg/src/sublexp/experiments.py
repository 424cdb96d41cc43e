"""Experiment configuration, built-in reference models, and config loading.

Configs are plain YAML documents; the schema is documented in the README.
A model is given either explicitly (laws, weights, scaling rule) or by
naming a built-in family via ``model.builder``; built-ins may vary with the
row length n (the heavy-tailed family scales its tail mass like 1/n^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

import yaml

from . import conditions as cond
from .engine import SequenceModel
from .errors import ValidationError
from .laws import (
    AmbiguitySet,
    DiscreteLaw,
    ambiguity,
    bernoulli_pm1,
    centered_three_point_law,
)

MODES = ("eval", "clt_sweep", "gnormal_eval", "rosenthal", "blocking_inspect", "conditions")
SCALINGS = ("none", "inv_sqrt_n", "inv_n")

DEFAULT_N_LIST = (8, 16, 32, 48)
DEFAULT_FUNCTIONALS = ("cos", "ramp@0")


def _scale_for(rule: str, n: int) -> float:
    if rule == "none":
        return 1.0
    if rule == "inv_sqrt_n":
        return 1.0 / math.sqrt(n)
    if rule == "inv_n":
        return 1.0 / n
    raise ValidationError(f"unknown scaling rule {rule!r}")


# ---------------------------------------------------------------------------
# Built-in model families
# ---------------------------------------------------------------------------


def _stationary_1dep(n: int) -> SequenceModel:
    innovation = ambiguity(
        [centered_three_point_law(0.49), centered_three_point_law(1.0)]
    )
    return SequenceModel.moving_window(innovation, (1.0, 1.0), n)


def _iid_peng(n: int) -> SequenceModel:
    set_ = ambiguity([centered_three_point_law(0.49), centered_three_point_law(1.0)])
    return SequenceModel.iid(set_, n)


def _mean_uncertain_fail(n: int) -> SequenceModel:
    set_ = ambiguity([bernoulli_pm1(0.4), bernoulli_pm1(0.6)])
    return SequenceModel.iid(set_, n, scale=1.0 / math.sqrt(n))


HEAVY_POINT = 8.0
HEAVY_MASS_COEFF = 0.5


def _truncated_heavy(n: int) -> SequenceModel:
    """Symmetric lattice laws plus one heavy support point of mass ~1/n^2."""
    pi = HEAVY_MASS_COEFF / (n * n)
    laws = []
    for q in (0.49, 1.0):
        laws.append(
            DiscreteLaw(
                (-1.0, 0.0, 1.0, HEAVY_POINT),
                (q * (1 - pi) / 2, (1 - q) * (1 - pi), q * (1 - pi) / 2, pi),
            )
        )
    return SequenceModel.iid(ambiguity(laws), n, scale=1.0 / math.sqrt(n))


BUILDERS: Mapping[str, Callable[[int], SequenceModel]] = {
    "stationary-1dep": _stationary_1dep,
    "iid-peng": _iid_peng,
    "mean-uncertain-fail": _mean_uncertain_fail,
    "truncated-heavy": _truncated_heavy,
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    builder: str | None = None
    kind: str = "independent"
    scaling: str = "none"
    weights: tuple[float, ...] = ()
    laws: tuple[DiscreteLaw, ...] = ()

    def __post_init__(self) -> None:
        if self.builder is not None:
            if self.builder not in BUILDERS:
                raise ValidationError(f"unknown model builder {self.builder!r}")
            return
        if self.scaling not in SCALINGS:
            raise ValidationError(f"unknown scaling rule {self.scaling!r}")
        if not self.laws:
            raise ValidationError("explicit model needs at least one law")
        if self.kind == "moving_window" and not self.weights:
            raise ValidationError("moving-window model needs weights")

    def build(self, n: int) -> SequenceModel:
        if self.builder is not None:
            return BUILDERS[self.builder](n)
        set_ = AmbiguitySet(self.laws)
        scale = _scale_for(self.scaling, n)
        if self.kind == "moving_window":
            return SequenceModel.moving_window(set_, self.weights, n, scale)
        return SequenceModel.iid(set_, n, scale)


@dataclass(frozen=True)
class GnormalSettings:
    sigma_lo2: float | None = None  # None: use the variance-ratio plateau
    sigma_hi2: float = 1.0
    half_width: float = 8.0
    nx: int = 801
    time: float = 1.0


@dataclass(frozen=True)
class ConditionSettings:
    eps: tuple[float, ...] = cond.DEFAULT_EPS_GRID
    M: tuple[int, ...] | None = None
    p: tuple[float, ...] = cond.DEFAULT_P_GRID
    tau: float | None = None


@dataclass(frozen=True)
class BlockingSettings:
    pn_list: tuple[int, ...] | None = None  # None: choose_pn(tol) per n
    tol: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    mode: str
    model: ModelSpec
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    functionals: tuple[str, ...] = DEFAULT_FUNCTIONALS
    gnormal: GnormalSettings = field(default_factory=GnormalSettings)
    conditions: ConditionSettings = field(default_factory=ConditionSettings)
    blocking: BlockingSettings = field(default_factory=BlockingSettings)
    rosenthal_seed: int = 20240901
    peng_n: tuple[int, ...] = (8, 16, 32, 64)
    state_cap: int = 50_000_000
    mean_unc_flag: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValidationError("n_list must be non-empty and strictly increasing")
        if any(n < 1 for n in self.n_list):
            raise ValidationError("n_list entries must be >= 1")
        if self.blocking.pn_list is not None and len(self.blocking.pn_list) != len(self.n_list):
            raise ValidationError("pn_list must align with n_list")

    def model_for(self, n: int) -> SequenceModel:
        return self.model.build(n)


def reference_experiments() -> dict[str, ExperimentConfig]:
    """The built-in configs the acceptance experiments run."""
    return {
        "stationary-1dep": ExperimentConfig(
            name="stationary-1dep",
            mode="clt_sweep",
            model=ModelSpec(builder="stationary-1dep"),
            n_list=(8, 16, 32, 48),
            blocking=BlockingSettings(pn_list=(2, 4, 6, 8)),
        ),
        "iid-peng": ExperimentConfig(
            name="iid-peng",
            mode="clt_sweep",
            model=ModelSpec(builder="iid-peng"),
            n_list=(8, 16, 32, 48),
        ),
        "mean-uncertain-fail": ExperimentConfig(
            name="mean-uncertain-fail",
            mode="clt_sweep",
            model=ModelSpec(builder="mean-uncertain-fail"),
            n_list=(8, 16, 32),
        ),
        "truncated-heavy": ExperimentConfig(
            name="truncated-heavy",
            mode="clt_sweep",
            model=ModelSpec(builder="truncated-heavy"),
            n_list=(8, 16, 32, 48),
            conditions=ConditionSettings(tau=1.0),
        ),
    }


# ---------------------------------------------------------------------------
# YAML loading
# ---------------------------------------------------------------------------


def _law_from_mapping(raw: object) -> DiscreteLaw:
    if not isinstance(raw, Mapping) or "values" not in raw or "probs" not in raw:
        raise ValidationError("a law needs 'values' and 'probs' lists")
    return DiscreteLaw(tuple(raw["values"]), tuple(raw["probs"]))


def _model_spec(raw: object) -> ModelSpec:
    if not isinstance(raw, Mapping):
        raise ValidationError("'model' must be a mapping")
    if raw.get("builder") is not None:
        return ModelSpec(builder=str(raw["builder"]))
    laws_key = "innovation" if raw.get("kind") == "moving_window" else "laws"
    raw_laws = raw.get(laws_key) or raw.get("laws") or ()
    return ModelSpec(
        builder=None,
        kind=str(raw.get("kind", "independent")),
        scaling=str(raw.get("scaling", "none")),
        weights=tuple(float(w) for w in raw.get("weights", ())),
        laws=tuple(_law_from_mapping(law) for law in raw_laws),
    )


def config_from_mapping(raw: Mapping, *, default_name: str = "experiment") -> ExperimentConfig:
    if not isinstance(raw, Mapping):
        raise ValidationError("config root must be a mapping")
    unknown = set(raw) - {
        "name", "mode", "model", "n_list", "functionals", "gnormal",
        "conditions", "blocking", "rosenthal_seed", "peng_n", "state_cap",
        "mean_unc_flag",
    }
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "model" not in raw:
        raise ValidationError("config needs a 'model' section")
    gn = raw.get("gnormal", {}) or {}
    cn = raw.get("conditions", {}) or {}
    bl = raw.get("blocking", {}) or {}
    cfg = ExperimentConfig(
        name=str(raw.get("name", default_name)),
        mode=str(raw.get("mode", "eval")),
        model=_model_spec(raw["model"]),
        n_list=tuple(int(n) for n in raw.get("n_list", DEFAULT_N_LIST)),
        functionals=tuple(str(f) for f in raw.get("functionals", DEFAULT_FUNCTIONALS)),
        gnormal=GnormalSettings(
            sigma_lo2=None if gn.get("sigma_lo2") is None else float(gn["sigma_lo2"]),
            sigma_hi2=float(gn.get("sigma_hi2", 1.0)),
            half_width=float(gn.get("half_width", 8.0)),
            nx=int(gn.get("nx", 801)),
            time=float(gn.get("time", 1.0)),
        ),
        conditions=ConditionSettings(
            eps=tuple(float(e) for e in cn.get("eps", cond.DEFAULT_EPS_GRID)),
            M=None if cn.get("M") is None else tuple(int(m) for m in cn["M"]),
            p=tuple(float(p) for p in cn.get("p", cond.DEFAULT_P_GRID)),
            tau=None if cn.get("tau") is None else float(cn["tau"]),
        ),
        blocking=BlockingSettings(
            pn_list=None if bl.get("pn_list") is None else tuple(int(p) for p in bl["pn_list"]),
            tol=float(bl.get("tol", 0.1)),
        ),
        rosenthal_seed=int(raw.get("rosenthal_seed", 20240901)),
        peng_n=tuple(int(n) for n in raw.get("peng_n", (8, 16, 32, 64))),
        state_cap=int(raw.get("state_cap", 50_000_000)),
        mean_unc_flag=float(raw.get("mean_unc_flag", 0.5)),
    )
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ValidationError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raise ValidationError("config file is empty")
    return config_from_mapping(raw, default_name=p.stem)


def resolve_config(config: str | None, experiment: str | None) -> ExperimentConfig:
    """Resolve the --config / --experiment pair into one config."""
    if (config is None) == (experiment is None):
        raise ValidationError("give exactly one of --config PATH or --experiment NAME")
    if config is not None:
        return load_config(config)
    refs = reference_experiments()
    if experiment not in refs:
        raise ValidationError(
            f"unknown experiment {experiment!r}; available: {sorted(refs)}"
        )
    return refs[experiment]


def with_overrides(
    cfg: ExperimentConfig,
    *,
    grid_nx: int | None = None,
    grid_L: float | None = None,
    state_cap: int | None = None,
    tol: float | None = None,
) -> ExperimentConfig:
    gn = cfg.gnormal
    if grid_nx is not None or grid_L is not None:
        gn = replace(
            gn,
            nx=grid_nx if grid_nx is not None else gn.nx,
            half_width=grid_L if grid_L is not None else gn.half_width,
        )
    bl = cfg.blocking if tol is None else replace(cfg.blocking, tol=tol)
    return replace(
        cfg,
        gnormal=gn,
        blocking=bl,
        state_cap=state_cap if state_cap is not None else cfg.state_cap,
    )
