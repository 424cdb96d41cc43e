"""Finite-n diagnostics for every hypothesis of the limit theorems.

Each asymptotic hypothesis ("-> 0", "= O(1)", "-> r") is reported as the
exact value of the displayed expression at one n; sweeps over n and fitted
log-n trend slopes live in the CLI layer.  Nothing here claims a limit,
only numbers.

Normalization: ``B_n^2`` is the upper second moment of the full sum (the
array-theorem convention).  The truncated sub-report switches to
``B_n^2 = sum_k E[(X_k^(tau))^2]`` as the truncated theorems require.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import engine
from .engine import SequenceModel
from .errors import ValidationError

DEFAULT_EPS_GRID = (0.05, 0.1, 0.25, 0.5)
DEFAULT_P_GRID = (2.0, 3.0, 4.0)


def default_M_grid(n: int) -> tuple[int, ...]:
    grid = sorted({max(1, n // 4), max(1, n // 2), n})
    return tuple(grid)


@dataclass(frozen=True)
class TruncatedProfile:
    """Hypotheses recomputed on clamped coordinates at level tau."""

    tau: float
    B_n2: float
    mean_unc: float
    m2_ratio: float
    var_ratio: Mapping[int, float]


@dataclass(frozen=True)
class ConditionReport:
    n: int
    lindeberg: Mapping[float, float]
    mean_unc: float
    m2_ratio: float
    var_ratio: Mapping[int, float]
    pth: Mapping[float, float]
    cap_tail: Mapping[float, float]
    trunc: TruncatedProfile | None = None

    def __post_init__(self) -> None:
        negatives = [v for v in self.lindeberg.values() if v < -1e-12]
        negatives += [v for v in self.cap_tail.values() if v < -1e-12]
        if self.mean_unc < -1e-12 or negatives:
            raise ValidationError("condition values must be non-negative")
        for v in self.var_ratio.values():
            if not math.isnan(v) and not -1e-12 <= v <= 1.0 + 1e-12:
                raise ValidationError("variance ratios must lie in [0, 1]")


def _B2(model: SequenceModel, n: int) -> float:
    return engine.eval_sum(model.prefix(n), engine.square()).upper


def lindeberg(model: SequenceModel, n: int, eps: float) -> float:
    """``(1/B_n^2) sum_k E[(X_k^2 - eps B_n^2)^+]``."""
    if eps <= 0.0:
        raise ValidationError("eps must be > 0")
    sub = model.prefix(n)
    B2 = _B2(model, n)
    cut = eps * B2
    total = 0.0
    for k in range(1, n + 1):
        total += engine.eval_index(sub, k, lambda x, _c=cut: max(x * x - _c, 0.0))[0]
    return total / B2


def mean_uncertainty(model: SequenceModel, n: int) -> float:
    """``(1/B_n) sum_k (|E[X_k]| + |e[X_k]|)``, on the un-centered coordinates."""
    sub = model.prefix(n)
    B = math.sqrt(_B2(model, n))
    total = 0.0
    for k in range(1, n + 1):
        up, lo = engine.eval_index(sub, k, lambda x: x)
        total += abs(up) + abs(lo)
    return total / B


def m2_ratio(model: SequenceModel, n: int) -> float:
    """``(1/B_n^2) sum_k E[X_k^2]`` (the O(1) hypothesis)."""
    sub = model.prefix(n)
    B2 = _B2(model, n)
    return sum(engine.eval_index(sub, k, lambda x: x * x)[0] for k in range(1, n + 1)) / B2


def variance_ratio(model: SequenceModel, n: int, M: int) -> float:
    """Lower-to-upper second-moment ratio of the M-prefix sum.

    A degenerate prefix (upper second moment zero) has no ratio; NaN marks
    the condition-undefined outcome.
    """
    if not 1 <= M <= n:
        raise ValidationError("need 1 <= M <= n")
    res = engine.eval_sum(model.prefix(M), engine.square())
    if res.upper <= 0.0:
        return math.nan
    return res.lower / res.upper


def pth_moment(model: SequenceModel, n: int, p: float) -> float:
    """``(1/B_n^p) sum_k E[|X_k|^p]`` (the p-growth replacement hypothesis)."""
    if p < 2.0:
        raise ValidationError("need p >= 2")
    sub = model.prefix(n)
    B = math.sqrt(_B2(model, n))
    total = 0.0
    for k in range(1, n + 1):
        total += engine.eval_index(sub, k, lambda x, _p=p: abs(x) ** _p)[0]
    return total / B**p


def capacity_tail(model: SequenceModel, n: int, eps: float) -> float:
    """``sum_k V(|X_k| > eps)`` via the exact policy supremum per index."""
    if eps <= 0.0:
        raise ValidationError("eps must be > 0")
    sub = model.prefix(n)
    total = 0.0
    for k in range(1, n + 1):
        total += engine.eval_window(
            sub, (k,), lambda xs, _e=eps: 1.0 if abs(xs[0]) > _e else 0.0
        )
    return total


def truncated_B2(model: SequenceModel, n: int, tau: float) -> float:
    """``sum_k E[(X_k^(tau))^2]``, the truncated-theorem normalizer."""
    if tau <= 0.0:
        raise ValidationError("tau must be > 0")
    sub = model.prefix(n)
    return sum(
        engine.eval_index(sub, k, lambda x: x * x, x_clip=tau)[0] for k in range(1, n + 1)
    )


def truncated_profile(
    model: SequenceModel, n: int, tau: float,
    M_grid: Sequence[int] | None = None,
) -> TruncatedProfile:
    sub = model.prefix(n)
    B2 = truncated_B2(model, n, tau)
    B = math.sqrt(B2)
    mean_sum = 0.0
    m2_sum = 0.0
    for k in range(1, n + 1):
        up, lo = engine.eval_index(sub, k, lambda x: x, x_clip=tau)
        mean_sum += abs(up) + abs(lo)
        m2_sum += engine.eval_index(sub, k, lambda x: x * x, x_clip=tau)[0]
    ratios: dict[int, float] = {}
    for M in M_grid if M_grid is not None else default_M_grid(n):
        res = engine.eval_sum(model.prefix(M), engine.square(), x_clip=tau)
        ratios[M] = res.lower / res.upper if res.upper > 0.0 else math.nan
    return TruncatedProfile(
        tau=tau, B_n2=B2, mean_unc=mean_sum / B, m2_ratio=m2_sum / B2, var_ratio=ratios
    )


def build_report(
    model: SequenceModel,
    n: int,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    M_grid: Sequence[int] | None = None,
    p_grid: Sequence[float] = DEFAULT_P_GRID,
    tau: float | None = None,
) -> ConditionReport:
    Ms = tuple(M_grid) if M_grid is not None else default_M_grid(n)
    return ConditionReport(
        n=n,
        lindeberg={eps: lindeberg(model, n, eps) for eps in eps_grid},
        mean_unc=mean_uncertainty(model, n),
        m2_ratio=m2_ratio(model, n),
        var_ratio={M: variance_ratio(model, n, M) for M in Ms},
        pth={p: pth_moment(model, n, p) for p in p_grid},
        cap_tail={eps: capacity_tail(model, n, eps) for eps in eps_grid},
        trunc=truncated_profile(model, n, tau, Ms) if tau is not None else None,
    )


def trend_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(value) against log(n); NaN if not positive."""
    pairs = [(n, v) for n, v in zip(ns, values) if v > 0.0]
    if len(pairs) < 2:
        return math.nan
    xs = [math.log(n) for n, _ in pairs]
    ys = [math.log(v) for _, v in pairs]
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return math.nan
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / sxx
