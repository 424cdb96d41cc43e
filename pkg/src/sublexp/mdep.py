"""Constructions specific to m-dependent sequences.

* residue classes: indices with equal residue mod (m+1) form independent
  subsequences, the device behind the moment inequality for m-dependent
  sums;
* the moment-inequality verifier itself (``rosenthal_check``), which
  evaluates the exact left side ``E[max_{k<=n} |S_k|^p]`` by a dynamic
  program whose state carries the running maximum, and reports the fitted
  constant against the three right-side terms;
* the reduction of an m-dependent sequence to a 1-dependent one by summing
  consecutive blocks of m coordinates;
* the three-part split of a stationary sum into full blocks, the m-wide
  gaps between them, and a tail;
* a stationarity check comparing shifted windows through a catalog of test
  functionals.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from . import engine
from .engine import Functional, SequenceModel
from .errors import ValidationError
from .laws import DiscreteLaw, ambiguity

# ---------------------------------------------------------------------------
# Residue classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidueDecomposition:
    """Partition of {1..k} into classes with equal index residue mod (m+1)."""

    m: int
    k: int
    classes: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        flat = sorted(i for cls in self.classes for i in cls)
        if flat != list(range(1, self.k + 1)):
            raise ValidationError("residue classes must partition 1..k")
        for cls in self.classes:
            if any(b - a != self.m + 1 for a, b in zip(cls, cls[1:])):
                raise ValidationError("class indices must be m+1 apart")


def residue_classes(m: int, k: int) -> ResidueDecomposition:
    if m < 0 or k < 1:
        raise ValidationError("need m >= 0 and k >= 1")
    classes = tuple(
        tuple(i for i in range(1, k + 1) if i % (m + 1) == j) for j in range(m + 1)
    )
    return ResidueDecomposition(m, k, classes)


# ---------------------------------------------------------------------------
# Moment-inequality verifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RosenthalReport:
    """Left side and the three right-side terms of the maximal inequality.

    ``term_variance`` and ``term_means`` already carry their outer powers
    (p/2 and p); ``fitted_C`` is reported, never asserted against a theory
    value, because the constant in the inequality is non-constructive.
    """

    p: float
    n: int
    m: int
    lhs: float
    term_moments: float
    term_variance: float
    term_means: float
    fitted_C: float

    def __post_init__(self) -> None:
        for name in ("lhs", "term_moments", "term_variance", "term_means"):
            if getattr(self, name) < -1e-12:
                raise ValidationError(f"{name} must be non-negative")

    @property
    def rhs_sum(self) -> float:
        return self.term_moments + self.term_variance + self.term_means


def rosenthal_check(
    model: SequenceModel,
    p: float,
    n: int,
    *,
    state_cap: int = engine.DEFAULT_STATE_CAP,
) -> RosenthalReport:
    """Exact ``E[max_{k<=n}|S_k|^p]`` against the three right-side terms."""
    if p < 2.0:
        raise ValidationError("rosenthal_check needs p >= 2")
    sub = model.prefix(n)
    f_max = Functional("abs_max_p", lambda x, _p=p: abs(x) ** _p, engine.GROWTH_P, p=p)
    lhs = engine.eval_sum(sub, f_max, track_max=True, state_cap=state_cap).upper

    abs_p = 0.0
    var_sum = 0.0
    mean_sum = 0.0
    for k in range(1, n + 1):
        abs_p += engine.eval_index(sub, k, lambda x, _p=p: abs(x) ** _p)[0]
        var_sum += engine.eval_index(sub, k, lambda x: x * x)[0]
        up, lo = engine.eval_index(sub, k, lambda x: x)
        mean_sum += abs(up) + abs(lo)
    term_variance = var_sum ** (p / 2.0)
    term_means = mean_sum**p
    rhs = abs_p + term_variance + term_means
    if rhs <= 0.0:
        raise ValidationError("degenerate model: all right-side terms vanish")
    return RosenthalReport(
        p=p, n=n, m=sub.m, lhs=lhs,
        term_moments=abs_p, term_variance=term_variance, term_means=term_means,
        fitted_C=lhs / rhs,
    )


# Deterministic battery -----------------------------------------------------

_LAW_MENU_CERTAIN = (
    DiscreteLaw((-1.0, 1.0), (0.5, 0.5)),
    DiscreteLaw((-1.0, 0.0, 1.0), (0.25, 0.5, 0.25)),
    DiscreteLaw((-2.0, 0.0, 2.0), (0.125, 0.75, 0.125)),
    DiscreteLaw((-0.5, 0.5), (0.5, 0.5)),
)
_LAW_MENU_UNCERTAIN = (
    (DiscreteLaw((-1.0, 1.0), (0.5, 0.5)), DiscreteLaw((-1.0, 1.0), (0.25, 0.75))),
    (DiscreteLaw((-1.0, 0.0, 1.0), (0.25, 0.5, 0.25)),
     DiscreteLaw((-1.0, 0.0, 1.0), (0.5, 0.25, 0.25))),
    (DiscreteLaw((-1.0, 1.0), (0.625, 0.375)), DiscreteLaw((-1.0, 1.0), (0.375, 0.625))),
)
_WEIGHT_MENU = {
    1: ((1.0, 1.0), (1.0, -1.0), (1.0, 0.5)),
    2: ((1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (0.5, 1.0, 0.5)),
}


@dataclass(frozen=True)
class BatteryInstance:
    ident: str
    model: SequenceModel
    m: int
    p: float
    n: int
    zero_mean: bool


def rosenthal_battery(seed: int = 20240901) -> tuple[BatteryInstance, ...]:
    """Deterministic battery of verifier instances (m <= 2, p in {2,3,4}).

    Composition is fixed by the seed so reports are byte-reproducible.
    Horizons shrink with m to keep the path-max dynamic programs at desk
    scale.
    """
    rng = random.Random(seed)
    instances: list[BatteryInstance] = []
    n_by_m = {0: (4, 6, 8), 1: (4, 6, 8), 2: (4, 5, 6)}
    for m in (0, 1, 2):
        for variant in range(9):
            zero_mean = variant % 3 != 2
            if zero_mean:
                laws = rng.sample(_LAW_MENU_CERTAIN, k=rng.choice((1, 2)))
                set_ = ambiguity(laws)
            else:
                set_ = ambiguity(rng.choice(_LAW_MENU_UNCERTAIN))
            if m == 0:
                build = lambda n, s=set_: SequenceModel.iid(s, n)
            else:
                w = rng.choice(_WEIGHT_MENU[m])
                build = lambda n, s=set_, w=w: SequenceModel.moving_window(s, w, n)
            for n in n_by_m[m]:
                for p in (2.0, 3.0, 4.0):
                    instances.append(
                        BatteryInstance(
                            ident=f"m{m}-v{variant}-n{n}-p{p:g}",
                            model=build(n),
                            m=m, p=p, n=n, zero_mean=zero_mean,
                        )
                    )
    return tuple(instances)


# ---------------------------------------------------------------------------
# Reduction to 1-dependence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZReduction:
    """Consecutive blocks of m coordinates; the block sums are 1-dependent.

    ``blocks`` are 1-based inclusive index ranges; the final (tail) block
    may be shorter than m, and ``k_n_prime`` counts blocks including an
    empty tail when m divides the horizon.
    """

    m: int
    k_n: int
    k_n_prime: int
    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        covered: list[int] = []
        for a, b in self.blocks:
            covered.extend(range(a, b + 1))
        if covered != list(range(1, self.k_n + 1)):
            raise ValidationError("Z blocks must partition 1..k_n in order")


def z_reduce(model: SequenceModel, m: int) -> ZReduction:
    if model.kind != engine.KIND_MOVING_WINDOW or m != model.m:
        raise ValidationError("z_reduce needs a moving-window model with matching m")
    if m < 1:
        raise ValidationError("z_reduce needs m >= 1")
    k_n = model.n
    k_prime = k_n // m + 1
    blocks = [(m * (k - 1) + 1, m * k) for k in range(1, k_prime)]
    tail_start = m * (k_prime - 1) + 1
    if tail_start <= k_n:
        blocks.append((tail_start, k_n))
    return ZReduction(m=m, k_n=k_n, k_n_prime=k_prime, blocks=tuple(blocks))


def z_block_second_moments(model: SequenceModel, red: ZReduction) -> list[tuple[float, float]]:
    """Upper/lower second moment of every Z block sum."""
    out = []
    for a, b in red.blocks:
        res = engine.eval_sum(model, engine.square(), indices=range(a, b + 1))
        out.append((res.upper, res.lower))
    return out


# ---------------------------------------------------------------------------
# Three-part split of a stationary sum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThreePartSplit:
    """Index masks and normalized upper second moments of the three parts."""

    n: int
    p_n: int
    m: int
    blocks_mask: tuple[int, ...]
    gaps_mask: tuple[int, ...]
    tail_mask: tuple[int, ...]
    a1_m2_over_n: float
    a2_m2_over_n: float
    a3_m2_over_n: float


def three_part_split(model: SequenceModel, n: int, p_n: int) -> ThreePartSplit:
    """Split ``S_n`` into q full blocks of length p_n, the m-gaps, and a tail.

    The q-th block ends at ``q (p_n + m)``; the tail starts right after it,
    which makes the three masks a partition of 1..n.
    """
    if model.kind != engine.KIND_MOVING_WINDOW:
        raise ValidationError("three_part_split needs a stationary moving-window model")
    if p_n < 1 or p_n + model.m > n:
        raise ValidationError("need 1 <= p_n and p_n + m <= n")
    m = model.m
    sub = model.prefix(n)
    q = n // (p_n + m)
    blocks = tuple(
        i * (p_n + m) + j for i in range(q) for j in range(1, p_n + 1)
    )
    gaps = tuple(
        i * (p_n + m) + j for i in range(q) for j in range(p_n + 1, p_n + m + 1)
    )
    tail = tuple(range(q * (p_n + m) + 1, n + 1))

    def m2(mask: tuple[int, ...]) -> float:
        if not mask:
            return 0.0
        return engine.eval_sum(sub, engine.square(), indices=mask).upper

    return ThreePartSplit(
        n=n, p_n=p_n, m=m,
        blocks_mask=blocks, gaps_mask=gaps, tail_mask=tail,
        a1_m2_over_n=m2(blocks) / n,
        a2_m2_over_n=m2(gaps) / n,
        a3_m2_over_n=m2(tail) / n,
    )


# ---------------------------------------------------------------------------
# Stationarity check
# ---------------------------------------------------------------------------


def _window_psis() -> tuple[tuple[str, "object"], ...]:
    fs = (engine.square(), engine.cosine(), engine.ramp(0.0), engine.identity())
    psis: list[tuple[str, object]] = [
        (f"sum->{f.name}", (lambda xs, _f=f.phi: _f(math.fsum(xs)))) for f in fs
    ]
    psis.append(("product", lambda xs: math.prod(xs)))
    return tuple(psis)


def stationarity_test(model: SequenceModel, shift: int, j: int) -> float:
    """Max catalog discrepancy between the windows (X_1..X_j) and its shift."""
    if shift < 0 or j < 1 or j + shift > model.n:
        raise ValidationError("need shift >= 0, j >= 1, j + shift <= n")
    worst = 0.0
    for _, psi in _window_psis():
        base = engine.eval_window(model, range(1, j + 1), psi)
        moved = engine.eval_window(model, range(1 + shift, j + shift + 1), psi)
        worst = max(worst, abs(base - moved))
    return worst
