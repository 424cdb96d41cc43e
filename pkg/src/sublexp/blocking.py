"""The blocking construction: sparse cuts turn 1-dependence into independence.

Given a 1-dependent row ``X_1..X_{k_n}``, an even block parameter ``p_n``
and the neighborhood weights

    beta_k = (E[X_{k-1}^2] + E[X_k^2] + E[X_{k+1}^2]) / B_n^2

(zero-extended at the boundary), cut indices are picked recursively: each
search window is the upper half of the next ``p_n`` indices and the cut is
the window's beta-minimizer (smallest index on ties).  The open intervals
between consecutive cuts are the big blocks ``H_i``; removing the cut
singletons leaves block sums ``Y_i`` that are independent, because
consecutive blocks are separated by at least one removed index.

The diagnostics are the quantities the limit argument drives to zero: the
beta mass on the cuts, the aggregated one-sided covariance corrections at
the cuts, the block second-moment totals against ``B_n^2``, and the mass of
the removed singleton sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from . import engine
from .engine import SequenceModel
from .errors import ValidationError

_REL_SLACK = 1e-9


def _index_m2(model: SequenceModel, k: int) -> float:
    """Upper E[X_k^2] with zero extension outside 1..n."""
    if k < 1 or k > model.n:
        return 0.0
    return engine.eval_index(model, k, lambda x: x * x)[0]


def compute_beta(model: SequenceModel, n: int) -> tuple[float, ...]:
    """Neighborhood second-moment weights ``beta_1..beta_{k_n}``."""
    sub = model.prefix(n)
    B2 = engine.eval_sum(sub, engine.square()).upper
    m2 = [0.0] + [_index_m2(sub, k) for k in range(1, n + 1)] + [0.0]
    return tuple((m2[k - 1] + m2[k] + m2[k + 1]) / B2 for k in range(1, n + 1))


def choose_pn(
    model: SequenceModel,
    n: int,
    tol: float = 0.1,
    p_max: int | None = None,
) -> int:
    """Largest even p with ``(p^4/B_n^2) sum_k E[(X_k^2 - B_n^2/p^4)^+] <= tol``.

    Searched over even p up to ``p_max`` (default: the even floor of
    sqrt(k_n)); falls back to 2 when no candidate qualifies.
    """
    if not tol > 0.0:
        raise ValidationError("tol must be > 0")
    sub = model.prefix(n)
    if p_max is None:
        p_max = max(2, (math.isqrt(n) // 2) * 2)
    if p_max < 2 or p_max % 2 != 0:
        raise ValidationError("p_max must be an even integer >= 2")
    B2 = engine.eval_sum(sub, engine.square()).upper
    for p in range(p_max, 1, -2):
        cut = B2 / p**4
        total = 0.0
        for k in range(1, n + 1):
            total += engine.eval_index(sub, k, lambda x, _c=cut: max(x * x - _c, 0.0))[0]
        if p**4 / B2 * total <= tol:
            return p
    return 2


@dataclass(frozen=True)
class BlockingPlan:
    """Cut indices, search windows, and blocks for one row of the array."""

    k_n: int
    p_n: int
    beta: tuple[float, ...]
    cuts: tuple[int, ...]          # g(1) .. g(h-1)
    windows: tuple[tuple[int, ...], ...]
    blocks: tuple[tuple[int, ...], ...]  # H_1 .. H_h; the last may be empty

    def __post_init__(self) -> None:
        if self.p_n < 2 or self.p_n % 2 != 0:
            raise ValidationError("p_n must be an even integer >= 2")
        if len(self.beta) != self.k_n:
            raise ValidationError("beta must have one entry per index")
        g = (0,) + self.cuts
        for a, b in zip(g, g[1:]):
            if not (a + self.p_n // 2 < b <= a + self.p_n):
                raise ValidationError(f"cut spacing violated at {b}")
        if self.cuts and self.cuts[-1] + self.p_n <= self.k_n:
            raise ValidationError("recursion stopped too early")
        if len(self.windows) != len(self.cuts):
            raise ValidationError("one search window per cut")
        for a, window in zip(g, self.windows):
            expected = tuple(range(a + self.p_n // 2 + 1, a + self.p_n + 1))
            if window != expected:
                raise ValidationError(f"window after cut {a} is not the upper half-step")
        seen = sorted(set(self.cuts) | {k for blk in self.blocks for k in blk})
        if seen != list(range(1, self.k_n + 1)) or len(self.blocks) != len(self.cuts) + 1:
            raise ValidationError("cuts and blocks must partition 1..k_n")

    @property
    def h(self) -> int:
        return len(self.blocks)

    @property
    def sentinel(self) -> int:
        """g(h) = k_n + 1."""
        return self.k_n + 1


def build_plan(model: SequenceModel, n: int, p_n: int) -> BlockingPlan:
    """Run the cut recursion; degenerates to a single block when k_n < p_n."""
    beta = compute_beta(model, n)
    if p_n < 2 or p_n % 2 != 0:
        raise ValidationError("p_n must be an even integer >= 2")
    g = [0]
    windows: list[tuple[int, ...]] = []
    while g[-1] + p_n <= n:
        window = tuple(range(g[-1] + p_n // 2 + 1, g[-1] + p_n + 1))
        best = min(beta[k - 1] for k in window)
        g.append(min(k for k in window if beta[k - 1] == best))
        windows.append(window)
    cuts = tuple(g[1:])
    bounds = cuts + (n + 1,)
    blocks = []
    prev = 0
    for b in bounds:
        blocks.append(tuple(range(prev + 1, b)))
        prev = b
    return BlockingPlan(
        k_n=n, p_n=p_n, beta=beta, cuts=cuts,
        windows=tuple(windows), blocks=tuple(blocks),
    )


@dataclass(frozen=True)
class BlockSequence:
    """The independent block-sum sequence ``Y_i = sum_{j in H_i} X_j``.

    Block marginals are never materialized as explicit law sets (the set of
    policy-achievable laws grows exponentially with the block length);
    every evaluation is delegated to the exact engine on the block's index
    window, which computes the same supremum.
    """

    model: SequenceModel
    plan: BlockingPlan

    def block_eval(self, i: int, phi: Callable[[float], float], *,
                   lower: bool = False) -> float:
        """Upper (or lower) expectation of ``phi(Y_i)``; empty blocks give phi(0)."""
        blk = self.plan.blocks[i - 1]
        if not blk:
            return phi(0.0)
        f = engine.Functional("block", phi, engine.GROWTH_QUADRATIC)
        res = engine.eval_sum(self.model, f, indices=blk)
        return res.lower if lower else res.upper

    def pair_eval(self, i: int, j: int,
                  psi: Callable[[float, float], float], *,
                  lower: bool = False) -> float:
        """Joint expectation of ``psi(Y_i, Y_j)`` for small adjacent blocks."""
        bi, bj = self.plan.blocks[i - 1], self.plan.blocks[j - 1]
        if not bi or not bj:
            raise ValidationError("pair_eval needs non-empty blocks")
        split = len(bi)

        def payoff(xs: tuple[float, ...]) -> float:
            return psi(math.fsum(xs[:split]), math.fsum(xs[split:]))

        return engine.eval_window(self.model, bi + bj, payoff, lower=lower)


def block_models(model: SequenceModel, plan: BlockingPlan) -> tuple[BlockSequence, tuple[int, ...]]:
    """The Y sequence plus the removed cut singletons.

    Requires a 1-dependent source (apply the Z reduction first for general
    m): only then does one removed index between consecutive blocks make
    the block sums independent.
    """
    if model.m > 1:
        raise ValidationError("block_models needs a 1-dependent model (m <= 1)")
    if model.n != plan.k_n:
        raise ValidationError("plan horizon does not match the model")
    return BlockSequence(model, plan), plan.cuts


@dataclass(frozen=True)
class BlockDiagnostics:
    """The vanishing quantities of the blocking argument, at one n."""

    sum_beta_cuts: float
    sum_delta_lo: float
    sum_delta_hi: float
    Btilde2_over_B2: float
    btilde2_over_B2: float
    removed_mass: float

    def __post_init__(self) -> None:
        fields = (
            self.sum_beta_cuts, self.sum_delta_lo, self.sum_delta_hi,
            self.Btilde2_over_B2, self.btilde2_over_B2, self.removed_mass,
        )
        if any(v < -1e-12 for v in fields):
            raise ValidationError("diagnostics must be non-negative")
        if self.removed_mass > self.sum_beta_cuts * (1.0 + _REL_SLACK) + 1e-15:
            raise ValidationError("removed mass exceeds the beta bound on the cuts")


def _delta(model: SequenceModel, k: int, B2: float, lower: bool) -> float:
    """One-sided covariance correction at index k, zero-extended neighbors."""
    cm = engine.cross_moment_lower if lower else engine.cross_moment_upper
    ev = engine.eval_index(model, k, lambda x: x * x)
    total = ev[1] if lower else ev[0]
    for nb in (k - 1, k + 1):
        if 1 <= nb <= model.n:
            total += 2.0 * cm(model, k, nb, lambda a, b: a * b)
    return total / B2


def diagnostics(model: SequenceModel, plan: BlockingPlan) -> BlockDiagnostics:
    sub = model.prefix(plan.k_n)
    B2 = engine.eval_sum(sub, engine.square()).upper
    seq = BlockSequence(sub, plan)
    Bt2 = sum(seq.block_eval(i, lambda y: y * y) for i in range(1, plan.h + 1))
    bt2 = sum(seq.block_eval(i, lambda y: y * y, lower=True) for i in range(1, plan.h + 1))
    if plan.cuts:
        removed = engine.eval_sum(sub, engine.square(), indices=plan.cuts).upper / B2
    else:
        removed = 0.0
    return BlockDiagnostics(
        sum_beta_cuts=sum(plan.beta[c - 1] for c in plan.cuts),
        sum_delta_lo=abs(sum(_delta(sub, c, B2, lower=True) for c in plan.cuts)),
        sum_delta_hi=abs(sum(_delta(sub, c, B2, lower=False) for c in plan.cuts)),
        Btilde2_over_B2=Bt2 / B2,
        btilde2_over_B2=bt2 / B2,
        removed_mass=removed,
    )
