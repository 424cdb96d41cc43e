"""Exact evaluation of sub-linear expectations of functionals of sums.

Two sequence models are supported:

* ``independent`` -- one ambiguity set per index; the coordinates form an
  independent sequence in the sequential sense (each new coordinate is
  independent of everything drawn before it).
* ``moving_window`` -- ``X_k = sum_j w_j * eps_{k+j}`` over i.i.d.-ambiguous
  innovations ``eps_1 .. eps_{n+m}``; the sequence is m-dependent by
  construction, with ``m = len(weights) - 1``.

The upper expectation of ``phi(sum_k X_k)`` is a supremum over *adaptive*
policies: the law governing each draw may be chosen as a function of all
previously realized values.  That supremum is computed exactly by backward
induction over reachable states ``(window, accumulated sum)``.  Reachable
sums are merged on a hashed grid (values rounded to 1e-12), which keeps the
recursion exact on designed lattice inputs while tolerating generic ones.

``oracle_policy_enum`` evaluates the same supremum by direct recursion over
full histories, with no state merging and payoffs recomputed from scratch;
it is the independent cross-check for the layered DP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .errors import GuardError, StateCapError, ValidationError
from .laws import AmbiguitySet

KIND_INDEPENDENT = "independent"
KIND_MOVING_WINDOW = "moving_window"

GROWTH_BOUNDED_LIPSCHITZ = "bounded_lipschitz"
GROWTH_QUADRATIC = "quadratic"
GROWTH_P = "p_growth"

#: Default cap on the total number of reachable DP states.
DEFAULT_STATE_CAP = 50_000_000

#: Default cap on the number of leaf paths in full-history recursions.
DEFAULT_PATH_CAP = 2_000_000

_KEY_DECIMALS = 12


def _canon(x: float) -> float:
    """Round onto the 1e-12 merge grid and normalize -0.0."""
    return round(x, _KEY_DECIMALS) + 0.0


@dataclass(frozen=True)
class Functional:
    """A scalar test function with its growth class.

    The growth tag drives which acceptance comparisons a functional takes
    part in (only bounded Lipschitz entries enter the PDE convergence
    sweeps); it has no effect on the exact finite evaluations.
    """

    name: str
    phi: Callable[[float], float]
    growth: str
    p: float | None = None

    def __post_init__(self) -> None:
        if self.growth not in (GROWTH_BOUNDED_LIPSCHITZ, GROWTH_QUADRATIC, GROWTH_P):
            raise ValidationError(f"unknown growth class {self.growth!r}")
        if self.growth == GROWTH_P and (self.p is None or self.p < 2.0):
            raise ValidationError("p_growth requires an exponent p >= 2")


def square() -> Functional:
    return Functional("square", lambda x: x * x, GROWTH_QUADRATIC)


def neg_square() -> Functional:
    return Functional("neg_square", lambda x: -(x * x), GROWTH_QUADRATIC)


def identity() -> Functional:
    return Functional("identity", lambda x: x, GROWTH_QUADRATIC)


def cosine() -> Functional:
    return Functional("cos", math.cos, GROWTH_BOUNDED_LIPSCHITZ)


def ramp(a: float) -> Functional:
    """Capped ramp ``min(1, (x - a)^+)``: bounded, 1-Lipschitz."""
    return Functional(
        f"ramp@{a:g}", lambda x, _a=a: min(1.0, max(x - _a, 0.0)),
        GROWTH_BOUNDED_LIPSCHITZ,
    )


def abs_power(p: float) -> Functional:
    if p < 2.0:
        raise ValidationError("abs_power requires p >= 2")
    return Functional(f"abspow@{p:g}", lambda x, _p=p: abs(x) ** _p, GROWTH_P, p=p)


def scaled(f: Functional, multiplier: float) -> Functional:
    """``phi(multiplier * s)`` with the original growth tag and name."""
    return Functional(f.name, lambda s, _f=f.phi, _c=multiplier: _f(_c * s), f.growth, f.p)


def negated(f: Functional) -> Functional:
    growth = f.growth if f.growth != GROWTH_P else GROWTH_P
    return Functional(f"-{f.name}", lambda s, _f=f.phi: -_f(s), growth, f.p)


def catalog() -> tuple[Functional, ...]:
    """The default test-function catalog used by experiments and sweeps.

    The shipped ramp sits at the origin: off-center ramps see the kink move
    against the lattice of reachable sums as n grows, which makes their CLT
    error oscillate at the 1e-4 scale instead of decreasing.  Other offsets
    stay available through ``ramp``/``catalog_by_name``.
    """
    return (
        square(),
        identity(),
        cosine(),
        ramp(0.0),
        abs_power(3.0),
    )


def bounded_lipschitz_catalog() -> tuple[Functional, ...]:
    return tuple(f for f in catalog() if f.growth == GROWTH_BOUNDED_LIPSCHITZ)


def catalog_by_name(name: str) -> Functional:
    for f in catalog():
        if f.name == name:
            return f
    if name.startswith("ramp@"):
        return ramp(float(name.split("@", 1)[1]))
    if name.startswith("abspow@"):
        return abs_power(float(name.split("@", 1)[1]))
    raise ValidationError(f"unknown functional {name!r}")


# ---------------------------------------------------------------------------
# Sequence models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceModel:
    """Triangular-array row: n coordinates, each scaled by ``scale``."""

    kind: str
    n: int
    scale: float = 1.0
    sets: tuple[AmbiguitySet, ...] = ()
    innovation: AmbiguitySet | None = None
    weights: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in (KIND_INDEPENDENT, KIND_MOVING_WINDOW):
            raise ValidationError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise ValidationError("horizon n must be >= 1")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValidationError("scale must be positive and finite")
        if self.kind == KIND_INDEPENDENT:
            if len(self.sets) != self.n:
                raise ValidationError("independent model needs one set per index")
            object.__setattr__(self, "sets", tuple(self.sets))
        else:
            if self.innovation is None:
                raise ValidationError("moving-window model needs an innovation set")
            weights = tuple(float(w) for w in self.weights)
            if not weights:
                raise ValidationError("moving-window weights must be non-empty")
            if any(not math.isfinite(w) for w in weights):
                raise ValidationError("weights must be finite")
            object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        """Dependence width: 0 for independent models."""
        if self.kind == KIND_INDEPENDENT:
            return 0
        return len(self.weights) - 1

    @property
    def steps(self) -> int:
        """Number of primitive draws (innovations for moving windows)."""
        return self.n if self.kind == KIND_INDEPENDENT else self.n + self.m

    def set_at(self, step: int) -> AmbiguitySet:
        """Ambiguity set of the 1-based primitive draw ``step``."""
        if self.kind == KIND_INDEPENDENT:
            return self.sets[step - 1]
        assert self.innovation is not None
        return self.innovation

    def prefix(self, M: int) -> "SequenceModel":
        """The model restricted to coordinates ``1..M``."""
        if not 1 <= M <= self.n:
            raise ValidationError(f"prefix length {M} outside 1..{self.n}")
        if self.kind == KIND_INDEPENDENT:
            return SequenceModel(self.kind, M, self.scale, self.sets[:M])
        return SequenceModel(
            self.kind, M, self.scale, innovation=self.innovation, weights=self.weights
        )

    @staticmethod
    def iid(set_: AmbiguitySet, n: int, scale: float = 1.0) -> "SequenceModel":
        return SequenceModel(KIND_INDEPENDENT, n, scale, sets=(set_,) * n)

    @staticmethod
    def independent(sets: Sequence[AmbiguitySet], scale: float = 1.0) -> "SequenceModel":
        return SequenceModel(KIND_INDEPENDENT, len(sets), scale, sets=tuple(sets))

    @staticmethod
    def moving_window(
        innovation: AmbiguitySet,
        weights: Sequence[float],
        n: int,
        scale: float = 1.0,
    ) -> "SequenceModel":
        return SequenceModel(
            KIND_MOVING_WINDOW, n, scale, innovation=innovation, weights=tuple(weights)
        )


@dataclass(frozen=True)
class EvalResult:
    upper: float
    lower: float
    state_count: int

    def __post_init__(self) -> None:
        if self.lower > self.upper + 1e-12:
            raise ValidationError("lower expectation exceeds upper")


# ---------------------------------------------------------------------------
# Layered dynamic program
# ---------------------------------------------------------------------------
#
# A state after t primitive draws is a flat tuple
#     window (last m innovation values) + (acc,) [+ (maxabs,)]
# where acc is the accumulated sum of completed, scaled (and optionally
# clipped) coordinate values.  Coordinate k of a moving-window model
# completes when innovation k+m has been drawn.


def _completes(model: SequenceModel, step: int) -> int | None:
    if model.kind == KIND_INDEPENDENT:
        return step
    k = step - model.m
    return k if k >= 1 else None


def _term(model: SequenceModel, window: tuple[float, ...], v: float,
          x_clip: float | None) -> float:
    if model.kind == KIND_INDEPENDENT:
        raw = v
    else:
        vals = window + (v,)
        raw = math.fsum(w * e for w, e in zip(model.weights, vals))
    x = model.scale * raw
    if x_clip is not None:
        x = min(max(x, -x_clip), x_clip)
    return x


def _transition(
    model: SequenceModel,
    state: tuple[float, ...],
    step: int,
    v: float,
    mask: frozenset[int] | None,
    x_clip: float | None,
    track_max: bool,
) -> tuple[float, ...]:
    m = model.m
    if track_max:
        window, acc, mx = state[:-2], state[-2], state[-1]
    else:
        window, acc, mx = state[:-1], state[-1], 0.0
    k = _completes(model, step)
    if k is not None and (mask is None or k in mask):
        acc = _canon(acc + _term(model, window, v, x_clip))
        if track_max:
            mx = max(mx, abs(acc))
    if model.kind == KIND_MOVING_WINDOW and m > 0:
        window = (window + (v,))[-m:]
    else:
        window = ()
    return window + ((acc, mx) if track_max else (acc,))


def _forward_layers(
    model: SequenceModel,
    mask: frozenset[int] | None,
    x_clip: float | None,
    track_max: bool,
    state_cap: int,
) -> list[list[tuple[float, ...]]]:
    init = (0.0, 0.0) if track_max else (0.0,)
    layers: list[list[tuple[float, ...]]] = [[init]]
    total = 1
    for step in range(1, model.steps + 1):
        set_ = model.set_at(step)
        nxt: dict[tuple[float, ...], None] = {}
        for state in layers[-1]:
            for law in set_.laws:
                for v, p in zip(law.values, law.probs):
                    if p == 0.0:
                        continue
                    nxt[_transition(model, state, step, v, mask, x_clip, track_max)] = None
        total += len(nxt)
        if total > state_cap:
            raise StateCapError(total, state_cap)
        layers.append(list(nxt))
    return layers


def _backward_values(
    model: SequenceModel,
    layers: list[list[tuple[float, ...]]],
    payoff: Callable[[tuple[float, ...]], float],
    mask: frozenset[int] | None,
    x_clip: float | None,
    track_max: bool,
) -> tuple[float, float]:
    values: dict[tuple[float, ...], tuple[float, float]] = {
        s: (payoff(s), payoff(s)) for s in layers[-1]
    }
    for step in range(model.steps, 0, -1):
        set_ = model.set_at(step)
        prev: dict[tuple[float, ...], tuple[float, float]] = {}
        for state in layers[step - 1]:
            up_best = -math.inf
            lo_best = math.inf
            for law in set_.laws:
                up_acc = 0.0
                lo_acc = 0.0
                for v, p in zip(law.values, law.probs):
                    if p == 0.0:
                        continue
                    nxt = _transition(model, state, step, v, mask, x_clip, track_max)
                    u, l = values[nxt]
                    up_acc += p * u
                    lo_acc += p * l
                up_best = max(up_best, up_acc)
                lo_best = min(lo_best, lo_acc)
            prev[state] = (up_best, lo_best)
        values = prev
    return values[layers[0][0]]


def eval_sum(
    model: SequenceModel,
    f: Functional,
    *,
    indices: Iterable[int] | None = None,
    x_clip: float | None = None,
    track_max: bool = False,
    state_cap: int = DEFAULT_STATE_CAP,
) -> EvalResult:
    """Upper and lower expectation of ``phi`` applied to the coordinate sum.

    ``indices`` restricts the sum to a subset of coordinates (default: all),
    ``x_clip`` clamps each coordinate to ``[-x_clip, x_clip]`` before
    accumulation, and ``track_max`` applies ``phi`` to the running maximum of
    ``|S_k|`` along completed prefixes instead of to the final sum.
    """
    mask = None if indices is None else frozenset(indices)
    if mask is not None and any(not 1 <= k <= model.n for k in mask):
        raise ValidationError("indices outside 1..n")
    if x_clip is not None and not x_clip > 0.0:
        raise ValidationError("x_clip must be > 0")
    layers = _forward_layers(model, mask, x_clip, track_max, state_cap)

    # state layout puts the payoff argument last: acc, or maxabs when tracked
    def payoff(state: tuple[float, ...]) -> float:
        return f.phi(state[-1])

    upper, lower = _backward_values(model, layers, payoff, mask, x_clip, track_max)
    return EvalResult(upper, lower, sum(len(layer) for layer in layers))


def Bn(model: SequenceModel, *, state_cap: int = DEFAULT_STATE_CAP) -> tuple[float, float]:
    """``(B_n, b_n)``: square roots of the upper/lower second moment of the sum."""
    res = eval_sum(model, square(), state_cap=state_cap)
    if res.lower < 0.0:
        # min over policies of a non-negative payoff cannot be negative
        raise AssertionError(f"negative lower second moment {res.lower!r}")
    return math.sqrt(res.upper), math.sqrt(res.lower)


# ---------------------------------------------------------------------------
# Full-history recursion: window functionals and the policy-enumeration oracle
# ---------------------------------------------------------------------------


def _history_value(
    sets: Sequence[AmbiguitySet],
    payoff: Callable[[tuple[float, ...]], float],
    maximize: bool,
) -> float:
    n_steps = len(sets)

    def rec(t: int, hist: tuple[float, ...]) -> float:
        if t == n_steps:
            return payoff(hist)
        best = -math.inf if maximize else math.inf
        for law in sets[t].laws:
            acc = 0.0
            for v, p in zip(law.values, law.probs):
                if p == 0.0:
                    continue
                acc += p * rec(t + 1, hist + (v,))
            if maximize:
                best = max(best, acc)
            else:
                best = min(best, acc)
        return best

    return rec(0, ())


def _guard_paths(sets: Sequence[AmbiguitySet], path_cap: int) -> None:
    paths = 1
    for s in sets:
        paths *= len(s.support)
        if paths > path_cap:
            raise GuardError(f"history recursion would exceed {path_cap} paths")


def eval_window(
    model: SequenceModel,
    indices: Sequence[int],
    psi: Callable[[tuple[float, ...]], float],
    *,
    lower: bool = False,
    x_clip: float | None = None,
    path_cap: int = DEFAULT_PATH_CAP,
) -> float:
    """Exact expectation of ``psi(X_{i1}, ..., X_{ij})`` for a few indices.

    Evaluated by recursion over the full history of the involved primitive
    draws (draws outside the span integrate out).  Intended for small index
    windows: cross moments, stationarity and independence checks.
    """
    idx = tuple(indices)
    if not idx or any(not 1 <= k <= model.n for k in idx):
        raise ValidationError("window indices must lie in 1..n")
    lo, hi = min(idx), max(idx)
    if model.kind == KIND_INDEPENDENT:
        involved = tuple(sorted(set(idx)))
        sets = [model.sets[k - 1] for k in involved]

        def payoff(hist: tuple[float, ...]) -> float:
            by_index = dict(zip(involved, hist))
            xs = []
            for k in idx:
                x = model.scale * by_index[k]
                if x_clip is not None:
                    x = min(max(x, -x_clip), x_clip)
                xs.append(x)
            return psi(tuple(xs))

    else:
        first, last = lo, hi + model.m
        assert model.innovation is not None
        sets = [model.innovation] * (last - first + 1)
        weights = model.weights

        def payoff(hist: tuple[float, ...]) -> float:
            xs = []
            for k in idx:
                raw = math.fsum(
                    w * hist[k + j - first] for j, w in enumerate(weights)
                )
                x = model.scale * raw
                if x_clip is not None:
                    x = min(max(x, -x_clip), x_clip)
                xs.append(x)
            return psi(tuple(xs))

    _guard_paths(sets, path_cap)
    return _history_value(sets, payoff, maximize=not lower)


def cross_moment_upper(
    model: SequenceModel,
    j: int,
    k: int,
    psi: Callable[[float, float], float],
) -> float:
    """``E[psi(X_j, X_k)]`` for nearby indices (``|j - k| <= m + 1``)."""
    if abs(j - k) > model.m + 1:
        raise ValidationError("cross moments are restricted to |j - k| <= m + 1")
    return eval_window(model, (j, k), lambda xs: psi(xs[0], xs[1]))


def cross_moment_lower(
    model: SequenceModel,
    j: int,
    k: int,
    psi: Callable[[float, float], float],
) -> float:
    return -cross_moment_upper(model, j, k, lambda a, b: -psi(a, b))


def eval_index(
    model: SequenceModel,
    k: int,
    phi: Callable[[float], float],
    *,
    x_clip: float | None = None,
) -> tuple[float, float]:
    """Upper and lower expectation of ``phi(X_k)`` (scaled, optionally clipped)."""
    up = eval_window(model, (k,), lambda xs: phi(xs[0]), x_clip=x_clip)
    lo = eval_window(model, (k,), lambda xs: phi(xs[0]), x_clip=x_clip, lower=True)
    return up, lo


def oracle_policy_enum(
    model: SequenceModel,
    f: Functional,
    *,
    max_n: int = 6,
    path_cap: int = DEFAULT_PATH_CAP,
) -> EvalResult:
    """Brute-force supremum over history-dependent law choices.

    Recurses over full histories of the primitive draws; at every history
    node the value is maximized (minimized for the lower bound) over the
    member laws, which enumerates all adaptive policies.  Payoffs are
    recomputed from the raw history, independently of the layered DP.
    """
    if model.n > max_n:
        raise GuardError(f"oracle guard: n={model.n} exceeds {max_n}")
    sets = [model.set_at(t) for t in range(1, model.steps + 1)]
    for s in sets:
        if len(s.laws) > 3:
            raise GuardError("oracle guard: more than 3 laws at one index")
        if any(len(law.values) > 4 for law in s.laws):
            raise GuardError("oracle guard: law support larger than 4 points")
    _guard_paths(sets, path_cap)

    if model.kind == KIND_INDEPENDENT:
        def payoff(hist: tuple[float, ...]) -> float:
            return f.phi(model.scale * math.fsum(hist))
    else:
        weights = model.weights

        def payoff(hist: tuple[float, ...]) -> float:
            total = 0.0
            for k in range(1, model.n + 1):
                total += math.fsum(
                    w * hist[k + j - 1] for j, w in enumerate(weights)
                )
            return f.phi(model.scale * total)

    upper = _history_value(sets, payoff, maximize=True)
    lower = _history_value(sets, payoff, maximize=False)
    return EvalResult(upper, lower, 0)
