"""The G-normal distribution N(0, [sigma_lo^2, sigma_hi^2]), two ways.

``solve_gheat`` integrates the fully nonlinear heat equation

    du/dt = (1/2) * G(d2u/dx2),    u(0, x) = phi(x),
    G(a)  = sigma_hi2 * a    for a >= 0,
            sigma_lo2 * a    for a < 0,

with a monotone explicit finite-difference scheme and returns u(t, 0),
which is the upper expectation of ``phi`` under the G-normal law.

``peng_oracle`` evaluates the same quantity through the central limit
recursion: n i.i.d. coordinates with the two-point extremal ambiguity set
{+-sigma w.p. 1/2 : sigma in {sigma_lo, sigma_hi}} have certain mean zero and
second moment interval [sigma_lo2, sigma_hi2]; the exact dynamic program for
``phi(S_n / sqrt(n))`` converges to the PDE value as n grows.

``gnormal_reference`` is a third, quadrature-based cross-check valid only
for test functions that are convex or concave on the whole grid domain: the
extremal law is then the classical Gaussian at the appropriate endpoint of
the variance interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import PDENumericsError, PDEStabilityError, ValidationError
from .laws import ambiguity, two_point_law

#: Extra half-width beyond the diffusion range so that catalog test
#: functions keep their kinks well inside the domain.
SUPPORT_MARGIN = 1.0

_NAN_CHECK_EVERY = 200


@dataclass(frozen=True)
class GParams:
    """Variance interval ``[sigma_lo2, sigma_hi2]`` of the G-normal law."""

    sigma_lo2: float
    sigma_hi2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.sigma_lo2 <= self.sigma_hi2 < math.inf):
            raise ValidationError("need 0 <= sigma_lo2 <= sigma_hi2 < inf")


def G(alpha: float, p: GParams) -> float:
    """``sigma_hi2 * a^+ - sigma_lo2 * a^-`` with ``a^- = max(-a, 0)``.

    Positively homogeneous and consistent with G(1) = upper variance,
    G(-1) = -(lower variance).
    """
    return p.sigma_hi2 * alpha if alpha >= 0.0 else p.sigma_lo2 * alpha


@dataclass(frozen=True)
class PDEGrid:
    """Uniform grid on ``[-half_width, half_width]`` with explicit step dt."""

    half_width: float
    nx: int
    dt: float

    def __post_init__(self) -> None:
        if not (self.half_width > 0.0 and math.isfinite(self.half_width)):
            raise ValidationError("half_width must be positive and finite")
        if self.nx < 3:
            raise ValidationError("need at least 3 spatial points")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValidationError("dt must be positive and finite")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.nx - 1)

    def refined(self) -> "PDEGrid":
        """Halve dx and quarter dt."""
        return PDEGrid(self.half_width, 2 * self.nx - 1, self.dt / 4.0)

    def check(self, p: GParams) -> None:
        if self.dt * p.sigma_hi2 / self.dx**2 > 0.5 + 1e-12:
            raise PDEStabilityError(
                f"dt*sigma_hi2/dx^2 = {self.dt * p.sigma_hi2 / self.dx**2:.6g} > 0.5"
            )
        needed = 6.0 * math.sqrt(p.sigma_hi2) + SUPPORT_MARGIN
        if self.half_width < needed - 1e-12:
            raise ValidationError(
                f"half_width {self.half_width} too small; need >= {needed:.3g}"
            )


def default_grid(p: GParams, half_width: float = 8.0, nx: int = 801,
                 safety: float = 0.9) -> PDEGrid:
    dx = 2.0 * half_width / (nx - 1)
    if p.sigma_hi2 > 0.0:
        dt = safety * dx**2 / (2.0 * p.sigma_hi2)
    else:
        dt = safety * dx**2 / 2.0
    return PDEGrid(half_width, nx, dt)


def solve_gheat(f: engine.Functional, p: GParams, grid: PDEGrid,
                t: float = 1.0) -> float:
    """Upper G-normal expectation of ``f`` by explicit time stepping to ``t``.

    Each update is ``u_i += dt * 0.5 * G(second difference / dx^2)``; the
    stability bound makes the update monotone in every stencil value.  The
    boundary nodes use a zero second difference (linear extrapolation), so
    they stay at their initial values.  The step count is chosen so the
    integration lands exactly on ``t``.
    """
    if not (t > 0.0 and math.isfinite(t)):
        raise ValidationError("time horizon must be positive and finite")
    grid.check(p)
    x = np.linspace(-grid.half_width, grid.half_width, grid.nx)
    u = np.array([f.phi(float(xi)) for xi in x], dtype=float)
    if not np.isfinite(u).all():
        raise PDENumericsError("initial data is not finite on the grid")

    n_steps = max(1, math.ceil(t / grid.dt - 1e-12))
    dt = t / n_steps
    inv_dx2 = 1.0 / grid.dx**2
    for step in range(n_steps):
        d2 = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        flux = np.where(d2 >= 0.0, p.sigma_hi2 * d2, p.sigma_lo2 * d2)
        u[1:-1] += dt * 0.5 * flux
        if step % _NAN_CHECK_EVERY == 0 and not np.isfinite(u).all():
            raise PDENumericsError(f"non-finite values after step {step}")
    if not np.isfinite(u).all():
        raise PDENumericsError("non-finite values at final time")
    return float(np.interp(0.0, x, u))


def peng_oracle(f: engine.Functional, p: GParams, n: int,
                *, state_cap: int = engine.DEFAULT_STATE_CAP) -> float:
    """Upper expectation of ``f`` via the n-step two-point CLT recursion."""
    if n < 1:
        raise ValidationError("peng_oracle needs n >= 1")
    sigmas = sorted({math.sqrt(p.sigma_lo2), math.sqrt(p.sigma_hi2)})
    set_ = ambiguity(two_point_law(s) for s in sigmas)
    model = engine.SequenceModel.iid(set_, n)
    f_scaled = engine.scaled(f, 1.0 / math.sqrt(n))
    return engine.eval_sum(model, f_scaled, state_cap=state_cap).upper


def _shape_on_grid(f: engine.Functional, half_width: float,
                   nx: int = 401) -> str:
    """Classify ``f`` as 'convex', 'concave', or 'neither' on the domain."""
    x = np.linspace(-half_width, half_width, nx)
    y = np.array([f.phi(float(xi)) for xi in x], dtype=float)
    d2 = y[2:] - 2.0 * y[1:-1] + y[:-2]
    tol = 1e-9 * max(1.0, float(np.abs(y).max()))
    convex = bool((d2 >= -tol).all())
    concave = bool((d2 <= tol).all())
    if convex:
        return "convex"
    if concave:
        return "concave"
    return "neither"


def gnormal_reference(f: engine.Functional, p: GParams, *,
                      half_width: float = 8.0, nodes: int = 96) -> float:
    """Gauss-Hermite value of the extremal classical Gaussian.

    For convex ``f`` the upper G-normal expectation is the classical
    expectation at the upper variance; for concave ``f``, at the lower
    variance.  Everything else is rejected.  Callers must treat the result
    as a hypothesis to validate against ``solve_gheat``, not as ground
    truth.
    """
    if nodes < 64:
        raise ValidationError("use at least 64 quadrature nodes")
    shape = _shape_on_grid(f, half_width)
    if shape == "neither":
        raise ValidationError(
            f"{f.name} is neither convex nor concave on [-{half_width}, {half_width}]"
        )
    var = p.sigma_hi2 if shape == "convex" else p.sigma_lo2
    if var == 0.0:
        return f.phi(0.0)
    ts, ws = np.polynomial.hermite.hermgauss(nodes)
    scale = math.sqrt(2.0 * var)
    vals = np.array([f.phi(float(scale * t)) for t in ts], dtype=float)
    return float(np.dot(ws, vals) / math.sqrt(math.pi))
