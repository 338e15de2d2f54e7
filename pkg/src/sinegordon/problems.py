"""The experiment library: initial data, domains, and exact solutions.

Each factory returns an immutable :class:`Problem`.  Factories with an exact
solution verify on construction that it reproduces the initial data: values
directly, velocity through a 6th-order finite-difference probe in time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Boundary, Grid, make_grid
from .operators import BoundaryValues


@dataclass(frozen=True)
class Problem:
    """Initial-value problem descriptor on a rectangle.

    ``f`` and ``g`` are the initial field and velocity as functions of
    ``(x, y)``; ``exact`` (optional) the solution as ``(x, y, t)``;
    ``exact_v`` (optional) its time derivative for velocity-error reporting.
    ``display_transform`` maps the field for emitted snapshots (the soliton
    experiments plot ``sin(u/2)``); ``mirror_axes`` names the domain midlines
    the emitted field may be reflected across.
    """

    name: str
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    dim: int
    boundary: Boundary
    f: Callable
    g: Callable
    exact: Callable | None = None
    exact_v: Callable | None = None
    display_transform: Callable | None = None
    mirror_axes: tuple[str, ...] = ()

    def grid(self, n1: int, n2: int | None = None) -> Grid:
        """Mesh the problem domain; ``n2`` defaults to ``n1`` in 2D, 1 in 1D."""
        if self.dim == 1:
            if n2 not in (None, 1):
                raise ValueError(f"{self.name} is one-dimensional; n2 must be 1")
            return make_grid(self.x_lo, self.x_hi, n1=n1, n2=1, boundary=self.boundary)
        if n2 is None:
            n2 = n1
        return make_grid(self.x_lo, self.x_hi, self.y_lo, self.y_hi,
                         n1=n1, n2=n2, boundary=self.boundary)

    def sample_exact(self, grid: Grid, t: float) -> np.ndarray:
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        X, Y = grid.meshgrid
        return np.asarray(self.exact(X, Y, t), dtype=float)


class DirichletBoundary:
    """Per-time-level boundary data for Dirichlet-exact runs.

    Supplies virtual values on the high edges and pins the in-array low
    edges from the problem's exact solution.
    """

    def __init__(self, problem: Problem, grid: Grid):
        if problem.exact is None:
            raise ValueError("Dirichlet-exact runs need an exact solution")
        if grid.boundary is not Boundary.DIRICHLET_EXACT:
            raise ValueError("grid does not use Dirichlet-exact boundaries")
        self.problem = problem
        self.grid = grid

    def values(self, t: float) -> BoundaryValues:
        g = self.grid
        right = np.asarray(self.problem.exact(g.x_hi, g.y, t), dtype=float)
        top = np.asarray(self.problem.exact(g.x, g.y_hi, t), dtype=float)
        return BoundaryValues(right=right, top=top)

    def pin(self, U: np.ndarray, t: float) -> np.ndarray:
        """Overwrite the pinned low edges of ``U`` (in place) with exact values."""
        g = self.grid
        U[0, :] = self.problem.exact(g.x, g.y_lo, t)
        U[:, 0] = self.problem.exact(g.x_lo, g.y, t)
        return U


def _check_initial_consistency(p: Problem, n_probe: int = 9) -> None:
    """exact(x,y,0) must equal f and its 6th-order time derivative must equal g."""
    xs = np.linspace(p.x_lo, p.x_hi, n_probe)
    ys = np.linspace(p.y_lo, p.y_hi, n_probe) if p.dim == 2 else np.zeros(n_probe)
    X, Y = np.meshgrid(xs, ys)
    f_err = np.max(np.abs(p.exact(X, Y, 0.0) - p.f(X, Y)))
    dt = 5e-3
    # 6th-order central first derivative at t = 0
    w = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / (60.0 * dt)
    du = sum(wk * p.exact(X, Y, k * dt) for wk, k in zip(w, range(-3, 4)))
    g_err = np.max(np.abs(du - p.g(X, Y)))
    if f_err > 1e-12 or g_err > 1e-12:
        raise ValueError(
            f"{p.name}: exact solution inconsistent with initial data "
            f"(|f| mismatch {f_err:.2e}, |g| mismatch {g_err:.2e})"
        )


def _sin_half(u):
    return np.sin(0.5 * u)


def double_pole_1d() -> Problem:
    """1D double-pole solution: starts from rest with velocity 4*sech(x)."""

    def f(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    def g(x, y):
        return 4.0 / np.cosh(x)

    def exact(x, y, t):
        return 4.0 * np.arctan(t / np.cosh(x))

    def exact_v(x, y, t):
        s = 1.0 / np.cosh(x)
        return 4.0 * s / (1.0 + (t * s) ** 2)

    p = Problem("double-pole-1d", -20.0, 20.0, 0.0, 1.0, 1, Boundary.PERIODIC,
                f, g, exact=exact, exact_v=exact_v)
    _check_initial_consistency(p)
    return p


def line_kink_2d() -> Problem:
    """2D traveling line kink on [-7, 7]^2 with exact Dirichlet boundary data."""

    def f(x, y):
        return 4.0 * np.arctan(np.exp(x + y))

    def g(x, y):
        s = np.asarray(x, dtype=float) + y
        return -4.0 * np.exp(s) / (1.0 + np.exp(2.0 * s))

    def exact(x, y, t):
        return 4.0 * np.arctan(np.exp(x + y - t))

    def exact_v(x, y, t):
        s = np.asarray(x, dtype=float) + y - t
        return -4.0 * np.exp(s) / (1.0 + np.exp(2.0 * s))

    p = Problem("line-kink-2d", -7.0, 7.0, -7.0, 7.0, 2, Boundary.DIRICHLET_EXACT,
                f, g, exact=exact, exact_v=exact_v)
    _check_initial_consistency(p)
    return p


def circular_ring() -> Problem:
    """Circular ring soliton released from rest on [-14, 14]^2."""

    def f(x, y):
        return 4.0 * np.arctan(np.exp(3.0 - np.sqrt(x**2 + y**2)))

    def g(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return Problem("ring", -14.0, 14.0, -14.0, 14.0, 2, Boundary.PERIODIC,
                   f, g, display_transform=_sin_half)


def elliptical_breather() -> Problem:
    """Elliptical breather released from rest on [-7, 7]^2."""

    def f(x, y):
        rho = 0.866 * np.sqrt((x - y) ** 2 / 3.0 + (x + y) ** 2 / 2.0)
        return 4.0 * np.arctan(2.0 / np.cosh(rho))

    def g(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return Problem("breather", -7.0, 7.0, -7.0, 7.0, 2, Boundary.PERIODIC,
                   f, g, display_transform=_sin_half)


def _expanding_ring_fg():
    def phase(x, y):
        return (4.0 - np.sqrt((x + 3.0) ** 2 + (y + 7.0) ** 2)) / 0.436

    def f(x, y):
        return 4.0 * np.arctan(np.exp(phase(x, y)))

    def g(x, y):
        return 4.13 / np.cosh(phase(x, y))

    return f, g


def two_ring_collision() -> Problem:
    """Expanding ring on [-30, 10] x [-21, 7]; output mirrors across the midlines."""
    f, g = _expanding_ring_fg()
    return Problem("collide2", -30.0, 10.0, -21.0, 7.0, 2, Boundary.PERIODIC,
                   f, g, display_transform=_sin_half, mirror_axes=("x", "y"))


def four_ring_collision() -> Problem:
    """Expanding ring on [-30, 10]^2; output mirrors across the midlines."""
    f, g = _expanding_ring_fg()
    return Problem("collide4", -30.0, 10.0, -30.0, 10.0, 2, Boundary.PERIODIC,
                   f, g, display_transform=_sin_half, mirror_axes=("x", "y"))


PROBLEMS: dict[str, Callable[[], Problem]] = {
    "double-pole-1d": double_pole_1d,
    "line-kink-2d": line_kink_2d,
    "ring": circular_ring,
    "breather": elliptical_breather,
    "collide2": two_ring_collision,
    "collide4": four_ring_collision,
}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {sorted(PROBLEMS)}") from None


def mirror_field(problem: Problem, U: np.ndarray) -> np.ndarray:
    """Reflect the emitted field across the problem's declared domain midlines."""
    out = np.asarray(U)
    if "x" in problem.mirror_axes:
        out = out[:, ::-1]
    if "y" in problem.mirror_axes:
        out = out[::-1, :]
    return out


def pde_residual_probe(problem: Problem, n_samples: int = 100, seed: int = 0,
                       dt: float = 1e-3, dx: float = 1e-3) -> float:
    """Max |u_tt - Lap(u) + sin(u)| of the exact solution at random samples.

    Uses 4th-order central second-difference probes in each direction; the
    sampling avoids the domain edges so all probe points stay interior.
    """
    if problem.exact is None:
        raise ValueError("problem has no exact solution")
    rng = np.random.default_rng(seed)
    pad_x = 0.05 * (problem.x_hi - problem.x_lo)
    xs = rng.uniform(problem.x_lo + pad_x, problem.x_hi - pad_x, n_samples)
    if problem.dim == 2:
        pad_y = 0.05 * (problem.y_hi - problem.y_lo)
        ys = rng.uniform(problem.y_lo + pad_y, problem.y_hi - pad_y, n_samples)
    else:
        ys = np.zeros(n_samples)
    ts = rng.uniform(0.1, 1.0, n_samples)

    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0

    def second(fn, h):
        return sum(wk * fn(k) for wk, k in zip(w2, range(-2, 3))) / h**2

    u = problem.exact(xs, ys, ts)
    utt = second(lambda k: problem.exact(xs, ys, ts + k * dt), dt)
    uxx = second(lambda k: problem.exact(xs + k * dx, ys, ts), dx)
    res = utt - uxx + np.sin(u)
    if problem.dim == 2:
        uyy = second(lambda k: problem.exact(xs, ys + k * dx, ts), dx)
        res = res - uyy
    return float(np.max(np.abs(res)))
