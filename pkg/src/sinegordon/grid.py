"""Rectangular meshes, periodic index arithmetic, and discrete norms.

Fields on a grid are plain ``numpy`` arrays of shape ``(n2, n1)``: the second
axis runs along x, the first along y, so flattening in C order enumerates
nodes with j2 outermost and j1 innermost.  In 1D mode the y axis collapses to
``n2 = 1`` with unit extent, which makes every y-difference vanish and reduces
the discrete measure ``h1*h2`` to ``h1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class Boundary(enum.Enum):
    """How stencil reads past the last node are resolved."""

    PERIODIC = "periodic"
    DIRICHLET_EXACT = "dirichlet-exact"


def wrap(j: int, n: int) -> int:
    """Periodic image of index ``j`` in ``[0, n-1]``.

    Total for every integer ``j`` (the contract only requires
    ``-1 <= j <= n``), idempotent on in-range indices.
    """
    return j % n


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular mesh with nodes at ``(x_lo + j1*h1, y_lo + j2*h2)``.

    Node indices run over ``0 <= j1 < n1``, ``0 <= j2 < n2``; the high edges
    ``x_hi``/``y_hi`` are not nodes.  Under periodic boundaries they are
    identified with the low edges; under Dirichlet-exact boundaries the low
    edges are pinned in-array nodes and reads at the high edges resolve to
    externally supplied boundary values.

    Node counts need not be even; nothing in the discrete operators or the
    time steppers requires evenness.
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    n1: int
    n2: int
    boundary: Boundary

    def __post_init__(self):
        if self.x_hi <= self.x_lo:
            raise ValueError(f"x extent must be positive, got [{self.x_lo}, {self.x_hi}]")
        if self.y_hi <= self.y_lo:
            raise ValueError(f"y extent must be positive, got [{self.y_lo}, {self.y_hi}]")
        if self.n1 < 2:
            raise ValueError(f"n1 must be at least 2, got {self.n1}")
        if self.n2 < 1:
            raise ValueError(f"n2 must be 1 (1D mode) or at least 2, got {self.n2}")
        if self.boundary is Boundary.DIRICHLET_EXACT and self.n2 == 1:
            raise ValueError("Dirichlet-exact boundaries require a 2D grid (n2 >= 2)")

    @property
    def h1(self) -> float:
        return (self.x_hi - self.x_lo) / self.n1

    @property
    def h2(self) -> float:
        return (self.y_hi - self.y_lo) / self.n2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n2, self.n1)

    @property
    def num_nodes(self) -> int:
        return self.n1 * self.n2

    @property
    def cell_area(self) -> float:
        return self.h1 * self.h2

    @property
    def is_1d(self) -> bool:
        return self.n2 == 1

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_lo + np.arange(self.n1) * self.h1

    @cached_property
    def y(self) -> np.ndarray:
        return self.y_lo + np.arange(self.n2) * self.h2

    @cached_property
    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(n2, n1)``."""
        return np.meshgrid(self.x, self.y)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        """True where the time steppers solve for unknowns.

        All nodes on periodic grids; Dirichlet-exact grids exclude the pinned
        low-edge ring ``j1 == 0`` or ``j2 == 0``.
        """
        mask = np.ones(self.shape, dtype=bool)
        if self.boundary is Boundary.DIRICHLET_EXACT:
            mask[0, :] = False
            mask[:, 0] = False
        mask.setflags(write=False)
        return mask

    def node_coords(self, j1: int, j2: int) -> tuple[float, float]:
        """Coordinates of node ``(j1, j2)``, bit-identical to the ``x``/``y`` arrays."""
        return (self.x_lo + j1 * self.h1, self.y_lo + j2 * self.h2)

    def check_field(self, U: np.ndarray, name: str = "field") -> np.ndarray:
        """Validate that ``U`` is a field on this grid; returns ``U``."""
        U = np.asarray(U)
        if U.shape != self.shape:
            raise ValueError(f"{name} has shape {U.shape}, expected {self.shape}")
        return U

    def new_field(self, values=None) -> np.ndarray:
        """Allocate a field, optionally filled from ``values`` (finiteness enforced)."""
        if values is None:
            return np.zeros(self.shape)
        out = np.array(values, dtype=float)
        if out.shape == (self.num_nodes,):
            out = out.reshape(self.shape)
        self.check_field(out)
        if not np.all(np.isfinite(out)):
            raise ValueError("field values must be finite")
        return out

    # Reductions use np.sum (pairwise, deterministic order) so conservation
    # residuals are reproducible run to run.
    def inner(self, U: np.ndarray, V: np.ndarray) -> float:
        """Discrete inner product ``h1*h2 * sum(U*V)``."""
        self.check_field(U)
        self.check_field(V)
        return self.cell_area * float(np.sum(U * V))

    def l2(self, U: np.ndarray) -> float:
        """Discrete L2 norm ``sqrt(<U, U>)``."""
        return float(np.sqrt(self.inner(U, U)))

    def linf(self, U: np.ndarray) -> float:
        """Max-norm over nodes."""
        self.check_field(U)
        return float(np.max(np.abs(U)))


def make_grid(
    x_lo: float,
    x_hi: float,
    y_lo: float | None = None,
    y_hi: float | None = None,
    n1: int = 2,
    n2: int = 1,
    boundary: Boundary = Boundary.PERIODIC,
) -> Grid:
    """Build a grid; omit the y range in 1D mode (``n2 = 1``) for unit extent."""
    if n2 == 1:
        if y_lo is None:
            y_lo = 0.0
        if y_hi is None:
            y_hi = y_lo + 1.0
    if y_lo is None or y_hi is None:
        raise ValueError("y_lo and y_hi are required for 2D grids")
    return Grid(float(x_lo), float(x_hi), float(y_lo), float(y_hi), int(n1), int(n2), boundary)


def make_grid_1d(x_lo: float, x_hi: float, n: int, boundary: Boundary = Boundary.PERIODIC) -> Grid:
    """1D convenience wrapper: y collapses to a single row of unit extent."""
    return make_grid(x_lo, x_hi, n1=n, n2=1, boundary=boundary)
