"""Conservation diagnostics and error norms.

The production scheme satisfies a per-node balance for the modified
(quadratized) energy density: the forward time difference of the density
equals a discrete flux divergence, at every node and every step, on periodic
grids.  Summing the balance over the grid telescopes the flux away, which is
the global conservation statement.  The balance written with the original
density ``1 - cos(u)`` in place of ``r^2`` does NOT hold to round-off; its
residual shrinks at second order under mesh refinement and serves as the
discriminating control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Boundary
from .operators import (BoundaryValues, delta_x, delta_y, h1_norm,
                        shift_x_minus, shift_y_minus, time_average)
from .problems import Problem
from .schemes import SchemeState


def local_energy_density(state: SchemeState, bv: BoundaryValues | None = None) -> np.ndarray:
    """Modified energy density ``v^2/2 + (dx u)^2/2 + (dy u)^2/2 + r^2`` per node."""
    g = state.grid
    return (0.5 * state.v**2
            + 0.5 * delta_x(g, state.u, bv) ** 2
            + 0.5 * delta_y(g, state.u, bv) ** 2
            + state.r**2)


def original_energy_density(state: SchemeState, bv: BoundaryValues | None = None) -> np.ndarray:
    """Original density with ``1 - cos(u)`` in place of ``r^2``."""
    g = state.grid
    return (0.5 * state.v**2
            + 0.5 * delta_x(g, state.u, bv) ** 2
            + 0.5 * delta_y(g, state.u, bv) ** 2
            + (1.0 - np.cos(state.u)))


def _flux_divergence(state_n: SchemeState, state_np1: SchemeState) -> np.ndarray:
    """Discrete divergence of the energy flux between two consecutive levels.

    The flux product takes the time-averaged forward difference one node
    upwind of the time-averaged velocity, which is exactly the pattern the
    per-node balance requires.
    """
    g = state_n.grid
    atv = time_average(state_np1.v, state_n.v)
    atdx = time_average(delta_x(g, state_np1.u), delta_x(g, state_n.u))
    atdy = time_average(delta_y(g, state_np1.u), delta_y(g, state_n.u))
    px = shift_x_minus(g, atdx) * atv
    py = shift_y_minus(g, atdy) * atv
    return delta_x(g, px) + delta_y(g, py)


def _check_level_pair(state_n: SchemeState, state_np1: SchemeState, tau: float) -> None:
    if state_n.grid is not state_np1.grid and state_n.grid != state_np1.grid:
        raise ValueError("states live on different grids")
    if state_n.grid.boundary is not Boundary.PERIODIC:
        raise ValueError("the per-node balance is defined on periodic grids only")
    if abs((state_np1.t - state_n.t) - tau) > 1e-9 * max(1.0, abs(tau)):
        raise ValueError("states are not consecutive levels separated by tau")


def local_law_residual(state_n: SchemeState, state_np1: SchemeState, tau: float) -> np.ndarray:
    """Per-node residual of the modified energy balance; round-off for li-leps pairs."""
    _check_level_pair(state_n, state_np1, tau)
    ddens = (local_energy_density(state_np1) - local_energy_density(state_n)) / tau
    return ddens - _flux_divergence(state_n, state_np1)


def original_law_residual(state_n: SchemeState, state_np1: SchemeState, tau: float) -> np.ndarray:
    """Residual of the balance written with the original density (not conserved)."""
    _check_level_pair(state_n, state_np1, tau)
    ddens = (original_energy_density(state_np1) - original_energy_density(state_n)) / tau
    return ddens - _flux_divergence(state_n, state_np1)


def global_energy_modified(state: SchemeState, bv: BoundaryValues | None = None) -> float:
    """Total modified energy; conserved exactly by li-leps on periodic grids."""
    return state.grid.cell_area * float(np.sum(local_energy_density(state, bv)))


def global_energy_original(state: SchemeState, bv: BoundaryValues | None = None) -> float:
    """Total original energy; conserved exactly by ep-fds on periodic grids."""
    return state.grid.cell_area * float(np.sum(original_energy_density(state, bv)))


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    e_modified: float
    e_original: float
    deviation: float


class EnergyRecorder:
    """Collects energy records every ``every`` steps (step 0 included)."""

    def __init__(self, every: int = 1, bc=None):
        if every < 1:
            raise ValueError("cadence must be at least 1")
        self.every = every
        self.bc = bc
        self.records: list[EnergyRecord] = []
        self._e0: float | None = None

    def __call__(self, step: int, state: SchemeState) -> None:
        if step % self.every:
            return
        bv = self.bc.values(state.t) if self.bc is not None else None
        e_mod = global_energy_modified(state, bv)
        e_orig = global_energy_original(state, bv)
        if self._e0 is None:
            self._e0 = e_mod
        dev = abs(e_mod - self._e0) / abs(self._e0) if self._e0 != 0 else abs(e_mod - self._e0)
        self.records.append(EnergyRecord(state.t, e_mod, e_orig, dev))


@dataclass(frozen=True)
class ErrorReport:
    """Norms of the numerical error against an exact solution at one time."""

    l2: float
    linf: float
    h1: float
    v_l2: float | None = None
    r_l2: float | None = None


def error_vs_exact(state: SchemeState, problem: Problem) -> ErrorReport:
    """Error norms at ``state.t``.

    On Dirichlet-exact grids the error field vanishes on the boundary, so its
    differences use zero edge data.  Velocity error is reported when the
    problem supplies an exact velocity; the auxiliary error compares against
    ``sqrt(2 - cos(exact))``.
    """
    g = state.grid
    exact_u = problem.sample_exact(g, state.t)
    err = state.u - exact_u
    report = ErrorReport(
        l2=g.l2(err),
        linf=g.linf(err),
        h1=h1_norm(g, err),
        v_l2=None,
        r_l2=g.l2(state.r - np.sqrt(2.0 - np.cos(exact_u))),
    )
    if problem.exact_v is not None:
        X, Y = g.meshgrid
        v_err = state.v - np.asarray(problem.exact_v(X, Y, state.t), dtype=float)
        report = ErrorReport(report.l2, report.linf, report.h1,
                             v_l2=g.l2(v_err), r_l2=report.r_l2)
    return report


def convergence_orders(rows) -> list[float]:
    """Observed orders ``log2(err_k / err_{k+1})`` for a halving ``(h, tau)`` ladder.

    ``rows`` is a sequence of ``(h, tau, error)``; consecutive rows must halve
    both mesh parameters.
    """
    rows = list(rows)
    if len(rows) < 2:
        raise ValueError("need at least two rows")
    orders = []
    for (h0, t0, e0), (h1, t1, e1) in zip(rows, rows[1:]):
        if abs(h0 / h1 - 2.0) > 1e-9 or abs(t0 / t1 - 2.0) > 1e-9:
            raise ValueError(f"rows do not halve (h, tau): ({h0}, {t0}) -> ({h1}, {t1})")
        orders.append(math.log2(e0 / e1))
    return orders
