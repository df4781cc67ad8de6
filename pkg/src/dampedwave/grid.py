"""1D spatial grid, discrete Laplacian, norms, and initial-data smoothing.

Finite differences on a uniform mesh.  The Dirichlet grid stores interior
nodes only (the boundary values are identically zero); the Neumann grid
stores all nodes including the endpoints and realizes the zero-flux
condition through mirror ghost nodes, which keeps the row sums of the
operator exactly zero.  The L2 inner product uses trapezoidal end
weights under Neumann so that constants have exact norm sqrt(L).

A single-node Neumann grid is allowed as the spatially homogeneous
degenerate case (the operator is identically zero there); it backs the
toy model runs.

Fields are plain float ndarrays of the grid dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DimensionMismatch, SingularSystem

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

Field = np.ndarray


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on (0, L) with a boundary-condition tag."""

    length: float
    n_nodes: int
    bc: str
    h: float = field(init=False)

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("length must be positive")
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown bc {self.bc!r}")
        if self.bc == NEUMANN and self.n_nodes == 1:
            # homogeneous (toy) grid: no spatial structure at all
            object.__setattr__(self, "h", self.length)
            return
        if self.n_nodes < 3:
            raise ValueError("n_nodes must be >= 3 (or 1 for Neumann)")
        if self.bc == DIRICHLET:
            object.__setattr__(self, "h", self.length / (self.n_nodes + 1))
        else:
            object.__setattr__(self, "h", self.length / (self.n_nodes - 1))

    @property
    def x(self) -> np.ndarray:
        if self.is_homogeneous:
            return np.array([0.5 * self.length])
        if self.bc == DIRICHLET:
            return self.h * np.arange(1, self.n_nodes + 1)
        return self.h * np.arange(self.n_nodes)

    @property
    def is_homogeneous(self) -> bool:
        return self.n_nodes == 1

    @property
    def mass_weights(self) -> np.ndarray:
        if self.is_homogeneous:
            return np.array([self.length])
        w = np.full(self.n_nodes, self.h)
        if self.bc == NEUMANN:
            w[0] = w[-1] = 0.5 * self.h
        return w

    def check_field(self, u: Field, name: str = "field") -> None:
        if np.shape(u) != (self.n_nodes,):
            raise DimensionMismatch(
                f"{name} has shape {np.shape(u)}, grid expects ({self.n_nodes},)"
            )


def apply_A(grid: Grid, u: Field) -> Field:
    """Discrete negative Laplacian (3-point stencil, bc-specific closure)."""
    grid.check_field(u)
    if grid.is_homogeneous:
        return np.zeros(1)
    h2 = grid.h * grid.h
    out = np.empty_like(u)
    out[1:-1] = (-u[:-2] + 2.0 * u[1:-1] - u[2:]) / h2
    if grid.bc == DIRICHLET:
        out[0] = (2.0 * u[0] - u[1]) / h2
        out[-1] = (2.0 * u[-1] - u[-2]) / h2
    else:
        out[0] = (2.0 * u[0] - 2.0 * u[1]) / h2
        out[-1] = (2.0 * u[-1] - 2.0 * u[-2]) / h2
    return out


def laplacian_banded(grid: Grid) -> np.ndarray:
    """The operator of apply_A in solve_banded's (1,1) layout."""
    n = grid.n_nodes
    ab = np.zeros((3, n))
    if grid.is_homogeneous:
        return ab
    h2 = grid.h * grid.h
    ab[0, 1:] = -1.0 / h2
    ab[1, :] = 2.0 / h2
    ab[2, :-1] = -1.0 / h2
    if grid.bc == NEUMANN:
        ab[0, 1] = -2.0 / h2
        ab[2, -2] = -2.0 / h2
    return ab


def regularize_initial(grid: Grid, u0: Field, epsilon: float) -> Field:
    """Solve (I + epsilon*A) w = u0; the elliptic smoothing of initial data.

    The matrix is an M-matrix for every epsilon > 0, so the solve is
    order-preserving and cannot be singular; the guard is defensive.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    grid.check_field(u0, "u0")
    if grid.is_homogeneous:
        return np.array(u0, dtype=float, copy=True)
    ab = epsilon * laplacian_banded(grid)
    ab[1, :] += 1.0
    try:
        return solve_banded((1, 1), ab, u0)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise SingularSystem(str(exc)) from exc


def inner(grid: Grid, u: Field, v: Field) -> float:
    """Discrete L2 inner product with the grid's mass weights."""
    return float(np.dot(grid.mass_weights * u, v))


def edge_inner(grid: Grid, u: Field, v: Field) -> float:
    """Sum over edges of (du)(dv)/h; equals <A u, v> in the weighted product.

    Dirichlet grids include the two boundary edges against the zero
    boundary values; Neumann grids have no boundary edges (mirror ghosts
    contribute zero differences).
    """
    if grid.is_homogeneous:
        return 0.0
    du = np.diff(u)
    dv = np.diff(v)
    acc = float(np.dot(du, dv))
    if grid.bc == DIRICHLET:
        acc += u[0] * v[0] + u[-1] * v[-1]
    return acc / grid.h


def norms(grid: Grid, u: Field) -> dict:
    """L2 norm and H1 seminorm of a field under the grid's conventions."""
    grid.check_field(u)
    l2 = float(np.sqrt(inner(grid, u, u)))
    h1 = float(np.sqrt(max(edge_inner(grid, u, u), 0.0)))
    return {"l2": l2, "h1_semi": h1}
