"""Finite-difference grids for intervals and radial balls.

Only interior nodes are stored.  Every :class:`Field` is implicitly extended
by zero on the boundary, so fields are always admissible for the homogeneous
Dirichlet problem and weights that blow up at the boundary are never sampled
there.

Interval grids place ``n`` nodes at ``x0 + i*h`` (``i = 1..n``) with
``h = (x1 - x0)/(n + 1)``.  Radial grids use cell-centred nodes
``r_i = (i - 1/2) h`` so that the symmetry condition ``u'(0) = 0`` is imposed
through a ghost value ``u_0 = u_1`` and no node sits on the coordinate
singularity; the outer boundary ``r = R`` is then one full step beyond the
last node, which forces ``h = R/(n + 1/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gamma, pi

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "Grid",
    "Field",
    "GridMismatchError",
    "interval_grid",
    "radial_grid",
    "laplacian_bands",
    "laplacian_apply",
    "solve_linear",
    "solve_tridiagonal",
    "integrate",
    "quadrature_weights",
    "boundary_flux",
    "dirichlet_energy",
]


class GridMismatchError(ValueError):
    """A field was used with a grid it does not live on."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``(x0, x1)`` or on the radial ball of radius ``R`` in R^dim."""

    kind: str
    n_interior: int
    x0: float = 0.0
    x1: float = 1.0
    dim: int = 1

    def __post_init__(self):
        if self.kind not in ("interval", "radial"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.n_interior < 3:
            raise ValueError("n_interior must be at least 3")
        if not self.x1 > self.x0:
            raise ValueError("empty domain")
        if self.kind == "radial":
            if self.x0 != 0.0:
                raise ValueError("radial grids start at r = 0")
            if self.dim < 1:
                raise ValueError("dim must be >= 1")

    @property
    def length(self) -> float:
        return self.x1 - self.x0

    @property
    def R(self) -> float:
        return self.x1

    @property
    def h(self) -> float:
        if self.kind == "interval":
            return self.length / (self.n_interior + 1)
        return self.length / (self.n_interior + 0.5)

    @cached_property
    def nodes(self) -> np.ndarray:
        i = np.arange(1, self.n_interior + 1, dtype=float)
        if self.kind == "interval":
            x = self.x0 + i * self.h
        else:
            x = (i - 0.5) * self.h
        x.setflags(write=False)
        return x

    @property
    def boundary_points(self) -> tuple[float, ...]:
        if self.kind == "interval":
            return (self.x0, self.x1)
        return (self.x1,)

    def distance_to_boundary(self) -> np.ndarray:
        x = self.nodes
        if self.kind == "interval":
            return np.minimum(x - self.x0, self.x1 - x)
        return self.x1 - x

    def refine(self, factor: int = 2) -> "Grid":
        """Grid on the same domain with spacing divided by ``factor``.

        Exact for intervals.  Radial grids need ``factor * (n + 1/2) - 1/2`` to
        be an integer, which holds for odd factors; even factors give the
        nearest admissible grid (relative spacing error below ``1/(2n)``).
        """
        if self.kind == "interval":
            n = factor * (self.n_interior + 1) - 1
        else:
            # (n + 1/2) scales by factor; keep it a half-integer
            n = int(round(factor * (self.n_interior + 0.5) - 0.5))
        return Grid(self.kind, n, self.x0, self.x1, self.dim)

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.n_interior))

    def field(self, values) -> "Field":
        return Field(self, values)

    def describe(self) -> dict:
        d = {"kind": self.kind, "n_interior": self.n_interior, "h": self.h}
        if self.kind == "interval":
            d.update(x0=self.x0, x1=self.x1)
        else:
            d.update(R=self.R, dim=self.dim)
        return d


def interval_grid(x0: float, x1: float, n: int) -> Grid:
    return Grid("interval", int(n), float(x0), float(x1))


def radial_grid(R: float, dim: int, n: int) -> Grid:
    return Grid("radial", int(n), 0.0, float(R), int(dim))


@dataclass(frozen=True, eq=False)
class Field:
    """Nodal values on the interior nodes of a grid (zero on the boundary)."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_interior,):
            raise GridMismatchError(
                f"expected {self.grid.n_interior} values, got shape {v.shape}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return self.grid.n_interior

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


def _values(g: Grid, u) -> np.ndarray:
    if isinstance(u, Field):
        if u.grid != g:
            raise GridMismatchError("field lives on a different grid")
        return u.values
    v = np.asarray(u, dtype=float)
    if v.shape != (g.n_interior,):
        raise GridMismatchError(
            f"expected {g.n_interior} values, got shape {v.shape}"
        )
    return v


def laplacian_bands(g: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(sub, diag, super) diagonals of the discrete ``-Delta`` with Dirichlet closure.

    ``sub[i]`` multiplies ``u[i-1]`` and ``sup[i]`` multiplies ``u[i+1]``;
    ``sub[0]`` and ``sup[-1]`` are zero.
    """
    n, h = g.n_interior, g.h
    h2 = h * h
    diag = np.full(n, 2.0 / h2)
    if g.kind == "interval":
        sub = np.full(n, -1.0 / h2)
        sup = np.full(n, -1.0 / h2)
    else:
        r = g.nodes
        c = (g.dim - 1) * h / (2.0 * r)
        sub = -(1.0 - c) / h2
        sup = -(1.0 + c) / h2
        # ghost u_0 = u_1 folds the first sub-diagonal entry into the diagonal
        diag[0] += sub[0]
    sub = sub.copy()
    sub[0] = 0.0
    sup = sup.copy()
    sup[-1] = 0.0
    return sub, diag, sup


def _band_matvec(sub, diag, sup, u):
    out = diag * u
    out[1:] += sub[1:] * u[:-1]
    out[:-1] += sup[:-1] * u[1:]
    return out


def laplacian_apply(g: Grid, u) -> Field:
    """Second-order centred ``-Delta u`` (``-u''`` or ``-u'' - (N-1)/r u'``)."""
    v = _values(g, u)
    return Field(g, _band_matvec(*laplacian_bands(g), v))


def solve_tridiagonal(sub, diag, sup, rhs) -> np.ndarray:
    """Banded LU (LAPACK) solve of a tridiagonal system in the band layout above."""
    n = len(diag)
    ab = np.empty((3, n))
    ab[0, 1:] = sup[:-1]
    ab[0, 0] = 0.0
    ab[1] = diag
    ab[2, :-1] = sub[1:]
    ab[2, -1] = 0.0
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _thomas(sub, diag, sup, rhs):
    n = len(diag)
    c = np.empty(n)
    d = np.empty(n)
    piv = diag[0]
    if not piv > 0:
        raise np.linalg.LinAlgError("non-positive pivot in Dirichlet Laplacian")
    c[0] = sup[0] / piv
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i] * c[i - 1]
        if not piv > 0:
            raise np.linalg.LinAlgError("non-positive pivot in Dirichlet Laplacian")
        c[i] = sup[i] / piv
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def solve_linear(g: Grid, f) -> Field:
    """Solve ``-Delta u = f`` with zero Dirichlet data by Thomas elimination."""
    rhs = _values(g, f)
    return Field(g, _thomas(*laplacian_bands(g), rhs))


def _sphere_area(dim: int) -> float:
    return 2.0 * pi ** (dim / 2.0) / gamma(dim / 2.0)


def quadrature_weights(g: Grid) -> np.ndarray:
    """Weights ``w`` with ``integrate(g, u) == w @ u``.

    Interval: trapezoid rule on the full grid, the two endpoint values taken by
    linear extrapolation from the nearest interior nodes (exact for affine
    integrands; for fields vanishing on the boundary the extrapolated value is
    O(h^2) small).  Radial: midpoint rule on the cells ``[(i-1)h, ih]`` with the
    ``omega r^(N-1)`` Jacobian plus the half cell next to ``r = R``.
    """
    n, h = g.n_interior, g.h
    if g.kind == "interval":
        w = np.full(n, h)
        w[0] += h
        w[1] -= 0.5 * h
        w[-1] += h
        w[-2] -= 0.5 * h
        return w
    omega = _sphere_area(g.dim)
    r = g.nodes
    w = omega * r ** (g.dim - 1) * h
    rm = g.R - 0.25 * h
    c = omega * rm ** (g.dim - 1) * 0.5 * h
    # value at r_n + 3h/4 by linear extrapolation
    w[-1] += 1.75 * c
    w[-2] -= 0.75 * c
    return w


def integrate(g: Grid, u) -> float:
    return float(quadrature_weights(g) @ _values(g, u))


def boundary_flux(g: Grid, u) -> tuple[float, ...]:
    """One-sided second-order outward normal derivative at each boundary point."""
    v = _values(g, u)
    h = g.h
    right = (v[-2] - 4.0 * v[-1]) / (2.0 * h)
    if g.kind == "radial":
        return (float(right),)
    left = (v[1] - 4.0 * v[0]) / (2.0 * h)
    return (float(left), float(right))


def dirichlet_energy(g: Grid, u) -> float:
    """Discrete ``int |grad u|^2`` from forward differences with zero extension."""
    v = _values(g, u)
    h = g.h
    ext = np.concatenate([v, [0.0]])
    if g.kind == "interval":
        ext = np.concatenate([[0.0], ext])
        return float(np.sum(np.diff(ext) ** 2) / h)
    omega = _sphere_area(g.dim)
    rhalf = g.nodes + 0.5 * h
    return float(omega * np.sum(rhalf ** (g.dim - 1) * np.diff(ext) ** 2) / h)
