"""Bilinear/biquadratic FEM for the interior Helmholtz Dirichlet problem.

Discretizes  laplace(u) + kappa^2 u = f  on a square with u = g on the
boundary, over a uniform n-by-n cell grid.  The assembled operator is
A = K - kappa^2 M restricted to interior nodes (weak form multiplied by -1
so that kappa = 0 gives a positive definite matrix), with right-hand side
b = -(M f) - lifting of the boundary data.

Element integrals are evaluated exactly: the 1D mass/stiffness matrices
below are closed forms, and tensor products give the 2D ones.  Global
matrices are assembled as Kronecker products of the 1D assemblies, which
keeps the whole pipeline vectorized and makes symmetry structural.

Node numbering is lexicographic with x fastest: node = iy * m + ix for an
m-by-m lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .sparse import CsrMatrix

_ELEMENTS = ("q1", "q2")


@dataclass(frozen=True)
class Grid:
    """Uniform square grid: n cells per side on [ax, bx] x [ay, by]."""

    n: int
    domain: tuple = (0.0, 1.0, 0.0, 1.0)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("grid needs at least 2 cells per side")
        ax, bx, ay, by = self.domain
        if not (bx > ax and by > ay):
            raise DomainError("empty domain")
        if abs((bx - ax) - (by - ay)) > 1e-12 * (bx - ax):
            raise DomainError("domain must be square")

    @property
    def h(self):
        ax, bx = self.domain[0], self.domain[1]
        return (bx - ax) / self.n


@dataclass(frozen=True)
class ProblemSpec:
    """Interior Helmholtz Dirichlet problem on a square.

    f and g take vectorized (x, y) arrays; exact is the analytic solution
    when one is known (used for convergence checks), else None.
    """

    name: str
    domain: tuple
    kappa: float
    f: Callable
    g: Callable
    exact: Optional[Callable] = None
    mu: Optional[float] = None

    def __post_init__(self):
        if self.kappa < 0:
            raise DomainError("kappa must be nonnegative")


def _zero(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def problem_p1(kappa=15.0):
    """Manufactured sin(pi x) sin(2 pi y) on the unit square, g = 0."""
    c = 5.0 * math.pi ** 2

    def exact(x, y):
        return np.sin(math.pi * x) * np.sin(2.0 * math.pi * y)

    def f(x, y):
        return (kappa ** 2 - c) * exact(x, y)

    return ProblemSpec("p1", (0.0, 1.0, 0.0, 1.0), kappa, f, _zero, exact)


def problem_p2(kappa=5.0):
    """Gaussian source near the top edge of [-1, 1]^2, g = 0."""

    def f(x, y):
        return np.exp(-10.0 * ((y - 1.0) ** 2 + (x - 0.5) ** 2))

    return ProblemSpec("p2", (-1.0, 1.0, -1.0, 1.0), kappa, f, _zero)


def problem_p3():
    """Constant source, kappa = 0 (pure Poisson)."""

    def f(x, y):
        return np.ones_like(np.asarray(x, dtype=float))

    return ProblemSpec("p3", (0.0, 1.0, 0.0, 1.0), 0.0, f, _zero)


def problem_p4(mu=1.0):
    """Manufactured x^2 sin(mu x) cos(mu y) with kappa = mu * sqrt(2).

    The forcing is what laplace(u) + 2 mu^2 u leaves behind; the boundary
    data is the trace of the exact solution (nonzero, exercises lifting).
    """
    kappa = mu * math.sqrt(2.0)

    def exact(x, y):
        return x ** 2 * np.sin(mu * x) * np.cos(mu * y)

    def f(x, y):
        return (2.0 * np.sin(mu * x) + 4.0 * mu * x * np.cos(mu * x)) \
            * np.cos(mu * y)

    return ProblemSpec("p4", (0.0, 1.0, 0.0, 1.0), kappa, f, exact,
                       exact, mu=mu)


def builtin_problems():
    return {"p1": problem_p1, "p2": problem_p2, "p3": problem_p3,
            "p4": problem_p4}


def q1_mats_1d(h):
    """Exact 1D linear-element mass and stiffness matrices on [0, h]."""
    m = h * np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
    k = (1.0 / h) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    return m, k


def q2_mats_1d(h):
    """Exact 1D quadratic-element matrices, nodes at 0, h/2, h."""
    m = (h / 30.0) * np.array([[4.0, 2.0, -1.0],
                               [2.0, 16.0, 2.0],
                               [-1.0, 2.0, 4.0]])
    k = (1.0 / (3.0 * h)) * np.array([[7.0, -8.0, 1.0],
                                      [-8.0, 16.0, -8.0],
                                      [1.0, -8.0, 7.0]])
    return m, k


def element_matrices(element, h):
    """2D element mass and stiffness: tensor products of the 1D ones.

    Local numbering is lexicographic with x fastest, matching the global
    grid numbering.
    """
    if element == "q1":
        m1, k1 = q1_mats_1d(h)
    elif element == "q2":
        m1, k1 = q2_mats_1d(h)
    else:
        raise DomainError(f"unknown element {element!r}")
    mass = np.kron(m1, m1)
    stiff = np.kron(m1, k1) + np.kron(k1, m1)
    return mass, stiff


def _assemble_1d(n, h, element):
    """Global 1D mass/stiffness over n cells as dense (m, m) arrays."""
    if element == "q1":
        m1, k1 = q1_mats_1d(h)
        step = 1
    else:
        m1, k1 = q2_mats_1d(h)
        step = 2
    m = n * step + 1
    gm = np.zeros((m, m))
    gk = np.zeros((m, m))
    for e in range(n):
        idx = e * step + np.arange(step + 1)
        gm[np.ix_(idx, idx)] += m1
        gk[np.ix_(idx, idx)] += k1
    return gm, gk


def _shape_1d(element, t):
    """1D shape functions on the reference cell [0, 1] at points t."""
    t = np.asarray(t)
    if element == "q1":
        return np.stack([1.0 - t, t])
    return np.stack([2.0 * (t - 0.5) * (t - 1.0),
                     4.0 * t * (1.0 - t),
                     2.0 * t * (t - 0.5)])


def load_vector(space, f):
    """Consistent load b_i = integral of f * phi_i via Gauss quadrature.

    2x2 points for bilinear elements, 3x3 for biquadratic; exact for the
    polynomial factors, so the only quadrature error is in f itself.
    """
    from .special import gauss_legendre

    grid, element = space.grid, space.element
    step = 1 if element == "q1" else 2
    npts = step + 1
    gx, gw = gauss_legendre(npts)
    tref = 0.5 * (gx + 1.0)
    wref = 0.5 * gw
    shp = _shape_1d(element, tref)  # (nloc1d, ngauss)

    n = grid.n
    ax, _, ay, _ = grid.domain
    h = grid.h
    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()
    x0 = ax + ex * h
    y0 = ay + ey * h

    loc1d = np.arange(npts)
    gids = ((ey[:, None, None] * step + loc1d[None, :, None]) * space.m
            + ex[:, None, None] * step + loc1d[None, None, :])

    b = np.zeros(space.m * space.m, dtype=np.complex128)
    for gi in range(npts):
        for gj in range(npts):
            xg = x0 + h * tref[gj]
            yg = y0 + h * tref[gi]
            fv = np.asarray(f(xg, yg), dtype=np.complex128)
            w2 = h * h * wref[gi] * wref[gj]
            contrib = (w2 * fv)[:, None, None] \
                * (shp[:, gi][:, None] * shp[:, gj][None, :])[None, :, :]
            np.add.at(b, gids.ravel(), contrib.ravel())
    return b


def _kron_csr(a, b):
    """CSR Kronecker product of two small dense matrices (y factor first).

    (a kron b)[iy*mb+ix, jy*mb+jx] = a[iy, jy] * b[ix, jx], so with x
    fastest in the node numbering, `a` acts on the y direction.
    """
    ra, ca = np.nonzero(a)
    rb, cb = np.nonzero(b)
    mb, nb = b.shape
    rows = (ra[:, None] * mb + rb[None, :]).ravel()
    cols = (ca[:, None] * nb + cb[None, :]).ravel()
    vals = (a[ra, ca][:, None] * b[rb, cb][None, :]).ravel()
    shape = (a.shape[0] * mb, a.shape[1] * nb)
    return rows, cols, vals, shape


@dataclass
class FemSpace:
    """Nodal lattice plus full-grid (boundary included) operators."""

    grid: Grid
    element: str
    m: int
    coords: np.ndarray
    interior: np.ndarray
    interior_ids: np.ndarray
    mass: CsrMatrix
    stiffness: CsrMatrix


def assemble(grid, element):
    """Build the full-grid mass and stiffness matrices for one element type."""
    if element not in _ELEMENTS:
        raise DomainError(f"unknown element {element!r}")
    ax, bx, ay, by = grid.domain
    my, ky = _assemble_1d(grid.n, grid.h, element)
    m = my.shape[0]
    x1 = np.linspace(ax, bx, m)
    y1 = np.linspace(ay, by, m)
    xx, yy = np.meshgrid(x1, y1)
    coords = np.column_stack([xx.ravel(), yy.ravel()])

    # K2 = My kron Kx + Ky kron Mx, M2 = My kron Mx; square grid so the
    # x and y 1D factors coincide.
    rows_m, cols_m, vals_m, shape = _kron_csr(my, my)
    mass = CsrMatrix.from_coo(rows_m, cols_m, vals_m, shape)
    r1, c1, v1, _ = _kron_csr(my, ky)
    r2, c2, v2, _ = _kron_csr(ky, my)
    stiffness = CsrMatrix.from_coo(
        np.concatenate([r1, r2]), np.concatenate([c1, c2]),
        np.concatenate([v1, v2]), shape)

    ix = np.arange(m * m) % m
    iy = np.arange(m * m) // m
    interior = (ix > 0) & (ix < m - 1) & (iy > 0) & (iy < m - 1)
    return FemSpace(grid, element, m, coords, interior,
                    np.flatnonzero(interior), mass, stiffness)


def assemble_q1(grid, kappa=0.0):
    """Interior mass/stiffness for bilinear elements.

    Returns (stiffness, mass, interiorIndexMap); kappa is accepted for
    signature parity but K and M themselves do not depend on it.
    """
    return _interior_pair(assemble(grid, "q1"))


def assemble_q2(grid, kappa=0.0):
    """Interior mass/stiffness for biquadratic elements."""
    return _interior_pair(assemble(grid, "q2"))


def _interior_pair(space):
    k = space.stiffness.submatrix(space.interior, space.interior)
    m = space.mass.submatrix(space.interior, space.interior)
    return k, m, space.interior_ids


@dataclass
class DiscreteSystem:
    """Interior linear system A u = b plus the geometry behind it."""

    a: CsrMatrix
    b: np.ndarray
    node_coords: np.ndarray
    space: FemSpace
    problem: ProblemSpec
    mass_row_sums: np.ndarray

    @property
    def n(self):
        return self.b.size

    def exact_interior(self):
        if self.problem.exact is None:
            return None
        return self.problem.exact(self.node_coords[:, 0],
                                  self.node_coords[:, 1])


def build_system(problem, grid, element="q1"):
    """Assemble A = (K - kappa^2 M)|interior and the forcing/lifting RHS."""
    if tuple(problem.domain) != tuple(grid.domain):
        raise DomainError("problem and grid domains differ")
    space = assemble(grid, element)
    kappa = problem.kappa
    a_full = space.stiffness.scaled_add(space.mass, -kappa ** 2)
    a = a_full.submatrix(space.interior, space.interior)

    x, y = space.coords[:, 0], space.coords[:, 1]
    b = -load_vector(space, problem.f)[space.interior]

    g_ext = np.zeros(space.m * space.m, dtype=np.complex128)
    bnd = ~space.interior
    g_ext[bnd] = np.asarray(problem.g(x[bnd], y[bnd]), dtype=np.complex128)
    if np.any(g_ext):
        b -= a_full.matvec(g_ext)[space.interior]

    w = space.mass.matvec(np.ones(space.m * space.m))[space.interior]
    return DiscreteSystem(a, b, space.coords[space.interior], space,
                          problem, w.real)
