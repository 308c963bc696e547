"""Comparison preconditioners: IC(0), geometric multigrid, identity.

IC(0) is zero-fill incomplete Cholesky on the (real) operator, with a
diagonal-shift retry ladder for indefinite matrices.  The multigrid is a
sawtooth V-cycle (coarse-grid correction followed by one forward
Gauss-Seidel sweep per level) on re-discretized coarse operators, with
bilinear interpolation between nested interior lattices and a dense solve
on the coarsest level.  By default the hierarchy is built from the
diffusion part alone: coarse lattices cannot resolve oscillatory modes,
and keeping the zeroth-order term would make the coarse operators
indefinite and the smoother divergent, so the cycle approximates the
inverse Laplacian regardless of the wavenumber of the system it
preconditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import Grid, assemble
from .errors import DomainError, FactorizationError
from .sparse import CsrMatrix

_SHIFT_LADDER = (0.0, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass
class IcFactors:
    """Lower-triangular factor with L L^T approximating A."""

    lower: CsrMatrix
    upper: CsrMatrix
    alpha: float

    @property
    def n(self):
        return self.lower.shape[0]

    def apply(self, r):
        """Solve L L^T z = r (forward then backward substitution)."""
        r = np.asarray(r, dtype=np.complex128)
        lptr, lind, ldata = self.lower.indptr, self.lower.indices, \
            self.lower.data
        y = np.zeros_like(r)
        for i in range(self.n):
            lo, hi = lptr[i], lptr[i + 1]
            # diagonal is the last entry of each lower row
            s = r[i] - np.dot(ldata[lo:hi - 1], y[lind[lo:hi - 1]])
            y[i] = s / ldata[hi - 1]
        uptr, uind, udata = self.upper.indptr, self.upper.indices, \
            self.upper.data
        z = np.zeros_like(r)
        for i in range(self.n - 1, -1, -1):
            lo, hi = uptr[i], uptr[i + 1]
            # diagonal is the first entry of each upper row
            s = y[i] - np.dot(udata[lo + 1:hi], z[uind[lo + 1:hi]])
            z[i] = s / udata[lo]
        return z


def _lower_triangle(a):
    """Lower-triangular part (diagonal included) of a CSR matrix, real."""
    rows = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    keep = a.indices <= rows
    return CsrMatrix.from_coo(rows[keep], a.indices[keep],
                              a.data[keep].real, a.shape)


def _transpose(a):
    rows = np.repeat(np.arange(a.shape[0]), np.diff(a.indptr))
    return CsrMatrix.from_coo(a.indices, rows, a.data,
                              (a.shape[1], a.shape[0]))


def ic0(a):
    """Zero-fill incomplete Cholesky of a structurally symmetric matrix.

    Pivot breakdown (indefinite input) retries with diagonal shifts
    alpha * max|diag| for alpha in the ladder; the shift actually used is
    recorded on the result.  Raises FactorizationError when every shift
    fails.
    """
    low = _lower_triangle(a)
    n = a.shape[0]
    diag_max = float(np.abs(a.diagonal().real).max())
    lptr, lind = low.indptr, low.indices
    for i in range(n):
        if lptr[i + 1] == lptr[i] or lind[lptr[i + 1] - 1] != i:
            raise FactorizationError(f"missing diagonal at row {i}")
    for alpha in _SHIFT_LADDER:
        ldata = _try_ic0(n, lptr, lind, low.data, alpha * diag_max)
        if ldata is not None:
            lowf = CsrMatrix(lptr, lind, ldata.astype(np.complex128),
                             low.shape)
            return IcFactors(lowf, _transpose(lowf), alpha * diag_max)
    raise FactorizationError("IC(0) pivots stayed nonpositive for all "
                             "shifts")


def _try_ic0(n, lptr, lind, adata, shift):
    """One IC(0) sweep; None on a nonpositive pivot."""
    ldata = np.zeros(lptr[-1], dtype=np.float64)
    w = np.zeros(n)
    for i in range(n):
        lo, hi = lptr[i], lptr[i + 1]
        cols = lind[lo:hi]
        w[cols] = adata[lo:hi].real
        w[i] += shift
        for idx in range(lo, hi - 1):
            j = lind[idx]
            jlo, jhi = lptr[j], lptr[j + 1]
            kcols = lind[jlo:jhi - 1]
            # k runs over pattern(row j) \ {j}; entries of w outside
            # pattern(row i) are zero, so no mask is needed
            s = w[j] - np.dot(ldata[jlo:jhi - 1], w[kcols])
            ldata[idx] = s / ldata[jhi - 1]
            w[j] = ldata[idx]
        d = w[i] - np.dot(ldata[lo:hi - 1], ldata[lo:hi - 1])
        w[cols] = 0.0
        if not (d > 0.0) or not math.isfinite(d):
            return None
        ldata[hi - 1] = math.sqrt(d)
    return ldata


def prolong(cvec, nc):
    """Bilinear interpolation: interior of an nc-grid to a 2nc-grid."""
    c = np.asarray(cvec).reshape(nc - 1, nc - 1)
    pad = np.zeros((nc + 1, nc + 1), dtype=c.dtype)
    pad[1:nc, 1:nc] = c
    nf = 2 * nc
    f = np.zeros((nf + 1, nf + 1), dtype=c.dtype)
    f[0::2, 0::2] = pad
    f[1::2, 0::2] = 0.5 * (pad[:-1, :] + pad[1:, :])
    f[0::2, 1::2] = 0.5 * (pad[:, :-1] + pad[:, 1:])
    f[1::2, 1::2] = 0.25 * (pad[:-1, :-1] + pad[:-1, 1:]
                            + pad[1:, :-1] + pad[1:, 1:])
    return f[1:nf, 1:nf].ravel()


def restrict(fvec, nc):
    """Residual restriction: the prolongation adjoint, fine 2nc-grid to nc.

    Coarse spaces are nested in fine ones here, so the re-discretized
    coarse operator equals the Galerkin product P^T A P and the matching
    residual transfer is P^T itself (the finite-difference 1/4 scaling
    would shrink coarse corrections fourfold).
    """
    nf = 2 * nc
    f = np.zeros((nf + 1, nf + 1), dtype=np.asarray(fvec).dtype)
    f[1:nf, 1:nf] = np.asarray(fvec).reshape(nf - 1, nf - 1)
    acc = np.zeros((nc + 1, nc + 1), dtype=f.dtype)
    acc += f[0::2, 0::2]
    e = f[1::2, 0::2]
    acc[:-1, :] += 0.5 * e
    acc[1:, :] += 0.5 * e
    e = f[0::2, 1::2]
    acc[:, :-1] += 0.5 * e
    acc[:, 1:] += 0.5 * e
    e = f[1::2, 1::2]
    acc[:-1, :-1] += 0.25 * e
    acc[:-1, 1:] += 0.25 * e
    acc[1:, :-1] += 0.25 * e
    acc[1:, 1:] += 0.25 * e
    return acc[1:nc, 1:nc].ravel()


@dataclass
class MgLevel:
    n: int
    a: CsrMatrix
    inv_diag: np.ndarray
    diag_pos: np.ndarray


def _gauss_seidel_sweep(level, x, r):
    """One forward lexicographic Gauss-Seidel sweep, in place."""
    ptr, ind, dat = level.a.indptr, level.a.indices, level.a.data
    dpos = level.diag_pos
    for i in range(x.size):
        lo, hi = ptr[i], ptr[i + 1]
        p = dpos[i]
        s = r[i] - np.dot(dat[lo:p], x[ind[lo:p]]) \
            - np.dot(dat[p + 1:hi], x[ind[p + 1:hi]])
        x[i] = s / dat[p]
    return x


@dataclass
class MgHierarchy:
    """Nested grid operators plus V-cycle application.

    pre_steps / post_steps smoothing sweeps bracket the coarse-grid
    correction on every level; the (0, 1) default is the sawtooth cycle.
    The default smoother is point forward Gauss-Seidel; "jacobi" selects
    damped Jacobi with the given omega instead.
    """

    levels: list
    coarse_dense: np.ndarray
    smoother: str = "gauss_seidel"
    omega: float = 2.0 / 3.0
    pre_steps: int = 0
    post_steps: int = 1

    @property
    def n(self):
        return self.levels[0].a.shape[0]

    def apply(self, r):
        return self._cycle(0, np.asarray(r, dtype=np.complex128))

    def _smooth(self, level, x, r, steps):
        if self.smoother == "jacobi":
            for _ in range(steps):
                x += self.omega * level.inv_diag * (r - level.a.matvec(x))
        else:
            for _ in range(steps):
                _gauss_seidel_sweep(level, x, r)
        return x

    def _cycle(self, lev, r):
        if lev == len(self.levels) - 1:
            return np.linalg.solve(self.coarse_dense, r)
        level = self.levels[lev]
        x = self._smooth(level, np.zeros_like(r), r, self.pre_steps)
        rc = restrict(r - level.a.matvec(x), level.n // 2)
        x += prolong(self._cycle(lev + 1, rc), level.n // 2)
        return self._smooth(level, x, r, self.post_steps)


def build_mg_hierarchy(problem, grid, coarse_limit=81,
                       smoother="gauss_seidel", omega=2.0 / 3.0,
                       pre_steps=0, post_steps=1, use_kappa=False):
    """Re-discretized multigrid hierarchy for a bilinear-element system.

    Coarsens n -> n/2 until the interior count is at most coarse_limit;
    the coarsest operator is kept dense.  Requires power-of-two n.  Level
    operators drop the zeroth-order term unless use_kappa is set (see the
    module docstring).
    """
    n = grid.n
    if n & (n - 1) != 0:
        raise DomainError("multigrid needs a power-of-two cell count")
    if smoother not in ("gauss_seidel", "jacobi"):
        raise DomainError(f"unknown smoother {smoother!r}")
    sizes = [n]
    while sizes[-1] > 2 and (sizes[-1] - 1) ** 2 > coarse_limit:
        sizes.append(sizes[-1] // 2)
    kappa = problem.kappa if use_kappa else 0.0
    levels = []
    for nl in sizes:
        space = assemble(Grid(nl, grid.domain), "q1")
        a_full = space.stiffness.scaled_add(space.mass, -kappa ** 2)
        a = a_full.submatrix(space.interior, space.interior)
        dpos = np.array([np.searchsorted(a.indices[a.indptr[i]:
                                                   a.indptr[i + 1]], i)
                         + a.indptr[i] for i in range(a.shape[0])])
        levels.append(MgLevel(nl, a, 1.0 / a.diagonal(), dpos))
    return MgHierarchy(levels, levels[-1].a.to_dense(), smoother, omega,
                       pre_steps, post_steps)


class IdentityPrecond:
    """apply(r) = r; stands in for "no preconditioner" in the harness."""

    def apply(self, r):
        return np.array(r, dtype=np.complex128, copy=True)


def identity_precond():
    return IdentityPrecond()
