"""Boundary-integral Helmholtz solve used as a right preconditioner.

The pipeline: split the preconditioner residual into point sources on the
interior nodes, carry them to the boundary through the free-space kernel,
solve a single-layer equation for the outward normal flux on a constant-
element mesh, then evaluate the representation formula back at the interior
nodes.  With zero Dirichlet data the three stages are

    rhs   = -(volume term at collocation points)
    G q   = rhs                     (inner GMRES)
    z     = S[q] + (volume term at interior points)

Every kernel summation goes through an FmmPlan, so the preconditioner's
accuracy/cost knob is the plan's expansion order; the "direct" backend
turns each stage into an exact dense summation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (BreakdownError, DomainError, InnerSolveError,
                     SingularError)
from .fmm import FmmConfig, FmmPlan, accuracy_to_order
from .krylov import gmres
from .special import (double_layer_values, gauss_legendre, kernel_for,
                      single_layer_values, singular_diagonal_2d)

_DENSE_INNER_LIMIT = 1024


@dataclass(frozen=True)
class Element:
    """One straight boundary element with midpoint collocation."""

    a: np.ndarray
    b: np.ndarray
    midpoint: np.ndarray
    width: float
    normal: np.ndarray


@dataclass(frozen=True)
class BoundaryMesh:
    """Constant elements tiling the boundary of an axis-aligned square.

    Element j runs from endpoints_a[j] to endpoints_b[j]; consecutive
    elements chain counterclockwise, normals point out of the domain, and
    the collocation nodes are the midpoints (no corner nodes).
    """

    endpoints_a: np.ndarray
    endpoints_b: np.ndarray
    midpoints: np.ndarray
    widths: np.ndarray
    normals: np.ndarray
    domain: tuple

    @property
    def n(self):
        return self.midpoints.shape[0]

    def element(self, j):
        return Element(self.endpoints_a[j], self.endpoints_b[j],
                       self.midpoints[j], float(self.widths[j]),
                       self.normals[j])

    def gauss_sources(self, rule=4):
        """Quadrature geometry shared by every layer-potential summation.

        Returns (points, factors, normals): points has one row per element
        Gauss node, factors[j, l] = (w_j / 2) * gauss_weight_l is the
        integration factor that turns a density value into that node's
        charge, and normals repeats each element normal per node.
        """
        nodes, wts = gauss_legendre(rule)
        t = 0.5 * (nodes + 1.0)
        seg = self.endpoints_b - self.endpoints_a
        pts = self.endpoints_a[:, None, :] + t[None, :, None] * seg[:, None, :]
        fac = 0.5 * self.widths[:, None] * wts[None, :]
        nrm = np.repeat(self.normals, rule, axis=0)
        return pts.reshape(-1, 2), fac, nrm


def discretize_boundary(domain, n_per_side):
    """Tile the boundary of an axis-aligned square with 4n equal elements."""
    if n_per_side < 2:
        raise DomainError("need at least 2 elements per side")
    ax, bx, ay, by = (float(v) for v in domain)
    side = bx - ax
    if side <= 0 or abs((by - ay) - side) > 1e-12 * max(1.0, side):
        raise DomainError("boundary mesh requires a square domain")
    w = side / n_per_side
    ticks = ax + w * np.arange(n_per_side + 1)
    up = ay + w * np.arange(n_per_side + 1)
    n = n_per_side
    starts, ends, normals = [], [], []
    # counterclockwise: bottom, right, top (reversed), left (reversed)
    starts.append(np.column_stack([ticks[:-1], np.full(n, ay)]))
    ends.append(np.column_stack([ticks[1:], np.full(n, ay)]))
    normals.append(np.tile([0.0, -1.0], (n, 1)))
    starts.append(np.column_stack([np.full(n, bx), up[:-1]]))
    ends.append(np.column_stack([np.full(n, bx), up[1:]]))
    normals.append(np.tile([1.0, 0.0], (n, 1)))
    starts.append(np.column_stack([ticks[:0:-1], np.full(n, by)]))
    ends.append(np.column_stack([ticks[-2::-1], np.full(n, by)]))
    normals.append(np.tile([0.0, 1.0], (n, 1)))
    starts.append(np.column_stack([np.full(n, ax), up[:0:-1]]))
    ends.append(np.column_stack([np.full(n, ax), up[-2::-1]]))
    normals.append(np.tile([-1.0, 0.0], (n, 1)))
    a = np.vstack(starts)
    b = np.vstack(ends)
    return BoundaryMesh(a, b, 0.5 * (a + b), np.full(4 * n, w),
                        np.vstack(normals), tuple(domain))


def _self_integral(kernel, w):
    """Analytic single-layer integral over an element from its midpoint."""
    if kernel.kind == "helmholtz2d":
        return 0.25j * singular_diagonal_2d(kernel.kappa, w)
    if kernel.kind == "laplace2d":
        # 2 * int_0^{w/2} -(1/2pi) ln t dt
        return complex((w / (2 * math.pi)) * (1.0 - math.log(w / 2)))
    raise ValueError("self integral defined for 2D kernels only")


def element_integral(element, point, layer, kernel, rule=4):
    """Layer-potential integral of one element seen from one point.

    Off the element this is the |J| Gauss sum with |J| = width/2; at the
    element's own midpoint the single layer uses the analytic self
    integral and the double layer vanishes (flat element).  A point on a
    different element's interior has no finite collocation value, so that
    raises SingularError.
    """
    if layer not in ("single", "double"):
        raise ValueError(f"unknown layer {layer!r}")
    p = np.asarray(point, dtype=np.float64)
    w = element.width
    if np.abs(p - element.midpoint).max() <= 1e-12 * max(1.0, w):
        if layer == "double":
            return 0j
        return _self_integral(kernel, w)
    seg = element.b - element.a
    t = float(np.dot(p - element.a, seg)) / float(np.dot(seg, seg))
    if 0.0 < t < 1.0:
        foot = element.a + t * seg
        if np.linalg.norm(p - foot) <= 1e-12 * max(1.0, w):
            raise SingularError("collocation point lies on a foreign "
                                "element")
    nodes, wts = gauss_legendre(rule)
    q = element.a[None, :] + (0.5 * (nodes + 1.0))[:, None] * seg[None, :]
    dx = p[0] - q[:, 0]
    dy = p[1] - q[:, 1]
    r = np.hypot(dx, dy)
    if layer == "single":
        vals = single_layer_values(kernel, r, precise=True)
    else:
        rho_n = dx * element.normal[0] + dy * element.normal[1]
        vals = double_layer_values(kernel, rho_n, r, precise=True)
    return complex(0.5 * w * np.dot(wts, vals))


def single_layer_matrix(mesh, kernel, rule=4):
    """Dense collocation matrix G[i, j] = single-layer of element j at
    midpoint i, with the analytic diagonal."""
    pts, fac, _ = mesh.gauss_sources(rule)
    dx = mesh.midpoints[:, 0, None] - pts[None, :, 0]
    dy = mesh.midpoints[:, 1, None] - pts[None, :, 1]
    vals = single_layer_values(kernel, np.hypot(dx, dy))
    g = (vals.reshape(mesh.n, mesh.n, -1) * fac[None, :, :]).sum(axis=2)
    for j in range(mesh.n):
        g[j, j] = _self_integral(kernel, float(mesh.widths[j]))
    return g


def double_layer_matrix(mesh, kernel, rule=4):
    """Dense collocation matrix of the double layer; zero diagonal."""
    pts, fac, nrm = mesh.gauss_sources(rule)
    dx = mesh.midpoints[:, 0, None] - pts[None, :, 0]
    dy = mesh.midpoints[:, 1, None] - pts[None, :, 1]
    rho_n = dx * nrm[None, :, 0] + dy * nrm[None, :, 1]
    vals = double_layer_values(kernel, rho_n, np.hypot(dx, dy))
    d = (vals.reshape(mesh.n, mesh.n, -1) * fac[None, :, :]).sum(axis=2)
    np.fill_diagonal(d, 0.0)
    return d


def _self_correction(mesh, kernel, rule=4):
    """Per-element swap of the smooth Gauss self term for the analytic one.

    The plan-based matvec quadratures every element smoothly, including
    each element against its own midpoint; adding corr * q afterwards
    replaces exactly that term.
    """
    nodes, wts = gauss_legendre(rule)
    corr = np.empty(mesh.n, dtype=np.complex128)
    for j in range(mesh.n):
        w = float(mesh.widths[j])
        r = 0.5 * w * np.abs(nodes)
        smooth = 0.5 * w * np.dot(wts, single_layer_values(kernel, r))
        corr[j] = _self_integral(kernel, w) - smooth
    return corr


@dataclass(frozen=True)
class VolumeSources:
    """Interior point sources: quadrature nodes, weights, and densities."""

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not (len(self.points) == len(self.weights) == len(self.values)):
            raise ValueError("points, weights, values must align")
        if np.any(self.weights <= 0):
            raise DomainError("volume weights must be positive")

    @property
    def charges(self):
        return self.weights * np.asarray(self.values, dtype=np.complex128)


def _check_inside(points, domain):
    ax, bx, ay, by = domain
    x, y = points[:, 0], points[:, 1]
    if not (np.all(x > ax) and np.all(x < bx)
            and np.all(y > ay) and np.all(y < by)):
        raise DomainError("volume source points must lie strictly inside "
                          "the domain")


def volume_to_boundary(sources, mesh, kernel, config=None):
    """Volume term at the collocation points, one plan evaluation."""
    _check_inside(sources.points, mesh.domain)
    plan = FmmPlan(kernel, sources.points, mesh.midpoints, config)
    return plan.apply(sources.charges)


def solve_boundary_flux(mesh, dirichlet, volume_term, kernel, config=None,
                        inner_tol=1e-6, inner_restart=30, inner_cap=200,
                        rule=4, gmat=None):
    """Normal flux q solving G q = (I/2 + D) u_Gamma - volume_term.

    The matvec with G runs through a plan plus the analytic-diagonal
    correction unless a materialized gmat is supplied.  Raises
    InnerSolveError (carrying the partial flux) when the inner GMRES
    exceeds its cap.
    """
    rhs = -np.asarray(volume_term, dtype=np.complex128)
    if dirichlet is not None:
        u = np.asarray(dirichlet, dtype=np.complex128)
        if np.any(u):
            rhs = rhs + 0.5 * u + double_layer_matrix(mesh, kernel,
                                                      rule) @ u
    if not np.any(rhs):
        return np.zeros(mesh.n, dtype=np.complex128)
    if gmat is not None:
        matvec = gmat.__matmul__
    else:
        pts, fac, _ = mesh.gauss_sources(rule)
        plan = FmmPlan(kernel, pts, mesh.midpoints, config)
        corr = _self_correction(mesh, kernel, rule)

        def matvec(q):
            return plan.apply((q.reshape(mesh.n, 1) * fac).ravel()) + corr * q

    try:
        rep = gmres(matvec, rhs, tol=inner_tol, restart=inner_restart,
                    max_outer=inner_cap, maxiter=inner_cap)
    except BreakdownError as exc:
        raise InnerSolveError(f"boundary solve broke down: {exc}") from exc
    if not rep.converged:
        raise InnerSolveError(
            f"boundary solve hit the {inner_cap}-iteration cap at relative "
            f"residual {rep.final_residual:.3e}",
            flux=rep.solution, residual=rep.final_residual)
    return rep.solution


def evaluate_interior(mesh, flux, dirichlet, sources, targets, kernel,
                      config=None, rule=4):
    """Representation formula S[q] - D[u_Gamma] + volume term at targets.

    Each present term costs one plan evaluation; pass None (or zeros) to
    drop a term.
    """
    targets = np.asarray(targets, dtype=np.float64)
    out = np.zeros(targets.shape[0], dtype=np.complex128)
    pts = fac = nrm = None
    if flux is not None and np.any(flux):
        pts, fac, nrm = mesh.gauss_sources(rule)
        q = np.asarray(flux, dtype=np.complex128)
        plan = FmmPlan(kernel, pts, targets, config)
        out += plan.apply((q.reshape(mesh.n, 1) * fac).ravel())
    if dirichlet is not None and np.any(dirichlet):
        if pts is None:
            pts, fac, nrm = mesh.gauss_sources(rule)
        u = np.asarray(dirichlet, dtype=np.complex128)
        plan = FmmPlan(kernel, pts, targets, config, source_normals=nrm)
        out -= plan.apply((u.reshape(mesh.n, 1) * fac).ravel())
    if sources is not None and np.any(sources.values):
        plan = FmmPlan(kernel, sources.points, targets, config)
        out += plan.apply(sources.charges)
    return out


class BemPreconditioner:
    """Boundary-integral approximate inverse of a Helmholtz FEM system.

    apply(r) treats r as a mass-weighted residual, converts it to point
    sources f_j = r_j / rowsum_j(mass) with lattice-cell quadrature
    weights, and runs the three-stage boundary pipeline with zero
    Dirichlet data.  The map is linear; an inner-solve failure degrades
    to the partial flux with a warning instead of aborting.
    """

    def __init__(self, system, eps=1e-6, theta=0.4, backend="fmm", rule=4,
                 inner_restart=30, inner_cap=200, ncrit=64):
        problem = system.problem
        if problem.kappa <= 0:
            raise DomainError("boundary preconditioner needs kappa > 0")
        grid = system.space.grid
        self.kernel = kernel_for(2, problem.kappa)
        self.mesh = discretize_boundary(grid.domain, grid.n)
        self.config = FmmConfig(order=accuracy_to_order(eps), theta=theta,
                                ncrit=ncrit, backend=backend)
        self.eps = float(eps)
        self.inner_tol = max(self.eps, 1e-6)
        self.inner_restart = inner_restart
        self.inner_cap = inner_cap
        self.rule = rule
        self.points = system.node_coords
        pitch = grid.h if system.space.element == "q1" else 0.5 * grid.h
        self.volume_weights = np.full(self.points.shape[0], pitch * pitch)
        # f = sigma * r makes the source charge (weight * f) equal r on a
        # Q1 lattice, where every interior basis function integrates to
        # exactly one lattice cell; Q2 node classes get their own scale
        self.sigma = 1.0 / system.mass_row_sums
        self.inner_failures = 0

        self._vol2bnd = FmmPlan(self.kernel, self.points,
                                self.mesh.midpoints, self.config)
        gpts, self._fac, _ = self.mesh.gauss_sources(rule)
        self._bnd2int = FmmPlan(self.kernel, gpts, self.points, self.config)
        self._vol2int = FmmPlan(self.kernel, self.points, None, self.config)
        self._corr = _self_correction(self.mesh, self.kernel, rule)
        self._gplan = FmmPlan(self.kernel, gpts, self.mesh.midpoints,
                              self.config)
        self._gmat = (self._materialize_g()
                      if self.mesh.n <= _DENSE_INNER_LIMIT else None)

    @property
    def n(self):
        return self.points.shape[0]

    def _g_matvec(self, q):
        charges = (q.reshape(self.mesh.n, 1) * self._fac).ravel()
        return self._gplan.apply(charges) + self._corr * q

    def _materialize_g(self):
        """Freeze the boundary operator the inner solver will iterate on.

        Columns come from the plan matvec itself, so a truncated backend's
        approximation error is captured rather than idealized away.
        """
        if self.config.backend == "direct":
            # dense assembly equals column-by-column direct summation plus
            # the diagonal correction, at one pass instead of n
            return single_layer_matrix(self.mesh, self.kernel, self.rule)
        cols = np.empty((self.mesh.n, self.mesh.n), dtype=np.complex128)
        e = np.zeros(self.mesh.n, dtype=np.complex128)
        for j in range(self.mesh.n):
            e[j] = 1.0
            cols[:, j] = self._g_matvec(e)
            e[j] = 0.0
        return cols

    def apply(self, r):
        r = np.asarray(r, dtype=np.complex128)
        if r.shape != (self.n,):
            raise ValueError("residual length must match interior nodes")
        charges = self.volume_weights * self.sigma * r
        vterm = self._vol2bnd.apply(charges)
        rhs = -vterm
        if np.any(rhs):
            try:
                flux = solve_boundary_flux(
                    self.mesh, None, vterm, self.kernel, self.config,
                    inner_tol=self.inner_tol,
                    inner_restart=self.inner_restart,
                    inner_cap=self.inner_cap, rule=self.rule,
                    gmat=self._gmat)
            except InnerSolveError as exc:
                self.inner_failures += 1
                warnings.warn(f"inner boundary solve not converged "
                              f"({exc}); using the partial flux",
                              RuntimeWarning, stacklevel=2)
                flux = (exc.flux if exc.flux is not None
                        else np.zeros(self.mesh.n, dtype=np.complex128))
        else:
            flux = np.zeros(self.mesh.n, dtype=np.complex128)
        z = self._vol2int.apply(charges)
        if np.any(flux):
            z += self._bnd2int.apply(
                (flux.reshape(self.mesh.n, 1) * self._fac).ravel())
        return z


def build_bem_precond(system, eps=1e-6, **kwargs):
    """Convenience constructor mirroring the other preconditioner builders."""
    return BemPreconditioner(system, eps=eps, **kwargs)
