"""Cylinder Bessel/Hankel functions and free-space Green's kernels.

Everything downstream (multipole expansions, boundary integrals, point
kernels) is built on the four base functions J0, Y0, J1, Y1 plus stable
recurrences:

- ascending power series for x below the crossover, Hankel's phase-form
  asymptotic expansion above it;
- downward (Miller) recurrence with even-order-sum normalization for J_n
  sequences, upward recurrence for Y_n sequences.

Two accuracy tiers coexist.  The public scalar API and the sequence
generators sum the base series in extended precision with the crossover at
x = 16, which keeps the absolute error near 1e-14 through the crossover
region (plain float64 with a crossover at 12 bottoms out near 4e-11 there,
not enough for the 1e-10 Wronskian check).  The vectorized kernel-value
helpers used by the N-body hot paths stay in float64 with the crossover at
12; their ~1e-10 worst-case error is far below the accuracy any multipole
configuration in this package targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SingularError

EULER_GAMMA = 0.5772156649015328606065121
#: exp(Euler's constant); appears in the small-argument Y0 and in the
#: closed-form singular self-integral of H0.
GAMMA_E = math.exp(EULER_GAMMA)

_CUTOFF_FAST = 12.0
_CUTOFF_PRECISE = 16.0
_SMALL_SERIES_X = 2.0  # below this, J_n comes from its own ascending series
_MAX_ORDER = 64


# ---------------------------------------------------------------------------
# base values J0, Y0, J1, Y1


def _base_series(x, dtype):
    """Ascending-series J0, Y0, J1, Y1 for an array of small positive x."""
    xs = np.asarray(x, dtype=dtype)
    q = xs * xs / 4
    one = np.ones_like(xs)

    j0 = one.copy()
    t0 = one.copy()
    sh0 = np.zeros_like(xs)  # sum H_k * (-q)^k / (k!)^2
    j1s = one.copy()  # sum over k of (-q)^k / (k! (k+1)!)
    t1 = one.copy()
    sh1 = np.zeros_like(xs)  # sum (H_k + H_{k+1}) * (-q)^k / (k! (k+1)!)
    harm = 0.0
    nterms = 52
    for k in range(1, nterms + 1):
        t0 = t0 * (-q) / (k * k)
        j0 += t0
        harm += 1.0 / k
        sh0 += t0 * harm
        t1 = t1 * (-q) / (k * (k + 1))
        j1s += t1
        sh1 += t1 * (harm + harm + 1.0 / (k + 1))
    # H_0 + H_1 = 1 contribution for the k = 0 term of the Y1 sum
    sh1 += 1.0

    lg = np.log(xs / 2) + dtype(EULER_GAMMA)
    j1 = (xs / 2) * j1s
    y0 = (2 / math.pi) * (lg * j0 - sh0)
    y1 = (2 / math.pi) * lg * j1 - 2 / (math.pi * xs) - (xs / (2 * math.pi)) * sh1
    f64 = np.float64
    return j0.astype(f64), y0.astype(f64), j1.astype(f64), y1.astype(f64)


def _base_asymptotic(x, n):
    """Phase-form asymptotic (J_n, Y_n) for large x, n in {0, 1}.

    Sums the complex Hankel series with adaptive truncation at the smallest
    term, giving ~exp(-2x) absolute accuracy.
    """
    xs = np.asarray(x, dtype=np.float64)
    mu = 4.0 * n * n
    term = np.ones(xs.shape, dtype=np.complex128)
    total = term.copy()
    active = np.ones(xs.shape, dtype=bool)
    last = np.abs(term)
    for k in range(40):
        term = term * (1j * (mu - (2 * k + 1) ** 2) / (8 * (k + 1) * xs))
        mag = np.abs(term)
        active &= mag < last
        total += np.where(active, term, 0.0)
        last = mag
        if not active.any():
            break
    chi = xs - (2 * n + 1) * math.pi / 4
    h = np.sqrt(2 / (math.pi * xs)) * np.exp(1j * chi) * total
    return h.real, h.imag


def _base_values(x, precise):
    """J0, Y0, J1, Y1 for positive x (array), selecting series/asymptotic."""
    xs = np.asarray(x, dtype=np.float64)
    cutoff = _CUTOFF_PRECISE if precise else _CUTOFF_FAST
    dtype = np.longdouble if precise else np.float64
    out = [np.empty(xs.shape) for _ in range(4)]
    small = xs <= cutoff
    if small.any():
        j0, y0, j1, y1 = _base_series(xs[small], dtype)
        for dst, src in zip(out, (j0, y0, j1, y1)):
            dst[small] = src
    big = ~small
    if big.any():
        xb = xs[big]
        j0, y0 = _base_asymptotic(xb, 0)
        j1, y1 = _base_asymptotic(xb, 1)
        for dst, src in zip(out, (j0, y0, j1, y1)):
            dst[big] = src
    return tuple(out)


# ---------------------------------------------------------------------------
# sequences


def bessel_j_sequence(nmax, x, out=None):
    """J_n(x) for n = 0..nmax, vectorized over x >= 0.

    Returns an array of shape (nmax + 1, len(x)).  Uses the per-order
    ascending series for x <= 2 (no cancellation, no overflow risk at tiny
    arguments) and Miller's downward recurrence normalized with
    ``J0 + 2 sum J_{2k} = 1`` elsewhere.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if (xs < 0).any():
        raise DomainError("bessel_j_sequence requires x >= 0")
    res = np.zeros((nmax + 1, xs.size)) if out is None else out
    flat = xs.ravel()

    zero = flat == 0.0
    if zero.any():
        res[0, zero] = 1.0

    small = (flat > 0.0) & (flat <= _SMALL_SERIES_X)
    if small.any():
        xsm = flat[small]
        q = xsm * xsm / 4
        pref = np.ones_like(xsm)  # (x/2)^n / n!
        for n in range(nmax + 1):
            if n > 0:
                pref = pref * (xsm / 2) / n
            term = pref.copy()
            acc = term.copy()
            for k in range(1, 24):
                term = term * (-q) / (k * (n + k))
                acc += term
            res[n, small] = acc

    big = flat > _SMALL_SERIES_X
    if big.any():
        xb = flat[big]
        base = max(nmax, int(math.ceil(xb.max())))
        mstart = base + 26 + int(8 * base ** (1.0 / 3.0))
        hi = np.zeros_like(xb)
        mid = np.full_like(xb, 1e-150)
        norm = np.zeros_like(xb)
        cols = np.zeros((nmax + 1, xb.size))
        if mstart <= nmax:  # pragma: no cover - mstart always exceeds nmax
            cols[mstart] = mid
        for m in range(mstart - 1, -1, -1):
            cur = (2.0 * (m + 1) / xb) * mid - hi
            hi, mid = mid, cur
            if m <= nmax:
                cols[m] = cur
            if m > 0 and m % 2 == 0:
                norm += 2.0 * cur
        norm += mid
        cols /= norm
        res[:, big] = cols
    return res


def bessel_y_sequence(nmax, x, precise=True):
    """Y_n(x) for n = 0..nmax, vectorized over x > 0 (upward recurrence)."""
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if (xs <= 0).any():
        raise DomainError("Y_n is singular at x <= 0")
    _, y0, _, y1 = _base_values(xs, precise)
    res = np.zeros((nmax + 1, xs.size))
    res[0] = y0
    if nmax >= 1:
        res[1] = y1
    for n in range(1, nmax):
        res[n + 1] = (2.0 * n / xs) * res[n] - res[n - 1]
    return res


def hankel1_sequence(nmax, x, precise=True):
    """H1_n(x) = J_n(x) + i Y_n(x) for n = 0..nmax, x > 0."""
    return bessel_j_sequence(nmax, x) + 1j * bessel_y_sequence(nmax, x, precise)


# ---------------------------------------------------------------------------
# scalar API


def _check_order(n):
    if not isinstance(n, (int, np.integer)):
        raise DomainError("order must be an integer")
    if n < 0 or n > _MAX_ORDER:
        raise DomainError(f"order must be in [0, {_MAX_ORDER}], got {n}")


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x), n in [0, 64], x >= 0."""
    _check_order(n)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if (xs < 0).any():
        raise DomainError("bessel_j requires x >= 0")
    if n <= 1:
        res = np.empty(xs.shape)
        pos = xs > 0
        if pos.any():
            j0, _, j1, _ = _base_values(xs[pos], precise=True)
            res[pos] = j0 if n == 0 else j1
        res[~pos] = 1.0 if n == 0 else 0.0
    else:
        res = bessel_j_sequence(n, xs)[n]
    return float(res[0]) if np.isscalar(x) else res.reshape(np.shape(x))


def bessel_y(n, x):
    """Bessel function of the second kind Y_n(x), n in [0, 64], x > 0."""
    _check_order(n)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if (xs <= 0).any():
        raise DomainError("Y_n is singular at x <= 0")
    if n <= 1:
        _, y0, _, y1 = _base_values(xs, precise=True)
        res = y0 if n == 0 else y1
    else:
        res = bessel_y_sequence(n, xs)[n]
    return float(res[0]) if np.isscalar(x) else res.reshape(np.shape(x))


def hankel1(n, x):
    """Hankel function of the first kind H1_n(x) = J_n(x) + i Y_n(x)."""
    j = bessel_j(n, x)
    y = bessel_y(n, x)
    return complex(j + 1j * y) if np.isscalar(x) else j + 1j * y


# ---------------------------------------------------------------------------
# kernels


_KINDS = ("laplace2d", "helmholtz2d", "laplace3d", "helmholtz3d")


@dataclass(frozen=True)
class Kernel:
    """Free-space kernel identifier: family/dimension plus wavenumber."""

    kind: str
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.is_helmholtz:
            if not self.kappa > 0:
                raise DomainError("Helmholtz kernels require kappa > 0")
        elif self.kappa != 0.0:
            raise DomainError("Laplace kernels require kappa == 0")

    @property
    def is_helmholtz(self):
        return self.kind.startswith("helmholtz")

    @property
    def dim(self):
        return 2 if self.kind.endswith("2d") else 3

    @classmethod
    def laplace2d(cls):
        return cls("laplace2d")

    @classmethod
    def helmholtz2d(cls, kappa):
        return cls("helmholtz2d", float(kappa))

    @classmethod
    def laplace3d(cls):
        return cls("laplace3d")

    @classmethod
    def helmholtz3d(cls, kappa):
        return cls("helmholtz3d", float(kappa))


def kernel_for(dim, kappa):
    """Kernel for the given dimension; kappa = 0 routes to the Laplace family."""
    if kappa < 0:
        raise DomainError("wavenumber must be >= 0")
    if dim == 2:
        return Kernel.helmholtz2d(kappa) if kappa > 0 else Kernel.laplace2d()
    if dim == 3:
        return Kernel.helmholtz3d(kappa) if kappa > 0 else Kernel.laplace3d()
    raise ValueError(f"unsupported dimension {dim}")


def single_layer_values(kernel, r, precise=False):
    """G(r) for an array of positive separations r (complex output)."""
    r = np.asarray(r, dtype=np.float64)
    if kernel.kind == "laplace2d":
        return (-0.5 / math.pi) * np.log(r) + 0j
    if kernel.kind == "helmholtz2d":
        j0, y0, _, _ = _base_values(kernel.kappa * r, precise)
        return 0.25 * (-y0 + 1j * j0)
    if kernel.kind == "laplace3d":
        return 1.0 / (4 * math.pi * r) + 0j
    return np.exp(1j * kernel.kappa * r) / (4 * math.pi * r)


def double_layer_values(kernel, rho_n, r, precise=False):
    """Double-layer kernel dG/dn at the source point.

    ``rho_n`` is (P - Q) . n_hat where P is the evaluation point, Q the
    source point carrying the unit normal n_hat; ``r`` = |P - Q|.
    """
    r = np.asarray(r, dtype=np.float64)
    rho_n = np.asarray(rho_n, dtype=np.float64)
    if kernel.kind == "laplace2d":
        return rho_n / (2 * math.pi * r * r) + 0j
    if kernel.kind == "helmholtz2d":
        _, _, j1, y1 = _base_values(kernel.kappa * r, precise)
        return (0.25j * kernel.kappa) * (j1 + 1j * y1) * (rho_n / r)
    if kernel.kind == "laplace3d":
        return rho_n / (4 * math.pi * r ** 3) + 0j
    kr = kernel.kappa * r
    return (1 - 1j * kr) * np.exp(1j * kr) * rho_n / (4 * math.pi * r ** 3)


def greens(kernel, source, target):
    """Free-space Green's function G(target, source) as a complex scalar."""
    s = np.asarray(source, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if s.shape != (kernel.dim,) or t.shape != (kernel.dim,):
        raise ValueError("point dimension does not match kernel")
    r = float(np.linalg.norm(t - s))
    if r == 0.0:
        raise SingularError("Green's function evaluated at zero separation")
    return complex(single_layer_values(kernel, np.array([r]), precise=True)[0])


def greens_normal_deriv(kernel, source, target, normal):
    """Directional derivative of G in the target argument along ``normal``.

    Equivalently (by symmetry of G) the double-layer kernel with the normal
    attached to ``target``: dG/dn_Q(P=source, Q=target).
    """
    s = np.asarray(source, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    nrm = np.asarray(normal, dtype=np.float64)
    r_vec = t - s
    r = float(np.linalg.norm(r_vec))
    if r == 0.0:
        raise SingularError("normal derivative evaluated at zero separation")
    # dG/dn at the target = double-layer kernel with rho = source - target
    rho_n = float(np.dot(-r_vec, nrm))
    return complex(double_layer_values(kernel, np.array([rho_n]), np.array([r]),
                                       precise=True)[0])


def singular_diagonal_2d(kappa, w):
    """Closed-form small-argument value of the self-integral of H0.

    Integral over a flat element of width w, collocated at its midpoint:
    ``integral_elem H0(kappa r) ds ~= w + i (2/pi) w (ln(GAMMA_E kappa w / 4) - 1)``.
    The caller scales by i/4 to obtain the single-layer self term.
    """
    if kappa <= 0:
        raise DomainError("singular diagonal requires kappa > 0")
    if w <= 0:
        raise DomainError("singular diagonal requires element width > 0")
    return complex(w, (2 / math.pi) * w * (math.log(GAMMA_E * kappa * w / 4) - 1))


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if n < 1:
        raise ValueError("rule order must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights
