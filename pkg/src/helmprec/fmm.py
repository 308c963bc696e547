"""Kernel-independent driver for 2D fast multipole summation.

Two expansion families share one tree/traversal/translation skeleton:

- Helmholtz: multipoles in the cylindrical basis J_m/H1_m with angular
  index m in [-p, p]; all translations are correlations against J-basis
  (regular) or H-basis (singular) coefficient sequences.
- Laplace: complex Taylor/Laurent coefficients of the analytic potential
  log(z - s), index k in [0, p], factorial-normalized so translations are
  binomial-free correlations.  The real kernel -log r / (2 pi) is recovered
  by taking real parts; complex charge vectors are handled by running the
  analytic pipeline on their real and imaginary parts separately.

An FmmPlan freezes geometry: trees, traversal pair lists, per-level shift
matrices, per-pair far-translation rows, and per-body expansion bases are
all built once; apply(charges) only contracts charges against them.  The
near field is evaluated directly per target leaf at apply time.

Sources may carry unit normals, switching the source basis (and the near
field) to the double-layer kernel dG/dn at the source point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special
from .errors import DomainError
from .tree import build_quadtree, dual_traversal

_MAX_ORDER = 26
_M2L_CHUNK = 50_000
_DIRECT_CHUNK = 2_000_000


def accuracy_to_order(eps):
    """Expansion order delivering roughly eps relative far-field accuracy."""
    if not 0 < eps < 1:
        raise DomainError("accuracy target must lie in (0, 1)")
    return max(1, math.ceil(-math.log10(eps) - 1e-9))


@dataclass(frozen=True)
class FmmConfig:
    order: int
    theta: float = 0.5
    ncrit: int = 64
    max_level: int = 24
    backend: str = "fmm"  # "fmm" | "direct"

    def __post_init__(self):
        if not 1 <= self.order <= _MAX_ORDER:
            raise DomainError(f"expansion order must lie in [1, {_MAX_ORDER}]")
        if self.backend not in ("fmm", "direct"):
            raise ValueError(f"unknown backend {self.backend!r}")


# ---------------------------------------------------------------------------
# direct summation (oracle and fallback backend)


def direct_eval(kernel, sources, targets, charges, normals=None):
    """Dense kernel summation, chunked over targets; skips zero separations."""
    src = np.asarray(sources, dtype=np.float64)
    tgt = np.asarray(targets, dtype=np.float64)
    q = np.asarray(charges, dtype=np.complex128)
    out = np.zeros(tgt.shape[0], dtype=np.complex128)
    rows = max(1, _DIRECT_CHUNK // max(1, src.shape[0]))
    for lo in range(0, tgt.shape[0], rows):
        hi = min(lo + rows, tgt.shape[0])
        dx = tgt[lo:hi, 0, None] - src[None, :, 0]
        dy = tgt[lo:hi, 1, None] - src[None, :, 1]
        r = np.hypot(dx, dy)
        sing = r == 0.0
        r[sing] = 1.0
        if normals is None:
            vals = special.single_layer_values(kernel, r)
        else:
            rho_n = dx * normals[None, :, 0] + dy * normals[None, :, 1]
            vals = special.double_layer_values(kernel, rho_n, r)
        vals[sing] = 0.0
        out[lo:hi] = vals @ q
    return out


# ---------------------------------------------------------------------------
# expansion bases


def _helm_body_basis(kappa, rho, order, conj_sign):
    """Rows J_m(kappa |rho|) exp(conj_sign * i m theta) for m in [-p, p].

    conj_sign = -1 gives the source (multipole) basis, +1 the target
    (local evaluation) basis.  Shape (nbodies, 2 * order + 1).
    """
    p = order
    r = np.hypot(rho[:, 0], rho[:, 1])
    theta = np.arctan2(rho[:, 1], rho[:, 0])
    jseq = special.bessel_j_sequence(p, kappa * r)
    e = np.exp(conj_sign * 1j * theta)
    out = np.empty((rho.shape[0], 2 * p + 1), dtype=np.complex128)
    ep = np.ones_like(e)
    for m in range(p + 1):
        if m > 0:
            ep = ep * e
        out[:, p + m] = jseq[m] * ep
        if m > 0:
            out[:, p - m] = ((-1) ** m) * jseq[m] * np.conj(ep)
    return out


def _helm_dipole_basis(kappa, rho, normals, order):
    """Source basis rows for unit double-layer sources.

    d/dn_Q of the J-expansion of H0(kappa |P - Q|): with B_m the monopole
    source basis and n = nx + i ny,
    row_m = (kappa / 2) (conj(n) B_{m-1} - n B_{m+1}).
    """
    p = order
    full = _helm_body_basis(kappa, rho, p + 1, conj_sign=-1)  # m in [-p-1, p+1]
    n_c = normals[:, 0] + 1j * normals[:, 1]
    lo = full[:, 0:2 * p + 1]       # B_{m-1}
    hi = full[:, 2:2 * p + 3]       # B_{m+1}
    return (kappa / 2) * (np.conj(n_c)[:, None] * lo - n_c[:, None] * hi)


def _lap_source_basis(rho, order, normals=None):
    """Rows (-s)^k / k! (monopole) or the dipole derivative thereof."""
    s = rho[:, 0] + 1j * rho[:, 1]
    out = np.zeros((rho.shape[0], order + 1), dtype=np.complex128)
    if normals is None:
        t = np.ones_like(s)
        out[:, 0] = t
        for k in range(1, order + 1):
            t = t * (-s) / k
            out[:, k] = t
    else:
        n_c = normals[:, 0] + 1j * normals[:, 1]
        t = np.ones_like(s)  # (-s)^{j-1} / (j-1)!
        for j in range(1, order + 1):
            out[:, j] = -n_c * t
            t = t * (-s) / j
    return out


def _lap_target_basis(rho, order):
    """Rows delta^n for the local Taylor evaluation."""
    d = rho[:, 0] + 1j * rho[:, 1]
    out = np.empty((rho.shape[0], order + 1), dtype=np.complex128)
    out[:, 0] = 1.0
    for n in range(1, order + 1):
        out[:, n] = out[:, n - 1] * d
    return out


# ---------------------------------------------------------------------------
# translation matrices (applied as row @ T.T)


def _helm_regular_coeffs(kappa, d, order):
    """I_m(d) = J_m(kappa |d|) e^{i m angle(d)} for m in [-order, order]."""
    r = math.hypot(d[0], d[1])
    th = math.atan2(d[1], d[0])
    jseq = special.bessel_j_sequence(order, np.array([r * kappa]))[:, 0]
    out = np.empty(2 * order + 1, dtype=np.complex128)
    for m in range(order + 1):
        out[order + m] = jseq[m] * np.exp(1j * m * th)
        out[order - m] = ((-1) ** m) * jseq[m] * np.exp(-1j * m * th)
    return out

def _helm_shift_matrix(kappa, d, p):
    """T[n, j] = I_{j-n}(d); new coefficients are rows @ T.T."""
    iv = _helm_regular_coeffs(kappa, d, 2 * p)
    idx = np.arange(2 * p + 1)
    return iv[idx[None, :] - idx[:, None] + 2 * p]


def _lap_m2m_matrix(d, p):
    """T[k, j] = (-d)^{k-j} / (k-j)!; d = old center minus new center."""
    dc = complex(d[0], d[1])
    pw = np.ones(p + 1, dtype=np.complex128)
    for k in range(1, p + 1):
        pw[k] = pw[k - 1] * (-dc) / k
    out = np.zeros((p + 1, p + 1), dtype=np.complex128)
    for k in range(p + 1):
        out[k, :k + 1] = pw[k::-1]
    return out


def _lap_l2l_matrix(e, p):
    """T[n, m] = C(m, n) e^{m-n}; e = new center minus old center."""
    ec = complex(e[0], e[1])
    out = np.zeros((p + 1, p + 1), dtype=np.complex128)
    for n in range(p + 1):
        t = 1.0 + 0j
        for m in range(n, p + 1):
            out[n, m] = t * math.comb(m, n)
            t = t * ec
    return out


# ---------------------------------------------------------------------------
# the plan


class FmmPlan:
    """Geometry-frozen evaluator of sum_j q_j K(target_i, source_j)."""

    def __init__(self, kernel, sources, targets=None, config=None,
                 source_normals=None):
        if kernel.dim != 2:
            raise ValueError("fast summation supports 2D kernels only")
        self.kernel = kernel
        self.config = config or FmmConfig(order=6)
        self.sources = np.ascontiguousarray(np.asarray(sources, dtype=np.float64))
        self_targets = targets is None or targets is sources
        self.targets = (self.sources if self_targets else
                        np.ascontiguousarray(np.asarray(targets, dtype=np.float64)))
        self.dipole = source_normals is not None
        if self.dipole:
            self.normals = np.asarray(source_normals, dtype=np.float64)
            if self.normals.shape != self.sources.shape:
                raise ValueError("one unit normal per source point required")
        else:
            self.normals = None
        self.helm = kernel.is_helmholtz
        if self.config.backend == "direct":
            return

        cfg = self.config
        p = cfg.order
        self.src_tree = build_quadtree(self.sources, cfg.ncrit, cfg.max_level)
        self.tgt_tree = (self.src_tree if self_targets else
                         build_quadtree(self.targets, cfg.ncrit, cfg.max_level))
        fs, ft, ns, nt = dual_traversal(self.src_tree, self.tgt_tree, cfg.theta)
        self.far_src, self.far_tgt = fs, ft
        self.stats = {
            "far_pairs": int(fs.size), "near_pairs": int(ns.size),
            "src_cells": self.src_tree.ncells, "tgt_cells": self.tgt_tree.ncells,
            "order": p,
        }

        self._build_bases()
        self._build_shift_matrices()
        self._build_far_rows()
        self._build_near_lists(ns, nt)

    # -- precomputation ----------------------------------------------------

    def _leaf_centers_per_body(self, tr):
        counts = tr.body_hi[tr.leaf_ids] - tr.body_lo[tr.leaf_ids]
        return np.repeat(tr.centers[tr.leaf_ids], counts, axis=0)

    def _build_bases(self):
        p = self.config.order
        st, tt = self.src_tree, self.tgt_tree
        rho_s = st.sorted_points - self._leaf_centers_per_body(st)
        rho_t = tt.sorted_points - self._leaf_centers_per_body(tt)
        nrm_sorted = self.normals[st.perm] if self.dipole else None
        if self.helm:
            kap = self.kernel.kappa
            if self.dipole:
                self.src_basis = _helm_dipole_basis(kap, rho_s, nrm_sorted, p)
            else:
                self.src_basis = _helm_body_basis(kap, rho_s, p, conj_sign=-1)
            self.tgt_basis = _helm_body_basis(kap, rho_t, p, conj_sign=+1)
        else:
            self.src_basis = _lap_source_basis(rho_s, p, nrm_sorted)
            self.tgt_basis = _lap_target_basis(rho_t, p)
        self.src_leaf_starts = self.src_tree.body_lo[self.src_tree.leaf_ids]

    def _shift_groups(self, tr):
        """Cells grouped by (level, quadrant-relative-to-parent)."""
        groups = {}
        for c in range(1, tr.ncells):
            par = tr.parents[c]
            code = (int(tr.centers[c, 1] > tr.centers[par, 1]) << 1) | \
                int(tr.centers[c, 0] > tr.centers[par, 0])
            groups.setdefault((int(tr.levels[c]), code), []).append(c)
        return {k: np.asarray(v) for k, v in groups.items()}

    def _build_shift_matrices(self):
        p = self.config.order
        self.src_groups = self._shift_groups(self.src_tree)
        self.tgt_groups = (self.src_groups if self.tgt_tree is self.src_tree
                           else self._shift_groups(self.tgt_tree))
        self.m2m = {}
        for (lvl, code), cells in self.src_groups.items():
            c = cells[0]
            d = self.src_tree.centers[self.src_tree.parents[c]] - self.src_tree.centers[c]
            if self.helm:
                t = _helm_shift_matrix(self.kernel.kappa, d, p)
            else:
                t = _lap_m2m_matrix(-d, p)  # old center = child
            self.m2m[(lvl, code)] = t.T.copy()
        self.l2l = {}
        for (lvl, code), cells in self.tgt_groups.items():
            c = cells[0]
            e = self.tgt_tree.centers[c] - self.tgt_tree.centers[self.tgt_tree.parents[c]]
            if self.helm:
                t = _helm_shift_matrix(self.kernel.kappa, e, p)
            else:
                t = _lap_l2l_matrix(e, p)
            self.l2l[(lvl, code)] = t.T.copy()
        # upward/downward level schedules
        self.src_levels = sorted({k[0] for k in self.src_groups}, reverse=True)
        self.tgt_levels = sorted({k[0] for k in self.tgt_groups})

    def _build_far_rows(self):
        """Per far pair: translation rows turning source multipoles into
        local-coefficient contributions at the target cell."""
        p = self.config.order
        t_vec = self.tgt_tree.centers[self.far_tgt] - self.src_tree.centers[self.far_src]
        r = np.hypot(t_vec[:, 0], t_vec[:, 1])
        if self.helm:
            # rows O_q(t) = H1_q(kappa r) e^{i q phi}, q in [-2p, 2p], with the
            # kernel prefactor i/4 folded in
            phi = np.arctan2(t_vec[:, 1], t_vec[:, 0])
            h = special.hankel1_sequence(2 * p, self.kernel.kappa * r, precise=False)
            rows = np.empty((r.size, 4 * p + 1), dtype=np.complex128)
            for q in range(2 * p + 1):
                eq = np.exp(1j * q * phi)
                rows[:, 2 * p + q] = h[q] * eq
                if q > 0:
                    rows[:, 2 * p - q] = ((-1) ** q) * h[q] * np.conj(eq)
            self.far_rows = 0.25j * rows
        else:
            # G_r = (r-1)! / t^r for r in [1, 2p], plus log t, scaled by the
            # kernel prefactor -1/(2 pi)
            tc = t_vec[:, 0] + 1j * t_vec[:, 1]
            scale = -0.5 / math.pi
            g = np.empty((r.size, 2 * p), dtype=np.complex128)
            cur = 1.0 / tc
            fact = 1.0
            for rr in range(1, 2 * p + 1):
                if rr > 1:
                    fact *= rr - 1
                    cur = cur / tc
                g[:, rr - 1] = scale * fact * cur
            self.far_rows = g
            self.far_logt = scale * np.log(tc)

    def _build_near_lists(self, near_s, near_t):
        """Concatenated source-body slices per target leaf."""
        by_tgt = {}
        for s, t in zip(near_s, near_t):
            by_tgt.setdefault(int(t), []).append(int(s))
        st, tt = self.src_tree, self.tgt_tree
        self.near_work = []
        for t, ss in sorted(by_tgt.items()):
            src_idx = np.concatenate([
                np.arange(st.body_lo[s], st.body_hi[s]) for s in ss])
            self.near_work.append((tt.body_lo[t], tt.body_hi[t], src_idx))

    # -- application -------------------------------------------------------

    def apply(self, charges):
        q = np.asarray(charges, dtype=np.complex128)
        if q.shape != (self.sources.shape[0],):
            raise ValueError("charge vector length must match source count")
        if self.config.backend == "direct":
            return direct_eval(self.kernel, self.sources, self.targets, q,
                               self.normals)
        qs = q[self.src_tree.perm]
        if self.helm:
            pot = self._far_field(qs)
        else:
            pot = self._far_field(qs.real).real.astype(np.complex128)
            if np.any(qs.imag):
                pot += 1j * self._far_field(qs.imag).real
        self._near_field(qs, pot)
        out = np.empty_like(pot)
        out[self.tgt_tree.perm] = pot
        return out

    def _far_field(self, qs):
        p = self.config.order
        ncoef = 2 * p + 1 if self.helm else p + 1
        st, tt = self.src_tree, self.tgt_tree

        # P2M on leaves, M2M upward
        mp = np.zeros((st.ncells, ncoef), dtype=np.complex128)
        mp[st.leaf_ids] = np.add.reduceat(
            self.src_basis * qs[:, None], self.src_leaf_starts, axis=0)
        for lvl in self.src_levels:
            for code in range(4):
                cells = self.src_groups.get((lvl, code))
                if cells is None:
                    continue
                mp[st.parents[cells]] += mp[cells] @ self.m2m[(lvl, code)]

        # M2L over far pairs
        loc = np.zeros((tt.ncells, ncoef), dtype=np.complex128)
        for lo in range(0, self.far_src.size, _M2L_CHUNK):
            hi = min(lo + _M2L_CHUNK, self.far_src.size)
            msrc = mp[self.far_src[lo:hi]]
            rows = self.far_rows[lo:hi]
            contrib = np.zeros((hi - lo, ncoef), dtype=np.complex128)
            if self.helm:
                for qshift in range(-2 * p, 2 * p + 1):
                    nlo = max(0, -qshift)
                    nhi = 2 * p - max(0, qshift)
                    if nlo > nhi:
                        continue
                    contrib[:, nlo:nhi + 1] += (
                        rows[:, 2 * p + qshift, None]
                        * msrc[:, nlo + qshift:nhi + qshift + 1])
            else:
                acc = np.zeros((hi - lo, p + 1), dtype=np.complex128)
                sgn = 1.0
                for j in range(1, p + 1):
                    acc += (sgn * msrc[:, j])[:, None] * rows[:, j - 1:j + p]
                    sgn = -sgn
                ks = np.arange(p + 1)
                fct = np.array([math.factorial(k) for k in ks], dtype=np.float64)
                c1 = ((-1.0) ** ks) / fct
                contrib = c1 * acc
                contrib[:, 0] = acc[:, 0] + msrc[:, 0] * self.far_logt[lo:hi]
                contrib[:, 1:] += np.outer(msrc[:, 0], -c1[1:]) * rows[:, :p]
            np.add.at(loc, self.far_tgt[lo:hi], contrib)

        # L2L downward, L2P on leaves
        for lvl in self.tgt_levels:
            for code in range(4):
                cells = self.tgt_groups.get((lvl, code))
                if cells is None:
                    continue
                loc[cells] += loc[tt.parents[cells]] @ self.l2l[(lvl, code)]
        counts = tt.body_hi[tt.leaf_ids] - tt.body_lo[tt.leaf_ids]
        per_body = np.repeat(loc[tt.leaf_ids], counts, axis=0)
        return np.einsum("ij,ij->i", self.tgt_basis, per_body)

    def _near_field(self, qs, pot):
        st, tt = self.src_tree, self.tgt_tree
        sx, sy = st.sorted_points[:, 0], st.sorted_points[:, 1]
        nrm = self.normals[st.perm] if self.dipole else None
        for tlo, thi, src_idx in self.near_work:
            dx = tt.sorted_points[tlo:thi, 0, None] - sx[src_idx][None, :]
            dy = tt.sorted_points[tlo:thi, 1, None] - sy[src_idx][None, :]
            r = np.hypot(dx, dy)
            sing = r == 0.0
            if sing.any():
                r = np.where(sing, 1.0, r)
            if self.dipole:
                rho_n = dx * nrm[src_idx, 0][None, :] + dy * nrm[src_idx, 1][None, :]
                vals = special.double_layer_values(self.kernel, rho_n, r)
            else:
                vals = special.single_layer_values(self.kernel, r)
            if sing.any():
                vals[sing] = 0.0
            pot[tlo:thi] += vals @ qs[src_idx]


# ---------------------------------------------------------------------------
# reference evaluation of raw expansions (used by the test suite)


def multipole_far_value(kernel, coeffs, center, point):
    """Potential of a multipole expansion at a well-separated point.

    For Helmholtz this includes the i/4 kernel prefactor; for Laplace it
    returns the raw analytic potential phi (take -Re(phi)/(2 pi) to compare
    against the real kernel).
    """
    dx = point[0] - center[0]
    dy = point[1] - center[1]
    r = math.hypot(dx, dy)
    if kernel.is_helmholtz:
        p = (len(coeffs) - 1) // 2
        h = special.hankel1_sequence(p, np.array([kernel.kappa * r]))[:, 0]
        th = math.atan2(dy, dx)
        tot = 0j
        for m in range(-p, p + 1):
            hm = h[abs(m)] * ((-1) ** m if m < 0 else 1)
            tot += coeffs[p + m] * hm * np.exp(1j * m * th)
        return 0.25j * tot
    u = complex(dx, dy)
    tot = coeffs[0] * np.log(u)
    sgn = 1.0
    for k in range(1, len(coeffs)):
        tot += coeffs[k] * sgn * math.factorial(k - 1) / u ** k
        sgn = -sgn
    return tot
