"""Right-preconditioned restarted GMRES and BiCGSTAB.

Both solvers work the preconditioned system A M^-1 xhat = b and report the
relative TRUE residual ||b - A x_k|| / ||b|| at every step, recomputed from
the running solution rather than read off the recurrence, so histories stay
honest when the preconditioner apply is itself inexact.

GMRES keeps the preconditioned basis vectors z_j = M^-1 v_j and forms
x = x0 + Z y directly; for a linear preconditioner this is identical to the
textbook back-substitution through M^-1 and costs one application less.

One iteration = one preconditioned operator application (an Arnoldi step
for GMRES, a full BiCGSTAB step for BiCGSTAB; the latter spends two matvecs
per step, tallied separately in the report).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BreakdownError
from .operators import as_matvec, operator_size

_BREAKDOWN_REL = 1e-14


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    matvecs: int = 0

    @property
    def final_residual(self):
        return self.residual_history[-1]


def _setup(a, b, m, x0, n):
    amv = as_matvec(a)
    mmv = as_matvec(m)
    n = operator_size(a, n if n is not None else
                      (len(b) if b is not None else None))
    b = np.asarray(b, dtype=np.complex128)
    x = (np.zeros(n, dtype=np.complex128) if x0 is None
         else np.asarray(x0, dtype=np.complex128).copy())
    return amv, mmv, b, x


def gmres(a, b, m=None, tol=1e-6, restart=20, max_outer=20, maxiter=None,
          x0=None, n=None, return_basis=False):
    """Restarted GMRES(restart) with right preconditioning.

    Stops when the relative true residual drops to tol, after max_outer
    restart cycles, or after maxiter total Arnoldi steps if given.
    return_basis attaches the last cycle's Arnoldi vectors to the report
    (attribute ``basis``, rows orthonormal) for conditioning diagnostics.
    """
    if restart < 1 or max_outer < 1:
        raise ValueError("restart and max_outer must be >= 1")
    amv, mmv, b, x = _setup(a, b, m, x0, n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveReport(x * 0, 0, True, [0.0], matvecs=0)

    cap = maxiter if maxiter is not None else restart * max_outer
    hist = [float(np.linalg.norm(b - amv(x)) / bnorm)]
    total = 0
    matvecs = 0
    basis = None
    converged = hist[-1] <= tol
    for _ in range(max_outer):
        if converged or total >= cap:
            break
        r = b - amv(x)
        beta = np.linalg.norm(r)
        if beta == 0.0:
            converged = True
            break
        nloc = b.shape[0]
        steps = min(restart, cap - total)
        v = np.empty((steps + 1, nloc), dtype=np.complex128)
        z = np.empty((steps, nloc), dtype=np.complex128)
        h = np.zeros((steps + 1, steps), dtype=np.complex128)
        cs = np.zeros(steps, dtype=np.complex128)
        sn = np.zeros(steps, dtype=np.complex128)
        g = np.zeros(steps + 1, dtype=np.complex128)
        g[0] = beta
        v[0] = r / beta
        j = 0
        while j < steps:
            z[j] = mmv(v[j])
            w = amv(z[j])
            matvecs += 1
            wnorm0 = np.linalg.norm(w)
            # modified Gram-Schmidt with one refinement pass; the second
            # sweep keeps the basis orthonormal to machine precision even
            # once iterates become nearly dependent close to convergence
            for i in range(j + 1):
                h[i, j] = np.vdot(v[i], w)
                w -= h[i, j] * v[i]
            for i in range(j + 1):
                corr = np.vdot(v[i], w)
                h[i, j] += corr
                w -= corr * v[i]
            hnext = np.linalg.norm(w)
            h[j + 1, j] = hnext
            # previous Givens rotations on the new column
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -np.conj(sn[i]) * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            # new rotation annihilating h[j+1, j]
            denom = np.hypot(abs(h[j, j]), hnext)
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j] = abs(h[j, j]) / denom
                ph = h[j, j] / abs(h[j, j]) if h[j, j] != 0 else 1.0
                sn[j] = ph * hnext / denom
                h[j, j] = ph * denom
            h[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]

            total += 1
            if return_basis:
                basis = v[:j + 1]  # rows assigned so far this cycle
            happy = hnext <= _BREAKDOWN_REL * max(wnorm0, 1e-300)
            # running solution and true residual
            y = np.linalg.solve(h[:j + 1, :j + 1], g[:j + 1])
            xk = x + y @ z[:j + 1]
            res = float(np.linalg.norm(b - amv(xk)) / bnorm)
            hist.append(res)
            if res <= tol:
                x = xk
                converged = True
                break
            if happy:
                # exact invariant subspace; residual should be ~0, and if it
                # is not the recurrence has genuinely broken down
                if res <= max(tol, 1e-10):
                    x = xk
                    converged = res <= tol
                    break
                raise BreakdownError(
                    "Arnoldi produced a zero vector at a non-small residual")
            v[j + 1] = w / hnext
            j += 1
        else:
            # cycle exhausted without convergence: restart from the update
            y = np.linalg.solve(h[:steps, :steps], g[:steps])
            x = x + y @ z[:steps]
            continue
        break  # inner loop broke: converged or invariant subspace reached

    converged = hist[-1] <= tol
    rep = SolveReport(x, total, converged, hist, matvecs=matvecs)
    if return_basis:
        rep.basis = basis if basis is not None else np.empty((0, b.shape[0]))
    return rep


def bicgstab(a, b, m=None, tol=1e-6, maxit=20, x0=None, n=None):
    """BiCGSTAB with right preconditioning and true-residual history."""
    if maxit < 1:
        raise ValueError("maxit must be >= 1")
    amv, mmv, b, x = _setup(a, b, m, x0, n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveReport(x * 0, 0, True, [0.0], matvecs=0)

    r = b - amv(x)
    rhat = r.copy()
    hist = [float(np.linalg.norm(r) / bnorm)]
    rho = alpha = omega = 1.0 + 0j
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    matvecs = 0
    it = 0
    converged = hist[-1] <= tol
    while it < maxit and not converged:
        rho_new = np.vdot(rhat, r)
        if rho_new == 0:
            raise BreakdownError("BiCGSTAB breakdown: rho = 0")
        beta = (rho_new / rho) * (alpha / omega)
        rho = rho_new
        p = r + beta * (p - omega * v)
        y = mmv(p)
        v = amv(y)
        matvecs += 1
        den = np.vdot(rhat, v)
        if den == 0:
            raise BreakdownError("BiCGSTAB breakdown: (rhat, A p) = 0")
        alpha = rho / den
        s = r - alpha * v
        it += 1
        if np.linalg.norm(s) / bnorm <= tol:
            x = x + alpha * y
            hist.append(float(np.linalg.norm(b - amv(x)) / bnorm))
            converged = hist[-1] <= tol
            break
        z = mmv(s)
        t = amv(z)
        matvecs += 1
        tt = np.vdot(t, t)
        omega = np.vdot(t, s) / tt if tt != 0 else 0.0
        if omega == 0:
            raise BreakdownError("BiCGSTAB breakdown: omega = 0")
        x = x + alpha * y + omega * z
        r = s - omega * t
        hist.append(float(np.linalg.norm(b - amv(x)) / bnorm))
        converged = hist[-1] <= tol

    converged = hist[-1] <= tol
    return SolveReport(x, it, converged, hist, matvecs=matvecs)
