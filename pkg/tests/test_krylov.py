"""Krylov solvers on dense random and structured instances."""

import numpy as np
import pytest

from helmprec import krylov
from helmprec.errors import BreakdownError
from helmprec.operators import FunctionOperator, MatrixOperator


def _instance(n, seed, complex_=True):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + n * np.eye(n)
    if complex_:
        a = a + 1j * rng.standard_normal((n, n))
    x = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_ else 0)
    return a, a @ x, x


def test_gmres_solves_well_conditioned():
    a, b, x = _instance(60, 0)
    rep = krylov.gmres(a, b, tol=1e-10, restart=60, max_outer=1)
    assert rep.converged
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-8
    assert rep.final_residual <= 1e-10


def test_gmres_true_residual_history():
    a, b, _ = _instance(40, 1)
    rep = krylov.gmres(a, b, tol=1e-12, restart=40, max_outer=1)
    # every entry must equal the recomputed true residual of nothing we can
    # see directly, but the invariants are checkable: starts at 1, final
    # entry matches the returned solution, converged <=> last <= tol
    assert rep.residual_history[0] == pytest.approx(1.0)
    true_final = np.linalg.norm(b - a @ rep.solution) / np.linalg.norm(b)
    assert rep.final_residual == pytest.approx(true_final, rel=1e-8, abs=1e-14)
    assert rep.converged == (rep.final_residual <= 1e-12)
    assert rep.iterations == len(rep.residual_history) - 1


def test_gmres_exact_inverse_one_step():
    a, b, x = _instance(50, 2)
    m_inv = np.linalg.inv(a)
    rep = krylov.gmres(a, b, m=m_inv, tol=1e-8, restart=20, max_outer=1)
    assert rep.converged
    assert rep.iterations == 1
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-6


def test_gmres_identity_preconditioner_equivalent():
    a, b, _ = _instance(30, 3)
    plain = krylov.gmres(a, b, tol=1e-9, restart=30, max_outer=1)
    ident = krylov.gmres(a, b, m=lambda v: v, tol=1e-9, restart=30, max_outer=1)
    assert plain.iterations == ident.iterations
    assert np.allclose(plain.solution, ident.solution)


def test_gmres_restart_progress():
    a, b, x = _instance(80, 4, complex_=False)
    rep = krylov.gmres(a, b, tol=1e-10, restart=10, max_outer=40)
    assert rep.converged
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-7


def test_gmres_maxiter_cap():
    a, b, _ = _instance(60, 5)
    rep = krylov.gmres(a, b, tol=1e-16, restart=20, max_outer=20, maxiter=7)
    assert rep.iterations == 7
    assert not rep.converged


def test_gmres_respects_x0():
    a, b, x = _instance(40, 6)
    rep = krylov.gmres(a, b, x0=x, tol=1e-10, restart=10, max_outer=1)
    assert rep.converged
    assert rep.iterations == 0
    assert rep.residual_history[0] <= 1e-10


def test_gmres_function_operator():
    a, b, x = _instance(35, 7)
    op = FunctionOperator(35, lambda v: a @ v)
    rep = krylov.gmres(op, b, tol=1e-10, restart=35, max_outer=1)
    assert rep.converged
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-8


def test_arnoldi_orthogonality():
    a, b, _ = _instance(100, 8)
    rep = krylov.gmres(a, b, tol=1e-14, restart=100, max_outer=1,
                       return_basis=True)
    v = rep.basis
    assert v.shape[0] >= 10
    gram = v.conj() @ v.T
    assert np.max(np.abs(gram - np.eye(v.shape[0]))) <= 1e-8
    # minimum-residual property within the cycle
    h = np.array(rep.residual_history)
    assert np.all(h[1:] <= h[:-1] + 1e-12)


def test_gmres_zero_rhs():
    a, _, _ = _instance(10, 9)
    rep = krylov.gmres(a, np.zeros(10), tol=1e-8)
    assert rep.converged and rep.iterations == 0
    assert np.all(rep.solution == 0)


def test_bicgstab_solves():
    a, b, x = _instance(60, 10)
    rep = krylov.bicgstab(a, b, tol=1e-10, maxit=200)
    assert rep.converged
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-7
    assert rep.matvecs <= 2 * rep.iterations
    assert rep.residual_history[0] == pytest.approx(1.0)
    true_final = np.linalg.norm(b - a @ rep.solution) / np.linalg.norm(b)
    assert rep.final_residual == pytest.approx(true_final, rel=1e-8, abs=1e-14)


def test_bicgstab_preconditioned():
    a, b, x = _instance(50, 11)
    m_inv = np.linalg.inv(a)
    rep = krylov.bicgstab(a, b, m=MatrixOperator(m_inv), tol=1e-9, maxit=5)
    assert rep.converged
    assert rep.iterations <= 2
    assert np.linalg.norm(rep.solution - x) / np.linalg.norm(x) < 1e-7


def test_bicgstab_breakdown_reported():
    # rhat orthogonal to r after the first update on a crafted instance is
    # fiddly; force the trivial breakdown instead: b = 0 handled separately,
    # so use an operator returning zeros to zero out (rhat, A p)
    a = np.zeros((4, 4))
    b = np.ones(4)
    with pytest.raises(BreakdownError):
        krylov.bicgstab(a, b, tol=1e-10, maxit=3)


def test_validation():
    a, b, _ = _instance(10, 12)
    with pytest.raises(ValueError):
        krylov.gmres(a, b, restart=0)
    with pytest.raises(ValueError):
        krylov.bicgstab(a, b, maxit=0)
