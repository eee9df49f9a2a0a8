import numpy as np
import pytest
import scipy.sparse as sp

from stokesbc.assembly import assemble_bordered_system
from stokesbc.fe_spaces import MINI, TAYLOR_HOOD, build_dofmap
from stokesbc.mesh import build_domain, refine_uniform, unit_square
from stokesbc.solver import SolveError, solve, solve_linear


def test_two_by_two():
    m = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x, report = solve_linear(m, np.array([3.0, 3.0]))
    assert np.allclose(x, [1.0, 1.0], atol=1e-14)
    assert report.method == "direct_factorization"
    assert report.iterations == 0


def test_homogeneous_rhs():
    m = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x, report = solve_linear(m, np.zeros(2))
    assert np.all(x == 0)
    assert report.residual_norm == 0.0


def test_residual_contract():
    rng = np.random.default_rng(31)
    n = 60
    a = sp.random(n, n, density=0.1, random_state=rng.integers(1 << 31))
    m = (a + a.T + 10 * sp.eye(n)).tocsr()
    rhs = rng.standard_normal(n)
    tol = 1e-10
    x, report = solve_linear(m, rhs, tol=tol)
    assert report.residual_norm <= tol * np.linalg.norm(rhs)
    assert report.residual_norm == pytest.approx(
        np.linalg.norm(rhs - m @ x), rel=1e-12)


def test_invalid_tol():
    with pytest.raises(ValueError):
        solve_linear(sp.eye(2).tocsr(), np.ones(2), tol=0.0)


def test_singular_system_reported():
    m = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolveError):
        solve_linear(m, np.array([1.0, 0.0]))


def stokes_system(pairing=TAYLOR_HOOD, refinements=1, alpha_reg=1.0, seed=37):
    mesh = unit_square()
    for _ in range(refinements):
        mesh = refine_uniform(mesh)
    dm = build_dofmap(mesh, pairing)
    rng = np.random.default_rng(seed)
    trace = rng.standard_normal((dm.n_boundary_dofs, 2))
    return assemble_bordered_system(mesh, dm, trace, alpha_reg=alpha_reg)


def test_permutation_invariance():
    system = stokes_system()
    m = system.matrix().tocsr()
    rhs = system.rhs()
    x_ref, _ = solve_linear(m, rhs)
    rng = np.random.default_rng(41)
    perm = rng.permutation(m.shape[0])
    p = sp.coo_matrix((np.ones(len(perm)), (np.arange(len(perm)), perm)),
                      shape=m.shape).tocsr()
    x_perm, _ = solve_linear(p @ m @ p.T, p @ rhs)
    back = p.T @ x_perm
    scale = np.abs(x_ref).max()
    assert np.abs(back - x_ref).max() < 1e-9 * scale


@pytest.mark.parametrize("pairing", [TAYLOR_HOOD, MINI])
@pytest.mark.parametrize("domain_id", ["convex", "nonconvex"])
def test_bordered_system_nonsingular(pairing, domain_id):
    # numerical witness of the discrete inf-sup condition: the solve succeeds
    # on every tested mesh/pairing as long as alpha_reg > 0
    mesh = refine_uniform(build_domain(domain_id))
    dm = build_dofmap(mesh, pairing)
    rng = np.random.default_rng(43)
    trace = rng.standard_normal((dm.n_boundary_dofs, 2))
    system = assemble_bordered_system(mesh, dm, trace, alpha_reg=1.0)
    sol, report = solve(system)
    assert np.all(np.isfinite(sol.velocity))
    assert report.residual_norm <= 1e-10 * np.linalg.norm(system.rhs())


def test_minres_agrees_with_direct():
    system = stokes_system(refinements=1)
    sol_direct, _ = solve(system)
    sol_minres, report = solve(system, tol=1e-9, method="minres_uzawa")
    assert report.method == "minres_uzawa"
    assert report.iterations > 0
    scale = np.abs(sol_direct.velocity).max()
    assert np.abs(sol_direct.velocity - sol_minres.velocity).max() \
        < 1e-6 * scale
    assert sol_direct.delta_h == pytest.approx(sol_minres.delta_h, abs=1e-9)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        solve_linear(sp.eye(2).tocsr(), np.ones(2), method="gmres")
