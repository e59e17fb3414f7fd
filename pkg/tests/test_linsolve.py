import numpy as np
import pytest
import scipy.sparse as sp

from thermoduct import build_channel_mesh, build_spaces, forms
from thermoduct.linsolve import (
    LinearSolveError,
    SaddleFactorization,
    SingularMatrixError,
    constrain_system,
    constrain_vector,
    load_matrix,
    save_matrix,
    solve_saddle,
    solve_spd,
)
from thermoduct.material import constant_density, make_material


def test_cg_identity():
    A = sp.identity(5, format="csr")
    r = np.arange(1.0, 6.0)
    assert np.allclose(solve_spd(A, r), r, atol=1e-14)


def test_cg_tridiagonal_hand_solution():
    # tridiag(-1, 2, -1), rhs (1,1,1): elimination gives (1.5, 2, 1.5)
    A = sp.diags([[-1, -1], [2, 2, 2], [-1, -1]], offsets=[-1, 0, 1], format="csr")
    x = solve_spd(A, np.ones(3))
    assert np.allclose(x, [1.5, 2.0, 1.5], atol=1e-12)


def test_cg_zero_rhs():
    A = sp.identity(4, format="csr")
    assert np.all(solve_spd(A, np.zeros(4)) == 0.0)


def test_cg_rejects_indefinite_matrix():
    # positive diagonal but indefinite: curvature check must trip
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(LinearSolveError) as err:
        solve_spd(A, np.array([1.0, -1.0]))
    assert err.value.residual_history


def test_cg_rejects_negative_diagonal():
    A = sp.csr_matrix(np.diag([1.0, -1.0]))
    with pytest.raises(SingularMatrixError):
        solve_spd(A, np.ones(2))


def test_cg_reports_history_on_exhaustion():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(30, 30))
    A = sp.csr_matrix(M @ M.T + 30 * np.eye(30))
    with pytest.raises(LinearSolveError) as err:
        solve_spd(A, rng.normal(size=30), tol=1e-13, max_iter=2)
    assert len(err.value.residual_history) == 3


def test_cg_iteration_budget_on_heat_operator():
    # Jacobi-preconditioned CG stays within the default 10*sqrt(n) budget
    space = build_spaces(build_channel_mesh(1, 1, 2, 3, 3, 6))
    model = make_material(nu=1, rho0=1, cV=1, lam=1, alpha1=0, law=constant_density(1))
    K = forms.assemble_kappa(space, model).matrix
    free = space.free_theta
    Kff = K[free][:, free].tocsr()
    rhs = np.random.default_rng(1).normal(size=Kff.shape[0])
    x = solve_spd(Kff, rhs, tol=1e-12)
    assert np.linalg.norm(Kff @ x - rhs) <= 1e-12 * np.linalg.norm(rhs)


def test_saddle_zero_rhs(cube_space, unit_model):
    K = forms.assemble_saddle(cube_space, unit_model).matrix
    Kc = constrain_system(K, cube_space.dirichlet_mask_u)
    x = solve_saddle(Kc, np.zeros(K.shape[0]))
    assert np.all(x == 0.0)


def test_saddle_matches_dense_oracle_on_manufactured_load(cube_space, unit_model):
    # load induced by a manufactured solenoidal field; oracle is a dense solve
    from thermoduct import verification as v

    case = v.trig_case((1.0, 1.0, 1.0), nu=unit_model.nu)
    load = forms.field_load_vector(cube_space, v.stokes_forcing(case, unit_model.nu))
    rhs = np.concatenate([load.vector, np.zeros(cube_space.n_pressure)])
    K = forms.assemble_saddle(cube_space, unit_model).matrix
    Kc = constrain_system(K, cube_space.dirichlet_mask_u)
    rhs = constrain_vector(rhs, cube_space.dirichlet_mask_u)
    x = solve_saddle(Kc, rhs)
    x_ref = np.linalg.solve(Kc.toarray(), rhs)
    assert np.linalg.norm(x - x_ref) <= 1e-8 * np.linalg.norm(x_ref)


def test_pressure_nullspace_detected_without_open_ends(cube_space, unit_model):
    # constraining every boundary velocity dof removes the do-nothing ends,
    # leaving the constant-pressure nullspace: the solve must fail loudly
    space = cube_space
    K = forms.assemble_saddle(space, unit_model).matrix
    nodes = space.q2_nodes
    Lx = space.mesh.dims[0]
    on_any = (
        (nodes[:, 0] == 0) | (nodes[:, 0] == Lx)
        | (nodes[:, 1] == 0) | (nodes[:, 1] == space.mesh.dims[1])
        | (nodes[:, 2] == 0) | (nodes[:, 2] == space.mesh.dims[2])
    )
    all_dirichlet = np.concatenate(
        [m * space.n_scalar + np.nonzero(on_any)[0] for m in range(3)]
    )
    Kc = constrain_system(K, all_dirichlet)
    rhs = constrain_vector(np.ones(K.shape[0]), all_dirichlet)
    with pytest.raises(SingularMatrixError) as err:
        solve_saddle(Kc, rhs)
    assert "pivot" in str(err.value)

    # with the open ends present no fix is needed
    Kc = constrain_system(K, space.dirichlet_mask_u)
    rhs = constrain_vector(np.ones(K.shape[0]), space.dirichlet_mask_u)
    x = solve_saddle(Kc, rhs)
    assert np.isfinite(x).all()


def test_saddle_factorization_reuse(cube_space, unit_model):
    K = forms.assemble_saddle(cube_space, unit_model).matrix
    Kc = constrain_system(K, cube_space.dirichlet_mask_u)
    fac = SaddleFactorization(Kc)
    rng = np.random.default_rng(4)
    for _ in range(3):
        rhs = constrain_vector(rng.normal(size=K.shape[0]), cube_space.dirichlet_mask_u)
        x = fac.solve(rhs)
        assert np.linalg.norm(Kc @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_solves_are_bit_identical(cube_space, unit_model):
    K = forms.assemble_saddle(cube_space, unit_model).matrix
    Kc = constrain_system(K, cube_space.dirichlet_mask_u)
    rhs = constrain_vector(
        np.random.default_rng(5).normal(size=K.shape[0]), cube_space.dirichlet_mask_u
    )
    x1 = solve_saddle(Kc, rhs)
    x2 = solve_saddle(Kc, rhs)
    assert np.array_equal(x1, x2)

    A = sp.diags([2.0] * 50, format="csr") + sp.diags([0.5] * 49, 1) + sp.diags([0.5] * 49, -1)
    b = np.random.default_rng(6).normal(size=50)
    assert np.array_equal(solve_spd(A.tocsr(), b), solve_spd(A.tocsr(), b))


def test_matrix_market_roundtrip(tmp_path, cube_space, unit_model):
    K = forms.assemble_kappa(cube_space, unit_model).matrix
    path = tmp_path / "kappa.mtx"
    save_matrix(path, K)
    K2 = load_matrix(path)
    assert K2.shape == K.shape
    assert abs(K - K2).max() < 1e-14


def test_assembled_matrices_are_canonical_csr(cube_space, unit_model):
    # sorted, duplicate-free column indices per row; finite entries
    for M in (
        forms.assemble_a(cube_space, unit_model).matrix,
        forms.assemble_kappa(cube_space, unit_model).matrix,
        forms.assemble_saddle(cube_space, unit_model).matrix,
    ):
        M = M.tocsr()
        M.check_format(full_check=True)
        assert np.all(np.isfinite(M.data))
        for row in range(min(40, M.shape[0])):
            cols = M.indices[M.indptr[row]:M.indptr[row + 1]]
            assert np.all(np.diff(cols) > 0)


def test_cg_budget_on_viscous_operator(cube_space, unit_model):
    A = forms.assemble_a(cube_space, unit_model).matrix
    free = np.ones(cube_space.n_velocity, dtype=bool)
    free[cube_space.dirichlet_mask_u] = False
    Aff = A[free][:, free].tocsr()
    rhs = np.random.default_rng(8).normal(size=Aff.shape[0])
    x = solve_spd(Aff, rhs, tol=1e-12)   # default budget is 10 sqrt(n)
    assert np.linalg.norm(Aff @ x - rhs) <= 1e-12 * np.linalg.norm(rhs)
