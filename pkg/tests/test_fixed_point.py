import csv

import numpy as np
import pytest

from thermoduct import build_channel_mesh, build_spaces, forms
from thermoduct.fields import ScalarField, constant_scalar, span_scalar
from thermoduct.fixed_point import (
    CoupledProblem,
    DivergenceError,
    State,
    backward_flow_measure,
    heat_solve,
    inner_momentum_solve,
    outer_loop,
    weak_residual,
    write_trace_csv,
)
from thermoduct.linsolve import solve_spd
from thermoduct.material import clamped_boussinesq, constant_density, make_material

from conftest import linear_field_dofs

DUCT_CENTER_SPEED = 0.0736713512666702   # series solution of -lap w = 1 on the unit square


def duct_problem(F, divisions=(2, 4, 4), alpha1=0.0, g=None):
    mesh = build_channel_mesh(2.0, 1.0, 1.0, *divisions)
    space = build_spaces(mesh)
    model = make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=alpha1,
                          law=constant_density(1.0))
    g = (F, 0.0, 0.0) if g is None else g
    return space, model, CoupledProblem(space, model, g, constant_scalar(0.0))


# -- inner momentum iteration -----------------------------------------------------


def test_inner_zero_data_one_iteration(small_space, boussinesq_model):
    prob = CoupledProblem(small_space, boussinesq_model, (0, 0, 0), constant_scalar(1.0))
    u, P, trace = inner_momentum_solve(prob, prob.theta_D, tol=1e-12)
    assert len(trace.increments) == 1
    assert np.all(u == 0.0)
    assert np.all(P == 0.0)
    assert trace.converged


def test_inner_reproduces_duct_profile():
    space, model, prob = duct_problem(F=2.0)
    u, P, trace = inner_momentum_solve(prob, np.zeros(space.n_scalar), tol=1e-12)
    sx, sy, sz = space.q2_shape
    center = (sx // 2) + sx * ((sy // 2) + sy * (sz // 2))
    assert u[center] == pytest.approx(DUCT_CENTER_SPEED * 2.0, rel=1e-2)
    # unidirectional flow: transverse components vanish, profile x-independent
    assert np.abs(u[space.n_scalar:]).max() < 1e-10
    assert np.abs(P).max() < 1e-10


def test_inner_contraction_ratio_scales_with_load():
    betas = {}
    norms = {}
    for F in (4.0, 2.0, 1.0, 0.5):
        space, model, prob = duct_problem(F, g=(F, 0.3 * F, 0.0))
        u, _, trace = inner_momentum_solve(
            prob, np.zeros(space.n_scalar), tol=1e-13, max_iter=60
        )
        betas[F] = max(trace.ratios)
        norms[F] = forms.discrete_norms(space, u, "H1")
    # contraction factor decreases with the load and scales like ||u||
    assert betas[4.0] > betas[2.0] > betas[1.0] > betas[0.5]
    for big, small in ((4.0, 2.0), (2.0, 1.0), (1.0, 0.5)):
        assert 1.6 < betas[big] / betas[small] < 2.5
        assert 1.8 < norms[big] / norms[small] < 2.2


def test_inner_divergence_reported_with_trace():
    space, model, prob = duct_problem(F=1e4, g=(1e4, 3e3, 0.0))
    with pytest.raises(DivergenceError) as err:
        inner_momentum_solve(prob, np.zeros(space.n_scalar), tol=1e-12, max_iter=40)
    assert err.value.trace is not None
    assert len(err.value.trace.ratios) >= 3


# -- linearized heat solve ----------------------------------------------------------


def test_heat_solve_constant_boundary_data(small_space, boussinesq_model):
    prob = CoupledProblem(small_space, boussinesq_model, (0, 0, 0), constant_scalar(2.0))
    vt = heat_solve(prob, np.zeros(small_space.n_velocity), np.zeros(small_space.n_scalar))
    assert np.abs(vt).max() < 1e-10


def test_heat_solve_matches_direct_solve_linear_lifting(small_space, unit_model):
    # theta_D = x: the corrected temperature solves the homogeneous heat
    # problem with trace x, independently computed by direct elimination
    lift = ScalarField(lambda x: x[:, 0], name="linear_x")
    prob = CoupledProblem(small_space, unit_model, (0, 0, 0), lift)
    vt = heat_solve(prob, np.zeros(small_space.n_velocity), np.zeros(small_space.n_scalar))
    theta = prob.theta_D + vt

    kappa = prob.kappa
    free = small_space.free_theta
    fixed = small_space.dirichlet_mask_theta
    ref = np.zeros(small_space.n_scalar)
    ref[fixed] = small_space.q2_nodes[fixed, 0]
    rhs = -(kappa[:, fixed] @ ref[fixed])
    ref[free] = solve_spd(kappa[free][:, free].tocsr(), rhs[free], tol=1e-14)
    assert np.abs(theta - ref).max() < 1e-10


def test_heat_solve_matches_direct_solve_with_dissipation(small_space, unit_model):
    # u = (y,0,0): alpha1 nu e(u):e(u) = 1/2 everywhere; compare against a
    # direct Poisson solve with that constant source plus the convection load
    u = linear_field_dofs(small_space, 0, 1)
    prob = CoupledProblem(small_space, unit_model, (0, 0, 0), constant_scalar(1.0))
    vt = heat_solve(prob, u, np.zeros(small_space.n_scalar))

    space = small_space
    free = space.free_theta
    source = forms.field_load_scalar(space, constant_scalar(0.5)).vector
    conv = forms.assemble_d_load(space, unit_model, prob.theta_D, u, prob.theta_D).vector
    rhs = source - conv - prob.lifting_load.vector
    ref = np.zeros(space.n_scalar)
    ref[free] = solve_spd(prob.kappa_ff, rhs[free], tol=1e-14)
    assert np.abs(vt - ref).max() < 1e-10


# -- outer loop ---------------------------------------------------------------------


def test_outer_zero_data_exact(small_space, boussinesq_model):
    prob = CoupledProblem(small_space, boussinesq_model, (0, 0, 0), constant_scalar(3.0))
    state, trace = outer_loop(prob)
    assert len(trace.records) == 1
    assert np.linalg.norm(state.u) == 0.0
    assert np.abs(state.theta - 3.0).max() < 1e-10


def test_outer_dirichlet_rows_exactly_zero(small_space, boussinesq_model):
    prob = CoupledProblem(
        small_space, boussinesq_model, (0, 0, -0.3), span_scalar(1, 1.0, 0.5, 1.0)
    )
    state, _ = outer_loop(prob)
    assert np.all(state.u[small_space.dirichlet_mask_u] == 0.0)
    assert np.all(state.vartheta[small_space.dirichlet_mask_theta] == 0.0)


def test_dissipation_heats_the_channel():
    # switching alpha1 on from zero must not decrease the mean temperature
    mesh = build_channel_mesh(1, 1, 2, 2, 2, 4)
    space = build_spaces(mesh)
    means = {}
    for alpha1 in (0.0, 0.05):
        model = make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=alpha1,
                              law=clamped_boussinesq(1.0, alpha_v=0.1))
        prob = CoupledProblem(space, model, (0, 0, -1.0), span_scalar(1, 1.0, 0.5, 1.0))
        state, _ = outer_loop(prob)
        vals = forms.eval_scalar(space, state.theta)
        means[alpha1] = np.einsum("q,cq->", space.wq, vals) / 2.0   # |Omega| = 2
    assert means[0.05] >= means[0.0] - 1e-13
    # and the dissipation source itself is pointwise nonnegative
    model = make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=0.05,
                          law=clamped_boussinesq(1.0, alpha_v=0.1))
    prob = CoupledProblem(space, model, (0, 0, -1.0), span_scalar(1, 1.0, 0.5, 1.0))
    state, _ = outer_loop(prob)
    diss = forms.dissipation_value(space, model, state.u, state.u)
    assert np.all(diss >= 0.0)
    assert np.einsum("q,cq->", space.wq, diss) >= 0.0


def test_translation_consistency_constant_density(small_space):
    # with a shift-invariant density law, shifting theta_D by a constant
    # shifts theta by exactly that constant and leaves the flow unchanged
    model = make_material(nu=1.0, rho0=1.0, cV=1.0, lam=1.0, alpha1=0.1,
                          law=constant_density(1.0))
    g = (0, 0, -0.5)
    base = CoupledProblem(small_space, model, g, span_scalar(1, 1.0, 0.5, 1.0))
    shifted = CoupledProblem(small_space, model, g, span_scalar(1, 6.0, 0.5, 1.0))
    s1, _ = outer_loop(base)
    s2, _ = outer_loop(shifted)
    assert np.abs(s1.u - s2.u).max() < 1e-9
    assert np.abs((s2.theta - s1.theta) - 5.0).max() < 1e-9


def test_outer_converged_residuals(small_space, boussinesq_model):
    prob = CoupledProblem(
        small_space, boussinesq_model, (0, 0, -0.4), span_scalar(1, 1.0, 0.5, 1.0)
    )
    state, trace = outer_loop(prob, outer_tol=1e-10)
    r_mom, r_heat = weak_residual(prob, state)
    assert r_mom <= 1e-9
    assert r_heat <= 1e-9
    assert state.momentum_source is not None
    assert state.heat_source is not None


def test_weak_residual_of_rest_state_is_load_norm(small_space, boussinesq_model):
    prob = CoupledProblem(small_space, boussinesq_model, (0, 0, -1.0), constant_scalar(0.0))
    rest = State(
        u=np.zeros(small_space.n_velocity),
        P=np.zeros(small_space.n_pressure),
        vartheta=np.zeros(small_space.n_scalar),
        theta_D=prob.theta_D,
    )
    r_mom, r_heat = weak_residual(prob, rest)
    load = prob.buoyancy_load(prob.theta_D)
    free = np.ones(small_space.n_velocity, dtype=bool)
    free[small_space.dirichlet_mask_u] = False
    assert r_mom == pytest.approx(np.linalg.norm(load[free]), rel=1e-12)
    assert r_heat < 1e-12


def test_outer_exhaustion_carries_trace(small_space, boussinesq_model):
    prob = CoupledProblem(
        small_space, boussinesq_model, (0, 0, -0.4), span_scalar(1, 1.0, 0.5, 1.0)
    )
    with pytest.raises(DivergenceError) as err:
        outer_loop(prob, outer_tol=1e-16, max_outer=2)
    assert err.value.trace is not None
    assert len(err.value.trace.records) == 2


def test_damping_validated(small_space, boussinesq_model):
    prob = CoupledProblem(small_space, boussinesq_model, (0, 0, 0), constant_scalar(0.0))
    with pytest.raises(ValueError):
        outer_loop(prob, damping=0.0)
    state, _ = outer_loop(prob, damping=0.5)
    assert np.all(state.u == 0.0)


# -- backward flow ------------------------------------------------------------------


def test_backward_flow_of_rest_state(small_space):
    flow = backward_flow_measure(small_space, np.zeros(small_space.n_velocity))
    assert flow.min_flux == 0.0
    assert flow.inflow_fraction == 0.0


def test_backward_flow_sign_bookkeeping_duct():
    # positive duct flow: the inlet face x=0 has u.n = -w < 0 everywhere
    # (registered as 'backward' by sign convention), the outlet none
    space, model, prob = duct_problem(F=2.0, divisions=(2, 4, 4))
    u, _, _ = inner_momentum_solve(prob, np.zeros(space.n_scalar), tol=1e-12)
    flow = backward_flow_measure(space, u)
    inlet_min, inlet_frac = flow.per_face["x0"]
    outlet_min, outlet_frac = flow.per_face["x1"]
    w_max = u[: space.n_scalar].max()
    assert inlet_frac == pytest.approx(1.0, abs=1e-12)
    assert outlet_frac <= 1e-12
    # the minimum is over surface quadrature points, which need not contain
    # the profile peak node
    assert inlet_min == pytest.approx(-w_max, rel=1e-2)
    assert inlet_min < 0
    assert flow.min_flux == inlet_min


def test_backward_flow_detects_recirculation(small_space):
    # transverse-varying axial velocity changes sign across the outlet
    u = np.zeros(small_space.n_velocity)
    u[: small_space.n_scalar] = small_space.q2_nodes[:, 1] - 0.5
    flow = backward_flow_measure(small_space, u)
    _, outlet_frac = flow.per_face["x1"]
    assert 0.2 < outlet_frac < 0.8
    assert flow.min_flux < 0


# -- trace ---------------------------------------------------------------------------


def test_trace_csv_format(tmp_path, small_space, boussinesq_model):
    prob = CoupledProblem(
        small_space, boussinesq_model, (0, 0, -0.4), span_scalar(1, 1.0, 0.5, 1.0)
    )
    state, trace = outer_loop(prob)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0].keys()) == [
        "iter", "inner_iters", "beta_hat", "d_theta_norm",
        "r_momentum", "r_heat", "min_flux", "inflow_fraction",
    ]
    assert len(rows) == len(trace.records)
    assert float(rows[-1]["d_theta_norm"]) <= 1e-10
    for rec in trace.records:
        assert rec.d_theta_norm >= 0
        assert all(r >= 0 for r in rec.inner_ratios)


def test_trace_iteration_index_monotone(small_space, boussinesq_model):
    prob = CoupledProblem(
        small_space, boussinesq_model, (0, 0, -0.4), span_scalar(1, 1.0, 0.5, 1.0)
    )
    _, trace = outer_loop(prob)
    its = [r.iteration for r in trace.records]
    assert its == list(range(1, len(its) + 1))
    assert all(r.wall_time >= 0 for r in trace.records)
