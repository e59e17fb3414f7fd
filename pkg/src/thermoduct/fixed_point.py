"""Constructive fixed-point scheme for the coupled flow/temperature system.

The momentum equation is solved for a frozen temperature by successive
substitution (the convective term is re-evaluated at the previous
velocity iterate, the viscous saddle factorization is reused), which is a
Banach contraction for small data.  The linearized heat equation is then
solved with frozen convection and dissipation loads, and the outer loop
composes the two maps until the homogeneous temperature part stops
moving.  Stopping norms for both loops are discrete H1 norms of the
increments.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .linsolve import SaddleFactorization, constrain_vector, solve_spd

__all__ = [
    "State",
    "InnerTrace",
    "OuterRecord",
    "IterationTrace",
    "CoupledProblem",
    "inner_momentum_solve",
    "heat_solve",
    "outer_loop",
    "weak_residual",
    "backward_flow_measure",
    "BackwardFlowReport",
    "DivergenceError",
    "write_trace_csv",
]


class DivergenceError(RuntimeError):
    """Iteration failure; carries the trace collected so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class State:
    """One iterate of the coupled system.

    ``vartheta`` is the wall-homogeneous temperature part; the full
    temperature is ``theta = theta_D + vartheta``.  Wall rows of ``u`` and
    ``vartheta`` are exactly zero.  Converged states cache the pointwise
    momentum/heat source fields so that load (graph) norms are available.
    """

    u: np.ndarray
    P: np.ndarray
    vartheta: np.ndarray
    theta_D: np.ndarray
    momentum_source: np.ndarray = None   # (ncells, nq, 3) or None
    heat_source: np.ndarray = None       # (ncells, nq) or None

    @property
    def theta(self):
        return self.theta_D + self.vartheta


@dataclass
class InnerTrace:
    increments: list
    ratios: list
    converged: bool


@dataclass
class OuterRecord:
    iteration: int
    inner_iters: int
    beta_hat: float
    d_theta_norm: float
    r_momentum: float
    r_heat: float
    min_flux: float
    inflow_fraction: float
    wall_time: float
    inner_ratios: list


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def all_inner_ratios(self):
        return [r for rec in self.records for r in rec.inner_ratios]


@dataclass
class BackwardFlowReport:
    min_flux: float
    inflow_fraction: float
    per_face: dict


class CoupledProblem:
    """Assembled problem: operators, boundary data and extra forcings.

    ``g`` is a constant 3-vector or a VectorField; ``theta_D`` is a
    ScalarField lifting of the wall temperature, interpolated onto the
    temperature space.  ``f_extra``/``h_extra`` are optional closed-form
    forcing fields (used by manufactured-solution runs).
    """

    def __init__(self, space, model, g, theta_D, f_extra=None, h_extra=None,
                 linear_tol=1e-13):
        self.space = space
        self.model = model
        self.g = g
        self.theta_D_field = theta_D
        self.linear_tol = linear_tol

        self.A = forms.assemble_a(space, model).matrix
        self.D = forms.divergence_matrix(space)
        self.kappa = forms.assemble_kappa(space, model).matrix

        self.theta_D = forms.interpolate_scalar(space, theta_D)
        self.lifting_load = forms.LoadVector(self.kappa @ self.theta_D, "lifting")

        self.fixed_u = space.dirichlet_mask_u
        self.free_theta = space.free_theta
        self.kappa_ff = self.kappa[self.free_theta][:, self.free_theta].tocsr()

        self.f_extra = f_extra
        self.h_extra = h_extra
        self.f_extra_load = (
            forms.field_load_vector(space, f_extra).vector
            if f_extra is not None
            else np.zeros(space.n_velocity)
        )
        self.h_extra_load = (
            forms.field_load_scalar(space, h_extra).vector
            if h_extra is not None
            else np.zeros(space.n_scalar)
        )
        self._saddle = None

    @property
    def saddle_factor(self):
        if self._saddle is None:
            from .linsolve import constrain_system

            K = forms.assemble_saddle(self.space, self.model).matrix
            self._saddle = SaddleFactorization(constrain_system(K, self.fixed_u))
        return self._saddle

    def buoyancy_load(self, theta_full):
        return forms.assemble_buoyancy(self.space, self.model, theta_full, self.g).vector

    def momentum_rhs(self, load_velocity):
        rhs = np.concatenate([load_velocity, np.zeros(self.space.n_pressure)])
        return constrain_vector(rhs, self.fixed_u)


def inner_momentum_solve(problem, theta_full, u_init=None, tol=1e-12, max_iter=50):
    """Contraction iteration for momentum at frozen temperature.

    Returns (u, P, InnerTrace).  The empirical contraction ratio
    ``increment_k / increment_{k-1}`` is recorded for every step whose
    predecessor is above the tolerance; three consecutive ratios >= 1
    raise DivergenceError (violated smallness).
    """
    space, model = problem.space, problem.model
    load = problem.buoyancy_load(theta_full) + problem.f_extra_load
    u = np.zeros(space.n_velocity) if u_init is None else np.array(u_init, dtype=float)
    increments, ratios = [], []
    bad_streak = 0
    n_vel = space.n_velocity
    P = np.zeros(space.n_pressure)
    for _ in range(max_iter):
        conv = forms.convection_load(space, model, u, u).vector
        x = problem.saddle_factor.solve(problem.momentum_rhs(load - conv))
        w = x[:n_vel]
        P = -x[n_vel:]
        inc = forms.discrete_norms(space, w - u, "H1")
        if increments and increments[-1] > tol:
            ratio = inc / increments[-1]
            ratios.append(ratio)
            bad_streak = bad_streak + 1 if ratio >= 1.0 else 0
            if bad_streak >= 3:
                raise DivergenceError(
                    "momentum iteration expanding for 3 consecutive steps "
                    f"(last ratio {ratio:.3f}); smallness condition violated?",
                    trace=InnerTrace(increments + [inc], ratios, False),
                )
        increments.append(inc)
        u = w
        if inc <= tol:
            return u, P, InnerTrace(increments, ratios, True)
    raise DivergenceError(
        f"momentum iteration did not contract below {tol:g} in {max_iter} steps",
        trace=InnerTrace(increments, ratios, False),
    )


def heat_solve(problem, u, vartheta_frozen):
    """Linearized heat solve with frozen convection and dissipation.

    Solves kappa(vartheta, phi) = e(u,u,phi) - d(theta, u, theta, phi)
    - kappa(theta_D, phi) with theta = theta_D + vartheta_frozen; returns
    the wall-homogeneous temperature part.
    """
    space, model = problem.space, problem.model
    theta_full = problem.theta_D + vartheta_frozen
    rhs = (
        forms.assemble_e_load(space, model, u, u).vector
        - forms.assemble_d_load(space, model, theta_full, u, theta_full).vector
        - problem.lifting_load.vector
        + problem.h_extra_load
    )
    sol = np.zeros(space.n_scalar)
    sol[problem.free_theta] = solve_spd(
        problem.kappa_ff, rhs[problem.free_theta], tol=problem.linear_tol
    )
    return sol


def outer_loop(problem, outer_tol=1e-10, max_outer=30, inner_tol=1e-12,
               max_inner=50, damping=1.0):
    """Picard composition of the momentum and heat maps from vartheta = 0.

    Stops when the H1 norm of the temperature update drops below
    ``outer_tol``; raises DivergenceError (with the trace) on exhaustion
    or propagated inner divergence.  ``damping`` in (0, 1] relaxes the
    temperature update; 1 is the plain composition.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    space = problem.space
    vartheta = np.zeros(space.n_scalar)
    u = np.zeros(space.n_velocity)
    trace = IterationTrace()
    for n in range(1, max_outer + 1):
        t0 = time.perf_counter()
        theta_full = problem.theta_D + vartheta
        try:
            u, P, inner = inner_momentum_solve(
                problem, theta_full, u_init=u, tol=inner_tol, max_iter=max_inner
            )
        except DivergenceError as exc:
            # keep the inner trace on the exception; attach the outer context
            exc.outer_trace = trace
            raise
        vartheta_new = heat_solve(problem, u, vartheta)
        if damping != 1.0:
            vartheta_new = vartheta + damping * (vartheta_new - vartheta)
        d_theta = forms.discrete_norms(space, vartheta_new - vartheta, "H1")
        vartheta = vartheta_new

        state = State(u=u, P=P, vartheta=vartheta, theta_D=problem.theta_D)
        r_mom, r_heat = weak_residual(problem, state)
        flow = backward_flow_measure(space, u)
        trace.records.append(
            OuterRecord(
                iteration=n,
                inner_iters=len(inner.increments),
                beta_hat=max(inner.ratios) if inner.ratios else 0.0,
                d_theta_norm=d_theta,
                r_momentum=r_mom,
                r_heat=r_heat,
                min_flux=flow.min_flux,
                inflow_fraction=flow.inflow_fraction,
                wall_time=time.perf_counter() - t0,
                inner_ratios=list(inner.ratios),
            )
        )
        if d_theta <= outer_tol:
            _attach_sources(problem, state)
            return state, trace
    raise DivergenceError(
        f"outer loop did not converge in {max_outer} iterations "
        f"(last update {trace.records[-1].d_theta_norm:.3e})",
        trace=trace,
    )


def _attach_sources(problem, state):
    """Cache pointwise load fields so load (graph) norms are available."""
    space, model = problem.space, problem.model
    theta = state.theta
    mom = forms.buoyancy_value(space, model, theta, problem.g) - forms.convection_value(
        space, model, state.u, state.u
    )
    if problem.f_extra is not None:
        pts = space.quad_points.reshape(-1, 3)
        mom = mom + np.asarray(problem.f_extra(pts)).reshape(space.n_cells, space.nq, 3)
    state.momentum_source = mom

    heat = forms.dissipation_value(space, model, state.u, state.u) - forms.heat_convection_value(
        space, model, theta, state.u, theta
    )
    lap = getattr(problem.theta_D_field, "laplacian", None)
    if lap is not None:
        pts = space.quad_points.reshape(-1, 3)
        heat = heat + model.lam * np.asarray(lap(pts)).reshape(space.n_cells, space.nq)
        if problem.h_extra is not None:
            heat = heat + np.asarray(problem.h_extra(pts)).reshape(space.n_cells, space.nq)
        state.heat_source = heat
    else:
        state.heat_source = None


def weak_residual(problem, state):
    """Norms of the discrete momentum+mass and heat residuals on free rows."""
    space, model = problem.space, problem.model
    u, P, theta = state.u, state.P, state.theta
    mom = (
        problem.A @ u
        - problem.D.T @ P
        + forms.convection_load(space, model, u, u).vector
        - problem.buoyancy_load(theta)
        - problem.f_extra_load
    )
    free_u = np.ones(space.n_velocity, dtype=bool)
    free_u[problem.fixed_u] = False
    r_mom = float(np.sqrt(np.sum(mom[free_u] ** 2) + np.sum((problem.D @ u) ** 2)))

    heat = (
        problem.kappa @ theta
        + forms.assemble_d_load(space, model, theta, u, theta).vector
        - forms.assemble_e_load(space, model, u, u).vector
        - problem.h_extra_load
    )
    r_heat = float(np.linalg.norm(heat[problem.free_theta]))
    return r_mom, r_heat


def backward_flow_measure(space, u):
    """Minimum of u.n over the open ends and the inflow area fraction.

    Inflow (u.n < 0) through the do-nothing boundary is admissible
    'backward flow'; reported per face and aggregated.
    """
    u = np.asarray(u, dtype=float)
    per_face = {}
    total_area = 0.0
    total_inflow = 0.0
    global_min = np.inf
    for name in ("x0", "x1"):
        un, wts = forms.surface_velocity_normal(space, u, name)
        area = float(wts.sum() * un.shape[0])
        inflow = float(np.einsum("q,cq->", wts, (un < 0).astype(float)))
        face_min = float(un.min()) if un.size else 0.0
        per_face[name] = (face_min, inflow / area)
        total_area += area
        total_inflow += inflow
        global_min = min(global_min, face_min)
    return BackwardFlowReport(
        min_flux=float(global_min),
        inflow_fraction=total_inflow / total_area,
        per_face=per_face,
    )


def write_trace_csv(trace, path):
    """Iteration trace as CSV; columns are fixed, floats use 17 digits."""
    cols = (
        "iter,inner_iters,beta_hat,d_theta_norm,r_momentum,r_heat,"
        "min_flux,inflow_fraction"
    )
    lines = [cols]
    for r in trace.records:
        lines.append(
            f"{r.iteration},{r.inner_iters},"
            f"{r.beta_hat:.17g},{r.d_theta_norm:.17g},{r.r_momentum:.17g},"
            f"{r.r_heat:.17g},{r.min_flux:.17g},{r.inflow_fraction:.17g}"
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
