"""Manufactured-solution oracles and convergence studies.

Each manufactured case carries closed-form fields together with
hand-coded first and second derivatives; the induced forcings are built
from those closures.  The hand-coded derivatives are cross-checked by
complex-step differentiation (first derivatives of the values, then of
the coded gradients), which is exact to machine precision, so a coding
slip in any derivative is caught before the case is trusted as an oracle.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import forms
from .fields import ScalarField, VectorField
from .fixed_point import CoupledProblem, outer_loop
from .linsolve import SaddleFactorization, constrain_system, constrain_vector, solve_spd
from .material import density
from .mesh import build_channel_mesh
from .spaces import build_spaces

__all__ = [
    "ManufacturedCase",
    "trig_case",
    "poly_case",
    "incompatible_heat_case",
    "coupled_case",
    "validate_case",
    "ErrorTable",
    "mms_stokes_study",
    "mms_heat_study",
    "coupled_mms",
]


@dataclass
class ManufacturedCase:
    name: str
    u: VectorField
    p: ScalarField
    theta: ScalarField
    nu: float
    compatible_heat_flux: bool = True
    notes: str = ""


# -- case construction -------------------------------------------------------


def trig_case(dims, nu=1.0, amplitude=1.0):
    """Smooth solenoidal field from a stream potential, with pressure.

    psi = a sin(pi x / Lx) sin^2(pi y / Ly) sin^2(pi z / Lz); the velocity
    (d_y psi, -d_x psi, 0) vanishes on the walls, and the pressure is
    chosen so the open ends carry no natural-boundary residual.
    """
    Lx, Ly, Lz = (float(d) for d in dims)
    ax, ay, az = np.pi / Lx, np.pi / Ly, np.pi / Lz
    a = float(amplitude)

    def parts(x):
        X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
        return (
            np.sin(ax * X), np.cos(ax * X),
            np.sin(2 * ay * Y), np.cos(2 * ay * Y),
            np.sin(ay * Y) ** 2,
            np.sin(2 * az * Z), np.cos(2 * az * Z),
            np.sin(az * Z) ** 2,
        )

    def u_val(x):
        sx, cx, s2y, c2y, sy2, s2z, c2z, sz2 = parts(x)
        u1 = a * ay * sx * s2y * sz2
        u2 = -a * ax * cx * sy2 * sz2
        return np.stack([u1, u2, np.zeros_like(u1)], axis=1)

    def u_grad(x):
        sx, cx, s2y, c2y, sy2, s2z, c2z, sz2 = parts(x)
        G = np.zeros((x.shape[0], 3, 3), dtype=x.dtype)
        G[:, 0, 0] = a * ay * ax * cx * s2y * sz2
        G[:, 0, 1] = 2 * a * ay * ay * sx * c2y * sz2
        G[:, 0, 2] = a * ay * az * sx * s2y * s2z
        G[:, 1, 0] = a * ax * ax * sx * sy2 * sz2
        G[:, 1, 1] = -a * ax * ay * cx * s2y * sz2
        G[:, 1, 2] = -a * ax * az * cx * sy2 * s2z
        return G

    def u_lap(x):
        sx, cx, s2y, c2y, sy2, s2z, c2z, sz2 = parts(x)
        l1 = a * ay * (-(ax * ax) * sx * s2y * sz2
                       - 4 * ay * ay * sx * s2y * sz2
                       + 2 * az * az * sx * s2y * c2z)
        l2 = a * (ax**3 * cx * sy2 * sz2
                  - 2 * ax * ay * ay * cx * c2y * sz2
                  - 2 * ax * az * az * cx * sy2 * c2z)
        return np.stack([l1, l2, np.zeros_like(l1)], axis=1)

    def p_val(x):
        sx, cx, s2y, c2y, sy2, s2z, c2z, sz2 = parts(x)
        return nu * a * ax * ay * cx * s2y * sz2

    def p_grad(x):
        sx, cx, s2y, c2y, sy2, s2z, c2z, sz2 = parts(x)
        g = np.zeros((x.shape[0], 3), dtype=x.dtype)
        g[:, 0] = -nu * a * ax * ax * ay * sx * s2y * sz2
        g[:, 1] = 2 * nu * a * ax * ay * ay * cx * c2y * sz2
        g[:, 2] = nu * a * ax * ay * az * cx * s2y * s2z
        return g

    theta = _compatible_theta(dims, amplitude=0.5 * a)
    return ManufacturedCase(
        name="trig_smooth",
        u=VectorField(u_val, u_grad, u_lap, name="trig_smooth_u"),
        p=ScalarField(p_val, p_grad, name="trig_smooth_p"),
        theta=theta,
        nu=nu,
    )


def _compatible_theta(dims, amplitude=1.0, offset=1.0):
    """Temperature with zero normal derivative on the open (x) ends."""
    Lx, Ly, Lz = (float(d) for d in dims)
    ax, ay, az = np.pi / Lx, np.pi / Ly, np.pi / Lz
    a = float(amplitude)

    def val(x):
        return offset + a * np.cos(ax * x[:, 0]) * np.cos(ay * x[:, 1]) * np.cos(az * x[:, 2])

    def grad(x):
        cx, cy, cz = np.cos(ax * x[:, 0]), np.cos(ay * x[:, 1]), np.cos(az * x[:, 2])
        sx, sy, sz = np.sin(ax * x[:, 0]), np.sin(ay * x[:, 1]), np.sin(az * x[:, 2])
        g = np.empty((x.shape[0], 3), dtype=x.dtype)
        g[:, 0] = -a * ax * sx * cy * cz
        g[:, 1] = -a * ay * cx * sy * cz
        g[:, 2] = -a * az * cx * cy * sz
        return g

    def lap(x):
        cx, cy, cz = np.cos(ax * x[:, 0]), np.cos(ay * x[:, 1]), np.cos(az * x[:, 2])
        return -a * (ax * ax + ay * ay + az * az) * cx * cy * cz

    return ScalarField(val, grad, lap, name="compatible_theta")


def incompatible_heat_case(dims, nu=1.0):
    """Negative control: nonzero normal heat flux on the open ends."""
    Lx, Ly, Lz = (float(d) for d in dims)
    ax, ay, az = 0.5 * np.pi / Lx, np.pi / Ly, np.pi / Lz

    def val(x):
        return np.sin(ax * x[:, 0]) * np.cos(ay * x[:, 1]) * np.cos(az * x[:, 2])

    def grad(x):
        g = np.empty((x.shape[0], 3), dtype=x.dtype)
        g[:, 0] = ax * np.cos(ax * x[:, 0]) * np.cos(ay * x[:, 1]) * np.cos(az * x[:, 2])
        g[:, 1] = -ay * np.sin(ax * x[:, 0]) * np.sin(ay * x[:, 1]) * np.cos(az * x[:, 2])
        g[:, 2] = -az * np.sin(ax * x[:, 0]) * np.cos(ay * x[:, 1]) * np.sin(az * x[:, 2])
        return g

    def lap(x):
        return -(ax * ax + ay * ay + az * az) * val(x)

    base = trig_case(dims, nu=nu)
    return ManufacturedCase(
        name="trig_incompatible",
        u=base.u,
        p=base.p,
        theta=ScalarField(val, grad, lap, name="incompatible_theta"),
        nu=nu,
        compatible_heat_flux=False,
        notes="normal heat flux on the open ends is nonzero by construction",
    )


def poly_case(dims, nu=1.0):
    """Per-axis-quadratic velocity, zero pressure; reproduced exactly."""
    Lx, Ly, Lz = (float(d) for d in dims)

    def u_val(x):
        Y, Z = x[:, 1], x[:, 2]
        u1 = Y * (Ly - Y) * Z * (Lz - Z)
        zero = np.zeros_like(u1)
        return np.stack([u1, zero, zero], axis=1)

    def u_grad(x):
        Y, Z = x[:, 1], x[:, 2]
        G = np.zeros((x.shape[0], 3, 3), dtype=x.dtype)
        G[:, 0, 1] = (Ly - 2 * Y) * Z * (Lz - Z)
        G[:, 0, 2] = Y * (Ly - Y) * (Lz - 2 * Z)
        return G

    def u_lap(x):
        Y, Z = x[:, 1], x[:, 2]
        l1 = -2 * Z * (Lz - Z) - 2 * Y * (Ly - Y)
        zero = np.zeros_like(l1)
        return np.stack([l1, zero, zero], axis=1)

    def p_val(x):
        return np.zeros(x.shape[0], dtype=x.dtype)

    def p_grad(x):
        return np.zeros((x.shape[0], 3), dtype=x.dtype)

    def th_val(x):
        Y = x[:, 1]
        return Y * (Ly - Y)

    def th_grad(x):
        g = np.zeros((x.shape[0], 3), dtype=x.dtype)
        g[:, 1] = Ly - 2 * x[:, 1]
        return g

    def th_lap(x):
        return np.full(x.shape[0], -2.0, dtype=x.dtype)

    return ManufacturedCase(
        name="poly_quadratic",
        u=VectorField(u_val, u_grad, u_lap, name="poly_u"),
        p=ScalarField(p_val, p_grad, name="poly_p"),
        theta=ScalarField(th_val, th_grad, th_lap, name="poly_theta"),
        nu=nu,
    )


def coupled_case(dims, nu=1.0, amplitude=0.05):
    """Small-amplitude smooth case for the full nonlinear pipeline."""
    base = trig_case(dims, nu=nu, amplitude=amplitude)
    return ManufacturedCase(
        name="coupled_smooth",
        u=base.u,
        p=base.p,
        theta=_compatible_theta(dims, amplitude=0.1, offset=1.0),
        nu=nu,
    )


# -- induced forcings ---------------------------------------------------------


def stokes_forcing(case, nu):
    """f = -nu lap(u) + grad P for the linear mixed Stokes solve."""

    def val(x):
        return -nu * case.u.laplacian(x) + case.p.grad(x)

    return VectorField(val, name=f"{case.name}_stokes_forcing")


def heat_forcing_linear(case, lam):
    """h = -lambda lap(theta) for the linear mixed Poisson solve."""

    def val(x):
        return -lam * case.theta.laplacian(x)

    return ScalarField(val, name=f"{case.name}_heat_forcing")


def coupled_momentum_forcing(case, model, g):
    """Momentum correction so the manufactured pair solves the full system."""

    def val(x):
        u = case.u.value(x)
        G = case.u.grad(x)
        adv = model.rho0 * np.einsum("nd,nmd->nm", u, G)
        rho = density(model, case.theta.value(x))
        if callable(g):
            gv = np.asarray(g(x))
        else:
            gv = np.broadcast_to(np.asarray(g, dtype=float), (x.shape[0], 3))
        return adv - model.nu * case.u.laplacian(x) + case.p.grad(x) - rho[:, None] * gv

    return VectorField(val, name=f"{case.name}_momentum_forcing")


def coupled_heat_forcing(case, model):
    """Heat correction: convection minus conduction minus dissipation."""

    def val(x):
        u = case.u.value(x)
        G = case.u.grad(x)
        rho = density(model, case.theta.value(x))
        conv = model.cV * rho * np.einsum("nd,nd->n", u, case.theta.grad(x))
        E = 0.5 * (G + np.swapaxes(G, -1, -2))
        diss = model.alpha1 * model.nu * np.einsum("nmd,nmd->n", E, E)
        return conv - model.lam * case.theta.laplacian(x) - diss

    return ScalarField(val, name=f"{case.name}_heat_forcing")


# -- case validation -----------------------------------------------------------


def _complex_step(fn, x, h=1e-30):
    """Derivative of fn along each axis by complex-step; exact to roundoff."""
    outs = []
    for d in range(3):
        xc = x.astype(complex).copy()
        xc[:, d] += 1j * h
        outs.append(np.imag(fn(xc)) / h)
    return np.stack(outs, axis=-1)


def validate_case(case, dims, n_points=1000, seed=1234, tol=1e-10):
    """Cross-check hand-coded derivatives and boundary compatibility.

    Gradients are checked against complex-step derivatives of the values;
    Laplacians against complex-step derivatives of the coded gradients;
    the divergence of u must vanish identically.  Boundary checks sample
    the walls (u = 0) and the open ends (do-nothing residual, and the
    normal heat flux when the case declares it compatible).
    """
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n_points, 3)) * np.asarray(dims)[None, :]

    G_cs = _complex_step(case.u.value, x)         # (n, m, d)
    err = np.max(np.abs(G_cs - case.u.grad(x)))
    if err > tol:
        raise AssertionError(f"velocity gradient mismatch {err:.3e}")

    lap_cs = np.zeros((n_points, 3))
    for d in range(3):
        xc = x.astype(complex).copy()
        xc[:, d] += 1e-30j
        lap_cs += np.imag(case.u.grad(xc)[:, :, d]) / 1e-30
    err = np.max(np.abs(lap_cs - case.u.laplacian(x)))
    if err > tol:
        raise AssertionError(f"velocity laplacian mismatch {err:.3e}")

    gp_cs = _complex_step(case.p.value, x)
    err = np.max(np.abs(gp_cs - case.p.grad(x)))
    if err > tol:
        raise AssertionError(f"pressure gradient mismatch {err:.3e}")

    gt_cs = _complex_step(case.theta.value, x)
    err = np.max(np.abs(gt_cs - case.theta.grad(x)))
    if err > tol:
        raise AssertionError(f"temperature gradient mismatch {err:.3e}")

    lapt_cs = np.zeros(n_points)
    for d in range(3):
        xc = x.astype(complex).copy()
        xc[:, d] += 1e-30j
        lapt_cs += np.imag(case.theta.grad(xc)[:, d]) / 1e-30
    err = np.max(np.abs(lapt_cs - case.theta.laplacian(x)))
    if err > tol:
        raise AssertionError(f"temperature laplacian mismatch {err:.3e}")

    div = np.einsum("nmm->n", case.u.grad(x))
    if np.max(np.abs(div)) > 1e-12:
        raise AssertionError("manufactured velocity is not divergence-free")

    _check_boundary(case, dims)
    return True


def _check_boundary(case, dims, n=40):
    Lx, Ly, Lz = dims
    t = np.linspace(0.0, 1.0, n)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    t1, t2 = T1.ravel(), T2.ravel()

    walls = [
        np.stack([t1 * Lx, np.zeros_like(t1), t2 * Lz], axis=1),
        np.stack([t1 * Lx, np.full_like(t1, Ly), t2 * Lz], axis=1),
        np.stack([t1 * Lx, t2 * Ly, np.zeros_like(t1)], axis=1),
        np.stack([t1 * Lx, t2 * Ly, np.full_like(t1, Lz)], axis=1),
    ]
    for w in walls:
        if np.max(np.abs(case.u.value(w))) > 1e-12:
            raise AssertionError("manufactured velocity does not vanish on the walls")

    for xval, sign in ((0.0, -1.0), (Lx, 1.0)):
        ends = np.stack([np.full_like(t1, xval), t1 * Ly, t2 * Lz], axis=1)
        G = case.u.grad(ends)
        P = case.p.value(ends)
        resid = case.nu * sign * G[:, :, 0]
        resid[:, 0] -= sign * P          # (-P n + nu dn u) . e_m with n = sign e_x
        if np.max(np.abs(resid)) > 1e-12:
            raise AssertionError("do-nothing residual on the open ends is nonzero")
        flux = sign * case.theta.grad(ends)[:, 0]
        if case.compatible_heat_flux and np.max(np.abs(flux)) > 1e-12:
            raise AssertionError("normal heat flux on the open ends is nonzero")


# -- studies --------------------------------------------------------------------


@dataclass
class ErrorTable:
    levels: list           # divisions per level
    h: list
    errors: dict           # name -> list of errors
    orders: dict           # name -> list of successive log2 ratios
    monotone: bool

    def to_csv(self, path):
        names = sorted(self.errors)
        header = "level,nx,ny,nz,h," + ",".join(
            [n for name in names for n in (f"{name}", f"order_{name}")]
        )
        lines = [header]
        for i, divs in enumerate(self.levels):
            cells = [str(i), str(divs[0]), str(divs[1]), str(divs[2]), f"{self.h[i]:.17g}"]
            for name in names:
                cells.append(f"{self.errors[name][i]:.17g}")
                cells.append(f"{self.orders[name][i - 1]:.17g}" if i > 0 else "")
            lines.append(",".join(cells))
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    def observed_order(self, name):
        """Order at the finest mesh pair."""
        return self.orders[name][-1]


def _error_norms(space, dofs, exact_value, exact_grad, vector):
    pts = space.quad_points.reshape(-1, 3)
    if vector:
        vals = forms.eval_velocity(space, dofs)
        grads = forms.eval_velocity_grad(space, dofs)
        ev = exact_value(pts).reshape(space.n_cells, space.nq, 3)
        eg = exact_grad(pts).reshape(space.n_cells, space.nq, 3, 3)
        d2 = np.sum((vals - ev) ** 2, axis=-1)
        g2 = np.sum((grads - eg) ** 2, axis=(-1, -2))
    else:
        vals = forms.eval_scalar(space, dofs)
        grads = forms.eval_scalar_grad(space, dofs)
        ev = exact_value(pts).reshape(space.n_cells, space.nq)
        eg = exact_grad(pts).reshape(space.n_cells, space.nq, 3)
        d2 = (vals - ev) ** 2
        g2 = np.sum((grads - eg) ** 2, axis=-1)
    l2 = float(np.sqrt(np.einsum("q,cq->", space.wq, d2)))
    h1 = float(np.sqrt(np.einsum("q,cq->", space.wq, d2 + g2)))
    return l2, h1


def _refinement_levels(base_divisions, n_levels):
    return [tuple(int(d) * 2**k for d in base_divisions) for k in range(n_levels)]


def _fill_orders(levels, errors):
    orders = {}
    monotone = True
    for name, errs in errors.items():
        seq = []
        for a, b in zip(errs[:-1], errs[1:]):
            if b > a:
                monotone = False
            seq.append(math.log2(a / b) if b > 0 else float("inf"))
        orders[name] = seq
    return orders, monotone


def mms_stokes_study(case_factory, dims, base_divisions, n_levels=3, nu=1.0,
                     quad_order=5):
    """Convergence of the mixed Stokes solve against a manufactured case.

    ``case_factory(dims, nu)`` builds the case; per level the H1/L2
    velocity errors and the L2 pressure error are recorded with observed
    orders from successive log2 ratios.
    """
    case = case_factory(dims, nu)
    validate_case(case, dims)
    levels = _refinement_levels(base_divisions, n_levels)
    errors = {"u_L2": [], "u_H1": [], "p_L2": []}
    hs = []
    forcing = stokes_forcing(case, nu)
    for divs in levels:
        mesh = build_channel_mesh(*dims, *divs)
        space = build_spaces(mesh, quad_order=quad_order)
        hs.append(float(np.max(space.h)))
        model = _unit_model(nu)
        K = forms.assemble_saddle(space, model).matrix
        rhs = np.concatenate(
            [forms.field_load_vector(space, forcing).vector, np.zeros(space.n_pressure)]
        )
        Kc = constrain_system(K, space.dirichlet_mask_u)
        x = SaddleFactorization(Kc).solve(constrain_vector(rhs, space.dirichlet_mask_u))
        u = x[: space.n_velocity]
        P = -x[space.n_velocity:]
        l2, h1 = _error_norms(space, u, case.u.value, case.u.grad, vector=True)
        pq = np.einsum("ci,iq->cq", P[space.conn_q1], space.N1)
        pe = case.p.value(space.quad_points.reshape(-1, 3)).reshape(space.n_cells, space.nq)
        perr = float(np.sqrt(np.einsum("q,cq->", space.wq, (pq - pe) ** 2)))
        errors["u_L2"].append(l2)
        errors["u_H1"].append(h1)
        errors["p_L2"].append(perr)
    orders, monotone = _fill_orders(levels, errors)
    return ErrorTable(levels=levels, h=hs, errors=errors, orders=orders, monotone=monotone)


def mms_heat_study(case_factory, dims, base_divisions, n_levels=3, lam=1.0,
                   quad_order=5):
    """Convergence of the mixed Poisson heat solve against a manufactured case."""
    case = case_factory(dims, 1.0)
    levels = _refinement_levels(base_divisions, n_levels)
    errors = {"theta_L2": [], "theta_H1": []}
    hs = []
    forcing = heat_forcing_linear(case, lam)
    for divs in levels:
        mesh = build_channel_mesh(*dims, *divs)
        space = build_spaces(mesh, quad_order=quad_order)
        hs.append(float(np.max(space.h)))
        model = _unit_model(1.0, lam=lam)
        kappa = forms.assemble_kappa(space, model).matrix
        theta_D = forms.interpolate_scalar(space, case.theta)
        rhs = forms.field_load_scalar(space, forcing).vector - kappa @ theta_D
        free = space.free_theta
        kff = kappa[free][:, free].tocsr()
        sol = np.zeros(space.n_scalar)
        sol[free] = solve_spd(kff, rhs[free], tol=1e-13)
        theta = theta_D + sol
        l2, h1 = _error_norms(space, theta, case.theta.value, case.theta.grad, vector=False)
        errors["theta_L2"].append(l2)
        errors["theta_H1"].append(h1)
    orders, monotone = _fill_orders(levels, errors)
    return ErrorTable(levels=levels, h=hs, errors=errors, orders=orders, monotone=monotone)


def coupled_mms(case, dims, divisions, model, g, outer_tol=1e-10, max_outer=40,
                quad_order=5):
    """Full nonlinear pipeline against a manufactured pair.

    The momentum and heat forcings carry the nonlinear correction terms;
    convergence failures propagate with their trace attached.
    """
    validate_case(case, dims)
    mesh = build_channel_mesh(*dims, *divisions)
    space = build_spaces(mesh, quad_order=quad_order)
    problem = CoupledProblem(
        space,
        model,
        g,
        theta_D=case.theta,
        f_extra=coupled_momentum_forcing(case, model, g),
        h_extra=coupled_heat_forcing(case, model),
    )
    state, trace = outer_loop(problem, outer_tol=outer_tol, max_outer=max_outer)
    ul2, uh1 = _error_norms(space, state.u, case.u.value, case.u.grad, vector=True)
    tl2, th1 = _error_norms(space, state.theta, case.theta.value, case.theta.grad, vector=False)
    return {
        "u_L2": ul2,
        "u_H1": uh1,
        "theta_L2": tl2,
        "theta_H1": th1,
        "outer_iterations": len(trace.records),
        "state": state,
        "trace": trace,
        "problem": problem,
    }


def _unit_model(nu, lam=1.0):
    from .material import constant_density, make_material

    return make_material(nu=nu, rho0=1.0, cV=1.0, lam=lam, alpha1=0.0,
                         law=constant_density(1.0))
