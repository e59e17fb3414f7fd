"""Assembly of the discrete operators, load vectors and norms.

Operators: the viscous block a(u,v) = nu (grad u, grad v), the heat
stiffness kappa(t,p) = lambda (grad t, grad p), the frozen-transport
convection operator b(u0, ., .) and the Taylor-Hood saddle block system
[[A, D^T], [D, 0]] with D the discrete divergence (q, div u).  The
do-nothing outflow condition is natural for this weak form, so no
boundary terms are added on the open ends.

Loads: convective, dissipative and buoyancy terms are assembled as
explicit load vectors with every argument frozen, mirroring the
linearized solve structure of the fixed-point scheme.

All cells are congruent, so cell-independent local matrices are computed
once; field-dependent kernels are evaluated in cell chunks with einsum
and scattered with np.add.at in a fixed order, which keeps repeated
assemblies bit-identical.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .material import density
from .spectrum import regularity_exponent_bound

__all__ = [
    "AssembledOperator",
    "LoadVector",
    "assemble_a",
    "assemble_kappa",
    "assemble_mass",
    "assemble_saddle",
    "assemble_b",
    "convection_load",
    "assemble_d_load",
    "assemble_e_load",
    "assemble_buoyancy",
    "field_load_scalar",
    "field_load_vector",
    "discrete_norms",
    "interpolate_scalar",
    "interpolate_vector",
    "eval_scalar",
    "eval_scalar_grad",
    "eval_scalar_hess",
    "eval_velocity",
    "eval_velocity_grad",
    "b_field_norm",
    "d_field_norm",
    "e_field_norm",
    "outflow_boundary_term",
    "surface_velocity_normal",
]

_CHUNK = 512


@dataclass
class AssembledOperator:
    matrix: sp.csr_matrix
    kind: str
    symmetric: bool


@dataclass
class LoadVector:
    vector: np.ndarray
    provenance: str


# -- helpers ----------------------------------------------------------------


def _chunks(n, size=_CHUNK):
    for lo in range(0, n, size):
        yield lo, min(lo + size, n)


def _scatter_matrix(space, conn_rows, conn_cols, local, shape):
    """COO scatter of identical (or per-cell) local blocks."""
    ncell = conn_rows.shape[0]
    nr, nc = local.shape[-2], local.shape[-1]
    rows = np.repeat(conn_rows, nc, axis=1).ravel()
    cols = np.tile(conn_cols, (1, nr)).ravel()
    if local.ndim == 2:
        data = np.tile(local.ravel(), ncell)
    else:
        data = local.reshape(ncell, -1).ravel()
    return sp.coo_matrix((data, (rows, cols)), shape=shape).tocsr()


def _scalar_stiffness(space):
    local = np.einsum("q,iqd,jqd->ij", space.wq, space.dN2, space.dN2)
    return _scatter_matrix(
        space, space.conn_q2, space.conn_q2, local, (space.n_scalar, space.n_scalar)
    )


def _velocity_block(space, scalar_matrix):
    return sp.block_diag([scalar_matrix] * 3, format="csr")


def eval_scalar(space, dofs, cells=slice(None)):
    """Values of a scalar dof vector at the quadrature points, (ncells, nq)."""
    local = np.asarray(dofs)[space.conn_q2[cells]]
    return np.einsum("ci,iq->cq", local, space.N2)


def eval_scalar_grad(space, dofs, cells=slice(None)):
    local = np.asarray(dofs)[space.conn_q2[cells]]
    return np.einsum("ci,iqd->cqd", local, space.dN2)


def eval_scalar_hess(space, dofs, cells=slice(None)):
    local = np.asarray(dofs)[space.conn_q2[cells]]
    return np.einsum("ci,iqde->cqde", local, space.d2N2)


def eval_velocity(space, u, cells=slice(None)):
    """Velocity values at quadrature points, (ncells, nq, 3)."""
    nodal = space.split_velocity(u)
    local = nodal[space.conn_q2[cells]]            # (c, 27, 3)
    return np.einsum("cim,iq->cqm", local, space.N2)


def eval_velocity_grad(space, u, cells=slice(None)):
    """Velocity gradients at quadrature points, (ncells, nq, 3, 3) as [m, d]."""
    nodal = space.split_velocity(u)
    local = nodal[space.conn_q2[cells]]
    return np.einsum("cim,iqd->cqmd", local, space.dN2)


def interpolate_scalar(space, fld):
    return np.asarray(fld(space.q2_nodes), dtype=float)


def interpolate_vector(space, fld):
    vals = np.asarray(fld(space.q2_nodes), dtype=float)
    return vals.T.reshape(-1)


# -- operators ----------------------------------------------------------------


def assemble_a(space, model):
    """Viscous operator, nu * (grad u : grad v); SPD after wall elimination."""
    A = model.nu * _velocity_block(space, _scalar_stiffness(space))
    return AssembledOperator(A, "A_viscous", symmetric=True)


def assemble_kappa(space, model):
    """Heat stiffness, lambda * (grad t . grad p)."""
    return AssembledOperator(
        (model.lam * _scalar_stiffness(space)).tocsr(), "Kappa", symmetric=True
    )


def assemble_mass(space):
    """Scalar mass matrix on the quadratic space (oracle and test helper)."""
    local = np.einsum("q,iq,jq->ij", space.wq, space.N2, space.N2)
    return _scatter_matrix(
        space, space.conn_q2, space.conn_q2, local, (space.n_scalar, space.n_scalar)
    )


def divergence_matrix(space):
    """D[q, u] = (q, div u) on pressure x velocity."""
    local = np.einsum("q,pq,jqd->pdj", space.wq, space.N1, space.dN2)  # (8, 3, 27)
    blocks = []
    for d in range(3):
        blocks.append(
            _scatter_matrix(
                space,
                space.conn_q1,
                space.conn_q2,
                local[:, d, :],
                (space.n_pressure, space.n_scalar),
            )
        )
    return sp.hstack(blocks, format="csr")


def assemble_saddle(space, model):
    """Unconstrained Taylor-Hood block system [[A, D^T], [D, 0]].

    No boundary terms are added on the open ends: the do-nothing condition
    is the natural condition of this form and fixes the pressure level, so
    the pressure is not pinned.  The momentum block carries the sign-flipped
    pressure; callers negate the pressure part of the solution.
    """
    A = model.nu * _velocity_block(space, _scalar_stiffness(space))
    D = divergence_matrix(space)
    K = sp.bmat([[A, D.T], [D, None]], format="csr")
    return AssembledOperator(K, "MixedSaddle", symmetric=True)


def assemble_b(space, model, u0):
    """Convection operator frozen at transport field u0.

    w^T B(u0) v approximates rho0 * ((u0 . grad) v, w); linear in u0 and
    block-diagonal over velocity components.
    """
    u0 = np.asarray(u0, dtype=float)
    n2 = space.n_scalar
    parts = []
    for lo, hi in _chunks(space.n_cells):
        cells = slice(lo, hi)
        uq = eval_velocity(space, u0, cells)
        conv = np.einsum("cqd,jqd->cqj", uq, space.dN2)
        local = model.rho0 * np.einsum("q,cqj,iq->cij", space.wq, conv, space.N2)
        parts.append(
            _scatter_matrix(
                space, space.conn_q2[cells], space.conn_q2[cells], local, (n2, n2)
            )
        )
    Bscal = parts[0]
    for p in parts[1:]:
        Bscal = Bscal + p
    return AssembledOperator(_velocity_block(space, Bscal), "B_convection", symmetric=False)


# -- load vectors --------------------------------------------------------------


def _scatter_scalar_load(space, values):
    """values (ncells, nq) -> load over quadratic test functions."""
    out = np.zeros(space.n_scalar)
    for lo, hi in _chunks(space.n_cells):
        cells = slice(lo, hi)
        local = np.einsum("q,cq,iq->ci", space.wq, values[cells], space.N2)
        np.add.at(out, space.conn_q2[cells], local)
    return out


def _scatter_vector_load(space, values):
    """values (ncells, nq, 3) -> load over vector test functions."""
    out = np.zeros(space.n_velocity)
    for lo, hi in _chunks(space.n_cells):
        cells = slice(lo, hi)
        local = np.einsum("q,cqm,iq->cmi", space.wq, values[cells], space.N2)
        for m in range(3):
            np.add.at(out, m * space.n_scalar + space.conn_q2[cells], local[:, m, :])
    return out


def convection_value(space, model, u0, u1, cells=slice(None)):
    """rho0 (u0 . grad) u1 at quadrature points."""
    uq = eval_velocity(space, u0, cells)
    gq = eval_velocity_grad(space, u1, cells)
    return model.rho0 * np.einsum("cqd,cqmd->cqm", uq, gq)


def convection_load(space, model, u0, u1):
    """Load form of b with both slots frozen: entries rho0 ((u0.grad)u1, v_i)."""
    return LoadVector(
        _scatter_vector_load(space, convection_value(space, model, u0, u1)),
        "convection_load",
    )


def dissipation_value(space, model, u, v, cells=slice(None)):
    """alpha1 * nu * e(u) : e(v) at quadrature points."""
    gu = eval_velocity_grad(space, u, cells)
    gv = eval_velocity_grad(space, v, cells)
    eu = 0.5 * (gu + np.swapaxes(gu, -1, -2))
    ev = 0.5 * (gv + np.swapaxes(gv, -1, -2))
    return model.alpha1 * model.nu * np.einsum("cqmd,cqmd->cq", eu, ev)


def assemble_e_load(space, model, u, v):
    """Dissipation load: entries alpha1 nu (e(u):e(v), phi_i)."""
    return LoadVector(
        _scatter_scalar_load(space, dissipation_value(space, model, u, v)),
        "dissipation",
    )


def heat_convection_value(space, model, theta_freeze, u, theta_transport, cells=slice(None)):
    """c_V rho(theta_freeze) u . grad(theta_transport) at quadrature points."""
    rho = density(model, eval_scalar(space, theta_freeze, cells))
    uq = eval_velocity(space, u, cells)
    gth = eval_scalar_grad(space, theta_transport, cells)
    return model.cV * rho * np.einsum("cqd,cqd->cq", uq, gth)


def assemble_d_load(space, model, theta_freeze, u, theta_transport):
    """Heat convection load with all three slots frozen."""
    return LoadVector(
        _scatter_scalar_load(
            space, heat_convection_value(space, model, theta_freeze, u, theta_transport)
        ),
        "convection_load",
    )


def buoyancy_value(space, model, theta, g, cells=slice(None)):
    """rho(theta) g at quadrature points; g constant or a VectorField."""
    rho = density(model, eval_scalar(space, theta, cells))
    pts = space.quad_points[cells]
    if callable(g):
        gq = np.asarray(g(pts.reshape(-1, 3))).reshape(pts.shape)
    else:
        g = np.asarray(g, dtype=float).reshape(3)
        gq = np.broadcast_to(g, pts.shape)
    return rho[:, :, None] * gq


def assemble_buoyancy(space, model, theta, g):
    """Buoyancy load: entries (rho(theta) g, v_i)."""
    return LoadVector(
        _scatter_vector_load(space, buoyancy_value(space, model, theta, g)), "buoyancy"
    )


def field_load_scalar(space, fld):
    """(h, phi_i) for a closed-form scalar field h."""
    pts = space.quad_points.reshape(-1, 3)
    vals = np.asarray(fld(pts)).reshape(space.n_cells, space.nq)
    return LoadVector(_scatter_scalar_load(space, vals), "field")


def field_load_vector(space, fld):
    """(f, v_i) for a closed-form vector field f."""
    pts = space.quad_points.reshape(-1, 3)
    vals = np.asarray(fld(pts)).reshape(space.n_cells, space.nq, 3)
    return LoadVector(_scatter_vector_load(space, vals), "field")


# -- norms ---------------------------------------------------------------------


def _check_exponent(s):
    s0 = regularity_exponent_bound()
    if not (4.0 / 3.0 <= s < s0):
        raise ValueError(f"exponent s={s} outside the admissible range [4/3, {s0:.6f})")


def _field_tables(space, fld):
    """(values^2, |grad|^2, |hess|^2) summed over components, per quad point."""
    fld = np.asarray(fld, dtype=float)
    if fld.size == space.n_scalar:
        comps = [fld]
    elif fld.size == space.n_velocity:
        comps = [c for c in fld.reshape(3, space.n_scalar)]
    else:
        raise ValueError("field length matches neither scalar nor velocity layout")
    v2 = np.zeros((space.n_cells, space.nq))
    g2 = np.zeros((space.n_cells, space.nq))
    h2 = np.zeros((space.n_cells, space.nq))
    for c in comps:
        v2 += eval_scalar(space, c) ** 2
        g2 += np.sum(eval_scalar_grad(space, c) ** 2, axis=-1)
        h2 += np.sum(eval_scalar_hess(space, c) ** 2, axis=(-1, -2))
    return v2, g2, h2


def discrete_norms(space, fld, which, s=None):
    """Quadrature norms of a dof vector.

    which = 'Ls' (requires s), 'H1', or 'W2s' (broken second derivatives of
    the piecewise-quadratic basis; requires s).  Exponents are restricted
    to the admissible range [4/3, s0).
    """
    if which == "H1":
        v2, g2, _ = _field_tables(space, fld)
        return float(np.sqrt(np.einsum("q,cq->", space.wq, v2 + g2)))
    if s is None:
        raise ValueError(f"norm '{which}' requires the exponent s")
    _check_exponent(s)
    if which == "Ls":
        v2, _, _ = _field_tables(space, fld)
        return float(np.einsum("q,cq->", space.wq, v2 ** (s / 2.0)) ** (1.0 / s))
    if which == "W2s":
        v2, g2, h2 = _field_tables(space, fld)
        dens = (v2 + g2 + h2) ** (s / 2.0)
        return float(np.einsum("q,cq->", space.wq, dens) ** (1.0 / s))
    raise ValueError(f"unknown norm kind '{which}'")


def lp_norm_of_values(space, values, p):
    """L^p quadrature norm of pointwise values (ncells, nq) or (ncells, nq, 3)."""
    values = np.asarray(values)
    if values.ndim == 3:
        mag = np.sqrt(np.sum(values**2, axis=-1))
    else:
        mag = np.abs(values)
    return float(np.einsum("q,cq->", space.wq, mag**p) ** (1.0 / p))


def b_field_norm(space, model, u0, u1, s):
    """L^s norm of the pointwise convective density rho0 (u0.grad)u1."""
    return lp_norm_of_values(space, convection_value(space, model, u0, u1), s)


def d_field_norm(space, model, theta_freeze, u, theta_transport, r):
    """L^r norm of c_V rho(theta_freeze) u . grad theta_transport."""
    return lp_norm_of_values(
        space, heat_convection_value(space, model, theta_freeze, u, theta_transport), r
    )


def e_field_norm(space, model, u, v, r):
    """L^r norm of alpha1 nu e(u):e(v)."""
    return lp_norm_of_values(space, dissipation_value(space, model, u, v), r)


# -- boundary terms --------------------------------------------------------------


def surface_velocity_normal(space, u, face_name):
    """(u . n, surface weights per facet) on one boundary face."""
    face = space.faces[face_name]
    nodal = space.split_velocity(u)
    local = nodal[face["conn"]]                     # (nfacet, 9, 3)
    vals = np.einsum("cim,iq->cqm", local, face["basis"])
    un = vals @ face["normal"]
    return un, face["weights"]


def outflow_boundary_term(space, model, u0, v):
    """(rho0 / 2) * integral over the open ends of (u0 . n) |v|^2.

    For analytically divergence-free u0 with u0 . n = 0 on the walls this
    equals b(u0, v, v) up to quadrature error.
    """
    total = 0.0
    for name in ("x0", "x1"):
        face = space.faces[name]
        un, wts = surface_velocity_normal(space, u0, name)
        nodal = space.split_velocity(v)
        vv = np.einsum("cim,iq->cqm", nodal[face["conn"]], face["basis"])
        total += np.einsum("q,cq->", wts, un * np.sum(vv**2, axis=-1))
    return 0.5 * model.rho0 * float(total)
