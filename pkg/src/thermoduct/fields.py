"""Closed-form scalar and vector fields.

Fields are evaluated directly at quadrature points (no interpolation
layer).  Gradients and Laplacians are optional closures; solver paths
that need them (boundary-data lifting, load-norm bookkeeping) check for
their presence.  Value callables must accept complex coordinate arrays
so that manufactured-solution derivatives can be cross-checked by
complex-step differentiation.
"""

import numpy as np

__all__ = [
    "ScalarField",
    "VectorField",
    "constant_scalar",
    "constant_vector",
    "zero_vector",
    "span_scalar",
    "theta_field_registry",
    "body_force_registry",
]


class ScalarField:
    def __init__(self, value, grad=None, laplacian=None, name="scalar"):
        self.value = value
        self.grad = grad
        self.laplacian = laplacian
        self.name = name

    def __call__(self, x):
        return self.value(np.asarray(x))


class VectorField:
    """grad(x) has index order [point, component, direction]."""

    def __init__(self, value, grad=None, laplacian=None, name="vector"):
        self.value = value
        self.grad = grad
        self.laplacian = laplacian
        self.name = name

    def __call__(self, x):
        return self.value(np.asarray(x))


def constant_scalar(c, name=None):
    c = float(c)
    return ScalarField(
        value=lambda x: np.full(x.shape[0], c, dtype=x.dtype),
        grad=lambda x: np.zeros((x.shape[0], 3), dtype=x.dtype),
        laplacian=lambda x: np.zeros(x.shape[0], dtype=x.dtype),
        name=name or f"constant({c})",
    )


def constant_vector(v, name=None):
    v = np.asarray(v, dtype=float).reshape(3)
    return VectorField(
        value=lambda x: np.broadcast_to(v.astype(x.dtype), (x.shape[0], 3)).copy(),
        grad=lambda x: np.zeros((x.shape[0], 3, 3), dtype=x.dtype),
        laplacian=lambda x: np.zeros((x.shape[0], 3), dtype=x.dtype),
        name=name or f"constant({tuple(v)})",
    )


def zero_vector():
    return constant_vector((0.0, 0.0, 0.0), name="zero")


def span_scalar(axis, theta0, delta, length):
    """Affine profile theta0 + delta * x_axis / length across one axis.

    Harmonic, with zero normal derivative on the open (x-normal) ends for
    axis in {1, 2}, so it doubles as boundary data whose lifting carries a
    plain volumetric load.
    """
    axis = int(axis)
    theta0, delta, length = float(theta0), float(delta), float(length)

    def value(x):
        return theta0 + delta * x[:, axis] / length

    def grad(x):
        g = np.zeros((x.shape[0], 3), dtype=x.dtype)
        g[:, axis] = delta / length
        return g

    return ScalarField(
        value=value,
        grad=grad,
        laplacian=lambda x: np.zeros(x.shape[0], dtype=x.dtype),
        name=f"span_{'xyz'[axis]}",
    )


def theta_field_registry(dims):
    """Named boundary-temperature fields available to run configurations."""
    Lx, Ly, Lz = dims
    return {
        "constant": lambda p: constant_scalar(p.get("theta0", 0.0), name="constant"),
        "span_y": lambda p: span_scalar(1, p.get("theta0", 0.0), p.get("delta", 1.0), Ly),
        "span_z": lambda p: span_scalar(2, p.get("theta0", 0.0), p.get("delta", 1.0), Lz),
    }


def body_force_registry():
    """Named body-force fields available to run configurations."""
    return {
        "zero": lambda p: zero_vector(),
        "constant": lambda p: constant_vector(
            (p.get("gx", 0.0), p.get("gy", 0.0), p.get("gz", 0.0)), name="constant"
        ),
    }
