"""Material constants and the temperature-dependent density law.

The density law must be strictly positive, nonincreasing, continuous and
bounded above by ``rho_sharp``; it multiplies gravity in the momentum
equation and the convective term of the heat equation, everywhere else
the constant reference density is used.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DensityLaw",
    "MaterialModel",
    "clamped_boussinesq",
    "constant_density",
    "make_material",
    "density",
    "validate",
    "MaterialReport",
]


@dataclass(frozen=True)
class DensityLaw:
    """Density as a function of temperature.

    kind 'clamped_boussinesq': rho0 * (1 - alpha_v * (theta - theta_ref)),
    clamped to [rho_min, rho0].  kind 'constant': rho0 everywhere.
    """

    kind: str
    rho0: float
    alpha_v: float = 0.0
    theta_ref: float = 0.0
    rho_min: float = 0.0

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full_like(theta, self.rho0)
        lin = self.rho0 * (1.0 - self.alpha_v * (theta - self.theta_ref))
        return np.clip(lin, self.rho_min, self.rho0)

    @property
    def upper_bound(self):
        return self.rho0

    @property
    def lipschitz(self):
        if self.kind == "constant":
            return 0.0
        return abs(self.rho0 * self.alpha_v)


def clamped_boussinesq(rho0, alpha_v, theta_ref=0.0, rho_min=None):
    if rho_min is None:
        rho_min = rho0 / 2.0
    return DensityLaw("clamped_boussinesq", rho0, alpha_v, theta_ref, rho_min)


def constant_density(rho0):
    return DensityLaw("constant", rho0)


@dataclass(frozen=True)
class MaterialModel:
    nu: float                 # kinematic viscosity
    rho0: float               # reference density
    cV: float                 # specific heat at constant volume
    lam: float                # heat conductivity
    alpha1: float             # dissipation coefficient
    rho_law: DensityLaw = field(default=None)
    rho_sharp: float = 0.0    # upper density bound
    C_rho: float = 0.0        # Lipschitz constant of the density law

    def __post_init__(self):
        for name in ("nu", "rho0", "cV", "lam"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.alpha1 < 0:
            raise ValueError("alpha1 must be nonnegative")


def make_material(nu, rho0, cV, lam, alpha1, law=None):
    """Assemble a MaterialModel, deriving rho_sharp and C_rho from the law."""
    if law is None:
        law = clamped_boussinesq(rho0, alpha_v=0.1)
    return MaterialModel(
        nu=float(nu),
        rho0=float(rho0),
        cV=float(cV),
        lam=float(lam),
        alpha1=float(alpha1),
        rho_law=law,
        rho_sharp=law.upper_bound,
        C_rho=law.lipschitz,
    )


def density(model, theta):
    """Evaluate the density law; total on R, values in (0, rho_sharp]."""
    return model.rho_law(theta)


@dataclass
class MaterialReport:
    passed: bool
    violations: list
    empirical_lipschitz: float
    t_max: float
    n_samples: int


def validate(model, t_max=1e3, n_samples=10_000):
    """Sample-check positivity, bound, monotonicity and Lipschitz continuity.

    Never raises; returns the violation list and the sampled max slope as
    an empirical lower bound for C_rho.
    """
    theta = np.linspace(-t_max, t_max, n_samples)
    rho = density(model, theta)
    violations = []
    if np.any(rho <= 0):
        violations.append("density not strictly positive on sample grid")
    if np.any(rho > model.rho_sharp * (1 + 1e-12)):
        violations.append("density exceeds rho_sharp on sample grid")
    drho = np.diff(rho)
    dth = np.diff(theta)
    if np.any(drho > 1e-12 * max(model.rho_sharp, 1.0)):
        violations.append("density is increasing somewhere on sample grid")
    slopes = np.abs(drho) / dth
    emp = float(slopes.max()) if len(slopes) else 0.0
    if emp > model.C_rho * (1 + 1e-9) + 1e-15:
        violations.append(
            f"sampled slope {emp:.6g} exceeds declared Lipschitz constant {model.C_rho:.6g}"
        )
    return MaterialReport(
        passed=not violations,
        violations=violations,
        empirical_lipschitz=emp,
        t_max=t_max,
        n_samples=n_samples,
    )
