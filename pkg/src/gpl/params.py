"""Constitutive parameters, memory kernels and stability numbers.

The material is described by eight constants (rho, J, c, mu, b, alpha, xi,
beta); heat conduction carries memory through a relaxation kernel, fixed
here to a finite sum of decaying exponentials

    kappa(s) = sum_i k_i * exp(-delta_i * s),      k_i > 0, delta_i > 0,

which is positive, nonincreasing, integrable and satisfies
kappa' <= -delta*kappa with delta = min_i delta_i.  Its mass is
g0 = integral_0^inf kappa = sum_i k_i/delta_i.

Two derived scalars control the long-time behaviour of the coupled system:

    gamma_g = c*mu - rho*g0
    chi_g   = rho/mu - J/alpha + rho*beta**2 / (alpha*gamma_g)

(the latter only when gamma_g != 0).  The evolution is exponentially
stable exactly when gamma_g != 0 and chi_g == 0; `stability_numbers`
encodes the dichotomy as a four-way classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidKernel, NonPositiveConstant, NotPositiveDefinite

CLASS_EXP_STABLE = "ExpStable"
CLASS_CHI_NONZERO = "NotExp_ChiNonzero"
CLASS_GAMMA_ZERO = "NotExp_GammaZero"
CLASS_DOUBLE_DEGENERATE = "NotExp_DoubleDegenerate"

CLASSIFICATIONS = frozenset(
    {CLASS_EXP_STABLE, CLASS_CHI_NONZERO, CLASS_GAMMA_ZERO, CLASS_DOUBLE_DEGENERATE}
)


@dataclass(frozen=True)
class MaterialParams:
    """The eight constitutive constants of the coupled system.

    rho   -- mass density (> 0)
    J     -- equilibrated inertia (> 0)
    c     -- thermal capacity (> 0)
    mu    -- elastic modulus (> 0)
    b     -- elastic-porous coupling (nonzero)
    alpha -- porous stiffness (> 0)
    xi    -- porous rigidity (> 0)
    beta  -- thermal coupling (nonzero in the dissipative regime; beta = 0
             is accepted and yields a conservative mechanical block)
    """

    rho: float
    J: float
    c: float
    mu: float
    b: float
    alpha: float
    xi: float
    beta: float

    @property
    def wave_speed_gap(self) -> float:
        """rho/mu - J/alpha; zero means equal propagation speeds."""
        return self.rho / self.mu - self.J / self.alpha


def validate_params(p: MaterialParams) -> MaterialParams:
    """Check positivity of the constants and mu*xi > b**2.

    Returns `p` unchanged when valid; raises NonPositiveConstant or
    NotPositiveDefinite otherwise.  b and beta may take either sign.
    """
    for name in ("rho", "J", "c", "mu", "alpha", "xi"):
        value = getattr(p, name)
        if not (value > 0.0) or not math.isfinite(value):
            raise NonPositiveConstant(name, value)
    for name in ("b", "beta"):
        if not math.isfinite(getattr(p, name)):
            raise NonPositiveConstant(name, getattr(p, name))
    if not (p.mu * p.xi > p.b * p.b):
        raise NotPositiveDefinite(
            f"positive definiteness needs mu*xi > b^2, got mu*xi = {p.mu * p.xi!r}"
            f" and b^2 = {p.b * p.b!r}"
        )
    return p


@dataclass(frozen=True)
class PronyKernel:
    """Memory kernel kappa(s) = sum_i k_i exp(-delta_i s).

    `terms` is a nonempty tuple of (weight, rate) pairs with both entries
    strictly positive.  Each term satisfies the decay hypothesis with
    delta = min_i delta_i, so the whole kernel does.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(k), float(d)) for k, d in self.terms))

    @property
    def delta(self) -> float:
        """Decay witness: kappa'(s) <= -delta * kappa(s) for all s >= 0."""
        return min(d for _, d in self.terms)

    @property
    def g0(self) -> float:
        """Kernel mass integral_0^inf kappa(s) ds = sum k_i/delta_i."""
        return kernel_g0(self)

    def kappa(self, s):
        """Evaluate kappa(s); accepts scalars or numpy arrays."""
        import numpy as np

        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k, d in self.terms:
            out = out + k * np.exp(-d * s)
        return out

    def dkappa(self, s):
        """Evaluate kappa'(s) = -sum k_i delta_i exp(-delta_i s)."""
        import numpy as np

        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k, d in self.terms:
            out = out - k * d * np.exp(-d * s)
        return out

    def tail_mass(self, s0: float) -> float:
        """integral_{s0}^inf kappa(s) ds, in closed form."""
        return sum((k / d) * math.exp(-d * s0) for k, d in self.terms)


def validate_kernel(k: PronyKernel) -> PronyKernel:
    """Check the Prony representation is admissible.

    Positivity of every weight and rate is sufficient for all four kernel
    hypotheses (positivity, monotone decay, integrability, exponential
    domination with delta = min rate).
    """
    if not k.terms:
        raise InvalidKernel("kernel needs at least one (weight, rate) term")
    for i, (w, d) in enumerate(k.terms):
        if not (w > 0.0) or not math.isfinite(w):
            raise NonPositiveConstant(f"terms[{i}].weight", w)
        if not (d > 0.0) or not math.isfinite(d):
            raise NonPositiveConstant(f"terms[{i}].rate", d)
    return k


def kernel_g0(k: PronyKernel) -> float:
    """Mass of the kernel: integral_0^inf kappa(s) ds = sum k_i/delta_i."""
    return sum(w / d for w, d in k.terms)


def cattaneo_kernel(kappa0: float, tau0: float) -> PronyKernel:
    """Single-term kernel reproducing flux relaxation with time lag tau0.

    The relaxation law with conductivity kappa0 and lag tau0 corresponds to
    g(s) = (kappa0/tau0) exp(-s/tau0), hence kappa = -g' has weight
    kappa0/tau0**2 and rate 1/tau0.  The mass of the result is
    g(0) = kappa0/tau0.
    """
    if not (kappa0 > 0.0) or not math.isfinite(kappa0):
        raise NonPositiveConstant("kappa0", kappa0)
    if not (tau0 > 0.0) or not math.isfinite(tau0):
        raise NonPositiveConstant("tau0", tau0)
    return PronyKernel(((kappa0 / tau0**2, 1.0 / tau0),))


def kernel_hat(k: PronyKernel, lam: float) -> complex:
    """Transform of the causal kernel at real frequency lam.

    kernel_hat(lam) = integral_0^inf kappa(s) exp(-i lam s) ds
                    = sum_i k_i / (delta_i + i lam).

    At lam = 0 this returns kernel_g0(k) exactly (same summation); the
    modulus decays like 1/|lam| for large frequencies.
    """
    if lam == 0.0:
        return complex(kernel_g0(k), 0.0)
    return sum(w / (d + 1j * lam) for w, d in k.terms)


@dataclass(frozen=True)
class StabilityReport:
    """Stability numbers and their four-way classification.

    chi_g is None when |gamma_g| <= tol: the chi formula divides by
    gamma_g and is not meaningful near that manifold.
    """

    gamma_g: float
    chi_g: float | None
    classification: str
    tolerance: float

    @property
    def chi_defined(self) -> bool:
        return self.chi_g is not None


def default_tolerance(p: MaterialParams) -> float:
    """Degeneracy tolerance 1e-9 * c * mu (the scale of gamma_g)."""
    return 1e-9 * p.c * p.mu


def stability_numbers(
    p: MaterialParams, k: PronyKernel, tol: float | None = None
) -> StabilityReport:
    """Compute gamma_g, chi_g and classify the long-time behaviour.

    Classification:
      ExpStable               |gamma_g| > tol and |chi_g| <= tol
      NotExp_ChiNonzero       |gamma_g| > tol and |chi_g| >  tol
      NotExp_GammaZero        |gamma_g| <= tol, wave speeds unequal
      NotExp_DoubleDegenerate |gamma_g| <= tol and |rho/mu - J/alpha| <= tol
    """
    if tol is None:
        tol = default_tolerance(p)
    if not (tol > 0.0):
        raise ValueError(f"tol must be > 0, got {tol!r}")
    gamma = p.c * p.mu - p.rho * kernel_g0(k)
    gap = p.wave_speed_gap
    if abs(gamma) <= tol:
        cls = CLASS_DOUBLE_DEGENERATE if abs(gap) <= tol else CLASS_GAMMA_ZERO
        return StabilityReport(gamma, None, cls, tol)
    chi = gap + p.rho * p.beta**2 / (p.alpha * gamma)
    cls = CLASS_EXP_STABLE if abs(chi) <= tol else CLASS_CHI_NONZERO
    return StabilityReport(gamma, chi, cls, tol)


def cattaneo_chi(p: MaterialParams, kappa0: float, tau0: float) -> float:
    """Stability number of the flux-relaxation (second sound) system.

    chi = beta^2 - (c*alpha*mu/rho - alpha*kappa0/tau0) * (J/alpha - rho/mu)

    For the kernel cattaneo_kernel(kappa0, tau0) this satisfies the exact
    identity alpha * gamma_g * chi_g = rho * chi whenever gamma_g != 0.
    """
    if not (kappa0 > 0.0):
        raise NonPositiveConstant("kappa0", kappa0)
    if not (tau0 > 0.0):
        raise NonPositiveConstant("tau0", tau0)
    return p.beta**2 - (p.c * p.alpha * p.mu / p.rho - p.alpha * kappa0 / tau0) * (
        p.J / p.alpha - p.rho / p.mu
    )
