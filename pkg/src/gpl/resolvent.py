"""Resonant-frequency response analysis of the modal systems.

Forcing the velocity equation of mode n at the resonant frequency
lambda_n = n sqrt(mu/rho) (the root of p1 below) probes whether the
resolvent of the evolution generator stays bounded along the imaginary
axis -- the classical criterion separating exponential from slower
decay.  Eliminating the modal unknowns reduces the forced system to a
3x3 solve with the polynomial values

    p1 = rho lambda^2 - mu n^2
    p2 = J lambda^2 - xi - alpha n^2
    p3 = -c lambda^2 + n^2 (g0 - kernel_hat(lambda))

and the displacement response at resonance is A_n = K1/K2 with

    K1 = p2 p3 + (beta n lambda)^2,      K2 = (b n)^2 p3.

As n grows, A_n approaches a closed-form limit that depends only on
which of (gamma_g, wave-speed gap, chi_g) degenerate; `amplitude_limit`
returns that classification.  `resolvent_solve` instead solves the full
(5+m)-dimensional system directly and reports the squared energy norm of
the response, whose growth (or boundedness) in n is the numerical
verdict on exponential stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentAmplitude, SingularSystem
from .modal import assemble_modal_matrix
from .params import (
    MaterialParams,
    PronyKernel,
    default_tolerance,
    kernel_g0,
    kernel_hat,
    stability_numbers,
)

REGIME_EQUAL_SPEEDS = "EqualSpeeds_GammaNonzero"
REGIME_GAMMA_ZERO = "UnequalSpeeds_GammaZero"
REGIME_DOUBLE_DEGENERATE = "DoubleDegenerate"
REGIME_GENERIC = "Generic_ChiNonzero"
REGIME_STABLE = "Stable_ChiZero"


@dataclass(frozen=True)
class ResonantMode:
    """Mode index n paired with its resonant frequency lambda_n."""

    n: int
    lambda_n: float

    @classmethod
    def build(cls, p: MaterialParams, n: int) -> "ResonantMode":
        return cls(n, n * math.sqrt(p.mu / p.rho))


def p_polys(
    p: MaterialParams, k: PronyKernel, n: int, lam: float
) -> tuple[complex, complex, complex]:
    """Values (p1, p2, p3) of the elimination polynomials at frequency lam."""
    g0 = kernel_g0(k)
    n2 = float(n) * float(n)
    p1 = complex(p.rho * lam * lam - p.mu * n2)
    p2 = complex(p.J * lam * lam - p.xi - p.alpha * n2)
    p3 = -p.c * lam * lam + n2 * (g0 - kernel_hat(k, lam))
    return p1, p2, p3


def elimination_matrix(
    p: MaterialParams, k: PronyKernel, n: int, lam: float
) -> np.ndarray:
    """The 3x3 system for the (u, phi, theta) amplitudes under unit forcing.

    Its determinant equals p1*K1 - K2 identically.
    """
    p1, p2, p3 = p_polys(p, k, n, lam)
    bn = p.b * n
    betan = p.beta * n
    return np.array(
        [
            [p1, -bn, 0.0],
            [-bn, p2, -betan],
            [0.0, betan * lam * lam, p3],
        ],
        dtype=complex,
    )


def modal_amplitude(
    p: MaterialParams, k: PronyKernel, n: int, tol: float = 1e-12
) -> complex:
    """Displacement response A_n = K1/K2 at the resonant frequency.

    Raises DivergentAmplitude when |p3(lambda_n)| falls below tol times
    its natural scale (the doubly degenerate channel, where the response
    has no finite closed form).
    """
    lam = ResonantMode.build(p, n).lambda_n
    _, p2, p3 = p_polys(p, k, n, lam)
    n2 = float(n) * float(n)
    scale = p.c * lam * lam + n2 * (kernel_g0(k) + abs(kernel_hat(k, lam)))
    if abs(p3) <= tol * scale:
        raise DivergentAmplitude(
            f"|p3(lambda_{n})| = {abs(p3):.3g} below {tol:.1g} * scale = {tol * scale:.3g}"
        )
    K1 = p2 * p3 + (p.beta * n * lam) ** 2
    K2 = (p.b * n) ** 2 * p3
    return K1 / K2


@dataclass(frozen=True)
class AmplitudeCase:
    """Large-n regime of A_n and its closed-form limit.

    `limit` is None when the regime sends A_n to infinity
    (`limit_infinite` is then True).  In the Stable_ChiZero regime the
    limit value 0 carries no blow-up witness; it is reported for
    completeness only.
    """

    regime: str
    limit: complex | None
    limit_infinite: bool = False


def amplitude_limit(
    p: MaterialParams, k: PronyKernel, tol: float | None = None
) -> AmplitudeCase:
    """Classify the large-n regime of A_n and return its limit.

    The regimes partition parameter space by (gamma_g, wave-speed gap,
    chi_g), compared against the same tolerance used by the stability
    classification.
    """
    if tol is None:
        tol = default_tolerance(p)
    report = stability_numbers(p, k, tol)
    gamma = report.gamma_g
    gap = p.wave_speed_gap
    b2rho = p.b * p.b * p.rho
    if abs(gamma) <= tol:
        if abs(gap) <= tol:
            return AmplitudeCase(REGIME_DOUBLE_DEGENERATE, None, limit_infinite=True)
        return AmplitudeCase(REGIME_GAMMA_ZERO, complex(-p.alpha * p.mu * gap / b2rho))
    chi = report.chi_g
    assert chi is not None
    if abs(chi) <= tol:
        return AmplitudeCase(REGIME_STABLE, complex(0.0))
    if abs(gap) <= tol:
        return AmplitudeCase(
            REGIME_EQUAL_SPEEDS, complex(-p.beta**2 * p.mu / (p.b * p.b * gamma))
        )
    return AmplitudeCase(REGIME_GENERIC, complex(-p.alpha * p.mu * chi / b2rho))


@dataclass(frozen=True)
class ResolventResponse:
    """Solution of the forced modal system at the resonant frequency.

    norm_sq is the squared energy norm of the response,

        ||x||^2 = (pi/2) [ rho|v|^2 + J|psi|^2
                           + |sqrt(mu) n u + b/sqrt(mu) phi|^2
                           + (xi - b^2/mu)|phi|^2 + alpha n^2 |phi|^2
                           + c|theta|^2 + n^2 sum_i 2(delta_i/k_i)|w_i|^2 ],

    where the last sum is the exact memory seminorm of the reconstructed
    history profile of a steady response at frequency lambda_n.
    """

    n: int
    lambda_n: float
    norm_sq: float
    u: complex
    v: complex
    phi: complex
    psi: complex
    theta: complex
    w: tuple[complex, ...]


def memory_norm_sq_from_w(
    k: PronyKernel, n: int, w: tuple[complex, ...] | np.ndarray
) -> float:
    """(pi/2) n^2 sum_i 2 (delta_i/k_i) |w_i|^2.

    For a steady response at real frequency lambda this equals
    (pi/2) n^2 integral kappa(s) |D(s)|^2 ds with
    D(s) = (theta/(i lambda)) (1 - exp(-i lambda s)).
    """
    total = sum(
        2.0 * (d / kw) * float(abs(wi) ** 2) for (kw, d), wi in zip(k.terms, w)
    )
    return (math.pi / 2.0) * n * n * total


def resolvent_solve(p: MaterialParams, k: PronyKernel, n: int) -> ResolventResponse:
    """Solve (i lambda_n I - M_n) x = f with unit forcing of the velocity row.

    The forcing amplitude is 1/rho so the momentum form of the velocity
    equation carries forcing exactly 1 (equivalently, the displacement
    row of the eliminated 3x3 system reads p1 u - b n phi = -1).
    Returns the squared energy norm together with the response
    amplitudes; raises SingularSystem if the shifted matrix is singular.
    """
    mode = ResonantMode.build(p, n)
    M = assemble_modal_matrix(p, k, n)
    dim = M.dim
    A = 1j * mode.lambda_n * np.eye(dim) - M.matrix
    f = np.zeros(dim, dtype=complex)
    f[1] = 1.0 / p.rho
    try:
        x = np.linalg.solve(A, f)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"i*lambda_{n} is an eigenvalue of the modal system") from exc
    u, v, phi, psi, theta = x[:5]
    w = tuple(x[5:])
    n2 = float(n) * float(n)
    sq = math.sqrt(p.mu) * n * u + p.b / math.sqrt(p.mu) * phi
    norm_sq = (math.pi / 2.0) * (
        p.rho * abs(v) ** 2
        + p.J * abs(psi) ** 2
        + abs(sq) ** 2
        + (p.xi - p.b**2 / p.mu) * abs(phi) ** 2
        + p.alpha * n2 * abs(phi) ** 2
        + p.c * abs(theta) ** 2
    ) + memory_norm_sq_from_w(k, n, w)
    return ResolventResponse(
        n=n,
        lambda_n=mode.lambda_n,
        norm_sq=float(norm_sq),
        u=u,
        v=v,
        phi=phi,
        psi=psi,
        theta=theta,
        w=w,
    )


def history_profile(theta: complex, lam: float, s: np.ndarray) -> np.ndarray:
    """Steady-response history D(s) = (theta/(i lam)) (1 - exp(-i lam s))."""
    return theta / (1j * lam) * (1.0 - np.exp(-1j * lam * np.asarray(s)))
