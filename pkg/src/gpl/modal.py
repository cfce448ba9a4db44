"""Exact per-mode reduction of the coupled system to linear ODEs.

With boundary conditions u(0) = u(pi) = phi_x(0) = phi_x(pi) =
theta(0) = theta(pi) = 0, every field separates on integer modes
(u, theta ~ sin(nx), phi ~ cos(nx)).  Closing the temperature-history
convolution with one auxiliary amplitude per kernel term

    w_i(t) = integral_0^inf k_i exp(-delta_i s) eta_n(t, s) ds

turns mode n into the (5+m)-dimensional system

    u' = v
    rho v'   = -mu n^2 u - b n phi
    phi' = psi
    J   psi' = -(alpha n^2 + xi) phi - b n u - beta n theta
    c theta' = beta n psi - n^2 sum_i w_i
    w_i'     = (k_i/delta_i) theta - delta_i w_i

which is exact (not an approximation) for Prony kernels and zero or
w-representable initial history.  The module assembles these matrices,
computes their spectra and scans the spectral abscissa over modes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidMode, NoConvergence
from .params import MaterialParams, PronyKernel

MAX_EIG_DIM = 64


@dataclass(frozen=True)
class ModeState:
    """Per-mode state: amplitudes of (u, u_t, phi, phi_t, theta) plus memory.

    `w` holds one auxiliary memory amplitude per kernel term; an empty
    tuple is the zero-history state of a kernel-free mechanical block.
    """

    u: float = 0.0
    v: float = 0.0
    phi: float = 0.0
    psi: float = 0.0
    theta: float = 0.0
    w: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return 5 + len(self.w)

    def as_vector(self) -> np.ndarray:
        return np.array([self.u, self.v, self.phi, self.psi, self.theta, *self.w])

    @classmethod
    def from_vector(cls, x) -> "ModeState":
        x = np.asarray(x, dtype=float)
        return cls(
            float(x[0]), float(x[1]), float(x[2]), float(x[3]), float(x[4]),
            tuple(float(v) for v in x[5:]),
        )


@dataclass(frozen=True)
class ModalMatrix:
    """Generator M_n of a single mode: d/dt state = M_n state."""

    n: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def assemble_modal_matrix(p: MaterialParams, k: PronyKernel, n: int) -> ModalMatrix:
    """Build the (5+m) x (5+m) generator of mode n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidMode(f"mode index must be a positive integer, got {n!r}")
    m = len(k.terms)
    M = np.zeros((5 + m, 5 + m))
    n2 = float(n) * float(n)
    M[0, 1] = 1.0
    M[1, 0] = -p.mu * n2 / p.rho
    M[1, 2] = -p.b * n / p.rho
    M[2, 3] = 1.0
    M[3, 0] = -p.b * n / p.J
    M[3, 2] = -(p.alpha * n2 + p.xi) / p.J
    M[3, 4] = -p.beta * n / p.J
    M[4, 3] = p.beta * n / p.c
    for i, (w, d) in enumerate(k.terms):
        M[4, 5 + i] = -n2 / p.c
        M[5 + i, 4] = w / d
        M[5 + i, 5 + i] = -d
    return ModalMatrix(int(n), M)


def mechanical_block(p: MaterialParams, n: int) -> np.ndarray:
    """The conservative 4x4 (u, v, phi, psi) block of mode n."""
    return assemble_modal_matrix(p, PronyKernel(((1.0, 1.0),)), n).matrix[:4, :4].copy()


def eigenvalues(M, vectors: bool = False):
    """Full spectrum of a dense real or complex matrix.

    Uses the LAPACK dense nonsymmetric solver (Hessenberg reduction with
    shifted QR).  Dimension is capped at 64: every matrix this package
    builds is (5+m) x (5+m) with m small.  With ``vectors=True`` returns
    (values, column eigenvector matrix); backward errors of the returned
    pairs are at eigensolver level, ~1e-15 * ||M||.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"need a square matrix, got shape {M.shape}")
    if M.shape[0] > MAX_EIG_DIM:
        raise ValueError(f"dimension {M.shape[0]} exceeds the dense cap {MAX_EIG_DIM}")
    try:
        if vectors:
            vals, vecs = np.linalg.eig(M)
            return vals, vecs
        return np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NoConvergence(str(exc)) from exc


def spectral_abscissa(p: MaterialParams, k: PronyKernel, n: int) -> float:
    """Largest real part over the spectrum of mode n."""
    return float(eigenvalues(assemble_modal_matrix(p, k, n).matrix).real.max())


@dataclass(frozen=True)
class SpectrumScan:
    """Per-mode spectral abscissas for n = 1..n_max."""

    n_max: int
    abscissa: np.ndarray = field(repr=False)
    sup_abscissa: float

    def __post_init__(self):
        self.abscissa.setflags(write=False)


def abscissa_scan(
    p: MaterialParams, k: PronyKernel, n_max: int, threads: int = 1
) -> SpectrumScan:
    """Scan spectral_abscissa over n = 1..n_max.

    Modes are independent; with threads > 1 they are evaluated in a thread
    pool (the eigensolver releases the GIL).  Output ordering by n is
    deterministic either way.
    """
    if n_max < 1:
        raise InvalidMode(f"n_max must be >= 1, got {n_max!r}")
    ns = range(1, n_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(lambda n: spectral_abscissa(p, k, n), ns))
    else:
        vals = [spectral_abscissa(p, k, n) for n in ns]
    arr = np.array(vals)
    return SpectrumScan(n_max, arr, float(arr.max()))
