"""Exact time integration of the modal systems and energy accounting.

Per mode the evolution is linear, so one matrix exponential per (mode,
dt) pair advances the state without time-discretization error.  The
energy is evaluated in the natural norm of the problem,

    E = (pi/4) sum_n [ rho v^2 + J psi^2
                       + (sqrt(mu) n u + b/sqrt(mu) phi)^2
                       + (xi - b^2/mu) phi^2 + alpha n^2 phi^2
                       + c theta^2
                       + n^2 integral_0^inf kappa(s) eta_n(s)^2 ds ],

with the history reconstructed from the recorded temperature trace:
starting from zero past history, eta_n(t, s) = integral of theta_n over
[max(0, t-s), t].  The memory integral is a trapezoid rule on a fixed
stretched s-grid covering [0, 40/delta] plus the closed-form exponential
tail; the grid is deliberately time-independent so that the quadrature
error drifts smoothly in t and the dissipation residual

    [E(t+dt) - E(t-dt)] / (2 dt) - (pi/4) sum_n n^2 integral kappa' eta_n^2

exposes its O(dt^2) convergence instead of grid jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    HistoryGap,
    NonUniformGrid,
    NonPositiveConstant,
    OverflowScale,
)
from .modal import ModalMatrix, ModeState, assemble_modal_matrix
from .params import MaterialParams, PronyKernel, validate_kernel, validate_params

# Pade' order-13 numerator coefficients and the 1-norm threshold above
# which the argument is scaled by powers of two (Higham's method).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_PADE13_THETA = 5.371920351148152
_MAX_SQUARINGS = 60


def _expm(A: np.ndarray) -> np.ndarray:
    """Dense matrix exponential by scaling-and-squaring with Pade'-13."""
    A = np.asarray(A, dtype=float)
    norm = np.linalg.norm(A, 1)
    if norm == 0.0:
        return np.eye(A.shape[0])
    squarings = 0
    if norm > _PADE13_THETA:
        squarings = int(math.ceil(math.log2(norm / _PADE13_THETA)))
        if squarings > _MAX_SQUARINGS:
            raise OverflowScale(
                f"||A|| = {norm:.3g} needs {squarings} squarings (cap {_MAX_SQUARINGS})"
            )
        A = A / (2.0**squarings)
    ident = np.eye(A.shape[0])
    b = _PADE13
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6
        + b[5] * A4
        + b[3] * A2
        + b[1] * ident
    )
    V = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6
        + b[4] * A4
        + b[2] * A2
        + b[0] * ident
    )
    P = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        P = P @ P
    return P


def propagator(M: ModalMatrix | np.ndarray, dt: float) -> np.ndarray:
    """exp(M * dt): the one-step transition matrix of a modal system."""
    if not (dt > 0.0):
        raise ValueError(f"dt must be > 0, got {dt!r}")
    A = M.matrix if isinstance(M, ModalMatrix) else np.asarray(M, dtype=float)
    return _expm(A * dt)


def evolve(
    M: ModalMatrix | np.ndarray, state0: ModeState, dt: float, steps: int
) -> list[ModeState]:
    """Exact trajectory [state0, P state0, P^2 state0, ...] of length steps+1."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps!r}")
    x = state0.as_vector()
    dim = M.dim if isinstance(M, ModalMatrix) else np.asarray(M).shape[0]
    if x.shape[0] != dim:
        raise ValueError(f"state dimension {x.shape[0]} != matrix dimension {dim}")
    out = [state0]
    if steps == 0:
        return out
    P = propagator(M, dt)
    for _ in range(steps):
        x = P @ x
        out.append(ModeState.from_vector(x))
    return out


# ---------------------------------------------------------------------------
# temperature history and the memory quadrature
# ---------------------------------------------------------------------------


class ThetaHistory:
    """Temperature trace of one mode, recorded at every step.

    Maintains the running integral Theta(t) = integral_0^t theta by the
    trapezoid rule on the step grid; eta(t, s) = Theta(t) - Theta(t - s)
    with Theta extended by zero to negative times.
    """

    def __init__(self, dt: float, theta0: float):
        if not (dt > 0.0):
            raise ValueError(f"dt must be > 0, got {dt!r}")
        self.dt = dt
        self._theta = [float(theta0)]
        self._Theta = [0.0]

    def append(self, theta: float) -> None:
        th = float(theta)
        self._Theta.append(self._Theta[-1] + 0.5 * self.dt * (self._theta[-1] + th))
        self._theta.append(th)

    def __len__(self) -> int:
        return len(self._theta)

    @property
    def t_last(self) -> float:
        return (len(self._theta) - 1) * self.dt

    def frozen(self) -> "ThetaHistory":
        """Return self with internal arrays converted for fast interpolation."""
        self._theta_arr = np.asarray(self._theta)
        self._Theta_arr = np.asarray(self._Theta)
        return self

    def _arrays(self):
        arr = getattr(self, "_Theta_arr", None)
        if arr is None or arr.shape[0] != len(self._Theta):
            self.frozen()
        return self._Theta_arr

    def step_index(self, t: float) -> int:
        j = int(round(t / self.dt))
        if abs(j * self.dt - t) > 1e-9 * max(self.dt, abs(t)):
            raise HistoryGap(f"t = {t!r} is not on the recorded step grid (dt = {self.dt!r})")
        if j < 0 or j >= len(self._theta):
            raise HistoryGap(f"t = {t!r} outside the recorded range [0, {self.t_last!r}]")
        return j

    def cumulative_at(self, tau: np.ndarray) -> np.ndarray:
        """Theta at arbitrary times by linear interpolation, zero for tau <= 0."""
        Theta = self._arrays()
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, self.t_last)
        pos = tau / self.dt
        j = np.minimum(pos.astype(int), len(self._theta) - 2)
        frac = pos - j
        return Theta[j] * (1.0 - frac) + Theta[j + 1] * frac

    def eta_at(self, t: float, s: np.ndarray) -> np.ndarray:
        """History amplitude eta(t, s) on an array of memory ages s >= 0."""
        j = self.step_index(t)
        Theta = self._arrays()
        return Theta[j] - self.cumulative_at(t - np.asarray(s, dtype=float))


def stretched_nodes(length: float, n_nodes: int, stretch: float) -> np.ndarray:
    """n_nodes points on [0, length] with geometrically growing spacing.

    stretch is (approximately) the ratio of the last to the first cell
    width; stretch = 1 gives the uniform grid.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes!r}")
    if not (stretch >= 1.0):
        raise ValueError(f"stretch must be >= 1, got {stretch!r}")
    u = np.linspace(0.0, 1.0, n_nodes)
    if stretch == 1.0:
        return length * u
    return length * (stretch**u - 1.0) / (stretch - 1.0)


@dataclass(frozen=True)
class HistoryQuadrature:
    """Fixed s-grid for the memory integrals of one kernel.

    Nodes cover [0, 40/delta]; beyond the grid the kernel has mass below
    exp(-40) of its total and the history is treated as saturated, so the
    tail integrals are closed-form.
    """

    s: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    kappa: np.ndarray = field(repr=False)
    dkappa: np.ndarray = field(repr=False)
    tail_mass: float
    tail_dmass: float

    @classmethod
    def build(cls, kernel: PronyKernel, n_nodes: int = 400, stretch: float = 4.0):
        s_max = 40.0 / kernel.delta
        s = stretched_nodes(s_max, n_nodes, stretch)
        h = np.diff(s)
        w = np.zeros_like(s)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return cls(
            s=s,
            weights=w,
            kappa=kernel.kappa(s),
            dkappa=kernel.dkappa(s),
            tail_mass=kernel.tail_mass(s_max),
            tail_dmass=-float(kernel.kappa(s_max)),
        )

    def memory_integrals(self, history: ThetaHistory, t: float) -> tuple[float, float]:
        """(integral kappa eta^2, integral kappa' eta^2) at time t."""
        eta = history.eta_at(t, self.s)
        eta2 = eta * eta
        sat = history.cumulative_at(np.array([t]))[0] ** 2
        q_k = float(np.dot(self.weights, self.kappa * eta2)) + self.tail_mass * sat
        q_dk = float(np.dot(self.weights, self.dkappa * eta2)) + self.tail_dmass * sat
        return q_k, q_dk


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy split into mechanical, thermal and memory parts."""

    mech: float
    thermal: float
    memory: float

    @property
    def total(self) -> float:
        return self.mech + self.thermal + self.memory


def _mode_mech_thermal(p: MaterialParams, n: int, st: ModeState) -> tuple[float, float]:
    # completed-square form of the elastic part; positive definite when
    # mu*xi > b^2
    quarter_pi = math.pi / 4.0
    sq = math.sqrt(p.mu) * n * st.u + p.b / math.sqrt(p.mu) * st.phi
    mech = quarter_pi * (
        p.rho * st.v**2
        + p.J * st.psi**2
        + sq * sq
        + (p.xi - p.b**2 / p.mu) * st.phi**2
        + p.alpha * n * n * st.phi**2
    )
    thermal = quarter_pi * p.c * st.theta**2
    return mech, thermal


def raw_mech_form(p: MaterialParams, n: int, st: ModeState) -> float:
    """Mechanical energy via the raw (uncompleted) quadratic form."""
    quarter_pi = math.pi / 4.0
    nu = n * st.u
    return quarter_pi * (
        p.rho * st.v**2
        + p.J * st.psi**2
        + p.mu * nu * nu
        + p.xi * st.phi**2
        + 2.0 * p.b * nu * st.phi
        + p.alpha * n * n * st.phi**2
    )


def energy(
    p: MaterialParams,
    k: PronyKernel,
    modes: Sequence[tuple[int, ModeState]],
    theta_history: Mapping[int, ThetaHistory],
    t: float,
    quad: HistoryQuadrature,
) -> EnergyBreakdown:
    """Total energy at time t, memory part from the recorded history.

    Requires zero initial past history: the reconstruction
    eta(t, s) = Theta(t) - Theta(t - s) is only valid then.  Raises
    HistoryGap when a mode's trace does not cover t on its step grid.
    """
    mech = thermal = memory = 0.0
    for n, st in sorted(modes, key=lambda pair: pair[0]):
        em, et = _mode_mech_thermal(p, n, st)
        mech += em
        thermal += et
        q_k, _ = quad.memory_integrals(theta_history[n], t)
        memory += (math.pi / 4.0) * n * n * q_k
    return EnergyBreakdown(mech, thermal, memory)


def dissipation_rate(
    k: PronyKernel,
    mode_ns: Iterable[int],
    theta_history: Mapping[int, ThetaHistory],
    t: float,
    quad: HistoryQuadrature,
) -> float:
    """Right side of the energy law: (pi/4) sum_n n^2 integral kappa' eta_n^2 <= 0."""
    out = 0.0
    for n in sorted(mode_ns):
        _, q_dk = quad.memory_integrals(theta_history[n], t)
        out += (math.pi / 4.0) * n * n * q_dk
    return out


# ---------------------------------------------------------------------------
# energy series and the simulation driver
# ---------------------------------------------------------------------------

CSV_HEADER = "t,E_total,E_mech,E_thermal,E_memory,dissipation_rhs,residual"


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass
class EnergySeries:
    """Recorded energy rows of a simulation (uniform time spacing)."""

    t: np.ndarray
    E_total: np.ndarray
    E_mech: np.ndarray
    E_thermal: np.ndarray
    E_memory: np.ndarray
    dissipation_rhs: np.ndarray
    residual: np.ndarray
    final_states: tuple[tuple[int, ModeState], ...] | None = None

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path) -> None:
        lines = [CSV_HEADER]
        cols = (
            self.t,
            self.E_total,
            self.E_mech,
            self.E_thermal,
            self.E_memory,
            self.dissipation_rhs,
            self.residual,
        )
        for row in zip(*cols):
            lines.append(",".join(_fmt(x) for x in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "EnergySeries":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise NonUniformGrid(f"unexpected CSV header: {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.shape[1] != 7:
            raise NonUniformGrid(f"expected 7 columns, got {data.shape[1]}")
        return cls(*(data[:, i] for i in range(7)))


def dissipation_residual(series: EnergySeries) -> np.ndarray:
    """Centered-difference defect of the energy law, row by row.

    residual(t_j) = [E(t_{j+1}) - E(t_{j-1})]/(2h) - dissipation_rhs(t_j)
    on the interior rows (h = row spacing); NaN on the two boundary rows.
    Converges at O(h^2) plus the s-quadrature floor.
    """
    t = series.t
    if len(t) < 3:
        raise NonUniformGrid(f"need at least 3 rows, got {len(t)}")
    h = np.diff(t)
    if h.max() - h.min() > 1e-9 * h[0]:
        raise NonUniformGrid("row spacing is not uniform")
    res = np.full(len(t), np.nan)
    res[1:-1] = (series.E_total[2:] - series.E_total[:-2]) / (2.0 * h[0]) - (
        series.dissipation_rhs[1:-1]
    )
    return res


@dataclass(frozen=True)
class SimConfig:
    """Configuration of an exact modal simulation.

    modes holds (n, initial state) pairs with distinct n; the memory
    components of every initial state must be zero (zero past history).
    history_quadrature = (node count, stretch factor) of the s-grid.
    """

    dt: float
    t_end: float
    modes: tuple[tuple[int, ModeState], ...]
    record_every: int = 1
    s_nodes: int = 400
    s_stretch: float = 4.0

    def validate(self) -> "SimConfig":
        if not (self.dt > 0.0):
            raise NonPositiveConstant("dt", self.dt)
        if not (self.t_end >= self.dt):
            raise ValueError(f"t_end = {self.t_end!r} must be >= dt = {self.dt!r}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every!r}")
        ns = [n for n, _ in self.modes]
        if len(set(ns)) != len(ns):
            raise ValueError(f"mode indices must be distinct, got {ns!r}")
        if not self.modes:
            raise ValueError("need at least one mode")
        for n, st in self.modes:
            if any(w != 0.0 for w in st.w):
                raise ValueError(
                    f"mode {n}: nonzero initial memory amplitudes; this driver "
                    "assumes zero past history (see the history-grid simulator)"
                )
        return self


def run_simulation(p: MaterialParams, k: PronyKernel, cfg: SimConfig) -> EnergySeries:
    """Advance every mode exactly and assemble the recorded energy series."""
    validate_params(p)
    validate_kernel(k)
    cfg.validate()
    m = len(k.terms)
    steps = int(round(cfg.t_end / cfg.dt))
    quad = HistoryQuadrature.build(k, cfg.s_nodes, cfg.s_stretch)

    trajectories: dict[int, np.ndarray] = {}
    histories: dict[int, ThetaHistory] = {}
    rec = list(range(0, steps + 1, cfg.record_every))
    for n, st0 in cfg.modes:
        x0 = st0.as_vector()
        if x0.shape[0] == 5:
            x0 = np.concatenate([x0, np.zeros(m)])
        elif x0.shape[0] != 5 + m:
            raise ValueError(
                f"mode {n}: state dimension {x0.shape[0]} incompatible with "
                f"{m}-term kernel"
            )
        P = propagator(assemble_modal_matrix(p, k, n), cfg.dt)
        hist = ThetaHistory(cfg.dt, x0[4])
        snaps = np.empty((len(rec), 5 + m))
        x = x0
        ptr = 0
        if rec and rec[0] == 0:
            snaps[0] = x
            ptr = 1
        for j in range(1, steps + 1):
            x = P @ x
            hist.append(x[4])
            if ptr < len(rec) and j == rec[ptr]:
                snaps[ptr] = x
                ptr += 1
        trajectories[n] = snaps
        histories[n] = hist.frozen()

    nrec = len(rec)
    t_rows = np.array(rec, dtype=float) * cfg.dt
    E_mech = np.zeros(nrec)
    E_thermal = np.zeros(nrec)
    E_memory = np.zeros(nrec)
    diss = np.zeros(nrec)
    order = sorted(n for n, _ in cfg.modes)
    for i, j in enumerate(rec):
        t = j * cfg.dt
        for n in order:
            st = ModeState.from_vector(trajectories[n][i])
            em, et = _mode_mech_thermal(p, n, st)
            E_mech[i] += em
            E_thermal[i] += et
            q_k, q_dk = quad.memory_integrals(histories[n], t)
            E_memory[i] += (math.pi / 4.0) * n * n * q_k
            diss[i] += (math.pi / 4.0) * n * n * q_dk
    E_total = E_mech + E_thermal + E_memory
    series = EnergySeries(
        t=t_rows,
        E_total=E_total,
        E_mech=E_mech,
        E_thermal=E_thermal,
        E_memory=E_memory,
        dissipation_rhs=diss,
        residual=np.full(nrec, np.nan),
        final_states=tuple(
            (n, ModeState.from_vector(trajectories[n][-1])) for n in order
        ),
    )
    if nrec >= 3:
        series.residual = dissipation_residual(series)
    return series


# ---------------------------------------------------------------------------
# mean trace of the porosity field and field reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanTrace:
    """Oscillator data of the spatial mean of phi.

    The mean of phi over (0, pi) satisfies J m'' + xi m = 0; with
    omega = sqrt(xi/J) the solution is
    m(t) = phi0_mean cos(omega t) + (phi1_mean/omega) sin(omega t).
    """

    phi0_mean: float
    phi1_mean: float
    omega: float

    def __post_init__(self):
        if not (self.omega > 0.0):
            raise NonPositiveConstant("omega", self.omega)

    @classmethod
    def from_material(cls, p: MaterialParams, phi0_mean: float, phi1_mean: float):
        return cls(phi0_mean, phi1_mean, math.sqrt(p.xi / p.J))


def mean_correction(m: MeanTrace, t: float) -> float:
    """Mean trace m(t); subtracting it from phi leaves a zero-mean field."""
    return m.phi0_mean * math.cos(m.omega * t) + (m.phi1_mean / m.omega) * math.sin(
        m.omega * t
    )


def mean_rate(m: MeanTrace, t: float) -> float:
    """d/dt of the mean trace."""
    return -m.phi0_mean * m.omega * math.sin(m.omega * t) + m.phi1_mean * math.cos(
        m.omega * t
    )


def _mode_sin(n: int, x: np.ndarray) -> np.ndarray:
    # sin(n x) vanishes identically at x = 0 and x = pi for integer n;
    # mask the endpoints so the reconstruction honors the boundary exactly
    out = np.sin(n * x)
    out[x == 0.0] = 0.0
    out[x == math.pi] = 0.0
    return out


def reconstruct_field(
    modes: Sequence[tuple[int, ModeState]],
    x_samples,
    phi_mean: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample (u, phi, theta) on a grid of points in [0, pi].

    u(x) = sum u_n sin(nx), phi(x) = phi_mean + sum phi_n cos(nx),
    theta(x) = sum theta_n sin(nx).  u and theta vanish exactly at both
    endpoints.
    """
    x = np.asarray(x_samples, dtype=float)
    if x.size and (x.min() < 0.0 or x.max() > math.pi):
        raise ValueError("x samples must lie in [0, pi]")
    u = np.zeros_like(x)
    phi = np.full_like(x, float(phi_mean))
    theta = np.zeros_like(x)
    for n, st in sorted(modes, key=lambda pair: pair[0]):
        sn = _mode_sin(n, x)
        cn = np.cos(n * x)
        u += st.u * sn
        phi += st.phi * cn
        theta += st.theta * sn
    return u, phi, theta
