"""Numerical laboratory for 1-D porous thermoelasticity whose only
dissipation enters through memory-type (Gurtin-Pipkin) heat conduction.

The package reduces the coupled displacement / porosity / temperature /
history system on (0, pi) to exact per-mode ODEs, verifies the energy
dissipation identity, classifies exponential versus slower decay through
the stability numbers (gamma_g, chi_g), and reproduces the
resonant-amplitude construction that witnesses the loss of exponential
stability.
"""

from .errors import (
    CflViolation,
    ConfigError,
    DivergentAmplitude,
    EmptyWindow,
    GplError,
    HistoryGap,
    InvalidKernel,
    InvalidMode,
    NoConvergence,
    NonPositiveConstant,
    NonPositiveEnergy,
    NonUniformGrid,
    NotPositiveDefinite,
    OverflowScale,
    SingularSystem,
)
from .params import (
    MaterialParams,
    PronyKernel,
    StabilityReport,
    cattaneo_chi,
    cattaneo_kernel,
    default_tolerance,
    kernel_g0,
    kernel_hat,
    stability_numbers,
    validate_kernel,
    validate_params,
)
from .modal import (
    ModalMatrix,
    ModeState,
    SpectrumScan,
    abscissa_scan,
    assemble_modal_matrix,
    eigenvalues,
    spectral_abscissa,
)
from .simulate import (
    EnergyBreakdown,
    EnergySeries,
    HistoryQuadrature,
    MeanTrace,
    SimConfig,
    ThetaHistory,
    dissipation_rate,
    dissipation_residual,
    energy,
    evolve,
    mean_correction,
    mean_rate,
    propagator,
    reconstruct_field,
    run_simulation,
)
from .histsim import (
    HistoryGrid,
    SampledKernel,
    coupled_step,
    grid_energy,
    memory_force,
    run_history_simulation,
    step_history,
    validate_sampled,
)
from .resolvent import (
    AmplitudeCase,
    ResolventResponse,
    ResonantMode,
    amplitude_limit,
    modal_amplitude,
    p_polys,
    resolvent_solve,
)
from .cli import DecayFit, classify_decay, fit_decay, load_config, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
