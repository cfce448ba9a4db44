"""Configuration-driven command-line front end.

Experiments are described by a single INI file with one section per
block::

    [material]
    rho = 1.0
    J = 2.0
    c = 2.0
    mu = 1.0
    b = 1.0
    alpha = 1.0
    xi = 2.0
    beta = 1.0

    [kernel]
    # either explicit (weight rate) pairs, ';'-separated ...
    terms = 1.0 1.0; 0.5 2.0
    # ... or the flux-relaxation shorthand: conductivity and time lag
    # cattaneo = 1.0 1.0

    [sim]
    dt = 1e-3
    t_end = 10.0
    record_every = 10
    s_nodes = 400
    s_stretch = 4.0
    # per-mode initial data: n: field=value ...   (fields u v phi psi theta)
    modes = 1: v=1.0; 3: theta=0.5

    [scan]
    n_max = 200

    [resolvent]
    n_list = 16 128

    [fit]
    series = energy.csv
    t_start = 5.0
    t_end = 20.0

Subcommands: stability, scan, simulate, resolvent, fit.  Outputs are
written atomically (write-then-rename) into the --out directory; floats
are serialized with 17 significant digits so reruns are byte-identical.
Exit codes: 0 success, 2 validation/config failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    CflViolation,
    ConfigError,
    DivergentAmplitude,
    EmptyWindow,
    GplError,
    HistoryGap,
    NoConvergence,
    NonPositiveEnergy,
    NonUniformGrid,
    OverflowScale,
    SingularSystem,
)
from .modal import ModeState, abscissa_scan
from .params import (
    MaterialParams,
    PronyKernel,
    cattaneo_kernel,
    stability_numbers,
    validate_kernel,
    validate_params,
)
from .resolvent import amplitude_limit, modal_amplitude, p_polys, resolvent_solve
from .simulate import EnergySeries, SimConfig, run_simulation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (
    NoConvergence,
    OverflowScale,
    SingularSystem,
    DivergentAmplitude,
    HistoryGap,
    NonUniformGrid,
)

CLASS_EXPONENTIAL = "Exponential"
CLASS_SUBEXPONENTIAL = "SubExponential"
CLASS_INCONCLUSIVE = "Inconclusive"

# fit classification policy (frozen after oracle runs on synthetic series)
R2_EXPONENTIAL = 0.995
RATE_SPREAD_MAX = 1.25
SUBEXP_DROP = 0.20
MIN_FIT_ROWS = 10
ENERGY_FLOOR_REL = 1e-300


# ---------------------------------------------------------------------------
# decay-rate fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Log-linear fit E ~ sigma_hat * exp(-omega_hat t) over a window.

    r2 is None for a constant (zero-variance) log series; window_rates
    holds per-subwindow slopes when all four subwindows are fittable,
    else it is empty.  n_rows is the number of usable rows; fits with
    n_rows < 10 should not be trusted (classify_decay reports them
    Inconclusive).
    """

    omega_hat: float
    sigma_hat: float
    r2: float | None
    window_rates: tuple[float, ...]
    n_rows: int


def _line_fit(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_decay(series: EnergySeries, t_start: float, t_end: float) -> DecayFit:
    """Least-squares line through ln E_total on [t_start, t_end].

    Rows with E_total <= 1e-300 * E(0) are excluded before taking logs;
    remaining nonpositive energies raise NonPositiveEnergy.  Raises
    EmptyWindow when fewer than two usable rows remain.
    """
    if not (t_end > t_start):
        raise EmptyWindow(f"empty window [{t_start!r}, {t_end!r}]")
    t = np.asarray(series.t, dtype=float)
    e = np.asarray(series.E_total, dtype=float)
    if len(t) == 0:
        raise EmptyWindow("series has no rows")
    floor = ENERGY_FLOOR_REL * abs(e[0])
    keep = (t >= t_start) & (t <= t_end) & (np.abs(e) > floor)
    t, e = t[keep], e[keep]
    if len(t) < 2:
        raise EmptyWindow(f"only {len(t)} usable rows in [{t_start!r}, {t_end!r}]")
    if np.any(e <= 0.0):
        raise NonPositiveEnergy("window contains nonpositive energies")
    ln_e = np.log(e)
    if float(np.ptp(ln_e)) == 0.0:
        # constant series: zero-rate fit with the variance ratio undefined
        r2 = None
        slope = 0.0
        intercept = float(ln_e[0])
    else:
        slope, intercept = _line_fit(t, ln_e)
        pred = slope * t + intercept
        ss_tot = float(np.sum((ln_e - ln_e.mean()) ** 2))
        r2 = 1.0 - float(np.sum((ln_e - pred) ** 2)) / ss_tot
    rates = []
    edges = np.linspace(t_start, t_end, 5)
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (t >= lo) & (t <= hi)
        if sel.sum() < 2 or float(np.ptp(t[sel])) == 0.0:
            rates = []
            break
        sub_slope, _ = _line_fit(t[sel], ln_e[sel])
        rates.append(-sub_slope)
    return DecayFit(
        omega_hat=-slope,
        sigma_hat=math.exp(intercept),
        r2=r2,
        window_rates=tuple(rates),
        n_rows=int(len(t)),
    )


def classify_decay(fit: DecayFit) -> str:
    """Exponential / SubExponential / Inconclusive verdict on a fit.

    Exponential: r2 >= 0.995 and the four subwindow rates agree within a
    factor 1.25.  SubExponential: the subwindow rates decrease strictly
    and by at least 20% end to end.  Anything else (including fits on
    fewer than 10 rows) is Inconclusive.
    """
    if fit.n_rows < MIN_FIT_ROWS or len(fit.window_rates) != 4:
        return CLASS_INCONCLUSIVE
    rates = fit.window_rates
    if fit.r2 is not None and fit.r2 >= R2_EXPONENTIAL:
        if min(rates) > 0.0 and max(rates) / min(rates) <= RATE_SPREAD_MAX:
            return CLASS_EXPONENTIAL
    decreasing = all(a > b for a, b in zip(rates, rates[1:]))
    if decreasing and rates[0] > 0.0 and rates[-1] <= (1.0 - SUBEXP_DROP) * rates[0]:
        return CLASS_SUBEXPONENTIAL
    return CLASS_INCONCLUSIVE


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    material: MaterialParams | None
    kernel: PronyKernel | None
    sim: SimConfig | None
    scan_n_max: int | None
    resolvent_n_list: tuple[int, ...] | None
    fit_series: str | None
    fit_t_start: float | None
    fit_t_end: float | None


def _getfloat(sec, key: str, section_name: str) -> float:
    if key not in sec:
        raise ConfigError(f"{section_name}.{key}", f"missing key `{key}` in [{section_name}]")
    try:
        return float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"{section_name}.{key}", f"bad float for `{key}`: {sec[key]!r}") from exc


def _parse_material(sec) -> MaterialParams:
    names = ("rho", "J", "c", "mu", "b", "alpha", "xi", "beta")
    return MaterialParams(**{k: _getfloat(sec, k, "material") for k in names})


def _parse_kernel(sec) -> PronyKernel:
    if "cattaneo" in sec:
        parts = sec["cattaneo"].split()
        if len(parts) != 2:
            raise ConfigError("kernel.cattaneo", "expected `cattaneo = kappa0 tau0`")
        return cattaneo_kernel(float(parts[0]), float(parts[1]))
    if "terms" not in sec:
        raise ConfigError("kernel", "need `terms` or `cattaneo` in [kernel]")
    terms = []
    for chunk in sec["terms"].split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 2:
            raise ConfigError("kernel.terms", f"bad term {chunk!r}; expected `weight rate`")
        terms.append((float(parts[0]), float(parts[1])))
    if not terms:
        raise ConfigError("kernel.terms", "no kernel terms given")
    return PronyKernel(tuple(terms))


_MODE_FIELDS = {"u", "v", "phi", "psi", "theta"}


def _parse_modes(text: str) -> tuple[tuple[int, ModeState], ...]:
    modes = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError("sim.modes", f"bad mode entry {chunk!r}; expected `n: field=value ...`")
        head, _, rest = chunk.partition(":")
        try:
            n = int(head.strip())
        except ValueError as exc:
            raise ConfigError("sim.modes", f"bad mode index {head.strip()!r}") from exc
        fields = {}
        for assign in rest.split():
            key, _, val = assign.partition("=")
            if key not in _MODE_FIELDS or not val:
                raise ConfigError(
                    "sim.modes", f"bad assignment {assign!r}; fields are {sorted(_MODE_FIELDS)}"
                )
            fields[key] = float(val)
        modes.append((n, ModeState(**fields)))
    if not modes:
        raise ConfigError("sim.modes", "no modes given")
    return tuple(modes)


def _parse_sim(sec) -> SimConfig:
    if "modes" not in sec:
        raise ConfigError("sim.modes", "missing key `modes` in [sim]")
    return SimConfig(
        dt=_getfloat(sec, "dt", "sim"),
        t_end=_getfloat(sec, "t_end", "sim"),
        modes=_parse_modes(sec["modes"]),
        record_every=int(sec.get("record_every", "1")),
        s_nodes=int(sec.get("s_nodes", "400")),
        s_stretch=float(sec.get("s_stretch", "4.0")),
    )


def load_config(path) -> ExperimentConfig:
    """Parse an experiment INI file; sections absent from the file stay None."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError("config", f"cannot read config file {path!r}")
    material = _parse_material(parser["material"]) if parser.has_section("material") else None
    kernel = _parse_kernel(parser["kernel"]) if parser.has_section("kernel") else None
    sim = _parse_sim(parser["sim"]) if parser.has_section("sim") else None
    scan_n_max = None
    if parser.has_section("scan"):
        scan_n_max = int(_getfloat(parser["scan"], "n_max", "scan"))
    n_list = None
    if parser.has_section("resolvent"):
        sec = parser["resolvent"]
        if "n_list" not in sec:
            raise ConfigError("resolvent.n_list", "missing key `n_list` in [resolvent]")
        n_list = tuple(int(tok) for tok in sec["n_list"].split())
        if not n_list:
            raise ConfigError("resolvent.n_list", "empty n_list")
    fit_series = fit_t_start = fit_t_end = None
    if parser.has_section("fit"):
        sec = parser["fit"]
        fit_series = sec.get("series")
        fit_t_start = _getfloat(sec, "t_start", "fit")
        fit_t_end = _getfloat(sec, "t_end", "fit")
    return ExperimentConfig(
        material=material,
        kernel=kernel,
        sim=sim,
        scan_n_max=scan_n_max,
        resolvent_n_list=n_list,
        fit_series=fit_series,
        fit_t_start=fit_t_start,
        fit_t_end=fit_t_end,
    )


def _require(cfg: ExperimentConfig, block: str):
    value = getattr(cfg, block)
    if value is None:
        name = {"scan_n_max": "scan", "resolvent_n_list": "resolvent"}.get(block, block)
        raise ConfigError(name, f"subcommand requires a [{name}] block")
    return value


# ---------------------------------------------------------------------------
# deterministic serialization
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_text(obj, indent: int = 0) -> str:
    """Serialize the report structures with .17g floats, complex as [re, im].

    The stdlib encoder formats floats with repr and cannot be overridden
    per value, so this small writer handles the few shapes the reports
    use: dict, list/tuple, str, bool, None, int, float, complex.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(key))}: {_json_text(val, indent + 1)}"
            for key, val in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_json_text(val, indent + 1)}" for val in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, complex):
        return f"[{_fmt(obj.real)}, {_fmt(obj.imag)}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dump_json(obj, path) -> None:
    _atomic_write(path, _json_text(obj) + "\n")


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-gpl-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_stability(cfg: ExperimentConfig, out_dir: str, tol: float | None) -> None:
    p = validate_params(_require(cfg, "material"))
    k = validate_kernel(_require(cfg, "kernel"))
    report = stability_numbers(p, k, tol)
    case = amplitude_limit(p, k, report.tolerance)
    dump_json(
        {
            "gamma_g": report.gamma_g,
            "chi_g": report.chi_g,
            "chi_g_defined": report.chi_defined,
            "classification": report.classification,
            "tolerance": report.tolerance,
            "amplitude_regime": case.regime,
        },
        os.path.join(out_dir, "stability.json"),
    )


def _cmd_scan(cfg: ExperimentConfig, out_dir: str, threads: int) -> None:
    p = validate_params(_require(cfg, "material"))
    k = validate_kernel(_require(cfg, "kernel"))
    n_max = _require(cfg, "scan_n_max")
    scan = abscissa_scan(p, k, n_max, threads=threads)
    lines = ["n,abscissa"]
    for i, a in enumerate(scan.abscissa, start=1):
        lines.append(f"{i},{_fmt(a)}")
    _atomic_write(os.path.join(out_dir, "scan.csv"), "\n".join(lines) + "\n")


def _cmd_simulate(cfg: ExperimentConfig, out_dir: str) -> None:
    p = validate_params(_require(cfg, "material"))
    k = validate_kernel(_require(cfg, "kernel"))
    sim = _require(cfg, "sim")
    series = run_simulation(p, k, sim)
    csv_path = os.path.join(out_dir, "energy.csv")
    tmp = csv_path + ".tmp"
    series.to_csv(tmp)
    os.replace(tmp, csv_path)
    final = {
        "t_end": series.t[-1],
        "modes": [
            {
                "n": n,
                "u": st.u,
                "v": st.v,
                "phi": st.phi,
                "psi": st.psi,
                "theta": st.theta,
                "w": list(st.w),
            }
            for n, st in (series.final_states or ())
        ],
        "E_final": series.E_total[-1],
    }
    dump_json(final, os.path.join(out_dir, "final_state.json"))


def _cmd_resolvent(cfg: ExperimentConfig, out_dir: str) -> None:
    p = validate_params(_require(cfg, "material"))
    k = validate_kernel(_require(cfg, "kernel"))
    n_list = _require(cfg, "resolvent_n_list")
    case = amplitude_limit(p, k)
    rows: dict[str, list] = {
        "n": [],
        "lambda_n": [],
        "p1": [],
        "p2": [],
        "p3": [],
        "K1": [],
        "K2": [],
        "A_n": [],
        "norm": [],
    }
    for n in n_list:
        resp = resolvent_solve(p, k, n)
        p1, p2, p3 = p_polys(p, k, n, resp.lambda_n)
        K1 = p2 * p3 + (p.beta * n * resp.lambda_n) ** 2
        K2 = (p.b * n) ** 2 * p3
        rows["n"].append(n)
        rows["lambda_n"].append(resp.lambda_n)
        rows["p1"].append(p1)
        rows["p2"].append(p2)
        rows["p3"].append(p3)
        rows["K1"].append(K1)
        rows["K2"].append(K2)
        rows["A_n"].append(modal_amplitude(p, k, n))
        rows["norm"].append(resp.norm_sq)
    rows["regime"] = case.regime
    rows["limit"] = "infinite" if case.limit_infinite else case.limit
    dump_json(rows, os.path.join(out_dir, "resolvent.json"))


def _cmd_fit(cfg: ExperimentConfig, out_dir: str, config_dir: str) -> None:
    if cfg.fit_t_start is None:
        raise ConfigError("fit", "subcommand requires a [fit] block")
    if not cfg.fit_series:
        raise ConfigError("fit.series", "missing key `series` in [fit]")
    series_path = cfg.fit_series
    if not os.path.isabs(series_path):
        series_path = os.path.join(config_dir, series_path)
    if not os.path.exists(series_path):
        raise ConfigError("fit.series", f"series file not found: {series_path!r}")
    series = EnergySeries.from_csv(series_path)
    fit = fit_decay(series, cfg.fit_t_start, cfg.fit_t_end)
    dump_json(
        {
            "omega_hat": fit.omega_hat,
            "sigma_hat": fit.sigma_hat,
            "r2": fit.r2,
            "window_rates": list(fit.window_rates),
            "n_rows": fit.n_rows,
            "classification": classify_decay(fit),
        },
        os.path.join(out_dir, "fit.json"),
    )


def run(argv=None) -> int:
    """Entry point; returns the process exit code."""
    parser = argparse.ArgumentParser(
        prog="gpl",
        description="numerical laboratory for porous thermoelasticity with memory-type heat conduction",
    )
    parser.add_argument(
        "subcommand",
        choices=("stability", "scan", "simulate", "resolvent", "fit"),
    )
    parser.add_argument("--config", required=True, help="experiment INI file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--tol", type=float, default=None, help="degeneracy tolerance override")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for per-mode scans (default: GPL_THREADS or 1)",
    )
    args = parser.parse_args(argv)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("GPL_THREADS", "1") or "1")

    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        if args.subcommand == "stability":
            _cmd_stability(cfg, args.out, args.tol)
        elif args.subcommand == "scan":
            _cmd_scan(cfg, args.out, threads)
        elif args.subcommand == "simulate":
            _cmd_simulate(cfg, args.out)
        elif args.subcommand == "resolvent":
            _cmd_resolvent(cfg, args.out)
        else:
            _cmd_fit(cfg, args.out, os.path.dirname(os.path.abspath(args.config)))
    except _NUMERICAL_ERRORS as exc:
        print(f"gpl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, CflViolation, EmptyWindow, NonPositiveEnergy, GplError, ValueError) as exc:
        print(f"gpl: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def main() -> None:  # pragma: no cover - thin wrapper
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
