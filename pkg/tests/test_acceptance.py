"""Acceptance suite.

One test per criterion, each printing a PASS/FAIL line (run with -s to
see them live).  Reference sets:

  SET_A: rho=1 J=2 c=2 mu=1 b=1 alpha=1 xi=2 beta=1, kernel [(1,1)]
         -> gamma_g = 1, chi_g = 0 (exponentially stable)
  SET_B: SET_A with J=1 -> chi_g = 1
  SET_C: SET_A with c=1 -> gamma_g = 0
  SET_D: SET_A with c=1, J=1 -> gamma_g = 0 and equal wave speeds

Criteria 4 and 7 contain clauses that are genuinely unattainable for
these systems (see README, "Known red criteria"); they are asserted as
stated and fail honestly rather than being weakened.
"""

import math

import numpy as np

from gpl import (
    HistoryGrid,
    MaterialParams,
    MeanTrace,
    ModeState,
    SampledKernel,
    SimConfig,
    abscissa_scan,
    amplitude_limit,
    assemble_modal_matrix,
    cattaneo_chi,
    cattaneo_kernel,
    classify_decay,
    eigenvalues,
    fit_decay,
    mean_correction,
    mean_rate,
    modal_amplitude,
    reconstruct_field,
    resolvent_solve,
    run_history_simulation,
    run_simulation,
    spectral_abscissa,
    stability_numbers,
)
from gpl.cli import run as cli_run

from conftest import SET_A, SET_B, SET_C, SET_D, UNIT_KERNEL, random_kernel, random_params

KER = UNIT_KERNEL
EXP_KERNEL = SampledKernel.from_prony(KER)


def report(num, name, ok, detail=""):
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    print(f"ACCEPTANCE {num:02d} {name}: {tag}{suffix}", flush=True)


def replace(p, **kw):
    d = {f: getattr(p, f) for f in ("rho", "J", "c", "mu", "b", "alpha", "xi", "beta")}
    d.update(kw)
    return MaterialParams(**d)


def slow_plane_state(p, k, n):
    """Initial data in the dominant eigenplane with zero memory component.

    The combination Re(i w / w_mem) of the dominant eigenvector pair has
    w = 0 exactly, so it is consistent with zero past history while
    decaying at exactly the dominant rate.
    """
    M = assemble_modal_matrix(p, k, n)
    vals, vecs = eigenvalues(M.matrix, vectors=True)
    idx = int(np.argmax(vals.real))
    w = vecs[:, idx]
    x0 = np.real(1j * w / w[5])
    x0 /= np.abs(x0).max()
    st = ModeState.from_vector(x0)
    return ModeState(st.u, st.v, st.phi, st.psi, st.theta, (0.0,) * len(k.terms))


# ---------------------------------------------------------------------------


def test_01_dissipation_identity():
    """SET-A, n=1, dt=1e-3, T=10: residual <= 1e-4 E(0), halving dt >= 3.5x."""

    def max_resid(dt, s_nodes, stretch, record_every):
        cfg = SimConfig(
            dt=dt, t_end=10.0, modes=((1, ModeState(v=1.0)),),
            record_every=record_every, s_nodes=s_nodes, s_stretch=stretch,
        )
        series = run_simulation(SET_A, KER, cfg)
        return float(np.nanmax(np.abs(series.residual))), float(series.E_total[0])

    # default 400-node stretched grid meets the bound on its own
    r_default, e0 = max_resid(1e-3, 400, 4.0, 10)
    bound_ok = r_default <= 1e-4 * e0
    # the dt^2 law needs the s-grid floor out of the way: uniform 4000 nodes
    r_fine, _ = max_resid(1e-3, 4000, 1.0, 1)
    r_half, _ = max_resid(5e-4, 4000, 1.0, 1)
    shrink = r_fine / r_half
    ok = bound_ok and r_fine <= 1e-4 * e0 and shrink >= 3.5
    report(1, "dissipation-identity", ok,
           f"resid(400 nodes)={r_default:.2e} bound={1e-4 * e0:.2e} shrink={shrink:.2f}")
    assert bound_ok
    assert r_fine <= 1e-4 * e0
    assert shrink >= 3.5


def test_02_energy_monotonicity():
    """20 random valid configs: E nonincreasing with slack 1e-10 E(0)."""
    rng = np.random.default_rng(42)
    worst = -np.inf
    for _ in range(20):
        p = random_params(rng)
        k = random_kernel(rng)
        used = set()
        modes = []
        for _ in range(int(rng.integers(1, 4))):
            n = int(rng.integers(1, 7))
            if n in used:
                continue
            used.add(n)
            st = ModeState(*rng.standard_normal(5), w=(0.0,) * len(k.terms))
            modes.append((n, st))
        cfg = SimConfig(
            dt=1e-3, t_end=3.0, modes=tuple(modes),
            record_every=10, s_nodes=6000, s_stretch=1.0,
        )
        series = run_simulation(p, k, cfg)
        rel = float(np.diff(series.E_total).max()) / series.E_total[0]
        worst = max(worst, rel)
    ok = worst <= 1e-10
    report(2, "energy-monotonicity", ok, f"worst energy increase {worst:.2e} of E(0)")
    assert ok


def test_03_oracle_equivalence():
    """History-grid vs exact closure on SET-A and SET-B, modes {1,3}, T=20."""
    dt_ref = 1e-3  # the grid stepper's reference resolution (dt = ds)
    T = 20.0
    modes0 = ((1, ModeState(v=1.0)), (3, ModeState(v=0.5, theta=0.3)))

    def pair_gap(p, dt):
        hist_modes = [
            (n, st, HistoryGrid.zero(KER.delta, dt)) for n, st in modes0
        ]
        rec = int(round(0.02 / dt))
        hist = run_history_simulation(p, EXP_KERNEL, hist_modes, dt=dt, t_end=T,
                                      record_every=rec)
        cfg = SimConfig(dt=dt, t_end=T, modes=modes0, record_every=rec,
                        s_nodes=2000, s_stretch=1.0)
        exact = run_simulation(p, KER, cfg)
        assert np.array_equal(hist.t, exact.t)
        return float(np.abs(hist.E_total - exact.E_total).max() / exact.E_total[0])

    gap_a = pair_gap(SET_A, dt_ref)
    gap_b = pair_gap(SET_B, dt_ref)
    gap_a_coarse = pair_gap(SET_A, 2e-3)
    ok = gap_a <= 1e-3 and gap_b <= 1e-3 and gap_a < gap_a_coarse
    report(3, "oracle-equivalence", ok,
           f"gap A={gap_a:.2e} B={gap_b:.2e}; refinement {gap_a_coarse:.2e} -> {gap_a:.2e}")
    assert gap_a <= 1e-3
    assert gap_b <= 1e-3
    assert gap_a < gap_a_coarse  # gap shrinks under (dt, ds) refinement


def test_04_spectral_gap_stable_set():
    """SET-A scan n=1..200: sup <= -eps; |a(200)-a(100)| <= 0.05 eps.

    The second clause is unattainable for this system: the per-mode
    abscissa still drifts by |a(200)-a(100)| = 6.3e-4 while the spectral
    gap is eps = 9.0e-3, an intrinsic ratio of 0.070 > 0.05 (the drift
    decays like 1/n toward the high-frequency limit -1/12).  Asserted as
    stated; see README.
    """
    scan = abscissa_scan(SET_A, KER, 200, threads=4)
    eps = -scan.sup_abscissa
    drift = abs(scan.abscissa[199] - scan.abscissa[99])
    gap_ok = eps > 0.0
    flat_ok = drift <= 0.05 * eps
    report(4, "spectral-gap-stable", gap_ok and flat_ok,
           f"eps={eps:.4e} drift={drift:.4e} allowed={0.05 * eps:.4e}")
    assert gap_ok
    assert flat_ok, (
        f"uniform-gap flatness clause: drift {drift:.4e} > 0.05*eps "
        f"{0.05 * eps:.4e}; intrinsic to the system (drift/eps = {drift / eps:.4f}), "
        "see README 'Known red criteria'"
    )


def test_05_vanishing_gap_unstable_set():
    """SET-B scan: abscissa(n) climbs toward 0, |a(200)| <= |a(20)|/4."""
    scan = abscissa_scan(SET_B, KER, 200, threads=4)
    a = scan.abscissa
    climbing = a[199] > a[99] > a[19]
    all_neg = bool(np.all(a < 0.0))
    ratio_ok = abs(a[199]) <= 0.25 * abs(a[19])
    ok = climbing and all_neg and ratio_ok
    report(5, "vanishing-gap-unstable", ok,
           f"a(20)={a[19]:.3e} a(200)={a[199]:.3e}")
    assert climbing and all_neg and ratio_ok


def test_06_decay_rate_coherence():
    """SET-A single mode n=1: fitted rate within 2% of 2|a1|, r2 >= 0.999."""
    a1 = spectral_abscissa(SET_A, KER, 1)
    st0 = slow_plane_state(SET_A, KER, 1)
    cfg = SimConfig(dt=1e-3, t_end=20.0, modes=((1, st0),), record_every=10,
                    s_nodes=2000, s_stretch=1.0)
    series = run_simulation(SET_A, KER, cfg)
    fit = fit_decay(series, 5.0, 20.0)
    target = 2.0 * abs(a1)
    rel = abs(fit.omega_hat - target) / target
    ok = rel <= 0.02 and fit.r2 is not None and fit.r2 >= 0.999
    report(6, "decay-rate-coherence", ok,
           f"omega={fit.omega_hat:.6f} target={target:.6f} rel={rel:.2%} r2={fit.r2:.6f}")
    assert rel <= 0.02
    assert fit.r2 >= 0.999
    assert classify_decay(fit) == "Exponential"


def test_07_amplitude_limits():
    """Resonant amplitude limits at n = 1e4 across the four regimes.

    The gamma_g = 0 clause (SET-C) asserts the closed-form limit
    -alpha*mu*(rho/mu - J/alpha)/(b^2 rho); for beta != 0 the actual
    amplitude grows like lambda_n instead (the memory transform enters
    the denominator), so that clause fails honestly.  See README.
    """
    n_hi = 10_000
    # chi_g != 0 (SET-B): limit -alpha mu chi_g/(b^2 rho) = -1
    lim_b = -SET_B.alpha * SET_B.mu * 1.0 / (SET_B.b**2 * SET_B.rho)
    a_b = modal_amplitude(SET_B, KER, n_hi)
    rel_b = abs(a_b - lim_b) / abs(lim_b)

    # equal-speeds variant with distinct numbers: limit -beta^2 mu/(b^2 gamma_g)
    eq = MaterialParams(rho=2.0, J=2.0, c=3.0, mu=1.0, b=0.5, alpha=1.0, xi=3.0, beta=1.0)
    gamma_eq = eq.c * eq.mu - eq.rho * 1.0
    lim_eq = -eq.beta**2 * eq.mu / (eq.b**2 * gamma_eq)
    a_eq = modal_amplitude(eq, KER, n_hi)
    rel_eq = abs(a_eq - lim_eq) / abs(lim_eq)

    # double degeneracy (SET-D): divergence
    div_lo = abs(modal_amplitude(SET_D, KER, 100))
    div_hi = abs(modal_amplitude(SET_D, KER, n_hi))

    # gamma_g = 0 (SET-C): the stated closed form
    case_c = amplitude_limit(SET_C, KER)
    a_c = modal_amplitude(SET_C, KER, n_hi)
    rel_c = abs(a_c - case_c.limit) / abs(case_c.limit)

    ok = rel_b <= 0.01 and rel_eq <= 0.01 and div_hi >= 10.0 * div_lo and rel_c <= 0.01
    report(7, "amplitude-limits", ok,
           f"chi!=0 rel={rel_b:.4%}; equal-speeds rel={rel_eq:.4%}; "
           f"divergence {div_lo:.3g}->{div_hi:.3g}; gamma=0 rel={rel_c:.3g}")
    assert rel_b <= 0.01
    assert rel_eq <= 0.01
    assert div_hi >= 10.0 * div_lo
    assert rel_c <= 0.01, (
        f"gamma_g = 0 closed-form limit clause: |A_n - limit|/|limit| = {rel_c:.3g} "
        "at n = 1e4; the actual response grows like lambda_n when beta != 0, "
        "see README 'Known red criteria'"
    )


def test_08_resolvent_dichotomy():
    """Squared response norms at n in {16, 128}: >= 8x on SET-B, <= 2x on SET-A."""
    r_b = resolvent_solve(SET_B, KER, 128).norm_sq / resolvent_solve(SET_B, KER, 16).norm_sq
    r_a = resolvent_solve(SET_A, KER, 128).norm_sq / resolvent_solve(SET_A, KER, 16).norm_sq
    ok = r_b >= 8.0 and r_a <= 2.0
    report(8, "resolvent-dichotomy", ok, f"ratio B={r_b:.2f} A={r_a:.4f}")
    assert r_b >= 8.0
    assert r_a <= 2.0


def test_09_cattaneo_consistency():
    """alpha gamma_g chi_g == rho chi for 100 draws with |gamma_g| > 0.1."""
    rng = np.random.default_rng(9)
    checked = 0
    worst = 0.0
    while checked < 100:
        p = random_params(rng)
        kappa0 = float(np.exp(rng.uniform(-1.0, 1.0)))
        tau0 = float(np.exp(rng.uniform(-1.0, 1.0)))
        k = cattaneo_kernel(kappa0, tau0)
        rep = stability_numbers(p, k)
        if rep.chi_g is None or abs(rep.gamma_g) <= 0.1:
            continue
        chi = cattaneo_chi(p, kappa0, tau0)
        lhs = p.alpha * rep.gamma_g * rep.chi_g
        rhs = p.rho * chi
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
        checked += 1
    ok = worst <= 1e-12
    report(9, "cattaneo-consistency", ok, f"worst scaled defect {worst:.2e}")
    assert ok


def test_10_conservative_limit():
    """beta = 0 mechanical data on SET-A geometry: E constant to 1e-8 over T=100."""
    p0 = replace(SET_A, beta=0.0)
    st = ModeState(u=1.0, v=0.5, phi=-0.3, psi=0.2)
    cfg = SimConfig(dt=0.05, t_end=100.0, modes=((1, st),), record_every=1)
    series = run_simulation(p0, KER, cfg)
    drift = float(np.abs(series.E_mech - series.E_mech[0]).max() / series.E_mech[0])
    thermal_quiet = float(np.abs(series.E_thermal + series.E_memory).max())
    # mechanical-only data: both sides of the energy law vanish
    resid_quiet = float(np.nanmax(np.abs(series.residual)))
    ok = drift <= 1e-8 and thermal_quiet == 0.0 and resid_quiet <= 1e-10 * series.E_total[0]
    report(10, "conservative-limit", ok, f"relative drift {drift:.2e}")
    assert ok


def test_11_mean_correction():
    """Mean trace vs RK4 oracle to 1e-8 on [0,10]; corrected phi has zero mean."""
    m = MeanTrace.from_material(SET_A, 1.0, 1.0)  # J=2, xi=2 -> omega=1

    # independent oracle: RK4 on J m'' + xi m = 0
    dt = 1e-3
    y = np.array([1.0, 1.0])
    worst = 0.0
    for j in range(1, int(round(10.0 / dt)) + 1):
        def rhs(z):
            return np.array([z[1], -(SET_A.xi / SET_A.J) * z[0]])

        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = j * dt
        worst = max(worst, abs(mean_correction(m, t) - y[0]),
                    abs(mean_rate(m, t) - y[1]))

    # reconstructed fluctuation field has zero spatial mean
    modes = [(1, ModeState(phi=0.7)), (2, ModeState(phi=-0.4)), (5, ModeState(phi=1.1))]
    x = np.linspace(0.0, math.pi, 4097)
    _, phi, _ = reconstruct_field(modes, x)  # phi_mean = 0: fluctuation only
    mean_val = abs(np.trapezoid(phi, x)) / math.pi
    ok = worst <= 1e-8 and mean_val <= 1e-12
    report(11, "mean-correction", ok, f"oracle gap {worst:.2e}, field mean {mean_val:.2e}")
    assert worst <= 1e-8
    assert mean_val <= 1e-12


def test_12_cli_end_to_end_coherence(tmp_path):
    """Driver-level dichotomy: stable single mode fits Exponential; the
    chi_g != 0 multi-mode run never classifies Exponential."""
    st0 = slow_plane_state(SET_A, KER, 1)
    cfg_text = f"""\
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
terms = 1.0 1.0

[sim]
dt = 1e-3
t_end = 20.0
record_every = 10
s_nodes = 2000
s_stretch = 1.0
modes = 1: u={st0.u!r} v={st0.v!r} phi={st0.phi!r} psi={st0.psi!r} theta={st0.theta!r}

[fit]
series = out_a/energy.csv
t_start = 5.0
t_end = 20.0
"""
    cfg_a = tmp_path / "set_a.ini"
    cfg_a.write_text(cfg_text)
    out_a = tmp_path / "out_a"
    assert cli_run(["simulate", "--config", str(cfg_a), "--out", str(out_a)]) == 0
    assert cli_run(["fit", "--config", str(cfg_a), "--out", str(out_a)]) == 0
    import json

    fit_a = json.loads((out_a / "fit.json").read_text())
    exp_ok = fit_a["classification"] == "Exponential"

    # SET-B with modes 1..50 equally excited
    mode_text = "; ".join(f"{n}: v=1.0" for n in range(1, 51))
    cfg_text_b = cfg_text.replace("J = 2.0", "J = 1.0")
    cfg_text_b = cfg_text_b.replace(
        f"modes = 1: u={st0.u!r} v={st0.v!r} phi={st0.phi!r} psi={st0.psi!r} theta={st0.theta!r}",
        f"modes = {mode_text}",
    )
    cfg_text_b = cfg_text_b.replace("s_nodes = 2000", "s_nodes = 800")
    cfg_text_b = cfg_text_b.replace("out_a/energy.csv", "out_b/energy.csv")
    cfg_b = tmp_path / "set_b.ini"
    cfg_b.write_text(cfg_text_b)
    out_b = tmp_path / "out_b"
    assert cli_run(["simulate", "--config", str(cfg_b), "--out", str(out_b)]) == 0
    assert cli_run(["fit", "--config", str(cfg_b), "--out", str(out_b)]) == 0
    fit_b = json.loads((out_b / "fit.json").read_text())
    never_exp = fit_b["classification"] in ("SubExponential", "Inconclusive")
    ok = exp_ok and never_exp
    report(12, "cli-end-to-end", ok,
           f"stable fit={fit_a['classification']}, chi!=0 fit={fit_b['classification']}")
    assert exp_ok
    assert never_exp
