"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line, printed together at the end of the run.
"""

import csv
import io
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from eitmemory import cli
from eitmemory.berry_phase import (PhaseModel, berry_phase_exact, berry_phase_linear,
                                   build_phase_model, make_protocol)
from eitmemory.config import load_preset, preset_names, validate_config
from eitmemory.disorder_ensemble import SystemParams, sample_realization
from eitmemory.fidelity_engine import (compensated_fidelity, contour_gamma_over_n,
                                       fidelity_analytic, fidelity_coherent_closed,
                                       fidelity_monte_carlo, fidelity_series,
                                       series_coefficients, tail_exponent)
from eitmemory.fock_states import (StoredState, cat_with_variance, make_cat,
                                   make_coherent, make_uniform, photon_stats)
from eitmemory.metrology_tradeoff import (MeasurementScenario, driving_product,
                                          infer_detuning, mean_phase,
                                          measured_detuning, storage_product,
                                          tradeoff_solve)
from eitmemory.pulse_profiles import PulseFactors
from eitmemory.reliability_devices import (check_sync_below_repeater,
                                           reliability_repeater, reliability_sync,
                                           write_counterexamples)

ARTIFACTS = Path(__file__).resolve().parent.parent / "artifacts"


def record(label, ok, detail):
    ACCEPTANCE_LINES.append(f"criterion {label}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_mc_matches_analytic():
    params = SystemParams(1000, 1.0, 0.1, 1.0, 0.0)
    protocol = make_protocol(50.0, 1.0)
    state = make_coherent(2.0)
    t0 = time.perf_counter()
    mc = fidelity_monte_carlo(state, params, protocol, "linear", 100_000, seed=2024,
                              compensated=True)
    elapsed = time.perf_counter() - t0
    an = fidelity_analytic(state, build_phase_model(params, protocol), True).value
    gap = abs(mc.value - an)
    ok = gap < 3 * mc.std_error and elapsed < 10
    record(1, ok, f"|MC - analytic| = {gap:.2e} vs 3 SE = {3 * mc.std_error:.2e}; {elapsed:.1f} s")
    assert ok


def test_criterion_2_exact_vs_linear_phase():
    params = SystemParams(1000, 1.0, 1e-3, 1.0, 1e-3)
    protocol = make_protocol(50.0, 1.0)
    model = build_phase_model(params, protocol)
    worst = 0.0
    for seed in range(1000):
        r = sample_realization(params, seed)
        ex = berry_phase_exact(r, protocol, 1)
        worst = max(worst, abs(berry_phase_linear(r, model, 1) - ex) / abs(ex))
    state = make_coherent(2.0)
    ex = fidelity_monte_carlo(state, params, protocol, "exact", 20_000, 7, True)
    li = fidelity_monte_carlo(state, params, protocol, "linear", 20_000, 7, True)
    sigma = math.hypot(ex.std_error, li.std_error)
    ok = worst < 1e-3 and abs(ex.value - li.value) <= 3 * sigma
    record(2, ok, f"max relative phase gap {worst:.2e}; fidelity gap "
                  f"{abs(ex.value - li.value):.2e} vs 3 sigma {3 * sigma:.2e}")
    assert ok


def test_criterion_3_lower_bound_dominance():
    rng = np.random.default_rng(3)
    violations = 0
    for _ in range(100):
        size = int(rng.integers(2, 65))
        amps = rng.normal(size=size) + 1j * rng.normal(size=size)
        s = StoredState.from_amplitudes(amps * (rng.random(size) < 0.7 + 0.3 * rng.random()) + 1e-3)
        var = photon_stats(s, 2).variance
        for x in (0.01, 0.1, 0.5, 1, 2, 5):
            if compensated_fidelity(s, x / var) < math.exp(-x) - 1e-12:
                violations += 1
    record(3, violations == 0, f"{violations} violations over 600 state/x pairs")
    assert violations == 0


def test_criterion_4_series_structure():
    states = [make_coherent(1.0), make_coherent(3.0), make_cat(2.0, 1.0, np.pi),
              make_uniform(7), cat_with_variance(30.0)]
    worst_c = max(max(abs(c[0] - 1), abs(c[1] - 1))
                  for c in (series_coefficients(s, 1) for s in states))
    worst_rel = 0.0
    for v in (25.0, 50.0, 100.0):
        s = cat_with_variance(v)
        var = photon_stats(s, 2).variance
        for x in (0.005, 0.02, 0.05):
            rel = abs(fidelity_series(s, x, 4).value / compensated_fidelity(s, x / var) - 1)
            worst_rel = max(worst_rel, rel)
    ok = worst_c <= 1e-12 and worst_rel < 0.01
    record(4, ok, f"max |c_0 - 1|, |c_1 - 1| = {worst_c:.1e}; worst series error {worst_rel:.1e}")
    assert ok


def test_criterion_5_tail_scaling():
    cat = tail_exponent(cat_with_variance(10.0, 0.0, 0.0), (10.0, 100.0))
    uni = tail_exponent(make_uniform(10), (10.0, 100.0))
    ok = abs(cat.slope + 0.5) <= 0.05 and abs(uni.slope + 0.5) <= 0.05
    record(5, ok, f"slopes: cat {cat.slope:.3f}, uniform {uni.slope:.3f} (target -0.5 +/- 0.05)")
    assert ok


def test_criterion_6_hyperbolic_contours():
    spreads = {}
    for level in (0.9, 0.8, 0.6, 0.4):
        prods = []
        for a in np.linspace(5.0, 12.0, 15):
            s = make_cat(a, 1.0, np.pi)
            var = photon_stats(s, 2).variance
            assert var >= 25 - 1e-6
            prods.append(contour_gamma_over_n(s, level) * var)
        prods = np.array(prods)
        spreads[level] = (prods.max() - prods.min()) / prods.min()
    ok = max(spreads.values()) < 0.15
    record(6, ok, "relative spread of (Gamma/N) <dn^2> per contour: "
                  + ", ".join(f"{k}: {v:.2%}" for k, v in spreads.items()))
    assert ok


def _nested_sync3(states, gamma_over_n):
    ps = [s.probabilities for s in states]
    total = []
    for n1, p1 in enumerate(ps[0]):
        for n2, p2 in enumerate(ps[1]):
            for n3, p3 in enumerate(ps[2]):
                for m1, q1 in enumerate(ps[0]):
                    for m2, q2 in enumerate(ps[1]):
                        for m3, q3 in enumerate(ps[2]):
                            s = (n1 - m1) + (n2 - m2) + (n3 - m3)
                            total.append(p1 * p2 * p3 * q1 * q2 * q3
                                         * math.exp(-0.5 * s * s * gamma_over_n))
    return math.fsum(total)


def test_criterion_7a_repeater_factorization():
    s = make_cat(1.5, 0.3, 0.4)
    model = PhaseModel(0.8, 0.0, 0.05 * 100, 100)
    f = fidelity_analytic(s, model).value
    worst = max(abs(reliability_repeater(s, model, k) - f ** k) for k in range(1, 7))
    record("7a", worst <= 1e-10, f"max |R_R(k) - R_R(1)^k| for k <= 6: {worst:.1e}")
    assert worst <= 1e-10


def test_criterion_7b_sync_nested_oracle():
    s = StoredState.from_amplitudes(make_coherent(1.0).amplitudes[:6])
    model = PhaseModel(0.0, 0.0, 0.02 * 100, 100)
    gap = abs(reliability_sync([s] * 3, model, True) - _nested_sync3([s] * 3, 0.02))
    record("7b", gap <= 1e-10, f"|R_S(3) - nested oracle| = {gap:.1e}")
    assert gap <= 1e-10


def test_criterion_7c_sync_below_repeater():
    states = {"coherent_1": make_coherent(1.0), "coherent_2": make_coherent(2.0),
              "cat_even_2": make_cat(2.0, 0.0, 0.0), "cat_odd_2": make_cat(2.0, 0.0, np.pi),
              "uniform_5": make_uniform(5), "uniform_10": make_uniform(10)}
    rows = check_sync_below_repeater(states, [1, 2, 3, 4], [1e-3, 1e-2, 1e-1])
    ARTIFACTS.mkdir(exist_ok=True)
    path = ARTIFACTS / "sync_vs_repeater_counterexamples.csv"
    n_bad = write_counterexamples(rows, path)
    record("7c", n_bad == 0, f"{n_bad} of {len(rows)} grid points have R_S > R_R + 1e-12; "
                             f"counterexamples in {path.name}")
    assert n_bad == 0


def test_criterion_8_metrology(capsys):
    rng = np.random.default_rng(8)
    worst_inv = 0.0
    for _ in range(200):
        D = rng.uniform(-3, 3)
        protocol = make_protocol(rng.uniform(10, 1000), 1.0, grid_points=1001,
                                 convention="reference")
        phase = mean_phase(SystemParams(10, D, 0.0, 1.0, 0.0), protocol)
        worst_inv = max(worst_inv, abs(infer_detuning(phase, protocol.tau_s, 1.0, 3.2) - D))
    D = 1.7
    resid = measured_detuning(MeasurementScenario(1000.0, 1.0, D, 2.7), "naive") - D
    resid_err = abs(resid - 2.7 * D / 1000.5)

    assert cli.main(["figure2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    rel = 2.7 / 1000.5
    mismatches = sum(float(r["fidelity[1]"]) != fidelity_coherent_closed(
        float(r["abs_alpha[1]"]), rel * float(r["Delta_tau_s[rad]"])).value for r in rows)
    f3 = [float(r["fidelity[1]"]) for r in rows if float(r["abs_alpha[1]"]) == 3.0]
    f6 = [float(r["fidelity[1]"]) for r in rows if float(r["abs_alpha[1]"]) == 6.0]
    ordered = all(b <= a for a, b in zip(f3, f6)) and any(b < a for a, b in zip(f3, f6))
    ok = worst_inv <= 1e-12 and resid_err <= 1e-12 and mismatches == 0 and ordered
    record(8, ok, f"inversion error {worst_inv:.1e}; residual error {resid_err:.1e}; "
                  f"figure2 mismatches {mismatches}/{len(rows)}; |alpha| 3 above 6: {ordered}")
    assert ok


def test_criterion_9_tradeoff_scenarios():
    broad = SystemParams(10 ** 7, 1.0, 1.0, 0.1, 0.0)
    prod_us = storage_product(0.9, broad)
    factors = PulseFactors(3.2, 2.7, "reference")
    ts = tradeoff_solve(0.9, broad, factors, {"capacity": 1.0, "tau_d": 1.0})
    solver_prod = ts * math.expm1(1.0)
    within = 1 / 3 <= (prod_us / 1000.0) / 1.0 <= 3

    coupling = SystemParams(10 ** 7, 1.0, 0.0, 0.1, 0.01)
    closed = 2 * math.sqrt(1e7 * 0.1) * 0.1 / (0.01 * 2.7)
    td = tradeoff_solve(0.9, coupling, factors, {"capacity": 1.0, "tau_s": 1.0})
    solved = abs(coupling.Delta) * td * math.expm1(1.0)
    coupling_err = abs(solved / closed - 1)
    gamma_conv = driving_product(0.9, coupling, factors, "gamma")
    ok = (abs(solver_prod / prod_us - 1) <= 1e-10 and within and coupling_err <= 1e-10
          and abs(driving_product(0.9, coupling, factors) / closed - 1) <= 1e-10)
    record(9, ok, f"tau_s(e^C - 1) = {prod_us / 1000:.3f} ms (order-of-magnitude target 1 ms); "
                  f"Delta tau_d (e^C - 1) = {solved:.1f} (gamma convention {gamma_conv:.1f}) "
                  f"vs order-of-magnitude target 1e5: {math.log10(1e5 / solved):.2f} decades apart")
    assert ok


def _preset_csv(name, workers, capsys):
    cfg = validate_config(load_preset(name))
    argv = [cfg.subcommand, "--preset", name, "--seed", "11", "--workers", str(workers)]
    assert cli.main(argv) == 0
    return capsys.readouterr().out.encode()


def test_criterion_10_determinism(capsys):
    mismatched = []
    for name in preset_names():
        outs = [_preset_csv(name, w, capsys) for w in (1, 1, 8, 8)]
        if len(set(outs)) != 1:
            mismatched.append(name)
    ok = not mismatched
    record(10, ok, f"{len(preset_names())} presets x (1, 8 workers) x 2 runs; "
                   f"mismatched: {mismatched or 'none'}")
    assert ok
