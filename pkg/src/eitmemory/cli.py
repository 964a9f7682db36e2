"""Command-line runner: config in, CSV out.

Exit status: 0 on success, 2 for an invalid configuration or input, 3 when a
numerical routine refuses (quadrature, series divergence, underflow,
infeasible trade-off).

Examples:
  eitmemory pulse-factors --xi 1000 --pulse-convention reference
  eitmemory fidelity --preset mc_fidelity --method all --workers 4
  eitmemory figure3b --output tail.csv
"""

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from .berry_phase import Protocol, build_phase_model
from .config import (SUBCOMMANDS, ConfigError, RunConfig, load_document,
                     load_preset, preset_names, validate_config)
from .disorder_ensemble import dump_realization_csv, sample_realization
from .errors import NumericalError, SeriesDivergenceError
from .fidelity_engine import (compensated_fidelity, contour_gamma_over_n,
                              fidelity_analytic, fidelity_coherent_closed,
                              fidelity_lower_bound, fidelity_monte_carlo,
                              fidelity_series)
from .fock_states import (StoredState, admissibility_report, cat_with_variance,
                          family, make_cat, make_coherent, make_fock,
                          make_uniform, photon_stats)
from .metrology_tradeoff import (MeasurementScenario, TradeoffPoint,
                                 high_fidelity_margin, infer_detuning,
                                 residual_detuning, tradeoff_infidelity,
                                 tradeoff_solve)
from .pulse_profiles import gaussian_pulse, pulse_factors
from .reliability_devices import (CorrelationSpec, reliability_general,
                                  reliability_repeater, reliability_sync)

log = logging.getLogger("eitmemory")

DEFAULT_PRESET = {
    "pulse-factors": "gaussian_pulse", "fidelity": "mc_fidelity", "reliability": "reliability_sync",
    "figure2": "residual_detuning_grid", "figure3a": "cat_contours", "figure3b": "tail_cat_uniform",
    "tradeoff": "cold_atom_broadening", "detuning": "naive_detuning",
    "appendix-b": "admissibility",
}


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _write(rows, header, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


# -- builders -----------------------------------------------------------------

def build_protocol(cfg: RunConfig) -> Protocol:
    p = cfg.protocol
    prof = gaussian_pulse(p.xi, p.tau_d, p.grid_points)
    return Protocol(p.tau_s, p.tau_d, prof, pulse_factors(prof, p.convention))


def build_state(cfg: RunConfig) -> StoredState:
    s = cfg.state
    if s.kind == "file":
        with open(s.path) as fh:
            return StoredState.from_json(fh.read())
    if s.kind == "uniform":
        return make_uniform(s.M)
    if s.kind == "fock":
        return make_fock(s.n)
    if s.kind == "cat" and s.variance is not None:
        return cat_with_variance(s.variance, s.eta, s.theta)
    alpha = s.alpha * complex(math.cos(s.alpha_phase), math.sin(s.alpha_phase))
    if s.kind == "cat":
        return make_cat(alpha, s.eta, s.theta)
    return make_coherent(alpha)


# -- subcommands --------------------------------------------------------------

def run_pulse_factors(cfg, out):
    prof = gaussian_pulse(cfg.protocol.xi, cfg.protocol.tau_d, cfg.protocol.grid_points)
    f = pulse_factors(prof, cfg.protocol.convention)
    _write([[f.kappa_theta, f.zeta_theta, f.alpha_theta, cfg.protocol.xi,
             cfg.protocol.tau_d, prof.grid_points, f.convention]],
           ["kappa_theta[1]", "zeta_theta[1]", "alpha_theta[1]", "xi[1]",
            f"tau_d[{cfg.time_unit}]", "grid_points[1]", "convention"], out)


def run_fidelity(cfg, out):
    opt = cfg.fidelity
    params = cfg.params.build()
    protocol = build_protocol(cfg)
    model = build_phase_model(params, protocol)
    state = build_state(cfg)
    var = photon_stats(state, 2).variance
    x = model.Gamma * var / model.N
    methods = ["analytic", "mc", "series", "bound"] if opt.method == "all" else [opt.method]
    rows = []
    for m in methods:
        if m == "analytic":
            r = fidelity_analytic(state, model, opt.compensated)
        elif m == "mc":
            r = fidelity_monte_carlo(state, params, protocol, opt.phase_mode, opt.samples,
                                     cfg.seed, opt.compensated, workers=cfg.workers)
        elif m == "series":
            if not opt.compensated:
                log.warning("the series expands the compensated fidelity")
            try:
                r = fidelity_series(state, x, opt.series_order)
            except SeriesDivergenceError as exc:
                if opt.method != "all":
                    raise
                log.warning("series row skipped: %s", exc)
                continue
        else:
            r = fidelity_lower_bound(x)
        rows.append([r.method, x, r.value, r.std_error, r.samples])
    _write(rows, ["method", "x[1]", "value[1]", "std_error[1]", "samples[1]"], out)


def run_reliability(cfg, out):
    opt = cfg.reliability
    model = build_phase_model(cfg.params.build(), build_protocol(cfg))
    state = build_state(cfg)
    rows = []
    if opt.mode == "custom":
        if opt.rho_file is None:
            raise ConfigError(["reliability.rho_file: custom mode needs a correlation matrix file"])
        spec = CorrelationSpec.from_csv(opt.rho_file)
        value = reliability_general([state] * spec.k, model, spec, opt.compensated)
        rows.append([spec.k, "custom", value])
    else:
        for k in range(1, opt.k + 1):
            if opt.mode == "sync":
                value = reliability_sync([state] * k, model, opt.compensated)
            else:
                value = reliability_repeater(state, model, k, opt.compensated)
            rows.append([k, opt.mode, value])
    _write(rows, ["k[1]", "mode", "value[1]"], out)


def run_figure2(cfg, out):
    opt, det = cfg.figure2, cfg.detection
    scen = MeasurementScenario(det.tau_s_de, det.tau_d_de, 1.0, det.alpha_theta)
    rel = residual_detuning(scen)  # residual per unit detuning
    n_alpha = int(round(opt.alpha_max / opt.alpha_step))
    alphas = opt.alpha_step * np.arange(n_alpha + 1)
    phases = np.linspace(0.0, opt.delta_tau_s_max, opt.delta_tau_s_points)
    rows = []
    for a in alphas:
        for dts in phases:
            f = fidelity_coherent_closed(a, rel * dts).value
            margin = high_fidelity_margin(scen, dts, a * a) if dts > 0 else math.inf
            rows.append([a, dts, f, margin])
    _write(rows, ["abs_alpha[1]", "Delta_tau_s[rad]", "fidelity[1]", "margin[1]"], out)


def run_figure3a(cfg, out):
    opt = cfg.figure3a
    rows = []
    for a in np.linspace(opt.alpha_min, opt.alpha_max, opt.alpha_points):
        state = make_cat(a, opt.eta, opt.theta)
        var = photon_stats(state, 2).variance
        for level in opt.levels:
            try:
                g = contour_gamma_over_n(state, level)
            except NumericalError:
                g = math.nan  # level below the plateau of this state
            rows.append([level, a, var, g, g * var])
    _write(rows, ["fidelity[1]", "abs_alpha[1]", "variance[1]", "Gamma_over_N[1]",
                  "Gamma_over_N_times_variance[1]"], out)


def run_figure3b(cfg, out):
    opt = cfg.figure3b
    states = {"cat": cat_with_variance(opt.variance, 0.0, 0.0)}
    M = (math.sqrt(12.0 * opt.variance + 1.0) - 1.0)
    if abs(M - round(M)) < 1e-9:
        states["uniform"] = make_uniform(int(round(M)))
    else:
        log.warning("no uniform state has variance %g; uniform rows skipped", opt.variance)
    xs = np.geomspace(opt.x_min, opt.x_max, opt.points)
    rows = []
    for label, state in states.items():
        var = photon_stats(state, 2).variance
        for x in xs:
            exact = compensated_fidelity(state, x / var)
            try:
                series = fidelity_series(state, x, opt.series_order).value
            except SeriesDivergenceError:
                series = math.nan  # outside the series' range of validity
            rows.append([label, var, x, exact, series, fidelity_lower_bound(x).value])
    _write(rows, ["state", "variance[1]", "x[1]", "exact[1]", "series[1]", "bound[1]"], out)


def run_tradeoff(cfg, out):
    opt = cfg.tradeoff
    params = cfg.params.build()
    protocol = build_protocol(cfg)
    factors = protocol.factors
    current = {"capacity": opt.capacity, "tau_s": protocol.tau_s, "tau_d": protocol.tau_d}
    fixed = {k: v for k, v in current.items() if k != opt.solve_for}
    conventions = ["literal", "gamma"] if opt.convention == "both" else [opt.convention]
    rows = []
    for conv in conventions:
        value = tradeoff_solve(opt.target_fidelity, params, factors, fixed, conv)
        point = dict(fixed, **{opt.solve_for: value})
        grow = math.expm1(point["capacity"])
        infid = tradeoff_infidelity(TradeoffPoint(point["capacity"], point["tau_s"],
                                                  point["tau_d"], params, factors), conv)
        rows.append([conv, opt.solve_for, opt.target_fidelity, point["capacity"],
                     point["tau_s"], point["tau_d"], point["tau_s"] * grow,
                     abs(params.Delta) * point["tau_d"] * grow, infid])
    t = cfg.time_unit
    _write(rows, ["convention", "solve_for", "target_fidelity[1]", "capacity[nat]",
                  f"tau_s[{t}]", f"tau_d[{t}]", f"tau_s_expC_minus_1[{t}]",
                  "Delta_tau_d_expC_minus_1[rad]", "infidelity[1]"], out)


def run_detuning(cfg, out):
    det = cfg.detection
    D = cfg.params.Delta
    scen = MeasurementScenario(det.tau_s_de, det.tau_d_de, D, det.alpha_theta)
    phase = D * (det.tau_s_de + scen.kappa_theta * det.tau_d_de)
    inferred = infer_detuning(phase, det.tau_s_de, det.tau_d_de, scen.kappa_theta, det.mode)
    residual = inferred - D
    relative = residual / D if D != 0 else 0.0
    f = cfg.freq_unit
    _write([[det.mode, D, phase, inferred, residual, relative]],
           ["mode", f"Delta_true[{f}]", "phase[rad]", f"Delta_inferred[{f}]",
            f"residual[{f}]", "relative_residual[1]"], out)


def run_admissibility(cfg, out):
    opt = cfg.admissibility
    rep = admissibility_report(family(opt.family, opt.eta, opt.theta), opt.variances)
    # distance to the previous grid point; the first row has none
    succ = np.concatenate([[math.nan], rep.ks_successive])
    rows = []
    for i, v in enumerate(rep.variances):
        best = rep.tails[i].best
        rows.append([opt.family, v, best.delta if best else math.nan,
                     best.chi if best else math.nan, best.C if best else math.nan,
                     rep.tails[i].light_tailed, rep.ks_gaussian[i], succ[i]])
    _write(rows, ["family", "variance[1]", "tail_delta[1]", "tail_chi[1]", "tail_C[1]",
                  "light_tailed", "ks_gaussian[1]", "ks_to_previous[1]"], out)


RUNNERS = {
    "pulse-factors": run_pulse_factors, "fidelity": run_fidelity,
    "reliability": run_reliability, "figure2": run_figure2,
    "figure3a": run_figure3a, "figure3b": run_figure3b,
    "tradeoff": run_tradeoff, "detuning": run_detuning,
    "appendix-b": run_admissibility,
}


def explain(cfg: RunConfig, stream):
    doc = {"units": cfg.units, "pulse_convention": cfg.protocol.convention}
    try:
        protocol = build_protocol(cfg)
        model = build_phase_model(cfg.params.build(), protocol)
        doc["pulse_factors"] = {"kappa_theta": protocol.factors.kappa_theta,
                                "zeta_theta": protocol.factors.zeta_theta,
                                "alpha_theta": protocol.factors.alpha_theta}
        doc["phase_model"] = model.to_dict()
    except NumericalError as exc:
        doc["phase_model"] = f"unavailable: {exc}"
    doc["phase_sign"] = "phases carry a minus sign; fidelities are sign-insensitive"
    print(json.dumps(doc, indent=2), file=stream)


def run(cfg: RunConfig, stream=None) -> str:
    """Execute a validated config, returning the CSV text (also written to ``stream``)."""
    buf = io.StringIO()
    RUNNERS[cfg.subcommand](cfg, buf)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# -- argument handling --------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--preset", help="bundled configuration name")
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker threads (default: $EITMEMORY_THREADS or 1)")
    p.add_argument("--explain", action="store_true", help="print the phase model to stderr")
    p.add_argument("--pulse-convention", choices=["definition", "reference", "paper"],
                   help="pulse factors from the waveform, or the fixed values 3.2 / 2.7 "
                        "('paper' is an alias of 'reference')")
    p.add_argument("--dump-realizations", metavar="CSV",
                   help="write the seeded per-atom disorder draw to CSV")
    p.add_argument("--print-config", action="store_true",
                   help="print the resolved configuration and exit")
    g = p.add_argument_group("system")
    for name in ("N",):
        g.add_argument(f"--{name}", type=int)
    for name in ("Delta", "delta-Delta", "g", "delta-g", "tau-s", "tau-d", "xi"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--grid-points", type=int)
    g.add_argument("--units", choices=["MHz/us", "GHz/ns", "kHz/ms", "Hz/s"])


def _state_flags(p):
    p.add_argument("--state", choices=["coherent", "cat", "uniform", "fock", "file"])
    p.add_argument("--state-file")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--variance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eitmemory", description="Disorder-induced dephasing of EIT quantum memories",
        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=__doc__)
    parser.add_argument("--list-presets", action="store_true")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _common(p)
        if name in ("fidelity", "reliability"):
            _state_flags(p)
            p.add_argument("--compensated", action=argparse.BooleanOptionalAction, default=None)
        if name == "fidelity":
            p.add_argument("--method", choices=["analytic", "mc", "series", "bound", "all"])
            p.add_argument("--samples", type=int)
            p.add_argument("--phase-mode", choices=["exact", "linear"])
            p.add_argument("--series-order", type=int)
        if name == "reliability":
            p.add_argument("--mode", choices=["sync", "repeater", "custom"])
            p.add_argument("--k", type=int)
            p.add_argument("--rho-file")
        if name == "tradeoff":
            p.add_argument("--target-fidelity", type=float)
            p.add_argument("--solve-for", choices=["tau_s", "tau_d", "capacity"])
            p.add_argument("--capacity", type=float)
            p.add_argument("--convention", choices=["literal", "gamma", "both"])
        if name in ("detuning", "figure2"):
            p.add_argument("--tau-s-de", type=float)
            p.add_argument("--tau-d-de", type=float)
            p.add_argument("--alpha-theta", type=float)
        if name == "detuning":
            p.add_argument("--mode", choices=["naive", "berry"])
        if name == "appendix-b":
            p.add_argument("--family", choices=["coherent", "cat", "uniform", "fock"])
            p.add_argument("--variances", type=lambda s: [float(v) for v in s.split(",")])
    return parser


def _set(doc, section, key, value):
    if value is None:
        return
    if section is None:
        doc[key] = value
    else:
        doc.setdefault(section, {})[key] = value


def resolve_config(args) -> RunConfig:
    if args.config:
        doc = load_document(args.config)
    else:
        doc = load_preset(args.preset or DEFAULT_PRESET[args.subcommand])
    doc = json.loads(json.dumps(doc))
    doc["subcommand"] = args.subcommand
    a = vars(args)
    for key in ("seed", "workers", "output", "units"):
        _set(doc, None, key, a.get(key))
    for flag, key in (("N", "N"), ("Delta", "Delta"), ("delta_Delta", "delta_Delta"),
                      ("g", "g"), ("delta_g", "delta_g")):
        _set(doc, "params", key, a.get(flag))
    for flag, key in (("tau_s", "tau_s"), ("tau_d", "tau_d"), ("xi", "xi"),
                      ("grid_points", "grid_points"), ("pulse_convention", "convention")):
        _set(doc, "protocol", key, a.get(flag))
    for flag, key in (("state", "kind"), ("state_file", "path"), ("alpha", "alpha"),
                      ("eta", "eta"), ("theta", "theta"), ("M", "M"), ("n", "n"),
                      ("variance", "variance")):
        _set(doc, "state", key, a.get(flag))
    if args.subcommand == "fidelity":
        for key in ("method", "samples", "phase_mode", "compensated", "series_order"):
            _set(doc, "fidelity", key, a.get(key))
    if args.subcommand == "reliability":
        for key in ("mode", "k", "rho_file", "compensated"):
            _set(doc, "reliability", key, a.get(key))
    if args.subcommand == "tradeoff":
        for key in ("target_fidelity", "solve_for", "capacity", "convention"):
            _set(doc, "tradeoff", key, a.get(key))
    if args.subcommand in ("detuning", "figure2"):
        for key in ("tau_s_de", "tau_d_de", "alpha_theta"):
            _set(doc, "detection", key, a.get(key))
        if args.subcommand == "detuning":
            _set(doc, "detection", "mode", a.get("mode"))
    if args.subcommand == "appendix-b":
        _set(doc, "admissibility", "family", a.get("family"))
        _set(doc, "admissibility", "variances", a.get("variances"))
    return validate_config(doc)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.list_presets:
        print("\n".join(preset_names()))
        return 0
    if args.subcommand is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        cfg = resolve_config(args)
        if args.print_config:
            print(cfg.to_json())
            return 0
        if args.explain:
            explain(cfg, sys.stderr)
        if args.dump_realizations:
            dump_realization_csv(sample_realization(cfg.params.build(), cfg.seed),
                                 args.dump_realizations)
        if cfg.output:
            with open(cfg.output, "w", newline="") as fh:
                run(cfg, fh)
        else:
            run(cfg, sys.stdout)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
