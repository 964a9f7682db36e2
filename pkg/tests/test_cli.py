import csv
import io
import json
import math

import numpy as np
import pytest

from eitmemory import cli
from eitmemory.config import ConfigError, load_preset, preset_names, validate_config
from eitmemory.fidelity_engine import fidelity_coherent_closed


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_empty_document_lists_required_fields():
    with pytest.raises(ConfigError) as exc:
        validate_config({})
    fields = {e.split(":")[0] for e in exc.value.errors}
    assert fields == {"subcommand", "seed", "params", "protocol"}


def test_coupling_spread_rejected():
    doc = load_preset("tail_cat_uniform")
    doc["params"]["delta_g"] = doc["params"]["g"]
    with pytest.raises(ConfigError, match="delta_g must be smaller than g"):
        validate_config(doc)


def test_unknown_keys_rejected():
    doc = load_preset("residual_detuning_grid")
    doc["figure2"]["colour"] = "blue"
    with pytest.raises(ConfigError, match="figure2.colour"):
        validate_config(doc)


def test_unit_tag_checked():
    doc = load_preset("residual_detuning_grid")
    doc["units"] = "MHz/ms"
    with pytest.raises(ConfigError, match="units"):
        validate_config(doc)


@pytest.mark.parametrize("name", preset_names())
def test_presets_round_trip(name):
    cfg = validate_config(load_preset(name))
    again = validate_config(json.loads(cfg.to_json()))
    assert again == cfg


def test_pulse_factors_reference_row(capsys):
    code, out, _ = _run(["pulse-factors", "--xi", "1000", "--pulse-convention", "paper"], capsys)
    assert code == 0
    row = _rows(out)[0]
    assert (float(row["kappa_theta[1]"]), float(row["zeta_theta[1]"]),
            float(row["alpha_theta[1]"])) == (3.2, 2.7, pytest.approx(2.7))


def test_figure2_closed_form(capsys):
    code, out, _ = _run(["figure2"], capsys)
    assert code == 0
    rows = _rows(out)
    rel = 2.7 / 1000.5
    for r in rows:
        a, dts = float(r["abs_alpha[1]"]), float(r["Delta_tau_s[rad]"])
        assert float(r["fidelity[1]"]) == fidelity_coherent_closed(a, rel * dts).value
        if dts == 0:
            assert float(r["fidelity[1]"]) == 1.0
    inset = {a: [float(r["fidelity[1]"]) for r in rows if float(r["abs_alpha[1]"]) == a]
             for a in (3.0, 6.0)}
    assert all(f6 <= f3 for f3, f6 in zip(inset[3.0], inset[6.0]))
    assert any(f6 < f3 for f3, f6 in zip(inset[3.0], inset[6.0]))


def test_figure3b_bound_below_exact(capsys):
    code, out, _ = _run(["figure3b"], capsys)
    assert code == 0
    rows = _rows(out)
    assert {r["state"] for r in rows} == {"cat", "uniform"}
    for r in rows:
        assert float(r["bound[1]"]) <= float(r["exact[1]"]) + 1e-12
    small = [r for r in rows if float(r["x[1]"]) < 0.05]
    for r in small:
        assert float(r["series[1]"]) == pytest.approx(float(r["exact[1]"]), rel=1e-3)


def test_figure3a_products_settle(capsys):
    code, out, _ = _run(["figure3a"], capsys)
    assert code == 0
    rows = [r for r in _rows(out) if float(r["variance[1]"]) >= 25]
    for level in ("0.90000000000000002", "0.40000000000000002"):
        prod = np.array([float(r["Gamma_over_N_times_variance[1]"]) for r in rows
                         if r["fidelity[1]"] == level])
        assert prod.size > 5 and np.ptp(prod) / prod.mean() < 0.15


def test_fidelity_all_methods(capsys):
    code, out, _ = _run(["fidelity", "--samples", "5000"], capsys)
    assert code == 0
    methods = [r["method"] for r in _rows(out)]
    assert methods == ["analytic", "monte_carlo_linear_phase", "series", "lower_bound"]


def test_reliability_modes(capsys, tmp_path):
    code, out, _ = _run(["reliability", "--mode", "repeater", "--k", "3"], capsys)
    rows = _rows(out)
    assert code == 0 and [r["k[1]"] for r in rows] == ["1", "2", "3"]
    f1 = float(rows[0]["value[1]"])
    assert float(rows[2]["value[1]"]) == pytest.approx(f1 ** 3, rel=1e-14)
    rho = tmp_path / "rho.csv"
    rho.write_text("1,0.5\n0.5,1\n")
    code, out, _ = _run(["reliability", "--mode", "custom", "--rho-file", str(rho)], capsys)
    assert code == 0 and _rows(out)[0]["mode"] == "custom"


def test_tradeoff_scenarios(capsys):
    code, out, _ = _run(["tradeoff", "--preset", "cold_atom_broadening"], capsys)
    assert code == 0
    row = _rows(out)[0]
    assert float(row["tau_s_expC_minus_1[us]"]) == pytest.approx(2000.0, rel=1e-12)
    code, out, _ = _run(["tradeoff", "--preset", "cold_atom_coupling"], capsys)
    rows = {r["convention"]: r for r in _rows(out)}
    assert float(rows["literal"]["Delta_tau_d_expC_minus_1[rad]"]) == pytest.approx(20000 / 2.7, rel=1e-12)
    assert float(rows["gamma"]["Delta_tau_d_expC_minus_1[rad]"]) == pytest.approx(40000 / 2.7, rel=1e-12)


def test_detuning_modes(capsys):
    code, out, _ = _run(["detuning", "--mode", "berry", "--Delta", "0.37"], capsys)
    assert code == 0
    assert float(_rows(out)[0]["Delta_inferred[MHz]"]) == pytest.approx(0.37, abs=1e-12)
    code, out, _ = _run(["detuning"], capsys)
    assert float(_rows(out)[0]["relative_residual[1]"]) == pytest.approx(2.7 / 1000.5, abs=1e-12)


def test_units_in_headers(capsys):
    code, out, _ = _run(["detuning", "--units", "GHz/ns"], capsys)
    assert "Delta_true[GHz]" in out.splitlines()[0]


def test_admissibility_subcommand(capsys):
    code, out, _ = _run(["appendix-b"], capsys)
    rows = _rows(out)
    assert code == 0 and all(r["light_tailed"] == "true" for r in rows)


def test_explain_and_dump(capsys, tmp_path):
    dump = tmp_path / "atoms.csv"
    code, out, err = _run(["fidelity", "--method", "analytic", "--explain",
                           "--dump-realizations", str(dump)], capsys)
    assert code == 0
    doc = json.loads(err)
    assert set(doc["phase_model"]) >= {"gamma0", "mu0", "Gamma", "N"}
    assert dump.read_text().startswith("j,Delta_j,g_j")


def test_exit_codes(capsys, tmp_path):
    assert _run(["fidelity", "--delta-g", "5"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert _run(["fidelity", "--config", str(bad)], capsys)[0] == 2
    code, _, err = _run(["fidelity", "--method", "series", "--tau-s", "5000"], capsys)
    assert code == 3 and "series" in err
    code, _, _ = _run(["tradeoff", "--preset", "cold_atom_broadening", "--solve-for", "tau_d"], capsys)
    assert code == 3


def test_output_file_matches_stdout(capsys, tmp_path):
    path = tmp_path / "out.csv"
    _, out, _ = _run(["reliability"], capsys)
    assert _run(["reliability", "--output", str(path)], capsys)[0] == 0
    assert path.read_text() == out


def test_config_file_run(capsys, tmp_path):
    doc = load_preset("naive_detuning")
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _run(["detuning", "--config", str(path)], capsys)
    assert code == 0 and math.isclose(float(_rows(out)[0]["Delta_true[MHz]"]), 1.0)
