import json
import math

import numpy as np
import pytest

import gla


def test_chain_bath_and_hamiltonian():
    bath = gla.chain(11)
    assert bath.n_sites == 11
    h = bath.hamiltonian()
    assert h.shape == (11, 11)
    assert np.allclose(h, h.conj().T)
    assert h[0, 1] == pytest.approx(-1.0)


def test_braided_pair_rates_match_closed_form():
    bath = gla.chain(2001)
    res = gla.Resolvent.analytic_chain(bath)
    gbar = math.sqrt(2) * 0.05
    atoms = [gla.chain_pair_atom(bath, 1000, 1002, gbar, math.pi / 4, 0.0),
             gla.chain_pair_atom(bath, 1001, 1003, gbar, math.pi / 4, 0.0)]
    k, gamma = gla.rates(atoms, res)
    k12, _, _ = gla.braided_rates_closed_form(math.pi / 4, math.pi / 2, 2, 1, gbar)
    assert k[0, 1].real == pytest.approx(k12, abs=1e-10)
    assert np.abs(gamma).max() < 1e-12


def test_lieb_vacancy_like_state():
    bath = gla.lieb(21, 21)
    atom = gla.lieb_string_atom(bath, 8, 10, 5, True, 0.05, -1.0)
    found = gla.vds_search(atom, bath)
    assert len(found) >= 1
    psi = found[0]["psi"]
    assert np.abs(psi).max() == pytest.approx(0.5, abs=1e-10)
    assert max(found[0]["check_residuals"]) < 1e-8


def test_in_gap_bound_state():
    bath = gla.chain(201)
    res = gla.Resolvent.finite(bath)
    atom = gla.Atom(2.5, [(100, 0.3)])
    states = gla.ingap_bound_states(atom, res)
    assert len(states) == 1
    assert states[0]["omega"] > 2.5
    assert states[0]["residual"] < 1e-8


def test_scenario_round_trip(tmp_path):
    cfg = gla.default_config("lieb_mismatched")
    cfg["outputs"] = ["dfh_report"]
    report = gla.run_scenario(cfg, tmp_path)
    assert report["config"] == cfg
    assert report["results"]["dfh_report"]["is_dfh"] is True
    assert report["expectations_met"] is True
    assert (tmp_path / "report.json").exists()
    assert json.loads((tmp_path / "report.json").read_text())["schema"] == 1


def test_config_errors_raise():
    cfg = gla.default_config("lieb_pair")
    cfg["params"]["string_length"] = 7
    with pytest.raises(gla.GlaError, match="size law"):
        gla.run_scenario(cfg, "/tmp/gla-never-written")


def test_regression_row():
    row = gla.regression_row(9)
    assert row["status"] == "pass"
    assert "scenarios" not in row["title"]
    assert "lieb_pair" in gla.scenarios()
