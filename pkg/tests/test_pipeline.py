import json

import pytest

from fibremod.coupling import CouplingError
from fibremod.pipeline import (PipelineError, fit_report, gw_table, half_y1, run_couplings, verify_suite,
                               yukawa_series)
from fibremod.presets import PresetError, get_model, intersection_data


def test_caps_must_be_positive():
    with pytest.raises(PipelineError):
        run_couplings("main4", (0, 3))
    with pytest.raises(PipelineError):
        verify_suite("main4", (8, 0))


def test_coupling_sources_agree():
    derived = run_couplings("main4", (8, 2), "derived")
    corrected = run_couplings("main4", (8, 2), "corrected")
    assert derived.C4 == corrected.C4
    assert derived.tables["gamma1"].n == corrected.tables["gamma1"].n


def test_printed_couplings_are_rejected_downstream():
    with pytest.raises(CouplingError):
        run_couplings("main4", (8, 2), "printed")


def test_rational_couplings_exist_only_for_main_example():
    with pytest.raises(PresetError):
        run_couplings("main3", (6, 1))
    with pytest.raises(PipelineError):
        yukawa_series(get_model("main3"), intersection_data("main4"), (6, 1), "corrected")
    with pytest.raises(PipelineError):
        run_couplings("main4", (6, 1), "guessed")


def test_gw_table_lookup():
    assert gw_table("main4", "gamma1", (5, 1)).n[(2, 1)] == -1800000
    with pytest.raises(PipelineError):
        gw_table("main4", "gamma3", (5, 1))


def test_fit_report_records_unfitted_rows(main_fits):
    assert set(main_fits.coupling) == {1, 2}
    assert set(main_fits.potentials["gamma1"]) == {1, 2}
    assert "underdetermined" in main_fits.unfitted[("gamma2", 2)]
    data = json.loads(json.dumps(main_fits.to_json()))
    assert data["anomaly"] == {"C2222": "-5/24", "gamma1": "-1/12"}


def test_half_y1_is_first_potential_row(main_fits):
    assert half_y1(main_fits) == main_fits.potentials["gamma1"][1].terms()


def test_fit_report_at_first_order(main_run):
    fr = fit_report(main_run, 1)
    assert set(fr.coupling) == {1} and fr.anomaly == {}


@pytest.mark.parametrize("name", ["main3", "x163", "x274", "x644"])
def test_verify_other_presets(name):
    report = verify_suite(name, (8, 2))
    assert report.ok, report.failures
    lines = report.to_text().splitlines()
    assert all(line.startswith("PASS ") for line in lines[:-1])
    assert lines[-1] == f"{name}: all checks passed"


def test_verify_with_certification():
    report = verify_suite("main4", (10, 2), certify_order=30)
    names = [c.name for c in report.checks]
    assert any(n.startswith("t^2 coefficient is quasi-modular") for n in names)
    assert report.ok
