import json

import numpy as np
import pytest
from pydantic import ValidationError

from ringqed import recipes
from ringqed.model import SystemParams
from ringqed.modes import dispersive_estimates, spectrum_for_structure
from ringqed.scan import AxisSpec, FixedSpec, ScanConfig, extract_peaks, run_scan
from ringqed.weak_drive import photon_numbers, traveling_amplitudes


def cfg(**kw):
    return ScanConfig.model_validate(kw)


def test_unknown_keys_are_rejected_with_path():
    with pytest.raises(ValidationError) as info:
        cfg(quantity="n_tot", axis1={"name": "delta", "start": 0, "stop": 1, "points": 3}, fixed={"kapa_in": 0.1})
    assert info.value.errors()[0]["loc"] == ("fixed", "kapa_in")


@pytest.mark.parametrize(
    "doc",
    [
        {"axis1": {"name": "delta", "start": 0, "stop": 1, "points": 1}},
        {"axis1": {"name": "delta", "start": 0, "stop": float("inf"), "points": 3}},
        {"axis1": {"name": "bogus", "start": 0, "stop": 1, "points": 3}},
        {"axis1": {"name": "delta", "start": 0, "stop": 1, "points": 3},
         "axis2": {"name": "delta", "start": 0, "stop": 1, "points": 3}},
        {"quantity": "eigenvalues", "engine": "meanfield"},
        {"engine": "oracle", "fixed": {"n_atoms": 4}},
        {"quantity": "w", "axis1": {"name": "delta", "start": 0, "stop": 1, "points": 3}},
        {"axis1": {"name": "n_atoms", "values": [1.5, 2]}},
        {"fixed": {"n_atoms": 4, "s_magnitude": 5}},
    ],
)
def test_invalid_configs(doc):
    with pytest.raises(ValidationError):
        ScanConfig.model_validate(doc)


def test_row_count_and_order():
    c = cfg(quantity="n_tot", axis1={"name": "delta", "start": -1, "stop": 1, "points": 4},
            axis2={"name": "s_magnitude", "values": [0, 3, 10]})
    t = run_scan(c)
    assert len(t.rows) == 12
    assert t.columns == ["delta[gamma]", "s_magnitude[1]", "n_tot[1]", "error"]
    assert [row[:2] for row in t.rows[:3]] == [[-1.0, 0.0], [-1.0, 3.0], [-1.0, 10.0]]


def test_vectorised_path_matches_closed_form():
    c = cfg(quantity="n_minus", axis1={"name": "delta", "start": -2, "stop": 2, "points": 9},
            fixed={"n_atoms": 10, "s_magnitude": 6.0, "delta_ac": 5.0})
    t = run_scan(c)
    d = np.linspace(-2, 2, 9)
    ap, am = traveling_amplitudes(10, 6.0, g=0.5, kappa_in=0.1, kappa=0.1, gamma=1.0, epsilon=1e-3, delta=d, delta_ac=5.0)
    assert np.allclose(t.column("n_minus"), photon_numbers(ap, am, 0.1, 1e-3)[1], rtol=1e-13)


def test_csv_is_byte_identical_and_thread_independent():
    c = cfg(quantity="n_out_minus", engine="meanfield", axis1={"name": "delta", "start": -0.5, "stop": 0.5, "points": 4},
            fixed={"n_atoms": 2, "s_magnitude": 1.0})
    a = run_scan(c).to_csv()
    assert a == run_scan(c).to_csv()
    assert a == run_scan(c, threads=3).to_csv()


def test_failed_points_are_flagged_not_fatal():
    # odd N below full structure has no paired chain for the non-analytic engines
    c = cfg(quantity="n_tot", engine="meanfield", axis1={"name": "s_magnitude", "values": [1.0, 3.0]},
            fixed={"n_atoms": 3})
    t = run_scan(c)
    assert len(t.rows) == 2
    assert t.rows[0][-1].startswith("ParameterError")
    assert t.rows[1][-1] == ""
    assert "nan" in t.to_csv().splitlines()[1]


def test_undefined_phase_marker():
    c = cfg(quantity="phi_minus", axis1={"name": "s_magnitude", "values": [0.0, 5.0]})
    lines = run_scan(c).to_csv().splitlines()
    assert lines[1].split(",")[1] == "undefined"
    assert float(lines[2].split(",")[1])


def test_eigenvalue_columns_split_complex():
    t = run_scan(cfg(quantity="eigenvalues", axis1={"name": "s_magnitude", "values": [0.0, 10.0]}))
    assert "E1+_re[gamma]" in t.columns and "E2-_im[gamma]" in t.columns
    ev = spectrum_for_structure(SystemParams(), 10, 10.0).eigenvalues
    assert t.rows[1][1] == ev[0].real and t.rows[1][2] == ev[0].imag


def test_json_mirrors_csv():
    t = run_scan(cfg(quantity="relative_phase", axis1={"name": "arg_s", "values": [0.0, 1.0, 2.0]},
                     fixed={"n_atoms": 4, "s_magnitude": 2.0}))
    doc = json.loads(t.to_json())
    assert doc["columns"] == t.columns
    assert len(doc["rows"]) == 3
    assert doc["rows"][1]["relative_phase[rad]"] == t.rows[1][1]


def test_relative_phase_tracks_arg_s():
    t = run_scan(cfg(quantity="relative_phase", axis1={"name": "arg_s", "start": -3, "stop": 3, "points": 7},
                     fixed={"n_atoms": 4, "s_magnitude": 2.0}))
    rel = t.column("relative_phase")
    steps = np.angle(np.exp(1j * np.diff(rel)))
    assert np.allclose(steps, -1.0, atol=1e-9)


def test_cooperativity_and_mirror_axes():
    t = run_scan(cfg(quantity="w", axis1={"name": "nc", "values": [100.0, 200.0]},
                     axis2={"name": "kappa_in_ratio", "values": [0.5, 1.0]},
                     fixed={"n_atoms": 10, "delta_ac": 10.0}))
    w = t.column("w")
    assert w[1] == pytest.approx(40000 / 40801, abs=1e-12)
    assert w[0] < w[1]


def test_engines_agree_at_weak_drive():
    base = dict(quantity="n_tot", axis1={"name": "delta", "values": [-0.2, 0.0, 0.3]},
                fixed={"n_atoms": 1, "epsilon": 1e-3})
    a = run_scan(cfg(**base)).column("n_tot")
    m = run_scan(cfg(engine="meanfield", **base)).column("n_tot")
    o = run_scan(cfg(engine="oracle", **base)).column("n_tot")
    assert np.allclose(m, a, rtol=1e-4)
    assert np.allclose(o, a, rtol=1e-2)


def test_mean_s_is_seeded():
    c = cfg(quantity="mean_s", axis1={"name": "sigma", "values": [10.0, 20.0]}, fixed={"n_atoms": 10, "samples": 200}, seed=4)
    assert run_scan(c).to_csv() == run_scan(c).to_csv()
    other = c.model_copy(update={"seed": 5})
    assert run_scan(other).to_csv() != run_scan(c).to_csv()


# ----------------------------------------------------------------- peaks


def test_lorentzian_self_test():
    x = np.linspace(-1, 1, 4001)
    y = 1 / (1 + (x / 0.05) ** 2)
    rep = extract_peaks(x, y)
    assert len(rep.peaks) == 1 and rep.diagnostic == ""
    assert rep.peaks[0].fwhm == pytest.approx(0.1, rel=0.01)
    assert rep.peaks[0].height == pytest.approx(1.0)


def test_empty_report_has_diagnostic():
    rep = extract_peaks(np.linspace(0, 1, 50), np.zeros(50))
    assert rep.peaks == [] and rep.diagnostic
    rep = extract_peaks(np.linspace(0, 1, 50), np.linspace(0, 1, 50))
    assert rep.peaks == [] and rep.diagnostic


def test_coarse_scan_is_flagged():
    x = np.linspace(-1, 1, 81)
    rep = extract_peaks(x, 1 / (1 + (x / 0.05) ** 2))
    assert "points per FWHM" in rep.diagnostic


def test_peaks_sorted_and_positive_width():
    x = np.linspace(-3, 3, 3001)
    y = 1 / (1 + ((x - 1) / 0.1) ** 2) + 0.5 / (1 + ((x + 1.2) / 0.2) ** 2)
    rep = extract_peaks(x[::-1], y[::-1])
    centers = [p.center for p in rep.peaks]
    assert centers == sorted(centers) and len(centers) == 2
    assert all(p.fwhm > 0 for p in rep.peaks)


def test_half_structure_peaks_at_dispersive_shifts():
    p = SystemParams(g=0.5, kappa_in=0.1, delta_ac=20.0)
    n, s = 20, 10.0
    d = np.linspace(-0.2, 0.8, 5001)
    ap, am = traveling_amplitudes(n, s, g=p.g, kappa_in=p.kappa_in, kappa=p.kappa, gamma=p.gamma,
                                  epsilon=p.epsilon, delta=d, delta_ac=p.delta_ac)
    rep = extract_peaks(d, photon_numbers(ap, am, p.kappa, p.epsilon)[2], spectrum_for_structure(p, n, s))
    est = dispersive_estimates(p, n, s)
    assert len(rep.peaks) == 2
    assert rep.by_label("E2+").center == pytest.approx(est.dark_shift, rel=0.05)
    assert rep.by_label("E1+").center == pytest.approx(est.bright_shift, rel=0.05)


# ----------------------------------------------------------------- recipes


def test_output_crossover_recipe():
    out = recipes.output_crossover()
    assert out.passed, out.detail


def test_phase_recipe():
    out = recipes.phase_maps()
    assert out.passed, out.detail


def test_disorder_recipe():
    out = recipes.disorder_average(samples=2000)
    assert out.passed, out.detail
    assert len(out.tables["disorder_mean_s"].rows) == 12
