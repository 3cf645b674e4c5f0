import numpy as np
import pytest

from cmc_cylinders.flow import lambda_jet_at_one, monodromy_circle
from cmc_cylinders.loops import lambda_grid
from cmc_cylinders.monodromy import (
    MonodromyError,
    analyze_monodromy,
    closing_check,
    extract_A,
    find_scale,
    fit_series_coefficient,
    p1_residue_oracle,
    trace_profile,
    weight,
    weight_preservation_check,
)
from cmc_cylinders.potential import LaurentSpec, kappa, symmetric_spec

ZERO = LaurentSpec.from_coeffs({})
CONST = LaurentSpec.from_coeffs({0: 1 / 32})


def test_closing_zero_f():
    s, res_m, res_mp = closing_check(lambda_jet_at_one(ZERO))
    assert s == -1
    assert res_m < 1e-10
    assert res_mp < 1e-10


def test_closing_figure_spec():
    s, res_m, res_mp = closing_check(lambda_jet_at_one(symmetric_spec(2, 1 / 32, 1 / 1000)))
    assert s == -1
    assert res_m <= 1e-8
    assert res_mp <= 1e-8


def test_closing_violation_detected():
    bad = (-np.eye(2) + np.array([[0.0, 0.01], [0.0, 0.0]]),
           np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(MonodromyError):
        closing_check(bad)


def test_extract_A_zero_and_constant():
    jet = lambda_jet_at_one(ZERO)
    m = monodromy_circle(ZERO)
    assert np.max(np.abs(extract_A(jet, m))) < 1e-8

    jet = lambda_jet_at_one(CONST)
    m = monodromy_circle(CONST)
    a = extract_A(jet, m)
    a0 = 1 / 32
    want = np.array([[0.0, 4j * np.pi * a0], [1j * np.pi * a0, 0.0]])
    assert np.max(np.abs(a - want)) < 1e-8
    assert abs(np.trace(a)) < 1e-10


def test_extract_A_instability_detected():
    jet = lambda_jet_at_one(CONST)
    m = monodromy_circle(CONST)
    with pytest.raises(MonodromyError):
        extract_A(jet, m, fit_tol=1e-12)


def test_extract_A_matches_residue_prediction():
    spec = symmetric_spec(1, 1 / 32, 1 / 50)
    jet = lambda_jet_at_one(spec)
    m = monodromy_circle(spec)
    a = extract_A(jet, m)
    oracle = p1_residue_oracle(spec)
    assert np.max(np.abs(a - oracle["a_predicted"])) < 1e-6
    # determinant identity: det A = 4 pi^2 kappa in this normalization
    k = kappa(spec)
    assert abs(np.linalg.det(a) - 4 * np.pi ** 2 * k) < 1e-6


def test_p1_residue_oracle():
    assert np.max(np.abs(p1_residue_oracle(ZERO)["quadrature"])) < 1e-12

    out = p1_residue_oracle(CONST)
    want = -8j * np.pi * np.array([[1 / 32, 0], [0, -1 / 32]])
    assert np.allclose(out["quadrature"], want, atol=1e-10)
    assert out["mismatch"] < 1e-9
    assert abs(out["constant_vs_printed"] - (-4.0)) < 1e-9

    out = p1_residue_oracle(LaurentSpec.from_coeffs({1: 1.0, -1: 1.0}))
    assert abs(out["quadrature"][0, 0]) < 1e-10
    assert abs(out["quadrature"][1, 1]) < 1e-10
    assert np.allclose(out["quadrature"][0, 1], 8j * np.pi, atol=1e-9)
    assert np.allclose(out["quadrature"][1, 0], -8j * np.pi, atol=1e-9)


def test_oracle_constant_is_global():
    # one constant relates measurement to the printed normalization for all specs
    consts = []
    for spec in (CONST, symmetric_spec(1, 1 / 32, 1 / 50),
                 symmetric_spec(1, 1 / 16, 1 / 100, tau=0.3)):
        consts.append(p1_residue_oracle(spec)["constant_vs_printed"])
    assert np.max(np.abs(np.diff(consts))) < 1e-9


def test_weight_values():
    jet = lambda_jet_at_one(symmetric_spec(2, 1 / 32, 1 / 100))
    m = monodromy_circle(symmetric_spec(2, 1 / 32, 1 / 100))
    a = extract_A(jet, m)
    out = weight(a, symmetric_spec(2, 1 / 32, 1 / 100))
    assert abs(out["closed_form"] - np.pi / 64) < 1e-12
    assert abs(out["weight"] - np.pi / 64) < 1e-4
    assert out["rel_deviation"] < 1e-4

    spec = symmetric_spec(1, 1 / 32, 1 / 50)
    a = extract_A(lambda_jet_at_one(spec), monodromy_circle(spec))
    out = weight(a, spec)
    assert abs(out["closed_form"] - 0.5 * np.pi * np.sqrt(1 / 1024 - 1 / 2500)) < 1e-12
    assert abs(out["weight"] - out["closed_form"]) < 1e-4

    assert weight(np.zeros((2, 2)))["weight"] == 0.0


def test_trace_profile_zero_f():
    prof = trace_profile(monodromy_circle(ZERO))
    assert prof["sign"] == -1
    assert prof["unitarizable"]
    assert np.allclose(prof["trace"].real, 2.0, atol=1e-9)
    assert prof["max_im_trace"] < 1e-10


def test_trace_profile_constant_f():
    m = monodromy_circle(CONST)
    prof = trace_profile(m)
    # lambda = -1 sits at grid index L/2; closed form 2 cos(2 pi sqrt(1/8))
    want = 2.0 * np.cos(2.0 * np.pi * np.sqrt(1.0 / 8.0))
    got = prof["trace"][m.n_samples // 2]
    assert abs(got.real - abs(want)) < 1e-9
    assert prof["unitarizable"]
    assert prof["trace_range"][1] <= 2.0 + 1e-9


def test_trace_profile_escape_detected():
    big = LaurentSpec.from_coeffs({0: 1.0})
    prof = trace_profile(monodromy_circle(big))
    assert not prof["unitarizable"]
    assert prof["first_failure"] is not None
    # the hyperbolic branch has trace(M) > 2, flipped by the global sign
    assert prof["trace_range"][0] < -2.0


def test_symmetric_monodromy_structure():
    # real equal diagonal entries and real trace over the whole grid
    for spec in (symmetric_spec(2, 1 / 32, 1 / 100),
                 symmetric_spec(2, -4 / 32, 1 / 100)):
        m = monodromy_circle(spec)
        assert np.max(np.abs((m.samples[:, 0, 0] + m.samples[:, 1, 1]).imag)) < 1e-8
        assert np.max(np.abs(m.samples[:, 0, 0] - m.samples[:, 1, 1])) < 1e-8


def test_trace_quartic_contact():
    spec = symmetric_spec(2, 1 / 32, 1 / 100)
    m = monodromy_circle(spec)
    prof = trace_profile(m)
    lam = lambda_grid(m.n_samples)
    gap = 2.0 - prof["trace"].real
    idx = np.arange(1, 5)
    slope = np.polyfit(np.log(np.abs(lam[idx] - 1.0)), np.log(gap[idx]), 1)[0]
    assert slope >= 3.5


def test_find_scale_constant_specs():
    out = find_scale(CONST)
    assert out["tau0"] == 1.0
    assert out["verdict_at_half"]

    out = find_scale(LaurentSpec.from_coeffs({0: 1.0}), n_samples=64, n_modes=16)
    assert abs(out["tau0"] - 1 / 16) < 0.1 * (1 / 16)


def test_find_scale_nodoid():
    out = find_scale(symmetric_spec(2, -4 / 32, 1 / 100), n_samples=64, n_modes=16)
    assert 0.0 < out["tau0"] <= 1.0
    assert out["trace_range"][1] <= 2.0 + 1e-9


def test_find_scale_requires_symmetry():
    asym = LaurentSpec.from_coeffs({0: 1 / 32, 3: 1 / 50, -3: 1 / 50, 4: 1 / 50})
    with pytest.raises(MonodromyError):
        find_scale(asym)
    out = find_scale(asym, force=True, n_samples=64, n_modes=16)
    assert 0.0 < out["tau0"] <= 1.0


def test_weight_preservation_trivial():
    spec = symmetric_spec(2, 1 / 32, 1 / 100)
    m = monodromy_circle(spec)
    a = extract_A(lambda_jet_at_one(spec), m)
    out = weight_preservation_check(a, m, -1)
    assert out["a2_squared_deviation"] < 1e-6
    assert out["weight_deviation"] < 1e-6


def test_analyze_monodromy_report(tmp_path):
    report, m = analyze_monodromy(symmetric_spec(2, 1 / 32, 1 / 1000))
    assert report.sign == -1
    assert max(report.closing_residuals) <= 1e-8
    assert report.unitarizable
    assert abs(np.trace(report.a_matrix)) <= 1e-8
    assert abs(report.weight - report.weight_closed_form) < 1e-4
    assert report.fit_deviation < 1e-6
    jpath = tmp_path / "report.json"
    cpath = tmp_path / "trace.csv"
    report.write_json(jpath)
    report.write_trace_csv(cpath)
    import json
    data = json.loads(jpath.read_text())
    assert data["sign"] == -1
    assert data["unitarizable"] is True
    lines = cpath.read_text().strip().splitlines()
    assert lines[0] == "theta,re_trace,im_trace"
    assert len(lines) == 1 + m.n_samples
