"""Diagonal unitarization: pointwise test, builder routes, verification."""

import numpy as np
import pytest

from cmc_cylinders.flow import lambda_jet_at_one, monodromy_circle
from cmc_cylinders.loops import MatrixLoop, lambda_grid
from cmc_cylinders.monodromy import (extract_A, find_scale,
                                     weight_preservation_check)
from cmc_cylinders.potential import symmetric_spec
from cmc_cylinders.unitarize import (DiagonalUnitarizer, UnitarizeError,
                                     build_unitarizer,
                                     delta_unitarizable_test,
                                     verify_r_unitary)

L = 256
N = 64


def conjugated_rotation():
    # a rotation by angle 1 conjugated by diag(sqrt(2), 1/sqrt(2)):
    # real trace in (-2, 2), real diagonal, b c = -sin^2(1) < 0
    mat = np.array([[np.cos(1.0), 2.0 * np.sin(1.0)],
                    [-0.5 * np.sin(1.0), np.cos(1.0)]], dtype=complex)
    return MatrixLoop.constant(mat, L, N)


def test_delta_test_passes_conjugated_rotation():
    report = delta_unitarizable_test(conjugated_rotation())
    assert report["verdict"]
    assert report["sign"] == 1.0
    assert report["fail_fraction"] == 0.0
    assert not report["trivially_unitary"].any()


def test_delta_test_all_trivial_for_minus_identity():
    m = MatrixLoop.constant(-np.eye(2), L, N)
    report = delta_unitarizable_test(m)
    assert report["verdict"]
    assert report["trivially_unitary"].all()
    assert report["sign"] == -1.0


def test_delta_test_rejects_hyperbolic():
    m = MatrixLoop.constant(np.diag([2.0, 0.5]), L, N)
    with pytest.raises(UnitarizeError):
        delta_unitarizable_test(m)
    report = delta_unitarizable_test(m, raise_on_fail=False)
    assert not report["verdict"]
    assert report["fail_fraction"] == 1.0


def test_build_constant_conjugated_rotation():
    m = conjugated_rotation()
    unit = build_unitarizer(m)
    # |v|^4 = |c|^2 / (-b c) = 1/4, and the ratio is constant, so v = 2^-1/2
    assert np.allclose(unit.v.samples, 2.0 ** -0.5, atol=1e-12)
    rotation = np.array([[np.cos(1.0), np.sin(1.0)],
                         [-np.sin(1.0), np.cos(1.0)]])
    u = unit.apply(m)
    assert np.max(np.abs(u.samples - rotation)) <= 1e-10
    assert unit.residual <= 1e-10
    assert unit.singular_indices == ()
    assert not unit.trivial


def test_build_leaves_unitary_loop_alone():
    mat = np.array([[np.cos(1.0), np.sin(1.0)],
                    [-np.sin(1.0), np.cos(1.0)]], dtype=complex)
    unit = build_unitarizer(MatrixLoop.constant(mat, L, N))
    assert np.allclose(unit.v.samples, 1.0, atol=1e-12)


def test_build_trivial_for_minus_identity():
    m = MatrixLoop.constant(-np.eye(2), L, N)
    unit = build_unitarizer(m)
    assert unit.trivial
    assert np.allclose(unit.v.samples, 1.0)
    assert np.max(np.abs(unit.apply(m).samples - m.samples)) == 0.0


def test_build_rejects_positive_offdiagonal_product():
    # passes the pointwise diagonal/trace checks but has b c > 0
    mat = np.array([[np.cos(1.0), np.sin(1.0)],
                    [np.sin(1.0), np.cos(1.0)]], dtype=complex)
    with pytest.raises(UnitarizeError):
        build_unitarizer(MatrixLoop.constant(mat, L, N))


@pytest.fixture(scope="module")
def figure_monodromy():
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 1000.0, tau=1.0)
    tau0 = find_scale(spec)["tau0"]
    spec0 = spec.with_tau(tau0)
    return spec0, monodromy_circle(spec0)


def test_build_figure_spec_unitarity(figure_monodromy):
    _, m = figure_monodromy
    unit = build_unitarizer(m)
    assert unit.residual <= 1e-6
    assert len(unit.singular_indices) <= 0.05 * L
    assert unit.v.negative_energy() <= 1e-10
    v0 = unit.v.mode(0)
    assert v0.real > 0.0
    assert abs(v0.imag) <= 1e-12 * abs(v0)


def _linear_coefficient(u_loop):
    """Fit the sample cloud near lambda = 1 and return the degree-1 term."""
    lam = lambda_grid(u_loop.n_samples)
    order = np.argsort(np.abs(lam - 1.0))
    idx = order[1:9]  # skip lambda = 1 itself
    x = lam[idx] - 1.0
    basis = np.stack([x ** d for d in range(1, 8)], axis=1)
    scale = np.abs(basis).max(axis=0)
    coef = np.zeros((7, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            sol, *_ = np.linalg.lstsq(basis / scale,
                                      u_loop.samples[idx, i, j]
                                      - u_loop.samples[0, i, j], rcond=None)
            coef[:, i, j] = sol / scale
    return coef[0]


def test_unitarized_loop_still_closes(figure_monodromy):
    _, m = figure_monodromy
    unit = build_unitarizer(m)
    u = unit.apply(m)
    assert np.max(np.abs(u.samples[0] + np.eye(2))) <= 1e-6
    assert np.max(np.abs(_linear_coefficient(u))) <= 1e-6


def test_unitarization_preserves_weight(figure_monodromy):
    spec0, m = figure_monodromy
    jet = lambda_jet_at_one(spec0)
    a = extract_A(jet, m)
    unit = build_unitarizer(m)
    report = weight_preservation_check(a, unit.apply(m), -1)
    assert report["weight_deviation"] <= 1e-5
    assert report["a2_squared_deviation"] <= 1e-5


def test_dual_route_agreement(figure_monodromy):
    _, m = figure_monodromy
    v1 = build_unitarizer(m, method="ratio").v.samples
    v2 = build_unitarizer(m, method="factor").v.samples
    ratio = v1 / v2
    mean = ratio.mean()
    assert np.max(np.abs(ratio - mean)) <= 1e-8
    assert abs(abs(mean) - 1.0) <= 1e-7
    assert abs(mean - 1.0) <= 1e-6  # both routes pin v(0) > 0


def test_v_depends_only_on_entry_products(figure_monodromy):
    _, m = figure_monodromy
    phase = np.exp(0.7j)
    gauge = np.diag([phase, np.conj(phase)])
    twisted = MatrixLoop.from_samples(
        gauge @ m.samples @ np.conj(gauge), m.n_modes)
    v_ref = build_unitarizer(m).v.samples
    v_twisted = build_unitarizer(twisted).v.samples
    assert np.max(np.abs(v_twisted - v_ref)) <= 1e-9


def test_verify_r_unitary_values():
    eye = MatrixLoop.identity(L, N)
    rep = verify_r_unitary(eye)
    assert rep["unitarity_residual"] <= 1e-12
    assert rep["star_vs_inverse_modes"] <= 1e-12

    stretch = MatrixLoop.constant(np.diag([2.0, 0.5]), L, N)
    rep = verify_r_unitary(stretch)
    assert abs(rep["unitarity_residual"] - 3.0) <= 1e-12

    rep = verify_r_unitary(conjugated_rotation())
    assert rep["unitarity_residual"] > 0.5


def test_serialization_round_trip(figure_monodromy):
    _, m = figure_monodromy
    unit = build_unitarizer(m)
    data = unit.to_json_dict()
    back = DiagonalUnitarizer.from_json_dict(data)
    assert np.allclose(back.v.samples, unit.v.samples, atol=1e-12)
    assert back.singular_indices == unit.singular_indices
    assert back.method == unit.method
