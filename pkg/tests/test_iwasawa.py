"""Unitary/positive splitting of matrix loops and the immersion formula."""

import numpy as np
import pytest

from cmc_cylinders.flow import PathSpec, integrate
from cmc_cylinders.iwasawa import (IwasawaError, iwasawa_factor, sym_point)
from cmc_cylinders.loops import MatrixLoop, lambda_grid
from cmc_cylinders.potential import symmetric_spec

L = 256
N = 64


def rotation(angle):
    return np.array([[np.cos(angle), np.sin(angle)],
                     [-np.sin(angle), np.cos(angle)]], dtype=complex)


def shear_loop():
    lam = lambda_grid(L)
    samples = np.zeros((L, 2, 2), dtype=complex)
    samples[:, 0, 0] = 1.0
    samples[:, 0, 1] = 1.0 / lam
    samples[:, 1, 1] = 1.0
    return MatrixLoop.from_samples(samples, N)


def test_unitary_input_keeps_frame():
    psi = MatrixLoop.constant(rotation(0.7), L, N)
    fac = iwasawa_factor(psi)
    assert np.max(np.abs(fac.positive.samples - np.eye(2))) <= 1e-9
    assert np.max(np.abs(fac.frame.samples - rotation(0.7))) <= 1e-9
    assert fac.unitarity_residual <= 1e-10


def test_diagonal_stretch_goes_to_positive_factor():
    psi = MatrixLoop.constant(np.diag([2.0, 0.5]), L, N)
    fac = iwasawa_factor(psi)
    assert np.max(np.abs(fac.positive.samples - np.diag([2.0, 0.5]))) <= 1e-9
    assert np.max(np.abs(fac.frame.samples - np.eye(2))) <= 1e-9


def test_shear_loop_known_factor():
    # psi = [[1, 1/lambda], [0, 1]] has positive factor
    # B = [[1/sqrt(2), 0], [lambda/sqrt(2), sqrt(2)]]
    fac = iwasawa_factor(shear_loop())
    b = fac.positive
    r = 2.0 ** -0.5
    assert abs(b.mode(0)[0, 0] - r) <= 1e-8
    assert abs(b.mode(0)[1, 1] - 2.0 ** 0.5) <= 1e-8
    assert abs(b.mode(0)[0, 1]) <= 1e-8
    assert abs(b.mode(1)[1, 0] - r) <= 1e-8
    assert fac.unitarity_residual <= 1e-8
    assert fac.residual <= 1e-8
    assert fac.factor_residual <= 1e-8
    assert b.negative_energy() <= 1e-12


def _dress_loop():
    """Unit-determinant analytic loop with positive-diagonal constant term."""
    lam = lambda_grid(L)
    shear_up = np.zeros((L, 2, 2), dtype=complex)
    shear_up[:, 0, 0] = 1.0
    shear_up[:, 1, 1] = 1.0
    shear_up[:, 0, 1] = 0.3 * lam + 0.2 * lam ** 2
    shear_lo = np.zeros((L, 2, 2), dtype=complex)
    shear_lo[:, 0, 0] = 1.0
    shear_lo[:, 1, 1] = 1.0
    shear_lo[:, 1, 0] = 0.25 * lam
    stretch = np.diag([1.2, 1.0 / 1.2]).astype(complex)
    samples = shear_up @ stretch @ shear_lo
    return MatrixLoop.from_samples(samples, N)


def test_frame_invariant_under_analytic_dressing():
    psi = shear_loop()
    dressed = psi @ _dress_loop()
    f_ref = iwasawa_factor(psi).frame
    f_new = iwasawa_factor(dressed).frame
    assert np.max(np.abs(f_new.samples - f_ref.samples)) <= 1e-8


def test_constant_rotation_covariance():
    psi = shear_loop()
    u = rotation(0.4)
    fac_ref = iwasawa_factor(psi)
    fac_rot = iwasawa_factor(MatrixLoop.constant(u, L, N) @ psi)
    assert np.max(np.abs(fac_rot.frame.samples
                         - u @ fac_ref.frame.samples)) <= 1e-8
    assert np.max(np.abs(fac_rot.positive.samples
                         - fac_ref.positive.samples)) <= 1e-8


def test_integrated_frame_factorizes():
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 1000.0, tau=1.0)
    field = integrate(spec, PathSpec.radial(1.0, np.exp(0.5)), lambda_grid(L))
    psi = MatrixLoop.from_samples(field.end, N)
    fac = iwasawa_factor(psi)
    assert fac.unitarity_residual <= 1e-7
    assert fac.residual <= 1e-7
    assert fac.positive.negative_energy() <= 1e-10
    b0 = fac.positive.mode(0)
    assert abs(b0[1, 0]) <= 1e-10
    assert b0[0, 0].real > 0.0 and b0[1, 1].real > 0.0
    assert abs(b0[0, 0].imag) <= 1e-10 and abs(b0[1, 1].imag) <= 1e-10


def test_sym_point_diagonal_power_frame():
    lam = lambda_grid(L)
    samples = np.zeros((L, 2, 2), dtype=complex)
    samples[:, 0, 0] = lam
    samples[:, 1, 1] = 1.0 / lam
    frame = MatrixLoop.from_samples(samples, N)
    point = sym_point(frame)
    assert np.allclose(point.x, [0.0, 0.0, 2.0], atol=1e-10)
    assert point.projection_residual <= 1e-10
    assert np.max(np.abs(point.psi + point.psi.conj().T)) <= 1e-12
    assert abs(np.trace(point.psi)) <= 1e-12


def test_rejects_determinant_drift():
    with pytest.raises(IwasawaError):
        iwasawa_factor(MatrixLoop.constant(np.diag([2.0, 1.0]), L, N))


def test_sym_point_rejects_nonunitary_frame():
    with pytest.raises(IwasawaError):
        sym_point(MatrixLoop.constant(np.diag([2.0, 0.5]), L, N))


def test_sym_point_rotation_preserves_length():
    lam = lambda_grid(L)
    samples = np.zeros((L, 2, 2), dtype=complex)
    samples[:, 0, 0] = lam
    samples[:, 1, 1] = 1.0 / lam
    frame = MatrixLoop.from_samples(samples, N)
    u = np.array([[np.cos(0.3), np.sin(0.3) * 1j],
                  [np.sin(0.3) * 1j, np.cos(0.3)]], dtype=complex)
    rotated = MatrixLoop.constant(u, L, N) @ frame
    p_ref = sym_point(frame)
    p_rot = sym_point(rotated)
    assert abs(np.linalg.norm(p_rot.x) - np.linalg.norm(p_ref.x)) <= 1e-9
