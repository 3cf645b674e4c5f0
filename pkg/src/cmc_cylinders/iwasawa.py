"""Loop group factorization and the immersion formula.

An invertible matrix loop Psi splits as Psi = F B with F unitary on the
circle and B analytic in the disk (nonnegative modes) with B(0) upper
triangular with positive diagonal.  Since Psi* Psi = B* B, the positive
factor is the matrix spectral factor of the symbol Psi* Psi, and
F = Psi B^-1 inherits unitarity from the factorization identity.  Surface
points come from the frame's angular derivative at lambda = 1 (Sym-type
formula): the tangent object psi = F'(1) F(1)^-1 lies in the trace-free
skew-hermitian matrices, identified with R^3.
"""

import numpy as np
from dataclasses import dataclass

from .loops import (LoopError, MatrixLoop, SymbolNotPositiveError,
                    matrix_spectral_factor)


class IwasawaError(Exception):
    """Factorization or immersion-formula failure."""


@dataclass(frozen=True)
class IwasawaFactors:
    """Unitary frame, positive factor, and the measured split quality."""

    frame: MatrixLoop
    positive: MatrixLoop
    residual: float             # max operator-norm defect of F B against Psi
    factor_residual: float      # relative defect of B*B against Psi*Psi
    unitarity_residual: float   # max operator-norm defect of F F* from id


def _max_norm(samples):
    return float(np.max(np.linalg.norm(samples, ord=2, axis=(-2, -1))))


def _factor_once(psi, tol_fact, tol_unit, section, eps_pos):
    h = psi.star() @ psi
    try:
        b = matrix_spectral_factor(h, tol_fact=tol_fact, eps_pos=eps_pos,
                                   section=section)
    except (LoopError, SymbolNotPositiveError) as exc:
        raise IwasawaError("positive factor construction failed: %s" % exc)

    f = psi @ b.inv()
    unit_res = float(f.unitarity_residual())
    if unit_res > tol_unit:
        raise IwasawaError(
            "factorization failed: frame unitarity residual %.3e > %.3e"
            % (unit_res, tol_unit))
    rec_res = _max_norm((f @ b).samples - psi.samples)
    if rec_res > tol_fact * max(1.0, _max_norm(psi.samples)):
        raise IwasawaError(
            "factorization failed: reconstruction residual %.3e" % rec_res)
    herm = np.conj(np.swapaxes(b.samples, -1, -2))
    fact_res = _max_norm(herm @ b.samples - h.samples) \
        / max(1.0, _max_norm(h.samples))
    return IwasawaFactors(frame=f, positive=b, residual=rec_res,
                          factor_residual=fact_res,
                          unitarity_residual=unit_res)


def iwasawa_factor(psi, tol_fact=1e-7, tol_unit=1e-7, section=None,
                   max_escalations=2, eps_pos=1e-10):
    """Split a matrix loop as psi = F B, unitary times positive-analytic.

    B comes from the spectral factorization of psi* psi, so it has
    nonnegative modes only and B(0) is upper triangular with positive
    diagonal; F = psi B^-1.  When the reconstruction or unitarity residual
    stays above tolerance the mode cutoff is doubled (up to the sample
    Nyquist limit, at most max_escalations times) and the split is redone.
    The input must have unit determinant on the circle.
    """
    det_res = psi.det_residual()
    if det_res > 1e-8:
        raise IwasawaError(
            "input loop determinant drifts from one by %.3e" % det_res)
    n_cap = psi.n_samples // 2
    n_try = psi.n_modes
    last_exc = None
    for _ in range(max_escalations + 1):
        cand = psi if n_try == psi.n_modes \
            else MatrixLoop.from_samples(psi.samples, n_try)
        try:
            return _factor_once(cand, tol_fact, tol_unit, section, eps_pos)
        except IwasawaError as exc:
            last_exc = exc
            if n_try >= n_cap:
                break
            n_try = min(2 * n_try, n_cap)
    raise last_exc


@dataclass(frozen=True)
class ImmersionPoint:
    """One surface point with its tangent matrix and projection quality."""

    x: np.ndarray                # point in R^3
    psi: np.ndarray              # trace-free skew-hermitian tangent matrix
    projection_residual: float   # how far the raw tangent was from su(2)


def sym_point(frame, tol_unit=1e-6):
    """Immersion point from a unitary frame via the lambda = 1 derivative.

    With F(e^{i theta}) = sum_k F_k e^{i k theta} the angular derivative at
    lambda = 1 is sum_k i k F_k.  The raw tangent F'(1) F(1)^-1 is projected
    onto the trace-free skew-hermitian matrices; the projection distance
    measures how far the frame is from unitary and must stay below
    tol_unit.  Coordinates: x1 = -i (psi12 + psi21), x2 = psi21 - psi12,
    x3 = -2 i psi11.
    """
    f1 = frame.samples[0]
    if np.linalg.norm(f1 @ f1.conj().T - np.eye(2), 2) > tol_unit:
        raise IwasawaError("frame not unitary enough at lambda = 1")
    nm = frame.n_modes
    k = np.arange(-nm, nm + 1)
    dtheta = np.einsum("k,kij->ij", 1j * k.astype(complex), frame.modes)
    raw = dtheta @ np.linalg.inv(f1)
    skew = 0.5 * (raw - raw.conj().T)
    skew = skew - 0.5 * np.trace(skew) * np.eye(2)
    proj = float(np.linalg.norm(raw - skew, 2))
    if proj > tol_unit:
        raise IwasawaError(
            "frame not unitary enough for the immersion formula: "
            "projection residual %.3e" % proj)
    x = np.array([
        (-1j * (skew[0, 1] + skew[1, 0])).real,
        (skew[1, 0] - skew[0, 1]).real,
        (-2j * skew[0, 0]).real,
    ])
    return ImmersionPoint(x=x, psi=skew, projection_residual=proj)
