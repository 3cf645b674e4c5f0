"""Diagonal unitarization of monodromy loops.

A loop M on the unit circle with unit determinant, real trace strictly
inside (-2, 2) and M11 = conj(M22) is conjugate, sample by sample, to a
unitary matrix by a diagonal loop V = diag(v, 1/v).  Writing b = M12 and
c = M21, conjugation scales the off-diagonal entries by v^2 and 1/v^2, and
unitarity of V M V^-1 reduces to the scalar condition

    |v|^4 = |c|^2 / (-b c)      on |lambda| = 1,

whose right-hand side is real and positive exactly where the pointwise
criteria hold.  The analytic v with v(0) > 0 comes from the nonnegative-mode
half of the logarithm of that ratio; it is unique up to a constant phase.

For a closed monodromy both off-diagonal entries vanish to second order at
lambda = 1, so the ratio has a removable singularity there.  The builder
removes it exactly by deflating the mode polynomials of b and c by
(lambda - 1)^2 before dividing (the "ratio" route).  The alternative
"factor" route follows the spectral-factorization path: it factors the two
positive symbols |c|^2 and -b c on a half-step-rotated grid and subtracts
their log halves mode by mode, which cancels the shared singular content.
The routes agree up to a constant phase and serve as mutual checks.
"""

import numpy as np
from dataclasses import dataclass

from .loops import (LoopError, MatrixLoop, ScalarLoop, _analytic_split,
                    _eval_fft_modes, lambda_grid, scalar_spectral_factor)

TRIVIAL_TOL = 1e-8      # a sample this close to +-id passes trivially
CONJ_TOL = 1e-8         # tolerance for M11 = conj(M22) and Im(trace)
FAIL_FRACTION = 0.05    # more failing samples than this is fatal
RATIO_IM_TOL = 1e-6     # relative imaginary part allowed in |c|^2 / (-b c)
CLOSED_TOL = 1e-6       # off-diagonals below this (relative) at lambda = 1
                        # mean the loop closes and carries a double zero


class UnitarizeError(Exception):
    """Loop cannot be conjugated to a unitary loop by a diagonal gauge."""


def delta_unitarizable_test(m, conj_tol=CONJ_TOL, raise_on_fail=True):
    """Pointwise test for conjugacy to a unitary loop by a diagonal loop.

    Checks, sample by sample: trace real and strictly inside (-2, 2) after
    the global sign, diagonal entries conjugate to each other, and
    Re(M11 M22) < 1 (for unit determinant this is b c < 0).  Samples equal
    to plus or minus the identity pass trivially and are recorded as such.
    Raises when more than 5% of samples fail, unless raise_on_fail is false.
    """
    samples = m.samples
    n = samples.shape[0]
    eye = np.eye(2)
    dev = np.minimum(np.linalg.norm(samples - eye, axis=(1, 2)),
                     np.linalg.norm(samples + eye, axis=(1, 2)))
    trivially_unitary = dev <= TRIVIAL_TOL

    tr = samples[:, 0, 0] + samples[:, 1, 1]
    sign = -1.0 if tr[0].real < 0.0 else 1.0
    str_real = sign * tr.real
    trace_ok = ((np.abs(tr.imag) <= conj_tol)
                & (str_real > -2.0) & (str_real < 2.0))
    conj_ok = np.abs(samples[:, 0, 0] - np.conj(samples[:, 1, 1])) <= conj_tol
    product_ok = (samples[:, 0, 0] * samples[:, 1, 1]).real < 1.0

    failures = np.nonzero(~(trivially_unitary
                            | (trace_ok & conj_ok & product_ok)))[0]
    fraction = failures.size / float(n)
    report = {
        "verdict": bool(fraction <= FAIL_FRACTION),
        "sign": sign,
        "trace_ok": trace_ok,
        "conj_ok": conj_ok,
        "product_ok": product_ok,
        "trivially_unitary": trivially_unitary,
        "failures": failures,
        "fail_fraction": float(fraction),
    }
    if raise_on_fail and not report["verdict"]:
        raise UnitarizeError(
            "not Delta-unitarizable: %.1f%% of samples fail the pointwise test"
            % (100.0 * fraction))
    return report


def _deflate_once(coeffs):
    """Synthetic division of an ascending-coefficient polynomial by (x - 1)."""
    q = np.zeros(coeffs.shape[0] - 1, dtype=complex)
    acc = 0.0 + 0.0j
    for mdeg in range(coeffs.shape[0] - 1, 0, -1):
        acc = acc + coeffs[mdeg]
        q[mdeg - 1] = acc
    rem = acc + coeffs[0]
    return q, rem


def _deflate_at_one(loop, order=2):
    """Remove a zero of the given order at lambda = 1 from a scalar loop.

    The modes k in [-N, N] are lambda^-N times a polynomial; dividing that
    polynomial by (lambda - 1) leaves the lambda^-N prefactor untouched, so
    each pass shortens the coefficient array by one without shifting its
    base power.  Returns the deflated loop and the relative remainders; a
    large remainder means the zero is not actually there.
    """
    n = loop.n_samples
    scale = float(np.max(np.abs(loop.samples)))
    if scale == 0.0:
        raise UnitarizeError("off-diagonal entry vanishes identically")
    coeffs = loop.modes.copy()
    rems = []
    for _ in range(order):
        coeffs, rem = _deflate_once(coeffs)
        rems.append(abs(rem) / scale)
    padded = np.zeros(2 * loop.n_modes + 1, dtype=complex)
    padded[:coeffs.shape[0]] = coeffs
    return ScalarLoop.from_modes(padded, n), rems


def _bridge_log(values, good):
    """Fill the non-good samples of a periodic sequence by local cubic fits."""
    n = values.shape[0]
    theta = 2.0 * np.pi * np.arange(n) / n
    good_idx = np.nonzero(good)[0]
    if good_idx.size < 8:
        raise UnitarizeError("too few usable samples to bridge the ratio")
    out = values.copy()
    for j in np.nonzero(~good)[0]:
        d = np.angle(np.exp(1j * (theta[good_idx] - theta[j])))
        near = np.argsort(np.abs(d))[:8]
        coef = np.polynomial.polynomial.polyfit(d[near], values[good_idx[near]], 3)
        out[j] = coef[0]
    return out


def _unitarity_per_sample(samples):
    g = samples @ np.conj(np.swapaxes(samples, -1, -2)) - np.eye(2)
    return np.linalg.norm(g, ord=2, axis=(-2, -1))


@dataclass(frozen=True)
class DiagonalUnitarizer:
    """Diagonal gauge V = diag(v, 1/v) with v analytic and v(0) > 0.

    singular_indices lists the samples where the ratio defining v was not
    directly usable and was bridged by interpolation; residual is the worst
    unitarity defect of V M V^-1 over the remaining samples.
    """

    v: ScalarLoop
    singular_indices: tuple
    residual: float
    trivial: bool
    method: str

    def matrix_loop(self):
        n = self.v.n_samples
        samples = np.zeros((n, 2, 2), dtype=complex)
        samples[:, 0, 0] = self.v.samples
        samples[:, 1, 1] = 1.0 / self.v.samples
        return MatrixLoop.from_samples(samples, self.v.n_modes)

    def apply(self, m):
        """Conjugate a matrix loop: V M V^-1, sample by sample."""
        v2 = self.v.samples ** 2
        out = m.samples.copy()
        out[:, 0, 1] = m.samples[:, 0, 1] * v2
        out[:, 1, 0] = m.samples[:, 1, 0] / v2
        return MatrixLoop.from_samples(out, m.n_modes)

    def to_json_dict(self):
        return {
            "n_samples": int(self.v.n_samples),
            "n_modes": int(self.v.n_modes),
            "v_modes": self.v.to_triples(),
            "singular_indices": [int(i) for i in self.singular_indices],
            "residual": float(self.residual),
            "trivial": bool(self.trivial),
            "method": self.method,
        }

    @staticmethod
    def from_json_dict(data):
        v = ScalarLoop.from_triples(data["v_modes"], int(data["n_samples"]),
                                    int(data["n_modes"]))
        return DiagonalUnitarizer(
            v=v,
            singular_indices=tuple(int(i) for i in data["singular_indices"]),
            residual=float(data["residual"]),
            trivial=bool(data["trivial"]),
            method=str(data["method"]),
        )


def build_unitarizer(m, eps_pos=1e-10, method="ratio", n_modes=None,
                     conj_tol=CONJ_TOL):
    """Construct the diagonal loop V = diag(v, 1/v) unitarizing M.

    Runs the pointwise test first (raising on a positive-measure failure)
    and detects the trivially unitary case M = +-id.  When the off-diagonal
    entries vanish at lambda = 1 their double zero is removed exactly by
    mode-polynomial deflation; v is then built from |c|^2 / (-b c) by the
    requested route:

      * "ratio":  divide the deflated entries on the sample grid and split
        the logarithm of the result into its analytic half.
      * "factor": spectrally factor the symbols |c|^2 and -b c on the
        half-step grid and subtract the log halves mode by mode.

    Isolated samples where the ratio is unusable (below the eps_pos floor
    or measurably nonreal) are recorded as singular and bridged by local
    interpolation of the log ratio; more than 5% of them is an error.
    """
    report = delta_unitarizable_test(m, conj_tol=conj_tol)
    n = m.n_samples
    if n_modes is None:
        n_modes = m.n_modes

    if bool(np.all(report["trivially_unitary"])):
        v = ScalarLoop.constant(1.0, n, n_modes)
        return DiagonalUnitarizer(
            v=v, singular_indices=(), residual=float(m.unitarity_residual()),
            trivial=True, method="trivial")

    b_loop = m.entry(0, 1)
    c_loop = m.entry(1, 0)
    bscale = float(np.max(np.abs(b_loop.samples)))
    cscale = float(np.max(np.abs(c_loop.samples)))
    if bscale == 0.0 or cscale == 0.0:
        raise UnitarizeError(
            "q-symbol degenerate: an off-diagonal entry vanishes identically")

    b_closed = abs(b_loop.samples[0]) <= CLOSED_TOL * bscale
    c_closed = abs(c_loop.samples[0]) <= CLOSED_TOL * cscale
    if b_closed != c_closed:
        raise UnitarizeError(
            "off-diagonal entries do not vanish together at lambda = 1")
    zero_order = 2 if b_closed else 0
    if zero_order:
        bt, b_rems = _deflate_at_one(b_loop, zero_order)
        ct, c_rems = _deflate_at_one(c_loop, zero_order)
        if max(b_rems) > 1e-4 or max(c_rems) > 1e-4:
            raise UnitarizeError(
                "off-diagonal entries vanish at lambda = 1 but not to second "
                "order; deflation remainders %.2e / %.2e"
                % (max(b_rems), max(c_rems)))
    else:
        bt, ct = b_loop, c_loop

    # rho = |c|^2 / (-b c) = -conj(c)/b.  On the circle
    # conj((lambda-1)^2) = (lambda-1)^2 / lambda^2, so the deflated zero
    # factors cancel and only a lambda^2 phase survives in the denominator.
    lam = lambda_grid(n)
    btv = bt.samples
    ctv = ct.samples
    den = btv * lam ** zero_order
    small = ((np.abs(ctv) <= eps_pos * np.max(np.abs(ctv)))
             | (np.abs(den) <= eps_pos * np.max(np.abs(den))))
    rho = np.zeros(n, dtype=complex)
    rho[~small] = -np.conj(ctv[~small]) / den[~small]

    usable = ~small
    if np.count_nonzero(usable) < 8:
        raise UnitarizeError("q-symbol degenerate: ratio unusable almost "
                             "everywhere")
    ang = np.unwrap(np.angle(rho[usable]))
    winding = int(np.rint((ang[-1] - ang[0]) / (2.0 * np.pi)))
    if winding != 0:
        raise UnitarizeError(
            "branch obstruction: the unitarizing ratio winds %d times around "
            "the origin" % winding)
    nonreal = usable & ((np.abs(rho.imag) > RATIO_IM_TOL * np.abs(rho))
                        | (rho.real <= 0.0))
    singular = small | nonreal
    frac = np.count_nonzero(singular) / float(n)
    if frac > FAIL_FRACTION:
        raise UnitarizeError(
            "q-symbol degenerate: ratio not positive on %.1f%% of samples"
            % (100.0 * frac))
    good = ~singular

    if method == "ratio":
        log_rho = np.zeros(n, dtype=float)
        log_rho[good] = np.log(rho.real[good])
        log_rho = _bridge_log(log_rho, good)
        half = _analytic_split(log_rho.astype(complex))
        v_samples = np.exp(0.5 * np.fft.ifft(half * n))
    elif method == "factor":
        phase = np.pi / n
        lam_j = np.exp(1j * (2.0 * np.pi * np.arange(n) / n + phase))
        zf = (lam_j - 1.0) ** zero_order
        bj = bt.at(lam_j) * zf
        cj = ct.at(lam_j) * zf
        wp_j = np.abs(cj) ** 2
        wq_j = (-bj * cj).real
        if np.min(wp_j) <= 0.0 or np.min(wq_j) <= 0.0:
            raise UnitarizeError(
                "q-symbol degenerate: symbol not positive between grid points")
        bv = b_loop.samples
        cv = c_loop.samples
        wp = ScalarLoop.from_samples(np.abs(cv) ** 2, n // 2)
        wq = ScalarLoop.from_samples((-bv * cv).real, n // 2)
        _, hp = scalar_spectral_factor(wp, jitter=True, jittered_values=wp_j,
                                       eps_pos=eps_pos, return_log=True)
        _, hq = scalar_spectral_factor(wq, jitter=True, jittered_values=wq_j,
                                       eps_pos=eps_pos, return_log=True)
        v_samples = np.exp(0.5 * _eval_fft_modes(hp - hq, lam))
    else:
        raise LoopError("unknown unitarizer method %r" % (method,))

    v_loop = ScalarLoop.from_samples(v_samples, n_modes)
    v0 = complex(v_loop.mode(0))
    if v0 == 0.0:
        raise UnitarizeError("unitarizer has no constant mode to normalize")
    v_loop = ScalarLoop.from_samples(v_samples * np.conj(v0 / abs(v0)), n_modes)

    unit = DiagonalUnitarizer(v=v_loop, singular_indices=tuple(),
                              residual=0.0, trivial=False, method=method)
    res = _unitarity_per_sample(unit.apply(m).samples)
    include = good & ~report["trivially_unitary"]
    residual = float(np.max(res[include])) if np.any(include) else 0.0
    return DiagonalUnitarizer(
        v=v_loop,
        singular_indices=tuple(int(i) for i in np.nonzero(singular)[0]),
        residual=residual, trivial=False, method=method)


def verify_r_unitary(u):
    """Report how far a matrix loop is from being unitary on the circle.

    Returns the largest operator-norm deviation of U U^* from the identity
    over the sample grid, together with the worst mode mismatch between U^*
    and the pointwise inverse; both vanish exactly when U is unitary on the
    circle.
    """
    mismatch = float(np.max(np.abs(u.star().modes - u.inv().modes)))
    return {
        "unitarity_residual": float(u.unitarity_residual()),
        "star_vs_inverse_modes": mismatch,
    }
