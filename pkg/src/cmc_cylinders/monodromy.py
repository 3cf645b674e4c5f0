"""Monodromy analysis: closing, series coefficient, weight, and scale search.

For the cylinder potential the monodromy M(lambda) of one counterclockwise
traversal of |z| = 1 satisfies M(1) = s*id and M'(1) = 0 with a global sign
s (structurally s = -1 here: at lambda = 1 the coefficient matrix is constant
with eigenvalues +-1/2, so M(1) = exp(2 pi i Q(1)) = -id). The expansion

    s * M(lambda) = id + A (lambda-1)^2 + O((lambda-1)^3)

defines the series coefficient A, a traceless matrix whose determinant sets
the asymptotic weight of the ends. Two independent routes compute A: the
exact variational jet and a polynomial fit near lambda = 1; a residue/
quadrature oracle predicts it from the Laurent coefficients up to one global
constant that the quadrature pins down (the audit below measures -4 relative
to the printed residue normalization, consistently across all specs).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .flow import lambda_jet_at_one, monodromy_circle
from .loops import MatrixLoop, lambda_grid
from .potential import kappa as kappa_of
from .potential import validate_symmetry

__all__ = [
    "MonodromyError",
    "MonodromyReport",
    "AUDITED_SERIES_CONSTANT",
    "closing_check",
    "extract_A",
    "fit_series_coefficient",
    "p1_residue_oracle",
    "weight",
    "trace_profile",
    "find_scale",
    "weight_preservation_check",
    "analyze_monodromy",
]

# Measured ratio between the series coefficient A and the residue-formula
# prediction 2 pi i [[a0, -a_minus1], [a1, -a0]] conjugated by the gauge
# value at z = 1. The printed residue normalization is off by this factor;
# the quadrature oracle (p1_residue_oracle) re-measures it on every run.
AUDITED_SERIES_CONSTANT = -4.0

# gauge value at z = lambda = 1 entering the A prediction
_G1 = np.array([[1.0, -1.0], [0.5, 0.5]], dtype=complex)
_G1_INV = np.array([[0.5, 1.0], [-0.5, 1.0]], dtype=complex)

TRACE_SLACK = 1e-9
IM_TRACE_TOL = 1e-8


class MonodromyError(RuntimeError):
    pass


def _norm2(mat):
    return float(np.linalg.norm(mat, ord=2))


def closing_check(jet):
    """Sign and closing residuals from the lambda-jet at 1.

    Returns (s, ||M(1) - s id||, ||M'(1)||) with s in {+1, -1} minimizing the
    first residual. Raises when the residual exceeds 1e-6; that indicates an
    integrator or potential-form defect, not a property of the data.
    """
    m1, mp1, _ = jet
    res_plus = _norm2(m1 - np.eye(2))
    res_minus = _norm2(m1 + np.eye(2))
    s = 1 if res_plus <= res_minus else -1
    res = min(res_plus, res_minus)
    if res > 1e-6:
        raise MonodromyError("closing violated: ||M(1) -+ id|| = %.3e" % res)
    return s, res, _norm2(mp1)


def fit_series_coefficient(m_loop, sign, n_points=8, max_degree=7):
    """Least-squares estimate of A from monodromy samples near lambda = 1.

    Fits s*M(lambda_j) - id against powers (lambda_j - 1)^2 .. ^max_degree on
    the n_points grid samples nearest lambda = 1 (the sample at 1 itself is
    excluded: its basis row vanishes identically). The quadratic coefficient
    is returned. Powers above the quadratic absorb the series tail; degree 7
    pushes the truncation bias below 1e-6 on the standard grid.
    """
    if isinstance(m_loop, MatrixLoop):
        samples = m_loop.samples
        lam = lambda_grid(m_loop.n_samples)
    else:
        samples, lam = m_loop
    order = np.argsort(np.abs(lam - 1.0))
    idx = [j for j in order if abs(lam[j] - 1.0) > 1e-14][:n_points]
    u = lam[idx] - 1.0
    degrees = range(2, max_degree + 1)
    basis = np.stack([u ** d for d in degrees], axis=1)
    col = np.max(np.abs(basis), axis=0)
    rhs = (sign * samples[idx] - np.eye(2)).reshape(len(idx), 4)
    sol, _, _, _ = np.linalg.lstsq(basis / col, rhs, rcond=None)
    return (sol[0] / col[0]).reshape(2, 2)


def extract_A(jet, m_loop, fit_tol=1e-6):
    """Series coefficient A = s M''(1)/2, cross-validated against the fit route.

    The exact variational jet gives the value; an independent polynomial fit
    on the nearest grid samples must agree within fit_tol, otherwise the
    extraction is reported unstable rather than silently trusted.
    """
    s, _, _ = closing_check(jet)
    a_jet = s * jet[2] / 2.0
    a_fit = fit_series_coefficient(m_loop, s)
    dev = float(np.max(np.abs(a_jet - a_fit)))
    if dev > fit_tol:
        raise MonodromyError(
            "series extraction unstable: jet and fit differ by %.3e" % dev)
    return a_jet


def p1_residue_oracle(spec, n_quad=4096):
    """Period matrix of the gauged expansion integrand, two independent ways.

    The integrand is beta [[z, -z^2], [1, -z]] with beta = -4 tau f(z)/z^2 dz.
    Route one reads Laurent coefficients (residues); route two integrates by
    trapezoid over n_quad circle samples, which is spectrally exact for
    trigonometric polynomials. Also returns the predicted series coefficient
    A = -(1/4) g(1) P1 g(1)^-1 and the measured ratio against the printed
    normalization 2 pi i [[a0, -a_minus1],[a1, -a0]].
    """
    tau = spec.tau
    a0 = spec.coeff(0)
    am1 = spec.coeff(-1)
    ap1 = spec.coeff(1)
    residue = -8j * np.pi * tau * np.array([[a0, -am1], [ap1, -a0]], dtype=complex)

    theta = 2.0 * np.pi * np.arange(n_quad) / n_quad
    z = np.exp(1j * theta)
    beta = -4.0 * tau * spec.f(z) / z ** 2
    dz = 1j * z * (2.0 * np.pi / n_quad)
    kernel = np.empty((n_quad, 2, 2), dtype=complex)
    kernel[:, 0, 0] = z
    kernel[:, 0, 1] = -z ** 2
    kernel[:, 1, 0] = 1.0
    kernel[:, 1, 1] = -z
    quad = np.sum((beta * dz)[:, None, None] * kernel, axis=0)

    mismatch = float(np.max(np.abs(quad - residue)))
    if mismatch > 1e-9:
        raise MonodromyError(
            "residue and quadrature routes disagree by %.3e" % mismatch)

    a_predicted = -0.25 * (_G1 @ residue @ _G1_INV)
    printed = 2j * np.pi * tau * np.array([[a0, -am1], [ap1, -a0]], dtype=complex)
    scale = float(np.max(np.abs(printed)))
    if scale > 0.0:
        ratios = quad[np.abs(printed) > 1e-14 * scale] / printed[np.abs(printed) > 1e-14 * scale]
        constant = complex(np.median(ratios.real)) + 1j * float(np.median(ratios.imag))
    else:
        constant = None
    return {
        "residue": residue,
        "quadrature": quad,
        "mismatch": mismatch,
        "a_predicted": a_predicted,
        "constant_vs_printed": constant,
    }


def weight(a_matrix, spec=None):
    """Asymptotic weight from the measured series coefficient.

    det A = 4 pi^2 kappa in the audited normalization, so the weight
    (pi/2) sqrt(kappa) equals sqrt|det A| / 4. For symmetric specs the
    closed form from the Laurent coefficients is reported alongside.
    """
    det = complex(np.linalg.det(a_matrix))
    kappa_measured = abs(det) / (4.0 * np.pi ** 2)
    w = 0.5 * np.pi * np.sqrt(kappa_measured)
    out = {"weight": float(w), "kappa_measured": float(kappa_measured),
           "closed_form": None, "rel_deviation": None}
    if spec is not None:
        rep = validate_symmetry(spec)
        if rep["rho_ok"] and rep["sigma_ok"]:
            k = kappa_of(spec)
            if k > 0.0:
                cf = 0.5 * np.pi * np.sqrt(k)
                out["closed_form"] = float(cf)
                out["rel_deviation"] = float(abs(w - cf) / cf)
    return out


def trace_profile(m_loop, sign=None, slack=TRACE_SLACK, im_tol=IM_TRACE_TOL):
    """Per-sample signed trace with the unitarizability verdict.

    The verdict holds when every s*trace is real within im_tol and lies in
    [-2 - slack, 2 + slack]; lambda = 1 sits exactly on the boundary, hence
    the slack. The first failing sample index is reported when the verdict
    fails.
    """
    samples = m_loop.samples
    lam = lambda_grid(m_loop.n_samples)
    tr = samples[:, 0, 0] + samples[:, 1, 1]
    if sign is None:
        sign = 1 if tr[0].real > 0 else -1
    st = sign * tr
    re = st.real
    im_resid = np.abs(st.imag)
    in_range = (re >= -2.0 - slack) & (re <= 2.0 + slack)
    is_real = im_resid <= im_tol
    ok = in_range & is_real
    first_fail = None if bool(np.all(ok)) else int(np.argmin(ok))
    return {
        "sign": int(sign),
        "theta": np.angle(lam),
        "trace": st,
        "max_im_trace": float(np.max(im_resid)),
        "trace_range": (float(np.min(re)), float(np.max(re))),
        "unitarizable": bool(np.all(ok)),
        "first_failure": first_fail,
    }


def find_scale(spec, tau_min=1e-4, n_samples=256, n_modes=64, tol_ode=1e-11,
               force=False, max_iter=20, width=1e-3):
    """Largest scale tau in (0, 1] whose monodromy trace verdict passes.

    Bisection without a monotonicity assumption: the returned tau and tau/2
    are both explicitly verified and reported. Requires a symmetric spec with
    positive discriminant unless force is set (a rho-symmetric asymmetric
    spec still has a real trace, so the search remains meaningful).
    """
    if not force:
        rep = validate_symmetry(spec)
        if not (rep["rho_ok"] and rep["sigma_ok"]):
            raise MonodromyError("scale search requires a symmetric spec "
                                 "(pass force=True to override)")
        if kappa_of(spec.with_tau(1.0)) <= 0.0:
            raise MonodromyError("scale search requires positive kappa")

    evals = {}

    def verdict(tau):
        if tau not in evals:
            m = monodromy_circle(spec.with_tau(tau), n_samples=n_samples,
                                 n_modes=n_modes, tol_ode=tol_ode)
            evals[tau] = trace_profile(m)
        return evals[tau]

    if verdict(1.0)["unitarizable"]:
        tau0 = 1.0
    else:
        lo = None
        hi = 1.0
        t = 0.5
        last_prof = verdict(1.0)
        while t >= tau_min:
            prof = verdict(t)
            if prof["unitarizable"]:
                lo = t
                break
            hi = t
            last_prof = prof
            t /= 2.0
        if lo is None:
            raise MonodromyError(
                "no admissible scale found in range: trace range %s at the "
                "smallest probe" % (last_prof["trace_range"],))
        for _ in range(max_iter):
            if hi - lo < width:
                break
            mid = 0.5 * (lo + hi)
            if verdict(mid)["unitarizable"]:
                lo = mid
            else:
                hi = mid
        tau0 = lo

    prof0 = verdict(tau0)
    if not prof0["unitarizable"]:
        raise MonodromyError("scale search postcondition failed at tau0")
    prof_half = verdict(tau0 / 2.0)
    return {
        "tau0": float(tau0),
        "trace_range": prof0["trace_range"],
        "verdict_at_half": bool(prof_half["unitarizable"]),
        "n_evaluations": len(evals),
        "sign": prof0["sign"],
    }


def weight_preservation_check(a_matrix, u_loop, sign):
    """Deviation of the unitarized loop's series data from the original.

    The quadratic coefficients U2 and M2 of the two expansions are traceless,
    so their squares are -det * id; equality of squares is equality of
    determinants, hence of weights. U2 comes from the fit route (the
    unitarized loop exists only as samples).
    """
    a_u = fit_series_coefficient(u_loop, sign)
    sq_m = a_matrix @ a_matrix
    sq_u = a_u @ a_u
    w_m = weight(a_matrix)["weight"]
    w_u = weight(a_u)["weight"]
    return {
        "a2_squared_deviation": float(np.max(np.abs(sq_u - sq_m))),
        "weight_original": w_m,
        "weight_unitarized": w_u,
        "weight_deviation": float(abs(w_u - w_m)),
    }


@dataclass
class MonodromyReport:
    """Complete monodromy analysis of one spec at its configured scale."""

    sign: int
    closing_residuals: tuple
    a_matrix: np.ndarray
    kappa_measured: float
    kappa_spec: float
    weight: float
    weight_closed_form: float
    trace_theta: np.ndarray
    trace_values: np.ndarray
    trace_range: tuple
    max_im_trace: float
    unitarizable: bool
    first_failure: int
    fit_deviation: float
    oracle: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "sign": self.sign,
            "closing_residuals": list(self.closing_residuals),
            "A": [[z.real, z.imag] for z in self.a_matrix.ravel()],
            "trace_A": float(abs(np.trace(self.a_matrix))),
            "kappa_measured": self.kappa_measured,
            "kappa_spec": self.kappa_spec,
            "weight": self.weight,
            "weight_closed_form": self.weight_closed_form,
            "trace_range": list(self.trace_range),
            "max_im_trace": self.max_im_trace,
            "unitarizable": self.unitarizable,
            "first_failure": self.first_failure,
            "fit_deviation": self.fit_deviation,
            "oracle_constant": (
                [self.oracle["constant_vs_printed"].real,
                 self.oracle["constant_vs_printed"].imag]
                if self.oracle.get("constant_vs_printed") is not None else None),
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["theta", "re_trace", "im_trace"])
            for th, tr in zip(self.trace_theta, self.trace_values):
                writer.writerow(["%.17g" % th, "%.17g" % tr.real,
                                 "%.17g" % tr.imag])


def analyze_monodromy(spec, n_samples=256, n_modes=64, tol_ode=1e-11,
                      fit_tol=1e-6):
    """Run the full monodromy analysis pipeline at the spec's own scale."""
    jet = lambda_jet_at_one(spec, tol_ode=tol_ode)
    s, res_m, res_mp = closing_check(jet)
    m = monodromy_circle(spec, n_samples=n_samples, n_modes=n_modes,
                         tol_ode=tol_ode)
    a = extract_A(jet, m, fit_tol=fit_tol)
    a_fit = fit_series_coefficient(m, s)
    prof = trace_profile(m, sign=s)
    w = weight(a, spec)
    oracle = p1_residue_oracle(spec)
    return MonodromyReport(
        sign=s,
        closing_residuals=(res_m, res_mp),
        a_matrix=a,
        kappa_measured=w["kappa_measured"],
        kappa_spec=kappa_of(spec),
        weight=w["weight"],
        weight_closed_form=w["closed_form"],
        trace_theta=prof["theta"],
        trace_values=prof["trace"],
        trace_range=prof["trace_range"],
        max_im_trace=prof["max_im_trace"],
        unitarizable=prof["unitarizable"],
        first_failure=prof["first_failure"],
        fit_deviation=float(np.max(np.abs(a - a_fit))),
        oracle=oracle,
    ), m
