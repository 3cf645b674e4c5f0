"""Laurent data and the cylinder potential on the doubly punctured plane.

The construction is driven by a finite Laurent polynomial f(z) = sum a_k z^k
and a scale tau > 0. The potential is xi = Q(z, lambda) dz/z with

    Q = [[0, 1/lambda], [lambda/4 + (1 - lambda)^2 tau f(z), 0]].

Zeros of f in the punctured plane become umbilic points of the surface. This
module holds the data type, its symmetry and positivity diagnostics, the
superposition split into radially inner/constant/outer parts, and the gauge
machinery used by the monodromy-expansion oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PotentialError",
    "LaurentSpec",
    "symmetric_spec",
    "validate_symmetry",
    "kappa",
    "eval_Q",
    "superposition_split",
    "gauge_transform",
    "expansion_gauge",
    "expansion_target",
]

SYM_TOL = 1e-14


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class LaurentSpec:
    """Finite Laurent polynomial f plus the potential scale tau.

    terms is a sorted tuple of (degree, coefficient) pairs with no zero
    coefficients; the empty tuple is the zero function.
    """

    terms: tuple
    tau: float = 1.0

    def __post_init__(self):
        if not (self.tau > 0.0 and np.isfinite(self.tau)):
            raise PotentialError("tau must be a positive finite real, got %r" % (self.tau,))
        for k, a in self.terms:
            if not np.isfinite(a):
                raise PotentialError("coefficient a_%d is not finite" % k)

    @staticmethod
    def from_coeffs(coeffs, tau=1.0):
        terms = tuple(sorted((int(k), complex(v)) for k, v in dict(coeffs).items()
                             if v != 0))
        return LaurentSpec(terms, float(tau))

    def coeff(self, k):
        for kk, a in self.terms:
            if kk == k:
                return a
        return 0.0 + 0.0j

    @property
    def support(self):
        return tuple(k for k, _ in self.terms)

    @property
    def is_zero(self):
        return len(self.terms) == 0

    def with_tau(self, tau):
        return LaurentSpec(self.terms, float(tau))

    def f(self, z):
        """Evaluate f(z); z may be a complex scalar or array, z != 0."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for k, a in self.terms:
            out = out + a * z ** k
        return out if out.shape else complex(out)

    def df(self, z):
        """Derivative f'(z)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for k, a in self.terms:
            if k != 0:
                out = out + k * a * z ** (k - 1)
        return out if out.shape else complex(out)

    def to_json_dict(self):
        return {
            "tau": self.tau,
            "coeffs": [[k, a.real, a.imag] for k, a in self.terms],
        }

    @staticmethod
    def from_json_dict(data):
        coeffs = {}
        for k, re, im in data["coeffs"]:
            coeffs[int(k)] = complex(re, im)
        return LaurentSpec.from_coeffs(coeffs, data.get("tau", 1.0))


def symmetric_spec(n, a0, b, tau=1.0):
    """The two-parameter family f = a0 + b (z^n + z^-n)."""
    return LaurentSpec.from_coeffs({0: a0, n: b, -n: b}, tau)


def validate_symmetry(spec):
    """Report the two coefficient symmetries of f.

    rho_ok: f(conj z) = conj(f(z)), equivalent to all a_k real.
    sigma_ok: f(1/conj z) = conj(f(z)), equivalent to a_k = conj(a_{-k}).
    """
    rho_ok = all(abs(a.imag) <= SYM_TOL for _, a in spec.terms)
    sigma_ok = True
    for k, a in spec.terms:
        if abs(a - np.conj(spec.coeff(-k))) > SYM_TOL:
            sigma_ok = False
            break
    return {"rho_ok": bool(rho_ok), "sigma_ok": bool(sigma_ok)}


def kappa(spec):
    """Discriminant (tau a_0)^2 - (tau a_-1)(tau a_1) of the scaled coefficients."""
    t = spec.tau
    val = (t * spec.coeff(0)) ** 2 - (t * spec.coeff(-1)) * (t * spec.coeff(1))
    report = validate_symmetry(spec)
    if report["rho_ok"] and report["sigma_ok"] and abs(val.imag) > 1e-14:
        raise PotentialError("kappa unexpectedly complex for a symmetric spec")
    return float(val.real)


def eval_Q(spec, z, lam):
    """Coefficient matrix Q(z, lambda) of the potential xi = Q dz/z.

    Vectorized over z and lambda by broadcasting; output shape is the
    broadcast shape plus (2, 2).
    """
    z = np.asarray(z, dtype=complex)
    lam = np.asarray(lam, dtype=complex)
    if np.any(z == 0.0) or np.any(lam == 0.0):
        raise PotentialError("pole of the potential")
    fz = spec.tau * np.asarray(spec.f(z), dtype=complex)
    shape = np.broadcast(z, lam, fz).shape
    out = np.zeros(shape + (2, 2), dtype=complex)
    out[..., 0, 1] = 1.0 / lam
    out[..., 1, 0] = lam / 4.0 + (1.0 - lam) ** 2 * fz
    return out


def superposition_split(spec):
    """Split f into strictly negative, constant, and strictly positive modes."""
    minus = {k: a for k, a in spec.terms if k < 0}
    zero = {k: a for k, a in spec.terms if k == 0}
    plus = {k: a for k, a in spec.terms if k > 0}
    return (LaurentSpec.from_coeffs(minus, spec.tau),
            LaurentSpec.from_coeffs(zero, spec.tau),
            LaurentSpec.from_coeffs(plus, spec.tau))


def gauge_transform(q_eval, g_eval, dg_eval, z, lam):
    """Apply a gauge to the potential at one point, returning the dz/z coefficient.

    For xi = Q dz/z the gauged connection is g^-1 xi g + g^-1 dg; its dz/z
    coefficient is g^-1 Q g + z g^-1 (dg/dz). An identity gauge returns Q.
    """
    q = np.asarray(q_eval(z, lam), dtype=complex)
    g = np.asarray(g_eval(z, lam), dtype=complex)
    dg = np.asarray(dg_eval(z, lam), dtype=complex)
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    if abs(det) < 1e-14:
        raise PotentialError("gauge singular")
    ginv = np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]], dtype=complex) / det
    return ginv @ q @ g + z * (ginv @ dg)


def expansion_gauge(spec):
    """The multivalued gauge flattening the potential for the series expansion.

    g = diag(lam^-1/2, lam^1/2) diag(z^-1/2, z^1/2) [[1,0],[1/(2z),1]] [[1,-1],[0,1]]
    with principal square-root branches. Returns (g_eval, dg_eval) where
    dg_eval is the analytic z-derivative.
    """

    def g_eval(z, lam):
        z = complex(z)
        lam = complex(lam)
        sz = np.sqrt(z)
        sl = np.sqrt(lam)
        lam_half = np.array([[1.0 / sl, 0.0], [0.0, sl]], dtype=complex)
        # product Z L with Z = diag(z^-1/2, z^1/2), L = [[1,0],[1/(2z),1]]
        zl = np.array([[1.0 / sz, 0.0], [0.5 / sz, sz]], dtype=complex)
        shear = np.array([[1.0, -1.0], [0.0, 1.0]], dtype=complex)
        return lam_half @ zl @ shear

    def dg_eval(z, lam):
        z = complex(z)
        lam = complex(lam)
        sz = np.sqrt(z)
        sl = np.sqrt(lam)
        lam_half = np.array([[1.0 / sl, 0.0], [0.0, sl]], dtype=complex)
        # d/dz of (Z L) = [[z^-1/2, 0], [z^-1/2 / 2, z^1/2]]
        dzl = np.array([[-0.5 * z ** -1.5, 0.0],
                        [-0.25 * z ** -1.5, 0.5 * z ** -0.5]], dtype=complex)
        shear = np.array([[1.0, -1.0], [0.0, 1.0]], dtype=complex)
        return lam_half @ dzl @ shear

    return g_eval, dg_eval


def expansion_target(spec, z, lam):
    """Predicted gauged coefficient: dz/z coefficient of eta0 + t eta1.

    eta0 = [[0, dz],[0, 0]], eta1 = beta [[1,-1],[1,-1]] with
    beta = -4 tau f(z) dz / z^2 and t = -(lam-1)^2 / (4 lam).
    """
    z = complex(z)
    lam = complex(lam)
    t = -(lam - 1.0) ** 2 / (4.0 * lam)
    beta_z = -4.0 * spec.tau * spec.f(z) / z ** 2  # dz-coefficient of beta
    tb = t * beta_z * z  # converted to dz/z coefficient
    return np.array([[tb, z - tb], [tb, -tb]], dtype=complex)
