"""Integration of the loop ODE dPhi = Phi xi along paths in the punctured plane.

Paths are radial segments (constant angle, log-spaced travel) and circle arcs
(constant radius); both make dz/z a constant multiple of the arc parameter, so
the ODE reads dPhi/ds = c * Phi * Q(z(s), lambda). All lambda samples advance
together under one shared adaptive step controller, which keeps the solver
deterministic: identical inputs produce bitwise-identical output.

The integrator is an embedded Dormand-Prince 5(4) pair with PI step control
and the first-same-as-last optimization. The right-hand side is linear in the
state, so determinant renormalization commutes with the cached last stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .loops import MatrixLoop
from .potential import PotentialError

__all__ = [
    "FlowError",
    "PathSegment",
    "PathSpec",
    "radial_segment",
    "circle_segment",
    "FrameField",
    "integrate",
    "monodromy_circle",
    "lambda_jet_at_one",
]


class FlowError(RuntimeError):
    pass


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
# fifth-order weights are the last A row (first-same-as-last pair)
_DP_E = (71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
         -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@dataclass(frozen=True)
class PathSegment:
    """One leg of a path: radial run at fixed angle, or circle arc at fixed radius."""

    kind: str           # "radial" | "circle"
    radius0: float
    radius1: float
    angle: float
    sweep: float = 0.0

    def __post_init__(self):
        if self.kind not in ("radial", "circle"):
            raise ValueError("unknown segment kind %r" % (self.kind,))
        if self.radius0 <= 0.0 or self.radius1 <= 0.0:
            raise PotentialError("path touches the puncture: radius must be positive")

    @property
    def length(self):
        if self.kind == "radial":
            return abs(math.log(self.radius1 / self.radius0))
        return abs(self.sweep)

    def geometry(self):
        """Return (z_of_s, c) with dPhi/ds = c Phi Q(z(s))."""
        if self.kind == "radial":
            sign = 1.0 if self.radius1 >= self.radius0 else -1.0
            base = math.log(self.radius0)
            phase = np.exp(1j * self.angle)

            def z_of_s(s):
                return phase * math.exp(base + sign * s)

            return z_of_s, complex(sign)
        sign = 1.0 if self.sweep >= 0.0 else -1.0
        r = self.radius0

        def z_of_s(s):
            return r * np.exp(1j * (self.angle + sign * s))

        return z_of_s, 1j * sign

    def endpoint(self):
        if self.kind == "radial":
            return self.radius1 * np.exp(1j * self.angle)
        return self.radius0 * np.exp(1j * (self.angle + self.sweep))


def radial_segment(r0, r1, angle=0.0):
    return PathSegment("radial", float(r0), float(r1), float(angle))


def circle_segment(radius=1.0, angle0=0.0, sweep=2.0 * math.pi):
    return PathSegment("circle", float(radius), float(radius), float(angle0),
                       float(sweep))


@dataclass(frozen=True)
class PathSpec:
    """A concatenation of segments; consecutive endpoints must agree."""

    segments: tuple

    def __post_init__(self):
        for prev, nxt in zip(self.segments, self.segments[1:]):
            a = prev.endpoint()
            b = (nxt.radius0 * np.exp(1j * nxt.angle))
            if abs(a - b) > 1e-9 * max(abs(a), 1.0):
                raise ValueError("path segments do not connect: %s vs %s" % (a, b))

    @staticmethod
    def circle(radius=1.0, angle0=0.0, sweep=2.0 * math.pi):
        return PathSpec((circle_segment(radius, angle0, sweep),))

    @staticmethod
    def radial(r0, r1, angle=0.0):
        return PathSpec((radial_segment(r0, r1, angle),))

    @staticmethod
    def empty():
        return PathSpec(())

    def __add__(self, other):
        return PathSpec(self.segments + other.segments)


@dataclass
class FrameField:
    """Solution frames at the requested nodes, stacked over the lambda set.

    frames has shape (n_nodes, n_lam, 2, 2) for plain integration or
    (n_nodes, 3, 2, 2) for the jet system (solution and two lambda
    derivatives at lambda = 1).
    """

    lam: np.ndarray
    z_nodes: np.ndarray
    frames: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def end(self):
        return self.frames[-1]

    def det_residual(self):
        a = self.frames
        det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
        return float(np.max(np.abs(det - 1.0)))


def _base_rhs(spec, lams):
    q12 = 1.0 / lams
    lam4 = lams / 4.0
    onem2 = (1.0 - lams) ** 2
    tau = spec.tau
    f = spec.f

    def rhs(z, c, y):
        q21 = lam4 + onem2 * (tau * f(z))
        a = c * q12
        b = c * q21
        out = np.empty_like(y)
        out[..., 0, 0] = y[..., 0, 1] * b
        out[..., 0, 1] = y[..., 0, 0] * a
        out[..., 1, 0] = y[..., 1, 1] * b
        out[..., 1, 1] = y[..., 1, 0] * a
        return out

    return rhs


def _jet_rhs(spec):
    # Q and its lambda derivatives at lambda = 1
    q = np.array([[0.0, 1.0], [0.25, 0.0]], dtype=complex)
    qp = np.array([[0.0, -1.0], [0.25, 0.0]], dtype=complex)
    tau = spec.tau
    f = spec.f

    def rhs(z, c, y):
        tf = tau * f(z)
        out = np.empty_like(y)
        out[0] = y[0] @ q
        out[1] = y[1] @ q + y[0] @ qp
        qpp_contrib = np.empty((2, 2), dtype=complex)
        qpp_contrib[0, 0] = y[0][0, 1] * (2.0 * tf)
        qpp_contrib[0, 1] = y[0][0, 0] * 2.0
        qpp_contrib[1, 0] = y[0][1, 1] * (2.0 * tf)
        qpp_contrib[1, 1] = y[0][1, 0] * 2.0
        out[2] = y[2] @ q + 2.0 * (y[1] @ qp) + qpp_contrib
        return c * out

    return rhs


def _renormalize(y, k):
    det = y[..., 0, 0] * y[..., 1, 1] - y[..., 0, 1] * y[..., 1, 0]
    drift = float(np.max(np.abs(det - 1.0)))
    scale = np.sqrt(det)[..., None, None]
    # the right-hand side is linear in y, so the cached stage rescales exactly
    return y / scale, k / scale, drift


def _step_segment(rhs, z_of_s, c, length, nodes, y, atol, rtol, renorm, stats):
    """Advance y across one segment, returning states at the node parameters."""
    if length == 0.0:
        return [y.copy() for _ in nodes], y
    out = []
    s = 0.0
    k1 = rhs(z_of_s(s), c, y)
    f_norm = float(np.max(np.abs(k1)))
    h = min(length, 0.1, 0.01 * max(1.0, float(np.max(np.abs(y)))) / max(f_norm, 1e-10))
    err_prev = 1.0
    node_idx = 0
    ks = [None] * 7
    ks[0] = k1
    while node_idx < len(nodes):
        target = nodes[node_idx]
        if target - s <= 1e-13 * length:
            out.append(y.copy())
            node_idx += 1
            continue
        clamped = s + h >= target - 1e-13 * length
        h_use = (target - s) if clamped else h
        if h_use < 1e-14 * length:
            raise FlowError("integration stalled at s=%.6g near z=%s"
                            % (s, z_of_s(s)))
        for i in range(1, 7):
            yi = y
            for j, a in enumerate(_DP_A[i]):
                if a != 0.0:
                    yi = yi + (h_use * a) * ks[j]
            ks[i] = rhs(z_of_s(s + _DP_C[i] * h_use), c, yi)
        y_new = yi  # stage 7 argument is the fifth-order solution
        delta = None
        for j, e in enumerate(_DP_E):
            if e != 0.0:
                term = (h_use * e) * ks[j]
                delta = term if delta is None else delta + term
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((np.abs(delta) / sc) ** 2)))
        if err <= 1.0:
            s_new = target if clamped else s + h_use
            k_next = ks[6]
            if renorm:
                y_new, k_next, drift = _renormalize(y_new, k_next)
                stats["max_det_drift"] = max(stats["max_det_drift"], drift)
            y = y_new
            ks[0] = k_next
            s = s_new
            stats["n_steps"] += 1
            stats["error_estimate"] += err * (atol + rtol * float(np.max(np.abs(y))))
            if clamped:
                out.append(y.copy())
                node_idx += 1
            fac = 0.9 * err ** -0.14 * err_prev ** 0.08 if err > 0.0 else 5.0
            fac = min(5.0, max(0.2, fac))
            if clamped:
                h = max(h, h_use * fac)
            else:
                h = h_use * fac
            err_prev = max(err, 1e-10)
        else:
            stats["n_rejected"] += 1
            h = h_use * max(0.2, 0.9 * err ** -0.2)
    return out, y


def _as_path(path):
    if isinstance(path, PathSegment):
        return PathSpec((path,))
    return path


def integrate(spec, path, lams, initial=None, tol_ode=1e-11,
              renormalize_det=True, nodes=None):
    """Solve dPhi = Phi xi over a path for every lambda sample.

    lams is a scalar or 1-d array (lambda = 0 rejected). initial is a (2, 2)
    matrix, an (n_lam, 2, 2) stack, or None for the identity. nodes, when
    given, is a per-segment list of arc-parameter values (strictly increasing,
    each ending at the segment length) at which frames are recorded; by
    default only segment endpoints are kept.
    """
    path = _as_path(path)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if np.any(lams == 0.0):
        raise PotentialError("pole of the potential")
    n_lam = lams.shape[0]
    if initial is None:
        y = np.broadcast_to(np.eye(2, dtype=complex), (n_lam, 2, 2)).copy()
    else:
        if isinstance(initial, MatrixLoop):
            initial = initial.samples
        initial = np.asarray(initial, dtype=complex)
        if initial.shape == (2, 2):
            y = np.broadcast_to(initial, (n_lam, 2, 2)).copy()
        else:
            y = initial.copy()
    rhs = _base_rhs(spec, lams)
    return _run(spec, path, rhs, y, lams, tol_ode, renormalize_det, nodes)


def _run(spec, path, rhs, y, lam, tol_ode, renorm, nodes):
    stats = {"n_steps": 0, "n_rejected": 0, "max_det_drift": 0.0,
             "error_estimate": 0.0}
    frames = []
    z_nodes = []
    if not path.segments:
        frames.append(y.copy())
        z_nodes.append(1.0 + 0.0j)
    for idx, seg in enumerate(path.segments):
        z_of_s, c = seg.geometry()
        length = seg.length
        if nodes is None:
            seg_nodes = [length]
        else:
            seg_nodes = list(nodes[idx])
            if not seg_nodes or abs(seg_nodes[-1] - length) > 1e-12 * max(length, 1.0):
                seg_nodes = seg_nodes + [length]
        if length == 0.0:
            for s in seg_nodes:
                frames.append(y.copy())
                z_nodes.append(z_of_s(0.0))
            continue
        states, y = _step_segment(rhs, z_of_s, c, length, seg_nodes, y,
                                  tol_ode, tol_ode, renorm, stats)
        frames.extend(states)
        z_nodes.extend(z_of_s(s) for s in seg_nodes)
    return FrameField(lam=lam, z_nodes=np.asarray(z_nodes, dtype=complex),
                      frames=np.asarray(frames), stats=stats)


def monodromy_circle(spec, lams=None, n_samples=256, n_modes=64, tol_ode=1e-11):
    """Monodromy M(lambda_j) for one counterclockwise unit-circle traversal.

    The solution starts from the identity at z = 1; the end value after the
    full loop is the monodromy. Returns a MatrixLoop on the standard grid
    (or plain samples if lams is given explicitly).
    """
    if lams is None:
        from .loops import lambda_grid
        lams = lambda_grid(n_samples)
        as_loop = True
    else:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        as_loop = False
    fld = integrate(spec, PathSpec.circle(), lams, tol_ode=tol_ode)
    m = fld.end
    if not as_loop:
        return m
    loop = MatrixLoop.from_samples(m, n_modes)
    return loop


def lambda_jet_at_one(spec, tol_ode=1e-11):
    """Monodromy jet (M(1), M'(1), M''(1)) from the exact variational system."""
    y0 = np.zeros((3, 2, 2), dtype=complex)
    y0[0] = np.eye(2)
    rhs = _jet_rhs(spec)
    path = PathSpec.circle()
    fld = _run(spec, path, rhs, y0, np.array([1.0 + 0.0j]), tol_ode,
               False, None)
    jet = fld.end
    return jet[0], jet[1], jet[2]
