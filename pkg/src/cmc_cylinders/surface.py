"""Mesh assembly over the annular domain, umbilic location, and export.

The immersion is sampled on a log-radial by angular grid. One radial spine
is integrated outward and inward from z = 1, then one angular sweep per
radius starts from the spine frame, so every gridpoint is reached by a
short path. Each frame loop is factorized and mapped to a point in R^3;
an extra seam column at theta = 2*pi measures how well the cylinder
closes. Export writes a Wavefront OBJ plus a JSON report with a checksum
over the OBJ bytes.
"""

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .loops import MatrixLoop, lambda_grid
from .flow import PathSpec, integrate
from .iwasawa import iwasawa_factor, sym_point


class SurfaceError(RuntimeError):
    pass


UMBILIC_POLISH_TOL = 1e-12
END_SYMMETRY_TOL = 1e-9


# ---------------------------------------------------------------------------
# domain grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainGrid:
    """Log-spaced radii times equally spaced angles on the punctured plane.

    The seam column theta = 2*pi is a logical duplicate of theta = 0 used
    only for closure testing; it is never stored as a grid column.
    """

    radii: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        angles = np.asarray(self.angles, dtype=float)
        if radii.ndim != 1 or radii.size < 1:
            raise SurfaceError("radii must be a nonempty 1-d array")
        if np.min(radii) <= 0.0:
            raise SurfaceError("r_min must be positive: the domain excludes the punctures")
        if np.any(np.diff(radii) <= 0.0):
            raise SurfaceError("radii must be strictly increasing")
        if angles.ndim != 1 or angles.size < 2:
            raise SurfaceError("need at least two angular samples")
        if np.any(angles < 0.0) or np.any(angles >= 2.0 * math.pi):
            raise SurfaceError("angles must lie in [0, 2*pi)")
        if np.any(np.diff(angles) <= 0.0) or angles[0] != 0.0:
            raise SurfaceError("angles must start at 0 and increase strictly")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "angles", angles)

    @staticmethod
    def regular(n_r=256, n_theta=64, r_min=math.exp(-2.0), r_max=math.exp(2.0)):
        if not (r_min > 0.0):
            raise SurfaceError("r_min must be positive: the domain excludes the punctures")
        if not (r_max > r_min):
            raise SurfaceError("r_max must exceed r_min")
        if n_r < 1 or n_theta < 2:
            raise SurfaceError("grid too small")
        radii = np.exp(np.linspace(math.log(r_min), math.log(r_max), n_r))
        angles = 2.0 * math.pi * np.arange(n_theta) / n_theta
        return DomainGrid(radii, angles)

    @property
    def n_r(self):
        return self.radii.shape[0]

    @property
    def n_theta(self):
        return self.angles.shape[0]

    def node(self, i, k):
        return self.radii[i] * np.exp(1j * self.angles[k])

    def end_symmetric(self):
        """True when the radii are symmetric about the unit circle, r_i * r_{-i} = 1."""
        prod = self.radii * self.radii[::-1]
        return bool(np.max(np.abs(prod - 1.0)) <= END_SYMMETRY_TOL)

    def to_json_dict(self):
        return {
            "n_r": int(self.n_r),
            "n_theta": int(self.n_theta),
            "r_min": float(self.radii[0]),
            "r_max": float(self.radii[-1]),
        }


# ---------------------------------------------------------------------------
# mesh container
# ---------------------------------------------------------------------------

@dataclass
class SurfaceMesh:
    """Immersion samples on the grid plus the seam column and bookkeeping.

    vertices is (n_r, n_theta, 3); faces is (n_faces, 4) of flat vertex ids
    in row-major (i, k) order; seam is (n_r, 3), the theta = 2*pi column.
    umbilics is a list of {root, vertex_index, f_residual} markers.
    """

    grid: DomainGrid
    vertices: np.ndarray
    faces: np.ndarray
    seam: np.ndarray
    umbilics: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.shape != (self.grid.n_r, self.grid.n_theta, 3):
            raise SurfaceError("vertex array does not match the grid")
        if not np.all(np.isfinite(v)):
            raise SurfaceError("non-finite vertex coordinates")
        s = np.asarray(self.seam, dtype=float)
        if s.shape != (self.grid.n_r, 3) or not np.all(np.isfinite(s)):
            raise SurfaceError("seam column malformed")
        f = np.asarray(self.faces, dtype=int)
        if f.size and (f.min() < 0 or f.max() >= self.n_vertices):
            raise SurfaceError("face indexes a vertex outside the mesh")
        self.vertices = v
        self.seam = s
        self.faces = f.reshape(-1, 4)

    @property
    def n_vertices(self):
        return self.grid.n_r * self.grid.n_theta

    def vertex_array(self):
        return self.vertices.reshape(-1, 3)

    def bbox_diagonal(self):
        v = self.vertex_array()
        return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))

    def closure_residual(self):
        gap = self.seam - self.vertices[:, 0, :]
        return float(np.max(np.linalg.norm(gap, axis=1)))


def grid_faces(n_r, n_theta):
    """Quad connectivity with the angular wrap, row-major flat indices.

    Two angular columns cannot wrap without emitting the same quad twice,
    so the wrap face is only added for n_theta >= 3.
    """
    i = np.arange(n_r - 1)[:, None]
    n_cols = n_theta if n_theta >= 3 else n_theta - 1
    k = np.arange(n_cols)[None, :]
    k2 = (k + 1) % n_theta
    quads = np.stack([i * n_theta + k,
                      i * n_theta + k2,
                      (i + 1) * n_theta + k2,
                      (i + 1) * n_theta + k], axis=-1)
    return quads.reshape(-1, 4)


# ---------------------------------------------------------------------------
# umbilics
# ---------------------------------------------------------------------------

def find_umbilics(spec, annulus=None, polish_tol=UMBILIC_POLISH_TOL):
    """All zeros of f, optionally filtered to r_min <= |z| <= r_max.

    f is converted to the polynomial z^m f(z) (m clears the pole order at
    the origin), whose roots come from the companion matrix; each root is
    then polished by Newton on f itself. Zero is never a root because the
    lowest stored coefficient is nonzero.
    """
    if spec.is_zero:
        raise SurfaceError("umbilic locus is the whole domain: f vanishes identically")
    support = spec.support
    k_min, k_max = min(support), max(support)
    shift = max(0, -k_min)
    coeffs = np.zeros(k_max + shift + 1, dtype=complex)
    for k, a in spec.terms:
        coeffs[k + shift] = a
    if coeffs.size == 1:
        roots = np.array([], dtype=complex)
    else:
        roots = np.roots(coeffs[::-1])

    polished = []
    for z in roots:
        for _ in range(60):
            fz = spec.f(z)
            if abs(fz) <= polish_tol:
                break
            dfz = spec.df(z)
            if abs(dfz) == 0.0:
                break
            z = z - fz / dfz
        if abs(spec.f(z)) > 1e-10:
            raise SurfaceError("umbilic root polish stalled at |f| = %.3e" %
                               abs(spec.f(z)))
        polished.append(z)
    roots = np.asarray(polished, dtype=complex)

    if annulus is not None:
        r_lo, r_hi = float(annulus[0]), float(annulus[1])
        mag = np.abs(roots)
        keep = (mag >= r_lo * (1.0 - 1e-9)) & (mag <= r_hi * (1.0 + 1e-9))
        roots = roots[keep]

    # collapse numerically repeated roots, then order deterministically
    roots = roots[np.lexsort((roots.imag, roots.real))]
    unique = []
    for z in roots:
        if not unique or abs(z - unique[-1]) > 1e-8 * max(1.0, abs(z)):
            unique.append(z)
    return np.asarray(unique, dtype=complex)


def _nearest_vertex(grid, z):
    """Flat index of the gridpoint closest to z in the log-polar metric."""
    i = int(np.argmin(np.abs(np.log(grid.radii) - math.log(abs(z)))))
    theta = math.atan2(z.imag, z.real) % (2.0 * math.pi)
    d = np.abs(grid.angles - theta)
    d = np.minimum(d, 2.0 * math.pi - d)
    k = int(np.argmin(d))
    return i * grid.n_theta + k


# ---------------------------------------------------------------------------
# surface assembly
# ---------------------------------------------------------------------------

def _spine_frames(spec, grid, lam, initial, tol_ode):
    """Frames of the dressed solution at (r_i, theta = 0) for every radius."""
    radii = grid.radii
    n_lam = lam.shape[0]
    frames = np.empty((grid.n_r, n_lam, 2, 2), dtype=complex)
    outer = radii >= 1.0
    inner = ~outer
    if np.any(outer):
        r_out = radii[outer]
        s_out = list(np.log(r_out))
        fld = integrate(spec, PathSpec.radial(1.0, r_out[-1]), lam,
                        initial=initial, tol_ode=tol_ode, nodes=[s_out])
        frames[outer] = fld.frames[:len(s_out)]
    if np.any(inner):
        r_in = radii[inner][::-1]          # walk inward, decreasing radius
        s_in = list(-np.log(r_in))
        fld = integrate(spec, PathSpec.radial(1.0, r_in[-1]), lam,
                        initial=initial, tol_ode=tol_ode, nodes=[s_in])
        frames[inner] = fld.frames[:len(s_in)][::-1]
    return frames


def _factor_node(samples, n_modes, tol_fact, tol_unit, stats):
    loop = MatrixLoop.from_samples(samples, n_modes)
    fac = iwasawa_factor(loop, tol_fact=tol_fact, tol_unit=tol_unit)
    # The immersion-formula gate sees the derivative-amplified defect, one
    # order rougher than the pointwise unitarity it derives from.
    pt = sym_point(fac.frame, tol_unit=10.0 * tol_unit)
    b0 = fac.positive.mode(0)
    b0_residual = max(abs(b0[1, 0]),
                      abs(b0[0, 0].imag), abs(b0[1, 1].imag),
                      max(0.0, -b0[0, 0].real), max(0.0, -b0[1, 1].real))
    stats["max_residual"] = max(stats["max_residual"], fac.residual)
    stats["max_unitarity"] = max(stats["max_unitarity"], fac.unitarity_residual)
    stats["max_projection"] = max(stats["max_projection"], pt.projection_residual)
    stats["max_negative_energy"] = max(stats["max_negative_energy"],
                                       fac.positive.negative_energy())
    stats["max_normalization"] = max(stats["max_normalization"], float(b0_residual))
    return pt.x


def build_surface(spec, tau0, unitarizer, grid=None, n_samples=256, n_modes=64,
                  tol_ode=1e-11, tol_fact=1e-7, tol_unit=1e-7,
                  closure_tol=1e-5, n_workers=1):
    """Assemble the immersion mesh at scale tau0 with the dressing V applied.

    The caller is expected to have run the monodromy closing checks and
    built V (a DiagonalUnitarizer, or None for the identity) at the same
    scale. A seam residual above closure_tol times the bounding-box
    diagonal marks the mesh as not closed and emits a warning; the mesh is
    still returned for inspection.

    Factorization uses every mode the lambda grid resolves (up to twice
    n_modes): dressing by V widens the frame's spectrum, and truncating
    the widened loop back to n_modes would show up as spurious frame
    non-unitarity.
    """
    if grid is None:
        grid = DomainGrid.regular()
    wspec = spec.with_tau(tau0)
    lam = lambda_grid(n_samples)

    if unitarizer is None:
        v = np.ones(n_samples, dtype=complex)
    else:
        vloop = unitarizer.v
        v = vloop.samples if vloop.n_samples == n_samples else vloop.at(lam)
    initial = np.zeros((n_samples, 2, 2), dtype=complex)
    initial[:, 0, 0] = v
    initial[:, 1, 1] = 1.0 / v

    t_start = time.perf_counter()
    timings = {"ode_s": 0.0, "factorization_s": 0.0}

    t0 = time.perf_counter()
    spine = _spine_frames(wspec, grid, lam, initial, tol_ode)
    timings["ode_s"] += time.perf_counter() - t0

    n_r, n_t = grid.n_r, grid.n_theta
    # Guard band below the Nyquist mode: the extreme estimable modes absorb
    # aliased energy and would poison the factor.
    n_fact = max(n_modes, min(2 * n_modes, n_samples // 2 - 4))
    sweep_nodes = [list(grid.angles[1:]) + [2.0 * math.pi]]

    def sweep_row(i):
        row_stats = {"max_residual": 0.0, "max_unitarity": 0.0,
                     "max_projection": 0.0,
                     "max_negative_energy": 0.0, "max_normalization": 0.0}
        t_a = time.perf_counter()
        fld = integrate(wspec, PathSpec.circle(radius=grid.radii[i]), lam,
                        initial=spine[i], tol_ode=tol_ode, nodes=sweep_nodes)
        t_b = time.perf_counter()
        pts = np.empty((n_t, 3))
        pts[0] = _factor_node(spine[i], n_fact, tol_fact, tol_unit, row_stats)
        for k in range(1, n_t):
            pts[k] = _factor_node(fld.frames[k - 1], n_fact, tol_fact,
                                  tol_unit, row_stats)
        seam_pt = _factor_node(fld.frames[n_t - 1], n_fact, tol_fact,
                               tol_unit, row_stats)
        t_c = time.perf_counter()
        return pts, seam_pt, row_stats, t_b - t_a, t_c - t_b

    vertices = np.empty((n_r, n_t, 3))
    seam = np.empty((n_r, 3))
    stats = {"max_residual": 0.0, "max_unitarity": 0.0,
             "max_projection": 0.0,
             "max_negative_energy": 0.0, "max_normalization": 0.0}
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(sweep_row, range(n_r)))
    else:
        results = [sweep_row(i) for i in range(n_r)]
    for i, (pts, seam_pt, row_stats, dt_ode, dt_fact) in enumerate(results):
        vertices[i] = pts
        seam[i] = seam_pt
        for key in stats:
            stats[key] = max(stats[key], row_stats[key])
        timings["ode_s"] += dt_ode
        timings["factorization_s"] += dt_fact

    if wspec.is_zero:
        markers = []
    else:
        roots = find_umbilics(wspec, (grid.radii[0], grid.radii[-1]))
        markers = [{"root": complex(z),
                    "vertex_index": _nearest_vertex(grid, z),
                    "f_residual": float(abs(wspec.f(z)))} for z in roots]

    timings["total_s"] = time.perf_counter() - t_start
    mesh = SurfaceMesh(grid=grid, vertices=vertices,
                       faces=grid_faces(n_r, n_t), seam=seam,
                       umbilics=markers, metadata={})
    bbox = mesh.bbox_diagonal()
    closure = mesh.closure_residual()
    closure_ok = closure <= closure_tol * bbox
    mesh.metadata = {
        "spec": wspec.to_json_dict(),
        "tau0": float(tau0),
        "grid": grid.to_json_dict(),
        "tolerances": {"tol_ode": tol_ode, "tol_fact": tol_fact,
                       "tol_unit": tol_unit, "closure_tol": closure_tol,
                       "n_samples": n_samples, "n_modes": n_modes},
        "unitarizer": None if unitarizer is None else {
            "trivial": bool(unitarizer.trivial),
            "method": unitarizer.method,
            "residual": float(unitarizer.residual)},
        "factorization": {k: float(val) for k, val in stats.items()},
        "bbox_diagonal": bbox,
        "closure_residual": closure,
        "closure_ok": bool(closure_ok),
        "timings": {k: float(val) for k, val in timings.items()},
    }
    if not closure_ok:
        warnings.warn("closure failed: seam residual %.3e exceeds %.3e x bbox "
                      "diagonal %.3e" % (closure, closure_tol, bbox),
                      RuntimeWarning)
    return mesh


# ---------------------------------------------------------------------------
# symmetry planes
# ---------------------------------------------------------------------------

def _fit_isometry(p, q):
    """Best rigid map q ~ R p + t with R orthogonal (reflections allowed)."""
    p_bar = p.mean(axis=0)
    q_bar = q.mean(axis=0)
    h = (p - p_bar).T @ (q - q_bar)
    u, _, vt = np.linalg.svd(h)
    r = vt.T @ u.T
    t = q_bar - r @ p_bar
    residual = float(np.max(np.linalg.norm(p @ r.T + t - q, axis=1)))
    return r, t, residual


def _reflection_normal(r):
    """Unit normal of the fixed plane of an orthogonal map with det < 0."""
    w, vec = np.linalg.eig(r)
    idx = int(np.argmin(np.abs(w + 1.0)))
    n = np.real(vec[:, idx])
    n = n / np.linalg.norm(n)
    return n, float(abs(w[idx] + 1.0))


def verify_symmetry_planes(mesh, spec=None):
    """Fit the grid-index symmetries of the mesh and report their residuals.

    Three candidate isometries are fitted from gridpoint pairings:
    reflection_theta pairs (r, theta) with (r, -theta), reflection_ends
    pairs (r, theta) with (1/r, -theta), and their composition
    rotation_ends pairs (r, theta) with (1/r, theta). For a symmetric
    spec exactly two of the three fits are reflections (which two depends
    on the surface; a straight cylinder pairs them differently than the
    umbilic ones) and the third is a rotation by pi; plane_angle is
    measured between the two fitted reflection planes.
    """
    grid = mesh.grid
    n_t = grid.n_theta
    v = mesh.vertices
    p = v.reshape(-1, 3)
    bbox = mesh.bbox_diagonal()
    perm_k = (-np.arange(n_t)) % n_t
    end_ok = grid.end_symmetric()

    report = {"bbox_diagonal": bbox, "grid_end_symmetric": end_ok}
    if spec is not None:
        from .potential import validate_symmetry
        report["spec_symmetry"] = validate_symmetry(spec)

    pairings = {"reflection_theta": v[:, perm_k, :]}
    if end_ok:
        pairings["reflection_ends"] = v[::-1, perm_k, :]
        pairings["rotation_ends"] = v[::-1, :, :]
    else:
        report["note"] = ("radii not symmetric about the unit circle: "
                          "end-exchange pairings skipped")

    normals = {}
    for name, q_grid in pairings.items():
        r, t, residual = _fit_isometry(p, q_grid.reshape(-1, 3))
        entry = {"residual": residual,
                 "residual_rel": residual / bbox if bbox > 0 else residual,
                 "det": float(np.linalg.det(r))}
        if entry["det"] < 0.0:
            n, dev = _reflection_normal(r)
            entry["normal"] = [float(x) for x in n]
            entry["eigenvalue_deviation"] = dev
            normals[name] = n
        report[name] = entry

    if len(normals) == 2:
        n1, n2 = normals.values()
        c = abs(float(np.dot(n1, n2)))
        report["plane_angle"] = float(np.arccos(min(1.0, c)))
        report["reflection_pair"] = sorted(normals)
    return report


# ---------------------------------------------------------------------------
# discrete mean curvature
# ---------------------------------------------------------------------------

def mean_curvature_probe(mesh, exclusion_cells=2, end_rows=1):
    """Cotangent-Laplacian mean curvature statistics on interior vertices.

    Quads are split into two triangles; the Laplace-Beltrami estimate with
    barycentric vertex areas gives H = |K| / 2 at each vertex. The first
    and last radial rows have incomplete stars and are excluded, as are
    vertices within exclusion_cells grid cells of an umbilic marker.
    end_rows widens the excluded boundary band beyond the incomplete-star
    rows; the estimator is first order, and members whose image curls
    tightly near the annulus ends need a wider band (or a finer grid)
    before their probe spread reflects the surface rather than the grid.
    """
    n_r, n_t = mesh.grid.n_r, mesh.grid.n_theta
    verts = mesh.vertex_array()
    faces = mesh.faces
    tris = np.concatenate([faces[:, [0, 1, 2]], faces[:, [0, 2, 3]]])

    x0 = verts[tris[:, 0]]
    x1 = verts[tris[:, 1]]
    x2 = verts[tris[:, 2]]

    def cot(u, w):
        cr = np.linalg.norm(np.cross(u, w), axis=1)
        return np.sum(u * w, axis=1) / np.maximum(cr, 1e-300)

    c0 = cot(x1 - x0, x2 - x0)
    c1 = cot(x2 - x1, x0 - x1)
    c2 = cot(x0 - x2, x1 - x2)
    area = 0.5 * np.linalg.norm(np.cross(x1 - x0, x2 - x0), axis=1)

    k_vec = np.zeros_like(verts)
    a_bary = np.zeros(verts.shape[0])
    for corner in range(3):
        np.add.at(a_bary, tris[:, corner], area / 3.0)
    # edge (i, j) with opposite corner o contributes cot_o (x_j - x_i) to K_i
    for (i, j, c) in ((1, 2, c0), (2, 0, c1), (0, 1, c2)):
        d = verts[tris[:, j]] - verts[tris[:, i]]
        np.add.at(k_vec, tris[:, i], c[:, None] * d)
        np.add.at(k_vec, tris[:, j], -c[:, None] * d)

    h = np.linalg.norm(k_vec / (2.0 * a_bary[:, None]), axis=1) / 2.0
    h = h.reshape(n_r, n_t)

    band = max(1, int(end_rows))
    mask = np.zeros((n_r, n_t), dtype=bool)
    if 2 * band < n_r:
        mask[band:-band, :] = True
    for marker in mesh.umbilics:
        iu, ku = divmod(int(marker["vertex_index"]), n_t)
        di = np.abs(np.arange(n_r) - iu)
        dk = np.abs(np.arange(n_t) - ku)
        dk = np.minimum(dk, n_t - dk)
        near = (di[:, None] <= exclusion_cells) & (dk[None, :] <= exclusion_cells)
        mask &= ~near

    warning = None
    if n_r < 8 or n_t < 8:
        warning = "resolution warning: grid too coarse to assess curvature"
    vals = h[mask]
    if vals.size == 0:
        return {"mean": float("nan"), "std": float("nan"), "rsd": float("nan"),
                "max_deviation": float("nan"), "n_used": 0,
                "warning": warning or "no interior vertices to assess"}
    mean = float(vals.mean())
    std = float(vals.std())
    return {"mean": mean, "std": std,
            "rsd": std / abs(mean) if mean != 0.0 else float("inf"),
            "max_deviation": float(np.max(np.abs(vals - mean))),
            "n_used": int(vals.size), "warning": warning}


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _json_ready(value):
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def export_obj(mesh, path, report_path=None):
    """Write the mesh as Wavefront OBJ plus a JSON report.

    The OBJ is byte-deterministic for a given mesh: fixed header, vertices
    in row-major grid order at full precision, quad faces 1-indexed, and
    umbilic markers as comments (vertex ids there are 1-based to match the
    face records). The report repeats the mesh metadata and carries a
    sha256 checksum of the OBJ bytes.
    """
    path = str(path)
    if report_path is None:
        report_path = path + ".json"
    lines = ["# cmc cylinder mesh",
             "# vertices %d faces %d" % (mesh.n_vertices, mesh.faces.shape[0])]
    for marker in mesh.umbilics:
        z = marker["root"]
        lines.append("# umbilic %.17g %.17g %d"
                     % (z.real, z.imag, int(marker["vertex_index"]) + 1))
    for row in mesh.vertex_array():
        lines.append("v %.17g %.17g %.17g" % (row[0], row[1], row[2]))
    for quad in mesh.faces:
        lines.append("f %d %d %d %d" % tuple(int(ix) + 1 for ix in quad))
    blob = ("\n".join(lines) + "\n").encode("ascii")
    checksum = hashlib.sha256(blob).hexdigest()

    report = _json_ready(dict(mesh.metadata))
    report["n_vertices"] = int(mesh.n_vertices)
    report["n_faces"] = int(mesh.faces.shape[0])
    report["umbilics"] = [{"root": [float(m["root"].real), float(m["root"].imag)],
                           "vertex_index": int(m["vertex_index"]),
                           "f_residual": float(m["f_residual"])}
                          for m in mesh.umbilics]
    report["checksum"] = checksum

    with open(path, "wb") as fh:
        fh.write(blob)
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"obj_path": path, "report_path": report_path, "checksum": checksum}
