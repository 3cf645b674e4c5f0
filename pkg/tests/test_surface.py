"""Domain grid, umbilic roots, mesh assembly, symmetry fits, export."""

import hashlib
import json
import math

import numpy as np
import pytest

from cmc_cylinders.flow import monodromy_circle
from cmc_cylinders.monodromy import find_scale
from cmc_cylinders.potential import LaurentSpec, symmetric_spec
from cmc_cylinders.surface import (DomainGrid, SurfaceError, SurfaceMesh,
                                   _nearest_vertex, build_surface,
                                   export_obj, find_umbilics, grid_faces,
                                   mean_curvature_probe,
                                   verify_symmetry_planes)
from cmc_cylinders.unitarize import build_unitarizer


def round_spec(tau=1.0):
    return LaurentSpec.from_coeffs({}, tau)


def parametric_cylinder(n_r=24, n_theta=64, radius=1.0):
    """Synthetic round cylinder mesh: axis e3, height = log-radial extent."""
    grid = DomainGrid.regular(n_r, n_theta)
    heights = np.log(grid.radii)
    verts = np.empty((n_r, n_theta, 3))
    verts[..., 0] = radius * np.cos(grid.angles)[None, :]
    verts[..., 1] = radius * np.sin(grid.angles)[None, :]
    verts[..., 2] = heights[:, None]
    seam = verts[:, 0, :].copy()
    return SurfaceMesh(grid=grid, vertices=verts,
                       faces=grid_faces(n_r, n_theta), seam=seam)


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def test_grid_regular_layout():
    grid = DomainGrid.regular(9, 8)
    assert grid.n_r == 9 and grid.n_theta == 8
    steps = np.diff(np.log(grid.radii))
    assert np.allclose(steps, steps[0])
    assert grid.radii[0] == pytest.approx(math.exp(-2.0))
    assert grid.radii[-1] == pytest.approx(math.exp(2.0))
    assert grid.angles[0] == 0.0
    assert grid.node(4, 2) == pytest.approx(1j)
    assert grid.end_symmetric()


def test_grid_rejects_zero_rmin():
    with pytest.raises(SurfaceError):
        DomainGrid.regular(r_min=0.0)
    with pytest.raises(SurfaceError):
        DomainGrid(np.array([0.0, 1.0]), np.array([0.0, math.pi]))


def test_grid_faces_wrap_and_toy_case():
    faces = grid_faces(3, 4)
    assert faces.shape == (8, 4)
    # wrap quad connects the last angular column back to the first
    assert [3, 0, 4, 7] in faces.tolist()
    assert grid_faces(2, 2).shape == (1, 4)


# ---------------------------------------------------------------------------
# umbilics
# ---------------------------------------------------------------------------

def test_umbilics_constant_f_has_none():
    spec = LaurentSpec.from_coeffs({0: 1.0 / 32.0})
    assert find_umbilics(spec).size == 0


def test_umbilics_linear_root():
    spec = LaurentSpec.from_coeffs({0: -1.0, 1: 1.0})
    roots = find_umbilics(spec)
    assert roots.shape == (1,)
    assert roots[0] == pytest.approx(1.0, abs=1e-12)


def test_umbilics_zero_f_raises():
    with pytest.raises(SurfaceError):
        find_umbilics(round_spec())


def test_umbilics_quadratic_family():
    # f = 1/32 + (z^2 + z^-2)/100: squared roots solve w^2 + (25/8) w + 1 = 0
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 100.0)
    roots = find_umbilics(spec)
    assert roots.shape == (4,)
    assert np.max(np.abs(spec.f(roots))) <= 1e-10

    disc = math.sqrt((25.0 / 8.0) ** 2 - 4.0)
    w_oracle = sorted(((-25.0 / 8.0 + disc) / 2.0,
                       (-25.0 / 8.0 - disc) / 2.0))
    squared = roots ** 2
    assert np.max(np.abs(squared.imag)) <= 1e-10
    values = np.sort(np.unique(np.round(squared.real, 8)))
    assert values.shape == (2,)
    assert np.allclose(values, w_oracle, atol=1e-9)
    assert np.allclose(values, [-2.763085, -0.361915], atol=1e-6)

    inside = np.sum(np.abs(roots) < 1.0)
    assert inside == 2 and roots.shape[0] - inside == 2

    # symmetric quadruple {z, conj z, 1/z, 1/conj z} as a set
    z = roots[0]
    quad = {z, np.conj(z), 1.0 / z, 1.0 / np.conj(z)}
    for w in quad:
        assert np.min(np.abs(roots - w)) <= 1e-10


def test_umbilics_annulus_filter():
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 100.0)
    outer = find_umbilics(spec, (1.0, 2.0))
    assert outer.shape == (2,)
    assert np.all(np.abs(outer) > 1.0)


def test_nearest_vertex_indexing():
    grid = DomainGrid.regular(8, 8)
    z = grid.node(3, 5) * (1.0 + 1e-5)
    assert _nearest_vertex(grid, z) == 3 * 8 + 5
    # angular wrap: just below 2*pi snaps to column 0
    z = grid.radii[2] * np.exp(1j * (2.0 * math.pi - 1e-6))
    assert _nearest_vertex(grid, z) == 2 * 8


# ---------------------------------------------------------------------------
# zero-f pipeline
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def round_mesh():
    return build_surface(round_spec(), 1.0, None,
                         grid=DomainGrid.regular(32, 16))


def test_zero_f_closure(round_mesh):
    assert round_mesh.closure_residual() <= 1e-6
    assert round_mesh.metadata["closure_ok"]
    assert round_mesh.umbilics == []


def test_zero_f_factorization_stats(round_mesh):
    stats = round_mesh.metadata["factorization"]
    assert stats["max_residual"] <= 1e-7
    assert stats["max_unitarity"] <= 1e-7
    assert stats["max_negative_energy"] <= 1e-8
    assert stats["max_normalization"] <= 1e-12


def test_zero_f_surface_is_totally_umbilic(round_mesh):
    # every point of the domain is an umbilic when f vanishes, so the
    # image must lie on a round sphere (the degenerate Delaunay surface)
    v = round_mesh.vertex_array()
    a = np.concatenate([2.0 * v, np.ones((v.shape[0], 1))], axis=1)
    sol, *_ = np.linalg.lstsq(a, np.sum(v * v, axis=1), rcond=None)
    center = sol[:3]
    radius = math.sqrt(sol[3] + center @ center)
    dist = np.linalg.norm(v - center, axis=1)
    assert np.max(np.abs(dist - radius)) <= 1e-9 * radius
    assert 0.5 <= radius <= 2.0


def test_zero_f_refinement_stability():
    spec = round_spec()
    grid_a = DomainGrid.regular(12, 8, math.exp(-1.0), math.exp(1.0))
    grid_b = DomainGrid.regular(12, 16, math.exp(-1.0), math.exp(1.0))
    mesh_a = build_surface(spec, 1.0, None, grid=grid_a)
    mesh_b = build_surface(spec, 1.0, None, grid=grid_b)
    shared_b = mesh_b.vertices[:, ::2, :]
    assert np.max(np.linalg.norm(mesh_a.vertices - shared_b, axis=-1)) <= 1e-8


def test_zero_f_closure_tracks_ode_tolerance():
    spec = round_spec()
    grid = DomainGrid.regular(6, 6, math.exp(-1.0), math.exp(1.0))
    loose = build_surface(spec, 1.0, None, grid=grid, tol_ode=1e-8)
    tight = build_surface(spec, 1.0, None, grid=grid, tol_ode=1e-11)
    assert tight.closure_residual() <= loose.closure_residual() + 1e-12


def test_closure_failure_is_flagged_not_silent():
    with pytest.warns(RuntimeWarning, match="closure failed"):
        mesh = build_surface(round_spec(), 1.0, None,
                             grid=DomainGrid.regular(6, 6, 0.5, 2.0),
                             closure_tol=1e-18)
    assert not mesh.metadata["closure_ok"]
    assert mesh.vertices.shape == (6, 6, 3)


# ---------------------------------------------------------------------------
# umbilic cylinder pipeline
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def figure_mesh():
    # umbilics of this spec sit at |z| = 0.602 and 1.662, inside the annulus
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 100.0, tau=1.0)
    tau0 = find_scale(spec)["tau0"]
    unit = build_unitarizer(monodromy_circle(spec.with_tau(tau0)))
    grid = DomainGrid.regular(24, 12, math.exp(-1.0), math.exp(1.0))
    return build_surface(spec, tau0, unit, grid=grid)


def test_figure_mesh_closes(figure_mesh):
    meta = figure_mesh.metadata
    assert meta["closure_ok"]
    assert meta["closure_residual"] <= 1e-5 * meta["bbox_diagonal"]
    stats = meta["factorization"]
    assert stats["max_residual"] <= 1e-7
    assert stats["max_unitarity"] <= 1e-7


def test_figure_mesh_umbilic_markers(figure_mesh):
    markers = figure_mesh.umbilics
    assert len(markers) == 4
    for m in markers:
        assert m["f_residual"] <= 1e-10
        assert 0 <= m["vertex_index"] < figure_mesh.n_vertices


def test_figure_mesh_symmetry_planes(figure_mesh):
    spec = symmetric_spec(2, 1.0 / 32.0, 1.0 / 100.0)
    report = verify_symmetry_planes(figure_mesh, spec=spec)
    assert report["spec_symmetry"]["rho_ok"]
    assert report["spec_symmetry"]["sigma_ok"]
    assert report["grid_end_symmetric"]
    dets = [report[name]["det"] for name in
            ("reflection_theta", "reflection_ends", "rotation_ends")]
    assert sorted(round(d) for d in dets) == [-1, -1, 1]
    for name in ("reflection_theta", "reflection_ends", "rotation_ends"):
        assert report[name]["residual_rel"] <= 1e-4
    assert report["plane_angle"] == pytest.approx(math.pi / 2.0, abs=1e-3)


# ---------------------------------------------------------------------------
# symmetry fits on synthetic meshes
# ---------------------------------------------------------------------------

def test_symmetry_planes_round_cylinder_exact():
    mesh = parametric_cylinder()
    report = verify_symmetry_planes(mesh)
    # theta reflection and the z -> 1/z pairing are the two mirror planes
    # of a round cylinder; the ends exchange z -> 1/conj z is the rotation
    assert report["reflection_theta"]["det"] == pytest.approx(-1.0, abs=1e-9)
    assert report["rotation_ends"]["det"] == pytest.approx(-1.0, abs=1e-9)
    assert report["reflection_ends"]["det"] == pytest.approx(1.0, abs=1e-9)
    for name in ("reflection_theta", "reflection_ends", "rotation_ends"):
        assert report[name]["residual"] <= 1e-9
    assert report["plane_angle"] == pytest.approx(math.pi / 2.0, abs=1e-6)


def test_symmetry_planes_skips_asymmetric_grid():
    grid = DomainGrid.regular(6, 8, 0.5, 4.0)
    verts = np.random.default_rng(3).normal(size=(6, 8, 3))
    mesh = SurfaceMesh(grid=grid, vertices=verts, faces=grid_faces(6, 8),
                       seam=verts[:, 0, :])
    report = verify_symmetry_planes(mesh)
    assert not report["grid_end_symmetric"]
    assert "reflection_ends" not in report
    assert "note" in report


# ---------------------------------------------------------------------------
# mean curvature probe
# ---------------------------------------------------------------------------

def test_probe_round_cylinder_operator():
    mesh = parametric_cylinder(n_r=24, n_theta=64, radius=1.0)
    stats = mean_curvature_probe(mesh)
    assert stats["warning"] is None
    assert stats["mean"] == pytest.approx(0.5, rel=0.01)
    assert stats["rsd"] <= 1e-6


def test_probe_pipeline_sphere(round_mesh):
    # the f = 0 image is a sphere of some radius rho, so the discrete H
    # must sit near 1/rho; the coarse anisotropic grid limits accuracy
    v = round_mesh.vertex_array()
    a = np.concatenate([2.0 * v, np.ones((v.shape[0], 1))], axis=1)
    sol, *_ = np.linalg.lstsq(a, np.sum(v * v, axis=1), rcond=None)
    radius = math.sqrt(sol[3] + sol[:3] @ sol[:3])
    stats = mean_curvature_probe(round_mesh)
    assert stats["mean"] == pytest.approx(1.0 / radius, rel=0.05)
    assert stats["rsd"] <= 0.05


def test_probe_coarse_grid_warns():
    mesh = parametric_cylinder(n_r=4, n_theta=4)
    stats = mean_curvature_probe(mesh)
    assert stats["warning"] is not None
    assert "resolution" in stats["warning"]


def test_probe_excludes_umbilic_neighborhood():
    mesh = parametric_cylinder(n_r=24, n_theta=64)
    n_all = mean_curvature_probe(mesh)["n_used"]
    mesh.umbilics = [{"root": 1.0 + 0.0j, "vertex_index": 5 * 64 + 10,
                      "f_residual": 0.0}]
    n_excl = mean_curvature_probe(mesh)["n_used"]
    assert n_excl == n_all - 25


def test_probe_end_rows_band():
    mesh = parametric_cylinder(n_r=24, n_theta=64)
    banded = mean_curvature_probe(mesh, end_rows=6)
    assert banded["n_used"] == (24 - 12) * 64
    assert banded["mean"] == pytest.approx(0.5, rel=0.01)
    empty = mean_curvature_probe(mesh, end_rows=12)
    assert empty["n_used"] == 0
    assert "no interior vertices" in empty["warning"]


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_export_toy_mesh(tmp_path):
    grid = DomainGrid(np.array([0.5, 2.0]), np.array([0.0, math.pi]))
    verts = np.arange(12, dtype=float).reshape(2, 2, 3)
    mesh = SurfaceMesh(grid=grid, vertices=verts, faces=grid_faces(2, 2),
                       seam=verts[:, 0, :])
    out = export_obj(mesh, tmp_path / "toy.obj")
    lines = open(out["obj_path"]).read().splitlines()
    assert sum(1 for ln in lines if ln.startswith("v ")) == 4
    assert sum(1 for ln in lines if ln.startswith("f ")) == 1


def test_export_round_trip_and_checksum(round_mesh, tmp_path):
    out = export_obj(round_mesh, tmp_path / "round.obj")
    blob = open(out["obj_path"], "rb").read()
    assert hashlib.sha256(blob).hexdigest() == out["checksum"]
    n_v = sum(1 for ln in blob.decode().splitlines() if ln.startswith("v "))
    assert n_v == round_mesh.n_vertices
    report = json.load(open(out["report_path"]))
    assert report["checksum"] == out["checksum"]
    assert report["n_vertices"] == round_mesh.n_vertices
    assert report["closure_ok"]


def test_export_is_deterministic(figure_mesh, tmp_path):
    out1 = export_obj(figure_mesh, tmp_path / "a.obj")
    out2 = export_obj(figure_mesh, tmp_path / "b.obj")
    assert out1["checksum"] == out2["checksum"]
    assert open(out1["obj_path"], "rb").read() == open(out2["obj_path"], "rb").read()
    rep1 = json.load(open(out1["report_path"]))
    rep2 = json.load(open(out2["report_path"]))
    assert rep1 == rep2
    # umbilic markers appear as comments
    head = open(out1["obj_path"]).read(2048)
    assert head.count("# umbilic") == 4
