import os

import numpy as np
import pytest

from circlepatterns import meshes
from circlepatterns.functional import (EUCLIDEAN, HYPERBOLIC, PatternSpec,
                                       phi_of_rho)
from circlepatterns.layout import (Circle, Line, LayoutResult,
                                   NotDevelopableError, export_json,
                                   export_svg, layout, layout_to_dict)
from circlepatterns.solver import minimize
from circlepatterns.spherical import SphericalProblem, reduce_to_plane
from helpers import random_feasible_spec

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def torus_layout():
    s = meshes.torus_grid(4, 4)
    spec = PatternSpec(s, EUCLIDEAN, np.full(32, np.pi / 2), np.full(16, 2 * np.pi))
    res = minimize(spec)
    return spec, res, layout(spec, res)


def disc_spec():
    """Hyperbolic boundary-face pattern on the reduced cube surface."""
    red = reduce_to_plane(SphericalProblem(meshes.cube(),
                                           np.full(12, 2 * np.pi / 3), 7))
    s0 = red.surface
    rng = np.random.default_rng(30)
    theta_star = red.spec.theta_star
    phi_half = rng.uniform(0.1, 0.45, s0.n_oriented_edges) * theta_star[s0.oe_edge]
    face = np.zeros(s0.n_faces)
    np.add.at(face, s0.oe_left, phi_half)
    return PatternSpec(s0, HYPERBOLIC, theta_star, 2 * face)


def test_torus_unit_grid():
    spec, res, lay = torus_layout()
    assert lay.closure_residual <= 1e-9
    assert not lay.flagged
    p1, p2 = lay.periods
    assert abs(abs(p1) - 4 * np.sqrt(2)) < 1e-9
    assert abs(abs(p2) - 4 * np.sqrt(2)) < 1e-9
    assert abs((np.conj(p1) * p2).real) < 1e-9
    for c in lay.circles.values():
        assert abs(c.radius - 1.0) < 1e-12
    # every kite is a unit square
    for e, (pu, ck, pw, cj) in lay.kites:
        sides = [abs(ck - pu), abs(pw - ck), abs(cj - pw), abs(pu - cj)]
        assert np.abs(np.array(sides) - 1.0).max() < 1e-12
        assert abs(abs(pw - pu) - np.sqrt(2)) < 1e-12


def test_kite_diagonal_law():
    spec, res, lay = torus_layout()
    # r_j = r_k = 1, theta = pi/2 gives center distance sqrt(2)
    for e, (pu, ck, pw, cj) in lay.kites[:4]:
        assert abs(abs(ck - cj) - np.sqrt(2)) < 1e-12


def test_vertex_and_face_angle_sums():
    spec, res, lay = torus_layout()
    s = spec.surface
    vertex_sums = {}
    face_sums = {}
    for e, (pu, ck, pw, cj) in lay.kites:
        h = s.edge_rep(e)
        for point, vid in ((pu, s.origin(h)), (pw, s.terminus(h))):
            ang = abs(np.angle((cj - point) / (ck - point)))
            vertex_sums[vid] = vertex_sums.get(vid, 0.0) + ang
        face_sums[s.left_face(h)] = face_sums.get(s.left_face(h), 0.0) + \
            abs(np.angle((pw - cj) / (pu - cj)))
        face_sums[s.right_face(h)] = face_sums.get(s.right_face(h), 0.0) + \
            abs(np.angle((pw - ck) / (pu - ck)))
    assert np.abs(np.array(list(vertex_sums.values())) - 2 * np.pi).max() < 1e-9
    assert np.abs(np.array(list(face_sums.values())) - 2 * np.pi).max() < 1e-9


def test_intersection_points_on_both_circles():
    spec, res, lay = torus_layout()
    s = spec.surface
    worst = 0.0
    for e, (pu, ck, pw, cj) in lay.kites:
        h = s.edge_rep(e)
        rj = lay.circles[s.left_face(h)].radius
        rk = lay.circles[s.right_face(h)].radius
        for p in (pu, pw):
            worst = max(worst, abs(abs(p - cj) - rj) / rj,
                        abs(abs(p - ck) - rk) / rk)
    assert worst < 1e-9


def test_path_independence_up_to_isometry():
    spec, res, lay = torus_layout()
    lay2 = layout(spec, res, root_edge=7)
    k1 = dict(lay.kites)[7]
    k2 = dict(lay2.kites)[7]
    a = (k2[1] - k2[0]) / (k1[1] - k1[0])
    b = k2[0] - a * k1[0]
    assert abs(abs(a) - 1.0) < 1e-12
    p1, p2 = lay2.periods
    mat = np.linalg.inv(np.array([[p1.real, p2.real], [p1.imag, p2.imag]]))
    worst = 0.0
    for (e, ca), (e2, cb) in zip(lay.kites, lay2.kites):
        for za, zb in zip(ca, cb):
            d = a * za + b - zb
            k = np.round(mat @ np.array([d.real, d.imag]))
            worst = max(worst, abs(d - (k[0] * p1 + k[1] * p2)))
    assert worst <= 1e-7


def test_disc_path_independence():
    red = reduce_to_plane(SphericalProblem(meshes.octahedron(),
                                           np.full(12, np.pi / 2), 4))
    res = minimize(red.spec)
    assert res.converged
    lay = layout(red.spec, res)
    lay2 = layout(red.spec, res, root_edge=red.surface.n_edges - 1)
    k1 = lay.kites[0][1]
    k2 = dict(lay2.kites)[lay.kites[0][0]]
    a = (k2[1] - k2[0]) / (k1[1] - k1[0])
    b = k2[0] - a * k1[0]
    worst = max(abs(a * za + b - zb)
                for (e, ca), (e2, cb) in zip(lay.kites, lay2.kites)
                for za, zb in zip(ca, cb))
    assert worst <= 1e-7


def test_hyperbolic_disc_layout():
    spec = disc_spec()
    res = minimize(spec)
    assert res.converged and np.all(res.rho < 0)
    lay = layout(spec, res)
    assert lay.closure_residual <= 1e-7
    # all circles strictly inside the unit disk
    for f, c in lay.circles.items():
        assert abs(c.center) + c.radius < 1.0
    # kite sides have the correct hyperbolic lengths
    from circlepatterns.layout import _HyperbolicFrame
    from circlepatterns.functional import radii_from_rho
    radii = radii_from_rho(HYPERBOLIC, res.rho)
    s = spec.surface
    worst = 0.0
    for e, (pu, ck, pw, cj) in lay.kites:
        h = s.edge_rep(e)
        for p in (pu, pw):
            worst = max(worst,
                        abs(_HyperbolicFrame.dist(p, cj) - radii[s.left_face(h)]),
                        abs(_HyperbolicFrame.dist(p, ck) - radii[s.right_face(h)]))
    assert worst <= 1e-7


def test_cone_singularities_rejected():
    s = meshes.torus_grid(4, 4)
    phi = np.full(16, 2 * np.pi)
    phi[0] += 0.2
    phi[1] -= 0.2
    spec = PatternSpec(s, EUCLIDEAN, np.full(32, np.pi / 2), phi)
    with pytest.raises(NotDevelopableError):
        layout(spec, np.zeros(16))
    # vertex cones are rejected as well
    rng = np.random.default_rng(31)
    spec2 = random_feasible_spec(s, EUCLIDEAN, rng)
    res = minimize(spec2)
    with pytest.raises(NotDevelopableError):
        layout(spec2, res)


def test_closed_sphere_rejected():
    s = meshes.cube()
    spec = PatternSpec(s, EUCLIDEAN, np.full(12, np.pi / 3), np.full(6, 2 * np.pi))
    with pytest.raises(NotDevelopableError):
        layout(spec, np.zeros(6))


def test_export_json_schema():
    spec, res, lay = torus_layout()
    doc = layout_to_dict(lay, include_kites=True)
    assert {"geometry", "circles", "vertices", "periods",
            "closure_residual", "kites"} <= set(doc)
    assert len(doc["circles"]) == 16
    assert all({"face", "center", "radius"} <= set(c) for c in doc["circles"])
    assert len(doc["kites"]) == 32
    text1 = export_json(lay)
    text2 = export_json(layout(spec, res))
    assert text1 == text2  # deterministic


def test_export_svg_golden_torus():
    spec, res, lay = torus_layout()
    svg = export_svg(lay, include_kites=True)
    assert svg.count('class="face"') == 16
    assert svg.count('class="kite"') == 32
    assert svg.count('class="vertex"') == 16
    assert 'class="periods"' in svg
    with open(os.path.join(GOLDEN, "torus4x4.svg")) as fh:
        assert svg == fh.read()


def test_export_line_circle():
    lay = LayoutResult(
        geometry=EUCLIDEAN,
        circles={0: Circle(0j, 1.0), 1: Line(1 + 0j, 1 + 0j)},
        vertex_points={0: 1j, 1: -1j},
        kites=[], closure_residual=0.0, diameter=2.0)
    doc = layout_to_dict(lay)
    assert doc["circles"][1]["line"]["point"] == [1.0, 0.0]
    svg = export_svg(lay)
    assert "<line" in svg


def test_export_empty_layout():
    lay = LayoutResult(geometry=EUCLIDEAN, circles={}, vertex_points={},
                       kites=[], closure_residual=0.0, diameter=0.0)
    svg = export_svg(lay)
    assert svg.startswith("<?xml") and "</svg>" in svg
    assert export_json(lay)


def test_flagged_layout():
    # feeding unsolved radii leaves a closure defect that gets flagged
    s = meshes.torus_grid(4, 4)
    rng = np.random.default_rng(32)
    spec = PatternSpec(s, EUCLIDEAN, np.full(32, np.pi / 2), np.full(16, 2 * np.pi))
    rho = rng.uniform(-0.3, 0.3, 16)
    lay = layout(spec, rho)
    assert lay.flagged
