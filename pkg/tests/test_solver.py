import numpy as np
import pytest

from circlepatterns import meshes
from circlepatterns.feasibility import find_coherent_angle_system
from circlepatterns.functional import (EUCLIDEAN, HYPERBOLIC, PatternSpec,
                                       gradient, value)
from circlepatterns.solver import (NEWTON, THURSTON, SolveOptions, minimize,
                                   thurston_step)
from helpers import random_feasible_spec, surface_pool


def torus_spec(geometry=EUCLIDEAN, phi=2 * np.pi):
    s = meshes.torus_grid(4, 4)
    return PatternSpec(s, geometry, np.full(32, np.pi / 2), np.full(16, phi))


def test_symmetric_torus_newton():
    res = minimize(torus_spec())
    assert res.converged
    assert res.grad_norm <= 1e-10
    assert np.abs(res.rho).max() < 1e-12  # normalized constant solution
    assert res.cas_report.is_valid(1e-9)


def test_hyperbolic_torus():
    spec = torus_spec(HYPERBOLIC, phi=2 * np.pi - 0.1)
    res = minimize(spec)
    assert res.converged
    assert np.all(res.rho < 0)
    srf = spec.surface
    face = np.zeros(srf.n_faces)
    np.add.at(face, srf.oe_left, res.cas.phi)
    assert np.abs(spec.phi - 2 * face).max() <= 1e-8


def test_random_feasible_instances_converge():
    rng = np.random.default_rng(20)
    pool = surface_pool(max_faces=8)
    for i in range(12):
        surf = pool[rng.integers(len(pool))]
        geometry = EUCLIDEAN if i % 2 == 0 else HYPERBOLIC
        spec = random_feasible_spec(surf, geometry, rng)
        assert find_coherent_angle_system(spec).feasible
        res = minimize(spec)
        assert res.converged, res.message
        srf = spec.surface
        face = np.zeros(srf.n_faces)
        np.add.at(face, srf.oe_left, res.cas.phi)
        assert np.abs(spec.phi - 2 * face).max() <= 1e-8
        if geometry == HYPERBOLIC:
            assert np.all(res.rho < 0)
        else:
            assert abs(res.rho.sum()) < 1e-9


def test_thurston_step_restores_symmetry():
    spec = torus_spec()
    rho = np.zeros(16)
    rho[3] = 0.3
    new = thurston_step(spec, rho, 3)
    # neighbors are at 0; the one-dimensional optimum pulls back towards 0
    assert abs(new) < 0.05


def test_thurston_step_fixed_point():
    spec = torus_spec()
    assert abs(thurston_step(spec, np.zeros(16), 5)) < 1e-12


def test_thurston_step_strictly_decreases():
    rng = np.random.default_rng(21)
    spec = random_feasible_spec(meshes.cube(), EUCLIDEAN, rng)
    rho = rng.uniform(-0.5, 0.5, 6)
    for f in range(6):
        before = value(spec, rho)
        g_before = gradient(spec, rho)[f]
        rho2 = rho.copy()
        rho2[f] = thurston_step(spec, rho, f)
        after = value(spec, rho2)
        if abs(g_before) > 1e-12:
            assert after < before
        rho = rho2


def test_methods_agree():
    rng = np.random.default_rng(22)
    pool = surface_pool(max_faces=8)
    for i in range(6):
        surf = pool[rng.integers(len(pool))]
        geometry = EUCLIDEAN if i % 2 == 0 else HYPERBOLIC
        spec = random_feasible_spec(surf, geometry, rng)
        r1 = minimize(spec, SolveOptions(method=NEWTON))
        r2 = minimize(spec, SolveOptions(method=THURSTON))
        assert r1.converged and r2.converged
        assert np.abs(r1.rho - r2.rho).max() <= 1e-7


def test_initialization_independence():
    rng = np.random.default_rng(23)
    spec = random_feasible_spec(meshes.torus_grid(2, 3), EUCLIDEAN, rng)
    r1 = minimize(spec, SolveOptions(initial_rho=rng.uniform(-2, 2, 6)))
    r2 = minimize(spec, SolveOptions(initial_rho=rng.uniform(-2, 2, 6)))
    assert r1.converged and r2.converged
    assert np.abs(r1.rho - r2.rho).max() <= 1e-8


def test_infeasible_reports_non_convergence():
    # total equality holds but one face demands more angle than its edges
    # can provide, so the functional has no minimum and the radii drift
    s = meshes.torus_grid(2, 2)
    phi = np.full(4, (4 * np.pi - 1.0) / 3.0)
    phi[0] = 4 * np.pi + 1.0
    spec = PatternSpec(s, EUCLIDEAN, np.full(8, np.pi / 2), phi)
    assert not find_coherent_angle_system(spec).feasible
    res = minimize(spec, SolveOptions(max_iter=60))
    assert not res.converged
    assert res.message


def test_solve_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(method="gradient-descent")
    with pytest.raises(ValueError):
        SolveOptions(grad_tol=0.0)


def test_newton_monotone_descent():
    rng = np.random.default_rng(24)
    spec = random_feasible_spec(meshes.octahedron(), EUCLIDEAN, rng)
    rho = rng.uniform(-1, 1, 8)
    rho -= rho.mean()
    values = [value(spec, rho)]
    from circlepatterns.solver import _newton_direction
    for _ in range(8):
        g = gradient(spec, rho)
        if np.abs(g).max() < 1e-12:
            break
        d = _newton_direction(spec, rho, g)
        step = 1.0
        while value(spec, rho + step * d) > values[-1] + 1e-14 * abs(values[-1]):
            step *= 0.5
        rho = rho + step * d
        rho -= rho.mean()
        values.append(value(spec, rho))
    drops = np.diff(values)
    assert np.all(drops <= 1e-12)
