"""Command-line interface.

Subcommands: check, solve, layout, sphere, pack, specfun.  All input is
JSON; reports are emitted with fixed float formatting so repeated runs
are byte-identical.  Exit codes: 0 ok, 1 input error, 2 infeasible,
3 non-convergence, 4 not developable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import jsonio, solver, specfun
from .feasibility import check_conditions_bruteforce, find_coherent_angle_system
from .functional import EUCLIDEAN, HYPERBOLIC, PatternSpec, radii_from_rho
from .layout import NotDevelopableError, export_json, export_svg, layout
from .spherical import (SphereConditionError, SphericalProblem, planar_layout,
                        solve_sphere, spherical_layout_to_dict)
from .surface import SurfaceError, euler_characteristic, medial, surface_from_json_dict

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_NOT_DEVELOPABLE = 4

log = logging.getLogger("circlepatterns")


class InputError(ValueError):
    pass


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_problem(path):
    data = _load_json(path)
    try:
        surface = surface_from_json_dict(data["mesh"])
    except KeyError as exc:
        raise InputError(f"{path}: missing 'mesh'") from exc
    except SurfaceError as exc:
        raise InputError(f"{path}: invalid mesh: {exc}") from exc
    geometry = data.get("geometry", EUCLIDEAN)
    if geometry not in (EUCLIDEAN, HYPERBOLIC):
        raise InputError(f"{path}: unknown geometry {geometry!r}")
    if "theta_star" not in data:
        raise InputError(f"{path}: missing 'theta_star'")
    theta_star = np.asarray(data["theta_star"], dtype=float)
    if "phi" in data and data["phi"] is not None:
        phi = np.asarray(data["phi"], dtype=float)
    else:
        if surface.n_boundary_faces:
            raise InputError(f"{path}: 'phi' is required when the mesh has "
                             f"boundary faces")
        phi = np.full(surface.n_faces, 2.0 * np.pi)
    try:
        spec = PatternSpec(surface, geometry, theta_star, phi)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return spec, data.get("options", {})


def _print(doc):
    sys.stdout.write(jsonio.dumps(doc, indent=2) + "\n")


def _certificate_dict(cert):
    if cert.feasible:
        phi = cert.cas.phi if cert.cas is not None else None
        out = {"feasible": True}
        if phi is not None:
            out["cas"] = {"min_phi": float(phi.min()),
                          "max_phi": float(phi.max()),
                          "phi": list(map(float, phi))}
        return out
    return {"feasible": False, "kind": cert.kind, "message": cert.message,
            "violating_faces": list(cert.violating_faces),
            "violating_edges": list(cert.violating_edges),
            "phi_sum": cert.phi_sum, "theta_sum": cert.theta_sum}


def cmd_check(args):
    spec, _ = _load_problem(args.problem)
    cert = find_coherent_angle_system(spec)
    if spec.surface.n_faces <= 8:
        brute = check_conditions_bruteforce(spec)
        if brute.feasible != cert.feasible:
            log.error("flow and brute-force verdicts disagree; report this")
    _print(_certificate_dict(cert))
    return EXIT_OK if cert.feasible else EXIT_INFEASIBLE


def _solve_options(args, options):
    return solver.SolveOptions(
        method=args.method or options.get("method", solver.NEWTON),
        grad_tol=args.tol if args.tol is not None else options.get("tol", 1e-10),
        max_iter=args.max_iter if args.max_iter is not None
        else options.get("max_iter"),
    )


def _solve_report(spec, result, method):
    srf = spec.surface
    face_res = np.abs(spec.phi - 2.0 * np.bincount(
        srf.oe_left, weights=result.cas.phi, minlength=srf.n_faces))
    report = {
        "geometry": spec.geometry,
        "method": method,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "grad_norm": float(result.grad_norm),
        "functional_value": float(result.functional_value),
        "rho": list(map(float, result.rho)),
        "radii": list(map(float, radii_from_rho(spec.geometry, result.rho)))
        if (spec.geometry == EUCLIDEAN or np.all(result.rho < 0)) else None,
        "phi_half_angles": list(map(float, result.cas.phi)),
        "face_residuals": list(map(float, face_res)),
        "cas_valid": bool(result.cas_report.is_valid(1e-8)),
    }
    if result.message:
        report["message"] = result.message
    return report


def cmd_solve(args):
    spec, options = _load_problem(args.problem)
    if args.geometry:
        spec = PatternSpec(spec.surface, args.geometry, spec.theta_star, spec.phi)
    cert = find_coherent_angle_system(spec)
    if not cert.feasible:
        _print(_certificate_dict(cert))
        return EXIT_INFEASIBLE
    opts = _solve_options(args, options)
    result = solver.minimize(spec, opts)
    report = _solve_report(spec, result, opts.method)
    if args.report or not args.output:
        _print(report)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(jsonio.dumps(report, indent=2) + "\n")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_layout(args):
    spec, _ = _load_problem(args.problem)
    report = _load_json(args.report)
    try:
        rho = np.asarray(report["rho"], dtype=float)
    except KeyError as exc:
        raise InputError(f"{args.report}: missing 'rho'") from exc
    result = layout(spec, rho, root_edge=args.root_edge)
    if args.svg:
        export_svg(result, args.svg, include_kites=args.kites)
    if args.json_out:
        export_json(result, args.json_out, include_kites=args.kites)
    if not (args.svg or args.json_out):
        sys.stdout.write(export_json(result, include_kites=args.kites))
    return EXIT_OK


def cmd_sphere(args):
    data = _load_json(args.problem)
    try:
        surface = surface_from_json_dict(data["mesh"])
        problem = SphericalProblem(surface, np.asarray(data["theta"], dtype=float),
                                   int(data.get("v_infinity", 0)))
    except (KeyError, ValueError, SurfaceError) as exc:
        raise InputError(f"{args.problem}: {exc}") from exc
    lay = solve_sphere(problem)
    _print(spherical_layout_to_dict(problem, lay))
    if args.planar_svg:
        export_svg(planar_layout(problem, lay), args.planar_svg)
    if args.planar_json:
        export_json(planar_layout(problem, lay), args.planar_json)
    return EXIT_OK


def cmd_pack(args):
    data = _load_json(args.problem)
    try:
        surface = surface_from_json_dict(data["mesh"])
    except (KeyError, SurfaceError) as exc:
        raise InputError(f"{args.problem}: {exc}") from exc
    if not surface.is_closed:
        raise InputError("packing requires a closed triangulated surface")
    for f in range(surface.n_faces):
        if len(surface.face_walk(f)) != 3:
            raise InputError(f"face {f} is not a triangle")
    for v in range(surface.n_vertices):
        if len(surface.vertex_fan(v)) < 3:
            raise InputError(f"vertex {v} has degree < 3; the medial "
                             f"decomposition degenerates")
    med = medial(surface)
    chi, genus = euler_characteristic(surface)
    n_f, n_v = surface.n_faces, surface.n_vertices
    theta_star = np.full(med.n_edges, 0.5 * np.pi)
    if genus == 0:
        problem = SphericalProblem(med, np.pi - theta_star, 0)
        lay = solve_sphere(problem)
        report = {
            "kind": "spherical",
            "vertex_circles": [{"vertex": v,
                                "axis": list(lay.circles[n_f + v].axis),
                                "angular_radius": lay.circles[n_f + v].angular_radius}
                               for v in range(n_v)],
            "face_circles": [{"face": f,
                              "axis": list(lay.circles[f].axis),
                              "angular_radius": lay.circles[f].angular_radius}
                             for f in range(n_f)],
        }
        _print(report)
        return EXIT_OK
    geometry = EUCLIDEAN if genus == 1 else HYPERBOLIC
    spec = PatternSpec(med, geometry, theta_star, np.full(med.n_faces, 2.0 * np.pi))
    cert = find_coherent_angle_system(spec)
    if not cert.feasible:
        _print(_certificate_dict(cert))
        return EXIT_INFEASIBLE
    result = solver.minimize(spec)
    if not result.converged:
        _print(_solve_report(spec, result, solver.NEWTON))
        return EXIT_NO_CONVERGENCE
    radii = radii_from_rho(geometry, result.rho)
    report = {
        "kind": geometry,
        "vertex_circles": [{"vertex": v, "radius": float(radii[n_f + v])}
                           for v in range(n_v)],
        "face_circles": [{"face": f, "radius": float(radii[f])}
                         for f in range(n_f)],
        "grad_norm": result.grad_norm,
    }
    _print(report)
    return EXIT_OK


def cmd_specfun(args):
    if args.function == "clausen":
        value = specfun.clausen(args.x)
    elif args.function == "imli2":
        if args.theta is None:
            raise InputError("imli2 needs both x and theta")
        value = specfun.im_li2(args.x, args.theta)
    else:
        raise InputError(f"unknown function {args.function!r}")
    sys.stdout.write("%.15g\n" % value)
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="circlepatterns",
        description="construct circle patterns with prescribed intersection "
                    "and cone angles")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("check", help="existence check with certificate")
    pc.add_argument("problem")
    pc.set_defaults(func=cmd_check)

    ps = sub.add_parser("solve", help="minimize the pattern functional")
    ps.add_argument("problem")
    ps.add_argument("--geometry", choices=[EUCLIDEAN, HYPERBOLIC])
    ps.add_argument("--tol", type=float, default=None)
    ps.add_argument("--method", choices=[solver.NEWTON, solver.THURSTON])
    ps.add_argument("--max-iter", type=int, default=None)
    ps.add_argument("--report", action="store_true",
                    help="print the JSON report to stdout")
    ps.add_argument("-o", "--output", help="write the JSON report to a file")
    ps.set_defaults(func=cmd_solve)

    pl = sub.add_parser("layout", help="develop a solved pattern")
    pl.add_argument("problem")
    pl.add_argument("report", help="solve report with the rho values")
    pl.add_argument("--svg")
    pl.add_argument("--json", dest="json_out")
    pl.add_argument("--kites", action="store_true")
    pl.add_argument("--root-edge", type=int, default=0)
    pl.set_defaults(func=cmd_layout)

    pp = sub.add_parser("sphere", help="spherical pattern via stereographic "
                                       "projection")
    pp.add_argument("problem")
    pp.add_argument("--planar-svg")
    pp.add_argument("--planar-json")
    pp.set_defaults(func=cmd_sphere)

    pk = sub.add_parser("pack", help="circle packing of a triangulation via "
                                     "the medial decomposition")
    pk.add_argument("problem")
    pk.set_defaults(func=cmd_pack)

    pf = sub.add_parser("specfun", help="evaluate the special functions")
    pf.add_argument("function", choices=["clausen", "imli2"])
    pf.add_argument("x", type=float)
    pf.add_argument("theta", type=float, nargs="?")
    pf.set_defaults(func=cmd_specfun)
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("CIRCLEPATTERNS_LOG", "WARNING"))
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SurfaceError, ValueError) as exc:
        if isinstance(exc, SphereConditionError):
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        if isinstance(exc, NotDevelopableError):
            print(f"not developable: {exc}", file=sys.stderr)
            return EXIT_NOT_DEVELOPABLE
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
