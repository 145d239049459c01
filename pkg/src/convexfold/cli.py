"""Command line interface: solvers, verifiers and experiment sweeps.

Exit codes: 0 when every checked assertion passes, 1 when any fails, 2 on
usage errors. Reports are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, domains, folding, kalpha
from .errors import ConvexFoldError
from .geometry import ConvexPolygon, Cut, breadth, support, shadow_section_for_min_breadth
from .reporting import dumps_report, write_report
from .solver import Reaction, level_set, radial_oracle, solve
from .svgout import SvgCanvas

DEFAULT_SEED = 7


class UsageError(Exception):
    pass


def _load_domain(spec: str):
    if spec in domains.BUILTIN_DOMAINS:
        return domains.builtin_domain(spec)
    path = Path(spec)
    if path.exists():
        return domains.load_geometry(path)
    raise UsageError(f"unknown domain {spec!r} (not a builtin, not a file)")


def _reaction_from_args(args) -> Reaction:
    kind = getattr(args, "reaction", "torsion")
    if kind == "torsion":
        return Reaction(p=args.p)
    if kind == "power":
        return Reaction(p=args.p, kind="power", q=args.q, c=args.c)
    raise UsageError(f"unsupported reaction {kind!r}")


def _parse_direction(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"bad direction {text!r}; expected comma-separated floats")


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> tuple[dict, bool]:
    domain = _load_domain(args.domain)
    reaction = _reaction_from_args(args)
    field = solve(domain, reaction, args.h)
    report = {
        "command": "solve",
        "domain": args.domain,
        "reaction": reaction.label(),
        "h": args.h,
        "seed": args.seed,
        "max_u": field.max_value,
        "n_points": field.mesh.n_points,
        "n_triangles": field.mesh.n_triangles,
        "min_angle_deg": field.mesh.min_angle_deg(),
        "residual": field.diagnostics.get("residual"),
        "positive_interior": bool(
            field.values[~field.mesh.boundary].min() > 0
            if (~field.mesh.boundary).any()
            else True
        ),
    }
    if args.domain == "disk" and reaction.kind in ("torsion", "power"):
        prof = radial_oracle(args.p, reaction)
        r = np.linalg.norm(field.mesh.points, axis=1)
        err = float(np.abs(field.values - prof(r)).max() / max(prof(0.0), 1e-300))
        report["radial_oracle_linf_rel"] = err
    if args.csv:
        pts = field.mesh.points
        rows = ["x,y,u"] + [
            f"{x:.17g},{y:.17g},{u:.17g}" for (x, y), u in zip(pts, field.values)
        ]
        Path(args.csv).write_text("\n".join(rows) + "\n")
        report["csv"] = args.csv
    if args.grid:
        lo = domain.vertices.min(axis=0)
        hi = domain.vertices.max(axis=0)
        n = args.grid_n
        gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n))
        gpts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        vals = np.where(domain.contains(gpts), field.evaluate(gpts), 0.0)
        np.save(args.grid, vals.reshape(n, n))
        report["grid"] = args.grid
    if args.svg:
        canvas = SvgCanvas()
        canvas.polygon(domain.vertices, stroke="#333")
        for frac in (0.25, 0.5, 0.75, 0.9):
            try:
                ls = level_set(field, frac * field.max_value)
                canvas.polygon(ls.polygon.vertices, stroke="#1f77b4")
            except ConvexFoldError:
                pass
        canvas.write(args.svg)
        report["svg"] = args.svg
    ok = report["positive_interior"] and (field.diagnostics.get("residual") is not None)
    return report, bool(ok)


def cmd_fold(args) -> tuple[dict, bool]:
    body = _load_domain(args.domain)
    report = {"command": "fold", "domain": args.domain, "seed": args.seed}
    ok = True
    if args.omega:
        w = _parse_direction(args.omega)
        prof = folding.folding_profile(body, w)
        b = breadth(body, w)
        report.update(
            omega=[float(c) for c in prof.omega],
            lambda_min=prof.lambda_min,
            height=prof.height,
            breadth=b,
            height_over_breadth=prof.height / b if b > 0 else None,
        )
        ok = prof.height <= b / 2 + 1e-9 * body.diameter
        if args.svg:
            canvas = SvgCanvas()
            canvas.polygon(body.vertices, stroke="#333")
            cap_poly = folding.cap(body, Cut(prof.lambda_min, prof.omega))
            canvas.polygon(cap_poly.vertices, stroke="#b33", fill="#b33", opacity=0.15)
            refl = folding.reflect(cap_poly.vertices, Cut(prof.lambda_min, prof.omega))
            canvas.polygon(refl, stroke="#2a2", fill="#2a2", opacity=0.15)
            canvas.write(args.svg)
            report["svg"] = args.svg
    else:
        dirs = folding.circle_directions(args.n_directions)
        profiles = [folding.folding_profile(body, w) for w in dirs]
        heights = np.array([p.height for p in profiles])
        breadths = np.array([breadth(body, w) for w in dirs])
        report.update(
            n_directions=args.n_directions,
            max_height=float(heights.max()),
            min_height=float(heights.min()),
            max_height_over_breadth=float((heights / breadths).max()),
        )
        ok = bool((heights <= breadths / 2 + 1e-9 * body.diameter).all())
    report["half_breadth_bound_holds"] = bool(ok)
    return report, bool(ok)


def cmd_heart(args) -> tuple[dict, bool]:
    body = _load_domain(args.domain)
    n = args.n_directions or (720 if isinstance(body, ConvexPolygon) else 5000)
    h = folding.heart(body, n)
    report = {
        "command": "heart",
        "domain": args.domain,
        "seed": args.seed,
        "n_directions": n,
    }
    ok = True
    if h.polygon is not None:
        report["diameter"] = h.polygon.diameter
        report["n_vertices"] = h.polygon.n_vertices
        if h.polygon.n_vertices:
            report["center"] = [float(c) for c in h.polygon.vertices.mean(axis=0)]
            ok = bool(body.contains(h.polygon.vertices, tol=1e-6 * body.diameter).all())
        if args.svg:
            canvas = SvgCanvas()
            canvas.polygon(body.vertices, stroke="#333")
            if h.polygon.n_vertices >= 2:
                canvas.polygon(h.polygon.vertices, stroke="#b33", fill="#b33", opacity=0.3)
            elif h.polygon.n_vertices == 1:
                canvas.point(h.polygon.vertices[0], color="#b33")
            canvas.write(args.svg)
            report["svg"] = args.svg
    report["inside_body"] = bool(ok)
    return report, bool(ok)


def cmd_verify_lemma(args) -> tuple[dict, bool]:
    if args.which == "fold":
        return _verify_lemma_fold(args)
    if args.which == "section":
        return _verify_lemma_section(args)
    if args.which == "rectangle":
        return _verify_lemma_rectangle(args)
    raise UsageError(f"unknown lemma {args.which!r}")


def _verify_lemma_fold(args) -> tuple[dict, bool]:
    polys = domains.random_polygon_corpus(args.seed, args.count)
    worst_gap = np.inf
    mu_failures = 0
    bound_failures = 0
    for poly in polys:
        cut, chord, ok = shadow_section_for_min_breadth(poly)
        rep = folding.lemma_fold_check(poly, cut)
        worst_gap = min(worst_gap, rep["equality_gap"])
        if not rep["bound_holds"]:
            bound_failures += 1
        if rep.get("mu_fold_ok") is False:
            mu_failures += 1
    report = {
        "command": "verify-lemma fold",
        "corpus": "random",
        "count": args.count,
        "seed": args.seed,
        "worst_gap_above_quarter": float(worst_gap),
        "bound_failures": bound_failures,
        "mu_fold_failures": mu_failures,
    }
    ok = bound_failures == 0 and mu_failures == 0
    return report, ok


def _verify_lemma_section(args) -> tuple[dict, bool]:
    polys = domains.random_polygon_corpus(args.seed, args.count)
    failures = 0
    for poly in polys:
        _, _, verified = shadow_section_for_min_breadth(poly)
        if not verified:
            failures += 1
    report = {
        "command": "verify-lemma section",
        "corpus": "random",
        "count": args.count,
        "seed": args.seed,
        "section_shadow_failures": failures,
    }
    return report, failures == 0


def _verify_lemma_rectangle(args) -> tuple[dict, bool]:
    body = _load_domain(args.domain)
    cut, _, _ = shadow_section_for_min_breadth(body)
    rep = folding.rectangle_rigidity_check(body, cut, args.delta)
    rep["command"] = "verify-lemma rectangle"
    rep["domain"] = args.domain
    rep["seed"] = args.seed
    ok = rep["rectangle"] or rep.get("no_drop_nearby", False)
    return rep, bool(ok)


def cmd_appendix(args) -> tuple[dict, bool]:
    spec = kalpha.KAlphaSpec(alpha=args.alpha)
    body, dirs, profiles = kalpha.sweep_profiles(spec, args.n_directions)
    fold_rep = kalpha.verify_folding_bound(spec, args.n_directions, profiles=profiles)
    tbar_rep = kalpha.verify_tbar_bound(spec, args.n_directions, profiles=profiles)
    heart_rep = kalpha.verify_heart_segment(spec, args.n_directions, profiles=profiles)
    report = {
        "command": "appendix",
        "alpha": args.alpha,
        "n_directions": args.n_directions,
        "seed": args.seed,
        "folding_bound": fold_rep,
        "tbar_bound": tbar_rep,
        "heart_segment": heart_rep,
    }
    ok = fold_rep["bound_holds"] and tbar_rep["bound_holds"] and heart_rep["contained"]
    if args.sequence_n:
        _, seq_rep = kalpha.build_sequence_example(args.sequence_n, args.n_directions)
        report["sequence"] = seq_rep
        ok = ok and seq_rep["all_caps_disjoint"]
    if args.obj:
        _write_obj(body, args.obj)
        report["obj"] = args.obj
    return report, bool(ok)


def _write_obj(body, path) -> None:
    lines = [f"v {x:.12g} {y:.12g} {z:.12g}" for x, y, z in body.vertices]
    if body.n_vertices == 4:
        faces = [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]
    else:
        from scipy.spatial import ConvexHull

        faces = (ConvexHull(body.vertices).simplices + 1).tolist()
    lines += [f"f {a} {b} {c}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_check_concavity(args) -> tuple[dict, bool]:
    domain = _load_domain(args.domain)
    reaction = _reaction_from_args(args)
    field = solve(domain, reaction, args.h)
    qc = analysis.check_quasiconcave(field, args.n_levels)
    crit = analysis.count_critical_points(field)
    transform = analysis.phi_transform(reaction)
    rng = np.random.default_rng(args.seed)
    strict = analysis.check_strict_concavity(transform.apply(field), args.n_segments, rng=rng)
    report = {
        "command": "check-concavity",
        "domain": args.domain,
        "reaction": reaction.label(),
        "h": args.h,
        "seed": args.seed,
        "max_u": field.max_value,
        "quasiconcave": {k: v for k, v in qc.items() if k != "levels"},
        "critical_count": crit.count,
        "argmax_diameter": crit.argmax_diameter,
        "strict_concavity": strict,
    }
    ok = qc["pass"] and crit.count == 1 and strict["strict"]
    return report, bool(ok)


def cmd_check_hypotheses(args) -> tuple[dict, bool]:
    reaction = _reaction_from_args(args)
    rep = analysis.check_hypotheses(reaction)
    rep["command"] = "check-hypotheses"
    rep["seed"] = args.seed
    ok = all(v["pass"] for v in rep.values() if isinstance(v, dict) and "pass" in v)
    return rep, bool(ok)


def cmd_picone(args) -> tuple[dict, bool]:
    domain = _load_domain(args.domain)
    reaction = _reaction_from_args(args)
    field = solve(domain, reaction, args.h)
    rng = np.random.default_rng(args.seed)
    noise = 1.0 + args.perturb * rng.random(field.mesh.n_points)
    other = field.transform(lambda v: v * noise)
    rep = analysis.picone_check(field, other, p=args.p)
    rep["command"] = "picone"
    rep["domain"] = args.domain
    rep["perturb"] = args.perturb
    rep["seed"] = args.seed
    return rep, bool(rep["pass"])


def cmd_reflect_experiment(args) -> tuple[dict, bool]:
    domain = _load_domain(args.domain)
    reaction = _reaction_from_args(args)
    field = solve(domain, reaction, args.h)
    rep = analysis.reflection_comparison_experiment(field, args.level_frac * field.max_value)
    rep["command"] = "reflect-experiment"
    rep["domain"] = args.domain
    rep["seed"] = args.seed
    if args.svg:
        kt = level_set(field, args.level_frac * field.max_value).polygon
        omega = np.array(rep["cut_direction"])
        cap_poly = folding.cap(kt, Cut(rep["mu"], omega))
        canvas = SvgCanvas()
        canvas.polygon(domain.vertices, stroke="#999")
        canvas.polygon(kt.vertices, stroke="#333")
        canvas.polygon(cap_poly.vertices, stroke="#b33", fill="#b33", opacity=0.2)
        canvas.polygon(
            folding.reflect(cap_poly.vertices, Cut(rep["mu"], omega)),
            stroke="#2a2",
            fill="#2a2",
            opacity=0.2,
        )
        canvas.write(args.svg)
        rep["svg"] = args.svg
    return rep, bool(rep["comparison_holds"])


# ---------------------------------------------------------------------------
# sweep


def _parse_config_file(path: Path) -> dict:
    """key = value lines; values are JSON where possible, bare strings otherwise."""
    allowed = {"domains", "p_list", "reactions", "h", "seed", "n_levels", "n_segments", "jobs"}
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in allowed:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        val = val.strip()
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _run_sweep_cell(cell: dict) -> dict:
    result = {"cell": cell}
    try:
        domain = _load_domain(cell["domain"])
        if cell["reaction"] == "torsion":
            reaction = Reaction(p=cell["p"])
        else:
            q = (1.0 + cell["p"]) / 2.0
            reaction = Reaction(p=cell["p"], kind="power", q=q)
        field = solve(domain, reaction, cell["h"])
        qc = analysis.check_quasiconcave(field, cell["n_levels"])
        crit = analysis.count_critical_points(field)
        transform = analysis.phi_transform(reaction)
        rng = np.random.default_rng(cell["seed"])
        strict = analysis.check_strict_concavity(
            transform.apply(field), cell["n_segments"], rng=rng
        )
        result.update(
            max_u=field.max_value,
            quasiconcave_pass=qc["pass"],
            worst_defect=qc["worst_defect"],
            critical_count=crit.count,
            argmax_diameter=crit.argmax_diameter,
            strict_concave=strict["strict"],
            min_gap=strict["min_gap"],
            ok=bool(qc["pass"] and crit.count == 1 and strict["strict"]),
        )
    except Exception as exc:  # per-cell failures are recorded, not raised
        result.update(error=f"{type(exc).__name__}: {exc}", ok=False)
    return result


def cmd_sweep(args) -> tuple[dict, bool]:
    config = {
        "domains": ["disk", "square", "rect31", "pentagon"],
        "p_list": [1.5, 2.0, 3.0],
        "reactions": ["torsion", "power"],
        "h": 0.06,
        "seed": args.seed,
        "n_levels": 12,
        "n_segments": 2000,
        "jobs": 1,
    }
    if args.config:
        config.update(_parse_config_file(Path(args.config)))
    for key in ("domains", "p_list", "reactions", "h", "jobs"):
        override = getattr(args, key if key != "p_list" else "p_list_flag", None)
        if override:
            config[key] = override
    if not config["domains"]:
        raise UsageError("empty domain list")
    if not config["p_list"] or not config["reactions"]:
        raise UsageError("empty p list or reaction list")

    cells = []
    for domain in config["domains"]:
        for p in config["p_list"]:
            for reaction in config["reactions"]:
                cells.append(
                    {
                        "domain": domain,
                        "p": float(p),
                        "reaction": reaction,
                        "h": float(config["h"]),
                        "seed": int(config["seed"]),
                        "n_levels": int(config["n_levels"]),
                        "n_segments": int(config["n_segments"]),
                        "index": len(cells),
                    }
                )
    jobs = int(config["jobs"])
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_sweep_cell, cells))
    else:
        results = [_run_sweep_cell(c) for c in cells]
    results.sort(key=lambda r: r["cell"]["index"])
    ok = all(r.get("ok") for r in results)
    report = {
        "command": "sweep",
        "config": config,
        "seed": config["seed"],
        "n_cells": len(cells),
        "cells": results,
        "all_pass": bool(ok),
    }
    return report, bool(ok)


# ---------------------------------------------------------------------------
# parser / dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexfold",
        description="Convex folding geometry and p-Laplacian concavity experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, with_solver=False):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out", help="write the JSON report here")
        if with_solver:
            sp.add_argument("--domain", default="square")
            sp.add_argument("--p", type=float, default=2.0)
            sp.add_argument("--reaction", choices=["torsion", "power"], default="torsion")
            sp.add_argument("--q", type=float, default=1.5)
            sp.add_argument("--c", type=float, default=1.0)
            sp.add_argument("--h", type=float, default=0.02)

    sp = sub.add_parser("solve", help="solve the Dirichlet problem")
    common(sp, with_solver=True)
    sp.add_argument("--csv", help="dump nodal values as x,y,u")
    sp.add_argument("--grid", help="dump a raster of the field as .npy")
    sp.add_argument("--grid-n", type=int, default=256)
    sp.add_argument("--svg", help="contour plot output")

    sp = sub.add_parser("fold", help="folding profile of a body")
    common(sp)
    sp.add_argument("--domain", default="square")
    sp.add_argument("--omega", help="single direction as 'x,y'")
    sp.add_argument("--n-directions", type=int, default=720)
    sp.add_argument("--svg")

    sp = sub.add_parser("heart", help="heart outer approximation")
    common(sp)
    sp.add_argument("--domain", default="square")
    sp.add_argument("--n-directions", type=int, default=None)
    sp.add_argument("--svg")

    sp = sub.add_parser("verify-lemma", help="run a lemma verifier")
    sp.add_argument("which", choices=["fold", "section", "rectangle"])
    common(sp)
    sp.add_argument("--corpus", default="random")
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--domain", default="parallelogram")
    sp.add_argument("--delta", type=float, default=0.05)

    sp = sub.add_parser("appendix", help="thin tetrahedron family checks")
    common(sp)
    sp.add_argument("--alpha", type=float, default=0.02)
    sp.add_argument("--n-directions", type=int, default=5000)
    sp.add_argument("--sequence-n", type=int, default=0)
    sp.add_argument("--obj", help="dump the tetrahedron as OBJ")

    sp = sub.add_parser("check-concavity", help="quasi-concavity and strict concavity")
    common(sp, with_solver=True)
    sp.add_argument("--n-levels", type=int, default=15)
    sp.add_argument("--n-segments", type=int, default=10000)

    sp = sub.add_parser("check-hypotheses", help="reaction hypothesis checks")
    common(sp)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--reaction", choices=["torsion", "power"], default="torsion")
    sp.add_argument("--q", type=float, default=1.5)
    sp.add_argument("--c", type=float, default=1.0)

    sp = sub.add_parser("picone", help="gradient inequality slack on a solved field")
    common(sp, with_solver=True)
    sp.add_argument("--perturb", type=float, default=0.1)

    sp = sub.add_parser("reflect-experiment", help="fold a level set and compare")
    common(sp, with_solver=True)
    sp.add_argument("--level-frac", type=float, default=0.5)
    sp.add_argument("--svg")

    sp = sub.add_parser("sweep", help="config-driven experiment sweep")
    common(sp)
    sp.add_argument("--config", help="key = value config file")
    sp.add_argument("--domains", nargs="*")
    sp.add_argument("--p-list", dest="p_list_flag", nargs="*", type=float)
    sp.add_argument("--reactions", nargs="*")
    sp.add_argument("--h", type=float)
    sp.add_argument("--jobs", type=int)
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "fold": cmd_fold,
    "heart": cmd_heart,
    "verify-lemma": cmd_verify_lemma,
    "appendix": cmd_appendix,
    "check-concavity": cmd_check_concavity,
    "check-hypotheses": cmd_check_hypotheses,
    "picone": cmd_picone,
    "reflect-experiment": cmd_reflect_experiment,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        report, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except ConvexFoldError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report.setdefault("seed", getattr(args, "seed", DEFAULT_SEED))
    text = dumps_report(report)
    if getattr(args, "out", None):
        write_report(report, args.out)
    sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
