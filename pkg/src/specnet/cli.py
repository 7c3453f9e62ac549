"""Command-line front end.  Every command prints sorted-key JSON (or expression text)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import coords as C
from . import symplectic as SP
from .algebra import NotHermitianInstance, NotInvertible, element_from_json, parse_algebra, signature
from .covering import Covering, FormulaMismatch, pi1_rank, topology_report
from .lifting import (InconsistentStep, LiftEngine, MissingEdgeValue, PathTooLong, enumerate_lifts_bruteforce,
                      parse_path, random_path, sn_lift)
from .localsys import (AbelianLocalSystem, FramingNotInvariant, NotInvertibleHolonomy, NotTransverse, abelianize,
                       framed_from_json, nonabelianize, random_abelian_system, random_decorated_system)
from .surface import NotFlippable, ValidationError, polygon, preset, presets, triangulation_from_json

EXIT_FAIL, EXIT_INVALID, EXIT_FORMULA, EXIT_MISSING = 1, 2, 3, 4


class Invalid(click.ClickException):
    exit_code = EXIT_INVALID


def emit(obj, out=None):
    text = json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise Invalid(f"cannot read {path}: {e}") from None


def load_surface(spec):
    """Preset name, path to a triangulation file, or an inline triangulation dict."""
    try:
        if isinstance(spec, dict):
            return triangulation_from_json(spec)
        if spec in presets():
            return preset(spec)
        tri = triangulation_from_json(_load_json(spec))
        Covering(tri)
        return tri
    except (ValidationError, KeyError, TypeError, ValueError) as e:
        if isinstance(e, click.ClickException):
            raise
        raise Invalid(f"invalid surface: {e}") from None


def load_system(path):
    """System file: {"surface": ..., "abelian": {...}} or {"surface": ..., "framed": {...}}."""
    data = _load_json(path)
    if "surface" not in data:
        raise Invalid("system file needs a 'surface' entry")
    tri = load_surface(data["surface"])
    try:
        if "abelian" in data:
            return AbelianLocalSystem.from_json(Covering(tri), data["abelian"])
        if "framed" in data:
            return framed_from_json(tri, data["framed"])
    except (KeyError, ValueError, NotInvertible) as e:
        raise Invalid(f"invalid system: {e}") from None
    raise Invalid("system file needs an 'abelian' or 'framed' entry")


def system_document(surface, sys=None, f=None):
    out = {"surface": surface}
    if sys is not None:
        out["abelian"] = sys.to_json()
    if f is not None:
        out["framed"] = f.to_json()
    return out


def _framed(obj):
    return obj if not isinstance(obj, AbelianLocalSystem) else nonabelianize(obj)


def _mat_json(m):
    return [[m.a.c.tolist(), m.b.c.tolist()], [m.c.c.tolist(), m.d.c.tolist()]]


@click.group()
def main():
    """Spectral-network abelianization toolkit."""


def _run(fn):
    try:
        return fn()
    except click.ClickException:
        raise
    except FormulaMismatch as e:
        click.echo(f"formula mismatch: {e}", err=True)
        sys.exit(EXIT_FORMULA)
    except MissingEdgeValue as e:
        click.echo(f"missing edge value: {e}", err=True)
        sys.exit(EXIT_MISSING)
    except (ValidationError, InconsistentStep, PathTooLong, SP.BadParameterCount, C.NotDecorated,
            C.NotAPolygon, C.MissingSymbol, C.FlipDegenerate, NotTransverse, FramingNotInvariant,
            NotInvertible, NotInvertibleHolonomy, NotHermitianInstance, SP.NotIsotropic, ValueError) as e:
        click.echo(f"invalid input: {e}", err=True)
        sys.exit(EXIT_INVALID)


@main.command()
@click.argument("surface")
@click.option("--out", default=None)
def cover(surface, out):
    """Topology of the branched double cover, computed two ways."""
    def go():
        c = Covering(load_surface(surface))
        rep = topology_report(c).to_json()
        rank, details = pi1_rank(c)
        rep["pi1_rank"] = rank
        rep["pi1_rank_details"] = details
        emit(rep, out)
    _run(go)


@main.command()
@click.argument("system")
@click.argument("word")
@click.option("--out", default=None)
def holonomy(system, word, out):
    """Evaluate the lift of a base word against a system file."""
    def go():
        obj = load_system(system)
        tri = obj.cover.tri
        path = parse_path(tri, word)
        m = obj.holonomy(path)
        emit({"word": word, "matrix": _mat_json(m)}, out)
    _run(go)


@main.command()
@click.argument("system")
@click.option("--out", default=None)
def extract(system, out):
    """Coordinate chart of a decorated system."""
    def go():
        obj = load_system(system)
        chart = C.chart_of(obj) if isinstance(obj, AbelianLocalSystem) else C.extract_coordinates(obj)
        emit(chart.to_json(), out)
    _run(go)


@main.command()
@click.argument("chart")
@click.argument("edge", type=int)
@click.option("--tol", default=1e-10, show_default=True)
@click.option("--out", default=None)
def flip(chart, edge, tol, out):
    """Apply the exchange relation at EDGE."""
    def go():
        ch = C.ACoordinateChart.from_json(_load_json(chart))
        emit(C.flip_coordinates(ch, edge, tol).to_json(), out)
    _run(go)


@main.command()
@click.argument("n", type=int)
@click.argument("i", type=int)
@click.argument("j", type=int)
@click.option("--bound", default=10, show_default=True)
def expand(n, i, j, bound):
    """Laurent expansion of the projection from puncture J to puncture I of the n-gon."""
    def go():
        click.echo(C.laurent_expand(polygon(n), i, j, bound=bound).to_text())
    _run(go)


@main.command(name="eval")
@click.argument("expr")
@click.argument("chart")
@click.option("--out", default=None)
def eval_cmd(expr, chart, out):
    """Evaluate a Laurent expression against a chart file."""
    def go():
        ch = C.ACoordinateChart.from_json(_load_json(chart))
        val = C.evaluate_expr(C.NCLaurentExpr.parse(expr), ch)
        emit({"expression": expr, "value": val.to_json()}, out)
    _run(go)


@main.command(name="sympl-check")
@click.argument("system")
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--out", default=None)
def sympl_check(system, tol, out):
    """Symplectic verdict of a system file; exit 1 on violation."""
    def go():
        v = SP.check_symplectic_system(_framed(load_system(system)), tol)
        emit(v.to_json(), out)
        if not v.ok:
            sys.exit(EXIT_FAIL)
    _run(go)


def _params_from_json(data):
    tri = load_surface(data["surface"])
    alg = parse_algebra(data.get("algebra", "R"))
    sym = [element_from_json(x, alg) for x in data.get("symmetric", [])]
    units = [element_from_json(x, alg) for x in data.get("units", [])]
    return tri, alg, sym, units, data.get("mode", "theorem")


@main.command(name="sympl-reconstruct")
@click.argument("params", required=False)
@click.option("--surface", default=None, help="preset or triangulation file for --random")
@click.option("--random", "use_random", is_flag=True, help="random positive parameters")
@click.option("--algebra", default="R", show_default=True)
@click.option("--mode", default="theorem", show_default=True, type=click.Choice(SP.MODES))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def sympl_reconstruct(params, surface, use_random, algebra, mode, seed, out):
    """Build a symplectic system from pairing values and units."""
    def go():
        if use_random:
            if not surface:
                raise Invalid("--random needs --surface")
            tri, alg = load_surface(surface), parse_algebra(algebra)
            rng = np.random.default_rng(seed)
            ns, nu = SP.parameter_counts(tri.surface, mode)
            sym = SP.random_pairing_values(alg, rng, ns)
            units = SP.random_units(alg, rng, nu)
            surf = surface
            m = mode
        else:
            if not params:
                raise Invalid("give a parameter file or --random")
            data = _load_json(params)
            tri, alg, sym, units, m = _params_from_json(data)
            surf = data["surface"]
        abel, f = SP.reconstruct_symplectic(tri, alg, sym, units, m)
        doc = system_document(surf, abel, f)
        doc["parameters"] = {"mode": m, "symmetric": [x.to_json() for x in sym],
                             "units": [x.to_json() for x in units],
                             "counts": SP.count_report(tri.surface)}
        emit(doc, out)
    _run(go)


def maximality_data(f):
    """Per triangle: KM index, pairing-value signature and, for decorated systems, the triangle coordinate signature."""
    sysab = abelianize(f)
    n = len(f.tri.triangles)
    a0 = [SP.pairing_value(sysab, t) for t in range(n)]
    decorated = sysab.is_decorated()
    betas = SP.beta_values(C.chart_of(sysab)) if decorated else [None] * n
    km = SP.triangle_km_indices(f)
    top = f.alg.rank_bound()
    faces = []
    for t in range(n):
        faces.append({"triangle": t, "km_index": km[t], "a0_signature": signature(a0[t], 1e-7),
                      "beta_signature": signature(betas[t], 1e-7) if decorated else None})
    coherent = all(x["km_index"] == x["a0_signature"] and x["beta_signature"] in (None, x["km_index"])
                   for x in faces)
    return {"maximal": all(k == top for k in km), "coherent": coherent, "decorated": decorated,
            "rank_bound": top, "faces": faces,
            "counterexample_faces": [x["triangle"] for x in faces if x["km_index"] != top]}


@main.command(name="maximality-report")
@click.argument("system")
@click.option("--out", default=None)
def maximality_report(system, out):
    """Triangle KM indices, pairing-value and triangle-coordinate signatures."""
    def go():
        emit(maximality_data(_framed(load_system(system))), out)
    _run(go)


# randomized suites

def _suite_topology(cfg):
    rows = {}
    for name in presets():
        c = Covering(preset(name))
        rep = topology_report(c)
        rank, _ = pi1_rank(c)
        rows[name] = {"genus_cover": rep.genus_cover, "boundary": rep.boundary_components_cover, "pi1_rank": rank}
    return {"checked": len(rows), "failures": [], "presets": rows}


def _suite_lifting(cfg):
    rng = np.random.default_rng(cfg["seed"])
    fails, count = [], 0
    for name in presets():
        tri = preset(name)
        eng = LiftEngine(Covering(tri))
        for _ in range(cfg["n"]):
            p = random_path(tri, rng, int(rng.integers(0, min(cfg["bound"], 8) + 1)))
            count += 1
            if sn_lift(eng, p) != enumerate_lifts_bruteforce(eng, p, bound=cfg["bound"]):
                fails.append({"preset": name, "start": p.start, "moves": [list(m) for m in p.moves]})
    return {"checked": count, "failures": fails[:1]}


def _suite_bijection(cfg):
    rng = np.random.default_rng(cfg["seed"])
    alg = parse_algebra(cfg["algebra"])
    worst, lower, fails, count = 0.0, 0.0, [], 0
    for name in presets():
        c = Covering(preset(name))
        for _ in range(cfg["n"]):
            s = random_abelian_system(c, alg, rng)
            f = nonabelianize(s)
            r = abelianize(f).max_difference(s)
            worst = max(worst, r)
            for v in c.internal_punctures:
                lower = max(lower, f.peripheral_in_frame(v).c.norm())
            count += 1
            if r >= cfg["tol"]:
                fails.append({"preset": name, "residual": r})
    return {"checked": count, "max_residual": worst, "max_lower_left": lower, "failures": fails[:1]}


def _suite_coords(cfg):
    rng = np.random.default_rng(cfg["seed"])
    alg = parse_algebra(cfg["algebra"])
    tri_w, flip_w, fails, count = 0.0, 0.0, [], 0
    for name in presets():
        tri = preset(name)
        c = Covering(tri)
        for _ in range(cfg["n"]):
            s = random_decorated_system(c, alg, rng)
            chart = C.chart_of(s)
            r = max(C.triangle_relation_residuals(chart), default=0.0)
            tri_w = max(tri_w, r)
            count += 1
            if r >= cfg["tol"]:
                fails.append({"preset": name, "triangle_residual": r})
            if name == "sphere3":
                continue
            f = nonabelianize(s)
            for e in sorted(tri.internal_edges()):
                try:
                    new = C.flip_coordinates(chart, e)
                except (NotFlippable, C.FlipDegenerate):
                    continue
                again = C.extract_coordinates(C.flip_framed_system(f, e))
                d = new.max_difference(again)
                flip_w = max(flip_w, d)
                if d >= cfg["tol"] * 100:
                    fails.append({"preset": name, "edge": e, "flip_residual": d})
    return {"checked": count, "max_triangle_residual": tri_w, "max_flip_residual": flip_w, "failures": fails[:1]}


def _suite_laurent(cfg):
    rng = np.random.default_rng(cfg["seed"])
    alg = parse_algebra(cfg["algebra"])
    n = cfg["polygon"]
    tri = polygon(n)
    exprs = {(i, j): C.laurent_expand(tri, i, j, bound=cfg["bound"]) for i in range(n) for j in range(n) if i != j}
    worst, fails = 0.0, []
    for _ in range(cfg["n"]):
        vec, comp = C.random_polygon_vectors(tri, alg, rng)
        chart = C.extract_coordinates(C.polygon_decorated_system(tri, alg, vec, comp))
        for (i, j), e in exprs.items():
            r = (C.evaluate_expr(e, chart) - C.direct_value(vec, comp, i, j)).norm()
            worst = max(worst, r)
            if r >= cfg["tol"]:
                fails.append({"i": i, "j": j, "residual": r})
    return {"checked": cfg["n"] * len(exprs), "max_residual": worst, "failures": fails[:1]}


def _suite_symplectic(cfg):
    rng = np.random.default_rng(cfg["seed"])
    alg = parse_algebra(cfg["algebra"])
    worst, fails, count = 0.0, [], 0
    for name in presets():
        tri = preset(name)
        for _ in range(cfg["n"]):
            try:
                s, f = SP.reconstruct_maximal(tri, alg, rng)
                pd = SP.build_pairing(f, s)
            except (SP.PairingInconsistent, NotInvertible) as e:
                fails.append({"preset": name, "error": str(e)})
                continue
            worst = max(worst, max(pd.residuals.values()))
            count += 1
    return {"checked": count, "max_residual": worst, "failures": fails[:1]}


def _suite_maximality(cfg):
    if cfg.get("fixture"):
        tri, alg, sym, units, mode = _params_from_json(_load_json(cfg["fixture"]))
        _, f = SP.reconstruct_symplectic(tri, alg, sym, units, mode)
        rep = maximality_data(f)
        fails = [] if rep["maximal"] else [{"counterexample_faces": rep["counterexample_faces"], "faces": rep["faces"]}]
        return {"checked": 1, "failures": fails}
    rng = np.random.default_rng(cfg["seed"])
    alg = parse_algebra(cfg["algebra"])
    fails, count = [], 0
    for name in presets():
        tri = preset(name)
        for k in range(cfg["n"]):
            _, f = SP.reconstruct_maximal(tri, alg, rng)
            rep = maximality_data(f)
            count += 1
            if not (rep["maximal"] and rep["coherent"]):
                fails.append({"preset": name, "counterexample_faces": rep["counterexample_faces"]})
    return {"checked": count, "failures": fails[:1]}


SUITES = {"topology": _suite_topology, "lifting": _suite_lifting, "bijection": _suite_bijection,
          "coords": _suite_coords, "laurent": _suite_laurent, "symplectic": _suite_symplectic,
          "maximality": _suite_maximality}


@main.command()
@click.argument("suite", type=click.Choice(sorted(SUITES)))
@click.option("--algebra", default="M2", show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--bound", default=10, show_default=True, help="path-length limit")
@click.option("--n", "polygon_n", default=6, show_default=True, help="polygon size for the laurent suite")
@click.option("--samples", default=5, show_default=True, help="random samples per preset")
@click.option("--fixture", default=None, help="parameter file checked by the maximality suite")
@click.option("--out", default=None)
def verify(suite, algebra, tol, seed, bound, polygon_n, samples, fixture, out):
    """Run a seeded randomized suite; exit 1 with the first counterexample on failure."""
    if tol <= 0 or bound <= 0 or polygon_n < 3 or samples <= 0:
        raise Invalid("tolerance, bounds and sample counts must be positive")
    cfg = {"algebra": algebra, "tol": tol, "seed": seed, "bound": bound, "polygon": polygon_n,
           "n": samples, "fixture": fixture}

    def go():
        rep = SUITES[suite](cfg)
        rep["suite"] = suite
        rep["config"] = {k: v for k, v in cfg.items() if v is not None}
        rep["pass"] = not rep["failures"]
        emit(rep, out)
        if rep["failures"]:
            sys.exit(EXIT_FAIL)
    _run(go)


if __name__ == "__main__":
    main()
