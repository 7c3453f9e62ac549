"""Acceptance criteria 1-10.  Each check returns (ok, detail); one PASS/FAIL line is printed per criterion.

Run directly (``python3 tests/test_acceptance.py``) or through pytest, where the lines
appear in the terminal summary.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from helpers import ACCEPTANCE_LINES, insert_contractible, random_word  # noqa: E402

from specnet import symplectic as S  # noqa: E402
from specnet.algebra import INSTANCES, Mat2, NotInvertible, parse_algebra, signature  # noqa: E402
from specnet.coords import (chart_distance_by_endpoints, chart_of, direct_value, evaluate_expr,  # noqa: E402
                            extract_coordinates, flip_coordinates, flip_framed_system, laurent_expand,
                            pentagon_cycle, polygon_decorated_system, random_polygon_vectors,
                            triangle_relation_residuals)
from specnet.covering import Covering, pi1_rank, topology_report  # noqa: E402
from specnet.lifting import (LiftEngine, enumerate_lifts_bruteforce, enumerate_words,  # noqa: E402
                             fiber_loop, sn_lift)
from specnet.localsys import (NotInvertibleHolonomy, abelianize, km_six_fold_product,  # noqa: E402
                              nonabelianize, random_abelian_system, random_decorated_system)
from specnet.surface import polygon, preset, presets  # noqa: E402

PRESETS = sorted(presets())
POLYGONS = ("S3", "S4", "S5", "S6", "S7", "S8")
M2, R = parse_algebra("M2"), parse_algebra("R")


def _rng(k):
    return np.random.default_rng(1000 + k)


def topology():
    bad = []
    for name in PRESETS:
        c = Covering(preset(name))
        rep = topology_report(c)
        pi1_rank(c)
        if rep.genus_cover != rep.formula_genus or rep.boundary_components_cover != rep.formula_boundary:
            bad.append(name)
    cases = {"odd polygon": "S5", "even polygon": "S6", "internal-puncture disk": "digon1"}
    return not bad, f"{len(PRESETS)} presets incl. {', '.join(cases)}; mismatches {bad}"


def homotopy_invariance():
    rng = _rng(2)
    bad, words = [], 0
    for name in PRESETS:
        tri = preset(name)
        eng = LiftEngine(Covering(tri))
        for _ in range(200):
            p = random_word(tri, rng)
            q = insert_contractible(tri, p, rng, n_insert=int(rng.integers(1, 4)))
            words += 1
            if sn_lift(eng, p) != sn_lift(eng, q):
                bad.append((name, p.start, p.moves))
    exhaustive = 0
    for name in ("S5", "torus1"):
        tri = preset(name)
        eng = LiftEngine(Covering(tri))
        for d in tri.darts():
            for p in enumerate_words(tri, d, 10):
                exhaustive += 1
                if sn_lift(eng, p) != enumerate_lifts_bruteforce(eng, p):
                    bad.append((name, p.start, p.moves))
    return not bad, f"{words} random words with insertions, {exhaustive} exhaustive words; failures {bad[:1]}"


def twisting():
    rng = _rng(3)
    worst = 0.0
    for tag in INSTANCES:
        alg = parse_algebra(tag)
        for name in PRESETS:
            c = Covering(preset(name))
            sys_ = random_abelian_system(c, alg, rng)
            for d in c.tri.darts():
                worst = max(worst, sys_.holonomy(fiber_loop(d)).residual(-Mat2.identity(alg)))
    return worst < 1e-9, f"max residual {worst:.2e} over {len(INSTANCES)} instances"


def bijection():
    rng = _rng(4)
    worst, lower, n = 0.0, 0.0, 0
    for tag in INSTANCES:
        alg = parse_algebra(tag)
        for name in PRESETS:
            c = Covering(preset(name))
            for _ in range(100):
                s = random_abelian_system(c, alg, rng)
                f = nonabelianize(s)
                worst = max(worst, abelianize(f).max_difference(s))
                for v in c.internal_punctures:
                    lower = max(lower, f.peripheral_in_frame(v).c.norm())
                n += 1
    return worst < 1e-9 and lower < 1e-9, f"{n} systems, round trip {worst:.2e}, lower-left {lower:.2e}"


def triangle_relation():
    rng = _rng(5)
    worst, n = 0.0, 0
    for tag in INSTANCES:
        alg = parse_algebra(tag)
        for name in PRESETS:
            c = Covering(preset(name))
            for _ in range(5):
                chart = chart_of(random_decorated_system(c, alg, rng))
                worst = max(worst, max(triangle_relation_residuals(chart)))
                n += 1
    return worst < 1e-9, f"{n} charts, max residual {worst:.2e}"


def double_flip_distance(back, chart, e):
    """Distance after undoing the orientation reversal a double flip applies to edge e."""
    def key(d):
        return -d if abs(d) == e else d
    tris = {tuple(key(d) for d in tr) for tr in back.tri.triangles}
    rotations = {tr[i:] + tr[:i] for tr in chart.tri.triangles for i in range(3)}
    if not tris <= rotations:
        return float("inf")
    return max((back[key(d)] - chart[d]).norm() for d in chart.values)


def flip_coherence():
    rng = _rng(6)
    flip_w, double_w, pent_w, n = 0.0, 0.0, 0.0, 0
    for tag in INSTANCES:
        alg = parse_algebra(tag)
        for name in ("S4", "S5", "S6", "torus1", "digon1"):
            c = Covering(preset(name))
            sys_ = random_decorated_system(c, alg, rng)
            f, chart = nonabelianize(sys_), chart_of(sys_)
            for e in sorted(c.tri.internal_edges()):
                new = flip_coordinates(chart, e)
                flip_w = max(flip_w, new.max_difference(extract_coordinates(flip_framed_system(f, e))))
                back = flip_coordinates(new, e)
                double_w = max(double_w, double_flip_distance(back, chart, e))
                n += 1
        tri = polygon(5)
        vec, comp = random_polygon_vectors(tri, alg, rng)
        chart = extract_coordinates(polygon_decorated_system(tri, alg, vec, comp))
        pent_w = max(pent_w, chart_distance_by_endpoints(pentagon_cycle(chart)[-1], chart))
    ok = flip_w < 1e-9 and double_w < 1e-9 and pent_w < 1e-9
    return ok, f"{n} flips: re-extraction {flip_w:.2e}, double flip {double_w:.2e}, pentagon {pent_w:.2e}"


def laurent():
    rng = _rng(7)
    worst, bad_mono, n = 0.0, [], 0
    for k in range(4, 8):
        tri = polygon(k)
        symbols = set(tri.darts())
        exprs = {(i, j): laurent_expand(tri, i, j) for i in range(k) for j in range(k) if i != j}
        for e in exprs.values():
            for mono in e.terms:
                if any(s not in symbols or x not in (1, -1) for s, x in mono):
                    bad_mono.append(mono)
        for tag in ("M2", "H"):
            alg = parse_algebra(tag)
            for _ in range(100):
                vec, comp = random_polygon_vectors(tri, alg, rng)
                chart = extract_coordinates(polygon_decorated_system(tri, alg, vec, comp))
                for (i, j), e in exprs.items():
                    worst = max(worst, (evaluate_expr(e, chart) - direct_value(vec, comp, i, j)).norm())
                    n += 1
    return worst < 1e-9 and not bad_mono, f"{n} evaluations, max residual {worst:.2e}, bad monomials {len(bad_mono)}"


def symplectic_laws():
    rng = _rng(8)
    km = 0.0
    for tag in INSTANCES:
        alg = parse_algebra(tag)
        for _ in range(50):
            ls = [(alg.random(rng), alg.random(rng)) for _ in range(3)]
            km = max(km, (km_six_fold_product(*ls) - alg.one()).norm())
    pair, n = 0.0, 0
    for name in PRESETS:
        for alg in (R, parse_algebra("H"), M2):
            for _ in range(3):
                s, f = S.reconstruct_maximal(preset(name), alg, rng)
                pair = max(pair, max(S.build_pairing(f, s).residuals.values()))
                n += 1
    skew = 0.0
    for name in POLYGONS:
        for alg in (R, M2):
            _, f = S.reconstruct_maximal(preset(name), alg, rng)
            skew = max(skew, S.symplectic_coordinate_relations(extract_coordinates(f)).skew_residual)
    ok = km < 1e-9 and pair < 1e-9 and skew < 1e-9
    return ok, f"KM product {km:.2e}; pairing laws on {n} systems {pair:.2e}; chart skew {skew:.2e}"


INDEFINITE = [[1.0, 0.0], [0.0, -1.0]]


def _maximality_sample(tri, rng, negative):
    ns, nu = S.parameter_counts(tri.surface, "full")
    for _ in range(20):
        sym = S.random_pairing_values(M2, rng, ns)
        if negative:
            sym[int(rng.integers(ns))] = M2(INDEFINITE)
        try:
            return S.reconstruct_symplectic(tri, M2, sym, S.random_units(M2, rng, nu), "full")
        except (NotInvertible, NotInvertibleHolonomy):
            continue
    raise RuntimeError("no invertible sample")


def maximality():
    rng = _rng(9)
    bad, n, with_beta, negatives = [], 0, 0, 0
    names = ("S3", "S4", "S5", "S6", "torus1", "digon1", "sphere3", "monogon1")
    for k in range(100):
        name = names[k % len(names)]
        negative = k % 2 == 1
        s, f = _maximality_sample(preset(name), rng, negative)
        top = M2.rank_bound()
        maximal = S.check_maximal(f)
        a0_pos = all(signature(S.pairing_value(s, t), 1e-7) == top for t in range(len(f.tri.triangles)))
        verdicts = [maximal, a0_pos]
        if s.is_decorated():
            verdicts.append(all(x == top for x in S.symplectic_coordinate_relations(chart_of(s)).beta_signatures))
            with_beta += 1
        if len(set(verdicts)) != 1 or maximal == negative:
            bad.append((name, negative, verdicts))
        negatives += negative
        n += 1
    return not bad, f"{n} systems ({negatives} with one indefinite value, {with_beta} with triangle coordinates); " \
                    f"disagreements {bad[:1]}"


def parameter_counts():
    rng = _rng(10)
    bad = []
    for name in PRESETS:
        tri = preset(name)
        ns, nu = S.parameter_counts(tri.surface, "theorem")
        for ds, du in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            if ns + ds < 0 or nu + du < 0:
                continue
            sym = S.random_pairing_values(R, rng, ns + ds)
            units = S.random_units(R, rng, nu + du)
            try:
                S.reconstruct_symplectic(tri, R, sym, units, "theorem")
                accepted = True
            except S.BadParameterCount:
                accepted = False
            if accepted != (ds == du == 0):
                bad.append((name, ds, du))
    inv = []
    for name in PRESETS:
        tri = preset(name)
        ns, nu = S.parameter_counts(tri.surface, "full")
        for alg in (R, M2):
            sym = S.random_pairing_values(alg, rng, ns, positive=False)
            units = S.random_units(alg, rng, nu)
            _, f = S.reconstruct_symplectic(tri, alg, sym, units, "full")
            u = S.random_units(alg, rng, 1)[0]
            _, g = S.reconstruct_symplectic(tri, alg, *S.act_on_parameters(sym, units, u), "full")
            same = (S.check_maximal(f) == S.check_maximal(g) and S.triangle_km_indices(f) == S.triangle_km_indices(g)
                    and S.check_symplectic_system(f).ok == S.check_symplectic_system(g).ok)
            if alg is R:
                t1 = [x.c[0] for x in S.generator_traces(f)]
                t2 = [x.c[0] for x in S.generator_traces(g)]
                same = same and np.allclose(t1, t2, rtol=1e-7, atol=1e-9)
            if not same:
                inv.append((name, alg.tag()))
    return not bad and not inv, f"count violations {bad}; invariance violations {inv}"


CRITERIA = [
    (1, "topology closed form equals realized complex", topology),
    (2, "lift homotopy invariance and brute-force agreement", homotopy_invariance),
    (3, "fiber loop is -Id", twisting),
    (4, "abelianize after nonabelianize is the identity", bijection),
    (5, "signed triangle relation", triangle_relation),
    (6, "flip coherence", flip_coherence),
    (7, "Laurent expansion equals direct projection", laurent),
    (8, "KM and pairing laws", symplectic_laws),
    (9, "maximality verdicts agree", maximality),
    (10, "parameter counts and congruence invariance", parameter_counts),
]


def run_criterion(k, title, fn):
    t = time.time()
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {title} ({detail}; {time.time() - t:.1f}s)"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok, line


@pytest.mark.parametrize("k,title,fn", CRITERIA, ids=[f"criterion_{k}" for k, _, _ in CRITERIA])
def test_acceptance(k, title, fn):
    ok, line = run_criterion(k, title, fn)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
