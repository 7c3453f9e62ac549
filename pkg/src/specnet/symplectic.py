"""Symplectic layer: Sp2(A, sigma) membership, the pairing on the cover, reconstruction, maximality."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .algebra import Mat2, NotInvertible, condition, is_positive, signature
from .covering import Covering, sink, source
from .lifting import BasePath, hexagon_moves
from .localsys import (AbelianLocalSystem, NotInvertibleHolonomy, NotTransverse, _solve_plan, _walk_value,
                       abelianize, kashiwara_maslov_map, lines_transverse, nonabelianize)
from .surface import euler_characteristic


class PairingInconsistent(ValueError):
    pass


class BadParameterCount(ValueError):
    pass


class NotIsotropic(ValueError):
    pass


# the standard form

def omega(x, y):
    """sigma(x)^T Omega y with Omega = [[0, 1], [-1, 0]]."""
    return x[0].sigma() * y[1] - x[1].sigma() * y[0]


def _sigma_t(g):
    return Mat2(g.a.sigma(), g.c.sigma(), g.b.sigma(), g.d.sigma())


def symplectic_residuals(g):
    """(direct, block) residuals of the two membership tests, relative to |g|^2."""
    alg = g.a.alg
    scale = max(1.0, max(x.norm() for x in (g.a, g.b, g.c, g.d)) ** 2)
    one, zero = alg.one(), alg.zero()
    M = _sigma_t(g) * Mat2(g.c, g.d, -g.a, -g.b)
    direct = M.residual(Mat2(zero, one, -one, zero))
    ac, bd = g.a.sigma() * g.c, g.b.sigma() * g.d
    block = max((ac - ac.sigma()).norm(), (bd - bd.sigma()).norm(),
                (g.a.sigma() * g.d - g.c.sigma() * g.b - one).norm())
    return direct / scale, block / scale


def is_symplectic_matrix(g, eps=1e-9):
    direct, block = symplectic_residuals(g)
    if (direct < eps / 10 and block > 10 * eps) or (block < eps / 10 and direct > 10 * eps):
        from .covering import FormulaMismatch
        raise FormulaMismatch(f"membership tests disagree: direct {direct:.3g}, block {block:.3g}")
    return direct < eps


def random_symplectic_matrix(alg, rng, scale=0.5):
    """exp of a random element [[x, z], [y, -sigma(x)]] with y, z symmetric."""
    x = alg.random(rng, scale)
    y = alg.random_symmetric(rng) * scale
    z = alg.random_symmetric(rng) * scale
    L = alg.left_matrix
    big = np.block([[L(x.c), L(z.c)], [L(y.c), L((-x.sigma()).c)]])
    E = expm(big)
    n = alg.dim
    one = alg.one_coeffs()
    col1 = E @ np.concatenate([one, np.zeros(n)])
    col2 = E @ np.concatenate([np.zeros(n), one])
    return Mat2(alg(col1[:n]), alg(col2[:n]), alg(col1[n:]), alg(col2[n:]))


@dataclass
class Verdict:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "violations": self.violations}


def check_symplectic_system(f, eps=1e-9):
    """Generator holonomies in Sp2 and framing lines isotropic, read in the base frame."""
    bad = []
    for i, g in enumerate(f.generator_holonomies()):
        if not is_symplectic_matrix(g, eps):
            bad.append(f"generator g{i} is not symplectic (residual {symplectic_residuals(g)[0]:.3g})")
    P = f.tree_transport()
    for v, cyc in sorted(f.cover.cycle.items()):
        u = P[cyc[0]].inv() * f.framing[v]
        r = omega(u, u).norm()
        if r >= eps:
            bad.append(f"framing line at puncture {v} is not isotropic (residual {r:.3g})")
    return Verdict(not bad, bad)


# pairing data on the cover

def half_turn_value(sys, t):
    """Walk value of the first half of the hexagon of t: sink to source over the tail of e1."""
    return _walk_value(sys.alg, sys.value_of, hexagon_moves(sys.cover.tri, t)[:6])


def pairing_value(sys, t):
    """a0 of the branch point in triangle t: the pairing of x with its half-turn transport.

    With the sink lift at the marked point of e1 as base, the pairing reads
    sigma(x) y against the source coordinate, so for x = 1 it is the half-turn
    walk value itself.
    """
    return half_turn_value(sys, t)


def gamma_graph_walks(cover, base):
    """Spanning tree of the lifted graph from ``base``: vertex -> list of (dart, +-1) steps."""
    tri = cover.tri
    adj = {}
    for d in tri.darts():
        s, t = sink(tri.tail(d)), source(tri.head(d))
        adj.setdefault(s, []).append((t, d, 1))
        adj.setdefault(t, []).append((s, d, -1))
    paths = {base: ()}
    order = [base]
    tree = set()
    for x in order:
        for y, d, o in adj.get(x, []):
            if y not in paths:
                paths[y] = paths[x] + ((d, o),)
                tree.add(d)
                order.append(y)
    cycles = []
    for d in tri.darts():
        if d in tree:
            continue
        s, t = sink(tri.tail(d)), source(tri.head(d))
        cycles.append(paths[s] + ((d, 1),) + tuple((e, -o) for e, o in reversed(paths[t])))
    return paths, cycles


def walk_value(sys, steps):
    val = sys.alg.one()
    for d, o in steps:
        x = sys.edges[d]
        val = (x if o == 1 else x.inv()) * val
    return val


def theta_steps(steps):
    """Deck image: tau_d becomes tau_{-d} traversed backwards."""
    return tuple((-d, -o) for d, o in steps)


@dataclass
class PairingData:
    a0: dict
    xi_products: dict
    residuals: dict

    def to_json(self):
        return {
            "a0": {str(t): x.c.tolist() for t, x in self.a0.items()},
            "a0_times_xi": {str(t): x.c.tolist() for t, x in self.xi_products.items()},
            "residuals": self.residuals,
        }


def build_pairing(f, sys, eps=1e-9, rng=None):
    """Pairing values a0 per branch point and the laws they obey.

    Checks: f abelianizes to sys; each a0 is a symmetric unit; the pairing is
    parallel along every segment (a_{-d} = -sigma(a_d)) and across loops
    (source loop = sigma(sink loop)^-1); antisymmetry on sampled vectors; the
    theta law on a cycle basis of the lifted graph; a0 a_xi symmetric for
    every branch point joined to the base.
    """
    rng = rng or np.random.default_rng(0)
    alg = sys.alg
    tri = sys.cover.tri
    res = {}
    res["abelianization"] = abelianize(f).max_difference(sys)
    a0 = {t: pairing_value(sys, t) for t in range(len(tri.triangles))}
    res["a0_symmetry"] = max((x - x.sigma()).norm() for x in a0.values())
    for x in a0.values():
        try:
            x.inv()
        except NotInvertible:
            raise PairingInconsistent("a0 is not a unit") from None
    res["parallel_segments"] = max((sys.edges[-d] + sys.edges[d].sigma()).norm() for d in tri.darts())
    loop_res = 0.0
    for v in sys.cover.internal_punctures:
        ls, lt = sys.loops.get(sink(v), alg.one()), sys.loops.get(source(v), alg.one())
        loop_res = max(loop_res, (lt * ls.sigma() - alg.one()).norm())
    res["parallel_loops"] = loop_res
    anti = 0.0
    for _ in range(8):
        x = (alg.random(rng), alg.random(rng))
        y = (alg.random(rng), alg.random(rng))
        anti = max(anti, (omega(x, y) + omega(y, x).sigma()).norm())
    res["antisymmetry"] = anti
    e1 = tri.triangles[0][0]
    base = sink(tri.tail(e1))
    paths, cycles = gamma_graph_walks(sys.cover, base)
    theta = 0.0
    for c in cycles:
        a = walk_value(sys, c)
        a_prime = walk_value(sys, theta_steps(c))
        want = a0[0].inv() * a.inv().sigma() * a0[0]
        theta = max(theta, (a0[0].inv() * a_prime * a0[0] - want).norm())
    res["theta_pairs"] = theta
    xi = {}
    sym = 0.0
    for t, (d1, _, _) in enumerate(tri.triangles):
        b = sink(tri.tail(d1))
        if t == 0 or b not in paths:
            continue
        g = walk_value(sys, paths[b])
        g_theta = walk_value(sys, theta_steps(paths[b]))
        a_xi = a0[0].inv() * g_theta.inv() * a0[t] * g
        xi[t] = a0[0] * a_xi
        sym = max(sym, (xi[t] - xi[t].sigma()).norm())
    res["a0_xi_symmetry"] = sym
    data = PairingData(a0, xi, res)
    bad = {k: v for k, v in res.items() if v >= eps}
    if bad:
        raise PairingInconsistent(f"pairing laws fail: {bad}")
    return data


# parameter counts and reconstruction

MODES = ("theorem", "full", "intro")


def parameter_counts(s, mode="theorem"):
    """(symmetric, unit) counts.

    theorem: -2 chi + 2p - 1 + sum n_i and 1 - chi + p (chi of the compact
    surface); full: one symmetric value per branch point, same units;
    intro: -2 chi(S) and 1 - chi(S) for the punctured surface S.
    """
    chi = euler_characteristic(s)
    p, nb = s.internal, sum(s.boundary)
    units = 1 - chi + p
    if mode == "theorem":
        return -2 * chi + 2 * p - 1 + nb, units
    if mode == "full":
        return -2 * chi + 2 * p + nb, units
    if mode == "intro":
        chi_s = chi - p - nb
        return -2 * chi_s, 1 - chi_s
    raise ValueError(f"unknown mode {mode!r}")


def count_report(s):
    out = {m: parameter_counts(s, m) for m in MODES}
    out["intro_matches_full"] = out["intro"] == out["full"]
    return out


def _plan_and_tree(cover):
    """Solving plan, gauge tree edges and free edges/loops for reconstruction."""
    tri = cover.tri
    plan = _solve_plan(cover, use_loops=True)
    solved = {abs(target[1]) for _, target in plan if target and target[0] == "s"}
    solved_loops = {cover.cut[target[1]] for _, target in plan if target and target[0] == "c"}
    parent = {v: v for v in tri.punctures()}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree, free = [], []
    for e in sorted(tri.edges):
        if e in solved:
            continue
        a, b = find(tri.tail(e)), find(tri.head(e))
        if a != b:
            parent[a] = b
            tree.append(e)
        else:
            free.append(e)
    roots = {find(v) for v in tri.punctures()}
    if len(roots) != 1:
        raise BadParameterCount("unsolved edges do not connect the punctures")
    loops = [v for v in cover.internal_punctures if v not in solved_loops]
    return plan, tree, free, loops


def _solve_half_turn(sys, t, target, S):
    """Solve the half-turn walk of t equal to S on the target value, then set its theta partner."""
    alg = sys.alg
    moves = hexagon_moves(sys.cover.tri, t)[:6]
    kind, x = target
    if kind == "s":
        k = next(i for i, (lab, _) in enumerate(moves) if lab[0] == "s" and abs(lab[1]) == abs(x))
    else:
        k = next(i for i, (lab, _) in enumerate(moves) if lab[0] == "c" and lab[1] == x)
    earlier = _walk_value(alg, sys.value_of, moves[:k])
    later = _walk_value(alg, sys.value_of, moves[k + 1:])
    u = later.inv() * S * earlier.inv()
    lab, o = moves[k]
    val = u if o == 1 else u.inv()
    if lab[0] == "s":
        sys.edges[lab[1]] = val
        sys.edges[-lab[1]] = -(val.sigma())
    else:
        v = sys.cover.cut[lab[1]]
        sys.loops[2 * v + lab[2]] = val
        sys.loops[2 * v + 1 - lab[2]] = val.sigma().inv()


def reconstruct_symplectic(tri, alg, symmetric, units, mode="theorem", eps=1e-9):
    """Abelian and framed systems from pairing values and unit parameters.

    ``symmetric`` holds one pairing value per branch point (triangle order);
    in theorem mode the first is the identity and is not passed.  Gauge: tree
    edges carry s_0, other unsolved edges s_0 u, unsolved sink loops u; each
    triangle then solves its half-turn relation on one value.  A unit u acting
    by congruence on the symmetric values and by conjugation on the units
    moves the result by the constant gauge u^-1.
    """
    n_sym, n_units = parameter_counts(tri.surface, mode)
    if mode == "intro" and parameter_counts(tri.surface, "intro") != parameter_counts(tri.surface, "full"):
        raise BadParameterCount("the boundaryless count does not apply to this surface")
    if len(symmetric) != n_sym or len(units) != n_units:
        raise BadParameterCount(f"expected {n_sym} symmetric and {n_units} unit values, "
                                f"got {len(symmetric)} and {len(units)}")
    sym = [alg.one()] + list(symmetric) if mode == "theorem" else list(symmetric)
    for s in sym:
        if (s - s.sigma()).norm() >= eps:
            raise BadParameterCount("pairing values must be sigma-symmetric")
        s.inv()
    for u in units:
        u.inv()
    cover = Covering(tri)
    plan, tree, free, loops = _plan_and_tree(cover)
    if len(free) + len(loops) != n_units:
        raise BadParameterCount(f"gauge-fixed layout has {len(free) + len(loops)} unit slots, "
                                f"formula gives {n_units}")
    s0 = sym[0]
    sys = AbelianLocalSystem(cover, alg, {})
    for e in tree:
        sys.edges[e], sys.edges[-e] = s0, -(s0.sigma())
    it = iter(units)
    for e in free:
        val = s0 * next(it)
        sys.edges[e], sys.edges[-e] = val, -(val.sigma())
    for v in loops:
        u = next(it)
        sys.loops[sink(v)], sys.loops[source(v)] = u, u.sigma().inv()
    for v in cover.internal_punctures:
        sys.loops.setdefault(sink(v), alg.one())
        sys.loops.setdefault(source(v), alg.one())
    for t, target in plan:
        if target is None:
            raise BadParameterCount("a triangle has nothing to solve")
        _solve_half_turn(sys, t, target, sym[t])
    if max(sys.hexagon_residuals()) >= 1e-8:
        raise PairingInconsistent("reconstructed values violate the hexagon relation")
    f = nonabelianize(sys)
    verdict = check_symplectic_system(f, 1e-8)
    if not verdict:
        raise PairingInconsistent(f"reconstructed system is not symplectic: {verdict.violations}")
    return sys, f


def random_pairing_values(alg, rng, n, positive=True, bound=50.0):
    """Symmetric units with condition below ``bound``; positive ones are squares."""
    out = []
    while len(out) < n:
        x = alg.random_symmetric(rng) + (alg.one() * 1.5 if positive else alg.zero())
        if positive:
            x = x * x
        if condition(x) < bound:
            out.append(x)
    return out


def random_units(alg, rng, n, bound=50.0):
    out = []
    while len(out) < n:
        x = alg.random_unit(rng)
        if condition(x) < bound:
            out.append(x)
    return out


def act_on_parameters(symmetric, units, u):
    """(sigma(u) s u, u^-1 a u)."""
    ui = u.inv()
    return [u.sigma() * s * u for s in symmetric], [ui * a * u for a in units]


def generator_traces(f):
    return [(g.a + g.d) for g in f.generator_holonomies()]


# Kashiwara-Maslov index and maximality

def _check_isotropic(lines, eps):
    for i, v in enumerate(lines):
        if omega(v, v).norm() >= eps:
            raise NotIsotropic(f"line {i + 1} is not isotropic")


def km_value(l1, l2, l3, eps=1e-9):
    """omega(x, mu(x)) for the spanning vector x of l1 (a symmetric element)."""
    _check_isotropic((l1, l2, l3), eps)
    for (a, b) in ((l1, l2), (l2, l3), (l1, l3)):
        if not lines_transverse(a, b):
            raise NotTransverse(None, "lines are not pairwise transverse")
    # complement with omega(v, w) = 1 so the quotient coordinate is omega(v, .)
    w = _symplectic_complement(l1)
    comps = [w, _symplectic_complement(l2), _symplectic_complement(l3)]
    mu = kashiwara_maslov_map(l1, l2, l3, comps)
    return omega(l1, w) * mu


def _symplectic_complement(v):
    """w with omega(v, w) = 1, when one coordinate of v is a unit."""
    alg = v[0].alg
    for k in (1, 0):
        try:
            inv = v[k].sigma().inv()
        except NotInvertible:
            continue
        return (alg.zero(), inv) if k == 0 else (-inv, alg.zero())
    # generic case: w = v^perp solving the 2x2 system through a random symplectic change of frame
    raise NotTransverse(None, "no coordinate of the line vector is a unit")


def km_index(l1, l2, l3, eps=1e-9):
    return signature(km_value(l1, l2, l3, eps), 1e-7)


def triangle_lines(f, t):
    """Lines of the three punctures of triangle t, all read at the marked point of e1."""
    e1, e2, e3 = f.tri.triangles[t]
    F = f.frames()
    v1 = (F[e1].a, F[e1].c)
    M2 = f.holonomy(BasePath(e2, (("L", e2), ("t", -e1))))
    M3 = f.holonomy(BasePath(e3, (("t", e3), ("R", e1))))
    v2 = M2 * (F[e2].a, F[e2].c)
    v3 = M3 * (F[e3].a, F[e3].c)
    return v1, v2, v3


def triangle_km_indices(f):
    return [km_index(*triangle_lines(f, t)) for t in range(len(f.tri.triangles))]


def check_maximal(f):
    top = f.alg.rank_bound()
    return all(k == top for k in triangle_km_indices(f))


# symplectic A-coordinates

@dataclass
class SymplecticChartReport:
    skew_residual: float
    beta_symmetry: float
    beta_positive: list
    beta_signatures: list
    maximal_by_beta: bool

    def to_json(self):
        return {"skew_residual": self.skew_residual, "beta_symmetry": self.beta_symmetry,
                "beta_positive": self.beta_positive, "beta_signatures": self.beta_signatures,
                "maximal": self.maximal_by_beta}


def beta_values(chart):
    out = []
    for e1, e2, e3 in chart.tri.triangles:
        out.append(chart[e3] * chart[-e2].inv() * chart[e1])
    return out


def symplectic_coordinate_relations(chart, eps=1e-9):
    skew = max((chart[-d] + chart[d].sigma()).norm() for d in chart.values)
    betas = beta_values(chart)
    sym = max((b - b.sigma()).norm() for b in betas)
    herm = chart.alg.hermitian()
    pos = [is_positive(b, 1e-7) for b in betas] if herm else []
    sigs = [signature(b, 1e-7) for b in betas] if herm and sym < 1e-7 else []
    return SymplecticChartReport(skew, sym, pos, sigs, bool(pos) and all(pos))


def reconstruct_maximal(tri, alg, rng, mode="full", attempts=20):
    """Reconstruction from random positive pairing values and random units; singular draws are redrawn."""
    n_sym, n_units = parameter_counts(tri.surface, mode)
    for _ in range(attempts):
        try:
            return reconstruct_symplectic(tri, alg, random_pairing_values(alg, rng, n_sym),
                                          random_units(alg, rng, n_units), mode)
        except (NotInvertible, NotInvertibleHolonomy):
            continue
    raise RuntimeError("no invertible reconstruction found")


def peripheral_unipotent(f, eps=1e-9):
    """Per internal puncture: (unipotent, sign) with sign the common diagonal entry +-1."""
    out = {}
    for v in f.cover.internal_punctures:
        m = f.peripheral_in_frame(v)
        one = f.alg.one()
        sign = 1 if (m.a - one).norm() < eps else -1 if (m.a + one).norm() < eps else 0
        ok = sign != 0 and m.c.norm() < eps and (m.d - m.a).norm() < eps
        out[v] = (ok, sign)
    return out
