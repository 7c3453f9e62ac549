"""Noncommutative A-coordinates: extraction, triangle relation, flips, Laurent expansions.

A chart assigns to every dart d: p -> q the unit a(d), the projection of the
decoration line at p into A^2 / (line at q), read in the decorated frames.
"""

from __future__ import annotations

import re

import numpy as np
from dataclasses import dataclass, field

from .algebra import Mat2, columns, condition, element_from_json
from .covering import Covering
from .lifting import SINK, SOURCE, BasePath, LiftEngine, PathTooLong, shortest_path, sn_lift
from .localsys import FramedSystem, abelianize
from .surface import flip, flip_labels


class NotDecorated(ValueError):
    pass


class FlipDegenerate(ArithmeticError):
    pass


class NotAPolygon(ValueError):
    pass


class MissingSymbol(KeyError):
    pass


@dataclass
class ACoordinateChart:
    tri: object
    alg: object
    values: dict

    def __getitem__(self, d):
        try:
            return self.values[d]
        except KeyError:
            raise MissingSymbol(f"no coordinate on dart {d}") from None

    def max_difference(self, other):
        return max((self.values[d] - other.values[d]).norm() for d in self.values)

    def to_json(self):
        return {"algebra": self.alg.tag(), "triangulation": self.tri.to_json(),
                "values": {str(d): x.to_json() for d, x in sorted(self.values.items())}}

    @classmethod
    def from_json(cls, data, tri=None):
        from .algebra import parse_algebra
        from .surface import triangulation_from_json
        alg = parse_algebra(data.get("algebra", "R"))
        tri = tri or triangulation_from_json(data["triangulation"])
        return cls(tri, alg, {int(k): element_from_json(v, alg) for k, v in data["values"].items()})


# extraction

def extract_coordinates(f, eps=1e-9):
    """Chart of a decorated framed system: its abelianized segment values."""
    if not f.is_decorated(eps):
        raise NotDecorated("peripheral monodromy is not unipotent in the decorated frames")
    return ACoordinateChart(f.tri, f.alg, dict(abelianize(f).edges))


def chart_of(sys):
    """Chart of a decorated abelian system (normalized gauge)."""
    if not sys.is_decorated():
        raise NotDecorated("abelian system has non-trivial loop values")
    return ACoordinateChart(sys.cover.tri, sys.alg, dict(sys.edges))


def projection(v_to, w_to, v_from):
    """Coordinate of v_from in A^2 / (v_to A), read against the complement w_to."""
    inv = columns(v_to, w_to).inv()
    return inv.c * v_from[0] + inv.d * v_from[1]


def polygon_decorated_system(tri, alg, vectors, complements):
    """Decorated system on a polygon from one global pair (v_p, w_p) per puncture."""
    conn = {}
    I = Mat2.identity(alg)
    for d in tri.darts():
        conn[("t", d)] = I
        if tri.in_triangle(d):
            conn[("L", d)] = I
    return FramedSystem(tri, alg, conn, dict(vectors), dict(complements))


def _mat_condition(M):
    L = M.a.alg.left_matrix
    big = np.block([[L(M.a.c), L(M.b.c)], [L(M.c.c), L(M.d.c)]])
    return np.linalg.cond(big)


def random_polygon_vectors(tri, alg, rng, bound=100.0, attempts=200):
    """Random decoration vectors and complements, every pair of lines kept well apart.

    Resamples until each [v_p | v_q] and [v_p | w_p] has condition below ``bound``.
    """
    from .localsys import random_value
    pts = tri.punctures()
    for _ in range(attempts):
        vs = {p: (random_value(alg, rng), random_value(alg, rng)) for p in pts}
        ws = {p: (random_value(alg, rng), random_value(alg, rng)) for p in pts}
        pairs = [(vs[p], ws[p]) for p in pts] + [(vs[p], vs[q]) for p in pts for q in pts if p < q]
        if all(_mat_condition(columns(x, y)) < bound for x, y in pairs):
            return vs, ws
    raise RuntimeError(f"no well-conditioned decoration in {attempts} attempts")


# triangle relation

def triangle_relation_residuals(chart, signed=True):
    """Per triangle (e1, e2, e3): a(e3) a(-e2)^-1 a(e1) against -+ a(-e1) a(e2)^-1 a(-e3).

    The signed form is the one forced by the hexagon relation; ``signed=False``
    measures the unsigned variant.
    """
    out = []
    for e1, e2, e3 in chart.tri.triangles:
        lhs = chart[e3] * chart[-e2].inv() * chart[e1]
        rhs = chart[-e1] * chart[e2].inv() * chart[-e3]
        out.append((lhs + rhs).norm() if signed else (lhs - rhs).norm())
    return out


# flips

def flip_coordinates(chart, e, tol=1e-10):
    """Exchange relation across the quadrilateral of e; the new edge e runs p2 -> p4."""
    p1, p2, p3, p4, a, b, c, f = flip_labels(chart.tri, e)
    d = e
    A = chart
    terms_pos = (A[-b] * A[d].inv() * A[f], A[a] * A[-d].inv() * A[-c])
    terms_neg = (A[c] * A[d].inv() * A[-a], A[-f] * A[-d].inv() * A[b])
    new_pos, new_neg = terms_pos[0] + terms_pos[1], terms_neg[0] + terms_neg[1]
    for x, (s1, s2) in ((new_pos, terms_pos), (new_neg, terms_neg)):
        # cancellation down to round-off counts as a zero, not a tiny unit
        if x.norm() <= tol * max(s1.norm(), s2.norm()) or condition(x) > 1 / tol:
            raise FlipDegenerate(f"flipped coordinate on edge {e} is not a unit")
    values = dict(chart.values)
    values[e], values[-e] = new_pos, new_neg
    return ACoordinateChart(flip(chart.tri, e), chart.alg, values)


def flip_framed_system(f, e):
    """The same framed local system presented on the flipped triangulation.

    The new marked points e (near p2) and -e (near p4) take the frames of the
    old points f and b; the new transit follows f, turns around p3 inside the
    quadrilateral and follows a.
    """
    tri = f.tri
    p1, p2, p3, p4, a, b, c, fe = flip_labels(tri, e)
    d = e
    new_tri = flip(tri, e)
    old = f.move_matrix
    conn = {}
    for key, m in f.conn.items():
        if key[0] == "t" and abs(key[1]) == e:
            continue
        if key[0] == "L" and key[1] in (d, -d, a, b, c, fe):
            continue
        conn[key] = m
    path = BasePath(fe, (("t", fe), ("R", -d), ("R", a), ("t", a), ("R", b)))
    conn[("t", e)] = f.holonomy(path)
    conn[("t", -e)] = conn[("t", e)].inv()
    I = Mat2.identity(f.alg)
    conn[("L", e)] = old(("L", fe))
    conn[("L", b)] = I
    conn[("L", c)] = old(("L", d)) * old(("L", c))
    conn[("L", -e)] = old(("L", b))
    conn[("L", fe)] = I
    conn[("L", a)] = old(("L", -d)) * old(("L", a))
    # carry framing vectors to the new reference slots along the old corner chains
    new_cover = Covering(new_tri)
    ident = {e: fe, -e: b}
    framing, comps = {}, {}
    for v, cyc in f.cover.cycle.items():
        target = ident.get(new_cover.cycle[v][0], new_cover.cycle[v][0])
        M = I
        for x in cyc:
            if x == target:
                break
            M = f.conn[("L", x)] * M
        framing[v] = M * f.framing[v]
        comps[v] = M * f.complement(v)
    return FramedSystem(new_tri, f.alg, conn, framing, comps)


# Laurent expansions

_TOKEN = re.compile(r"a\((-?\d+)\)(\^-1)?")


@dataclass
class NCLaurentExpr:
    """Integer combination of ordered monomials in chart symbols.

    A monomial is a tuple of (dart, +-1) read left to right as a product.
    """
    terms: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, pairs):
        out = {}
        for coeff, mono in pairs:
            mono = _free_reduce(mono)
            out[mono] = out.get(mono, 0) + coeff
        return cls({m: c for m, c in out.items() if c})

    def symbols(self):
        return {d for mono in self.terms for d, _ in mono}

    def __len__(self):
        return len(self.terms)

    def to_text(self):
        if not self.terms:
            return "0"
        parts = []
        for mono, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            body = " ".join(f"a({d})" + ("^-1" if o == -1 else "") for d, o in mono) or "1"
            mag = abs(c)
            lead = body if mag == 1 else f"{mag} {body}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, lead))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, lead in parts[1:]:
            text += f" {sign} {lead}"
        return text

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text == "0":
            return cls({})
        pairs = []
        chunks = re.split(r"\s+(?=[+-]\s)", text)
        for chunk in chunks:
            chunk = chunk.strip()
            sign = 1
            if chunk[:1] in "+-" and (len(chunk) == 1 or chunk[1] in " \t" or chunk[1].isdigit() or chunk[1] == "a"):
                sign = -1 if chunk[0] == "-" else 1
                chunk = chunk[1:].strip()
            coeff = 1
            m = re.match(r"(\d+)\s*(.*)", chunk)
            if m:
                coeff = int(m.group(1))
                chunk = m.group(2)
            mono = []
            for tok in chunk.split():
                if tok == "1":
                    continue
                t = _TOKEN.fullmatch(tok)
                if not t:
                    raise ValueError(f"bad monomial token {tok!r}")
                mono.append((int(t.group(1)), -1 if t.group(2) else 1))
            pairs.append((sign * coeff, tuple(mono)))
        return cls.from_terms(pairs)


def _free_reduce(mono):
    stack = []
    for d, o in mono:
        if stack and stack[-1] == (d, -o):
            stack.pop()
        else:
            stack.append((d, o))
    return tuple(stack)


def evaluate_expr(expr, chart):
    acc = chart.alg.zero()
    for mono, c in expr.terms.items():
        val = chart.alg.one()
        for d, o in mono:
            x = chart[d]
            val = val * (x if o == 1 else x.inv())
        acc = acc + val * float(c)
    return acc


def _check_polygon(tri):
    s = tri.surface
    if s.genus != 0 or len(s.boundary) != 1 or s.internal != 0:
        raise NotAPolygon("Laurent expansion needs a polygon")


def points_at(tri, p):
    """Marked points near puncture p (darts with tail p)."""
    return [d for d in tri.darts() if tri.tail(d) == p]


def _expand_path(engine, path):
    m = sn_lift(engine, path)
    pairs = []
    for (_, walk), coeff in m.get(SOURCE, SINK).items():
        mono = tuple((lab[1], o) for lab, o in reversed(walk) if lab[0] == "s")
        pairs.append((coeff, mono))
    return NCLaurentExpr.from_terms(pairs)


def _size(expr):
    return (sum(len(m) for m in expr.terms), len(expr.terms))


def hexagon_words(tri):
    """Per triangle (e1, e2, e3), the cyclic word a(-e3)^-1 a(e2) a(-e1)^-1 a(e3) a(-e2)^-1 a(e1) = -1."""
    out = []
    for e1, e2, e3 in tri.triangles:
        w = ((-e3, -1), (e2, 1), (-e1, -1), (e3, 1), (-e2, -1), (e1, 1))
        out.append(w)
        out.append(tuple((d, -o) for d, o in reversed(w)))
    return out


def rewrite_rules(tri):
    """Rules u -> -v^-1 for every split u v of a rotation of a hexagon word, |u| >= 3."""
    rules = []
    for w in hexagon_words(tri):
        for r in range(6):
            rot = w[r:] + w[:r]
            for k in range(3, 7):
                u, v = rot[:k], rot[k:]
                rules.append((u, tuple((d, -o) for d, o in reversed(v))))
    return rules


def simplify(expr, tri):
    """Shorten monomials with the hexagon relation, accepting only strict length decreases."""
    rules = rewrite_rules(tri)
    pairs = []
    for mono, c in expr.terms.items():
        changed = True
        while changed:
            changed = False
            for p in range(len(mono)):
                for u, w in rules:
                    if mono[p:p + len(u)] == u:
                        cand = _free_reduce(mono[:p] + w + mono[p + len(u):])
                        if len(cand) < len(mono):
                            mono, c, changed = cand, -c, True
                            break
                if changed:
                    break
        pairs.append((c, mono))
    return NCLaurentExpr.from_terms(pairs)


def laurent_expand(tri, i, j, bound=10, engine=None, reduce=True):
    """a(j -> i) as a Laurent expression in the chart of ``tri``.

    Lifts base paths from marked points near p_j to marked points near p_i and
    reads the (source, sink) entry of the lift matrix: every canonical walk is a
    product of segment values, latest on the left.  The value does not depend
    on the marked points (corner transport fixes the decoration vector and only
    moves the complement along it), so the smallest expansion is returned.
    With ``reduce`` the monomials are shortened by the hexagon relation, which
    every decorated chart satisfies.
    """
    _check_polygon(tri)
    n = len(tri.punctures())
    if n > bound:
        raise PathTooLong(f"polygon with {n} punctures exceeds bound {bound}")
    if i == j:
        raise ValueError("endpoints must differ")
    engine = engine or LiftEngine(Covering(tri))
    best = None
    for x in points_at(tri, j):
        for y in points_at(tri, i):
            expr = _expand_path(engine, shortest_path(tri, x, y))
            if reduce:
                expr = simplify(expr, tri)
            if best is None or _size(expr) < _size(best):
                best = expr
    return best


def direct_value(vectors, complements, i, j):
    """Oracle a(j -> i) from global decoration vectors."""
    return projection(vectors[i], complements[i], vectors[j])


# X-coordinates

@dataclass
class XCoordinate:
    quadrilateral: tuple
    edge: int
    value: object


FROM_POSITIVE, FROM_NEGATIVE = "positive", "negative"


def x_coordinate_flip(y, x, side):
    """y (1 + X) when entering from the positive side, y (1 + X^-1)^-1 from the negative side."""
    X = x.value if isinstance(x, XCoordinate) else x
    if side == FROM_POSITIVE:
        s = X + 1.0
        s.inv()
        return y * s
    if side == FROM_NEGATIVE:
        s = X.inv() + 1.0
        return y * s.inv()
    raise ValueError(f"unknown side {side!r}")


def values_by_endpoints(chart):
    """Chart values keyed by (tail, head); a well-defined key on polygons."""
    tri = chart.tri
    return {(tri.tail(d), tri.head(d)): x for d, x in chart.values.items()}


def chart_distance_by_endpoints(c1, c2):
    v1, v2 = values_by_endpoints(c1), values_by_endpoints(c2)
    if set(v1) != set(v2):
        return float("inf")
    return max((v1[k] - v2[k]).norm() for k in v1)


def pentagon_cycle(chart):
    """Flip the two diagonals of a pentagon alternately five times.

    Returns the list of charts visited; the last one sits on the starting
    triangulation with the diagonal ids exchanged.
    """
    _check_polygon(chart.tri)
    if len(chart.tri.punctures()) != 5:
        raise NotAPolygon("the flip cycle needs a pentagon")
    diagonals = sorted(e for e in chart.tri.edges if not chart.tri.edges[e][2])
    out = [chart]
    for k in range(5):
        out.append(flip_coordinates(out[-1], diagonals[k % 2]))
    return out
