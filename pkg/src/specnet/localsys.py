"""Abelian systems on the cover, framed GL2(A)-systems on the base, and the maps between them.

An abelian system is stored in a normalized gauge: every corner arc of the
lifted marked-point graph carries 1 except the cut corner of each internal
lifted puncture, which carries that puncture's loop value.  Segment values
live on the Gamma-edges tau_d.

A framed system is a flat connection on the marked-point graph of the base
(one 2x2 matrix per transit and per left corner) with a framing vector at the
reference slot of each puncture.  Isomorphism is up to a GL2(A) change of
frame at each marked point.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from .algebra import Mat2, NotInvertible, columns, condition, element_from_json
from .covering import sink, source
from .lifting import (SINK, SOURCE, BasePath, LiftEngine, MissingEdgeValue, evaluate, face_loop,
                      format_path, hexagon_moves, move_endpoints, peripheral_loop, sn_lift)


class NotTransverse(ValueError):
    def __init__(self, edge, msg=None):
        super().__init__(msg or f"endpoint lines of edge {edge} are not transverse")
        self.edge = edge


class NotInvertibleHolonomy(ArithmeticError):
    pass


class FramingNotInvariant(ValueError):
    pass


def _walk_value(alg, value_of, moves):
    val = alg.one()
    for lab, o in moves:
        x = value_of(lab)
        if x is None:
            continue
        val = (x if o == 1 else x.inv()) * val
    return val


def random_value(alg, rng, scale=0.5):
    """Random unit sign * exp(scale * xi): log-normal size, tightly bounded condition number."""
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return _exp(alg, scale * rng.normal(size=alg.dim)) * sign


def _exp(alg, xi):
    return alg(expm(alg.left_matrix(xi)) @ alg.one_coeffs())


# abelian side

class AbelianLocalSystem:
    """Segment values per dart and loop values per internal lifted puncture."""

    def __init__(self, cover, alg, edges, loops=None):
        self.cover = cover
        self.alg = alg
        self.edges = dict(edges)
        self.loops = dict(loops or {})
        self._engine = None

    @property
    def engine(self):
        if self._engine is None:
            self._engine = LiftEngine(self.cover)
        return self._engine

    def corner(self, x, s):
        v = self.cover.cut.get(x)
        if v is None:
            return None
        return self.loops.get(2 * v + s)

    def value_of(self, label):
        if label is None:
            return self.alg.one()
        if label[0] == "s":
            try:
                return self.edges[label[1]]
            except KeyError:
                raise MissingEdgeValue(f"no value on Gamma-edge {label[1]}") from None
        return self.corner(label[1], label[2])

    def holonomy(self, path):
        return evaluate(sn_lift(self.engine, path), self.value_of)

    def hexagon_residuals(self):
        """Distance of each hexagon loop value from -1."""
        tri = self.cover.tri
        out = []
        for t in range(len(tri.triangles)):
            val = _walk_value(self.alg, self.value_of, hexagon_moves(tri, t))
            out.append((val + 1.0).norm())
        return out

    def is_decorated(self, eps=1e-9):
        return all(self.loops.get(x, self.alg.one()).close(self.alg.one(), eps)
                   for v in self.cover.internal_punctures for x in (sink(v), source(v)))

    def units_ok(self):
        try:
            for x in list(self.edges.values()) + list(self.loops.values()):
                x.inv()
        except NotInvertible:
            return False
        return True

    def close(self, other, eps=1e-9):
        if set(self.edges) != set(other.edges):
            return False
        if not all(self.edges[d].close(other.edges[d], eps) for d in self.edges):
            return False
        one = self.alg.one()
        keys = set(self.loops) | set(other.loops)
        return all(self.loops.get(k, one).close(other.loops.get(k, one), eps) for k in keys)

    def max_difference(self, other):
        one = self.alg.one()
        diffs = [(self.edges[d] - other.edges[d]).norm() for d in self.edges]
        keys = set(self.loops) | set(other.loops)
        diffs += [(self.loops.get(k, one) - other.loops.get(k, one)).norm() for k in keys]
        return max(diffs, default=0.0)

    def to_json(self):
        return {
            "algebra": self.alg.tag(),
            "edges": {str(d): x.to_json()["coeffs"] for d, x in sorted(self.edges.items())},
            "loops": {str(k): x.to_json()["coeffs"] for k, x in sorted(self.loops.items())},
        }

    @classmethod
    def from_json(cls, cover, data, alg=None):
        from .algebra import parse_algebra
        alg = alg or parse_algebra(data.get("algebra", "R"))
        edges = {int(k): element_from_json(v, alg) for k, v in data["edges"].items()}
        loops = {int(k): element_from_json(v, alg) for k, v in data.get("loops", {}).items()}
        return cls(cover, alg, edges, loops)


def gauge_transform(sys, g):
    """Change of frame by one unit per lifted puncture (missing entries are 1)."""
    one = sys.alg.one()
    tri = sys.cover.tri
    edges = {}
    for d, a in sys.edges.items():
        gs = g.get(sink(tri.tail(d)), one)
        gt = g.get(source(tri.head(d)), one)
        edges[d] = gt * a * gs.inv()
    loops = {k: g.get(k, one) * x * g.get(k, one).inv() for k, x in sys.loops.items()}
    return AbelianLocalSystem(sys.cover, sys.alg, edges, loops)


def normalize_connection(cover, alg, seg, corners):
    """Gauge a general connection on the lifted graph into normalized form.

    ``seg[d]`` is the value on segment d; ``corners[(x, sheet)]`` the value on
    the corner arc from (x, sheet) to (rot x, sheet); missing corners are 1.
    The gauge is 1 at every reference slot.
    """
    one = alg.one()
    g, loops = {}, {}
    for v, cyc in cover.cycle.items():
        for s in (SINK, SOURCE):
            g[(cyc[0], s)] = one
            for k in range(len(cyc) - 1):
                c = corners.get((cyc[k], s), one)
                g[(cyc[k + 1], s)] = g[(cyc[k], s)] * c.inv()
            if v in cover.internal_punctures:
                c = corners.get((cyc[-1], s), one)
                loops[2 * v + s] = g[(cyc[0], s)] * c * g[(cyc[-1], s)].inv()
    edges = {d: g[(-d, SOURCE)] * a * g[(d, SINK)].inv() for d, a in seg.items()}
    return AbelianLocalSystem(cover, alg, edges, loops)


def random_connection(cover, alg, rng):
    """Random segment and corner values with every hexagon relation solved on its redundant arc."""
    tri = cover.tri
    seg = {d: random_value(alg, rng) for d in tri.darts()}
    corners = {}
    for t, (e1, _, _) in enumerate(tri.triangles):
        for x in tri.triangles[t]:
            for s in (SINK, SOURCE):
                if (x, s) != (e1, SINK):
                    corners[(x, s)] = random_value(alg, rng)

    def value_of(label):
        if label[0] == "s":
            return seg[label[1]]
        return corners.get((label[1], label[2]))

    for t, (e1, _, _) in enumerate(tri.triangles):
        rest = _walk_value(alg, value_of, hexagon_moves(tri, t)[:11])
        # the closing arc is traversed backwards: c^-1 * rest = -1
        corners[(e1, SINK)] = -rest
    return seg, corners


# sampling normalized systems: one hexagon relation per triangle, solved on one value each

def _solve_plan(cover, use_loops):
    """Solving order for the hexagon relations, children first.

    Triangles with a boundary dart solve on it; with ``use_loops`` a triangle
    holding a cut corner solves on that loop value.  The rest hang off these
    roots in a breadth-first forest and solve the dart facing their parent.
    With no root available, triangle 0 is a root with nothing to solve.
    Entries are (triangle, ("s", dart) | ("c", dart) | None).
    """
    tri = cover.tri
    plan, queue = {}, []
    for t, tr in enumerate(tri.triangles):
        b = next((d for d in tr if not tri.in_triangle(-d)), None)
        if b is not None:
            plan[t] = ("s", b)
        elif use_loops:
            x = next((d for d in tr if d in cover.cut), None)
            if x is not None:
                plan[t] = ("c", x)
        if t in plan:
            queue.append(t)
    if not queue:
        plan[0] = None
        queue.append(0)
    order = []
    for t in queue:
        order.append(t)
        for d in tri.triangles[t]:
            if tri.in_triangle(-d):
                u = tri.face(-d)
                if u not in plan:
                    plan[u] = ("s", -d)
                    queue.append(u)
    return [(t, plan[t]) for t in reversed(order)]


def _solve_on(alg, value_of, moves, k):
    """Value of the label of move k making the hexagon loop equal -1."""
    earlier = _walk_value(alg, value_of, moves[:k])
    later = _walk_value(alg, value_of, moves[k + 1:])
    v = -(later.inv() * earlier.inv())
    return v if moves[k][1] == 1 else v.inv()


def _solve_segment(sys, t, d):
    moves = hexagon_moves(sys.cover.tri, t)
    k = next(i for i, (lab, _) in enumerate(moves) if lab == ("s", d))
    sys.edges[d] = _solve_on(sys.alg, sys.value_of, moves, k)


def _solve_loop(sys, t, x, sheet):
    moves = hexagon_moves(sys.cover.tri, t)
    k = next(i for i, (lab, _) in enumerate(moves) if lab == ("c", x, sheet))
    sys.loops[2 * sys.cover.cut[x] + sheet] = _solve_on(sys.alg, sys.value_of, moves, k)


def random_abelian_system(cover, alg, rng, bound=1e4, attempts=40):
    """Random normalized system: random values, then each hexagon relation solved in plan order.

    Draws where a solved value has condition number above ``bound`` are redrawn.
    """
    tri = cover.tri
    for _ in range(attempts):
        sys = AbelianLocalSystem(cover, alg, {d: random_value(alg, rng) for d in tri.darts()})
        for v in cover.internal_punctures:
            for x in (sink(v), source(v)):
                sys.loops[x] = random_value(alg, rng)
        for t, target in _solve_plan(cover, use_loops=True):
            if target[0] == "s":
                _solve_segment(sys, t, target[1])
            else:
                _solve_loop(sys, t, target[1], SINK)
        if all(condition(x) <= bound for x in list(sys.edges.values()) + list(sys.loops.values())):
            return balance(sys)
    raise RuntimeError("no well-conditioned system found")


def _log_size(x):
    sv = np.linalg.svd(x.alg.left_matrix(x.c), compute_uv=False)
    return float(np.mean(np.log(sv)))


def balance(sys, symplectic=False):
    """Real scalar gauge per lifted puncture minimizing the spread of value sizes.

    With ``symplectic`` the source weight is the negative of the sink weight,
    which keeps a_{-d} = -sigma(a_d).
    """
    tri = sys.cover.tri
    punct = sorted(sys.cover.cycle)
    idx = {v: i for i, v in enumerate(punct)}
    darts = sorted(sys.edges)
    n = len(punct)
    A = np.zeros((len(darts), n if symplectic else 2 * n))
    b = np.zeros(len(darts))
    for r, d in enumerate(darts):
        t, h = idx[tri.tail(d)], idx[tri.head(d)]
        if symplectic:
            A[r, h] -= 1.0
            A[r, t] -= 1.0
        else:
            A[r, n + h] += 1.0
            A[r, t] -= 1.0
        b[r] = -_log_size(sys.edges[d])
    mu = np.linalg.lstsq(A, b, rcond=None)[0]
    g = {}
    for v in punct:
        g[sink(v)] = sys.alg.one() * float(np.exp(mu[idx[v]]))
        src = -mu[idx[v]] if symplectic else mu[n + idx[v]]
        g[source(v)] = sys.alg.one() * float(np.exp(src))
    return gauge_transform(sys, g)


def _solve_sp(values, tri, t, d, S):
    tr = tri.triangles[t]
    i = tr.index(d)
    e1, e2, e3 = tr[i:] + tr[:i]
    values[e1] = values[-e2] * values[e3].inv() * S
    values[-e1] = -(values[e1].sigma())


def _project(x0, residual, tol=1e-13):
    """Trust-region least squares onto the zero set of ``residual``."""
    def safe(x):
        with np.errstate(all="ignore"):
            try:
                r = residual(x)
            except (NotInvertible, np.linalg.LinAlgError):
                return np.full(len(r0), 1e6)
        return r if np.all(np.isfinite(r)) else np.full(len(r0), 1e6)

    r0 = residual(np.asarray(x0, dtype=float))
    sol = least_squares(safe, x0, method="trf", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=400)
    if np.max(np.abs(safe(sol.x))) >= tol:
        raise RuntimeError(f"projection did not converge (residual {np.max(np.abs(safe(sol.x))):.3g})")
    return sol.x


def _well_conditioned(sys, bound=1e4):
    for x in sys.edges.values():
        sv = np.linalg.svd(sys.alg.left_matrix(x.c), compute_uv=False)
        if sv[-1] <= 0 or sv[0] / sv[-1] > bound or sv[0] > 1e3 or sv[-1] < 1e-3:
            return False
    return True


def random_decorated_system(cover, alg, rng, symplectic=False, attempts=40):
    """Random system with trivial loops, normalized gauge.

    With ``symplectic`` the values also satisfy a_{-d} = -sigma(a_d).  Closed
    surfaces leave the root relation without a free value; there every value
    is moved jointly along a_d exp(xi_d) by least squares, restarting until a
    well-conditioned solution appears.
    """
    tri = cover.tri
    plan = _solve_plan(cover, use_loops=False)
    for _ in range(attempts):
        values = {}
        for e in sorted(tri.edges):
            values[e] = random_value(alg, rng)
            values[-e] = -(values[e].sigma()) if symplectic else random_value(alg, rng)
        sys = AbelianLocalSystem(cover, alg, values)
        for t, target in plan:
            if target is None:
                continue
            if symplectic:
                _solve_sp(sys.edges, tri, t, target[1], random_symmetric_value(alg, rng))
            else:
                _solve_segment(sys, t, target[1])
        if plan[-1][1] is not None:
            return balance(sys, symplectic)
        try:
            sys = _project_decorated(sys, symplectic)
        except (RuntimeError, NotInvertible, np.linalg.LinAlgError):
            continue
        if _well_conditioned(sys) and max(sys.hexagon_residuals()) < 1e-12:
            return balance(sys, symplectic)
    raise RuntimeError("no well-conditioned decorated system found")


def random_symmetric_value(alg, rng):
    """Random well-conditioned sigma-symmetric unit."""
    while True:
        y = random_value(alg, rng)
        S = y + y.sigma()
        if condition(S) < 100:
            return S


def _project_decorated(sys, symplectic):
    """Move every free value along a_d = a_d(0) exp(xi_d) until all hexagon relations hold."""
    cover, alg = sys.cover, sys.alg
    tri = cover.tri
    free = sorted(tri.edges) if symplectic else sorted(tri.darts())
    start = dict(sys.edges)
    n = alg.dim

    def expand(x):
        vals = {}
        for i, d in enumerate(free):
            vals[d] = start[d] * _exp(alg, x[i * n:(i + 1) * n])
            if symplectic:
                vals[-d] = -(vals[d].sigma())
        return vals

    def residual(x):
        vals = expand(x)
        res = []
        for t in range(len(tri.triangles)):
            e1, e2, e3 = tri.triangles[t]
            if symplectic:
                X = vals[e3] * vals[-e2].inv() * vals[e1]
                res.append((X - X.sigma()).c)
            else:
                val = _walk_value(alg, lambda lab: vals[lab[1]] if lab[0] == "s" else None,
                                  hexagon_moves(tri, t))
                res.append((val + 1.0).c)
        return np.concatenate(res)

    x = _project(np.zeros(len(free) * n), residual)
    return AbelianLocalSystem(cover, alg, expand(x))


# framed side

def _vec(alg, x, y):
    return (alg(x), alg(y))


def standard_basis(alg):
    return _vec(alg, 1, 0), _vec(alg, 0, 1)


def complement_candidates(alg):
    e1, e2 = standard_basis(alg)
    return [e1, e2, (e1[0] + e2[0], e1[1] + e2[1])]


def find_complement(v):
    """A vector w with [v|w] invertible from a fixed finite candidate set, or None."""
    for w in complement_candidates(v[0].alg):
        try:
            columns(v, w).inv()
            return w
        except NotInvertible:
            continue
    return None


def lines_transverse(v, w):
    try:
        columns(v, w).inv()
        return True
    except NotInvertible:
        return False


def same_line(v, w):
    """Lines vA and wA agree when [v|c] sends w into vA with a unit coefficient."""
    c = find_complement(v)
    if c is None:
        return False
    x = columns(v, c).inv() * w
    return x[1].norm() < 1e-9 and not _singular(x[0])


def _singular(x):
    try:
        x.inv()
        return False
    except NotInvertible:
        return True


def _reduced_frame(F):
    """Same framing line and complement class, with the complement shortened along the line."""
    alg = F.alg
    L = alg.left_matrix
    A = np.vstack([L(F.a.c), L(F.c.c)])
    rhs = np.concatenate([F.b.c, F.d.c])
    t = alg(np.linalg.lstsq(A, rhs, rcond=None)[0])
    return Mat2(F.a, F.b - F.a * t, F.c, F.d - F.c * t)


class FramedSystem:
    """Flat connection on the base marked-point graph with framing at reference slots.

    ``conn`` maps ("t", d) for every dart and ("L", x) for every dart in a
    triangle to a Mat2 (transport from the move's start to its end).
    ``framing[v]`` is a vector at the reference slot of puncture v;
    ``complements[v]`` an optional second frame vector there.
    """

    def __init__(self, tri, alg, conn, framing, complements=None):
        self.tri = tri
        self.alg = alg
        self.conn = dict(conn)
        self.framing = dict(framing)
        self.complements = dict(complements or {})
        self._inv = {}
        from .covering import Covering
        self.cover = Covering(tri)

    # transport

    def move_matrix(self, mv):
        kind, x = mv
        if kind == "F":
            return -Mat2.identity(self.alg)
        if kind in ("t", "L"):
            return self.conn[mv]
        if kind == "R":
            key = ("L", x)
            if key not in self._inv:
                self._inv[key] = self.conn[key].inv()
            return self._inv[key]
        raise ValueError(f"unknown move {mv!r}")

    def holonomy(self, path):
        m = Mat2.identity(self.alg)
        for mv in path.moves:
            m = self.move_matrix(mv) * m
        return m

    def complement(self, v):
        w = self.complements.get(v)
        if w is None:
            w = find_complement(self.framing[v])
            if w is None:
                raise NotTransverse(None, f"framing vector at puncture {v} is not regular")
        return w

    def frames(self):
        """Frame [v|w] at every marked point, transported around corners from the reference slot."""
        out = {}
        for v, cyc in self.cover.cycle.items():
            F = columns(self.framing[v], self.complement(v))
            out[cyc[0]] = F
            for k in range(len(cyc) - 1):
                F = _reduced_frame(self.conn[("L", cyc[k])] * F)
                out[cyc[k + 1]] = F
        return out

    def peripheral_in_frame(self, v):
        """Peripheral monodromy of internal puncture v in the frame at its reference slot."""
        cyc = self.cover.cycle[v]
        F = columns(self.framing[v], self.complement(v))
        return F.inv() * self.holonomy(peripheral_loop(self.tri, cyc[0])) * F

    def face_residuals(self):
        I = Mat2.identity(self.alg)
        return [self.holonomy(face_loop(self.tri, t)).residual(I) for t in range(len(self.tri.triangles))]

    def framing_residuals(self):
        return {v: self.peripheral_in_frame(v).c.norm() for v in self.cover.internal_punctures}

    def is_decorated(self, eps=1e-9):
        one = self.alg.one()
        for v in self.cover.internal_punctures:
            P = self.peripheral_in_frame(v)
            if not (P.c.norm() < eps and P.a.close(one, eps) and P.d.close(one, eps)):
                return False
        return True

    # generators of the fundamental group

    def tree(self):
        return spanning_tree(self.tri, self.cover.base_dart)

    def tree_transport(self):
        """Transport from the base dart to every marked point along the spanning tree."""
        tree = self.tree()
        out = {}
        for x, path in tree["paths"].items():
            out[x] = self.holonomy(path)
        return out

    def generators(self):
        return spanning_tree(self.tri, self.cover.base_dart)["generators"]

    def generator_holonomies(self):
        out = []
        for g in self.generators():
            m = self.holonomy(g)
            try:
                m.inv()
            except NotInvertible:
                raise NotInvertibleHolonomy(f"generator {format_path(self.tri, g)} is singular") from None
            out.append(m)
        return out

    def to_json(self):
        P = self.tree_transport()
        gens = self.generators()
        hol = self.generator_holonomies()
        framing = {}
        for v, cyc in self.cover.cycle.items():
            back = P[cyc[0]].inv()
            framing[str(v)] = [c.c.tolist() for c in back * self.framing[v]]
        comps = {}
        for v, w in self.complements.items():
            back = P[self.cover.cycle[v][0]].inv()
            comps[str(v)] = [c.c.tolist() for c in back * w]
        out = {
            "algebra": self.alg.tag(),
            "basepoint": self.cover.base_dart,
            "generators": {f"g{i}": m.to_json() for i, m in enumerate(hol)},
            "generator_words": {f"g{i}": format_path(self.tri, g) for i, g in enumerate(gens)},
            "framing": framing,
        }
        if comps:
            out["complements"] = comps
        return out


def spanning_tree(tri, base):
    """Spanning tree of the marked-point graph minus one reserved corner per triangle.

    The reserved corner of a triangle is the left corner at its first dart.
    Returns tree paths from ``base``, the tree edge set, and one generator loop
    per non-tree edge (a free basis of the fundamental group at ``base``).
    """
    reserved = {("L", tr[0]) for tr in tri.triangles}
    edges = []
    for d in tri.darts():
        if d > 0:
            edges.append(("t", d))
        if tri.in_triangle(d) and ("L", d) not in reserved:
            edges.append(("L", d))
    adj = {}
    for mv in edges:
        a, b = move_endpoints(tri, mv)
        inv = ("t", -mv[1]) if mv[0] == "t" else ("R", mv[1])
        adj.setdefault(a, []).append((mv, b, mv))
        adj.setdefault(b, []).append((inv, a, mv))
    paths = {base: BasePath(base)}
    used = set()
    queue = [base]
    for x in queue:
        for mv, y, key in adj.get(x, []):
            if y not in paths:
                paths[y] = BasePath(base, paths[x].moves + (mv,))
                used.add(key)
                queue.append(y)
    gens, non_tree = [], []
    for mv in edges:
        if mv in used:
            continue
        a, b = move_endpoints(tri, mv)
        loop = paths[a] * BasePath(a, (mv,)) * paths[b].inverse(tri)
        gens.append(BasePath(base, loop.moves))
        non_tree.append(mv)
    return {"paths": paths, "tree_edges": used, "non_tree": non_tree, "generators": gens,
            "reserved": sorted(reserved)}


def solve_reserved_corners(tri, conn):
    """Fill each triangle's reserved corner from flatness of its face loop."""
    for t, (e1, e2, e3) in enumerate(tri.triangles):
        rest = conn[("t", -e1)] * conn[("L", e2)] * conn[("t", -e2)] * conn[("L", e3)] * conn[("t", -e3)]
        conn[("L", e1)] = rest.inv()
    return conn


def from_generators(tri, alg, holonomies, framing, complements=None):
    """Framed system in tree gauge from generator holonomies and base-frame vectors.

    ``holonomies`` follow the order of ``spanning_tree(...)["generators"]``;
    framing vectors are expressed in the frame at the base dart.
    """
    from .covering import Covering
    cover = Covering(tri)
    st = spanning_tree(tri, cover.base_dart)
    if len(holonomies) != len(st["generators"]):
        raise ValueError(f"expected {len(st['generators'])} generator holonomies, got {len(holonomies)}")
    I = Mat2.identity(alg)
    conn = {}
    for mv in st["tree_edges"]:
        conn[mv] = I
    for mv, m in zip(st["non_tree"], holonomies):
        conn[mv] = m
    for d in tri.darts():
        if d > 0:
            if ("t", d) not in conn:
                raise ValueError(f"transit {d} missing from tree and generators")
            conn[("t", -d)] = conn[("t", d)].inv()
    solve_reserved_corners(tri, conn)
    fr = {int(v): framing[v] for v in framing}
    comps = {int(v): w for v, w in (complements or {}).items()}
    return FramedSystem(tri, alg, conn, fr, comps)


def framed_from_json(tri, data, alg=None):
    from .algebra import parse_algebra
    alg = alg or parse_algebra(data.get("algebra", "R"))
    names = sorted(data["generators"], key=lambda k: int(k[1:]))
    hol = []
    for k in names:
        (a, b), (c, d) = data["generators"][k]
        hol.append(Mat2(alg(a), alg(b), alg(c), alg(d)))
    framing = {int(v): _vec(alg, *vec) for v, vec in data["framing"].items()}
    comps = {int(v): _vec(alg, *vec) for v, vec in data.get("complements", {}).items()}
    return from_generators(tri, alg, hol, framing, comps)


# the two directions

def nonabelianize(sys, generators=None):
    """Framed system whose connection is the evaluated lift of each base move.

    Frames at every marked point are the (sink, source) lifts; the framing is
    the sink line and the complement the source line.  ``generators``, when
    given, are checked to have invertible holonomy.
    """
    tri = sys.cover.tri
    eng = sys.engine
    conn = {}
    for d in tri.darts():
        conn[("t", d)] = evaluate(eng.step(("t", d)), sys.value_of)
        if tri.in_triangle(d):
            conn[("L", d)] = evaluate(eng.step(("L", d)), sys.value_of)
    e1, e2 = standard_basis(sys.alg)
    punct = list(sys.cover.cycle)
    f = FramedSystem(tri, sys.alg, conn, {v: e1 for v in punct}, {v: e2 for v in punct})
    for g in (generators if generators is not None else f.generators()):
        try:
            f.holonomy(g).inv()
        except NotInvertible:
            raise NotInvertibleHolonomy(f"generator {format_path(tri, g)} is singular") from None
    ok, bad = check_transverse(f)
    if not ok:
        raise NotTransverse(bad)
    return f


def check_transverse(f):
    """(True, None) or (False, edge) for the first edge whose endpoint lines meet."""
    try:
        frames = f.frames()
    except (NotTransverse, NotInvertible):
        return False, None
    for e in sorted(f.tri.edges):
        v = frames[e].a, frames[e].c
        u = frames[-e].a, frames[-e].c
        if not lines_transverse(f.conn[("t", e)] * v, u):
            return False, e
    return True, None


def abelianize(f, eps=1e-8):
    """Projections between transported framing lines, read in the local frames."""
    ok, bad = check_transverse(f)
    if not ok:
        raise NotTransverse(bad)
    frames = f.frames()
    cover = f.cover
    edges = {}
    for d in f.tri.darts():
        v = frames[d].a, frames[d].c
        x = frames[-d].inv() * (f.conn[("t", d)] * v)
        edges[d] = x[1]
    loops = {}
    for v in cover.internal_punctures:
        cyc = cover.cycle[v]
        C = frames[cyc[0]].inv() * f.conn[("L", cyc[-1])] * frames[cyc[-1]]
        if C.c.norm() > eps * max(1.0, C.a.norm(), C.d.norm()):
            raise FramingNotInvariant(f"peripheral monodromy at puncture {v} moves the framing line")
        loops[sink(v)] = C.a
        loops[source(v)] = C.d
    return AbelianLocalSystem(cover, f.alg, edges, loops)


def random_framed_system(cover, alg, rng):
    return nonabelianize(random_abelian_system(cover, alg, rng))


# Kashiwara-Maslov

def _projections(lines, complements=None):
    out = []
    for i, v in enumerate(lines):
        w = complements[i] if complements else find_complement(v)
        if w is None:
            raise NotTransverse(i, f"line {i} is not regular")
        inv = columns(v, w).inv()
        out.append((inv.c, inv.d))
    return out


def _pairings(lines, complements=None):
    for i in range(3):
        for j in range(i + 1, 3):
            if not lines_transverse(lines[i], lines[j]):
                raise NotTransverse((i + 1, j + 1), f"lines {i + 1} and {j + 1} are not transverse")
    phi = _projections(lines, complements)
    return {(i + 1, j + 1): phi[i][0] * lines[j][0] + phi[i][1] * lines[j][1]
            for i in range(3) for j in range(3) if i != j}


def kashiwara_maslov_map(l1, l2, l3, complements=None):
    """a13 a23^-1 a21, with a_ij the coordinate of v_j in A^2/l_i read against the complement of l_i."""
    a = _pairings((l1, l2, l3), complements)
    return a[(1, 3)] * a[(2, 3)].inv() * a[(2, 1)]


def km_six_fold_product(l1, l2, l3, complements=None):
    a = _pairings((l1, l2, l3), complements)
    return -(a[(3, 1)].inv() * a[(3, 2)] * a[(1, 2)].inv() * a[(1, 3)] * a[(2, 3)].inv() * a[(2, 1)])
