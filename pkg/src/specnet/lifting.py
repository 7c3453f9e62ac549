"""Lifting base paths through the spectral network.

Base paths live on the marked-point graph of the triangulation: its vertices
are darts (a marked point on edge |d| near tail(d)), with transit moves
``("t", d)`` from d to -d along the edge, corner moves ``("L", x)`` from x to
rot(x) turning left around tail(x) inside the triangle of x, their inverses
``("R", x)``, and fiber-loop tokens ``("F", +-1)``.

Upstairs, the marked point d has a sink lift (sheet 0) and a source lift
(sheet 1).  Lifted walks use two kinds of edges: segments ``("s", d)`` running
along tau_d from (d, sink) to (-d, source), and corner arcs ``("c", x, sheet)``
from (x, sheet) to (rot x, sheet).  Ray detours are retracted onto the
hexagon boundary, one corner arc per hexagon is eliminated through the
hexagon relation (a full counterclockwise loop is a negative fiber turn), and
the half-turn count of each term is folded into its sign.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .algebra import Mat2

SINK, SOURCE = 0, 1


class InconsistentStep(ValueError):
    pass


class PathTooLong(ValueError):
    pass


class MissingEdgeValue(KeyError):
    pass


# hexagon bookkeeping

def hexagon_points(tri, t):
    """The 12 marked-point lifts around the hexagon of triangle t, counterclockwise."""
    e1, e2, e3 = tri.triangles[t]
    return [(e1, SINK), (-e1, SOURCE), (e2, SOURCE), (-e2, SINK), (e3, SINK), (-e3, SOURCE),
            (e1, SOURCE), (-e1, SINK), (e2, SINK), (-e2, SOURCE), (e3, SOURCE), (-e3, SINK)]


def hexagon_moves(tri, t):
    """Lifted-graph moves joining consecutive hexagon points."""
    e1, e2, e3 = tri.triangles[t]
    return [
        (("s", e1), 1), (("c", e2, SOURCE), -1),
        (("s", -e2), -1), (("c", e3, SINK), -1),
        (("s", e3), 1), (("c", e1, SOURCE), -1),
        (("s", -e1), -1), (("c", e2, SINK), -1),
        (("s", e2), 1), (("c", e3, SOURCE), -1),
        (("s", -e3), -1), (("c", e1, SINK), -1),
    ]


# index of (x, source) and (rot x, source) in the hexagon list, by position of x
_LEFT_DETOUR_START = (6, 2, 10)
_RIGHT_DETOUR_START = (5, 1, 9)


def _reduce_into(stack, moves):
    for m in moves:
        if stack and stack[-1][0] == m[0] and stack[-1][1] == -m[1]:
            stack.pop()
        else:
            stack.append(m)
    return stack


class LiftEngine:
    """Per-covering tables for lifting: hexagon routes, redundant arcs, step lifts."""

    def __init__(self, cover):
        self.cover = cover
        tri = self.tri = cover.tri
        self.redundant = {}
        for t, tri_darts in enumerate(tri.triangles):
            moves = hexagon_moves(tri, t)
            rest = moves[:11]
            label = moves[11][0]
            fwd = tuple(rest)
            back = tuple((lab, -o) for lab, o in reversed(rest))
            # label forward runs P0 -> P11: equals the rest of the loop plus a full positive turn
            self.redundant[label] = {1: (fwd, 2), -1: (back, -2)}
        self._step_cache = {}

    # raw walks -> canonical form

    def canonical(self, moves, h):
        """Expand redundant arcs, free-reduce, and return (moves, sign)."""
        stack = []
        for lab, o in moves:
            sub = self.redundant.get(lab)
            if sub is None:
                _reduce_into(stack, [(lab, o)])
            else:
                seq, dh = sub[o]
                h += dh
                _reduce_into(stack, seq)
        if h % 2:
            raise InconsistentStep("odd half-turn count on a lifted walk")
        return tuple(stack), (-1) ** ((h // 2) % 2)

    def raw_lifts(self, move):
        """Lifts of one base move before canonicalization.

        Returns ``(standard, detour)``: ``standard[source sheet] = (target sheet,
        raw moves, half-turns)`` and ``detour = (raw moves, half-turns)`` for the
        ray detour from the source sheet to the sink sheet (None for transits).
        """
        kind, x = move
        tri = self.tri
        if kind == "t":
            if abs(x) not in tri.edges:
                raise InconsistentStep(f"no edge for dart {x}")
            return {SINK: (SOURCE, ((("s", x), 1),), 0), SOURCE: (SINK, ((("s", -x), -1),), 0)}, None
        if kind in ("L", "R"):
            if not tri.in_triangle(x):
                raise InconsistentStep(f"dart {x} lies in no triangle")
            t = tri.face(x)
            pos = tri.triangles[t].index(x)
            moves = hexagon_moves(tri, t)
            if kind == "L":
                start = _LEFT_DETOUR_START[pos]
                route = tuple(moves[(start + k) % 12] for k in range(5))
                # negative half-turn at the ray, positive one from the retraction
                detour = (route, -1 + 1)
                o = 1
            else:
                start = _RIGHT_DETOUR_START[pos]
                route = tuple(moves[(start + k) % 12] for k in range(7))
                detour = (route, 1 + 1)
                o = -1
            standard = {s: (s, ((("c", x, s), o),), 0) for s in (SINK, SOURCE)}
            return standard, detour
        raise InconsistentStep(f"unknown move {move!r}")

    def raw_step(self, move):
        """{(target sheet, source sheet): (raw moves, half-turns)} for one move."""
        standard, detour = self.raw_lifts(move)
        out = {(ti, si): (mv, h) for si, (ti, mv, h) in standard.items()}
        if detour is not None:
            out[(SINK, SOURCE)] = detour
        return out

    def step(self, move):
        """Canonical lift matrix of one non-fiber move."""
        if move in self._step_cache:
            return self._step_cache[move]
        start, _ = move_endpoints(self.tri, move)
        entries = {}
        for (ti, si), (raw, h) in self.raw_step(move).items():
            walk, sign = self.canonical(raw, h)
            entries[(ti, si)] = {((start, si), walk): sign}
        out = LiftMatrix(entries)
        self._step_cache[move] = out
        return out


def move_endpoints(tri, move):
    kind, x = move
    if kind == "t":
        return x, -x
    if kind == "L":
        return x, tri.rot(x)
    if kind == "R":
        return tri.rot(x), x
    raise InconsistentStep(f"move {move!r} has no endpoints")


def invert_move(move):
    kind, x = move
    if kind == "t":
        return ("t", -x)
    if kind == "L":
        return ("R", x)
    if kind == "R":
        return ("L", x)
    return ("F", -x)


class LiftMatrix:
    """2x2 matrix of formal sums of canonical lifted walks.

    ``entries[(target sheet, source sheet)]`` maps ``((start point), moves)`` to
    an integer coefficient.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = {k: v for k, v in entries.items() if v}

    @classmethod
    def identity(cls, point):
        return cls({(SINK, SINK): {((point, SINK), ()): 1}, (SOURCE, SOURCE): {((point, SOURCE), ()): 1}})

    def get(self, i, j):
        return self.entries.get((i, j), {})

    def __matmul__(self, first):
        """self after first: walks of ``first`` followed by walks of ``self``."""
        out = {}
        for (i, k), later in self.entries.items():
            for (k2, j), earlier in first.entries.items():
                if k2 != k:
                    continue
                acc = out.setdefault((i, j), {})
                for (start, w1), c1 in earlier.items():
                    for (_, w2), c2 in later.items():
                        w = tuple(_reduce_into(list(w1), w2))
                        key = (start, w)
                        acc[key] = acc.get(key, 0) + c1 * c2
                        if acc[key] == 0:
                            del acc[key]
        return LiftMatrix(out)

    def scaled(self, c):
        return LiftMatrix({k: {w: c * v for w, v in e.items()} for k, e in self.entries.items()})

    def n_terms(self):
        return sum(len(e) for e in self.entries.values())

    def is_upper_triangular(self):
        return not self.get(SOURCE, SINK)

    def __eq__(self, other):
        return isinstance(other, LiftMatrix) and self.entries == other.entries

    def __repr__(self):
        parts = []
        for (i, j), e in sorted(self.entries.items()):
            parts.append(f"[{i}{j}] " + " + ".join(f"{c}*{_fmt_walk(w)}" for (_, w), c in e.items()))
        return "LiftMatrix(" + "; ".join(parts) + ")"


def _fmt_walk(w):
    if not w:
        return "1"
    return ".".join(f"{lab}{'' if o == 1 else '^-1'}" for lab, o in w)


@dataclass(frozen=True)
class BasePath:
    start: int
    moves: tuple = ()

    def end(self, tri):
        cur = self.start
        for mv in self.moves:
            if mv[0] == "F":
                continue
            a, b = move_endpoints(tri, mv)
            if a != cur:
                raise InconsistentStep(f"move {mv} does not start at marked point {cur}")
            cur = b
        return cur

    def check(self, tri):
        return self.end(tri)

    def __mul__(self, later):
        """This path followed by ``later``."""
        return BasePath(self.start, self.moves + later.moves)

    def inverse(self, tri):
        return BasePath(self.end(tri), tuple(invert_move(m) for m in reversed(self.moves)))

    def is_closed(self, tri):
        return self.end(tri) == self.start

    def corner_steps(self):
        return sum(1 for m in self.moves if m[0] in ("L", "R"))


def reduce_path(tri, p):
    """Cancel immediate backtracks in the base word."""
    stack = []
    for m in p.moves:
        if stack and stack[-1] == invert_move(m):
            stack.pop()
        else:
            stack.append(m)
    return BasePath(p.start, tuple(stack))


_STEP = re.compile(r"T(\d+):(-?\d+)->(-?\d+):([LR])")


def parse_path(tri, text):
    """Parse ``@<dart>,T<id>:<in>-><out>:<L|R>,...[,@<dart>]`` with optional ``F+``/``F-`` tokens."""
    tokens = [tok.strip() for tok in text.replace(";", ",").split(",") if tok.strip()]
    if not tokens or not tokens[0].startswith("@"):
        raise InconsistentStep("a path word starts with @<dart>")
    start = int(tokens[0][1:])
    if abs(start) not in tri.edges:
        raise InconsistentStep(f"unknown marked point {start}")
    cur, moves = start, []

    def goto(target):
        nonlocal cur
        if target == cur:
            return
        if target == -cur:
            moves.append(("t", cur))
            cur = target
            return
        raise InconsistentStep(f"cannot continue from marked point {cur} to {target}")

    for i, tok in enumerate(tokens[1:], 1):
        if tok in ("F+", "F-", "F"):
            moves.append(("F", -1 if tok == "F-" else 1))
            continue
        if tok.startswith("@"):
            if i != len(tokens) - 1:
                raise InconsistentStep("end marker must be last")
            goto(int(tok[1:]))
            continue
        m = _STEP.fullmatch(tok)
        if not m:
            raise InconsistentStep(f"bad step {tok!r}")
        t, din, dout, turn = int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4)
        if t >= len(tri.triangles) or din not in tri.triangles[t] or dout not in tri.triangles[t]:
            raise InconsistentStep(f"step {tok} does not use sides of triangle {t}")
        if din == dout:
            raise InconsistentStep(f"step {tok} enters and exits through the same side")
        if turn == "L":
            if dout != tri.prev(din):
                raise InconsistentStep(f"step {tok}: a left turn exits through prev(in)")
            mv = ("L", din)
        else:
            if dout != tri.next(din):
                raise InconsistentStep(f"step {tok}: a right turn exits through next(in)")
            mv = ("R", dout)
        a, b = move_endpoints(tri, mv)
        goto(a)
        moves.append(mv)
        cur = b
    return BasePath(start, tuple(moves))


def format_path(tri, p):
    out = [f"@{p.start}"]
    cur = p.start
    for mv in p.moves:
        kind, x = mv
        if kind == "F":
            out.append("F+" if x > 0 else "F-")
        elif kind == "t":
            cur = -x
        else:
            t = tri.face(x)
            if kind == "L":
                out.append(f"T{t}:{x}->{tri.prev(x)}:L")
            else:
                out.append(f"T{t}:{-tri.rot(x)}->{x}:R")
            cur = move_endpoints(tri, mv)[1]
    out.append(f"@{cur}")
    return ",".join(out)


def sn_step(engine, move):
    return engine.step(move)


def sn_lift(engine, p):
    """Lift matrix of a base path: product of step matrices, canonical after every product."""
    tri = engine.tri
    m = LiftMatrix.identity(p.start)
    cur = p.start
    for mv in p.moves:
        if mv[0] == "F":
            m = m.scaled(-1)
            continue
        a, b = move_endpoints(tri, mv)
        if a != cur:
            raise InconsistentStep(f"move {mv} does not start at marked point {cur}")
        m = engine.step(mv) @ m
        cur = b
    return m


def enumerate_lifts_bruteforce(engine, p, bound=16):
    """Expand every lift: each start sheet and each admissible set of ray detours.

    Every lifted walk is assembled from raw per-move pieces and canonicalized
    once at the end.
    """
    tri = engine.tri
    n_moves = sum(1 for m in p.moves if m[0] != "F")
    if n_moves > bound:
        raise PathTooLong(f"path has {n_moves} moves, bound is {bound}")
    p.check(tri)
    sign = 1
    raws = []
    for mv in p.moves:
        if mv[0] == "F":
            sign = -sign
        else:
            raws.append(engine.raw_lifts(mv))
    entries = {}

    def walk(i, sheet, moves, h, s0):
        if i == len(raws):
            canon, sgn = engine.canonical(moves, h)
            acc = entries.setdefault((sheet, s0), {})
            key = ((p.start, s0), canon)
            acc[key] = acc.get(key, 0) + sign * sgn
            if acc[key] == 0:
                del acc[key]
            return
        standard, detour = raws[i]
        ti, piece, dh = standard[sheet]
        walk(i + 1, ti, moves + list(piece), h + dh, s0)
        if detour is not None and sheet == SOURCE:
            walk(i + 1, SINK, moves + list(detour[0]), h + detour[1], s0)

    for s0 in (SINK, SOURCE):
        walk(0, s0, [], 0, s0)
    return LiftMatrix(entries)


def count_raw_terms(engine, p):
    """Number of lifted walks before any cancellation."""
    tri = engine.tri
    p.check(tri)
    count = {SINK: 1, SOURCE: 1}
    for mv in p.moves:
        if mv[0] == "F":
            continue
        new = {SINK: 0, SOURCE: 0}
        for (ti, si) in engine.raw_step(mv):
            new[ti] += count[si]
        count = new
    return count[SINK] + count[SOURCE]


def evaluate(m, value_of):
    """Evaluate a lift matrix; ``value_of(label)`` returns the algebra value of a lifted edge.

    A walk's holonomy multiplies later edges on the left.
    """
    alg = None
    out = {}
    for key, terms in m.entries.items():
        acc = None
        for (_, walk), coeff in terms.items():
            val = None
            for lab, o in walk:
                x = value_of(lab)
                if x is None:
                    continue
                if o == -1:
                    x = x.inv()
                val = x if val is None else x * val
            if val is None:
                val = value_of(None)
            term = val * coeff
            acc = term if acc is None else acc + term
            alg = term.alg
        out[key] = acc
    if alg is None:
        alg = value_of(None).alg
    zero = alg.zero()
    g = lambda i, j: out.get((i, j)) if out.get((i, j)) is not None else zero
    return Mat2(g(SINK, SINK), g(SINK, SOURCE), g(SOURCE, SINK), g(SOURCE, SOURCE))


# paths on the marked-point graph

def face_loop(tri, t):
    """Clockwise loop around triangle t turning left at each corner, based at its first dart."""
    e1, e2, e3 = tri.triangles[t]
    return BasePath(e1, (("L", e1), ("t", -e3), ("L", e3), ("t", -e2), ("L", e2), ("t", -e1)))


def peripheral_loop(tri, x0):
    """Counterclockwise loop of corner moves around the internal puncture tail(x0)."""
    moves, x = [], x0
    while True:
        moves.append(("L", x))
        x = tri.rot(x)
        if x == x0:
            return BasePath(x0, tuple(moves))


def fiber_loop(point):
    return BasePath(point, (("F", 1),))


def graph_moves_from(tri, d):
    """All base moves starting at marked point d."""
    out = [("t", d)]
    if tri.in_triangle(d):
        out.append(("L", d))
    r = tri.rot_inv(d)
    if r is not None:
        out.append(("R", r))
    return out


def shortest_path(tri, a, b):
    """Breadth-first path of base moves from marked point a to b."""
    prev = {a: None}
    queue = [a]
    for cur in queue:
        if cur == b:
            break
        for mv in graph_moves_from(tri, cur):
            nxt = move_endpoints(tri, mv)[1]
            if nxt not in prev:
                prev[nxt] = (cur, mv)
                queue.append(nxt)
    if b not in prev:
        raise InconsistentStep(f"no path from {a} to {b}")
    moves, cur = [], b
    while prev[cur] is not None:
        cur, mv = prev[cur]
        moves.append(mv)
    return BasePath(a, tuple(reversed(moves)))


def random_path(tri, rng, length, start=None):
    """Random reduced base word with ``length`` moves."""
    darts = tri.darts()
    cur = start if start is not None else darts[rng.integers(len(darts))]
    p0, moves = cur, []
    while len(moves) < length:
        opts = [m for m in graph_moves_from(tri, cur) if not (moves and moves[-1] == invert_move(m))]
        mv = opts[rng.integers(len(opts))]
        moves.append(mv)
        cur = move_endpoints(tri, mv)[1]
    return BasePath(p0, tuple(moves))


def enumerate_words(tri, start, max_moves):
    """All reduced base words from ``start`` with at most ``max_moves`` moves."""
    out = []

    def rec(cur, moves):
        out.append(BasePath(start, tuple(moves)))
        if len(moves) == max_moves:
            return
        for mv in graph_moves_from(tri, cur):
            if moves and moves[-1] == invert_move(mv):
                continue
            rec(move_endpoints(tri, mv)[1], moves + [mv])

    rec(start, [])
    return out
