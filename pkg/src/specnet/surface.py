"""Punctured surfaces and their ideal triangulations as combinatorial maps.

Edge pairs carry positive integer ids; a dart is a signed id, ``-d`` being the
reversed orientation.  Each triangle is a counterclockwise cyclic triple of
darts, with ``head(d) == tail(next(d))``.  A boundary edge pair has exactly one
dart lying in a triangle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class ValidationError(ValueError):
    pass


class DanglingEdge(ValidationError):
    pass


class FaceCountMismatch(ValidationError):
    pass


class OrientationInconsistent(ValidationError):
    pass


class ForbiddenSurface(ValidationError):
    pass


class NotFlippable(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceSpec:
    genus: int = 0
    boundary: tuple = ()
    internal: int = 0

    @property
    def k(self):
        return len(self.boundary)

    @property
    def n_punctures(self):
        return self.internal + sum(self.boundary)

    def to_json(self):
        return {"genus": self.genus, "boundary": list(self.boundary), "internal_punctures": self.internal}


def euler_characteristic(s):
    """Euler characteristic of the compact surface with punctures filled in."""
    return 2 - 2 * s.genus - s.k


def expected_triangles(s):
    return -2 * euler_characteristic(s) + 2 * s.internal + sum(s.boundary)


def check_surface(s):
    if s.genus < 0 or s.internal < 0:
        raise ForbiddenSurface("negative genus or puncture count")
    if any(n < 1 for n in s.boundary):
        raise ForbiddenSurface("every boundary component needs a puncture")
    if s.n_punctures < 1:
        raise ForbiddenSurface("at least one puncture is required")
    if s.genus == 0 and s.k == 1 and s.internal == 0 and s.boundary[0] <= 2:
        raise ForbiddenSurface("disk with fewer than three boundary punctures")
    if s.genus == 0 and s.k == 0 and s.internal <= 2:
        raise ForbiddenSurface("sphere with fewer than three punctures")


@dataclass(frozen=True)
class Triangulation:
    surface: SurfaceSpec
    edges: dict  # id -> (tail, head, is_boundary)
    triangles: tuple  # tuple of dart triples
    _face: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        face = {}
        for t, tri in enumerate(self.triangles):
            for i, d in enumerate(tri):
                if d in face:
                    raise OrientationInconsistent(f"dart {d} lies in two triangles")
                face[d] = (t, i)
        object.__setattr__(self, "_face", face)

    # incidence

    def darts(self):
        out = []
        for e in sorted(self.edges):
            out += [e, -e]
        return out

    def tail(self, d):
        t, h, _ = self.edges[abs(d)]
        return t if d > 0 else h

    def head(self, d):
        return self.tail(-d)

    def is_boundary(self, d):
        return self.edges[abs(d)][2]

    def in_triangle(self, d):
        return d in self._face

    def face(self, d):
        return self._face[d][0]

    def next(self, d):
        t, i = self._face[d]
        return self.triangles[t][(i + 1) % 3]

    def prev(self, d):
        t, i = self._face[d]
        return self.triangles[t][(i + 2) % 3]

    def rot(self, d):
        """Next dart counterclockwise around tail(d), inside the triangle of d."""
        return -self.prev(d)

    def rot_inv(self, d):
        """Inverse of rot, or None on a boundary end."""
        if -d not in self._face:
            return None
        return self.next(-d)

    def punctures(self):
        return sorted({v for t, h, _ in self.edges.values() for v in (t, h)})

    def internal_edges(self):
        return sorted(e for e, (_, _, b) in self.edges.items() if not b)

    def vertex_cycle(self, v):
        """Darts leaving puncture v in counterclockwise order.

        For a boundary puncture the list starts at the dart with no rot
        preimage and ends at the dart with no triangle.  For an internal one it
        starts at the smallest dart.
        """
        out = [d for d in self.darts() if self.tail(d) == v]
        starts = [d for d in out if self.rot_inv(d) is None]
        d = starts[0] if starts else min(out, key=lambda x: (abs(x), x < 0))
        cyc = [d]
        while d in self._face:
            d = self.rot(d)
            if d == cyc[0]:
                break
            cyc.append(d)
        return cyc

    def is_internal_puncture(self, v):
        return all(self.rot_inv(d) is not None for d in self.darts() if self.tail(d) == v)

    # serialization

    def to_json(self):
        return {
            "surface": self.surface.to_json(),
            "edges": [{"id": e, "tail": t, "head": h, "boundary": b} for e, (t, h, b) in sorted(self.edges.items())],
            "triangles": [list(tri) for tri in self.triangles],
        }

    def key(self):
        """Unoriented edge multiset; identifies polygon triangulations."""
        return tuple(sorted(tuple(sorted((t, h))) for t, h, _ in self.edges.values()))

    def same_as(self, other):
        """Equal up to edge orientation and cyclic rotation of triangles."""
        if set(self.edges) != set(other.edges):
            return False
        flip = {}
        for e, (t, h, b) in self.edges.items():
            t2, h2, b2 = other.edges[e]
            if b != b2:
                return False
            if (t, h) == (t2, h2):
                flip[e] = 1
            elif (t, h) == (h2, t2):
                flip[e] = -1
            else:
                return False

        def canon(tris, sign):
            out = set()
            for tri in tris:
                tri = [d * sign.get(abs(d), 1) for d in tri]
                i = tri.index(min(tri))
                out.add(tuple(tri[i:] + tri[:i]))
            return out

        return canon(self.triangles, flip) == canon(other.triangles, {})


def triangulation_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    s = data["surface"]
    spec = SurfaceSpec(int(s.get("genus", 0)), tuple(int(n) for n in s.get("boundary", [])),
                       int(s.get("internal_punctures", 0)))
    edges = {}
    for e in data["edges"]:
        eid = int(e["id"])
        if eid <= 0:
            raise ValidationError("edge ids must be positive")
        edges[eid] = (int(e["tail"]), int(e["head"]), bool(e.get("boundary", False)))
    tris = tuple(tuple(int(d) for d in tri) for tri in data["triangles"])
    return Triangulation(spec, edges, tris)


def validate(t, s=None):
    s = s or t.surface
    check_surface(s)
    if len(t.triangles) != expected_triangles(s):
        raise FaceCountMismatch(f"{len(t.triangles)} triangles, expected {expected_triangles(s)}")
    for tri in t.triangles:
        if len(tri) != 3:
            raise OrientationInconsistent(f"triangle {tri} is not a triple")
        for d in tri:
            if abs(d) not in t.edges:
                raise DanglingEdge(f"dart {d} has no edge")
        for i in range(3):
            if t.head(tri[i]) != t.tail(tri[(i + 1) % 3]):
                raise OrientationInconsistent(f"triangle {tri} is not a closed oriented cycle")
    for e, (_, _, b) in t.edges.items():
        used = (e in t._face) + (-e in t._face)
        if used == 0:
            raise DanglingEdge(f"edge {e} borders no triangle")
        if b and used != 1:
            raise DanglingEdge(f"boundary edge {e} must border exactly one face-corner")
        if not b and used != 2:
            raise DanglingEdge(f"internal edge {e} must border two face-corners")
    if len(t.punctures()) != s.n_punctures or t.punctures() != list(range(s.n_punctures)):
        raise OrientationInconsistent("vertex set must be the punctures 0..n-1")
    if len(t.punctures()) - len(t.edges) + len(t.triangles) != euler_characteristic(s):
        raise OrientationInconsistent("vertex/edge/face count disagrees with the surface")
    # boundary components: trace boundary edges and compare puncture counts
    nxt = {}
    for e, (a, b, isb) in t.edges.items():
        if isb:
            d = e if e in t._face else -e
            nxt[t.tail(d)] = t.head(d)
    comps, seen = [], set()
    for v in nxt:
        if v in seen:
            continue
        n, w = 0, v
        while w not in seen:
            seen.add(w)
            n += 1
            w = nxt.get(w)
            if w is None:
                raise DanglingEdge("boundary is not a union of cycles")
        comps.append(n)
    if sorted(comps) != sorted(s.boundary):
        raise OrientationInconsistent(f"boundary components {sorted(comps)} do not match {sorted(s.boundary)}")
    internal = sum(1 for v in t.punctures() if v not in nxt)
    if internal != s.internal:
        raise OrientationInconsistent("internal puncture count mismatch")
    return True


def flip_labels(t, e):
    """Quadrilateral data for flipping edge e: (p1, p2, p3, p4, a, b, c, f).

    With d = +e running p1 -> p3, the triangle of d is (d, a, b) on p1 p3 p4 and
    the triangle of -d is (-d, c, f) on p3 p1 p2.
    """
    if e not in t.edges:
        raise NotFlippable(f"no edge {e}")
    if t.edges[e][2]:
        raise NotFlippable(f"edge {e} is on the boundary")
    d = e
    if t.face(d) == t.face(-d):
        raise NotFlippable(f"edge {e} sits inside a self-folded triangle")
    a, b = t.next(d), t.prev(d)
    c, f = t.next(-d), t.prev(-d)
    return t.tail(d), t.head(c), t.head(d), t.head(a), a, b, c, f


def flip(t, e):
    """Replace the diagonal p1p3 of its quadrilateral by p2p4, reusing the id e (oriented p2 -> p4)."""
    p1, p2, p3, p4, a, b, c, f = flip_labels(t, e)
    edges = dict(t.edges)
    edges[e] = (p2, p4, False)
    t1, t2 = t.face(e), t.face(-e)
    tris = list(t.triangles)
    tris[t1] = (e, b, c)
    tris[t2] = (-e, f, a)
    out = Triangulation(t.surface, edges, tuple(tris))
    validate(out)
    return out


def flip_graph(t, limit=100000):
    """All triangulations reachable by flips, keyed by ``key()``."""
    seen = {t.key(): t}
    todo = [t]
    while todo:
        cur = todo.pop()
        for e in cur.internal_edges():
            try:
                nt = flip(cur, e)
            except NotFlippable:
                continue
            if nt.key() not in seen:
                seen[nt.key()] = nt
                todo.append(nt)
                if len(seen) > limit:
                    raise RuntimeError("flip graph too large")
    return seen


# presets

def polygon(n):
    """Disk with n boundary punctures 0..n-1, fan triangulation from puncture 0.

    Boundary edge i runs i -> i+1 (ids 1..n); diagonal 0 -> j has id n+j-1.
    """
    if n < 3:
        raise ForbiddenSurface("polygons need at least three punctures")
    edges = {i + 1: (i, (i + 1) % n, True) for i in range(n)}
    diag = {}
    for j in range(2, n - 1):
        diag[j] = n + j - 1
        edges[n + j - 1] = (0, j, False)

    def dart(u, v):
        if v == (u + 1) % n:
            return u + 1
        if u == (v + 1) % n:
            return -(v + 1)
        if u == 0:
            return diag[v]
        return -diag[u]

    tris = tuple((dart(0, j), dart(j, j + 1), dart(j + 1, 0)) for j in range(1, n - 1))
    return Triangulation(SurfaceSpec(0, (n,), 0), edges, tris)


def polygon_triangulation(n, diagonals):
    """Triangulation of the n-gon with the given diagonals (pairs i<j)."""
    diagonals = [tuple(sorted(p)) for p in diagonals]
    edges = {i + 1: (i, (i + 1) % n, True) for i in range(n)}
    ids = {}
    for k, (i, j) in enumerate(sorted(diagonals)):
        ids[(i, j)] = n + k + 1
        edges[n + k + 1] = (i, j, False)

    def dart(u, v):
        if v == (u + 1) % n:
            return u + 1
        if u == (v + 1) % n:
            return -(v + 1)
        key = (min(u, v), max(u, v))
        return ids[key] if u < v else -ids[key]

    chords = set(diagonals) | {tuple(sorted((i, (i + 1) % n))) for i in range(n)}
    tris = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if {(i, j), (j, k), (i, k)} <= chords:
                    tris.append((dart(i, j), dart(j, k), dart(k, i)))
    out = Triangulation(SurfaceSpec(0, (n,), 0), edges, tuple(tris))
    validate(out)
    return out


def punctured_torus():
    edges = {1: (0, 0, False), 2: (0, 0, False), 3: (0, 0, False)}
    return Triangulation(SurfaceSpec(1, (), 1), edges, ((1, 2, 3), (-1, -2, -3)))


def thrice_punctured_sphere():
    edges = {1: (0, 1, False), 2: (1, 2, False), 3: (2, 0, False)}
    return Triangulation(SurfaceSpec(0, (), 3), edges, ((1, 2, 3), (-3, -2, -1)))


def once_punctured_monogon():
    """Disk with one boundary puncture (0) and one internal puncture (1): a self-folded triangle."""
    edges = {1: (0, 0, True), 2: (0, 1, False)}
    return Triangulation(SurfaceSpec(0, (1,), 1), edges, ((1, 2, -2),))


def once_punctured_digon():
    """Disk with boundary punctures 0, 1 and internal puncture 2."""
    edges = {1: (0, 1, True), 2: (1, 0, True), 3: (0, 2, False), 4: (1, 2, False)}
    return Triangulation(SurfaceSpec(0, (2,), 1), edges, ((1, 4, -3), (2, 3, -4)))


def presets():
    out = {f"S{n}": polygon(n) for n in range(3, 9)}
    out["torus1"] = punctured_torus()
    out["sphere3"] = thrice_punctured_sphere()
    out["monogon1"] = once_punctured_monogon()
    out["digon1"] = once_punctured_digon()
    return out


def preset(name):
    table = presets()
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(table)}")
    return table[name]
