"""The branched double cover of a triangulated surface as a hexagonal complex.

Puncture v lifts to a sink ``2v`` and a source ``2v + 1``.  Each dart d gives a
lifted arc (Gamma-edge) ``tau_d`` from sink(tail d) to source(head d); the deck
involution swaps ``tau_d`` and ``tau_-d``.  The triangle (e1, e2, e3) with
e1: v1 -> v2 lifts to the hexagon with counterclockwise corners

    sink v1, source v2, sink v3, source v1, sink v2, source v3

whose sides are tau_e1, tau_-e2 (reversed), tau_e3, tau_-e1 (reversed),
tau_e2, tau_-e3 (reversed).
"""

from __future__ import annotations

from dataclasses import dataclass

from .surface import euler_characteristic, validate


class GluingInconsistent(RuntimeError):
    pass


class FormulaMismatch(RuntimeError):
    pass


def sink(v):
    return 2 * v


def source(v):
    return 2 * v + 1


def base_puncture(lifted):
    return lifted // 2


def is_sink(lifted):
    return lifted % 2 == 0


def swap(lifted):
    return lifted ^ 1


@dataclass
class TopologyReport:
    genus_cover: int
    boundary_components_cover: list
    internal_punctures_cover: int
    euler_cover: int
    formula_genus: float
    formula_boundary: list

    def to_json(self):
        return {
            "genus_cover": self.genus_cover,
            "boundary_components_cover": self.boundary_components_cover,
            "internal_punctures_cover": self.internal_punctures_cover,
            "euler_characteristic_cover": self.euler_cover,
            "closed_form": {"genus_cover": self.formula_genus, "boundary_components_cover": self.formula_boundary},
        }


class Covering:
    def __init__(self, tri):
        validate(tri)
        self.tri = tri
        self.hexagons = []
        for (e1, e2, e3) in tri.triangles:
            v1, v2, v3 = tri.tail(e1), tri.tail(e2), tri.tail(e3)
            corners = [sink(v1), source(v2), sink(v3), source(v1), sink(v2), source(v3)]
            sides = [(e1, 1), (-e2, -1), (e3, 1), (-e1, -1), (e2, 1), (-e3, -1)]
            self.hexagons.append((corners, sides))
        self.gamma_edges = {d: (sink(tri.tail(d)), source(tri.head(d))) for d in tri.darts()}
        self._check_sides()
        self.base_triangle = 0
        self.base_dart = tri.triangles[0][0]
        # corner cycle (internal) or chain (boundary) of darts around each puncture,
        # starting at its reference slot; the closing corner of a cycle is the cut
        self.ref_slot, self.cycle, self.cut = {}, {}, {}
        for v in tri.punctures():
            cyc = tri.vertex_cycle(v)
            internal = tri.is_internal_puncture(v)
            if internal and tri.tail(self.base_dart) == v:
                i = cyc.index(self.base_dart)
                cyc = cyc[i:] + cyc[:i]
            self.ref_slot[v] = cyc[0]
            self.cycle[v] = cyc
            if internal:
                self.cut[cyc[-1]] = v
        self.internal_punctures = sorted(self.cut.values())

    def _check_sides(self):
        for corners, sides in self.hexagons:
            for i, (d, o) in enumerate(sides):
                a, b = corners[i], corners[(i + 1) % 6]
                s, t = self.gamma_edges[d]
                if (o == 1 and (a, b) != (s, t)) or (o == -1 and (a, b) != (t, s)):
                    raise GluingInconsistent(f"hexagon side {d} does not match its endpoints")
                if not is_sink(s) or is_sink(t):
                    raise GluingInconsistent("Gamma-edges must run sink -> source")

    # combinatorics

    @property
    def n_branch_points(self):
        return len(self.hexagons)

    def lifted_punctures(self):
        return sorted(x for v in self.tri.punctures() for x in (sink(v), source(v)))

    def theta_edge(self, d):
        return -d

    def rays(self):
        """Three rays per hexagon: (branch point, source corner, sink corner) over one base puncture."""
        out = []
        for h, (corners, _) in enumerate(self.hexagons):
            for i in range(3):
                a, b = corners[i], corners[i + 3]
                src, snk = (a, b) if not is_sink(a) else (b, a)
                out.append((h, src, snk))
        return out

    def vertex_classes(self):
        """Union-find of hexagon corners glued along shared sides."""
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            parent[find(x)] = find(y)

        occ = {}
        for h, (corners, sides) in enumerate(self.hexagons):
            for i, (d, o) in enumerate(sides):
                start, end = ((h, i), (h, (i + 1) % 6)) if o == 1 else ((h, (i + 1) % 6), (h, i))
                occ.setdefault(d, []).append((start, end))
                find((h, i))
        for d, uses in occ.items():
            if len(uses) > 2:
                raise GluingInconsistent(f"Gamma-edge {d} is used {len(uses)} times")
            if len(uses) == 2:
                union(uses[0][0], uses[1][0])
                union(uses[0][1], uses[1][1])
        classes = {}
        for h, (corners, _) in enumerate(self.hexagons):
            for i in range(6):
                classes.setdefault(find((h, i)), set()).add(corners[i])
        for labels in classes.values():
            if len(labels) != 1:
                raise GluingInconsistent(f"one realized vertex carries labels {sorted(labels)}")
        return classes, occ

    def realized_euler(self):
        classes, occ = self.vertex_classes()
        return len(classes) - len(occ) + len(self.hexagons)

    def boundary_cycles(self):
        classes, occ = self.vertex_classes()
        label = {}
        for root, labels in classes.items():
            label[root] = next(iter(labels))
        adj = {}
        for d, uses in occ.items():
            if len(uses) == 1:
                s, t = self.gamma_edges[d]
                adj.setdefault(s, []).append(t)
                adj.setdefault(t, []).append(s)
        comps, seen = [], set()
        for v in adj:
            if v in seen:
                continue
            stack, comp = [v], []
            seen.add(v)
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def cells(self):
        """Spectral-network cells: the two hexagon sectors on either side of a Gamma-edge."""
        out = {}
        for h, (corners, sides) in enumerate(self.hexagons):
            for i, (d, _) in enumerate(sides):
                out.setdefault(d, set()).update({corners[i], corners[(i + 1) % 6]})
        return out

    def dual_rank(self):
        """Cycle rank of the dual graph (hexagons glued across interior Gamma-edges)."""
        _, occ = self.vertex_classes()
        inner = [d for d, uses in occ.items() if len(uses) == 2]
        hex_of = {}
        for h, (_, sides) in enumerate(self.hexagons):
            for d, _ in sides:
                hex_of.setdefault(d, []).append(h)
        parent = list(range(len(self.hexagons)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = len(self.hexagons)
        for d in inner:
            a, b = (find(h) for h in hex_of[d])
            if a != b:
                parent[a] = b
                comps -= 1
        return len(inner) - len(self.hexagons) + comps

    def to_dot(self):
        lines = ["digraph Gamma {"]
        for v in self.lifted_punctures():
            kind = "sink" if is_sink(v) else "source"
            lines.append(f'  n{v} [label="{kind} {base_puncture(v)}"];')
        for d, (s, t) in sorted(self.gamma_edges.items()):
            lines.append(f'  n{s} -> n{t} [label="{d}"];')
        lines.append("}")
        return "\n".join(lines)


def build_covering(tri):
    return Covering(tri)


def closed_form_genus(s):
    k_even = sum(1 for n in s.boundary if n % 2 == 0)
    k_odd = s.k - k_even
    return (2 * s.internal + 2 * k_even + 3 * k_odd + 8 * s.genus - 6 + sum(s.boundary)) / 2


def closed_form_boundary(s):
    out = []
    for n in s.boundary:
        out += [n, n] if n % 2 == 0 else [2 * n]
    return sorted(out)


def topology_report(c):
    s = c.tri.surface
    chi = c.realized_euler()
    if chi != 2 * euler_characteristic(s) - c.n_branch_points:
        raise FormulaMismatch("realized Euler characteristic violates Riemann-Hurwitz")
    comps = c.boundary_cycles()
    k = len(comps)
    if (2 - k - chi) % 2:
        raise FormulaMismatch("odd genus numerator")
    genus = (2 - k - chi) // 2
    on_boundary = {v for comp in comps for v in comp}
    internal = len([v for v in c.lifted_punctures() if v not in on_boundary])
    sizes = sorted(len(comp) for comp in comps)
    g_formula = closed_form_genus(s)
    b_formula = closed_form_boundary(s)
    if g_formula != genus or b_formula != sizes or internal != 2 * s.internal:
        raise FormulaMismatch(f"realized genus {genus}, boundary {sizes}; closed form {g_formula}, {b_formula}")
    return TopologyReport(genus, sizes, internal, chi, g_formula, b_formula)


def gamma_graph(c):
    hex_cycles = [list(sides) for _, sides in c.hexagons]
    return {"vertices": c.lifted_punctures(), "edges": dict(c.gamma_edges), "hexagon_cycles": hex_cycles}


def pi1_rank(c):
    """Free rank of the fundamental group of the punctured cover.

    Returns (rank, details) where details lists both closed forms and the
    spanning-tree count; any disagreement raises FormulaMismatch.
    """
    s = c.tri.surface
    chi_cover = c.realized_euler()
    a = 1 - chi_cover + 2 * s.internal
    b = 1 - 4 * euler_characteristic(s) + 4 * s.internal + sum(s.boundary)
    tree = c.dual_rank()
    details = {"from_cover_euler": a, "from_base_data": b, "spanning_tree": tree}
    if not (a == b == tree):
        raise FormulaMismatch(f"rank formulas disagree: {details}")
    return tree, details
