from math import comb

import pytest

from specnet.surface import (FaceCountMismatch, ForbiddenSurface, NotFlippable, SurfaceSpec, Triangulation,
                             euler_characteristic, expected_triangles, flip, flip_graph, polygon,
                             polygon_triangulation, preset, presets, punctured_torus, triangulation_from_json,
                             validate)


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def test_euler_characteristic_examples():
    assert euler_characteristic(SurfaceSpec(1, (), 1)) == 0
    assert euler_characteristic(SurfaceSpec(0, (3,), 0)) == 1
    assert euler_characteristic(SurfaceSpec(2, (), 1)) == -2


def test_presets_validate_and_match_face_count():
    for name, t in presets().items():
        validate(t)
        assert len(t.triangles) == expected_triangles(t.surface), name
        assert set(t.punctures()) == set(range(t.surface.n_punctures)), name


def test_torus_hand_built():
    t = punctured_torus()
    validate(t)
    assert len(t.triangles) == 2 and len(t.edges) == 3


def test_square_with_both_diagonals_is_rejected():
    # both diagonals cut the square into four faces around their crossing point 4
    edges = {1: (0, 1, True), 2: (1, 2, True), 3: (2, 3, True), 4: (3, 0, True)}
    edges.update({5 + i: (i, 4, False) for i in range(4)})
    tris = tuple((i + 1, 5 + (i + 1) % 4, -(5 + i)) for i in range(4))
    with pytest.raises(FaceCountMismatch):
        validate(Triangulation(SurfaceSpec(0, (4,), 0), edges, tris))


def test_forbidden_surfaces():
    with pytest.raises(ForbiddenSurface):
        validate(Triangulation(SurfaceSpec(0, (2,), 0), {1: (0, 1, True), 2: (1, 0, True)}, ()))
    with pytest.raises(ForbiddenSurface):
        polygon(2)


def test_pentagon_flip_example():
    t = polygon_triangulation(5, [(1, 3), (1, 4)])
    e = next(k for k, (a, b, _) in t.edges.items() if {a, b} == {1, 3})
    out = flip(t, e)
    diags = {frozenset((a, b)) for a, b, bd in out.edges.values() if not bd}
    assert diags == {frozenset((2, 4)), frozenset((1, 4))}


def test_flip_involution_and_boundary():
    t = polygon(6)
    for e in t.internal_edges():
        assert flip(flip(t, e), e).same_as(t)
    with pytest.raises(NotFlippable):
        flip(t, 1)


def test_flip_preserves_counts_and_validity():
    for name, t in presets().items():
        for e in t.internal_edges():
            try:
                nt = flip(t, e)
            except NotFlippable:
                continue
            validate(nt)
            assert len(nt.triangles) == len(t.triangles)
            assert len(nt.edges) == len(t.edges)
            assert set(nt.punctures()) == set(t.punctures())


@pytest.mark.parametrize("n", range(3, 9))
def test_polygon_flip_graph_is_catalan(n):
    assert len(flip_graph(polygon(n))) == catalan(n - 2)


def test_json_round_trip():
    for t in presets().values():
        back = triangulation_from_json(t.to_json())
        assert back.same_as(t)


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("S99")
