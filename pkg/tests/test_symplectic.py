import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specnet.algebra import Mat2, parse_algebra, signature
from specnet.coords import extract_coordinates, polygon_decorated_system
from specnet.covering import Covering
from specnet.lifting import random_path
from specnet.localsys import (NotTransverse, _vec, abelianize, nonabelianize, random_decorated_system,
                              random_framed_system)
from specnet.surface import polygon, preset, presets
from specnet import symplectic as S

M2, R, H = parse_algebra("M2"), parse_algebra("R"), parse_algebra("H")


def test_omega_is_skew(rng):
    for alg in (R, H, M2):
        for _ in range(20):
            x = (alg.random(rng), alg.random(rng))
            y = (alg.random(rng), alg.random(rng))
            assert (S.omega(x, y) + S.omega(y, x).sigma()).norm() < 1e-12


def test_membership_examples(rng):
    one, zero = M2.one(), M2.zero()
    assert S.is_symplectic_matrix(Mat2.identity(M2))
    s = M2.random_symmetric(rng)
    assert S.is_symplectic_matrix(Mat2(one, s, zero, one))
    t = M2([[0, 1], [0, 0]])
    assert not S.is_symplectic_matrix(Mat2(one, t, zero, one))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["R", "C", "H", "M2", "M3", "R+M2"]), st.integers(0, 2**32 - 1))
def test_sampled_group_elements_pass_both_tests(tag, seed):
    alg = parse_algebra(tag)
    g = S.random_symplectic_matrix(alg, np.random.default_rng(seed))
    direct, block = S.symplectic_residuals(g)
    assert direct < 1e-9 and block < 1e-9


def test_real_membership_is_determinant_one(rng):
    for _ in range(20):
        a, b, c = rng.normal(size=3)
        d = (1 + b * c) / a
        g = Mat2(R(a), R(b), R(c), R(d))
        assert S.is_symplectic_matrix(g)
        assert not S.is_symplectic_matrix(Mat2(R(a), R(b), R(c), R(d * 1.5)))


def test_decorated_symplectic_systems_pass(rng):
    for name in ("S5", "torus1", "sphere3", "digon1"):
        for alg in (R, H, M2):
            sys = random_decorated_system(Covering(preset(name)), alg, rng, symplectic=True)
            assert S.check_symplectic_system(nonabelianize(sys)).ok


def test_random_quaternionic_systems_fail(rng):
    fails = 0
    for _ in range(10):
        f = random_framed_system(Covering(preset("torus1")), H, rng)
        v = S.check_symplectic_system(f)
        fails += not v.ok
        assert v.ok == (not v.violations)
    assert fails == 10


def test_words_preserve_the_form(rng):
    for name in ("torus1", "sphere3", "S6"):
        tri = preset(name)
        _, f = S.reconstruct_maximal(tri, M2, rng)
        for _ in range(100):
            p = random_path(tri, rng, int(rng.integers(0, 12)))
            assert S.is_symplectic_matrix(f.holonomy(p), 1e-8)


def test_pairing_on_standard_lines():
    vecs = {0: _vec(R, 1, 0), 1: _vec(R, 0, 1), 2: _vec(R, 1, 1)}
    comps = {0: _vec(R, 0, 1), 1: _vec(R, -1, 0), 2: _vec(R, 0, 1)}
    f = polygon_decorated_system(polygon(3), R, vecs, comps)
    pd = S.build_pairing(f, abelianize(f))
    assert abs(abs(pd.a0[0].c[0]) - 1) < 1e-12


@pytest.mark.parametrize("name", sorted(presets()))
def test_pairing_laws_on_reconstructions(name, rng):
    tri = preset(name)
    for alg in (M2, H):
        sys, f = S.reconstruct_maximal(tri, alg, rng)
        pd = S.build_pairing(f, sys)
        assert all(v < 1e-9 for v in pd.residuals.values())
        for x in pd.a0.values():
            assert (x - x.sigma()).norm() < 1e-9
        for x in pd.xi_products.values():
            assert (x - x.sigma()).norm() < 1e-9


def test_pairing_rejects_mismatched_system(rng):
    tri = preset("torus1")
    sys, f = S.reconstruct_maximal(tri, M2, rng)
    other, _ = S.reconstruct_maximal(tri, M2, rng)
    with pytest.raises(S.PairingInconsistent):
        S.build_pairing(f, other)


def test_parameter_counts():
    torus = preset("torus1").surface
    assert S.parameter_counts(torus, "theorem") == (1, 2)
    assert S.parameter_counts(torus, "full") == (2, 2)
    assert S.parameter_counts(torus, "intro") == (2, 2)
    assert S.parameter_counts(polygon(5).surface, "theorem") == (2, 0)
    assert S.count_report(polygon(5).surface)["intro_matches_full"] is False


def test_torus_example_counts(rng):
    tri = preset("torus1")
    units = S.random_units(M2, rng, 2)
    _, f = S.reconstruct_symplectic(tri, M2, S.random_pairing_values(M2, rng, 2), units, mode="full")
    assert S.check_symplectic_system(f).ok
    _, f = S.reconstruct_symplectic(tri, M2, S.random_pairing_values(M2, rng, 1), units, mode="theorem")
    assert S.check_symplectic_system(f).ok
    with pytest.raises(S.BadParameterCount):
        S.reconstruct_symplectic(tri, M2, S.random_pairing_values(M2, rng, 2), units, mode="theorem")


def test_intro_count_refuses_boundary(rng):
    with pytest.raises(S.BadParameterCount):
        S.reconstruct_symplectic(polygon(4), R, [R.one(), R.one()], [], mode="intro")


def test_all_ones_gives_unipotent_peripherals():
    for name in sorted(presets()):
        tri = preset(name)
        ns, nu = S.parameter_counts(tri.surface, "theorem")
        _, f = S.reconstruct_symplectic(tri, R, [R.one()] * ns, [R.one()] * nu)
        for v, (ok, sign) in S.peripheral_unipotent(f).items():
            assert ok, (name, v)


def test_km_index_examples(rng):
    l1, l2, l3 = _vec(R, 1, 0), _vec(R, 0, 1), _vec(R, 1, 1)
    k = S.km_index(l1, l2, l3)
    assert k in (1, -1)
    assert S.km_index(l1, l3, l2) == -k
    assert S.km_index(l2, l3, l1) == k
    with pytest.raises(NotTransverse):
        S.km_index(l1, l1, l3)
    with pytest.raises(S.NotIsotropic):
        S.km_index((M2.one(), M2([[0, 1], [0, 0]])), (M2.zero(), M2.one()), (M2.one(), M2.one()))


def test_km_index_rescaling_and_positive_triples(rng):
    for _ in range(10):
        _, f = S.reconstruct_maximal(preset("S3"), M2, rng)
        l1, l2, l3 = S.triangle_lines(f, 0)
        assert S.km_index(l1, l2, l3) == 2
        u = M2.random_unit(rng)
        assert S.km_index((l1[0] * u, l1[1] * u), l2, l3) == 2


def test_km_index_matches_pairing_signature(rng):
    for name in ("S5", "torus1", "sphere3"):
        for alg in (R, H, M2):
            sys = random_decorated_system(Covering(preset(name)), alg, rng, symplectic=True)
            f = nonabelianize(sys)
            a0 = S.build_pairing(f, sys).a0
            assert S.triangle_km_indices(f) == [signature(a0[t], 1e-7) for t in sorted(a0)]


def test_maximality_examples(rng):
    tri = preset("S5")
    sym = S.random_pairing_values(M2, rng, 3)
    _, f = S.reconstruct_symplectic(tri, M2, sym, [], mode="full")
    assert S.check_maximal(f)
    sym[1] = M2([[1, 0], [0, -1]])
    _, f = S.reconstruct_symplectic(tri, M2, sym, [], mode="full")
    assert not S.check_maximal(f)
    _, f = S.reconstruct_symplectic(preset("S3"), R, [R(2.0)], [], mode="full")
    assert S.check_maximal(f) and S.triangle_km_indices(f) == [1]


def test_symplectic_polygon_coordinates(rng):
    tri = polygon(5)
    for _ in range(20):
        vecs, comps = {}, {}
        for v in tri.punctures():
            g = S.random_symplectic_matrix(M2, rng, 1.0)
            vecs[v], comps[v] = g * _vec(M2, 1, 0), g * _vec(M2, 0, 1)
        f = polygon_decorated_system(tri, M2, vecs, comps)
        chart = extract_coordinates(f)
        for d in tri.darts():
            want = S.omega(vecs[tri.head(d)], vecs[tri.tail(d)])
            assert (chart[d] - want).norm() < 1e-8 * max(1.0, want.norm())
        rep = S.symplectic_coordinate_relations(chart)
        assert rep.skew_residual < 1e-8 and rep.beta_symmetry < 1e-8
        assert rep.beta_signatures == S.triangle_km_indices(f)
        assert rep.maximal_by_beta == S.check_maximal(f)


def test_real_teichmuller_triples_are_positive(rng):
    # points in cyclic order on the circle of directions give a maximal triangle
    for _ in range(20):
        th = np.sort(rng.uniform(0, np.pi, 3))
        vecs = {i: _vec(R, np.cos(t), np.sin(t)) for i, t in enumerate(th)}
        comps = {i: _vec(R, -np.sin(t), np.cos(t)) for i, t in enumerate(th)}
        chart = extract_coordinates(polygon_decorated_system(polygon(3), R, vecs, comps))
        rep = S.symplectic_coordinate_relations(chart)
        assert len(set(rep.beta_signatures)) == 1


def test_congruence_action_gives_isomorphic_systems(rng):
    for name in ("torus1", "digon1", "S6"):
        tri = preset(name)
        ns, nu = S.parameter_counts(tri.surface, "full")
        for alg in (R, M2):
            sym = S.random_pairing_values(alg, rng, ns, positive=False)
            units = S.random_units(alg, rng, nu)
            _, f = S.reconstruct_symplectic(tri, alg, sym, units, "full")
            u = S.random_units(alg, rng, 1)[0]
            _, g = S.reconstruct_symplectic(tri, alg, *S.act_on_parameters(sym, units, u), "full")
            assert S.check_maximal(f) == S.check_maximal(g)
            assert S.triangle_km_indices(f) == S.triangle_km_indices(g)
            if alg is R:
                t1 = [x.c[0] for x in S.generator_traces(f)]
                t2 = [x.c[0] for x in S.generator_traces(g)]
                assert np.allclose(t1, t2, rtol=1e-7)
