import numpy as np
import pytest

from casmat import (LabelSpace, Scheme, SurjectivityError, cyclic_scheme,
                    fiber, hamming_scheme, intersection_number,
                    make_quadrature, read_scheme, verify_cas, write_scheme)
from casmat.errors import ParseError


def brute_force_intersection(scheme, W, Wp, k):
    """Independent oracle: pure-python loops over the full fiber."""
    rel = scheme.relation
    w = scheme.space.weights
    n = scheme.space.node_count
    values = []
    for x in range(n):
        for z in range(n):
            if rel[x, z] != k:
                continue
            m = 0.0
            for y in range(n):
                if rel[x, y] in W and rel[y, z] in Wp:
                    m += w[y]
            values.append(m)
    return values


# --- LabelSpace and Scheme validation


def test_label_space_requires_involutive_bijection():
    with pytest.raises(ValueError, match="involutive"):
        LabelSpace(involution=np.array([1, 2, 0]))


def test_label_space_identity_must_be_fixed():
    with pytest.raises(ValueError, match="fix"):
        LabelSpace(involution=np.array([1, 0]), identity_label=0)


def test_label_space_bins_must_be_disjoint():
    with pytest.raises(ValueError, match="disjoint"):
        LabelSpace(involution=np.array([0, 1]),
                   bin_meta=((0.0, 1.0), (0.5, 2.0)))


def test_scheme_requires_surjective_relation():
    space = make_quadrature(np.ones(3))
    ls = LabelSpace(involution=np.arange(3), identity_label=0)
    rel = np.zeros((3, 3), dtype=int)
    rel[0, 1] = rel[1, 0] = 1
    rel[0, 2] = rel[2, 0] = 1
    rel[1, 2] = rel[2, 1] = 1
    with pytest.raises(SurjectivityError):
        Scheme(space, ls, rel)


def test_scheme_rejects_out_of_range_labels():
    space = make_quadrature(np.ones(2))
    ls = LabelSpace(involution=np.arange(2), identity_label=0)
    with pytest.raises(ValueError, match="0..label_count"):
        Scheme(space, ls, np.array([[0, 5], [5, 0]]))


# --- fibers


def test_identity_fiber_is_diagonal():
    s = cyclic_scheme(7)
    xs, ys = fiber(s, 0)
    assert np.array_equal(xs, ys)
    assert xs.size == 7


def test_cyclic_fiber_is_translation_orbit():
    s = cyclic_scheme(5)
    xs, ys = fiber(s, 2)
    assert xs.size == 5
    assert np.all((ys - xs) % 5 == 2)


def test_fiber_of_involution_partner_is_transposed():
    s = cyclic_scheme(6)
    for i in range(6):
        xs, ys = fiber(s, i)
        xt, yt = fiber(s, int(s.label_space.involution[i]))
        assert set(zip(xt.tolist(), yt.tolist())) == \
            set(zip(ys.tolist(), xs.tolist()))


def test_fiber_unknown_label():
    s = cyclic_scheme(4)
    with pytest.raises(ValueError, match="unknown"):
        fiber(s, 9)


# --- intersection numbers


def test_cyclic_intersection_number():
    s = cyclic_scheme(5)
    value, dev = intersection_number(s, {1}, {2}, 3)
    assert value == 1.0 and dev == 0.0


def test_hamming_intersection_number_vs_oracle():
    s = hamming_scheme(3, 2)
    values = brute_force_intersection(s, {1}, {1}, 2)
    assert set(values) == {2.0}
    value, dev = intersection_number(s, {1}, {1}, 2)
    assert value == 2.0 and dev == 0.0


def test_full_label_sets_give_total_mass():
    s = hamming_scheme(2, 3)
    all_labels = set(range(s.label_count))
    for k in range(s.label_count):
        value, dev = intersection_number(s, all_labels, all_labels, k)
        assert value == s.space.total_mass
        assert dev == 0.0


def test_intersection_number_additive_in_first_set():
    s = hamming_scheme(3, 2)
    v01, _ = intersection_number(s, {0, 1}, {2}, 1)
    v0, _ = intersection_number(s, {0}, {2}, 1)
    v1, _ = intersection_number(s, {1}, {2}, 1)
    assert v01 == v0 + v1


# --- verify_cas


def test_verify_cyclic_12():
    rep = verify_cas(cyclic_scheme(12), tolerance=0.0)
    assert rep.passed()
    assert rep.cas2_max_deviation == 0.0
    assert rep.cas4_max_deviation == 0.0
    assert not rep.symmetric
    assert rep.commutative


def test_verify_hamming_32():
    rep = verify_cas(hamming_scheme(3, 2), tolerance=0.0)
    assert rep.passed()
    assert rep.symmetric and rep.commutative
    assert rep.cas2_max_deviation == 0.0


def test_verify_cyclic_against_brute_force_oracle():
    s = cyclic_scheme(6)
    for (W, Wp, k) in [({1}, {2}, 3), ({2}, {5}, 1), ({0}, {4}, 4)]:
        values = brute_force_intersection(s, W, Wp, k)
        assert max(values) - min(values) == 0.0
        value, dev = intersection_number(s, W, Wp, k)
        assert value == values[0]
        assert dev == 0.0


def test_random_relabeling_fails_with_witness():
    rng = np.random.default_rng(2024)
    n = 8
    rel = rng.integers(1, 4, size=(n, n))
    np.fill_diagonal(rel, 0)
    ls = LabelSpace(involution=np.arange(4), identity_label=0)
    bad = Scheme(make_quadrature(np.ones(n)), ls, rel)
    rep = verify_cas(bad, tolerance=0.0)
    assert not rep.passed()
    assert (not rep.cas3_ok) or rep.cas2_max_deviation > 0
    assert "cas3" in rep.witnesses or "cas2" in rep.witnesses


def test_row_masses_sum_to_total_exactly():
    for s in (cyclic_scheme(9), hamming_scheme(2, 3)):
        rel = s.relation
        w = s.space.weights
        for x in range(s.space.node_count):
            masses = np.bincount(rel[x], weights=w, minlength=s.label_count)
            assert masses.sum() == s.space.total_mass


def test_symmetric_implies_cas4_within_twice_cas2():
    rep = verify_cas(hamming_scheme(3, 2), tolerance=0.0)
    assert rep.symmetric
    assert rep.cas4_max_deviation <= 2 * rep.cas2_max_deviation


def test_sampled_verification_stays_exact_on_finite_scheme():
    rep = verify_cas(hamming_scheme(3, 2), tolerance=0.0,
                     max_pairs_per_fiber=5, seed=3)
    assert rep.sampled
    assert rep.cas2_max_deviation == 0.0
    assert rep.cas4_max_deviation == 0.0


def test_diagonal_slack_admits_near_diagonal_pairs():
    # relation whose identity fiber contains one off-diagonal pair
    n = 4
    rel = np.ones((n, n), dtype=int)
    np.fill_diagonal(rel, 0)
    rel[0, 1] = rel[1, 0] = 0
    ls = LabelSpace(involution=np.arange(2), identity_label=0)
    s = Scheme(make_quadrature(np.ones(n)), ls, rel)
    strict = verify_cas(s, tolerance=10.0)
    assert not strict.cas1_ok
    slack = verify_cas(s, tolerance=10.0, diagonal_slack=2)
    assert slack.cas1_ok


def test_pairs_family_includes_singletons():
    rep = verify_cas(cyclic_scheme(5), borel_family="pairs", tolerance=0.0)
    assert rep.passed()
    assert "pairs" in rep.borel_family_descriptor


# --- scheme file format


def test_scheme_file_bit_exact_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    s = hamming_scheme(2, 2)
    # replace counting weights by irregular ones to exercise float repr
    space = make_quadrature(rng.uniform(0.3, 2.1, 4))
    s = Scheme(space, s.label_space, s.relation)
    p1, p2 = tmp_path / "a.scheme", tmp_path / "b.scheme"
    write_scheme(s, p1, recipe="test d=2 q=2")
    back = read_scheme(p1)
    assert np.array_equal(back.relation, s.relation)
    assert np.array_equal(back.space.weights, s.space.weights)
    assert np.array_equal(back.label_space.involution,
                          s.label_space.involution)
    write_scheme(back, p2, recipe="test d=2 q=2")
    assert p1.read_bytes() == p2.read_bytes()


def test_scheme_file_preserves_bins_and_meta(tmp_path):
    from casmat import circle_scheme
    s = circle_scheme(12, 4, signed=True)
    path = tmp_path / "c.scheme"
    write_scheme(s, path)
    back = read_scheme(path)
    assert back.label_space.bin_meta == s.label_space.bin_meta
    assert back.borel_bins == s.borel_bins
    rep = verify_cas(back, tolerance=1e-12)
    assert rep.passed()


def test_scheme_parse_error_carries_line(tmp_path):
    path = tmp_path / "bad.scheme"
    path.write_text("#casmat-scheme v1\nnodes 2\nweights\n1.0 oops\n")
    with pytest.raises(ParseError, match="line 4"):
        read_scheme(path)


def test_scheme_bad_header(tmp_path):
    path = tmp_path / "bad.scheme"
    path.write_text("#nope\n")
    with pytest.raises(ParseError, match="line 1"):
        read_scheme(path)
