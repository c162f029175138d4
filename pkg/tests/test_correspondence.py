import numpy as np
import pytest

from casmat import (AlgebraBasis, DiagonalContaminationError,
                    InvolutionUndefinedError, Kernel, algebra_of_scheme,
                    character_partition, cyclic_scheme, diagonal_kernel,
                    group_action_scheme, hamming_scheme, intersection_number,
                    make_quadrature, ones_kernel, roundtrip_check,
                    scheme_of_algebra, sphere_scheme, structure_constants,
                    symmetric_group, verify_cas)


def test_algebra_of_cyclic3_circulants_sum_to_j():
    scheme = cyclic_scheme(3)
    alg = algebra_of_scheme(scheme)
    assert alg.size == 3
    total = sum(K.entries for K in alg.basis)
    assert np.array_equal(total, ones_kernel(scheme.space).entries)
    for K in alg.basis:
        first_row = K.entries[0].real
        for x in range(3):
            assert np.array_equal(K.entries[x].real, np.roll(first_row, x))


def test_algebra_basis_size_equals_label_count():
    for scheme in (cyclic_scheme(6), hamming_scheme(2, 3)):
        assert algebra_of_scheme(scheme).size == scheme.label_count


def test_hamming_indicator_row_sums_are_binomial():
    alg = algebra_of_scheme(hamming_scheme(3, 2))
    row_sums = [K.entries.real.sum(axis=1) for K in alg.basis]
    for sums, expected in zip(row_sums, (1, 3, 3, 1)):
        assert np.all(sums == expected)


def test_structure_constants_reproduce_intersection_numbers():
    scheme = hamming_scheme(3, 2)
    tensor, _ = structure_constants(algebra_of_scheme(scheme))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                value, dev = intersection_number(scheme, {i}, {j}, k)
                assert dev == 0.0
                assert tensor[i, j, k].real == value


def test_two_cell_recovery_from_id_and_complement():
    space = make_quadrature(np.ones(4))
    Id = diagonal_kernel(space)
    off = Kernel(np.ones((4, 4)) - np.eye(4), space)
    recovered = scheme_of_algebra(AlgebraBasis(basis=(Id, off)))
    assert recovered.label_count == 2
    assert recovered.label_space.identity_label == 0
    assert np.array_equal(recovered.relation,
                          (np.ones((4, 4)) - np.eye(4)).astype(int))


def test_character_partition_cells_and_values():
    space = make_quadrature(np.ones(3))
    Id = diagonal_kernel(space)
    off = Kernel(np.ones((3, 3)) - np.eye(3), space)
    part = character_partition(AlgebraBasis(basis=(Id, off)))
    assert part.cell_count == 2
    assert np.array_equal(part.representative_values,
                          np.array([[1, 0], [0, 1]], dtype=complex))


def test_span_of_j_fails_diagonal_separation():
    space = make_quadrature(np.ones(4))
    alg = AlgebraBasis(basis=(ones_kernel(space),))
    with pytest.raises(DiagonalContaminationError) as err:
        scheme_of_algebra(alg)
    assert err.value.pair is not None


def test_tolerance_merge_that_transpose_splits_is_refused():
    space = make_quadrature(np.ones(4))
    entries = np.zeros((4, 4))
    entries[0, 1] = 1.0
    entries[2, 3] = 1.0 + 1e-12
    entries[1, 0] = 5.0
    entries[3, 2] = 9.0
    K = Kernel(entries, space)
    alg = AlgebraBasis(basis=(diagonal_kernel(space), K), contains_J=False)
    with pytest.raises(InvolutionUndefinedError):
        scheme_of_algebra(alg, grouping_tolerance=1e-9)


def test_recovered_scheme_satisfies_transpose_axiom_structurally():
    recovered = scheme_of_algebra(algebra_of_scheme(cyclic_scheme(5)))
    assert verify_cas(recovered, tolerance=0.0).cas3_ok


def test_symmetric_algebra_recovers_identity_involution():
    recovered = scheme_of_algebra(algebra_of_scheme(hamming_scheme(3, 2)))
    assert recovered.label_space.is_symmetric()


def test_roundtrip_cyclic12():
    report = roundtrip_check(cyclic_scheme(12))
    assert report.matched()
    assert sorted(report.label_bijection) == list(range(12))
    assert sorted(report.label_bijection.values()) == list(range(12))


def test_roundtrip_hamming():
    report = roundtrip_check(hamming_scheme(3, 2))
    assert report.matched()


def test_roundtrip_group_action():
    report = roundtrip_check(group_action_scheme(symmetric_group(4)))
    assert report.matched()
    assert report.original_labels == 2


def test_roundtrip_sphere_bins():
    scheme = sphere_scheme(80, 8, seed=11)
    report = roundtrip_check(scheme, grouping_tolerance=1e-9)
    assert report.matched()
    assert report.recovered_labels == scheme.label_count


def test_roundtrip_report_is_diagnostic_not_raising():
    # a healthy scheme reports cleanly; the report carries the bijection
    report = roundtrip_check(cyclic_scheme(4))
    d = report.as_dict()
    assert d["partition_match"] is True
    assert d["witness"] is None
