"""Both directions of the scheme / algebra correspondence.

A scheme yields the algebra spanned by its fiber indicators; an algebra
yields a scheme whose labels are the joint level sets of the basis (the
point evaluations exhaust the Hadamard characters of a finite-dimensional
span, so no other characters can occur at desk scale). roundtrip_check
confirms that composing the two directions reproduces the original pair
partition up to relabeling.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bma import AlgebraBasis
from .kernel import Kernel
from .scheme import LabelSpace, Scheme


class DiagonalContaminationError(ValueError):
    """The diagonal's level set is not exactly the diagonal."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class InvolutionUndefinedError(ValueError):
    """Transposition splits a grouped cell, so no involution is induced."""


def algebra_of_scheme(scheme: Scheme) -> AlgebraBasis:
    """The adjacency-indicator basis: one 0/1 kernel per label."""
    basis = []
    for i in range(scheme.label_count):
        basis.append(Kernel((scheme.relation == i).astype(float),
                            scheme.space))
    return AlgebraBasis(basis=tuple(basis), contains_J=True,
                        closure_tolerance=0.0)


@dataclass(frozen=True)
class CharacterPartition:
    """Joint level sets of a basis over node pairs.

    cell_matrix[x, y] is the cell id of the evaluation character of
    (x, y); representative_values[c] holds the basis values on the first
    member of cell c. Cell ids are ordered by the cell's lexicographically
    smallest member pair, so the labeling is deterministic.
    """

    cell_matrix: np.ndarray
    representative_values: np.ndarray

    @property
    def cell_count(self) -> int:
        return int(self.representative_values.shape[0])


def character_partition(alg: AlgebraBasis,
                        grouping_tolerance: float = 0.0) -> CharacterPartition:
    """Group node pairs into joint level sets of the basis.

    Grouping is exact (bitwise) for tolerance 0; with a positive
    tolerance, exact groups whose representative values all agree within
    the tolerance are merged (union-find over group representatives).
    """
    basis = alg.basis
    n = alg.space.node_count
    L = len(basis)
    vals = np.stack([K.entries.ravel() for K in basis]).T  # (n*n, L)
    as_floats = np.ascontiguousarray(vals).view(float).reshape(n * n, 2 * L)
    _, first_idx, inverse = np.unique(as_floats, axis=0, return_index=True,
                                      return_inverse=True)
    inverse = inverse.reshape(-1)
    G = first_idx.size
    group_of = inverse

    if grouping_tolerance > 0 and G > 1:
        reps = vals[first_idx]
        parent = list(range(G))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a in range(G):
            for b in range(a + 1, G):
                if np.abs(reps[a] - reps[b]).max() <= grouping_tolerance:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[rb] = ra
        roots = np.array([find(a) for a in range(G)])
        _, group_map = np.unique(roots, return_inverse=True)
        group_of = group_map[inverse]

    # deterministic ids: order cells by smallest member pair (row-major)
    order = np.full(group_of.max() + 1, -1, dtype=np.int64)
    next_id = 0
    cells = np.empty(n * n, dtype=np.int32)
    for flat, g in enumerate(group_of):
        if order[g] < 0:
            order[g] = next_id
            next_id += 1
        cells[flat] = order[g]
    cell_matrix = cells.reshape(n, n)
    rep_values = np.zeros((next_id, L), dtype=complex)
    seen = np.zeros(next_id, dtype=bool)
    for flat, c in enumerate(cells):
        if not seen[c]:
            seen[c] = True
            rep_values[c] = vals[flat]
    return CharacterPartition(cell_matrix=cell_matrix,
                              representative_values=rep_values)


def scheme_of_algebra(alg: AlgebraBasis,
                      grouping_tolerance: float = 0.0) -> Scheme:
    """Recover a scheme from a basis via its joint level sets.

    Fails when the diagonal's cell is contaminated by an off-diagonal
    pair (the basis cannot separate the diagonal, so no identity label
    exists) or when the grouping merges cells that transposition would
    split (the induced involution would be ill-defined); refusal is safer
    than silently refining.
    """
    part = character_partition(alg, grouping_tolerance)
    cm = part.cell_matrix
    n = cm.shape[0]
    diag = cm.diagonal()
    i0 = int(diag[0])
    if (diag != i0).any():
        x = int(np.argmax(diag != i0))
        raise DiagonalContaminationError(
            f"diagonal pairs (0,0) and ({x},{x}) fall in different cells; "
            f"characters do not identify the diagonal", pair=(x, x))
    mask = cm == i0
    mask[np.arange(n), np.arange(n)] = False
    off = np.nonzero(mask)
    if off[0].size:
        pair = (int(off[0][0]), int(off[1][0]))
        raise DiagonalContaminationError(
            f"off-diagonal pair {pair} shares the diagonal's cell; "
            f"characters do not separate the diagonal", pair=pair)

    C = part.cell_count
    inv = np.full(C, -1, dtype=np.int64)
    flat = cm.ravel()
    flat_t = cm.T.ravel()
    firsts = np.full(C, -1, dtype=np.int64)
    for pos, c in enumerate(flat):
        if firsts[c] < 0:
            firsts[c] = pos
    inv = flat_t[firsts]
    bad = np.nonzero(inv[flat] != flat_t)[0]
    if bad.size:
        pos = int(bad[0])
        x, y = divmod(pos, n)
        raise InvolutionUndefinedError(
            f"cell of ({x},{y}) maps to several cells under transposition; "
            f"grouping tolerance {grouping_tolerance!r} merges cells that "
            f"transpose would split")
    label_space = LabelSpace(involution=inv, identity_label=i0)
    return Scheme(alg.space, label_space, cm)


@dataclass
class RoundtripReport:
    """Comparison of a scheme against its algebra-recovered twin."""

    partition_match: bool
    involution_consistent: bool
    identity_consistent: bool
    label_bijection: dict
    original_labels: int
    recovered_labels: int
    witness: Optional[dict] = None

    def matched(self) -> bool:
        return (self.partition_match and self.involution_consistent
                and self.identity_consistent)

    def as_dict(self) -> dict:
        return {
            "partition_match": self.partition_match,
            "involution_consistent": self.involution_consistent,
            "identity_consistent": self.identity_consistent,
            "label_bijection": {str(k): v for k, v in
                                self.label_bijection.items()},
            "original_labels": self.original_labels,
            "recovered_labels": self.recovered_labels,
            "witness": self.witness,
        }


def roundtrip_check(scheme: Scheme,
                    grouping_tolerance: float = 0.0) -> RoundtripReport:
    """Recover the scheme from its own indicator algebra and compare.

    The recovered partition must equal the original one up to a label
    bijection; the bijection must also carry the involution and the
    identity label across. Mismatches are report content, not errors.
    """
    recovered = scheme_of_algebra(algebra_of_scheme(scheme),
                                  grouping_tolerance)
    L = scheme.label_count
    rel, rec = scheme.relation, recovered.relation
    mapping = np.full(L, -1, dtype=np.int64)
    flat, flat_rec = rel.ravel(), rec.ravel()
    for pos, lab in enumerate(flat):
        if mapping[lab] < 0:
            mapping[lab] = flat_rec[pos]
    partition_match = (recovered.label_count == L
                       and np.array_equal(mapping[flat], flat_rec)
                       and np.unique(mapping).size == L)
    witness = None
    if not partition_match:
        bad = np.nonzero(mapping[flat] != flat_rec)[0]
        if bad.size:
            pos = int(bad[0])
            x, y = divmod(pos, scheme.space.node_count)
            witness = {"pair": (x, y), "original_label": int(rel[x, y]),
                       "recovered_label": int(rec[x, y])}
        else:
            witness = {"detail": "label counts differ",
                       "original": L, "recovered": recovered.label_count}

    inv_o = scheme.label_space.involution
    inv_r = recovered.label_space.involution
    involution_consistent = bool(partition_match and np.array_equal(
        mapping[inv_o], inv_r[mapping]))
    identity_consistent = bool(
        partition_match
        and scheme.label_space.identity_label is not None
        and mapping[scheme.label_space.identity_label]
        == recovered.label_space.identity_label)
    return RoundtripReport(
        partition_match=bool(partition_match),
        involution_consistent=involution_consistent,
        identity_consistent=identity_consistent,
        label_bijection={int(i): int(mapping[i]) for i in range(L)},
        original_labels=L, recovered_labels=recovered.label_count,
        witness=witness)
