"""Dense complex kernels on node pairs: the discretized algebra of X x X.

Carries the four operations (weighted matrix multiplication, Hadamard
product, transpose, conjugate), the sup norm, and the approximate-identity
test harness. Kernels are immutable and tied to their MeasureSpace by
object identity.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SpaceMismatchError
from .measure import MeasureSpace

KERNEL_HEADER = "#casmat-kernel v1"


class Kernel:
    """Immutable complex matrix over the node pairs of a MeasureSpace."""

    __slots__ = ("entries", "space")

    def __init__(self, entries, space: MeasureSpace):
        arr = np.array(entries, dtype=complex)
        n = space.node_count
        if arr.shape != (n, n):
            raise ValueError(f"entries have shape {arr.shape}, expected ({n}, {n})")
        if not np.isfinite(arr).all():
            raise ValueError("kernel entries must all be finite")
        arr.setflags(write=False)
        self.entries = arr
        self.space = space

    def __repr__(self):
        return f"Kernel(n={self.space.node_count})"


def _check_same_space(A: Kernel, B: Kernel) -> MeasureSpace:
    if A.space is not B.space:
        raise SpaceMismatchError(
            "kernels live over different measure spaces "
            "(space identity is checked by reference)")
    return A.space


def ones_kernel(space: MeasureSpace) -> Kernel:
    """The constant-one kernel J, the Hadamard unit."""
    return Kernel(np.ones((space.node_count,) * 2), space)


def diagonal_kernel(space: MeasureSpace) -> Kernel:
    """Indicator of the diagonal. The composition identity iff weights are 1."""
    return Kernel(np.eye(space.node_count), space)


def matmul(A: Kernel, B: Kernel) -> Kernel:
    """Weighted composition: (A o B)[x,z] = sum_y w[y] A[x,y] B[y,z].

    Accumulates in complex128 via BLAS; the documented accumulation
    tolerance is 1e-10 relative.
    """
    space = _check_same_space(A, B)
    return Kernel((A.entries * space.weights) @ B.entries, space)


def hadamard(A: Kernel, B: Kernel) -> Kernel:
    """Entrywise product."""
    space = _check_same_space(A, B)
    return Kernel(A.entries * B.entries, space)


def transpose(A: Kernel) -> Kernel:
    return Kernel(A.entries.T, A.space)


def conjugate(A: Kernel) -> Kernel:
    return Kernel(np.conj(A.entries), A.space)


def sup_norm(A: Kernel) -> float:
    return float(np.abs(A.entries).max())


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of a candidate approximate-identity family against probes.

    left_residuals[N, p]  = sup |I_N o A_p - A_p|
    right_residuals[N, p] = sup |A_p o I_N - A_p|
    non_increasing[p] is True when both residual sequences are
    non-increasing in N; final_below[p] compares the last (finest)
    residual of either side against the caller tolerance.
    """

    left_residuals: np.ndarray
    right_residuals: np.ndarray
    non_increasing: np.ndarray
    final_below: np.ndarray
    tolerance: float

    @property
    def all_non_increasing(self) -> bool:
        return bool(self.non_increasing.all())

    @property
    def all_final_below(self) -> bool:
        return bool(self.final_below.all())


def check_approximate_identity(family, probes, tolerance: float) -> IdentityReport:
    """Measure how well an ordered kernel family acts as a composition identity.

    `family` is ordered from coarsest to finest. For each member I_N and
    each probe A the report records sup |I_N o A - A| and sup |A o I_N - A|.
    """
    family = list(family)
    probes = list(probes)
    if not family:
        raise ValueError("identity family must be non-empty")
    if not probes:
        raise ValueError("probe list must be non-empty")
    space = family[0].space
    for K in family + probes:
        if K.space is not space:
            raise SpaceMismatchError("family and probes must share one space")
    left = np.zeros((len(family), len(probes)))
    right = np.zeros_like(left)
    for i, I_N in enumerate(family):
        for j, A in enumerate(probes):
            left[i, j] = sup_norm(Kernel(matmul(I_N, A).entries - A.entries, space))
            right[i, j] = sup_norm(Kernel(matmul(A, I_N).entries - A.entries, space))
    non_inc = np.logical_and(
        (np.diff(left, axis=0) <= 0).all(axis=0),
        (np.diff(right, axis=0) <= 0).all(axis=0))
    final = np.maximum(left[-1], right[-1]) <= tolerance
    return IdentityReport(left_residuals=left, right_residuals=right,
                          non_increasing=non_inc, final_below=final,
                          tolerance=float(tolerance))


def write_kernel(K: Kernel, path) -> None:
    """Dump a kernel as CSV rows of re,im pairs under the v1 header."""
    n = K.space.node_count
    with open(path, "w") as fh:
        fh.write(f"{KERNEL_HEADER} n={n}\n")
        for row in K.entries:
            fields = []
            for v in row:
                fields.append(repr(float(v.real)))
                fields.append(repr(float(v.imag)))
            fh.write(",".join(fields) + "\n")


def read_kernel(path, space: MeasureSpace) -> Kernel:
    """Read a kernel dump written by write_kernel; n must match the space."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(KERNEL_HEADER):
        raise ParseError(f"expected header {KERNEL_HEADER!r}", line=1)
    try:
        n = int(lines[0].split("n=", 1)[1])
    except (IndexError, ValueError):
        raise ParseError("header is missing the n=<node_count> field", line=1)
    if n != space.node_count:
        raise ParseError(
            f"kernel is over {n} nodes, space has {space.node_count}")
    rows = []
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text:
            continue
        parts = text.split(",")
        if len(parts) != 2 * n:
            raise ParseError(
                f"expected {2 * n} comma-separated fields, got {len(parts)}",
                line=lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ParseError("malformed float field", line=lineno)
        rows.append([complex(vals[2 * k], vals[2 * k + 1]) for k in range(n)])
    if len(rows) != n:
        raise ParseError(f"expected {n} matrix rows, got {len(rows)}")
    return Kernel(np.asarray(rows), space)
