"""Spanning kernel families as candidate Bose-Mesner algebras.

Verifies the algebra axioms numerically (approximate composition
identity, J-absorption, closure under composition and transpose,
commutativity, symmetry), expands products in the span to get structure
constants, and builds approximate identities from bump functions on the
label space of a scheme.

Span arithmetic stacks the basis densely, so time and memory grow with
basis_size * node_count**2; intended for modest label counts.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError, SpaceMismatchError
from .kernel import (KERNEL_HEADER, Kernel, IdentityReport,
                     check_approximate_identity, matmul, ones_kernel,
                     sup_norm, transpose)
from .measure import product_integrate
from .scheme import Scheme

BASIS_HEADER = "#casmat-basis v1"


class RankDeficiencyError(ValueError):
    """The basis is linearly dependent; names the dependent members."""

    def __init__(self, dependent):
        self.dependent = tuple(int(i) for i in dependent)
        super().__init__(
            f"basis members {self.dependent} lie in the span of the others")


@dataclass(frozen=True)
class AlgebraBasis:
    """Spanning family of kernels over one space.

    contains_J asserts that the constant-one kernel lies in the span;
    closure_tolerance is the numeric budget for the Hadamard-closure,
    conjugate-closure and unitality invariants.
    """

    basis: tuple
    contains_J: bool = True
    closure_tolerance: float = 0.0

    def __post_init__(self):
        basis = tuple(self.basis)
        if not basis:
            raise ValueError("basis must be non-empty")
        space = basis[0].space
        for K in basis:
            if K.space is not space:
                raise SpaceMismatchError("basis kernels must share one space")
        object.__setattr__(self, "basis", basis)

    @property
    def space(self):
        return self.basis[0].space

    @property
    def size(self) -> int:
        return len(self.basis)


def _pair_weights(space):
    return np.outer(space.weights, space.weights).ravel()


def _stack(basis):
    return np.stack([K.entries.ravel() for K in basis])


def span_expand(basis, target: np.ndarray):
    """Least-squares expansion of target in the basis span.

    Uses the product-measure inner product; returns (coefficients,
    sup-norm residual of the reconstruction).
    """
    basis = tuple(basis)
    space = basis[0].space
    B = _stack(basis)
    wxy = _pair_weights(space)
    t = np.asarray(target, dtype=complex).ravel()
    G = (B.conj() * wxy) @ B.T
    rhs = (B.conj() * wxy) @ t
    coeffs = np.linalg.solve(G, rhs)
    resid = float(np.abs(t - coeffs @ B).max())
    return coeffs, resid


def span_membership_tolerance(target: Kernel) -> float:
    """Default numeric budget for 'lies in the span': 1e-9*(1+sup|target|)."""
    return 1e-9 * (1.0 + sup_norm(target))


def check_rank(basis):
    """Reject linearly dependent bases, naming the dependent members."""
    basis = tuple(basis)
    space = basis[0].space
    wxy = _pair_weights(space)
    ortho = []
    dependent = []
    for idx, K in enumerate(basis):
        v = K.entries.ravel().astype(complex)
        scale = float(np.sqrt(np.real(np.dot(v.conj() * wxy, v))))
        for q in ortho:
            v = v - np.dot(q.conj() * wxy, v) * q
        norm = float(np.sqrt(np.real(np.dot(v.conj() * wxy, v))))
        if norm <= 1e-10 * max(1.0, scale):
            dependent.append(idx)
        else:
            ortho.append(v / norm)
    if dependent:
        raise RankDeficiencyError(dependent)


def _is_indicator_partition(basis):
    total = np.zeros_like(basis[0].entries, dtype=float)
    for K in basis:
        e = K.entries
        if (e.imag != 0).any():
            return False
        r = e.real
        if not np.isin(r, (0.0, 1.0)).all():
            return False
        total += r
    return bool((total == 1.0).all())


def structure_constants(alg: AlgebraBasis):
    """Expand every basis product A_i o A_j in the span.

    Returns (tensor, residual): tensor[i, j, k] is the coefficient of
    A_k, residual the worst sup-norm reconstruction error. For an
    adjacency-indicator basis the coefficients are evaluated exactly on
    the partition cells and equal the intersection numbers.
    """
    basis = alg.basis
    space = alg.space
    L = len(basis)
    w = space.weights
    check_rank(basis)
    tensor = np.zeros((L, L, L), dtype=complex)
    residual = 0.0

    if _is_indicator_partition(basis):
        lab = np.zeros(basis[0].entries.shape, dtype=np.int64)
        for k, K in enumerate(basis):
            lab[K.entries.real == 1.0] = k
        cell = [np.unravel_index(int(np.argmax(K.entries.real == 1.0)),
                                 lab.shape) for K in basis]
        for i in range(L):
            Ai = basis[i].entries.real
            for j in range(L):
                P = (Ai * w) @ basis[j].entries.real
                coeffs = np.array([P[cell[k]] for k in range(L)])
                tensor[i, j, :] = coeffs
                residual = max(residual, float(np.abs(P - coeffs[lab]).max()))
        return tensor, residual

    B = _stack(basis)
    wxy = _pair_weights(space)
    G = (B.conj() * wxy) @ B.T
    for i in range(L):
        for j in range(L):
            P = matmul(basis[i], basis[j]).entries.ravel()
            rhs = (B.conj() * wxy) @ P
            coeffs = np.linalg.solve(G, rhs)
            tensor[i, j, :] = coeffs
            residual = max(residual, float(np.abs(P - coeffs @ B).max()))
    return tensor, residual


def validate_closure(alg: AlgebraBasis) -> float:
    """Check the Hadamard/conjugate closure and unitality invariants.

    Returns the worst span residual over all Hadamard products,
    conjugates and (when contains_J) the constant-one kernel; raises if
    it exceeds closure_tolerance plus the default numeric budget.
    """
    basis = alg.basis
    worst = 0.0
    targets = []
    for i, A in enumerate(basis):
        targets.append(np.conj(A.entries))
        for B in basis[i:]:
            targets.append(A.entries * B.entries)
    if alg.contains_J:
        targets.append(ones_kernel(alg.space).entries)
    for t in targets:
        _, resid = span_expand(basis, t)
        worst = max(worst, resid)
        budget = alg.closure_tolerance + 1e-9 * (1.0 + float(np.abs(t).max()))
        if resid > budget:
            raise ValueError(
                f"basis is not Hadamard/conjugate closed: residual "
                f"{resid:.3e} exceeds {budget:.3e}")
    return worst


@dataclass
class BmaReport:
    """Numerical evidence for the Bose-Mesner axioms.

    bma1a_residuals[N, p] is the worse of the left/right composition
    residuals of identity-family member N against probe p. The probe set
    is a policy, recorded in probe_policy.
    """

    bma1a_residuals: np.ndarray
    bma1b_deviation: float
    bma2_residual: float
    bma3_ok: bool
    commutative_residual: float
    symmetric_ok: bool
    tolerance: float
    probe_policy: str
    identity_report: IdentityReport
    bma3_residual: float
    symmetric_residual: float

    def passed(self) -> bool:
        return (self.identity_report.all_final_below
                and self.bma1b_deviation <= self.tolerance
                and self.bma2_residual <= self.tolerance
                and self.bma3_ok)

    def as_dict(self) -> dict:
        return {
            "bma1a_final_residual": float(self.bma1a_residuals[-1].max()),
            "bma1b_deviation": self.bma1b_deviation,
            "bma2_residual": self.bma2_residual,
            "bma3_ok": self.bma3_ok,
            "bma3_residual": self.bma3_residual,
            "commutative_residual": self.commutative_residual,
            "symmetric_ok": self.symmetric_ok,
            "symmetric_residual": self.symmetric_residual,
            "tolerance": self.tolerance,
            "probe_policy": self.probe_policy,
        }


def verify_bma(alg: AlgebraBasis, identity_family, probes, tolerance: float,
               probe_policy: str = "caller-supplied") -> BmaReport:
    """Run all Bose-Mesner checks for one basis.

    identity_family members must lie in the span (within tolerance plus
    the numeric budget), otherwise the call is rejected. BMA4/BMA5 are
    reported as residuals; they do not gate passed().
    """
    basis = alg.basis
    identity_family = list(identity_family)
    probes = list(probes)
    for I_N in identity_family:
        _, resid = span_expand(basis, I_N.entries)
        if resid > tolerance + span_membership_tolerance(I_N):
            raise ValueError(
                f"identity family member lies outside the span "
                f"(residual {resid:.3e})")

    ident = check_approximate_identity(identity_family, probes, tolerance)
    bma1a = np.maximum(ident.left_residuals, ident.right_residuals)

    J = ones_kernel(alg.space)
    bma1b = 0.0
    for A in basis:
        C = matmul(A, J).entries
        bma1b = max(bma1b, float(np.abs(C - C[0, 0]).max()))

    _, bma2 = structure_constants(alg)

    bma3_res = 0.0
    for A in basis:
        _, resid = span_expand(basis, transpose(A).entries)
        bma3_res = max(bma3_res, resid)
    bma3_ok = bma3_res <= tolerance + max(
        span_membership_tolerance(A) for A in basis)

    comm = 0.0
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            AB = matmul(basis[i], basis[j]).entries
            BA = matmul(basis[j], basis[i]).entries
            comm = max(comm, float(np.abs(AB - BA).max()))

    sym_res = max(float(np.abs(A.entries - A.entries.T).max()) for A in basis)

    return BmaReport(
        bma1a_residuals=bma1a, bma1b_deviation=bma1b, bma2_residual=bma2,
        bma3_ok=bool(bma3_ok), commutative_residual=comm,
        symmetric_ok=bool(sym_res <= tolerance), tolerance=float(tolerance),
        probe_policy=probe_policy, identity_report=ident,
        bma3_residual=bma3_res, symmetric_residual=sym_res)


def default_probes(alg: AlgebraBasis, count: int = 3, seed: int = 0):
    """Basis members plus seeded random kernels; returns (probes, policy)."""
    rng = np.random.default_rng(seed)
    n = alg.space.node_count
    probes = list(alg.basis)
    for _ in range(count):
        probes.append(Kernel(rng.uniform(-1, 1, (n, n))
                             + 1j * rng.uniform(-1, 1, (n, n)), alg.space))
    return probes, f"basis members + {count} seeded random kernels (seed={seed})"


# ---------------------------------------------------------------------------
# basis bundle format: a v1 header followed by one kernel dump per member


def write_basis(alg: AlgebraBasis, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{BASIS_HEADER} count={alg.size} "
                 f"contains_j={'true' if alg.contains_J else 'false'} "
                 f"closure_tolerance={alg.closure_tolerance!r}\n")
        n = alg.space.node_count
        for K in alg.basis:
            fh.write(f"{KERNEL_HEADER} n={n}\n")
            for row in K.entries:
                fields = []
                for v in row:
                    fields.append(repr(float(v.real)))
                    fields.append(repr(float(v.imag)))
                fh.write(",".join(fields) + "\n")


def read_basis(path, space) -> AlgebraBasis:
    """Read a basis bundle over an existing space (n must match)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(BASIS_HEADER):
        raise ParseError(f"expected header {BASIS_HEADER!r}", line=1)
    meta = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
    try:
        count = int(meta["count"])
    except (KeyError, ValueError):
        raise ParseError("basis header is missing count=<n>", line=1)
    contains_j = meta.get("contains_j", "true") == "true"
    closure_tol = float(meta.get("closure_tolerance", "0.0"))
    n = space.node_count
    basis = []
    pos = 1
    for _ in range(count):
        if pos >= len(lines) or not lines[pos].startswith(KERNEL_HEADER):
            raise ParseError("expected a kernel dump header", line=pos + 1)
        rows = []
        pos += 1
        while len(rows) < n:
            if pos >= len(lines):
                raise ParseError("kernel dump ended early", line=pos)
            parts = lines[pos].strip().split(",")
            if len(parts) != 2 * n:
                raise ParseError(
                    f"expected {2 * n} fields, got {len(parts)}", line=pos + 1)
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise ParseError("malformed float field", line=pos + 1)
            rows.append([complex(vals[2 * k], vals[2 * k + 1])
                         for k in range(n)])
            pos += 1
        basis.append(Kernel(np.asarray(rows), space))
    return AlgebraBasis(basis=tuple(basis), contains_J=contains_j,
                        closure_tolerance=closure_tol)


# ---------------------------------------------------------------------------
# approximate identities from bumps on the label space


def indicator_bump(label_space):
    """Bump supported on the identity label alone; returns (bump, nbhd)."""
    if label_space.identity_label is None:
        raise ValueError("label space has no identity label")
    bump = np.zeros(label_space.size)
    bump[label_space.identity_label] = 1.0
    return bump, (label_space.identity_label,)


def hat_bump(label_space, width: float, period=None):
    """Triangular bump on bin-midpoint distance; returns (bump, nbhd).

    Needs bin intervals on the label space. Distance of a label is the
    absolute midpoint of its interval, optionally folded to a period
    (2*pi for circular label values).
    """
    if label_space.identity_label is None:
        raise ValueError("label space has no identity label")
    if label_space.bin_meta is None:
        raise ValueError("hat bump needs bin intervals on the label space")
    if width <= 0:
        raise ValueError("width must be positive")
    L = label_space.size
    bump = np.zeros(L)
    for i in range(L):
        meta = label_space.bin_meta[i]
        if meta is None:
            continue
        mid = 0.5 * (meta[0] + meta[1])
        d = abs(mid)
        if period is not None:
            d = d % period
            d = min(d, period - d)
        bump[i] = max(0.0, 1.0 - d / width)
    bump[label_space.identity_label] = 1.0
    neighborhood = tuple(np.nonzero(bump > 0)[0].tolist())
    return bump, neighborhood


def build_approximate_identity(scheme: Scheme, neighborhood, bump) -> Kernel:
    """Approximate composition identity from a bump at the identity label.

    With h the pullback of the bump through the relation, returns
    total_mass / (2 * integral of h against the product measure) times
    (h + h transposed). Every row must integrate to 1 within 1e-10, which
    holds exactly when row-fiber masses are constant; a violation is
    raised, not returned.
    """
    ls = scheme.label_space
    if ls.identity_label is None:
        raise ValueError("scheme has no identity label")
    i0 = ls.identity_label
    nbhd = set(int(i) for i in neighborhood)
    if i0 not in nbhd:
        raise ValueError("neighborhood must contain the identity label")
    b = np.asarray(bump, dtype=float)
    if b.shape != (ls.size,):
        raise ValueError(f"bump must have one weight per label "
                         f"({ls.size}), got shape {b.shape}")
    if not np.isfinite(b).all() or (b < 0).any():
        raise ValueError("bump weights must be finite and non-negative")
    if b[i0] != 1.0:
        raise ValueError(f"bump must equal 1 at the identity label, "
                         f"got {b[i0]!r}")
    support = set(np.nonzero(b > 0)[0].tolist())
    if not support <= nbhd:
        raise ValueError(
            f"bump support {sorted(support - nbhd)} leaks outside the "
            f"neighborhood")
    H = b[scheme.relation]
    S = float(product_integrate(H, scheme.space).real)
    if S <= 0.0:
        raise ValueError("bump integrates to zero against the product measure")
    entries = (scheme.space.total_mass / (2.0 * S)) * (H + H.T)
    rows = entries @ scheme.space.weights
    worst = float(np.abs(rows - 1.0).max())
    if worst > 1e-10:
        raise ValueError(
            f"rows fail to integrate to 1 (worst error {worst:.3e}); "
            f"row-fiber masses are not constant at this mesh")
    return Kernel(entries, scheme.space)
