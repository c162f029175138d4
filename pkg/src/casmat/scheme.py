"""Relation maps on node pairs and the association-scheme axiom checks.

A Scheme is a MeasureSpace together with a finite label space and a
surjective relation matrix: the discretized quotient map from node pairs
onto labels. verify_cas measures, against a caller-supplied generating
family of label sets, how far the scheme is from satisfying the axioms:

  CAS1  the identity label's fiber is exactly the diagonal;
  CAS2  intersection numbers are constant on each fiber;
  CAS3  transposing a fiber lands on the fiber of an involution partner;
  CAS4  intersection numbers are symmetric in the two label sets
        (commutativity, reported as a deviation);
  CAS5  the involution is the identity (symmetry, structural).

Structural failures (CAS1/CAS3) are reported with witnesses rather than
raised, so corrupted inputs can be diagnosed.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParseError
from .measure import MeasureSpace, make_quadrature

SCHEME_HEADER = "#casmat-scheme v1"


class SurjectivityError(ValueError):
    """The relation does not cover every label."""

    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"labels with empty fibers: {self.missing}")


@dataclass(frozen=True)
class LabelSpace:
    """Finite label set with involution, optional identity and bin intervals.

    Labels are the integers 0..size-1. bin_meta, when present, holds one
    half-open interval (a, b) or None per label; intervals must be
    pairwise disjoint.
    """

    involution: np.ndarray
    identity_label: Optional[int] = None
    bin_meta: Optional[tuple] = None

    def __post_init__(self):
        inv = np.asarray(self.involution, dtype=np.int64)
        if inv.ndim != 1 or inv.size == 0:
            raise ValueError("involution must be a non-empty 1-d index table")
        L = inv.size
        if ((inv < 0) | (inv >= L)).any():
            raise ValueError("involution entries must be valid label ids")
        if not np.array_equal(inv[inv], np.arange(L)):
            raise ValueError("involution table must be an involutive bijection")
        inv = inv.copy()
        inv.setflags(write=False)
        object.__setattr__(self, "involution", inv)
        if self.identity_label is not None:
            i0 = int(self.identity_label)
            if not 0 <= i0 < L:
                raise ValueError(f"identity label {i0} out of range")
            if inv[i0] != i0:
                raise ValueError("involution must fix the identity label")
            object.__setattr__(self, "identity_label", i0)
        if self.bin_meta is not None:
            meta = tuple(None if m is None else (float(m[0]), float(m[1]))
                         for m in self.bin_meta)
            if len(meta) != L:
                raise ValueError("bin_meta must carry one entry per label")
            present = sorted(m for m in meta if m is not None)
            for (a, b) in present:
                if not a < b:
                    raise ValueError(f"bin interval [{a}, {b}) is empty")
            for (_, b1), (a2, _) in zip(present, present[1:]):
                if b1 > a2:
                    raise ValueError("bin intervals must be pairwise disjoint")
            object.__setattr__(self, "bin_meta", meta)

    @property
    def size(self) -> int:
        return int(self.involution.size)

    @property
    def labels(self) -> range:
        return range(self.size)

    def is_symmetric(self) -> bool:
        """CAS5: every label is its own involution partner."""
        return bool(np.array_equal(self.involution, np.arange(self.size)))


class Scheme:
    """MeasureSpace + LabelSpace + surjective relation matrix.

    Construction enforces shape, label range and surjectivity. The deeper
    axioms are measured by verify_cas, never assumed, so invalid relation
    tables (for negative controls or corrupted files) stay representable.

    borel_bins optionally stores a generating family of label sets used as
    the default CAS2 checking family for continuum-derived schemes.
    """

    __slots__ = ("space", "label_space", "relation", "borel_bins",
                 "fiber_counts")

    def __init__(self, space: MeasureSpace, label_space: LabelSpace,
                 relation, borel_bins=None):
        rel = np.asarray(relation)
        n = space.node_count
        if rel.shape != (n, n):
            raise ValueError(f"relation has shape {rel.shape}, expected ({n}, {n})")
        if not np.issubdtype(rel.dtype, np.integer):
            raise ValueError("relation entries must be integer label ids")
        L = label_space.size
        if rel.size and (rel.min() < 0 or rel.max() >= L):
            raise ValueError("relation entries must lie in 0..label_count-1")
        counts = np.bincount(rel.ravel(), minlength=L)
        missing = np.nonzero(counts == 0)[0]
        if missing.size:
            raise SurjectivityError(missing.tolist())
        rel = rel.astype(np.int32)
        rel.setflags(write=False)
        self.space = space
        self.label_space = label_space
        self.relation = rel
        self.fiber_counts = counts
        if borel_bins is not None:
            borel_bins = tuple(tuple(int(i) for i in W) for W in borel_bins)
            for W in borel_bins:
                for i in W:
                    if not 0 <= i < L:
                        raise ValueError(f"borel bin label {i} out of range")
        self.borel_bins = borel_bins

    @property
    def label_count(self) -> int:
        return self.label_space.size

    def __repr__(self):
        return (f"Scheme(nodes={self.space.node_count}, "
                f"labels={self.label_count})")


def fiber(scheme: Scheme, i) -> tuple:
    """All (x, y) pairs with relation[x, y] == i, as (xs, ys) index arrays."""
    i = int(i)
    if not 0 <= i < scheme.label_count:
        raise ValueError(f"unknown label {i}")
    xs, ys = np.nonzero(scheme.relation == i)
    if xs.size == 0:
        raise SurjectivityError([i])
    return xs, ys


def _membership(scheme: Scheme, W) -> np.ndarray:
    mask = np.zeros(scheme.label_count, dtype=bool)
    for i in W:
        i = int(i)
        if not 0 <= i < scheme.label_count:
            raise ValueError(f"unknown label {i} in label set")
        mask[i] = True
    return mask


def _sample_fiber(scheme: Scheme, k, max_pairs, rng):
    """Fiber pairs, optionally capped to a seeded swap-closed sample."""
    xs, zs = fiber(scheme, k)
    if max_pairs is None or xs.size <= max_pairs:
        return xs, zs, False
    idx = rng.choice(xs.size, size=max_pairs, replace=False)
    sx, sz = xs[idx], zs[idx]
    if scheme.label_space.involution[k] == k:
        # swap-closure keeps commutativity comparisons exact on
        # symmetric schemes
        n = scheme.space.node_count
        keys = np.concatenate([sx.astype(np.int64) * n + sz,
                               sz.astype(np.int64) * n + sx])
        keys = np.unique(keys)
        sx, sz = keys // n, keys % n
        inside = scheme.relation[sx, sz] == k
        sx, sz = sx[inside], sz[inside]
    return sx, sz, True


def _pair_value(scheme, mask_w, mask_wp, x, z):
    sel = mask_w[scheme.relation[x, :]] & mask_wp[scheme.relation[:, z]]
    return scheme.space.weights[sel].sum()


def intersection_number(scheme: Scheme, W, W_prime, k,
                        max_pairs=None, seed=0):
    """Mean and spread of the CAS2 quantity over the fiber of k.

    For each (x, z) in the fiber computes the measure of intermediate
    nodes y with relation[x, y] in W and relation[y, z] in W_prime, then
    returns (mean, max - min). With max_pairs set, a seeded swap-closed
    sample of fiber pairs is used instead of the full fiber.
    """
    mask_w = _membership(scheme, W)
    mask_wp = _membership(scheme, W_prime)
    rng = np.random.default_rng(seed)
    xs, zs, _ = _sample_fiber(scheme, k, max_pairs, rng)
    vals = np.array([_pair_value(scheme, mask_w, mask_wp, x, z)
                     for x, z in zip(xs, zs)])
    return float(vals.mean()), float(vals.max() - vals.min())


@dataclass
class CasReport:
    """Axiom-check evidence for one scheme against one Borel family.

    Deviations are max - min over (sampled) fiber pairs, in measure
    units. commutative is defined as cas4_max_deviation <= tolerance.
    """

    cas1_ok: bool
    cas3_ok: bool
    cas2_max_deviation: float
    cas4_max_deviation: float
    symmetric: bool
    commutative: bool
    borel_family_descriptor: str
    involution_identity_max_deviation: float
    row_valency_max_deviation: float
    pushforward_max_deviation: float
    tolerance: float
    diagonal_slack: int
    labels_checked: int
    sampled: bool
    witnesses: dict = field(default_factory=dict)

    def passed(self) -> bool:
        """True when the structural axioms hold and every deviation is
        within tolerance. CAS4/CAS5 are descriptive, not required."""
        return (self.cas1_ok and self.cas3_ok
                and self.cas2_max_deviation <= self.tolerance
                and self.involution_identity_max_deviation <= self.tolerance
                and self.row_valency_max_deviation <= self.tolerance
                and self.pushforward_max_deviation <= self.tolerance)

    def as_dict(self) -> dict:
        return {
            "cas1_ok": self.cas1_ok,
            "cas3_ok": self.cas3_ok,
            "cas2_max_deviation": self.cas2_max_deviation,
            "cas4_max_deviation": self.cas4_max_deviation,
            "symmetric": self.symmetric,
            "commutative": self.commutative,
            "borel_family_descriptor": self.borel_family_descriptor,
            "involution_identity_max_deviation":
                self.involution_identity_max_deviation,
            "row_valency_max_deviation": self.row_valency_max_deviation,
            "pushforward_max_deviation": self.pushforward_max_deviation,
            "tolerance": self.tolerance,
            "diagonal_slack": self.diagonal_slack,
            "labels_checked": self.labels_checked,
            "sampled": self.sampled,
            "witnesses": self.witnesses,
        }


def resolve_borel_family(scheme: Scheme, borel_family):
    """Normalize a family spec to a list of label tuples plus a descriptor."""
    L = scheme.label_count
    if borel_family is None or borel_family == "singletons":
        return [(i,) for i in range(L)], f"singletons ({L} sets)"
    if borel_family == "pairs":
        sets = [(i,) for i in range(L)]
        sets += [(i, j) for i in range(L) for j in range(i + 1, L)]
        return sets, f"singletons and pairs ({len(sets)} sets)"
    if borel_family == "bins":
        if scheme.borel_bins is None:
            raise ValueError("scheme carries no stored bin family")
        return [tuple(W) for W in scheme.borel_bins], \
            f"stored bins ({len(scheme.borel_bins)} sets)"
    sets = [tuple(int(i) for i in W) for W in borel_family]
    if not sets:
        raise ValueError("borel family must be non-empty")
    return sets, f"caller-supplied ({len(sets)} sets)"


def verify_cas(scheme: Scheme, borel_family=None, tolerance: float = 0.0,
               diagonal_slack: int = 0, max_pairs_per_fiber=None,
               fiber_label_sample=None, seed: int = 0) -> CasReport:
    """Measure the association-scheme axioms over a generating family.

    borel_family: None/"singletons" (default), "pairs", "bins" (the
    scheme's stored family), or an explicit list of label sets.
    max_pairs_per_fiber caps the per-fiber pair count with a seeded
    swap-closed sample; fiber_label_sample caps how many involution
    orbits of labels are checked. Memory scales with label_count**2.

    In addition to CAS1..CAS5 the report carries the fiber-transpose
    identity deviation (p_{W,W'}^k vs p_{W'^T,W^T}^{k^T}) and the
    product-measure pushforward identity, including row-valency constancy.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    rel = scheme.relation
    w = scheme.space.weights
    n = scheme.space.node_count
    L = scheme.label_count
    inv = scheme.label_space.involution
    i0 = scheme.label_space.identity_label
    rng = np.random.default_rng(seed)
    witnesses: dict = {}

    # CAS1: identity fiber vs diagonal
    if i0 is None:
        cas1_ok = False
        witnesses["cas1"] = [{"detail": "no identity label declared"}]
    else:
        diag = rel.diagonal()
        bad_diag = np.nonzero(diag != i0)[0]
        off = rel == i0
        off[np.arange(n), np.arange(n)] = False
        off_x, off_y = np.nonzero(off)
        cas1_ok = bad_diag.size == 0 and off_x.size <= diagonal_slack
        if not cas1_ok:
            items = [{"pair": (int(x), int(x)), "label": int(diag[x])}
                     for x in bad_diag[:5]]
            items += [{"pair": (int(a), int(b)), "label": int(i0)}
                      for a, b in zip(off_x[:5], off_y[:5])]
            witnesses["cas1"] = items

    # CAS3: relation transpose matches the involution table
    mism_x, mism_y = np.nonzero(inv[rel] != rel.T)
    cas3_ok = mism_x.size == 0
    if not cas3_ok:
        witnesses["cas3"] = [
            {"pair": (int(a), int(b)),
             "label": int(rel[a, b]), "transposed_label": int(rel[b, a])}
            for a, b in zip(mism_x[:5], mism_y[:5])]

    symmetric = scheme.label_space.is_symmetric()

    family, descriptor = resolve_borel_family(scheme, borel_family)
    singleton = (len(family) == L
                 and all(family[i] == (i,) for i in range(L)))
    F = len(family)
    if F * F > 50_000_000:
        raise ValueError(
            f"borel family has {F} sets; the {F}x{F} deviation tables "
            f"would not fit in memory")
    if not singleton:
        M = np.zeros((F, L))
        MT = np.zeros((F, L))
        for f, W in enumerate(family):
            for i in W:
                M[f, i] = 1.0
                MT[f, inv[i]] = 1.0

    # choose which involution orbits of labels to check
    orbits = []
    seen = set()
    for k in range(L):
        if k in seen:
            continue
        kt = int(inv[k])
        seen.update({k, kt})
        orbits.append((k, kt))
    if fiber_label_sample is not None and len(orbits) > fiber_label_sample:
        keep = rng.choice(len(orbits), size=fiber_label_sample, replace=False)
        orbits = [orbits[i] for i in sorted(keep)]

    sampled = False
    cas2_max = 0.0
    cas2_arg = None
    cas4_max = 0.0
    inv_id_max = 0.0
    labels_checked = 0

    def fiber_stats(k):
        nonlocal sampled
        xs, zs, was_sampled = _sample_fiber(scheme, k, max_pairs_per_fiber, rng)
        sampled = sampled or was_sampled
        raw_sum = np.zeros((L, L))
        lo = np.full((F, F), np.inf)
        hi = np.full((F, F), -np.inf)
        for x, z in zip(xs, zs):
            joint = rel[x, :].astype(np.int64) * L + rel[:, z]
            h = np.bincount(joint, weights=w, minlength=L * L).reshape(L, L)
            raw_sum += h
            v = h if singleton else M @ h @ M.T
            np.minimum(lo, v, out=lo)
            np.maximum(hi, v, out=hi)
        raw_mean = raw_sum / xs.size
        return (xs, zs), raw_mean, lo, hi

    def transposed_sample_stats(xs, zs):
        # fiber(k^T) sampled as the transpose of fiber(k)'s sample keeps
        # the transpose identity exact under sampling
        raw_sum = np.zeros((L, L))
        lo = np.full((F, F), np.inf)
        hi = np.full((F, F), -np.inf)
        for x, z in zip(zs, xs):
            joint = rel[x, :].astype(np.int64) * L + rel[:, z]
            h = np.bincount(joint, weights=w, minlength=L * L).reshape(L, L)
            raw_sum += h
            v = h if singleton else M @ h @ M.T
            np.minimum(lo, v, out=lo)
            np.maximum(hi, v, out=hi)
        return raw_sum / len(xs), lo, hi

    for k, kt in orbits:
        pairs_k, mean_k, lo_k, hi_k = fiber_stats(k)
        per_orbit = [(k, mean_k, lo_k, hi_k)]
        if kt != k:
            if cas3_ok:
                mean_kt, lo_kt, hi_kt = transposed_sample_stats(*pairs_k)
            else:
                # invalid schemes: the transposed sample may leave the
                # fiber, fall back to an independent sample
                _, mean_kt, lo_kt, hi_kt = fiber_stats(kt)
            per_orbit.append((kt, mean_kt, lo_kt, hi_kt))
        for lab, mean, lo, hi in per_orbit:
            labels_checked += 1
            dev = hi - lo
            dmax = float(dev.max())
            if dmax > cas2_max:
                cas2_max = dmax
                f1, f2 = np.unravel_index(int(np.argmax(dev)), dev.shape)
                cas2_arg = (lab, family[f1], family[f2],
                            float(lo[f1, f2]), float(hi[f1, f2]))
            values = mean if singleton else M @ mean @ M.T
            cas4_max = max(cas4_max, float(np.abs(values - values.T).max()))
        # transpose identity: p_{W1,W2}^k vs p_{W2^T,W1^T}^{k^T}
        mean_for_kt = per_orbit[-1][1] if kt != k else mean_k
        if singleton:
            vt = mean_for_kt[np.ix_(inv, inv)]
        else:
            vt = MT @ mean_for_kt @ MT.T
        vk = mean_k if singleton else M @ mean_k @ M.T
        inv_id_max = max(inv_id_max, float(np.abs(vk - vt.T).max()))

    if cas2_arg is not None and cas2_max > tolerance:
        lab, Wset, Wpset, vmin, vmax = cas2_arg
        witnesses["cas2"] = [{
            "fiber_label": int(lab), "W": list(Wset), "W_prime": list(Wpset),
            "min_value": vmin, "max_value": vmax, "deviation": cas2_max}]

    # pushforward identity and row-valency constancy
    rowmass = np.empty((n, L))
    for x in range(n):
        rowmass[x] = np.bincount(rel[x], weights=w, minlength=L)
    row_valency_max = float((rowmass.max(axis=0) - rowmass.min(axis=0)).max())
    fibermass = w @ rowmass
    push_dev = np.abs(rowmass * scheme.space.total_mass - fibermass)
    pushforward_max = float(push_dev.max())
    if row_valency_max > tolerance:
        i = int(np.argmax(rowmass.max(axis=0) - rowmass.min(axis=0)))
        witnesses["row_valency"] = [{
            "label": i,
            "min_row_mass": float(rowmass[:, i].min()),
            "max_row_mass": float(rowmass[:, i].max())}]

    commutative = cas4_max <= tolerance
    return CasReport(
        cas1_ok=bool(cas1_ok), cas3_ok=bool(cas3_ok),
        cas2_max_deviation=cas2_max, cas4_max_deviation=cas4_max,
        symmetric=symmetric, commutative=commutative,
        borel_family_descriptor=descriptor,
        involution_identity_max_deviation=inv_id_max,
        row_valency_max_deviation=row_valency_max,
        pushforward_max_deviation=pushforward_max,
        tolerance=float(tolerance), diagonal_slack=int(diagonal_slack),
        labels_checked=labels_checked, sampled=sampled,
        witnesses=witnesses)


# ---------------------------------------------------------------------------
# scheme file format


def write_scheme(scheme: Scheme, path, recipe: Optional[str] = None) -> None:
    """Write the `#casmat-scheme v1` text format (bit-exact round trip)."""
    ls = scheme.label_space
    with open(path, "w") as fh:
        fh.write(SCHEME_HEADER + "\n")
        if recipe:
            fh.write(f"recipe {recipe}\n")
        fh.write(f"nodes {scheme.space.node_count}\n")
        fh.write("weights\n")
        ws = [repr(float(v)) for v in scheme.space.weights]
        for start in range(0, len(ws), 6):
            fh.write(" ".join(ws[start:start + 6]) + "\n")
        fh.write(f"labels {ls.size}\n")
        for i in range(ls.size):
            line = f"{i} {int(ls.involution[i])}"
            if ls.bin_meta is not None and ls.bin_meta[i] is not None:
                a, b = ls.bin_meta[i]
                line += f" {repr(a)} {repr(b)}"
            fh.write(line + "\n")
        if ls.identity_label is None:
            fh.write("identity none\n")
        else:
            fh.write(f"identity {ls.identity_label}\n")
        if scheme.borel_bins is not None:
            fh.write(f"binfamily {len(scheme.borel_bins)}\n")
            for W in scheme.borel_bins:
                fh.write(" ".join(str(i) for i in W) + "\n")
        fh.write("relation\n")
        for row in scheme.relation:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


class _LineReader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next_content(self):
        while self.pos < len(self.lines):
            lineno = self.pos + 1
            text = self.lines[self.pos].strip()
            self.pos += 1
            if text:
                return lineno, text
        return None, None


def read_scheme(path) -> Scheme:
    """Parse a `#casmat-scheme v1` file; errors carry the line number."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != SCHEME_HEADER:
        raise ParseError(f"expected header {SCHEME_HEADER!r}", line=1)
    reader = _LineReader(lines[1:])
    reader_offset = 1

    def fail(msg, lineno):
        raise ParseError(msg, line=None if lineno is None
                         else lineno + reader_offset)

    lineno, text = reader.next_content()
    if text is not None and text.startswith("recipe"):
        lineno, text = reader.next_content()
    if text is None or not text.startswith("nodes "):
        fail("expected 'nodes <count>'", lineno)
    try:
        n = int(text.split()[1])
    except (IndexError, ValueError):
        fail("malformed node count", lineno)
    lineno, text = reader.next_content()
    if text != "weights":
        fail("expected 'weights' section", lineno)
    weights = []
    while len(weights) < n:
        lineno, text = reader.next_content()
        if text is None:
            fail(f"expected {n} weights, got {len(weights)}", lineno)
        try:
            weights.extend(float(t) for t in text.split())
        except ValueError:
            fail(f"malformed weight in {text!r}", lineno)
    if len(weights) != n:
        fail(f"expected exactly {n} weights, got {len(weights)}", lineno)

    lineno, text = reader.next_content()
    if text is None or not text.startswith("labels "):
        fail("expected 'labels <count>'", lineno)
    try:
        L = int(text.split()[1])
    except (IndexError, ValueError):
        fail("malformed label count", lineno)
    involution = np.zeros(L, dtype=np.int64)
    bin_meta: list = [None] * L
    any_bins = False
    for _ in range(L):
        lineno, text = reader.next_content()
        if text is None:
            fail("label table ended early", lineno)
        parts = text.split()
        if len(parts) not in (2, 4):
            fail(f"label record needs 2 or 4 fields, got {len(parts)}", lineno)
        try:
            lid, linv = int(parts[0]), int(parts[1])
        except ValueError:
            fail("malformed label ids", lineno)
        if not 0 <= lid < L:
            fail(f"label id {lid} out of range", lineno)
        involution[lid] = linv
        if len(parts) == 4:
            try:
                bin_meta[lid] = (float(parts[2]), float(parts[3]))
            except ValueError:
                fail("malformed bin interval", lineno)
            any_bins = True

    lineno, text = reader.next_content()
    if text is None or not text.startswith("identity"):
        fail("expected 'identity <id|none>'", lineno)
    token = text.split()[1] if len(text.split()) > 1 else ""
    identity = None
    if token != "none":
        try:
            identity = int(token)
        except ValueError:
            fail("malformed identity label", lineno)

    lineno, text = reader.next_content()
    borel_bins = None
    if text is not None and text.startswith("binfamily"):
        try:
            n_sets = int(text.split()[1])
        except (IndexError, ValueError):
            fail("malformed binfamily count", lineno)
        borel_bins = []
        for _ in range(n_sets):
            lineno, text = reader.next_content()
            if text is None:
                fail("binfamily ended early", lineno)
            try:
                borel_bins.append(tuple(int(t) for t in text.split()))
            except ValueError:
                fail("malformed binfamily record", lineno)
        lineno, text = reader.next_content()
    if text != "relation":
        fail("expected 'relation' section", lineno)
    rel = np.zeros((n, n), dtype=np.int64)
    for r in range(n):
        lineno, text = reader.next_content()
        if text is None:
            fail(f"relation matrix ended early at row {r}", lineno)
        parts = text.split()
        if len(parts) != n:
            fail(f"relation row {r} has {len(parts)} entries, expected {n}",
                 lineno)
        try:
            rel[r] = [int(t) for t in parts]
        except ValueError:
            fail(f"malformed relation entry in row {r}", lineno)

    try:
        space = make_quadrature(weights)
        label_space = LabelSpace(involution=involution, identity_label=identity,
                                 bin_meta=tuple(bin_meta) if any_bins else None)
        return Scheme(space, label_space, rel, borel_bins=borel_bins)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
