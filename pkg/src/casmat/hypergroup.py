"""Hypergroup structure on the label space of a scheme.

From a verified scheme one gets a Markov kernel (normalized row fibers),
an invariant label measure (row-fiber masses, which makes the transport
identity exact in the finite case), and a convolution of point masses via
pushforward through the relation. verify_strong_cas measures the
identities tying the convolution back to kernel composition.
"""

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel, matmul
from .scheme import Scheme, fiber, verify_cas


class RepresentativeDependenceError(ValueError):
    """Point-mass convolution depends on the fiber representative."""


@dataclass(frozen=True)
class HypergroupData:
    """Scheme plus row-fiber kernel data and invariant label weights.

    haar_weights[i] is the (constant) row mass of label i; under counting
    measure these are the valencies. kappa(x, i) is the normalized
    restriction of the node measure to the i-fiber row of x.
    """

    scheme: Scheme
    haar_weights: np.ndarray
    row_mass_spread: float

    @property
    def label_count(self) -> int:
        return self.scheme.label_count

    @property
    def involution(self) -> np.ndarray:
        return self.scheme.label_space.involution

    def kappa(self, x: int, i: int) -> np.ndarray:
        """Probability vector over nodes of the Markov kernel at (x, i)."""
        mask = self.scheme.relation[x] == i
        vec = np.zeros(self.scheme.space.node_count)
        vec[mask] = self.scheme.space.weights[mask] / self.haar_weights[i]
        return vec


def kernel_of_scheme(scheme: Scheme, tolerance=None) -> HypergroupData:
    """Build the Markov kernel and invariant weights of a scheme.

    Rejects schemes with an empty row fiber (the kernel would be
    undefined at that (x, i)) and schemes whose row-fiber masses vary
    across x beyond tolerance (no invariant measure). tolerance defaults
    to 1e-12 times the total mass.
    """
    n = scheme.space.node_count
    L = scheme.label_count
    w = scheme.space.weights
    if tolerance is None:
        tolerance = 1e-12 * scheme.space.total_mass
    rowmass = np.empty((n, L))
    for x in range(n):
        rowmass[x] = np.bincount(scheme.relation[x], weights=w, minlength=L)
    empty = np.nonzero(rowmass == 0)
    if empty[0].size:
        x, i = int(empty[0][0]), int(empty[1][0])
        raise ValueError(
            f"row fiber of node {x} for label {i} is empty; the Markov "
            f"kernel is undefined there")
    spread = float((rowmass.max(axis=0) - rowmass.min(axis=0)).max())
    if spread > tolerance:
        i = int(np.argmax(rowmass.max(axis=0) - rowmass.min(axis=0)))
        raise ValueError(
            f"row-fiber masses of label {i} vary across nodes by "
            f"{spread:.3e} (tolerance {tolerance:.3e}); no invariant "
            f"label measure exists at this mesh")
    haar = rowmass[0].copy()
    haar.setflags(write=False)
    return HypergroupData(scheme=scheme, haar_weights=haar,
                          row_mass_spread=spread)


def _push_through_relation(hg: HypergroupData, x: int, z: int, i: int):
    """Pushforward of kappa(z, i) under y -> relation[x, y]."""
    scheme = hg.scheme
    mask = scheme.relation[z] == i
    counts = np.bincount(scheme.relation[x][mask],
                         weights=scheme.space.weights[mask],
                         minlength=hg.label_count)
    return counts / hg.haar_weights[i]


def convolve_point_masses(hg: HypergroupData, i, i_prime, max_reps: int = 8,
                          tolerance=None):
    """Convolution of two label point masses; returns (measure, spread).

    Picks up to max_reps representative pairs (x, z) from the fiber of i
    and pushes kappa(z, i_prime) forward through y -> relation[x, y].
    spread is the worst entrywise disagreement between representatives;
    when a tolerance is given, exceeding it raises
    RepresentativeDependenceError (the scheme is not strong at this mesh).
    """
    i, ip = int(i), int(i_prime)
    xs, zs = fiber(hg.scheme, i)
    take = min(max_reps, xs.size)
    measures = np.stack([
        _push_through_relation(hg, int(xs[r]), int(zs[r]), ip)
        for r in range(take)])
    spread = float((measures.max(axis=0) - measures.min(axis=0)).max())
    if tolerance is not None and spread > tolerance:
        raise RepresentativeDependenceError(
            f"convolution delta_{i} * delta_{ip} varies by {spread:.3e} "
            f"across fiber representatives (tolerance {tolerance:.3e})")
    return measures.mean(axis=0), spread


def convolve_measure_point(hg: HypergroupData, mu: np.ndarray, i_prime):
    """Bilinear extension: convolve a label measure with a point mass."""
    out = np.zeros(hg.label_count)
    for i in range(hg.label_count):
        if mu[i] != 0:
            m, _ = convolve_point_masses(hg, i, i_prime)
            out += mu[i] * m
    return out


def convolve_functions(hg: HypergroupData, f, g):
    """Hypergroup convolution of two label functions.

    (f * g)[i] = sum_{i'} haar[i'] * (integral of f against
    delta_i * delta_{i'}) * g[i'^T].
    """
    f = np.asarray(f)
    g = np.asarray(g)
    L = hg.label_count
    if f.shape != (L,) or g.shape != (L,):
        raise ValueError(f"label functions must have shape ({L},)")
    inv = hg.involution
    out = np.zeros(L, dtype=np.result_type(f, g, float))
    for i in range(L):
        acc = 0.0
        for ip in range(L):
            m, _ = convolve_point_masses(hg, i, ip)
            acc = acc + hg.haar_weights[ip] * np.dot(m, f) * g[inv[ip]]
        out[i] = acc
    return out


@dataclass
class StrongCasReport:
    """Residual table for the strong-scheme identities.

    Keys: identity_convolution (the identity label's point mass is a
    two-sided unit), pullback_convolution (composition of pullbacks
    equals the pullback of the convolution), transport (the invariant
    measure identity), anti_automorphism, and commutativity_tv plus
    cas4_deviation when commutativity is declared.
    """

    residuals: dict
    representative_spread: float
    tolerance: float
    declared_commutative: bool
    probe_count: int

    def passed(self) -> bool:
        required = ["identity_convolution", "pullback_convolution",
                    "transport", "anti_automorphism"]
        if self.declared_commutative:
            required.append("commutativity_tv")
        return all(self.residuals[k] <= self.tolerance for k in required
                   if k in self.residuals)

    def as_dict(self) -> dict:
        out = {k: float(v) for k, v in self.residuals.items()}
        out["representative_spread"] = self.representative_spread
        out["tolerance"] = self.tolerance
        out["declared_commutative"] = self.declared_commutative
        out["probe_count"] = self.probe_count
        return out


def random_probe_pairs(label_count: int, count: int, seed: int = 0):
    """Seeded real-valued label-function pairs for verify_strong_cas."""
    rng = np.random.default_rng(seed)
    return [(rng.uniform(-1.0, 1.0, label_count),
             rng.uniform(-1.0, 1.0, label_count)) for _ in range(count)]


def verify_strong_cas(hg: HypergroupData, probes, tolerance: float,
                      test_function_count: int = 5, seed: int = 0,
                      declared_commutative: bool = False,
                      include_cas4: bool = True) -> StrongCasReport:
    """Measure the identities connecting convolution and composition.

    probes is a non-empty list of (f, g) label-function pairs. The
    transport identity is checked for each probe f against seeded random
    node test functions. The anti-automorphism identity runs over all
    label pairs. With declared_commutative, the total-variation
    commutator of the convolution gates passed() as well.
    """
    probes = list(probes)
    if not probes:
        raise ValueError("probe list must be non-empty")
    scheme = hg.scheme
    rel = scheme.relation
    w = scheme.space.weights
    n = scheme.space.node_count
    L = hg.label_count
    inv = hg.involution
    residuals = {}
    max_spread = 0.0

    # convolution table and the worst representative spread
    table = np.zeros((L, L, L))
    for i in range(L):
        for ip in range(L):
            m, spread = convolve_point_masses(hg, i, ip)
            table[i, ip] = m
            max_spread = max(max_spread, spread)

    # identity label point mass is a two-sided unit
    i0 = scheme.label_space.identity_label
    res = 0.0
    if i0 is None:
        res = np.inf
    else:
        for i in range(L):
            delta = np.zeros(L)
            delta[i] = 1.0
            res = max(res, float(np.abs(table[i0, i] - delta).max()))
            res = max(res, float(np.abs(table[i, i0] - delta).max()))
    residuals["identity_convolution"] = res

    # composition of pullbacks vs pullback of the convolution
    res = 0.0
    for f, g in probes:
        Rf = Kernel(np.asarray(f)[rel], scheme.space)
        Rg = Kernel(np.asarray(g)[rel], scheme.space)
        lhs = matmul(Rf, Rg).entries
        conv = convolve_functions(hg, f, g)
        rhs = conv[rel]
        res = max(res, float(np.abs(lhs - rhs).max()))
    residuals["pullback_convolution"] = res

    # transport identity: integrating f against the kernel row measures
    # with the invariant label weights equals pulling f back
    rng = np.random.default_rng(seed)
    test_functions = [rng.uniform(-1.0, 1.0, n)
                      for _ in range(test_function_count)]
    res = 0.0
    for f, _ in probes:
        f = np.asarray(f)
        for phi in test_functions:
            wphi = w * phi
            for x in range(n):
                rowint = np.bincount(rel[x], weights=wphi, minlength=L)
                lhs = float(np.dot(f, rowint))
                rhs = float(np.dot(w, f[rel[x]] * phi))
                res = max(res, abs(lhs - rhs))
    residuals["transport"] = res

    # anti-automorphism: transposing a convolution swaps and transposes
    # the factors
    res = 0.0
    for i in range(L):
        for ip in range(L):
            lhs = table[i, ip][inv]
            rhs = table[inv[ip], inv[i]]
            res = max(res, float(np.abs(lhs - rhs).max()))
    residuals["anti_automorphism"] = res

    tv = 0.0
    for i in range(L):
        for ip in range(i + 1, L):
            tv = max(tv, 0.5 * float(np.abs(table[i, ip]
                                            - table[ip, i]).sum()))
    residuals["commutativity_tv"] = tv
    if include_cas4:
        cas = verify_cas(scheme, tolerance=max(tolerance, 0.0))
        residuals["cas4_deviation"] = cas.cas4_max_deviation

    return StrongCasReport(residuals=residuals,
                           representative_spread=max_spread,
                           tolerance=float(tolerance),
                           declared_commutative=bool(declared_commutative),
                           probe_count=len(probes))
