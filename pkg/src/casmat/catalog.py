"""Builders for concrete scheme families.

Finite examples (cyclic groups, Hamming cubes, permutation-group
orbitals), quadrature discretizations of the circle and the 2-sphere, and
squared-distance (Delsarte-style) schemes over an arbitrary metric table.
Constructors establish the structural invariants themselves; verify_cas
is a check on them, not a crutch.
"""

from itertools import product

import numpy as np

from .measure import MeasureSpace, make_quadrature, read_quadrature
from .scheme import LabelSpace, Scheme

HAMMING_NODE_CAP = 4096
GROUP_DEGREE_CAP = 1024
DEFAULT_SPHERE_SEED = 1729


def _counting_space(n: int, coordinates=None) -> MeasureSpace:
    return make_quadrature(np.ones(n), coordinates=coordinates)


def cyclic_scheme(n: int) -> Scheme:
    """Translation scheme of Z_n under counting measure."""
    if n < 2:
        raise ValueError("cyclic scheme needs n >= 2")
    idx = np.arange(n)
    rel = (idx[None, :] - idx[:, None]) % n
    label_space = LabelSpace(involution=(n - idx) % n, identity_label=0)
    return Scheme(_counting_space(n), label_space, rel)


def hamming_scheme(d: int, q: int) -> Scheme:
    """Hamming scheme H(d, q): words of length d over q symbols, labels
    are Hamming distances."""
    if d < 1 or q < 2:
        raise ValueError("hamming scheme needs d >= 1 and q >= 2")
    n = q ** d
    if n > HAMMING_NODE_CAP:
        raise ValueError(
            f"q^d = {n} exceeds the {HAMMING_NODE_CAP}-node cap")
    words = np.array(list(product(range(q), repeat=d)), dtype=np.int16)
    rel = np.zeros((n, n), dtype=np.int32)
    block = max(1, (1 << 22) // (n * d))
    for start in range(0, n, block):
        stop = min(n, start + block)
        rel[start:stop] = (words[start:stop, None, :]
                           != words[None, :, :]).sum(axis=2)
    label_space = LabelSpace(involution=np.arange(d + 1), identity_label=0)
    return Scheme(_counting_space(n, coordinates=words), label_space, rel)


def _check_permutations(generators):
    gens = [np.asarray(g, dtype=np.int64) for g in generators]
    if not gens:
        raise ValueError("at least one generator is required")
    m = gens[0].size
    for g in gens:
        if g.shape != (m,) or not np.array_equal(np.sort(g), np.arange(m)):
            raise ValueError(f"generator {g.tolist()} is not a permutation "
                             f"of 0..{m - 1}")
    return gens, m


def group_action_scheme(generators) -> Scheme:
    """Orbital scheme of the group generated by the given permutations.

    Labels are the orbits of the diagonal action on ordered pairs, the
    measure is counting measure. The action must be transitive.
    """
    gens, m = _check_permutations(generators)
    if m > GROUP_DEGREE_CAP:
        raise ValueError(f"degree {m} exceeds the {GROUP_DEGREE_CAP} cap")
    # transitivity on points
    reach = np.zeros(m, dtype=bool)
    stack = [0]
    reach[0] = True
    while stack:
        x = stack.pop()
        for g in gens:
            y = int(g[x])
            if not reach[y]:
                reach[y] = True
                stack.append(y)
    if not reach.all():
        raise ValueError("the generated group does not act transitively; "
                         f"orbit of 0 misses {np.nonzero(~reach)[0].tolist()}")
    labels = np.full((m, m), -1, dtype=np.int32)
    next_label = 0
    for x in range(m):
        for y in range(m):
            if labels[x, y] >= 0:
                continue
            lab = next_label
            next_label += 1
            stack = [(x, y)]
            labels[x, y] = lab
            while stack:
                a, b = stack.pop()
                for g in gens:
                    ga, gb = int(g[a]), int(g[b])
                    if labels[ga, gb] < 0:
                        labels[ga, gb] = lab
                        stack.append((ga, gb))
    L = next_label
    inv = np.zeros(L, dtype=np.int64)
    seen = np.zeros(L, dtype=bool)
    for x in range(m):
        for y in range(m):
            lab = labels[x, y]
            if not seen[lab]:
                seen[lab] = True
                inv[lab] = labels[y, x]
    # (0, 0) is scanned first, so the diagonal orbit is label 0
    assert (labels.diagonal() == 0).all()
    label_space = LabelSpace(involution=inv, identity_label=0)
    return Scheme(_counting_space(m), label_space, labels)


def symmetric_group(m: int):
    """Generators of S_m in its natural action."""
    if m < 2:
        raise ValueError("need m >= 2")
    swap = np.arange(m)
    swap[[0, 1]] = [1, 0]
    cycle = np.roll(np.arange(m), -1)
    return [swap, cycle]


def cyclic_group(m: int):
    """Generator of the cyclic shift on m points."""
    if m < 2:
        raise ValueError("need m >= 2")
    return [np.roll(np.arange(m), -1)]


def dihedral_group(m: int):
    """Generators of the dihedral action on m points (shift + reflection)."""
    if m < 3:
        raise ValueError("need m >= 3")
    return [np.roll(np.arange(m), -1), (-np.arange(m)) % m]


def circle_scheme(n_nodes: int, n_bins: int, signed: bool = True) -> Scheme:
    """Uniform circle quadrature with exact angular-difference labels.

    Nodes are n_nodes uniform angles with weights 2*pi/n_nodes. Labels are
    the exact grid differences (signed: (y-x) mod n with involution
    d -> -d; unsigned: folded distance min(d, n-d) with identity
    involution), which makes every fiber a rotation orbit and all
    intersection numbers exactly constant. The n_bins parameter stores a
    coarse generating family of label sets (equal arcs) on the scheme for
    CAS2 checks over genuinely coarse Borel sets; n_bins must divide
    n_nodes so the arcs contain equally many grid differences.
    """
    if n_nodes < 2:
        raise ValueError("circle scheme needs n_nodes >= 2")
    if n_bins < 2:
        raise ValueError("circle scheme needs n_bins >= 2")
    if n_nodes % n_bins != 0:
        raise ValueError(
            f"n_bins must divide n_nodes, got {n_bins} and {n_nodes}")
    n = n_nodes
    step = 2 * np.pi / n
    angles = step * np.arange(n)
    space = make_quadrature(np.full(n, step), coordinates=angles)
    idx = np.arange(n)
    diff = (idx[None, :] - idx[:, None]) % n

    if signed:
        rel = diff
        L = n
        inv = (n - idx) % n
        # signed integer representative keeps adjacent interval
        # boundaries bitwise identical
        reps = np.where(idx <= n // 2, idx, idx - n)
        bin_meta = tuple((float(step * (k - 0.5)), float(step * (k + 0.5)))
                         for k in reps)
        arc = (idx * n_bins) // n
        bins = [tuple(np.nonzero(arc == b)[0].tolist())
                for b in range(n_bins)]
    else:
        fold = np.minimum(diff, n - diff)
        rel = fold
        L = n // 2 + 1
        inv = np.arange(L)
        bin_meta = tuple((float(step * (c - 0.5)), float(step * (c + 0.5)))
                         for c in range(L))
        arc = np.minimum((np.arange(L) * 2 * n_bins) // n, n_bins - 1)
        bins = [tuple(np.nonzero(arc == b)[0].tolist())
                for b in range(n_bins)]
        bins = [W for W in bins if W]
    label_space = LabelSpace(involution=inv, identity_label=0,
                             bin_meta=bin_meta)
    return Scheme(space, label_space, rel, borel_bins=bins)


def _sphere_nodes(node_source, seed):
    if isinstance(node_source, (int, np.integer)):
        if node_source < 2:
            raise ValueError("need at least 2 sphere nodes")
        rng = np.random.default_rng(seed)
        coords = rng.normal(size=(int(node_source), 3))
        coords /= np.linalg.norm(coords, axis=1, keepdims=True)
        weights = np.full(len(coords), 4 * np.pi / len(coords))
        return coords, weights
    if isinstance(node_source, (str, bytes)) or hasattr(node_source, "__fspath__"):
        space = read_quadrature(node_source)
        coords = np.asarray(space.coordinates, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ValueError("sphere quadrature file must carry 3 coordinates "
                             "per node")
        return coords, np.asarray(space.weights, dtype=float)
    coords = np.asarray(node_source, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError("sphere nodes must be an (n, 3) array")
    weights = np.full(len(coords), 4 * np.pi / len(coords))
    return coords, weights


def sphere_scheme(node_source, n_bins: int,
                  seed: int = DEFAULT_SPHERE_SEED) -> Scheme:
    """Binned inner-product scheme on the unit 2-sphere.

    node_source is a node count (seeded pseudorandom unit vectors), a
    quadrature file path, or an (n, 3) array of unit vectors. Off-diagonal
    labels are equal-width bins of <x, y> over [-1, 1] (half-open, last
    bin closed, empty bins dropped); the diagonal gets a dedicated
    identity label so the diagonal axiom holds structurally.
    """
    if n_bins < 2:
        raise ValueError("sphere scheme needs n_bins >= 2")
    coords, weights = _sphere_nodes(node_source, seed)
    norms = np.linalg.norm(coords, axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > 1e-9)[0]
    if bad.size:
        raise ValueError(
            f"node {int(bad[0])} is not a unit vector (|norm - 1| = "
            f"{abs(norms[bad[0]] - 1.0):.3e})")
    n = len(coords)
    t = np.clip(coords @ coords.T, -1.0, 1.0)
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    binned = np.clip(np.digitize(t, edges) - 1, 0, n_bins - 1)
    off_diag = ~np.eye(n, dtype=bool)
    occupied = np.unique(binned[off_diag])
    remap = np.full(n_bins, -1, dtype=np.int32)
    remap[occupied] = 1 + np.arange(occupied.size)
    rel = np.zeros((n, n), dtype=np.int32)
    rel[off_diag] = remap[binned[off_diag]]
    L = 1 + occupied.size
    bin_meta = [None] + [(float(edges[b]), float(edges[b + 1]))
                         for b in occupied]
    label_space = LabelSpace(involution=np.arange(L), identity_label=0,
                             bin_meta=tuple(bin_meta))
    return Scheme(make_quadrature(weights, coordinates=coords),
                  label_space, rel)


def delsarte_scheme(metric, weights=None, n_bins=None) -> Scheme:
    """Scheme of the squared distance function over a metric table.

    With n_bins=None every distinct squared distance becomes a label;
    otherwise off-diagonal values are grouped into equal-width half-open
    bins over (0, max], last bin closed. The involution is the identity
    and the zero-distance label is the diagonal.
    """
    d = np.asarray(metric, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("metric must be a square table")
    n = d.shape[0]
    if not np.isfinite(d).all() or (d < 0).any():
        raise ValueError("metric entries must be finite and non-negative")
    asym = np.nonzero(d != d.T)
    if asym[0].size:
        x, y = int(asym[0][0]), int(asym[1][0])
        raise ValueError(f"metric is not symmetric at ({x}, {y}): "
                         f"{d[x, y]!r} vs {d[y, x]!r}")
    if (d.diagonal() != 0).any():
        x = int(np.nonzero(d.diagonal() != 0)[0][0])
        raise ValueError(f"metric[{x}, {x}] must be 0, got {d[x, x]!r}")
    off_diag = ~np.eye(n, dtype=bool)
    if (d[off_diag] == 0).any():
        x, y = [int(v[0]) for v in np.nonzero((d == 0) & off_diag)]
        raise ValueError(f"zero distance between distinct nodes ({x}, {y})")

    c = d * d
    rel = np.zeros((n, n), dtype=np.int32)
    if n_bins is None:
        values = np.unique(c[off_diag])
        lookup = {v: 1 + i for i, v in enumerate(values)}
        rel[off_diag] = [lookup[v] for v in c[off_diag]]
        L = 1 + values.size
        bin_meta = None
    else:
        if n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        cmax = float(c.max())
        edges = np.linspace(0.0, cmax, n_bins + 1)
        binned = np.clip(np.digitize(c, edges) - 1, 0, n_bins - 1)
        occupied = np.unique(binned[off_diag])
        remap = np.full(n_bins, -1, dtype=np.int32)
        remap[occupied] = 1 + np.arange(occupied.size)
        rel[off_diag] = remap[binned[off_diag]]
        L = 1 + occupied.size
        bin_meta = tuple([None] + [(float(edges[b]), float(edges[b + 1]))
                                   for b in occupied])
    label_space = LabelSpace(involution=np.arange(L), identity_label=0,
                             bin_meta=bin_meta)
    if weights is None:
        space = _counting_space(n)
    else:
        space = make_quadrature(weights)
    return Scheme(space, label_space, rel)


# ---------------------------------------------------------------------------
# recipe strings, e.g. "cyclic n=12" or "sphere nodes=5000 bins=40 seed=1729"


def materialize_recipe(text: str):
    """Build a Scheme from a recipe string; returns (scheme, recipe)."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty recipe")
    kind, params = tokens[0], {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ValueError(f"malformed recipe parameter {tok!r}")
        key, val = tok.split("=", 1)
        params[key] = val
    if kind == "cyclic":
        scheme = cyclic_scheme(int(params["n"]))
    elif kind == "hamming":
        scheme = hamming_scheme(int(params["d"]), int(params["q"]))
    elif kind == "group":
        gens = [[int(v) for v in g.split(",")]
                for g in params["generators"].split(";")]
        scheme = group_action_scheme(gens)
    elif kind == "circle":
        scheme = circle_scheme(int(params["nodes"]), int(params["bins"]),
                               signed=params.get("signed", "true") == "true")
    elif kind == "sphere":
        seed = int(params.get("seed", DEFAULT_SPHERE_SEED))
        if "nodes" in params:
            scheme = sphere_scheme(int(params["nodes"]), int(params["bins"]),
                                   seed=seed)
        else:
            scheme = sphere_scheme(params["quadrature"], int(params["bins"]),
                                   seed=seed)
    elif kind == "delsarte":
        metric = np.loadtxt(params["metric"])
        bins = int(params["bins"]) if "bins" in params else None
        scheme = delsarte_scheme(metric, n_bins=bins)
    else:
        raise ValueError(f"unknown recipe kind {kind!r}")
    return scheme, " ".join([kind] + [f"{k}={v}" for k, v in params.items()])
