"""Vertex-weighted regularity partition via spectral decomposition.

The partition of a weighted graph is built in five steps: weights are
approximated by rationals K(x)/N, the blow-up graph (K(x) copies of each
vertex) is eigen-decomposed through an n-by-n reduction, a spectral cut J
splits the spectrum into a dominant part and a controlled tail, vertices are
bucketed by their coordinates in the dominant eigenvectors, and buckets are
refined into parts of near-equal mass plus one exceptional part.

The blow-up is never materialized: copies of a vertex share all eigenvector
values, so the symmetric matrix B[x][y] = sqrt(K(x)K(y)) * adj[x][y] has the
same nonzero spectrum and everything downstream is constant on copy groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .core import WeightedGraph
from .errors import (
    BadParams,
    BlowupTooLarge,
    EigensolveFailure,
    EmptyPart,
    HeavyAtom,
    NoCutFound,
    PostconditionFailure,
    ZeroMassGraph,
)

EXHAUSTIVE_LIMIT = 12  # pair tester enumerates subsets up to this part size
RATIONALIZE_SCAN_LIMIT = 4096


def default_growth(j: int) -> int:
    """Practical-mode growth function for the spectral cut ladder."""
    return 4 * j


def theory_growth(epsilon: float, m: int):
    """Growth function meeting the worst-case criterion for every rung.

    Uses the largest allowed atom (1/2m) for the weight-dependent term, so it
    depends only on epsilon and m.  Values overflow to inf quickly; the cut
    scan tolerates that because windows past the spectrum sum to zero.
    """

    def f(j: int) -> float:
        try:
            base = (64.0 * j * j / epsilon ** 2 + 3.0) ** j
            return ((8.0 * base + 16.0 * m) ** 2) / epsilon ** 6
        except OverflowError:
            return math.inf

    return f


@dataclass(frozen=True)
class RegularityParams:
    """Knobs for the partition pipeline.

    mode "theory" enforces the worst-case atom bound p(epsilon, m) and uses
    the closed-form growth function; mode "practical" keeps the construction
    with a user-scale growth function and replaces the irregular-pair count
    guarantee with the empirical tester.
    """

    epsilon: float
    m: int
    mode: str = "practical"
    growth: object = None
    max_blowup: int = 10 ** 12
    nu: float = 1e-9
    trials: int = 64

    def __post_init__(self):
        if not (0.0 < self.epsilon < 0.25):
            raise BadParams(f"epsilon must be in (0, 1/4), got {self.epsilon}")
        if int(self.m) != self.m or self.m < 2:
            raise BadParams(f"m must be an integer >= 2, got {self.m}")
        if self.mode not in ("theory", "practical"):
            raise BadParams(f"mode must be theory or practical, got {self.mode}")
        if self.growth is None:
            g = theory_growth(self.epsilon, self.m) if self.mode == "theory" \
                else default_growth
            object.__setattr__(self, "growth", g)


def atom_bound_theory(epsilon: float, m: int) -> dict:
    """Every smallness condition on the maximum atom used by the construction.

    The third condition involves the worst-case bucket count, a tower-type
    quantity; it underflows to zero at any usable scale, which is reported
    honestly rather than replaced by a guess.
    """
    p1 = 1.0 / (2.0 * m)
    p2 = (2.0 - 3.0 * epsilon) / (m * (2.0 - epsilon))
    # log10 of the bucket-count term for F(1) dominant eigenvectors
    j1 = (8.0 * (64.0 / epsilon ** 2 + 3.0) + 16.0 * m) ** 2 / epsilon ** 6
    log10_r = j1 * math.log10(64.0 * j1 * j1 / epsilon ** 2 + 3.0) \
        if j1 < 1e15 else math.inf
    numer = math.sqrt(2.0) * epsilon * (1.0 - epsilon) - epsilon
    p3 = 0.0  # underflows: numer / (2 * 10**log10_r)
    return {
        "half_inverse_m": p1,
        "q_at_least_m": p2,
        "sigma_bound": p3,
        "sigma_bound_log10": (math.log10(max(numer, 1e-300)) - log10_r
                              if log10_r != math.inf else -math.inf),
        "value": min(p1, p2, p3),
    }


# ---------------------------------------------------------------------------
# rationalizing the weights


def _apportion(p: np.ndarray, n_total: int) -> np.ndarray | None:
    """Integer multiplicities >= 1 summing to n_total, near n_total * p.

    Largest-remainder rounding with deterministic index tie-breaks.  Returns
    None when n_total is below the point count.
    """
    n = len(p)
    if n_total < n:
        return None
    ideal = n_total * p
    base = np.maximum(1, np.floor(ideal).astype(np.int64))
    excess = int(base.sum()) - n_total
    if excess > 0:
        # shave the most over-represented entries, never below 1
        order = sorted(range(n), key=lambda i: (-(base[i] - ideal[i]), i))
        k = 0
        while excess > 0:
            i = order[k % n]
            if base[i] > 1:
                base[i] -= 1
                excess -= 1
            k += 1
            if k > 64 * n:
                return None
    elif excess < 0:
        remainder = ideal - base
        order = sorted(range(n), key=lambda i: (-remainder[i], i))
        for k in range(-excess):
            base[order[k % n]] += 1
    return base


def rationalize_weights(weights: np.ndarray, tolerance: float,
                        max_blowup: int = 10 ** 12) -> tuple[np.ndarray, int]:
    """Approximate probabilities by K(x)/N with a common denominator N.

    Guarantees K(x) >= 1, sum K = N and |K(x)/N - p(x)| within the tolerance
    (plus the normalization slack when the input does not sum to one).  With
    tolerance zero the exact dyadic representation is used.  Small N are
    scanned first so nice inputs get their minimal denominator.
    """
    p = np.asarray(weights, dtype=float)
    n = len(p)
    if n == 0 or (p < 0).any():
        raise BadParams("weights must be a nonempty nonnegative vector")
    if tolerance < 0:
        raise BadParams("tolerance must be >= 0")
    if tolerance == 0.0:
        fracs = [Fraction(float(x)) for x in p]
        total = sum(fracs)
        if total == 0:
            raise BadParams("weights sum to zero")
        ratios = [f / total for f in fracs]
        denom = 1
        for r in ratios:
            denom = denom * r.denominator // math.gcd(denom, r.denominator)
        if denom > max_blowup:
            raise BlowupTooLarge(denom, max_blowup)
        k = np.array([int(r * denom) for r in ratios], dtype=np.int64)
        if (k < 1).any():
            raise BadParams("zero weight cannot be represented exactly")
        return k, int(denom)

    scan_top = min(max(RATIONALIZE_SCAN_LIMIT, 4 * n), max_blowup)
    for n_total in range(n, scan_top + 1):
        k = _apportion(p, n_total)
        if k is None:
            continue
        if np.abs(k / n_total - p).max() <= tolerance:
            return k, n_total

    n_total = max(n, int(math.ceil(2.0 / tolerance)))
    while n_total <= max_blowup:
        k = _apportion(p, n_total)
        if k is not None and np.abs(k / n_total - p).max() <= tolerance:
            return k, n_total
        n_total *= 2
    raise BlowupTooLarge(n_total, max_blowup)


# ---------------------------------------------------------------------------
# blow-up spectrum through the n-by-n reduction


@dataclass(frozen=True)
class SpectralData:
    """Spectrum of the implicit blow-up adjacency.

    ``eigenvalues`` are sorted by decreasing magnitude (positive first on
    magnitude ties, then original index); indices past ``len(eigenvalues)``
    correspond to the blow-up padding and are identically zero.  ``vectors``
    stores per-point values v_i(x) of the reduced matrix; the blow-up
    coordinate of any copy of x is v_i(x) / sqrt(K(x)).
    """

    multiplicities: np.ndarray
    blowup_size: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    cut: int | None = None
    cut_fallback: bool = False
    buckets: object = None

    def blowup_coordinates(self, i: int) -> np.ndarray:
        return self.vectors[i] / np.sqrt(self.multiplicities)


def weighted_adjacency_spectrum(graph: WeightedGraph, kmult: np.ndarray
                                ) -> SpectralData:
    """Eigen-decompose B[x][y] = sqrt(K(x)K(y)) where (x,y) is an edge.

    The nonzero eigenvalues equal those of the blow-up adjacency because
    copies of one vertex are never adjacent and eigenvectors with nonzero
    eigenvalue are constant on copy groups.
    """
    k = np.asarray(kmult, dtype=np.int64)
    if (k < 1).any():
        raise BadParams("multiplicities must be positive integers")
    n_total = int(k.sum())
    root = np.sqrt(k.astype(float))
    b = np.outer(root, root) * graph.adj
    try:
        lam, vec = np.linalg.eigh(b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack failure
        raise EigensolveFailure(str(exc)) from exc
    order = sorted(range(len(lam)),
                   key=lambda i: (-abs(lam[i]), 0 if lam[i] >= 0 else 1, i))
    lam = lam[order]
    vec = vec[:, order].T.copy()  # row per eigenvalue
    for row in vec:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1
    lam.setflags(write=False)
    vec.setflags(write=False)
    edge_weight = float((np.outer(k, k) * graph.adj).sum())
    if abs(float(np.sum(lam ** 2)) - edge_weight) > 1e-9 * max(n_total ** 2, 1):
        raise PostconditionFailure(
            "trace identity violated: sum of squared eigenvalues does not "
            "match the blow-up edge count"
        )
    return SpectralData(
        multiplicities=k,
        blowup_size=n_total,
        eigenvalues=lam,
        vectors=vec,
    )


def choose_spectral_cut(spectrum: SpectralData, params: RegularityParams
                        ) -> tuple[int, bool]:
    """First ladder rung whose spectral window has a small enough tail.

    Scans z, F(z), F(F(z)), ... (1-based indices) and returns the first rung
    J with the window sum of squared eigenvalues below epsilon^5 N^2 / 128,
    then lowers J so that every eigenvalue before it is nonzero.
    """
    lam2 = spectrum.eigenvalues ** 2
    n = len(lam2)
    big_n = spectrum.blowup_size
    bound = params.epsilon ** 5 * big_n * big_n / 128.0
    growth = params.growth
    z = 1
    j = None
    fallback = False
    for _ in range(10000):
        hi = growth(z)
        if hi <= z:
            raise BadParams("growth function must satisfy F(j) > j")
        lo_idx = min(z - 1, n)
        hi_idx = n if hi == math.inf else min(int(hi) - 1, n)
        window = float(lam2[lo_idx:hi_idx].sum())
        if window <= bound:
            j = z
            break
        if z > n:
            break
        z = int(hi) if hi != math.inf else n + 1
    if j is None:
        # cannot happen with a strictly growing F: windows past the spectrum
        # are empty; kept as a defensive fallback, flagged in the output
        nz = int(np.count_nonzero(spectrum.eigenvalues))
        j = nz + 1
        fallback = True
        if j < 1:
            raise NoCutFound("spectral cut scan exhausted")
    nz = int(np.count_nonzero(spectrum.eigenvalues))
    if j > nz + 1:
        j = nz + 1
    return j, fallback


@dataclass(frozen=True)
class Buckets:
    """Vertex buckets from the dominant eigenvector coordinates.

    ``exceptional`` holds the points whose blow-up coordinate is large in
    some dominant eigenvector; ``cells`` partition the rest by the tuple of
    half-open coordinate intervals.  Buckets are whole copy groups by
    construction.
    """

    exceptional: tuple[int, ...]
    cells: tuple[tuple[int, ...], ...]
    coordinate_width: float
    outlier_threshold: float


def spectral_bucket_partition(spectrum: SpectralData, cut: int, epsilon: float
                              ) -> Buckets:
    """Bucket points by their coordinates in eigenvectors before the cut.

    A point is exceptional when some coordinate magnitude exceeds
    sqrt(2J / (epsilon N)); the rest are grouped by which width
    epsilon^(3/2) / (16 sqrt(2 J^3 N)) interval each coordinate falls in,
    with interval boundaries going to the lower bucket.
    """
    if cut < 1:
        raise BadParams("cut must be >= 1")
    k = spectrum.multiplicities
    n = len(k)
    big_n = spectrum.blowup_size
    threshold = math.sqrt(2.0 * cut / (epsilon * big_n))
    width = epsilon ** 1.5 / (16.0 * math.sqrt(2.0 * cut ** 3 * big_n))
    coords = [spectrum.blowup_coordinates(i) for i in range(min(cut - 1, n))]
    outlier = np.zeros(n, dtype=bool)
    for u in coords:
        outlier |= np.abs(u) > threshold
    exc_blowup = int(k[outlier].sum())
    if exc_blowup > epsilon * big_n / 2.0:
        raise PostconditionFailure(
            "exceptional bucket exceeds half the allowed exceptional mass"
        )
    cells: dict[tuple[int, ...], list[int]] = {}
    cell_order: list[tuple[int, ...]] = []
    for x in range(n):
        if outlier[x]:
            continue
        label = tuple(int(math.ceil(u[x] / width)) for u in coords)
        if label not in cells:
            cells[label] = []
            cell_order.append(label)
        cells[label].append(x)
    r = len(cell_order)
    try:
        r_bound = (64.0 * cut * cut / epsilon ** 2 + 3.0) ** cut
    except OverflowError:
        r_bound = math.inf
    if r > r_bound:
        raise PostconditionFailure("bucket count exceeds its structural bound")
    return Buckets(
        exceptional=tuple(int(x) for x in np.nonzero(outlier)[0]),
        cells=tuple(tuple(cells[lbl]) for lbl in cell_order),
        coordinate_width=width,
        outlier_threshold=threshold,
    )


# ---------------------------------------------------------------------------
# equitable refinement


@dataclass(frozen=True)
class PartitionResult:
    """Partition into an exceptional part V_0 and parts V_1..V_q.

    ``parts[0]`` is the exceptional part (possibly empty); densities and
    regularity flags are indexed like ``parts`` with NaN/False in row and
    column zero and on the diagonal.
    """

    parts: tuple[tuple[str, ...], ...]
    densities: np.ndarray
    regular_flags: np.ndarray
    params: dict
    exceptional_index: int = 0

    @property
    def q(self) -> int:
        return len(self.parts) - 1


@dataclass(frozen=True)
class RefinedParts:
    exceptional: tuple[int, ...]
    parts: tuple[tuple[int, ...], ...]
    m_effective: int
    m_star: float
    chunk_target: float
    part_cap: int


def _effective_m(m: int, p_star: float, mode: str, epsilon: float) -> int:
    if mode == "theory":
        bound = atom_bound_theory(epsilon, m)["value"]
        if p_star > bound:
            raise HeavyAtom(
                f"max relative atom {p_star!r} exceeds the worst-case bound "
                f"{bound!r} for epsilon={epsilon}, m={m}"
            )
        return m
    m_eff = m
    while m_eff > 1 and p_star * m_eff >= 1.0:
        m_eff -= 1
    if p_star * m_eff >= 1.0:
        raise HeavyAtom(
            f"max relative atom {p_star!r} leaves no feasible part count"
        )
    return m_eff


def equitable_refine(buckets: Buckets, kmult: np.ndarray, mass: np.ndarray,
                     params: RegularityParams) -> RefinedParts:
    """Split buckets into parts of near-equal mass plus an exceptional part.

    Each bucket is chunked greedily in index order: a chunk closes as soon as
    its mass reaches epsilon * mu(S) / (2 (r + m*)), so chunk masses live in
    [target, target + max atom).  Whole points (hence whole copy groups) are
    never split.  The remainder of every bucket joins the exceptional part
    together with the outlier bucket.
    """
    mu_total = float(mass.sum())
    if mu_total <= 0:
        raise ZeroMassGraph("total mass must be positive")
    mu_star = float(mass.max())
    p_star = mu_star / mu_total
    m_eff = _effective_m(params.m, p_star, params.mode, params.epsilon)
    m_star = m_eff / (1.0 - p_star * m_eff)
    r = len(buckets.cells)
    target = params.epsilon * mu_total / (2.0 * (r + m_star))
    parts: list[tuple[int, ...]] = []
    leftover: list[int] = list(buckets.exceptional)
    for cell in buckets.cells:
        chunk: list[int] = []
        acc = 0.0
        for x in cell:
            chunk.append(x)
            acc += float(mass[x])
            if acc >= target:
                parts.append(tuple(chunk))
                chunk = []
                acc = 0.0
        leftover.extend(chunk)
    q = len(parts)
    part_cap = int(math.ceil(2.0 * (r + m_star) / params.epsilon))
    if q < m_eff:
        raise HeavyAtom(
            f"refinement produced q={q} parts, below the required {m_eff}; "
            "atoms are too heavy for this epsilon and m"
        )
    if q > part_cap:
        raise PostconditionFailure("part count exceeds its structural cap")
    exc_mass = float(mass[leftover].sum()) if leftover else 0.0
    if exc_mass > params.epsilon * mu_total:
        raise PostconditionFailure("exceptional part is too heavy")
    part_masses = [float(mass[list(part)].sum()) for part in parts]
    if min(part_masses) <= 0:
        raise PostconditionFailure("a part has zero mass")
    if max(part_masses) - min(part_masses) > mu_star:
        raise PostconditionFailure("part masses spread beyond the max atom")
    return RefinedParts(
        exceptional=tuple(sorted(leftover)),
        parts=tuple(parts),
        m_effective=m_eff,
        m_star=m_star,
        chunk_target=target,
        part_cap=part_cap,
    )


# ---------------------------------------------------------------------------
# density and the pair tester


def pair_density(graph: WeightedGraph, left: list[int], right: list[int]
                 ) -> float:
    """Weighted edge density between two disjoint vertex sets."""
    mass = graph.mass
    mu_l = float(mass[list(left)].sum())
    mu_r = float(mass[list(right)].sum())
    if mu_l <= 0 or mu_r <= 0:
        raise EmptyPart("both sides must carry positive mass")
    sub = graph.adj[np.ix_(list(left), list(right))]
    rho = float(mass[list(left)] @ sub @ mass[list(right)])
    return rho / (mu_l * mu_r)


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    certified: bool
    deviation: float
    base_density: float
    witness: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    trials_run: int = 0


def _exhaustive_test(graph: WeightedGraph, left: list[int], right: list[int],
                     epsilon: float) -> RegularityVerdict:
    mass = graph.mass
    mu_l = mass[list(left)]
    mu_r = mass[list(right)]
    e_lr = graph.adj[np.ix_(list(left), list(right))].astype(float)
    a, b = len(left), len(right)
    base = float(mu_l @ e_lr @ mu_r) / (mu_l.sum() * mu_r.sum())
    bits_l = ((np.arange(1, 2 ** a)[:, None] >> np.arange(a)) & 1).astype(float)
    bits_r = ((np.arange(1, 2 ** b)[:, None] >> np.arange(b)) & 1).astype(float)
    mass_l = bits_l @ mu_l
    mass_r = bits_r @ mu_r
    ok_l = np.nonzero(mass_l >= epsilon * mu_l.sum())[0]
    ok_r = np.nonzero(mass_r >= epsilon * mu_r.sum())[0]
    worst = 0.0
    witness = None
    wl = (bits_l[ok_l] * mu_l) @ e_lr  # rho(A, y) per candidate A and vertex y
    chunk = max(1, 2 ** 22 // max(len(ok_r), 1))
    for start in range(0, len(ok_l), chunk):
        rows = slice(start, min(start + chunk, len(ok_l)))
        rho = wl[rows] @ (bits_r[ok_r] * mu_r).T
        dens = rho / np.outer(mass_l[ok_l][rows], mass_r[ok_r])
        dev = np.abs(dens - base)
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        if float(dev[i, j]) > worst:
            worst = float(dev[i, j])
            mask_l = int(ok_l[start + i] + 1)
            mask_r = int(ok_r[j] + 1)
            witness = (
                tuple(left[t] for t in range(a) if mask_l >> t & 1),
                tuple(right[t] for t in range(b) if mask_r >> t & 1),
            )
    if worst > epsilon:
        return RegularityVerdict(False, True, worst, base, witness)
    return RegularityVerdict(True, True, worst, base, None)


def _flatten_seed(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    out: list[int] = []
    for part in seed:
        out.extend(_flatten_seed(part))
    return tuple(out)


def _sampled_test(graph: WeightedGraph, left: list[int], right: list[int],
                  epsilon: float, trials: int, seed) -> RegularityVerdict:
    mass = graph.mass
    mu_l = float(mass[list(left)].sum())
    mu_r = float(mass[list(right)].sum())
    base = pair_density(graph, left, right)
    rng = np.random.default_rng(_flatten_seed(seed))

    def draw(side: list[int], mu_side: float) -> list[int]:
        for _ in range(200):
            mask = rng.random(len(side)) < 0.5
            sub = [v for v, keep in zip(side, mask) if keep]
            if sub and float(mass[sub].sum()) >= epsilon * mu_side:
                return sub
        return list(side)

    worst = 0.0
    for t in range(trials):
        sub_l = draw(left, mu_l)
        sub_r = draw(right, mu_r)
        dev = abs(pair_density(graph, sub_l, sub_r) - base)
        if dev > worst:
            worst = dev
        if dev > epsilon:
            return RegularityVerdict(
                False, False, worst, base,
                (tuple(sub_l), tuple(sub_r)), trials_run=t + 1,
            )
    return RegularityVerdict(True, False, worst, base, None, trials_run=trials)


def regularity_test(graph: WeightedGraph, left, right, epsilon: float,
                    trials: int = 64, seed=0) -> RegularityVerdict:
    """Decide whether a disjoint pair of parts is epsilon-regular.

    Exhaustive subset enumeration when both parts have at most 12 points
    (the verdict is then certified); otherwise a seeded sampling tester that
    reports Regular unless it finds a witness.
    """
    left = [int(v) for v in left]
    right = [int(v) for v in right]
    if set(left) & set(right):
        raise BadParams("parts must be disjoint")
    if not left or not right:
        raise EmptyPart("parts must be nonempty")
    if float(graph.mass[left].sum()) <= 0 or float(graph.mass[right].sum()) <= 0:
        raise EmptyPart("parts must carry positive mass")
    if len(left) == 1 and len(right) == 1:
        # the only admissible subsets are the parts themselves
        base = 1.0 if graph.adj[left[0], right[0]] else 0.0
        return RegularityVerdict(True, True, 0.0, base, None)
    if len(left) <= EXHAUSTIVE_LIMIT and len(right) <= EXHAUSTIVE_LIMIT:
        return _exhaustive_test(graph, left, right, epsilon)
    return _sampled_test(graph, left, right, epsilon, trials, seed)


# ---------------------------------------------------------------------------
# the pipeline


def regularity_pipeline(graph: WeightedGraph, params: RegularityParams,
                        seed: int = 0) -> PartitionResult:
    """Full partition: rationalize, eigensolve, cut, bucket, refine, test.

    Densities are recorded for every pair of non-exceptional parts and each
    pair is classified by the regularity tester with a per-pair seed stream,
    so verdicts do not depend on evaluation order.
    """
    mu_total = graph.total_mass()
    if mu_total <= 0:
        raise ZeroMassGraph("graph carries no mass")
    prob = graph.mass / mu_total
    kmult, blowup = rationalize_weights(prob, params.nu, params.max_blowup)
    spectrum = weighted_adjacency_spectrum(graph, kmult)
    cut, fallback = choose_spectral_cut(spectrum, params)
    buckets = spectral_bucket_partition(spectrum, cut, params.epsilon)
    refined = equitable_refine(buckets, kmult, graph.mass, params)
    spectrum = replace(spectrum, cut=cut, cut_fallback=fallback, buckets=buckets)

    index_parts = [list(refined.exceptional)] + [list(p) for p in refined.parts]
    q = len(index_parts) - 1
    membership = np.zeros((graph.n, q + 1))
    for pi, part in enumerate(index_parts):
        for v in part:
            membership[v, pi] = 1.0
    weighted = membership * graph.mass[:, None]
    rho = weighted.T @ graph.adj @ weighted
    part_mass = graph.mass @ membership
    densities = np.full((q + 1, q + 1), math.nan)
    flags = np.zeros((q + 1, q + 1), dtype=bool)
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            densities[i, j] = densities[j, i] = (
                rho[i, j] / (part_mass[i] * part_mass[j])
            )
            verdict = regularity_test(
                graph, index_parts[i], index_parts[j], params.epsilon,
                trials=params.trials, seed=(seed, i, j),
            )
            flags[i, j] = flags[j, i] = verdict.regular
    parts_ids = tuple(
        tuple(graph.vertices[x] for x in part) for part in index_parts
    )
    meta = {
        "epsilon": params.epsilon,
        "m": params.m,
        "m_effective": refined.m_effective,
        "mode": params.mode,
        "seed": seed,
        "blowup_size": blowup,
        "cut": cut,
        "cut_fallback": fallback,
        "bucket_count": len(buckets.cells),
        "part_cap": refined.part_cap,
        "chunk_target": refined.chunk_target,
        "trials": params.trials,
    }
    return PartitionResult(
        parts=parts_ids,
        densities=densities,
        regular_flags=flags,
        params=meta,
    )
