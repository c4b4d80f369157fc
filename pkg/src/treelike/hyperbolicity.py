"""Average hyperbolicity, worst-case defect, bad-set profile and threshold ladder.

The central quantity is the expected positive part of
``min(s(X,Z), s(Y,Z)) - s(X,Y)`` over independent triples drawn from the
point weights.  Everything downstream (threshold selection, exceptional
sets) is driven by the piecewise-constant map ``t -> mass of R_t`` where
``R_t`` is the set of triples whose pair similarity drops below ``t`` while
both similarities to the third point stay at or above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SimilaritySpace, validate_space
from .errors import (
    BadParams,
    Delta0TooLarge,
    NoGoodThreshold,
    ThresholdOutOfRange,
    ZeroSamples,
)

MACHINE_EPS = float(np.finfo(float).eps)

# Floor applied to delta0 when the measured hyperbolicity is exactly zero;
# without it every window constraint degenerates.
DELTA0_FLOOR = MACHINE_EPS ** 0.125


def _dedupe_points(space: SimilaritySpace) -> tuple[np.ndarray, np.ndarray]:
    """Collapse points with identical similarity rows, merging their weights.

    Triple expectations depend on a point only through its row (including
    the diagonal), so grouping identical rows is an exact reduction.  Weight
    merging uses ``math.fsum`` so that re-splitting a point into equal-mass
    copies round-trips exactly when the weight is a power of two.
    """
    s = space.sim
    n = space.n
    order: list[int] = []
    groups: dict[bytes, list[int]] = {}
    for i in range(n):
        key = s[i].tobytes()
        if key in groups:
            groups[key].append(i)
        else:
            groups[key] = [i]
            order.append(i)
    if len(order) == n:
        return space.weights, s
    keep = np.array(order, dtype=int)
    w = np.array(
        [math.fsum(space.weights[j] for j in groups[s[i].tobytes()]) for i in order]
    )
    return w, s[np.ix_(keep, keep)]


def _defect_sum(weights: np.ndarray, sim: np.ndarray) -> float:
    total = 0.0
    p = weights
    for z in range(len(p)):
        if p[z] == 0.0:
            continue
        col = sim[:, z]
        defect = np.minimum(col[:, None], col[None, :]) - sim
        np.clip(defect, 0.0, None, out=defect)
        total += p[z] * float(p @ defect @ p)
    return total


def hyp_exact(space: SimilaritySpace) -> float:
    """Expected triple defect, computed exactly in O(n^3)."""
    validate_space(space)
    w, s = _dedupe_points(space)
    return _defect_sum(w, s)


def gromov_delta_worst_case(space: SimilaritySpace) -> float:
    """Maximum triple defect; an upper bound for the average."""
    validate_space(space)
    w, s = _dedupe_points(space)
    best = 0.0
    for z in range(len(w)):
        col = s[:, z]
        defect = np.minimum(col[:, None], col[None, :]) - s
        m = float(defect.max())
        if m > best:
            best = m
    return best


def hyp_monte_carlo(space: SimilaritySpace, samples: int, seed: int
                    ) -> tuple[float, float]:
    """Sample mean and standard error of the triple defect, seeded."""
    validate_space(space)
    if samples < 1:
        raise ZeroSamples(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(space.n, size=(3, samples), p=space.weights)
    x, y, z = idx
    s = space.sim
    defect = np.minimum(s[x, z], s[y, z]) - s[x, y]
    np.clip(defect, 0.0, None, out=defect)
    est = float(defect.mean())
    if samples == 1:
        return est, 0.0
    stderr = float(defect.std(ddof=1) / math.sqrt(samples))
    return est, stderr


def gromov_delta_four_point(dist: np.ndarray) -> float:
    """Worst-case four point defect over all base points (O(n^4)).

    Not part of the pipeline; exposed behind an explicit CLI flag only.
    """
    d = np.asarray(dist, dtype=float)
    n = d.shape[0]
    best = 0.0
    for w in range(n):
        prod = 0.5 * (d[:, w][:, None] + d[:, w][None, :] - d)
        for z in range(n):
            col = prod[:, z]
            defect = np.minimum(col[:, None], col[None, :]) - prod
            m = float(defect.max())
            if m > best:
                best = m
    return best


# ---------------------------------------------------------------------------
# bad set of thresholds


def bad_set_measure(space: SimilaritySpace, t: float) -> float:
    """Triple mass of R_t = {(x,y,z): s(x,y) < t <= min(s(x,z), s(y,z))}."""
    validate_space(space)
    if not (0.0 < t <= space.bound):
        raise ThresholdOutOfRange(t, space.bound)
    s = space.sim
    p = space.weights
    low = s < t
    total = 0.0
    for z in range(space.n):
        if p[z] == 0.0:
            continue
        wz = p * (s[:, z] >= t)
        total += p[z] * float(wz @ low @ wz)
    return total


def bad_set_profile(space: SimilaritySpace) -> tuple[np.ndarray, np.ndarray]:
    """The full piecewise-constant profile t -> triple mass of R_t.

    Returns the distinct similarity values (sorted ascending) and the mass at
    each one.  The profile is constant on every interval between consecutive
    values, left-open and right-closed, and zero above the largest value, so
    these breakpoints describe it completely.
    """
    validate_space(space)
    s = space.sim
    p = space.weights
    vals = np.unique(s)
    k = len(vals)
    diff = np.zeros(k + 1)
    for z in range(space.n):
        if p[z] == 0.0:
            continue
        col = s[:, z]
        high = np.minimum(col[:, None], col[None, :])
        w = np.outer(p, p) * p[z]
        ia = np.searchsorted(vals, s, side="right")
        ib = np.searchsorted(vals, high, side="right") - 1
        ok = ia <= ib
        if not ok.any():
            continue
        np.add.at(diff, ia[ok], w[ok])
        np.add.at(diff, ib[ok] + 1, -w[ok])
    masses = np.cumsum(diff[:-1])
    return vals, masses


def profile_value(ts: np.ndarray, masses: np.ndarray, t: float) -> float:
    """Evaluate the profile at t, using its left-open right-closed pieces."""
    i = int(np.searchsorted(ts, t, side="left"))
    if i >= len(ts):
        return 0.0
    return float(masses[i])


def profile_integral(ts: np.ndarray, masses: np.ndarray, upper: float = 1.0) -> float:
    """Exact integral of the profile over (0, upper]."""
    total = 0.0
    prev = 0.0
    for t, m in zip(ts, masses):
        if t <= 0.0:
            prev = 0.0
            continue
        hi = min(float(t), upper)
        if hi > prev:
            total += float(m) * (hi - prev)
            prev = hi
        if prev >= upper:
            break
    return total


# ---------------------------------------------------------------------------
# threshold ladder


@dataclass(frozen=True)
class ThresholdLadder:
    """Levels t_1 < ... < t_N near multiples of kappa avoiding the bad set.

    kappa is max(epsilon^(1/24), m^(-1/2)); delta0 is the eighth root of the
    measured average hyperbolicity (floored at machine precision's eighth
    root); n_levels is the largest N with N*kappa < 1.  Each threshold sits
    in [i*kappa - delta0, i*kappa + delta0] and has triple-defect mass below
    delta0^4.
    """

    epsilon: float
    m: int
    kappa: float
    delta0: float
    n_levels: int
    thresholds: tuple[float, ...]
    profile: dict[float, float]
    hyp: float


def threshold_ladder(space: SimilaritySpace, epsilon: float, m: int,
                     delta0: float | None = None) -> ThresholdLadder:
    """Pick thresholds minimizing the bad-set mass inside each window.

    Candidates are the distinct similarity values inside the window plus the
    window endpoints; the profile is piecewise constant with breakpoints at
    similarity values, so this scan is exact.  Ties go to the smallest t.
    """
    validate_space(space)
    if space.bound != 1.0:
        raise BadParams("threshold ladder requires a space rescaled to bound 1")
    if not (epsilon > 0):
        raise BadParams(f"epsilon must be positive, got {epsilon}")
    if m < 2:
        raise BadParams(f"m must be an integer >= 2, got {m}")
    hyp = hyp_exact(space)
    if delta0 is None:
        delta0 = max(hyp, MACHINE_EPS) ** 0.125
    kappa = max(epsilon ** (1.0 / 24.0), m ** (-0.5))
    if not delta0 < kappa / 2.0:
        raise Delta0TooLarge(delta0, kappa)
    n_levels = int(math.floor(1.0 / kappa))
    while n_levels * kappa >= 1.0:
        n_levels -= 1
    while (n_levels + 1) * kappa < 1.0:
        n_levels += 1

    ts, masses = bad_set_profile(space)
    budget = delta0 ** 4
    thresholds: list[float] = []
    profile: dict[float, float] = {}
    for i in range(1, n_levels + 1):
        lo = i * kappa - delta0
        hi = min(i * kappa + delta0, 1.0)
        cands = {lo, hi}
        inside = ts[(ts > lo) & (ts < hi)]
        cands.update(float(v) for v in inside)
        best_t = None
        best_mass = math.inf
        for t in sorted(cands):
            mass = profile_value(ts, masses, t)
            profile[float(t)] = mass
            if mass < best_mass:
                best_mass = mass
                best_t = float(t)
        if best_mass >= budget:
            raise NoGoodThreshold(i, (lo, hi), best_mass)
        thresholds.append(best_t)
    return ThresholdLadder(
        epsilon=float(epsilon),
        m=int(m),
        kappa=float(kappa),
        delta0=float(delta0),
        n_levels=n_levels,
        thresholds=tuple(thresholds),
        profile=profile,
        hyp=hyp,
    )


# ---------------------------------------------------------------------------
# exceptional sets


@dataclass(frozen=True)
class ExceptionalSets:
    """Per-point masses of the threshold-crossing neighborhoods.

    n1_measure[y, z] is the mass of points x for which some ladder threshold
    separates s(x,y) from both s(x,z) and s(y,z); b_measure[z] is the mass of
    y with n1_measure[y, z] above delta0; a_indices collects the points z
    whose b_measure exceeds delta0; r2_measure[z] is the pair mass of the
    analogous two-coordinate set.
    """

    n1_measure: np.ndarray
    b_measure: np.ndarray
    a_indices: tuple[int, ...]
    a_mass: float
    r2_measure: np.ndarray


def exceptional_sets(space: SimilaritySpace, ladder: ThresholdLadder
                     ) -> ExceptionalSets:
    validate_space(space)
    s = space.sim
    p = space.weights
    n = space.n
    lows = [s < t for t in ladder.thresholds]
    n1 = np.zeros((n, n))
    r2 = np.zeros(n)
    for z in range(n):
        acc = np.zeros((n, n), dtype=bool)
        col = s[:, z]
        for t, low in zip(ladder.thresholds, lows):
            ok = col >= t
            acc |= low & ok[:, None] & ok[None, :]
        n1[:, z] = p @ acc  # mass over x, indexed by y
        r2[z] = float(p @ acc @ p)
    b_mask = n1 > ladder.delta0
    b_measure = p @ b_mask
    a_indices = tuple(int(z) for z in np.nonzero(b_measure > ladder.delta0)[0])
    a_mass = float(p[list(a_indices)].sum()) if a_indices else 0.0
    return ExceptionalSets(
        n1_measure=n1,
        b_measure=b_measure,
        a_indices=a_indices,
        a_mass=a_mass,
        r2_measure=r2,
    )
