"""Turn a thresholded similarity graph into a disjoint union of cliques.

Parts of a regularity partition are linked when their pair is regular with
edge density near one.  Maximal disjoint neighborhoods of linked parts are
grouped into clusters, nearby leftover parts are attached, and the vertex
graph is then repaired in five staged edit passes whose pairs and measures
are all logged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import WeightedGraph
from .errors import NotAClique, PostconditionFailure
from .regularity import PartitionResult

STAGE_NAMES = (
    "delete_exceptional_incident",
    "complete_within_part",
    "complete_within_group",
    "delete_cross_group",
    "delete_leftover_incident",
)


@dataclass(frozen=True)
class PartNeighborGraph:
    """Symmetric relations on the non-exceptional parts V_1..V_q.

    ``neighbor[i][j]`` holds when the pair is regular with density at least
    1 - 2 epsilon (inclusive); ``irregular`` marks pairs the tester rejected.
    ``dichotomy_violations`` lists regular pairs whose density landed in the
    middle band [3 epsilon, 1 - 2 epsilon), which the theory excludes when
    the hyperbolicity preconditions hold; they are diagnostics, not errors.
    """

    q: int
    neighbor: np.ndarray
    irregular: np.ndarray
    densities: np.ndarray
    dichotomy_violations: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class CliqueStructure:
    """Grouping of parts produced by the neighborhood construction.

    families          -- maximal disjoint neighborhoods (part index tuples)
    part_groups       -- connected unions of families (each verified complete)
    extended_groups   -- part_groups plus attached leftover parts
    leftover_parts    -- parts attached to no group
    bad_pairs         -- neighbor pairs spanning two distinct extended groups
    """

    families: tuple[tuple[int, ...], ...]
    part_groups: tuple[tuple[int, ...], ...]
    extended_groups: tuple[tuple[int, ...], ...]
    leftover_parts: tuple[int, ...]
    bad_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ModificationLog:
    """Staged edge edits of one repair run.

    Every pair is stored in both orientations.  A pair may be added in one
    stage and deleted by a later one (leftover parts are completed and then
    cleared); stage consistency means each stage's edits were valid against
    the graph state it saw.  ``total_measure`` weighs the union of all
    stages once.
    """

    stages: dict[str, tuple[tuple[str, str], ...]]
    stage_measures: dict[str, float]
    total_measure: float


def part_neighbor_graph(partition: PartitionResult, epsilon: float
                        ) -> PartNeighborGraph:
    """Classify part pairs as neighbor / regular-non-neighbor / irregular."""
    q = partition.q
    neighbor = np.zeros((q + 1, q + 1), dtype=bool)
    irregular = np.zeros((q + 1, q + 1), dtype=bool)
    middle: list[tuple[int, int]] = []
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            regular = bool(partition.regular_flags[i, j])
            d = float(partition.densities[i, j])
            if not regular:
                irregular[i, j] = irregular[j, i] = True
                continue
            if d >= 1.0 - 2.0 * epsilon:
                neighbor[i, j] = neighbor[j, i] = True
            elif d >= 3.0 * epsilon:
                middle.append((i, j))
    return PartNeighborGraph(
        q=q,
        neighbor=neighbor,
        irregular=irregular,
        densities=partition.densities,
        dichotomy_violations=tuple(middle),
    )


def neighborhood_family(pg: PartNeighborGraph, epsilon: float
                        ) -> tuple[tuple[int, ...], ...]:
    """Greedy maximal collection of disjoint neighborhoods of adequate size.

    Repeatedly takes the part whose closed neighborhood among unused parts
    is largest (ties to the lowest index) and accepts it while it has at
    least epsilon^(1/4) q members; on exit no unused part has an acceptable
    neighborhood left, which is re-verified.
    """
    q = pg.q
    cutoff = epsilon ** 0.25 * q
    unused = set(range(1, q + 1))
    family: list[tuple[int, ...]] = []
    while unused:
        best_i = None
        best: set[int] = set()
        for i in sorted(unused):
            nbhd = {i} | {j for j in unused if pg.neighbor[i, j]}
            if len(nbhd) > len(best):
                best = nbhd
                best_i = i
        if best_i is None or len(best) < cutoff:
            break
        family.append(tuple(sorted(best)))
        unused -= best
    for i in unused:
        nbhd = {i} | {j for j in unused if pg.neighbor[i, j]}
        if len(nbhd) >= cutoff:
            raise PostconditionFailure("greedy neighborhood family not maximal")
    return tuple(family)


def clique_closure(family: tuple[tuple[int, ...], ...], pg: PartNeighborGraph,
                   epsilon: float) -> CliqueStructure:
    """Group the neighborhoods into clusters and attach nearby leftovers.

    Neighborhoods are connected when some cross pair of their parts are
    neighbors; the connected components must be complete.  A leftover part
    with at least epsilon^(1/3) q neighbors inside a unique cluster joins
    that cluster; finding two such clusters contradicts the construction and
    raises instead of picking one arbitrarily.
    """
    q = pg.q
    t = len(family)
    adj = np.zeros((t, t), dtype=bool)
    for a in range(t):
        for b in range(a + 1, t):
            linked = any(pg.neighbor[i, j] for i in family[a] for j in family[b])
            adj[a, b] = adj[b, a] = linked
    comp = [-1] * t
    comps: list[list[int]] = []
    for a in range(t):
        if comp[a] >= 0:
            continue
        cid = len(comps)
        stack = [a]
        comp[a] = cid
        members = []
        while stack:
            u = stack.pop()
            members.append(u)
            for v in range(t):
                if adj[u, v] and comp[v] < 0:
                    comp[v] = cid
                    stack.append(v)
        comps.append(sorted(members))
    for members in comps:
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                a, b = members[ai], members[bi]
                if not adj[a, b]:
                    triple = _shortest_gap_triple(adj, members, a, b)
                    raise NotAClique(
                        "neighborhood component is not complete: families "
                        f"{triple[0]} ~ {triple[1]} ~ {triple[2]} but the "
                        "ends are not linked; the hyperbolicity "
                        "preconditions do not hold for these parameters",
                        witness=triple,
                    )
    groups = [
        tuple(sorted(p for a in members for p in family[a])) for members in comps
    ]
    if len(groups) > epsilon ** -0.25 + 1e-9:
        raise PostconditionFailure("more clusters than the size bound allows")
    grouped = {p for g in groups for p in g}
    outside = [i for i in range(1, q + 1) if i not in grouped]
    attach_cut = epsilon ** (1.0 / 3.0) * q
    extended = [list(g) for g in groups]
    leftover: list[int] = []
    for i in outside:
        hits = []
        for gi, g in enumerate(groups):
            count = sum(1 for j in g if pg.neighbor[i, j])
            if count >= attach_cut:
                hits.append(gi)
        if len(hits) > 1:
            raise NotAClique(
                f"part {i} attaches to {len(hits)} distinct clusters; "
                "cluster uniqueness fails for these parameters",
                witness=(i, tuple(hits)),
            )
        if hits:
            extended[hits[0]].append(i)
        else:
            leftover.append(i)
    extended_groups = tuple(tuple(sorted(g)) for g in extended)
    in_group = {}
    for gi, g in enumerate(extended_groups):
        for p in g:
            in_group[p] = gi
    bad: list[tuple[int, int]] = []
    for i in range(1, q + 1):
        for j in range(i + 1, q + 1):
            if not pg.neighbor[i, j]:
                continue
            gi, gj = in_group.get(i), in_group.get(j)
            if gi is not None and gj is not None and gi != gj:
                bad.append((i, j))
    if len(bad) > 3.0 * epsilon ** (1.0 / 12.0) * q * q:
        raise PostconditionFailure("bad pair count exceeds its bound")
    for i in leftover:
        degree = int(pg.neighbor[i, 1:].sum())
        if degree > 2.0 * epsilon ** (1.0 / 12.0) * q:
            raise PostconditionFailure(
                f"leftover part {i} has too many neighbors ({degree})"
            )
    return CliqueStructure(
        families=family,
        part_groups=tuple(groups),
        extended_groups=extended_groups,
        leftover_parts=tuple(leftover),
        bad_pairs=tuple(bad),
    )


def _shortest_gap_triple(adj: np.ndarray, members: list[int], a: int, b: int
                         ) -> tuple[int, int, int]:
    """First triple u ~ v ~ w with u, w not linked along a shortest a-b path."""
    prev = {a: None}
    queue = [a]
    while queue:
        nxt = []
        for u in queue:
            for v in members:
                if adj[u, v] and v not in prev:
                    prev[v] = u
                    nxt.append(v)
        if b in prev:
            break
        queue = nxt
    path = []
    cur = b
    while cur is not None:
        path.append(cur)
        cur = prev[cur]
    path.reverse()
    return (path[0], path[1], path[2])


def clique_repair(graph: WeightedGraph, partition: PartitionResult,
                  structure: CliqueStructure, epsilon: float, m: int
                  ) -> tuple[WeightedGraph, ModificationLog]:
    """Apply the five staged edits that leave a disjoint union of cliques.

    Stages: drop edges at the exceptional part, complete every part
    internally, complete each extended group across its parts, cut edges
    between distinct groups, and clear all edges at leftover parts.  The
    result is asserted to be exactly the group cliques plus isolated
    vertices, and every non-singleton clique must carry at least
    (1/2) epsilon^(1/4) of the graph mass.
    """
    n = graph.n
    index = {v: i for i, v in enumerate(graph.vertices)}
    part_of = np.full(n, -1, dtype=int)
    for pi, part in enumerate(partition.parts):
        for v in part:
            part_of[index[v]] = pi
    if (part_of < 0).any():
        missing = graph.vertices[int(np.nonzero(part_of < 0)[0][0])]
        raise PostconditionFailure(f"vertex {missing!r} missing from partition")
    group_of_part = np.full(len(partition.parts), -1, dtype=int)
    for gi, g in enumerate(structure.extended_groups):
        for p in g:
            group_of_part[p] = gi
    leftover_part = np.zeros(len(partition.parts), dtype=bool)
    for p in structure.leftover_parts:
        leftover_part[p] = True

    part_v = part_of
    group_v = group_of_part[part_v]
    group_v[part_v == 0] = -1
    leftover_v = leftover_part[part_v]
    in_exceptional = part_v == 0

    adj = graph.adj.copy()
    off_diag = ~np.eye(n, dtype=bool)
    masks: list[np.ndarray] = []

    touch_v0 = in_exceptional[:, None] | in_exceptional[None, :]
    m1 = adj & touch_v0
    adj &= ~m1
    masks.append(m1)

    same_part = (part_v[:, None] == part_v[None, :]) & (part_v[:, None] >= 1)
    m2 = same_part & off_diag & ~adj
    adj |= m2
    masks.append(m2)

    same_group = (
        (group_v[:, None] == group_v[None, :])
        & (group_v[:, None] >= 0)
        & (part_v[:, None] != part_v[None, :])
    )
    m3 = same_group & ~adj
    adj |= m3
    masks.append(m3)

    cross_group = (
        (group_v[:, None] >= 0)
        & (group_v[None, :] >= 0)
        & (group_v[:, None] != group_v[None, :])
    )
    m4 = cross_group & adj
    adj &= ~m4
    masks.append(m4)

    touch_leftover = leftover_v[:, None] | leftover_v[None, :]
    m5 = touch_leftover & adj
    adj &= ~m5
    masks.append(m5)

    expected = (
        (group_v[:, None] == group_v[None, :])
        & (group_v[:, None] >= 0)
        & off_diag
    )
    if not np.array_equal(adj, expected):
        raise PostconditionFailure("repair did not produce the group cliques")

    total_mass = graph.total_mass()
    mass_floor = 0.5 * epsilon ** 0.25 * total_mass
    for gi, g in enumerate(structure.extended_groups):
        members = np.nonzero(group_v == gi)[0]
        if len(members) >= 2:
            gmass = float(graph.mass[members].sum())
            if gmass < mass_floor:
                raise PostconditionFailure(
                    f"clique {gi} mass {gmass!r} below floor {mass_floor!r}"
                )

    mass = graph.mass
    stages: dict[str, tuple[tuple[str, str], ...]] = {}
    stage_measures: dict[str, float] = {}
    union = np.zeros((n, n), dtype=bool)
    for name, mk in zip(STAGE_NAMES, masks):
        pairs = []
        for i, j in zip(*np.nonzero(np.triu(mk, 1))):
            u, v = graph.vertices[int(i)], graph.vertices[int(j)]
            pairs.append((u, v))
            pairs.append((v, u))
        stages[name] = tuple(pairs)
        stage_measures[name] = float(mass @ mk @ mass)
        union |= mk
    log = ModificationLog(
        stages=stages,
        stage_measures=stage_measures,
        total_measure=float(mass @ union @ mass),
    )
    repaired = WeightedGraph(vertices=graph.vertices, mass=graph.mass, adj=adj)
    return repaired, log


@dataclass(frozen=True)
class CliqueCheck:
    cliques: tuple[tuple[str, ...], ...]
    witness: tuple[str, str] | None

    @property
    def ok(self) -> bool:
        return self.witness is None


def verify_cliques(graph: WeightedGraph) -> CliqueCheck:
    """Connected components with a completeness check.

    Returns the components and, when some component is not complete, the
    first non-adjacent pair inside one as a witness.
    """
    n = graph.n
    seen = np.zeros(n, dtype=bool)
    comps: list[list[int]] = []
    for s in range(n):
        if seen[s]:
            continue
        stack = [s]
        seen[s] = True
        members = []
        while stack:
            u = stack.pop()
            members.append(u)
            for v in np.nonzero(graph.adj[u])[0]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        comps.append(sorted(members))
    witness = None
    for members in comps:
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                if not graph.adj[members[ai], members[bi]]:
                    witness = (
                        graph.vertices[members[ai]],
                        graph.vertices[members[bi]],
                    )
                    break
            if witness:
                break
        if witness:
            break
    return CliqueCheck(
        cliques=tuple(tuple(graph.vertices[i] for i in c) for c in comps),
        witness=witness,
    )
