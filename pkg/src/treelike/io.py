"""File formats and exports.

JSON numbers are written with 17 significant digits so binary floats
round-trip exactly and reports are byte-identical across runs.  Undefined
densities serialize as null.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .core import CompatibleTree, SimilaritySpace, WeightedGraph, validate_tree
from .errors import IOFailure
from .regularity import PartitionResult


def _format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isnan(v):
        return "null"
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    if v == int(v) and abs(v) < 1e16:
        return f"{v:.1f}"
    return f"{v:.17g}"


def dump_json(value, indent: int = 0) -> str:
    """Serialize dicts/lists/strings/numbers with stable float formatting."""
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = [
            f"{inner}{json.dumps(str(k))}: {dump_json(v, indent + 2)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        seq = list(value)
        if not seq:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in seq)
        if flat:
            return "[" + ", ".join(dump_json(v) for v in seq) + "]"
        rows = [f"{inner}{dump_json(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    if isinstance(value, np.ndarray):
        return dump_json(value.tolist(), indent)
    if value is None:
        return "null"
    if isinstance(value, str):
        return json.dumps(value)
    return _format_number(value)


def write_json(path, value) -> None:
    Path(path).write_text(dump_json(value) + "\n")


def read_json(path):
    p = Path(path)
    if not p.exists():
        raise IOFailure(f"no such file: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise IOFailure(f"cannot parse {p}: {exc}") from exc


# ---------------------------------------------------------------------------
# similarity spaces and metrics


def space_to_dict(space: SimilaritySpace) -> dict:
    return {
        "points": list(space.points),
        "weights": space.weights,
        "b": space.bound,
        "sim": space.sim,
    }


def space_from_dict(data: dict) -> SimilaritySpace:
    try:
        return SimilaritySpace(
            points=tuple(data["points"]),
            weights=np.array(data["weights"], dtype=float),
            sim=np.array(data["sim"], dtype=float),
            bound=float(data.get("b", 1.0)),
        )
    except KeyError as exc:
        raise IOFailure(f"space file missing key {exc}") from exc


def metric_from_dict(data: dict) -> tuple[np.ndarray, list[str], np.ndarray]:
    try:
        dist = np.array(data["dist"], dtype=float)
    except KeyError as exc:
        raise IOFailure(f"metric file missing key {exc}") from exc
    n = len(dist)
    points = [str(p) for p in data.get("points", range(n))]
    weights = np.array(data.get("weights", np.full(n, 1.0 / n)), dtype=float)
    return dist, points, weights


# ---------------------------------------------------------------------------
# graphs


def graph_to_dict(graph: WeightedGraph) -> dict:
    return {
        "vertices": list(graph.vertices),
        "measure": graph.mass,
        "edges": [[u, v] for u, v in graph.edges()],
    }


def graph_from_dict(data: dict) -> WeightedGraph:
    try:
        vertices = [str(v) for v in data["vertices"]]
        mass = np.array(data["measure"], dtype=float)
        edge_list = data["edges"]
    except KeyError as exc:
        raise IOFailure(f"graph file missing key {exc}") from exc
    index = {v: i for i, v in enumerate(vertices)}
    adj = np.zeros((len(vertices), len(vertices)), dtype=bool)
    for u, v in edge_list:
        try:
            i, j = index[str(u)], index[str(v)]
        except KeyError as exc:
            raise IOFailure(f"edge references unknown vertex {exc}") from exc
        adj[i, j] = adj[j, i] = True
    np.fill_diagonal(adj, False)
    return WeightedGraph(vertices=tuple(vertices), mass=mass, adj=adj)


def graph_to_dot(graph: WeightedGraph, part_of: dict[str, int] | None = None
                 ) -> str:
    """DOT export; vertices are colored by part index when given."""
    palette = [
        "lightblue", "lightgreen", "lightsalmon", "plum", "khaki",
        "lightcyan", "lightpink", "palegreen", "wheat", "lavender",
    ]
    lines = ["graph space {"]
    for v in graph.vertices:
        attrs = ""
        if part_of is not None and v in part_of:
            color = palette[part_of[v] % len(palette)]
            attrs = f' [style=filled, fillcolor={color}, label="{v}|{part_of[v]}"]'
        lines.append(f'  "{v}"{attrs};')
    for u, v in graph.edges():
        lines.append(f'  "{u}" -- "{v}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# trees


def tree_to_dict(tree: CompatibleTree) -> dict:
    nodes = []
    for node in sorted(tree.level, key=lambda u: (tree.level[u], u)):
        nodes.append({
            "id": node,
            "parent": tree.parent.get(node),
            "level": tree.level[node],
        })
    return {
        "root": tree.root,
        "nodes": nodes,
        "leaves": dict(sorted(tree.leaf_points.items())),
    }


def tree_from_dict(data: dict) -> CompatibleTree:
    try:
        root = str(data["root"])
        nodes = data["nodes"]
        leaves = data["leaves"]
    except KeyError as exc:
        raise IOFailure(f"tree file missing key {exc}") from exc
    parent: dict[str, str] = {}
    level: dict[str, int] = {}
    for rec in nodes:
        node = str(rec["id"])
        level[node] = int(rec["level"])
        if rec.get("parent") is not None:
            parent[node] = str(rec["parent"])
    tree = CompatibleTree(
        root=root,
        parent=parent,
        level=level,
        leaf_points={str(k): str(v) for k, v in leaves.items()},
    )
    validate_tree(tree)
    return tree


def tree_to_newick(tree: CompatibleTree) -> str:
    """Newick string with branch length 1 on every edge."""

    def render(node: str) -> str:
        kids = tree.children(node)
        if not kids:
            label = tree.leaf_points.get(node, node)
            return f"{_escape_newick(label)}:1"
        inner = ",".join(render(k) for k in sorted(kids))
        if node == tree.root:
            return f"({inner})root"
        return f"({inner}):1"

    return render(tree.root) + ";"


def _escape_newick(label: str) -> str:
    if any(c in label for c in "(),:;' \t"):
        return "'" + label.replace("'", "''") + "'"
    return label


# ---------------------------------------------------------------------------
# partitions


def partition_to_dict(result: PartitionResult) -> dict:
    q = result.q
    densities = [
        [None if math.isnan(result.densities[i, j]) else result.densities[i, j]
         for j in range(q + 1)]
        for i in range(q + 1)
    ]
    flags = [
        [bool(result.regular_flags[i, j]) for j in range(q + 1)]
        for i in range(q + 1)
    ]
    return {
        "parts": [list(p) for p in result.parts],
        "exceptional_index": result.exceptional_index,
        "densities": densities,
        "flags": flags,
        "params": dict(result.params),
    }
