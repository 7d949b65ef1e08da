"""Text and JSON serialization of hypergraphs, families, and matchings.

Text format, one file per object. First line is a header ``k n m`` for a
single graph (m = edge count) or ``k n c`` for a family (c = color count).
Each edge line holds k space-separated 1-indexed vertices; family edge
lines carry a 1-indexed ``color:`` prefix. Blank lines and ``#`` comments
are ignored. The JSON mirror carries the same fields.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .core import GraphFamily, KGraph, Matching, PartiteGraph

Loadable = Union[KGraph, GraphFamily]


def format_kgraph(h: KGraph) -> str:
    lines = [f"{h.k} {h.n} {len(h.edges)}"]
    for e in h.edges:
        lines.append(" ".join(str(v + 1) for v in e))
    return "\n".join(lines) + "\n"


def format_family(fam: GraphFamily) -> str:
    lines = [f"{fam.k} {fam.n} {len(fam.members)}"]
    for i, g in enumerate(fam.members):
        for e in g.edges:
            lines.append(f"{i + 1}: " + " ".join(str(v + 1) for v in e))
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> Loadable:
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise ValueError("empty hypergraph file")
    head = rows[0].split()
    if len(head) != 3:
        raise ValueError(f"bad header {rows[0]!r}, expected 'k n m' or 'k n c'")
    k, n, count = (int(x) for x in head)
    body = rows[1:]
    family = any(":" in line for line in body)
    if not family:
        edges = [tuple(int(v) - 1 for v in line.split()) for line in body]
        if len(edges) != count:
            raise ValueError(f"header promises {count} edges, found {len(edges)}")
        return KGraph(n, k, edges)
    per_color: list = [[] for _ in range(count)]
    for line in body:
        prefix, rest = line.split(":", 1)
        c = int(prefix) - 1
        if not 0 <= c < count:
            raise ValueError(f"color {prefix} outside 1..{count}")
        per_color[c].append(tuple(int(v) - 1 for v in rest.split()))
    return GraphFamily([KGraph(n, k, es) for es in per_color])


def to_json_obj(obj: Loadable) -> dict:
    if isinstance(obj, KGraph):
        return {
            "kind": "kgraph",
            "k": obj.k,
            "n": obj.n,
            "edges": [[v + 1 for v in e] for e in obj.edges],
        }
    return {
        "kind": "family",
        "k": obj.k,
        "n": obj.n,
        "colors": len(obj.members),
        "edges": [
            {"color": i + 1, "verts": [v + 1 for v in e]}
            for i, g in enumerate(obj.members)
            for e in g.edges
        ],
    }


def from_json_obj(data: dict) -> Loadable:
    k, n = data["k"], data["n"]
    if data.get("kind") == "kgraph":
        return KGraph(n, k, [tuple(v - 1 for v in e) for e in data["edges"]])
    count = data["colors"]
    per_color: list = [[] for _ in range(count)]
    for rec in data["edges"]:
        per_color[rec["color"] - 1].append(tuple(v - 1 for v in rec["verts"]))
    return GraphFamily([KGraph(n, k, es) for es in per_color])


def dump(obj: Loadable, path: Union[str, Path]) -> None:
    """Write text or JSON depending on the file suffix."""
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(to_json_obj(obj), indent=1, sort_keys=True) + "\n")
    elif isinstance(obj, KGraph):
        path.write_text(format_kgraph(obj))
    else:
        path.write_text(format_family(obj))


def load(path: Union[str, Path]) -> Loadable:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return from_json_obj(json.loads(text))
    return parse_text(text)


def load_family(path: Union[str, Path]) -> GraphFamily:
    obj = load(path)
    if isinstance(obj, KGraph):
        raise ValueError(f"{path} holds a single graph, expected a family")
    return obj


def family_of(pg: PartiteGraph) -> GraphFamily:
    """View a balanced partite graph as the family of its color neighborhoods."""
    if not pg.balanced:
        raise ValueError("only balanced partite graphs round-trip through families")
    return GraphFamily([pg.neighborhood(c) for c in range(pg.q)])


def format_matching(m: Matching) -> str:
    lines = [f"matching {len(m.edges)}"]
    for c, vs in m.edges:
        lines.append(f"{c + 1}: " + " ".join(str(v + 1) for v in vs))
    return "\n".join(lines) + "\n"


def parse_matching(text: str) -> Matching:
    rows = [r.split("#", 1)[0].strip() for r in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows or not rows[0].startswith("matching"):
        raise ValueError("not a matching file")
    edges = []
    for line in rows[1:]:
        prefix, rest = line.split(":", 1)
        edges.append((int(prefix) - 1, tuple(int(v) - 1 for v in rest.split())))
    return Matching(tuple(edges))
