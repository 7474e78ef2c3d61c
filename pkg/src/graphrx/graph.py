"""Attributed directed multigraphs and their packed (batched) form.

Attributes live in three tables (node, edge, graph). Node and edge tables
hold numpy arrays whose first extent matches the entity count; every
structural operation below selects or replicates those rows so they stay
aligned with the surviving entities. Graph-level attributes are copied
verbatim, so a derived value such as a stored node count can go stale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, GraphIndexError, SchemaError
from .tensor import Tensor

LEVELS = ("node", "edge", "graph")


def _frozen(arr) -> np.ndarray:
    if isinstance(arr, Tensor):
        arr = arr.data
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


def _table(attrs: Mapping[str, object] | None) -> Mapping[str, np.ndarray]:
    return MappingProxyType({name: _frozen(v) for name, v in (attrs or {}).items()})


@dataclass(frozen=True)
class AttributeSpec:
    suffix: tuple[int, ...]
    dtype: str
    default: object = 0


@dataclass
class AttributeRegistry:
    """Per-level mapping of attribute name to shape suffix, dtype and default."""

    node: dict[str, AttributeSpec] = field(default_factory=dict)
    edge: dict[str, AttributeSpec] = field(default_factory=dict)
    graph: dict[str, AttributeSpec] = field(default_factory=dict)

    def level(self, level: str) -> dict[str, AttributeSpec]:
        if level not in LEVELS:
            raise SchemaError(f"unknown attribute level {level!r}")
        return getattr(self, level)

    def register(self, level: str, name: str, suffix: Sequence[int] = (), dtype: str = "float32",
                 default: object = 0) -> None:
        table = self.level(level)
        if name in table:
            raise SchemaError(f"duplicate {level} attribute {name!r}")
        table[name] = AttributeSpec(tuple(suffix), np.dtype(dtype).str, default)

    def check(self, g: "Graph") -> None:
        for level in LEVELS:
            table = g.attrs(level)
            for name, spec in self.level(level).items():
                if name not in table:
                    raise SchemaError(f"graph is missing registered {level} attribute {name!r}")
                arr = table[name]
                suffix = arr.shape if level == "graph" else arr.shape[1:]
                if suffix != spec.suffix or arr.dtype.str != spec.dtype:
                    raise SchemaError(
                        f"{level} attribute {name!r} has suffix {suffix}/{arr.dtype} "
                        f"but registry declares {spec.suffix}/{np.dtype(spec.dtype)}")

    def diff(self, other: "AttributeRegistry") -> str | None:
        """Name of the first attribute on which two registries disagree."""
        for level in LEVELS:
            a, b = self.level(level), other.level(level)
            for name in sorted(set(a) | set(b)):
                sa, sb = a.get(name), b.get(name)
                if sa is None or sb is None or sa.suffix != sb.suffix or sa.dtype != sb.dtype:
                    return f"{level}:{name}"
        return None


def registry_of(g: "Graph") -> AttributeRegistry:
    reg = AttributeRegistry()
    for name, arr in g.node_attrs.items():
        reg.node[name] = AttributeSpec(arr.shape[1:], arr.dtype.str)
    for name, arr in g.edge_attrs.items():
        reg.edge[name] = AttributeSpec(arr.shape[1:], arr.dtype.str)
    for name, arr in g.graph_attrs.items():
        reg.graph[name] = AttributeSpec(arr.shape, arr.dtype.str)
    return reg


class Graph:
    """Immutable attributed directed multigraph.

    ``edges`` is an ``(E, 2)`` array of (head, tail); ``relations`` is either
    ``None`` or an ``(E,)`` array of relation indices below ``num_relations``.
    Self-loops and parallel edges are allowed.
    """

    def __init__(self, num_nodes: int, edges=None, relations=None, num_relations: int | None = None,
                 node_attrs=None, edge_attrs=None, graph_attrs=None):
        num_nodes = int(num_nodes)
        if num_nodes < 0:
            raise DimensionError(f"num_nodes must be non-negative, got {num_nodes}")
        e = np.asarray(edges if edges is not None else np.zeros((0, 2)), dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise DimensionError(f"edges must have shape (E, 2), got {e.shape}")
        if e.size:
            bad = (e < 0) | (e >= num_nodes)
            if bad.any():
                i = int(np.argwhere(bad)[0][0])
                raise GraphIndexError(
                    f"edge {i} ({int(e[i, 0])}, {int(e[i, 1])}) has an endpoint outside [0, {num_nodes})")
        if relations is not None:
            relations = np.asarray(relations, dtype=np.int64).reshape(-1)
            if relations.shape[0] != e.shape[0]:
                raise DimensionError(f"{relations.shape[0]} relations for {e.shape[0]} edges")
            if num_relations is None:
                num_relations = int(relations.max()) + 1 if relations.size else 0
            if relations.size and (relations.min() < 0 or relations.max() >= num_relations):
                raise GraphIndexError(f"relation index outside [0, {num_relations})")
            relations = _frozen(relations)
        elif num_relations is not None:
            raise SchemaError("num_relations given without relation indices")
        self.num_nodes = num_nodes
        self.edges = _frozen(e)
        self.relations = relations
        self.num_relations = None if num_relations is None else int(num_relations)
        self.node_attrs = _table(node_attrs)
        self.edge_attrs = _table(edge_attrs)
        self.graph_attrs = _table(graph_attrs)
        for name, arr in self.node_attrs.items():
            if arr.ndim == 0 or arr.shape[0] != num_nodes:
                raise DimensionError(f"node attribute {name!r} has {arr.shape[:1]} rows, expected {num_nodes}")
        for name, arr in self.edge_attrs.items():
            if arr.ndim == 0 or arr.shape[0] != self.num_edges:
                raise DimensionError(
                    f"edge attribute {name!r} has {arr.shape[:1]} rows, expected {self.num_edges}")

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def attrs(self, level: str) -> Mapping[str, np.ndarray]:
        if level not in LEVELS:
            raise SchemaError(f"unknown attribute level {level!r}")
        return getattr(self, f"{level}_attrs")

    @property
    def registry(self) -> AttributeRegistry:
        return registry_of(self)

    def _derive(self, **changes) -> "Graph":
        parts = dict(num_nodes=self.num_nodes, edges=self.edges, relations=self.relations,
                     num_relations=self.num_relations, node_attrs=self.node_attrs,
                     edge_attrs=self.edge_attrs, graph_attrs=self.graph_attrs)
        parts.update(changes)
        if parts["relations"] is None:
            parts["num_relations"] = None
        return type(self)(**parts)

    def with_attr(self, level: str, name: str, value) -> "Graph":
        table = dict(self.attrs(level))
        table[name] = value
        return self._derive(**{f"{level}_attrs": table})

    def register(self, level: str, name: str, suffix: Sequence[int] = (), dtype: str = "float32",
                 default: object = 0) -> "Graph":
        """Add an attribute filled with ``default``."""
        if name in self.attrs(level):
            raise SchemaError(f"duplicate {level} attribute {name!r}")
        rows = {"node": (self.num_nodes,), "edge": (self.num_edges,), "graph": ()}[level]
        return self.with_attr(level, name, np.full(rows + tuple(suffix), default, dtype=dtype))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph) or type(self) is not type(other):
            return NotImplemented
        if (self.num_nodes, self.num_relations) != (other.num_nodes, other.num_relations):
            return False
        if not np.array_equal(self.edges, other.edges):
            return False
        if (self.relations is None) != (other.relations is None):
            return False
        if self.relations is not None and not np.array_equal(self.relations, other.relations):
            return False
        for level in LEVELS:
            a, b = self.attrs(level), other.attrs(level)
            if a.keys() != b.keys():
                return False
            for k in a:
                if a[k].dtype != b[k].dtype or a[k].shape != b[k].shape:
                    return False
                if a[k].tobytes() != b[k].tobytes():
                    return False
        return True

    __hash__ = None

    def __repr__(self) -> str:
        return (f"{type(self).__name__}(num_nodes={self.num_nodes}, num_edges={self.num_edges}, "
                f"node_attrs={sorted(self.node_attrs)}, edge_attrs={sorted(self.edge_attrs)})")

    # structural operations, defined below as functions
    def node_mask(self, keep) -> "Graph":
        return node_mask(self, keep)

    def edge_mask(self, keep) -> "Graph":
        return edge_mask(self, keep)

    def subgraph(self, nodes) -> "Graph":
        return subgraph(self, nodes)

    def connected_components(self) -> tuple[np.ndarray, int]:
        return connected_components(self)

    def split_components(self) -> "PackedGraph":
        return split_components(self)

    def degrees(self, direction: str = "both") -> np.ndarray:
        return degrees(self, direction)

    def to_undirected(self) -> "Graph":
        return to_undirected(self)


def build(num_nodes: int, edges: Iterable[Sequence[int]] = (), attrs=None, num_relations: int | None = None,
          cls: type[Graph] = Graph) -> Graph:
    """Validated construction from plain Python values.

    ``edges`` holds ``(head, tail)`` or ``(head, tail, relation)`` tuples.
    ``attrs`` is either ``{level: {name: array}}`` or a sequence of
    ``(level, name, array)`` triples; a repeated name in one level is an error.
    """
    edges = [tuple(e) for e in edges]
    arities = {len(e) for e in edges}
    if arities - {2, 3} or len(arities) > 1:
        raise DimensionError("edges must all be (head, tail) or all (head, tail, relation)")
    if edges and arities == {3}:
        pairs = [e[:2] for e in edges]
        relations = [e[2] for e in edges]
    else:
        pairs = edges
        relations = None
    tables: dict[str, dict[str, object]] = {level: {} for level in LEVELS}
    if attrs:
        items = attrs.items() if isinstance(attrs, Mapping) else None
        if items is not None:
            for level, table in items:
                if level not in LEVELS:
                    raise SchemaError(f"unknown attribute level {level!r}")
                tables[level].update(table)
        else:
            for level, name, value in attrs:
                if level not in LEVELS:
                    raise SchemaError(f"unknown attribute level {level!r}")
                if name in tables[level]:
                    raise SchemaError(f"duplicate {level} attribute {name!r}")
                tables[level][name] = value
    if relations is None and num_relations is not None:
        relations = np.zeros(0, dtype=np.int64) if not pairs else None
    return cls(num_nodes, np.array(pairs, dtype=np.int64).reshape(-1, 2), relations, num_relations,
               tables["node"], tables["edge"], tables["graph"])


def _bool_mask(keep, n: int, what: str) -> np.ndarray:
    m = np.asarray(keep)
    if m.ndim != 1 or m.shape[0] != n:
        raise DimensionError(f"{what} mask has length {m.shape[0] if m.ndim else 0}, expected {n}")
    return m.astype(bool)


def _select_edges(g: Graph, eidx: np.ndarray, new_edges: np.ndarray, **extra) -> Graph:
    return g._derive(
        edges=new_edges,
        relations=None if g.relations is None else g.relations[eidx],
        edge_attrs={k: v[eidx] for k, v in g.edge_attrs.items()},
        **extra,
    )


def node_mask(g: Graph, keep) -> Graph:
    """Keep the masked nodes, renumbered by ascending old index.

    Edges touching a dropped node are removed silently.
    """
    m = _bool_mask(keep, g.num_nodes, "node")
    new_index = np.cumsum(m) - 1
    e = g.edges
    eidx = np.flatnonzero(m[e[:, 0]] & m[e[:, 1]]) if g.num_edges else np.zeros(0, dtype=np.int64)
    return _select_edges(
        g, eidx, new_index[e[eidx]],
        num_nodes=int(m.sum()),
        node_attrs={k: v[m] for k, v in g.node_attrs.items()},
    )


def edge_mask(g: Graph, keep) -> Graph:
    m = _bool_mask(keep, g.num_edges, "edge")
    eidx = np.flatnonzero(m)
    return _select_edges(g, eidx, g.edges[eidx])


def subgraph(g: Graph, nodes) -> Graph:
    """Induced subgraph with nodes renumbered in the given order."""
    order = np.asarray(nodes, dtype=np.int64).reshape(-1)
    if order.size:
        bad = order[(order < 0) | (order >= g.num_nodes)]
        if bad.size:
            raise GraphIndexError(f"node {int(bad[0])} out of range for {g.num_nodes} nodes")
        if np.unique(order).size != order.size:
            raise GraphIndexError("subgraph node list contains duplicates")
    new_index = np.full(g.num_nodes, -1, dtype=np.int64)
    new_index[order] = np.arange(order.size)
    e = g.edges
    mapped = new_index[e] if g.num_edges else e
    eidx = np.flatnonzero((mapped >= 0).all(axis=1)) if g.num_edges else np.zeros(0, dtype=np.int64)
    return _select_edges(
        g, eidx, mapped[eidx],
        num_nodes=int(order.size),
        node_attrs={k: v[order] for k, v in g.node_attrs.items()},
    )


def connected_components(g: Graph) -> tuple[np.ndarray, int]:
    """Weakly connected components.

    Ids run from 0 and are assigned in order of each component's smallest
    node index.
    """
    parent = list(range(g.num_nodes))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for h, t in g.edges.tolist():
        rh, rt = find(h), find(t)
        if rh != rt:
            if rh < rt:
                parent[rt] = rh
            else:
                parent[rh] = rt
    ids = np.empty(g.num_nodes, dtype=np.int64)
    label: dict[int, int] = {}
    for v in range(g.num_nodes):
        root = find(v)
        if root not in label:
            label[root] = len(label)
        ids[v] = label[root]
    return ids, len(label)


def split_components(g: Graph) -> "PackedGraph":
    ids, count = connected_components(g)
    members = [node_mask(g, ids == c) for c in range(count)]
    return pack(members, registry=registry_of(g), member_type=type(g),
                num_relations=g.num_relations, relational=g.relations is not None)


def degrees(g: Graph, direction: str = "both") -> np.ndarray:
    """Per-node edge counts. A self-loop counts once in, once out, twice for both."""
    n = g.num_nodes
    out_deg = np.bincount(g.edges[:, 0], minlength=n).astype(np.int64)
    in_deg = np.bincount(g.edges[:, 1], minlength=n).astype(np.int64)
    if direction == "in":
        return in_deg
    if direction == "out":
        return out_deg
    if direction == "both":
        return in_deg + out_deg
    raise ValueError(f"direction must be in/out/both, got {direction!r}")


def to_undirected(g: Graph) -> Graph:
    """Append the reverse of every non-loop edge after the original edges."""
    e = g.edges
    rev = np.flatnonzero(e[:, 0] != e[:, 1])
    eidx = np.concatenate([np.arange(g.num_edges), rev])
    new_edges = np.concatenate([e, e[rev][:, ::-1]]).reshape(-1, 2)
    return _select_edges(g, eidx, new_edges)


# ---------------------------------------------------------------- packed graphs

class PackedGraph:
    """Several graphs concatenated into one structure.

    Edges use global node indices; ``node_offsets``/``edge_offsets`` have one
    more entry than there are members. Graph attributes are stacked along a
    leading batch axis.
    """

    def __init__(self, member_type: type[Graph], registry: AttributeRegistry, node_counts, edge_counts,
                 edges, relations, num_relations, node_attrs, edge_attrs, graph_attrs):
        self.member_type = member_type
        self.registry = registry
        self.node_counts = _frozen(np.asarray(node_counts, dtype=np.int64).reshape(-1))
        self.edge_counts = _frozen(np.asarray(edge_counts, dtype=np.int64).reshape(-1))
        self.node_offsets = _frozen(np.concatenate([[0], np.cumsum(self.node_counts)]).astype(np.int64))
        self.edge_offsets = _frozen(np.concatenate([[0], np.cumsum(self.edge_counts)]).astype(np.int64))
        self.edges = _frozen(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.relations = None if relations is None else _frozen(np.asarray(relations, dtype=np.int64))
        self.num_relations = num_relations
        self.node_attrs = _table(node_attrs)
        self.edge_attrs = _table(edge_attrs)
        self.graph_attrs = _table(graph_attrs)

    @property
    def batch_size(self) -> int:
        return int(self.node_counts.shape[0])

    def __len__(self) -> int:
        return self.batch_size

    @property
    def num_nodes(self) -> int:
        return int(self.node_offsets[-1])

    @property
    def num_edges(self) -> int:
        return int(self.edge_offsets[-1])

    def edge_graph_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.batch_size, dtype=np.int64), self.edge_counts)

    def merged(self) -> Graph:
        """The whole batch as one disconnected Graph (graph attributes dropped)."""
        return Graph(self.num_nodes, self.edges, self.relations, self.num_relations,
                     self.node_attrs, self.edge_attrs)

    def __getitem__(self, i: int) -> Graph:
        return unpack(select(self, [i]))[0]

    def __repr__(self) -> str:
        return (f"PackedGraph(batch_size={self.batch_size}, num_nodes={self.num_nodes}, "
                f"num_edges={self.num_edges}, member_type={self.member_type.__name__})")

    def unpack(self) -> list[Graph]:
        return unpack(self)

    def repeat(self, k: int) -> "PackedGraph":
        return repeat(self, k)

    def select(self, which) -> "PackedGraph":
        return select(self, which)

    def node_graph_ids(self) -> np.ndarray:
        return node_graph_ids(self)

    def node_mask(self, keep) -> "PackedGraph":
        return packed_node_mask(self, keep)

    def edge_mask(self, keep) -> "PackedGraph":
        return packed_edge_mask(self, keep)


def pack(gs: Sequence[Graph], registry: AttributeRegistry | None = None, member_type: type[Graph] | None = None,
         num_relations: int | None = None, relational: bool | None = None) -> PackedGraph:
    """Concatenate graphs, translating edges to global node indices.

    The optional arguments only matter for an empty sequence, where they fix
    the schema of the (memberless) result.
    """
    gs = list(gs)
    if gs:
        first = gs[0]
        registry = registry_of(first)
        member_type = type(first)
        relational = first.relations is not None
        num_relations = first.num_relations
        for i, g in enumerate(gs[1:], start=1):
            if type(g) is not member_type:
                raise SchemaError(f"member {i} is a {type(g).__name__}, expected {member_type.__name__}")
            differing = registry.diff(registry_of(g))
            if differing is not None:
                raise SchemaError(f"member {i} disagrees with member 0 on attribute {differing}")
            if (g.relations is not None) != relational or g.num_relations != num_relations:
                raise SchemaError(f"member {i} has a different relation vocabulary")
    registry = registry or AttributeRegistry()
    member_type = member_type or Graph
    node_counts = np.array([g.num_nodes for g in gs], dtype=np.int64)
    edge_counts = np.array([g.num_edges for g in gs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(node_counts)])[:-1] if gs else np.zeros(0, dtype=np.int64)
    edges = (np.concatenate([g.edges + off for g, off in zip(gs, offsets)])
             if gs else np.zeros((0, 2), dtype=np.int64))
    relations = None
    if relational:
        relations = (np.concatenate([g.relations for g in gs]) if gs else np.zeros(0, dtype=np.int64))

    def cat(level: str, name: str, stack: bool = False) -> np.ndarray:
        spec = registry.level(level)[name]
        if not gs:
            return np.zeros((0,) + spec.suffix, dtype=spec.dtype)
        parts = [g.attrs(level)[name] for g in gs]
        return np.stack(parts) if stack else np.concatenate(parts)

    return PackedGraph(
        member_type, registry, node_counts, edge_counts, edges, relations, num_relations,
        {k: cat("node", k) for k in registry.node},
        {k: cat("edge", k) for k in registry.edge},
        {k: cat("graph", k, stack=True) for k in registry.graph},
    )


def unpack(pg: PackedGraph) -> list[Graph]:
    out = []
    for i in range(pg.batch_size):
        n0, n1 = int(pg.node_offsets[i]), int(pg.node_offsets[i + 1])
        e0, e1 = int(pg.edge_offsets[i]), int(pg.edge_offsets[i + 1])
        out.append(pg.member_type(
            n1 - n0,
            pg.edges[e0:e1] - n0,
            None if pg.relations is None else pg.relations[e0:e1],
            pg.num_relations if pg.relations is not None else None,
            {k: v[n0:n1] for k, v in pg.node_attrs.items()},
            {k: v[e0:e1] for k, v in pg.edge_attrs.items()},
            {k: v[i] for k, v in pg.graph_attrs.items()},
        ))
    return out


def _ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    if counts.sum() == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([np.arange(s, s + c, dtype=np.int64) for s, c in zip(starts, counts)])


def select(pg: PackedGraph, which) -> PackedGraph:
    """New pack of the chosen members, in the given order (repeats allowed)."""
    idx = np.asarray(which, dtype=np.int64).reshape(-1)
    if idx.size:
        bad = idx[(idx < 0) | (idx >= pg.batch_size)]
        if bad.size:
            raise GraphIndexError(f"graph index {int(bad[0])} out of range for batch of {pg.batch_size}")
    node_counts = pg.node_counts[idx]
    edge_counts = pg.edge_counts[idx]
    node_rows = _ranges(pg.node_offsets[idx], node_counts)
    edge_rows = _ranges(pg.edge_offsets[idx], edge_counts)
    new_offsets = np.concatenate([[0], np.cumsum(node_counts)])[:-1]
    shift = np.repeat(new_offsets - pg.node_offsets[idx], edge_counts)
    edges = pg.edges[edge_rows] + shift[:, None] if edge_rows.size else np.zeros((0, 2), dtype=np.int64)
    return PackedGraph(
        pg.member_type, pg.registry, node_counts, edge_counts, edges,
        None if pg.relations is None else pg.relations[edge_rows], pg.num_relations,
        {k: v[node_rows] for k, v in pg.node_attrs.items()},
        {k: v[edge_rows] for k, v in pg.edge_attrs.items()},
        {k: v[idx] for k, v in pg.graph_attrs.items()},
    )


def repeat(pg: PackedGraph, k: int) -> PackedGraph:
    """Whole-batch repetition: [a, b] repeated twice is [a, b, a, b]."""
    if k < 0:
        raise ValueError(f"repeat count must be non-negative, got {k}")
    return select(pg, np.tile(np.arange(pg.batch_size), k))


def node_graph_ids(pg: PackedGraph) -> np.ndarray:
    return np.repeat(np.arange(pg.batch_size, dtype=np.int64), pg.node_counts)


def packed_node_mask(pg: PackedGraph, keep) -> PackedGraph:
    """Batched node_mask; every member survives, possibly with zero nodes."""
    m = _bool_mask(keep, pg.num_nodes, "node")
    owner = node_graph_ids(pg)
    new_index = np.cumsum(m) - 1
    e = pg.edges
    eidx = np.flatnonzero(m[e[:, 0]] & m[e[:, 1]]) if pg.num_edges else np.zeros(0, dtype=np.int64)
    edge_owner = pg.edge_graph_ids()[eidx]
    return PackedGraph(
        pg.member_type, pg.registry,
        np.bincount(owner[m], minlength=pg.batch_size),
        np.bincount(edge_owner, minlength=pg.batch_size),
        new_index[e[eidx]], None if pg.relations is None else pg.relations[eidx], pg.num_relations,
        {k: v[m] for k, v in pg.node_attrs.items()},
        {k: v[eidx] for k, v in pg.edge_attrs.items()},
        pg.graph_attrs,
    )


def packed_edge_mask(pg: PackedGraph, keep) -> PackedGraph:
    m = _bool_mask(keep, pg.num_edges, "edge")
    eidx = np.flatnonzero(m)
    return PackedGraph(
        pg.member_type, pg.registry, pg.node_counts,
        np.bincount(pg.edge_graph_ids()[eidx], minlength=pg.batch_size),
        pg.edges[eidx], None if pg.relations is None else pg.relations[eidx], pg.num_relations,
        pg.node_attrs,
        {k: v[eidx] for k, v in pg.edge_attrs.items()},
        pg.graph_attrs,
    )


# ---------------------------------------------------------------- edge-list text format

def parse_edge_list(lines: Iterable[str], num_nodes: int | None = None) -> Graph:
    """Read ``head<TAB>tail[<TAB>relation]`` lines; ``#`` starts a comment."""
    edges = []
    declared = None
    for lineno, raw in enumerate(lines, start=1):
        head = raw.strip().split()
        if len(head) == 3 and head[:2] == ["#", "nodes"] and head[2].isdigit():
            declared = int(head[2])
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise DimensionError(f"line {lineno}: expected 2 or 3 tab-separated fields, got {len(fields)}")
        try:
            edges.append(tuple(int(f) for f in fields))
        except ValueError as exc:
            raise DimensionError(f"line {lineno}: non-integer field in {line!r}") from exc
    if num_nodes is None:
        num_nodes = declared
    if num_nodes is None:
        num_nodes = max((max(e[0], e[1]) for e in edges), default=-1) + 1
    return build(num_nodes, edges)


def format_edge_list(g: Graph) -> str:
    lines = [f"# nodes {g.num_nodes}"]
    for i, (h, t) in enumerate(g.edges.tolist()):
        if g.relations is None:
            lines.append(f"{h}\t{t}")
        else:
            lines.append(f"{h}\t{t}\t{int(g.relations[i])}")
    return "\n".join(lines) + "\n"
