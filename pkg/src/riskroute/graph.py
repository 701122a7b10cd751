"""Validated DAG model, edge neighborhoods and graph file I/O.

Graphs are simple directed acyclic graphs whose edges carry a failure
probability ("risk").  Vertex and edge ids are opaque strings; wherever a
deterministic tie-break is needed, edge ids are compared lexicographically.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping


class GraphError(ValueError):
    """Raised for malformed or invalid graph descriptions."""


class MissingRiskError(GraphError):
    """Raised when a numeric operation meets an edge without a risk."""


@dataclass(frozen=True, order=True)
class Edge:
    id: str
    tail: str
    head: str
    risk: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    """Structural oddities that are permitted but worth knowing about."""

    unreachable_from_source: tuple[str, ...] = ()
    cannot_reach_destination: tuple[str, ...] = ()
    dead_ends: tuple[str, ...] = ()
    edges_out_of_destination: tuple[str, ...] = ()

    @property
    def clean(self) -> bool:
        return not (
            self.unreachable_from_source
            or self.cannot_reach_destination
            or self.dead_ends
            or self.edges_out_of_destination
        )


@dataclass(frozen=True, eq=False)
class Dag:
    """An immutable, validated DAG.  Build instances with :func:`validate_dag`."""

    vertices: frozenset[str]
    edges: tuple[Edge, ...]
    source: str
    destination: str
    topological_order: tuple[str, ...] = field(repr=False)
    report: ValidationReport = field(repr=False)
    _edge_map: dict[str, Edge] = field(repr=False)
    _out: dict[str, tuple[str, ...]] = field(repr=False)
    _neighbors: dict[str, tuple[str, ...]] = field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.source == other.source
            and self.destination == other.destination
            and self._edge_map == other._edge_map
        )

    def __hash__(self) -> int:
        return hash((self.vertices, self.source, self.destination, tuple(sorted(self.edges))))

    def __len__(self) -> int:
        return len(self.edges)

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge_map[edge_id]
        except KeyError:
            raise KeyError(f"unknown edge id {edge_id!r}") from None

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    def out_edges(self, vertex: str) -> tuple[str, ...]:
        """Out-edges of ``vertex`` in edge-id order."""
        if vertex not in self.vertices:
            raise KeyError(f"unknown vertex {vertex!r}")
        return self._out.get(vertex, ())

    def is_terminal(self, edge_id: str) -> bool:
        return self.edge(edge_id).head == self.destination

    def has_numeric_risks(self) -> bool:
        return all(e.risk is not None for e in self.edges)

    def risk(self, edge_id: str) -> float:
        r = self.edge(edge_id).risk
        if r is None:
            raise MissingRiskError(f"edge {edge_id!r} has no numeric risk")
        return r

    def require_risks(self) -> None:
        for e in self.edges:
            if e.risk is None:
                raise MissingRiskError(f"edge {e.id!r} has no numeric risk")

    def with_uniform_risk(self, alpha: float) -> Dag:
        """Copy of this graph with every edge risk set to ``alpha``."""
        _check_risk(alpha, "uniform_risk")
        return self.with_risks({e.id: float(alpha) for e in self.edges})

    def with_risks(self, risks: Mapping[str, float]) -> Dag:
        edges = [replace(e, risk=float(risks[e.id])) if e.id in risks else e for e in self.edges]
        return validate_dag(edges, self.source, self.destination, vertices=self.vertices)

    def without_edges(self, edge_ids: Iterable[str]) -> Dag:
        drop = set(edge_ids)
        edges = [e for e in self.edges if e.id not in drop]
        return validate_dag(edges, self.source, self.destination, vertices=self.vertices)


def _check_risk(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise GraphError(f"{where}: risk must be a number, got {value!r}")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise GraphError(f"{where}: risk {value!r} outside [0, 1]")
    return value


def _coerce_edge(raw: Edge | Mapping[str, Any] | tuple, index: int) -> Edge:
    if isinstance(raw, Edge):
        e = raw
    elif isinstance(raw, Mapping):
        for key in ("tail", "head"):
            if key not in raw:
                raise GraphError(f"edge #{index}: missing field {key!r}")
        tail, head = str(raw["tail"]), str(raw["head"])
        e = Edge(str(raw.get("id", f"{tail}->{head}")), tail, head, raw.get("risk"))
    else:
        tail, head, *rest = raw
        risk = rest[0] if rest else None
        e = Edge(f"{tail}->{head}", str(tail), str(head), risk)
    risk = None if e.risk is None else _check_risk(e.risk, f"edge {e.id!r}")
    if e.tail == e.head:
        raise GraphError(f"edge {e.id!r}: self-loop on vertex {e.tail!r}")
    return replace(e, risk=risk)


def _topological_order(vertices: Iterable[str], out: Mapping[str, list[Edge]]) -> list[str]:
    indegree = {v: 0 for v in vertices}
    for edges in out.values():
        for e in edges:
            indegree[e.head] += 1
    ready = [v for v, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for e in out.get(v, ()):
            indegree[e.head] -= 1
            if indegree[e.head] == 0:
                heapq.heappush(ready, e.head)
    if len(order) != len(indegree):
        stuck = sorted(v for v, d in indegree.items() if d > 0)
        raise GraphError(f"graph contains a directed cycle through vertices {stuck}")
    return order


def _reachable(start: str, adjacency: Mapping[str, Iterable[str]]) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adjacency.get(v, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def validate_dag(
    edges: Iterable[Edge | Mapping[str, Any] | tuple],
    source: str,
    destination: str,
    vertices: Iterable[str] = (),
) -> Dag:
    """Validate a raw graph description and return a :class:`Dag`.

    ``edges`` may hold :class:`Edge` objects, mappings with ``id``/``tail``/
    ``head``/``risk`` keys, or ``(tail, head[, risk])`` tuples.  Vertices are
    the edge endpoints plus ``source``, ``destination`` and any extra
    ``vertices`` given.  Raises :class:`GraphError` on cycles, duplicate
    vertex pairs or edge ids, bad risks, or a missing source/destination.
    """
    if source is None or destination is None:
        raise GraphError("source and destination are required")
    source, destination = str(source), str(destination)
    if source == destination:
        raise GraphError(f"source and destination must differ (both {source!r})")

    parsed = [_coerce_edge(raw, k) for k, raw in enumerate(edges)]
    by_id: dict[str, Edge] = {}
    pairs: dict[tuple[str, str], str] = {}
    for e in parsed:
        if e.id in by_id:
            raise GraphError(f"duplicate edge id {e.id!r}")
        if (e.tail, e.head) in pairs:
            raise GraphError(
                f"edges {pairs[(e.tail, e.head)]!r} and {e.id!r} both join "
                f"{e.tail!r} -> {e.head!r}; graph must be simple"
            )
        by_id[e.id] = e
        pairs[(e.tail, e.head)] = e.id

    verts = {str(v) for v in vertices} | {source, destination}
    for e in parsed:
        verts.update((e.tail, e.head))

    ordered = tuple(sorted(parsed, key=lambda e: e.id))
    out: dict[str, list[Edge]] = {}
    for e in ordered:
        out.setdefault(e.tail, []).append(e)
    topo = _topological_order(sorted(verts), out)

    out_ids = {v: tuple(e.id for e in es) for v, es in out.items()}
    neighbors = {
        e.id: () if e.head == destination else out_ids.get(e.head, ()) for e in ordered
    }

    succ = {v: [e.head for e in es] for v, es in out.items()}
    pred: dict[str, list[str]] = {}
    for e in ordered:
        pred.setdefault(e.head, []).append(e.tail)
    from_source = _reachable(source, succ)
    to_dest = _reachable(destination, pred)
    report = ValidationReport(
        unreachable_from_source=tuple(sorted(verts - from_source)),
        cannot_reach_destination=tuple(sorted(verts - to_dest)),
        dead_ends=tuple(sorted(v for v in verts if v != destination and v not in out)),
        edges_out_of_destination=out_ids.get(destination, ()),
    )
    return Dag(
        vertices=frozenset(verts),
        edges=ordered,
        source=source,
        destination=destination,
        topological_order=tuple(topo),
        report=report,
        _edge_map=by_id,
        _out=out_ids,
        _neighbors=neighbors,
    )


def edge_neighbors(dag: Dag, edge_id: str) -> list[str]:
    """Edges a pathfinder may take after ``edge_id``, in edge-id order.

    Empty for terminal edges and for edges into dead ends.
    """
    dag.edge(edge_id)
    return list(dag._neighbors[edge_id])


def reverse_topological_edge_order(dag: Dag) -> list[str]:
    """Edge ids ordered so that every edge follows all of its neighbors."""
    position = {v: k for k, v in enumerate(dag.topological_order)}
    return [e.id for e in sorted(dag.edges, key=lambda e: (-position[e.head], e.id))]


# --- file formats -----------------------------------------------------------


def graph_from_dict(data: Mapping[str, Any], symbolic: bool = False) -> Dag:
    """Build a Dag from the JSON object form.

    Each edge needs a ``risk`` unless ``uniform_risk`` is given (which then
    overrides every edge) or ``symbolic`` is set.
    """
    if not isinstance(data, Mapping):
        raise GraphError("graph JSON must be an object")
    for key in ("edges", "source", "destination"):
        if key not in data:
            raise GraphError(f"graph JSON: missing field {key!r}")
    raw_edges = data["edges"]
    if not isinstance(raw_edges, list):
        raise GraphError("graph JSON: 'edges' must be a list")
    uniform = data.get("uniform_risk")
    if uniform is not None:
        uniform = _check_risk(uniform, "uniform_risk")
    edges = []
    for k, raw in enumerate(raw_edges):
        if not isinstance(raw, Mapping):
            raise GraphError(f"edge #{k}: must be an object")
        raw = dict(raw)
        if uniform is not None:
            raw["risk"] = uniform
        elif raw.get("risk") is None and not symbolic:
            name = raw.get("id", f"#{k}")
            raise GraphError(f"edge {name!r}: missing field 'risk' and no 'uniform_risk' given")
        edges.append(raw)
    return validate_dag(edges, data["source"], data["destination"], data.get("vertices", ()))


def graph_to_dict(dag: Dag) -> dict[str, Any]:
    edges = []
    for e in dag.edges:
        item: dict[str, Any] = {"id": e.id, "tail": e.tail, "head": e.head}
        if e.risk is not None:
            item["risk"] = e.risk
        edges.append(item)
    data: dict[str, Any] = {"edges": edges, "source": dag.source, "destination": dag.destination}
    endpoints = {dag.source, dag.destination} | {v for e in dag.edges for v in (e.tail, e.head)}
    extra = sorted(dag.vertices - endpoints)
    if extra:
        data["vertices"] = extra
    return data


def parse_graph(text: str, symbolic: bool = False) -> Dag:
    """Parse the canonical JSON graph format."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"malformed graph JSON: {exc}") from None
    return graph_from_dict(data, symbolic=symbolic)


def serialize_graph(dag: Dag) -> str:
    return json.dumps(graph_to_dict(dag), indent=2)


_DOT_ID = r'(?:"(?:[^"\\]|\\.)*"|[A-Za-z0-9_.\-]+)'
_DOT_ATTRS = r"(?:\[(?P<attrs>[^\]]*)\])?"
_DOT_EDGE = re.compile(rf"^(?P<tail>{_DOT_ID})\s*->\s*(?P<head>{_DOT_ID})\s*{_DOT_ATTRS}$")
_DOT_GRAPH_ATTR = re.compile(rf"^graph\s*\[(?P<attrs>[^\]]*)\]$")
_DOT_ASSIGN = re.compile(rf"^(?P<key>[A-Za-z_]+)\s*=\s*(?P<value>{_DOT_ID})$")
_DOT_KV = re.compile(rf"(?P<key>[A-Za-z_]+)\s*=\s*(?P<value>{_DOT_ID})")


def _unquote(token: str) -> str:
    if token.startswith('"') and token.endswith('"'):
        return token[1:-1].replace('\\"', '"')
    return token


def parse_dot(text: str, symbolic: bool = False) -> Dag:
    """Read a small DOT subset.

    Supports ``digraph [name] { ... }`` with ``a -> b [risk=0.5, id=e1];``
    edge statements and ``source``/``destination``/``uniform_risk`` given
    either as ``key=value;`` statements or inside ``graph [...]``.  Node
    statements are accepted and ignored apart from declaring the vertex.
    """
    text = re.sub(r"//[^\n]*|#[^\n]*|/\*.*?\*/", "", text, flags=re.S)
    match = re.search(r"digraph\s*[^{]*\{(?P<body>.*)\}", text, flags=re.S)
    if match is None:
        raise GraphError("DOT input must contain 'digraph { ... }'")
    data: dict[str, Any] = {"edges": [], "vertices": []}
    for statement in re.split(r"[;\n]", match.group("body")):
        statement = statement.strip()
        if not statement:
            continue
        if m := _DOT_EDGE.match(statement):
            attrs = {k: _unquote(v) for k, v in _DOT_KV.findall(m.group("attrs") or "")}
            tail, head = _unquote(m.group("tail")), _unquote(m.group("head"))
            edge: dict[str, Any] = {"id": attrs.get("id", f"{tail}->{head}"), "tail": tail, "head": head}
            if "risk" in attrs:
                try:
                    edge["risk"] = float(attrs["risk"])
                except ValueError:
                    raise GraphError(f"edge {edge['id']!r}: risk {attrs['risk']!r} is not a number") from None
            data["edges"].append(edge)
        elif m := _DOT_GRAPH_ATTR.match(statement):
            for k, v in _DOT_KV.findall(m.group("attrs")):
                data[k] = _unquote(v)
        elif m := _DOT_ASSIGN.match(statement):
            data[m.group("key")] = _unquote(m.group("value"))
        elif re.fullmatch(rf"{_DOT_ID}\s*(?:\[[^\]]*\])?", statement):
            name = re.match(_DOT_ID, statement).group(0)
            if name not in ("node", "edge"):
                data["vertices"].append(_unquote(name))
        else:
            raise GraphError(f"unsupported DOT statement: {statement!r}")
    if "uniform_risk" in data:
        try:
            data["uniform_risk"] = float(data["uniform_risk"])
        except ValueError:
            raise GraphError(f"uniform_risk {data['uniform_risk']!r} is not a number") from None
    return graph_from_dict(data, symbolic=symbolic)


def load_graph(text: str, symbolic: bool = False) -> Dag:
    """Parse JSON, or DOT when the text looks like a ``digraph``."""
    if re.match(r"\s*(strict\s+)?digraph\b", text):
        return parse_dot(text, symbolic=symbolic)
    return parse_graph(text, symbolic=symbolic)
