"""Backward risk accumulation under the eagle-eye and bat-eye models.

Both models walk the edges in reverse topological order.  A terminal edge
(head is the destination) keeps its own risk.  Every other edge combines its
own risk with the risk of what lies beyond it:

* eagle-eye: ``E^_i = E_i or prod(E^_j for j in N(i))``
* bat-eye:   ``B^_i = B_i or [prod(B_j) + sum(C(i;j) * A(j))]`` where the
  neighbors are tried in ascending accumulated-risk order, ``C(i;j)`` is the
  chance ``j`` is the first intact neighbor and ``A(j)`` the risk remaining
  once ``j`` has been committed to.

``a or b`` is the probabilistic OR ``a + b - a*b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

from riskroute.graph import Dag, reverse_topological_edge_order

Model = Literal["eagle", "bat"]
OrderKey = Literal["accumulated", "remainder"]

MODELS = ("eagle", "bat")
ORDER_KEYS = ("accumulated", "remainder")

# Sort keys are rounded so values equal up to float noise tie-break by edge id.
SORT_DECIMALS = 12


def por(a: float, b: float) -> float:
    """Probabilistic OR of two independent failure probabilities."""
    return a + b - a * b


def sort_key(value: float, edge_id: str) -> tuple[float, str]:
    return (round(value, SORT_DECIMALS), edge_id)


def remainder_value(accumulated: float, risk: float) -> float:
    """``(accumulated - risk) / (1 - risk)``, or 1 when ``risk`` is 1."""
    if risk >= 1.0:
        return 1.0
    return (accumulated - risk) / (1.0 - risk)


@dataclass(frozen=True)
class Accumulation:
    """Per-edge accumulated risks for one graph under one model.

    ``vertex_order`` maps each vertex to the order in which a pathfinder
    standing there tries its out-edges; ``attempt_order[i]`` is that order
    for the head of edge ``i`` (empty for terminal edges).  ``remainder`` is
    only populated for the bat-eye model.
    """

    model: Model
    accumulated: dict[str, float]
    remainder: dict[str, float]
    attempt_order: dict[str, tuple[str, ...]]
    vertex_order: dict[str, tuple[str, ...]]
    source_risk: float
    order_key: OrderKey = "accumulated"
    risks: dict[str, float] = field(default_factory=dict, repr=False)

    def first_choice(self, vertex: str) -> str | None:
        order = self.vertex_order.get(vertex, ())
        return order[0] if order else None

    def to_dict(self) -> dict:
        edges = []
        for eid in sorted(self.accumulated):
            item = {
                "id": eid,
                "risk": _sig(self.risks[eid]),
                "accumulated": _sig(self.accumulated[eid]),
            }
            if self.model == "bat":
                item["remainder"] = _sig(self.remainder[eid])
            item["attempt_order"] = list(self.attempt_order[eid])
            edges.append(item)
        return {"model": self.model, "edges": edges, "source_risk": _sig(self.source_risk)}


def _sig(x: float) -> float:
    return float(f"{x:.12g}")


def _ordered(candidates, accumulated, remainder, order_key: OrderKey) -> tuple[str, ...]:
    values = remainder if order_key == "remainder" else accumulated
    return tuple(sorted(candidates, key=lambda j: sort_key(values[j], j)))


def _bat_inner(order, risks, remainder) -> float:
    """Failure probability after arriving at a vertex and trying ``order``."""
    all_broken = 1.0
    weighted = 0.0
    for j in order:
        weighted += all_broken * (1.0 - risks[j]) * remainder[j]
        all_broken *= risks[j]
    return all_broken + weighted


def _check_options(model: str, order_key: str) -> None:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    if order_key not in ORDER_KEYS:
        raise ValueError(f"unknown order_key {order_key!r}; expected one of {ORDER_KEYS}")


def accumulate(dag: Dag, model: Model = "bat", order_key: OrderKey = "accumulated") -> Accumulation:
    """Accumulate risk backward from the destination under ``model``."""
    _check_options(model, order_key)
    dag.require_risks()
    if model == "eagle" and order_key == "remainder":
        raise ValueError("order_key='remainder' only applies to the bat-eye model")
    risks = {e.id: e.risk for e in dag.edges}
    accumulated: dict[str, float] = {}
    remainder: dict[str, float] = {}
    vertex_order: dict[str, tuple[str, ...]] = {}
    # Vertex-level quantity: failure probability once standing at the vertex.
    beyond: dict[str, float] = {dag.destination: 0.0}

    def settle(vertex: str) -> float:
        if vertex in beyond:
            return beyond[vertex]
        order = _ordered(dag.out_edges(vertex), accumulated, remainder, order_key)
        vertex_order[vertex] = order
        if model == "eagle":
            value = math.prod(accumulated[j] for j in order)
        else:
            value = _bat_inner(order, risks, remainder)
        beyond[vertex] = value
        return value

    for eid in reverse_topological_edge_order(dag):
        edge = dag.edge(eid)
        rest = settle(edge.head)
        accumulated[eid] = por(edge.risk, rest)
        if model == "bat":
            # Equal to (B^ - B) / (1 - B) without the cancellation.
            # Terminal edges keep A = 0 even at risk 1; the unit guard is for
            # non-terminal edges that can never be traversed.
            remainder[eid] = 1.0 if edge.risk >= 1.0 and edge.head != dag.destination else rest

    for v in dag.topological_order:
        if v != dag.destination:
            settle(v)
    vertex_order[dag.destination] = ()

    attempt_order = {
        e.id: () if e.head == dag.destination else vertex_order[e.head] for e in dag.edges
    }
    return Accumulation(
        model=model,
        accumulated=accumulated,
        remainder=remainder,
        attempt_order=attempt_order,
        vertex_order=vertex_order,
        source_risk=beyond[dag.source],
        order_key=order_key,
        risks=risks,
    )


def accumulate_eagle(dag: Dag) -> Accumulation:
    return accumulate(dag, "eagle")


def accumulate_bat(dag: Dag, order_key: OrderKey = "accumulated") -> Accumulation:
    return accumulate(dag, "bat", order_key)


def selection_probability(acc: Accumulation, i: str, j: str) -> float:
    """Chance that neighbor ``j`` is the first intact edge tried after ``i``."""
    order = acc.attempt_order[i]
    if j not in order:
        raise KeyError(f"edge {j!r} is not a neighbor of {i!r}")
    p = 1.0 - acc.risks[j]
    for k in order[: order.index(j)]:
        p *= acc.risks[k]
    return p


def remainder(acc: Accumulation, j: str) -> float:
    """Risk remaining downstream of ``j`` given ``j`` itself is intact."""
    if acc.model != "bat":
        raise ValueError("remainders are only defined for the bat-eye model")
    return acc.remainder[j]


def reaccumulated_choice(dag: Dag, vertex: str, broken: set[str], model: Model, order_key: OrderKey) -> str | None:
    """Choose the next edge at ``vertex`` by removing known-broken edges and
    accumulating again from scratch.

    Slow reference path used to check that the precomputed attempt order
    gives the same decision.
    """
    known = dag.without_edges(broken)
    acc = accumulate(known, model, order_key)
    order = acc.vertex_order.get(vertex, ())
    return order[0] if order else None
