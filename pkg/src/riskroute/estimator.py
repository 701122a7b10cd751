"""scikit-learn style facade over risk accumulation and the greedy walk.

``GreedyRouter`` is fitted on a :class:`~riskroute.graph.Dag`; afterwards it
predicts, for a batch of failure worlds, whether the greedy pathfinder gets
stuck.  A world matrix has one row per world and one boolean column per edge
(``True`` = broken), columns in ``dag.edge_ids`` order.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from riskroute.graph import Dag
from riskroute.risk import MODELS, ORDER_KEYS, accumulate


def check_world_matrix(X, n_edges: int) -> np.ndarray:
    """Validate a world matrix and return it as a 2-D boolean array."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"world matrix must be 2-D, got shape {X.shape}")
    if X.shape[1] != n_edges:
        raise ValueError(f"world matrix has {X.shape[1]} columns, graph has {n_edges} edges")
    if X.dtype != bool:
        if not np.isin(X, (0, 1)).all():
            raise ValueError("world matrix entries must be 0/1 or boolean")
        X = X.astype(bool)
    return X


def check_dag(dag) -> Dag:
    if not isinstance(dag, Dag):
        raise TypeError(f"expected a validated Dag, got {type(dag).__name__}")
    dag.require_risks()
    return dag


class GreedyRouter(BaseEstimator):
    """Greedy fault-tolerant router.

    Parameters
    ----------
    model : {"bat", "eagle"}
        Accumulation model used to rank out-edges.
    order_key : {"accumulated", "remainder"}
        Key used to sort neighbors (bat-eye only).
    """

    def __init__(self, model: str = "bat", order_key: str = "accumulated"):
        self.model = model
        self.order_key = order_key

    def fit(self, dag: Dag, y=None):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.order_key not in ORDER_KEYS:
            raise ValueError(f"unknown order_key {self.order_key!r}")
        dag = check_dag(dag)
        self.dag_ = dag
        self.accumulation_ = accumulate(dag, self.model, self.order_key)
        self.source_risk_ = self.accumulation_.source_risk
        self.edge_ids_ = dag.edge_ids
        self.n_edges_ = len(dag.edge_ids)
        column = {eid: k for k, eid in enumerate(self.edge_ids_)}
        self.vertex_index_ = {v: k for k, v in enumerate(dag.topological_order)}
        self._plan = [
            (
                self.vertex_index_[v],
                [(column[e], self.vertex_index_[dag.edge(e).head]) for e in self.accumulation_.vertex_order.get(v, ())],
            )
            for v in dag.topological_order
            if v != dag.destination
        ]
        return self

    def final_vertices(self, X, start: str | None = None) -> np.ndarray:
        """Index (into ``dag.topological_order``) of the vertex each walk ends at."""
        check_is_fitted(self, "accumulation_")
        X = check_world_matrix(X, self.n_edges_)
        start = self.dag_.source if start is None else start
        current = np.full(X.shape[0], self.vertex_index_[start], dtype=np.int64)
        # Walks only move forward in topological order, so one pass suffices.
        for v, choices in self._plan:
            waiting = current == v
            if not waiting.any():
                continue
            for col, head in choices:
                take = waiting & ~X[:, col]
                current[take] = head
                waiting &= ~take
        return current

    def predict(self, X, start: str | None = None) -> np.ndarray:
        """``True`` where the walk from ``start`` (default: source) gets stuck."""
        ends = self.final_vertices(X, start)
        return ends != self.vertex_index_[self.dag_.destination]

    def transform(self, X) -> np.ndarray:
        """Per-world success indicator as a column vector."""
        return (~self.predict(X)).astype(float).reshape(-1, 1)

    def score(self, X, y=None) -> float:
        """Fraction of worlds in which the destination is reached."""
        return float(np.mean(~self.predict(X)))
