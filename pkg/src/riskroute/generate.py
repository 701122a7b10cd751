"""Random DAG generators for test corpora and the ``gen`` subcommand."""

from __future__ import annotations

import numpy as np

from riskroute.graph import Dag, Edge, GraphError, validate_dag


def layered_dag(
    layers: int,
    width: int,
    edge_prob: float,
    seed: int,
    risk_min: float = 0.1,
    risk_max: float = 0.5,
) -> Dag:
    """Layered DAG from ``s`` (layer 0) to ``t`` (layer ``layers-1``).

    Edges only join consecutive layers and are kept with probability
    ``edge_prob``; a spine through the first vertex of every middle layer is
    always present so ``t`` is reachable.
    """
    if layers < 2:
        raise GraphError("layers must be at least 2")
    if width < 1:
        raise GraphError("width must be at least 1")
    if not 0.0 < edge_prob <= 1.0:
        raise GraphError("edge probability must be in (0, 1]")
    if not 0.0 <= risk_min <= risk_max <= 1.0:
        raise GraphError("need 0 <= risk_min <= risk_max <= 1")
    rng = np.random.default_rng(seed)
    grid = [["s"]] + [[f"v{l}.{k}" for k in range(width)] for l in range(1, layers - 1)] + [["t"]]
    spine = {(grid[l][0], grid[l + 1][0]) for l in range(layers - 1)}
    edges = []
    for l in range(layers - 1):
        for tail in grid[l]:
            for head in grid[l + 1]:
                keep = rng.random() < edge_prob
                if keep or (tail, head) in spine:
                    risk = float(rng.uniform(risk_min, risk_max))
                    edges.append(Edge(f"{tail}->{head}", tail, head, round(risk, 6)))
    return validate_dag(edges, "s", "t")


def random_dag(
    rng: np.random.Generator,
    n_vertices: int,
    max_edges: int,
    edge_prob: float = 0.5,
    risk_range: tuple[float, float] = (0.0, 1.0),
) -> Dag:
    """Random DAG on vertices ``0..n-1`` with source ``0`` and destination ``n-1``.

    Any forward pair ``i < j`` may become an edge, so shared downstream edges,
    dead ends and unreachable vertices all occur.  At most ``max_edges``
    edges are kept.
    """
    pairs = [(i, j) for i in range(n_vertices) for j in range(i + 1, n_vertices)]
    chosen = [p for p in pairs if rng.random() < edge_prob]
    if len(chosen) > max_edges:
        keep = rng.choice(len(chosen), size=max_edges, replace=False)
        chosen = [chosen[k] for k in sorted(keep)]
    lo, hi = risk_range
    edges = [Edge(f"e{i:02d}-{j:02d}", str(i), str(j), float(rng.uniform(lo, hi))) for i, j in chosen]
    return validate_dag(edges, "0", str(n_vertices - 1), vertices=[str(v) for v in range(n_vertices)])
