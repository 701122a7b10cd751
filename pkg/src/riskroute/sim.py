"""Ground truth for the routing models: sampled and enumerated failure worlds.

A *world* fixes every edge as broken or intact.  The greedy pathfinder starts
at the source, looks at the out-edges of the vertex it stands on, takes the
first intact one in the accumulation's attempt order and never backtracks.
It fails when it reaches a vertex other than the destination with no intact
out-edge.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping

import numpy as np

from riskroute.estimator import GreedyRouter
from riskroute.graph import Dag, GraphError
from riskroute.risk import Accumulation, accumulate, reaccumulated_choice

MAX_ENUMERATION_EDGES = 25
CHUNK = 1 << 16

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class EnumerationTooLarge(ValueError):
    """Raised when exhaustive enumeration would exceed the edge guard."""


@dataclass(frozen=True)
class World:
    """Broken/intact state of every edge (``True`` = broken)."""

    broken: Mapping[str, bool]

    def is_broken(self, edge_id: str) -> bool:
        return self.broken[edge_id]

    def broken_edges(self) -> frozenset[str]:
        return frozenset(e for e, b in self.broken.items() if b)

    def row(self, dag: Dag) -> np.ndarray:
        return np.array([self.broken[e] for e in dag.edge_ids], dtype=bool)

    @classmethod
    def from_row(cls, dag: Dag, row) -> World:
        return cls({e: bool(b) for e, b in zip(dag.edge_ids, row)})

    def probability(self, dag: Dag) -> float:
        p = 1.0
        for e in dag.edges:
            p *= e.risk if self.broken[e.id] else 1.0 - e.risk
        return p


@dataclass(frozen=True)
class Step:
    vertex: str
    broken: tuple[str, ...]
    chosen: str | None


@dataclass(frozen=True)
class WalkTrace:
    steps: tuple[Step, ...]
    outcome: str  # "reached-destination" | "stuck"
    path: tuple[str, ...]

    @property
    def reached(self) -> bool:
        return self.outcome == "reached-destination"

    @property
    def final_vertex(self) -> str:
        return self.steps[-1].vertex

    def to_json(self) -> str:
        return json.dumps(
            {
                "steps": [{"vertex": s.vertex, "broken": list(s.broken), "chosen": s.chosen} for s in self.steps],
                "outcome": self.outcome,
                "path": list(self.path),
            }
        )


@dataclass(frozen=True)
class TrialSummary:
    trials: int
    failures: int
    failure_rate: float
    predicted: float
    z_score: float | None
    seed: int
    model: str = field(default="bat", compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("model")
        for key in ("failure_rate", "predicted", "z_score"):
            if out[key] is not None:
                out[key] = float(f"{out[key]:.12g}")
        return out


# --- random worlds -------------------------------------------------------


def sample_world(dag: Dag, rng: np.random.Generator) -> World:
    """Break each edge independently with probability equal to its risk."""
    dag.require_risks()
    u = rng.random(len(dag.edges))
    return World({e.id: bool(x < e.risk) for e, x in zip(dag.edges, u)})


def _mix64(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer; uint64 arithmetic wraps modulo 2**64.
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def trial_uniforms(seed: int, start: int, stop: int, n_edges: int) -> np.ndarray:
    """Uniforms in [0, 1) for trials ``start..stop-1``, one column per edge.

    Counter-based SplitMix64: the draw for (trial t, edge k) depends only on
    ``(seed, t, k)``, so any partition of the trials gives the same worlds.
    """
    with np.errstate(over="ignore"):
        key = _mix64(np.array([seed & _MASK], dtype=np.uint64))
        trials = np.arange(start, stop, dtype=np.uint64) + np.uint64(1)
        trial_keys = _mix64(key + trials * _GOLDEN)
        cols = np.arange(1, n_edges + 1, dtype=np.uint64) * _GOLDEN
        bits = _mix64(trial_keys[:, None] + cols[None, :])
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def trial_worlds(dag: Dag, seed: int, start: int, stop: int) -> np.ndarray:
    dag.require_risks()
    risks = np.array([e.risk for e in dag.edges])
    return trial_uniforms(seed, start, stop, len(risks)) < risks


def trial_world(dag: Dag, seed: int, trial: int) -> World:
    return World.from_row(dag, trial_worlds(dag, seed, trial, trial + 1)[0])


# --- the greedy walk -------------------------------------------------------


def greedy_walk(
    dag: Dag,
    acc: Accumulation,
    world: World | Mapping[str, bool],
    start: str | None = None,
    observe_all: bool = True,
    check_reaccumulation: bool = False,
) -> WalkTrace:
    """Run one greedy episode in ``world``.

    With ``observe_all=False`` only the edges needed for the decision are
    looked up (the first intact one and those tried before it); exhaustive
    enumeration relies on this to branch lazily.  ``check_reaccumulation``
    recomputes every decision by deleting the known-broken edges and
    accumulating again, and asserts it agrees with the attempt order.
    """
    broken = world.broken if isinstance(world, World) else world
    vertex = dag.source if start is None else start
    steps = []
    path = []
    known_broken: set[str] = set()
    while vertex != dag.destination:
        order = acc.vertex_order.get(vertex, ())
        chosen = None
        seen_broken = []
        for e in order:
            if broken[e]:
                seen_broken.append(e)
            elif chosen is None:
                chosen = e
                if not observe_all:
                    break
        if check_reaccumulation:
            known_broken.update(seen_broken)
            if observe_all:
                again = reaccumulated_choice(dag, vertex, known_broken, acc.model, acc.order_key)
                assert again == chosen, f"re-accumulation chose {again!r}, attempt order chose {chosen!r} at {vertex!r}"
        steps.append(Step(vertex, tuple(sorted(seen_broken)), chosen))
        if chosen is None:
            return WalkTrace(tuple(steps), "stuck", tuple(path))
        path.append(chosen)
        vertex = dag.edge(chosen).head
    steps.append(Step(vertex, (), None))
    return WalkTrace(tuple(steps), "reached-destination", tuple(path))


def traces(dag: Dag, acc: Accumulation, seed: int, trials: int) -> Iterator[WalkTrace]:
    """Walk traces for the same worlds :func:`monte_carlo` uses."""
    for start in range(0, trials, CHUNK):
        rows = trial_worlds(dag, seed, start, min(trials, start + CHUNK))
        for row in rows:
            yield greedy_walk(dag, acc, World.from_row(dag, row))


def monte_carlo(
    dag: Dag,
    model: str = "bat",
    trials: int = 100_000,
    seed: int = 0,
    order_key: str = "accumulated",
) -> TrialSummary:
    """Estimate the walk's failure rate over independently sampled worlds.

    The z-score compares the rate with the model's predicted source risk
    using the binomial standard error at the predicted value.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    router = GreedyRouter(model, order_key).fit(dag)
    failures = 0
    for start in range(0, trials, CHUNK):
        X = trial_worlds(dag, seed, start, min(trials, start + CHUNK))
        failures += int(router.predict(X).sum())
    rate = failures / trials
    p = router.source_risk_
    sigma = math.sqrt(p * (1.0 - p) / trials)
    if sigma > 0:
        z = (rate - p) / sigma
    else:
        z = 0.0 if rate == p else None
    return TrialSummary(trials, failures, rate, p, z, seed, model)


# --- exhaustive enumeration -------------------------------------------------


@dataclass(frozen=True)
class ExactResult:
    model: str
    failure_probability: float
    conditional: dict[str, float]
    worlds_examined: int

    def to_dict(self, acc: Accumulation | None = None, tol: float = 1e-12) -> dict:
        out = {
            "model": self.model,
            "failure_probability": float(f"{self.failure_probability:.12g}"),
            "conditional": {e: float(f"{p:.12g}") for e, p in sorted(self.conditional.items())},
            "worlds_examined": self.worlds_examined,
        }
        if acc is not None:
            out["predicted"] = float(f"{acc.source_risk:.12g}")
            out["source_match"] = abs(acc.source_risk - self.failure_probability) <= tol
            if acc.model == "bat":
                bad = [
                    e
                    for e, p in self.conditional.items()
                    if acc.risks[e] < 1.0 and abs(acc.remainder[e] - p) > tol
                ]
                out["remainder_mismatches"] = sorted(bad)
            out["match"] = out["source_match"] and not out.get("remainder_mismatches")
        return out


class _Unobserved(Exception):
    def __init__(self, edge_id: str):
        self.edge_id = edge_id


class _PartialWorld(dict):
    def __missing__(self, key):
        raise _Unobserved(key)


def _relevant_edges(dag: Dag, start: str) -> list[str]:
    """Out-edges of vertices a walk from ``start`` could ever stand on."""
    seen, stack, edges = {start}, [start], []
    while stack:
        v = stack.pop()
        if v == dag.destination:
            continue
        for e in dag.out_edges(v):
            edges.append(e)
            w = dag.edge(e).head
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(edges)


def _pruned_failure(dag: Dag, acc: Accumulation, start: str) -> tuple[float, int]:
    """Sum the probability of stuck worlds, expanding edges only when observed.

    Each leaf is a cylinder set of worlds agreeing on the observed edges;
    unobserved edges are summed out (their two states have total mass 1).
    """
    risk = {e.id: e.risk for e in dag.edges}
    total = 0.0
    leaves = 0
    stack = [({}, 1.0)]
    while stack:
        partial, mass = stack.pop()
        try:
            trace = greedy_walk(dag, acc, _PartialWorld(partial), start=start, observe_all=False)
        except _Unobserved as u:
            e = u.edge_id
            stack.append(({**partial, e: False}, mass * (1.0 - risk[e])))
            stack.append(({**partial, e: True}, mass * risk[e]))
            continue
        leaves += 1
        if not trace.reached:
            total += mass
    return total, leaves


def _full_failure(dag: Dag, router: GreedyRouter, start: str) -> tuple[float, int]:
    """Sum over every assignment of the edges reachable from ``start``."""
    relevant = _relevant_edges(dag, start)
    cols = [dag.edge_ids.index(e) for e in relevant]
    risks = np.array([dag.risk(e) for e in relevant])
    m = len(relevant)
    total = 0.0
    n_worlds = 1 << m
    for lo in range(0, n_worlds, CHUNK):
        idx = np.arange(lo, min(n_worlds, lo + CHUNK), dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(m)) & 1).astype(bool)
        X = np.zeros((len(idx), len(dag.edges)), dtype=bool)
        X[:, cols] = bits
        prob = np.prod(np.where(bits, risks, 1.0 - risks), axis=1)
        total += float(prob[router.predict(X, start=start)].sum())
    return total, n_worlds


def enumerate_exact(
    dag: Dag,
    model: str = "bat",
    order_key: str = "accumulated",
    method: str = "pruned",
    conditional: bool = True,
    max_edges: int = MAX_ENUMERATION_EDGES,
) -> ExactResult:
    """Exact failure probability of the greedy walk by enumerating worlds.

    ``method="pruned"`` branches on edge states only as the walk observes
    them; ``method="full"`` evaluates every assignment of the edges the walk
    could reach, vectorized.  With ``conditional`` the result also holds, per
    edge, the failure probability of a walk starting at the edge's head,
    i.e. after committing to that edge intact.
    """
    if len(dag.edges) > max_edges:
        raise EnumerationTooLarge(f"graph has {len(dag.edges)} edges; enumeration is limited to {max_edges}")
    if method not in ("pruned", "full"):
        raise ValueError(f"unknown method {method!r}")
    dag.require_risks()
    acc = accumulate(dag, model, order_key)
    if method == "pruned":
        run = lambda start: _pruned_failure(dag, acc, start)  # noqa: E731
    else:
        router = GreedyRouter(model, order_key).fit(dag)
        run = lambda start: _full_failure(dag, router, start)  # noqa: E731
    failure, examined = run(dag.source)
    cond = {}
    if conditional:
        by_head: dict[str, float] = {}
        for e in dag.edges:
            if e.head not in by_head:
                p, n = run(e.head)
                by_head[e.head] = p
                examined += n
            cond[e.id] = by_head[e.head]
    return ExactResult(model, failure, cond, examined)


# --- no-reroute baseline ----------------------------------------------------


@dataclass(frozen=True)
class StaticPath:
    path: tuple[str, ...]
    success: float
    log_weight: float

    def to_dict(self) -> dict:
        return {
            "path": list(self.path),
            "success": float(f"{self.success:.12g}"),
            "failure": float(f"{1.0 - self.success:.12g}"),
            "neg_log_success": float(f"{self.log_weight:.12g}"),
        }


def static_most_reliable_path(dag: Dag) -> StaticPath:
    """Source-to-destination path maximising the product of edge successes.

    Equivalent to a shortest path under weights ``-log(1 - risk)``; products
    are compared exactly (as fractions) so equal-probability paths tie-break
    on the lexicographic edge-id sequence.
    """
    dag.require_risks()
    best: dict[str, tuple[Fraction, tuple[str, ...]] | None] = {dag.destination: (Fraction(1), ())}
    for v in reversed(dag.topological_order):
        if v == dag.destination:
            continue
        candidates = []
        for e in dag.out_edges(v):
            edge = dag.edge(e)
            rest = best.get(edge.head)
            if rest is None or edge.risk >= 1.0:
                continue
            candidates.append(((Fraction(1) - Fraction(edge.risk)) * rest[0], (e, *rest[1])))
        # exact products; ties fall back to the edge-id sequence
        best[v] = min(candidates, key=lambda c: (-c[0], c[1]), default=None)
    found = best.get(dag.source)
    if found is None:
        if dag.destination not in _reach(dag):
            raise GraphError(f"destination {dag.destination!r} is unreachable from {dag.source!r}")
        raise GraphError("every source-destination path contains an edge of risk 1")
    success, path = found
    log_weight = sum(-math.log1p(-dag.risk(e)) for e in path)
    return StaticPath(path, float(success), log_weight)


def _reach(dag: Dag) -> set[str]:
    seen, stack = {dag.source}, [dag.source]
    while stack:
        for e in dag.out_edges(stack.pop()):
            w = dag.edge(e).head
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen
