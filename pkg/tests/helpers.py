"""Graph builders and hypothesis strategies shared by the tests."""

from pathlib import Path

from hypothesis import strategies as st

from riskroute.graph import Edge, validate_dag

GRAPHS = Path(__file__).resolve().parent.parent / "graphs"

SAMPLE_PAIRS = [
    ("1", "2"), ("1", "3"), ("2", "4"), ("2", "5"), ("3", "8"), ("4", "6"),
    ("4", "7"), ("5", "6"), ("5", "7"), ("6", "9"), ("7", "9"), ("8", "9"),
]


def sample_graph(risk=0.5):
    edges = [Edge(f"{a}->{b}", a, b, risk) for a, b in SAMPLE_PAIRS]
    return validate_dag(edges, "1", "9")


def chain(*risks):
    names = ["s"] + [f"v{k}" for k in range(1, len(risks))] + ["t"]
    edges = [Edge(f"{a}->{b}", a, b, r) for a, b, r in zip(names, names[1:], risks)]
    return validate_dag(edges, "s", "t")


def double_path(risk=0.5):
    edges = [Edge(f"{a}->{b}", a, b, risk) for a, b in [("s", "a"), ("s", "b"), ("a", "t"), ("b", "t")]]
    return validate_dag(edges, "s", "t")


risks = st.one_of(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    st.sampled_from([0.0, 0.5, 1.0]),
)


@st.composite
def dags(draw, max_vertices=8, max_edges=16, risk=risks):
    """Random DAG on 0..n-1 with source 0 and destination n-1.

    Edges only run forward, so any subset of pairs is acyclic; dead ends,
    unreachable vertices and shared downstream edges all show up.
    """
    n = draw(st.integers(min_value=2, max_value=max_vertices))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=max_edges)) if pairs else []
    edges = [Edge(f"e{i}-{j}", str(i), str(j), draw(risk)) for i, j in chosen]
    return validate_dag(edges, "0", str(n - 1), vertices=[str(v) for v in range(n)])


def brute_force_failure(dag, vertex_order, start=None):
    """Failure probability of the greedy walk, summed over every world.

    Deliberately naive: itertools.product over all 2^m edge states and a
    plain walk, sharing nothing with the library beyond the attempt orders.
    """
    from itertools import product

    ids = [e.id for e in dag.edges]
    head = {e.id: e.head for e in dag.edges}
    risk = {e.id: e.risk for e in dag.edges}
    total = 0.0
    for states in product((False, True), repeat=len(ids)):
        broken = dict(zip(ids, states))
        p = 1.0
        for e in ids:
            p *= risk[e] if broken[e] else 1.0 - risk[e]
        v = dag.source if start is None else start
        while v != dag.destination:
            intact = [e for e in vertex_order.get(v, ()) if not broken[e]]
            if not intact:
                break
            v = head[intact[0]]
        if v != dag.destination:
            total += p
    return total
