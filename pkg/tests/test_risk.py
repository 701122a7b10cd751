import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from helpers import brute_force_failure, chain, dags, double_path, sample_graph
from riskroute.graph import Edge, MissingRiskError, edge_neighbors, validate_dag
from riskroute.risk import (
    accumulate,
    accumulate_bat,
    accumulate_eagle,
    por,
    remainder,
    remainder_value,
    selection_probability,
)
from riskroute.sim import greedy_walk, World

# Reference labels, by edge, as printed (two decimals)
SAMPLE_LABELS = {
    "1->2": 0.81, "1->3": 0.88, "2->4": 0.78, "2->5": 0.78, "3->8": 0.75, "4->6": 0.75,
    "5->6": 0.75, "5->7": 0.75, "6->9": 0.50, "7->9": 0.50, "8->9": 0.50,
}


def test_probabilistic_or():
    assert por(0.5, 0.5) == 0.75
    assert por(0.3, 0.0) == 0.3
    assert por(0.3, 1.0) == 1.0


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_por_algebra(a, b, c):
    assert por(a, b) == pytest.approx(por(b, a), abs=1e-15)
    assert por(por(a, b), c) == pytest.approx(por(a, por(b, c)), abs=1e-12)
    assert 0.0 <= por(a, b) <= 1.0 + 1e-15


def test_eagle_sample_half(sample):
    acc = accumulate_eagle(sample)
    # hand recursion: 6->9 = .5, 4->6 = .5 or .5, 2->4 = .5 or .75^2, 1->2 = .5 or (2->4)^2
    e46 = 0.75
    e24 = por(0.5, e46 * e46)
    e12 = por(0.5, e24 * e24)
    assert acc.accumulated["6->9"] == 0.5
    assert acc.accumulated["4->6"] == e46
    assert acc.accumulated["2->4"] == 0.78125 == e24
    assert acc.accumulated["1->3"] == 0.875
    assert acc.accumulated["1->2"] == pytest.approx(e12, abs=1e-15)
    assert acc.accumulated["1->2"] == pytest.approx(0.805176, abs=1e-6)
    for edge, label in SAMPLE_LABELS.items():
        assert round(acc.accumulated[edge], 2) == label
    assert acc.source_risk == pytest.approx(acc.accumulated["1->2"] * acc.accumulated["1->3"])


def test_terminal_and_dead_end_base_cases():
    dag = validate_dag([Edge("a", "s", "t", 0.3), Edge("b", "s", "x", 0.2)], "s", "t")
    for model in ("eagle", "bat"):
        acc = accumulate(dag, model)
        assert acc.accumulated["a"] == 0.3
        assert acc.accumulated["b"] == 1.0
    bat = accumulate_bat(dag)
    assert bat.remainder["a"] == 0.0
    assert bat.remainder["b"] == 1.0


def test_missing_risk_raises():
    dag = validate_dag([Edge("a", "s", "t")], "s", "t")
    with pytest.raises(MissingRiskError):
        accumulate_bat(dag)


def test_bad_options_raise(sample):
    with pytest.raises(ValueError):
        accumulate(sample, "owl")
    with pytest.raises(ValueError):
        accumulate(sample, "bat", "length")
    with pytest.raises(ValueError):
        accumulate(sample, "eagle", "remainder")


def test_bat_chain():
    acc = accumulate_bat(chain(0.5, 0.5))
    assert acc.accumulated["s->v1"] == 0.75
    assert acc.source_risk == 0.75


def test_bat_sample_uniform_matches_printed_polynomials(sample):
    def horner(coeffs, x):
        return sum(c * x**k for k, c in enumerate(coeffs))

    acc = accumulate_bat(sample)
    assert acc.accumulated["1->2"] == pytest.approx(horner([0, 2, 1, -4, 1, 2, -1], 0.5), abs=1e-15)
    assert acc.accumulated["1->3"] == pytest.approx(horner([0, 3, -3, 1], 0.5), abs=1e-15)
    assert acc.accumulated["1->2"] == 0.859375
    assert acc.accumulated["1->3"] == 0.875


def test_double_path_source_risk():
    dag = double_path(0.5)
    acc = accumulate_bat(dag)
    assert brute_force_failure(dag, acc.vertex_order) == 0.625
    assert acc.source_risk == 0.625


def test_selection_probability_values():
    edges = [Edge("i", "s", "v", 0.5)]
    edges += [Edge(f"n{k}", "v", f"w{k}", 0.5) for k in range(3)]
    edges += [Edge(f"m{k}", f"w{k}", "t", 0.5) for k in range(3)]
    acc = accumulate_bat(validate_dag(edges, "s", "t"))
    assert acc.attempt_order["i"] == ("n0", "n1", "n2")
    assert [selection_probability(acc, "i", j) for j in ("n0", "n1", "n2")] == [0.5, 0.25, 0.125]
    with pytest.raises(KeyError):
        selection_probability(acc, "i", "m0")


def test_certain_failure_never_selected():
    edges = [Edge("i", "s", "v", 0.2), Edge("a", "v", "t", 1.0), Edge("b", "v", "w", 0.3), Edge("c", "w", "t", 0.3)]
    acc = accumulate_bat(validate_dag(edges, "s", "t"))
    assert selection_probability(acc, "i", "a") == 0.0
    assert remainder(acc, "a") == 0.0  # terminal edges keep A = 0


def test_remainder_arithmetic():
    assert remainder_value(0.75, 0.5) == 0.5
    assert remainder_value(1.0, 1.0) == 1.0
    acc = accumulate_bat(chain(0.5, 0.5))
    assert remainder(acc, "v1->t") == 0
    assert remainder(acc, "s->v1") == 0.5
    with pytest.raises(ValueError):
        remainder(accumulate_eagle(chain(0.5)), "s->t")


def test_risk_one_edge_gets_unit_remainder():
    edges = [Edge("a", "s", "v", 1.0), Edge("b", "v", "t", 0.1)]
    acc = accumulate_bat(validate_dag(edges, "s", "t"))
    assert acc.remainder["a"] == 1.0
    assert acc.accumulated["a"] == 1.0


def test_dispatcher_matches_specific_models(sample):
    assert accumulate(sample, "eagle") == accumulate_eagle(sample)
    assert accumulate(sample, "bat") == accumulate_bat(sample)


def test_bat_dominates_eagle_on_sample(sample):
    bat, eagle = accumulate_bat(sample), accumulate_eagle(sample)
    for e in sample.edge_ids:
        assert bat.accumulated[e] >= eagle.accumulated[e]
    assert bat.accumulated["1->2"] > eagle.accumulated["1->2"]


def test_two_neighbor_gap_formula():
    # N(i) = {j1, j2}; gap between models is (1-B1) A1 (1-B2) (1-A2) times (1-B_i)
    edges = [
        Edge("i", "s", "v", 0.2), Edge("j1", "v", "a", 0.3), Edge("j2", "v", "b", 0.4),
        Edge("k1", "a", "t", 0.25), Edge("k2", "b", "t", 0.1),
    ]
    dag = validate_dag(edges, "s", "t")
    bat, eagle = accumulate_bat(dag), accumulate_eagle(dag)
    first, second = bat.attempt_order["i"]
    b1, b2 = dag.risk(first), dag.risk(second)
    a1, a2 = bat.remainder[first], bat.remainder[second]
    gap = (1 - 0.2) * (1 - b1) * a1 * (1 - b2) * (1 - a2)
    assert bat.accumulated["i"] - eagle.accumulated["i"] == pytest.approx(gap, abs=1e-15)


def test_to_dict_report(sample):
    report = accumulate_bat(sample).to_dict()
    assert report["model"] == "bat"
    assert report["source_risk"] == 0.796875
    row = next(r for r in report["edges"] if r["id"] == "1->2")
    assert row == {"id": "1->2", "risk": 0.5, "accumulated": 0.859375, "remainder": 0.71875, "attempt_order": ["2->4", "2->5"]}
    assert "remainder" not in accumulate_eagle(sample).to_dict()["edges"][0]


# --- properties over random DAGs ------------------------------------------------


@given(dags(), st.sampled_from(["eagle", "bat"]))
def test_bounds_and_base_case(dag, model):
    acc = accumulate(dag, model)
    for e in dag.edges:
        assert e.risk - 1e-15 <= acc.accumulated[e.id] <= 1.0 + 1e-15
        if e.head == dag.destination:
            assert acc.accumulated[e.id] == e.risk
            if model == "bat":
                assert acc.remainder[e.id] == 0.0


@given(dags())
def test_attempt_order_sorted_permutation(dag):
    acc = accumulate_bat(dag)
    for e in dag.edges:
        order = acc.attempt_order[e.id]
        assert sorted(order) == sorted(edge_neighbors(dag, e.id))
        values = [acc.accumulated[j] for j in order]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


@given(dags())
def test_partition_of_unity(dag):
    acc = accumulate_bat(dag)
    for e in dag.edges:
        order = acc.attempt_order[e.id]
        if not order:
            continue
        total = math.prod(dag.risk(j) for j in order) + sum(selection_probability(acc, e.id, j) for j in order)
        assert total == pytest.approx(1.0, abs=1e-12)


@given(dags())
def test_bat_is_conservative(dag):
    bat, eagle = accumulate_bat(dag), accumulate_eagle(dag)
    for e in dag.edge_ids:
        assert bat.accumulated[e] >= eagle.accumulated[e] - 1e-12


@st.composite
def in_trees(draw):
    """Every vertex has at most one out-edge, so nobody ever has a choice."""
    n = draw(st.integers(2, 9))
    edges = []
    for v in range(n - 1):
        if draw(st.booleans()) or v == 0:
            w = draw(st.integers(v + 1, n - 1))
            edges.append(Edge(f"e{v}", str(v), str(w), draw(st.floats(0, 1))))
    return validate_dag(edges, "0", str(n - 1), vertices=[str(v) for v in range(n)])


@given(in_trees())
def test_single_neighbor_collapse(dag):
    bat, eagle = accumulate_bat(dag), accumulate_eagle(dag)
    for e in dag.edge_ids:
        assert bat.accumulated[e] == pytest.approx(eagle.accumulated[e], abs=1e-15)


@settings(max_examples=60)
@given(dags(max_edges=10))
def test_bat_equals_brute_force_walk(dag):
    acc = accumulate_bat(dag)
    assert acc.source_risk == pytest.approx(brute_force_failure(dag, acc.vertex_order), abs=1e-12)
    for e in dag.edges:
        if e.risk < 1.0:
            expected = brute_force_failure(dag, acc.vertex_order, start=e.head)
            assert acc.remainder[e.id] == pytest.approx(expected, abs=1e-12)


@given(dags(), st.data(), st.sampled_from([("eagle", "accumulated"), ("bat", "remainder")]))
def test_monotone_in_single_edge_risk(dag, data, config):
    assume(dag.edges)
    model, key = config
    edge = data.draw(st.sampled_from(dag.edges))
    bigger = data.draw(st.floats(edge.risk, 1.0))
    before = accumulate(dag, model, key)
    after = accumulate(dag.with_risks({edge.id: bigger}), model, key)
    for e in dag.edge_ids:
        assert after.accumulated[e] >= before.accumulated[e] - 1e-12
    assert after.source_risk >= before.source_risk - 1e-12


def test_default_order_is_not_monotone():
    """Sorting by accumulated risk can prefer a worse neighbor; raising the
    cheap neighbor's risk flips the order and lowers the upstream value."""
    def build(risk_j):
        return validate_dag(
            [
                Edge("i", "s", "v", 0.5),
                Edge("j", "v", "a", risk_j), Edge("ja", "a", "t", 0.9),
                Edge("k", "v", "t", 0.91),
            ],
            "s", "t",
        )

    low, high = accumulate_bat(build(0.05)), accumulate_bat(build(0.11))
    assert low.attempt_order["i"] == ("j", "k")
    assert high.attempt_order["i"] == ("k", "j")
    assert high.accumulated["i"] < low.accumulated["i"]
    # ordering by remainder picks k first in both cases and stays monotone
    low_r, high_r = accumulate_bat(build(0.05), "remainder"), accumulate_bat(build(0.11), "remainder")
    assert low_r.attempt_order["i"] == ("k", "j")
    assert high_r.accumulated["i"] >= low_r.accumulated["i"]
    assert low_r.accumulated["i"] < low.accumulated["i"]


@given(dags(max_edges=12))
def test_remainder_order_never_worse(dag):
    default, best = accumulate_bat(dag), accumulate_bat(dag, "remainder")
    assert best.source_risk <= default.source_risk + 1e-12
    for e in dag.edge_ids:
        assert best.accumulated[e] <= default.accumulated[e] + 1e-12


@settings(max_examples=40)
@given(dags(max_edges=10), st.data())
def test_reaccumulation_agrees_with_attempt_order(dag, data):
    acc = accumulate_bat(dag)
    world = World({e: data.draw(st.booleans()) for e in dag.edge_ids})
    greedy_walk(dag, acc, world, check_reaccumulation=True)
    eagle = accumulate_eagle(dag)
    greedy_walk(dag, eagle, world, check_reaccumulation=True)


def test_eagle_limit_fan():
    for alpha in (0.5, 0.9):
        for n in range(1, 21):
            edges = [Edge("i", "s", "v", 0.3)] + [Edge(f"f{k:02d}", "v", "t" if k == 0 else f"w{k}", alpha) for k in range(n)]
            # parallel terminal edges need distinct heads; route them via w_k -> t at zero risk
            edges += [Edge(f"g{k:02d}", f"w{k}", "t", 0.0) for k in range(1, n)]
            acc = accumulate_eagle(validate_dag(edges, "s", "t"))
            assert acc.accumulated["i"] - 0.3 == pytest.approx(0.7 * alpha**n, abs=1e-12)
