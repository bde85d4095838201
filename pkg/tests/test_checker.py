import numpy as np
import pytest

from markov_gauge.checker import (
    FAIL,
    NO_FACTS,
    PASS,
    CheckConfig,
    augment_pvalues,
    canonical_dag,
    markov_check,
    rounds_needed,
)
from markov_gauge.data import Dataset
from markov_gauge.dsep import Local, implied_facts
from markov_gauge.errors import DataError, IllegalCpdagError
from markov_gauge.graph import Cpdag, Dag, cpdag_of
from markov_gauge.simulate import SimConfig, random_dag, sem_for, simulate_gaussian


def simulated(nodes=10, degree=3, n=500, seed=0):
    cfg = SimConfig(nodes, degree, n, 10, seed=seed)
    dag = random_dag(nodes, degree, seed)
    return dag, simulate_gaussian(dag, cfg)[0]


def test_complete_dag_has_no_facts():
    names = [f"X{i + 1}" for i in range(5)]
    complete = Dag(names, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    data = Dataset(tuple(names), np.random.default_rng(0).standard_normal((100, 5)))
    report = markov_check(complete, data)
    assert report.outcome == NO_FACTS
    assert report.verdict is None and not report.passed
    assert report.uniformity is None
    assert report.to_dict()["verdict"] is None


def test_rounds_arithmetic():
    assert rounds_needed(30, 200) == 7
    assert rounds_needed(250, 200) == 1
    assert rounds_needed(3, 0) == 2
    assert rounds_needed(0, 200) == 0


def test_ten_node_graph_with_thirty_facts():
    dag, data = simulated(10, 3, 400)
    assert len(implied_facts(dag)) == 30
    report = markov_check(dag, data)
    assert report.augmentation_rounds == 7
    assert report.facts_tested == len(report.per_fact) == 210
    assert [r.round for r in report.per_fact[:31]] == [0] * 30 + [1]


def test_augment_rounds_extend_each_other():
    dag, data = simulated()
    cfg = CheckConfig(base_seed=5)
    one = augment_pvalues(dag, data, cfg, 1)
    two = augment_pvalues(dag, data, cfg, 2)
    assert len(two) == 2 * len(one)
    assert two[: len(one)] == one
    assert one != two[len(one):]
    with pytest.raises(ValueError):
        augment_pvalues(dag, data, cfg, 0)


def test_single_round_matches_report():
    dag, data = simulated(15, 3, 400)
    cfg = CheckConfig(min_pvalues=0, base_seed=2)
    report = markov_check(dag, data, cfg)
    assert report.augmentation_rounds == 1
    assert report.p_values == augment_pvalues(dag, data, cfg, 1)


def test_deterministic():
    dag, data = simulated()
    cfg = CheckConfig(base_seed=9)
    assert markov_check(dag, data, cfg).to_dict() == markov_check(dag, data, cfg).to_dict()
    other = markov_check(dag, data, CheckConfig(base_seed=10))
    assert other.p_values != markov_check(dag, data, cfg).p_values


def test_verdict_follows_alpha():
    dag, data = simulated(10, 3, 500, seed=3)
    report = markov_check(dag, data)
    assert report.passed == (report.uniformity.p_ad > 0.05)
    assert report.outcome in (PASS, FAIL)


def test_markov_equivalent_dags_agree():
    a = Dag.from_edges([("X1", "X2"), ("X2", "X3"), ("X3", "X4")])
    b = Dag(a.nodes, [("X2", "X1"), ("X2", "X3"), ("X3", "X4")])
    c = Dag(a.nodes, [("X2", "X1"), ("X3", "X2"), ("X4", "X3")])
    rng = np.random.default_rng(0)
    x = rng.standard_normal((300, 4)).cumsum(axis=1)
    data = Dataset(a.nodes, x)
    cfg = CheckConfig(base_seed=1)
    reports = [markov_check(g, data, cfg).to_dict() for g in (a, b, c, cpdag_of(a))]
    for r in reports[1:]:
        assert r["per_fact"] == reports[0]["per_fact"]
        assert r["outcome"] == reports[0]["outcome"]
    assert canonical_dag(a) == canonical_dag(c) == canonical_dag(cpdag_of(b))


def _deleted_strongest(dag, sem):
    strong = max(dag.edges, key=lambda e: abs(sem.weights[e]))
    return Dag(dag.nodes, [e for e in dag.edges if e != strong])


def test_null_pass_rate_single_round():
    passed = 0
    for s in range(40):
        dag, data = simulated(15, 2, 2000, seed=s)
        passed += markov_check(dag, data, CheckConfig(min_pvalues=0, base_seed=s)).passed
    # binomial(40, 0.95) falls below 33 with probability < 1%
    assert passed >= 33


def test_deleted_edge_is_rejected():
    rejected = 0
    for s in range(40):
        cfg = SimConfig(10, 3, 5000, 10, seed=s)
        dag = random_dag(10, 3, s)
        data = simulate_gaussian(dag, cfg)[0]
        broken = _deleted_strongest(dag, sem_for(dag, cfg))
        rejected += markov_check(broken, data, CheckConfig(base_seed=s)).outcome == FAIL
    assert rejected >= 36


def test_columns_may_be_reordered_and_extra():
    dag, data = simulated(6, 2, 300)
    perm = list(reversed(range(data.n_cols)))
    extra = np.random.default_rng(1).standard_normal((data.n_rows, 1))
    shuffled = Dataset(tuple(data.column_names[i] for i in perm) + ("junk",),
                       np.column_stack([data.values[:, perm], extra]))
    cfg = CheckConfig(base_seed=3)
    assert markov_check(dag, shuffled, cfg).p_values == markov_check(dag, data, cfg).p_values


def test_errors():
    dag, data = simulated(6, 2, 300)
    illegal = Cpdag(["X1", "X2", "X3"], directed=[("X2", "X3"), ("X1", "X3")], undirected=[("X1", "X2")])
    with pytest.raises(IllegalCpdagError):
        markov_check(illegal, data)
    with pytest.raises(DataError):
        markov_check(Dag(["X1", "Q"]), data)
    with pytest.raises(DataError):
        markov_check(dag, Dataset(data.column_names, data.values[:6]))
    for bad in ({"subsample_fraction": 0.0}, {"alpha": 1.0}, {"min_pvalues": -1}, {"test": "kci"}):
        with pytest.raises(ValueError):
            CheckConfig(**bad)


def test_degenerate_tests_are_excluded():
    names = ("a", "b", "c", "d")
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 3))
    data = Dataset(names, np.column_stack([x, np.ones(200)]))
    report = markov_check(Dag(list(names)), data, CheckConfig(min_pvalues=0))
    # pairs with d, and conditioning on d, are undefined
    assert report.excluded_degenerate == 3
    assert report.facts_tested == 3
    assert report.outcome == NO_FACTS


def test_other_variants_and_notes():
    dag, data = simulated(8, 2, 300)
    report = markov_check(dag, data, CheckConfig(variant=Local(), min_pvalues=20))
    assert report.n_facts == len(implied_facts(canonical_dag(dag), Local()))
    assert any("variant" in n for n in report.notes)
    cp = markov_check(cpdag_of(dag), data, CheckConfig(min_pvalues=20))
    assert any("extension" in n for n in cp.notes) == bool(cpdag_of(dag).undirected)


def test_report_json_shape():
    dag, data = simulated(6, 2, 300)
    d = markov_check(dag, data, graph_id="g").to_dict()
    assert d["graph_id"] == "g"
    assert len(d["uniformity"]["histogram"]) == 20
    first = d["per_fact"][0]
    assert set(first) >= {"x", "y", "Z", "fact", "p", "seed", "round"}


def test_parallel_matches_serial():
    dag, data = simulated(10, 3, 300)
    serial = markov_check(dag, data, CheckConfig(base_seed=4, workers=1))
    par = markov_check(dag, data, CheckConfig(base_seed=4, workers=2))
    assert serial.to_dict() == par.to_dict()


def test_full_fraction_uses_all_rows():
    dag, data = simulated(6, 2, 300)
    report = markov_check(dag, data, CheckConfig(subsample_fraction=1.0, min_pvalues=0))
    assert all(r.effective_n == 300 and r.seed is None for r in report.per_fact)
