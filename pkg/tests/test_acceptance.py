"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion. Tolerances are fixed here and nowhere else.
"""

import threading
import time

import numpy as np
import pytest

from conftest import make_example_scenario, random_dataset, random_digraph
from cqadiff.baselines import (
    ScoreTable,
    build_acceptance_graph,
    hits_authority,
    rcm_train,
    score_table_predict,
)
from cqadiff.experiments import inject_noise, run_pipeline
from cqadiff.features import compute_cache, leader_follower_rank, reputation_pagerank
from cqadiff.global_rank import cycle_rate
from cqadiff.model import make_training_set, predict_pair, train
from cqadiff.network import (
    DifficultyNetwork,
    EdgeType,
    build_network,
    build_type1_edges,
    build_type2_edges,
    build_type3_edges,
)
from cqadiff.service import PredictionService, ServiceServer
from cqadiff.synthetic import make_benchmark
from oracles import (
    lf_rank_reference,
    oracle_acceptance_graph,
    oracle_type1,
    oracle_type2,
    oracle_type3,
    hits_eigen_residual,
)
from test_service import call, find_pair_with_confidence


def report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


@pytest.fixture(scope="module")
def trained():
    """Timed full pipeline on the planted-order benchmark (shared below)."""
    t0 = time.perf_counter()
    bench = make_benchmark()
    cache = compute_cache(bench.network, bench.dataset)
    model = train(make_training_set(bench.network, cache))
    run = run_pipeline(bench.dataset, bench.network, bench.test_pairs,
                       times=bench.times)
    elapsed = time.perf_counter() - t0
    return bench, cache, model, run.report, elapsed


def test_golden_network_example_scenario():
    t0 = time.perf_counter()
    ds = make_example_scenario()
    net = build_network(ds, delta_t=1)
    elapsed = time.perf_counter() - t0
    expected = {
        (102, 203): {EdgeType.TYPE1},
        (102, 204): {EdgeType.TYPE1},
        (102, 202): {EdgeType.TYPE2},
        (201, 202): {EdgeType.TYPE3},
        (202, 203): {EdgeType.TYPE3},
        (203, 204): {EdgeType.TYPE3},
        (101, 102): {EdgeType.TYPE3},
        (102, 103): {EdgeType.TYPE3},
    }
    got = {pair: set(types) for pair, types in net.edges.items()}
    named_ok = (
        got.get((102, 203)) == {EdgeType.TYPE1}
        and got.get((102, 202)) == {EdgeType.TYPE2}
        and got.get((202, 203)) == {EdgeType.TYPE3}
    )
    report("golden network: exact 8-edge set with type tags",
           got == expected and named_ok and elapsed < 1.0,
           f"{len(got)} edges in {elapsed * 1000:.0f} ms")


def test_rule_oracle_equivalence():
    rng = np.random.default_rng(1234)
    for i in range(200):
        ds = random_dataset(rng, max_posts=50)
        delta_t = int(rng.integers(1, 4))
        if (build_type1_edges(ds) != oracle_type1(ds)
                or build_type2_edges(ds, delta_t) != oracle_type2(ds, delta_t)
                or build_type3_edges(ds) != oracle_type3(ds)):
            report("rule-oracle equivalence on 200 random datasets", False,
                   f"mismatch at dataset {i}")
    report("rule-oracle equivalence on 200 random datasets", True)


def test_leader_follower_matches_reference():
    rng = np.random.default_rng(99)
    for i in range(500):
        nodes, edges = random_digraph(rng, max_nodes=12)
        net = DifficultyNetwork(
            nodes=set(nodes),
            edges={p: frozenset({EdgeType.NOISE}) for p in edges},
        )
        if leader_follower_rank(net, 0.65) != lf_rank_reference(nodes, edges, 0.65):
            report("ranking recursion matches straight-line reference (500 digraphs)",
                   False, f"mismatch at graph {i}")
    report("ranking recursion matches straight-line reference (500 digraphs)", True)


def test_reputation_pagerank_fixed_points():
    iso = reputation_pagerank(
        DifficultyNetwork(nodes={1}, edges={}), {1: 1.0})
    ok_iso = abs(iso[1] - 0.15) < 1e-10

    two = reputation_pagerank(
        DifficultyNetwork(nodes={1, 2}, edges={(1, 2): frozenset({EdgeType.NOISE})}),
        {1: 1.0, 2: 1.0})
    ok_two = abs(two[1] - 0.15) < 1e-8 and abs(two[2] - 0.2775) < 1e-8

    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        nodes, edges = random_digraph(rng, max_nodes=20)
        reps = {n: float(rng.uniform()) for n in nodes}
        net = DifficultyNetwork(
            nodes=set(nodes), edges={p: frozenset({EdgeType.NOISE}) for p in edges})
        pr = reputation_pagerank(net, reps)
        outdeg = {n: 0 for n in nodes}
        for a, _ in edges:
            outdeg[a] += 1
        for n in nodes:
            incoming = sum(pr[a] / outdeg[a] for (a, b) in edges if b == n)
            worst = max(worst, abs(0.15 * reps[n] + 0.85 * incoming - pr[n]))
    report("reputation-seeded PageRank fixed points",
           ok_iso and ok_two and worst < 1e-8,
           f"isolated {iso[1]:.12f}, pair ({two[1]:.6f}, {two[2]:.6f}), "
           f"max residual {worst:.2e}")


def test_training_set_balance():
    rng = np.random.default_rng(21)
    for i in range(50):
        ds = random_dataset(rng)
        net = build_network(ds, delta_t=int(rng.integers(1, 4)))
        cache = compute_cache(net, ds)
        ts = make_training_set(net, cache)
        pos = int((ts.labels == 1).sum())
        neg = int((ts.labels == -1).sum())
        if not (pos == neg == net.n_edges):
            report("training-set class balance on 50 random networks", False,
                   f"network {i}: {pos} vs {neg} vs {net.n_edges} edges")
    report("training-set class balance on 50 random networks", True)


def test_decision_antisymmetry(trained):
    bench, cache, model, _, _ = trained
    rng = np.random.default_rng(777)
    qids = sorted(bench.network.nodes)
    for k in range(10_000):
        i, j = rng.choice(len(qids), size=2, replace=False)
        a, b = qids[i], qids[j]
        va = predict_pair(model, cache, a, b, bench.times)
        vb = predict_pair(model, cache, b, a, bench.times)
        if va.harder != vb.harder or va.confidence != vb.confidence:
            report("decision antisymmetry on 10,000 random pairs", False,
                   f"pair ({a}, {b}) disagrees")
    report("decision antisymmetry on 10,000 random pairs", True)


def test_end_to_end_synthetic(trained):
    bench, _, _, rep, elapsed = trained
    report(
        "end-to-end synthetic benchmark",
        abs(bench.consistency - 0.90) <= 0.03 and rep.f1 >= 0.85 and elapsed < 60.0,
        f"consistency {bench.consistency:.3f}, F1 {rep.f1:.3f} on {rep.n} pairs, "
        f"{elapsed:.1f}s",
    )


def test_noise_response(trained):
    bench, _, _, clean_report, _ = trained
    noisy_net = inject_noise(bench.network, "Noise2", 20, seed=3)
    preserved = noisy_net.n_edges == bench.network.n_edges
    noisy = run_pipeline(bench.dataset, noisy_net, bench.test_pairs,
                         times=bench.times)
    report(
        "noise response (Noise2 at 20%)",
        preserved and noisy.report.f1 <= clean_report.f1,
        f"F1 {clean_report.f1:.3f} -> {noisy.report.f1:.3f}, |E| preserved: {preserved}",
    )


def test_transitivity(trained):
    bench, cache, model, _, _ = trained
    predict = lambda a, b: predict_pair(model, cache, a, b, bench.times)
    nodes = sorted(bench.network.nodes)
    rates = {n: cycle_rate(predict, nodes, n, trials=10_000, seed=n)
             for n in (3, 4, 5)}
    rng = np.random.default_rng(17)
    table = ScoreTable(scores={n: float(rng.normal()) for n in nodes}, source="HITS")
    score_predict = lambda a, b: score_table_predict(table, a, b, bench.times)
    score_rates = {n: cycle_rate(score_predict, nodes, n, trials=2_000, seed=n)
                   for n in (3, 4, 5)}
    report(
        "transitivity audit (10,000 trials each)",
        all(r < 0.05 for r in rates.values())
        and all(r == 0.0 for r in score_rates.values()),
        f"model cycle rates {rates}, score-backed {score_rates}",
    )


def test_rcm_sanity():
    result = rcm_train([("a", "b"), ("b", "c")], delta=1.0, gamma=0.001, iters=5000)
    theta = result.theta
    ordered = theta["c"] >= theta["b"] >= theta["a"] and theta["c"] > theta["a"]
    monotone = all(b <= a + 1e-9 for a, b in zip(result.objective,
                                                 result.objective[1:]))
    report(
        "competition-model sanity (chain ordering + objective descent)",
        ordered and monotone,
        f"theta=({theta['a']:.3f}, {theta['b']:.3f}, {theta['c']:.3f})",
    )


def test_baseline_oracles():
    ds = __import__("test_baselines").three_answer_dataset()
    acceptance = build_acceptance_graph(ds)
    worked = acceptance == {(2, 1), (3, 1)} == oracle_acceptance_graph(ds)

    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(50):
        nodes, edges = random_digraph(rng, max_nodes=12)
        if not edges:
            continue
        table = hits_authority(nodes, sorted(edges))
        worst = max(worst, hits_eigen_residual(nodes, edges, table.scores))
    report(
        "baseline oracles (acceptance-graph example + eigen-check)",
        worked and worst < 1e-6,
        f"worked example ok: {worked}, max eigen residual {worst:.2e}",
    )


def test_feedback_filter_scripted_service(trained):
    bench, cache, model, _, _ = trained
    svc = PredictionService(model.copy(), bench.dataset, bench.network, cache)
    server = ServiceServer(svc, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        a, b, out = find_pair_with_confidence(svc, bench, 0.80, 1.0)
        wrong = a if out["harder"] == b else b
        _, body_high = call(base, "/v1/feedback",
                            {"question_a": a, "question_b": b,
                             "user_says_harder": wrong})

        a2, b2, out2 = find_pair_with_confidence(svc, bench, 0.5, 0.7, seed=5)
        wrong2 = a2 if out2["harder"] == b2 else b2
        margin_before = predict_pair(svc.model, cache, a2, b2, bench.times).margin
        _, body_low = call(base, "/v1/feedback",
                           {"question_a": a2, "question_b": b2,
                            "user_says_harder": wrong2})
        margin_after = predict_pair(svc.model, cache, a2, b2, bench.times).margin
        toward = 1.0 if wrong2 == b2 else -1.0
        moved = (margin_after - margin_before) * toward > 0
        report(
            "feedback filter over scripted service calls",
            body_high["accepted"] is False and body_low["accepted"] is True and moved,
            f"high-confidence rejected: {not body_high['accepted']}, "
            f"low-confidence applied and margin moved: {moved}",
        )
    finally:
        server.shutdown()
        server.server_close()
