"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary by ``conftest.py``.
"""
import time

import numpy as np
import pytest

import test_properties
from conftest import record_criterion
from golden_cases import CASES, check_case
from oracles import brute_eo_sweep, char_poly_eig
from racelike.core import GroupAssignment, SeededRng, build_graph
from racelike.fairness import alignment_score, dp_gap, eo_adjust, eo_gap
from racelike.network import MixingMatrix, assortativity, detect_network_groups, mixing_matrix
from racelike.spatial import detect_spatial_groups, dissimilarity
from racelike.linalg import principal_components
from racelike.synth import (
    GraphSynthConfig,
    GroupOutcomeModel,
    OutcomeSynthConfig,
    SpatialSynthConfig,
    TriangularScore,
    gen_homophily_graph,
    gen_outcomes,
    gen_population,
    schelling_sort,
)

SEEDS = range(20)


def _gate(label, passed, detail=""):
    record_criterion(label, bool(passed), detail)
    assert passed, f"{label}: {detail}"


def test_c1_eigensolver_oracle():
    rng = np.random.default_rng(20240601)
    worst_entry = worst_res = 0.0
    start = time.perf_counter()
    for i in range(200):
        k = 2 + i % 2
        x = rng.normal(size=(k, k))
        c = (x + x.T) / 2
        pcs = principal_components(c, k)
        for pc, (lam, v) in zip(pcs, char_poly_eig(c)):
            v = v if v @ pc.vector >= 0 else -v
            worst_entry = max(worst_entry, abs(pc.eigenvalue - lam))
            worst_entry = max(worst_entry, float(np.max(np.abs(pc.vector - v))))
            worst_res = max(worst_res, float(np.max(np.abs(c @ pc.vector - pc.eigenvalue * pc.vector))))
    elapsed = time.perf_counter() - start
    _gate("C1 eigensolver vs closed form", worst_entry <= 1e-6 and worst_res <= 1e-9 and elapsed < 1.0,
          f"max entry err {worst_entry:.2e}, residual {worst_res:.2e}, {elapsed:.3f}s")


def test_c2_dissimilarity_exact():
    hand = dissimilarity([(50, 10), (50, 90)]).D
    full = dissimilarity([(40, 0), (0, 25), (10, 0)]).D
    prop = dissimilarity([(10, 20), (30, 60), (5, 10)]).D
    ok = abs(hand - 0.4) <= 1e-12 and abs(full - 1) <= 1e-12 and abs(prop) <= 1e-12
    _gate("C2 dissimilarity exactness", ok, f"D = {hand!r}, {full!r}, {prop!r}")


def test_c3_assortativity_exact():
    from racelike.io import read_edges, read_groups
    from golden_cases import DATA

    A = read_groups(DATA / "four_groups.csv")
    g = read_edges(DATA / "four_edges.csv", A.ids)
    hand = assortativity(mixing_matrix(g, A)).r
    ids = tuple(range(6))
    within = build_graph(ids, [(0, 1), (1, 2), (3, 4), (4, 5)])
    r_within = assortativity(mixing_matrix(within, GroupAssignment(ids, [0, 0, 0, 1, 1, 1]))).r
    a = np.array([0.2, 0.3, 0.5])
    r_prod = assortativity(MixingMatrix(np.outer(a, a), (0, 1, 2))).r
    ok = abs(hand - 1 / 3) <= 1e-12 and abs(r_within - 1) <= 1e-12 and abs(r_prod) <= 1e-12
    _gate("C3 assortativity exactness", ok, f"r = {hand!r}, {r_within!r}, {r_prod!r}")


def _spatial_run(seed, eps):
    cfg = SpatialSynthConfig(n=2000, k=6, flip_noise=eps, tracts=20, capacity=150, tolerance=0.5, seed=seed)
    pop = gen_population(cfg)
    res = schelling_sort(pop, cfg)
    A = detect_spatial_groups(pop, res.tracts, 1)
    return res.dissimilarity, alignment_score(A, pop.latent_assignment())


def _network_run(seed, eps):
    cfg = GraphSynthConfig(n=1000, k=6, flip_noise=eps, p_in=0.02, p_out=0.002, seed=seed)
    pop = gen_population(cfg)
    g = gen_homophily_graph(pop, cfg)
    A = detect_network_groups(g, pop, 1)
    return alignment_score(A, pop.latent_assignment()), assortativity(mixing_matrix(g, A)).r


def test_c4_spatial_recovery():
    start = time.perf_counter()
    runs = [_spatial_run(s, 0.1) for s in SEEDS]
    elapsed = time.perf_counter() - start
    good = sum(1 for d, al in runs if d >= 0.6 and al >= 0.9)
    _gate("C4 spatial recovery", good >= 18 and elapsed < 10,
          f"{good}/20 seeds with D >= 0.6 and alignment >= 0.9, min alignment "
          f"{min(al for _, al in runs):.3f}, {elapsed:.2f}s")


def test_c5_network_recovery():
    start = time.perf_counter()
    runs = [_network_run(s, 0.1) for s in SEEDS]
    elapsed = time.perf_counter() - start
    good = sum(1 for al, r in runs if al >= 0.85 and r >= 0.5)
    _gate("C5 network recovery", good >= 18 and elapsed < 10,
          f"{good}/20 seeds, min alignment {min(a for a, _ in runs):.3f}, "
          f"min r {min(r for _, r in runs):.3f}, {elapsed:.2f}s")


def _outcome_config(tprs, seed=11):
    models = {
        g: GroupOutcomeModel(
            0.5,
            TriangularScore.with_exceedance(0.5, tpr, 0.3),
            TriangularScore.with_exceedance(0.5, 0.2, 0.3),
        )
        for g, tpr in enumerate(tprs)
    }
    return OutcomeSynthConfig(models, threshold=0.5, seed=seed)


def _two_groups(n, seed=11):
    latent = SeededRng(seed).derive(0).generator.integers(0, 2, n)
    return GroupAssignment(tuple(range(n)), latent)


def test_c6_fairness_pipeline():
    A = _two_groups(5000)
    preds = gen_outcomes(A, _outcome_config([0.8, 0.6]))
    gap = eo_gap(preds, A)
    adj = eo_adjust(preds, A, tolerance=0.02)
    equal = gen_outcomes(A, _outcome_config([0.7, 0.7]))
    dp = dp_gap(equal, A)

    # the adjuster must match exhaustive search on a sample small enough to enumerate
    small = _two_groups(40, seed=4)
    sp = gen_outcomes(small, _outcome_config([0.8, 0.6], seed=4))
    target = min(0.02, eo_gap(sp, small))
    best_correct, _ = brute_eo_sweep(sp.score, sp.y_true, small.labels, target)
    got = eo_adjust(sp, small, tolerance=0.02).predictions
    got_correct = int((got.y_hat == sp.y_true).sum())

    ok = abs(gap - 0.2) <= 0.05 and adj.gap_after <= 0.02 and dp <= 0.05 and got_correct == best_correct
    _gate("C6 fairness pipeline", ok,
          f"eo_gap {gap:.4f} -> {adj.gap_after:.4f}, equal-rate dp_gap {dp:.4f}, "
          f"oracle correct {best_correct} vs {got_correct}")


def test_c7_noise_free_exactness():
    spatial = [_spatial_run(s, 0.0) for s in SEEDS]
    network = [_network_run(s, 0.0) for s in SEEDS]
    ok = all(d > 0 and al == 1.0 for d, al in spatial) and all(al == 1.0 for al, _ in network)
    _gate("C7 noise-free exactness", ok,
          f"spatial min {min(a for _, a in spatial)}, network min {min(a for a, _ in network)}")


def test_c8_golden_determinism(tmp_path):
    results = {name: check_case(name, tmp_path) for name in CASES}
    bad = {k: why for k, (ok, why) in results.items() if not ok}
    _gate("C8 CLI determinism", len(CASES) >= 6 and not bad,
          f"{len(CASES) - len(bad)}/{len(CASES)} golden cases byte-identical" + (f", {bad}" if bad else ""))


def test_c9_invariant_suite():
    props = {n: f for n, f in vars(test_properties).items()
             if n.startswith("test_") and callable(f) and hasattr(f, "hypothesis")}
    failed = []
    for name, fn in props.items():
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report every failing invariant
            failed.append(f"{name}: {type(exc).__name__}")
    _gate("C9 invariant suite", not failed and len(props) >= 10,
          f"{len(props) - len(failed)}/{len(props)} properties x 100 cases" + (f", {failed}" if failed else ""))
