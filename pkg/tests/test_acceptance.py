"""Acceptance suite: one test per criterion, each announcing a PASS/FAIL line.

Run alone with ``pytest -v tests/test_acceptance.py``; the lines are repeated
under an "acceptance criteria" heading at the end of the session. The BEKK
consistency trend (criterion 6) dominates the runtime at roughly 20-30
minutes on one core.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from edcorder.bekk import BekkParams, PathSample, log_likelihood, score, simulate
from edcorder.cli import main as cli_main
from edcorder.diagnostics import hessian_trace, overfit_gap_trace, underfit_gap_trace
from edcorder.estimator import BekkFamily, FitOptions
from edcorder.experiment import ExperimentConfig, run_experiment
from edcorder.markov import MarkovFamily, MarkovSpec, markov_simulate
from edcorder.matrix import duplication_matrix, kronecker, spectral_radius, vec, vech
from edcorder.nested import PenaltyRule, select_order

from acceptance_configs import BEKK_TREND, MARKOV_TREND, ORDER0_CHAIN, penalty_contrast
from helpers import fd_score, random_params
from oracles import brute_force_selection, scalar_garch_loglik

GOLDEN = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def golden(name):
    with open(os.path.join(GOLDEN, name)) as fh:
        return json.load(fh)


def test_criterion_1_operator_identities(announce):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_vec = worst_vech = worst_rho = 0.0
    for m in (1, 2, 3, 4):
        D, Dp = duplication_matrix(m)
        for _ in range(1000):
            G = rng.standard_normal((m, m))
            S = G + G.T
            worst_vec = max(worst_vec, np.max(np.abs(D @ vech(S) - vec(S))))
            worst_vech = max(worst_vech, np.max(np.abs(Dp @ vec(S) - vech(S))))
            for A in (S, G):
                r = spectral_radius(A)
                worst_rho = max(worst_rho, abs(spectral_radius(kronecker(A, A)) - r * r) / max(r * r, 1e-300))
    elapsed = time.perf_counter() - t0
    ok = worst_vec <= 1e-12 and worst_vech <= 1e-12 and worst_rho <= 1e-8 and elapsed < 10
    announce(1, "operator identities", ok,
             f"max|D vech - vec|={worst_vec:.1e}, max|D+ vec - vech|={worst_vech:.1e}, "
             f"max rel rho err={worst_rho:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_gradient_matches_finite_differences(announce):
    # relative error uses max(|fd|, 1) as denominator so that coordinates whose
    # derivative is near zero are compared on an absolute scale
    t0 = time.perf_counter()
    worst = 0.0
    for m in (1, 2):
        for i in range(50):
            rng = np.random.default_rng(1000 * m + i)
            p = random_params(rng, m, 1, 1)
            x = simulate(p, 500, 1000 * m + i)
            g = score(p, x, n_cond=1)
            fd = fd_score(p, x, 1)
            worst = max(worst, float(np.max(np.abs(g - fd) / np.maximum(np.abs(fd), 1.0))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-5 and elapsed < 120
    announce(2, "score vs central differences", ok,
             f"100 points (50 per m), worst rel err={worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_scalar_reduction(announce):
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        c, a, b = rng.uniform(0.05, 1.0), rng.uniform(0.0, 0.6), rng.uniform(0.0, 0.75)
        x = simulate(BekkParams.scalar(rng.uniform(0.05, 0.5), [0.4], [0.5]), 500, seed).x[:, 0]
        ours = log_likelihood(BekkParams.scalar(c, [a], [b]), x)
        worst = max(worst, abs(ours - scalar_garch_loglik(c, a * a, b * b, x)))
    ok = worst <= 1e-10
    announce(3, "scalar GARCH(1,1) reduction", ok, f"20 pairs, max abs diff={worst:.1e}")
    assert ok


def test_criterion_4_markov_brute_force(announce):
    rules = [PenaltyRule.bic(), PenaltyRule.aic(), PenaltyRule.constant(1.0)]
    mismatched = 0
    worst = 0.0
    for i in range(100):
        rng = np.random.default_rng(4000 + i)
        s = int(rng.integers(2, 4))
        r = int(rng.integers(0, 3))
        spec = MarkovSpec(rng.dirichlet(np.ones(s), size=s ** r))
        x = markov_simulate(spec, int(rng.integers(30, 2000)), 4000 + i)
        K = int(rng.integers(0, 5))
        rule = rules[i % 3] if i % 4 else PenaltyRule(float(rng.uniform(0.1, 2)), float(rng.uniform(0, 0.5)),
                                                      float(rng.uniform(0, 1)), float(rng.uniform(0, 2)))
        rep = select_order(MarkovFamily(s), x, K, rule)
        chosen, rows = brute_force_selection(x, K, s, rule(len(x)))
        if rep.chosen != (chosen,) or [c.order for c in rep.candidates] != [(k,) for k, _, _ in rows]:
            mismatched += 1
        for c, (_, ll, sc) in zip(rep.candidates, rows):
            worst = max(worst, abs(c.loglik - ll) / max(1.0, abs(ll)), abs(c.score - sc) / max(1.0, abs(sc)))
    ok = mismatched == 0 and worst < 1e-12
    announce(4, "Markov selection vs brute force", ok,
             f"100 triples, {mismatched} order mismatches, max rel loglik/score diff={worst:.1e}")
    assert ok


def test_criterion_5_markov_consistency_trend(announce):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(MARKOV_TREND)
    res = run_experiment(cfg)
    freq = [res.frequency("bic", n, (2,)) for n in cfg.n_grid]
    elapsed = time.perf_counter() - t0
    pilot = golden("markov_trend.json")
    ok = all(a <= b for a, b in zip(freq, freq[1:])) and freq[-1] >= 0.9 and elapsed < 300
    announce(5, "Markov consistency trend", ok,
             f"freq(order 2) at n={cfg.n_grid}: {freq} (pilot {pilot['frequency_of_order_2']}), "
             f"{elapsed:.0f}s")
    assert ok


def test_criterion_6_bekk_consistency_trend(announce):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(BEKK_TREND)
    res = run_experiment(cfg)
    freq = [res.frequency("bic", n, (1, 1)) for n in cfg.n_grid]
    elapsed = time.perf_counter() - t0
    pilot = golden("bekk_trend.json")
    runner_up = {n: max((row["frequency"], row["order"]) for row in res.table if row["n"] == n)
                 for n in cfg.n_grid}
    ok = freq[0] < freq[1] and freq[1] >= 0.6 and elapsed < 1800
    announce(6, "BEKK consistency trend", ok,
             f"freq((1,1)) at n={cfg.n_grid}: {freq}, modal order {runner_up}, "
             f"pilot {{n: freq((1,1))}} = { {n: f['(1,1)'] for n, f in pilot['frequency'].items()} }, "
             f"{elapsed:.0f}s")
    assert ok


def test_criterion_7_penalty_rate_contrast(announce):
    pairs = []
    for batch in range(5):
        res = run_experiment(ExperimentConfig.from_dict(penalty_contrast(batch)))
        over = [1.0 - res.frequency(name, 8000, (0,)) for name in ("constant(1)", "bic")]
        pairs.append(tuple(over))
    ok = all(const > bic for const, bic in pairs)
    announce(7, "constant penalty overfits more than BIC", ok,
             "overfit frequency (constant, bic) per batch: "
             + ", ".join(f"({a:.3f}, {b:.3f})" for a, b in pairs))
    assert ok


def test_criterion_8_assumption_probes(announce):
    truth = BekkParams.scalar(0.1, [0.3], [0.6])
    fam = BekkFamily(1, FitOptions(n_starts=2))

    under = underfit_gap_trace(fam, truth, (0, 0), n_grid=(2000, 4000, 8000), seeds=range(20))
    pos = np.mean(under.values > 0, axis=1)
    under_ok = bool(np.all(pos >= 0.95))

    over = overfit_gap_trace(MarkovFamily(2), MarkovSpec(ORDER0_CHAIN["transitions"]), (1,),
                             n_grid=(2000, 4000, 8000), seeds=range(2000))
    med = over.median()
    over_ok = bool(np.all(np.diff(med) <= 0))

    hess = hessian_trace(fam, truth, (1, 1), seeds=range(10))
    min_eig = float(np.nanmin(hess.values))
    hess_ok = bool(np.all(hess.status == "ok") and min_eig > 0)

    c = 0.5
    iid = hessian_trace(BekkFamily(1), BekkParams.scalar(c), (0, 0), n_grid=(2000, 8000), seeds=range(10))
    rel = np.abs(iid.values[-1] * 2 * c * c - 1.0)
    iid_ok = bool(np.all(rel <= 0.10))

    ok = under_ok and over_ok and hess_ok and iid_ok
    announce(8, "assumption probes", ok,
             f"underfit>0 share at n=2000/4000/8000 {np.round(pos, 3).tolist()}; "
             f"overfit medians {np.round(med, 4).tolist()}; hessian min eig {min_eig:.2e}; "
             f"iid information max rel err {rel.max():.3f}")
    assert ok


def test_criterion_9_determinism(announce, tmp_path):
    configs = {
        "markov": dict(MARKOV_TREND, replications=5, n_grid=[300, 600],
                       penalties=[{"kind": "bic"}, {"kind": "aic"}]),
        "bekk": dict(BEKK_TREND, replications=2, n_grid=[300], K=[1, 1]),
    }
    identical = True
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        first, second, third = (tmp_path / f"{name}-{i}" for i in range(3))
        assert cli_main(["experiment", "--config", str(path), "--output-dir", str(first)]) == 0
        for out, workers in ((second, "1"), (third, "2")):
            assert cli_main(["experiment", "--manifest", str(first / "manifest.json"),
                             "--output-dir", str(out), "--workers", workers]) == 0
            for f in ("frequency.csv", "reports.jsonl", "manifest.json"):
                identical &= (first / f).read_bytes() == (out / f).read_bytes()
    announce(9, "determinism", identical,
             "Markov and BEKK runs rerun from manifest with 1 and 2 workers: "
             + ("byte-identical" if identical else "outputs differ"))
    assert identical
