"""End-to-end acceptance checks.

Each test exercises one release gate at its stated tolerance and prints a
single PASS/FAIL line straight to the terminal (bypassing capture), so a
verbose run shows one line per gate regardless of other output.
"""
import json
import time
from itertools import combinations

import numpy as np
import pytest

from lexifair.audit import certify, generalization_gap, instability_demo
from lexifair.classification import (
    STUMP_VC_DIM,
    csc_oracle,
    induced_labelings,
    lexifair_clf,
)
from lexifair.core import DualVector, EtaSchedule, GroupErrorVector, RunConfig, group_errors
from lexifair.game import LagrangianContext, auditor_best_response, lagrangian_value
from lexifair.oracle import (
    LossMatrix,
    definition1_gamma,
    exact_lexifair_lp,
    loss_matrix_from_classifiers,
    loss_matrix_from_thetas,
)
from lexifair.regression import ConvexLoss, ParamDomain, lexifair_reg, ogd_step
from lexifair.synth import gen_synth
from lexifair.cli import main as cli_main


def emit(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"{name}: {detail}"


def test_1_instability_values(capsys):
    t0 = time.perf_counter()
    demo = instability_demo()
    elapsed = time.perf_counter() - t0
    gamma_ok = np.allclose(demo["exact_gamma"], [0.5, 0.5, 0.0], atol=1e-9)
    mix_ok = np.allclose(
        sorted(demo["uniform_mixture_errors"], reverse=True),
        [0.55, 0.25, 0.25],
        atol=1e-9,
    )
    third_ok = abs(demo["relaxed_third_value"] - 0.25) <= 1e-9
    ok = gamma_ok and mix_ok and third_ok and elapsed < 1.0
    emit(
        capsys,
        "instability-values",
        ok,
        f"gamma={[round(v, 12) for v in demo['exact_gamma']]} "
        f"relaxed={demo['relaxed_third_value']:.12f} {elapsed:.2f}s",
    )


def test_2_oracle_self_consistency(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        K = int(rng.integers(2, 5))
        cols = int(rng.integers(2, 6))
        M = LossMatrix(rng.uniform(0.0, 1.0, size=(K, cols)))
        truth = exact_lexifair_lp(M, K)
        indep = definition1_gamma(M, K)
        worst = max(worst, max(abs(a - b) for a, b in zip(truth.gamma, indep)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-3 and elapsed < 120.0
    emit(capsys, "oracle-self-consistency", ok,
         f"100 instances, max gamma deviation {worst:.2e}, {elapsed:.1f}s")


def test_3_classification_vs_oracle(capsys):
    t0 = time.perf_counter()
    ell, alpha, delta, budget = 2, 0.1, 0.1, 3000
    good = 0
    slacks = []
    for seed in range(10):
        ds, _ = gen_synth("clf", K=3, n_per_group=10, skew=1.0, noise=0.15,
                          boundary=0.3, seed=seed)
        _, reps = induced_labelings(ds)
        truth = exact_lexifair_lp(loss_matrix_from_classifiers(ds, reps), ell)
        cfg = RunConfig(ell=ell, alpha=alpha, delta=delta, seed=seed, budget=budget)
        out = lexifair_clf(ds, cfg)
        for diag in out.rounds:
            T_sched, B_sched, m_sched, _ = cfg.clf_round(
                diag.j, ds.n, ds.n_min, ds.K
            )
            assert diag.T == T_sched and diag.m == m_sched and diag.B == B_sched
        cert = certify(out.errors, out.eta_schedule, truth.opt_sums, alpha, ell)
        eta_ok = all(
            e <= o + alpha
            for e, o in zip(out.eta_schedule.values, truth.opt_sums)
        )
        slacks.append(round(out.eta_schedule.values[0] - truth.opt_sums[0], 3))
        good += eta_ok and cert.verdict == "pass"
    elapsed = time.perf_counter() - t0
    ok = good >= 9 and elapsed < 600.0
    emit(capsys, "classification-vs-oracle", ok,
         f"{good}/10 runs within alpha with passing certificate, "
         f"level-1 slacks {slacks}, {elapsed:.0f}s")


def test_4_regression_vs_grid_oracle(capsys):
    t0 = time.perf_counter()
    ell, alpha = 2, 0.1
    ds, _ = gen_synth("reg", K=3, n_per_group=10, scale=0.15, skew=2.0, seed=3)
    domain = ParamDomain(np.zeros(2), 1.0)
    loss = ConvexLoss.squared(ds, domain)
    cfg = RunConfig(ell=ell, alpha=alpha, seed=3, budget=10**6,
                    loss_bound=loss.loss_bound, grad_bound=loss.grad_bound,
                    diameter=domain.diameter)
    out = lexifair_reg(ds, cfg, loss, domain)

    thetas = [np.zeros(2)]
    for r in np.linspace(1.0 / 8, 1.0, 8):
        for a in np.linspace(0.0, 2 * np.pi, 24, endpoint=False):
            thetas.append(np.array([r * np.cos(a), r * np.sin(a)]))
    truth = exact_lexifair_lp(loss_matrix_from_thetas(ds, loss, thetas), ell)

    diffs = [abs(e - o) for e, o in zip(out.eta_schedule.values, truth.opt_sums)]
    cert = certify(out.errors, out.eta_schedule, truth.opt_sums, alpha, ell)
    elapsed = time.perf_counter() - t0
    ok = max(diffs) <= alpha and cert.verdict == "pass" and elapsed < 300.0
    emit(capsys, "regression-vs-grid-oracle", ok,
         f"eta deviations {[round(d, 4) for d in diffs]}, "
         f"certificate {cert.verdict}, {elapsed:.1f}s")


def test_5_regret_bounds(capsys):
    t0 = time.perf_counter()
    domain = ParamDomain(np.zeros(3), 1.0)
    D = domain.diameter
    ogd_fails = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(20, 120))
        if seed % 2 == 0:
            # linear losses with gradient norms at most G
            G = float(rng.uniform(0.5, 3.0))
            grads = rng.normal(size=(T, 3))
            grads *= (
                G * rng.uniform(0.2, 1.0, size=T) / np.linalg.norm(grads, axis=1)
            )[:, None]
            theta = domain.center.copy()
            total = 0.0
            for g in grads:
                total += float(g @ theta)
                theta = ogd_step(theta, g, D / (G * np.sqrt(T)), domain)
            regret = total + float(np.linalg.norm(grads.sum(axis=0)))
        else:
            # quadratics centered inside the ball; gradient norm at most 4
            centers = rng.normal(size=(T, 3))
            centers *= (
                rng.uniform(0, 1, size=T) ** (1 / 3)
                / np.linalg.norm(centers, axis=1)
            )[:, None]
            G = 4.0
            theta = domain.center.copy()
            total = 0.0
            for c in centers:
                total += float(((theta - c) ** 2).sum())
                theta = ogd_step(theta, 2 * (theta - c), D / (G * np.sqrt(T)), domain)
            cbar = centers.mean(axis=0)
            regret = total - float(((cbar - centers) ** 2).sum())
        if regret > G * D * np.sqrt(T):
            ogd_fails += 1

    # perturbed-leader play against random bounded cost sequences
    ds, _ = gen_synth("clf", K=3, n_per_group=4, skew=1.0, seed=0)
    n = ds.n
    B = (0.1 + 1) / 0.1
    M = B / ds.n_min
    T = 100
    rate = 1.0 / (M * np.sqrt(n * T))
    preds, _ = induced_labelings(ds)
    regrets = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        costs = rng.uniform(-M, M, size=(T, n))
        cum = np.zeros(n)
        total = 0.0
        for t in range(T):
            h = csc_oracle(cum + rng.random(n) / rate, ds)
            total += float(costs[t] @ h.predict(ds.X))
            cum += costs[t]
        regrets.append(total - float((cum @ preds).min()))
    ftpl_mean = float(np.mean(regrets))
    ftpl_bound = 2 * M * n**1.5 * np.sqrt(T)
    elapsed = time.perf_counter() - t0
    ok = ogd_fails == 0 and ftpl_mean <= 1.5 * ftpl_bound and elapsed < 120.0
    emit(capsys, "regret-bounds", ok,
         f"gradient-descent failures {ogd_fails}/50, perturbed-leader mean "
         f"regret {ftpl_mean:.1f} vs limit {1.5 * ftpl_bound:.1f}, {elapsed:.0f}s")


def test_6_auditor_exactness(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    checked = failures = 0
    for K in range(2, 7):
        for j in range(1, min(3, K) + 1):
            for _ in range(20):
                errors = GroupErrorVector(rng.uniform(0.0, 1.0, size=K))
                history = EtaSchedule(
                    tuple(rng.uniform(0.0, float(r)) for r in range(1, j)), 1.0
                )
                eta_j = float(rng.uniform(0.0, j))
                B = float(rng.uniform(0.5, 12.0))
                ctx = LagrangianContext(j, history, B, 1.0)
                lam = auditor_best_response(errors, eta_j, ctx)
                value = lagrangian_value(errors, eta_j, lam, ctx)
                best = lagrangian_value(
                    errors, eta_j, DualVector.zero(B, j), ctx
                )
                for r in range(1, j + 1):
                    for subset in combinations(range(K), r):
                        vertex = DualVector.vertex(frozenset(subset), B, j)
                        best = max(
                            best, lagrangian_value(errors, eta_j, vertex, ctx)
                        )
                checked += 1
                if value < best - 1e-12:
                    failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0
    emit(capsys, "auditor-exactness", ok,
         f"{failures} failures over {checked} enumerated instances, {elapsed:.1f}s")


def test_7_generalization(capsys):
    t0 = time.perf_counter()
    K, n_per, ell, alpha, delta, budget = 3, 2000, 2, 0.1, 0.1, 1000
    rate_ok = cert_ok = 0
    betas = []
    for trial in range(20):
        train, _ = gen_synth("clf", K=K, n_per_group=n_per, skew=0.5, noise=0.2,
                             boundary=0.3, seed=100 + trial)
        test, _ = gen_synth("clf", K=K, n_per_group=n_per, skew=0.5, noise=0.2,
                            boundary=0.3, seed=200 + trial)
        out = lexifair_clf(
            train, RunConfig(ell=ell, alpha=alpha, delta=delta,
                             seed=trial, budget=budget)
        )
        model = out.model
        report = generalization_gap(
            lambda X, y: model.predict_proba(X) * (1 - 2 * y) + y,
            train, test, ell, alpha, delta=delta, vc_dim=STUMP_VC_DIM,
        )
        bound = 3 * np.sqrt(
            (np.log(K / delta) + STUMP_VC_DIM * np.log(train.n)) / train.n_min
        )
        _, reps = induced_labelings(test)
        truth = exact_lexifair_lp(loss_matrix_from_classifiers(test, reps), ell)
        test_errors = group_errors(
            model.predict_proba(test.X) * (1 - 2 * test.y) + test.y, test
        )
        cert = certify(
            test_errors, out.eta_schedule, truth.opt_sums, report.alpha_prime, ell
        )
        betas.append(round(report.beta_hat, 4))
        rate_ok += report.beta_hat <= bound
        cert_ok += cert.verdict == "pass"
    elapsed = time.perf_counter() - t0
    ok = rate_ok >= 18 and cert_ok >= 18 and elapsed < 600.0
    emit(capsys, "generalization", ok,
         f"rate bound held {rate_ok}/20, test-set certificates {cert_ok}/20, "
         f"max gap {max(betas)}, {elapsed:.0f}s")


def test_8_determinism(capsys, tmp_path):
    t0 = time.perf_counter()

    def run(argv):
        rc = cli_main([str(a) for a in argv])
        assert rc in (0, 2)

    def twice(name, argv_fn):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{name}_{tag}.json"
            run(argv_fn(out))
            outs.append(out.read_bytes())
        return outs[0] == outs[1]

    data = tmp_path / "d.csv"
    run(["gen-synth", "--task", "clf", "--groups", "3", "--n", "8",
         "--skew", "1.0", "--seed", "7", "--output", data])
    data2 = tmp_path / "d2.csv"
    run(["gen-synth", "--task", "clf", "--groups", "3", "--n", "8",
         "--skew", "1.0", "--seed", "7", "--output", data2])
    reg_data = tmp_path / "r.csv"
    run(["gen-synth", "--task", "reg", "--groups", "3", "--n", "8",
         "--scale", "0.15", "--skew", "2.0", "--seed", "3", "--output", reg_data])
    matrix = tmp_path / "m.csv"
    run(["oracle", "--input", data, "--from-dataset", "--ell", "2",
         "--matrix-out", matrix, "--output", tmp_path / "o0.json"])

    results = {
        "gen-synth": data.read_bytes() == data2.read_bytes(),
        "oracle": twice("oracle", lambda out: [
            "oracle", "--input", data, "--from-dataset", "--ell", "2",
            "--output", out]),
        "train-clf": twice("trainclf", lambda out: [
            "train-clf", "--input", data, "--ell", "2", "--alpha", "0.1",
            "--delta", "0.1", "--seed", "5", "--budget", "120",
            "--oracle", matrix, "--output", out]),
        "train-reg": twice("trainreg", lambda out: [
            "train-reg", "--input", reg_data, "--ell", "2", "--alpha", "0.1",
            "--seed", "5", "--output", out]),
        "certify": twice("certify", lambda out: [
            "certify", "--input", tmp_path / "trainclf_a.json",
            "--oracle", matrix, "--output", out]),
        "gap": twice("gap", lambda out: [
            "gap", "--input", data, "--test", data2, "--model",
            tmp_path / "trainclf_a.json", "--ell", "2", "--alpha", "0.1",
            "--output", out]),
        "demo-instability": twice("demo", lambda out: [
            "demo-instability", "--output", out]),
    }
    elapsed = time.perf_counter() - t0
    bad = [k for k, v in results.items() if not v]
    emit(capsys, "determinism", not bad,
         f"{len(results)} commands re-run byte-identical"
         + (f", mismatches: {bad}" if bad else "") + f", {elapsed:.1f}s")
