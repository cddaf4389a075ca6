"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line and records it so the
terminal summary lists all criteria together. The module also runs as a
script: ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import time
from pathlib import Path

import numpy as np

from gpgm import linalg
from gpgm.ensemble import (
    Ensemble,
    average_state,
    bosonic_family,
    discretize_gaussian_prior,
    displacement,
    gaussian_grid,
    random_ensemble,
    second_moment,
    thermal_state,
    vacuum,
)
from gpgm.gain import (
    estimate_second_moment,
    expected_gain,
    mse,
    mse_via_gain_limit,
    outcome_probabilities,
    squared_distances,
)
from gpgm.optimal import helstrom_two_state, maximize_success
from gpgm.ovm import hs_dominance, hs_pairing_identity, interval_measure_checks, random_ovm, trace_pairing_identity
from gpgm.pgm import build_finite_pgm, build_gpgm, validate_povm
from gpgm.score import delta_score, gaussian_score, score_matrix, verify_convolution
from gpgm.sweeps import SweepConfig, make_instance, run_sweep

ROOT = Path(__file__).resolve().parents[1]
RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def reduction_corpus():
    """100 seeded ensembles, d in 2..6, r in 2..8; every fourth is rank deficient."""
    rng = np.random.default_rng(2024)
    out = []
    for k in range(100):
        d, r = int(rng.integers(2, 7)), int(rng.integers(2, 9))
        support = int(rng.integers(1, d)) if k % 4 == 0 else None
        kind = "pure" if k % 2 else "mixed"
        out.append(random_ensemble(d, r, 1, int(rng.integers(2**32)), kind, support))
    return out


def test_criterion_01_pgm_reduction():
    corpus = reduction_corpus()
    t0 = time.perf_counter()
    worst = max(float(np.max(np.abs(build_gpgm(e).elements - build_finite_pgm(e).elements)))
                for e in corpus)
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-8 and elapsed < 10,
           f"max element gap {worst:.2e} (<= 1e-8) over {len(corpus)} ensembles in {elapsed:.2f}s (< 10s)")


def test_criterion_02_povm_validity():
    corpus = reduction_corpus()
    deficient = sum(np.sum(linalg.eigvalsh(average_state(e)) > 1e-10) < e.dim for e in corpus)
    reports = [validate_povm(build_gpgm(e), 1e-9) for e in corpus]
    min_eig = min(float(np.min(r.min_eigenvalues)) for r in reports)
    resid = max(r.completeness_residual for r in reports)
    ok = all(r.passed for r in reports) and deficient > 0
    report(2, ok, f"min eigenvalue {min_eig:.2e} (>= -1e-9), completeness residual {resid:.2e} "
                  f"(<= 1e-9), {deficient} rank-deficient cases")


def test_criterion_03_two_state_anchor():
    zero = np.diag([1.0, 0.0]).astype(complex)
    plus = np.full((2, 2), 0.5, dtype=complex)
    e = Ensemble([[0.0], [1.0]], [0.5, 0.5], [zero, plus])
    p_pgm = expected_gain(e, delta_score(2), build_gpgm(e)).expected_gain
    p_hel = helstrom_two_state(0.5, zero, 0.5, plus).objective
    closed = 0.5 * (1 + 1 / np.sqrt(2))
    ok = (abs(p_hel - closed) <= 1e-12 and p_hel <= np.sqrt(p_pgm) + 1e-10
          and p_pgm <= p_hel + 1e-10)
    report(3, ok, f"P_helstrom={p_hel:.6f} (closed form {closed:.6f}), P_PGM={p_pgm:.6f}, "
                  f"sqrt(P_PGM)={np.sqrt(p_pgm):.6f}")


def test_criterion_04_generalized_bound():
    cfg = SweepConfig.load(ROOT / "configs" / "bk_mixed_scores.json")
    t0 = time.perf_counter()
    result = run_sweep("bk", cfg)
    elapsed = time.perf_counter() - t0
    cols = result.columns
    kinds = {row[cols.index("score_kind")] for row in result.rows}
    povms = {row[cols.index("povm_kind")] for row in result.rows}
    violations = sum(row[cols.index("slack")] < -1e-8 for row in result.rows)
    ok = (violations == 0 and len(result.rows) >= 500 and elapsed < 300
          and kinds >= {"delta", "constant", "gaussian"}
          and {"pgm", "helstrom", "solver", "random4"} <= povms)
    report(4, ok, f"{violations} violations over {len(result.rows)} triples "
                  f"(scores {sorted(kinds)}), min slack {result.min_slack:.3e}, {elapsed:.1f}s (< 300s)")


def test_criterion_05_solver_oracle():
    rng = np.random.default_rng(55)
    worst, monotone, iters = 0.0, True, 0
    for k in range(50):
        d = int(rng.integers(2, 5))
        e = random_ensemble(d, 2, 1, int(rng.integers(2**32)), "pure" if k % 2 else "mixed")
        res = maximize_success(e)
        ref = helstrom_two_state(e.weights[0], e.states[0], e.weights[1], e.states[1])
        worst = max(worst, abs(res.objective - ref.objective))
        monotone &= all(b >= a - 1e-12 for a, b in zip(res.trace, res.trace[1:]))
        iters = max(iters, res.iterations)
    report(5, worst <= 1e-6 and monotone,
           f"max |solver - helstrom| {worst:.2e} (<= 1e-6) on 50 instances, "
           f"monotone traces: {monotone}, max iterations {iters}")


def limit_corpus():
    """Bosonic grids and random states on prior grids, N in {1, 2}."""
    out = []
    for k in range(10):
        n = 1 + k % 2
        base = vacuum(30) if k % 4 < 2 else thermal_state(30, 0.2 + 0.1 * k / 10)
        sigma = 0.6 + 0.1 * k
        points = 5 if n == 1 else 3
        out.append(discretize_gaussian_prior(n, sigma, 1.0, points, bosonic_family(base)))
    for k in range(10):
        n = 1 + k % 2
        pts, w = gaussian_grid(n, 1.0, 1.0, 5 if n == 1 else 3)
        states = random_ensemble(2 + k % 4, len(w), n, seed=700 + k).states
        out.append(Ensemble(pts, w, states, f"grid-random{k}"))
    return out


def taylor_ratio(e, p, t):
    # (t/4) E|d|^4 / E|d|^2 under the measurement's outcome distribution
    d2 = squared_distances(e)
    probs = outcome_probabilities(e, p)
    m2 = float(np.dot(e.weights, np.sum(d2 * probs, axis=1)))
    m4 = float(np.dot(e.weights, np.sum(d2**2 * probs, axis=1)))
    return t / 4 * m4 / m2 if m2 > 0 else 0.0


def test_criterion_06_mse_limit():
    corpus = limit_corpus()
    min_slack, worst_gap, premise = np.inf, 0.0, 0.0
    ok = True
    for e in corpus:
        p = build_gpgm(e)
        m = mse(e, p)
        curve = mse_via_gain_limit(e, p)
        min_slack = min(min_slack, min(m - v for _, v in curve))
        t_last, v_last = curve[-1]
        gap = abs(v_last - m) / (1 + m)
        worst_gap = max(worst_gap, gap)
        premise = max(premise, taylor_ratio(e, p, t_last))
        ok &= t_last == 1e-3 and gap <= 1e-3 and min(m - v for _, v in curve) >= -1e-9
    ok &= premise <= 1e-3
    report(6, bool(ok), f"{len(corpus)} instances, min slack {min_slack:.2e} (>= -1e-9), "
                        f"max |G-limit - MSE|/(1+MSE) at t=1e-3 {worst_gap:.2e} (<= 1e-3), "
                        f"max Taylor ratio {premise:.2e}")


def test_criterion_07_factor_two():
    cfg = SweepConfig.load(ROOT / "configs" / "mse_bosonic.json")
    result = run_sweep("mse", cfg)
    cols = result.columns
    rows = result.rows
    slack = [row[cols.index("slack")] for row in rows]
    ensembles = [make_instance(cfg, i) for i in sorted({row[0] for row in rows})]
    distinct = {(e.points.tobytes(), e.weights.tobytes(), e.states.tobytes()) for e in ensembles}
    bosonic = [e for e in ensembles if e.dim == 30]
    ok = (min(slack) >= -1e-8 and len(rows) >= 200 and len(distinct) >= 20
          and bosonic and all(e.r <= 9 for e in bosonic))
    report(7, bool(ok), f"{len(rows)} candidates on {len(distinct)} distinct ensembles "
                        f"({len(bosonic)} bosonic, cutoff 30, <= 9 points), "
                        f"min (2 mse_cand - mse_pgm) {min(slack):.3e} (>= -1e-8)")


def test_criterion_08_second_moment():
    cfg = SweepConfig.load(ROOT / "configs" / "mse_bosonic.json")
    worst_bound, worst_identity = np.inf, 0.0
    for i in range(cfg.num_instances):
        e = make_instance(cfg, i)
        p = build_gpgm(e)
        worst_bound = min(worst_bound, 4 * second_moment(e) - mse(e, p))
        worst_identity = max(worst_identity, abs(estimate_second_moment(e, p) - second_moment(e)))
    report(8, worst_bound >= -1e-8 and worst_identity <= 1e-8,
           f"min (4E - mse_pgm) {worst_bound:.3e} (>= -1e-8), "
           f"max exchange-identity gap {worst_identity:.2e} (<= 1e-8)")


def test_criterion_09_ovm_identities():
    rng = np.random.default_rng(909)
    failures, worst_trace, worst_hs = 0, 0.0, 0.0
    for d in (2, 3, 4, 6):
        for _ in range(100):
            k = int(rng.integers(1, 7))
            l = random_ovm(d, k, rng)
            f, g = rng.uniform(-3, 3, k), rng.uniform(-3, 3, k)
            a, b = trace_pairing_identity(f, l), hs_pairing_identity(f, g, l)
            failures += (not a.passed) + (not b.passed)
            worst_trace = max(worst_trace, abs(a.lhs - a.rhs) / a.tol * 1e-10)
            worst_hs = max(worst_hs, abs(b.lhs - b.rhs) / b.tol * 1e-9)
    dom_fail = 0
    for _ in range(100):
        d = int(rng.integers(2, 7))
        phi, psi = random_ovm(d, 2, rng).values
        dom_fail += not hs_dominance((phi - psi) / 2, (phi + psi) / 2, 1e-10).passed
    cells, cell_fail = 0, 0
    for e in reduction_corpus():
        checks = interval_measure_checks(e, build_gpgm(e), 1e-9)
        cells += len(checks)
        cell_fail += sum(not c.passed for c in checks)
    ok = failures == 0 and dom_fail == 0 and cell_fail == 0
    report(9, ok, f"pairing-identity failures {failures}/800 (scaled gaps {worst_trace:.1e}, {worst_hs:.1e}), "
                  f"dominance failures {dom_fail}/100, interval failures {cell_fail}/{cells} cells")


def test_criterion_10_convolution():
    rng = np.random.default_rng(1010)
    worst = 0.0
    for sigma in (0.25, 1.0, 4.0):
        pairs = [(a, a + dx) for a, dx in zip(rng.uniform(-2, 2, 6), rng.uniform(-3, 3, 6))]
        worst = max(worst, verify_convolution(gaussian_score([[sigma]]), pairs).max_deviation)
    for _ in range(3):
        g = rng.standard_normal((2, 2))
        s = gaussian_score(g @ g.T + 0.3 * np.eye(2))
        pairs = [(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)) for _ in range(4)]
        worst = max(worst, verify_convolution(s, pairs, nodes=200).max_deviation)
    worst_eig = np.inf
    for _ in range(20):
        n, r = int(rng.integers(1, 3)), int(rng.integers(2, 65))
        pts = rng.uniform(-3, 3, (r, n))
        e = Ensemble(pts, np.full(r, 1 / r), [np.eye(2) / 2] * r)
        sigma = np.eye(n) * rng.uniform(0.1, 4.0)
        worst_eig = min(worst_eig, score_matrix(gaussian_score(sigma), e).min_eigenvalue() / r)
    report(10, worst <= 1e-6 and worst_eig >= -1e-9,
           f"max convolution deviation {worst:.2e} (<= 1e-6), "
           f"min eigenvalue / r of Gaussian score matrices {worst_eig:.2e} (>= -1e-9)")


def test_criterion_11_bosonic_overlap():
    rng = np.random.default_rng(1111)
    worst = 0.0
    radii = np.concatenate([[0.0, 2.0], rng.uniform(0, 2, 30)])
    for rad in radii:
        phi = rng.uniform(0, 2 * np.pi)
        x = rad * np.array([np.cos(phi), np.sin(phi)])
        worst = max(worst, abs(displacement(x, 30)[0, 0] - np.exp(-x @ x / 4)))
    report(11, worst <= 1e-6, f"max |<vac|D(x)|vac> - exp(-|x|^2/4)| {worst:.2e} (<= 1e-6), "
                              f"{len(radii)} points with |x| <= 2, cutoff 30")


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
