"""Small built-in invariant suites run by ``gpgm selftest``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ovm
from .ensemble import Ensemble, displacement, random_ensemble
from .gain import expected_gain
from .optimal import helstrom_two_state
from .pgm import build_finite_pgm, build_gpgm, validate_povm
from .score import delta_score, gaussian_score, verify_convolution

SUITES = ("appendixA", "convolution", "pgm-reduction", "bk-anchor", "bosonic")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def _appendix_a(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    ok = True
    for d in (2, 3, 4, 6):
        for _ in range(20):
            k = int(rng.integers(1, 6))
            l = ovm.random_ovm(d, k, rng)
            f, g = rng.uniform(-2, 2, k), rng.uniform(-2, 2, k)
            for check in (ovm.trace_pairing_identity(f, l), ovm.hs_pairing_identity(f, g, l)):
                ok &= check.passed
                worst = max(worst, abs(check.lhs - check.rhs))
            phi, psi = ovm.random_ovm(d, 2, rng).values
            ok &= ovm.hs_dominance((phi - psi) / 2, (phi + psi) / 2).passed
    return SuiteResult("appendixA", bool(ok), f"max identity gap {worst:.2e}")


def _convolution(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sigma in (0.25, 1.0, 4.0):
        s = gaussian_score([[sigma]])
        pairs = [(a, a + dx) for a, dx in zip(rng.uniform(-2, 2, 5), rng.uniform(-3, 3, 5))]
        worst = max(worst, verify_convolution(s, pairs).max_deviation)
    g = rng.standard_normal((2, 2))
    s2 = gaussian_score(g @ g.T + 0.3 * np.eye(2))
    pairs = [(rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)) for _ in range(3)]
    worst = max(worst, verify_convolution(s2, pairs, nodes=200).max_deviation)
    return SuiteResult("convolution", worst <= 1e-6, f"max deviation {worst:.2e}")


def _pgm_reduction(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst, ok = 0.0, True
    for k in range(20):
        d, r = int(rng.integers(2, 7)), int(rng.integers(2, 9))
        support = int(rng.integers(1, d)) if k % 4 == 0 else None
        e = random_ensemble(d, r, 1, rng.integers(2**32), "pure" if k % 2 else "mixed", support)
        a, b = build_gpgm(e), build_finite_pgm(e)
        worst = max(worst, float(np.max(np.abs(a.elements - b.elements))))
        ok &= validate_povm(a).passed
    return SuiteResult("pgm-reduction", ok and worst <= 1e-8, f"max element gap {worst:.2e}")


def _bk_anchor(_seed: int) -> SuiteResult:
    zero = np.diag([1.0, 0.0]).astype(complex)
    plus = np.full((2, 2), 0.5, dtype=complex)
    e = Ensemble([[0.0], [1.0]], [0.5, 0.5], [zero, plus])
    p_pgm = expected_gain(e, delta_score(2), build_gpgm(e)).expected_gain
    p_hel = helstrom_two_state(0.5, zero, 0.5, plus).objective
    ok = p_hel <= np.sqrt(p_pgm) + 1e-10 and p_pgm <= p_hel + 1e-10
    ok &= abs(p_hel - 0.5 * (1 + 1 / np.sqrt(2))) <= 1e-12
    return SuiteResult("bk-anchor", bool(ok), f"P_helstrom={p_hel:.6f} sqrt(P_pgm)={np.sqrt(p_pgm):.6f}")


def _bosonic(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        x = rng.uniform(-1, 1, 2)
        x *= rng.uniform(0, 2) / max(np.linalg.norm(x), 1e-12)
        overlap = displacement(x, 30)[0, 0]
        worst = max(worst, abs(overlap - np.exp(-x @ x / 4)))
    return SuiteResult("bosonic", worst <= 1e-6, f"max overlap error {worst:.2e}")


_RUNNERS = {
    "appendixA": _appendix_a,
    "convolution": _convolution,
    "pgm-reduction": _pgm_reduction,
    "bk-anchor": _bk_anchor,
    "bosonic": _bosonic,
}


def run_selftest(seed: int = 0, suites=SUITES) -> list[SuiteResult]:
    out = []
    for name in suites:
        try:
            out.append(_RUNNERS[name](seed))
        except Exception as exc:  # a crashing suite is a failing suite
            out.append(SuiteResult(name, False, f"{type(exc).__name__}: {exc}"))
    return out


__all__ = ["SUITES", "SuiteResult", "run_selftest"]
