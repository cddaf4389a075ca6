"""Optimal and near-optimal measurements for finite ensembles.

Covers the closed-form two-state optimum, a structure-preserving fixed-point
ascent for general score matrices, certificates for the square-root bound,
and random POVMs used as adversarial candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .ensemble import Ensemble, OutcomeCell, singletons
from .errors import GpgmError, PreconditionError
from .gain import GainMseReport, expected_gain
from .pgm import Povm, build_gpgm
from .score import ScoreMatrix

SOLVER_TOL = 1e-7
SOLVER_MAX_ITERS = 2000
SLACK_TOL = 1e-8
RANDOM_POVM_ATTEMPTS = 8


@dataclass(frozen=True)
class SolverResult:
    povm: Povm
    objective: float
    iterations: int
    optimality_residual: float
    converged: bool
    trace: tuple[float, ...] = field(default=(), repr=False)


def helstrom_two_state(p1: float, rho1, p2: float, rho2) -> SolverResult:
    """Optimal two-state discrimination.

    Outcome 0 is the projector onto the nonnegative eigenspace of
    ``p1 rho1 - p2 rho2`` (numerically zero eigenvalues included), outcome 1
    its complement. The objective is ``(1 + ||p1 rho1 - p2 rho2||_1) / 2``.
    """
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > 1e-12:
        raise PreconditionError(f"priors must be a probability pair, got ({p1}, {p2})")
    gamma = linalg.hermitian(p1 * np.asarray(rho1) - p2 * np.asarray(rho2))
    dec = linalg.eigh(gamma)
    q = dec.eigenvalues
    zero = linalg.RANK_TOL * max(1.0, float(np.max(np.abs(q))))
    plus = dec.reconstruct(lambda _: (q >= -zero).astype(float))
    d = gamma.shape[0]
    povm = Povm(tuple(singletons(2)), np.array([plus, np.eye(d) - plus]), "helstrom")
    objective = 0.5 * (1.0 + float(np.sum(np.abs(q))))
    return SolverResult(povm, objective, 0, 0.0, True, (objective,))


def _weighted_states(e: Ensemble, s: ScoreMatrix) -> np.ndarray:
    # W_j = sum_i S_ij mu_i rho_i
    return np.einsum("ij,i,ikl->jkl", s.entries, e.weights, e.states)


def _objective(w: np.ndarray, m: np.ndarray) -> float:
    return float(np.einsum("jkl,jlk->", w, m).real)


def optimality_residual(w: np.ndarray, m: np.ndarray) -> float:
    """Largest violation of ``Y >= W_j`` with ``Y = sum_j m_j W_j``."""
    y = linalg.hermitian(np.sum(m @ w, axis=0))
    return max(linalg.negative_part_norm(y - wj) for wj in w)


def maximize_success(e: Ensemble, s: ScoreMatrix | None = None,
                     max_iters: int = SOLVER_MAX_ITERS, tol: float = SOLVER_TOL,
                     start: Povm | None = None) -> SolverResult:
    """Ascend ``sum_ij S_ij mu_i Tr[rho_i m_j]`` over singleton POVMs.

    Starting from the PGM, iterate ``m_j <- R^+ W_j m_j W_j R^+`` with
    ``R = (sum_j W_j m_j W_j)^{1/2}``; directions in ``ker R`` keep their
    previous allocation so completeness is preserved. Stops when the
    optimality residual drops to ``tol``. ``s`` defaults to the delta score.
    """
    s = ScoreMatrix(np.eye(e.r), "delta") if s is None else s
    if s.r != e.r:
        raise PreconditionError(f"score matrix is {s.r}x{s.r}, ensemble has r={e.r}")
    w = _weighted_states(e, s)
    m = np.array((build_gpgm(e) if start is None else start).elements)
    trace = [_objective(w, m)]
    residual = optimality_residual(w, m)
    it = 0
    while residual > tol and it < max_iters:
        x = linalg.hermitian(np.sum(w @ m @ w, axis=0))
        r_inv = linalg.pinv_sqrt(x)
        ker = linalg.kernel_projector(x)
        m = np.array([linalg.hermitian(r_inv @ wj @ mj @ wj @ r_inv + ker @ mj @ ker)
                      for wj, mj in zip(w, m)])
        it += 1
        trace.append(_objective(w, m))
        residual = optimality_residual(w, m)
    povm = Povm(tuple(singletons(e.r)), m, f"solver[{e.label}]")
    return SolverResult(povm, trace[-1], it, residual, residual <= tol, tuple(trace))


@dataclass(frozen=True)
class BKCertificate:
    """Square-root bound check for a set of candidate POVMs."""

    gpgm_gain: float
    candidate_gains: np.ndarray
    labels: tuple[str, ...]
    tol: float = SLACK_TOL

    @property
    def sqrt_gain(self) -> float:
        return float(np.sqrt(max(self.gpgm_gain, 0.0)))

    @property
    def slacks(self) -> np.ndarray:
        return self.sqrt_gain - self.candidate_gains

    @property
    def min_slack(self) -> float:
        return float(np.min(self.slacks))

    @property
    def best_gain(self) -> float:
        return float(np.max(self.candidate_gains))

    @property
    def pgm_gap(self) -> float:
        """``G(best candidate) - G_PGM``; nonnegative whenever the PGM is beaten or matched."""
        return self.best_gain - self.gpgm_gain

    @property
    def passed(self) -> bool:
        return bool(np.all(self.slacks >= -self.tol))


def bk_certificate(e: Ensemble, s, gpgm_result: GainMseReport,
                   candidates: Sequence[SolverResult | Povm],
                   tol: float = SLACK_TOL) -> BKCertificate:
    """Check ``G(candidate) <= sqrt(G_PGM)`` for every candidate."""
    if not candidates:
        raise PreconditionError("need at least one candidate")
    gains, labels = [], []
    for c in candidates:
        p = c.povm if isinstance(c, SolverResult) else c
        gains.append(expected_gain(e, s, p).expected_gain)
        labels.append(p.label)
    return BKCertificate(gpgm_result.expected_gain, np.array(gains), tuple(labels), tol)


def random_povm(d: int, k: int, seed, cells: Sequence[OutcomeCell] | None = None,
                label: str = "random") -> Povm:
    """``k`` random PSD elements normalized by ``T^{-1/2}``, ``T = sum_j A_j``.

    Deterministic per ``seed``. A numerically singular ``T`` triggers a
    redraw from a derived seed, up to eight attempts.
    """
    if k < 1 or d < 1:
        raise PreconditionError("need k >= 1 and d >= 1")
    cells = tuple(singletons(k)) if cells is None else tuple(cells)
    if len(cells) != k:
        raise PreconditionError(f"{len(cells)} cells for {k} elements")
    # ranks of at least ceil(d / k) keep T generically invertible
    min_rank = -(-d // k)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    for attempt in range(RANDOM_POVM_ATTEMPTS):
        rng = np.random.default_rng(root if attempt == 0 else np.random.SeedSequence(
            root.entropy, spawn_key=root.spawn_key + (attempt,)))
        rank = rng.integers(min_rank, d + 1, size=k)
        a = []
        for rk in rank:
            g = rng.standard_normal((d, rk)) + 1j * rng.standard_normal((d, rk))
            a.append(g @ g.conj().T)
        a = np.array(a)
        total = linalg.hermitian(a.sum(axis=0))
        q = np.linalg.eigvalsh(total)
        if q[0] <= linalg.RANK_TOL * q[-1]:
            continue
        t_inv = linalg.pinv_sqrt(total)
        elements = np.array([linalg.hermitian(t_inv @ aj @ t_inv) for aj in a])
        return Povm(cells, elements, label)
    raise GpgmError(f"random_povm: singular total after {RANDOM_POVM_ATTEMPTS} attempts")
