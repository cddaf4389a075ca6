"""Expected gain and mean square error of a measurement on a finite ensemble."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble, second_moment
from .errors import PreconditionError
from .pgm import Povm
from .score import ScoreFunction, ScoreMatrix, score_matrix

DEFAULT_T_SEQUENCE = (1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001)


@dataclass(frozen=True)
class GainMseReport:
    per_x_gain: np.ndarray
    expected_gain: float
    mse: float | None = None
    ensemble_label: str = ""
    povm_label: str = ""
    score_label: str = ""


def outcome_probabilities(e: Ensemble, p: Povm) -> np.ndarray:
    """``P[i, c] = Tr[rho_i m(c)]``, shape ``(r, len(p))``."""
    if p.dim != e.dim:
        raise PreconditionError(f"POVM dim {p.dim} != ensemble dim {e.dim}")
    return np.einsum("ijk,ckj->ic", e.states, p.elements).real


def _score_entries(e: Ensemble, s) -> np.ndarray:
    if isinstance(s, ScoreMatrix):
        if s.r != e.r:
            raise PreconditionError(f"score matrix is {s.r}x{s.r}, ensemble has r={e.r}")
        return s.entries
    if isinstance(s, ScoreFunction):
        return score_matrix(s, e).entries
    raise PreconditionError(f"unsupported score object {type(s).__name__}")


def cell_scores(e: Ensemble, s, p: Povm) -> np.ndarray:
    """``Sbar[i, c]``: mu-weighted mean of ``S(x_i, x_j)`` over ``j`` in cell ``c``.

    Reduces to ``S(x_i, x_j)`` for singleton cells.
    """
    entries = _score_entries(e, s)
    out = np.empty((e.r, len(p)))
    for c, cell in enumerate(p.cells):
        idx = list(cell.indices)
        w = e.weights[idx]
        out[:, c] = entries[:, idx] @ w / w.sum()
    return out


def _label(s) -> str:
    return getattr(s, "kind", type(s).__name__)


def per_point_gain(e: Ensemble, s, p: Povm) -> np.ndarray:
    return np.sum(cell_scores(e, s, p) * outcome_probabilities(e, p), axis=1)


def gain_at(e: Ensemble, s, p: Povm, i: int) -> float:
    """``G(x_i) = Tr[rho_i sum_c Sbar(x_i, c) m(c)]``."""
    if not 0 <= i < e.r:
        raise PreconditionError(f"point index {i} out of range")
    return float(per_point_gain(e, s, p)[i])


def expected_gain(e: Ensemble, s, p: Povm) -> GainMseReport:
    g = per_point_gain(e, s, p)
    return GainMseReport(g, float(np.dot(e.weights, g)), None, e.label, p.label, _label(s))


def success_probability(e: Ensemble, p: Povm) -> float:
    """``sum_i p_i Tr[M_i rho_i]`` for a singleton POVM aligned with the points."""
    _require_point_estimates(e, p)
    probs = outcome_probabilities(e, p)
    est = _estimate_indices(p)
    return float(sum(e.weights[est[c]] * probs[est[c], c] for c in range(len(p))))


def _require_point_estimates(e: Ensemble, p: Povm) -> None:
    if not p.is_singleton:
        raise PreconditionError("this quantity needs one outcome per parameter point (singleton cells)")
    if p.dim != e.dim:
        raise PreconditionError(f"POVM dim {p.dim} != ensemble dim {e.dim}")


def _estimate_indices(p: Povm) -> np.ndarray:
    return np.array([c.indices[0] for c in p.cells])


def squared_distances(e: Ensemble) -> np.ndarray:
    diff = e.points[:, None, :] - e.points[None, :, :]
    return np.sum(diff**2, axis=-1)


def mse(e: Ensemble, p: Povm) -> float:
    """``sum_i mu_i sum_c |x_i - xhat_c|^2 Tr[rho_i m_c]`` with ``xhat_c`` the cell's point."""
    _require_point_estimates(e, p)
    if e.param_dim < 1:
        raise PreconditionError("MSE needs param_dim >= 1")
    d2 = squared_distances(e)[:, _estimate_indices(p)]
    return float(np.dot(e.weights, np.sum(d2 * outcome_probabilities(e, p), axis=1)))


def gain_deficit(e: Ensemble, p: Povm, t: float) -> float:
    """``1 - G`` under the score ``exp(-t |x - xhat|^2 / 2)``, summed termwise.

    Each outcome contributes ``Tr[rho_i m_c] (1 - exp(-t d^2 / 2))``, evaluated
    with ``expm1``; this equals ``1 - G`` for a complete POVM and avoids the
    cancellation of forming ``1 - G`` from ``G`` near ``t = 0``.
    """
    _require_point_estimates(e, p)
    d2 = squared_distances(e)[:, _estimate_indices(p)]
    loss = -np.expm1(-0.5 * t * d2)
    return float(np.dot(e.weights, np.sum(loss * outcome_probabilities(e, p), axis=1)))


def mse_via_gain_limit(e: Ensemble, p: Povm, t_sequence=DEFAULT_T_SEQUENCE):
    """Pairs ``(t, 2/t * (1 - G_t))`` approaching the MSE from below as ``t -> 0``.

    ``G_t`` is the expected gain under :func:`gpgm.score.isotropic_gaussian`.
    """
    ts = [float(t) for t in t_sequence]
    if any(t <= 0 for t in ts):
        raise PreconditionError("t values must be > 0")
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise PreconditionError("t_sequence must be strictly decreasing")
    return [(t, 2.0 / t * gain_deficit(e, p, t)) for t in ts]


def estimate_second_moment(e: Ensemble, p: Povm) -> float:
    """``sum_i mu_i sum_c |xhat_c|^2 Tr[rho_i m_c]``: second moment of the estimates.

    For the generalized PGM this equals the prior's second moment.
    """
    _require_point_estimates(e, p)
    norms = np.sum(e.points[_estimate_indices(p)] ** 2, axis=1)
    return float(np.dot(e.weights, outcome_probabilities(e, p) @ norms))


def second_moment_bound_check(e: Ensemble, gpgm: Povm) -> tuple[float, float]:
    """``(MSE(gpgm), 4 E_{mu,2})``; the first should never exceed the second."""
    return mse(e, gpgm), 4.0 * second_moment(e)
