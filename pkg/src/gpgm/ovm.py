"""Operator-valued measures on finite partitions.

Integration of a simple function against a positive operator-valued
measure, its semivariation, and the trace and Hilbert-Schmidt pairing
identities. Everything is exact on finite partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .ensemble import Ensemble, OutcomeCell, average_state
from .errors import PreconditionError
from .pgm import Povm

TRACE_IDENTITY_TOL = 1e-10
HS_IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class OperatorValuedMeasure:
    """PSD values on cells, with no completeness requirement."""

    cells: tuple[OutcomeCell, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2] or vals.shape[0] != len(self.cells):
            raise PreconditionError(f"values must have shape ({len(self.cells)}, d, d), got {vals.shape}")
        vals = 0.5 * (vals + np.conj(np.swapaxes(vals, 1, 2)))
        vals.setflags(write=False)
        object.__setattr__(self, "cells", tuple(
            c if isinstance(c, OutcomeCell) else OutcomeCell(c) for c in self.cells))
        object.__setattr__(self, "values", vals)

    def total(self) -> np.ndarray:
        return linalg.hermitian(self.values.sum(axis=0))

    def min_eigenvalues(self) -> np.ndarray:
        return np.array([np.linalg.eigvalsh(v)[0] for v in self.values])


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.lhs - self.rhs) <= self.tol


def _values(f_values, l: OperatorValuedMeasure) -> np.ndarray:
    f = np.asarray(f_values, dtype=float).reshape(-1)
    if f.size != len(l.cells):
        raise PreconditionError(f"{f.size} function values for {len(l.cells)} cells")
    return f


def integrate_scalar(f_values, l: OperatorValuedMeasure) -> np.ndarray:
    """``sum_c f_c l(c)`` for a function constant on each cell."""
    f = _values(f_values, l)
    return linalg.hermitian(np.einsum("c,cij->ij", f, l.values))


def semivariation(l: OperatorValuedMeasure) -> float:
    """Operator-norm semivariation, attained at ``f = 1``: ``||l(X)||``."""
    return linalg.op_norm(l.total())


def _scale(l, *fs) -> float:
    s = max(1.0, linalg.trace_norm(l.total()))
    for f in fs:
        s *= max(1.0, float(np.max(np.abs(f))))
    return s


def trace_pairing_identity(f_values, l: OperatorValuedMeasure,
                           tol: float = TRACE_IDENTITY_TOL) -> IdentityCheck:
    """``Tr[int f dl]`` against ``sum_c f_c Tr[l(c)]``."""
    f = _values(f_values, l)
    lhs = float(np.trace(integrate_scalar(f, l)).real)
    rhs = float(sum(fc * np.trace(v).real for fc, v in zip(f, l.values)))
    return IdentityCheck(lhs, rhs, tol * _scale(l, f))


def hs_pairing_identity(f_values, g_values, l: OperatorValuedMeasure,
                        tol: float = HS_IDENTITY_TOL) -> IdentityCheck:
    """``Tr[(int f dl)(int g dl)]`` against ``sum_{c,c'} f_c g_c' Tr[l(c) l(c')]``."""
    f = _values(f_values, l)
    g = _values(g_values, l)
    lhs = linalg.hs_inner(integrate_scalar(f, l), integrate_scalar(g, l))
    k = len(l.cells)
    rhs = 0.0
    for a in range(k):
        for b in range(k):
            rhs += f[a] * g[b] * float(np.trace(l.values[a] @ l.values[b]).real)
    return IdentityCheck(lhs, rhs, tol * _scale(l, f, g))


def compressed_measure(e: Ensemble, gpgm: Povm, power: str = "quarter") -> OperatorValuedMeasure:
    """``rho^{1/4} m(E) rho^{1/4}`` (``"quarter"``) or ``rho^{1/2} m(E) rho^{1/2}`` (``"half"``)."""
    exponents = {"quarter": 0.25, "half": 0.5}
    if power not in exponents:
        raise PreconditionError(f"power must be 'quarter' or 'half', got {power!r}")
    if gpgm.dim != e.dim:
        raise PreconditionError("POVM and ensemble dimensions differ")
    c = linalg.psd_power(average_state(e), exponents[power])
    values = np.array([c @ m @ c for m in gpgm.elements])
    return OperatorValuedMeasure(gpgm.cells, values)


@dataclass(frozen=True)
class IntervalCheck:
    """Eigenvalue margins of ``bound - A`` and ``bound + A``."""

    upper_margin: float
    lower_margin: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.upper_margin >= -self.tol and self.lower_margin >= -self.tol


def operator_interval(a, bound, tol: float = 1e-9) -> IntervalCheck:
    """Check ``-bound <= a <= bound`` in the Loewner order."""
    return IntervalCheck(linalg.min_eigenvalue(np.asarray(bound) - a),
                         linalg.min_eigenvalue(np.asarray(bound) + a), tol)


@dataclass(frozen=True)
class DominanceCheck:
    smaller: float
    larger: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.smaller <= self.larger + self.tol


def hs_dominance(varrho, zeta, tol: float = 1e-10) -> DominanceCheck:
    """Compare ``||varrho||_2`` with ``||zeta||_2``; meant for ``-zeta <= varrho <= zeta``."""
    return DominanceCheck(linalg.hs_norm(varrho), linalg.hs_norm(zeta), tol)


def interval_measure_checks(e: Ensemble, gpgm: Povm, tol: float = 1e-9) -> list[IntervalCheck]:
    """``-rho^{1/2} <= l(E) <= rho^{1/2}`` for every cell of the quarter-compressed GPGM."""
    bound = linalg.psd_sqrt(average_state(e))
    l = compressed_measure(e, gpgm, "quarter")
    return [operator_interval(v, bound, tol) for v in l.values]


def random_ovm(d: int, k: int, rng: np.random.Generator,
               cells: Sequence[OutcomeCell] | None = None) -> OperatorValuedMeasure:
    """Random PSD values with random overall scale (no completeness)."""
    vals = []
    for _ in range(k):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        vals.append(rng.uniform(0.1, 3.0) * (g @ g.conj().T) / d)
    cells = tuple(OutcomeCell([i]) for i in range(k)) if cells is None else tuple(cells)
    return OperatorValuedMeasure(cells, np.array(vals))
