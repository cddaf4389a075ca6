"""Pretty good measurements: the finite PGM and its partition-level generalization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .ensemble import (
    Ensemble,
    OutcomeCell,
    average_state,
    cell_mass,
    check_partition,
    partial_state,
    singletons,
)
from .errors import PreconditionError

POVM_TOL = 1e-9


@dataclass(frozen=True)
class Povm:
    """One PSD element per outcome cell.

    Construction only symmetrizes the elements and checks shapes; use
    :func:`validate_povm` to test positivity and completeness, so that
    invalid candidates can still be represented and reported on.
    """

    cells: tuple[OutcomeCell, ...]
    elements: np.ndarray
    label: str = ""

    def __post_init__(self):
        cells = tuple(c if isinstance(c, OutcomeCell) else OutcomeCell(c) for c in self.cells)
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2]:
            raise PreconditionError(f"elements must have shape (k, d, d), got {el.shape}")
        if el.shape[0] != len(cells):
            raise PreconditionError(f"{len(cells)} cells but {el.shape[0]} elements")
        el = 0.5 * (el + np.conj(np.swapaxes(el, 1, 2)))
        el.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "elements", el)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return len(self.cells)

    @property
    def is_singleton(self) -> bool:
        return all(len(c) == 1 for c in self.cells)


@dataclass(frozen=True)
class ValidationReport:
    min_eigenvalues: np.ndarray
    completeness_residual: float
    tol: float
    positive: bool = field(init=False)
    complete: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "positive", bool(np.all(self.min_eigenvalues >= -self.tol)))
        object.__setattr__(self, "complete", self.completeness_residual <= self.tol)

    @property
    def passed(self) -> bool:
        return self.positive and self.complete

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} min_eigenvalue={float(np.min(self.min_eigenvalues)):.3e} "
                f"completeness_residual={self.completeness_residual:.3e} tol={self.tol:.1e}")


def validate_povm(p: Povm, tol: float = POVM_TOL) -> ValidationReport:
    """Positivity and completeness diagnostics; never raises on bad input."""
    mins = np.array([np.linalg.eigvalsh(m)[0] for m in p.elements])
    total = np.sum(p.elements, axis=0)
    residual = float(np.linalg.norm(total - np.eye(p.dim), 2))
    return ValidationReport(mins, residual, tol)


def build_finite_pgm(e: Ensemble, rank_tol: float = linalg.RANK_TOL) -> Povm:
    """Square-root measurement ``sqrt(rho^+) p_i rho_i sqrt(rho^+) + p_i Pi_ker``."""
    rho = average_state(e)
    root_pinv = linalg.psd_sqrt(linalg.pinv(rho, rank_tol))
    ker = linalg.kernel_projector(rho, rank_tol)
    elements = np.array([
        linalg.hermitian(root_pinv @ (p * s) @ root_pinv + p * ker)
        for p, s in zip(e.weights, e.states)
    ])
    return Povm(tuple(singletons(e.r)), elements, f"pgm[{e.label}]")


def gpgm_element(e: Ensemble, cell: OutcomeCell, rho=None, ker=None,
                 rank_tol: float = linalg.RANK_TOL) -> np.ndarray:
    """``Lambda_E^dag Lambda_E + mu(E) Pi_ker(rho)`` for one cell."""
    rho = average_state(e) if rho is None else rho
    ker = linalg.kernel_projector(rho, rank_tol) if ker is None else ker
    lam = linalg.contraction_lambda(partial_state(e, cell), rho, rank_tol)
    return linalg.hermitian(lam.gram() + cell_mass(e, cell) * ker)


def build_gpgm(e: Ensemble, partition: Sequence[OutcomeCell] | None = None,
               rank_tol: float = linalg.RANK_TOL) -> Povm:
    """Generalized PGM on a finite partition of the parameter points.

    ``partition`` defaults to singletons, in which case the result agrees
    with :func:`build_finite_pgm`.
    """
    cells = tuple(singletons(e.r)) if partition is None else tuple(
        c if isinstance(c, OutcomeCell) else OutcomeCell(c) for c in partition)
    check_partition(cells, e.r)
    rho = average_state(e)
    ker = linalg.kernel_projector(rho, rank_tol)
    elements = np.array([gpgm_element(e, c, rho, ker, rank_tol) for c in cells])
    return Povm(cells, elements, f"gpgm[{e.label}]")


def coarse_grain(p: Povm, merge: Sequence[OutcomeCell]) -> Povm:
    """Merge groups of ``p``'s cells; ``merge`` holds indices into ``p.cells``."""
    merge = [m if isinstance(m, OutcomeCell) else OutcomeCell(m) for m in merge]
    check_partition(merge, len(p))
    cells, elements = [], []
    for group in merge:
        cells.append(OutcomeCell(i for k in group for i in p.cells[k]))
        elements.append(np.sum(p.elements[list(group.indices)], axis=0))
    return Povm(tuple(cells), np.array(elements), p.label)
