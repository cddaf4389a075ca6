"""Dense Hermitian linear algebra kernels.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)``. Functions
accept anything array-like and symmetrize it on entry with :func:`hermitian`,
so round-off asymmetry from products such as ``L.conj().T @ L`` is absorbed
rather than rejected.

Rank decisions use a relative cutoff: an eigenvalue ``q`` counts as zero when
``|q| <= rank_tol * max(1, max|q|)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import EigenSolverError, NotPSDError, PreconditionError

RANK_TOL = 1e-10
PSD_TOL = 1e-9
DOMINATION_TOL = 1e-9


def hermitian(a) -> np.ndarray:
    """Return ``(a + a^dagger) / 2`` as a complex array, checking squareness."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PreconditionError(f"expected a non-empty square matrix, got shape {a.shape}")
    return 0.5 * (a + a.conj().T)


def is_hermitian(a, atol: float = 1e-12) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, a.conj().T, atol=atol, rtol=0)


class EigenDecomposition(NamedTuple):
    """Ascending eigenvalues and the matching unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, func=None) -> np.ndarray:
        """Return ``V f(q) V^dagger``; ``func`` defaults to the identity."""
        q = self.eigenvalues if func is None else func(self.eigenvalues)
        v = self.eigenvectors
        return hermitian((v * q) @ v.conj().T)


@dataclass(frozen=True)
class Contraction:
    """The operator ``Lambda`` with ``Lambda rho^{1/2} = rho_E^{1/2}``."""

    matrix: np.ndarray
    rank_tolerance: float

    def gram(self) -> np.ndarray:
        """``Lambda^dagger Lambda``, symmetrized."""
        return hermitian(self.matrix.conj().T @ self.matrix)


def eigh(a) -> EigenDecomposition:
    """Hermitian eigendecomposition with a reconstruction check.

    Raises
    ------
    EigenSolverError
        If LAPACK does not converge, or the factorization reconstructs ``a``
        with Frobenius error above ``1e-10 * max(1, ||a||_2)``.
    """
    a = hermitian(a)
    try:
        q, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(q))))
    # Frobenius norm bounds the spectral norm and avoids an SVD.
    residual = np.linalg.norm((v * q) @ v.conj().T - a)
    if not np.isfinite(residual) or residual > 1e-10 * scale:
        raise EigenSolverError("eigendecomposition failed reconstruction check", residual)
    return EigenDecomposition(q, v)


def eigvalsh(a) -> np.ndarray:
    return np.linalg.eigvalsh(hermitian(a))


def _cutoff(q: np.ndarray, rank_tol: float) -> float:
    return rank_tol * max(1.0, float(np.max(np.abs(q))) if q.size else 1.0)


def _clamped(a, tol: float) -> EigenDecomposition:
    dec = eigh(a)
    q = dec.eigenvalues
    floor = tol * max(1.0, float(np.max(np.abs(q))))
    if q[0] < -floor:
        raise NotPSDError(q[0], floor)
    return EigenDecomposition(np.clip(q, 0.0, None), dec.eigenvectors)


def psd_power(a, power: float, tol: float = PSD_TOL) -> np.ndarray:
    """``a**power`` for PSD ``a`` and ``power > 0``.

    Eigenvalues in ``[-tol * max(1, ||a||), 0)`` are clamped to zero;
    anything more negative raises :class:`NotPSDError`.
    """
    if power <= 0:
        raise PreconditionError("psd_power needs a positive exponent; use pinv_power")
    return _clamped(a, tol).reconstruct(lambda q: q**power)


def psd_sqrt(a, tol: float = PSD_TOL) -> np.ndarray:
    """Unique PSD square root of a PSD matrix."""
    return psd_power(a, 0.5, tol)


def pinv_power(a, power: float, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``(a^+)**power`` on the support of PSD ``a``; zero on its kernel."""
    dec = eigh(a)
    q = dec.eigenvalues
    keep = q > _cutoff(q, rank_tol)
    inv = np.zeros_like(q)
    inv[keep] = q[keep] ** (-power)
    return dec.reconstruct(lambda _: inv)


def pinv(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a Hermitian PSD matrix."""
    return pinv_power(a, 1.0, rank_tol)


def pinv_sqrt(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """``(sqrt a)^+``, with the rank decision taken on the eigenvalues of ``a``."""
    return pinv_power(a, 0.5, rank_tol)


def kernel_projector(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the numerical kernel of Hermitian ``a``."""
    dec = eigh(a)
    q = dec.eigenvalues
    mask = (np.abs(q) <= _cutoff(q, rank_tol)).astype(float)
    return dec.reconstruct(lambda _: mask)


def support_projector(a, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the range of Hermitian ``a``."""
    return np.eye(np.shape(a)[0]) - kernel_projector(a, rank_tol)


def contraction_lambda(rho_e, rho, rank_tol: float = RANK_TOL) -> Contraction:
    """Contraction mapping ``rho^{1/2}`` onto ``rho_e^{1/2}``.

    Realized in closed form as ``sqrt(rho_e) @ pinv(sqrt(rho))``. It has
    operator norm at most one, vanishes on ``ker(rho)`` and satisfies
    ``Lambda @ sqrt(rho) == sqrt(rho_e)`` whenever ``0 <= rho_e <= rho``.

    Raises
    ------
    PreconditionError
        If ``rho - rho_e`` has an eigenvalue below ``-1e-9``.
    """
    rho_e = hermitian(rho_e)
    rho = hermitian(rho)
    if rho_e.shape != rho.shape:
        raise PreconditionError(f"shape mismatch {rho_e.shape} vs {rho.shape}")
    gap = eigvalsh(rho - rho_e)[0]
    if gap < -DOMINATION_TOL:
        raise PreconditionError(
            f"rho_e is not dominated by rho: min eigenvalue of rho - rho_e is {gap:.3e}"
        )
    matrix = psd_sqrt(rho_e) @ pinv_sqrt(rho, rank_tol)
    return Contraction(matrix, rank_tol)


def trace_norm(a) -> float:
    return float(np.sum(np.abs(eigvalsh(a))))


def hs_norm(a) -> float:
    return float(np.linalg.norm(hermitian(a), "fro"))


def op_norm(a) -> float:
    return float(np.max(np.abs(eigvalsh(a))))


def hs_inner(a, b) -> float:
    """``Tr[a b]``, real for Hermitian arguments."""
    return float(np.einsum("ij,ji->", hermitian(a), hermitian(b)).real)


def min_eigenvalue(a) -> float:
    return float(eigvalsh(a)[0])


def negative_part_norm(a) -> float:
    """Operator norm of the negative part of Hermitian ``a`` (0 if ``a >= 0``)."""
    return max(0.0, -min_eigenvalue(a))
