"""Positive score functions and their factorization witnesses.

A score function ``S(x, xhat)`` takes values in ``[0, 1]``. It is positive
when ``S(x, y) = int P(x, z) P(y, z) pi(dz)`` for some bounded factor ``P``;
on a finite grid this makes the score matrix positive semidefinite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CoverageError, PreconditionError, ScoreValidityError

CONVOLUTION_TOL = 1e-6
TAIL_TOL = 1e-8
QUAD_NODES = 400


@dataclass(frozen=True)
class FactorWitness:
    """Factor ``P`` of ``S = P * P`` against a measure on ``Y``.

    ``measure`` is ``"lebesgue"`` (``Y = R^N``, integrated by quadrature,
    with ``width`` the largest standard deviation of ``P(x, .)``) or
    ``"discrete"`` (``Y`` a finite set given by ``nodes`` and ``weights``).
    """

    factor: Callable[[np.ndarray, np.ndarray], np.ndarray]
    measure: str
    width: float = 0.0
    nodes: np.ndarray | None = None
    weights: np.ndarray | None = None


@dataclass(frozen=True)
class ScoreFunction:
    """Pointwise evaluator ``S(x, xhat)``; vectorized over leading axes."""

    param_dim: int
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kind: str
    factor_witness: FactorWitness | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x, xhat):
        x = np.asarray(x, dtype=float)
        xhat = np.asarray(xhat, dtype=float)
        return self.kernel(x, xhat)

    def eval(self, x, xhat) -> float:
        return float(self(x, xhat))


@dataclass(frozen=True)
class ScoreMatrix:
    """Score values ``S(x_i, x_j)`` materialized for a finite ensemble."""

    entries: np.ndarray
    kind: str = "matrix"

    def __post_init__(self):
        s = np.asarray(self.entries, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise PreconditionError(f"score matrix must be square, got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "entries", s)

    @property
    def r(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.entries + self.entries.T))[0])

    def check(self, psd_tol: float | None = None) -> None:
        """Raise :class:`ScoreValidityError` unless entries are in [0, 1], symmetric and PSD."""
        s = self.entries
        if np.any(s < 0) or np.any(s > 1):
            raise ScoreValidityError("score entries must lie in [0, 1]")
        if not np.allclose(s, s.T, atol=1e-12, rtol=0):
            raise ScoreValidityError("score matrix is not symmetric")
        tol = 1e-9 * self.r if psd_tol is None else psd_tol
        lam = self.min_eigenvalue()
        if lam < -tol:
            raise ScoreValidityError(
                f"score matrix has eigenvalue {lam:.3e} < -{tol:.1e}; not a positive score on this grid"
            )


def delta_score(r: int) -> ScoreMatrix:
    """Exact-guess score ``delta_{ij}``."""
    if r < 1:
        raise PreconditionError("r must be >= 1")
    return ScoreMatrix(np.eye(r), "delta")


def delta_function(N: int) -> ScoreFunction:
    """Pointwise indicator ``1[x == xhat]``; its score matrix on distinct points is I."""

    def kernel(x, xhat):
        return np.all(x == xhat, axis=-1).astype(float)

    return ScoreFunction(N, kernel, "delta")


def constant_score(a: float, N: int) -> ScoreFunction:
    if not 0.0 <= a <= 1.0:
        raise PreconditionError(f"constant score needs 0 <= a <= 1, got {a}")
    root = float(np.sqrt(a))

    def kernel(x, xhat):
        return np.full(np.broadcast_shapes(x.shape[:-1], xhat.shape[:-1]), float(a))

    def factor(x, z):
        return np.full(np.broadcast_shapes(np.shape(x)[:-1], np.shape(z)[:-1]), root)

    # Any probability measure works; a one-point set is the simplest.
    witness = FactorWitness(factor, "discrete", nodes=np.zeros((1, N)), weights=np.ones(1))
    return ScoreFunction(N, kernel, "constant", witness, {"a": float(a)})


def _check_sigma(sigma) -> np.ndarray:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise PreconditionError(f"Sigma must be square, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, atol=1e-12, rtol=0):
        raise PreconditionError("Sigma must be symmetric")
    lam = float(np.linalg.eigvalsh(sigma)[0])
    if not lam > 0:
        raise PreconditionError(f"Sigma must be positive definite; min eigenvalue {lam:.3e}")
    return sigma


def _quadratic_exp(sigma: np.ndarray):
    precision = np.linalg.inv(sigma)

    def kernel(x, y):
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.exp(-0.5 * np.einsum("...i,ij,...j->...", diff, precision, diff))

    return kernel


def gaussian_factor(Sigma):
    """Factor ``P`` of the Gaussian score and its normalization.

    ``P(x, z) = scale * S_{Sigma/2}(x, z)`` with
    ``scale = ((2 pi)^N det(Sigma / 4))^(-1/4)``.
    """
    sigma = _check_sigma(Sigma)
    n = sigma.shape[0]
    scale = float(((2 * np.pi) ** n * np.linalg.det(sigma / 4)) ** -0.25)
    half = _quadratic_exp(sigma / 2)

    def factor(x, z):
        return scale * half(x, z)

    return factor, scale


def gaussian_score(Sigma) -> ScoreFunction:
    """``S(x, y) = exp(-(x - y)^T Sigma^{-1} (x - y) / 2)``."""
    sigma = _check_sigma(Sigma)
    factor, _ = gaussian_factor(sigma)
    width = float(np.sqrt(np.linalg.eigvalsh(sigma / 2)[-1]))
    witness = FactorWitness(factor, "lebesgue", width=width)
    return ScoreFunction(sigma.shape[0], _quadratic_exp(sigma), "gaussian", witness,
                         {"Sigma": sigma.tolist()})


def isotropic_gaussian(t: float, N: int) -> ScoreFunction:
    """The kernel ``exp(-t |x - y|^2 / 2)`` used in the MSE limit.

    This is ``gaussian_score(I / t)``: ``t`` multiplies the squared distance,
    so ``t -> 0`` flattens the score.
    """
    if not t > 0:
        raise PreconditionError("t must be > 0")
    return gaussian_score(np.eye(N) / t)


def score_matrix(s: ScoreFunction, e, psd_tol: float | None = None) -> ScoreMatrix:
    """Materialize ``S(x_i, x_j)`` on an ensemble's points and check positivity."""
    if s.param_dim != e.param_dim:
        raise PreconditionError(f"score has param_dim {s.param_dim}, ensemble {e.param_dim}")
    pts = e.points
    m = ScoreMatrix(s(pts[:, None, :], pts[None, :, :]), s.kind)
    m.check(psd_tol)
    return m


@dataclass(frozen=True)
class ConvolutionReport:
    deviations: np.ndarray
    max_deviation: float
    tail_mass: float
    tol: float = CONVOLUTION_TOL

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def _box_integral(factor, x, y, half_width, nodes, n):
    axis = np.linspace(-half_width, half_width, nodes)
    w = np.full(nodes, axis[1] - axis[0])
    w[[0, -1]] *= 0.5
    grid = np.array(list(itertools.product(axis, repeat=n))) if n > 1 else axis[:, None]
    weights = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1) if n > 1 else w
    vals = factor(np.asarray(x)[None, :], grid) * factor(np.asarray(y)[None, :], grid)
    return float(np.dot(weights, vals))


def verify_convolution(s: ScoreFunction, sample_pairs, nodes: int = QUAD_NODES,
                       half_width: float | None = None, factor=None,
                       tol: float = CONVOLUTION_TOL) -> ConvolutionReport:
    """Compare ``int P(x, z) P(y, z) dz`` with ``S(x, y)`` on sample pairs.

    Lebesgue witnesses are integrated with the composite trapezoid rule on
    ``[-h, h]^N``, ``h = max(6 w, max|x| + 6 w)`` where ``w`` is the factor's
    width. The tail mass is estimated by repeating the quadrature on a box
    twice as wide. ``factor`` overrides the witness's factor (used to check
    that a broken factor is caught).

    Raises
    ------
    PreconditionError
        If ``s`` carries no witness.
    CoverageError
        If the estimated tail mass exceeds ``1e-8``.
    """
    w = s.factor_witness
    if w is None:
        raise PreconditionError(f"score {s.kind!r} has no factorization witness")
    p = w.factor if factor is None else factor
    pairs = [(np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float)))
             for a, b in sample_pairs]
    n = s.param_dim
    deviations, tail = [], 0.0
    if w.measure == "discrete":
        for x, y in pairs:
            conv = float(np.dot(w.weights, p(x[None, :], w.nodes) * p(y[None, :], w.nodes)))
            deviations.append(abs(conv - s.eval(x, y)))
    elif w.measure == "lebesgue":
        if n > 2:
            raise PreconditionError("quadrature check supports N <= 2")
        reach = max(float(np.max([np.linalg.norm(v) for pr in pairs for v in pr])), 0.0)
        h = half_width if half_width is not None else max(6 * w.width, reach + 6 * w.width)
        for x, y in pairs:
            inner = _box_integral(p, x, y, h, nodes, n)
            outer = _box_integral(p, x, y, 2 * h, 2 * nodes, n)
            tail = max(tail, abs(outer - inner))
            deviations.append(abs(inner - s.eval(x, y)))
        if tail > TAIL_TOL:
            raise CoverageError(f"quadrature box [-{h:g}, {h:g}]^{n} misses mass {tail:.3e}")
    else:
        raise PreconditionError(f"unknown witness measure {w.measure!r}")
    dev = np.array(deviations)
    return ConvolutionReport(dev, float(dev.max(initial=0.0)), tail, tol)
