"""Finite quantum ensembles and instance generators.

An :class:`Ensemble` is a finite list of parameter points ``x_i`` in
``R^N`` with prior weights ``mu_i`` and density operators ``rho_i``.
Continuous priors are represented by their values on a regular grid,
so every integral over the parameter space becomes a finite sum.

Bosonic displacement convention
-------------------------------
A point ``x = (x1, x2)`` is mapped to the complex amplitude
``alpha = (x1 + i x2) / sqrt(2)`` and ``D(x) = exp(alpha a^dag - conj(alpha) a)``.
With this choice a displaced vacuum has mean photon number ``|x|^2 / 2`` and
vacuum overlap ``exp(-|x|^2 / 4)``. One-dimensional points are read as
``(x1, 0)``. All reported MSE values for bosonic ensembles use this
convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from . import linalg
from .errors import (
    EnsembleValidationError,
    GridSizeError,
    PreconditionError,
    TruncationError,
)

WEIGHT_SUM_TOL = 1e-12
TRACE_TOL = 1e-10
GRID_CAP = 4096
TRUNC_TOL = 1e-6

StateFamily = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OutcomeCell:
    """A block of point indices; a finite stand-in for a Borel set."""

    indices: tuple[int, ...]

    def __init__(self, indices: Iterable[int]):
        object.__setattr__(self, "indices", tuple(sorted(int(i) for i in indices)))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def singletons(r: int) -> list[OutcomeCell]:
    return [OutcomeCell([i]) for i in range(r)]


def check_partition(cells: Sequence[OutcomeCell], r: int) -> None:
    """Raise :class:`PreconditionError` unless ``cells`` partition ``range(r)``."""
    seen: set[int] = set()
    for k, cell in enumerate(cells):
        if len(cell) == 0:
            raise PreconditionError(f"cell {k} is empty")
        for i in cell:
            if i < 0 or i >= r:
                raise PreconditionError(f"cell {k} contains out-of-range index {i}")
            if i in seen:
                raise PreconditionError(f"index {i} appears in more than one cell")
            seen.add(i)
    if len(seen) != r:
        missing = sorted(set(range(r)) - seen)
        raise PreconditionError(f"cells do not cover indices {missing[:10]}")


@dataclass(frozen=True)
class Ensemble:
    """Weighted finite family of density operators indexed by points in ``R^N``.

    ``points`` has shape ``(r, N)`` (``N`` may be zero for a bare alphabet),
    ``weights`` shape ``(r,)`` and ``states`` shape ``(r, d, d)``. All
    invariants are checked on construction; the first violation raises
    :class:`EnsembleValidationError` naming the offending index.
    """

    points: np.ndarray
    weights: np.ndarray
    states: np.ndarray
    label: str = ""
    rank_tol: float = field(default=linalg.RANK_TOL, repr=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if weights.ndim != 1 or weights.size < 1:
            raise EnsembleValidationError("shape", "weights must be a non-empty 1-D array")
        r = weights.size
        if points.ndim == 1:
            points = points.reshape(r, -1) if points.size else np.zeros((r, 0))
        if points.ndim != 2 or points.shape[0] != r:
            raise EnsembleValidationError("shape", f"expected {r} points, got shape {points.shape}")
        if states.ndim != 3 or states.shape[0] != r or states.shape[1] != states.shape[2]:
            raise EnsembleValidationError("shape", f"expected {r} square states, got shape {states.shape}")
        if not np.all(np.isfinite(points)):
            raise EnsembleValidationError("points", "non-finite coordinate")
        for i, w in enumerate(weights):
            if not w > 0:
                raise EnsembleValidationError("positive weights", f"weight {w} is not > 0", i)
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise EnsembleValidationError("weights sum to 1", f"sum is {total!r}")
        states = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
        for i, s in enumerate(states):
            q = np.linalg.eigvalsh(s)
            if q[0] < -self.rank_tol * max(1.0, abs(q[-1])):
                raise EnsembleValidationError("state PSD", f"min eigenvalue {q[0]:.3e}", i)
            tr = float(np.trace(s).real)
            if abs(tr - 1.0) > TRACE_TOL:
                raise EnsembleValidationError("state trace 1", f"trace is {tr!r}", i)
        if points.shape[1] > 0 and r > 1:
            order = np.lexsort(points.T[::-1])
            sorted_pts = points[order]
            dup = np.nonzero(np.all(sorted_pts[1:] == sorted_pts[:-1], axis=1))[0]
            if dup.size:
                raise EnsembleValidationError(
                    "distinct points", "duplicate parameter point", int(order[dup[0] + 1])
                )
        for name, value in (("points", points), ("weights", weights), ("states", states)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def r(self) -> int:
        return self.weights.size

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def param_dim(self) -> int:
        return self.points.shape[1]

    def with_label(self, label: str) -> "Ensemble":
        return Ensemble(self.points, self.weights, self.states, label, self.rank_tol)


def average_state(e: Ensemble) -> np.ndarray:
    """Barycenter ``sum_i mu_i rho_i``."""
    return linalg.hermitian(np.einsum("i,ijk->jk", e.weights, e.states))


def partial_state(e: Ensemble, cell: OutcomeCell | Iterable[int]) -> np.ndarray:
    """``rho_E = sum_{i in E} mu_i rho_i`` for a non-empty cell ``E``."""
    idx = list(cell.indices if isinstance(cell, OutcomeCell) else cell)
    if not idx:
        raise PreconditionError("partial_state needs a non-empty cell")
    if min(idx) < 0 or max(idx) >= e.r:
        raise PreconditionError(f"cell indices out of range for r={e.r}")
    return linalg.hermitian(np.einsum("i,ijk->jk", e.weights[idx], e.states[idx]))


def cell_mass(e: Ensemble, cell: OutcomeCell) -> float:
    return float(np.sum(e.weights[list(cell.indices)]))


def second_moment(e: Ensemble) -> float:
    """``E_{mu,2} = sum_i mu_i |x_i|^2``."""
    if e.param_dim < 1:
        raise PreconditionError("second moment needs param_dim >= 1")
    return float(np.dot(e.weights, np.sum(e.points**2, axis=1)))


# --- grids ------------------------------------------------------------------


def gaussian_grid(N: int, sigma_prior: float, grid_half_width: float,
                  points_per_axis: int, max_points: int = GRID_CAP):
    """Regular grid on ``[-h, h]^N`` with normalized Gaussian node weights."""
    if points_per_axis < 2:
        raise PreconditionError("points_per_axis must be >= 2")
    if not sigma_prior > 0:
        raise PreconditionError("sigma_prior must be > 0")
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if points_per_axis**N > max_points:
        raise GridSizeError(
            f"grid has {points_per_axis}^{N} = {points_per_axis**N} points, cap is {max_points}"
        )
    axis = np.linspace(-grid_half_width, grid_half_width, points_per_axis)
    points = np.array(list(itertools.product(axis, repeat=N)), dtype=float)
    log_w = -0.5 * np.sum(points**2, axis=1) / sigma_prior**2
    w = np.exp(log_w - log_w.max())
    return points, w / w.sum()


def discretize_gaussian_prior(N: int, sigma_prior: float, grid_half_width: float,
                              points_per_axis: int, state_family: StateFamily,
                              max_points: int = GRID_CAP, label: str = "") -> Ensemble:
    """Ensemble of ``state_family(x)`` over a Gaussian-weighted regular grid."""
    points, weights = gaussian_grid(N, sigma_prior, grid_half_width, points_per_axis, max_points)
    states = np.array([state_family(x) for x in points])
    return Ensemble(points, weights, states, label or f"gaussian_grid(N={N})")


# --- bosonic ----------------------------------------------------------------


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def amplitude(x) -> complex:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size == 1:
        return complex(x[0], 0.0) / np.sqrt(2.0)
    if x.size == 2:
        return complex(x[0], x[1]) / np.sqrt(2.0)
    raise PreconditionError("single-mode displacement needs a point in R^1 or R^2")


def displacement(x, dim: int) -> np.ndarray:
    """``exp(alpha a^dag - conj(alpha) a)`` on a ``dim``-level truncation."""
    alpha = amplitude(x)
    a = annihilation(dim)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def vacuum(fock_cutoff: int) -> np.ndarray:
    rho = np.zeros((fock_cutoff, fock_cutoff), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def thermal_state(fock_cutoff: int, nbar: float) -> np.ndarray:
    """Thermal state with mean photon number ``nbar``, renormalized after truncation."""
    if nbar < 0:
        raise PreconditionError("nbar must be >= 0")
    if nbar == 0:
        return vacuum(fock_cutoff)
    n = np.arange(fock_cutoff)
    p = (nbar / (1 + nbar)) ** n
    return np.diag(p / p.sum()).astype(complex)


def displaced_state(base_state, x, pad: int | None = None):
    """Displace ``base_state`` by ``x`` and truncate back to its dimension.

    The displacement is applied in an enlarged space of ``dim + pad`` levels
    (``pad`` defaults to ``dim``) so the truncated block is accurate; the
    probability pushed past the cutoff is returned as the loss.

    Returns
    -------
    state : ndarray
        Renormalized truncated state.
    loss : float
        ``1 - Tr`` of the truncated block before renormalization.
    """
    base = linalg.hermitian(base_state)
    dim = base.shape[0]
    big = dim + (dim if pad is None else pad)
    embedded = np.zeros((big, big), dtype=complex)
    embedded[:dim, :dim] = base
    d = displacement(x, big)
    block = (d @ embedded @ d.conj().T)[:dim, :dim]
    kept = float(np.trace(block).real)
    return linalg.hermitian(block / kept), 1.0 - kept


def bosonic_displaced_ensemble(fock_cutoff: int, base_state, displacement_points,
                               weights, n_modes: int = 1, trunc_tol: float = TRUNC_TOL,
                               label: str = "") -> Ensemble:
    """Single-mode ensemble ``rho_x = D(x) rho_0 D(x)^dag`` in a Fock truncation.

    Raises
    ------
    TruncationError
        If some point loses more than ``trunc_tol`` probability to the cutoff;
        the worst point is reported.
    """
    if n_modes != 1:
        raise PreconditionError("only single-mode ensembles are supported")
    base = linalg.hermitian(base_state)
    if base.shape[0] != fock_cutoff:
        raise PreconditionError(f"base state has dim {base.shape[0]}, expected {fock_cutoff}")
    points = np.asarray(displacement_points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    states, losses = [], []
    for x in points:
        s, loss = displaced_state(base, x)
        states.append(s)
        losses.append(loss)
    worst = int(np.argmax(losses))
    if losses[worst] > trunc_tol:
        raise TruncationError(losses[worst], worst, points[worst])
    return Ensemble(points, np.asarray(weights, dtype=float), np.array(states),
                    label or f"bosonic(cutoff={fock_cutoff})")


def bosonic_family(base_state, trunc_tol: float = TRUNC_TOL) -> StateFamily:
    """State family ``x -> D(x) rho_0 D(x)^dag`` for :func:`discretize_gaussian_prior`."""

    def family(x):
        s, loss = displaced_state(base_state, x)
        if loss > trunc_tol:
            raise TruncationError(loss, -1, np.atleast_1d(x))
        return s

    return family


# --- random instances -------------------------------------------------------


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_mixed_state(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return linalg.hermitian(rho / np.trace(rho).real)


def random_ensemble(d: int, r: int, N: int, seed, kind: str = "mixed",
                    support_dim: int | None = None, label: str = "") -> Ensemble:
    """Random ensemble, deterministic per ``seed``.

    ``kind`` is ``"pure"`` (Haar vectors) or ``"mixed"`` (normalized
    Ginibre ``G G^dag``). With ``support_dim < d`` all states live in a
    common random subspace, so the average state is rank deficient.
    """
    if d < 1 or r < 1:
        raise PreconditionError("need d >= 1 and r >= 1")
    if kind not in ("pure", "mixed"):
        raise PreconditionError(f"unknown kind {kind!r}")
    k = d if support_dim is None else int(support_dim)
    if not 1 <= k <= d:
        raise PreconditionError("support_dim must lie in [1, d]")
    rng = np.random.default_rng(seed)
    make = random_pure_state if kind == "pure" else random_mixed_state
    small = [make(k, rng) for _ in range(r)]
    if k < d:
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        iso = np.linalg.qr(g)[0][:, :k]
        states = np.array([iso @ s @ iso.conj().T for s in small])
    else:
        states = np.array(small)
    w = rng.uniform(0.05, 1.0, size=r)
    points = rng.standard_normal((r, N))
    return Ensemble(points, w / w.sum(), states,
                    label or f"random(d={d},r={r},kind={kind})")
