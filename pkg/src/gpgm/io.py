"""JSON formats for ensembles, POVMs, score stanzas and generator stanzas.

Complex matrices are nested lists ``d x d`` whose entries are either a real
number or a ``[re, im]`` pair. An ensemble file is either explicit::

    {"label": ..., "param_dim": N, "points": [...], "weights": [...],
     "states": [<matrix>, ...]}

or a generator stanza ``{"generator": "random" | "bosonic" | "gaussian_grid", ...}``
whose remaining keys (or a nested ``"params"`` object) are generator
parameters.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from . import ensemble as ens
from . import score as sc
from .ensemble import Ensemble, OutcomeCell
from .errors import EnsembleValidationError, InputError
from .pgm import Povm


def decode_matrix(data, where: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: not a numeric matrix ({exc})") from None
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InputError(f"{where}: expected a square matrix, got shape {arr.shape}")
    return arr.astype(complex)


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputError(f"{where}: missing field {key!r}")
    return obj[key]


def _params(stanza: dict) -> dict:
    nested = stanza.get("params")
    if isinstance(nested, dict):
        return nested
    return {k: v for k, v in stanza.items() if k not in ("generator", "label")}


def base_state_from(spec, fock_cutoff: int, where: str) -> np.ndarray:
    if spec is None or spec == "vacuum":
        return ens.vacuum(fock_cutoff)
    if isinstance(spec, dict):
        kind = spec.get("kind", "vacuum")
        if kind == "vacuum":
            return ens.vacuum(fock_cutoff)
        if kind == "thermal":
            return ens.thermal_state(fock_cutoff, float(_require(spec, "nbar", where)))
        if kind == "matrix":
            return decode_matrix(_require(spec, "state", where), f"{where}.state")
    raise InputError(f"{where}: unknown base state {spec!r}")


def ensemble_from_generator(stanza: dict, seed=None, where: str = "ensemble") -> Ensemble:
    """Build an ensemble from a generator stanza; ``seed`` overrides any seed given."""
    gen = stanza["generator"]
    p = _params(stanza)
    label = stanza.get("label", "")
    try:
        if gen == "random":
            return ens.random_ensemble(
                int(_require(p, "d", where)), int(_require(p, "r", where)), int(p.get("N", 1)),
                p.get("seed", 0) if seed is None else seed, p.get("kind", "mixed"),
                p.get("support_dim"), label)
        if gen == "bosonic":
            cutoff = int(_require(p, "fock_cutoff", where))
            pts = np.asarray(_require(p, "points", where), dtype=float)
            weights = p.get("weights")
            if weights is None:
                weights = np.full(len(pts), 1.0 / len(pts))
            return ens.bosonic_displaced_ensemble(
                cutoff, base_state_from(p.get("base"), cutoff, f"{where}.base"), pts, weights,
                trunc_tol=float(p.get("trunc_tol", ens.TRUNC_TOL)), label=label)
        if gen == "gaussian_grid":
            family = p.get("family", {"kind": "bosonic"})
            if family.get("kind") != "bosonic":
                raise InputError(f"{where}.family: only the 'bosonic' state family is available")
            cutoff = int(_require(family, "fock_cutoff", f"{where}.family"))
            base = base_state_from(family.get("base"), cutoff, f"{where}.family.base")
            return ens.discretize_gaussian_prior(
                int(_require(p, "N", where)), float(_require(p, "sigma_prior", where)),
                float(_require(p, "grid_half_width", where)), int(_require(p, "points_per_axis", where)),
                ens.bosonic_family(base, float(family.get("trunc_tol", ens.TRUNC_TOL))),
                int(p.get("max_points", ens.GRID_CAP)), label)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{where}: bad generator parameters ({exc})") from None
    raise InputError(f"{where}: unknown generator {gen!r}")


def ensemble_from_dict(data: dict, seed=None, where: str = "ensemble") -> Ensemble:
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected an object")
    if "generator" in data:
        return ensemble_from_generator(data, seed, where)
    states = _require(data, "states", where)
    if not isinstance(states, list):
        raise InputError(f"{where}.states: expected a list")
    mats = [decode_matrix(s, f"{where}.states[{i}]") for i, s in enumerate(states)]
    if len({m.shape for m in mats}) > 1:
        raise InputError(f"{where}.states: matrices have different shapes")
    weights = _require(data, "weights", where)
    points = np.asarray(data.get("points", [[] for _ in weights]), dtype=float)
    if "param_dim" in data:
        n = int(data["param_dim"])
        points = points.reshape(len(weights), n) if points.size or n == 0 else points
    return Ensemble(points, np.asarray(weights, dtype=float), np.array(mats), data.get("label", ""))


def ensemble_to_dict(e: Ensemble) -> dict:
    return {
        "label": e.label,
        "param_dim": e.param_dim,
        "points": e.points.tolist(),
        "weights": e.weights.tolist(),
        "states": [encode_matrix(s) for s in e.states],
    }


def _read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_ensemble(path, seed=None) -> Ensemble:
    """Load and validate an ensemble file.

    Raises
    ------
    InputError
        Malformed JSON or fields.
    EnsembleValidationError
        A well-formed file violating an ensemble invariant.
    """
    return ensemble_from_dict(_read_json(path), seed, where=str(path))


def povm_to_dict(p: Povm) -> dict:
    return {
        "label": p.label,
        "cells": [list(c.indices) for c in p.cells],
        "elements": [encode_matrix(m) for m in p.elements],
    }


def povm_from_dict(data: dict, where: str = "povm") -> Povm:
    cells = [OutcomeCell(c) for c in _require(data, "cells", where)]
    elements = [decode_matrix(m, f"{where}.elements[{i}]")
                for i, m in enumerate(_require(data, "elements", where))]
    return Povm(tuple(cells), np.array(elements), data.get("label", ""))


def load_povm(path) -> Povm:
    return povm_from_dict(_read_json(path), str(path))


def score_from_stanza(stanza: dict | None, param_dim: int, where: str = "score"):
    """``{"kind": "delta" | "constant" | "gaussian", "a"?, "Sigma"?}``.

    A scalar ``Sigma`` means ``Sigma * I``. Returns a :class:`ScoreFunction`
    (delta becomes the pointwise indicator).
    """
    stanza = {"kind": "delta"} if stanza is None else stanza
    kind = stanza.get("kind")
    if kind == "delta":
        return sc.delta_function(param_dim)
    if kind == "constant":
        return sc.constant_score(float(_require(stanza, "a", where)), param_dim)
    if kind == "gaussian":
        sigma = _require(stanza, "Sigma", where)
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = float(sigma) * np.eye(param_dim)
        return sc.gaussian_score(sigma)
    raise InputError(f"{where}: unknown score kind {kind!r}")


__all__ = [
    "EnsembleValidationError",
    "decode_matrix",
    "encode_matrix",
    "ensemble_from_dict",
    "ensemble_from_generator",
    "ensemble_to_dict",
    "load_ensemble",
    "load_povm",
    "povm_from_dict",
    "povm_to_dict",
    "score_from_stanza",
]
