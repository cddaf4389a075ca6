"""Inequality sweeps over generated instances, written as CSV.

All randomness derives from one config seed: instance ``i`` draws from
``SeedSequence(seed, spawn_key=(i, purpose))``, so results do not depend on
how instances are scheduled across workers.
"""

from __future__ import annotations

import csv
import io as _io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import io
from .ensemble import Ensemble, second_moment
from .errors import InputError
from .gain import (
    DEFAULT_T_SEQUENCE,
    estimate_second_moment,
    expected_gain,
    mse,
    mse_via_gain_limit,
)
from .optimal import (
    SLACK_TOL,
    SOLVER_MAX_ITERS,
    SOLVER_TOL,
    bk_certificate,
    helstrom_two_state,
    maximize_success,
    random_povm,
)
from .pgm import build_gpgm
from .score import ScoreMatrix, delta_score, score_matrix

log = logging.getLogger(__name__)

MSE_TOL = 1e-8
LIMIT_TOL = 1e-9

_ENSEMBLE_KEY, _CANDIDATE_KEY, _SIZE_KEY = 0, 1, 2


@dataclass
class SweepConfig:
    instances: list[dict]
    scores: list[dict] = field(default_factory=lambda: [{"kind": "delta"}])
    num_instances: int = 1
    seed: int = 0
    tol: float = SOLVER_TOL
    max_iters: int = SOLVER_MAX_ITERS
    random_candidates: int = 5
    include_solver: bool = True
    t_sequence: tuple[float, ...] = DEFAULT_T_SEQUENCE
    out: str | None = None

    def __post_init__(self):
        if self.num_instances < 1:
            raise InputError("num_instances must be >= 1")
        if self.random_candidates < 0:
            raise InputError("random_candidates must be >= 0")
        ts = tuple(float(t) for t in self.t_sequence)
        if not ts or any(t <= 0 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
            raise InputError("t_sequence must be strictly positive and strictly decreasing")
        self.t_sequence = ts
        if not self.instances:
            raise InputError("config needs at least one instance stanza")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "SweepConfig":
        if not isinstance(data, dict):
            raise InputError("config: expected a JSON object")
        inst = data.get("instances")
        if inst is None:
            raise InputError("config: missing field 'instances'")
        inst = inst if isinstance(inst, list) else [inst]
        resolved = []
        for k, stanza in enumerate(inst):
            if not isinstance(stanza, dict):
                raise InputError(f"config.instances[{k}]: expected an object")
            if "file" in stanza:
                path = Path(stanza["file"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                resolved.append({"file": str(path)})
            elif "generator" in stanza or "states" in stanza:
                resolved.append(stanza)
            else:
                raise InputError(f"config.instances[{k}]: need 'generator', 'states' or 'file'")
        scores = data.get("score", data.get("scores", {"kind": "delta"}))
        scores = scores if isinstance(scores, list) else [scores]
        solver = data.get("solver", {})
        try:
            return cls(
                instances=resolved,
                scores=scores,
                num_instances=int(data.get("num_instances", 1)),
                seed=int(data.get("seed", 0)),
                tol=float(solver.get("tol", SOLVER_TOL)),
                max_iters=int(solver.get("max_iters", SOLVER_MAX_ITERS)),
                random_candidates=int(data.get("random_candidates", 5)),
                include_solver=bool(data.get("include_solver", True)),
                t_sequence=tuple(data.get("t_sequence", DEFAULT_T_SEQUENCE)),
                out=data.get("out"),
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"config: {exc}") from None

    @classmethod
    def load(cls, path) -> "SweepConfig":
        path = Path(path)
        return cls.from_dict(io._read_json(path), path.parent)

    def to_dict(self) -> dict:
        return {
            "instances": self.instances, "scores": self.scores,
            "num_instances": self.num_instances, "seed": self.seed,
            "solver": {"tol": self.tol, "max_iters": self.max_iters},
            "random_candidates": self.random_candidates,
            "include_solver": self.include_solver,
            "t_sequence": list(self.t_sequence),
        }


def derived_seed(seed: int, instance: int, purpose: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(instance, purpose))


def _draw(value, rng: np.random.Generator):
    # [lo, hi] integer ranges are drawn inclusively per instance.
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return int(rng.integers(value[0], value[1] + 1))
    return value


def make_instance(cfg: SweepConfig, i: int) -> Ensemble:
    stanza = cfg.instances[i % len(cfg.instances)]
    where = f"config.instances[{i % len(cfg.instances)}]"
    if "file" in stanza:
        e = io.load_ensemble(stanza["file"])
    elif "generator" in stanza:
        rng = np.random.default_rng(derived_seed(cfg.seed, i, _SIZE_KEY))
        params = {k: _draw(v, rng) for k, v in io._params(stanza).items()}
        concrete = {"generator": stanza["generator"], "label": stanza.get("label", ""), **params}
        seed = derived_seed(cfg.seed, i, _ENSEMBLE_KEY) if stanza["generator"] == "random" else None
        e = io.ensemble_from_dict(concrete, seed, where)
    else:
        e = io.ensemble_from_dict(stanza, None, where)
    return e.with_label(e.label or f"instance{i}")


def resolve_score(stanza: dict, e: Ensemble) -> ScoreMatrix:
    """Score matrix on ``e``'s points; the delta score is always the identity."""
    if stanza.get("kind") == "delta":
        return delta_score(e.r)
    m = score_matrix(io.score_from_stanza(stanza, e.param_dim), e)
    return ScoreMatrix(m.entries, m.kind)


def _candidates(e: Ensemble, s: ScoreMatrix, cfg: SweepConfig, i: int, gpgm):
    out = [("pgm", gpgm)]
    if e.r == 2:
        out.append(("helstrom", helstrom_two_state(e.weights[0], e.states[0],
                                                   e.weights[1], e.states[1]).povm))
    if cfg.include_solver:
        res = maximize_success(e, s, cfg.max_iters, cfg.tol)
        if not res.converged:
            log.info("instance %d: solver stopped at residual %.2e", i, res.optimality_residual)
        out.append(("solver", res.povm))
    root = derived_seed(cfg.seed, i, _CANDIDATE_KEY)
    for k, child in enumerate(root.spawn(cfg.random_candidates)):
        out.append((f"random{k}", random_povm(e.dim, e.r, child, label=f"random{k}")))
    return out


BK_COLUMNS = ["instance_id", "d", "r", "N", "score_kind", "povm_kind", "expected_gain",
              "G_pgm", "sqrt_G_pgm", "G_best_candidate", "slack"]
MSE_COLUMNS = ["instance_id", "d", "r", "N", "povm_kind", "mse_pgm", "mse_candidate", "ratio",
               "bound_4E", "estimate_moment", "limit_curve", "slack"]


def bk_instance(cfg: SweepConfig, i: int) -> tuple[list[list], list[str]]:
    """Rows and violation messages for one instance under every configured score."""
    e = make_instance(cfg, i)
    gpgm = build_gpgm(e)
    rows, problems = [], []
    for stanza in cfg.scores:
        s = resolve_score(stanza, e)
        cands = _candidates(e, s, cfg, i, gpgm)
        cert = bk_certificate(e, s, expected_gain(e, s, gpgm), [p for _, p in cands])
        for (kind, _), g, slack in zip(cands, cert.candidate_gains, cert.slacks):
            rows.append([i, e.dim, e.r, e.param_dim, s.kind, kind, g, cert.gpgm_gain,
                         cert.sqrt_gain, cert.best_gain, slack])
            if slack < -SLACK_TOL:
                problems.append(f"instance {i} score {s.kind} candidate {kind}: slack {slack:.3e}")
    return rows, problems


def mse_instance(cfg: SweepConfig, i: int) -> tuple[list[list], list[str]]:
    e = make_instance(cfg, i)
    if e.param_dim < 1:
        raise InputError(f"instance {i}: MSE sweeps need param_dim >= 1")
    gpgm = build_gpgm(e)
    mse_pgm = mse(e, gpgm)
    bound = 4.0 * second_moment(e)
    moment = estimate_second_moment(e, gpgm)
    curve = mse_via_gain_limit(e, gpgm, cfg.t_sequence)
    curve_text = ";".join(f"{v:.12g}" for _, v in curve)
    problems = []
    if mse_pgm > bound + MSE_TOL:
        problems.append(f"instance {i}: mse_pgm {mse_pgm:.6g} > 4E {bound:.6g}")
    for t, v in curve:
        if v > mse_pgm + LIMIT_TOL:
            problems.append(f"instance {i}: limit value {v:.12g} at t={t} exceeds mse {mse_pgm:.12g}")
    rows = []
    for kind, p in _candidates(e, delta_score(e.r), cfg, i, gpgm):
        m = mse(e, p)
        slack = 2.0 * m - mse_pgm
        ratio = mse_pgm / m if m > 0 else (1.0 if mse_pgm == 0 else float("inf"))
        rows.append([i, e.dim, e.r, e.param_dim, kind, mse_pgm, m, ratio, bound, moment,
                     curve_text, slack])
        if slack < -MSE_TOL:
            problems.append(f"instance {i} candidate {kind}: mse_pgm {mse_pgm:.6g} > 2*{m:.6g}")
    return rows, problems


def _run_one(args):
    kind, cfg, i = args
    return (bk_instance if kind == "bk" else mse_instance)(cfg, i)


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[list]
    problems: list[str]
    slack_column: str = "slack"

    @property
    def min_slack(self) -> float:
        k = self.columns.index(self.slack_column)
        return float(min(row[k] for row in self.rows)) if self.rows else float("nan")


def run_sweep(kind: str, cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Run ``"bk"`` or ``"mse"`` over all instances; rows stay in instance order."""
    tasks = [(kind, cfg, i) for i in range(cfg.num_instances)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    rows = [row for r, _ in results for row in r]
    problems = [p for _, ps in results for p in ps]
    return SweepResult(BK_COLUMNS if kind == "bk" else MSE_COLUMNS, rows, problems)


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render_csv(result: SweepResult, command: str, cfg: SweepConfig,
               timestamp: str | None = None) -> str:
    """CSV text; only the first ``# generated=`` line varies between identical runs."""
    ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf = _io.StringIO()
    buf.write(f"# generated={ts}\n")
    buf.write(f"# command={command}\n")
    buf.write(f"# seed={cfg.seed}\n")
    buf.write(f"# config={json.dumps(cfg.to_dict(), sort_keys=True)}\n")
    buf.write(f"# rows={len(result.rows)} violations={len(result.problems)} "
              f"min_slack={_fmt(result.min_slack)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()
