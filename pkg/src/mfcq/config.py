"""JSON configuration loading for the CLI: model, grid, schedules, algorithm blocks."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .actor import ActorConfig
from .core import (
    ConfigurationError,
    Example,
    ModelConstants,
    Schedule,
    SchedulePiece,
    TimeGrid,
)
from .critic import TestSampleMode
from .funcs import FormulaVariant
from .harness import RunConfig

__all__ = ["schedule_from_dict", "schedule_to_dict", "run_config_from_dict", "load_run_config"]


def schedule_from_dict(data: dict) -> Schedule:
    try:
        pieces = tuple(
            SchedulePiece(
                piece.get("n_upper"),
                np.asarray(piece["c"], dtype=float),
                np.asarray(piece["e"], dtype=float),
                None if piece.get("e_inner") is None else np.asarray(piece["e_inner"], dtype=float),
            )
            for piece in data["pieces"]
        )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed schedule: {data!r}") from exc
    return Schedule(pieces)


def schedule_to_dict(sched: Schedule) -> dict:
    return {
        "pieces": [
            {
                "n_upper": p.n_upper,
                "c": p.c.tolist(),
                "e": p.e.tolist(),
                **({"e_inner": p.e_inner.tolist()} if p.e_inner is not None else {}),
            }
            for p in sched.pieces
        ]
    }


def constants_from_dict(model: dict) -> ModelConstants:
    try:
        example = Example(model["example"])
        return ModelConstants(
            example=example,
            b=float(model["b"]),
            sigma=float(model["sigma"]),
            sigma_o=float(model["sigma_o"]),
            beta=float(model["beta"]),
            gamma=float(model["gamma"]),
            T=float(model["T"]),
            lam=float(model.get("lambda", 0.0)),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"invalid model block: {exc}") from exc


def run_config_from_dict(data: dict, variant: Optional[FormulaVariant] = None) -> RunConfig:
    try:
        constants = constants_from_dict(data["model"])
        grid = TimeGrid(float(data["grid"]["dt"]), int(data["grid"]["steps"]))
        algo = data["algo"]
        rates = data["rates"]
        init = data["init"]
    except KeyError as exc:
        raise ConfigurationError(f"missing config block: {exc}") from exc

    actor_cfg = None
    init_phi = None
    if "actor" in data and data["actor"]:
        actor = data["actor"]
        try:
            actor_cfg = ActorConfig(
                inner_iters=int(actor.get("inner_iters", 1)),
                rho=schedule_from_dict(rates["rho"]),
                w_o=schedule_from_dict(actor["w_o"]),
                w_c=schedule_from_dict(actor["w_c"]),
                alpha_phi=schedule_from_dict(rates["phi"]),
            )
            init_phi = np.asarray(init["phi"], dtype=float)
        except KeyError as exc:
            raise ConfigurationError(f"incomplete actor block: {exc}") from exc

    mode = TestSampleMode(algo.get("sample_mode", "literal"))
    cfg = RunConfig(
        constants=constants,
        grid=grid,
        n_episodes=int(algo["episodes"]),
        m_test=int(algo["test_policies"]),
        alpha_theta=schedule_from_dict(rates["theta"]),
        alpha_psi=schedule_from_dict(rates["psi"]),
        p_sched=schedule_from_dict(rates["p"]),
        q_sched=schedule_from_dict(rates["q"]),
        init_theta=np.asarray(init["theta"], dtype=float),
        init_psi=np.asarray(init["psi"], dtype=float),
        variant=variant if variant is not None else FormulaVariant(data.get("variant", "audited")),
        actor=actor_cfg,
        init_phi=init_phi,
        sample_mode=mode,
        anchor_rate=float(algo.get("anchor_rate", 0.2)),
        eval_every=int(algo.get("eval_every", 0)),
        eval_rollouts=int(algo.get("eval_rollouts", 3000)),
        eval_states=int(algo.get("eval_states", 16)),
    )
    return cfg


def load_run_config(path, variant: Optional[FormulaVariant] = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return run_config_from_dict(data, variant)
