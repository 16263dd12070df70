"""Scikit-learn style estimators wrapping the q-learning drivers.

Both learners are `fit`-shaped: construction stores hyperparameters only,
`fit()` runs the episodes and exposes the learnt parameter vectors as
trailing-underscore attributes, and `predict(X)` evaluates the learnt value
function at rows of (t, state) inputs so the estimators compose with
scikit-learn tooling (`get_params`, `set_params`, `clone`).
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import presets
from .core import Example, phi_to_policy, psi_to_policy
from .critic import TestSampleMode
from .funcs import FormulaVariant, lq_value, nlq_value
from .harness import RunConfig, run_alg1, run_alg2
from ._validation import check_positive_int, check_in

__all__ = ["OptimalQLearning", "ActorCriticQLearning"]

_PRESETS = {
    ("lq", "alg1"): presets.lq_alg1,
    ("lq", "alg2a"): presets.lq_alg2a,
    ("lq", "alg2b"): presets.lq_alg2b,
    ("nlq", "alg2a"): presets.nlq_alg2a,
    ("nlq", "alg2b"): presets.nlq_alg2b,
}


class _QLearningBase(BaseEstimator):
    def _config(self) -> RunConfig:
        raise NotImplementedError

    def _predict_value(self, X: np.ndarray) -> np.ndarray:
        check_is_fitted(self, "theta_")
        X = np.asarray(X, dtype=float)
        constants = self.config_.constants
        variant = self.config_.variant
        if constants.example is Example.LQ_FINITE:
            if X.ndim != 2 or X.shape[1] != 3:
                raise ValueError("LQ prediction rows are (t, mean, var)")
            return np.asarray(lq_value(self.theta_, X[:, 0], X[:, 1], X[:, 2], constants))
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError("NLQ prediction rows are (t, logmean)")
        return np.asarray(nlq_value(self.theta_, X[:, 0], X[:, 1], constants, variant))

    def predict(self, X) -> np.ndarray:
        """Learnt value function evaluated at rows of (t, state summary)."""
        return self._predict_value(X)


class OptimalQLearning(_QLearningBase):
    """Offline optimal q-learning on an exactly parameterized benchmark.

    Parameters mirror the benchmark configuration; `example` selects the
    preset ('lq' only, the non-LQ benchmark has no shared-parameter form in
    this artifact's presets).  After `fit`, `theta_` and `psi_` hold the
    learnt critic parameters and `policy_` the induced canonical policy.
    """

    def __init__(self, example: str = "lq", n_episodes: Optional[int] = None,
                 seed: int = 0, variant: str = "audited", eval_every: int = 0):
        self.example = example
        self.n_episodes = n_episodes
        self.seed = seed
        self.variant = variant
        self.eval_every = eval_every

    def fit(self, X=None, y=None) -> "OptimalQLearning":
        check_in("example", self.example, ("lq",))
        check_in("variant", self.variant, ("audited", "paper"))
        cfg = _PRESETS[(self.example, "alg1")](eval_every=self.eval_every)
        if self.n_episodes is not None:
            cfg.n_episodes = check_positive_int("n_episodes", self.n_episodes)
        cfg.variant = FormulaVariant.AUDITED if self.variant == "audited" else FormulaVariant.PAPER_LITERAL
        log = run_alg1(cfg, self.seed)
        self.config_ = cfg
        self.log_ = log
        self.theta_ = log.final_theta
        self.psi_ = log.final_psi
        self.policy_ = psi_to_policy(cfg.constants.example, self.psi_)
        return self


class ActorCriticQLearning(_QLearningBase):
    """Offline actor-critic q-learning with separate policy parameters phi.

    `inner` selects the preset flavor: 'a' runs without inner fixed-point
    iterations (L = 1) and 'b' with them (L = 25 for the LQ benchmark, 30 for
    the non-LQ one).
    """

    def __init__(self, example: str = "lq", inner: str = "b",
                 n_episodes: Optional[int] = None, seed: int = 0,
                 variant: str = "audited", eval_every: int = 0):
        self.example = example
        self.inner = inner
        self.n_episodes = n_episodes
        self.seed = seed
        self.variant = variant
        self.eval_every = eval_every

    def fit(self, X=None, y=None) -> "ActorCriticQLearning":
        check_in("example", self.example, ("lq", "nlq"))
        check_in("inner", self.inner, ("a", "b"))
        check_in("variant", self.variant, ("audited", "paper"))
        cfg = _PRESETS[(self.example, f"alg2{self.inner}")](eval_every=self.eval_every)
        if self.n_episodes is not None:
            cfg.n_episodes = check_positive_int("n_episodes", self.n_episodes)
        cfg.variant = FormulaVariant.AUDITED if self.variant == "audited" else FormulaVariant.PAPER_LITERAL
        log = run_alg2(cfg, self.seed)
        self.config_ = cfg
        self.log_ = log
        self.theta_ = log.final_theta
        self.psi_ = log.final_psi
        self.phi_ = log.final_phi
        self.policy_ = phi_to_policy(cfg.constants.example, self.phi_)
        return self
