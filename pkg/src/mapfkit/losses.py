"""Training-loss formulas as plain functions on numpy arrays.

Nothing here optimises anything; these are the scalar objectives a PPO +
imitation learner would minimise, kept separate so they can be checked on
hand-sized inputs.

Sign note: :func:`entropy_term` returns ``sum p log p`` (negative entropy)
and :func:`total_loss` adds it with coefficient ``iota`` as written. With a
positive ``iota`` minimising the total therefore *raises* policy entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_EPS = 1e-12
ADV_EPS = 1e-8


@dataclass(frozen=True)
class LossCoefficients:
    alpha: float = 1.0      # policy
    beta: float = 0.08      # value
    iota: float = 0.01      # entropy
    zeta: float = 0.5       # blocking
    eta_coef: float = 0.5   # valid-action

    def __post_init__(self):
        if not np.all(np.isfinite([self.alpha, self.beta, self.iota, self.zeta, self.eta_coef])):
            raise ValueError("loss coefficients must be finite")


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def advantage_estimate(returns, values) -> np.ndarray:
    raw = _arr(returns) - _arr(values)
    return (raw - raw.mean()) / (raw.std() + ADV_EPS)


def ppo_policy_loss(ratios, advantages, epsilon: float = 0.2, verbatim: bool = False) -> float:
    """Clipped surrogate ``-E[min(r A, clip(r) A)]``.

    ``verbatim=True`` drops the advantage from the clipped branch, i.e.
    ``-E[min(r A, clip(r))]``.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    r, adv = _arr(ratios), _arr(advantages)
    clipped = np.clip(r, 1.0 - epsilon, 1.0 + epsilon)
    second = clipped if verbatim else clipped * adv
    return float(np.mean(-np.minimum(r * adv, second)))


def probability_ratio(policies, old_policies, actions) -> np.ndarray:
    p, q = np.atleast_2d(_arr(policies)), np.atleast_2d(_arr(old_policies))
    idx = np.arange(len(p)), np.asarray(actions, dtype=int)
    return p[idx] / np.clip(q[idx], PROB_EPS, None)


def value_loss(values, returns) -> float:
    return float(np.mean((_arr(values) - _arr(returns)) ** 2))


def entropy_term(policy) -> float:
    """``sum_a p log p`` averaged over rows, with ``0 log 0 = 0``."""
    p = np.atleast_2d(_arr(policy))
    safe = np.where(p > 0, p, 1.0)
    return float(np.mean(np.sum(np.where(p > 0, p * np.log(safe), 0.0), axis=-1)))


def _bce(pred, truth) -> np.ndarray:
    p = np.clip(_arr(pred), PROB_EPS, 1.0 - PROB_EPS)
    t = _arr(truth)
    return -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))


def blocking_loss(pred, truth) -> float:
    return float(np.mean(_bce(pred, truth)))


def valid_loss(squashed_policy, valid_mask) -> float:
    """BCE between sigmoid-squashed policy outputs and the valid-action mask."""
    return float(np.mean(_bce(squashed_policy, valid_mask)))


def imitation_loss(policy, expert) -> float:
    """Cross entropy of the policy against expert action distributions."""
    p = np.clip(np.atleast_2d(_arr(policy)), PROB_EPS, None)
    w = np.atleast_2d(_arr(expert))
    return float(np.mean(-np.sum(w * np.log(p), axis=-1)))


def total_loss(j_pi: float, j_v: float, h: float, j_b: float, j_valid: float,
               coeffs: LossCoefficients = LossCoefficients()) -> float:
    return (
        coeffs.alpha * j_pi
        + coeffs.beta * j_v
        + coeffs.iota * h
        + coeffs.zeta * j_b
        + coeffs.eta_coef * j_valid
    )


@dataclass
class Batch:
    policies: np.ndarray
    old_policies: np.ndarray
    actions: np.ndarray
    returns: np.ndarray
    values: np.ndarray
    blocking_preds: np.ndarray
    blocking_truth: np.ndarray
    valid_masks: np.ndarray
    expert_policies: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.actions)
        for name in ("policies", "old_policies", "returns", "values", "blocking_preds", "blocking_truth", "valid_masks"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} samples, expected {n}")
        for name in ("policies", "old_policies"):
            sums = np.sum(getattr(self, name), axis=-1)
            if not np.allclose(sums, 1.0, atol=1e-9):
                raise ValueError(f"{name} rows must sum to 1")


def rl_loss(batch: Batch, coeffs: LossCoefficients = LossCoefficients(), epsilon: float = 0.2) -> dict[str, float]:
    """Every RL component plus the weighted total for one batch.

    The valid-action term squashes the policy probabilities with a sigmoid.
    """
    adv = advantage_estimate(batch.returns, batch.values)
    ratios = probability_ratio(batch.policies, batch.old_policies, batch.actions)
    parts = {
        "policy": ppo_policy_loss(ratios, adv, epsilon),
        "value": value_loss(batch.values, batch.returns),
        "entropy": entropy_term(batch.policies),
        "blocking": blocking_loss(batch.blocking_preds, batch.blocking_truth),
        "valid": valid_loss(1.0 / (1.0 + np.exp(-_arr(batch.policies))), batch.valid_masks),
    }
    parts["total"] = total_loss(parts["policy"], parts["value"], parts["entropy"], parts["blocking"], parts["valid"], coeffs)
    return parts
