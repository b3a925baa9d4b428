"""k-arm learner: greedy argmax action, an exploration coin, debiased fake
rewards on exploration rounds, and a projected gradient step on the scaled
arm-gap loss."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Context
from .losses import ArmGapParams, arm_gap_loss
from .optimizer import OgdState, ogd_update


def select_action(w, context, rng):
    """Argmax arm of w . x_i, lowest index on ties; uniform arm when w == 0."""
    X = context.columns
    if X.shape[1] == 0:
        raise ValueError("empty context")
    if not np.any(w):
        return int(rng.integers(X.shape[1]))
    return int(np.argmax(w @ X))


def fake_rewards(k, reward_cap, beta, r_beta):
    """Debiasing surrogate for a single observed arm.

    Entry beta is (k-1)*r_beta, every other entry is reward_cap - r_beta;
    averaging the induced gap vectors over beta recovers the true gaps, so
    entries may exceed reward_cap by design.
    """
    if not 0 <= beta < k:
        raise ValueError(f"beta={beta} out of range for k={k}")
    fake = np.full(k, reward_cap - r_beta, dtype=float)
    fake[beta] = (k - 1) * r_beta
    return fake


def reduce_classification_to_bandit(x, y):
    """2-arm view of a labeled point: context (x, -x), rewards ((1+y)/2, (1-y)/2)."""
    x = np.asarray(x, dtype=float)
    context = Context(np.column_stack((x, -x)))
    return context, np.array([(1.0 + y) / 2.0, (1.0 - y) / 2.0])


@dataclass(frozen=True)
class BanditFeedback:
    """What one round produced, for logging and reward accounting."""

    observed_reward: float
    played_arm: int
    explored: bool
    explore_arm: Optional[int]
    greedy_arm: int
    score: float
    loss_value: float


class BanditLearner:
    """Single-run learner state; rng drives the coin, the explore arm, and
    the uniform fallback when the iterate is exactly zero."""

    def __init__(self, config, rng):
        w0 = np.zeros(config.d)
        w0[0] = 1.0
        self.config = config
        self.rng = rng
        self.ogd = OgdState(w=w0, step=config.step_size, radius=config.domain_radius)
        self.cumulative_reward = 0.0
        self.exploration_count = 0

    @property
    def w(self):
        return self.ogd.w

    @property
    def round(self):
        return self.ogd.round

    def play_round(self, context, reward_oracle):
        """One full round; reward_oracle(arm) is called exactly once.

        HEADS (probability q): play a uniform arm beta, build the fake reward
        vector from its reward, and step on (1/q) times the arm-gap loss with
        the current iterate as reference vector. TAILS: play the greedy arm
        and step on the zero loss.
        """
        config = self.config
        if self.ogd.round >= config.t_horizon:
            raise RuntimeError(f"horizon {config.t_horizon} already exhausted")
        w = self.ogd.w
        alpha = select_action(w, context, self.rng)
        score = float(np.dot(w, context.columns[:, alpha]))
        explored = self.rng.random() < config.q
        if explored:
            beta = int(self.rng.integers(context.k))
            observed = float(reward_oracle(beta))
            surrogate = fake_rewards(context.k, config.reward_cap, beta, observed)
            params = ArmGapParams(
                context=context,
                v=w,
                rewards=surrogate,
                alpha=alpha,
                delta=config.delta,
                rho=config.rho,
                lambda_cap=config.lambda_cap,
            )
            evaluated = arm_gap_loss(w, params)
            loss_value = evaluated.value / config.q
            subgrad = evaluated.subgrad / config.q
            played, explore_arm = beta, beta
            self.exploration_count += 1
        else:
            observed = float(reward_oracle(alpha))
            loss_value = 0.0
            subgrad = np.zeros(config.d)
            played, explore_arm = alpha, None
        self.ogd = ogd_update(self.ogd, subgrad, loss_value)
        self.cumulative_reward += observed
        return BanditFeedback(
            observed_reward=observed,
            played_arm=played,
            explored=explored,
            explore_arm=explore_arm,
            greedy_arm=alpha,
            score=score,
            loss_value=loss_value,
        )
