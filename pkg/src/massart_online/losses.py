"""Convex surrogate losses and their subgradients.

Everything here is piecewise linear in the weight vector, so the subgradients
are exact. Kink conventions: prediction signs use sign_of (sign_of(0) = +1),
while loss subgradients at a kink take the minimal-norm choice (slope 0 for
the |t| term).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import Context


class LossEval(NamedTuple):
    value: float
    subgrad: np.ndarray


def sign_of(t):
    """Sign with the prediction convention sign_of(0) = +1."""
    return 1 if t >= 0 else -1


def leaky_relu(lam, t):
    """(1-lam)*t for t > 0, lam*t for t < 0, and 0 at t = 0."""
    if t > 0:
        return (1.0 - lam) * t
    if t < 0:
        return lam * t
    return 0.0


def leaky_margin_loss(delta, t, y):
    """0.5*(delta*|t| - y*t).

    For labels y in {-1,+1} this equals leaky_relu with slope (1-delta)/2
    applied to -t*y; real-valued y (reward differences) pass through the same
    formula.
    """
    return 0.5 * (delta * abs(t) - y * t)


def leaky_margin_subgrad(delta, t, y):
    """d/dt of leaky_margin_loss; uses slope 0 for the |t| term at t = 0."""
    if t > 0:
        s = 1.0
    elif t < 0:
        s = -1.0
    else:
        s = 0.0
    return 0.5 * (delta * s - y)


def reweighted_margin_loss(w, x, y, w_ref, tau, delta_tilde):
    """Per-round loss: leaky margin loss at w.x divided by max(|w_ref.x|, tau).

    w_ref is the current iterate and is treated as a constant, so the
    denominator carries no gradient. The subgradient norm is at most
    (delta_tilde+1)/(2*tau) times ||x||.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    denom = max(abs(float(np.dot(w_ref, x))), tau)
    t = float(np.dot(w, x))
    coef = leaky_margin_subgrad(delta_tilde, t, y) / denom
    return LossEval(leaky_margin_loss(delta_tilde, t, y) / denom, coef * x)


@dataclass(frozen=True)
class ArmGapParams:
    """Parameters of the k-arm gap loss; the weight vector is the argument.

    rewards is the vector the loss is built from; when the debiasing
    surrogate is plugged in its entries may exceed the environment cap.
    """

    context: Context
    v: np.ndarray
    rewards: np.ndarray
    alpha: int
    delta: float
    rho: float
    lambda_cap: float

    def __post_init__(self):
        if not 0 <= self.alpha < self.context.k:
            raise ValueError(f"alpha={self.alpha} out of range for k={self.context.k}")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.lambda_cap <= 0:
            raise ValueError("lambda_cap must be positive")


def arm_gap_loss(w, params):
    """Convex loss over arm-score gaps around the chosen arm alpha.

    With reward gaps y_j = r[alpha] - r[j]: if the reference vector v is
    exactly zero the loss is the linear form -lambda_cap * sum_{j != alpha}
    (w . (x_alpha - x_j)) * y_j. Otherwise each difference is pushed distance
    rho away from v's decision boundary,

        z_j = (x_alpha - x_j) + rho * sign((x_alpha - x_j) . v) * v/||v||,

    and the loss is sum_{j != alpha} leaky_margin_loss(delta, w.z_j, y_j)
    divided by |v.z_j|; the construction makes |v.z_j| >= rho*||v|| > 0.
    """
    X = params.context.columns
    k = X.shape[1]
    a = params.alpha
    y = params.rewards[a] - params.rewards
    diffs = X[:, [a]] - X
    mask = np.arange(k) != a
    v = params.v
    if not np.any(v):
        grad = -params.lambda_cap * (diffs[:, mask] @ y[mask])
        return LossEval(float(np.dot(w, grad)), grad)
    vnorm = float(np.linalg.norm(v))
    sv = diffs.T @ v
    sgn = np.where(sv >= 0, 1.0, -1.0)
    Z = diffs + (params.rho / vnorm) * np.outer(v, sgn)
    den = np.abs(Z.T @ v)
    t = Z.T @ w
    vals = 0.5 * (params.delta * np.abs(t) - y * t) / den
    coef = 0.5 * (params.delta * np.sign(t) - y) / den
    return LossEval(float(vals[mask].sum()), Z[:, mask] @ coef[mask])
