"""Shared domain types, experiment configuration, and the deterministic RNG contract.

Vectors (weights, points, rewards) are plain numpy arrays; arm indices are
0-based everywhere. The config dataclasses are immutable after construction
and carry all derived schedule parameters, so a config plus a seed fully
determines an experiment transcript.
"""

import json
from dataclasses import dataclass, field, fields

import numpy as np

from . import optimizer

# epsilon is clamped this far below (1 - 2*eta)/2 so the shrunken margin
# delta_tilde = 1 - 2*eta - epsilon stays strictly positive.
EPSILON_CLAMP_MARGIN = 1e-6

ADVERSARIES = ("iid", "boundary", "adaptive")
ENVIRONMENTS = ("massart2", "sorted_k", "monotone_k", "reduction2")
BANDIT_ENVIRONMENTS = ("sorted_k", "monotone_k", "reduction2")

CONFIG_KEYS = (
    "d",
    "t_horizon",
    "eta",
    "gamma",
    "zeta",
    "k",
    "delta",
    "reward_cap",
    "seed",
    "adversary",
    "environment",
    "domain_radius",
)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def seeded_rng(seed):
    """Deterministic random stream; identical seeds reproduce identical draws."""
    return np.random.default_rng(seed)


def spawn_streams(seed, n):
    """n independent child streams, deterministic in (seed, n)."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass(frozen=True)
class LabeledRound:
    """One adversary round: point x in the unit ball with binary label y."""

    x: np.ndarray
    y: int


@dataclass(frozen=True)
class Context:
    """k context vectors stored as the columns of a (d, k) matrix."""

    columns: np.ndarray

    def __post_init__(self):
        if self.columns.ndim != 2:
            raise ValueError("context columns must form a (d, k) matrix")

    @property
    def d(self):
        return self.columns.shape[0]

    @property
    def k(self):
        return self.columns.shape[1]


def derive_halfspace_params(eta, gamma, t_horizon, zeta=0.0, domain_radius=1.0):
    """Schedule for the noisy-halfspace learner from (eta, gamma, T, zeta).

    epsilon follows T^(-1/(4+2*zeta))/gamma, clamped strictly below
    (1-2*eta)/2; tau = epsilon^(1+zeta)*gamma/4; the step size uses
    diameter 2*domain_radius and gradient bound 1/tau.
    """
    if not 0 <= eta < 0.5:
        raise ConfigError(f"eta must be in [0, 0.5), got {eta}")
    if not 0 < gamma <= 1:
        raise ConfigError(f"gamma must be in (0, 1], got {gamma}")
    if t_horizon < 1:
        raise ConfigError(f"t_horizon must be at least 1, got {t_horizon}")
    if zeta < 0:
        raise ConfigError(f"zeta must be nonnegative, got {zeta}")
    if domain_radius <= 0:
        raise ConfigError(f"domain_radius must be positive, got {domain_radius}")
    cap = (1.0 - 2.0 * eta) / 2.0 - EPSILON_CLAMP_MARGIN
    if cap <= 0:
        raise ConfigError(f"eta={eta} is too close to 1/2, no usable signal")
    raw = t_horizon ** (-1.0 / (4.0 + 2.0 * zeta)) / gamma
    epsilon = min(raw, cap)
    delta_tilde = 1.0 - 2.0 * eta - epsilon
    tau = epsilon ** (1.0 + zeta) * gamma / 4.0
    step = optimizer.step_size(2.0 * domain_radius, 1.0 / tau, t_horizon)
    return {
        "epsilon": epsilon,
        "delta_tilde": delta_tilde,
        "tau": tau,
        "step_size": step,
        "epsilon_clamped": raw > cap,
    }


def derive_bandit_params(gamma, delta, reward_cap, k, t_horizon, domain_radius=1.0):
    """Schedule for the k-arm learner from (gamma, delta, reward cap, k, T).

    rho = gamma/2; lambda_cap = (1/gamma) * T^(1/6) * (cap/(k*delta))^(1/3);
    q = min(1, cap/(gamma*lambda_cap*delta)). The gradient bound folds the
    1/q loss scaling into 2*cap*k*max(lambda_cap, 1/rho).
    """
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if reward_cap <= 0:
        raise ConfigError(f"reward_cap must be positive, got {reward_cap}")
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if t_horizon < 1:
        raise ConfigError(f"t_horizon must be at least 1, got {t_horizon}")
    if domain_radius <= 0:
        raise ConfigError(f"domain_radius must be positive, got {domain_radius}")
    rho = gamma / 2.0
    lambda_cap = (1.0 / gamma) * t_horizon ** (1.0 / 6.0) * (reward_cap / (k * delta)) ** (1.0 / 3.0)
    q_raw = reward_cap / (gamma * lambda_cap * delta)
    q = min(1.0, q_raw)
    grad_bound = (1.0 / q) * 2.0 * reward_cap * k * max(lambda_cap, 1.0 / rho)
    step = optimizer.step_size(2.0 * domain_radius, grad_bound, t_horizon)
    return {
        "rho": rho,
        "lambda_cap": lambda_cap,
        "q": q,
        "step_size": step,
        "q_clamped": q_raw > 1.0,
    }


@dataclass(frozen=True)
class HalfspaceConfig:
    """Full configuration of one halfspace run, derived schedule included."""

    d: int
    t_horizon: int
    eta: float
    gamma: float
    zeta: float = 0.0
    seed: int = 0
    domain_radius: float = 1.0
    adversary: str = "iid"
    epsilon: float = field(init=False)
    delta_tilde: float = field(init=False)
    tau: float = field(init=False)
    step_size: float = field(init=False)
    epsilon_clamped: bool = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be at least 1, got {self.d}")
        if self.adversary not in ADVERSARIES:
            raise ConfigError(f"adversary must be one of {ADVERSARIES}, got {self.adversary!r}")
        derived = derive_halfspace_params(
            self.eta, self.gamma, self.t_horizon, self.zeta, self.domain_radius
        )
        for name, value in derived.items():
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class BanditConfig:
    """Full configuration of one k-arm run, derived schedule included."""

    d: int
    k: int
    t_horizon: int
    gamma: float
    delta: float
    reward_cap: float = 1.0
    seed: int = 0
    domain_radius: float = 1.0
    environment: str = "monotone_k"
    rho: float = field(init=False)
    lambda_cap: float = field(init=False)
    q: float = field(init=False)
    step_size: float = field(init=False)
    q_clamped: bool = field(init=False)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be at least 1, got {self.d}")
        if self.environment not in BANDIT_ENVIRONMENTS:
            raise ConfigError(
                f"environment must be one of {BANDIT_ENVIRONMENTS}, got {self.environment!r}"
            )
        if self.environment == "reduction2":
            if self.k != 2:
                raise ConfigError("reduction2 is a 2-arm environment, set k=2")
            if not 0 < self.delta <= 1:
                raise ConfigError("reduction2 needs delta in (0, 1]")
            if self.reward_cap < 1:
                raise ConfigError("reduction2 emits rewards in {0, 1}, set reward_cap >= 1")
        derived = derive_bandit_params(
            self.gamma, self.delta, self.reward_cap, self.k, self.t_horizon, self.domain_radius
        )
        for name, value in derived.items():
            object.__setattr__(self, name, value)


def config_dict(config):
    """Flat field dict of a config dataclass, derived values included."""
    return {f.name: getattr(config, f.name) for f in fields(config)}


def load_config_file(path):
    """Read a flat JSON key/value config file and validate its keys."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a flat JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def halfspace_config_from(mapping):
    """Build a HalfspaceConfig from a flat config mapping (extra keys ignored)."""
    try:
        return HalfspaceConfig(
            d=int(mapping.get("d", 10)),
            t_horizon=int(mapping.get("t_horizon", 10000)),
            eta=float(mapping.get("eta", 0.1)),
            gamma=float(mapping.get("gamma", 0.2)),
            zeta=float(mapping.get("zeta", 0.0)),
            seed=int(mapping.get("seed", 0)),
            domain_radius=float(mapping.get("domain_radius", 1.0)),
            adversary=str(mapping.get("adversary", "iid")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def bandit_config_from(mapping):
    """Build a BanditConfig from a flat config mapping (extra keys ignored)."""
    try:
        return BanditConfig(
            d=int(mapping.get("d", 10)),
            k=int(mapping.get("k", 3)),
            t_horizon=int(mapping.get("t_horizon", 10000)),
            gamma=float(mapping.get("gamma", 0.2)),
            delta=float(mapping.get("delta", 0.5)),
            reward_cap=float(mapping.get("reward_cap", 1.0)),
            seed=int(mapping.get("seed", 0)),
            domain_radius=float(mapping.get("domain_radius", 1.0)),
            environment=str(mapping.get("environment", "monotone_k")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
