"""Experiment driver: runs learners against environments, audits the
environment's promises every round, and serializes per-round CSV traces plus
JSON reports. Reports are byte-reproducible from (config, seed) except for
the wall_time_s field."""

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import environments
from .core import config_dict, spawn_streams
from .learner_bandit import BanditLearner
from .learner_halfspace import HalfspaceLearner
from .oracles import run_all

CSV_HEADER = "round,action,observed,score,loss,explored,cum_metric,w_norm"

AUDIT_TOL = 1e-9


class EnvironmentViolation(RuntimeError):
    """The environment broke one of its own promises (ball, margin, range)."""


@dataclass(frozen=True)
class RoundRecord:
    """One CSV row: prediction/arm, observation, loss, cumulative metric."""

    round: int
    action: int
    observed: float
    score: float
    loss: float
    explored: bool
    cum_metric: float
    w_norm: float


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _record_line(record):
    return ",".join(
        _fmt(v)
        for v in (
            record.round,
            record.action,
            record.observed,
            record.score,
            record.loss,
            record.explored,
            record.cum_metric,
            record.w_norm,
        )
    )


class _CsvSink:
    def __init__(self, path):
        self.fh = open(path, "w", newline="") if path else None
        if self.fh:
            self.fh.write(CSV_HEADER + "\n")

    def write(self, record):
        if self.fh:
            self.fh.write(_record_line(record) + "\n")

    def close(self):
        if self.fh:
            self.fh.close()


class _Perceptron:
    """Classic mistake-driven update, used as a comparison column."""

    __slots__ = ("w", "mistakes")

    def __init__(self, d):
        self.w = np.zeros(d)
        self.mistakes = 0

    def observe(self, x, y):
        pred = 1 if float(self.w @ x) >= 0 else -1
        if pred != y:
            self.mistakes += 1
            self.w = self.w + y * x


def perceptron_baseline(stream):
    """Mistakes of the classic perceptron on an iterable of LabeledRound."""
    model = None
    for item in stream:
        if model is None:
            model = _Perceptron(item.x.shape[0])
        model.observe(item.x, item.y)
    return model.mistakes if model is not None else 0


def _audit_point(x, w_star, gamma):
    if float(np.linalg.norm(x)) > 1.0 + AUDIT_TOL:
        raise EnvironmentViolation(f"point norm {np.linalg.norm(x)} exceeds the unit ball")
    if abs(float(w_star @ x)) < gamma - AUDIT_TOL:
        raise EnvironmentViolation(
            f"margin {abs(float(w_star @ x))} below the promised {gamma}"
        )


def _audit_context(context, rewards, w_star, gamma, reward_cap):
    cols = context.columns
    worst_sq = float((cols * cols).sum(axis=0).max())
    if worst_sq > (1.0 + AUDIT_TOL) ** 2:
        raise EnvironmentViolation(f"context column norm {worst_sq**0.5} exceeds the unit ball")
    scores = np.sort(w_star @ cols)
    min_gap = float(np.min(scores[1:] - scores[:-1]))
    if min_gap < gamma - AUDIT_TOL:
        raise EnvironmentViolation(f"context score gap {min_gap} below the promised {gamma}")
    if float(rewards.min()) < -AUDIT_TOL or float(rewards.max()) > reward_cap + AUDIT_TOL:
        raise EnvironmentViolation(
            f"rewards outside [0, {reward_cap}]: [{rewards.min()}, {rewards.max()}]"
        )


def run_halfspace_experiment(config, csv_path=None, collect_records=False):
    """Drive the halfspace learner for T rounds; returns the run report.

    Baselines (coin-flip predictions and the perceptron) consume the exact
    same observed stream inside the same pass.
    """
    t_start = time.perf_counter()
    rng_env, rng_base = spawn_streams(config.seed, 2)
    target = environments.HiddenTarget(
        w_star=environments.random_unit(rng_env, config.d),
        eta=config.eta,
        gamma=config.gamma,
    )
    strategy = environments.strategy_from_name(config.adversary)
    learner = HalfspaceLearner(config)
    perceptron = _Perceptron(config.d)
    random_mistakes = 0
    records = [] if collect_records else None
    sink = _CsvSink(csv_path)
    try:
        for t in range(1, config.t_horizon + 1):
            round_ = environments.adversary_round(strategy, target, learner.w, rng_env)
            x, y = round_.x, round_.y
            _audit_point(x, target.w_star, config.gamma)
            if y not in (-1, 1):
                raise EnvironmentViolation(f"label {y} outside {{-1, +1}}")
            pred = learner.predict(x)
            score = float(learner.w @ x)
            evaluated = learner.observe(x, y)
            guess = 1 if rng_base.random() < 0.5 else -1
            if guess != y:
                random_mistakes += 1
            perceptron.observe(x, y)
            record = RoundRecord(
                round=t,
                action=pred,
                observed=y,
                score=score,
                loss=evaluated.value,
                explored=False,
                cum_metric=learner.mistakes,
                w_norm=float(np.linalg.norm(learner.w)),
            )
            sink.write(record)
            if records is not None:
                records.append(record)
    finally:
        sink.close()
    t_total = config.t_horizon
    mistakes = learner.mistakes
    excess_term = t_total**0.75 / config.gamma
    report = {
        "kind": "halfspace",
        "config": config_dict(config),
        "total_mistakes": mistakes,
        "mistake_rate": mistakes / t_total,
        "baselines": {
            "random_play": random_mistakes,
            "perceptron": perceptron.mistakes,
            "uniform_arm_mean": None,
        },
        "bound_check": {
            "eta_T": config.eta * t_total,
            "excess_term": excess_term,
            "normalized_excess": (mistakes - config.eta * t_total) * config.gamma / t_total**0.75,
        },
        "clamp_flags": {"epsilon_clamped": config.epsilon_clamped},
        "margin_violations": 0,
        "wall_time_s": time.perf_counter() - t_start,
    }
    if records is not None:
        report["records"] = records
    return report


def run_bandit_experiment(
    config, csv_path=None, collect_records=False, env_delta=None, env_noise_scale=None
):
    """Drive the k-arm learner for T rounds; returns the run report.

    The environment's full reward vectors stay private to this driver; they
    feed the uniform-arm baseline and the greedy-arm reward accounting that
    the 2-arm reduction identities refer to. env_delta overrides the
    environment's reward margin (for misspecification experiments) without
    touching the learner's schedule.
    """
    t_start = time.perf_counter()
    rng_env, rng_learner, rng_base = spawn_streams(config.seed, 3)
    target = environments.HiddenTarget(
        w_star=environments.random_unit(rng_env, config.d),
        gamma=config.gamma,
        delta=config.delta if env_delta is None else env_delta,
        reward_cap=config.reward_cap,
    )
    env = environments.make_bandit_environment(
        config.environment, target, config.k, env_noise_scale
    )
    learner = BanditLearner(config, rng_learner)
    uniform_sum = 0.0
    greedy_sum = 0.0
    random_play = 0.0
    records = [] if collect_records else None
    sink = _CsvSink(csv_path)
    try:
        for t in range(1, config.t_horizon + 1):
            context, rewards = env.next_round(rng_env)
            _audit_context(context, rewards, target.w_star, config.gamma, config.reward_cap)
            feedback = learner.play_round(context, lambda arm: rewards[arm])
            uniform_sum += float(rewards.mean())
            greedy_sum += float(rewards[feedback.greedy_arm])
            random_play += float(rewards[rng_base.integers(config.k)])
            record = RoundRecord(
                round=t,
                action=feedback.played_arm,
                observed=feedback.observed_reward,
                score=feedback.score,
                loss=feedback.loss_value,
                explored=feedback.explored,
                cum_metric=learner.cumulative_reward,
                w_norm=float(np.linalg.norm(learner.w)),
            )
            sink.write(record)
            if records is not None:
                records.append(record)
    finally:
        sink.close()
    t_total = config.t_horizon
    gain_term = (1.0 - 1.0 / config.k) * config.delta * t_total
    report = {
        "kind": "bandit",
        "config": config_dict(config),
        "total_reward": learner.cumulative_reward,
        "greedy_reward": greedy_sum,
        "exploration_count": learner.exploration_count,
        "baselines": {
            "uniform_arm_mean": uniform_sum,
            "random_play": random_play,
            "perceptron": None,
        },
        "bound_check": {
            "delta_gain_term": gain_term,
            "excess_term": t_total ** (5.0 / 6.0)
            * (config.k * config.delta * config.reward_cap**2) ** (1.0 / 3.0)
            / config.gamma,
            "played_gap_vs_uniform": learner.cumulative_reward - uniform_sum,
            "greedy_gap_vs_uniform": greedy_sum - uniform_sum,
        },
        "clamp_flags": {"q_clamped": config.q_clamped},
        "margin_violations": 0,
        "wall_time_s": time.perf_counter() - t_start,
    }
    if records is not None:
        report["records"] = records
    return report


def run_many(runner, config, seeds, out_dir=None):
    """Run one config across seeds (sorted, so aggregation is order-free)."""
    per_seed = []
    for seed in sorted(seeds):
        cfg = dataclasses.replace(config, seed=seed)
        csv_path = None
        if out_dir is not None:
            csv_path = str(out_dir / f"run_{seed}.csv")
        per_seed.append(runner(cfg, csv_path=csv_path))
    metric = "total_mistakes" if per_seed[0]["kind"] == "halfspace" else "total_reward"
    return {
        "kind": per_seed[0]["kind"] + "_multi",
        "seeds": sorted(seeds),
        "mean_" + metric: float(np.mean([r[metric] for r in per_seed])),
        "per_seed": per_seed,
    }


def report_digest(report):
    """sha256 of the canonical report JSON with wall-time fields removed."""
    return hashlib.sha256(report_json(report, drop_wall_time=True).encode()).hexdigest()


def _strip_wall_time(obj):
    if isinstance(obj, dict):
        return {k: _strip_wall_time(v) for k, v in obj.items() if k != "wall_time_s"}
    if isinstance(obj, list):
        return [_strip_wall_time(v) for v in obj]
    return obj


def report_json(report, drop_wall_time=False):
    payload = {k: v for k, v in report.items() if k != "records"}
    if drop_wall_time:
        payload = _strip_wall_time(payload)
    return json.dumps(payload, indent=2, sort_keys=True)


def write_report(report, path):
    with open(path, "w") as fh:
        fh.write(report_json(report) + "\n")


def verify_oracles(seed=0, quick=False):
    """Run the oracle suite; returns (results, all_passed)."""
    return run_all(seed=seed, quick=quick)
