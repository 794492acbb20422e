"""Experiment orchestration: config loading, the agent-environment loop,
trial bookkeeping, CSV metrics, and history persistence.

Runs are fully deterministic given (config, seed): one seed sequence is
split into independent streams for the agent, the environment noise, and
the placement draws, so changing e.g. the sensor noise model leaves the
placement sequence untouched.
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .agent import PCNSMAgent
from .envs import ArenaEnv, ArenaParams, MazeEnv
from .persistence import save_history


class ConfigError(ValueError):
    """Raised for unreadable, unparsable, or out-of-range run configs."""


@dataclass(frozen=True)
class RunConfig:
    env: str = "arena"
    scenario: str | None = None
    trials: int = 1000
    max_actions: int = 3000
    seed: int = 0
    trial_timeout: int = 1000
    eval_mode: bool = False
    k: int = 3
    epsilon: float = 0.3
    gamma: float = 0.3
    beta: float = 0.5
    lam: float = 0.8
    endo_updates_per_step: int = 32
    truncation_tol: float = 1e-6
    exogenous_updates: bool = False
    metric: str = "discounted"
    action_source: str = "entry"


_CONFIG_FIELDS = {
    "env": str,
    "scenario": str,
    "trials": int,
    "max_actions": int,
    "seed": int,
    "trial_timeout": int,
    "eval_mode": bool,
    "k": int,
    "epsilon": float,
    "gamma": float,
    "beta": float,
    "lambda": float,
    "endo_updates_per_step": int,
    "truncation_tol": float,
    "exogenous_updates": bool,
    "metric": str,
    "action_source": str,
}


def _parse_bool(value):
    lowered = value.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def load_run_config(path):
    """Parse a key = value run config; '#' starts a comment and unknown
    keys are errors."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, text = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            caster = _CONFIG_FIELDS[key]
            try:
                value = _parse_bool(text) if caster is bool else caster(text)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            field_name = "lam" if key == "lambda" else key
            if field_name in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[field_name] = value
    try:
        config = RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    config_dir = os.path.dirname(os.path.abspath(path))
    resolved = _resolve_scenario(config, config_dir)
    if resolved is not None:
        config = replace(config, scenario=os.path.abspath(resolved))
    validate_config(config)
    return config


def _resolve_scenario(config, config_dir=None):
    if config.scenario is None:
        return None
    path = config.scenario
    if not os.path.isabs(path) and config_dir is not None:
        candidate = os.path.join(config_dir, path)
        if os.path.isfile(candidate):
            return candidate
    return path


def validate_config(config, config_dir=None):
    """Range- and file-check a RunConfig before any stepping begins."""
    if config.env not in ("arena", "maze"):
        raise ConfigError(f"env must be 'arena' or 'maze', got {config.env!r}")
    if config.metric not in ("discounted", "match-length"):
        raise ConfigError(f"unknown metric {config.metric!r}")
    for name, lo in (("trials", 1), ("max_actions", 0), ("trial_timeout", 1)):
        if getattr(config, name) < lo:
            raise ConfigError(f"{name} must be >= {lo}")
    scenario = _resolve_scenario(config, config_dir)
    if scenario is not None and not os.path.isfile(scenario):
        raise ConfigError(f"scenario file not found: {scenario}")
    try:
        env = build_env(config, config_dir)
        # setup() performs the hyperparameter range checks; the constructor
        # stores parameters verbatim per estimator convention.
        build_agent(config).setup(env.descriptor)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return config


def _default_scenario_text(name):
    return importlib.resources.files("pcnsm.data").joinpath(name).read_text()


def build_env(config, config_dir=None):
    scenario = _resolve_scenario(config, config_dir)
    if config.env == "maze":
        if scenario is None:
            rows = [r for r in _default_scenario_text("maze_default.txt")
                    .splitlines() if r]
            return MazeEnv(rows)
        return MazeEnv.from_file(scenario)
    if scenario is None:
        return ArenaEnv(ArenaParams.from_text(
            _default_scenario_text("arena_default.cfg"), "arena_default.cfg"))
    return ArenaEnv(ArenaParams.from_file(scenario))


def build_agent(config):
    return PCNSMAgent(
        k=config.k, epsilon=config.epsilon, gamma=config.gamma,
        beta=config.beta, lam=config.lam,
        endo_updates_per_step=config.endo_updates_per_step,
        truncation_tol=config.truncation_tol,
        exogenous_updates=config.exogenous_updates, metric=config.metric,
        action_source=config.action_source, seed=config.seed)


@dataclass
class TrialRow:
    trial: int
    steps: int
    timed_out: bool
    cum_reward: float
    mean_reward: float


@dataclass
class RunMetrics:
    steps: list = field(default_factory=list)    # (trial, StepRecord)
    trials: list = field(default_factory=list)   # TrialRow


def drive(agent, env, env_rng, place_rng, max_actions, trials,
          trial_timeout, forced_policy=None):
    """Run the agent-environment loop until the action budget or trial
    count is exhausted.  Returns (step rows, trial rows)."""
    steps = []
    trial_rows = []
    obs, reward = env.reset(place_rng, env_rng)
    trial = 1
    steps_in_trial = 0
    trial_rewards = []

    def close_trial(timed_out):
        nonlocal trial, steps_in_trial, trial_rewards
        cum = float(sum(trial_rewards))
        mean = cum / len(trial_rewards) if trial_rewards else 0.0
        trial_rows.append(TrialRow(trial, steps_in_trial, timed_out, cum, mean))
        trial += 1
        steps_in_trial = 0
        trial_rewards = []

    for _ in range(max_actions):
        if trial > trials:
            break
        forced = forced_policy() if forced_policy is not None else None
        action, record = agent.step(obs, reward, forced_action=forced)
        steps.append((trial, record))
        trial_rewards.append(record.reward)
        obs, reward, done = env.step(action, env_rng)
        steps_in_trial += 1
        if done or steps_in_trial >= trial_timeout:
            close_trial(timed_out=not done)
            if trial <= trials:
                env.new_trial(place_rng)
    if steps_in_trial > 0:
        close_trial(timed_out=True)
    return steps, trial_rows


def run(config, out_dir, seed=None):
    """Execute one full training run and write steps.csv, trials.csv, and
    history.txt into out_dir."""
    seed = config.seed if seed is None else seed
    env = build_env(config)
    agent = build_agent(config)
    agent_seed, env_seed, place_seed = np.random.SeedSequence(seed).spawn(3)
    agent.setup(env.descriptor, rng=np.random.default_rng(agent_seed))
    if config.eval_mode:
        agent.freeze()
    steps, trial_rows = drive(
        agent, env, np.random.default_rng(env_seed),
        np.random.default_rng(place_seed), max_actions=config.max_actions,
        trials=config.trials, trial_timeout=config.trial_timeout)
    metrics = RunMetrics(steps=steps, trials=trial_rows)
    emit_metrics(metrics, out_dir, env.descriptor.action_count)
    save_history(agent.history_, os.path.join(out_dir, "history.txt"),
                 env.descriptor.action_count)
    return metrics


def evaluate_policy(agent, env, episodes, max_steps, env_rng, place_rng):
    """Run frozen-policy episodes from fresh random placements.  Returns
    (step rows, trial rows); a trial row is timed out when the episode
    failed to reach the target within max_steps."""
    steps = []
    trial_rows = []
    for episode in range(1, episodes + 1):
        obs, reward = env.reset(place_rng, env_rng)
        agent.begin_session()
        rewards = []
        reached = False
        taken = 0
        for _ in range(max_steps):
            action, record = agent.step(obs, reward)
            steps.append((episode, record))
            rewards.append(record.reward)
            obs, reward, done = env.step(action, env_rng)
            taken += 1
            if done:
                reached = True
                break
        cum = float(sum(rewards))
        mean = cum / len(rewards) if rewards else 0.0
        trial_rows.append(TrialRow(episode, taken, not reached, cum, mean))
    return steps, trial_rows


def eval_run(config, history_path, out_dir, seed=None):
    """CLI entry for evaluation: load a persisted history, freeze the
    policy, and run config.trials episodes capped at config.trial_timeout
    actions each."""
    from .persistence import load_history

    seed = config.seed if seed is None else seed
    env = build_env(config)
    history, action_count = load_history(history_path)
    if action_count != env.descriptor.action_count:
        raise ConfigError(
            f"history has {action_count} actions, environment declares "
            f"{env.descriptor.action_count}")
    if history.obs_dim != env.descriptor.obs_dim:
        raise ConfigError(
            f"history dimension {history.obs_dim} does not match "
            f"environment dimension {env.descriptor.obs_dim}")
    agent = build_agent(config)
    agent_seed, env_seed, place_seed = np.random.SeedSequence(seed).spawn(3)
    agent.setup(env.descriptor, rng=np.random.default_rng(agent_seed))
    agent.warm_start(history)
    agent.freeze()
    steps, trial_rows = evaluate_policy(
        agent, env, episodes=config.trials, max_steps=config.trial_timeout,
        env_rng=np.random.default_rng(env_seed),
        place_rng=np.random.default_rng(place_seed))
    metrics = RunMetrics(steps=steps, trials=trial_rows)
    emit_metrics(metrics, out_dir, env.descriptor.action_count)
    return metrics


def emit_metrics(metrics, out_dir, action_count):
    """Write steps.csv and trials.csv with round-trip float precision."""
    os.makedirs(out_dir, exist_ok=True)
    steps_path = os.path.join(out_dir, "steps.csv")
    trials_path = os.path.join(out_dir, "trials.csv")
    q_cols = ",".join(f"q_{a}" for a in range(action_count))
    per_trial_rewards = {}
    with open(steps_path, "w") as fh:
        fh.write(f"t,trial,action,exploratory,reward,q_chosen,{q_cols}\n")
        for trial, rec in metrics.steps:
            per_trial_rewards.setdefault(trial, []).append(rec.reward)
            qs = ",".join(repr(float(v)) for v in rec.per_action_q)
            fh.write(f"{rec.t},{trial},{rec.chosen_action},"
                     f"{int(rec.was_exploratory)},{rec.reward!r},"
                     f"{rec.q_of_chosen!r},{qs}\n")
    with open(trials_path, "w") as fh:
        fh.write("trial,steps,timed_out,cum_reward,mean_reward\n")
        for row in metrics.trials:
            rewards = per_trial_rewards.get(row.trial, [])
            if rewards:
                recomputed = sum(rewards) / len(rewards)
                if abs(recomputed - row.mean_reward) > 1e-9:
                    raise AssertionError(
                        f"trial {row.trial} mean reward mismatch: "
                        f"{row.mean_reward} vs {recomputed}")
            fh.write(f"{row.trial},{row.steps},{int(row.timed_out)},"
                     f"{row.cum_reward!r},{row.mean_reward!r}\n")
