"""Instance-based reinforcement learning over observation histories.

The learner stores every (action, observation, reward) triple it collects
and acts by k-nearest-neighbor lookups over the history under either a
discrete exact-match measure or a discounted Euclidean sequence metric.
Two reference environments (a perceptually aliased gridworld maze and a
continuous 2D navigation arena) and a deterministic experiment harness are
included.
"""

from .agent import PCNSMAgent
from .core import AgentConfig, Experience, History, StepRecord
from .envs import ArenaEnv, ArenaParams, EnvDescriptor, MazeEnv
from .harness import RunConfig, evaluate_policy, load_run_config, run
from .learner import (ActionValues, Neighborhood, agent_step,
                      build_neighborhoods, endogenous_updates,
                      exogenous_update, exploration_action, greedy_action,
                      init_new_q, q_estimate, select_action)
from .metric import (MetricSpec, derive_window, discounted_distance,
                     match_length, nsm_distance)
from .persistence import load_history, save_history

__version__ = "0.1.0"

__all__ = [
    "PCNSMAgent",
    "AgentConfig",
    "Experience",
    "History",
    "StepRecord",
    "ArenaEnv",
    "ArenaParams",
    "EnvDescriptor",
    "MazeEnv",
    "RunConfig",
    "evaluate_policy",
    "load_run_config",
    "run",
    "ActionValues",
    "Neighborhood",
    "agent_step",
    "build_neighborhoods",
    "endogenous_updates",
    "exogenous_update",
    "exploration_action",
    "greedy_action",
    "init_new_q",
    "q_estimate",
    "select_action",
    "MetricSpec",
    "derive_window",
    "discounted_distance",
    "match_length",
    "nsm_distance",
    "load_history",
    "save_history",
    "__version__",
]
