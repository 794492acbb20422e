from .base import EnvDescriptor
from .maze import MazeEnv
from .arena import (ArenaEnv, ArenaObservation, ArenaParams, ArenaState,
                    arena_actions, arena_reward)

__all__ = [
    "EnvDescriptor",
    "MazeEnv",
    "ArenaEnv",
    "ArenaObservation",
    "ArenaParams",
    "ArenaState",
    "arena_actions",
    "arena_reward",
]
