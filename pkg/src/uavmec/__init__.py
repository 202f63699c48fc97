"""Multi-UAV mobile edge computing simulator with a multi-agent actor-critic trainer."""
from .config import SimConfig, desk_scale, full_scale, load_config
from .env import Task, UavAction, WorldState, env_step, observe, reset_world

__all__ = [
    "SimConfig", "desk_scale", "full_scale", "load_config",
    "Task", "UavAction", "WorldState", "env_step", "observe", "reset_world",
]
__version__ = "0.1.0"
