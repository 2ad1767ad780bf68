"""Appraisal-guided PPO agents in a dynamic grid world."""

from .appraisal import AppraisalConfig, AppraisalVector, stress
from .grid_env import GridConfig, PRESETS, preset
from .nets import AgentNets, NetConfig, init_params, load_checkpoint, save_checkpoint
from .shaping import CONFIGS, ShapingConfig, get_config, reshape
from .trainer import TrainConfig, train

__version__ = "0.1.0"
