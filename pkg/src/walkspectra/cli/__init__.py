"""Command-line front end and configuration handling."""
from .config import WalkConfig, dump_config, parse_config
from .main import main, run
from .presets import PRESETS, preset_steps

__all__ = ["WalkConfig", "parse_config", "dump_config", "run", "main", "PRESETS", "preset_steps"]
