from .events import EventBus
from .recipes import RECIPES, REFERENCE_DEFAULTS, FigureResult, Scale, run_figure
from .runner import ResultSet, config_hash, load_config, run_experiment, run_instance, with_override
from .seeding import STREAMS, InstanceStreams

__all__ = [
    "RECIPES",
    "STREAMS",
    "REFERENCE_DEFAULTS",
    "EventBus",
    "FigureResult",
    "InstanceStreams",
    "ResultSet",
    "Scale",
    "config_hash",
    "load_config",
    "run_experiment",
    "run_figure",
    "run_instance",
    "with_override",
]
