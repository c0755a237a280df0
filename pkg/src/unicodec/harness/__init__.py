"""Monte-Carlo harness: configuration, simulation, persistence, figures."""
from .config import ConfigError, ExperimentConfig, SchemeDescriptor, StopRule, config_from_dict, load_config
from .io import export_csv, export_json, load_json, read_csv
from .plotting import FigureStyle, Series, render_figure
from .schemes import build_scheme
from .sim import PointResult, SimResult, run_experiment
