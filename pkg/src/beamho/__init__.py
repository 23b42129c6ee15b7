"""Beam-aware handover simulation: access-beam baseline vs a contextual-bandit agent."""

from .baseline import BaselineConfig, TttState, baseline_decide
from .cmab import AgentConfig, QTable, cmab_decide, nearest_context, quantize
from .harness import compare, run_episode, train
from .mobility import MobilityModel, UeState
from .radio import (
    BaseStation,
    Beam,
    Deployment,
    MeasurementReport,
    PropagationModel,
    best_link_rsrp,
    beam_gain,
    measure,
    path_loss,
    rsrp,
)
from .scenarios import load_scenario

__version__ = "0.1.0"
