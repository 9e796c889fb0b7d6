"""Proactive wireless VR viewport streaming toolkit.

Predict head orientation, map it onto an overlapping spherical viewport
grid, schedule user/base-station transmissions with deferred-acceptance
matching over deadline queues, cache popular viewports at the edge, and
measure delivery latency and quality in a slot-level simulator.
"""

from .caching import CacheState, PopularityProfile, build_popularity, lookup, populate_cache
from .channel import ChannelConfig, LinkState
from .geometry import FovSpec, ViewportGrid, ViewportId, build_grid
from .gru import GruModel, load_model, save_model
from .matching import Request, UserQueue, deferred_acceptance
from .prediction import PredictionConfig, TrainConfig, TrainResult, train
from .simulator import (
    ExtrapolationPredictor,
    GruPredictor,
    OraclePredictor,
    RunMetrics,
    SimConfig,
    run,
)
from .traces import MotionModelParams, PoseTrace, generate_traces, load_traces, save_traces

__version__ = "0.1.0"

__all__ = [
    "CacheState",
    "ChannelConfig",
    "ExtrapolationPredictor",
    "FovSpec",
    "GruModel",
    "GruPredictor",
    "LinkState",
    "MotionModelParams",
    "OraclePredictor",
    "PopularityProfile",
    "PoseTrace",
    "PredictionConfig",
    "Request",
    "RunMetrics",
    "SimConfig",
    "TrainConfig",
    "TrainResult",
    "UserQueue",
    "ViewportGrid",
    "ViewportId",
    "build_grid",
    "build_popularity",
    "deferred_acceptance",
    "generate_traces",
    "load_model",
    "load_traces",
    "lookup",
    "populate_cache",
    "run",
    "save_model",
    "save_traces",
    "train",
]
