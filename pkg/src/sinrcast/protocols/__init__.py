"""Broadcast protocols run by :func:`sinrcast.engine.run`."""
from .backoff import Backoff, window_limit
from .rand import RandBroadcast, box_counts, rand_broadcast_defaults
from .unknown import UnknownBroadcast, iteration_rounds, loop_rounds, unknown_broadcast_defaults

__all__ = ["Backoff", "RandBroadcast", "UnknownBroadcast", "box_counts", "iteration_rounds",
           "loop_rounds", "rand_broadcast_defaults", "unknown_broadcast_defaults", "window_limit"]
