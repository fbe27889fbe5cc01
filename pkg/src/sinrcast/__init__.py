"""Broadcast in ad-hoc wireless networks under the SINR physical model.

Submodules
----------
sinr
    Signal-to-interference-and-noise ratio and per-round reception.
grid
    Square grids, box adjacency, octants and dilution classes.
params
    Dilution parameters, iteration budgets and interference bounds.
network
    Uniform and social network generators and the network file format.
engine
    The synchronous round loop, traces and trace replay.
protocols
    Known-density, unknown-density and exponential-backoff broadcast.
experiments
    Seeded batch runs, aggregation and CSV/JSON export.
"""
from .engine import Message, SimResult, replay_check, run
from .network import Network, gen_social, gen_uniform, load_network, save_network
from .sinr import SinrParams, Station, resolve_round, sinr_ratio

__version__ = "0.1.0"

__all__ = ["Message", "Network", "SimResult", "SinrParams", "Station", "gen_social", "gen_uniform",
           "load_network", "replay_check", "resolve_round", "run", "save_network", "sinr_ratio"]
