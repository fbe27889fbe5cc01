"""Known-density randomized broadcast.

Round 0 belongs to the source. After it come ``T`` iterations of ``d*d``
slots; slot ``(a, b)`` (row-major) lets every informed station whose box is
congruent to ``(a, b)`` modulo ``d`` transmit with probability ``1/Delta``,
``Delta`` being the number of stations in its box. Stations woken mid-iteration
join at the next slot; the round counter travels with every message.
"""
from __future__ import annotations

import numpy as np

from ..engine import Message, Protocol
from ..grid import Grid, boxes_of
from ..network import Network, eccentricity
from ..params import DilutionSpec, P_KNOWN, dilution_d, trial_count
from ..streams import station_uniform

_COIN = 1


def box_counts(net: Network, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Boxes of every station and the number of stations sharing each one's box."""
    boxes = boxes_of(net.pos, grid)
    _, inverse, counts = np.unique(boxes, axis=0, return_inverse=True, return_counts=True)
    return boxes, counts[inverse.reshape(-1)]


def rand_broadcast_defaults(net: Network, eps: float | None = None, alpha: float | None = None,
                            N: float | None = None, P: float | None = None,
                            target_delta_fail: float = 0.05, d: int | None = None,
                            D: int | None = None) -> tuple[int, int]:
    """``(d, T)`` giving success probability ``1 - target_delta_fail``.

    ``d`` defaults to the dilution for budget ``N alpha eps / 4``; pass ``d`` to
    override it as the experiments do.
    """
    prm = net.params
    eps = prm.eps if eps is None else eps
    alpha = prm.alpha if alpha is None else alpha
    N = prm.noise if N is None else N
    P = prm.power if P is None else P
    if d is None:
        d = dilution_d(DilutionSpec(alpha, P, Grid.known_density(eps).cell,
                                    N * alpha * eps / 4, max(net.n, 2)))
    D = eccentricity(net) if D is None else D
    per_box = target_delta_fail / (4 * (D + 1) ** 3)
    return d, trial_count(D, per_box, P_KNOWN)


class RandBroadcast(Protocol):
    name = "rand"

    def __init__(self, d: int, T: int, delta=None):
        if d < 1 or T < 0:
            raise ValueError("need d >= 1 and T >= 0")
        self.d = int(d)
        self.T = int(T)
        self._delta_override = delta

    def start(self, net, seed):
        super().start(net, seed)
        grid = Grid.known_density(net.params.eps)
        boxes, counts = net.cached(("box-counts", grid.cell), lambda: box_counts(net, grid))
        self.delta = counts if self._delta_override is None else \
            np.asarray(self._delta_override, dtype=np.int64)
        if np.any(self.delta < 1):
            raise ValueError("every station needs a box count of at least 1")
        self.klass = (boxes[:, 0] % self.d) * self.d + boxes[:, 1] % self.d
        self.per_iteration = self.d * self.d
        self.end = 1 + self.T * self.per_iteration
        self._present = np.zeros(self.per_iteration, dtype=bool)
        self._present[self.klass[net.source]] = True

    def _slot(self, rnd):
        return (rnd - 1) % self.per_iteration

    def next_round(self, rnd):
        if rnd == 0:
            return 0
        if rnd >= self.end:
            return rnd
        # skip slots whose dilution class holds no informed station yet
        s = self._slot(rnd)
        ahead = np.flatnonzero(np.roll(self._present, -s))
        nxt = rnd + int(ahead[0])
        return min(nxt, self.end)

    def transmit(self, rnd):
        ids = self.net.ids
        if rnd == 0:
            s = self.net.source
            return {s: Message("data", int(ids[s]), 0)}
        if rnd >= self.end:
            return {}
        eligible = np.flatnonzero(self.informed & (self.klass == self._slot(rnd)))
        if len(eligible) == 0:
            return {}
        coin = station_uniform(self.seed, ids[eligible], rnd, _COIN)
        fire = eligible[coin < 1.0 / self.delta[eligible]]
        return {int(v): Message("data", int(ids[v]), rnd) for v in fire}

    def receive(self, rnd, heard):
        super().receive(rnd, heard)
        if heard:
            self._present[self.klass[list(heard)]] = True

    def done(self, elapsed):
        if elapsed >= self.end:
            return np.ones(self.net.n, dtype=bool)
        return np.zeros(self.net.n, dtype=bool)

    def metadata(self):
        return {"protocol": self.name, "d": self.d, "T": self.T}
