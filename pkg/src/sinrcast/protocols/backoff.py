"""Exponential backoff baseline with density-limited windows.

A station informed in round ``t`` opens window 0 in round ``t + 1``. Window
``w`` lasts ``2**w`` rounds and the station transmits in one uniformly chosen
round of it. After window ``ceil(log2 Delta)`` closes without an
acknowledgment the station stops for good. An acknowledgment is any message
from a station it has never heard before; it restarts the sequence at
window 0 in the next round.

``Delta`` defaults to the size of the station's closed neighbourhood in the
communication graph, the number of stations that may contend with it.
"""
from __future__ import annotations

import math

import numpy as np

from ..engine import Message, Protocol
from ..streams import station_uniform

_SLOT = 2


def window_limit(delta: int) -> int:
    """Largest window exponent for local density ``delta``."""
    return max(0, math.ceil(math.log2(delta))) if delta > 1 else 0


class Backoff(Protocol):
    name = "backoff"

    def __init__(self, delta=None):
        self._delta_override = delta

    def start(self, net, seed):
        super().start(net, seed)
        if self._delta_override is None:
            delta = np.array([len(nb) + 1 for nb in net.neighbors], dtype=np.int64)
        else:
            delta = np.asarray(self._delta_override, dtype=np.int64)
        if len(delta) != net.n or np.any(delta < 1):
            raise ValueError("need one density of at least 1 per station")
        self.delta = delta
        self.wmax = np.array([window_limit(int(x)) for x in delta], dtype=np.int64)
        n = net.n
        self.active = np.zeros(n, dtype=bool)
        self.finished = np.zeros(n, dtype=bool)
        self.w = np.zeros(n, dtype=np.int64)
        self.start_round = np.zeros(n, dtype=np.int64)
        self.slot = np.zeros(n, dtype=np.int64)
        self.heard_from = [set() for _ in range(n)]
        self.windows = [[] for _ in range(n)]
        self._open(np.array([net.source]), 0, 0)

    def _open(self, who, w, at):
        """Open window ``w`` at round ``at`` for stations ``who``."""
        if len(who) == 0:
            return
        self.active[who] = True
        self.w[who] = w
        self.start_round[who] = at
        size = 2 ** self.w[who]
        u = station_uniform(self.seed, self.net.ids[who], at, _SLOT)
        self.slot[who] = np.minimum((u * size).astype(np.int64), size - 1)
        for v, wv in zip(who, self.w[who]):
            self.windows[v].append(int(2 ** wv))

    def transmit(self, rnd):
        live = self.active & ~self.finished
        fire = np.flatnonzero(live & (self.start_round + self.slot == rnd))
        ids = self.net.ids
        return {int(v): Message("data", int(ids[v]), rnd) for v in fire}

    def receive(self, rnd, heard):
        newly = [v for v in heard if not self.informed[v]]
        super().receive(rnd, heard)
        acked = []
        for v, (s, _) in heard.items():
            sid = int(self.net.ids[s])
            if sid not in self.heard_from[v]:
                self.heard_from[v].add(sid)
                if self.active[v] and not self.finished[v]:
                    acked.append(v)
        restart = np.array(sorted(set(acked) | set(newly)), dtype=np.int64)
        # windows closing this round, except at stations being restarted anyway
        live = self.active & ~self.finished
        closing = live & (self.start_round + 2 ** self.w - 1 == rnd)
        closing[restart] = False
        closing = np.flatnonzero(closing)
        over = closing[self.w[closing] + 1 > self.wmax[closing]]
        self.finished[over] = True
        grow = closing[self.w[closing] + 1 <= self.wmax[closing]]
        old = self.w[grow]
        for w in np.unique(old):
            self._open(grow[old == w], int(w) + 1, rnd + 1)
        self._open(restart, 0, rnd + 1)

    def done(self, elapsed):
        return self.finished.copy()

    def metadata(self):
        return {"protocol": self.name}

