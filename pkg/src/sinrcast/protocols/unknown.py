"""Broadcast without knowledge of local density, via per-box leader election.

Round 0: the source transmits and leads its box. Each of the ``T``
iterations then has two parts.

Part 1, ``d*d`` slots: the leader of every box congruent to the slot's class
modulo ``d`` transmits.

Part 2, for each of the ``dbar*dbar`` classes and each of the 8 octants, one
"for k" loop of ``K + 1`` triples (``K = ceil(log2 n)``). A station ``v`` of a
leaderless box ``V`` in the class picks as helper the lexicographically
smallest box it knows to have a leader in that octant of ``V``'s
neighbourhood. While ``v`` has a helper, no known leader for ``V`` and no
conflict:

* K1: ``v`` transmits with probability ``min(1, 2**k / n)``;
* K2: a leader that heard a candidate naming its box announces it; a K1
  transmitter that hears nothing sets conflict;
* K3: K1 transmitters and the helper transmit; a non-transmitter that does not
  hear its helper sets conflict.

Stations first woken in part 2 join at the start of the next iteration.
Helpers only act for boxes whose stations are running the loop.
"""
from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from ..engine import Message, Protocol
from ..grid import BoxCoord, Grid, Neighborhoods, boxes_of, octant_of
from ..params import P_UNKNOWN, trial_count, unknown_density_dilutions
from ..streams import station_uniform

OCTANTS = 8
_COIN = 3


def unknown_broadcast_defaults(eps: float, alpha: float, N: float, P: float, n: int, D: int,
                               delta: float = 0.1, d: int | None = None,
                               dbar: int | None = None) -> tuple[int, int, int]:
    """``(d, dbar, T)``; explicit ``d``/``dbar`` replace the formula values."""
    if d is None or dbar is None:
        fd, fdbar = unknown_density_dilutions(alpha, N, eps, P, Grid.unknown_density(eps).cell,
                                              max(n, 2))
        d = fd if d is None else d
        dbar = fdbar if dbar is None else dbar
    T = trial_count(D, delta / (4 * (D + 1) ** 3), P_UNKNOWN)
    return int(d), int(dbar), T


def loop_rounds(n: int) -> int:
    """Rounds in one "for k" loop."""
    return 3 * (math.ceil(math.log2(max(n, 2))) + 1)


def iteration_rounds(d: int, dbar: int, n: int) -> int:
    return d * d + OCTANTS * dbar * dbar * loop_rounds(n)


class UnknownBroadcast(Protocol):
    name = "unknown"

    def __init__(self, d: int, dbar: int, T: int, n_bound: int | None = None):
        if d < 1 or dbar < 1 or T < 0:
            raise ValueError("need d, dbar >= 1 and T >= 0")
        self.d, self.dbar, self.T = int(d), int(dbar), int(T)
        self.n_bound = n_bound

    # -- setup ---------------------------------------------------------------

    def start(self, net, seed):
        super().start(net, seed)
        n = net.n
        self.nb_stations = self.n_bound or n
        self.K = math.ceil(math.log2(max(self.nb_stations, 2)))
        self.grid = Grid.unknown_density(net.params.eps)
        boxes = net.cached(("boxes", self.grid.cell), lambda: boxes_of(net.pos, self.grid))
        self.box = [BoxCoord(int(i), int(j)) for i, j in boxes]
        self.nbhd = net.cached(("neighborhoods", self.grid.cell),
                               lambda: Neighborhoods(boxes, net.edges, self.grid, net.params.eps))
        self.class1 = (boxes[:, 0] % self.d) * self.d + boxes[:, 1] % self.d
        self.class2 = (boxes[:, 0] % self.dbar) * self.dbar + boxes[:, 1] % self.dbar
        self.by_class2 = defaultdict(list)
        for v, c in enumerate(self.class2):
            self.by_class2[int(c)].append(v)
        self.index = {int(i): v for v, i in enumerate(net.ids)}

        self.L1 = self.d * self.d
        self.block_len = 3 * (self.K + 1)
        self.L = self.L1 + OCTANTS * self.dbar * self.dbar * self.block_len
        self.end = 1 + self.T * self.L

        self.activated = np.zeros(n, dtype=bool)
        self.pending = np.zeros(n, dtype=bool)
        self.leader = np.zeros(n, dtype=bool)
        self.conflict = np.zeros(n, dtype=bool)
        self.known: list[dict] = [dict() for _ in range(n)]
        self.announced = defaultdict(set)
        self.elections: list[tuple] = []
        self.k1_last: dict = {}
        self.loops = 0
        s = net.source
        self.activated[s] = True
        self._make_leader(s)

        self._iteration = 0
        self._block = None
        self._participants: list[int] = []
        self._helper_box: dict[int, BoxCoord] = {}
        self._guard_round = -1
        self._guard: list[int] = []
        self._k1: list[int] = []
        self._announce: dict[int, tuple[int, BoxCoord]] = {}
        self._adj_cache: dict = {}

    def _make_leader(self, v):
        self.leader[v] = True
        self.known[v][self.box[v]] = int(self.net.ids[v])
        self.announced[self.box[v]].add(int(self.net.ids[v]))

    # -- schedule ------------------------------------------------------------

    def _locate(self, rnd):
        it, off = divmod(rnd - 1, self.L)
        if off < self.L1:
            return it + 1, 1, off, None
        q = off - self.L1
        block, within = divmod(q, self.block_len)
        return it + 1, 2, block, within

    def _begin_iteration(self, it):
        self._iteration = it
        self.activated |= self.pending
        self.pending[:] = False

    def _octant_adjacent(self, v_box, b):
        key = (v_box, b)
        hit = self._adj_cache.get(key)
        if hit is None:
            if b == v_box or not self.nbhd.adjacent(v_box, b):
                hit = -1
            else:
                hit = octant_of(v_box, b)
            self._adj_cache[key] = hit
        return hit

    def _begin_block(self, it, block):
        self._block = (it, block)
        cls, octant = divmod(block, OCTANTS)
        members = self.by_class2.get(cls, ())
        self._participants = []
        self._helper_box = {}
        self.conflict[list(members)] = False
        for v in members:
            if not self.activated[v] or self.leader[v] or self.box[v] in self.known[v]:
                continue
            cands = [b for b in self.known[v] if self._octant_adjacent(self.box[v], b) == octant]
            if cands:
                self._participants.append(v)
                self._helper_box[v] = min(cands)
        if self._participants:
            self.loops += len({self.box[v] for v in self._participants})

    def _guard_now(self, v):
        return (not self.conflict[v] and not self.leader[v]
                and self.box[v] not in self.known[v])

    def next_round(self, rnd):
        if rnd == 0:
            return 0
        r = rnd
        while r < self.end:
            it, part, pos, within = self._locate(r)
            if it != self._iteration:
                self._begin_iteration(it)
            it_start = 1 + (it - 1) * self.L
            if part == 1:
                busy = np.zeros(self.L1, dtype=bool)
                busy[self.class1[self.leader]] = True
                ahead = np.flatnonzero(busy[pos:])
                if len(ahead):
                    return r + int(ahead[0])
                r = it_start + self.L1
                continue
            if self._block != (it, pos):
                self._begin_block(it, pos)
            block_start = it_start + self.L1 + pos * self.block_len
            phase = within % 3
            if phase == 0:
                if self._guard_round != r:
                    self._guard_round = r
                    self._guard = [v for v in self._participants if self._guard_now(v)]
                    self._k1 = []
                    self._announce = {}
                if not self._guard:
                    r = block_start + self.block_len
                    continue
                return r
            if phase == 1 and not self._k1:
                r += 1
                continue
            return r
        return max(rnd, self.end)

    # -- rounds --------------------------------------------------------------

    def _msg(self, kind, v, rnd, **kw):
        return Message(kind, int(self.net.ids[v]), rnd, **kw)

    def transmit(self, rnd):
        if rnd == 0:
            s = self.net.source
            return {s: self._msg("leader", s, 0, box=tuple(self.box[s]))}
        if rnd >= self.end:
            return {}
        it, part, pos, within = self._locate(rnd)
        if part == 1:
            who = np.flatnonzero(self.leader & (self.class1 == pos))
            return {int(v): self._msg("leader", v, rnd, box=tuple(self.box[v])) for v in who}
        k, phase = divmod(within, 3)
        if phase == 0:
            guard = np.array(self._guard, dtype=np.int64)
            p = min(1.0, 2.0 ** k / self.nb_stations)
            coin = station_uniform(self.seed, self.net.ids[guard], rnd, _COIN)
            self._k1 = [int(v) for v in guard[coin < p]]
            counts = defaultdict(int)
            for v in self._k1:
                counts[self.box[v]] += 1
            for b in {self.box[v] for v in self._guard}:
                self.k1_last[(self._block, b)] = counts[b]
            return {v: self._msg("candidate", v, rnd, box=tuple(self.box[v]),
                                 helper=tuple(self._helper_box[v])) for v in self._k1}
        if phase == 1:
            return {u: self._msg("announce", u, rnd, leader=lead, box=tuple(vb),
                                 helper=tuple(self.box[u]))
                    for u, (lead, vb) in self._announce.items()}
        out = {v: self._msg("jam", v, rnd) for v in self._k1}
        helpers = set(self._announce)
        for v in self._guard:
            lead = self.known[v].get(self._helper_box[v])
            if lead is not None:
                helpers.add(self.index[lead])
        for u in helpers:
            if self.informed[u] and u not in out:
                out[u] = self._msg("helper", u, rnd, box=tuple(self.box[u]))
        return out

    def receive(self, rnd, heard):
        newly = [v for v in heard if not self.informed[v]]
        super().receive(rnd, heard)
        if rnd == 0:
            self.activated[newly] = True
        else:
            it, part, pos, within = self._locate(rnd)
            if part == 1:
                self.activated[newly] = True
            else:
                self.pending[newly] = True

        for v, (s, msg) in heard.items():
            self._learn(v, s, msg)

        if rnd == 0:
            return
        it, part, pos, within = self._locate(rnd)
        if part == 1:
            return
        phase = within % 3
        if phase == 0:
            for u, (s, msg) in heard.items():
                if msg.kind != "candidate" or not self.leader[u] or tuple(self.box[u]) != msg.helper:
                    continue
                vb = BoxCoord(*msg.box)
                # a helper that already named a leader for the box sticks to it
                self._announce[u] = (self.known[u].get(vb, msg.sender), vb)
        elif phase == 1:
            for v in self._k1:
                if v not in heard:
                    self.conflict[v] = True
        else:
            k1 = set(self._k1)
            for v in self._guard:
                if v in k1:
                    continue
                got = heard.get(v)
                lead = self.known[v].get(self._helper_box[v])
                if got is None or lead is None or int(self.net.ids[got[0]]) != lead:
                    self.conflict[v] = True

    def _learn(self, v, s, msg):
        known = self.known[v]
        if msg.kind in ("leader", "helper"):
            known.setdefault(BoxCoord(*msg.box), msg.sender)
        elif msg.kind == "announce":
            known.setdefault(BoxCoord(*msg.helper), msg.sender)
            vb = BoxCoord(*msg.box)
            known.setdefault(vb, msg.leader)
            self.announced[vb].add(msg.leader)
            if msg.leader == int(self.net.ids[v]) and vb == self.box[v] and not self.leader[v]:
                self._make_leader(v)
                self.elections.append((self._block, vb, msg.leader, msg.round))

    def done(self, elapsed):
        if elapsed >= self.end:
            return np.ones(self.net.n, dtype=bool)
        return np.zeros(self.net.n, dtype=bool)

    def leader_conflicts(self) -> dict:
        """Boxes for which more than one leader was ever named."""
        return {b: ids for b, ids in self.announced.items() if len(ids) > 1}

    def metadata(self):
        return {"protocol": self.name, "d": self.d, "dbar": self.dbar, "T": self.T,
                "leaders": int(self.leader.sum()), "leader_conflicts": len(self.leader_conflicts())}
