"""Synchronous round loop, traces, and trace replay.

Rounds are numbered from 0. Times reported in :class:`SimResult` count
elapsed rounds: a broadcast finished by the transmission in round ``t``
completes at time ``t + 1``, and a one-station network completes at 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .network import Network
from .sinr import RECEPTION_SLACK, SinrParams, received_from


@dataclass(frozen=True)
class Message:
    """Header carried next to the broadcast payload, which every message includes."""
    kind: str
    sender: int
    round: int
    leader: Optional[int] = None
    box: Optional[tuple] = None
    helper: Optional[tuple] = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "sender": self.sender, "round": self.round}
        if self.leader is not None:
            out["leader"] = self.leader
        if self.box is not None:
            out["box"] = list(self.box)
        if self.helper is not None:
            out["helper"] = list(self.helper)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Message":
        return cls(doc["kind"], int(doc["sender"]), int(doc["round"]), doc.get("leader"),
                   tuple(doc["box"]) if "box" in doc else None,
                   tuple(doc["helper"]) if "helper" in doc else None)


class Protocol:
    """Network-wide view of a per-station protocol.

    Subclasses keep one state slot per station and only ever let a station
    act on what it has itself received. The engine calls, for each round it
    executes, :meth:`transmit` and then :meth:`receive`.
    """

    name = "protocol"

    def start(self, net: Network, seed: int) -> None:
        self.net = net
        self.seed = seed
        self.informed = np.zeros(net.n, dtype=bool)
        self.informed[net.source] = True

    def next_round(self, rnd: int) -> int:
        """Earliest round ``>= rnd`` in which something can happen.

        Returning a later round lets the engine skip silent rounds; it then
        consults :meth:`done` again at the returned round.
        """
        return rnd

    def transmit(self, rnd: int) -> dict[int, Message]:
        """Station index -> message for every station transmitting in ``rnd``."""
        raise NotImplementedError

    def receive(self, rnd: int, heard: dict[int, tuple[int, Message]]) -> None:
        """Deliveries of round ``rnd``; listeners absent from ``heard`` got nothing."""
        self.informed[list(heard)] = True

    def done(self, elapsed: int) -> np.ndarray:
        """Per-station flag: finished with the protocol after ``elapsed`` rounds."""
        return np.zeros(self.net.n, dtype=bool)

    def metadata(self) -> dict:
        return {"protocol": self.name}


class SilentProtocol(Protocol):
    name = "silent"

    def next_round(self, rnd):
        return math.inf

    def transmit(self, rnd):
        return {}


class SourceRepeats(Protocol):
    """The source transmits every round and nobody else ever does."""

    name = "source-repeats"

    def transmit(self, rnd):
        s = self.net.source
        return {s: Message("data", int(self.net.ids[s]), rnd)}


@dataclass(frozen=True)
class RoundRecord:
    round: int
    transmitters: tuple
    deliveries: tuple
    messages: tuple = ()

    def to_json(self) -> dict:
        return {"round": self.round,
                "transmitters": list(self.transmitters),
                "deliveries": [list(p) for p in self.deliveries],
                "messages": [m.to_json() for m in self.messages]}

    @classmethod
    def from_json(cls, doc: dict) -> "RoundRecord":
        return cls(int(doc["round"]), tuple(doc["transmitters"]),
                   tuple(tuple(p) for p in doc["deliveries"]),
                   tuple(Message.from_json(m) for m in doc.get("messages", ())))


@dataclass
class SimResult:
    complete: bool
    completion_round: Optional[int]
    done_round: Optional[int]
    rounds: int
    informed: int
    n: int
    trace: Optional[list] = None
    metadata: dict = field(default_factory=dict)


def run(net: Network, protocol: Protocol, seed: int, max_rounds: int, *,
        trace: bool = False, stop_when_informed: bool = False) -> SimResult:
    """Drive ``protocol`` on ``net`` until everyone is done or ``max_rounds`` elapse.

    Without collision detection a listener that decodes nothing is simply
    left out of the deliveries handed to the protocol.
    """
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds}")
    n = net.n
    informed = np.zeros(n, dtype=bool)
    informed[net.source] = True
    protocol.start(net, seed)
    records = [] if trace else None
    completion = 0 if n == 1 else None
    done_at = None
    elapsed = 0
    ids = net.ids

    while elapsed < max_rounds:
        finished = protocol.done(elapsed)
        if (finished | ~informed).all():
            if informed.all():
                done_at = elapsed
            break
        if completion is not None and stop_when_informed:
            break
        rnd = protocol.next_round(elapsed)
        if rnd > elapsed:
            # idle rounds: nobody transmits, so only the clock moves
            elapsed = min(rnd, max_rounds)
            continue
        out = protocol.transmit(rnd)
        tx = np.fromiter(out, dtype=np.int64, count=len(out))
        if len(tx) and not informed[tx].all():
            raise RuntimeError(f"round {rnd}: uninformed station transmitted")
        is_tx = np.zeros(n, dtype=bool)
        is_tx[tx] = True
        listeners = np.flatnonzero(~is_tx)
        got = received_from(net.pos[tx], net.pos[listeners], net.params)
        hit = got >= 0
        heard = {int(l): (int(tx[g]), out[int(tx[g])]) for l, g in zip(listeners[hit], got[hit])}
        informed[listeners[hit]] = True
        protocol.receive(rnd, heard)
        if records is not None:
            records.append(RoundRecord(
                rnd, tuple(int(ids[t]) for t in tx),
                tuple((int(ids[l]), int(ids[s])) for l, (s, _) in heard.items()),
                tuple(out[int(t)] for t in tx)))
        elapsed = rnd + 1
        if completion is None and informed.all():
            completion = elapsed

    return SimResult(completion is not None, completion, done_at, elapsed, int(informed.sum()), n,
                     records, protocol.metadata())


def replay_check(trace, net: Network, params: Optional[SinrParams] = None) -> bool:
    """Recompute every recorded round with a plain re-evaluation of the SINR
    ratio for each (transmitter, listener) pair; True iff all deliveries agree."""
    params = params or net.params
    where = {int(i): (float(x), float(y)) for i, (x, y) in zip(net.ids, net.pos)}
    for rec in trace:
        senders = list(rec.transmitters)
        expected = {}
        for listener, (lx, ly) in where.items():
            if listener in senders:
                continue
            powers = []
            for s in senders:
                sx, sy = where[s]
                powers.append(params.power * math.hypot(lx - sx, ly - sy) ** -params.alpha)
            total = math.fsum(powers)
            for s, p in zip(senders, powers):
                if p / (params.noise + (total - p)) >= params.beta - RECEPTION_SLACK:
                    expected[listener] = s
        if expected != dict(rec.deliveries):
            return False
    return True


def save_trace(records, path) -> None:
    with open(path, "w", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def load_trace(path) -> list:
    return [RoundRecord.from_json(json.loads(line))
            for line in Path(path).read_text().splitlines() if line.strip()]
