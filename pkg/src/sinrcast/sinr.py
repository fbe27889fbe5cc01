"""Reception under the SINR physical model.

All distances are in range units: the transmit power is pinned to
``beta * noise`` so that a lone transmitter is heard at distance exactly 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Mapping

import numpy as np

# absolute slack on the threshold comparison, see received_from
RECEPTION_SLACK = 1e-12


@dataclass(frozen=True)
class SinrParams:
    alpha: float = 2.5
    beta: float = 1.0
    noise: float = 1.0
    eps: float = 0.2

    def __post_init__(self):
        if not self.alpha >= 2:
            raise ValueError(f"path loss alpha must be >= 2, got {self.alpha}")
        # beta < 1 is representable so that resolve_round can refuse it
        if not self.beta > 0:
            raise ValueError(f"threshold beta must be positive, got {self.beta}")
        if not self.noise >= 1:
            raise ValueError(f"noise must be >= 1, got {self.noise}")
        if not 0 < self.eps < 0.5:
            raise ValueError(f"eps must lie in (0, 1/2), got {self.eps}")

    @property
    def power(self) -> float:
        return self.beta * self.noise

    @property
    def range(self) -> float:
        return (self.power / (self.beta * self.noise)) ** (1.0 / self.alpha)

    @property
    def link_length(self) -> float:
        """Maximum length of a communication-graph edge, ``(1 - eps) * r``."""
        return (1.0 - self.eps) * self.range

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "noise": self.noise, "eps": self.eps}


@dataclass(frozen=True)
class Station:
    id: int
    pos: tuple[float, float]

    def distance(self, other: "Station") -> float:
        return math.dist(self.pos, other.pos)


def sinr_ratio(sender: Station, receiver: Station, transmitters: Iterable[Station],
               params: SinrParams) -> float:
    """SINR of ``sender`` at ``receiver`` when ``transmitters`` are on the air."""
    transmitters = list(transmitters)
    tx_ids = {t.id for t in transmitters}
    if sender.id not in tx_ids:
        raise ValueError(f"sender {sender.id} is not transmitting")
    if receiver.id in tx_ids:
        raise ValueError(f"receiver {receiver.id} is transmitting")
    dist = sender.distance(receiver)
    if dist == 0:
        raise ValueError(f"stations {sender.id} and {receiver.id} share a position")

    others = sorted((t.distance(receiver) for t in transmitters if t.id != sender.id),
                    reverse=True)
    interference = 0.0
    for d in others:
        if d == 0:
            raise ValueError(f"a transmitter shares the position of receiver {receiver.id}")
        interference += params.power * d ** -params.alpha
    return params.power * dist ** -params.alpha / (params.noise + interference)


def _ordered_ratio(signal_row: np.ndarray, best: int, params: SinrParams) -> float:
    # interference summed from the farthest transmitter inward
    rest = np.sort(np.delete(signal_row, best))
    return signal_row[best] / (params.noise + rest.sum())


def received_from(tx_pos: np.ndarray, rx_pos: np.ndarray, params: SinrParams) -> np.ndarray:
    """Index into ``tx_pos`` of the transmitter each receiver decodes, or -1.

    A receiver beyond range ``r`` of every transmitter cannot decode. Ratios
    within 1e-9 of the threshold are re-evaluated with interference summed
    from the farthest transmitter inward, so decisions do not depend on the
    order in which transmitters are listed.
    """
    if params.beta < 1:
        raise ValueError("beta < 1 breaks uniqueness of reception")
    tx_pos = np.asarray(tx_pos, dtype=float).reshape(-1, 2)
    rx_pos = np.asarray(rx_pos, dtype=float).reshape(-1, 2)
    out = np.full(len(rx_pos), -1, dtype=np.int64)
    if len(tx_pos) == 0 or len(rx_pos) == 0:
        return out

    dx = rx_pos[:, None, 0] - tx_pos[None, :, 0]
    dy = rx_pos[:, None, 1] - tx_pos[None, :, 1]
    d2 = dx * dx + dy * dy
    if not d2.all():
        raise ValueError("a receiver shares the position of a transmitter")
    best = d2.argmin(axis=1)
    rows = np.flatnonzero(d2[np.arange(len(rx_pos)), best] <= params.range ** 2 * (1 + 1e-9))
    if len(rows) == 0:
        return out
    signal = params.power * d2[rows] ** (-params.alpha / 2)
    best = best[rows]
    top = signal[np.arange(len(rows)), best]
    ratio = top / (params.noise + (signal.sum(axis=1) - top))
    for r in np.flatnonzero(np.abs(ratio - params.beta) <= 1e-9 * params.beta):
        ratio[r] = _ordered_ratio(signal[r], best[r], params)
    hit = ratio >= params.beta - RECEPTION_SLACK
    if len(tx_pos) > 1 and hit.any():
        sig = signal[hit]
        runner_up = np.partition(sig, -2, axis=1)[:, -2]
        assert np.all(runner_up / (params.noise + sig.sum(axis=1) - runner_up)
                      < params.beta - RECEPTION_SLACK), \
            "two transmitters cleared the threshold at one receiver"
    out[rows[hit]] = best[hit]
    return out


def resolve_round(transmitters: Mapping[Station, Any], listeners: Iterable[Station],
                  params: SinrParams) -> dict[Station, tuple[Station, Any] | None]:
    """Map each listener to the ``(sender, message)`` it decodes, or None."""
    listeners = list(listeners)
    senders = list(transmitters)
    clash = {s.id for s in senders} & {l.id for l in listeners}
    if clash:
        raise ValueError(f"stations {sorted(clash)} both transmit and listen")
    got = received_from(np.array([s.pos for s in senders], dtype=float),
                        np.array([l.pos for l in listeners], dtype=float), params)
    result: dict[Station, tuple[Station, Any] | None] = {}
    for listener, idx in zip(listeners, got):
        if idx < 0:
            result[listener] = None
        else:
            s = senders[idx]
            result[listener] = (s, transmitters[s])
    return result


def is_c_successful(sender: Station, c: float,
                    round_outcome: Mapping[Station, tuple[Station, Hashable] | None]) -> bool:
    """True iff every listener within distance ``c`` of ``sender`` decoded it."""
    for listener, got in round_outcome.items():
        if listener.id == sender.id or sender.distance(listener) > c:
            continue
        if got is None or got[0].id != sender.id:
            return False
    return True
