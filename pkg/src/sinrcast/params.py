"""Closed-form protocol parameters and the bounds they rest on."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

#: success rate per iteration guaranteed for the known-density protocol
P_KNOWN = 1 / (2 * math.e)
#: election success rate per "for k" loop of the unknown-density protocol
P_UNKNOWN = 1 / 18
#: upper limit on the Bernoulli success rate accepted by trial_count
P_LIMIT = 1 - math.log(2)


@dataclass(frozen=True)
class DilutionSpec:
    alpha: float
    power: float
    gamma: float
    budget: float
    n: int

    def __post_init__(self):
        if self.alpha < 2:
            raise ValueError(f"alpha must be >= 2, got {self.alpha}")
        if self.budget <= 0:
            raise ValueError(f"interference budget must be positive, got {self.budget}")
        if self.power <= 0 or self.gamma <= 0 or self.n < 1:
            raise ValueError("power, gamma and n must be positive")


def s_alpha(alpha: float, n: int) -> float:
    """Series constant of the interference bound.

    For ``alpha == 2`` the second candidate of the minimum is infinite, so the
    logarithmic branch is taken.
    """
    if alpha < 2:
        raise ValueError(f"alpha must be >= 2, got {alpha}")
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    log_term = math.log(n) / 2 + math.log(2)
    flat_term = math.inf if alpha == 2 else 1 / (2 ** (alpha - 2) * (alpha - 2))
    return min(log_term, flat_term) + 1 / (2 ** alpha * (alpha - 1))


def dilution_d(spec: DilutionSpec) -> int:
    x = (8 * spec.power * s_alpha(spec.alpha, spec.n) / spec.budget) ** (1 / spec.alpha)
    return math.ceil(x / spec.gamma)


def _rings(n: int) -> int:
    return math.ceil(math.sqrt(n) / 4)


def interference_series_bound(alpha: float, P: float, d: int, gamma: float, n: int) -> float:
    """Closed-form bound ``8P s_alpha / (d gamma)^alpha`` on the diluted interference."""
    t = d * gamma
    if t <= 2:
        raise ValueError(f"d * gamma must exceed 2, got {t}")
    return 8 * P / t ** alpha * s_alpha(alpha, n)


def interference_ring_sum(alpha: float, P: float, d: int, gamma: float, n: int) -> float:
    """Ring-by-ring sum ``sum_k 8kP / (k d gamma - 1)^alpha`` over ``k <= ceil(sqrt(n)/4)``."""
    t = d * gamma
    if t <= 2:
        raise ValueError(f"d * gamma must exceed 2, got {t}")
    k = np.arange(1, _rings(n) + 1, dtype=float)
    return float(np.sum(8 * k * P / (k * t - 1) ** alpha))


def interference_shifted_sum(alpha: float, P: float, d: int, gamma: float, n: int) -> float:
    """The ring sum with ``k t - 1`` relaxed to ``(k - 1/2) t``."""
    t = d * gamma
    if t <= 2:
        raise ValueError(f"d * gamma must exceed 2, got {t}")
    k = np.arange(1, _rings(n) + 1, dtype=float)
    return float(np.sum(8 * k * P / ((k - 0.5) * t) ** alpha))


def trial_count(D: int, delta: float, p: float) -> int:
    """Trials after which fewer than ``D + 1`` successes has probability below ``(D+1) delta``."""
    if not 0 < p < P_LIMIT:
        raise ValueError(f"success rate must lie in (0, 1 - ln 2), got {p}")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return math.ceil(2 * D / p + 2 * math.log(1 / delta) / p)


def net_size_bound(D: int) -> int:
    if D < 0:
        raise ValueError(f"eccentricity must be >= 0, got {D}")
    return 4 * (D + 1) ** 2


def greedy_net(network, radius: float) -> list[int]:
    """Indices of a maximal set of stations pairwise at least ``radius`` apart.

    Stations are scanned in index order. Every station ends up within
    ``radius`` of some member.
    """
    pos = network.pos
    tree = cKDTree(pos)
    covered = np.zeros(len(pos), dtype=bool)
    chosen = []
    for i in range(len(pos)):
        if covered[i]:
            continue
        chosen.append(i)
        near = tree.query_ball_point(pos[i], radius)
        near = [j for j in near if math.dist(pos[i], pos[j]) < radius]
        covered[near] = True
        covered[i] = True
    return chosen


def unknown_density_dilutions(alpha: float, N: float, eps: float, P: float,
                              gamma: float, n: int) -> tuple[int, int]:
    """``(d, d_bar)`` for the unknown-density protocol."""
    d = dilution_d(DilutionSpec(alpha, P, gamma, N * alpha * eps / 2, n))
    cells = math.floor(1 / gamma)
    coarse = dilution_d(DilutionSpec(alpha, P, gamma * cells, N * alpha * eps / 28, n))
    return d, cells * coarse
