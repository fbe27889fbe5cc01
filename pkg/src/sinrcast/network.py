"""Network instances: generators, communication graph, and the JSON file format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial import cKDTree

from .sinr import SinrParams, Station

FORMAT_VERSION = 1
MIN_SEPARATION = 1e-9
DEFAULT_RETRIES = 1000
SOCIAL_REACH = 2.0


class GenerationError(RuntimeError):
    pass


class NetworkFormatError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkStats:
    n: int
    D: int
    g: float
    retries: int = 0


@dataclass(eq=False)
class Network:
    ids: np.ndarray
    pos: np.ndarray
    params: SinrParams
    side: float
    source: int = 0
    retries: int = 0
    edges: np.ndarray = field(init=False, repr=False)
    neighbors: list = field(init=False, repr=False)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        self.pos = np.asarray(self.pos, dtype=float).reshape(-1, 2)
        if len(self.ids) != len(self.pos):
            raise ValueError("ids and positions differ in length")
        if len(np.unique(self.ids)) != len(self.ids):
            raise ValueError("station ids must be unique")
        if np.any(self.ids < 1):
            raise ValueError("station ids must be positive")
        if not 0 <= self.source < len(self.ids):
            raise ValueError(f"source index {self.source} out of range")
        self.edges = communication_edges(self.pos, self.params.link_length)
        self.neighbors = [[] for _ in range(self.n)]
        for a, b in self.edges:
            self.neighbors[a].append(int(b))
            self.neighbors[b].append(int(a))
        self.neighbors = [np.array(sorted(nb), dtype=np.int64) for nb in self.neighbors]
        self._cache = {}

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def source_id(self) -> int:
        return int(self.ids[self.source])

    def index_of(self, station_id: int) -> int:
        hits = np.flatnonzero(self.ids == station_id)
        if len(hits) == 0:
            raise KeyError(f"no station with id {station_id}")
        return int(hits[0])

    def station(self, i: int) -> Station:
        return Station(int(self.ids[i]), (float(self.pos[i, 0]), float(self.pos[i, 1])))

    def stations(self) -> list[Station]:
        return [self.station(i) for i in range(self.n)]

    def adjacency(self):
        m = len(self.edges)
        a = coo_matrix((np.ones(m), (self.edges[:, 0], self.edges[:, 1])) if m else
                       (np.zeros(0), (np.zeros(0, int), np.zeros(0, int))), shape=(self.n, self.n))
        return (a + a.T).tocsr()

    def is_connected(self) -> bool:
        return self.n <= 1 or connected_components(self.adjacency(), directed=False)[0] == 1

    def hops(self) -> np.ndarray:
        """Hop distance of every station from the source (inf when unreachable)."""
        return shortest_path(self.adjacency(), unweighted=True, indices=self.source)

    def stats(self) -> NetworkStats:
        return NetworkStats(self.n, eccentricity(self), granularity(self) if self.n > 1 else math.inf,
                            self.retries)

    def cached(self, key, build):
        """Per-instance memo for derived structures protocols share across runs."""
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (np.array_equal(self.ids, other.ids) and np.array_equal(self.pos, other.pos)
                and self.params == other.params and self.side == other.side
                and self.source == other.source)

    __hash__ = None


def communication_edges(pos: np.ndarray, length: float) -> np.ndarray:
    """Pairs ``(a, b)``, ``a < b``, at distance at most ``length``, sorted."""
    if len(pos) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    pairs = cKDTree(pos).query_pairs(length + 1e-9, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    d = np.hypot(*(pos[pairs[:, 0]] - pos[pairs[:, 1]]).T)
    pairs = pairs[d <= length]
    pairs = np.sort(pairs, axis=1)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order].astype(np.int64)


def eccentricity(net: Network) -> int:
    h = net.hops()
    if not np.all(np.isfinite(h)):
        raise ValueError("communication graph is disconnected")
    return int(h.max())


def granularity(net: Network) -> float:
    if net.n < 2:
        raise ValueError("granularity needs at least two stations")
    d, _ = cKDTree(net.pos).query(net.pos, k=2)
    return net.params.range / float(d[:, 1].min())


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    # positions and every other decision draw from separate streams, so that
    # a social network with p_pref = 0 reproduces the uniform one exactly
    pos_seq, aux_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(pos_seq), np.random.default_rng(aux_seq)


def _separate(pos: np.ndarray, side: float, rng: np.random.Generator) -> np.ndarray:
    while True:
        pairs = cKDTree(pos).query_pairs(MIN_SEPARATION, output_type="ndarray")
        if len(pairs) == 0:
            return pos
        redo = np.unique(pairs.max(axis=1))
        pos[redo] = rng.uniform(0, side, (len(redo), 2))


def _finish(pos, side, params, aux, source_id, random_ids, retries) -> Network:
    n = len(pos)
    if random_ids:
        ids = np.sort(aux.choice(n ** 3, size=n, replace=False)) + 1
        ids = aux.permutation(ids)
    else:
        ids = np.arange(1, n + 1)
    if source_id is None:
        source = int(np.argmin(np.hypot(*(pos - side / 2).T)))
    else:
        hits = np.flatnonzero(ids == source_id)
        if len(hits) == 0:
            raise ValueError(f"no station with id {source_id}")
        source = int(hits[0])
    return Network(ids, pos, params, float(side), source, retries)


def _check(n, side):
    if n < 2:
        raise ValueError(f"need at least two stations, got {n}")
    if not side > 0:
        raise ValueError(f"side must be positive, got {side}")


def gen_uniform(n: int, side: float, params: SinrParams, seed: int, *,
                max_retries: int = DEFAULT_RETRIES, source_id: int | None = None,
                random_ids: bool = False) -> Network:
    """Stations i.i.d. uniform on the square; whole instances are redrawn until connected."""
    _check(n, side)
    rng, aux = _streams(seed)
    for attempt in range(max_retries):
        pos = _separate(rng.uniform(0, side, (n, 2)), side, rng)
        if _connected(pos, params.link_length):
            return _finish(pos, side, params, aux, source_id, random_ids, attempt)
    raise GenerationError(f"no connected instance in {max_retries} attempts "
                          f"(failure rate 100% for n={n}, side={side})")


def _connected(pos, length) -> bool:
    edges = communication_edges(pos, length)
    n = len(pos)
    m = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(m, directed=False)[0] == 1


def gen_social(n: int, side: float, params: SinrParams, p_pref: float, seed: int, *,
               max_retries: int = DEFAULT_RETRIES, source_id: int | None = None,
               random_ids: bool = False) -> Network:
    """Clustered networks grown one station at a time.

    The square is cut into ``eps x eps`` boxes. Each box is weighted by the
    number of stations within distance 2 of it. A new station lands in a box
    drawn proportionally to weight with probability ``p_pref`` and uniformly on
    the square otherwise; with all weights zero it always lands uniformly.
    """
    _check(n, side)
    if not 0 <= p_pref <= 1:
        raise ValueError(f"p_pref must lie in [0, 1], got {p_pref}")
    rng, aux = _streams(seed)
    cell = params.eps
    per_side = max(1, math.ceil(side / cell - 1e-9))
    ii, jj = np.meshgrid(np.arange(per_side), np.arange(per_side), indexing="ij")
    lo_x, lo_y = ii.ravel() * cell, jj.ravel() * cell
    hi_x, hi_y = np.minimum(lo_x + cell, side), np.minimum(lo_y + cell, side)

    for attempt in range(max_retries):
        weights = np.zeros(per_side * per_side)
        pos = np.empty((n, 2))
        for k in range(n):
            preferred = aux.random() < p_pref and weights.sum() > 0
            while True:
                if preferred:
                    b = aux.choice(len(weights), p=weights / weights.sum())
                    p = (rng.uniform(lo_x[b], hi_x[b]), rng.uniform(lo_y[b], hi_y[b]))
                else:
                    p = tuple(rng.uniform(0, side, 2))
                if k == 0 or np.hypot(*(pos[:k] - p).T).min() >= MIN_SEPARATION:
                    break
            pos[k] = p
            gap_x = np.maximum.reduce([lo_x - p[0], np.zeros_like(lo_x), p[0] - hi_x])
            gap_y = np.maximum.reduce([lo_y - p[1], np.zeros_like(lo_y), p[1] - hi_y])
            weights += np.hypot(gap_x, gap_y) <= SOCIAL_REACH
        if _connected(pos, params.link_length):
            return _finish(pos, side, params, aux, source_id, random_ids, attempt)
    raise GenerationError(f"no connected instance in {max_retries} attempts "
                          f"(failure rate 100% for n={n}, side={side})")


def network_from_points(points, params: SinrParams, side: float | None = None,
                        source: int = 0, ids=None) -> Network:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if ids is None:
        ids = np.arange(1, len(pts) + 1)
    if side is None:
        side = float(np.ptp(pts, axis=0).max()) if len(pts) > 1 else 0.0
    return Network(ids, pts, params, side, source)


def to_document(net: Network) -> dict:
    return {
        "version": FORMAT_VERSION,
        "sinr_params": net.params.to_dict(),
        "side": net.side,
        "source_id": net.source_id,
        "stations": [{"id": int(i), "x": float(x), "y": float(y)}
                     for i, (x, y) in zip(net.ids, net.pos)],
    }


def from_document(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise NetworkFormatError("network document must be a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported network format version {doc.get('version')!r}")
    try:
        params = SinrParams(**{k: float(doc["sinr_params"][k])
                               for k in ("alpha", "beta", "noise", "eps")})
        stations = doc["stations"]
        ids = [int(s["id"]) for s in stations]
        pos = [(float(s["x"]), float(s["y"])) for s in stations]
        side = float(doc["side"])
        source_id = int(doc["source_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkFormatError(f"malformed network document: {exc}") from exc
    if len(set(ids)) != len(ids):
        raise NetworkFormatError("duplicate station ids")
    if source_id not in ids:
        raise NetworkFormatError(f"source id {source_id} is not a station")
    return Network(np.array(ids, dtype=np.int64), np.array(pos, dtype=float).reshape(-1, 2),
                   params, side, ids.index(source_id))


def save_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(to_document(net), indent=1) + "\n")


def load_network(path) -> Network:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}: not valid JSON ({exc})") from exc
    return from_document(doc)
