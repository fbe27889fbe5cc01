"""Square grids over the plane, box adjacency, octants and dilution classes.

Box ``(i, j)`` of a grid with cell ``c`` is the half-open square
``[c*i, c*(i+1)) x [c*j, c*(j+1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# the closest boxes, (i+a, j+b) with a, b in [-2, 2], are never adjacent in the
# unknown-density grid
NEAR_WINDOW = 2


class BoxCoord(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class Grid:
    cell: float

    def __post_init__(self):
        if not self.cell > 0:
            raise ValueError(f"grid cell must be positive, got {self.cell}")

    @classmethod
    def known_density(cls, eps: float) -> "Grid":
        return cls(eps / (2 * math.sqrt(2)))

    @classmethod
    def unknown_density(cls, eps: float) -> "Grid":
        return cls(eps / (6 * math.sqrt(2)))

    @classmethod
    def pivotal(cls, eps: float, r: float = 1.0) -> "Grid":
        """Largest grid whose boxes are cliques of the communication graph."""
        return cls((1 - eps) * r / math.sqrt(2))


def _coord(x: float, c: float) -> int:
    i = math.floor(x / c)
    # the division can round across a box edge; settle it against the definition
    if x < i * c:
        i -= 1
    elif x >= (i + 1) * c:
        i += 1
    return i


def box_of(pos: Sequence[float], grid: Grid) -> BoxCoord:
    return BoxCoord(_coord(pos[0], grid.cell), _coord(pos[1], grid.cell))


def boxes_of(pos: np.ndarray, grid: Grid) -> np.ndarray:
    """Vectorised :func:`box_of`; returns an ``(n, 2)`` integer array."""
    pos = np.asarray(pos, dtype=float).reshape(-1, 2)
    c = grid.cell
    idx = np.floor(pos / c)
    idx -= pos < idx * c
    idx += pos >= (idx + 1) * c
    return idx.astype(np.int64)


def standard_adjacent(a: BoxCoord, b: BoxCoord) -> bool:
    return abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


def box_distance(a: BoxCoord, b: BoxCoord, grid: Grid) -> float:
    """Largest distance between a point of ``a`` and a point of ``b``."""
    if tuple(a) == tuple(b):
        return 0.0
    # the farthest pair of points sits on opposite corners
    span_x = abs(a[0] - b[0]) + 1
    span_y = abs(a[1] - b[1]) + 1
    return grid.cell * math.hypot(span_x, span_y)


def in_near_window(a: BoxCoord, b: BoxCoord) -> bool:
    return abs(a[0] - b[0]) <= NEAR_WINDOW and abs(a[1] - b[1]) <= NEAR_WINDOW


def near_window(center: BoxCoord) -> list[BoxCoord]:
    r = range(-NEAR_WINDOW, NEAR_WINDOW + 1)
    return [BoxCoord(center[0] + p, center[1] + q) for p in r for q in r]


def base_adjacent(a: BoxCoord, b: BoxCoord, grid: Grid, eps: float) -> bool:
    return not in_near_window(a, b) and box_distance(a, b, grid) <= 1 - eps / 2


def modified_adjacent(a: BoxCoord, b: BoxCoord, grid: Grid, eps: float,
                      edge_witness=None) -> bool:
    """Adjacency used by the unknown-density protocol.

    ``edge_witness`` is an optional pair ``(v, u)`` of stations joined by a
    communication-graph edge with ``v`` in box ``a``; it makes ``a`` adjacent
    to the boxes crowding ``u``'s box as well.
    """
    if edge_witness is not None:
        v, u = edge_witness
        if tuple(box_of(v.pos, grid)) != tuple(a):
            raise ValueError(f"witness station {v.id} does not lie in box {tuple(a)}")
        if v.distance(u) > 1 - eps:
            raise ValueError(f"stations {v.id} and {u.id} are not joined in the communication graph")
    if base_adjacent(a, b, grid, eps):
        return True
    if edge_witness is None:
        return False
    u_box = box_of(u.pos, grid)
    return in_near_window(u_box, b) and not in_near_window(a, b)


def octant_of(v_box: BoxCoord, other_box: BoxCoord, grid: Grid | None = None) -> int:
    """Octant ``k`` of the 45-degree sector ``[45k, 45(k+1))`` holding the
    centre of ``other_box`` as seen from the centre of ``v_box``.

    Box centres differ by an integer multiple of the cell, so the sector is
    resolved exactly on integer offsets and ``grid`` only documents the caller's
    context.
    """
    dx = other_box[0] - v_box[0]
    dy = other_box[1] - v_box[1]
    if dx == 0 and dy == 0:
        raise ValueError("a box has no octant relative to itself")
    if dx > 0 and dy >= 0:
        return 0 if dy < dx else 1
    if dx <= 0 and dy > 0:
        return 2 if -dx < dy else 3
    if dx < 0 and dy <= 0:
        return 4 if -dy < -dx else 5
    return 6 if dx < -dy else 7


def dilution_class(b: BoxCoord, d: int) -> tuple[int, int]:
    if d < 1:
        raise ValueError(f"dilution must be >= 1, got {d}")
    return b[0] % d, b[1] % d


def is_diluted(boxes: Sequence[BoxCoord], d: int) -> bool:
    """True iff all boxes share one dilution class modulo ``d``."""
    return len({dilution_class(b, d) for b in boxes}) <= 1


class Neighborhoods:
    """Box neighbourhoods of one network instance under the modified adjacency.

    The witness override is resolved once from the instance's edges.
    """

    def __init__(self, boxes: np.ndarray, edges: np.ndarray, grid: Grid, eps: float):
        self.grid = grid
        self.eps = eps
        self.extra: dict[BoxCoord, set[BoxCoord]] = {}
        for p, q in edges:
            for v, u in ((p, q), (q, p)):
                vb = BoxCoord(*map(int, boxes[v]))
                ub = BoxCoord(*map(int, boxes[u]))
                bucket = self.extra.setdefault(vb, set())
                bucket.update(b for b in near_window(ub) if not in_near_window(vb, b))

    def adjacent(self, a: BoxCoord, b: BoxCoord) -> bool:
        if base_adjacent(a, b, self.grid, self.eps):
            return True
        return b in self.extra.get(a, ())
