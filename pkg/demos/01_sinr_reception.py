"""
Who hears whom under SINR
=========================

A few stations on the plane, a handful of them transmitting. We resolve one
round and compare each listener's decision with its raw ratios.
"""

import numpy as np

from sinrcast.sinr import SinrParams, Station, resolve_round, sinr_ratio

# power is pinned to beta * N, so the transmission range is exactly 1
prm = SinrParams(alpha=2.5, beta=1.0, noise=1.0, eps=0.2)
print("range", prm.range, "link length", prm.link_length)

rng = np.random.default_rng(0)
pts = rng.uniform(0, 3, (12, 2))
stations = [Station(i, tuple(p)) for i, p in enumerate(pts)]
tx, rx = stations[:3], stations[3:]

heard = resolve_round({s: f"hello from {s.id}" for s in tx}, rx, prm)
for r in rx:
    ratios = [round(sinr_ratio(s, r, tx, prm), 3) for s in tx]
    print(r.id, ratios, "->", heard[r][1] if heard[r] else "nothing")

# at most one ratio can reach beta >= 1, so decoding is never ambiguous
