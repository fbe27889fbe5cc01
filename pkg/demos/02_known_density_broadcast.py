"""
Known-density broadcast against backoff
=======================================

Uniform networks on a 6 x 6 square. The diluted randomized protocol keeps its
time per hop roughly flat as the network grows, while backoff slows down once
neighbourhoods get crowded.
"""

import numpy as np

from sinrcast.engine import run
from sinrcast.network import eccentricity, gen_uniform
from sinrcast.protocols import Backoff, RandBroadcast
from sinrcast.sinr import SinrParams

prm = SinrParams(alpha=2.5, beta=1.0, noise=1.0, eps=0.2)

for n in (200, 600, 1500):
    rows = []
    for seed in range(5):
        net = gen_uniform(n, 6, prm, seed)
        D = eccentricity(net)
        rand = run(net, RandBroadcast(10, 60), seed, 10 ** 6, stop_when_informed=True)
        back = run(net, Backoff(), seed, 10 ** 6, stop_when_informed=True)
        rows.append((D, rand.completion_round, back.completion_round))
    D = np.mean([r[0] for r in rows])
    rand_t = np.mean([r[1] for r in rows])
    back_t = [r[2] for r in rows if r[2] is not None]
    print(f"n={n:5d}  D~{D:4.1f}  rand {rand_t:7.1f}  "
          f"backoff {np.mean(back_t) if back_t else float('nan'):7.1f} "
          f"({len(back_t)}/5 complete)")

# backoff can die out on sparse networks: every station stops once its
# largest window passes, whether or not the fringe has been reached
