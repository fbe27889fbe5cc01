"""
Broadcast without density knowledge
===================================

The unknown-density protocol elects one leader per grid box before boxes
forward the message. Here we run it at desk-scale dilutions and look at the
leaders it picked.
"""

from collections import Counter

from sinrcast.engine import run
from sinrcast.network import eccentricity, gen_uniform
from sinrcast.protocols import UnknownBroadcast, iteration_rounds, unknown_broadcast_defaults
from sinrcast.sinr import SinrParams

prm = SinrParams(alpha=2.5, beta=1.0, noise=1.0, eps=0.2)
net = gen_uniform(100, 3, prm, 7)
D = eccentricity(net)

# the formula dilutions are far too large for a laptop; override them
d, dbar, T = unknown_broadcast_defaults(prm.eps, prm.alpha, prm.noise, prm.power, net.n, D,
                                        0.1, d=5, dbar=10)
budget = T * iteration_rounds(d, dbar, net.n)
print(f"D={D}  T={T}  budget {budget} rounds")

proto = UnknownBroadcast(d, dbar, T)
res = run(net, proto, 1, budget + 1, trace=True)
print("informed", res.informed, "of", res.n, "at round", res.completion_round)

# every announcement in the trace names the one leader of its box
named = Counter(m.kind for rec in res.trace for m in rec.messages)
print("messages by kind", dict(named))
print("leader conflicts", proto.leader_conflicts() or "none")
