"""Small instances shared by the protocol and acceptance tests."""
import numpy as np

from sinrcast.grid import Grid
from sinrcast.network import network_from_points
from sinrcast.protocols import UnknownBroadcast


def election_instance(delta, params, seed=0):
    """One leader (the source) and ``delta`` stations in a single box about 0.5 away.

    Nothing else is on the air, so each run with ``d = dbar = T = 1`` holds
    exactly one election loop for the crowded box.
    """
    c = Grid.unknown_density(params.eps).cell
    rng = np.random.default_rng(seed)
    crowd = (np.array([21, 3]) + rng.uniform(0.05, 0.95, (delta, 2))) * c
    return network_from_points(np.vstack([[0.5 * c, 0.5 * c], crowd]), params)


def election_rate(net, loops, seed0=0):
    """Fraction of single-loop runs in which the crowded box elects a leader."""
    from sinrcast.engine import run
    wins = 0
    for k in range(loops):
        proto = UnknownBroadcast(1, 1, 1)
        run(net, proto, seed0 + k, 10 ** 6)
        assert proto.loops == 1
        wins += bool(proto.elections)
    return wins / loops


def announcements(trace):
    """Box -> set of leader ids named in K2 announcements of a trace."""
    named = {}
    for rec in trace:
        for m in rec.messages:
            if m.kind == "announce":
                named.setdefault(tuple(m.box), set()).add(m.leader)
    return named
