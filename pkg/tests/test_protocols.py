import math

import numpy as np
import pytest

from helpers import announcements, election_instance, election_rate
from sinrcast.engine import Message, run
from sinrcast.grid import Grid, box_of, boxes_of
from sinrcast.network import eccentricity, gen_uniform, network_from_points
from sinrcast.params import DilutionSpec, P_KNOWN, P_UNKNOWN, dilution_d, trial_count
from sinrcast.protocols import (Backoff, RandBroadcast, UnknownBroadcast, box_counts,
                                iteration_rounds, loop_rounds, rand_broadcast_defaults,
                                unknown_broadcast_defaults, window_limit)
from sinrcast.sinr import SinrParams, Station, received_from, resolve_round

PRM = SinrParams()
GK = Grid.known_density(PRM.eps)
GU = Grid.unknown_density(PRM.eps)


# -- known density -----------------------------------------------------------

def test_box_counts_are_true_counts():
    net = gen_uniform(300, 3, PRM, 1)
    boxes, counts = box_counts(net, GK)
    for v in range(net.n):
        assert counts[v] == np.sum(np.all(boxes == boxes[v], axis=1))
    assert np.all(counts >= 1)


def test_class_slot_arithmetic():
    c = GK.cell
    net = network_from_points([((23 + 0.5) * c, (-7 + 0.5) * c)], PRM)
    p = RandBroadcast(10, 3)
    p.start(net, 0)
    assert tuple(boxes_of(net.pos, GK)[0]) == (23, -7)
    assert p.klass[0] == 3 * 10 + 3
    assert [r for r in range(1, 301) if p._slot(r) == p.klass[0]] == [34, 134, 234]


def test_full_trace_respects_dilution_classes():
    net = gen_uniform(300, 4, PRM, 3)
    d = 4
    res = run(net, RandBroadcast(d, 30), 2, 10 ** 5, trace=True)
    boxes = {int(i): tuple(b) for i, b in zip(net.ids, boxes_of(net.pos, GK))}
    for rec in res.trace:
        if rec.round == 0:
            assert rec.transmitters == (net.source_id,)
            continue
        classes = {(boxes[t][0] % d, boxes[t][1] % d) for t in rec.transmitters}
        slot = (rec.round - 1) % (d * d)
        assert classes <= {divmod(slot, d)}


def test_single_class_lone_occupants_always_fire():
    net = network_from_points([(0.01, 0.01), (0.6, 0.01)], PRM)
    res = run(net, RandBroadcast(1, 5), 0, 100, trace=True)
    assert res.completion_round == 1
    # Delta = 1 in each box: every informed station transmits in every slot
    assert all(len(r.transmitters) == 2 for r in res.trace[1:])
    assert res.done_round == 1 + 5


def test_everyone_eligible_with_d_one():
    net = gen_uniform(60, 2, PRM, 0)
    p = RandBroadcast(1, 10)
    p.start(net, 0)
    p.informed[:] = True
    fired = set()
    for r in range(1, 200):
        fired |= set(p.transmit(r))
    assert fired == set(range(net.n))


def test_rand_defaults():
    net = gen_uniform(200, 6, PRM, 0)
    D = eccentricity(net)
    d, T = rand_broadcast_defaults(net)
    assert d == dilution_d(DilutionSpec(2.5, 1.0, GK.cell, 2.5 * 0.2 / 4, 200))
    assert T == trial_count(D, 0.05 / (4 * (D + 1) ** 3), P_KNOWN)
    d, T = rand_broadcast_defaults(net, d=10, D=10)
    assert d == 10 and T == trial_count(10, 0.05 / 5324, 1 / (2 * math.e))
    assert rand_broadcast_defaults(net, d=10, D=10, target_delta_fail=1.0)[1] == \
        math.ceil(2 * 10 / P_KNOWN + 2 * math.log(5324) / P_KNOWN)


def test_isolated_slot_success_rate():
    """Per slot, exactly one station of a box transmits and everyone within
    ``1 - eps/2`` of it hears it, more often than ``1/(2e)`` less slack."""
    rng = np.random.default_rng(5)
    d = dilution_d(DilutionSpec(PRM.alpha, PRM.power, GK.cell,
                                PRM.noise * PRM.alpha * PRM.eps / 4, 10 ** 4))
    c = GK.cell
    boxes = np.array([(i * d, j * d) for i in range(-2, 3) for j in range(-2, 3)])
    sizes = rng.integers(1, 9, len(boxes))
    members = [(b + rng.random((k, 2))) * c for b, k in zip(boxes, sizes)]
    # listeners all around each box, out to the 1 - eps/2 disc
    ang = rng.uniform(0, 2 * np.pi, (len(boxes), 40))
    rad = (1 - PRM.eps / 2) * np.sqrt(rng.random((len(boxes), 40)))
    listeners = [(b + 0.5) * c + np.c_[r * np.cos(a), r * np.sin(a)]
                 for b, a, r in zip(boxes, ang, rad)]
    wins = trials = 0
    for _ in range(400):
        fire = [rng.random(len(m)) < 1 / len(m) for m in members]
        tx = np.vstack([m[f] for m, f in zip(members, fire)]) if any(f.any() for f in fire) else \
            np.zeros((0, 2))
        owner = np.concatenate([np.full(f.sum(), k) for k, f in enumerate(fire)]).astype(int)
        for k, f in enumerate(fire):
            trials += 1
            if f.sum() != 1:
                continue
            me = np.flatnonzero(owner == k)[0]
            sender = tx[me]
            others = np.vstack([m[~f] if j == k else m for j, (m, f) in enumerate(zip(members, fire))
                                if j == k] + [listeners[k]])
            near = others[np.hypot(*(others - sender).T) <= 1 - PRM.eps / 2]
            if np.all(received_from(tx, near, PRM) == me):
                wins += 1
    assert trials >= 10 ** 4
    assert wins / trials > 1 / (2 * math.e) - 0.05


# -- unknown density ---------------------------------------------------------

def test_unknown_defaults():
    d, dbar, T = unknown_broadcast_defaults(0.2, 2.5, 1, 1, 100, 4)
    delta = 0.1 / (4 * 5 ** 3)
    assert T == trial_count(4, delta, P_UNKNOWN)
    assert T == pytest.approx(36 * 4 + 36 * math.log(1 / delta), abs=1)
    assert dbar >= d
    assert unknown_broadcast_defaults(0.2, 2.5, 1, 1, 100, 4, d=5, dbar=10)[:2] == (5, 10)
    assert loop_rounds(100) == 3 * 8
    assert iteration_rounds(5, 10, 100) == 25 + 8 * 100 * 24


def test_override_echoed_in_metadata():
    net = gen_uniform(60, 2, PRM, 0)
    res = run(net, UnknownBroadcast(5, 10, 3), 0, 10 ** 7)
    assert (res.metadata["d"], res.metadata["dbar"], res.metadata["T"]) == (5, 10, 3)
    assert res.done_round == 1 + 3 * iteration_rounds(5, 10, 60)


def test_lone_candidate_is_always_elected():
    net = election_instance(1, PRM)
    assert election_rate(net, 50) == 1.0


def test_crowded_box_election_rate():
    assert election_rate(election_instance(16, PRM), 600) >= 1 / 18


def test_unreachable_helper_means_no_election():
    # the second station shares the source's near window, so no octant helps it
    c = GU.cell
    net = network_from_points([(0.5 * c, 0.5 * c), (2.5 * c, 0.5 * c)], PRM)
    proto = UnknownBroadcast(1, 1, 3)
    res = run(net, proto, 0, 10 ** 6, trace=True)
    assert res.complete
    assert proto.loops == 0 and not proto.elections
    assert not any(m.kind == "candidate" for r in res.trace for m in r.messages)


def test_two_candidates_jam_the_helper():
    c = GU.cell
    u = Station(1, (0.5 * c, 0.5 * c))
    a, b, w = (Station(i, ((21 + x) * c, (3 + y) * c))
               for i, (x, y) in zip((2, 3, 4), ((0.2, 0.3), (0.8, 0.6), (0.5, 0.9))))
    # K1: two candidates, the helper decodes neither
    assert resolve_round({a: "a", b: "b"}, [u, w], PRM)[u] is None
    # K3: the candidates drown the helper at the third station of the box
    got = resolve_round({a: "a", b: "b", u: "u"}, [w], PRM)[w]
    assert got is None or got[0] != u


class Watched(UnknownBroadcast):
    def start(self, net, seed):
        super().start(net, seed)
        self.log = []

    def receive(self, rnd, heard):
        super().receive(rnd, heard)
        if rnd > 0:
            it, part, pos, within = self._locate(rnd)
            if part == 2:
                self.log.append((within % 3, list(self._k1), list(self._guard),
                                 self.conflict.copy()))


def test_conflicts_after_double_candidates():
    net = election_instance(6, PRM, seed=2)
    checked = 0
    for seed in range(60):
        proto = Watched(1, 1, 1)
        run(net, proto, seed, 10 ** 6)
        for i, (phase, k1, guard, conflict) in enumerate(proto.log):
            if phase == 0 and len(k1) >= 2:
                # nothing heard in K2: every candidate flags a conflict
                after_k2 = proto.log[i + 1][3]
                assert all(after_k2[v] for v in k1)
                after_k3 = proto.log[i + 2][3]
                assert all(after_k3[v] for v in guard)
                checked += 1
                break
    assert checked > 0


def test_late_wakers_wait_for_next_iteration():
    net = gen_uniform(40, 1.5, PRM, 0)
    p = UnknownBroadcast(2, 2, 3)
    p.start(net, 0)
    v = next(i for i in range(net.n) if i != net.source)
    part2 = 1 + p.L1 + 1
    assert p._locate(part2)[1] == 2
    p.receive(part2, {v: (net.source, Message("helper", net.source_id, part2, box=(0, 0)))})
    assert p.informed[v] and p.pending[v] and not p.activated[v]
    p._begin_iteration(2)
    assert p.activated[v] and not p.pending[v]
    w = next(i for i in range(net.n) if i not in (net.source, v))
    p.receive(2, {w: (net.source, Message("leader", net.source_id, 2, box=(0, 0)))})
    assert p.activated[w]


def test_end_to_end_unique_leaders_and_quiet_boxes():
    k1 = []
    for seed in range(4):
        net = gen_uniform(100, 3, PRM, seed)
        D = eccentricity(net)
        d, dbar, T = unknown_broadcast_defaults(0.2, 2.5, 1, 1, 100, D, d=5, dbar=10)
        proto = UnknownBroadcast(d, dbar, T)
        res = run(net, proto, seed, T * iteration_rounds(d, dbar, 100) + 1, trace=True)
        assert res.complete
        assert all(len(ids) == 1 for ids in announcements(res.trace).values())
        assert not proto.leader_conflicts()
        boxes = boxes_of(net.pos, GU)
        leaders = [tuple(boxes[v]) for v in np.flatnonzero(proto.leader)]
        assert len(leaders) == len(set(leaders))
        k1 += list(proto.k1_last.values())
    assert np.mean(k1) <= 6.5


# -- backoff -----------------------------------------------------------------

def test_window_limit():
    assert [window_limit(x) for x in (1, 2, 3, 8, 9)] == [0, 1, 2, 3, 4]


def test_silent_sequence_for_delta_eight():
    net = network_from_points([(0, 0)], PRM)
    p = Backoff(delta=[8])
    res = run(net, p, 0, 100, trace=True)
    assert p.windows[0] == [1, 2, 4, 8]
    assert res.done_round == 15
    assert sum(bool(r.transmitters) for r in res.trace) == 4


def test_delta_one_transmits_once():
    net = network_from_points([(0, 0)], PRM)
    p = Backoff(delta=[1])
    res = run(net, p, 3, 100, trace=True)
    assert p.windows[0] == [1] and res.done_round == 1
    assert [r.transmitters for r in res.trace] == [(1,)]


def test_two_station_acknowledgment():
    net = network_from_points([(0, 0), (0.5, 0)], PRM)
    p = Backoff()
    res = run(net, p, 1, 100, trace=True)
    assert list(p.delta) == [2, 2]
    assert res.trace[0].transmitters == (1,) and res.completion_round == 1
    # the neighbour opens window 0 right away and the source hears it
    assert res.trace[1].transmitters == (2,) and res.trace[1].deliveries == ((1, 2),)
    # which restarts the source at window 0 in round 2
    assert p.windows[0] == [1, 2, 1, 2]
    assert p.windows[1] == [1, 2]
    assert res.done_round == 5


def test_windows_double_or_restart():
    net = gen_uniform(300, 4, PRM, 6)
    p = Backoff()
    run(net, p, 1, 10 ** 5)
    for seq, wmax in zip(p.windows, p.wmax):
        for a, b in zip(seq, seq[1:]):
            assert b == 2 * a or b == 1
        assert max(seq, default=1) <= 2 ** wmax
    assert p.finished.all()


def test_default_density_is_closed_neighbourhood():
    net = gen_uniform(150, 3, PRM, 2)
    p = Backoff()
    p.start(net, 0)
    assert list(p.delta) == [len(nb) + 1 for nb in net.neighbors]
    with pytest.raises(ValueError):
        Backoff(delta=[0] * net.n).start(net, 0)
