import random

import pytest

from helpers import FakeSim, run_random, scripted_run
from snapsim.errors import ConfigInvalid
from snapsim.metrics import in_transit, verify_consistent_cut
from snapsim.snapshots import (ALGORITHMS, AlreadyRecorded,
                               CalledBeforeQuiescence, DuplicateMarker,
                               MissingVectorClock)
from snapsim.transport import (AppMessage, ChannelId, ChannelOrdering, Color,
                               ControlKind, ControlMessage, Epoch)

# Chandy-Lamport


def test_cl_initiator_sends_marker_on_every_outgoing_channel():
    sim, res = scripted_run(3, "chandy-lamport", [], initiation_time=1.5)
    first_markers = [e for e in res.log if e.kind == "send" and e.pid == 0]
    assert len(first_markers) == 2
    assert all(e.msg_kind == "marker" and e.time == 1.5 for e in first_markers)
    assert res.snapshot.local[0].record_time == 1.5


def test_cl_second_initiate_is_rejected():
    sim, _ = scripted_run(3, "chandy-lamport", [])
    with pytest.raises(AlreadyRecorded):
        sim.algorithm.cl_initiate(0)


def test_cl_single_process_window_is_a_point():
    _, res = scripted_run(1, "chandy-lamport", [], initiation_time=3.0)
    assert [(w.start, w.end) for w in res.windows] == [(3.0, 3.0)]


def test_cl_two_process_hand_trace():
    # p1 sends m at t=0 with latency 4; markers take 2 both ways.
    # p1 records at 2 on the marker; its marker is clamped behind m and
    # reaches p0 at 4 right after m, so m is the state of channel 1->0.
    sim, res = scripted_run(2, "chandy-lamport", [(0.0, 1, 0, 4.0)], control=2.0)
    snap = res.snapshot
    assert snap.channel_state(1, 0) == [0]
    assert snap.channel_state(0, 1) == []
    assert snap.local[1].record_time == 2.0
    w0, w1 = res.windows
    assert (w0.start, w0.end) == (0.0, 4.0)
    assert (w1.start, w1.end) == (2.0, 2.0)
    assert verify_consistent_cut(snap, res.log) is None
    kinds_at_p0 = [e.msg_kind for e in res.log if e.kind == "deliver" and e.pid == 0]
    assert kinds_at_p0 == ["app", "marker"]


def test_cl_duplicate_marker():
    sim, _ = scripted_run(2, "chandy-lamport", [])
    with pytest.raises(DuplicateMarker):
        sim.algorithm.cl_on_marker(0, 1)


def test_cl_quiet_start_records_empty_channel_states():
    _, res = scripted_run(4, "chandy-lamport", [])
    for local in res.snapshot.local.values():
        assert all(ids == [] for ids in local.channel_states.values())
        assert set(local.channel_states) == {ChannelId(j, local.pid) for j in range(4) if j != local.pid}


def test_cl_channel_states_match_brute_force_oracle():
    rng = random.Random(11)
    for _ in range(30):
        res = run_random(rng, "chandy-lamport", n_range=(2, 4))
        oracle = in_transit(res.snapshot, res.log)
        for pid, local in res.snapshot.local.items():
            for ch, ids in local.channel_states.items():
                assert ids == oracle.get(ch, [])

# Lai-Yang


def app(mid, src, dst, **kw):
    return AppMessage(mid, src, dst, 0.0, **kw)


def test_ly_white_send_counts():
    fake = FakeSim(3, "lai-yang")
    msg = fake.algo.ly_on_send(1, app(0, 1, 2))
    assert msg.color is Color.WHITE and msg.white_sent_counts is None
    assert fake.algo.white_sent[1][2] == 1


def test_ly_red_message_carries_white_counts():
    fake = FakeSim(3, "lai-yang")
    for i in range(3):
        fake.algo.ly_on_send(1, app(i, 1, 2))
    fake.algo.initiate(1)
    red = fake.algo.ly_on_send(1, app(9, 1, 2))
    assert red.color is Color.RED
    assert red.white_sent_counts[ChannelId(1, 2)] == 3
    assert red.white_sent_counts[ChannelId(1, 0)] == 0


def test_ly_white_receiver_records_before_processing_red():
    fake = FakeSim(2, "lai-yang")
    fake.algo.initiate(0)
    red = fake.algo.ly_on_send(0, app(0, 0, 1))
    fake.t = 4.0
    fake.algo.ly_on_receive(1, red)
    assert fake.records[-1] == (1, 4.0)
    # count 0 declared on 0->1: that channel closes at once
    assert fake.algo.end[1] == 4.0


def test_ly_channel_terminates_when_declared_whites_are_in():
    fake = FakeSim(3, "lai-yang")
    algo = fake.algo
    whites = [algo.ly_on_send(0, app(i, 0, 1)) for i in range(2)]
    algo.initiate(0)
    red = algo.ly_on_send(0, app(5, 0, 1))
    fake.t = 1.0
    algo.ly_on_receive(1, red)          # p1 records; expects 2 whites on 0->1
    assert 0 in algo.open[1]
    fake.t = 2.0
    algo.ly_on_receive(1, whites[0])
    assert 0 in algo.open[1]
    fake.t = 3.0
    algo.ly_on_receive(1, whites[1])
    assert 0 not in algo.open[1] and algo.close_time[1][0] == 3.0
    assert algo.snapshot.local[1].channel_states[ChannelId(0, 1)] == [0, 1]


def test_ly_red_on_new_channel_with_zero_count_closes_immediately():
    fake = FakeSim(3, "lai-yang")
    algo = fake.algo
    algo.initiate(0)
    fake.t = 1.0
    algo.ly_on_receive(1, algo.ly_on_send(0, app(0, 0, 1)))
    algo.ly_on_send(1, app(1, 1, 2))    # p1 is red now
    fake.t = 2.0
    algo.ly_on_receive(2, algo.ly_on_send(1, app(2, 1, 2)))
    fake.t = 5.0
    red_from_0 = algo.ly_on_send(0, app(3, 0, 2))
    algo.ly_on_receive(2, red_from_0)
    assert algo.close_time[2][0] == 5.0
    assert algo.snapshot.local[2].channel_states[ChannelId(0, 2)] == []

# Mattern


def test_mattern_trigger_and_channel_state():
    fake = FakeSim(2, "mattern")
    algo = fake.algo
    early = app(0, 0, 1, vc=(0, 0))     # sent before the initiator's record
    algo.mattern_on_send(0, early)
    algo.initiate(0)
    assert algo.s == 1
    late = app(1, 0, 1, vc=(2, 0))
    algo.mattern_on_send(0, late)
    assert late.color is Color.RED
    fake.t = 3.0
    algo.mattern_on_receive(1, late)
    assert fake.records[-1] == (1, 3.0)
    fake.t = 4.0
    algo.mattern_on_receive(1, early)
    assert algo.snapshot.local[1].channel_states[ChannelId(0, 1)] == [0]
    assert algo.end[1] == 4.0


def test_mattern_requires_vector_clock():
    fake = FakeSim(2, "mattern")
    fake.algo.initiate(0)
    with pytest.raises(MissingVectorClock):
        fake.algo.mattern_on_receive(1, app(0, 0, 1))

# AB-AV


def test_abav_pre_record_message_joins_state_only_if_receiver_recorded():
    # p1 sends m to p2 at 0.5 (pre-record: p1 records at 1.0 on the request).
    # Case A: m reaches p2 at 10.5, after p2 recorded at 1.0. p1's notice
    # arrives at 2.0 but BSS holds it behind m.
    _, res = scripted_run(3, "abav", [(0.5, 1, 2, 10.0)], control=1.0, relay=1.0)
    assert res.snapshot.channel_state(1, 2) == [0]
    delivered = [(e.msg_kind, e.channel.src) for e in res.log if e.kind == "deliver" and e.pid == 2]
    assert delivered.index(("app", 1)) < delivered.index(("notice", 1))
    assert res.windows[2].end == pytest.approx(10.5)
    # Case B: m arrives at 0.7, before the request reaches p2 at 5.0.
    _, res = scripted_run(3, "abav", [(0.5, 1, 2, 0.2)], control=[5.0, 5.0, 1.0, 1.0, 1.0, 1.0])
    assert res.snapshot.channel_state(1, 2) == []
    assert verify_consistent_cut(res.snapshot, res.log) is None


def test_abav_single_process():
    _, res = scripted_run(1, "abav", [], initiation_time=2.0)
    assert [(w.start, w.end) for w in res.windows] == [(2.0, 2.0)]


def test_abav_duplicate_request_is_idempotent():
    fake = FakeSim(3, "abav")
    req = ControlMessage(0, 0, 1, 0.0, ControlKind.SNAPSHOT_REQUEST)
    fake.algo.abav_on_control(1, req)
    fake.algo.abav_on_control(1, req)
    assert [r for r in fake.records if r[0] == 1] == [(1, 0.0)]
    assert fake.controls == [(1, ControlKind.RECORDED_NOTICE)]


def test_abav_epoch_tags():
    fake = FakeSim(2, "abav")
    m = app(0, 1, 0)
    fake.algo.on_send(1, m)
    assert m.epoch is Epoch.PRE_RECORD
    fake.algo.abav_initiate(1)
    m2 = app(1, 1, 0)
    fake.algo.on_send(1, m2)
    assert m2.epoch is Epoch.POST_RECORD

# Quiescence


def test_finalize_closes_silent_channel_at_window_start():
    fake = FakeSim(2, "lai-yang")
    fake.t = 1.0
    fake.algo.initiate(0)
    fake.t = 9.0
    fake.algo.finalize_at_quiescence()
    w0, w1 = fake.algo.windows()
    assert (w0.start, w0.end, w0.finalized_at_quiescence) == (1.0, 1.0, True)
    # p1 never saw a red message; it is recorded at quiescence
    assert (w1.start, w1.end, w1.finalized_at_quiescence) == (9.0, 9.0, True)


def test_finalize_closes_unmet_count_at_last_white():
    fake = FakeSim(2, "lai-yang")
    algo = fake.algo
    algo.initiate(1)
    algo.declared[1][0] = 3
    for t, mid in ((4.0, 0), (6.0, 1)):
        fake.t = t
        algo.ly_on_receive(1, app(mid, 0, 1))
    fake.t = 20.0
    algo.finalize_at_quiescence()
    assert algo.windows()[1].end == 6.0


def test_finalize_leaves_terminated_windows_alone():
    fake = FakeSim(2, "lai-yang")
    algo = fake.algo
    algo.initiate(0)
    fake.t = 2.0
    algo.ly_on_receive(1, algo.ly_on_send(0, app(0, 0, 1)))
    fake.t = 3.0
    algo.ly_on_receive(0, algo.ly_on_send(1, app(1, 1, 0)))
    before = algo.windows()
    fake.t = 50.0
    algo.finalize_at_quiescence()
    assert algo.windows() == before
    assert not any(w.finalized_at_quiescence for w in before)


def test_finalize_before_quiescence():
    fake = FakeSim(2, "mattern")
    fake.pending = 1
    with pytest.raises(CalledBeforeQuiescence):
        fake.algo.finalize_at_quiescence()

# Cross-cutting invariants


@pytest.mark.parametrize("algorithm", sorted(ALGORITHMS))
def test_ordering_gate(algorithm):
    wrong = next(o for o in ChannelOrdering if o is not ALGORITHMS[algorithm].ordering)
    with pytest.raises(ConfigInvalid):
        scripted_run(3, algorithm, [], ordering=wrong)


@pytest.mark.parametrize("algorithm", sorted(ALGORITHMS))
def test_every_process_records_exactly_once(algorithm):
    rng = random.Random(algorithm)
    for _ in range(10):
        res = run_random(rng, algorithm)
        pids = [e.pid for e in res.log if e.kind == "record"]
        assert sorted(pids) == list(range(res.config.hosts))


@pytest.mark.parametrize("algorithm", ["lai-yang", "mattern"])
def test_coloring_records_before_processing_trigger(algorithm):
    rng = random.Random(3)
    checked = 0
    for _ in range(20):
        res = run_random(rng, algorithm)
        entries = res.log.entries
        rec = {e.pid: e.index for e in entries if e.kind == "record"}
        sends = {e.msg_id: e for e in entries if e.kind == "send"}
        for w in res.windows:
            if w.pid == 0 or w.finalized_at_quiescence and w.start == res.log[-1].time:
                continue
            nxt = entries[rec[w.pid] + 1]
            if nxt.kind == "deliver" and nxt.pid == w.pid:
                s = sends[nxt.msg_id]
                assert s.index > rec[s.pid], "trigger must be a red message"
                checked += 1
    assert checked > 0


def test_abav_notice_never_overtakes_pre_record_messages():
    rng = random.Random(8)
    for _ in range(20):
        res = run_random(rng, "abav")
        entries = res.log.entries
        rec = {e.pid: e.index for e in entries if e.kind == "record"}
        sends = {e.msg_id: e for e in entries if e.kind == "send"}
        notice_at = {}
        for e in entries:
            if e.kind != "deliver":
                continue
            if e.msg_kind in ("notice", "request"):
                notice_at.setdefault((e.channel.src, e.pid), e.index)
            elif e.msg_kind == "app" and sends[e.msg_id].index < rec[e.channel.src]:
                assert (e.channel.src, e.pid) not in notice_at


@pytest.mark.parametrize("algorithm", sorted(ALGORITHMS))
def test_cut_is_consistent_on_random_runs(algorithm):
    rng = random.Random(f"cut-{algorithm}")
    for _ in range(25):
        res = run_random(rng, algorithm)
        assert verify_consistent_cut(res.snapshot, res.log) is None
