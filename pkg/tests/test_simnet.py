import json
import random

import pytest

from rissec import simnet, wire
from rissec.errors import ScriptIndexOutOfRange
from rissec.simnet import (
    DELIVERED,
    DROPPED,
    INJECTED,
    Deliver,
    Drop,
    Inject,
    Register,
    Reorder,
    Replay,
    Retransmit,
    Scenario,
    TamperBit,
    TranscriptEntry,
    Transcript,
    assert_privacy,
    build_scenario,
    run_scenario,
)


def one_device(seed=0):
    return [simnet.make_device(random.Random(seed))]


@pytest.mark.parametrize("name", simnet.SCENARIOS)
@pytest.mark.parametrize("seed", [0, 1, 2, 12345])
def test_standard_scenarios_match_goldens(name, seed):
    t = run_scenario(build_scenario(name, seed))
    assert t.final_events() == simnet.golden_events(name)
    assert t.matched


@pytest.mark.parametrize("name", simnet.SCENARIOS)
def test_determinism(name):
    a = run_scenario(build_scenario(name, 42))
    b = run_scenario(build_scenario(name, 42))
    assert a.to_jsonl() == b.to_jsonl()
    assert [e.frame for e in a.entries] == [e.frame for e in b.entries]


def test_seeds_differ():
    a = run_scenario(build_scenario("happy", 1))
    b = run_scenario(build_scenario("happy", 2))
    assert a[0].frame != b[0].frame


@pytest.mark.parametrize("name", simnet.SCENARIOS)
def test_conservation(name):
    t = run_scenario(build_scenario(name, 3))
    assert t.count(DELIVERED) + t.count(DROPPED) + t.count(INJECTED) == len(t)
    assert [e.index for e in t.entries] == list(range(len(t)))


def test_happy_key_agreement_and_timing():
    t = run_scenario(build_scenario("happy", 5))
    assert t.world.agree(0)
    assert [e.t_us for e in t.entries] == [1000, 2000, 3000, 4000]


def test_frame_cost_configurable():
    s = build_scenario("happy", 5)
    s.frame_cost_us = 250
    assert run_scenario(s)[-1].t_us == 1000


def test_tamper_every_mac_bit_of_request():
    dev = one_device()
    mac_len = dev[0].cfg.mac_len
    for pos in range(8 * mac_len):
        byte = -mac_len + pos // 8
        s = Scenario("tamper-bit", 0, dev, [Register(0), Deliver()], {0: TamperBit(byte, pos % 8)})
        t = run_scenario(s)
        assert t.final_events() == ["Rejected(MacMismatch)"], pos
        assert len(t) == 1


def test_drop_then_retransmit():
    s = Scenario("drop", 0, one_device(), [Register(0), Deliver(), Retransmit(0), Deliver()], {0: Drop()})
    t = run_scenario(s)
    assert t[0].verdict == DROPPED and t[0].event is None
    assert t.final_events() == ["Authenticated"]


def test_dropped_ack_then_retransmit():
    s = Scenario("drop-ack", 0, one_device(),
                 [Register(0), Deliver(), simnet.Command(0, wire.PhaseConfig(1, (1,))), Deliver(),
                  Retransmit(0), Deliver()], {3: Drop()})
    t = run_scenario(s)
    assert t.final_events() == ["Authenticated", "CommandApplied", "Rejected(SqnMismatch)"]
    assert t[-1].event.label == "Acknowledged"


def test_replay_index_out_of_range():
    s = Scenario("bad", 0, one_device(), [Replay(0)])
    with pytest.raises(ScriptIndexOutOfRange):
        run_scenario(s)


def test_reorder_must_cover_queue():
    s = Scenario("bad", 0, one_device(), [Register(0), Reorder((0, 1))])
    with pytest.raises(ScriptIndexOutOfRange):
        run_scenario(s)


def test_tamper_position_out_of_range():
    s = Scenario("bad", 0, one_device(), [Register(0), Deliver()], {0: TamperBit(500, 0)})
    with pytest.raises(ScriptIndexOutOfRange):
        run_scenario(s)


def test_uplink_injection_without_transaction():
    s = Scenario("inject", 0, one_device(), [Inject(b"\x02\x00", simnet.UPLINK, 0)])
    t = run_scenario(s)
    assert t[0].verdict == INJECTED
    assert t.final_events() == ["Rejected(NoPendingTransaction)"]


def test_downlink_injection_to_unknown_link():
    t = run_scenario(Scenario("inject", 0, one_device(), [Inject(b"\x01", simnet.DOWNLINK, 7)]))
    assert t.final_events() == ["Rejected(UnknownId)"]


def test_transcript_jsonl():
    t = run_scenario(build_scenario("rotation", 8))
    lines = [json.loads(x) for x in t.to_jsonl().splitlines()]
    assert len(lines) == len(t)
    assert lines[0]["frame"] == t[0].frame.hex()
    assert lines[0]["decoded"]["type"] == "RisRequest"
    assert lines[1]["event"] == {"endpoint": "ris-function", "event": "Authenticated"}


def test_unknown_scenario():
    with pytest.raises(KeyError):
        build_scenario("nope")


# privacy

def _device_ids(t, i=0):
    dev = t.world.devices[i]
    return dev.default_id, dev.ctx.temp_id_history + [dev.temp_id], dev.ctx.shared_secret


def test_privacy_happy():
    t = run_scenario(build_scenario("happy", 0))
    default_id, temp_ids, secret = _device_ids(t)
    report = assert_privacy(t, default_id, temp_ids, [secret], [t.world.devices[0].key])
    assert report.passed and report.failures == []


def test_privacy_after_rotation():
    t = run_scenario(build_scenario("rotation", 0))
    default_id, temp_ids, secret = _device_ids(t)
    assert len(temp_ids) == 2
    assert assert_privacy(t, default_id, temp_ids, [secret])
    first_new = next(e.index for e in t.entries if temp_ids[1] in e.frame)
    assert not any(temp_ids[0] in e.frame for e in t.entries[first_new:])


def test_privacy_flags_default_id_twice():
    default_id = bytes.fromhex("DEFA0001")
    t = Transcript("hand-built", 0)
    t.entries.append(TranscriptEntry(0, 1000, "DL", 0, b"\x01\x04" + default_id, DELIVERED))
    t.entries.append(TranscriptEntry(1, 2000, "UL", 0, b"\x02xx" + default_id + b"yy", DELIVERED))
    report = assert_privacy(t, default_id, [])
    assert not report.passed
    assert "[0, 1]" in report.failures[0]


def test_privacy_flags_secret_and_stale_temp_id():
    t = Transcript("hand-built", 0)
    frames = [b"\x03AAAAAAAA..", b"\x03BBBBBBBB..", b"\x03AAAAAAAA.."]
    for i, f in enumerate(frames):
        t.entries.append(TranscriptEntry(i, 1000 * (i + 1), "DL", 0, f, DELIVERED))
    report = assert_privacy(t, b"\xde\xfa", [b"AAAAAAAA", b"BBBBBBBB"], secrets=[b"BBBBBBBB.."],
                            registrations=0)
    assert not report.passed
    assert any("stale" in f and "[2]" in f for f in report.failures)
    assert any("secret" in f for f in report.failures)


@pytest.mark.parametrize("name", simnet.SCENARIOS)
def test_privacy_holds_in_every_standard_scenario(name):
    t = run_scenario(build_scenario(name, 11))
    for dev in t.world.devices:
        temp_ids = dev.ctx.temp_id_history + ([dev.temp_id] if dev.temp_id else [])
        report = assert_privacy(t, dev.default_id, temp_ids, [dev.ctx.shared_secret])
        assert report.passed, report.failures


def test_privacy_ignores_adversary_copies_but_not_leaked_keys():
    t = Transcript("hand-built", 0)
    req = b"\x01\x02\xde\xfa"
    t.entries.append(TranscriptEntry(0, 1000, "DL", 0, req, DELIVERED))
    t.entries.append(TranscriptEntry(1, 2000, "DL", 0, req + b"KEYKEYKEYKEY", INJECTED))
    assert not assert_privacy(t, b"\xde\xfa", [], keys=[b"KEYKEYKEYKEY"]).passed
    assert assert_privacy(t, b"\xde\xfa", []).passed
