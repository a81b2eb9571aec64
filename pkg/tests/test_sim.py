import json

import pytest

from aiot_aka.messages import ALL_VARIANTS, Basis, Indicator, MsgType, Variant
from aiot_aka.sim import (
    Drop, Forward, Inject, LinkSecurity, Network, Replay, Scenario, Tamper, Topology, action_from_dict,
    dump_script, load_script, run_honest, run_with_adversary,
)

COMBOS = [(s, v) for v in ALL_VARIANTS for s in Scenario]


@pytest.mark.parametrize("scenario,variant", COMBOS, ids=lambda x: str(x))
def test_honest_runs(scenario, variant):
    tr = run_honest(scenario, variant, seed=11)
    s = tr.last
    assert s.accepted and s.verdicts["UDM"] == "COMMIT"
    assert len(s.k_af) == 3 and len(set(s.k_af.values())) == 1
    assert s.data_out == s.data_in
    assert s.tid_after != s.tid_before
    if scenario.relayed:
        assert s.verdicts["UE"] == "ALLOW"


def test_same_seed_same_transcript():
    v = Variant(Basis.PLK, 1)
    assert run_honest(4, v, 3).dump() == run_honest(4, v, 3).dump()
    assert run_honest(4, v, 3).dump() != run_honest(4, v, 4).dump()


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=str)
@pytest.mark.parametrize("relayed", [False, True])
def test_network_initiated_air_transcript_matches(variant, relayed):
    a, b = (Scenario.S3, Scenario.S4) if relayed else (Scenario.S1, Scenario.S2)
    air = lambda tr: [(r.label, r.payload) for r in tr.air_records()]  # noqa: E731
    assert air(run_honest(a, variant, 9)) == air(run_honest(b, variant, 9))


def test_scenario4_wakes_through_the_ue():
    tr = run_honest(4, ALL_VARIANTS[0], 1)
    wake = [r for r in tr.records if r.label in ("WAKE_REQ", "WAKE")]
    assert [r.dst for r in wake][-2:] == ["UE", "Device"]
    assert wake[-1].src == "UE"


def test_topology_hops():
    t1, t3 = Topology.for_scenario(1), Topology.for_scenario(3)
    assert t1.chain == ("Device", "gNB", "AMF", "UDM")
    assert t3.chain == ("Device", "UE", "gNB", "AMF", "UDM")
    assert t3.link("UE", "gNB").security is LinkSecurity.SECURE_UE
    assert Topology.for_scenario(2).link("NEF", "UDM").security is LinkSecurity.SECURE_WIRED
    for sc in Scenario:
        assert [(ln.a, ln.b) for ln in Topology.for_scenario(sc).adversary_links()] == \
            [("Device", Topology.for_scenario(sc).access)]


def test_wired_hops_never_touched():
    v = Variant(Basis.SQN, 1)
    net = Network(3, v, 2)
    net.run_session()
    n = len(net.transcript.records)
    net.run_session({i: Tamper(0, 0xFF) for i in range(100)})
    for r in net.transcript.records[n:]:
        if not r.on_air:
            assert r.action == "FORWARD"
    assert any(r.action != "FORWARD" for r in net.transcript.records[n:])


def test_transcript_dump_format():
    text = run_honest(1, ALL_VARIANTS[0], 0).dump()
    for line in text.splitlines():
        if line.startswith("#"):
            continue
        step, direction, kind, payload = line.split()
        assert step.isdigit() and "->" in direction
        assert payload == "-" or bytes.fromhex(payload)


def test_s3_unmapped_device_denied():
    net = Network(3, ALL_VARIANTS[0], 0, ue_maps_device=False)
    s = net.run_session()
    assert s.verdicts == {"UE": "DENY"}


def test_tid_stays_in_sync_across_sessions():
    for v in ALL_VARIANTS:
        net = Network(3, v, 5)
        for _ in range(5):
            net.run_session()
            assert net.device.tid == net.record.tid == net.ue_table.get(net.record.aiot_id).tid


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=str)
def test_drop_then_recover(variant):
    ref = Network(1, variant, 8)
    ref.run_session()
    ref.run_session()
    air_steps = [r.step for r in ref.transcript.air_records(2) if r.label != "WAKE"]
    for step in air_steps:
        tr = run_with_adversary(1, variant, 8, {step: Drop()})
        assert not tr.last.accepted
        net = Network(1, variant, 8)
        net.run_session()
        net.run_session({step: Drop()})
        assert net.run_session().accepted


def test_replay_of_full_prior_data_response_rejected():
    v = Variant(Basis.NONCE, 0)
    ref = Network(1, v, 4)
    ref.run_session()
    ref.run_session()
    recs = ref.transcript.air_records()
    stored = [r for r in recs if r.label != "WAKE"]
    old_data = next(i for i, r in enumerate(stored) if r.session == 1 and r.label == "DATA_RESPONSE")
    step = next(r.step for r in stored if r.session == 2 and r.label == "DATA_RESPONSE")
    tr = run_with_adversary(1, v, 4, {step: Replay(old_data)})
    assert tr.last.verdicts["AMF"].startswith("REJECT")


def test_inject_malformed_challenge():
    v = Variant(Basis.SQN, 0)
    ref = run_honest(1, v, 0)
    step = next(r.step for r in ref.air_records() if r.label == "CHALLENGE")
    tr = run_with_adversary(1, v, 0, {step: Inject(b"\x04\x00")}, warmup=0)
    assert tr.last.verdicts["Device"] == "REJECT(MALFORMED)"


def test_script_json_round_trip(tmp_path):
    script = {1: Forward(), 2: Drop(), 3: Replay(0), 4: Tamper(5, 0x80), 6: Inject(b"\x01\x02")}
    path = tmp_path / "s.json"
    path.write_text(dump_script(script))
    assert load_script(path) == script
    assert json.loads(path.read_text())[3] == {"step": 4, "action": "TAMPER", "args": {"offset": 5, "mask": 128}}
    with pytest.raises(ValueError):
        action_from_dict({"step": 0, "action": "EXPLODE"})


def test_device_ops_match_variant():
    s = run_honest(1, Variant(Basis.NONCE, 1), 0).last
    assert [str(op) for op in s.device_ops] == ["ASCON_SEAL(384)", "ASCON_SEAL(128)"]


@pytest.mark.parametrize("scenario", [1, 3])
@pytest.mark.parametrize("kind", [MsgType.UDM_AUTH_REQUEST, MsgType.UDM_AUTH_RESPONSE, MsgType.AUTH_SUCCESS])
def test_core_message_types_injected_on_air_are_dropped_at_access(scenario, kind):
    v = Variant(Basis.SQN, Indicator.TRADITIONAL)
    net = Network(scenario, v, 5)
    net.run_session()
    ref = Network(scenario, v, 5)
    ref.run_session()
    ref.run_session()
    resp_step = next(r.step for r in ref.transcript.records
                     if r.session == 2 and r.label == "DATA_RESPONSE" and r.src == "Device")
    forged = bytes([kind]) + bytes(120)
    s = net.run_session({resp_step: Inject(forged)})
    assert not s.accepted
    assert s.verdicts.get(net.topology.access) == "REJECT(MALFORMED)"
    assert not any(r.src == net.topology.access and r.payload[:1] == bytes([kind])
                   for r in net.transcript.records if r.session == 2 and r.step > resp_step)
