"""Scripted attack battery over the simulator.

Each check builds fresh networks from a seed, lets the adversary watch one or
more honest sessions, and then plays a scripted session.  Step numbers and
store indices are taken from an honest reference run with the same seed; the
simulator is deterministic, so the scripted run sees the same bytes up to the
point where the adversary intervenes.

Properties:

``mutual-auth``
    honest runs agree on K_AF at device, AMF and UDM and deliver the data.
``replay``
    every stored wireless message replayed at every wireless step, plus a
    whole-session replay, never produces an AMF ACCEPT.
``tamper``
    every single-bit flip of the Challenge or DataResponse ends in a REJECT
    and never in an ACCEPT.
``impersonation``
    a device or network without K, or random injected messages, never pass.
``mitm``
    relabelled responses, challenges forged under another key and indicator
    downgrades are all refused.
``linkability``
    over many sessions the air TIDs are all distinct and neither the AIoT ID
    nor any TID_new ever appears on air before it is used.
``ue-authorization``
    relay scenarios deny a device the UE has no mapping for.
``drop-recovery``
    dropping any one wireless message leaves state from which a fresh honest
    session succeeds.
"""

from __future__ import annotations

import random
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

from .messages import Basis, MsgType, UdmAuthRequest, Variant
from .protocol import Mutation, udm_build_response
from .registry import UdmRegistry
from .sim import WAKE, Drop, Inject, Network, Replay, Scenario, Script, Tamper

PROPERTIES = (
    "mutual-auth",
    "replay",
    "tamper",
    "impersonation",
    "mitm",
    "linkability",
    "ue-authorization",
    "drop-recovery",
)


@dataclass
class PropertyResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f": {self.detail}" if self.detail else ""
        return f"{status} {self.name} ({self.cases} cases){tail}"


@dataclass
class SuiteReport:
    variant: Variant
    mutation: Mutation
    results: list[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> PropertyResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        head = f"# attack suite variant={self.variant} mutation={self.mutation.value}"
        return "\n".join([head, *(r.line() for r in self.results)]) + "\n"


class _Check:
    """Counts cases and keeps the first counterexample."""

    def __init__(self, name: str):
        self.name = name
        self.cases = 0
        self.failure = ""

    def expect(self, ok: bool, what: str) -> None:
        self.cases += 1
        if not ok and not self.failure:
            self.failure = what

    def result(self) -> PropertyResult:
        return PropertyResult(self.name, not self.failure, self.cases, self.failure)


@dataclass
class _Reference:
    """What the adversary learns from an honest run with the same seed."""

    air_steps: list[tuple[int, str, bytes, int]]  # (step, label, payload, store size before it)
    sqn_before: int
    request: bytes

    def steps_labelled(self, label: str) -> list[tuple[int, bytes]]:
        return [(s, p) for s, lab, p, _ in self.air_steps if lab == label]


def _reference(scenario, variant, seed, warmup, **kw) -> tuple[_Reference, list[bytes]]:
    net = Network(scenario, variant, seed, **kw)
    for _ in range(warmup):
        net.run_session()
    sqn_before = net.device.sqn_ue
    net.run_session()
    session = len(net.transcript.sessions)
    store_size, steps, old = 0, [], []
    for r in net.transcript.air_records():
        if r.label == WAKE:
            continue
        if r.session == session:
            steps.append((r.step, r.label, r.payload, store_size))
        else:
            old.append(r.payload)
        store_size += 1
    request = next(p for _, lab, p, _ in steps if lab == "AUTH_REQUEST")
    return _Reference(steps, sqn_before, request), old


def _attacked(scenario, variant, seed, script: Script, warmup=1, **kw) -> Network:
    net = Network(scenario, variant, seed, **kw)
    for _ in range(warmup):
        net.run_session()
    net.run_session(script)
    return net


def _forge_challenge(variant: Variant, ref: _Reference, rng: random.Random) -> bytes:
    """A well-formed challenge produced by someone holding a key other than K.

    The forger reuses everything visible on air (the live R1) and even guesses
    the next SQN correctly; only the key is wrong.
    """
    reg = UdmRegistry()
    rec, _ = reg.provision_device(rng.randbytes(16), rng.randbytes(16), ref.sqn_before, rng)
    r1 = ref.request[18:34] if variant.basis is Basis.NONCE else None
    secret = rng.randbytes(16) if variant.basis is Basis.PLK else None
    req = UdmAuthRequest(tid=rec.tid, indicator=int(variant.indicator), r1=r1, secret=secret)
    resp, _ = udm_build_response(reg, rec, req, variant, rng)
    return resp.challenge(variant).to_bytes(variant)


def _no_accept(net: Network) -> bool:
    v = net.transcript.last.verdicts
    return v.get("AMF") != "ACCEPT" and v.get("UDM") != "RESYNCED"


def _device_refused(net: Network) -> bool:
    return net.transcript.last.verdicts.get("Device", "REJECT").startswith("REJECT")


def _rejected(net: Network) -> bool:
    v = net.transcript.last.verdicts
    return _no_accept(net) and any(x.startswith("REJECT") for x in v.values())


def check_mutual_auth(variant, seed, scenarios, **kw) -> PropertyResult:
    chk = _Check("mutual-auth")
    for sc in scenarios:
        net = Network(sc, variant, seed, **kw)
        for _ in range(3):
            s = net.run_session()
            keys = set(s.k_af.values())
            ok = (s.accepted and len(s.k_af) == 3 and len(keys) == 1 and s.data_out == s.data_in
                  and s.tid_after != s.tid_before and net.device.tid == net.record.tid)
            chk.expect(ok, f"S{sc} session {s.session}: {s.verdicts}")
    return chk.result()


def check_replay(variant, seed, scenarios, **kw) -> PropertyResult:
    chk = _Check("replay")
    for sc in scenarios:
        ref, old = _reference(sc, variant, seed, 1, **kw)
        for step, label, _, store_size in ref.air_steps:
            for idx in range(store_size):
                net = _attacked(sc, variant, seed, {step: Replay(idx)}, **kw)
                chk.expect(_no_accept(net), f"S{sc} replay store[{idx}] at step {step} ({label})")
        # whole previous session: old request, then old response in place of the new one
        req_step = ref.steps_labelled("AUTH_REQUEST")[0][0]
        data_step = ref.steps_labelled("DATA_RESPONSE")[0][0]
        old_req = old.index(next(p for p in old if p[0] == MsgType.AUTH_REQUEST))
        old_data = old.index(next(p for p in old if p[0] == MsgType.DATA_RESPONSE))
        net = _attacked(sc, variant, seed, {req_step: Replay(old_req)}, **kw)
        chk.expect(_no_accept(net), f"S{sc} replayed initial message")
        net = _attacked(sc, variant, seed, {req_step: Replay(old_req), data_step: Replay(old_data)}, **kw)
        chk.expect(_no_accept(net), f"S{sc} replayed request and response")
    return chk.result()


def check_tamper(variant, seed, scenarios, **kw) -> PropertyResult:
    chk = _Check("tamper")
    for sc in scenarios:
        ref, _ = _reference(sc, variant, seed, 1, **kw)
        for label in ("CHALLENGE", "DATA_RESPONSE"):
            for step, payload in ref.steps_labelled(label):
                for offset in range(len(payload)):
                    for bit in range(8):
                        net = _attacked(sc, variant, seed, {step: Tamper(offset, 1 << bit)}, **kw)
                        chk.expect(_rejected(net), f"S{sc} {label} byte {offset} bit {bit}")
    return chk.result()


def check_impersonation(variant, seed, scenarios, mutation=Mutation.NONE, **kw) -> PropertyResult:
    chk = _Check("impersonation")
    rng = random.Random(f"{seed}/impersonator")
    for sc in scenarios:
        # a device without K that does not bother verifying anything
        net = Network(sc, variant, seed, mutation=mutation, device_key=rng.randbytes(16),
                      device_mutation=Mutation.SKIP_MAC_VERIFY, **kw)
        net.run_session()
        chk.expect(_no_accept(net), f"S{sc} device without K")
        # a network without K
        net = Network(sc, variant, seed, mutation=mutation, network_key=rng.randbytes(16), **kw)
        net.run_session()
        chk.expect(_device_refused(net) and _no_accept(net), f"S{sc} network without K")
        # random well-sized injections toward each side
        ref, _ = _reference(sc, variant, seed, 1, mutation=mutation, **kw)
        for label in ("CHALLENGE", "DATA_RESPONSE"):
            for step, payload in ref.steps_labelled(label):
                for _ in range(8):
                    raw = payload[:1] + rng.randbytes(len(payload) - 1)
                    net = _attacked(sc, variant, seed, {step: Inject(raw)}, mutation=mutation, **kw)
                    ok = _no_accept(net) and (label != "CHALLENGE" or _device_refused(net))
                    chk.expect(ok, f"S{sc} injected {label}")
    return chk.result()


def check_mitm(variant, seed, scenarios, mutation=Mutation.NONE, **kw) -> PropertyResult:
    chk = _Check("mitm")
    rng = random.Random(f"{seed}/mitm")
    for sc in scenarios:
        ref, _ = _reference(sc, variant, seed, 1, mutation=mutation, **kw)
        ch_step = ref.steps_labelled("CHALLENGE")[0][0]
        data_step = ref.steps_labelled("DATA_RESPONSE")[0][0]
        req_step = ref.steps_labelled("AUTH_REQUEST")[0][0]

        # present the data response as a resync message
        relabel = (MsgType.DATA_RESPONSE ^ MsgType.RESYNC_RESPONSE)
        net = _attacked(sc, variant, seed, {data_step: Tamper(0, relabel)}, mutation=mutation, **kw)
        chk.expect(_no_accept(net), f"S{sc} data relabelled as resync")

        forged = _forge_challenge(variant, ref, rng)
        net = _attacked(sc, variant, seed, {ch_step: Inject(forged)}, mutation=mutation, **kw)
        chk.expect(_device_refused(net) and _no_accept(net), f"S{sc} challenge forged under another key")

        # flip the cipher-suite indicator in the device's request
        net = _attacked(sc, variant, seed, {req_step: Tamper(17, 1)}, mutation=mutation, **kw)
        chk.expect(_no_accept(net), f"S{sc} indicator downgrade")
        s = net.transcript.last
        chk.expect(s.verdicts.get("Device", "").startswith("REJECT") or "Device" not in s.verdicts,
                   f"S{sc} device answered a downgraded challenge")
    return chk.result()


def check_linkability(variant, seed, scenarios, sessions=100, **kw) -> PropertyResult:
    chk = _Check("linkability")
    for sc in scenarios:
        net = Network(sc, variant, seed, **kw)
        air_tids, seen_air = [], []
        for _ in range(sessions):
            s = net.run_session()
            air = [r.payload for r in net.transcript.air_records(s.session)]
            seen_air.extend(air)
            air_tids += [p[1:17] for p in air if p[:1] == bytes([MsgType.AUTH_REQUEST])]
            chk.expect(s.tid_new is not None and not any(s.tid_new in p for p in seen_air),
                       f"S{sc} TID_new of session {s.session} seen on air")
        chk.expect(len(set(air_tids)) == sessions == len(air_tids),
                   f"S{sc} {len(set(air_tids))} distinct air TIDs over {sessions} sessions")
        chk.expect(not any(net.record.aiot_id in p for p in seen_air), f"S{sc} AIoT ID on air")
    return chk.result()


def check_ue_authorization(variant, seed, **kw) -> PropertyResult:
    chk = _Check("ue-authorization")
    for sc in (Scenario.S3, Scenario.S4):
        net = Network(sc, variant, seed, ue_maps_device=False, **kw)
        s = net.run_session()
        chk.expect(s.verdicts.get("UE") == "DENY" and not s.accepted, f"S{sc} unmapped device: {s.verdicts}")
        # the mapped device still passes after several rotations
        net = Network(sc, variant, seed, **kw)
        for _ in range(3):
            s = net.run_session()
            chk.expect(s.verdicts.get("UE") == "ALLOW" and s.accepted, f"S{sc} mapped device: {s.verdicts}")
    return chk.result()


def check_drop_recovery(variant, seed, scenarios, **kw) -> PropertyResult:
    chk = _Check("drop-recovery")
    for sc in scenarios:
        ref, _ = _reference(sc, variant, seed, 1, **kw)
        for step, label, _, _ in ref.air_steps:
            net = _attacked(sc, variant, seed, {step: Drop()}, **kw)
            s = net.run_session()
            ok = s.accepted and net.device.tid == net.record.tid
            if net.scenario.relayed:
                ok = ok and net.ue_table.get(net.record.aiot_id).tid == net.device.tid
            chk.expect(ok, f"S{sc} drop {label} at step {step}: next session {s.verdicts}")
    return chk.result()


def attack_suite(
    variant: Variant,
    *,
    seed: int = 0,
    mutation: Mutation | str = Mutation.NONE,
    properties: Iterable[str] | None = None,
    scenarios: Iterable[int] = (1, 2, 3, 4),
    sessions: int = 100,
) -> SuiteReport:
    """Run the battery against one variant and report pass/fail per property.

    ``mutation`` is applied to the honest parties; ``Mutation.SKIP_MAC_VERIFY``
    is the negative control and must make the tamper, impersonation and mitm
    properties fail.
    """
    mutation = Mutation(mutation)
    wanted = list(properties) if properties is not None else list(PROPERTIES)
    unknown = set(wanted) - set(PROPERTIES)
    if unknown:
        raise ValueError(f"unknown properties: {sorted(unknown)}")
    scenarios = tuple(Scenario(s) for s in scenarios)
    kw = {"mutation": mutation}
    runners: dict[str, Callable[[], PropertyResult]] = {
        "mutual-auth": lambda: check_mutual_auth(variant, seed, scenarios, **kw),
        "replay": lambda: check_replay(variant, seed, scenarios, **kw),
        "tamper": lambda: check_tamper(variant, seed, scenarios, **kw),
        "impersonation": lambda: check_impersonation(variant, seed, scenarios, mutation),
        "mitm": lambda: check_mitm(variant, seed, scenarios, mutation),
        "linkability": lambda: check_linkability(variant, seed, scenarios, sessions, **kw),
        "ue-authorization": lambda: check_ue_authorization(variant, seed, **kw),
        "drop-recovery": lambda: check_drop_recovery(variant, seed, scenarios, **kw),
    }
    report = SuiteReport(variant, mutation)
    for name in PROPERTIES:
        if name in wanted:
            report.results.append(runners[name]())
    return report


__all__ = ["PROPERTIES", "PropertyResult", "SuiteReport", "attack_suite"]
