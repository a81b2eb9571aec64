"""In-process network simulator with an active wireless adversary.

A :class:`Network` holds one provisioned device and the serving/home network
for one of the four connectivity scenarios.  Each call to
:meth:`Network.run_session` plays one authentication over a deterministic
event loop: every hop of every message is one logical step, and on wireless
hops the :class:`Adversary` may forward, drop, replay, tamper with, or replace
the message.  Everything observed is appended to a :class:`Transcript`.

All randomness is drawn from per-entity streams derived from the seed, so a
(seed, scenario, variant, script) tuple always produces the same transcript.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path
from typing import Union

from . import crypto
from .errors import AkaError, IntegrityError, NotFoundError, ReplayError, WireFormatError
from .messages import (
    AuthRequest,
    AuthSuccess,
    Basis,
    Challenge,
    DataResponse,
    Indicator,
    MsgType,
    NefTrigger,
    ResyncResponse,
    TargetKind,
    TidUpdateToUe,
    UdmAuthRequest,
    UdmAuthResponse,
    Variant,
    decode,
    type_name,
)
from .protocol import (
    DEFAULT_WINDOW,
    Accept,
    ForwardResync,
    Mutation,
    Reject,
    RejectReason,
    Udm,
    access_forward_request,
    amf_forward_challenge,
    amf_verify_device_response,
    device_begin,
    device_on_challenge,
    nef_trigger,
)
from .registry import Authorization, UdmRegistry, UeMappingTable

WAKE = "WAKE"
WAKE_REQ = "WAKE_REQ"
MAX_STEPS = 200


class Scenario(IntEnum):
    S1 = 1  # direct, device-initiated
    S2 = 2  # direct, network-initiated
    S3 = 3  # relay-assisted, device-initiated
    S4 = 4  # relay-assisted, network-initiated

    @property
    def relayed(self) -> bool:
        return self in (Scenario.S3, Scenario.S4)

    @property
    def network_initiated(self) -> bool:
        return self in (Scenario.S2, Scenario.S4)


class LinkSecurity(str, Enum):
    WIRELESS = "WIRELESS"
    SECURE_WIRED = "SECURE_WIRED"
    SECURE_UE = "SECURE_UE"


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    security: LinkSecurity


@dataclass(frozen=True)
class Topology:
    scenario: Scenario
    chain: tuple[str, ...]
    links: tuple[Link, ...]

    @classmethod
    def for_scenario(cls, scenario: int | Scenario) -> Topology:
        scenario = Scenario(scenario)
        wired = LinkSecurity.SECURE_WIRED
        if scenario.relayed:
            chain = ("Device", "UE", "gNB", "AMF", "UDM")
            links = [Link("Device", "UE", LinkSecurity.WIRELESS),
                     Link("UE", "gNB", LinkSecurity.SECURE_UE)]
        else:
            chain = ("Device", "gNB", "AMF", "UDM")
            links = [Link("Device", "gNB", LinkSecurity.WIRELESS)]
        links += [Link("gNB", "AMF", wired), Link("AMF", "UDM", wired)]
        if scenario.network_initiated:
            links.append(Link("NEF", "UDM", wired))
        return cls(scenario, chain, tuple(links))

    @property
    def access(self) -> str:
        """The node the device talks to over the air."""
        return self.chain[1]

    def link(self, a: str, b: str) -> Link:
        for ln in self.links:
            if {ln.a, ln.b} == {a, b}:
                return ln
        raise KeyError(f"no link {a}-{b}")

    def neighbours(self, node: str) -> list[str]:
        return [ln.b if ln.a == node else ln.a for ln in self.links if node in (ln.a, ln.b)]

    def next_hop(self, here: str, dst: str) -> str:
        # breadth-first search over a handful of nodes
        prev = {here: None}
        queue = deque([here])
        while queue:
            node = queue.popleft()
            if node == dst:
                break
            for nxt in self.neighbours(node):
                if nxt not in prev:
                    prev[nxt] = node
                    queue.append(nxt)
        if dst not in prev:
            raise KeyError(f"{dst} unreachable from {here}")
        node = dst
        while prev[node] != here:
            node = prev[node]
        return node

    def adversary_links(self) -> list[Link]:
        return [ln for ln in self.links if ln.security is LinkSecurity.WIRELESS]


# --- adversary ---------------------------------------------------------------


@dataclass(frozen=True)
class Forward:
    def __str__(self):
        return "FORWARD"


@dataclass(frozen=True)
class Drop:
    def __str__(self):
        return "DROP"


@dataclass(frozen=True)
class Replay:
    index: int

    def __str__(self):
        return f"REPLAY({self.index})"


@dataclass(frozen=True)
class Tamper:
    offset: int
    mask: int

    def __str__(self):
        return f"TAMPER({self.offset},0x{self.mask:02x})"


@dataclass(frozen=True)
class Inject:
    raw: bytes

    def __str__(self):
        return f"INJECT({self.raw.hex()})"


AdversaryAction = Union[Forward, Drop, Replay, Tamper, Inject]
Script = dict[int, AdversaryAction]


def action_from_dict(d: dict) -> tuple[int, AdversaryAction]:
    """Parse one attack-script entry ``{"step": n, "action": name, "args": {...}}``."""
    step, name, args = int(d["step"]), d["action"].upper(), d.get("args", {})
    if name == "FORWARD":
        return step, Forward()
    if name == "DROP":
        return step, Drop()
    if name == "REPLAY":
        return step, Replay(int(args["index"]))
    if name == "TAMPER":
        return step, Tamper(int(args["offset"]), int(args["mask"]))
    if name == "INJECT":
        return step, Inject(bytes.fromhex(args["raw"]))
    raise ValueError(f"unknown adversary action {name!r}")


def action_to_dict(step: int, action: AdversaryAction) -> dict:
    args = {}
    if isinstance(action, Replay):
        args = {"index": action.index}
    elif isinstance(action, Tamper):
        args = {"offset": action.offset, "mask": action.mask}
    elif isinstance(action, Inject):
        args = {"raw": action.raw.hex()}
    return {"step": step, "action": str(action).split("(")[0], "args": args}


def load_script(path: str | Path) -> Script:
    entries = json.loads(Path(path).read_text())
    return dict(action_from_dict(e) for e in entries)


def dump_script(script: Script) -> str:
    return json.dumps([action_to_dict(s, a) for s, a in sorted(script.items())], indent=2)


class Adversary:
    """Dolev-Yao style controller of the wireless hops, driven by a fixed script."""

    def __init__(self) -> None:
        self.store: list[bytes] = []
        self.script: Script = {}

    def intercept(self, step: int, payload: bytes) -> tuple[bytes | None, AdversaryAction]:
        action = self.script.get(step, Forward())
        delivered: bytes | None
        if isinstance(action, Forward):
            delivered = payload
        elif isinstance(action, Drop):
            delivered = None
        elif isinstance(action, Replay):
            if not -len(self.store) <= action.index < len(self.store):
                raise ValueError(f"replay index {action.index} at step {step}: only {len(self.store)} messages stored")
            delivered = self.store[action.index]
        elif isinstance(action, Tamper):
            buf = bytearray(payload)
            if action.offset < len(buf):
                buf[action.offset] ^= action.mask
            delivered = bytes(buf)
        else:
            delivered = action.raw
        self.store.append(payload)
        return delivered, action


# --- transcript --------------------------------------------------------------


@dataclass(frozen=True)
class Record:
    session: int
    step: int
    src: str
    dst: str
    security: LinkSecurity
    label: str
    payload: bytes
    action: str = "FORWARD"
    original: bytes | None = None

    @property
    def on_air(self) -> bool:
        return self.security is LinkSecurity.WIRELESS

    def line(self) -> str:
        return f"{self.step} {self.src}->{self.dst} {self.label} {self.payload.hex() or '-'}"


@dataclass
class SessionSummary:
    session: int
    verdicts: dict[str, str]
    data_in: bytes
    data_out: bytes | None = None
    k_af: dict[str, bytes] = field(default_factory=dict)
    tid_before: bytes = b""
    tid_after: bytes = b""
    tid_new: bytes | None = None
    device_ops: list[crypto.Op] = field(default_factory=list)
    device_events: list[tuple[crypto.Op, int]] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.verdicts.get("AMF") == "ACCEPT"

    @property
    def rejected(self) -> bool:
        return any(v.startswith("REJECT") or v == "DENY" for v in self.verdicts.values())


@dataclass
class Transcript:
    scenario: Scenario
    variant: Variant
    seed: int
    records: list[Record] = field(default_factory=list)
    sessions: list[SessionSummary] = field(default_factory=list)

    @property
    def verdicts(self) -> dict[str, str]:
        return self.sessions[-1].verdicts if self.sessions else {}

    @property
    def last(self) -> SessionSummary:
        return self.sessions[-1]

    def air_records(self, session: int | None = None) -> list[Record]:
        return [r for r in self.records if r.on_air and (session is None or r.session == session)]

    def dump(self) -> str:
        lines = [f"# scenario={int(self.scenario)} variant={self.variant} seed={self.seed}"]
        current = None
        for r in self.records:
            if r.session != current:
                current = r.session
                lines.append(f"# session {current}")
            if r.action != "FORWARD":
                lines.append(f"# adversary {r.action} at step {r.step}")
            lines.append(r.line())
        for s in self.sessions:
            verdicts = " ".join(f"{k}={v}" for k, v in sorted(s.verdicts.items()))
            lines.append(f"# verdicts session {s.session}: {verdicts}")
        return "\n".join(lines) + "\n"


@dataclass
class _Envelope:
    at: str
    dst: str
    payload: bytes
    label: str
    meta: dict = field(default_factory=dict)


def _stream(seed: int, label: str) -> random.Random:
    return random.Random(f"{seed}/{label}")


class Network:
    """One device plus the network entities for a scenario.

    ``mutation`` applies to every honest party (device, AMF, UDM).
    ``device_key``/``network_key`` replace the device's or the home network's
    long-term key to model an impersonator who does not hold K, and
    ``device_mutation`` lets such an impersonating device skip its own checks.
    """

    def __init__(
        self,
        scenario: int | Scenario,
        variant: Variant,
        seed: int,
        *,
        window: int = DEFAULT_WINDOW,
        mutation: Mutation = Mutation.NONE,
        initial_sqn: int = 0,
        ue_maps_device: bool = True,
        data_len: int = 16,
        device_key: bytes | None = None,
        network_key: bytes | None = None,
        device_mutation: Mutation | None = None,
    ):
        self.scenario = Scenario(scenario)
        self.variant = variant
        self.seed = seed
        self.window = window
        self.mutation = Mutation(mutation)
        self.device_mutation = Mutation(device_mutation) if device_mutation else self.mutation
        self.data_len = data_len
        self.topology = Topology.for_scenario(self.scenario)

        prov = _stream(seed, "provision")
        k, aiot_id = prov.randbytes(16), prov.randbytes(16)
        self.registry = UdmRegistry()
        self.record, self.device = self.registry.provision_device(k, aiot_id, initial_sqn, prov)
        if device_key is not None:
            self.device.k = device_key
        if network_key is not None:
            self.record.k = network_key

        self.ue_id = prov.randbytes(16)
        self.ue_table = UeMappingTable()
        if self.scenario.relayed and ue_maps_device:
            self.ue_table.add(self.ue_id, aiot_id, self.device.tid)

        self._nonce_rng = _stream(seed, "device-nonces")
        self._device_secrets = _stream(seed, "plk-secret")
        self._access_secrets = _stream(seed, "plk-secret")
        self._data_rng = _stream(seed, "data")
        self.access_secret: bytes | None = None

        relay = (lambda a: "UE") if self.scenario.relayed else (lambda a: None)
        self.udm = Udm(self.registry, _stream(seed, "udm"), relay_of=relay)
        self.amf_request: UdmAuthRequest | None = None
        self.amf_ctx = None
        self.adversary = Adversary()
        self.transcript = Transcript(self.scenario, variant, seed)

    # -- public API --

    def run_session(self, script: Script | None = None, data: bytes | None = None) -> SessionSummary:
        if data is None:
            data = self._data_rng.randbytes(self.data_len)
        session = len(self.transcript.sessions) + 1
        self.adversary.script = dict(script or {})
        self._summary = SessionSummary(session=session, verdicts={}, data_in=data,
                                       tid_before=self.device.tid)
        self._meter = crypto.OpMeter()
        self.amf_ctx = None
        self.amf_request = None

        queue: deque[_Envelope] = deque()
        if self.scenario.network_initiated:
            kind = TargetKind.UE if self.scenario.relayed else TargetKind.AMF
            trig = nef_trigger(self.registry, self.record.aiot_id, int(self.variant.indicator),
                               kind, self.ue_id if self.scenario.relayed else bytes(16))
            queue.append(_Envelope("NEF", "UDM", trig.to_bytes(self.variant), "NEF_TRIGGER"))
        else:
            queue.extend(self._access_wake())

        step = 0
        while queue and step < MAX_STEPS:
            env = queue.popleft()
            nxt = self.topology.next_hop(env.at, env.dst)
            link = self.topology.link(env.at, nxt)
            payload, action = env.payload, Forward()
            if link.security is LinkSecurity.WIRELESS and env.label != WAKE:
                payload, action = self.adversary.intercept(step, env.payload)
            label = env.label if env.label in (WAKE, WAKE_REQ) or payload is None else type_name(payload)
            self.transcript.records.append(Record(
                session, step, env.at, nxt, link.security, label,
                payload if payload is not None else b"", str(action),
                env.payload if payload != env.payload else None))
            step += 1
            if payload is None:
                continue
            if nxt != env.dst and not (env.at == "Device" and nxt == self.topology.access):
                queue.append(_Envelope(nxt, env.dst, payload, env.label, env.meta))
                continue
            queue.extend(self._deliver(nxt, env.at, payload, env.label, env.meta))

        self._summary.tid_after = self.device.tid
        self._summary.device_events = list(self._meter.events)
        self._summary.device_ops = self._meter.ops
        self.transcript.sessions.append(self._summary)
        return self._summary

    # -- event handlers --

    def _verdict(self, party: str, verdict) -> None:
        self._summary.verdicts[party] = str(verdict)

    def _access_wake(self) -> list[_Envelope]:
        if self.variant.basis is Basis.PLK:
            self.access_secret = self._access_secrets.randbytes(16)
        return [_Envelope(self.topology.access, "Device", b"", WAKE)]

    def _deliver(self, node: str, sender: str, payload: bytes, label: str, meta: dict) -> list[_Envelope]:
        if node == "Device":
            with crypto.metering(self._meter):
                return self._device(payload, label)
        if node == self.topology.access and sender == "Device":
            return self._access_from_device(payload)
        if node == "UE":
            return self._ue_control(payload, label)
        if node == "gNB":
            return self._access_wake() if label == WAKE_REQ else []
        if node == "AMF":
            return self._amf(payload, sender, meta)
        if node == "UDM":
            return self._udm(payload, meta)
        return []

    def _device(self, payload: bytes, label: str) -> list[_Envelope]:
        dev = self.device
        if label == WAKE:
            if self.variant.basis is Basis.PLK:
                dev.secret = self._device_secrets.randbytes(16)
            if self.variant.basis is Basis.NONCE and not dev.nonce_queue:
                dev.refill_nonces(self._nonce_rng, 8)
            req = device_begin(dev, self.variant)
            return [_Envelope("Device", self.topology.access, req.to_bytes(self.variant), "AUTH_REQUEST")]
        try:
            ch = Challenge.from_bytes(payload, self.variant)
        except WireFormatError:
            dev.session = {}
            self._verdict("Device", Reject(RejectReason.MALFORMED))
            return []
        out = device_on_challenge(dev, ch, self._summary.data_in, self.window, self.device_mutation)
        if isinstance(out, Reject):
            self._verdict("Device", out)
            return []
        if isinstance(out, ResyncResponse):
            self._verdict("Device", "RESYNC_SENT")
        else:
            self._verdict("Device", "DATA_SENT")
            self._summary.k_af["Device"] = dev.k_af
        return [_Envelope("Device", "AMF", out.to_bytes(self.variant), type_name(bytes([out.msg_type])))]

    def _access_from_device(self, payload: bytes) -> list[_Envelope]:
        if payload[:1] == bytes([MsgType.AUTH_REQUEST]):
            try:
                req = AuthRequest.from_bytes(payload, Variant(self.variant.basis, payload[17] if len(payload) > 17 else 0))
            except (WireFormatError, ValueError):
                self._verdict(self.topology.access, Reject(RejectReason.MALFORMED))
                return []
            if self.scenario.relayed:
                auth = self.ue_table.ue_authorize(req.tid)
                self._verdict("UE", auth.value)
                if auth is Authorization.DENY:
                    return []
            variant = Variant(self.variant.basis, req.indicator)
            fwd = access_forward_request(req, variant, self.access_secret)
            return [_Envelope(self.topology.access, "AMF", fwd.to_bytes(variant), "UDM_AUTH_REQUEST")]
        # device responses are relayed untouched toward the AMF; nothing else crosses the access node
        if payload[:1] not in (bytes([MsgType.DATA_RESPONSE]), bytes([MsgType.RESYNC_RESPONSE])):
            self._verdict(self.topology.access, Reject(RejectReason.MALFORMED))
            return []
        return [_Envelope(self.topology.access, "AMF", payload, type_name(payload))]

    def _ue_control(self, payload: bytes, label: str) -> list[_Envelope]:
        if label == WAKE_REQ:
            return self._access_wake()
        msg = TidUpdateToUe.from_bytes(payload, self.variant)
        if msg.commit:
            self.ue_table.ue_update_tid(msg.aiot_id, msg.tid_new)
        else:
            self.ue_table.ue_stage_tid(msg.aiot_id, msg.tid_new)
        return []

    def _network_variant(self, indicator: int) -> Variant:
        return Variant(self.variant.basis, Indicator(indicator))

    def _amf(self, payload: bytes, sender: str, meta: dict) -> list[_Envelope]:
        # the AMF dispatches on the interface a message arrived on, not on its type byte
        kind = payload[0] if payload else None
        if sender == "UDM":
            if kind != MsgType.UDM_AUTH_RESPONSE or self.amf_request is None:
                return []
            variant = self._network_variant(self.amf_request.indicator)
            resp = UdmAuthResponse.from_bytes(payload, variant)
            self.amf_ctx, ch = amf_forward_challenge(resp, variant, self.amf_request)
            return [_Envelope("AMF", "Device", ch.to_bytes(variant), "CHALLENGE")]
        if kind == MsgType.UDM_AUTH_REQUEST:
            self.amf_request = UdmAuthRequest.from_bytes(payload, self._network_variant(payload[17]))
            return [_Envelope("AMF", "UDM", payload, "UDM_AUTH_REQUEST")]
        # anything else comes from the device side
        ctx, self.amf_ctx = self.amf_ctx, None
        if ctx is None:
            self._verdict("AMF", Reject(RejectReason.NO_SESSION))
            return []
        try:
            resp = decode(payload, ctx.variant)
            if not isinstance(resp, (DataResponse, ResyncResponse)):
                raise WireFormatError("unexpected message")
        except WireFormatError:
            self._verdict("AMF", Reject(RejectReason.MALFORMED))
            return []
        out = amf_verify_device_response(ctx, resp, self.mutation)
        self._verdict("AMF", out)
        if isinstance(out, Accept):
            self._summary.data_out = out.data
            self._summary.k_af["AMF"] = ctx.k_af
            return [_Envelope("AMF", "UDM", out.success.to_bytes(ctx.variant), "AUTH_SUCCESS")]
        if isinstance(out, ForwardResync):
            return [_Envelope("AMF", "UDM", payload, "RESYNC_RESPONSE",
                              {"aiot_id": ctx.aiot_id, "variant": ctx.variant})]
        return []

    def _udm(self, payload: bytes, meta: dict) -> list[_Envelope]:
        kind = payload[0]
        if kind == MsgType.NEF_TRIGGER:
            trig = NefTrigger.from_bytes(payload, self.variant)
            try:
                self.registry.get(trig.aiot_id)
            except NotFoundError:
                self._verdict("UDM", Reject(RejectReason.NOT_FOUND))
                return []
            target = "UE" if trig.target_kind == TargetKind.UE else self.topology.access
            return [_Envelope("UDM", target, b"", WAKE_REQ)]
        if kind == MsgType.UDM_AUTH_REQUEST:
            variant = self._network_variant(payload[17])
            req = UdmAuthRequest.from_bytes(payload, variant)
            try:
                resp = self.udm.build_response(req, variant)
            except NotFoundError:
                self._verdict("UDM", Reject(RejectReason.NOT_FOUND))
                return []
            except ReplayError:
                self._verdict("UDM", Reject(RejectReason.REPLAYED_NONCE))
                return []
            run = self.udm.runs[resp.aiot_id]
            self._summary.k_af["UDM"] = run.k_af
            self._summary.tid_new = run.tid_new
            out = [_Envelope("UDM", "AMF", resp.to_bytes(variant), "UDM_AUTH_RESPONSE")]
            staged = self.udm.staged_update(resp.aiot_id)
            if staged is not None:
                out.append(_Envelope("UDM", "UE", staged.to_bytes(variant), "TID_UPDATE_TO_UE"))
            return out
        if kind == MsgType.AUTH_SUCCESS:
            msg = AuthSuccess.from_bytes(payload, self.variant)
            try:
                update = self.udm.on_success(msg)
            except AkaError as exc:
                self._verdict("UDM", f"REJECT({type(exc).__name__})")
                return []
            self._verdict("UDM", "COMMIT")
            if update is not None:
                return [_Envelope("UDM", "UE", update.to_bytes(self.variant), "TID_UPDATE_TO_UE")]
            return []
        if kind == MsgType.RESYNC_RESPONSE:
            variant = meta["variant"]
            try:
                resync = ResyncResponse.from_bytes(payload, variant)
                self.udm.on_resync(meta["aiot_id"], resync, self.mutation)
            except (AkaError, IntegrityError):
                self._verdict("UDM", Reject(RejectReason.BAD_RESYNC))
                return []
            self._verdict("UDM", "RESYNCED")
        return []


def run_honest(scenario: int | Scenario, variant: Variant, seed: int, **kwargs) -> Transcript:
    """One honest authentication on a freshly provisioned network."""
    net = Network(scenario, variant, seed, **kwargs)
    net.run_session()
    return net.transcript


def run_with_adversary(
    scenario: int | Scenario,
    variant: Variant,
    seed: int,
    script: Script,
    warmup: int = 1,
    **kwargs,
) -> Transcript:
    """Eavesdrop on ``warmup`` honest sessions, then run one scripted session.

    Step numbers in ``script`` refer to the attacked session; ``Replay``
    indices refer to the adversary's store of every wireless message it has
    seen so far, oldest first.
    """
    net = Network(scenario, variant, seed, **kwargs)
    for _ in range(warmup):
        net.run_session()
    net.run_session(script)
    return net.transcript
