"""Device, AMF and UDM state machines for the SQN, nonce and PLK protocols.

The device and AMF steps are plain functions over explicit state objects; the
UDM is a small class because it owns the subscription registry, the random
source for RAND/R2 and the per-device run context needed for resync.

Message flow (scenario 1, relay scenarios insert a UE before the gNB)::

    gNB  -> Device  WAKE
    Device -> gNB   AuthRequest(TID, indicator[, R1])
    gNB  -> AMF     UdmAuthRequest(TID, indicator[, R1 | Secret])
    AMF  -> UDM     UdmAuthRequest
    UDM  -> AMF     UdmAuthResponse(TID, AIoT ID, K_AF, challenge fields)
    AMF  -> Device  Challenge
    Device -> AMF   DataResponse | ResyncResponse
    AMF  -> UDM     AuthSuccess(AIoT ID) | ResyncResponse
"""

from __future__ import annotations

import hmac
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

from . import crypto
from .crypto import AeadSealed
from .errors import (
    IntegrityError,
    NoNonceError,
    NoSecretError,
    NotFoundError,
    ReplayError,
    WrongVariantError,
)
from .messages import (
    AuthRequest,
    AuthSuccess,
    Basis,
    Challenge,
    DataResponse,
    MsgType,
    NefTrigger,
    ResyncResponse,
    TargetKind,
    TidUpdateToUe,
    UdmAuthRequest,
    UdmAuthResponse,
    Variant,
)
from .registry import DeviceState, RandomSource, SubscriptionRecord, UdmRegistry

DEFAULT_WINDOW = 1 << 16

AD_CHALLENGE = bytes([MsgType.CHALLENGE])
AD_DATA = bytes([MsgType.DATA_RESPONSE])
AD_RESYNC = bytes([MsgType.RESYNC_RESPONSE])


class Mutation(str, Enum):
    """Deliberately broken builds used as negative controls."""

    NONE = "none"
    SKIP_MAC_VERIFY = "skip-mac-verify"


class RejectReason(str, Enum):
    BAD_MAC = "BAD_MAC"
    AEAD_FAIL = "AEAD_FAIL"
    SECRET_MISMATCH = "SECRET_MISMATCH"
    NO_SESSION = "NO_SESSION"
    MALFORMED = "MALFORMED"
    NOT_FOUND = "NOT_FOUND"
    REPLAYED_NONCE = "REPLAYED_NONCE"
    BAD_RESYNC = "BAD_RESYNC"
    NO_PENDING = "NO_PENDING"


@dataclass(frozen=True)
class Reject:
    reason: RejectReason

    def __str__(self) -> str:
        return f"REJECT({self.reason.value})"


@dataclass(frozen=True)
class Accept:
    data: bytes
    success: AuthSuccess

    def __str__(self) -> str:
        return "ACCEPT"


@dataclass(frozen=True)
class ForwardResync:
    resync: ResyncResponse

    def __str__(self) -> str:
        return "FORWARD_RESYNC"


def sqn_in_window(sqn_hn: int, sqn_ue: int, window: int = DEFAULT_WINDOW) -> bool:
    return sqn_ue < sqn_hn and sqn_hn - sqn_ue <= window


def _verify(mutation: Mutation) -> bool:
    return mutation is not Mutation.SKIP_MAC_VERIFY


def _open(key, nonce, ad, sealed, mutation) -> bytes:
    if _verify(mutation):
        return crypto.aead_open(key, nonce, ad, sealed)
    return crypto.aead_open_unchecked(key, nonce, ad, sealed)


# --- device ----------------------------------------------------------------


def device_begin(state: DeviceState, variant: Variant) -> AuthRequest:
    """Start a run: emit (TID, indicator) or (TID, indicator, R1)."""
    r1 = None
    if variant.basis is Basis.NONCE:
        if not state.nonce_queue:
            raise NoNonceError("nonce queue exhausted")
        r1 = state.nonce_queue.popleft()
    elif variant.basis is Basis.PLK and state.secret is None:
        raise NoSecretError("no physical-layer secret available")
    state.session = {"variant": variant, "r1": r1, "secret": state.secret}
    return AuthRequest(tid=state.tid, indicator=int(variant.indicator), r1=r1)


def _rotate_device_tid(state: DeviceState, tid_new: bytes | None = None) -> None:
    if tid_new is None:
        tid_new = crypto.kdf(state.k, [state.aiot_id, state.tid])
    state.tid = tid_new


def _auts(state: DeviceState, rand: bytes) -> bytes:
    sqn_ue = crypto.sqn_to_bytes(state.sqn_ue)
    return crypto.xor(sqn_ue, crypto.f5_star(state.k, rand)) + crypto.f1_star(state.k, sqn_ue, rand)


def device_on_challenge(
    state: DeviceState,
    ch: Challenge,
    data: bytes,
    window: int = DEFAULT_WINDOW,
    mutation: Mutation = Mutation.NONE,
) -> DataResponse | ResyncResponse | Reject:
    """Authenticate the network and answer with protected data or a resync."""
    session, state.session = state.session, {}
    if not session:
        return Reject(RejectReason.NO_SESSION)
    variant: Variant = session["variant"]
    k, aiot_id = state.k, state.aiot_id
    ascon = variant.indicator == 1

    if variant.basis is Basis.SQN:
        if not ascon:
            ak = crypto.f5(k, ch.rand)
            sqn_b = crypto.xor(ch.ak_sqn, ak)
            xmac = crypto.f1(k, sqn_b, ch.rand)
            if _verify(mutation) and not hmac.compare_digest(xmac, ch.mac):
                return Reject(RejectReason.BAD_MAC)
            sqn_hn = crypto.sqn_from_bytes(sqn_b)
            if not sqn_in_window(sqn_hn, state.sqn_ue, window):
                return ResyncResponse(auts=_auts(state, ch.rand))
            state.sqn_ue = sqn_hn
            k_af = crypto.kdf(k, [aiot_id, sqn_b, ch.rand])
            c, m = crypto.dp_protect(k_af, ch.rand, data)
            _rotate_device_tid(state)
            state.k_af = k_af
            return DataResponse(ciphertext=c, mac=m)
        try:
            p = _open(k, ch.rand, AD_CHALLENGE, AeadSealed(ch.c_hn, ch.tag), mutation)
        except IntegrityError:
            return Reject(RejectReason.AEAD_FAIL)
        k_af, sqn_b, tid_new = p[:16], p[16:22], p[22:38]
        sqn_hn = crypto.sqn_from_bytes(sqn_b)
        if not sqn_in_window(sqn_hn, state.sqn_ue, window):
            sealed = crypto.aead_seal(k_af, ch.rand, AD_RESYNC, crypto.sqn_to_bytes(state.sqn_ue) + data)
            return ResyncResponse(ciphertext=sealed.ciphertext, tag=sealed.tag)
        state.sqn_ue = sqn_hn
        sealed = crypto.aead_seal(k_af, ch.rand, AD_DATA, data)
        _rotate_device_tid(state, tid_new)
        state.k_af = k_af
        return DataResponse(ciphertext=sealed.ciphertext, mac=sealed.tag)

    if variant.basis is Basis.NONCE:
        r1 = session["r1"]
        if not ascon:
            xmac = crypto.f1(k, r1, ch.r2)
            if _verify(mutation) and not hmac.compare_digest(xmac, ch.mac):
                return Reject(RejectReason.BAD_MAC)
            k_af = crypto.kdf(k, [aiot_id, r1, ch.r2])
            c, m = crypto.dp_protect(k_af, ch.r2, data)
            _rotate_device_tid(state)
            state.k_af = k_af
            return DataResponse(ciphertext=c, mac=m)
        try:
            p = _open(k, r1, AD_CHALLENGE, AeadSealed(ch.c_hn, ch.tag), mutation)
        except IntegrityError:
            return Reject(RejectReason.AEAD_FAIL)
        k_af, r2, tid_new = p[:16], p[16:32], p[32:48]
        sealed = crypto.aead_seal(k_af, r2, AD_DATA, data)
        _rotate_device_tid(state, tid_new)
        state.k_af = k_af
        return DataResponse(ciphertext=sealed.ciphertext, mac=sealed.tag)

    secret = session["secret"]
    if not ascon:
        xmac = crypto.f1(k, secret, ch.rand)
        if _verify(mutation) and not hmac.compare_digest(xmac, ch.mac):
            return Reject(RejectReason.BAD_MAC)
        k_af = crypto.kdf(k, [aiot_id, secret, ch.rand])
        c, m = crypto.dp_protect(k_af, ch.rand, data)
        _rotate_device_tid(state)
        state.k_af = k_af
        return DataResponse(ciphertext=c, mac=m)
    try:
        p = _open(k, ch.rand, AD_CHALLENGE, AeadSealed(ch.c_hn, ch.tag), mutation)
    except IntegrityError:
        return Reject(RejectReason.AEAD_FAIL)
    k_af, their_secret, tid_new = p[:16], p[16:32], p[32:48]
    if _verify(mutation) and not hmac.compare_digest(their_secret, secret):
        return Reject(RejectReason.SECRET_MISMATCH)
    sealed = crypto.aead_seal(k_af, ch.rand, AD_DATA, data)
    _rotate_device_tid(state, tid_new)
    state.k_af = k_af
    return DataResponse(ciphertext=sealed.ciphertext, mac=sealed.tag)


# --- access node (gNB or relay UE) -------------------------------------------


def gnb_attach_secret(req: AuthRequest, secret: bytes, variant: Variant) -> UdmAuthRequest:
    """PLK only: forward (TID, indicator, Secret) toward the AMF."""
    if variant.basis is not Basis.PLK:
        raise WrongVariantError(f"{variant} does not use a physical-layer secret")
    return UdmAuthRequest(tid=req.tid, indicator=req.indicator, secret=secret)


def access_forward_request(req: AuthRequest, variant: Variant, secret: bytes | None = None) -> UdmAuthRequest:
    if variant.basis is Basis.PLK:
        return gnb_attach_secret(req, secret, variant)
    return UdmAuthRequest(tid=req.tid, indicator=req.indicator, r1=req.r1)


# --- AMF -------------------------------------------------------------------


@dataclass
class AmfContext:
    """Serving-network cache for one run, alive between challenge and verdict."""

    tid: bytes
    indicator: int
    aiot_id: bytes
    k_af: bytes
    variant: Variant
    rand: bytes | None = None
    r1: bytes | None = None
    r2: bytes | None = None
    secret: bytes | None = None

    @property
    def data_nonce(self) -> bytes:
        return self.r2 if self.variant.basis is Basis.NONCE else self.rand


def amf_forward_challenge(
    resp: UdmAuthResponse, variant: Variant, request: UdmAuthRequest | None = None
) -> tuple[AmfContext, Challenge]:
    ctx = AmfContext(
        tid=resp.tid,
        indicator=int(variant.indicator),
        aiot_id=resp.aiot_id,
        k_af=resp.k_af,
        variant=variant,
        rand=resp.rand,
        r2=resp.r2,
        r1=request.r1 if request else None,
        secret=request.secret if request else None,
    )
    return ctx, resp.challenge(variant)


def amf_verify_device_response(
    ctx: AmfContext,
    resp: DataResponse | ResyncResponse,
    mutation: Mutation = Mutation.NONE,
) -> Accept | Reject | ForwardResync:
    if isinstance(resp, ResyncResponse):
        return ForwardResync(resp)
    nonce = ctx.data_nonce
    try:
        if ctx.variant.indicator == 0:
            data = crypto.dp_unprotect(ctx.k_af, nonce, resp.ciphertext, resp.mac, verify=_verify(mutation))
        else:
            data = _open(ctx.k_af, nonce, AD_DATA, AeadSealed(resp.ciphertext, resp.mac), mutation)
    except IntegrityError:
        reason = RejectReason.BAD_MAC if ctx.variant.indicator == 0 else RejectReason.AEAD_FAIL
        return Reject(reason)
    except ValueError:
        return Reject(RejectReason.MALFORMED)
    return Accept(data=data, success=AuthSuccess(aiot_id=ctx.aiot_id))


# --- UDM -------------------------------------------------------------------


@dataclass
class UdmRun:
    variant: Variant
    k_af: bytes
    rand: bytes | None
    tid_new: bytes


def nef_trigger(
    registry: UdmRegistry,
    aiot_id: bytes,
    indicator: int,
    target_kind: TargetKind = TargetKind.NONE,
    target: bytes | None = None,
) -> NefTrigger:
    """Build the application's wake-up request; unknown devices are refused."""
    registry.get(aiot_id)
    return NefTrigger(aiot_id=aiot_id, indicator=indicator, target_kind=int(target_kind),
                      target=target if target is not None else bytes(16))


class Udm:
    """Home network (AUSF and UDM merged; the link between them is ideal)."""

    def __init__(self, registry: UdmRegistry, rng: RandomSource,
                 relay_of: Callable[[bytes], str | None] | None = None):
        self.registry = registry
        self.rng = rng
        self.runs: dict[bytes, UdmRun] = {}
        self.seen_r1: dict[bytes, set[bytes]] = {}
        self._relay_of = relay_of or (lambda aiot_id: None)

    def resolve(self, tid: bytes) -> SubscriptionRecord:
        record = self.registry.lookup_by_tid(tid)
        if record.pending_tid == tid:
            # the device rotated but our success notification never arrived
            self.registry.commit_tid_rotation(record.aiot_id)
        return record

    def build_response(self, req: UdmAuthRequest, variant: Variant) -> UdmAuthResponse:
        """Look up the device by TID, draw fresh values and build the challenge.

        Raises :class:`NotFoundError` for unknown TIDs and :class:`ReplayError`
        when a nonce-based request repeats an R1 already served.
        """
        record = self.resolve(req.tid)
        if variant.basis is Basis.NONCE:
            seen = self.seen_r1.setdefault(record.aiot_id, set())
            if req.r1 in seen:
                raise ReplayError("R1 already used")
            seen.add(req.r1)
        resp, run = udm_build_response(self.registry, record, req, variant, self.rng)
        self.runs[record.aiot_id] = run
        return resp

    def staged_update(self, aiot_id: bytes) -> TidUpdateToUe | None:
        run = self.runs.get(aiot_id)
        if run is None or self._relay_of(aiot_id) is None:
            return None
        return TidUpdateToUe(aiot_id=aiot_id, tid_new=run.tid_new, commit=0)

    def on_success(self, msg: AuthSuccess) -> TidUpdateToUe | None:
        record = udm_on_success(self.registry, msg)
        self.runs.pop(msg.aiot_id, None)
        if self._relay_of(msg.aiot_id) is None:
            return None
        return TidUpdateToUe(aiot_id=record.aiot_id, tid_new=record.tid, commit=1)

    def on_resync(self, aiot_id: bytes, resync: ResyncResponse,
                  mutation: Mutation = Mutation.NONE) -> int:
        run = self.runs.pop(aiot_id, None)
        if run is None:
            raise NotFoundError("no run in progress")
        record = self.registry.get(aiot_id)
        return udm_on_resync(record, resync, run.k_af, run.rand, run.variant, mutation)


def udm_build_response(
    registry: UdmRegistry,
    record: SubscriptionRecord,
    req: UdmAuthRequest,
    variant: Variant,
    rng: RandomSource,
) -> tuple[UdmAuthResponse, UdmRun]:
    k, aiot_id = record.k, record.aiot_id
    tid_new = registry.stage_tid_rotation(aiot_id)
    ascon = variant.indicator == 1
    head = {"tid": record.tid, "aiot_id": aiot_id}

    if variant.basis is Basis.SQN:
        record.sqn_hn += 1
        sqn_b = crypto.sqn_to_bytes(record.sqn_hn)
        rand = rng.randbytes(16)
        k_af = crypto.kdf(k, [aiot_id, sqn_b, rand])
        if not ascon:
            ak_sqn = crypto.xor(sqn_b, crypto.f5(k, rand))
            resp = UdmAuthResponse(**head, k_af=k_af, ak_sqn=ak_sqn, rand=rand, mac=crypto.f1(k, sqn_b, rand))
        else:
            sealed = crypto.aead_seal(k, rand, AD_CHALLENGE, k_af + sqn_b + tid_new)
            resp = UdmAuthResponse(**head, k_af=k_af, c_hn=sealed.ciphertext, rand=rand, tag=sealed.tag)
        return resp, UdmRun(variant, k_af, rand, tid_new)

    if variant.basis is Basis.NONCE:
        r1, r2 = req.r1, rng.randbytes(16)
        k_af = crypto.kdf(k, [aiot_id, r1, r2])
        if not ascon:
            resp = UdmAuthResponse(**head, k_af=k_af, r2=r2, mac=crypto.f1(k, r1, r2))
        else:
            sealed = crypto.aead_seal(k, r1, AD_CHALLENGE, k_af + r2 + tid_new)
            resp = UdmAuthResponse(**head, k_af=k_af, r2=r2, c_hn=sealed.ciphertext, tag=sealed.tag)
        return resp, UdmRun(variant, k_af, r2, tid_new)

    secret, rand = req.secret, rng.randbytes(16)
    k_af = crypto.kdf(k, [aiot_id, secret, rand])
    if not ascon:
        resp = UdmAuthResponse(**head, k_af=k_af, rand=rand, mac=crypto.f1(k, secret, rand))
    else:
        sealed = crypto.aead_seal(k, rand, AD_CHALLENGE, k_af + secret + tid_new)
        resp = UdmAuthResponse(**head, k_af=k_af, rand=rand, c_hn=sealed.ciphertext, tag=sealed.tag)
    return resp, UdmRun(variant, k_af, rand, tid_new)


def udm_on_success(registry: UdmRegistry, msg: AuthSuccess) -> SubscriptionRecord:
    """Commit the staged TID rotation for the authenticated device."""
    return registry.commit_tid_rotation(msg.aiot_id)


def udm_on_resync(
    record: SubscriptionRecord,
    resync: ResyncResponse,
    k_af: bytes,
    nonce: bytes,
    variant: Variant,
    mutation: Mutation = Mutation.NONE,
) -> int:
    """Recover SQN_UE from a resync message and adopt it as SQN_HN.

    Raises :class:`IntegrityError` when the AUTS or tag does not verify.
    """
    if variant.basis is not Basis.SQN:
        raise WrongVariantError("resynchronisation only exists for the SQN protocol")
    if variant.indicator == 0:
        if resync.auts is None or len(resync.auts) != 14:
            raise IntegrityError("malformed AUTS")
        sqn_b = crypto.xor(resync.auts[:6], crypto.f5_star(record.k, nonce))
        expected = crypto.f1_star(record.k, sqn_b, nonce)
        if _verify(mutation) and not hmac.compare_digest(expected, resync.auts[6:]):
            raise IntegrityError("AUTS MAC mismatch")
    else:
        p = _open(k_af, nonce, AD_RESYNC, AeadSealed(resync.ciphertext, resync.tag), mutation)
        if len(p) < 6:
            raise IntegrityError("resync plaintext too short")
        sqn_b = p[:6]
    record.sqn_hn = crypto.sqn_from_bytes(sqn_b)
    return record.sqn_hn


__all__ = [
    "DEFAULT_WINDOW", "Accept", "AmfContext", "ForwardResync", "Mutation",
    "Reject", "RejectReason", "Udm", "UdmRun", "access_forward_request",
    "amf_forward_challenge", "amf_verify_device_response", "device_begin", "device_on_challenge",
    "gnb_attach_secret", "nef_trigger", "sqn_in_window", "udm_build_response", "udm_on_resync",
    "udm_on_success",
]
