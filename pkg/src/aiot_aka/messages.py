"""Byte-exact wire messages.

Every message is ``msg_type`` (1 byte) followed by fixed-width big-endian
fields.  The field list depends on the message kind and on the protocol
:class:`Variant`, so both encoding and decoding take the variant.  At most one
field per layout has variable width (the protected application data); its
length is whatever remains after the fixed fields.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import ClassVar

from .errors import WireFormatError


class Basis(str, Enum):
    SQN = "sqn"
    NONCE = "nonce"
    PLK = "plk"


class Indicator(IntEnum):
    TRADITIONAL = 0
    ASCON = 1


@dataclass(frozen=True)
class Variant:
    basis: Basis
    indicator: Indicator

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "indicator", Indicator(self.indicator))

    @property
    def name(self) -> str:
        suite = "AES" if self.indicator is Indicator.TRADITIONAL else "ASCON"
        return f"{self.basis.name}-{suite}"

    @classmethod
    def parse(cls, name: str) -> Variant:
        basis, _, suite = name.upper().partition("-")
        indicator = {"AES": 0, "ASCON": 1}.get(suite)
        if indicator is None or basis not in Basis.__members__:
            raise ValueError(f"unknown variant {name!r}")
        return cls(Basis[basis], Indicator(indicator))

    def __str__(self) -> str:
        return self.name


ALL_VARIANTS = tuple(Variant(b, i) for b in Basis for i in Indicator)

VAR = -1
ID = 16
INT_FIELDS = {"indicator", "target_kind", "commit"}

# width of the sealed challenge plaintext: K_AF + (SQN | R2 | Secret) + TID_new
SEALED_CHALLENGE_BYTES = {Basis.SQN: 16 + 6 + 16, Basis.NONCE: 48, Basis.PLK: 48}


class MsgType(IntEnum):
    AUTH_REQUEST = 0x01
    UDM_AUTH_REQUEST = 0x02
    UDM_AUTH_RESPONSE = 0x03
    CHALLENGE = 0x04
    DATA_RESPONSE = 0x05
    RESYNC_RESPONSE = 0x06
    AUTH_SUCCESS = 0x07
    NEF_TRIGGER = 0x08
    TID_UPDATE_TO_UE = 0x09


class Message:
    msg_type: ClassVar[MsgType]

    @classmethod
    def layout(cls, variant: Variant) -> tuple[tuple[str, int], ...]:
        raise NotImplementedError

    def to_bytes(self, variant: Variant) -> bytes:
        out = bytearray([self.msg_type])
        for name, width in self.layout(variant):
            value = getattr(self, name)
            if value is None:
                raise WireFormatError(f"{type(self).__name__}.{name} missing for {variant}")
            if name in INT_FIELDS:
                value = bytes([value])
            if width != VAR and len(value) != width:
                raise WireFormatError(f"{type(self).__name__}.{name}: {len(value)} bytes, want {width}")
            out += value
        return bytes(out)

    @classmethod
    def from_bytes(cls, raw: bytes, variant: Variant) -> Message:
        if not raw or raw[0] != cls.msg_type:
            raise WireFormatError(f"not a {cls.__name__}")
        layout = cls.layout(variant)
        fixed = sum(w for _, w in layout if w != VAR)
        has_var = any(w == VAR for _, w in layout)
        body = raw[1:]
        short = len(body) < fixed
        if short or (not has_var and len(body) != fixed):
            raise WireFormatError(f"{cls.__name__}: {len(body)} body bytes for {variant}")
        values = {}
        pos = 0
        for name, width in layout:
            if width == VAR:
                width = len(body) - fixed
            chunk = body[pos:pos + width]
            pos += width
            if name in INT_FIELDS:
                values[name] = chunk[0]
            else:
                values[name] = bytes(chunk)
        if "indicator" in values and values["indicator"] not in (0, 1):
            raise WireFormatError("indicator must be 0 or 1")
        return cls(**values)

    def field_bytes(self) -> list[bytes]:
        return [v for v in dataclasses.astuple(self) if isinstance(v, bytes)]


@dataclass(frozen=True)
class AuthRequest(Message):
    msg_type = MsgType.AUTH_REQUEST
    tid: bytes
    indicator: int
    r1: bytes | None = None

    @classmethod
    def layout(cls, variant):
        base = (("tid", ID), ("indicator", 1))
        return base + (("r1", 16),) if variant.basis is Basis.NONCE else base


@dataclass(frozen=True)
class UdmAuthRequest(Message):
    msg_type = MsgType.UDM_AUTH_REQUEST
    tid: bytes
    indicator: int
    r1: bytes | None = None
    secret: bytes | None = None

    @classmethod
    def layout(cls, variant):
        base = (("tid", ID), ("indicator", 1))
        extra = {Basis.SQN: (), Basis.NONCE: (("r1", 16),), Basis.PLK: (("secret", 16),)}
        return base + extra[variant.basis]


_CHALLENGE = {
    (Basis.SQN, 0): (("ak_sqn", 6), ("rand", 16), ("mac", 8)),
    (Basis.SQN, 1): (("c_hn", SEALED_CHALLENGE_BYTES[Basis.SQN]), ("rand", 16), ("tag", 16)),
    (Basis.NONCE, 0): (("r2", 16), ("mac", 8)),
    (Basis.NONCE, 1): (("c_hn", SEALED_CHALLENGE_BYTES[Basis.NONCE]), ("tag", 16)),
    (Basis.PLK, 0): (("rand", 16), ("mac", 8)),
    # RAND travels with the sealed challenge: the device needs it as the data nonce
    (Basis.PLK, 1): (("c_hn", SEALED_CHALLENGE_BYTES[Basis.PLK]), ("rand", 16), ("tag", 16)),
}


@dataclass(frozen=True)
class UdmAuthResponse(Message):
    """UDM → AMF: identifiers and K_AF for the AMF, plus the challenge fields."""

    msg_type = MsgType.UDM_AUTH_RESPONSE
    tid: bytes
    aiot_id: bytes
    k_af: bytes
    ak_sqn: bytes | None = None
    rand: bytes | None = None
    r2: bytes | None = None
    mac: bytes | None = None
    c_hn: bytes | None = None
    tag: bytes | None = None

    @classmethod
    def layout(cls, variant):
        head = (("tid", ID), ("aiot_id", ID), ("k_af", 16))
        if variant.basis is Basis.NONCE and variant.indicator == 1:
            return head + (("r2", 16),) + _CHALLENGE[(Basis.NONCE, 1)]
        if variant.basis is Basis.PLK and variant.indicator == 1:
            return head + (("rand", 16), ("c_hn", 48), ("tag", 16))
        return head + _CHALLENGE[(variant.basis, int(variant.indicator))]

    def challenge(self, variant: Variant) -> Challenge:
        """The part forwarded to the device; TID, AIoT ID and K_AF stay behind."""
        return Challenge(**{name: getattr(self, name) for name, _ in Challenge.layout(variant)})


@dataclass(frozen=True)
class Challenge(Message):
    msg_type = MsgType.CHALLENGE
    ak_sqn: bytes | None = None
    rand: bytes | None = None
    r2: bytes | None = None
    mac: bytes | None = None
    c_hn: bytes | None = None
    tag: bytes | None = None

    @classmethod
    def layout(cls, variant):
        return _CHALLENGE[(variant.basis, int(variant.indicator))]


@dataclass(frozen=True)
class DataResponse(Message):
    """Protected application data: (C_AIoT, MAC_AIoT) or (C_AIoT, tag_AIoT)."""

    msg_type = MsgType.DATA_RESPONSE
    ciphertext: bytes
    mac: bytes

    @classmethod
    def layout(cls, variant):
        return (("ciphertext", VAR), ("mac", 16))


@dataclass(frozen=True)
class ResyncResponse(Message):
    """Synchronisation failure: AUTS (indicator 0) or (C_Re, tag_Re) (indicator 1)."""

    msg_type = MsgType.RESYNC_RESPONSE
    auts: bytes | None = None
    ciphertext: bytes | None = None
    tag: bytes | None = None

    @classmethod
    def layout(cls, variant):
        if variant.indicator == 0:
            return (("auts", 14),)
        return (("ciphertext", VAR), ("tag", 16))


@dataclass(frozen=True)
class AuthSuccess(Message):
    msg_type = MsgType.AUTH_SUCCESS
    aiot_id: bytes

    @classmethod
    def layout(cls, variant):
        return (("aiot_id", ID),)


class TargetKind(IntEnum):
    NONE = 0
    AMF = 1
    UE = 2


@dataclass(frozen=True)
class NefTrigger(Message):
    """Application-initiated wake-up relayed by the NEF (scenarios 2 and 4)."""

    msg_type = MsgType.NEF_TRIGGER
    aiot_id: bytes
    indicator: int
    target_kind: int = TargetKind.NONE
    target: bytes = bytes(16)

    @classmethod
    def layout(cls, variant):
        return (("aiot_id", ID), ("indicator", 1), ("target_kind", 1), ("target", 16))


@dataclass(frozen=True)
class TidUpdateToUe(Message):
    """UDM → relay UE over the secure link; ``commit=0`` stages, ``commit=1`` replaces."""

    msg_type = MsgType.TID_UPDATE_TO_UE
    aiot_id: bytes
    tid_new: bytes
    commit: int = 1

    @classmethod
    def layout(cls, variant):
        return (("aiot_id", ID), ("tid_new", ID), ("commit", 1))


MESSAGE_CLASSES: dict[int, type[Message]] = {
    cls.msg_type: cls
    for cls in (AuthRequest, UdmAuthRequest, UdmAuthResponse, Challenge, DataResponse,
                ResyncResponse, AuthSuccess, NefTrigger, TidUpdateToUe)
}


def encode(msg: Message, variant: Variant) -> bytes:
    return msg.to_bytes(variant)


def decode(raw: bytes, variant: Variant) -> Message:
    if not raw:
        raise WireFormatError("empty message")
    try:
        cls = MESSAGE_CLASSES[raw[0]]
    except KeyError:
        raise WireFormatError(f"unknown msg_type 0x{raw[0]:02x}") from None
    return cls.from_bytes(raw, variant)


def type_name(raw: bytes) -> str:
    if not raw:
        return "EMPTY"
    try:
        return MsgType(raw[0]).name
    except ValueError:
        return f"0x{raw[0]:02x}"
