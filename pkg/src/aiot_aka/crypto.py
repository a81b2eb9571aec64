"""Cryptographic primitives used on both sides of the AKA protocols.

Three suites are exposed:

* the AES-ECB based ``f1``/``f5`` family (one block cipher call each) plus an
  HMAC-SHA-256 key derivation function, used with indicator 0;
* Ascon-128 AEAD (NIST LwC v1.2 parameters), used with indicator 1;
* AES-CBC encryption with AES-CMAC integrity for application data
  (encrypt-then-MAC under a single session key), used with indicator 0.

Every primitive reports what it executed to the active :class:`OpMeter`, if
one is installed with :func:`metering`.  The simulator installs a meter
around device-side processing so that executed work can be compared with the
transcribed cost ledgers.
"""

from __future__ import annotations

import contextlib
import contextvars
import hashlib
import hmac
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from cryptography.hazmat.primitives import cmac
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import IntegrityError

KEY_BYTES = 16
BLOCK_BYTES = 16
MAC_BYTES = 8
AK_BYTES = 6
SQN_BYTES = 6
TAG_BYTES = 16
SQN_MAX = (1 << 48) - 1

C1 = bytes([0x01]) * 16
C1_STAR = bytes([0x81]) * 16
C5 = bytes([0x05]) * 16
C5_STAR = bytes([0x85]) * 16


class OpKind(str, Enum):
    FI_AES = "FI_AES"
    HMAC_SHA256 = "HMAC_SHA256"
    AES_CBC_128 = "AES_CBC_128"
    AES_CMAC_128 = "AES_CMAC_128"
    ASCON_SEAL = "ASCON_SEAL"


class Op(NamedTuple):
    """One cost-ledger operation class.

    ``bits`` is the input width for Ascon calls and ``None`` for the classes
    whose timing does not depend on input width.
    """

    kind: OpKind
    bits: int | None = None

    def __str__(self) -> str:
        if self.bits is None:
            return self.kind.value
        return f"{self.kind.value}({self.bits})"

    @classmethod
    def parse(cls, text: str) -> Op:
        text = text.strip()
        if text.endswith(")") and "(" in text:
            name, _, bits = text[:-1].partition("(")
            return cls(OpKind(name), int(bits))
        return cls(OpKind(text))


FI_AES = Op(OpKind.FI_AES)
HMAC_SHA256 = Op(OpKind.HMAC_SHA256)
AES_CBC_128 = Op(OpKind.AES_CBC_128)
AES_CMAC_128 = Op(OpKind.AES_CMAC_128)


def ascon_op(bits: int) -> Op:
    return Op(OpKind.ASCON_SEAL, bits)


@dataclass
class OpMeter:
    """Records executed primitives; ``events`` keeps (op, input_bits) pairs."""

    events: list[tuple[Op, int]] = field(default_factory=list)

    def charge(self, op: Op, input_bits: int) -> None:
        self.events.append((op, input_bits))

    @property
    def ops(self) -> list[Op]:
        return [op for op, _ in self.events]


_meter: contextvars.ContextVar[OpMeter | None] = contextvars.ContextVar("meter", default=None)


@contextlib.contextmanager
def metering(meter: OpMeter | None = None) -> Iterator[OpMeter]:
    meter = meter if meter is not None else OpMeter()
    token = _meter.set(meter)
    try:
        yield meter
    finally:
        _meter.reset(token)


def _charge(op: Op, input_bits: int) -> None:
    meter = _meter.get()
    if meter is not None:
        meter.charge(op, input_bits)


def _check(name: str, value: bytes, size: int) -> None:
    if len(value) != size:
        raise ValueError(f"{name} must be {size} bytes, got {len(value)}")


def xor(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("xor operands differ in length")
    return bytes(x ^ y for x, y in zip(a, b))


def sqn_to_bytes(sqn: int) -> bytes:
    if not 0 <= sqn <= SQN_MAX:
        raise ValueError(f"SQN out of 48-bit range: {sqn}")
    return sqn.to_bytes(SQN_BYTES, "big")


def sqn_from_bytes(data: bytes) -> int:
    _check("SQN", data, SQN_BYTES)
    return int.from_bytes(data, "big")


# --- AES-ECB and the f-family ---------------------------------------------


def aes_ecb_encrypt(key: bytes, block: bytes) -> bytes:
    _check("key", key, KEY_BYTES)
    _check("block", block, BLOCK_BYTES)
    _charge(FI_AES, 128)
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def aes_ecb_decrypt(key: bytes, block: bytes) -> bytes:
    _check("key", key, KEY_BYTES)
    _check("block", block, BLOCK_BYTES)
    dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
    return dec.update(block) + dec.finalize()


def _first_arg(value: bytes | int) -> bytes:
    # SQN (48-bit int or 6 bytes) is left-padded; R1 and Secret are full blocks
    if isinstance(value, int):
        value = sqn_to_bytes(value)
    if len(value) == SQN_BYTES:
        return bytes(BLOCK_BYTES - SQN_BYTES) + value
    _check("f1 first argument", value, BLOCK_BYTES)
    return value


def _f1_family(key: bytes, first: bytes | int, rand: bytes, const: bytes) -> bytes:
    _check("RAND", rand, BLOCK_BYTES)
    block = xor(xor(_first_arg(first), rand), const)
    return aes_ecb_encrypt(key, block)[:MAC_BYTES]


def f1(key: bytes, first: bytes | int, rand: bytes) -> bytes:
    """64-bit network authentication code over (SQN | R1 | Secret, RAND)."""
    return _f1_family(key, first, rand, C1)


def f1_star(key: bytes, first: bytes | int, rand: bytes) -> bytes:
    """Resynchronisation variant of :func:`f1` (AUTS authentication)."""
    return _f1_family(key, first, rand, C1_STAR)


def f5(key: bytes, rand: bytes) -> bytes:
    """48-bit anonymity key used to mask SQN_HN."""
    _check("RAND", rand, BLOCK_BYTES)
    return aes_ecb_encrypt(key, xor(rand, C5))[:AK_BYTES]


def f5_star(key: bytes, rand: bytes) -> bytes:
    _check("RAND", rand, BLOCK_BYTES)
    return aes_ecb_encrypt(key, xor(rand, C5_STAR))[:AK_BYTES]


# --- KDF ------------------------------------------------------------------


def kdf(key: bytes, parts: Sequence[bytes]) -> bytes:
    """First 128 bits of HMAC-SHA-256(key, concatenation of ``parts``)."""
    if not parts:
        raise ValueError("kdf needs at least one input part")
    _check("key", key, KEY_BYTES)
    msg = b"".join(parts)
    _charge(HMAC_SHA256, 8 * len(msg))
    return hmac.new(key, msg, hashlib.sha256).digest()[:KEY_BYTES]


# --- Ascon-128 --------------------------------------------------------------

_M64 = (1 << 64) - 1
_ASCON_IV = 0x80400C0600000000  # k=128, rate=64 bits, a=12, b=6
_ASCON_RATE = 8
_ROUND_CONSTANTS = [0xF0 - 0x0F * i for i in range(12)]


def _rotr(x: int, n: int) -> int:
    return ((x >> n) | (x << (64 - n))) & _M64


def _permute(s: list[int], rounds: int) -> None:
    x0, x1, x2, x3, x4 = s
    for c in _ROUND_CONSTANTS[12 - rounds:]:
        x2 ^= c
        # substitution layer (bitsliced 5-bit S-box)
        x0 ^= x4
        x4 ^= x3
        x2 ^= x1
        t0 = ~x0 & x1
        t1 = ~x1 & x2
        t2 = ~x2 & x3
        t3 = ~x3 & x4
        t4 = ~x4 & x0
        x0 ^= t1
        x1 ^= t2
        x2 ^= t3
        x3 ^= t4
        x4 ^= t0
        x1 ^= x0
        x0 ^= x4
        x3 ^= x2
        x2 = ~x2
        x0 &= _M64
        x1 &= _M64
        x2 &= _M64
        x3 &= _M64
        x4 &= _M64
        # linear diffusion layer
        x0 ^= _rotr(x0, 19) ^ _rotr(x0, 28)
        x1 ^= _rotr(x1, 61) ^ _rotr(x1, 39)
        x2 ^= _rotr(x2, 1) ^ _rotr(x2, 6)
        x3 ^= _rotr(x3, 10) ^ _rotr(x3, 17)
        x4 ^= _rotr(x4, 7) ^ _rotr(x4, 41)
    s[:] = [x0, x1, x2, x3, x4]


def _pad(data: bytes) -> bytes:
    return data + b"\x80" + bytes(_ASCON_RATE - 1 - len(data) % _ASCON_RATE)


def _ascon_init(key: bytes, nonce: bytes, ad: bytes) -> list[int]:
    k0, k1 = int.from_bytes(key[:8], "big"), int.from_bytes(key[8:], "big")
    s = [_ASCON_IV, k0, k1, int.from_bytes(nonce[:8], "big"), int.from_bytes(nonce[8:], "big")]
    _permute(s, 12)
    s[3] ^= k0
    s[4] ^= k1
    if ad:
        padded = _pad(ad)
        for i in range(0, len(padded), _ASCON_RATE):
            s[0] ^= int.from_bytes(padded[i:i + _ASCON_RATE], "big")
            _permute(s, 6)
    s[4] ^= 1
    return s


def _ascon_tag(s: list[int], key: bytes) -> bytes:
    k0, k1 = int.from_bytes(key[:8], "big"), int.from_bytes(key[8:], "big")
    s[1] ^= k0
    s[2] ^= k1
    _permute(s, 12)
    t0 = s[3] ^ k0
    t1 = s[4] ^ k1
    return t0.to_bytes(8, "big") + t1.to_bytes(8, "big")


def ascon128_encrypt(key: bytes, nonce: bytes, ad: bytes, plaintext: bytes) -> tuple[bytes, bytes]:
    """Raw Ascon-128 encryption returning ``(ciphertext, tag)``; not metered."""
    _check("key", key, KEY_BYTES)
    _check("nonce", nonce, BLOCK_BYTES)
    s = _ascon_init(key, nonce, ad)
    padded = _pad(plaintext)
    out = bytearray()
    for i in range(0, len(padded), _ASCON_RATE):
        s[0] ^= int.from_bytes(padded[i:i + _ASCON_RATE], "big")
        out += s[0].to_bytes(8, "big")
        if i + _ASCON_RATE < len(padded):
            _permute(s, 6)
    return bytes(out[:len(plaintext)]), _ascon_tag(s, key)


def ascon128_decrypt(key: bytes, nonce: bytes, ad: bytes, ciphertext: bytes) -> tuple[bytes, bytes]:
    """Raw Ascon-128 decryption returning ``(plaintext, expected_tag)``.

    The caller is responsible for comparing the expected tag; see
    :func:`aead_open` for the checked version.
    """
    _check("key", key, KEY_BYTES)
    _check("nonce", nonce, BLOCK_BYTES)
    s = _ascon_init(key, nonce, ad)
    full = len(ciphertext) - len(ciphertext) % _ASCON_RATE
    out = bytearray()
    for i in range(0, full, _ASCON_RATE):
        c = int.from_bytes(ciphertext[i:i + _ASCON_RATE], "big")
        out += (s[0] ^ c).to_bytes(8, "big")
        s[0] = c
        _permute(s, 6)
    last = ciphertext[full:]
    n = len(last)
    keystream = s[0].to_bytes(8, "big")
    out += bytes(a ^ b for a, b in zip(last, keystream))
    # replace the first n bytes of the rate with ciphertext, then pad
    mask = (_M64 >> (8 * n)) if n else _M64
    c = int.from_bytes(last + bytes(8 - n), "big")
    s[0] = (s[0] & mask) ^ c ^ (0x80 << (56 - 8 * n))
    return bytes(out), _ascon_tag(s, key)


class AeadSealed(NamedTuple):
    ciphertext: bytes
    tag: bytes


def aead_seal(key: bytes, nonce: bytes, ad: bytes, plaintext: bytes) -> AeadSealed:
    _charge(ascon_op(8 * len(plaintext)), 8 * len(plaintext))
    return AeadSealed(*ascon128_encrypt(key, nonce, ad, plaintext))


def aead_open(key: bytes, nonce: bytes, ad: bytes, sealed: AeadSealed) -> bytes:
    """Decrypt and verify; raises :class:`IntegrityError` and releases nothing on failure."""
    ciphertext, tag = sealed
    _charge(ascon_op(8 * len(ciphertext)), 8 * len(ciphertext))
    plaintext, expected = ascon128_decrypt(key, nonce, ad, ciphertext)
    if len(tag) != TAG_BYTES or not hmac.compare_digest(tag, expected):
        raise IntegrityError("Ascon tag mismatch")
    return plaintext


def aead_open_unchecked(key: bytes, nonce: bytes, ad: bytes, sealed: AeadSealed) -> bytes:
    """Decrypt without checking the tag.  Only for mutation (negative-control) runs."""
    _charge(ascon_op(8 * len(sealed.ciphertext)), 8 * len(sealed.ciphertext))
    return ascon128_decrypt(key, nonce, ad, sealed.ciphertext)[0]


# --- AES-CBC + AES-CMAC data protection ----------------------------------


def aes_cbc_encrypt(key: bytes, iv: bytes, data: bytes) -> bytes:
    _check("key", key, KEY_BYTES)
    _check("IV", iv, BLOCK_BYTES)
    if len(data) % BLOCK_BYTES:
        raise ValueError("CBC data must be a multiple of 16 bytes")
    _charge(AES_CBC_128, 8 * len(data))
    enc = Cipher(algorithms.AES(key), modes.CBC(iv)).encryptor()
    return enc.update(data) + enc.finalize()


def aes_cbc_decrypt(key: bytes, iv: bytes, data: bytes) -> bytes:
    _check("key", key, KEY_BYTES)
    _check("IV", iv, BLOCK_BYTES)
    if len(data) % BLOCK_BYTES:
        raise ValueError("CBC data must be a multiple of 16 bytes")
    dec = Cipher(algorithms.AES(key), modes.CBC(iv)).decryptor()
    return dec.update(data) + dec.finalize()


def aes_cmac(key: bytes, message: bytes) -> bytes:
    _check("key", key, KEY_BYTES)
    _charge(AES_CMAC_128, 8 * len(message))
    c = cmac.CMAC(algorithms.AES(key))
    c.update(message)
    return c.finalize()


def dp_protect(kaf: bytes, nonce: bytes, data: bytes) -> tuple[bytes, bytes]:
    """Encrypt-then-MAC: CBC under ``kaf`` with IV ``nonce``, CMAC over nonce‖ciphertext."""
    ciphertext = aes_cbc_encrypt(kaf, nonce, data)
    return ciphertext, aes_cmac(kaf, nonce + ciphertext)


def dp_unprotect(kaf: bytes, nonce: bytes, ciphertext: bytes, mac: bytes, verify: bool = True) -> bytes:
    if verify:
        _check("key", kaf, KEY_BYTES)
        c = cmac.CMAC(algorithms.AES(kaf))
        c.update(nonce + ciphertext)
        if not hmac.compare_digest(c.finalize(), mac):
            raise IntegrityError("CMAC mismatch")
    return aes_cbc_decrypt(kaf, nonce, ciphertext)
