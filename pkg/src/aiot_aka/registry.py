"""Subscription and temporary-identity state.

The UDM side keeps one :class:`SubscriptionRecord` per device, indexed by the
device's live temporary identity (TID).  A TID rotation is two-phase: the UDM
stages ``TID_new`` while building the challenge and commits it once the AMF
reports a successful authentication.  A relay UE keeps its own
(SUPI, AIoT ID, TID) mapping table used to authorize devices it serves.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

from . import crypto
from .errors import DuplicateIdError, NoPendingError, NotFoundError

ID_BYTES = 16


class RandomSource(Protocol):
    def randbytes(self, n: int) -> bytes: ...


def derive_next_tid(k: bytes, aiot_id: bytes, tid: bytes) -> bytes:
    """TID_new = KDF(K, AIoT ID, TID); 256 input bits."""
    return crypto.kdf(k, [aiot_id, tid])


@dataclass
class SubscriptionRecord:
    k: bytes
    sqn_hn: int
    aiot_id: bytes
    tid: bytes
    pending_tid: bytes | None = None


@dataclass
class DeviceState:
    """Device-side mirror of the subscription plus per-run freshness material."""

    k: bytes
    sqn_ue: int
    aiot_id: bytes
    tid: bytes
    nonce_queue: deque[bytes] = field(default_factory=deque)
    secret: bytes | None = None
    # values from the most recent run, kept for inspection
    k_af: bytes | None = None
    session: dict = field(default_factory=dict)

    def refill_nonces(self, rng: RandomSource, count: int) -> None:
        """Pre-generate R1 values at idle time; duplicates are discarded."""
        seen = set(self.nonce_queue)
        while count > 0:
            r1 = rng.randbytes(16)
            if r1 not in seen:
                seen.add(r1)
                self.nonce_queue.append(r1)
                count -= 1


class UdmRegistry:
    def __init__(self) -> None:
        self._records: dict[bytes, SubscriptionRecord] = {}
        self._by_tid: dict[bytes, bytes] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records.values())

    def provision_device(
        self, k: bytes, aiot_id: bytes, initial_sqn: int, rng: RandomSource
    ) -> tuple[SubscriptionRecord, DeviceState]:
        """Offline registration: both sides get K, SQN, AIoT ID and a random TID."""
        if len(k) != crypto.KEY_BYTES or len(aiot_id) != ID_BYTES:
            raise ValueError("K and AIoT ID must both be 128 bits")
        crypto.sqn_to_bytes(initial_sqn)
        if aiot_id in self._records:
            raise DuplicateIdError(aiot_id.hex())
        tid = rng.randbytes(ID_BYTES)
        while tid == aiot_id or tid in self._by_tid:
            tid = rng.randbytes(ID_BYTES)
        record = SubscriptionRecord(k=k, sqn_hn=initial_sqn, aiot_id=aiot_id, tid=tid)
        self._add(record)
        device = DeviceState(k=k, sqn_ue=initial_sqn, aiot_id=aiot_id, tid=tid)
        return record, device

    def _add(self, record: SubscriptionRecord) -> None:
        self._records[record.aiot_id] = record
        self._by_tid[record.tid] = record.aiot_id
        if record.pending_tid is not None:
            self._by_tid[record.pending_tid] = record.aiot_id

    def get(self, aiot_id: bytes) -> SubscriptionRecord:
        try:
            return self._records[aiot_id]
        except KeyError:
            raise NotFoundError(aiot_id.hex()) from None

    def lookup_by_tid(self, tid: bytes) -> SubscriptionRecord:
        """Exact match on the live TID or the staged ``pending_tid``."""
        try:
            return self._records[self._by_tid[tid]]
        except KeyError:
            raise NotFoundError(tid.hex()) from None

    def stage_tid_rotation(self, aiot_id: bytes) -> bytes:
        """Compute TID_new for the live TID and remember it as pending."""
        record = self.get(aiot_id)
        tid_new = derive_next_tid(record.k, record.aiot_id, record.tid)
        if record.pending_tid is not None and record.pending_tid != tid_new:
            self._by_tid.pop(record.pending_tid, None)
        record.pending_tid = tid_new
        self._by_tid[tid_new] = aiot_id
        return tid_new

    def commit_tid_rotation(self, aiot_id: bytes) -> SubscriptionRecord:
        record = self.get(aiot_id)
        if record.pending_tid is None:
            raise NoPendingError(aiot_id.hex())
        del self._by_tid[record.tid]
        record.tid, record.pending_tid = record.pending_tid, None
        return record

    # --- snapshots ---

    def to_json(self, insecure_test_fixture: bool = False) -> str:
        rows = []
        for r in self._records.values():
            row = {
                "aiot_id": r.aiot_id.hex(),
                "tid": r.tid.hex(),
                "pending_tid": r.pending_tid.hex() if r.pending_tid else None,
                "sqn_hn": r.sqn_hn,
            }
            if insecure_test_fixture:
                row["k"] = r.k.hex()
            rows.append(row)
        return json.dumps({"insecure_test_fixture": insecure_test_fixture, "records": rows}, indent=2)

    def save(self, path: str | Path, insecure_test_fixture: bool = False) -> None:
        Path(path).write_text(self.to_json(insecure_test_fixture))

    @classmethod
    def from_json(cls, text: str) -> UdmRegistry:
        doc = json.loads(text)
        if not doc.get("insecure_test_fixture"):
            raise ValueError("snapshot carries no keys; only insecure test fixtures can be loaded")
        reg = cls()
        for row in doc["records"]:
            reg._add(SubscriptionRecord(
                k=bytes.fromhex(row["k"]),
                sqn_hn=int(row["sqn_hn"]),
                aiot_id=bytes.fromhex(row["aiot_id"]),
                tid=bytes.fromhex(row["tid"]),
                pending_tid=bytes.fromhex(row["pending_tid"]) if row.get("pending_tid") else None,
            ))
        return reg

    @classmethod
    def load(cls, path: str | Path) -> UdmRegistry:
        return cls.from_json(Path(path).read_text())


class Authorization(Enum):
    ALLOW = "ALLOW"
    DENY = "DENY"


@dataclass
class UeMapping:
    supi: bytes
    aiot_id: bytes
    tid: bytes
    pending_tid: bytes | None = None


class UeMappingTable:
    """Relay UE's view: which AIoT devices it agrees to serve."""

    def __init__(self) -> None:
        self._rows: dict[bytes, UeMapping] = {}

    def add(self, supi: bytes, aiot_id: bytes, tid: bytes) -> UeMapping:
        if aiot_id in self._rows:
            raise DuplicateIdError(aiot_id.hex())
        row = UeMapping(supi, aiot_id, tid)
        self._rows[aiot_id] = row
        return row

    def get(self, aiot_id: bytes) -> UeMapping:
        try:
            return self._rows[aiot_id]
        except KeyError:
            raise NotFoundError(aiot_id.hex()) from None

    def ue_authorize(self, tid: bytes) -> Authorization:
        for row in self._rows.values():
            if tid == row.tid:
                return Authorization.ALLOW
            if tid == row.pending_tid:
                # the device already rotated; the success notification was lost
                row.tid, row.pending_tid = tid, None
                return Authorization.ALLOW
        return Authorization.DENY

    def ue_update_tid(self, aiot_id: bytes, tid_new: bytes) -> None:
        row = self.get(aiot_id)
        row.tid, row.pending_tid = tid_new, None

    def ue_stage_tid(self, aiot_id: bytes, tid_new: bytes) -> None:
        self.get(aiot_id).pending_tid = tid_new
