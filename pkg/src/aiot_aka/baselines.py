"""Device-side cryptographic workload of each compared protocol.

The baseline 3GPP protocols are not executed; their ledgers are transcribed
line by line from the published per-operation cost tables.  The six proposed
variants have both a transcribed ledger and, via :func:`ledger_from_transcript`,
a ledger measured from an instrumented simulator run, so the two can be
compared directly.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .crypto import AES_CBC_128, AES_CMAC_128, FI_AES, HMAC_SHA256, Op, ascon_op
from .errors import UnknownProtocolError


@dataclass(frozen=True)
class LineItem:
    """One row of a per-protocol cost table."""

    label: str
    op: Op
    count: int = 1
    key_bits: int = 128
    input_bits: int = 128


class CostLedger:
    """Multiset of operation classes charged to the device for one run."""

    def __init__(self, protocol: str, counts: Mapping[Op, int] | Iterable[tuple[Op, int]],
                 items: Iterable[LineItem] = ()):
        merged: Counter[Op] = Counter()
        for op, n in (counts.items() if isinstance(counts, Mapping) else counts):
            if n <= 0:
                raise ValueError(f"count for {op} must be positive, got {n}")
            merged[op] += n
        self.protocol = protocol
        self._counts = dict(sorted(merged.items(), key=lambda kv: (kv[0].kind.value, kv[0].bits or 0)))
        self.items = tuple(items)

    @classmethod
    def from_items(cls, protocol: str, items: Iterable[LineItem]) -> CostLedger:
        items = tuple(items)
        return cls(protocol, [(it.op, it.count) for it in items], items)

    @property
    def counts(self) -> dict[Op, int]:
        return dict(self._counts)

    def multiset(self) -> Counter[Op]:
        return Counter(self._counts)

    def total_ops(self) -> int:
        return sum(self._counts.values())

    def with_op(self, op: Op, count: int = 1) -> CostLedger:
        merged = self.multiset()
        merged[op] += count
        return CostLedger(self.protocol, merged, self.items)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CostLedger):
            return NotImplemented
        return self.protocol == other.protocol and self._counts == other._counts

    def __repr__(self) -> str:
        body = " + ".join(f"{n}x{op}" for op, n in self._counts.items())
        return f"CostLedger({self.protocol!r}: {body})"

    def csv_rows(self) -> list[tuple[str, str, int]]:
        return [(self.protocol, str(op), n) for op, n in self._counts.items()]


def ledgers_to_csv(ledgers: Iterable[CostLedger]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["protocol", "op_class", "count"])
    for ledger in ledgers:
        w.writerows(ledger.csv_rows())
    return buf.getvalue()


def _hmac(label: str, input_bits: int, key_bits: int = 256, count: int = 1) -> LineItem:
    return LineItem(label, HMAC_SHA256, count, key_bits, input_bits)


_FI5 = LineItem("fi(CK,IK,AK,MAC,XRES)", FI_AES, 5)
_CBC = LineItem("AES-CBC", AES_CBC_128)
_CMAC = LineItem("AES-CMAC", AES_CMAC_128)


def _derived_5g() -> list[LineItem]:
    return [_hmac("K_NAS-enc", 40), _hmac("K_NAS-int", 40), _hmac("K_RRC-enc", 40),
            _hmac("K_RRC-int", 40), _hmac("K_UP-enc", 40), _hmac("K_UP-int", 40)]


def _best_tail() -> list[LineItem]:
    return [_hmac("K_E2M-enc", 112), _hmac("K_E2M-int", 112), _hmac("K_intermediate", 112),
            _hmac("K_EAS-PSK", 40), _hmac("K_E2E-enc", 24), _hmac("K_E2E-int", 24)]


_TABLES: dict[str, list[LineItem]] = {
    "5G-AKA": [_FI5, _hmac("RES*", 480), _hmac("K_AUSF", 328), _hmac("K_SEAF", 272),
               _hmac("K_AMF", 104), *_derived_5g(), _CBC, _CMAC],
    # K_AUSF takes four HMAC invocations
    "EAP-AKA'": [_FI5, _hmac("AT_MAC_HN", 576), _hmac("AT_MAC_UE", 64), _hmac("CK'||IK'", 96),
                 _hmac("K_AUSF", 408, count=4), _hmac("K_SEAF", 272), _hmac("K_AMF", 104),
                 *_derived_5g(), _CBC, _CMAC],
    "EPS-AKA": [_FI5, _hmac("K_ASME", 96), _hmac("K_NAS-enc", 40), _hmac("K_NAS-int", 40),
                _hmac("K_eNB", 48), _hmac("K_RRC-enc", 40), _hmac("K_RRC-int", 40),
                _hmac("K_UP-enc", 40), _hmac("K_UP-int", 40), _CBC, _CMAC],
    "CP-CIoT": [_FI5, _hmac("RES*", 480), _hmac("K_AUSF", 328), _hmac("K_SEAF", 272),
                _hmac("K_AMF", 104), _hmac("K_NAS-enc", 40), _hmac("K_NAS-int", 40), _CBC, _CMAC],
    "BEST1": [_FI5, _hmac("RES*", 480), _hmac("K_HSE", 328), *_best_tail(), _CBC, _CMAC],
    "BEST2": [_FI5, _hmac("RES*", 480), _hmac("CK'||IK'", 96), _hmac("K_HSE", 328),
              *_best_tail(), _CBC, _CMAC],
    "BEST3": [_FI5, _hmac("K_ASME", 96), *_best_tail(), _CBC, _CMAC],
    "SQN-AES": [LineItem("f1,f5(MAC,AK)", FI_AES, 2), _hmac("K_AF", 304, 128),
                _hmac("TID_new", 256, 128), _CBC, _CMAC],
    "SQN-ASCON": [LineItem("Ascon(C_HN,tag_HN)", ascon_op(304), input_bits=304),
                  LineItem("Ascon(C_AIoT,tag_AIoT)", ascon_op(128))],
    "NONCE-AES": [LineItem("f1(MAC)", FI_AES), _hmac("K_AF", 384, 128),
                  _hmac("TID_new", 256, 128), _CBC, _CMAC],
    "NONCE-ASCON": [LineItem("Ascon(C_HN,tag_HN)", ascon_op(384), input_bits=384),
                    LineItem("Ascon(C_AIoT,tag_AIoT)", ascon_op(128))],
}
# nonce and PLK share one cost table
_TABLES["PLK-AES"] = _TABLES["NONCE-AES"]
_TABLES["PLK-ASCON"] = _TABLES["NONCE-ASCON"]

PROTOCOLS: tuple[str, ...] = tuple(_TABLES)
BASELINES: tuple[str, ...] = ("5G-AKA", "EAP-AKA'", "EPS-AKA", "CP-CIoT", "BEST1", "BEST2", "BEST3")

# (display label, ledger name) for the eleven rows of the comparison tables
COMPARISON_ROWS: tuple[tuple[str, str], ...] = (
    ("5G AKA", "5G-AKA"),
    ("EAP-AKA'", "EAP-AKA'"),
    ("EPS AKA", "EPS-AKA"),
    ("CP CIoT AKA", "CP-CIoT"),
    ("BEST AKA1", "BEST1"),
    ("BEST AKA2", "BEST2"),
    ("BEST AKA3", "BEST3"),
    ("Protocol (SQN & AES)", "SQN-AES"),
    ("Protocol (SQN & Ascon)", "SQN-ASCON"),
    ("Protocol (nonce/PLK & AES)", "NONCE-AES"),
    ("Protocol (nonce/PLK & Ascon)", "NONCE-ASCON"),
)

_ALIASES = {"5G AKA": "5G-AKA", "EAP-AKA": "EAP-AKA'", "EPS AKA": "EPS-AKA", "CP CIOT": "CP-CIoT",
            "CP-CIOT": "CP-CIoT", "CP CIOT AKA": "CP-CIoT", "BEST AKA1": "BEST1",
            "BEST AKA2": "BEST2", "BEST AKA3": "BEST3"}


def canonical_name(protocol: str) -> str:
    if protocol in _TABLES:
        return protocol
    upper = protocol.strip().upper()
    for name in _TABLES:
        if name.upper() == upper:
            return name
    if upper in _ALIASES:
        return _ALIASES[upper]
    for label, name in COMPARISON_ROWS:
        if label.upper() == upper:
            return name
    raise UnknownProtocolError(protocol)


def ledger_for(protocol: str) -> CostLedger:
    """Transcribed device-side ledger; raises :class:`UnknownProtocolError`."""
    name = canonical_name(protocol)
    return CostLedger.from_items(name, _TABLES[name])


def ledger_from_transcript(transcript, session: int = -1, protocol: str | None = None) -> CostLedger:
    """Ledger of the crypto calls the device actually executed in one session."""
    summary = transcript.sessions[session]
    name = protocol or str(transcript.variant)
    return CostLedger(name, Counter(summary.device_ops))
