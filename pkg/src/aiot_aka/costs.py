"""Time, energy and capacitor-budget model over cost ledgers.

Per-operation timings are microseconds measured at a 4 MHz reference clock.
A ledger's time is the count-weighted sum, rescaled linearly when a different
clock is configured; energy is power times time; the budget ratio is energy
as a percentage of a capacitor's stored charge.

Display rounding for the time table goes through an intermediate digit: the
value is first rounded half-up to one digit beyond the displayed precision and
that result is then rounded half-down.  This is the rule under which all
eleven published rows are reproduced (3.5515 s shows as 3.5, 3.199 s as 3.2).
Energy figures are computed from the displayed times unless ``rounded=False``.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_DOWN, ROUND_HALF_UP, Decimal
from pathlib import Path

from .baselines import COMPARISON_ROWS, CostLedger, ledger_for
from .crypto import Op, OpKind
from .errors import UncalibratedOpError

REFERENCE_CLOCK_HZ = 4_000_000

DEFAULT_US = {
    OpKind.FI_AES: 3515.0,
    OpKind.HMAC_SHA256: 352417.0,
    OpKind.AES_CBC_128: 3536.0,
    OpKind.AES_CMAC_128: 6219.0,
}
DEFAULT_ASCON_US = {128: 12136.0, 304: 12174.0, 384: 12193.0}


@dataclass(frozen=True)
class Calibration:
    """Microseconds per operation class at :data:`REFERENCE_CLOCK_HZ`."""

    us: dict[OpKind, float] = field(default_factory=lambda: dict(DEFAULT_US))
    ascon_us: dict[int, float] = field(default_factory=lambda: dict(DEFAULT_ASCON_US))
    clock_hz: float = REFERENCE_CLOCK_HZ

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError("clock_hz must be positive")
        for value in [*self.us.values(), *self.ascon_us.values()]:
            if value <= 0:
                raise ValueError("calibrated timings must be positive")

    def with_clock(self, clock_hz: float) -> Calibration:
        return Calibration(dict(self.us), dict(self.ascon_us), clock_hz)

    def reference_us(self, op: Op) -> float:
        """Microseconds for one ``op`` at the reference clock."""
        if op.kind is OpKind.ASCON_SEAL:
            return self._ascon(op)
        try:
            return self.us[op.kind]
        except KeyError:
            raise UncalibratedOpError(str(op)) from None

    def _ascon(self, op: Op) -> float:
        table = self.ascon_us
        if not table or op.bits is None:
            raise UncalibratedOpError(str(op))
        if op.bits in table:
            return table[op.bits]
        widths = sorted(table)
        if len(widths) == 1:
            return table[widths[0]]
        # linear between the nearest calibrated widths, extended from the end segments
        i = min(max(bisect.bisect_left(widths, op.bits), 1), len(widths) - 1)
        w0, w1 = widths[i - 1], widths[i]
        t0, t1 = table[w0], table[w1]
        return t0 + (t1 - t0) * (op.bits - w0) / (w1 - w0)

    def seconds(self, op: Op) -> float:
        return self.reference_us(op) * 1e-6 * REFERENCE_CLOCK_HZ / self.clock_hz

    # JSON layout: {"FI_AES": 3515, ..., "ASCON_SEAL": {"128": 12136, ...}, "clock_hz": 4000000}
    def to_json(self) -> str:
        doc = {k.value: v for k, v in self.us.items()}
        doc[OpKind.ASCON_SEAL.value] = {str(w): v for w, v in sorted(self.ascon_us.items())}
        doc["clock_hz"] = self.clock_hz
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> Calibration:
        doc = json.loads(text)
        clock = float(doc.pop("clock_hz", REFERENCE_CLOCK_HZ))
        ascon = {int(w): float(v) for w, v in doc.pop(OpKind.ASCON_SEAL.value, {}).items()}
        us = {OpKind(k): float(v) for k, v in doc.items()}
        return cls(us, ascon, clock)

    @classmethod
    def load(cls, path: str | Path) -> Calibration:
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class EnergyEnv:
    powers_w: tuple[float, ...] = (10e-6, 300e-6)
    budgets_j: tuple[float, ...] = (5.4e-5, 5.4e-3)

    def __post_init__(self):
        if not self.powers_w or not self.budgets_j:
            raise ValueError("need at least one power level and one budget")
        if min(self.powers_w) <= 0 or min(self.budgets_j) <= 0:
            raise ValueError("powers and budgets must be positive")


def time_of(ledger: CostLedger, calibration: Calibration | None = None) -> float:
    """Seconds the device spends on ``ledger``; raises :class:`UncalibratedOpError`."""
    cal = calibration or Calibration()
    return sum(n * cal.seconds(op) for op, n in ledger.counts.items())


def energy_of(seconds: float, power_w: float) -> float:
    if seconds < 0 or power_w < 0:
        raise ValueError("time and power must be non-negative")
    return power_w * seconds


def budget_ratio(joules: float, budget_j: float) -> float:
    """Energy as a percentage of the budget."""
    if budget_j <= 0 or joules < 0:
        raise ValueError("budget must be positive and energy non-negative")
    return joules / budget_j * 100.0


def display_precision(seconds: float) -> Decimal:
    return Decimal("0.1") if seconds >= 0.1 else Decimal("0.01")


def round_time(seconds: float) -> float:
    step = display_precision(seconds)
    value = Decimal(repr(seconds)).quantize(step / 10, rounding=ROUND_HALF_UP)
    return float(value.quantize(step, rounding=ROUND_HALF_DOWN))


def format_time(seconds: float, rounded: bool = True) -> str:
    if not rounded:
        return f"{seconds:.6f}"
    step = display_precision(seconds)
    return str(Decimal(repr(round_time(seconds))).quantize(step))


def format_percent(value: float, rounded: bool = True) -> str:
    if not rounded:
        return f"{value:.6g}"
    return f"{value:.1f}" if value >= 1 else f"{value:#.3g}"


def format_energy_1e5(joules: float) -> str:
    return f"{round(joules / 1e-5, 6):g}"


@dataclass(frozen=True)
class TimeRow:
    label: str
    protocol: str
    seconds: float
    shown: float


@dataclass(frozen=True)
class EnergyRow:
    label: str
    protocol: str
    seconds: float
    energy_j: tuple[float, ...]  # per power level
    ratios: tuple[tuple[float, ...], ...]  # [power][budget], percent


@dataclass
class ComparisonTables:
    time_rows: list[TimeRow]
    energy_rows: list[EnergyRow]
    env: EnergyEnv
    rounded: bool = True

    def time_row(self, protocol_or_label: str) -> TimeRow:
        return next(r for r in self.time_rows if protocol_or_label in (r.protocol, r.label))

    def energy_row(self, protocol_or_label: str) -> EnergyRow:
        return next(r for r in self.energy_rows if protocol_or_label in (r.protocol, r.label))

    def _energy_header(self) -> list[str]:
        head = ["Protocol"]
        for p in self.env.powers_w:
            uw = f"{p * 1e6:g}uW"
            head.append(f"EO@{uw} (1e-5 J)")
            head += [f"EO@{uw}/{b:g}J (%)" for b in self.env.budgets_j]
        return head

    def _energy_cells(self, row: EnergyRow) -> list[str]:
        cells = [row.label]
        for e, ratios in zip(row.energy_j, row.ratios):
            cells.append(format_energy_1e5(e) if self.rounded else f"{e / 1e-5:.6g}")
            cells += [format_percent(r, self.rounded) for r in ratios]
        return cells

    def time_table(self) -> tuple[list[str], list[list[str]]]:
        return (["Protocol", "Computational Cost (s)"],
                [[r.label, format_time(r.seconds, self.rounded)] for r in self.time_rows])

    def energy_table(self) -> tuple[list[str], list[list[str]]]:
        return self._energy_header(), [self._energy_cells(r) for r in self.energy_rows]

    @staticmethod
    def _csv(header, rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()

    @staticmethod
    def _markdown(header, rows) -> str:
        table = [header, *rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        fmt = lambda r: "| " + " | ".join(c.ljust(w) for c, w in zip(r, widths)) + " |"  # noqa: E731
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([fmt(header), sep, *(fmt(r) for r in rows)]) + "\n"

    def time_csv(self) -> str:
        return self._csv(*self.time_table())

    def energy_csv(self) -> str:
        return self._csv(*self.energy_table())

    def time_markdown(self) -> str:
        return self._markdown(*self.time_table())

    def energy_markdown(self) -> str:
        return self._markdown(*self.energy_table())


def comparison_tables(
    rows: tuple[tuple[str, str], ...] = COMPARISON_ROWS,
    calibration: Calibration | None = None,
    env: EnergyEnv | None = None,
    rounded: bool = True,
) -> ComparisonTables:
    """Time and energy tables for ``rows`` of (display label, ledger name)."""
    cal = calibration or Calibration()
    env = env or EnergyEnv()
    time_rows, energy_rows = [], []
    for label, name in rows:
        t = time_of(ledger_for(name), cal)
        shown = round_time(t)
        time_rows.append(TimeRow(label, name, t, shown))
        used = shown if rounded else t
        energies = tuple(energy_of(used, p) for p in env.powers_w)
        ratios = tuple(tuple(budget_ratio(e, b) for b in env.budgets_j) for e in energies)
        energy_rows.append(EnergyRow(label, name, used, energies, ratios))
    return ComparisonTables(time_rows, energy_rows, env, rounded)
