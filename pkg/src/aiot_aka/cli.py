"""Command-line entry point: ``aiot-aka run | attack | bench | calibration``.

Exit codes: 0 success or all properties pass, 1 protocol reject or a failed
property, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

from . import __version__
from .attacks import PROPERTIES, attack_suite
from .baselines import PROTOCOLS, ledger_for, ledgers_to_csv
from .costs import Calibration, EnergyEnv, comparison_tables
from .messages import Basis, Indicator, Variant
from .protocol import DEFAULT_WINDOW, Mutation
from .sim import Network, load_script

SEED_ENV = "AIOT_AKA_SEED"


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _add_variant(p: argparse.ArgumentParser) -> None:
    p.add_argument("--basis", choices=[b.value for b in Basis], default="sqn")
    p.add_argument("--indicator", type=int, choices=[0, 1], default=0)
    p.add_argument("--seed", type=_seed, default=None,
                   help=f"64-bit seed (falls back to ${SEED_ENV}, then 0)")
    p.add_argument("--mutate", choices=[m.value for m in Mutation], default=Mutation.NONE.value)
    p.add_argument("--out", type=Path, default=Path("."))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aiot-aka", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one authentication and write its transcript")
    run.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], default=1)
    _add_variant(run)
    run.add_argument("--data", help="application data as hex (default: drawn from the seed)")
    run.add_argument("--attack-script", type=Path, help="JSON list of {step, action, args}")
    run.add_argument("--warmup", type=int, default=1,
                     help="honest sessions the adversary observes before the scripted one")
    run.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    run.add_argument("--snapshot", type=Path, help="also write the UDM registry (test fixture, includes K)")

    atk = sub.add_parser("attack", help="run the security property battery")
    _add_variant(atk)
    atk.add_argument("--suite", default="all",
                     help=f"comma-separated subset of: {', '.join(PROPERTIES)} (default all)")
    atk.add_argument("--scenario", type=int, choices=[1, 2, 3, 4], action="append",
                     help="restrict to these scenarios (repeatable)")
    atk.add_argument("--sessions", type=int, default=100, help="sessions for the linkability probe")

    bench = sub.add_parser("bench", help="emit the time and energy comparison tables")
    bench.add_argument("--calibration", type=Path)
    bench.add_argument("--power", type=_positive, nargs="+", help="power levels in W")
    bench.add_argument("--budget", type=_positive, nargs="+", help="energy budgets in J")
    bench.add_argument("--clock", type=_positive, help="device clock in Hz")
    bench.add_argument("--unrounded", action="store_true", help="energy from full-precision times")
    bench.add_argument("--out", type=Path, default=Path("."))

    cal = sub.add_parser("calibration", help="write the default calibration file")
    cal.add_argument("--out", type=Path, default=Path("calibration.json"))
    return parser


def _resolve_seed(args, parser) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return _seed(env)
    except (ValueError, argparse.ArgumentTypeError):
        parser.error(f"${SEED_ENV} is not a valid 64-bit seed: {env!r}")


def _fingerprint(key: bytes | None) -> str:
    return hashlib.sha256(key).hexdigest()[:16] if key else "-"


def cmd_run(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    variant = Variant(Basis(args.basis), Indicator(args.indicator))
    data = None
    if args.data is not None:
        try:
            data = bytes.fromhex(args.data)
        except ValueError:
            parser.error("--data must be hex")
        if not data or (variant.indicator == 0 and len(data) % 16):
            parser.error("--data must be a non-empty multiple of 16 bytes with indicator 0")
    script = None
    if args.attack_script is not None:
        try:
            script = load_script(args.attack_script)
        except (OSError, ValueError, KeyError) as exc:
            parser.error(f"cannot read attack script: {exc}")

    net = Network(args.scenario, variant, seed, window=args.window, mutation=Mutation(args.mutate))
    if script is not None:
        for _ in range(args.warmup):
            net.run_session()
    try:
        summary = net.run_session(script, data)
    except ValueError as exc:
        parser.error(f"attack script: {exc}")

    args.out.mkdir(parents=True, exist_ok=True)
    stem = f"run-s{args.scenario}-{variant.name.lower()}-seed{seed}"
    (args.out / f"{stem}.log").write_text(net.transcript.dump())
    lines = [
        f"scenario {args.scenario} variant {variant} seed {seed}",
        *(f"verdict {party} {v}" for party, v in sorted(summary.verdicts.items())),
        *(f"k_af {party} {_fingerprint(k)}" for party, k in sorted(summary.k_af.items())),
        f"tid before {summary.tid_before.hex()}",
        f"tid after  {summary.tid_after.hex()}",
        f"data in  {summary.data_in.hex()}",
        f"data out {summary.data_out.hex() if summary.data_out else '-'}",
    ]
    text = "\n".join(lines) + "\n"
    (args.out / f"{stem}.txt").write_text(text)
    if args.snapshot is not None:
        net.registry.save(args.snapshot, insecure_test_fixture=True)
    sys.stdout.write(text)
    return 0 if summary.accepted else 1


def cmd_attack(args, parser) -> int:
    seed = _resolve_seed(args, parser)
    variant = Variant(Basis(args.basis), Indicator(args.indicator))
    wanted = list(PROPERTIES) if args.suite == "all" else [s.strip() for s in args.suite.split(",")]
    unknown = [s for s in wanted if s not in PROPERTIES]
    if unknown or not wanted:
        parser.error(f"unknown suite {','.join(unknown) or args.suite!r}; choose from {', '.join(PROPERTIES)}")
    report = attack_suite(variant, seed=seed, mutation=args.mutate, properties=wanted,
                          scenarios=args.scenario or (1, 2, 3, 4), sessions=args.sessions)
    args.out.mkdir(parents=True, exist_ok=True)
    name = f"attack-{variant.name.lower()}-{args.mutate}-seed{seed}.txt"
    text = report.to_text()
    (args.out / name).write_text(text)
    sys.stdout.write(text)
    return 0 if report.passed else 1


def cmd_bench(args, parser) -> int:
    try:
        cal = Calibration.load(args.calibration) if args.calibration else Calibration()
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read calibration: {exc}")
    if args.clock:
        cal = cal.with_clock(args.clock)
    defaults = EnergyEnv()
    env = EnergyEnv(tuple(args.power or defaults.powers_w), tuple(args.budget or defaults.budgets_j))
    tables = comparison_tables(calibration=cal, env=env, rounded=not args.unrounded)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "time_table.csv").write_text(tables.time_csv())
    (out / "time_table.md").write_text(tables.time_markdown())
    (out / "energy_table.csv").write_text(tables.energy_csv())
    (out / "energy_table.md").write_text(tables.energy_markdown())
    (out / "ledgers.csv").write_text(ledgers_to_csv(ledger_for(p) for p in PROTOCOLS))
    sys.stdout.write(tables.time_markdown() + "\n" + tables.energy_markdown())
    return 0


def cmd_calibration(args, parser) -> int:
    args.out.write_text(Calibration().to_json() + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": cmd_run, "attack": cmd_attack, "bench": cmd_bench,
               "calibration": cmd_calibration}[args.command]
    return handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
