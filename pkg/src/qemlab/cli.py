"""Command-line front end.

Subcommands: parse, encode, run, repro, bounds. Exit codes: 0 success,
2 configuration / input error, 3 simulation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import BoundInputs, min_d_for_epsilon, ratio_report
from .circuit import CircuitError, parse_circuit, serialize_circuit
from .codes import CodeSpec, HadamardMode, compile_logical
from .density import SimulationError
from .harness import SCENARIOS, ConfigError, ExperimentConfig, emit, repro, run_experiment

EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qemlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a circuit file and print its canonical form")
    p.add_argument("file", type=Path)

    p = sub.add_parser("encode", help="compile a logical circuit onto a code")
    p.add_argument("file", type=Path)
    p.add_argument("--code", required=True, help="rep:<d> or steane")
    p.add_argument("--hmode", default="ft", choices=[m.value for m in HadamardMode])
    p.add_argument("--layout", default="blocked", choices=["blocked", "interleaved"])
    p.add_argument("--out", type=Path, default=None,
                   help="write <out>.circ and <out>.layout.json instead of stdout")

    p = sub.add_parser("run", help="run an experiment config (JSON)")
    p.add_argument("config", type=Path)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("repro", help="run a documented reproduction scenario")
    p.add_argument("scenario", choices=list(SCENARIOS))
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("bounds", help="evaluate the error / post-selection bounds")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=None,
                   help="also search the smallest odd d with ratio < epsilon")
    p.add_argument("--format", default="json", choices=["csv", "json"])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, CircuitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "parse":
        print(serialize_circuit(parse_circuit(args.file.read_text())))
        return 0

    if args.command == "encode":
        circuit = parse_circuit(args.file.read_text())
        encoded = compile_logical(
            CodeSpec.parse(args.code), circuit, HadamardMode.parse(args.hmode), args.layout)
        text = serialize_circuit(encoded.physical)
        sidecar = encoded.sidecar_json()
        if args.out is not None:
            args.out.with_suffix(".circ").write_text(text + "\n")
            args.out.with_suffix(".layout.json").write_text(sidecar + "\n")
        else:
            print(text)
            print("# layout sidecar:")
            for line in sidecar.splitlines():
                print(f"# {line}")
        return 0

    if args.command == "run":
        doc = json.loads(args.config.read_text())
        cfg = ExperimentConfig.from_json(doc, base_dir=args.config.parent)
        records = _simulate(run_experiment, cfg, workers=args.workers)
        _write(records, args)
        return 0

    if args.command == "repro":
        if args.scenario.startswith("hdw"):
            print("# simulated analog of the hardware runs (nominal p2=0.01); "
                  "hardware numbers are not reproduced", file=sys.stderr)
        records = _simulate(repro, args.scenario, shots=args.shots,
                            seed=args.seed, workers=args.workers)
        _write(records, args)
        return 0

    if args.command == "bounds":
        report = ratio_report(BoundInputs(d=args.d, t=args.t, h=args.h, p=args.p))
        row = {"d": args.d, "t": args.t, "h": args.h, "p": args.p, **report.to_row()}
        if args.epsilon is not None:
            row["min_odd_d"] = min_d_for_epsilon(args.t + 3 * args.h, args.h,
                                                 args.p, args.epsilon)
        if args.format == "json":
            print(json.dumps(row, indent=2, sort_keys=True))
        else:
            print(",".join(str(k) for k in row))
            print(",".join(str(v) for v in row.values()))
        return 0

    raise ConfigError(f"unknown command {args.command!r}")  # pragma: no cover


def _simulate(fn, *fn_args, **fn_kwargs):
    """Route runtime failures to the simulation exit code."""
    try:
        return fn(*fn_args, **fn_kwargs)
    except (ConfigError, SimulationError):
        raise
    except (MemoryError, RuntimeError) as exc:
        raise SimulationError(str(exc)) from exc


def _write(records, args) -> None:
    text = emit(records, args.format, args.out)
    if args.out is None:
        print(text, end="")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
