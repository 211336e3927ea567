"""Command-line interface.

Subcommands: ``codes`` (print the registry), ``exact`` (single-point exact
report), ``estimate`` (shot-mode single point), ``sweep-infidelity`` and
``sweep-cost`` (depth sweeps with CSV/JSON output).

Exit codes: 0 on success, 2 on configuration errors, 1 on runtime failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .codes import build_code, known_codes
from .density import derived_seed
from .exact import GadgetSchedule, evolve_qed, vqed_exact, vqed_exact_noisy_gadget
from .experiments import (
    ExperimentConfig,
    SweepRow,
    _encoded_job,
    generate_random_circuit,
    run_cost_sweep,
    run_infidelity_sweep,
    write_rows,
)
from .sampling import vqed_estimate


def _parse_depths(text: str) -> tuple[int, ...]:
    """Either a comma list "0,10,20" or an inclusive range "start:stop:step"."""
    text = text.strip()
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError(f"cannot parse depth range {text!r}")
        if step < 1:
            raise ValueError("depth range step must be >= 1")
        return tuple(range(start, stop + 1, step))
    return tuple(int(x) for x in text.split(","))


def _add_common(p: argparse.ArgumentParser, *, sweep: bool) -> None:
    p.add_argument("--code", default="code_412", help="code name (see `codes`)")
    p.add_argument("--depths", default=None, help='"0,10,20" or inclusive "0:100:10"')
    p.add_argument("--p", type=float, default=0.01, help="per-qubit gate depolarizing strength")
    p.add_argument(
        "--gadget-noise",
        default="off",
        choices=("off", "system_gadget", "ancilla_only"),
        help="noise placement on the projection gadget itself",
    )
    p.add_argument("--gadget-noise-p", type=float, default=None, help="gadget noise strength (defaults to --p)")
    p.add_argument("--variant", default="single_control", choices=("single_control", "two_controls"))
    p.add_argument("--seed", type=int, default=7, help="master seed")
    p.add_argument("--config", default=None, help="JSON config file; its entries override flags")
    p.add_argument("--out", default=None, help="output file path (default: stdout)")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--threads", type=int, default=None, help="worker threads for sweep grids")
    if sweep:
        p.add_argument(
            "--schedule",
            default=",".join(ExperimentConfig.__dataclass_fields__["schedules"].default),
            help="comma-separated gadget schedules to compare",
        )
        p.add_argument("--circuits", type=int, default=20, help="random circuits per grid point")
    else:
        p.add_argument("--schedule", default="every_gate", help="gadget schedule")
        p.add_argument("--circuits", type=int, default=1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqed",
        description="Virtual quantum error detection on stabilizer codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("codes", help="list the built-in codes")

    p_exact = sub.add_parser("exact", help="exact single-point report")
    _add_common(p_exact, sweep=False)

    p_est = sub.add_parser("estimate", help="shot-mode single-point estimate")
    _add_common(p_est, sweep=False)
    p_est.add_argument("--shots", type=int, default=10000)
    p_est.add_argument("--eps", type=float, default=0.01, help="target accuracy for the shot budget report")

    p_inf = sub.add_parser("sweep-infidelity", help="infidelity versus depth")
    _add_common(p_inf, sweep=True)

    p_cost = sub.add_parser("sweep-cost", help="sampling cost versus depth")
    _add_common(p_cost, sweep=True)

    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = dict(
        code=args.code,
        depths=_parse_depths(args.depths) if args.depths else None,
        p=args.p,
        gadget_noise=args.gadget_noise,
        gadget_noise_p=args.gadget_noise_p,
        schedules=tuple(s.strip() for s in args.schedule.split(",")),
        circuits=args.circuits,
        seed=args.seed,
        variant=args.variant,
        out=args.out,
        format=args.format,
        threads=args.threads,
    )
    if getattr(args, "shots", None) is not None:
        values["shots"] = args.shots
        values["mode"] = "exact"  # sweeps stay exact; shots only feed `estimate`
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        unknown = set(doc) - set(ExperimentConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "depths" in doc and doc["depths"] is not None:
            doc["depths"] = tuple(doc["depths"])
        if "schedules" in doc:
            doc["schedules"] = tuple(doc["schedules"])
        values.update(doc)
    return ExperimentConfig(**values)


def _single_depth(cfg: ExperimentConfig) -> int:
    depths = cfg.resolved_depths()
    if len(depths) != 1:
        raise ValueError("this command takes a single depth, e.g. --depths 20")
    return depths[0]


def _emit(rows: list[SweepRow], cfg: ExperimentConfig, out) -> None:
    text = write_rows(rows, cfg.out, cfg.format)
    if cfg.out is None:
        out.write(text)


def _cmd_codes(out) -> int:
    for name in known_codes():
        code = build_code(name)
        gens = " ".join(str(g) for g in code.generators)
        out.write(
            f"{name}  [[{code.n},{code.k},{code.d}]]  generators: {gens}  "
            f"Z_L: {code.logical_z[0]}  X_L: {code.logical_x[0]}  "
            f"transversal gates: {len(code.transversal)}\n"
        )
    return 0


def _cmd_exact(args: argparse.Namespace, out) -> int:
    cfg = _config_from_args(args)
    depth = _single_depth(cfg)
    schedule_text = cfg.schedules[0]
    code = build_code(cfg.code)
    row = _encoded_job(cfg, code, schedule_text, 0, with_infidelity=True)[depth]

    spec = generate_random_circuit(
        code, depth, derived_seed(cfg.seed, 0), noise=cfg.noise_model()
    )
    schedule = GadgetSchedule.parse(schedule_text, cfg.variant)
    if cfg.gadget_noise == "off":
        value = vqed_exact(spec, schedule)
    else:
        value = vqed_exact_noisy_gadget(spec, schedule)
    row = dataclasses.replace(row, ratio=value.ratio)

    if cfg.format == "json":
        doc = dataclasses.asdict(row)
        doc.update(numerator=value.numerator, denominator=value.denominator)
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(f"code={cfg.code} L={depth} schedule={schedule.label} p={cfg.p:.12g}\n")
        out.write(f"infidelity={row.infidelity:.12g}\n")
        out.write(f"trace={row.trace:.12g}\n")
        out.write(f"cost={row.cost:.12g}\n")
        out.write(f"numerator={value.numerator:.12g}\n")
        out.write(f"denominator={value.denominator:.12g}\n")
        out.write(f"ratio={value.ratio:.12g}\n")
    if cfg.out:
        write_rows([row], cfg.out, "csv" if cfg.format == "csv" else "json")
    return 0


def _cmd_estimate(args: argparse.Namespace, out) -> int:
    cfg = _config_from_args(args)
    depth = _single_depth(cfg)
    code = build_code(cfg.code)
    spec = generate_random_circuit(
        code, depth, derived_seed(cfg.seed, 0), noise=cfg.noise_model()
    )
    schedule = GadgetSchedule.parse(cfg.schedules[0], cfg.variant)
    result = vqed_estimate(spec, schedule, args.shots, cfg.seed, target_eps=args.eps)
    row = SweepRow(
        code=cfg.code,
        L=depth,
        schedule=schedule.label,
        circuit=0,
        seed=cfg.seed,
        ratio=result.ratio,
        variance=result.variance,
        shots=result.shots,
    )
    if cfg.format == "json":
        doc = dataclasses.asdict(row)
        doc.update(
            a_mean=result.a_mean,
            b_mean=result.b_mean,
            stderr=result.stderr,
            denominator_ok=result.denominator_ok,
            predicted_shots=result.predicted_shots,
        )
        out.write(json.dumps(doc, indent=2) + "\n")
    else:
        out.write(f"code={cfg.code} L={depth} schedule={schedule.label} p={cfg.p:.12g}\n")
        out.write(f"a_mean={result.a_mean:.12g}\n")
        out.write(f"b_mean={result.b_mean:.12g}\n")
        if result.denominator_ok:
            out.write(f"ratio={result.ratio:.12g}\n")
            out.write(f"stderr={result.stderr:.12g}\n")
            out.write(f"predicted_shots_for_eps={result.predicted_shots:.12g}\n")
        else:
            out.write("ratio=None (denominator indistinguishable from zero)\n")
        out.write(f"shots={result.shots}\n")
    if cfg.out:
        write_rows([row], cfg.out, "csv" if cfg.format == "csv" else "json")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = sys.stdout
    try:
        if args.command == "codes":
            return _cmd_codes(out)
        if args.command == "exact":
            return _cmd_exact(args, out)
        if args.command == "estimate":
            return _cmd_estimate(args, out)
        cfg = _config_from_args(args)
        rows = (
            run_infidelity_sweep(cfg)
            if args.command == "sweep-infidelity"
            else run_cost_sweep(cfg)
        )
        _emit(rows, cfg, out)
        return 0
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
