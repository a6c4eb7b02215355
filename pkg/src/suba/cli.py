"""Command-line interface: simulation studies, sensitivity sweeps, report
pretty-printing, and the live-trial service runner.

Outputs per study: ``replicates.csv`` (one row per replicate and design),
``aggregate.json`` (table-shaped summaries), and ``orr_diffs.csv``
(per-replicate paired differences, plot-ready). A JSON config file passed
via --config overrides any flag of the same name.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .simulate import (
    ALL_DESIGNS,
    DESIGN_SUBA,
    StudyConfig,
    StudyResult,
    SweepResult,
    run_study,
    sensitivity_sweep,
)

CONFIG_KEYS = {
    "scenario": int,
    "designs": lambda v: tuple(v.split(",")) if isinstance(v, str) else tuple(v),
    "replicates": int,
    "N": int,
    "runin": int,
    "phi": float,
    "grid": int,
    "seed": int,
    "jobs": lambda v: None if v in (None, "", "auto") else int(v),
    "allocation": str,
    "power_c": float,
    "reg_coding": str,
    "ar_boundaries": lambda v: tuple(float(x) for x in (v.split(",") if isinstance(v, str) else v)),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suba",
        description="Subgroup-based adaptive trial designs: simulation and conduct.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_study_flags(p):
        p.add_argument("--scenario", type=int, default=2, help="scenario id 1-6")
        p.add_argument(
            "--designs",
            default=",".join(ALL_DESIGNS),
            help="comma-separated subset of suba,er,ar,reg",
        )
        p.add_argument("--replicates", type=int, default=200)
        p.add_argument("--N", type=int, default=300, help="maximum sample size")
        p.add_argument("--runin", type=int, default=100, help="run-in size")
        p.add_argument("--phi", type=float, default=0.5, help="marker-reuse penalty")
        p.add_argument("--grid", type=int, default=10, help="grid points per marker")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers")
        p.add_argument(
            "--allocation", choices=("argmax", "power"), default="argmax"
        )
        p.add_argument("--power-c", dest="power_c", type=float, default=1.0)
        p.add_argument(
            "--reg-coding",
            dest="reg_coding",
            choices=("categorical", "numeric"),
            default="categorical",
        )
        p.add_argument(
            "--ar-boundaries",
            dest="ar_boundaries",
            default="-0.5,0.5",
            help="comma-separated subgroup boundaries on biomarker 1",
        )
        p.add_argument("--config", type=Path, default=None, help="JSON config file; file values override flags")
        p.add_argument("--out", type=Path, required=True, help="output directory")
        p.add_argument("--quiet", action="store_true")

    study_p = sub.add_parser("study", help="run one simulation study")
    add_study_flags(study_p)

    sweep_p = sub.add_parser("sweep", help="run a sensitivity sweep")
    add_study_flags(sweep_p)
    sweep_p.add_argument("--axis", choices=("phi", "N"), required=True)
    sweep_p.add_argument(
        "--values",
        default=None,
        help="comma-separated axis values (defaults: phi 0.2,0.5,0.8; N 100,200,300)",
    )

    report_p = sub.add_parser("report", help="pretty-print study output")
    report_p.add_argument("path", type=Path, help="aggregate.json, sweep_summary.json, or a study directory")

    serve_p = sub.add_parser("serve", help="run the live-trial HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8321)
    serve_p.add_argument(
        "--static-dir",
        type=Path,
        default=None,
        help="directory of built console assets to serve at /",
    )
    return parser


def study_config_from_args(args) -> StudyConfig:
    values = {
        "scenario": args.scenario,
        "designs": args.designs,
        "replicates": args.replicates,
        "N": args.N,
        "runin": args.runin,
        "phi": args.phi,
        "grid": args.grid,
        "seed": args.seed,
        "jobs": args.jobs,
        "allocation": args.allocation,
        "power_c": args.power_c,
        "reg_coding": args.reg_coding,
        "ar_boundaries": args.ar_boundaries,
    }
    if args.config is not None:
        overrides = json.loads(Path(args.config).read_text())
        unknown = set(overrides) - set(CONFIG_KEYS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        values.update(overrides)
    coerced = {k: CONFIG_KEYS[k](v) for k, v in values.items()}
    return StudyConfig(
        scenario=coerced["scenario"],
        designs=coerced["designs"],
        replicates=coerced["replicates"],
        n_max=coerced["N"],
        n_runin=coerced["runin"],
        phi=coerced["phi"],
        grid_points_per_dim=coerced["grid"],
        master_seed=coerced["seed"],
        n_jobs=coerced["jobs"],
        allocation_mode=coerced["allocation"],
        power_c=coerced["power_c"],
        reg_coding=coerced["reg_coding"],
        ar_boundaries=coerced["ar_boundaries"],
    )


def write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    keys: list[str] = []
    for row in rows:
        for k in row:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(rows)


def write_study_outputs(result: StudyResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "replicates.csv", result.replicate_rows())
    (out / "aggregate.json").write_text(
        json.dumps(result.aggregate(), indent=2, sort_keys=True) + "\n"
    )
    if DESIGN_SUBA in result.config.designs and result.has_post_runin:
        rows = []
        others = [d for d in result.config.designs if d != DESIGN_SUBA]
        diffs = {d: result.orr_diffs(d) for d in others}
        for i, rep in enumerate(result.replicates):
            row = {"replicate": rep.replicate}
            for d in others:
                row[f"orr_suba_minus_{d}"] = float(diffs[d][i])
            rows.append(row)
        write_csv(out / "orr_diffs.csv", rows)


def write_sweep_outputs(sweep: SweepResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_summary.json").write_text(
        json.dumps(sweep.summary(), indent=2, sort_keys=True) + "\n"
    )
    for value, result in zip(sweep.values, sweep.results):
        write_study_outputs(result, out / f"value_{value}")
    if sweep.axis == "N" and DESIGN_SUBA in sweep.results[0].config.designs:
        rows = []
        for value, result in zip(sweep.values, sweep.results):
            q = result.q_diff_matrix()
            for rep, (d12, d13) in zip(result.replicates, q):
                rows.append(
                    {
                        "N": value,
                        "replicate": rep.replicate,
                        "q1_minus_q2": float(d12),
                        "q1_minus_q3": float(d13),
                    }
                )
        write_csv(out / "q_diffs.csv", rows)


def _progress_printer(quiet: bool):
    if quiet:
        return None

    def show(done, total):
        if done == total or done % 10 == 0:
            print(f"  {done}/{total} replicates", file=sys.stderr, flush=True)

    return show


def cmd_study(args) -> int:
    config = study_config_from_args(args)
    result = run_study(config, progress=_progress_printer(args.quiet))
    write_study_outputs(result, args.out)
    if not args.quiet:
        print(format_aggregate(result.aggregate()))
        print(f"outputs written to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    config = study_config_from_args(args)
    values = None
    if args.values:
        cast = float if args.axis == "phi" else int
        values = tuple(cast(v) for v in args.values.split(","))
    progress = None
    if not args.quiet:
        def progress(i, done, total):  # noqa: E306
            if done == total or done % 10 == 0:
                print(f"  value {i + 1}: {done}/{total}", file=sys.stderr, flush=True)
    sweep = sensitivity_sweep(config, args.axis, values=values, progress=progress)
    write_sweep_outputs(sweep, args.out)
    if not args.quiet:
        print(format_sweep(sweep.summary()))
        print(f"outputs written to {args.out}")
    return 0


def format_aggregate(agg: dict) -> str:
    lines = [
        f"scenario {agg['scenario']}  replicates {agg['replicates']}  "
        f"N {agg['n_max']}  run-in {agg['n_runin']}  phi {agg['phi']}"
    ]
    arm_keys = None
    for design, entry in agg["designs"].items():
        arm_keys = sorted(entry["anp"], key=int)
        anp = "  ".join(f"{entry['anp'][t]:7.2f}" for t in arm_keys)
        orr = (
            f"  ORR {entry['orr_mean']:.4f} (se {entry['orr_se']:.4f})"
            if "orr_mean" in entry
            else ""
        )
        stop = (
            f"  mean stop {entry['mean_stop_size']:.2f}"
            if "mean_stop_size" in entry
            else ""
        )
        lines.append(f"{design:>5}  ANP[{','.join(arm_keys)}]: {anp}{orr}{stop}")
        if "anp_by_subset" in entry:
            for subset, vals in entry["anp_by_subset"].items():
                row = "  ".join(f"{vals[t]:7.2f}" for t in arm_keys)
                lines.append(f"       {subset}: {row}")
    for other, d in agg.get("orr_diffs", {}).items():
        lines.append(
            f"ORR(suba) - ORR({other}): mean {d['mean']:+.4f} (se {d['se']:.4f}), "
            f"suba higher in {d['suba_higher_fraction']:.1%} of replicates"
        )
    return "\n".join(lines)


def format_sweep(summary: dict) -> str:
    lines = [f"sweep over {summary['axis']}"]
    for entry in summary["studies"]:
        lines.append(f"--- {summary['axis']} = {entry['value']} ---")
        lines.append(format_aggregate(entry["aggregate"]))
    return "\n".join(lines)


def cmd_report(args) -> int:
    path = args.path
    if path.is_dir():
        for candidate in ("aggregate.json", "sweep_summary.json"):
            if (path / candidate).exists():
                path = path / candidate
                break
        else:
            raise SystemExit(f"no aggregate.json or sweep_summary.json in {args.path}")
    data = json.loads(path.read_text())
    if "axis" in data:
        print(format_sweep(data))
    else:
        print(format_aggregate(data))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    journal_dir = os.environ.get("SUBA_JOURNAL_DIR", "./journals")
    app = create_app(journal_dir=journal_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "study": cmd_study,
        "sweep": cmd_sweep,
        "report": cmd_report,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
