"""Command-line scenario runner.

    seed6d run <config>... [--out DIR] [--seed N] [--jobs N]
    seed6d sysid <config> [--out DIR] [--seed N]
    seed6d eval-estimator <config> [--out DIR] [--seed N]
    seed6d gen-corpus <config> [--out DIR] [--seed N]

Outputs land in --out, else $SEED6D_OUT, else ./seed6d_out, one
subdirectory per scenario name.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import Seed6dError
from .scenarios import (
    ContactScenario,
    EstimatorScenario,
    SysIdScenario,
    generate_corpus,
    load_config,
    run_contact_scenario,
    run_estimator_eval,
    run_sysid_scenario,
    write_trace,
)


def _out_root(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("SEED6D_OUT")
    return Path(env) if env else Path("seed6d_out")


def _reseed(scenario, seed):
    if seed is None:
        return scenario
    return dataclasses.replace(scenario, seed=seed)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _run_one_contact(config_path: str, out_root: str, seed) -> str:
    from .report import plot_contact_trace

    scenario = load_config(config_path)
    if not isinstance(scenario, ContactScenario):
        raise Seed6dError(f"{config_path}: not a contact scenario")
    scenario = _reseed(scenario, seed)
    out = Path(out_root) / scenario.name
    n_contacts = len(scenario.tool.contact_points)
    try:
        rows, summary = run_contact_scenario(scenario)
    except Seed6dError as exc:
        rows = getattr(exc, "rows", [])
        step = getattr(exc, "step_index", len(rows))
        write_trace(out / "trace.csv", rows, n_contacts, truncated_note=f"{exc} (step {step})")
        raise
    write_trace(out / "trace.csv", rows, n_contacts)
    _write_json(out / "summary.json", summary)
    plot_contact_trace(rows, summary, out / "force_torque.png")
    return str(out)


def _cmd_run(args) -> int:
    out_root = _out_root(args)
    configs = args.config
    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_run_one_contact, c, str(out_root), args.seed) for c in configs
            ]
            for fut in futures:
                print(f"wrote {fut.result()}")
    else:
        for c in configs:
            print(f"wrote {_run_one_contact(c, str(out_root), args.seed)}")
    return 0


def _cmd_sysid(args) -> int:
    from .report import plot_sysid_report

    scenario = load_config(args.config)
    if not isinstance(scenario, SysIdScenario):
        raise Seed6dError(f"{args.config}: not a sysid scenario")
    scenario = _reseed(scenario, args.seed)
    samples, report = run_sysid_scenario(scenario)
    out = _out_root(args) / scenario.name
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    _write_json(out / "report.json", payload)
    with open(out / "samples.csv", "w") as fh:
        fh.write("roll,pitch,yaw,x,y,z,tau_x,tau_y,tau_z,f_x,f_y,f_z\n")
        from .se3 import rotation_to_rpy

        for s in samples:
            rpy = rotation_to_rpy(s.relative_pose.rotation)
            vals = list(rpy.vector) + list(s.relative_pose.translation) + list(s.wrench.vector)
            fh.write(",".join("%.9g" % v for v in vals) + "\n")
    plot_sysid_report(payload, out / "stiffness.png")
    print(f"wrote {out}")
    if report.unidentifiable:
        print(f"unidentifiable axes: {', '.join(report.unidentifiable)}")
    return 0


def _load_estimator_scenario(args) -> EstimatorScenario:
    scenario = load_config(args.config)
    if not isinstance(scenario, EstimatorScenario):
        raise Seed6dError(f"{args.config}: not an estimator-eval scenario")
    return _reseed(scenario, args.seed)


def _cmd_eval_estimator(args) -> int:
    from .report import plot_estimator_report

    scenario = _load_estimator_scenario(args)
    report = run_estimator_eval(scenario)
    out = _out_root(args) / scenario.name
    _write_json(out / "report.json", report)
    plot_estimator_report(report, out / "sweeps.png")
    for sweep in report["sweeps"]:
        print(
            f"{sweep['axis']:>5s}: rms {sweep['rms']:.4g}  "
            f"signed bias {sweep['signed_bias']:+.4g}  (n={sweep['count']})"
        )
    print(f"wrote {out}")
    return 0


def _cmd_gen_corpus(args) -> int:
    scenario = _load_estimator_scenario(args)
    out = _out_root(args) / scenario.name / "corpus"
    count = generate_corpus(scenario, out)
    print(f"wrote {count} frames to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seed6d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output root (default $SEED6D_OUT or ./seed6d_out)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_run = sub.add_parser("run", help="run contact scenarios")
    p_run.add_argument("config", nargs="+")
    common(p_run)
    p_run.add_argument("--jobs", type=int, default=1, help="parallel scenario workers")
    p_run.set_defaults(func=_cmd_run)

    p_sysid = sub.add_parser("sysid", help="run stiffness identification")
    p_sysid.add_argument("config")
    common(p_sysid)
    p_sysid.set_defaults(func=_cmd_sysid)

    p_eval = sub.add_parser("eval-estimator", help="run estimator error sweeps")
    p_eval.add_argument("config")
    common(p_eval)
    p_eval.set_defaults(func=_cmd_eval_estimator)

    p_gen = sub.add_parser("gen-corpus", help="render the synthetic frame corpus")
    p_gen.add_argument("config")
    common(p_gen)
    p_gen.set_defaults(func=_cmd_gen_corpus)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Seed6dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
