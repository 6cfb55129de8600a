"""Command-line entry points.

    gatesim run <config-or-preset> [--seed N] [--seeds A:B] [--out DIR]
    gatesim validate <config-or-preset>
    gatesim presets list
    gatesim report <run-dir>
    gatesim oracle cartel <ledger> [--max-size 4] [--cartels 1000] [--seed 0]

Exit status is 0 only when every registered invariant verdict passed
(or, for the oracle, when every cartel matched the closed form).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .config import PRESETS, ScenarioConfig, get_preset, load_config, validate_config
from .delegation import cartel_oracle, global_weakest_link_tier
from .engine import run_scenario
from .errors import ConfigError, LedgerParseError
from .ledger import load_ledger


def _resolve_config(spec: str) -> ScenarioConfig:
    path = Path(spec)
    if path.exists():
        return load_config(path)
    return get_preset(spec)


def _parse_seed_range(text: str) -> list[int]:
    for sep in (":", ".."):
        if sep in text:
            lo, hi = text.split(sep, 1)
            return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _resolve_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    seeds = _parse_seed_range(args.seeds) if args.seeds else [args.seed if args.seed is not None else config.seed]
    out_root = Path(args.out) if args.out else None
    all_passed = True
    combined = []
    for seed in seeds:
        cfg = config.with_seed(seed)
        out_dir = None
        if out_root is not None:
            out_dir = out_root if len(seeds) == 1 else out_root / f"seed-{seed}"
        report = run_scenario(cfg, out_dir=out_dir)
        combined.append(report.summary)
        status = "PASS" if report.passed else "FAIL"
        verdict_bits = " ".join(
            f"{name}={'ok' if v['passed'] else 'FAIL'}" for name, v in report.verdicts.items()
        )
        print(
            f"[{status}] {cfg.name} seed={seed} ticks={len(report.traces)} "
            f"agents={report.summary['final_agent_count']} "
            f"S={report.summary['final_safety']:.4f} "
            f"violations={report.summary['total_violations']} "
            f"({report.elapsed_seconds:.2f}s) {verdict_bits}"
        )
        all_passed = all_passed and report.passed
    if out_root is not None and len(seeds) > 1:
        with open(out_root / "sweep.json", "w", encoding="utf-8") as fh:
            json.dump(combined, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if all_passed else 1


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = _resolve_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    errors = validate_config(config)
    if errors:
        for err in errors:
            print(f"invalid: {err}", file=sys.stderr)
        return 2
    print(f"ok: {config.name} ({config.ticks} ticks, {config.population.count} agents)")
    return 0


def _cmd_presets(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name in sorted(PRESETS):
            cfg = PRESETS[name]()
            gating = "gating on" if cfg.gating_enabled else "gating OFF"
            print(f"{name:28s} {cfg.ticks:5d} ticks, {cfg.population.count:4d} agents, {gating}")
        return 0
    print(f"unknown presets action {args.action!r}", file=sys.stderr)
    return 2


def _cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    agg = run_dir / "aggregate.csv"
    if not agg.exists():
        print(f"error: {agg} not found", file=sys.stderr)
        return 2
    rows = []
    with open(agg, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    if not rows:
        print("error: empty aggregate trace", file=sys.stderr)
        return 2
    safeties = [float(r["S"]) for r in rows]
    violations = sum(int(r["violations"]) for r in rows)
    audits = sum(int(r["audits"]) for r in rows)
    entrants = sum(int(r["entrants"]) for r in rows)
    print(f"ticks:        {len(rows)}")
    print(f"final agents: {rows[-1]['n_agents']}")
    print(f"final S:      {safeties[-1]:.6f}")
    print(f"mean S:       {sum(safeties) / len(safeties):.6f}")
    print(f"min S:        {min(safeties):.6f}")
    print(f"violations:   {violations}")
    print(f"audits:       {audits}")
    print(f"entrants:     {entrants}")
    summary_path = run_dir / "summary.json"
    if summary_path.exists():
        stored = json.loads(summary_path.read_text(encoding="utf-8"))
        stored_v = stored.get("summary", {}).get("total_violations")
        match = "matches" if stored_v == violations else f"DIFFERS (stored {stored_v})"
        print(f"stored summary: {match}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    if args.kind != "cartel":
        print(f"unknown oracle kind {args.kind!r}", file=sys.stderr)
        return 2
    try:
        population = load_ledger(args.ledger)
    except (LedgerParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .gate import TierPolicy

    policy = TierPolicy.default() if args.policy is None else _resolve_config(args.policy).policy
    agents = [population.agents[aid] for aid in sorted(population.agents)]
    certified = [a for a in agents if a.certification is not None]
    if not certified:
        print("error: no certified agents in ledger", file=sys.stderr)
        return 2
    now = max(a.certification.cert_time for a in certified)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    mismatches = 0
    for _ in range(args.cartels):
        size = int(rng.integers(1, args.max_size + 1))
        idx = rng.choice(len(certified), size=min(size, len(certified)), replace=False)
        cartel = [certified[i] for i in idx]
        routed = cartel_oracle(cartel, policy, now, max_size=args.max_size)
        direct = global_weakest_link_tier(cartel, policy, now)
        if routed != direct:
            mismatches += 1
            print(f"MISMATCH: cartel {[a.agent_id for a in cartel]} routed={routed} direct={direct}")
    print(
        f"checked {args.cartels} cartels (size <= {args.max_size}) over {len(certified)} agents: "
        f"{args.cartels - mismatches} matched, {mismatches} mismatched"
    )
    return 0 if mismatches == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatesim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config or preset")
    p_run.add_argument("config", help="path to a scenario JSON, or a preset name")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--seeds", default=None, help="seed sweep, e.g. 0:9")
    p_run.add_argument("--out", default=None, help="output directory for traces and reports")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(func=_cmd_validate)

    p_presets = sub.add_parser("presets", help="preset utilities")
    p_presets.add_argument("action", choices=["list"])
    p_presets.set_defaults(func=_cmd_presets)

    p_report = sub.add_parser("report", help="re-derive a summary from emitted traces")
    p_report.add_argument("run_dir")
    p_report.set_defaults(func=_cmd_report)

    p_oracle = sub.add_parser("oracle", help="brute-force oracles over a saved ledger")
    p_oracle.add_argument("kind", choices=["cartel"])
    p_oracle.add_argument("ledger")
    p_oracle.add_argument("--max-size", type=int, default=4)
    p_oracle.add_argument("--cartels", type=int, default=1000)
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--policy", default=None, help="config/preset supplying the tier policy")
    p_oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
