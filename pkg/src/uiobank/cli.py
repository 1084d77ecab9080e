"""Command line front end.

    uiobank design-check --preset example2
    uiobank estimate --preset example1 --out trace.csv
    uiobank isolate --preset example4 --prune-infeasible --plot-dir figs
    uiobank control --preset example5 --mode sticky --prune-infeasible
    uiobank demo example3

Exit codes: 0 all thresholds pass, 1 a threshold failed, 2 the scenario is
invalid, a design is infeasible, or the safety stop fired.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .bank import bank_size
from .control import stab_q_star, synthesize_gains
from .errors import SafetyStopError, ScenarioError, SynthesisInfeasibleError
from .pipeline import run_pipeline, write_trace
from .scenario import PRESETS, ScenarioConfig, parse_scenario, preset
from .uio import check_c1, check_c3, design_complete, design_partial, max_q

EXIT_OK, EXIT_THRESHOLD, EXIT_INFEASIBLE = 0, 1, 2


def _load(args) -> ScenarioConfig:
    if args.scenario and args.preset:
        raise ScenarioError("give either --scenario or --preset, not both")
    if args.scenario:
        try:
            with open(args.scenario, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read {args.scenario}: {exc.strerror}") from None
        return parse_scenario(text)
    if args.preset:
        return preset(args.preset)
    raise ScenarioError("one of --scenario or --preset is required")


def _override(cfg: ScenarioConfig, args, **forced) -> ScenarioConfig:
    changes = dict(forced)
    for attr, key in (("horizon", "horizon"), ("seed", "seed"), ("mode", "isolation"),
                      ("estimator", "estimator"), ("q", "q")):
        value = getattr(args, attr, None)
        if value is not None:
            changes[key] = value
    if getattr(args, "prune_infeasible", False):
        changes["prune_infeasible"] = True
    return dataclasses.replace(cfg, **changes)


def _seed_path(path, seed, many):
    if not path or not many:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}-seed{seed}{ext}"


def _run_one(cfg: ScenarioConfig, args, many: bool):
    trace, summary = run_pipeline(cfg, strict=args.strict)
    if args.out:
        write_trace(trace, _seed_path(args.out, cfg.seed, many))
    if args.plot_dir:
        from .plotting import render_all

        prefix = f"{cfg.name}-seed{cfg.seed}-" if many else f"{cfg.name}-"
        render_all(trace, args.plot_dir, cfg.window, prefix)
    return summary


def _emit(doc, path):
    text = json.dumps(doc, indent=2, default=float)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_run(args, **forced) -> int:
    cfg = _override(_load(args), args, **forced)
    seeds = [cfg.seed + i for i in range(max(1, args.repeat))]
    many = len(seeds) > 1
    cfgs = [dataclasses.replace(cfg, seed=s) for s in seeds]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        summaries = list(pool.map(lambda c: _run_one(c, args, many), cfgs))
    docs = [s.to_dict() for s in summaries]
    _emit(docs if many else docs[0], args.summary)
    return EXIT_OK if all(s.passed for s in summaries) else EXIT_THRESHOLD


def cmd_demo(args) -> int:
    args.preset, args.scenario = args.name, None
    return cmd_run(args)


def cmd_design_check(args) -> int:
    cfg = _override(_load(args), args)
    sys_, tol = cfg.lti(), cfg.tol()
    report = {"name": cfg.name, "n": sys_.n, "p": sys_.p, "n_y": sys_.n_y, "c1": check_c1(sys_, tol)}
    try:
        d = design_complete(sys_, tol)
        report["complete_uio"] = {"ok": True, "max_residual": d.max_residual(sys_)}
    except SynthesisInfeasibleError as exc:
        report["complete_uio"] = {"ok": False, "reason": str(exc)}

    subsets = []
    for size in range(1, sys_.p):
        for J in itertools.combinations(range(sys_.p), size):
            entry = {"J": [i + 1 for i in J], "c3": check_c3(sys_, J, tol)}
            try:
                d = design_partial(sys_, J, tol)
                entry.update(c4=True, max_residual=d.max_residual(sys_))
            except SynthesisInfeasibleError as exc:
                entry.update(c4=False, reason=str(exc))
            subsets.append(entry)
    report["partial_uio"] = subsets
    q = max_q(sys_, tol)
    q_star = stab_q_star(sys_, tol)
    report.update(q=q, q_star=q_star)
    if q > 0:
        report["bank_size"] = bank_size(sys_.p, q)
    q_ctrl = cfg.q if cfg.q is not None else q
    if 0 < q_ctrl <= q_star:
        try:
            ctrl = synthesize_gains(sys_, q_ctrl, tol)
            report["controller"] = {
                "q": q_ctrl,
                "active_sets": [[i + 1 for i in J] for J in ctrl.gains],
                "certificate": ctrl.certificate.status,
            }
        except SynthesisInfeasibleError as exc:
            report["controller"] = {"q": q_ctrl, "error": str(exc)}
    _emit(report, args.summary)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, with_source=True):
    if with_source:
        p.add_argument("--scenario", help="path to a JSON scenario document")
        p.add_argument("--preset", choices=sorted(PRESETS), help="built-in example scenario")
    p.add_argument("--horizon", type=int, help="last simulated tick")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=("instantaneous", "sticky"), help="isolation mode")
    p.add_argument("--estimator", choices=("complete", "bank"))
    p.add_argument("--q", type=int, help="protection level for the bank")
    p.add_argument("--prune-infeasible", action="store_true",
                   help="drop size-2q subsets without a partial UIO instead of failing")
    p.add_argument("--out", help="CSV trace path")
    p.add_argument("--summary", help="write the JSON summary here instead of stdout")
    p.add_argument("--plot-dir", help="render PNG figures into this directory")
    p.add_argument("--strict", action="store_true", help="fail on an inconclusive stability certificate")
    p.add_argument("--repeat", type=int, default=1, help="run this many consecutive seeds")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for --repeat")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uiobank", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design-check", help="report conditions c1-c4, q, q* and the certificate")
    p.add_argument("--scenario")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--q", type=int)
    p.add_argument("--summary")
    p.set_defaults(func=cmd_design_check)

    for name, helptext, forced in (
        ("estimate", "open-loop state estimation", {"control": False}),
        ("isolate", "open-loop estimation with attack reconstruction and isolation", {"control": False}),
        ("control", "closed loop with switch-off control", {"control": True}),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        p.set_defaults(func=lambda a, f=forced: cmd_run(a, **f))

    p = sub.add_parser("demo", help="run one of the built-in example scenarios")
    p.add_argument("name", choices=sorted(PRESETS))
    _add_common(p, with_source=False)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SynthesisInfeasibleError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SafetyStopError as exc:
        print(f"safety stop: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
