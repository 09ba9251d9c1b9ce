"""Command-line runner: ``subspectra <kind> [--preset P] [--config FILE] [--check] [--seed N] [--out DIR]``.

Exit status is 0 on success, 2 when ``--check`` is given and an acceptance
tolerance fails, and 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .algebra import PRESETS
from .config import KINDS, ExperimentConfig, worker_count
from .errors import SubspectraError
from .experiments import EXPERIMENT_PRESETS, list_presets, run_experiment


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _series_text(x, y) -> str:
    return "".join(f"{a:.17g} {b:.17g}\n" for a, b in zip(np.asarray(x), np.asarray(y)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subspectra", description=__doc__.splitlines()[0])
    parser.add_argument("kind", help="experiment kind, or 'list-presets'")
    parser.add_argument("--preset", help="group preset (h1, r1, ...) or experiment preset (A1..A8)")
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    parser.add_argument("--check", action="store_true", help="exit 2 if a tolerance check fails")
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--trials", type=int, help="shorthand for --set bs.trials=N")
    parser.add_argument("--out", default="subspectra-out", help="output directory")
    return parser


def make_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig(args.kind)
    if args.preset:
        if args.preset in EXPERIMENT_PRESETS:
            kind, values, _ = EXPERIMENT_PRESETS[args.preset]
            if kind != args.kind:
                raise SubspectraError(f"preset {args.preset} is a {kind} experiment, not {args.kind}")
            for key, value in values.items():
                cfg.set(key, value)
        elif args.preset in PRESETS:
            cfg.set("group", args.preset)
        else:
            raise SubspectraError(f"unknown preset {args.preset!r}")
    if args.config:
        cfg.update_text(Path(args.config).read_text())
    for item in args.set:
        if "=" not in item:
            raise SubspectraError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.trials is not None:
        cfg.set("bs.trials", args.trials)
    return cfg


def _limit_threads():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=worker_count())


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.kind == "list-presets":
        for name, note in list_presets():
            print(f"{name:8s} {note}")
        return 0
    try:
        if args.kind not in KINDS:
            raise SubspectraError(f"unknown experiment kind {args.kind!r}; known: {', '.join(KINDS)}")
        cfg = make_config(args)
        _limit_threads()
        start = time.perf_counter()
        result = run_experiment(cfg)
        wall = time.perf_counter() - start
        out = Path(args.out)
        report = {
            "kind": cfg.kind,
            "config": cfg.echo(),
            "summary": result.summary,
            "passed": result.passed,
        }
        write_atomic(out / "report.json", json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
        for name, text in sorted(result.tables.items()):
            write_atomic(out / f"{name}.csv", text)
        for name, (x, y) in sorted(result.series.items()):
            write_atomic(out / f"{name}.dat", _series_text(x, y))
        manifest = {
            "config": cfg.echo(),
            "versions": {
                "subspectra": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "wall_clock_seconds": {"total": round(wall, 3), **result.stages},
            "provenance": {k: v["tag"] for k, v in sorted(result.summary.items())},
        }
        write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except (SubspectraError, ValueError, OSError) as exc:
        print(f"subspectra: error: {exc}", file=sys.stderr)
        return 1
    status = "passed" if result.passed else ("failed" if result.passed is False else "no check")
    print(f"{cfg.kind}: {status}")
    for key, entry in result.summary.items():
        print(f"  {key} = {entry['value']}  [{entry['tag']}]")
    if args.check and result.passed is False:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
