"""Command-line entry point: ``rankone run|list|order|audit|schema``."""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path

from . import __version__, runner
from .analysis import Vector
from .config import ConfigError, build_construction, load_schema, validate
from .core import DEFAULT_CARDINALITY_BUDGET, DEFAULT_DEPTH_CAP


def _load_config(arg: str) -> tuple[dict, str]:
    path = Path(arg)
    if path.exists():
        try:
            cfg = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
        return cfg, path.stem
    if arg in runner.bundled_names():
        return runner.load_bundled(arg), arg
    raise ConfigError(f"no config file or bundled experiment named {arg!r}")


def _options(args) -> runner.Options:
    return runner.Options(depth_cap=args.depth_cap,
                          cardinality_budget=args.cardinality_budget,
                          threads=args.threads,
                          oracle=getattr(args, "oracle", False))


def _run_one(cfg: dict, name: str, outdir: Path, opts: runner.Options) -> int:
    validate(cfg)
    t0 = time.time()
    spec, results = runner.run_config(cfg, opts)
    manifest = runner.write_outputs(outdir, cfg, spec, results)
    meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(t0)),
            "elapsed_seconds": round(time.time() - t0, 3),
            "version": __version__, "python": platform.python_version(),
            "options": vars(opts)}
    (outdir / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    for e in manifest["experiments"]:
        print(f"[{e['status']}] {name}/{e['id']}" + (f": {e['message']}" if e["message"] else ""))
    return manifest["exit_code"]


def cmd_run(args) -> int:
    opts = _options(args)
    if args.all_bundled:
        names = runner.bundled_names()
        codes = []
        for name in names:
            cfg = runner.load_bundled(name)
            codes.append(_run_one(cfg, name, Path(args.output) / name, opts))
        return 2 if 2 in codes else (1 if 1 in codes else 0)
    if not args.config:
        raise ConfigError("give a config path, a bundled name, or --all-bundled")
    cfg, name = _load_config(args.config)
    out = args.output or cfg.get("output", {}).get("path") or f"results/{name}"
    return _run_one(cfg, name, Path(out), opts)


def cmd_list(args) -> int:
    rows = []
    for name in runner.bundled_names():
        cfg = runner.load_bundled(name)
        rows.append({"name": name, "anchor": cfg.get("anchor", ""),
                     "construction": cfg.get("construction", {}).get("builder", "-"),
                     "experiments": [e["type"] for e in cfg["experiments"]]})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['name']:<24} {r['construction']:<24} {r['anchor']}")
    return 0


def _parse_vector(text: str) -> Vector:
    try:
        return Vector(tuple(int(x) for x in text.replace("(", "").replace(")", "").split(",")))
    except ValueError as exc:
        raise ConfigError(f"bad vector {text!r}: {exc}") from None


def cmd_order(args) -> int:
    v, w = _parse_vector(args.v), _parse_vector(args.w)
    print(json.dumps(runner.order_result(v, w), indent=2))
    return 0


def cmd_audit(args) -> int:
    cfg, name = _load_config(args.config)
    validate(cfg)
    if "construction" not in cfg:
        raise ConfigError(f"{name} has no construction to audit")
    spec = build_construction(cfg["construction"])
    res = runner.Result("audit", "oracle-audit")
    exp = {"type": "oracle-audit", "samples": args.samples, "max_depth": args.max_depth,
           "seed": args.seed, "columns": list(range(args.columns))}
    runner.run_audit(spec, exp, _options(args), res)
    print(f"[{res.status}] {name}: {res.data['cases']} cases" +
          (f": {res.message}" if res.message else ""))
    return runner.exit_code([res])


def cmd_schema(args) -> int:
    print(json.dumps(load_schema(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankone", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
        sp.add_argument("--cardinality-budget", type=int, default=DEFAULT_CARDINALITY_BUDGET)
        sp.add_argument("--threads", type=int, default=1)

    sp = sub.add_parser("run", help="run a config file or bundled experiment")
    sp.add_argument("config", nargs="?")
    sp.add_argument("-o", "--output")
    sp.add_argument("--all-bundled", action="store_true")
    sp.add_argument("--oracle", action="store_true",
                    help="cross-check profile entries against the interval oracle")
    common(sp)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("list", help="list bundled experiments")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_list)

    sp = sub.add_parser("order", help="decide v <=_p w and v <=_m w")
    sp.add_argument("v")
    sp.add_argument("w")
    sp.set_defaults(fn=cmd_order)

    sp = sub.add_parser("audit", help="cross-check core against the oracle")
    sp.add_argument("config")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--max-depth", type=int, default=4)
    sp.add_argument("--columns", type=int, default=3, help="levels of columns 0..N-1")
    sp.add_argument("--seed", type=int, default=0)
    common(sp)
    sp.set_defaults(fn=cmd_audit)

    sp = sub.add_parser("schema", help="print the config JSON schema")
    sp.set_defaults(fn=cmd_schema)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
