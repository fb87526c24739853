"""Execute validated experiment configs and write deterministic outputs."""

from __future__ import annotations

import csv
import io
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

from . import analysis, builders, oracle
from .oracle import DEFAULT_HEIGHT_BUDGET
from .analysis import Vector
from .config import ConfigError, build_construction, level_set, parse_fraction, sequence_rule
from .core import (
    DEFAULT_CARDINALITY_BUDGET,
    DEFAULT_DEPTH_CAP,
    ConstructionSpec,
    LevelSet,
    MeasureBound,
    ResourceError,
    intersection_measure,
    measure_at_resolution,
    resolve_depth,
)
from .vectors import decide_le_m, decide_le_p

log = logging.getLogger(__name__)

PASS = "pass"
FAIL = "falsified"
RESOURCE = "resource-error"


@dataclass
class Options:
    depth_cap: int = DEFAULT_DEPTH_CAP
    cardinality_budget: int = DEFAULT_CARDINALITY_BUDGET
    threads: int = 1
    oracle: bool = False
    oracle_budget: int = DEFAULT_HEIGHT_BUDGET


@dataclass
class Result:
    id: str
    type: str
    status: str = PASS
    message: str = ""
    rows: list[dict[str, Any]] | None = None
    data: dict[str, Any] = field(default_factory=dict)

    def fail(self, msg: str) -> None:
        self.status = FAIL
        self.message = (self.message + "; " if self.message else "") + msg

    def resource(self, msg: str) -> None:
        if self.status != FAIL:
            self.status = RESOURCE
        self.message = (self.message + "; " if self.message else "") + msg


def q(x: Fraction | int | None) -> str | None:
    """Exact rational as ``p/q`` text; never a float."""
    if x is None:
        return None
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _ns(spec: ConstructionSpec, ns: Any) -> list[int]:
    if isinstance(ns, list):
        return ns
    if "heights" in ns:
        a, b = ns["heights"]
        return [spec.height(m) for m in range(a, b + 1)]
    if "stages" in ns:
        return [spec.height(m) for m in ns["stages"]]
    lo, hi = ns["range"]
    return list(range(lo, hi + 1))


def _bound_rows(series: analysis.MeasureSeries, v: Vector) -> list[dict[str, Any]]:
    return [{
        "n": e.n,
        "shifts": ";".join(str(vi * e.n) for vi in v),
        "mu_lower": q(e.value.lower),
        "mu_upper": q(e.value.upper),
        "depth": e.depth,
        "note": e.note,
    } for e in series.entries]


def run_profile(spec, exp, opts, res: Result) -> None:
    v = Vector(tuple(exp["vector"]))
    A = level_set(exp.get("set"))
    A.check(spec)
    ns = _ns(spec, exp["ns"])
    mode = exp.get("mode", "joint")
    fn = analysis.joint_profile if mode == "joint" else analysis.multiplicative_profile
    series = fn(spec, A, v, ns, depth_cap=opts.depth_cap, threads=opts.threads)
    res.rows = _bound_rows(series, v)
    mu = A.measure(spec)
    expect = exp.get("expect", {})
    floor = None
    if "at_least" in expect:
        floor = parse_fraction(expect["at_least"])
    if "ratio_at_least" in expect:
        floor = parse_fraction(expect["ratio_at_least"]) * mu ** (v.d if mode != "joint" else 1)
    for e in series.entries:
        b = e.value
        if floor is not None:
            if b.upper < floor:
                res.fail(f"n={e.n}: {b} < {q(floor)}")
            elif b.lower < floor:
                res.resource(f"n={e.n}: {b} undecided against {q(floor)}")
        if expect.get("all_zero"):
            if b.lower > 0:
                res.fail(f"n={e.n}: {b} is not zero")
            elif b.upper > 0:
                res.resource(f"n={e.n}: {b} undecided")
        if expect.get("all_positive"):
            if b.upper == 0:
                res.fail(f"n={e.n}: zero")
            elif b.lower == 0:
                res.resource(f"n={e.n}: {b} undecided")
        if e.note:
            res.resource(f"n={e.n}: {e.note}")
    res.data = {"mode": mode, "vector": list(v), "entries": len(res.rows)}
    if opts.oracle:
        _oracle_check(spec, A, v, series, mode, opts, res)


def _oracle_check(spec, A, v, series, mode, opts, res) -> None:
    checked = 0
    for e in series.entries:
        if spec.height(e.depth) > opts.oracle_budget or e.note:
            continue
        groups = [[vi * e.n for vi in v]] if mode == "joint" else [[vi * e.n] for vi in v]
        vals = []
        for shifts in groups:
            N = resolve_depth(spec, A, shifts, opts.depth_cap).depth
            N = max(N, e.depth) if mode == "joint" else N
            vals.append(oracle.oracle_intersection(spec, A, shifts, N, opts.oracle_budget))
        prod = MeasureBound.exact(1)
        for x in vals:
            prod = prod * x
        if prod != e.value:
            res.fail(f"oracle mismatch at n={e.n}: {prod} != {e.value}")
        checked += 1
    res.data["oracle_checked"] = checked


def run_verify_zero(spec, exp, opts, res: Result) -> None:
    v = Vector(tuple(exp["vector"]))
    A = level_set(exp.get("set"))
    A.check(spec)
    want = exp.get("expect", "zero")
    verdicts = []
    for n in exp["windows"]:
        vd = analysis.verify_zero_window(spec, A, v, n, opts.depth_cap, opts.cardinality_budget)
        verdicts.append({
            "n": n, "window": [q(spec.height(n - 1)), q(spec.height(n))],
            "kind": vd.kind, "counterexample": vd.counterexample,
            "evidence": vd.evidence, "note": vd.note, "citation": vd.citation,
        })
        if vd.kind == analysis.ZERO:
            if want == "counterexample":
                res.fail(f"window {n}: no counterexample found")
        elif vd.counterexample is not None:
            if want == "zero":
                res.fail(f"window {n}: nonzero at m={vd.counterexample}")
        else:
            res.resource(f"window {n}: {vd.note}")
    res.rows = [{"n": d["n"], "window_lo": d["window"][0], "window_hi": d["window"][1],
                 "kind": d["kind"], "counterexample": d["counterexample"]} for d in verdicts]
    res.data = {"vector": list(v), "verdicts": verdicts}


def run_certify(spec, exp, opts, res: Result) -> None:
    v = Vector(tuple(exp["vector"]))
    vd = analysis.certify_v_alpha_lower(spec, v, analysis.heights_rule, exp["M"],
                                        columns=exp.get("columns"), stages=exp.get("stages"),
                                        depth_cap=opts.depth_cap)
    res.data = {"vector": list(v), "kind": vd.kind, "alpha": q(vd.bound),
                "witnesses": [q(n) for n in vd.witnesses], "evidence": vd.evidence,
                "citation": vd.citation, "note": vd.note}
    floor = exp.get("expect", {}).get("alpha_at_least")
    if floor is None:
        return
    floor = parse_fraction(floor)
    if vd.bound is None:
        res.resource(vd.note)
    elif vd.bound < floor:
        res.fail(f"certified ratio {q(vd.bound)} < {q(floor)}")


def _witness_json(w) -> dict[str, Any] | None:
    if w is None:
        return None
    return {"relation": w.relation, "n": w.n, "m": w.m, "c": w.c,
            "assignment": list(w.assignment),
            "plus": [list(x) for x in w.plus], "minus": [list(x) for x in w.minus]}


def order_result(v: Vector, w: Vector) -> dict[str, Any]:
    p, wp = decide_le_p(v, w)
    m, wm = decide_le_m(v, w)
    return {"v": list(v), "w": list(w), "le_p": p, "le_m": m,
            "witness_p": _witness_json(wp), "witness_m": _witness_json(wm)}


def run_order(spec, exp, opts, res: Result) -> None:
    out = []
    for pair in exp["pairs"]:
        v, w = Vector(tuple(pair["v"])), Vector(tuple(pair["w"]))
        r = order_result(v, w)
        for wit in (decide_le_p(v, w)[1], decide_le_m(v, w)[1]):
            if wit is not None and not wit.check(v, w):
                res.fail(f"invalid witness for {v} vs {w}")
        for key, val in pair.get("expect", {}).items():
            if r[key] != val:
                res.fail(f"{key}({v}, {w}) = {r[key]}, expected {val}")
        out.append(r)
    res.data = {"pairs": out}


def audit_battery(spec: ConstructionSpec, columns=(0, 1, 2), max_depth: int = 4,
                  samples: int = 100, seed: int = 0,
                  budget: int = DEFAULT_HEIGHT_BUDGET):
    """Yield ``(A, shifts, N, core_value, oracle_value)`` on random cases."""
    rng = random.Random(seed)
    cols = [c for c in columns if c <= max_depth]
    top = max(cols) + 1
    shift_cap = spec.height(top)
    depths = [N for N in range(max_depth + 1) if spec.height(N) <= budget]
    for _ in range(samples):
        c = rng.choice(cols)
        ok = [N for N in depths if N >= c]
        if not ok:
            continue
        N = rng.choice(ok)
        h = spec.height(c)
        A = LevelSet(c, tuple(rng.sample(range(h), min(h, rng.randint(1, 3)))))
        shifts = [rng.randint(0, shift_cap) for _ in range(rng.randint(1, 3))]
        yield (A, shifts, N, intersection_measure(spec, A, shifts, N),
               oracle.oracle_intersection(spec, A, shifts, N, budget))


def run_audit(spec, exp, opts, res: Result) -> None:
    rows = []
    for A, shifts, N, core_v, orc_v in audit_battery(
            spec, exp.get("columns", [0, 1, 2]), exp.get("max_depth", 4),
            exp.get("samples", 100), exp.get("seed", 0), opts.oracle_budget):
        rows.append({"column": A.column, "heights": ";".join(map(str, A.heights)),
                     "shifts": ";".join(map(str, shifts)), "depth": N,
                     "core_lower": q(core_v.lower), "core_upper": q(core_v.upper),
                     "oracle_lower": q(orc_v.lower), "oracle_upper": q(orc_v.upper)})
        if core_v != orc_v:
            res.fail(f"mismatch on {A} shifts {shifts} depth {N}: {core_v} vs {orc_v}")
    res.rows = rows
    res.data = {"cases": len(rows)}


def run_witness(spec, exp, opts, res: Result) -> None:
    A = level_set(exp.get("set"))
    M, N = exp["M"], exp.get("N", 0)
    series = []
    for k in range(N + 2 * M + 1):
        a = spec.height(k)
        series.append((a, measure_at_resolution(spec, A, [a], opts.depth_cap)))
    try:
        w = analysis.witness_pair_search(spec, A, series, M, N, opts.depth_cap)
    except analysis.WitnessAnomaly as exc:
        res.fail(str(exc))
        return
    except ValueError as exc:
        res.fail(f"precondition: {exc}")
        return
    res.data = {"n": w.n, "m": w.m, "a_n": q(series[w.n][0]), "a_m": q(series[w.m][0]),
                "triple_lower": q(w.value.lower), "triple_upper": q(w.value.upper),
                "bound": q(w.bound),
                "pairwise": [[q(a), q(p.lower), q(p.upper)] for a, p in series]}


def run_cyclic(spec, exp, opts, res: Result) -> None:
    A = level_set(exp.get("set"))
    k = exp.get("k", spec.metadata.get("cyclic_k", 2))
    expect = exp.get("expect", {})
    rows = []
    for n in exp["ns"]:
        val = builders.cyclic_extension_measure(spec, A, n, k)
        rows.append({"n": n, "k": k, "mu_lower": q(val.lower), "mu_upper": q(val.upper)})
        if n % k:
            if expect.get("zero_unless_divisible") and val != MeasureBound.exact(0):
                res.fail(f"n={n}: {val} should vanish")
        elif expect.get("matches_base"):
            base = measure_at_resolution(spec, A, [n // k], opts.depth_cap)
            if base != val:
                res.fail(f"n={n}: {val} differs from base {base}")
        if not val.resolved:
            res.resource(f"n={n}: unresolved")
    res.rows = rows
    res.data = {"k": k}


def run_avoidance(spec, exp, opts, res: Result) -> None:
    p = spec.params
    a = sequence_rule(exp.get("a", p.get("a", {"kind": "power", "exponent": 2})))
    b = sequence_rule(exp.get("b", p.get("b", {"kind": "exponential", "base": 2})))
    horizon = exp.get("horizon", p.get("horizon", 8))
    A = level_set(exp.get("set"))
    limit = spec.height(horizon)
    rows = []
    k = 1
    while a(k) + b(k) <= limit:
        ak, bk = a(k), b(k)
        joint = measure_at_resolution(spec, A, [ak, ak + bk], opts.depth_cap)
        pw = [measure_at_resolution(spec, A, [x], opts.depth_cap) for x in (ak, bk, ak + bk)]
        prod = pw[0] * pw[1] * pw[2]
        rows.append({"k": k, "a": ak, "b": bk, "joint_lower": q(joint.lower),
                     "joint_upper": q(joint.upper), "product_lower": q(prod.lower),
                     "product_upper": q(prod.upper)})
        if joint.lower > 0 or prod.lower > 0:
            res.fail(f"k={k}: joint {joint}, product {prod}")
        elif joint.upper > 0 or prod.upper > 0:
            res.resource(f"k={k}: unresolved")
        k += 1
    res.rows = rows
    res.data = {"horizon": horizon, "h_horizon": q(limit), "checked": len(rows),
                "heights": [q(h) for h in spec.heights(horizon)]}


RUNNERS = {
    "profile": run_profile,
    "verify-zero": run_verify_zero,
    "certify-alpha": run_certify,
    "order": run_order,
    "oracle-audit": run_audit,
    "witness-search": run_witness,
    "cyclic-extension": run_cyclic,
    "avoidance": run_avoidance,
}


def run_experiment(spec: ConstructionSpec, idx: int, exp: dict, opts: Options) -> Result:
    res = Result(exp.get("id", f"{idx:02d}-{exp['type']}"), exp["type"])
    try:
        RUNNERS[exp["type"]](spec, exp, opts, res)
    except ResourceError as exc:
        res.resource(str(exc))
    log.info("%s: %s %s", res.id, res.status, res.message)
    return res


def run_config(cfg: dict, opts: Options) -> tuple[ConstructionSpec | None, list[Result]]:
    exps = cfg["experiments"]
    if "construction" in cfg:
        spec = build_construction(cfg["construction"])
    elif all(e["type"] == "order" for e in exps):
        spec = None
    else:
        raise ConfigError("a construction is required for non-order experiments")
    try:
        if opts.threads > 1 and len(exps) > 1:
            with ThreadPoolExecutor(opts.threads) as pool:
                results = list(pool.map(lambda ie: run_experiment(spec, ie[0], ie[1], opts),
                                        enumerate(exps)))
        else:
            results = [run_experiment(spec, i, e, opts) for i, e in enumerate(exps)]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return spec, results


def exit_code(results: list[Result]) -> int:
    if any(r.status == FAIL for r in results):
        return 2
    if results and all(r.status == RESOURCE for r in results):
        return 1
    return 0


def _csv_text(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def write_outputs(outdir: Path, cfg: dict, spec: ConstructionSpec | None,
                  results: list[Result]) -> dict[str, Any]:
    outdir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, r in enumerate(results):
        stem = f"{i:02d}_{r.id}"
        files = []
        if r.rows is not None:
            (outdir / f"{stem}.csv").write_text(_csv_text(r.rows))
            files.append(f"{stem}.csv")
        payload = {"id": r.id, "type": r.type, "status": r.status,
                   "message": r.message, "result": r.data}
        (outdir / f"{stem}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        files.append(f"{stem}.json")
        entries.append({"id": r.id, "type": r.type, "status": r.status,
                        "message": r.message, "files": files})
    manifest = {
        "config": cfg.get("name", ""),
        "anchor": cfg.get("anchor", ""),
        "construction": None if spec is None else {
            "name": spec.name, "params": spec.params, "metadata": dict(spec.metadata)},
        "experiments": entries,
        "exit_code": exit_code(results),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def bundled_names() -> list[str]:
    root = resources.files("rankone").joinpath("data/configs")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> dict:
    root = resources.files("rankone").joinpath("data/configs")
    return json.loads(root.joinpath(f"{name}.json").read_text())
