"""JSON experiment configs: schema validation and construction registry."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from typing import Any, Callable

import jsonschema

from . import builders
from .analysis import Vector
from .core import ConstructionSpec, LevelSet, Stage


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = resources.files("rankone").joinpath("data/config.schema.json").read_text()
    return json.loads(text)


def validate(cfg: Any) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def parse_fraction(x: str | int) -> Fraction:
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational: {x!r}") from exc


def sequence_rule(d: dict) -> Callable[[int], int]:
    kind = d["kind"]
    if kind == "power":
        e = d["exponent"]
        return lambda k: k ** e
    if kind == "exponential":
        b = d["base"]
        return lambda k: b ** k
    if kind == "linear":
        s, c = d["slope"], d.get("intercept", 0)
        return lambda k: s * k + c
    if kind == "explicit":
        vals = list(d["values"])
        # explicit lists are 1-indexed like the other rules
        return lambda k: vals[k - 1]
    raise ConfigError(f"unknown sequence kind {kind!r}")


def _vec(p: dict, key: str = "v") -> Vector:
    try:
        return Vector(tuple(p[key]))
    except KeyError:
        raise ConfigError(f"missing parameter {key!r}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _example41(p):
    every = p.get("pattern_every", 1)
    return builders.build_example41(_vec(p), pattern=lambda n: n % every == 0,
                                    tail_factor=p.get("tail_factor"),
                                    filler_factor=p.get("filler_factor", 4))


def _hk(p):
    c = p.get("c", {"factor": 2, "plus": 0})
    f, plus = c.get("factor", 2), c.get("plus", 0)
    return builders.build_hk_skyscraper(lambda n, h: f * h + plus,
                                        params={"c": {"factor": f, "plus": plus}})


def _prop64(p):
    return builders.build_prop64_adaptive(sequence_rule(p["a"]), sequence_rule(p["b"]),
                                          p.get("horizon", 8),
                                          params={"a": p["a"], "b": p["b"]})


def _fact61(p):
    base = p.get("base", {"builder": "hk_skyscraper", "params": {}})
    spec = build_construction(base)
    spec.metadata["cyclic_k"] = p.get("k", 2)
    return spec


BUILDERS: dict[str, Callable[[dict], ConstructionSpec]] = {
    "example41": _example41,
    "example42": lambda p: builders.build_example42(),
    "example43": lambda p: builders.build_example43(_vec(p)),
    "hk_skyscraper": _hk,
    "prop64_adaptive": _prop64,
    "fact62_kcut": lambda p: builders.build_fact62(p["k"], p.get("period", 2),
                                                   p.get("filler", True)),
    "thm72": lambda p: builders.build_thm72(_vec(p)),
    "thm73": lambda p: builders.build_thm73(_vec(p), offset_pattern=p.get("offset_pattern"),
                                            check_stages=p.get("check_stages", 4)),
    "cor74_family": lambda p: builders.build_cor74([Vector(tuple(v)) for v in p["family"]]),
    "fact61_cyclic_extension": _fact61,
}


def build_construction(c: dict) -> ConstructionSpec:
    if "builder" in c:
        name = c["builder"]
        if name not in BUILDERS:
            raise ConfigError(f"unknown builder {name!r}; known: {sorted(BUILDERS)}")
        try:
            return BUILDERS[name](c.get("params", {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"builder {name}: {exc}") from exc
    try:
        stages = [Stage(s["r"], tuple(s["spacers"])) for s in c["stages"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ConstructionSpec(stages=stages,
                            initial_width=parse_fraction(c.get("initial_width", "1")),
                            name=c.get("name", "explicit"))


def level_set(d: dict | None) -> LevelSet:
    if d is None:
        return LevelSet(0, (0,))
    return LevelSet(d.get("column", 0), tuple(d.get("heights", [0])))
