"""JSON config documents and the inline function mini-language."""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from rapidfuzz import fuzz, process

from affine_area.funcrep import (
    FunctionRep,
    GaussianPotential,
    Quadratic,
    SEnvelope,
    load_csv,
    perturbed_quadratic,
    scaled_envelope,
)
from affine_area.harness import DEFAULT_TOLERANCES, TestSuiteConfig
from affine_area.mixed import MixedSpec, common_grid
from affine_area.orlicz_core import H_REGISTRY, PHI, PSI, OrliczFunction
from affine_area.quadrature import ConstOne, ExpNeg, PowerWeight, ScaledShifted, WeightFunction
from affine_area.settings import CONFIG_DIR


SUGGEST_CUTOFF = 80

SUITE_REQUIRED_FIELDS = {"dims", "checks"}
SUITE_FIELDS = {f.name for f in fields(TestSuiteConfig)}

JOB_FIELDS = {"psi", "h", "F1", "F2", "s", "p", "i", "dim", "grid_points", "components"}
COMPONENT_REQUIRED_FIELDS = {"psi", "h"}
COMPONENT_FIELDS = {"psi", "h", "F1", "F2"}

FUNCTION_KINDS = {
    "gaussian": {"c", "n"},
    "quad": {"A", "a"},
    "senv": {"s", "c", "n", "A"},
    "perturbed": {"A", "eps", "center", "a"},
    "sampled": {"path"},
}
WEIGHT_KINDS = {
    "exp": set(),
    "power": {"alpha"},
    "one": set(),
    "shifted": {"a", "b"},
}
H_KINDS = {
    "power": {"p", "n"},
    "const": {"k", "cls"},
    "sqrt": set(),
    "square": set(),
    "inv": set(),
    "log1p": set(),
    "inv1p": set(),
}


def suggest(word: str, choices: Iterable[str]) -> Optional[str]:
    """Closest choice to `word` by WRatio, or None below the cutoff."""
    match = process.extractOne(word, list(choices), scorer=fuzz.WRatio, score_cutoff=SUGGEST_CUTOFF)
    return match[0] if match else None


def unknown_key_error(where: str, what: str, word: str, choices: Iterable[str]) -> ValueError:
    choices = sorted(choices)
    hint = suggest(word, choices)
    message = f"{where}: unknown {what} {word!r}"
    if hint:
        message += f" (did you mean {hint!r}?)"
    else:
        message += f"; expected one of {', '.join(choices)}"
    return ValueError(message)


def _check_keys(raw: dict, allowed: Iterable[str], required: Iterable[str], where: str) -> None:
    if not isinstance(raw, dict):
        raise ValueError(f"{where}: expected a JSON object, got {type(raw).__name__}")
    allowed = set(allowed)
    for key in raw:
        if key not in allowed:
            raise unknown_key_error(where, "key", key, allowed)
    missing = set(required) - set(raw)
    if missing:
        raise ValueError(f"{where}: missing required fields: {', '.join(sorted(missing))}")


# ---------------------------------------------------------------------------
# Mini-language: kind:key=value,key=value
# ---------------------------------------------------------------------------

def _split_top(text: str) -> List[str]:
    """Split on commas outside brackets."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise ValueError(f"Unbalanced brackets in {text!r}")
    parts.append("".join(current))
    return [p.strip() for p in parts if p.strip()]


def _value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_spec(text: str, kinds: Dict[str, set], what: str) -> Tuple[str, Dict[str, object]]:
    """`kind:key=value,...` -> (kind, params), rejecting unknown kinds and keys."""
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind not in kinds:
        raise unknown_key_error(f"{what} spec {text!r}", "kind", kind, kinds)
    params: Dict[str, object] = {}
    for item in _split_top(rest):
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"{what} spec {text!r}: expected key=value, got {item!r}")
        if key not in kinds[kind]:
            raise unknown_key_error(f"{what} spec {text!r}", f"parameter for {kind}", key, kinds[kind])
        params[key] = _value(raw.strip())
    return kind, params


def _matrix(value, n: Optional[int], where: str) -> np.ndarray:
    A = np.atleast_2d(np.asarray(value, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{where}: A must be square, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise ValueError(f"{where}: A is {A.shape[0]}x{A.shape[0]} but dim is {n}")
    return A


def parse_function(text: str, dim: Optional[int] = None) -> FunctionRep:
    """gaussian:c=1 | quad:A=[[1,0],[0,2]],a=0 | senv:s=0.5,c=1 | perturbed:A=...,eps=0.1 | sampled:path=f.csv"""
    kind, params = parse_spec(text, FUNCTION_KINDS, "function")
    try:
        if kind == "gaussian":
            return GaussianPotential(float(params.get("c", 1.0)), int(params.get("n", dim or 1)))
        if kind == "quad":
            if "A" not in params:
                raise ValueError("quad needs A")
            return Quadratic(_matrix(params["A"], dim, text), float(params.get("a", 0.0)))
        if kind == "senv":
            s = float(params["s"]) if "s" in params else 0.5
            if "A" in params:
                return scaled_envelope(s, _matrix(params["A"], dim, text), float(params.get("c", 1.0)))
            return SEnvelope(s, float(params.get("c", 1.0)), int(params.get("n", dim or 1)))
        if kind == "perturbed":
            A = _matrix(params["A"], dim, text) if "A" in params else np.eye(dim or 1)
            center = params.get("center")
            return perturbed_quadratic(A, float(params.get("eps", 0.1)), center, float(params.get("a", 0.0)))
        if "path" not in params:
            raise ValueError("sampled needs path")
        return load_csv(Path(str(params["path"])))
    except (TypeError, KeyError) as exc:
        raise ValueError(f"function spec {text!r}: {exc}") from exc


def parse_weight(text: str) -> WeightFunction:
    """exp | power:alpha=3 | one | shifted:a=2,b=0.5 (shifting exp)."""
    kind, params = parse_spec(text, WEIGHT_KINDS, "weight")
    if kind == "exp":
        return ExpNeg()
    if kind == "power":
        return PowerWeight(float(params.get("alpha", 3.0)))
    if kind == "one":
        return ConstOne()
    return ScaledShifted(ExpNeg(), float(params.get("a", 1.0)), float(params.get("b", 1.0)))


def parse_h(text: str, dim: int = 1) -> OrliczFunction:
    """power:p=2 | const:k=1,cls=Psi | sqrt | square | inv | log1p | inv1p."""
    kind, params = parse_spec(text, H_KINDS, "Orlicz function")
    if kind == "power":
        if "p" not in params:
            raise ValueError(f"Orlicz function spec {text!r}: power needs p")
        return H_REGISTRY["power"](params["p"], params.get("n", dim))
    if kind == "const":
        cls = str(params.get("cls", PHI))
        if cls not in (PHI, PSI):
            raise unknown_key_error(f"Orlicz function spec {text!r}", "class", cls, (PHI, PSI))
        return H_REGISTRY["const"](params.get("k", 1.0), cls)
    return H_REGISTRY[kind]()


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------

def resolve_config_path(name: str) -> Path:
    """A literal path if it exists, else CONFIG_DIR/name (with .json appended when missing)."""
    path = Path(name)
    if path.exists():
        return path
    candidate = Path(CONFIG_DIR) / path.name
    if candidate.suffix != ".json":
        candidate = candidate.with_suffix(".json")
    if candidate.exists():
        return candidate
    raise ValueError(f"Config file {name!r} not found (also looked in {CONFIG_DIR}/)")


def _read(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"Config file {path} is not valid JSON: {exc}") from exc


@lru_cache(maxsize=16)
def load_suite_config(name: str) -> TestSuiteConfig:
    """Verification roster from a JSON document; unknown keys are rejected."""
    path = resolve_config_path(name)
    raw = _read(path)
    _check_keys(raw, SUITE_FIELDS, SUITE_REQUIRED_FIELDS, f"Config file {path}")
    for key in raw.get("tolerances", {}):
        if key not in DEFAULT_TOLERANCES:
            raise unknown_key_error(f"Config file {path} (tolerances)", "tolerance class", key, DEFAULT_TOLERANCES)
    try:
        return TestSuiteConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"Config file {path}: {exc}") from exc


@dataclass(frozen=True)
class Component:
    psi: str
    h: str
    F1: str = "exp"
    F2: str = "exp"


@dataclass(frozen=True)
class JobConfig:
    """Inputs for the single-computation subcommands; every field may be overridden on the command line."""

    psi: Optional[str] = None
    h: Optional[str] = None
    F1: str = "exp"
    F2: str = "exp"
    s: Optional[float] = None
    p: Optional[float] = None
    i: Optional[int] = None
    dim: Optional[int] = None
    grid_points: Optional[int] = None
    components: Tuple[Component, ...] = ()

    def mixed_spec(self) -> MixedSpec:
        if not self.components:
            raise ValueError("A mixed computation needs a non-empty 'components' list")
        psis = tuple(parse_function(c.psi, self.dim) for c in self.components)
        dim = psis[0].dim
        return MixedSpec(
            psis,
            tuple(parse_h(c.h, dim) for c in self.components),
            tuple(parse_weight(c.F1) for c in self.components),
            tuple(parse_weight(c.F2) for c in self.components),
            common_grid(psis, self.grid_points),
        )


@lru_cache(maxsize=16)
def load_job_config(name: str) -> JobConfig:
    path = resolve_config_path(name)
    raw = _read(path)
    _check_keys(raw, JOB_FIELDS, (), f"Config file {path}")
    components = []
    for k, item in enumerate(raw.pop("components", [])):
        _check_keys(item, COMPONENT_FIELDS, COMPONENT_REQUIRED_FIELDS, f"Config file {path} (components[{k}])")
        components.append(Component(**item))
    try:
        return JobConfig(components=tuple(components), **raw)
    except TypeError as exc:
        raise ValueError(f"Config file {path}: {exc}") from exc


def config_key_help() -> str:
    """Every config key with its default, for the CLI epilog."""
    suite = TestSuiteConfig()
    lines = ["verify config keys (required: " + ", ".join(sorted(SUITE_REQUIRED_FIELDS)) + "):"]
    for f in fields(TestSuiteConfig):
        default = getattr(suite, f.name)
        if f.name == "tolerances":
            default = DEFAULT_TOLERANCES
        lines.append(f"  {f.name} = {json.dumps(default if not isinstance(default, tuple) else list(default))}")
    job = JobConfig()
    lines.append("computation config keys:")
    for f in fields(JobConfig):
        default = getattr(job, f.name)
        lines.append(f"  {f.name} = {json.dumps(default if not isinstance(default, tuple) else list(default))}")
    lines.append("  components[] keys: " + ", ".join(sorted(COMPONENT_FIELDS)) + " (F1, F2 default to exp)")
    return "\n".join(lines)
