"""Experiment configuration: JSON schema, validation with line numbers, and builders.

A config names a subshift, a target group, the symbol assignment and the
parameters of one or more commands.  Errors are reported as
:class:`ConfigError` carrying the line of the offending value.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from toplyap.cocycle import Cocycle
from toplyap.errors import InputError
from toplyap.lamination import LaminationTarget, load_surface, preset_data
from toplyap.matrix import MatrixCurve, MatrixTarget, RationalMatrix
from toplyap.symbolic import MarkovChain, TransitionSystem

_ENTRY = {"oneOf": [{"type": "integer"},
                    {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}]}
_INT_MATRIX = {"type": "array", "minItems": 1,
               "items": {"type": "array", "minItems": 1, "items": _ENTRY}}
_PROB_MATRIX = {"type": "array", "minItems": 1,
                "items": {"type": "array", "minItems": 1,
                          "items": {"type": "number", "minimum": 0}}}
_CHAIN = {
    "type": "object",
    "properties": {
        "bernoulli": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
        "P": _PROB_MATRIX,
    },
    "oneOf": [{"required": ["bernoulli"]}, {"required": ["P"]}],
    "additionalProperties": False,
}
_POS_INT = {"type": "integer", "minimum": 1}
_PARAM_FIELDS = {
    "n": _POS_INT,
    "k_max": _POS_INT,
    "q": {"type": "number"},
    "q_list": {"type": "array", "minItems": 1, "items": {"type": "number"}},
    "eps": {"type": "number", "exclusiveMinimum": 0},
    "n_estimate": _POS_INT,
    "n_return": _POS_INT,
    "max_retries": {"type": "integer", "minimum": 0},
    "runs": _POS_INT,
    "slack": {"type": "number", "minimum": 0},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "m_max": {"type": "integer", "minimum": 2},
    "near_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "quick": {"type": "boolean"},
}
# Parameters accepted in each command's section of ``params``.
COMMAND_PARAMS = {
    "lyapunov": ["n", "runs", "tol"],
    "periodic-approx": ["eps", "n_estimate", "n_return", "max_retries", "runs"],
    "jsr": ["n", "k_max", "slack"],
    "optimal-orbit": ["k_max", "tol", "m_max"],
    "pressure": ["n", "q", "q_list"],
    "zero-temp": ["n", "q_list", "near_fraction"],
    "oracle-check": ["quick"],
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["system", "target", "assignment"],
    "additionalProperties": False,
    "properties": {
        "description": {"type": "string"},
        "system": {
            "type": "object",
            "properties": {
                "full_shift": {"type": "integer", "minimum": 1},
                "preset": {"enum": ["golden_mean"]},
                "transitions": {"type": "array", "minItems": 1,
                                "items": {"type": "array", "items": {"enum": [0, 1]}}},
            },
            "oneOf": [{"required": ["full_shift"]}, {"required": ["preset"]},
                      {"required": ["transitions"]}],
            "additionalProperties": False,
        },
        "target": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["matrix", "lamination"]},
                "generators": {"type": "object", "minProperties": 1,
                               "additionalProperties": _INT_MATRIX},
                "preset": {"enum": ["punctured_torus"]},
                "surface": {"type": "object"},
                "surface_file": {"type": "string"},
                "size": {"enum": ["l1", "max"]},
                "marking": {"type": "array", "minItems": 1,
                            "items": {"type": "array", "minItems": 1, "items": _ENTRY}},
            },
            "additionalProperties": False,
            "allOf": [
                {"if": {"properties": {"type": {"const": "matrix"}}},
                 "then": {"required": ["generators"],
                          "not": {"anyOf": [{"required": ["preset"]}, {"required": ["surface"]},
                                            {"required": ["surface_file"]},
                                            {"required": ["size"]}]}}},
                {"if": {"properties": {"type": {"const": "lamination"}}},
                 "then": {"oneOf": [{"required": ["preset"]}, {"required": ["surface"]},
                                    {"required": ["surface_file"]}],
                          "not": {"required": ["generators"]}}},
            ],
        },
        "assignment": {
            "type": "object", "minProperties": 1,
            "propertyNames": {"pattern": r"^\d+$"},
            "additionalProperties": {"type": "string", "pattern": r"\S"},
        },
        "chain": _CHAIN,
        "chains": {"type": "array", "items": _CHAIN},
        "seed": {"type": "integer", "minimum": 0},
        "threads": _POS_INT,
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string", "minLength": 1}},
            "additionalProperties": False,
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {cmd: {"type": "object", "additionalProperties": False,
                                 "properties": {k: _PARAM_FIELDS[k] for k in keys}}
                           for cmd, keys in COMMAND_PARAMS.items()},
        },
    },
}


class ConfigError(Exception):
    """Invalid experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.message = message
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


def locate(text: str, path) -> int | None:
    """1-based line of the JSON value at ``path`` (keys and indices) in ``text``."""
    dec = json.JSONDecoder()
    target = tuple(path)
    found: dict[tuple, int] = {}

    def ws(i: int) -> int:
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i: int, p: tuple) -> int:
        i = ws(i)
        found[p] = i
        if p == target:
            raise StopIteration
        ch = text[i]
        if ch == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, ws(i) + 1)
                i = ws(i) + 1  # colon
                i = ws(value(i, p + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1
        if ch == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            idx = 0
            while True:
                i = ws(value(i, p + (idx,)))
                idx += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    try:
        value(0, ())
    except StopIteration:
        pass
    except (ValueError, IndexError):
        return None
    # fall back to the deepest located ancestor
    for k in range(len(target), -1, -1):
        if target[:k] in found:
            return text.count("\n", 0, found[target[:k]]) + 1
    return None


def parse_config(text: str, source: str = "<config>") -> dict:
    """Decode and schema-validate a config; raises :class:`ConfigError`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    validate(data, text, source)
    return data


def validate(data: Any, text: str | None = None, source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = locate(text, err.absolute_path) if text is not None else None
        raise ConfigError(f"{where}: {err.message}", line, source)


def load_config(path: str | Path) -> tuple[dict, str]:
    """Read, parse and validate a config file; returns ``(data, text)``."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from None
    return parse_config(text, str(p)), text


@dataclass
class Experiment:
    """A validated config turned into library objects."""

    config: dict
    system: TransitionSystem
    cocycle: Cocycle
    chain: MarkovChain | None
    chains: list[MarkovChain]

    @property
    def target(self):
        return self.cocycle.target

    def params(self, command: str) -> dict:
        return self.config.get("params", {}).get(command, {})

    @property
    def seed(self) -> int:
        return self.config.get("seed", 0)

    @property
    def threads(self) -> int:
        return self.config.get("threads", 1)


def _system(section: dict) -> TransitionSystem:
    if "full_shift" in section:
        return TransitionSystem.full_shift(section["full_shift"])
    if "preset" in section:
        return TransitionSystem.golden_mean()
    return TransitionSystem(tuple(tuple(row) for row in section["transitions"]))


def _chain(section: dict, system: TransitionSystem) -> MarkovChain:
    if "bernoulli" in section:
        probs = section["bernoulli"]
        total = sum(probs)
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"bernoulli probabilities sum to {total}, not 1")
        chain = MarkovChain.bernoulli(probs)
        if chain.alphabet_size != system.alphabet_size:
            raise InputError("chain and system alphabet sizes differ")
        MarkovChain(chain.P, pi=chain.pi, system=system)
        return chain
    return MarkovChain(section["P"], system=system)


def _target(section: dict, base: Path | None):
    marking = section.get("marking")
    if section["type"] == "matrix":
        mark = [MatrixCurve(v) for v in marking] if marking is not None else None
        gens = {name: RationalMatrix(rows) for name, rows in section["generators"].items()}
        return MatrixTarget(gens, mark)
    size = section.get("size", "l1")
    if "preset" in section:
        data = preset_data(section["preset"])
    elif "surface" in section:
        data = section["surface"]
    else:
        path = Path(section["surface_file"])
        if not path.is_absolute() and base is not None:
            path = base / path
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load surface file {str(path)!r}: {exc}") from None
    target: LaminationTarget = load_surface(data, size=size)
    if marking is not None:
        target = target.with_marking(marking)
    return target


def build(config: dict, text: str | None = None, source: str = "<config>",
          base: Path | None = None) -> Experiment:
    """Turn a validated config into an :class:`Experiment`.

    Semantic errors (unknown generators, forbidden transitions, bad markings)
    are raised as :class:`ConfigError` pointing at the section involved.
    """
    def fail(section: tuple, exc: Exception):
        line = locate(text, section) if text is not None else None
        where = "/".join(map(str, section))
        return ConfigError(f"{where}: {exc}", line, source)

    try:
        system = _system(config["system"])
    except InputError as exc:
        raise fail(("system",), exc) from None
    try:
        target = _target(config["target"], base)
    except InputError as exc:
        raise fail(("target",), exc) from None
    try:
        cocycle = Cocycle(target, config["assignment"], system)
    except InputError as exc:
        raise fail(("assignment",), exc) from None
    chain = None
    if "chain" in config:
        try:
            chain = _chain(config["chain"], system)
        except InputError as exc:
            raise fail(("chain",), exc) from None
    chains = []
    for i, section in enumerate(config.get("chains", [])):
        try:
            chains.append(_chain(section, system))
        except InputError as exc:
            raise fail(("chains", i), exc) from None
    return Experiment(config, system, cocycle, chain, chains)


def with_overrides(config: dict, seed: int | None = None, threads: int | None = None,
                   out: str | None = None) -> dict:
    """Copy of ``config`` with command-line flags folded in, so the echo is self-contained."""
    cfg = copy.deepcopy(config)
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    if out is not None:
        cfg.setdefault("output", {})["dir"] = out
    return cfg
