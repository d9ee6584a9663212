"""Structured-text input: line-aware YAML loading and run configurations.

Every mapping loaded through :func:`load_yaml` remembers the source line of
each key, so validation errors can point at the offending line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import sympy as sp
import yaml

from . import expr as X
from .errors import ConfigError, SerializationError

__all__ = ["LineDict", "load_yaml", "RunConfig", "load_config", "parse_expr", "config_hash"]


class LineDict(dict):
    """dict that records the 1-based line of each key."""

    line: int | None = None
    source: str | None = None

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.lines: dict[str, int] = {}

    def line_of(self, key: str) -> int | None:
        return self.lines.get(key, self.line)


class LineList(list):
    line: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = LineDict()
    out.line = node.start_mark.line + 1
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        out[key] = loader.construct_object(v_node, deep=True)
        out.lines[key] = k_node.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = LineList(loader.construct_object(n, deep=True) for n in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def _tag_source(obj, source):
    if isinstance(obj, LineDict):
        obj.source = source
        for v in obj.values():
            _tag_source(v, source)
    elif isinstance(obj, list):
        for v in obj:
            _tag_source(v, source)


def load_yaml(text: str, source: str = "<string>") -> Any:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise ConfigError(f"malformed file: {exc.problem}", line, source) from exc
    _tag_source(data, source)
    return data


def load_yaml_file(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", None, str(path)) from exc
    return load_yaml(text, str(path))


def parse_expr(value, where: LineDict | None = None, key: str | None = None) -> sp.Expr:
    """Expression from a YAML scalar (number or prefix string)."""
    try:
        if isinstance(value, bool):
            raise SerializationError("boolean is not an expression")
        if isinstance(value, (int, float)):
            return X.parse(value)
        if isinstance(value, str):
            return X.parse(value)
        raise SerializationError(f"expected an expression, got {type(value).__name__}")
    except SerializationError as exc:
        line = where.line_of(key) if isinstance(where, LineDict) and key is not None else getattr(where, "line", None)
        source = getattr(where, "source", None)
        raise ConfigError(f"{key or 'expression'}: {exc}", line, source) from exc


def require(d: Any, key: str, context: str = ""):
    if not isinstance(d, dict):
        raise ConfigError(f"{context or 'block'} must be a mapping", getattr(d, "line", None), getattr(d, "source", None))
    if key not in d:
        raise ConfigError(f"missing key '{key}'{' in ' + context if context else ''}", getattr(d, "line", None), getattr(d, "source", None))
    return d[key]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    return obj


def config_hash(data: Any) -> str:
    blob = json.dumps(_plain(data), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


_KNOWN = {"group", "metric", "orbit", "equation", "reduction", "solver", "sweep", "output", "seed", "parameters", "verify"}


@dataclass
class RunConfig:
    """Parsed run configuration.  Blocks are kept as plain mappings and
    interpreted by the command that consumes them."""

    group: str
    metric: str = "default"
    orbit: str = "default"
    equation: str = "default"
    parameters: dict = field(default_factory=dict)
    reduction: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    source: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    @classmethod
    def from_data(cls, data, source: str | None = None) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("run configuration must be a mapping", getattr(data, "line", None), source)
        for k in data:
            if k not in _KNOWN:
                line = data.line_of(k) if isinstance(data, LineDict) else None
                raise ConfigError(f"unknown block '{k}'", line, source)
        group = require(data, "group", "run configuration")
        if not isinstance(group, str):
            raise ConfigError("group must be a catalog name or a file path", data.line_of("group") if isinstance(data, LineDict) else None, source)
        params = data.get("parameters", {}) or {}
        if not isinstance(params, dict):
            raise ConfigError("parameters must be a mapping", data.line_of("parameters") if isinstance(data, LineDict) else None, source)
        for k, v in params.items():
            if isinstance(v, bool) or not isinstance(v, (int, float, str)):
                raise ConfigError(f"parameter '{k}' must be a number or expression", params.line_of(k) if isinstance(params, LineDict) else None, source)
            if isinstance(v, str):
                parse_expr(v, params, k)
        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed must be an integer", data.line_of("seed") if isinstance(data, LineDict) else None, source)
        for blk in ("reduction", "solver", "sweep", "verify"):
            v = data.get(blk, {})
            if v is not None and not isinstance(v, dict):
                raise ConfigError(f"{blk} must be a mapping", data.line_of(blk) if isinstance(data, LineDict) else None, source)
        return cls(
            group=group,
            metric=str(data.get("metric", "default")),
            orbit=str(data.get("orbit", "default")),
            equation=str(data.get("equation", "default")),
            parameters=dict(params),
            reduction=dict(data.get("reduction") or {}),
            solver=dict(data.get("solver") or {}),
            sweep=dict(data.get("sweep") or {}),
            verify=dict(data.get("verify") or {}),
            output=data.get("output"),
            seed=seed,
            source=source,
            raw=_plain(data),
        )

    def numeric_parameters(self) -> dict[str, float]:
        out = {}
        for k, v in self.parameters.items():
            val = X.evaluate(X.parse(v), out) if isinstance(v, str) else v
            out[k] = complex(val).real if isinstance(val, complex) else float(val)
        return out


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_data(load_yaml_file(path), str(path))
