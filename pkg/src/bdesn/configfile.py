"""Plain-text ``key = value`` files for model configs and search spaces.

Both formats share the same lexical rules: one ``key = value`` pair per
line, ``#`` starts a comment, blank lines are ignored and keys may not repeat.

Model config (``model`` is required and selects the field set)::

    model = bdesn            # esn | bdesn
    n_units = 500
    rho = 0.9
    omega = 0.1
    density = 0.1
    n_components = 50        # bdesn only
    hidden = 64,64           # bdesn only; comma-separated widths
    dropout = 0.2            # bdesn only
    l2 = 1e-4                # bdesn only
    learning_rate = 1e-3     # bdesn only
    epochs = 500             # bdesn only
    batch_size = full        # bdesn only; an integer or "full"
    patience = none          # bdesn only; an integer or "none"
    ridge = 0.01             # esn only
    bidirectional = false    # esn only
    seed = 0

Unlisted fields take their defaults. Search space: each value is one of::

    uniform LOW HIGH
    loguniform LOW HIGH      # bounds > 0
    choice V1 V2 ...         # "full" and "none" are allowed members
    VALUE                    # a constant

Space keys are config field names plus ``n_hidden`` and ``hidden_width``,
which together expand to ``hidden = (hidden_width,) * n_hidden``.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .errors import FormatError
from .pipeline import BdesnConfig, Config, EsnConfig

CONFIG_TYPES = {"esn": EsnConfig, "bdesn": BdesnConfig}


def read_pairs(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"file not found: {path}")
    pairs: dict[str, str] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", line=line_no, path=path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise FormatError("empty key or value", line=line_no, path=path)
        if key in pairs:
            raise FormatError(f"duplicate key {key!r}", line=line_no, path=path)
        pairs[key] = value
    return pairs


def parse_scalar(text: str):
    """Best-effort literal: int, float, bool, None or the raw string."""
    low = text.lower()
    if low in ("none", "full"):
        return None
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def coerce_field(cls, name: str, value):
    """Convert ``value`` to the declared type of ``cls.name``."""
    fields = {f.name: f for f in dataclasses.fields(cls)}
    if name not in fields:
        raise FormatError(f"unknown {cls.kind} config key {name!r}; expected one of {sorted(fields)}")
    if isinstance(value, str):
        if name == "hidden":
            return tuple(int(v) for v in value.split(",") if v.strip())
        value = parse_scalar(value)
    default = fields[name].default
    if value is None:
        if name in ("batch_size", "patience"):
            return None
        raise FormatError(f"{name} may not be none")
    if name == "hidden":
        return tuple(int(v) for v in (value if isinstance(value, (tuple, list)) else (value,)))
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise FormatError(f"{name} must be true or false, got {value!r}")
        return value
    if isinstance(default, int) or name in ("batch_size", "patience"):
        if isinstance(value, float) and not value.is_integer():
            raise FormatError(f"{name} must be an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def config_from_pairs(pairs: dict[str, str]) -> Config:
    pairs = dict(pairs)
    kind = pairs.pop("model", None)
    if kind not in CONFIG_TYPES:
        raise FormatError(f"config must set model = esn|bdesn, got {kind!r}")
    cls = CONFIG_TYPES[kind]
    try:
        return cls(**{k: coerce_field(cls, k, v) for k, v in pairs.items()})
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from None


def read_config(path) -> Config:
    try:
        return config_from_pairs(read_pairs(path))
    except FormatError as exc:
        if exc.path is None:
            raise FormatError(str(exc), path=path) from None
        raise


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: Config) -> str:
    lines = [f"model = {cfg.kind}"]
    for f in dataclasses.fields(cfg):
        lines.append(f"{f.name} = {_format(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def write_config(cfg: Config, path) -> None:
    Path(path).write_text(format_config(cfg), encoding="utf-8")
