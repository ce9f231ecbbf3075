"""CSV output and run-configuration parsing."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .model import PARAMETER_NAMES, ParameterSet, default_parameters

log = logging.getLogger(__name__)

SOLVER_KEYS = ("rel_tol", "abs_tol", "horizon", "sample_count")


class ConfigError(ValueError):
    pass


def format_value(v) -> str:
    """Render a cell; floats use the shortest round-trip representation
    (at most 17 significant digits), with integral values written bare."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = float(v)
        if math.isfinite(v) and v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(header: Sequence[str], rows: Iterable[Sequence], path) -> int:
    """Write a header plus rows; returns the number of data rows. ``path`` of
    ``None`` or ``"-"`` writes to standard output."""
    import sys

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        count = 0
        for row in rows:
            w.writerow([format_value(v) for v in row])
            count += 1
        return count

    if path is None or str(path) == "-":
        return emit(sys.stdout)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        return emit(fh)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@dataclass(frozen=True)
class RunConfig:
    parameters: ParameterSet = field(default_factory=default_parameters)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    horizon: float | None = None
    sample_count: int | None = None
    seed: int = 11


def _parse_scalar(key: str, raw) -> float | int:
    try:
        if key in ("seed", "sample_count"):
            if isinstance(raw, str):
                return int(raw.strip())
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def parse_config_text(text: str) -> dict[str, float | int]:
    """Flat ``key = value`` lines (``#`` comments allowed) or a JSON object."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError("JSON config must be an object")
        items = obj.items()
    else:
        items = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            k, v = line.split("=", 1)
            items.append((k.strip(), v.strip()))
    out = {}
    for k, v in items:
        if k not in PARAMETER_NAMES and k not in SOLVER_KEYS and k != "seed":
            raise ConfigError(f"unknown config key {k!r}")
        out[k] = _parse_scalar(k, v)
    return out


def build_config(values: dict[str, float | int]) -> RunConfig:
    params = {k: values[k] for k in PARAMETER_NAMES if k in values}
    missing = [k for k in PARAMETER_NAMES if k not in params]
    if missing:
        log.info("parameters %s not given; using default values", ", ".join(missing))
    try:
        pset = default_parameters().replace(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    kw = {k: values[k] for k in (*SOLVER_KEYS, "seed") if k in values}
    return RunConfig(parameters=pset, **kw)


def load_config(path=None, overrides: Sequence[str] = ()) -> RunConfig:
    """Read an optional config file and apply ``name=value`` overrides."""
    values: dict[str, float | int] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(parse_config_text(text))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects name=value, got {item!r}")
        values.update(parse_config_text(item))
    return build_config(values)
