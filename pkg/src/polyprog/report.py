"""Run configuration and CSV/JSON report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ArgumentError

SCHEMA_VERSION = 1
HEADER = ("command", "quantity", "value", "prediction", "tolerance", "note")
SIG_DIGITS = 12


def format_value(v) -> str:
    """Serialize a report value: 12 significant digits for floats, exact text otherwise."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        out = format(v, f".{SIG_DIGITS}g")
        return "0" if out == "-0" else out
    return str(v)


@dataclass
class ReportRow:
    command: str
    quantity: str
    value: object
    prediction: object = None
    tolerance: object = None
    note: str = ""

    def cells(self) -> tuple[str, ...]:
        return (self.command, self.quantity, format_value(self.value), format_value(self.prediction),
                format_value(self.tolerance), self.note)


# ---------------------------------------------------------------------------
# configuration


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ArgumentError(f"config line {lineno} is not key = value: {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ArgumentError(f"config line {lineno} has an empty key")
        out[key] = value.strip()
    return out


def default_config_text() -> str:
    return resources.files("polyprog").joinpath("data/default.cfg").read_text()


@dataclass
class RunConfig:
    command: str
    params: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    out: Path = Path("polyprog-out")
    mode: str = "exact"

    @classmethod
    def resolve(cls, command: str, config_path: str | None = None, overrides: Mapping[str, str] | None = None,
                seed: int | None = None, out: str | None = None, mode: str | None = None) -> "RunConfig":
        params = parse_config_text(default_config_text())
        if config_path is not None:
            try:
                params.update(parse_config_text(Path(config_path).read_text()))
            except OSError as exc:
                raise ArgumentError(f"cannot read config {config_path}: {exc}") from exc
        for k, v in (overrides or {}).items():
            if v is not None:
                params[k] = str(v)
        if seed is None:
            seed = int(params.get("seed", "0"))
        if not 0 <= seed < 2 ** 64:
            raise ArgumentError("seed must be an unsigned 64-bit integer")
        params["seed"] = str(seed)
        mode = mode or params.get("mode", "exact")
        if mode not in ("exact", "sampled"):
            raise ArgumentError("mode must be exact or sampled")
        params["mode"] = mode
        return cls(command, params, seed, Path(out or params.get("out", "polyprog-out")), mode)

    def get(self, key: str, default=None) -> str:
        if key in self.params:
            return self.params[key]
        if default is None:
            raise ArgumentError(f"missing config key {key!r}")
        return str(default)

    def get_int(self, key: str, default=None) -> int:
        return int(float(self.get(key, default)))

    def get_float(self, key: str, default=None) -> float:
        return float(self.get(key, default))

    def get_list(self, key: str, default=None, cast=int) -> list:
        return [cast(v) for v in self.get(key, default).split(",") if v.strip()]


# ---------------------------------------------------------------------------
# writers


def render_csv(cfg: RunConfig, rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(f"# command={cfg.command}\n")
    buf.write(f"# seed={cfg.seed}\n")
    for k in sorted(cfg.params):
        buf.write(f"# config {k}={cfg.params[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def render_json(cfg: RunConfig, rows: Iterable[ReportRow]) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": dict(sorted(cfg.params.items())),
        "header": list(HEADER),
        "rows": [dict(zip(HEADER, r.cells())) for r in rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_report(cfg: RunConfig, rows: list[ReportRow], extra_meta: Mapping | None = None) -> dict[str, Path]:
    """Write ``<command>.csv``, its JSON mirror and a metadata file with timestamps."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    base = cfg.out / cfg.command
    paths = {"csv": base.with_suffix(".csv"), "json": base.with_suffix(".json"),
             "meta": cfg.out / f"{cfg.command}.meta.json"}
    paths["csv"].write_text(render_csv(cfg, rows))
    paths["json"].write_text(render_json(cfg, rows))
    meta = {"written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "python": platform.python_version(),
            "platform": platform.platform()}
    meta.update(extra_meta or {})
    paths["meta"].write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return paths
