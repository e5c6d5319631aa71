"""Deterministic report writers (CSV, JSON, whitespace .dat) and run manifests.

Floats are always written with 17 significant digits so a re-run produces
byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

FLOAT_FORMAT = ".17g"


def format_scalar(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, FLOAT_FORMAT)
    if v is None:
        return ""
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, dict):
        items = sorted(v.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in items) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return json.dumps(format_scalar(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return json.dumps(format_scalar(v))  # JSON has no inf/nan literals
        s = format(v, FLOAT_FORMAT)
        return s if any(c in s for c in ".en") else s + ".0"
    return json.dumps(str(v))


def dumps_json(obj) -> str:
    """Canonical JSON: sorted keys, 17-digit floats, Fractions as "num/den"."""
    return _json_value(obj) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    lines += [",".join(format_scalar(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_dat(path, columns, rows) -> Path:
    """Whitespace-separated columns with a ``#`` header (gnuplot style)."""
    path = Path(path)
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(format_scalar(v) or "nan" for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    from importlib import metadata

    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"approxconvex": pkg, "numpy": np.__version__, "python": platform.python_version()}


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    versions: dict = field(default_factory=versions)
    timings: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)  # file name -> sha256
    checks: dict = field(default_factory=dict)

    def record_outputs(self, paths):
        for p in paths:
            self.outputs[Path(p).name] = sha256_file(p)

    def to_dict(self):
        return {"command": self.command, "params": self.params, "seed": self.seed,
                "versions": self.versions, "timings": self.timings,
                "outputs": self.outputs, "checks": self.checks}

    def write(self, path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text())
        return cls(d["command"], d["params"], d.get("seed"), d.get("versions", {}),
                   d.get("timings", {}), d.get("outputs", {}), d.get("checks", {}))
