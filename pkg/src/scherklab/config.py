"""Run configuration: model presets, key=value files, manifests.

Config files are flat key=value text, one pair per line, '#' starts a
comment, keys are lowercase.  Command-line flags override file values.
The model is either a preset name (euclidean, heisenberg, sol,
solc:<v> with v >= 1) or four comma-separated reals a,b,c,d.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

from .errors import InvalidConfig, InvalidPreset
from .geometry import ModelMatrix

_PRESETS = {
    "euclidean": ModelMatrix.euclidean,
    "heisenberg": ModelMatrix.heisenberg,
    "sol": ModelMatrix.sol,
}


def parse_model(text: str) -> ModelMatrix:
    """Preset name, solc:<v>, or four comma-separated entries."""
    s = text.strip().lower()
    if s in _PRESETS:
        return _PRESETS[s]()
    if s.startswith("solc:"):
        try:
            v = float(s[5:])
        except ValueError:
            raise InvalidPreset(f"bad family parameter in {text!r}")
        if not (math.isfinite(v) and v >= 1.0):
            raise InvalidPreset(f"solc parameter must be >= 1, got {text!r}")
        return ModelMatrix.sol_family(v)
    parts = s.split(",")
    if len(parts) != 4:
        raise InvalidPreset(
            f"model must be a preset or four comma-separated reals, got {text!r}"
        )
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise InvalidPreset(f"non-numeric model entry in {text!r}")
    if not all(math.isfinite(v) for v in vals):
        raise InvalidPreset(f"model entries must be finite, got {text!r}")
    return ModelMatrix(*vals)


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, already validated.

    c_list serves double duty: a single entry is the contour height of
    one solve, several entries drive the increasing-height family.
    When empty, solve and build fall back to c1.
    """

    model: str = "heisenberg"
    kind: str = "doubly"
    a: float = 0.1
    eps: float = 1e-4
    c0: float = 1.0
    c1: float = 2.0
    d: float = 3.0
    c_list: tuple = ()
    h: float = 0.02
    tol: float = 1e-8
    copies: int = 2
    out: str = "runs"
    jobs: int = 1

    def __post_init__(self):
        parse_model(self.model)  # raises on a bad spec
        if self.kind not in ("doubly", "singly"):
            raise InvalidConfig(f"kind must be doubly or singly, got {self.kind!r}")
        for name in ("a", "eps", "c0", "c1", "d", "h", "tol"):
            v = getattr(self, name)
            if not (isinstance(v, float) and math.isfinite(v)):
                raise InvalidConfig(f"{name} must be a finite number, got {v!r}")
        if self.a <= 0 or self.eps <= 0 or self.h <= 0 or self.tol <= 0:
            raise InvalidConfig("a, eps, h, tol must be positive")
        if not all(math.isfinite(c) and c > 0 for c in self.c_list):
            raise InvalidConfig("c_list entries must be positive and finite")
        if self.copies < 1:
            raise InvalidConfig(f"copies must be at least 1, got {self.copies}")
        if self.jobs < 1:
            raise InvalidConfig(f"jobs must be at least 1, got {self.jobs}")

    @property
    def model_matrix(self) -> ModelMatrix:
        return parse_model(self.model)

    @property
    def heights(self) -> tuple:
        return self.c_list if self.c_list else (self.c1,)

    def echo(self) -> dict:
        d = asdict(self)
        d["c_list"] = list(self.c_list)
        return d


_FLOAT_KEYS = ("a", "eps", "c0", "c1", "d", "h", "tol")
_INT_KEYS = ("copies", "jobs")
_STR_KEYS = ("model", "kind", "out")


def read_config_file(path) -> dict:
    """key=value pairs with '#' comments; later duplicates win."""
    vals = {}
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{ln}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key != key.lower():
                raise InvalidConfig(f"{path}:{ln}: keys are lowercase, got {key!r}")
            vals[key] = val.strip()
    return vals


def _parse_c_list(text: str) -> tuple:
    items = [p.strip() for p in text.split(",") if p.strip()]
    try:
        return tuple(float(p) for p in items)
    except ValueError:
        raise InvalidConfig(f"c_list must be comma-separated numbers, got {text!r}")


def make_run_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Merge file values and CLI overrides onto the defaults.

    file_values are raw strings from read_config_file; overrides are
    already-typed values (None entries are ignored).
    """
    kwargs = {}
    for key, raw in (file_values or {}).items():
        if key in _FLOAT_KEYS:
            try:
                kwargs[key] = float(raw)
            except ValueError:
                raise InvalidConfig(f"{key} must be a number, got {raw!r}")
        elif key in _INT_KEYS:
            try:
                kwargs[key] = int(raw)
            except ValueError:
                raise InvalidConfig(f"{key} must be an integer, got {raw!r}")
        elif key in _STR_KEYS:
            kwargs[key] = raw
        elif key == "c_list":
            kwargs[key] = _parse_c_list(raw)
        else:
            raise InvalidConfig(f"unknown config key {key!r}")
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        kwargs[key] = _parse_c_list(val) if key == "c_list" and isinstance(val, str) else val
    return RunConfig(**kwargs)


@dataclass
class RunManifest:
    """What a command did: resolved config, files written, step timings."""

    config: dict
    artifacts: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def add_step(self, name: str, status: str, seconds: float) -> None:
        self.steps.append({"name": name, "status": status, "seconds": round(seconds, 3)})

    def add_artifact(self, path) -> None:
        self.artifacts.append(os.fspath(path))


def write_manifest(path, manifest: RunManifest, require_exists: bool = True) -> None:
    if require_exists:
        missing = [p for p in manifest.artifacts if not os.path.exists(p)]
        if missing:
            raise InvalidConfig(f"manifest lists missing files: {missing}")
    payload = {
        "config": manifest.config,
        "artifacts": manifest.artifacts,
        "steps": manifest.steps,
    }
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
