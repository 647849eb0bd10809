"""Experiment configuration: JSON documents or flat ``key = value`` files."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..bodies import QuadratureSpec
from ..errors import InputError
from .catalog import CATALOG

KINDS = ("monotonicity", "isoperimetric", "convergence", "detlemma", "crosscheck")
OUT_DIR_ENV = "STEINERLAB_OUT_DIR"

_DEFAULT_GENERATORS = {
    "monotonicity": ["p=0.3", "p=0.5", "p=1", "p=-0.5", "p=-1"],
    "isoperimetric": ["p=0.3", "p=0.5", "p=1", "p=-0.5", "p=-1"],
    "convergence": ["p=0.5", "p=-1"],
    "detlemma": [],
    "crosscheck": [],
}

_DEFAULT_BODIES = {
    "monotonicity": None,
    "isoperimetric": None,
    "convergence": ["ellipse_2_05", "qball_4"],
    "detlemma": [],
    "crosscheck": ["ball", "ball_r05", "ball_r2", "ellipse_2_05", "ellipse_2_1"],
}


@dataclass
class ExperimentConfig:
    kind: str
    bodies: list[str] | None = None
    generators: list | None = None
    dims: list[int] = field(default_factory=lambda: [2])
    directions: int | list = 8
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    seed: int = 0
    out_dir: str | None = None
    n_steps: int = 30
    samples: int = 10000
    matrix_sizes: list[int] = field(default_factory=lambda: [1, 2, 3])
    constant: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown experiment kind {self.kind!r}")
        if self.generators is None:
            self.generators = list(_DEFAULT_GENERATORS[self.kind])
        for n in self.dims:
            if n not in CATALOG:
                raise InputError(f"dimension {n} has no catalog")
        if self.bodies is None and _DEFAULT_BODIES[self.kind] is not None:
            self.bodies = list(_DEFAULT_BODIES[self.kind])
        if self.bodies is not None:
            for b in self.bodies:
                if not any(b in CATALOG[n] for n in self.dims):
                    raise InputError(f"unknown body id {b!r}")
        if isinstance(self.directions, int) and self.directions < 1:
            raise InputError("directions must be a positive count or an explicit list")
        if self.n_steps < 1 or self.samples < 1 or self.jobs < 1:
            raise InputError("n_steps, samples and jobs must be positive")

    def bodies_for(self, n: int) -> list[str]:
        ids = list(CATALOG[n]) if self.bodies is None else [b for b in self.bodies if b in CATALOG[n]]
        return ids

    def output_dir(self) -> Path:
        return Path(self.out_dir or os.environ.get(OUT_DIR_ENV) or "steinerlab_out")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quadrature"] = asdict(self.quadrature)
        d.pop("out_dir")
        d.pop("jobs")
        return d


_QUAD_KEYS = {f for f in QuadratureSpec.__dataclass_fields__}
_INT_KEYS = {"seed", "n_steps", "samples", "jobs", "grid_resolution", "sphere_samples", "radial_samples"}
_FLOAT_KEYS = {"constant", "boundary_margin", "fd_step", "tol_rel"}
_LIST_KEYS = {"bodies", "generators", "dims", "matrix_sizes"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if raw.startswith("[") or raw.startswith("{") or raw.startswith('"'):
        return json.loads(raw)
    if key in _LIST_KEYS:
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return [int(s) for s in items] if key in ("dims", "matrix_sizes") else items
    if key in _INT_KEYS or key == "directions":
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    return raw


def parse_keyvalue(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key.startswith("quadrature."):
            key = key.split(".", 1)[1]
        out[key] = _parse_value(key, raw)
    return out


def load_config_dict(path: str | os.PathLike) -> dict:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    return parse_keyvalue(text)


def config_from_dict(d: dict, kind: str | None = None) -> ExperimentConfig:
    d = dict(d)
    quad = dict(d.pop("quadrature", {}) or {})
    for k in list(d):
        if k in _QUAD_KEYS:
            quad[k] = d.pop(k)
    kind = kind or d.pop("kind", None)
    d.pop("kind", None)
    if kind is None:
        raise InputError("experiment kind missing")
    known = set(ExperimentConfig.__dataclass_fields__) - {"kind", "quadrature"}
    unknown = set(d) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    try:
        q = QuadratureSpec(**quad)
    except TypeError as e:
        raise InputError(str(e)) from None
    return ExperimentConfig(kind=kind, quadrature=q, **d)


def with_overrides(cfg: ExperimentConfig, *, seed=None, out_dir=None, resolution=None, epsilon=None,
                   jobs=None) -> ExperimentConfig:
    q = cfg.quadrature
    if resolution is not None:
        q = replace(q, grid_resolution=int(resolution))
    if epsilon is not None:
        q = replace(q, boundary_margin=float(epsilon))
    changes = {"quadrature": q}
    if seed is not None:
        changes["seed"] = int(seed)
    if out_dir is not None:
        changes["out_dir"] = str(out_dir)
    if jobs is not None:
        changes["jobs"] = int(jobs)
    return replace(cfg, **changes)
