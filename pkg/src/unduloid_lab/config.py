"""Run configuration: flat JSON file plus command-line overrides."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .errors import ParameterError

SWEEP = (0.3, 0.9, 1.5, 2.1, 2.7)


@dataclass(frozen=True)
class RunConfig:
    necksizes: tuple = (1.0,)
    # None selects the per-command default grid
    grid: Optional[tuple] = None
    t_range: float = 3.0
    tol: float = 1e-10
    m_max: int = 8
    h: float = 1e-4
    out_dir: str = "out"
    seed: int = 0
    # stereographic projection center for S^3 meshes; None chooses one away from the mesh
    center: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "necksizes", tuple(float(n) for n in self.necksizes))
        if not self.necksizes:
            raise ParameterError("at least one necksize is required")
        if self.grid is not None:
            g = tuple(int(x) for x in self.grid)
            if len(g) != 2 or g[0] < 16 or g[1] < 8:
                raise ParameterError("grid must be at least 16x8")
            object.__setattr__(self, "grid", g)
        for name in ("t_range", "tol", "h"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.m_max < 2:
            raise ParameterError("m_max must be at least 2")
        if self.center is not None:
            c = tuple(float(x) for x in self.center)
            if len(c) != 4 or abs(sum(x * x for x in c) - 1.0) > 1e-12:
                raise ParameterError("projection center must be a unit quaternion")
            object.__setattr__(self, "center", c)

    def grid_or(self, default):
        return self.grid if self.grid is not None else tuple(default)

    def as_dict(self):
        d = asdict(self)
        d["necksizes"] = list(self.necksizes)
        d["grid"] = None if self.grid is None else list(self.grid)
        d["center"] = None if self.center is None else list(self.center)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ParameterError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def override(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def parse_grid(text: str):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ParameterError(f"grid must look like 200x100, got {text!r}") from None
