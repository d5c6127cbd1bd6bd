"""Named analytic initial-data profiles.

Initial fields are specified in the configuration as ``name key=value
...`` and evaluated on the grid's cell centers, which keeps runs
reproducible from the config text alone.  A raw-field loader is a
documented extension point, not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .grid import Grid

__all__ = ["Profile", "parse_profile", "format_profile", "evaluate_profile"]

_KINDS = {
    "constant": ("value",),
    "gaussian-bump": ("base", "amplitude", "center", "width"),
    "step": ("left", "right", "position"),
    "trig": ("base", "amplitude", "mode"),
}

_DEFAULTS = {
    "constant": {"value": 1.0},
    "gaussian-bump": {"base": 0.0, "amplitude": 1.0, "center": 0.5,
                      "width": 0.1},
    "step": {"left": 0.0, "right": 1.0, "position": 0.5},
    "trig": {"base": 1.0, "amplitude": 0.1, "mode": 1.0},
}


@dataclass(frozen=True)
class Profile:
    kind: str
    params: tuple  # sorted (key, value) pairs

    def get(self, key: str) -> float:
        return dict(self.params)[key]


def make_profile(kind: str, **kwargs) -> Profile:
    if kind not in _KINDS:
        raise ParseError(f"unknown profile kind {kind!r}; "
                         f"available: {sorted(_KINDS)}")
    params = dict(_DEFAULTS[kind])
    for key, val in kwargs.items():
        if key not in _KINDS[kind]:
            raise ParseError(f"profile {kind!r} has no parameter {key!r}")
        params[key] = float(val)
    return Profile(kind=kind, params=tuple(sorted(params.items())))


def parse_profile(text: str) -> Profile:
    toks = text.split()
    if not toks:
        raise ParseError("empty profile specification")
    kind = toks[0]
    kwargs = {}
    for tok in toks[1:]:
        if "=" not in tok:
            raise ParseError(f"malformed profile parameter {tok!r}")
        key, val = tok.split("=", 1)
        try:
            kwargs[key] = float(val)
        except ValueError as exc:
            raise ParseError(f"profile parameter {key}={val!r} "
                             "is not a number") from exc
    return make_profile(kind, **kwargs)


def format_profile(p: Profile) -> str:
    return " ".join([p.kind] + [f"{k}={v!r}" for k, v in p.params])


def evaluate_profile(p: Profile, grid: Grid) -> np.ndarray:
    x = grid.meshgrid()
    if p.kind == "constant":
        return grid.new_field(p.get("value"))
    if p.kind == "gaussian-bump":
        c, w = p.get("center"), p.get("width")
        r2 = sum((xd - c) ** 2 for xd in x)
        return p.get("base") + p.get("amplitude") * np.exp(-r2 / (2.0 * w**2))
    if p.kind == "step":
        return np.where(x[0] < p.get("position"),
                        p.get("left"), p.get("right")).astype(float)
    if p.kind == "trig":
        out = grid.new_field(1.0)
        k = p.get("mode")
        for axis, xd in enumerate(x):
            out *= np.cos(k * math.pi * xd / grid.lengths[axis])
        return p.get("base") + p.get("amplitude") * out
    raise ParseError(f"unknown profile kind {p.kind!r}")
