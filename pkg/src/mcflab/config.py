"""INI experiment configuration.

A config file has these sections; only ``[shape]`` is required::

    [experiment]   name, seed
    [shape]        kind plus its parameters and ``resolution``
    [stop]         max_time, max_steps, H_max, dt_floor, safety
    [output]       stride, norm_exponents
    [window]       t_i, Q, center            (normalized window for the checks)
    [blowup]       thresholds, B
    [constants]    c_n, q, beta, k_max, mode

``resolution`` is the vertex count for curves, the subdivision level for
spheres, ``major x minor`` for tori and ``rings x around`` for dumbbells.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigInvalidError
from .flow import StopCriteria
from .geometry import Hypersurface
from .ineqlab import MODES
from .shapes import circle, dumbbell, ellipse, graded_sphere, icosphere, star_shaped, torus

SHAPES = ("circle", "ellipse", "sphere", "torus", "dumbbell", "star", "graded_sphere")
BUNDLED = ("circle-exact", "sphere-moser")


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    resolution: Tuple[int, ...]
    params: Tuple[Tuple[str, float], ...] = ()

    def param(self, name: str, default: float) -> float:
        return dict(self.params).get(name, default)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    shape: ShapeSpec
    stop: StopCriteria
    stride: int = 1
    safety: float = 0.1
    norm_exponents: Tuple[float, ...] = (2.0,)
    seed: int = 0
    # normalized window; ``None`` means the last stored time / the max of H there
    window: bool = False
    window_t: Optional[float] = None
    window_Q: Optional[float] = None
    center: Optional[Tuple[float, ...]] = None  # ``None`` is the argmax-H policy
    thresholds: Tuple[float, ...] = ()
    B: Optional[float] = None
    c_n: Optional[float] = None  # ``None`` takes the pinned value
    q: Optional[float] = None
    beta: Optional[float] = None
    k_max: int = 5
    mode: str = "proof"
    source: Optional[str] = field(default=None, compare=False)

    def with_overrides(self, seed: Optional[int] = None, stride: Optional[int] = None) -> "ExperimentConfig":
        from dataclasses import replace

        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if stride is not None:
            if stride < 1:
                raise ConfigInvalidError("stride must be >= 1")
            out = replace(out, stride=int(stride))
        return out


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _opt_float(sec, key) -> Optional[float]:
    if sec is None or key not in sec or sec[key].strip().lower() in ("", "auto", "none", "pinned"):
        return None
    return float(sec[key])


def _parse_resolution(kind: str, text: str) -> Tuple[int, ...]:
    parts = tuple(int(x) for x in text.lower().replace("x", " ").split())
    want = 2 if kind in ("torus", "dumbbell") else 1
    if len(parts) != want:
        raise ConfigInvalidError(f"shape {kind!r} needs {want} resolution value(s), got {text!r}")
    return parts


_SHAPE_PARAMS = {
    "circle": ("radius",),
    "ellipse": ("a", "b"),
    "sphere": ("R0",),
    "torus": ("R", "r"),
    "dumbbell": ("neck_radius", "handle_radius"),
    "star": ("amplitude",),
    "graded_sphere": ("theta_min", "growth"),
}


def _check_shape(kind: str, p: dict):
    if kind == "ellipse" and not (0 < p.get("b", 1.0) <= p.get("a", 2.0)):
        raise ConfigInvalidError("ellipse needs 0 < b <= a")
    if kind == "torus" and not (0 < p.get("r", 1.0) < p.get("R", 2.0)):
        raise ConfigInvalidError("torus needs 0 < r < R")
    if kind == "dumbbell" and not (0 < p.get("neck_radius", 0.3) < p.get("handle_radius", 1.0)):
        raise ConfigInvalidError("dumbbell needs 0 < neck_radius < handle_radius")
    for key in ("radius", "R0"):
        if key in p and not p[key] > 0:
            raise ConfigInvalidError(f"{key} must be positive")


def parse_config(text: str, source: Optional[str] = None) -> ExperimentConfig:
    """Parse INI text.

    Raises
    ------
    ConfigInvalidError
        On syntax errors, unknown shapes or keys, and physically invalid
        parameters.
    """
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keep ``R`` and ``r`` apart
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigInvalidError(f"unparseable config: {exc}") from exc
    if not cp.has_section("shape"):
        raise ConfigInvalidError("missing [shape] section")
    try:
        return _build(cp, source)
    except ValueError as exc:
        raise ConfigInvalidError(str(exc)) from exc


def _build(cp, source) -> ExperimentConfig:
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    sh = cp["shape"]
    kind = sh.get("kind", "").strip()
    if kind not in SHAPES:
        raise ConfigInvalidError(f"unknown shape {kind!r}; expected one of {', '.join(SHAPES)}")
    allowed = set(_SHAPE_PARAMS[kind]) | {"kind", "resolution"}
    unknown = set(sh.keys()) - allowed
    if unknown:
        raise ConfigInvalidError(f"unknown [shape] keys for {kind}: {', '.join(sorted(unknown))}")
    params = {k: float(sh[k]) for k in _SHAPE_PARAMS[kind] if k in sh}
    _check_shape(kind, params)
    res = _parse_resolution(kind, sh.get("resolution", "3" if kind in ("sphere", "star") else "24"))
    shape = ShapeSpec(kind, res, tuple(sorted(params.items())))

    st = cp["stop"] if cp.has_section("stop") else {}
    stop = StopCriteria(
        max_time=float(st.get("max_time", "inf")),
        max_steps=int(st.get("max_steps", str(10**9))),
        H_max=float(st.get("H_max", "inf")),
        dt_floor=float(st.get("dt_floor", "1e-14")),
    )
    safety = float(st.get("safety", "0.1"))
    if not safety > 0:
        raise ConfigInvalidError("safety must be positive")

    out = cp["output"] if cp.has_section("output") else {}
    stride = int(out.get("stride", "1"))
    if stride < 1:
        raise ConfigInvalidError("stride must be >= 1")
    norms = _floats(out.get("norm_exponents", "2"))
    if any(p < 1 for p in norms):
        raise ConfigInvalidError("norm exponents must be >= 1")

    win = cp["window"] if cp.has_section("window") else None
    center = None
    if win is not None and win.get("center", "argmax").strip() != "argmax":
        center = _floats(win["center"])
    bl = cp["blowup"] if cp.has_section("blowup") else None
    thresholds = _floats(bl.get("thresholds", "")) if bl is not None else ()
    if any(q <= 0 for q in thresholds):
        raise ConfigInvalidError("thresholds must be positive")

    co = cp["constants"] if cp.has_section("constants") else None
    mode = co.get("mode", "proof").strip() if co is not None else "proof"
    if mode not in MODES:
        raise ConfigInvalidError(f"mode must be one of {MODES}")
    return ExperimentConfig(
        name=exp.get("name", "experiment").strip(),
        shape=shape,
        stop=stop,
        stride=stride,
        safety=safety,
        norm_exponents=norms,
        seed=int(exp.get("seed", "0")),
        window=win is not None,
        window_t=_opt_float(win, "t_i"),
        window_Q=_opt_float(win, "Q"),
        center=center,
        thresholds=thresholds,
        B=_opt_float(bl, "B"),
        c_n=_opt_float(co, "c_n"),
        q=_opt_float(co, "q"),
        beta=_opt_float(co, "beta"),
        k_max=int(co.get("k_max", "5")) if co is not None else 5,
        mode=mode,
        source=source,
    )


def load_config(name_or_path) -> ExperimentConfig:
    """Read a config file, or a bundled config by name (see ``BUNDLED``)."""
    p = Path(name_or_path)
    if p.is_file():
        return parse_config(p.read_text(), str(p))
    if str(name_or_path) in BUNDLED:
        text = resources.files("mcflab").joinpath(f"configs/{name_or_path}.ini").read_text()
        return parse_config(text, str(name_or_path))
    raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")


def shape_generate(shape: ShapeSpec, seed: int = 0) -> Hypersurface:
    """Deterministic initial mesh for a shape description; ``seed`` only matters for
    the random star-shaped family."""
    k, res = shape.kind, shape.resolution
    if k == "circle":
        return circle(res[0], shape.param("radius", 1.0))
    if k == "ellipse":
        return ellipse(res[0], shape.param("a", 2.0), shape.param("b", 1.0))
    if k == "sphere":
        return icosphere(res[0], shape.param("R0", 1.0))
    if k == "torus":
        return torus(shape.param("R", 2.0), shape.param("r", 1.0), res[0], res[1])
    if k == "dumbbell":
        return dumbbell(shape.param("neck_radius", 0.3), shape.param("handle_radius", 1.0), res[0], res[1])
    if k == "star":
        return star_shaped(res[0], np.random.default_rng(seed), shape.param("amplitude", 0.15))
    if k == "graded_sphere":
        return graded_sphere(shape.param("theta_min", 1e-3), shape.param("growth", 1.15), res[0])
    raise ConfigInvalidError(f"unknown shape {k!r}")  # unreachable after parsing


def describe(cfg: ExperimentConfig) -> str:
    inf = "inf"
    fmt = lambda x: inf if x is None or (isinstance(x, float) and math.isinf(x)) else "%g" % x  # noqa: E731
    return (f"{cfg.name}: {cfg.shape.kind} {'x'.join(map(str, cfg.shape.resolution))}, "
            f"max_time {fmt(cfg.stop.max_time)}, H_max {fmt(cfg.stop.H_max)}, stride {cfg.stride}")
