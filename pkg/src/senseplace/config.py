"""Run configuration: a single TOML document, validated strictly.

Unknown keys anywhere in the document are rejected, as are missing
required fields, so a typo never silently changes an experiment. Paths
are resolved relative to the config file. See docs/config.md for the
full schema.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import constraints as geom
from .errors import ConfigError
from .fileio import load_coordinates_csv, load_matrix_csv

_SECTIONS = ("data", "grid", "basis", "optimizer", "constraint", "prior", "noise", "sensors", "output")

_BASIS_KINDS = ("identity", "svd", "random_projection", "custom")
_OPTIMIZER_KINDS = ("qr", "ccqr", "gqr", "tpgr")
_PRIOR_KINDS = ("flat", "decreasing", "explicit")
_SHAPES = ("circle", "ellipse", "polygon", "line", "parabola", "cylinder", "expression")

_SHAPE_KEYS = {
    "circle": {"center", "radius"},
    "ellipse": {"center", "a", "b", "angle"},
    "polygon": {"vertices"},
    "line": {"p1", "p2", "side"},
    "parabola": {"vertex", "focal", "orientation", "side"},
    "cylinder": {"center", "radius", "z_min", "z_max"},
    "expression": {"text"},
}


@dataclass
class RunConfig:
    base_dir: Path
    train_path: Path | None = None
    test_path: Path | None = None
    header: bool = False
    grid: dict = field(default_factory=dict)
    basis_kind: str = "svd"
    n_modes: int | None = None
    seed: int | None = None
    center: bool = False
    modes_path: Path | None = None
    optimizer_kind: str = "qr"
    costs_path: Path | None = None
    constraint: dict | None = None
    prior_kind: str | None = None
    prior_scale: float = 1.0
    prior_values: list | None = None
    noise_eta: float | None = None
    n_sensors: int | None = None
    output_dir: Path = Path("out")


def _check_keys(table: dict, allowed, context: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in [{context}]: {', '.join(unknown)}")


def _get(table: dict, key: str, kind, context: str, required: bool = False, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"[{context}] is missing required key {key!r}")
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"[{context}].{key} must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"[{context}].{key} has the wrong type (expected {kind.__name__})")
    return value


def _pair(value, context: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{context} must be a [x, y] pair")
    return float(value[0]), float(value[1])


def load_config(path) -> RunConfig:
    config_path = Path(path)
    try:
        raw = config_path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot open {config_path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{config_path} is not valid TOML: {exc}") from exc

    _check_keys(doc, _SECTIONS, "top level")
    base = config_path.parent
    cfg = RunConfig(base_dir=base)

    def _resolve(rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else base / p

    data = doc.get("data", {})
    _check_keys(data, ("train", "test", "header"), "data")
    if "train" in data:
        cfg.train_path = _resolve(_get(data, "train", str, "data"))
    if "test" in data:
        cfg.test_path = _resolve(_get(data, "test", str, "data"))
    cfg.header = _get(data, "header", bool, "data", default=False)

    grid = doc.get("grid", {})
    _check_keys(grid, ("image_shape", "coords", "x_column", "y_column", "z_column"), "grid")
    if "image_shape" in grid and "coords" in grid:
        raise ConfigError("[grid] must give either image_shape or coords, not both")
    if "image_shape" in grid:
        shape = grid["image_shape"]
        if (
            not isinstance(shape, list)
            or len(shape) != 2
            or not all(isinstance(v, int) and v >= 1 for v in shape)
        ):
            raise ConfigError("[grid].image_shape must be [height, width] with positive integers")
        cfg.grid = {"image_shape": (shape[0], shape[1])}
    elif "coords" in grid:
        spec = {
            "coords": _resolve(_get(grid, "coords", str, "grid")),
            "x_column": _get(grid, "x_column", str, "grid", required=True),
            "y_column": _get(grid, "y_column", str, "grid", required=True),
        }
        if "z_column" in grid:
            spec["z_column"] = _get(grid, "z_column", str, "grid")
        cfg.grid = spec

    basis = doc.get("basis", {})
    _check_keys(basis, ("kind", "r", "seed", "center", "modes"), "basis")
    cfg.basis_kind = _get(basis, "kind", str, "basis", default="svd")
    if cfg.basis_kind not in _BASIS_KINDS:
        raise ConfigError(f"[basis].kind must be one of {_BASIS_KINDS}")
    cfg.n_modes = _get(basis, "r", int, "basis")
    cfg.seed = _get(basis, "seed", int, "basis")
    cfg.center = _get(basis, "center", bool, "basis", default=False)
    if "modes" in basis:
        cfg.modes_path = _resolve(_get(basis, "modes", str, "basis"))
    if cfg.basis_kind in ("svd", "random_projection") and cfg.n_modes is None:
        raise ConfigError(f"[basis].r is required for the {cfg.basis_kind} basis")
    if cfg.basis_kind == "custom" and cfg.modes_path is None:
        raise ConfigError("[basis].modes is required for the custom basis")

    optimizer = doc.get("optimizer", {})
    _check_keys(optimizer, ("kind", "costs"), "optimizer")
    cfg.optimizer_kind = _get(optimizer, "kind", str, "optimizer", default="qr")
    if cfg.optimizer_kind not in _OPTIMIZER_KINDS:
        raise ConfigError(f"[optimizer].kind must be one of {_OPTIMIZER_KINDS}")
    if "costs" in optimizer:
        cfg.costs_path = _resolve(_get(optimizer, "costs", str, "optimizer"))
    if cfg.optimizer_kind == "ccqr" and cfg.costs_path is None:
        raise ConfigError("[optimizer].costs is required for ccqr")

    constraint = doc.get("constraint")
    if constraint is not None:
        cfg.constraint = _validate_constraint(constraint)
    if cfg.optimizer_kind == "gqr" and cfg.constraint is None:
        raise ConfigError("[constraint] section is required for the gqr optimizer")

    prior = doc.get("prior", {})
    _check_keys(prior, ("kind", "scale", "values"), "prior")
    if prior:
        cfg.prior_kind = _get(prior, "kind", str, "prior", required=True)
        if cfg.prior_kind not in _PRIOR_KINDS:
            raise ConfigError(f"[prior].kind must be one of {_PRIOR_KINDS}")
        cfg.prior_scale = _get(prior, "scale", float, "prior", default=1.0)
        if cfg.prior_kind == "explicit":
            values = prior.get("values")
            if not isinstance(values, list) or not values:
                raise ConfigError("[prior].values must be a nonempty list for an explicit prior")
            cfg.prior_values = [float(v) for v in values]

    noise = doc.get("noise", {})
    _check_keys(noise, ("eta",), "noise")
    if "eta" in noise:
        cfg.noise_eta = _get(noise, "eta", float, "noise")
        if cfg.noise_eta <= 0:
            raise ConfigError("[noise].eta must be > 0")

    sensors = doc.get("sensors", {})
    _check_keys(sensors, ("p",), "sensors")
    if "p" in sensors:
        cfg.n_sensors = _get(sensors, "p", int, "sensors")
        if cfg.n_sensors < 1:
            raise ConfigError("[sensors].p must be >= 1")

    output = doc.get("output", {})
    _check_keys(output, ("dir",), "output")
    if "dir" in output:
        cfg.output_dir = _resolve(_get(output, "dir", str, "output"))

    return cfg


def _validate_constraint(table) -> dict:
    if not isinstance(table, dict):
        raise ConfigError("[constraint] must be a table")
    allowed = {"mode", "s", "d", "predetermined", "shape", "loc"} | set().union(*_SHAPE_KEYS.values())
    _check_keys(table, allowed, "constraint")
    mode = _get(table, "mode", str, "constraint", required=True)
    if mode not in geom.CONSTRAINT_MODES:
        raise ConfigError(f"[constraint].mode must be one of {geom.CONSTRAINT_MODES}")
    out: dict = {"mode": mode}
    if mode in ("max_n", "exact_n"):
        out["s"] = _get(table, "s", int, "constraint", required=True)
        if out["s"] < 0:
            raise ConfigError("[constraint].s must be >= 0")
        if "shape" not in table:
            raise ConfigError(f"[constraint] mode {mode} needs a shape")
    if mode == "predetermined":
        pre = table.get("predetermined")
        if not isinstance(pre, list) or not all(isinstance(v, int) for v in pre):
            raise ConfigError("[constraint].predetermined must be a list of state indices")
        out["predetermined"] = list(pre)
        out["s"] = _get(table, "s", int, "constraint", default=len(pre))
    if mode == "distance":
        out["d"] = _get(table, "d", float, "constraint", required=True)
        if out["d"] < 0:
            raise ConfigError("[constraint].d must be >= 0")
    if "shape" in table:
        out["shape"] = _validate_shape(table)
    return out


def _validate_shape(table) -> dict:
    shape = _get(table, "shape", str, "constraint", required=True)
    if shape not in _SHAPES:
        raise ConfigError(f"[constraint].shape must be one of {_SHAPES}")
    loc = _get(table, "loc", str, "constraint", default="in")
    if loc not in ("in", "out"):
        raise ConfigError("[constraint].loc must be 'in' or 'out'")
    given = set(table) - {"mode", "s", "d", "predetermined", "shape", "loc"}
    stray = given - _SHAPE_KEYS[shape]
    if stray:
        raise ConfigError(f"[constraint] keys {sorted(stray)} do not apply to shape {shape!r}")
    out = {"shape": shape, "loc": loc}
    for key in _SHAPE_KEYS[shape]:
        if key in table:
            out[key] = table[key]
    return out


def build_region(shape_spec: dict) -> geom.Region:
    """Instantiate the region described by a validated constraint block."""
    kind = shape_spec["shape"]
    loc = shape_spec["loc"]
    try:
        if kind == "circle":
            cx, cy = _pair(shape_spec["center"], "[constraint].center")
            return geom.Circle(cx, cy, float(shape_spec["radius"]), loc=loc)
        if kind == "ellipse":
            cx, cy = _pair(shape_spec["center"], "[constraint].center")
            return geom.Ellipse(
                cx,
                cy,
                float(shape_spec["a"]),
                float(shape_spec["b"]),
                angle=float(shape_spec.get("angle", 0.0)),
                loc=loc,
            )
        if kind == "polygon":
            vertices = shape_spec["vertices"]
            if not isinstance(vertices, list):
                raise ConfigError("[constraint].vertices must be a list of [x, y] pairs")
            return geom.Polygon(tuple(_pair(v, "[constraint].vertices entry") for v in vertices), loc=loc)
        if kind == "line":
            return geom.Line(
                _pair(shape_spec["p1"], "[constraint].p1"),
                _pair(shape_spec["p2"], "[constraint].p2"),
                side=shape_spec.get("side", "left"),
                loc=loc,
            )
        if kind == "parabola":
            return geom.Parabola(
                _pair(shape_spec["vertex"], "[constraint].vertex"),
                float(shape_spec["focal"]),
                orientation=shape_spec.get("orientation", "up"),
                side=shape_spec.get("side", "concave"),
                loc=loc,
            )
        if kind == "cylinder":
            cx, cy = _pair(shape_spec["center"], "[constraint].center")
            return geom.Cylinder(
                cx,
                cy,
                float(shape_spec["radius"]),
                float(shape_spec["z_min"]),
                float(shape_spec["z_max"]),
                loc=loc,
            )
        return geom.parse_constraint_expression(str(shape_spec["text"]), loc=loc)
    except KeyError as exc:
        raise ConfigError(f"[constraint] shape {kind!r} is missing {exc.args[0]!r}") from exc


def build_geometry(cfg: RunConfig, n_states: int):
    """Resolve the grid block against the data's state count."""
    if not cfg.grid:
        raise ConfigError("[grid] section is required (image_shape or coords)")
    if "image_shape" in cfg.grid:
        height, width = cfg.grid["image_shape"]
        if height * width != n_states:
            raise ConfigError(
                f"[grid].image_shape {height}x{width} does not match {n_states} states"
            )
        return geom.ImageGrid(height, width)
    points = load_coordinates_csv(
        cfg.grid["coords"],
        cfg.grid["x_column"],
        cfg.grid["y_column"],
        cfg.grid.get("z_column"),
    )
    if points.shape[0] != n_states:
        raise ConfigError(
            f"coordinates table has {points.shape[0]} rows but data has {n_states} states"
        )
    return geom.PointCloud(points)


def load_costs(cfg: RunConfig, n_states: int) -> np.ndarray:
    raw = load_matrix_csv(cfg.costs_path)
    flat = raw.ravel()
    if flat.size != n_states:
        raise ConfigError(f"costs file holds {flat.size} values, expected {n_states}")
    return flat
