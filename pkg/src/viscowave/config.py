"""Run configuration: schema, validation, serialization, materialization.

A run config is one JSON document (nested key-value with arrays).  The
loader validates the whole document and reports *every* violation with
its field path, not just the first.  A validated `RunConfig` builds the
solver-level objects (grid, material, boundaries, source) on demand.

Schema defaults live in `DEFAULTS`; everything not listed there is
required when the selected experiment needs that section.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .constitutive import Material, MaxwellUnit
from .solver import FACE_NAMES, BoundaryMask, Grid, SourceSpec
from .tensors import IsotropicModuli

EXPERIMENTS = ("simulate", "verify_fsp", "check_identities", "check_carleman",
               "identify_speed", "uniqueness_exp")

NEEDS_SIMULATION = ("simulate", "verify_fsp", "identify_speed", "uniqueness_exp")

DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "cfl": 0.5,
    "snapshot_every": 1,
    "trace_every": 1,
    "store_velocity": False,
    "frozen_dashpots": False,
    "experiment_params": {},
    "tolerances": {},
    "source": None,
    "grid.origin": "zeros",
    "material.regions": [],
    "source.ramp_cycles": 2.0,
    "source.n_cycles": None,
}


class ConfigError(ValueError):
    """Invalid configuration; `errors` lists every violation."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def require(self, data: dict, path: str, key: str, kinds, positive=False):
        if key not in data:
            self.fail(f"{path}.{key}" if path else key, "missing")
            return None
        value = data[key]
        if not isinstance(value, kinds) or isinstance(value, bool) and kinds is not bool:
            self.fail(f"{path}.{key}" if path else key,
                      f"expected {getattr(kinds, '__name__', kinds)}")
            return None
        if positive and not (isinstance(value, (int, float)) and value > 0):
            self.fail(f"{path}.{key}" if path else key, "must be positive")
            return None
        return value


def _validate_material(chk: _Checker, spec, path="material"):
    if not isinstance(spec, dict):
        chk.fail(path, "expected an object")
        return
    units = spec.get("units")
    if not isinstance(units, list) or not units:
        chk.fail(f"{path}.units", "need a nonempty array of units")
        units = []
    dim_hint = None
    seen_elastic = False
    for i, unit in enumerate(units):
        upath = f"{path}.units[{i}]"
        if not isinstance(unit, dict):
            chk.fail(upath, "expected an object")
            continue
        lam = chk.require(unit, upath, "lam", (int, float))
        mu = chk.require(unit, upath, "mu", (int, float), positive=True)
        eta = unit.get("eta")
        if eta is not None and (not isinstance(eta, (int, float)) or eta <= 0):
            chk.fail(f"{upath}.viscosity", "must be positive when present")
        if eta is None:
            seen_elastic = True
        elif seen_elastic:
            chk.fail(f"{path}.units", "viscous units must come first")
        unknown = set(unit) - {"lam", "mu", "eta"}
        if unknown:
            chk.fail(upath, f"unknown keys {sorted(unknown)}")
    rho = spec.get("rho", 1.0)
    if not isinstance(rho, (int, float)) or rho <= 0:
        chk.fail(f"{path}.rho", "must be positive")
    for i, region in enumerate(spec.get("regions", [])):
        rpath = f"{path}.regions[{i}]"
        if not isinstance(region, dict):
            chk.fail(rpath, "expected an object")
            continue
        shape = region.get("shape")
        if shape not in ("disc", "box"):
            chk.fail(f"{rpath}.shape", "must be 'disc' or 'box'")
        if shape == "disc":
            chk.require(region, rpath, "center", list)
            chk.require(region, rpath, "radius", (int, float), positive=True)
        if shape == "box":
            chk.require(region, rpath, "lo", list)
            chk.require(region, rpath, "hi", list)
        for key in ("mu_scale", "lam_scale", "eta_scale", "rho_scale"):
            v = region.get(key)
            if v is not None and (not isinstance(v, (int, float)) or v <= 0):
                chk.fail(f"{rpath}.{key}", "must be positive")
    unknown = set(spec) - {"units", "rho", "regions"}
    if unknown:
        chk.fail(path, f"unknown keys {sorted(unknown)}")


def _validate_grid(chk: _Checker, spec, path="grid"):
    if not isinstance(spec, dict):
        chk.fail(path, "expected an object")
        return None
    dim = chk.require(spec, path, "dim", int)
    if dim is not None and dim not in (2, 3):
        chk.fail(f"{path}.dim", "must be 2 or 3")
    shape = chk.require(spec, path, "shape", list)
    if shape is not None:
        if dim is not None and len(shape) != dim:
            chk.fail(f"{path}.shape", f"need {dim} entries")
        for n in shape:
            if not isinstance(n, int) or n < 8:
                chk.fail(f"{path}.shape", "each axis needs >= 8 nodes")
                break
    chk.require(spec, path, "spacing", (int, float), positive=True)
    origin = spec.get("origin")
    if origin is not None and (not isinstance(origin, list)
                               or (dim is not None and len(origin) != dim)):
        chk.fail(f"{path}.origin", "must be one coordinate per axis")
    unknown = set(spec) - {"dim", "shape", "spacing", "origin"}
    if unknown:
        chk.fail(path, f"unknown keys {sorted(unknown)}")
    return dim


def _validate_boundaries(chk: _Checker, spec, dim, driven, path="boundaries"):
    if not isinstance(spec, dict):
        chk.fail(path, "expected an object")
        return
    if dim is None:
        return
    names = FACE_NAMES[dim]
    for name in names:
        label = spec.get(name)
        if label is None:
            chk.fail(f"{path}.{name}", "missing")
        elif label not in ("dirichlet", "traction"):
            chk.fail(f"{path}.{name}", "must be 'dirichlet' or 'traction'")
    unknown = set(spec) - set(names)
    if unknown:
        chk.fail(path, f"unknown faces {sorted(unknown)}")
    if driven and set(spec.values()) == {"dirichlet"}:
        chk.fail(path, "a driven run needs a traction part as well")


def _validate_source(chk: _Checker, spec, dim, path="source"):
    if spec is None:
        return
    if not isinstance(spec, dict):
        chk.fail(path, "expected an object or null")
        return
    face = spec.get("face")
    if dim is not None and face not in FACE_NAMES[dim]:
        chk.fail(f"{path}.face", f"must be one of {FACE_NAMES[dim]}")
    chk.require(spec, path, "frequency", (int, float), positive=True)
    chk.require(spec, path, "amplitude", (int, float))
    pol = chk.require(spec, path, "polarization", list)
    if pol is not None and dim is not None and len(pol) != dim:
        chk.fail(f"{path}.polarization", f"need {dim} components")
    center = chk.require(spec, path, "center", list)
    if center is not None and dim is not None and len(center) != dim:
        chk.fail(f"{path}.center", f"need {dim} coordinates")
    chk.require(spec, path, "width", (int, float), positive=True)
    ramp = spec.get("ramp_cycles", DEFAULTS["source.ramp_cycles"])
    if not isinstance(ramp, (int, float)) or ramp <= 0:
        chk.fail(f"{path}.ramp_cycles", "must be positive")
    n_cycles = spec.get("n_cycles")
    if n_cycles is not None:
        if not isinstance(n_cycles, (int, float)) or n_cycles <= 0:
            chk.fail(f"{path}.n_cycles", "must be positive or null")
        elif isinstance(ramp, (int, float)) and n_cycles < 2 * ramp:
            chk.fail(f"{path}.n_cycles", "must cover both window ramps")
    unknown = set(spec) - {"face", "frequency", "amplitude", "polarization",
                           "center", "width", "ramp_cycles", "n_cycles"}
    if unknown:
        chk.fail(path, f"unknown keys {sorted(unknown)}")


_PARAM_KEYS = {
    "simulate": set(),
    "verify_fsp": {"center", "radius", "alpha_scale", "tol_field", "tol_rel",
                   "tol_abs"},
    "check_identities": {"cases", "degree", "float_check_points"},
    "check_carleman": {"center", "r0", "beta0", "beta_factor", "beta_count",
                       "bumps", "kernel_bounds"},
    "identify_speed": {"method", "true_speed", "tolerance", "min_coverage",
                       "regions", "amplitude_floor", "shear_fraction",
                       "window"},
    "uniqueness_exp": {"candidate", "active_fraction", "significance",
                       "expect_region", "min_detection_rate",
                       "expect_quiescent_region"},
}


@dataclass
class RunConfig:
    """Validated configuration document plus builders for solver objects."""

    data: dict
    warnings: list

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.data == other.data

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def params(self) -> dict:
        return self.data["experiment_params"]

    @property
    def tolerances(self) -> dict:
        return self.data["tolerances"]

    def serialize(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    # -- builders ------------------------------------------------------

    def build_grid(self) -> Grid:
        g = self.data["grid"]
        origin = g.get("origin") or (0.0,) * g["dim"]
        return Grid(g["dim"], tuple(g["shape"]), float(g["spacing"]),
                    tuple(origin))

    def build_material(self, spec: dict | None = None) -> Material:
        spec = spec if spec is not None else self.data["material"]
        grid = self.build_grid()
        regions = spec.get("regions", [])
        masks = [_region_mask(grid, r) for r in regions]

        def fieldify(value, key):
            scales = [r.get(key) for r in regions]
            if not any(s is not None for s in scales):
                return value
            out = np.full(grid.shape, float(value))
            for mask, s in zip(masks, scales):
                if s is not None:
                    out[mask] *= s
            return out

        units = []
        for u in spec["units"]:
            lam = fieldify(u["lam"], "lam_scale")
            mu = fieldify(u["mu"], "mu_scale")
            eta = u.get("eta")
            if eta is not None:
                eta = fieldify(eta, "eta_scale")
            units.append(MaxwellUnit(IsotropicModuli(lam, mu, grid.dim), eta))
        rho = fieldify(spec.get("rho", 1.0), "rho_scale")
        return Material(tuple(units), rho=rho,
                        frozen_dashpots=self.data["frozen_dashpots"])

    def build_boundaries(self) -> BoundaryMask:
        return BoundaryMask(dict(self.data["boundaries"]))

    def build_source(self) -> SourceSpec | None:
        s = self.data["source"]
        if s is None:
            return None
        return SourceSpec(
            face=s["face"], frequency=float(s["frequency"]),
            amplitude=float(s["amplitude"]),
            polarization=tuple(float(v) for v in s["polarization"]),
            center=tuple(float(v) for v in s["center"]),
            width=float(s["width"]),
            ramp_cycles=float(s.get("ramp_cycles", DEFAULTS["source.ramp_cycles"])),
            n_cycles=None if s.get("n_cycles") is None else float(s["n_cycles"]),
        )


def _region_mask(grid: Grid, region: dict) -> np.ndarray:
    coords = grid.node_coords()
    if region["shape"] == "disc":
        sq = sum((c - p) ** 2 for c, p in zip(coords, region["center"]))
        return sq <= region["radius"] ** 2
    lo, hi = region["lo"], region["hi"]
    mask = np.ones(grid.shape, dtype=bool)
    for c, a, b in zip(coords, lo, hi):
        mask &= (c >= a) & (c <= b)
    return mask


def smoothness_report(grid: Grid, field: np.ndarray, name: str) -> str | None:
    """Finite-difference lint for parameter fields that should be smooth.

    Flags fields whose discrete second difference is large relative to
    their range; heterogeneous configs with sharp regions are allowed
    but the warning records that the smoothness the continuum analysis
    assumes is not met.
    """
    field = np.asarray(field, dtype=float)
    if field.shape != tuple(grid.shape):
        return None
    span = float(np.max(field) - np.min(field))
    if span == 0.0:
        return None
    jump = 0.0
    for axis in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl_p = list(sl); sl_p[axis] = slice(2, None)
        sl_m = list(sl); sl_m[axis] = slice(None, -2)
        sl_c = list(sl); sl_c[axis] = slice(1, -1)
        second = field[tuple(sl_p)] - 2 * field[tuple(sl_c)] + field[tuple(sl_m)]
        jump = max(jump, float(np.max(np.abs(second))))
    if jump > 0.5 * span:
        return (f"{name}: parameter field has node-scale jumps "
                f"(max second difference {jump:.3g} vs range {span:.3g}); "
                "the smoothness assumed by the continuum analysis is not met")
    return None


def validate(document: dict) -> RunConfig:
    """Validate a parsed document; raises `ConfigError` listing all issues."""
    chk = _Checker()
    if not isinstance(document, dict):
        raise ConfigError(["top level: expected an object"])
    data = dict(document)

    known_top = {"experiment", "seed", "output_dir", "cfl", "snapshot_every",
                 "trace_every", "store_velocity", "frozen_dashpots",
                 "experiment_params", "tolerances", "source", "material",
                 "grid", "boundaries", "duration", "material_kind"}
    for key in sorted(set(data) - known_top):
        chk.fail(key, "unknown top-level key")

    experiment = data.get("experiment")
    if experiment not in EXPERIMENTS:
        chk.fail("experiment", f"must be one of {EXPERIMENTS}")

    for key, default in (("seed", DEFAULTS["seed"]),
                         ("cfl", DEFAULTS["cfl"]),
                         ("snapshot_every", DEFAULTS["snapshot_every"]),
                         ("trace_every", DEFAULTS["trace_every"])):
        data.setdefault(key, default)
    data.setdefault("output_dir", DEFAULTS["output_dir"])
    data.setdefault("store_velocity", DEFAULTS["store_velocity"])
    data.setdefault("frozen_dashpots", DEFAULTS["frozen_dashpots"])
    data.setdefault("experiment_params", {})
    data.setdefault("tolerances", {})
    data.setdefault("source", None)

    if not isinstance(data["seed"], int):
        chk.fail("seed", "must be an integer")
    if not isinstance(data["cfl"], (int, float)) or not 0 < data["cfl"] <= 1:
        chk.fail("cfl", "must lie in (0, 1]")
    for key in ("snapshot_every", "trace_every"):
        if not isinstance(data[key], int) or data[key] < 1:
            chk.fail(key, "must be a positive integer")
    for key in ("store_velocity", "frozen_dashpots"):
        if not isinstance(data[key], bool):
            chk.fail(key, "must be true or false")
    if not isinstance(data["experiment_params"], dict):
        chk.fail("experiment_params", "expected an object")
        data["experiment_params"] = {}
    if not isinstance(data["tolerances"], dict):
        chk.fail("tolerances", "expected an object")

    if experiment in NEEDS_SIMULATION:
        for section in ("material", "grid", "boundaries"):
            if section not in data:
                chk.fail(section, f"required for experiment {experiment}")
        if "duration" not in data or not isinstance(data["duration"], (int, float)) \
                or data["duration"] < 0:
            chk.fail("duration", "required nonnegative number")
        dim = _validate_grid(chk, data.get("grid", {}))
        _validate_material(chk, data.get("material", {}))
        driven = data.get("source") is not None
        _validate_boundaries(chk, data.get("boundaries", {}), dim, driven)
        _validate_source(chk, data.get("source"), dim)

    if experiment in _PARAM_KEYS and isinstance(data["experiment_params"], dict):
        unknown = set(data["experiment_params"]) - _PARAM_KEYS[experiment]
        if unknown:
            chk.fail("experiment_params", f"unknown keys {sorted(unknown)}")

    if chk.errors:
        raise ConfigError(sorted(chk.errors))

    cfg = RunConfig(data=data, warnings=[])
    if experiment in NEEDS_SIMULATION:
        material = cfg.build_material()
        grid = cfg.build_grid()
        for j, unit in enumerate(material.units):
            for name, fieldv in (("lam", unit.moduli.lam), ("mu", unit.moduli.mu)):
                note = smoothness_report(grid, np.asarray(fieldv, dtype=float),
                                         f"material.units[{j}].{name}")
                if note:
                    cfg.warnings.append(note)
        # echo the inferred constitutive family
        cfg.data["material_kind"] = material.kind
    return cfg


def loads(text: str) -> RunConfig:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            [f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
        ) from exc
    return validate(document)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
