"""Experiment configuration: physical constants, geometry, field model, tolerances.

Configs are plain JSON documents. ``ExperimentConfig.from_dict`` validates
everything up front and raises :class:`ConfigError` naming the offending
field, so no computation starts on a bad input.
"""
import copy
import math
from dataclasses import asdict, dataclass, replace
from dataclasses import field as dc_field
from typing import Optional

from .register import BRANCHES

BRANCH_KEYS = tuple(f"{a}{b}" for a, b in BRANCHES)


class ConfigError(ValueError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass(frozen=True)
class Constants:
    """CODATA 2018 values, SI units."""

    G: float = 6.67430e-11
    hbar: float = 1.054571817e-34
    c: float = 299792458.0

    @property
    def planck_mass(self) -> float:
        return math.sqrt(self.hbar * self.c / self.G)


@dataclass(frozen=True)
class GridParams:
    n_modes: int = 2048
    uv_factor: float = 200.0      # soft cutoff K = uv_factor / d_min
    taper_span: float = 12.0      # hard cutoff at taper_span * K
    volume_m3: float = 1.0


@dataclass(frozen=True)
class FieldConfig:
    mode: str = "single-mode"     # or "multimode"
    split: str = "large-alpha"    # how phi_ab is factored into (w, xi_ab)
    grid: GridParams = dc_field(default_factory=GridParams)


@dataclass(frozen=True)
class Tolerances:
    trunc: float = 1e-10
    unitary: float = 1e-8
    elastic: float = 1e-9
    witness_margin: float = 1e-6
    witness_match: float = 1e-2
    negativity: float = 1e-10


FIELD_MODES = ("single-mode", "multimode")
SPLITS = ("large-alpha", "physical", "unit")


@dataclass(frozen=True)
class ExperimentConfig:
    mass_kg: float = 1e-12
    arm_separation_m: float = 1e-4
    # d_ab in basis order 00, 01, 10, 11; None marks a pair that does not interact
    branch_distances_m: tuple = (None, None, None, 1e-4)
    interaction_time_s: float = 5e-4
    alpha0: complex = 1000.0
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    constants: Constants = dc_field(default_factory=Constants)
    tolerances: Tolerances = dc_field(default_factory=Tolerances)
    # intra-interferometer arm separations of mass 1 and mass 2; defaults to arm_separation_m
    arm_separations_m: Optional[tuple] = None

    def distance(self, a: int, b: int) -> float:
        d = self.branch_distances_m[2 * a + b]
        return math.inf if d is None else float(d)

    @property
    def distances(self) -> tuple:
        return tuple(self.distance(a, b) for a, b in BRANCHES)

    @property
    def arm_pair(self) -> tuple:
        return self.arm_separations_m or (self.arm_separation_m, self.arm_separation_m)

    @property
    def planck_ratio_sq(self) -> float:
        return (self.mass_kg / self.constants.planck_mass) ** 2

    def with_time(self, t: float) -> "ExperimentConfig":
        return replace(self, interaction_time_s=float(t))

    def to_dict(self) -> dict:
        out = {
            "mass_kg": self.mass_kg,
            "arm_separation_m": self.arm_separation_m,
            "branch_distances_m": {k: d for k, d in zip(BRANCH_KEYS, self.branch_distances_m)},
            "interaction_time_s": self.interaction_time_s,
            "alpha0": [self.alpha0.real, self.alpha0.imag],
            "field": asdict(self.field),
            "constants": asdict(self.constants),
            "tolerances": asdict(self.tolerances),
        }
        if self.arm_separations_m is not None:
            out["arm_separations_m"] = list(self.arm_separations_m)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {"mass_kg", "arm_separation_m", "branch_distances_m", "geometry",
                 "interaction_time_s", "alpha0", "field", "constants", "tolerances", "sweep",
                 "arm_separations_m"}
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown field")
        defaults = cls()
        mass = _positive(raw, "mass_kg", defaults.mass_kg)
        arm = _positive(raw, "arm_separation_m", defaults.arm_separation_m) \
            if "arm_separation_m" in raw or "geometry" not in raw else None
        t = _number(raw, "interaction_time_s", defaults.interaction_time_s)
        if t < 0:
            raise ConfigError("interaction_time_s", f"must be >= 0, got {t}")
        alpha0 = _complex(raw.get("alpha0", defaults.alpha0), "alpha0")

        distances = None
        if "branch_distances_m" in raw:
            distances = _distances(raw["branch_distances_m"])
        arm_pair = None
        if "geometry" in raw:
            geo_d, arm_pair = _geometry(raw["geometry"])
            if distances is not None:
                for key, d_geo, d_cfg in zip(BRANCH_KEYS, geo_d, distances):
                    if d_cfg is None or abs(d_cfg - d_geo) > 1e-9 * d_geo:
                        raise ConfigError(f"branch_distances_m.{key}",
                                          f"inconsistent with geometry ({d_cfg} vs {d_geo})")
            distances = geo_d
            if arm is None:
                arm = arm_pair[0]
        if distances is None:
            distances = defaults.branch_distances_m
        if arm_pair is None and "arm_separations_m" in raw:
            pair = raw["arm_separations_m"]
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("arm_separations_m", "expected a list of two separations")
            arm_pair = tuple(_positive({"v": v}, "v", None, f"arm_separations_m.{i}")
                             for i, v in enumerate(pair))
        field = _field(raw.get("field", {}))
        if field.split == "large-alpha" and abs(alpha0) < 1.0:
            raise ConfigError("alpha0", "the large-alpha split needs |alpha0| >= 1")

        return cls(
            mass_kg=mass,
            arm_separation_m=arm,
            branch_distances_m=distances,
            interaction_time_s=t,
            alpha0=alpha0,
            field=field,
            constants=_dataclass_from(Constants, raw.get("constants", {}), "constants", positive=True),
            tolerances=_dataclass_from(Tolerances, raw.get("tolerances", {}), "tolerances", positive=True),
            arm_separations_m=arm_pair,
        )


def _number(raw, key, default, path=None):
    path = path or key
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return value


def _positive(raw, key, default, path=None):
    value = _number(raw, key, default, path)
    if value <= 0:
        raise ConfigError(path or key, f"must be > 0, got {value}")
    return value


def _complex(value, path) -> complex:
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float, complex)):
        z = complex(value)
    elif isinstance(value, (list, tuple)) and len(value) == 2 \
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        z = complex(value[0], value[1])
    elif isinstance(value, dict) and set(value) <= {"re", "im"}:
        z = complex(_number(value, "re", 0.0, path + ".re"), _number(value, "im", 0.0, path + ".im"))
    else:
        raise ConfigError(path, f"expected a number or [re, im], got {value!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(path, "must be finite")
    return z


def _distances(value) -> tuple:
    path = "branch_distances_m"
    if isinstance(value, dict):
        for key in value:
            if key not in BRANCH_KEYS:
                raise ConfigError(f"{path}.{key}", "unknown branch (use 00, 01, 10, 11)")
        items = [value.get(k) for k in BRANCH_KEYS]
    elif isinstance(value, list) and len(value) == 4:
        items = value
    else:
        raise ConfigError(path, "expected an object keyed by 00/01/10/11 or a list of four")
    out = []
    for key, d in zip(BRANCH_KEYS, items):
        if d is None:
            out.append(None)
            continue
        if isinstance(d, bool) or not isinstance(d, (int, float)) or not math.isfinite(d) or d <= 0:
            raise ConfigError(f"{path}.{key}", f"must be a positive number or null, got {d!r}")
        out.append(float(d))
    return tuple(out)


def _point(value, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value), 0.0, 0.0)
    if isinstance(value, list) and 1 <= len(value) <= 3 \
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return tuple(float(v) for v in value) + (0.0,) * (3 - len(value))
    raise ConfigError(path, f"expected a coordinate (number or list of up to 3), got {value!r}")


def _geometry(value):
    if not isinstance(value, dict) or set(value) != {"mass1_arms_m", "mass2_arms_m"}:
        raise ConfigError("geometry", "expected keys mass1_arms_m and mass2_arms_m")
    arms = []
    for key in ("mass1_arms_m", "mass2_arms_m"):
        pair = value[key]
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"geometry.{key}", "expected [arm0, arm1]")
        arms.append([_point(p, f"geometry.{key}[{i}]") for i, p in enumerate(pair)])
    distances = []
    for a, b in BRANCHES:
        d = math.dist(arms[0][a], arms[1][b])
        if d <= 0:
            raise ConfigError("geometry", f"arms {a} and {b} of the two masses coincide")
        distances.append(d)
    arm_pair = tuple(math.dist(*arms[i]) for i in range(2))
    if min(arm_pair) <= 0:
        raise ConfigError("geometry", "the two arms of an interferometer coincide")
    return tuple(distances), arm_pair


def _field(raw) -> FieldConfig:
    if not isinstance(raw, dict):
        raise ConfigError("field", "expected an object")
    for key in raw:
        if key not in ("mode", "split", "grid"):
            raise ConfigError(f"field.{key}", "unknown field")
    mode = raw.get("mode", "single-mode")
    if mode not in FIELD_MODES:
        raise ConfigError("field.mode", f"must be one of {FIELD_MODES}, got {mode!r}")
    split = raw.get("split", "large-alpha")
    if split not in SPLITS:
        raise ConfigError("field.split", f"must be one of {SPLITS}, got {split!r}")
    grid = _dataclass_from(GridParams, raw.get("grid", {}), "field.grid", positive=True)
    if int(grid.n_modes) != grid.n_modes or grid.n_modes < 16:
        raise ConfigError("field.grid.n_modes", "must be an integer >= 16")
    return FieldConfig(mode=mode, split=split, grid=replace(grid, n_modes=int(grid.n_modes)))


def _dataclass_from(cls, raw, path, positive=False):
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    names = {f.name for f in cls.__dataclass_fields__.values()}
    values = {}
    for key, value in raw.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}", "unknown field")
        values[key] = (_positive if positive else _number)(raw, key, None, f"{path}.{key}")
    return cls(**values)


def set_path(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(raw)
    node = out
    parts = path.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        if not isinstance(child, dict):
            raise ConfigError(path, f"{part!r} is not an object")
        node = child
    node[parts[-1]] = value
    return out
