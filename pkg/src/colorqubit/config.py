"""Device configuration: sectioned key/value text with units in the key names.

The defaults below are the reference device design point; ``DeviceConfig()``
therefore describes that device without reading any file.
"""
import configparser
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from typing import Optional

from .errors import ConfigError

AUTO = "auto"


@dataclass(frozen=True)
class MaterialsConfig:
    core: str = "Si3N4"
    substrate: str = "SiO2"
    top_cladding_index: float = 1.0


@dataclass(frozen=True)
class SfwmConfig:
    lambda1_um: float = 0.822
    lambdas_um: float = 1.253
    width_um: float = 0.953
    height_um: float = 0.700
    oxide_height_um: float = 1.0
    sigma1_THz: float = 6.0
    lc_um: float = 43.0
    Ri: float = 0.86
    sigmaf_THz: float = 1.0
    gamma_fwm_per_mW: float = 5.05


@dataclass(frozen=True)
class DfgConfig:
    lambda2_um: float = 1.554
    width_um: float = 1.617
    L_um: float = 1.0e4
    sigma2_THz: float = 0.7
    gamma_dfg_per_mW: float = 2.50
    nu_rad: float = 0.0
    P1_mW: float = 8.3 ** 0.5
    P2_mW: float = 8.3 ** 0.5
    epsilon: Optional[float] = None  # None <-> "auto"
    calibration_power_product_mW2: float = 8.3
    calibration_angle_rad: float = 1.5707963267948966


@dataclass(frozen=True)
class GridsConfig:
    points: int = 256
    mf_nodes: int = 129
    span_sigmas: float = 5.0
    idler_points_per_linewidth: float = 4.0
    max_idler_points: int = 4096
    truncation: float = 0.999
    contour_points: int = 241


@dataclass(frozen=True)
class SolverConfig:
    geometry: str = "design"  # "design": minimize widths at height_um; "config": use the widths as given
    fix_height: bool = True
    h_min_um: float = 0.3
    h_max_um: float = 0.9
    h_step_um: float = 0.025
    w_min_um: float = 0.6
    w_max_um: float = 2.2
    w_step_um: float = 0.002
    geometry_tolerance_um: float = 1e-5
    rephasematch: bool = True
    rephasematch_tol: float = 1e-9


SECTIONS = {
    "materials": MaterialsConfig,
    "sfwm": SfwmConfig,
    "dfg": DfgConfig,
    "grids": GridsConfig,
    "solver": SolverConfig,
}


def _base_type(tp):
    args = [a for a in typing.get_args(tp) if a is not type(None)]
    return args[0] if args else tp


def _convert(section, key, tp, text):
    text = str(text).strip()
    base = _base_type(tp)
    optional = base is not tp
    try:
        if optional and text.lower() == AUTO:
            return None
        if base is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if base is int:
            return int(text)
        if base is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {text!r} as {base.__name__}") from None


def _format(value):
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class DeviceConfig:
    materials: MaterialsConfig = field(default_factory=MaterialsConfig)
    sfwm: SfwmConfig = field(default_factory=SfwmConfig)
    dfg: DfgConfig = field(default_factory=DfgConfig)
    grids: GridsConfig = field(default_factory=GridsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        s, d, g, v = self.sfwm, self.dfg, self.grids, self.solver
        positive = {
            "sfwm.lambda1_um": s.lambda1_um, "sfwm.lambdas_um": s.lambdas_um, "sfwm.width_um": s.width_um,
            "sfwm.height_um": s.height_um, "sfwm.oxide_height_um": s.oxide_height_um,
            "sfwm.sigma1_THz": s.sigma1_THz, "sfwm.lc_um": s.lc_um, "sfwm.sigmaf_THz": s.sigmaf_THz,
            "dfg.lambda2_um": d.lambda2_um, "dfg.width_um": d.width_um, "dfg.L_um": d.L_um,
            "dfg.sigma2_THz": d.sigma2_THz, "dfg.gamma_dfg_per_mW": d.gamma_dfg_per_mW,
            "dfg.calibration_power_product_mW2": d.calibration_power_product_mW2,
            "grids.span_sigmas": g.span_sigmas, "grids.idler_points_per_linewidth": g.idler_points_per_linewidth,
            "solver.h_step_um": v.h_step_um, "solver.w_step_um": v.w_step_um,
            "solver.geometry_tolerance_um": v.geometry_tolerance_um, "solver.rephasematch_tol": v.rephasematch_tol,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{key} must be positive (got {value})")
        if not 0 < s.Ri < 1:
            raise ConfigError(f"sfwm.Ri must lie in (0, 1) (got {s.Ri})")
        if d.P1_mW < 0 or d.P2_mW < 0:
            raise ConfigError("dfg.P1_mW and dfg.P2_mW must be non-negative")
        if d.epsilon is not None and not d.epsilon > 0:
            raise ConfigError("dfg.epsilon must be positive or 'auto'")
        if g.points < 64:
            raise ConfigError("grids.points must be at least 64")
        if g.mf_nodes < 8:
            raise ConfigError("grids.mf_nodes must be at least 8")
        if not 0 < g.truncation <= 1:
            raise ConfigError("grids.truncation must lie in (0, 1]")
        if v.geometry not in ("design", "config"):
            raise ConfigError("solver.geometry must be 'design' or 'config'")
        if not (v.h_min_um <= v.h_max_um and v.w_min_um <= v.w_max_um):
            raise ConfigError("solver search ranges are empty")

    # -- access -------------------------------------------------------------
    def get(self, path):
        section, key = _split(path)
        return getattr(getattr(self, section), key)

    def replace(self, **paths):
        """Copy with ``section.key`` entries replaced; keys use ``__`` for the dot."""
        return self.with_values({p.replace("__", "."): v for p, v in paths.items()})

    def with_values(self, values):
        grouped = {}
        for path, value in values.items():
            section, key = _split(path)
            tp = {f.name: f.type for f in fields(SECTIONS[section])}[key]
            if isinstance(value, str) or (value is None and _base_type(tp) is not tp):
                value = _convert(section, key, tp, AUTO if value is None else value)
            elif _base_type(tp) is float:
                value = float(value)
            elif _base_type(tp) is int:
                value = int(value)
            grouped.setdefault(section, {})[key] = value
        return dataclasses.replace(
            self, **{sec: dataclasses.replace(getattr(self, sec), **kv) for sec, kv in grouped.items()})

    # -- serialization --------------------------------------------------------
    def as_dict(self):
        return {name: {f.name: getattr(getattr(self, name), f.name) for f in fields(cls)}
                for name, cls in SECTIONS.items()}

    def to_ini(self):
        lines = []
        for name, values in self.as_dict().items():
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {_format(value)}" for key, value in values.items())
            lines.append("")
        return "\n".join(lines)

    def canonical(self):
        flat = {f"{sec}.{key}": _format(val) for sec, kv in self.as_dict().items() for key, val in kv.items()}
        return json.dumps(flat, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _split(path):
    try:
        section, key = path.split(".")
    except ValueError:
        raise ConfigError(f"config path {path!r} is not of the form section.key") from None
    if section not in SECTIONS:
        raise ConfigError(f"unknown config section [{section}]")
    if key not in {f.name for f in fields(SECTIONS[section])}:
        raise ConfigError(f"unknown config key {section}.{key}")
    return section, key


def parse_config(text, source="<string>"):
    """Parse INI text; keys missing from the text keep their defaults."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown config section [{section}]")
        known = {f.name: f.type for f in fields(SECTIONS[section])}
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"{source}: unknown config key {section}.{key}")
            values[f"{section}.{key}"] = _convert(section, key, known[key], raw)
    return _from_values(values)


def _from_values(values):
    grouped = {name: {} for name in SECTIONS}
    for path, value in values.items():
        section, key = path.split(".")
        grouped[section][key] = value
    return DeviceConfig(**{name: cls(**grouped[name]) for name, cls in SECTIONS.items()})


def load_config(path=None):
    if path is None:
        return DeviceConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


@dataclass
class RunManifest:
    command: str
    config_hash: str
    version: str
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, path):
        self.outputs.append(str(path))

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)
