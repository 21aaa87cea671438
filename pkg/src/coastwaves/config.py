"""Run configuration: a sectioned key = value text file."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from dataclasses import field as _dc_field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError
from .model import DepthModel, load_model

__all__ = [
    "RunConfig",
    "TorusSpec",
    "ModeSpec",
    "TransportSpec",
    "FieldSpec",
    "OutputSpec",
    "parse_config",
    "load_config",
    "resolve_config_path",
    "fixture_names",
]

FROM_NU = "from-nu"
FROM_QUANTIZATION = "from-quantization"
_SECTIONS = {"model", "torus", "mode", "transport", "field", "output"}


@dataclass(frozen=True)
class TorusSpec:
    E: float = 1.0
    kappa: Optional[float] = None  # None means quantize at nu
    turning_point: Optional[float] = None  # kappa = E f(u) at this u

    @property
    def quantized(self) -> bool:
        return self.kappa is None and self.turning_point is None


@dataclass(frozen=True)
class ModeSpec:
    nu: tuple[int, int]
    h: Optional[float] = None  # None means take h from quantization


@dataclass(frozen=True)
class TransportSpec:
    N: int = 16
    divisor_floor: float = 1e-8
    grid: Optional[int] = None

    @property
    def angle_grid(self) -> int:
        if self.grid is not None:
            return self.grid
        return max(256, 1 << math.ceil(math.log2(4 * self.N)))


@dataclass(frozen=True)
class FieldSpec:
    grid: tuple[int, int] = (512, 512)
    delta: float = math.pi / 8
    mid: float = math.pi / 2
    caustic_zone: float = 1e-3
    window_band: float = 0.15
    ppw: float = 12.0


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "bin")
    plots: bool = True
    physical: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: DepthModel
    torus: TorusSpec
    mode: ModeSpec
    transport: TransportSpec = _dc_field(default_factory=TransportSpec)
    field: FieldSpec = _dc_field(default_factory=FieldSpec)
    output: OutputSpec = _dc_field(default_factory=OutputSpec)
    name: str = "run"

    def with_overrides(self, **sections) -> "RunConfig":
        return replace(self, **sections)


def _unquote(raw: str) -> str:
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        return raw[1:-1]
    return raw


def _float(section: str, key: str, raw: str) -> float:
    try:
        val = float(_unquote(raw))
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number (got {raw!r})") from None
    if not math.isfinite(val):
        raise ConfigError(f"[{section}] {key} must be finite")
    return val


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(_unquote(raw))
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer (got {raw!r})") from None


def _bool(section: str, key: str, raw: str) -> bool:
    val = _unquote(raw).lower()
    if val in ("1", "yes", "true", "on"):
        return True
    if val in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"[{section}] {key} must be yes or no (got {raw!r})")


def parse_pair(text: str, what: str = "pair") -> tuple[int, int]:
    parts = [p.strip() for p in _unquote(text).replace(";", ",").split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{what} needs two integers separated by a comma (got {text!r})")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"{what} needs two integers (got {text!r})") from None


def parse_grid(text: str) -> tuple[int, int]:
    parts = _unquote(text).lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"grid must look like 512x512 (got {text!r})")
    try:
        nu, nv = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"grid must look like 512x512 (got {text!r})") from None
    if nu < 2 or nv < 2:
        raise ConfigError("grid needs at least 2 points in each direction")
    return nu, nv


def _torus(sec: configparser.SectionProxy) -> TorusSpec:
    E = _float("torus", "E", sec.get("E", "1"))
    if E <= 0:
        raise ConfigError("[torus] E must be positive")
    has_k = "kappa" in sec
    has_tp = "turning_point" in sec
    if has_k == has_tp:
        raise ConfigError("[torus] set exactly one of kappa (a number or from-nu) and turning_point")
    if has_tp:
        return TorusSpec(E=E, turning_point=_float("torus", "turning_point", sec["turning_point"]))
    raw = _unquote(sec["kappa"])
    if raw == FROM_NU:
        return TorusSpec(E=E)
    return TorusSpec(E=E, kappa=_float("torus", "kappa", raw))


def _mode(sec: configparser.SectionProxy, torus: TorusSpec) -> ModeSpec:
    if "nu" not in sec:
        raise ConfigError("[mode] nu is required")
    nu = parse_pair(sec["nu"], "[mode] nu")
    if nu[0] < 0 or nu[1] < 0:
        raise ConfigError("[mode] quantum numbers must be non-negative")
    has_h = "h" in sec
    has_w = "omega" in sec
    if has_h and has_w:
        raise ConfigError("[mode] set h or omega, not both")
    if has_w:
        w = _float("mode", "omega", sec["omega"])
        if w <= 0:
            raise ConfigError("[mode] omega must be positive")
        h: Optional[float] = 1.0 / w
    elif has_h and _unquote(sec["h"]) != FROM_QUANTIZATION:
        h = _float("mode", "h", sec["h"])
        if h <= 0:
            raise ConfigError("[mode] h must be positive")
    else:
        h = None
    if (h is None) != torus.quantized:
        raise ConfigError("kappa = from-nu and h = from-quantization go together; give both or neither")
    return ModeSpec(nu=nu, h=h)


def _transport(sec) -> TransportSpec:
    if sec is None:
        return TransportSpec()
    N = _int("transport", "N", sec.get("N", "16"))
    if N < 1:
        raise ConfigError("[transport] N must be at least 1")
    floor = _float("transport", "divisor_floor", sec.get("divisor_floor", "1e-8"))
    grid = _int("transport", "grid", sec["grid"]) if "grid" in sec else None
    if grid is not None and grid <= 2 * N:
        raise ConfigError("[transport] grid must exceed 2 N")
    return TransportSpec(N=N, divisor_floor=floor, grid=grid)


def _field(sec) -> FieldSpec:
    if sec is None:
        return FieldSpec()
    d = FieldSpec()
    band = _float("field", "window_band", sec.get("window_band", str(d.window_band)))
    if not 0 < band < math.pi / 2:
        raise ConfigError("[field] window_band must lie in (0, pi/2)")
    delta = _float("field", "delta", sec.get("delta", repr(d.delta)))
    if not 0 < delta < math.pi / 2:
        raise ConfigError("[field] delta must lie in (0, pi/2)")
    return FieldSpec(
        grid=parse_grid(sec["grid"]) if "grid" in sec else d.grid,
        delta=delta,
        mid=_float("field", "mid", sec.get("mid", repr(d.mid))),
        caustic_zone=_float("field", "caustic_zone", sec.get("caustic_zone", repr(d.caustic_zone))),
        window_band=band,
        ppw=_float("field", "ppw", sec.get("ppw", repr(d.ppw))),
    )


def _output(sec) -> OutputSpec:
    if sec is None:
        return OutputSpec()
    d = OutputSpec()
    formats = d.formats
    if "formats" in sec:
        formats = tuple(x.strip() for x in _unquote(sec["formats"]).split(",") if x.strip())
        unknown = set(formats) - {"csv", "bin"}
        if unknown:
            raise ConfigError(f"[output] unknown formats: {', '.join(sorted(unknown))}")
    return OutputSpec(
        directory=_unquote(sec.get("directory", d.directory)),
        formats=formats,
        plots=_bool("output", "plots", sec.get("plots", "yes")),
        physical=_bool("output", "physical", sec.get("physical", "no")),
    )


def parse_config(text: str, name: str = "run") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keys such as E and D1 are case sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    for required in ("model", "torus", "mode"):
        if not cp.has_section(required):
            raise ConfigError(f"missing [{required}] section")
    model = load_model({k: _unquote(v) for k, v in cp["model"].items()})
    torus = _torus(cp["torus"])
    mode = _mode(cp["mode"], torus)
    get = lambda s: cp[s] if cp.has_section(s) else None  # noqa: E731
    return RunConfig(
        model=model,
        torus=torus,
        mode=mode,
        transport=_transport(get("transport")),
        field=_field(get("field")),
        output=_output(get("output")),
        name=name,
    )


def fixture_names() -> list[str]:
    root = resources.files("coastwaves") / "fixtures"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(ref: Union[str, Path]) -> Path:
    """A filesystem path, or the name of a shipped fixture such as ``example1``."""
    path = Path(ref)
    if path.exists():
        return path
    name = str(ref)[:-4] if str(ref).endswith(".cfg") else str(ref)
    if name in fixture_names():
        return Path(str(resources.files("coastwaves") / "fixtures" / f"{name}.cfg"))
    raise ConfigError(f"config not found: {ref}")


def load_config(ref: Union[str, Path]) -> RunConfig:
    path = resolve_config_path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, name=path.stem)
