"""Parameters, unit conventions and derived couplings of the rotating dual-mode cavity.

All model frequencies are plain floats in units of one caller-chosen scale.
The figures of the original study use ``delta = 2`` and ``kappa = 0.1``.
Physical units appear only in :class:`PhysicalSetup` and its two calculators.
"""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError, InvalidParameterError, NonPositiveDetuningError

SPEED_OF_LIGHT = 299_792_458.0


class PumpDirection(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"

    @classmethod
    def parse(cls, value: "PumpDirection | str") -> "PumpDirection":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for member in cls:
            if text in (member.value, member.name.lower(), member.value[0]):
                return member
        raise InvalidParameterError(f"unknown pump direction {value!r}")


@dataclass(frozen=True)
class PhysicalSetup:
    """Laboratory description of a rotating whispering-gallery resonator.

    ``angular_velocity`` is in rad/s. ``radius`` and ``vacuum_wavelength`` are in meters.
    """

    refractive_index: float
    radius: float
    angular_velocity: float
    vacuum_wavelength: float
    quality_factor: float
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if not self.refractive_index >= 1.0:
            raise InvalidParameterError("refractive_index must be >= 1")
        if not self.radius > 0:
            raise InvalidParameterError("radius must be positive")
        if not self.quality_factor > 0:
            raise InvalidParameterError("quality_factor must be positive")
        if not self.vacuum_wavelength > 0:
            raise InvalidParameterError("vacuum_wavelength must be positive")
        if not self.angular_velocity >= 0:
            raise InvalidParameterError("angular_velocity must be non-negative")

    @property
    def carrier_angular_frequency(self) -> float:
        return 2.0 * math.pi * self.speed_of_light / self.vacuum_wavelength


def sagnac_shift(setup: PhysicalSetup) -> float:
    """Rotation-induced splitting of the counter-propagating modes, in Hz (unsigned)."""
    n = setup.refractive_index
    shift = n * setup.radius * setup.angular_velocity * setup.carrier_angular_frequency
    shift *= (1.0 - n**-2) / setup.speed_of_light
    return shift / (2.0 * math.pi)


def intrinsic_loss(setup: PhysicalSetup) -> float:
    """Intrinsic loss rate omega_0 / Q expressed as an ordinary frequency in Hz."""
    return setup.carrier_angular_frequency / setup.quality_factor / (2.0 * math.pi)


@dataclass(frozen=True)
class ModelParams:
    """Model frequencies, couplings and loss rates in a common frequency unit.

    ``sagnac`` is the signed rotation shift of mode a (mode b shifts by the opposite
    amount). ``pump_direction`` selects which mode carries the two-photon drive.
    """

    delta: float
    sagnac: float
    delta_q: float
    kappa: float
    pump_strength: float = 0.0
    g_a: float = 0.0
    g_b: float = 0.0
    gamma: float = 0.0
    hopping: float = 0.0
    pump_direction: PumpDirection = PumpDirection.FORWARD
    thermal_occupation: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pump_direction", PumpDirection.parse(self.pump_direction))
        for name in ("delta", "sagnac", "delta_q", "kappa", "pump_strength", "g_a", "g_b",
                     "gamma", "hopping", "thermal_occupation"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        for name in ("kappa", "gamma", "pump_strength", "thermal_occupation"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be non-negative")

    @classmethod
    def from_lambdas(
        cls,
        *,
        delta: float,
        sagnac: float,
        delta_q: float,
        kappa: float,
        lambda_a: float,
        lambda_b: float | None = None,
        pump_strength: float = 0.0,
        pump_direction: PumpDirection | str = PumpDirection.FORWARD,
        **extra: Any,
    ) -> "ModelParams":
        """Build parameters from dimensionless couplings.

        ``lambda_a`` always refers to the pumped mode in the forward-pump picture, so a
        backward run with equal couplings behaves like a forward run with the sign of
        ``sagnac`` flipped.
        """
        direction = PumpDirection.parse(pump_direction)
        lambda_b = lambda_a if lambda_b is None else lambda_b
        shift = sagnac if direction is PumpDirection.FORWARD else -sagnac
        d_plus, d_minus = delta + shift, delta - shift
        if delta_q <= 0 or d_plus <= 0 or d_minus <= 0:
            raise NonPositiveDetuningError("delta_q and delta +- sagnac must be positive")
        g_pumped = 0.5 * lambda_a * math.sqrt(delta_q * d_plus)
        g_other = 0.5 * lambda_b * math.sqrt(delta_q * d_minus)
        if direction is PumpDirection.FORWARD:
            g_a, g_b = g_pumped, g_other
        else:
            g_a, g_b = g_other, g_pumped
        return cls(delta=delta, sagnac=sagnac, delta_q=delta_q, kappa=kappa,
                   pump_strength=pump_strength, g_a=g_a, g_b=g_b,
                   pump_direction=direction, **extra)

    def with_lambdas(self, lambda_a: float, lambda_b: float | None = None) -> "ModelParams":
        """Copy with couplings reset from dimensionless values (forward-picture labels)."""
        kept = {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in ("g_a", "g_b")}
        return ModelParams.from_lambdas(lambda_a=lambda_a, lambda_b=lambda_b, **kept)

    def lambdas(self) -> tuple[float, float]:
        """Dimensionless couplings in the forward-pump picture."""
        d = derive(effective_params(self))
        return d.lambda_a, d.lambda_b

    def replace(self, **changes: Any) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedCouplings:
    lambda_a: float
    lambda_b: float
    eta_plus: float
    eta_minus: float
    mu: float
    delta_plus: float
    delta_minus: float


def derive(params: ModelParams) -> DerivedCouplings:
    """Dimensionless couplings of ``params`` taken at face value (no direction handling)."""
    d_plus = params.delta + params.sagnac
    d_minus = params.delta - params.sagnac
    if params.delta_q <= 0 or d_plus <= 0 or d_minus <= 0:
        raise NonPositiveDetuningError(
            f"need delta_q > 0 and delta +- sagnac > 0 (got {params.delta_q}, {d_plus}, {d_minus})")
    mu = params.delta_q / params.pump_strength if params.pump_strength > 0 else math.inf
    return DerivedCouplings(
        lambda_a=2.0 * params.g_a / math.sqrt(params.delta_q * d_plus),
        lambda_b=2.0 * params.g_b / math.sqrt(params.delta_q * d_minus),
        eta_plus=params.delta_q / d_plus,
        eta_minus=params.delta_q / d_minus,
        mu=mu,
        delta_plus=d_plus,
        delta_minus=d_minus,
    )


def effective_params(params: ModelParams) -> ModelParams:
    """Map any pump direction onto the forward-pump picture used by the analytic modules.

    A backward pump drives mode b, which in the forward picture is a mode with the
    opposite Sagnac shift. The sign of ``sagnac`` flips and the two couplings trade
    places so that ``g_a`` is again the coupling of the pumped mode. The result is
    tagged as forward.
    """
    if params.pump_direction is PumpDirection.FORWARD:
        return params
    return replace(params, sagnac=-params.sagnac, g_a=params.g_b, g_b=params.g_a,
                   pump_direction=PumpDirection.FORWARD)


@dataclass(frozen=True)
class ForwardForm:
    """Shorthand bundle of the forward-picture quantities most formulas need."""

    d_plus: float
    d_minus: float
    kappa: float
    pump: float
    lambda_a: float
    lambda_b: float
    hopping: float
    delta_q: float
    sagnac: float
    delta: float


def forward_form(params: ModelParams) -> ForwardForm:
    p = effective_params(params)
    d = derive(p)
    return ForwardForm(d.delta_plus, d.delta_minus, p.kappa, p.pump_strength,
                       d.lambda_a, d.lambda_b, p.hopping, p.delta_q, p.sagnac, p.delta)


# configuration files ------------------------------------------------------------

MODEL_FIELDS = tuple(f.name for f in fields(ModelParams))
PHYSICAL_FIELDS = tuple(f.name for f in fields(PhysicalSetup))
LAMBDA_KEYS = ("lambda", "lambda_a", "lambda_b")


def read_config(path: str | Path) -> dict[str, dict[str, str]]:
    """Read an INI-style file into ``{section: {key: raw string}}``."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return {name: dict(parser[name]) for name in parser.sections()}


def _as_float(key: str, raw: Any) -> float:
    try:
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def params_from_mapping(values: Mapping[str, Any]) -> ModelParams:
    """Build :class:`ModelParams` from loose key/value pairs.

    Besides the dataclass fields this accepts ``lambda`` (both couplings),
    ``lambda_a``/``lambda_b`` and ``G_over_kappa``. A missing ``lambda_b`` equals
    ``lambda_a``.
    """
    unknown = set(values) - set(MODEL_FIELDS) - set(LAMBDA_KEYS) - {"G_over_kappa"}
    if unknown:
        raise ConfigError(f"unknown model keys: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for key, raw in values.items():
        if key == "pump_direction":
            try:
                kw[key] = PumpDirection.parse(raw)
            except InvalidParameterError as exc:
                raise ConfigError(str(exc)) from exc
        elif key in MODEL_FIELDS:
            kw[key] = _as_float(key, raw)
    for key in ("delta", "sagnac", "delta_q", "kappa"):
        if key not in kw:
            raise ConfigError(f"missing required model key {key!r}")
    if "G_over_kappa" in values:
        kw["pump_strength"] = _as_float("G_over_kappa", values["G_over_kappa"]) * kw["kappa"]
    lam = values.get("lambda")
    lam_a = values.get("lambda_a", lam)
    lam_b = values.get("lambda_b", lam)
    try:
        if lam_a is not None or lam_b is not None:
            if "g_a" in kw or "g_b" in kw:
                raise ConfigError("give either g_a/g_b or lambda couplings, not both")
            kw.pop("g_a", None), kw.pop("g_b", None)
            if lam_a is None:
                raise ConfigError("lambda_b needs lambda_a (or use lambda for both)")
            return ModelParams.from_lambdas(
                lambda_a=_as_float("lambda_a", lam_a),
                lambda_b=None if lam_b is None else _as_float("lambda_b", lam_b),
                **kw)
        return ModelParams(**kw)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc


def physical_from_mapping(values: Mapping[str, Any]) -> PhysicalSetup:
    unknown = set(values) - set(PHYSICAL_FIELDS)
    if unknown:
        raise ConfigError(f"unknown physical keys: {sorted(unknown)}")
    try:
        return PhysicalSetup(**{k: _as_float(k, v) for k, v in values.items()})
    except TypeError as exc:
        raise ConfigError(f"incomplete physical section: {exc}") from exc
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc


def load_params(path: str | Path) -> tuple[ModelParams | None, PhysicalSetup | None]:
    """Load the ``[model]`` and ``[physical]`` sections of a config file, when present."""
    cfg = read_config(path)
    model = params_from_mapping(cfg["model"]) if "model" in cfg else None
    phys = physical_from_mapping(cfg["physical"]) if "physical" in cfg else None
    return model, phys
