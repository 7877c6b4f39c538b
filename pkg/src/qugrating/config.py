"""Run configuration: strict key = value parsing with physical defaults.

Config files speak human units (linear MHz, ns, dBm); the accessors hand out
the internal angular quantities.  Unknown keys are rejected loudly, since a
silently ignored misspelling is the fastest way to a wrong unit.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DriveSchedule,
    QutritParams,
    Scheme,
    dbm_to_rabi,
    mhz_to_angular,
    ns_to_us,
)

BACKENDS = ("lindblad", "floquet", "gvv", "analytic")
CONTROL_KINDS = ("power-dbm", "rabi-mhz")

_SECTION_RE = re.compile(r"^\[[A-Za-z0-9_\- ]+\]$")


class ConfigError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


def _as_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _as_str(text: str) -> str:
    return text


# key -> (caster, default); None defaults mean "unset"
_SCHEMA: dict = {
    "backend": (_as_str, "lindblad"),
    "scheme": (_as_str, "complementary"),
    "delta_mhz": (float, 0.0),
    "omega_p_mhz": (float, None),
    "probe_power_dbm": (float, None),  # -31 dBm applied when neither probe key is set
    "omega_c_mhz": (float, None),
    "control_power_dbm": (float, None),
    "gamma_10_mhz": (float, 2.267),
    "gamma_21_mhz": (float, 4.534),
    "gamma_11_mhz": (float, 0.9165),
    "gamma_22_mhz": (float, 0.9165),
    "gamma_d_mhz": (float, None),  # None -> recomputed total damping rate
    "tau_ns": (float, 50.0),
    "delta_start_mhz": (float, -60.0),
    "delta_stop_mhz": (float, 60.0),
    "delta_count": (int, 241),
    "control_kind": (_as_str, "power-dbm"),
    "control_start": (float, -20.0),
    "control_stop": (float, 0.0),
    "control_count": (int, 41),
    "dt_ns": (float, 0.1),
    "tol": (float, 1e-4),
    "max_periods": (int, 400),
    "n_c": (int, 40),
    "q_max": (int, 4),
    "l_span": (int, None),
    "n_slits": (int, None),  # None -> from rates and period
    "normalize": (_as_bool, True),
    "out": (_as_str, None),
}

_DEFAULT_PROBE_DBM = -31.0


@dataclass
class RunConfig:
    backend: str = "lindblad"
    scheme: str = "complementary"
    delta_mhz: float = 0.0
    omega_p_mhz: float | None = None
    probe_power_dbm: float | None = _DEFAULT_PROBE_DBM
    omega_c_mhz: float | None = None
    control_power_dbm: float | None = None
    gamma_10_mhz: float = 2.267
    gamma_21_mhz: float = 4.534
    gamma_11_mhz: float = 0.9165
    gamma_22_mhz: float = 0.9165
    gamma_d_mhz: float | None = None
    tau_ns: float = 50.0
    delta_start_mhz: float = -60.0
    delta_stop_mhz: float = 60.0
    delta_count: int = 241
    control_kind: str = "power-dbm"
    control_start: float = -20.0
    control_stop: float = 0.0
    control_count: int = 41
    dt_ns: float = 0.1
    tol: float = 1e-4
    max_periods: int = 400
    n_c: int = 40
    q_max: int = 4
    l_span: int | None = None
    n_slits: int | None = None
    normalize: bool = True
    out: str | None = None
    applied_defaults: tuple = field(default_factory=tuple)

    # -- validation ---------------------------------------------------------

    def validate(self) -> "RunConfig":
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        try:
            Scheme(self.scheme)
        except ValueError:
            raise ConfigError(
                f"scheme must be one of {[s.value for s in Scheme]}, got {self.scheme!r}"
            ) from None
        if self.control_kind not in CONTROL_KINDS:
            raise ConfigError(
                f"control_kind must be one of {CONTROL_KINDS}, got {self.control_kind!r}"
            )
        for key in ("gamma_10_mhz", "gamma_21_mhz", "gamma_11_mhz", "gamma_22_mhz"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0")
        if self.gamma_d_mhz is not None and self.gamma_d_mhz < 0:
            raise ConfigError("gamma_d_mhz must be >= 0")
        if self.omega_p_mhz is not None and self.omega_p_mhz < 0:
            raise ConfigError("omega_p_mhz must be >= 0")
        if self.omega_c_mhz is not None and self.omega_c_mhz < 0:
            raise ConfigError("omega_c_mhz must be >= 0")
        if not self.tau_ns > 0:
            raise ConfigError(f"tau_ns must be > 0, got {self.tau_ns!r}")
        if not self.dt_ns > 0:
            raise ConfigError(f"dt_ns must be > 0, got {self.dt_ns!r}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be > 0, got {self.tol!r}")
        if self.max_periods < 2:
            raise ConfigError(f"max_periods must be >= 2, got {self.max_periods!r}")
        if self.n_c < 1:
            raise ConfigError(f"n_c must be >= 1, got {self.n_c!r}")
        if self.q_max < 1:
            raise ConfigError(f"q_max must be >= 1, got {self.q_max!r}")
        if self.l_span is not None and self.l_span < 1:
            raise ConfigError(f"l_span must be >= 1, got {self.l_span!r}")
        if self.n_slits is not None and self.n_slits < 1:
            raise ConfigError(f"n_slits must be >= 1, got {self.n_slits!r}")
        for axis in ("delta", "control"):
            count = getattr(self, f"{axis}_count")
            start = getattr(self, f"delta_start_mhz" if axis == "delta" else "control_start")
            stop = getattr(self, f"delta_stop_mhz" if axis == "delta" else "control_stop")
            if count < 1:
                raise ConfigError(f"{axis}_count must be >= 1, got {count!r}")
            if count > 1 and not start < stop:
                raise ConfigError(
                    f"{axis} axis needs start < stop when count > 1, got {start!r} >= {stop!r}"
                )
        if self.omega_p_mhz is not None and self.probe_power_dbm is not None:
            raise ConfigError("set omega_p_mhz or probe_power_dbm, not both")
        if self.omega_c_mhz is not None and self.control_power_dbm is not None:
            raise ConfigError("set omega_c_mhz or control_power_dbm, not both")
        return self

    # -- accessors (internal units) -----------------------------------------

    def scheme_enum(self) -> Scheme:
        return Scheme(self.scheme)

    def schedule(self) -> DriveSchedule:
        return DriveSchedule(self.scheme_enum(), tau=ns_to_us(self.tau_ns))

    def omega_p_angular(self) -> float:
        if self.omega_p_mhz is not None:
            return mhz_to_angular(self.omega_p_mhz)
        power = self.probe_power_dbm if self.probe_power_dbm is not None else _DEFAULT_PROBE_DBM
        return dbm_to_rabi(power)

    def omega_c_angular(self) -> float | None:
        """Fixed control strength, for single-spectrum runs; None when swept."""
        if self.omega_c_mhz is not None:
            return mhz_to_angular(self.omega_c_mhz)
        if self.control_power_dbm is not None:
            return dbm_to_rabi(self.control_power_dbm)
        return None

    def params_for(self, delta_mhz: float, omega_c: float) -> QutritParams:
        return QutritParams(
            delta=mhz_to_angular(delta_mhz),
            omega_p=self.omega_p_angular(),
            omega_c=omega_c,
            gamma_10=mhz_to_angular(self.gamma_10_mhz),
            gamma_21=mhz_to_angular(self.gamma_21_mhz),
            gamma_11=mhz_to_angular(self.gamma_11_mhz),
            gamma_22=mhz_to_angular(self.gamma_22_mhz),
        )

    def gamma_d_angular(self) -> float:
        if self.gamma_d_mhz is not None:
            return mhz_to_angular(self.gamma_d_mhz)
        return self.params_for(0.0, 0.0).gamma_total

    def delta_axis(self) -> np.ndarray:
        return np.linspace(self.delta_start_mhz, self.delta_stop_mhz, self.delta_count)

    def control_axis(self) -> np.ndarray:
        return np.linspace(self.control_start, self.control_stop, self.control_count)

    def control_to_omega_c(self, value: float) -> float:
        if self.control_kind == "power-dbm":
            return dbm_to_rabi(value)
        return mhz_to_angular(value)

    def dt_us(self) -> float:
        return ns_to_us(self.dt_ns)


def parse_config(text: str) -> RunConfig:
    """Parse line-oriented ``key = value`` text into a validated RunConfig.

    Supports ``#`` comments and optional ``[section]`` headers (ignored);
    unknown or repeated keys and malformed values raise ConfigError with the
    offending line number.  Keys not present fall back to documented defaults
    and are recorded in ``applied_defaults``.
    """
    entries: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not _SECTION_RE.match(line):
                raise ConfigError(f"malformed section header {line!r}", line_no)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line_no)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        caster, _ = _SCHEMA[key]
        try:
            entries[key] = caster(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line_no) from None

    kwargs = {}
    applied = []
    for key, (_, default) in _SCHEMA.items():
        if key in entries:
            kwargs[key] = entries[key]
        else:
            kwargs[key] = default
            applied.append(key)
    # the probe default is a power, applied only when neither probe key appears
    if "omega_p_mhz" in entries and "probe_power_dbm" not in entries:
        kwargs["probe_power_dbm"] = None
        applied.remove("probe_power_dbm")
    elif "probe_power_dbm" not in entries:
        kwargs["probe_power_dbm"] = _DEFAULT_PROBE_DBM
    config = RunConfig(**kwargs, applied_defaults=tuple(sorted(applied)))
    try:
        return config.validate()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def default_config() -> RunConfig:
    return parse_config("")
