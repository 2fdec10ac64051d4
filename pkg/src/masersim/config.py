"""Flat key = value configuration files and the typed model bundle.

One configuration file fully determines a run. Keys are dotted and
carry explicit unit suffixes; values are plain scalars or words.
Example::

    # circuit
    snail.i_s1_ua = 0.0835
    cavity.c_c_ff = 198.0
    rates.chi_c_mhz = 0.0197      # chi/2pi in MHz
    pump.frequency_ghz = 12.75
    sweep.axis1.name = transmon.flux_ext_rad
    sweep.axis1.start = 0.55
    sweep.axis1.stop = 0.82
    sweep.axis1.count = 36

The same format is used for emitted records (fit results, sweep
metadata sidecars), so outputs can be merged back into configs.
"""

import hashlib
from dataclasses import dataclass, replace

from masersim import constants
from masersim.components import CavityParams, SnailParams, TransmonParams
from masersim.composite import CouplingParams
from masersim.errors import ConfigError

_REQUIRED = object()


def _parse_bool(text):
    lowered = str(text).strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# key -> (converter, default); _REQUIRED means the key must be present.
KEY_REGISTRY = {
    "snail.i_s1_ua": (float, _REQUIRED),
    "snail.i_s2_ua": (float, _REQUIRED),
    "snail.l_lin_nh": (float, _REQUIRED),
    "snail.c_s_ff": (float, _REQUIRED),
    "snail.flux_ext_rad": (float, 0.0),
    "transmon.i_t1_ua": (float, _REQUIRED),
    "transmon.i_t2_ua": (float, _REQUIRED),
    "transmon.c_t_ff": (float, _REQUIRED),
    "transmon.flux_ext_rad": (float, 0.0),
    "cavity.c_c_ff": (float, _REQUIRED),
    "cavity.l_c_nh": (float, _REQUIRED),
    "coupling.c_st_ff": (float, _REQUIRED),
    "coupling.c_tc_ff": (float, _REQUIRED),
    "rates.chi_s_mhz": (float, _REQUIRED),
    "rates.chi_t_mhz": (float, _REQUIRED),
    "rates.chi_c_mhz": (float, _REQUIRED),
    "pump.frequency_ghz": (float, _REQUIRED),
    "pump.amplitude_mhz": (float, 0.0),
    "pump.rule": (str, "strict"),
    "cutoffs.n_snail": (int, 3),
    "cutoffs.n_transmon": (int, 3),
    "cutoffs.n_cavity": (int, 4),
    "grids.snail_points": (int, 1000),
    "grids.transmon_points": (int, 1000),
    "grids.cavity_points": (int, 14000),
    "grids.cavity_spacing_rad": (float, 0.0003),
    "solver.method": (str, "auto"),
    "solver.dense_limit": (int, 4096),
    "solver.gap_candidates": (int, 12),
    "solver.strict_labels": (_parse_bool, False),
    "sweep.axis1.name": (str, None),
    "sweep.axis1.start": (float, None),
    "sweep.axis1.stop": (float, None),
    "sweep.axis1.count": (int, None),
    "sweep.axis2.name": (str, None),
    "sweep.axis2.start": (float, None),
    "sweep.axis2.stop": (float, None),
    "sweep.axis2.count": (int, None),
    "sweep.axis3.name": (str, None),
    "sweep.axis3.start": (float, None),
    "sweep.axis3.stop": (float, None),
    "sweep.axis3.count": (int, None),
}

# Parameters that may serve as sweep axes, with the ModelConfig update
# they perform. These are exactly the experiment's four control knobs.
SWEEPABLE_KEYS = (
    "snail.flux_ext_rad",
    "transmon.flux_ext_rad",
    "pump.frequency_ghz",
    "pump.amplitude_mhz",
)


def parse_kv_text(text, source="<string>"):
    """Parse ``key = value`` lines; '#' starts a comment; blanks ignored."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in mapping:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def read_config_file(path):
    with open(path, "r", encoding="utf-8") as handle:
        return parse_kv_text(handle.read(), source=str(path))


def coerce_mapping(raw):
    """Validate keys against the registry and convert values to types."""
    out = {}
    for key, value in raw.items():
        if key not in KEY_REGISTRY:
            raise ConfigError(f"unknown configuration key {key!r}")
        converter, _ = KEY_REGISTRY[key]
        try:
            out[key] = converter(value) if isinstance(value, str) else value
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc
    for key, (converter, default) in KEY_REGISTRY.items():
        if key in out:
            continue
        if default is _REQUIRED:
            raise ConfigError(f"missing required configuration key {key!r}")
        if default is not None:
            out[key] = default
    return out


def serialize_record(mapping):
    """Canonical ``key = value`` text (sorted keys, repr floats)."""
    lines = []
    for key in sorted(mapping):
        value = mapping[key]
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(mapping):
    """SHA-256 over the canonical serialization of a typed mapping."""
    return hashlib.sha256(serialize_record(mapping).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SolverOptions:
    method: str = "auto"
    dense_limit: int = 4096
    gap_candidates: int = 12
    strict_labels: bool = False

    def __post_init__(self):
        if self.method not in ("auto", "dense", "sparse", "sector"):
            raise ConfigError(f"unknown solver method {self.method!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Typed operating-point description of the full maser model.

    Frequencies and rates are stored in internal units (rad/ns); the
    mapping layer converts from the GHz / MHz config keys.
    """

    snail: SnailParams
    transmon: TransmonParams
    cavity: CavityParams
    coupling: CouplingParams
    chi_s: float
    chi_t: float
    chi_c: float
    omega_p: float
    pump_amplitude: float
    pump_rule: str
    n_snail: int
    n_transmon: int
    n_cavity: int
    snail_points: int
    transmon_points: int
    cavity_points: int
    cavity_spacing: float
    solver: SolverOptions

    def __post_init__(self):
        if self.pump_rule not in ("strict", "loose"):
            raise ConfigError(f"unknown pump rule {self.pump_rule!r}")
        for name in ("n_snail", "n_transmon", "n_cavity"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")

    @classmethod
    def from_mapping(cls, mapping):
        m = coerce_mapping(dict(mapping))
        return cls(
            snail=SnailParams(
                i_s1=m["snail.i_s1_ua"],
                i_s2=m["snail.i_s2_ua"],
                L_lin=m["snail.l_lin_nh"],
                C_s=m["snail.c_s_ff"],
                flux_ext=m["snail.flux_ext_rad"],
            ),
            transmon=TransmonParams(
                i_t1=m["transmon.i_t1_ua"],
                i_t2=m["transmon.i_t2_ua"],
                C_t=m["transmon.c_t_ff"],
                flux_ext=m["transmon.flux_ext_rad"],
            ),
            cavity=CavityParams(C_c=m["cavity.c_c_ff"], L_c=m["cavity.l_c_nh"]),
            coupling=CouplingParams(
                C_st=m["coupling.c_st_ff"], C_tc=m["coupling.c_tc_ff"]
            ),
            chi_s=constants.rate_from_mhz(m["rates.chi_s_mhz"]),
            chi_t=constants.rate_from_mhz(m["rates.chi_t_mhz"]),
            chi_c=constants.rate_from_mhz(m["rates.chi_c_mhz"]),
            omega_p=constants.omega_from_ghz(m["pump.frequency_ghz"]),
            pump_amplitude=constants.rate_from_mhz(m["pump.amplitude_mhz"]),
            pump_rule=m["pump.rule"],
            n_snail=m["cutoffs.n_snail"],
            n_transmon=m["cutoffs.n_transmon"],
            n_cavity=m["cutoffs.n_cavity"],
            snail_points=m["grids.snail_points"],
            transmon_points=m["grids.transmon_points"],
            cavity_points=m["grids.cavity_points"],
            cavity_spacing=m["grids.cavity_spacing_rad"],
            solver=SolverOptions(
                method=m["solver.method"],
                dense_limit=m["solver.dense_limit"],
                gap_candidates=m["solver.gap_candidates"],
                strict_labels=m["solver.strict_labels"],
            ),
        )

    def to_mapping(self):
        return {
            "snail.i_s1_ua": self.snail.i_s1,
            "snail.i_s2_ua": self.snail.i_s2,
            "snail.l_lin_nh": self.snail.L_lin,
            "snail.c_s_ff": self.snail.C_s,
            "snail.flux_ext_rad": self.snail.flux_ext,
            "transmon.i_t1_ua": self.transmon.i_t1,
            "transmon.i_t2_ua": self.transmon.i_t2,
            "transmon.c_t_ff": self.transmon.C_t,
            "transmon.flux_ext_rad": self.transmon.flux_ext,
            "cavity.c_c_ff": self.cavity.C_c,
            "cavity.l_c_nh": self.cavity.L_c,
            "coupling.c_st_ff": self.coupling.C_st,
            "coupling.c_tc_ff": self.coupling.C_tc,
            "rates.chi_s_mhz": self.chi_s / constants.TWO_PI * 1e3,
            "rates.chi_t_mhz": self.chi_t / constants.TWO_PI * 1e3,
            "rates.chi_c_mhz": self.chi_c / constants.TWO_PI * 1e3,
            "pump.frequency_ghz": constants.ghz_from_omega(self.omega_p),
            "pump.amplitude_mhz": self.pump_amplitude / constants.TWO_PI * 1e3,
            "pump.rule": self.pump_rule,
            "cutoffs.n_snail": self.n_snail,
            "cutoffs.n_transmon": self.n_transmon,
            "cutoffs.n_cavity": self.n_cavity,
            "grids.snail_points": self.snail_points,
            "grids.transmon_points": self.transmon_points,
            "grids.cavity_points": self.cavity_points,
            "grids.cavity_spacing_rad": self.cavity_spacing,
            "solver.method": self.solver.method,
            "solver.dense_limit": self.solver.dense_limit,
            "solver.gap_candidates": self.solver.gap_candidates,
            "solver.strict_labels": self.solver.strict_labels,
        }

    def with_value(self, key, value):
        """A copy with one sweepable parameter replaced."""
        if key == "snail.flux_ext_rad":
            return replace(self, snail=replace(self.snail, flux_ext=float(value)))
        if key == "transmon.flux_ext_rad":
            return replace(
                self, transmon=replace(self.transmon, flux_ext=float(value))
            )
        if key == "pump.frequency_ghz":
            return replace(self, omega_p=constants.omega_from_ghz(float(value)))
        if key == "pump.amplitude_mhz":
            return replace(
                self, pump_amplitude=constants.rate_from_mhz(float(value))
            )
        raise ConfigError(f"parameter {key!r} is not sweepable")
