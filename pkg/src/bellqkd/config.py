"""Run configuration: one flat dataclass, serialized as key=value lines.

The text format is deliberately minimal — one `key = value` pair per line,
`#` comments, no sections — so configs diff cleanly and parse with no
dependencies.  ``RunConfig.from_text(cfg.to_text())`` reproduces the config
exactly (floats round-trip via repr).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .analysis import FiniteKeyParams
from .devices import DetectorParams, IntensityClass, LinkParams
from .protocol import ProtocolConfig


class ConfigError(ValueError):
    """Bad key, bad value, or an out-of-range parameter."""


@dataclass
class RunConfig:
    """Every knob of a run; defaults reproduce the reference experiment
    (three-intensity source 0.6/0.2/0 mixed 6:2:1, 0.2 dB/km fiber, 5 dB
    receiver insertion loss, 15.3% detector efficiency, 5e-8 dark-count
    probability per gate, 1.5% misalignment, epsilon budget 1e-8, error
    correction efficiency 1.16, and 1.5e9 emitted pulses so the signal
    stratum carries 1e9)."""

    distance_km: float = 175.0
    loss_db_per_km: float = 0.2
    insertion_loss_db: float = 5.0
    detector_efficiency: float = 0.153
    dark_count_prob: float = 5e-8
    misalignment: float = 0.015
    signal_intensity: float = 0.6
    decoy_intensity: float = 0.2
    signal_weight: float = 6.0
    decoy_weight: float = 2.0
    vacuum_weight: float = 1.0
    n_pulses: int = 1_500_000_000
    seed: int = 1
    bsm_mode: str = "complete"
    epsilon_total: float = 1e-8
    ec_efficiency: float = 1.16
    infinite_n: bool = False
    sweep_start_km: float = 0.0
    sweep_stop_km: float = 250.0
    sweep_step_km: float = 25.0
    sweep_engine: str = "analytic"
    batch_size: int = 1_000_000
    output_format: str = "csv"
    output_path: str = ""

    # ---- validation ------------------------------------------------------

    def validate(self):
        if self.distance_km < 0:
            raise ConfigError("distance_km must be >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ConfigError("detector_efficiency must be in (0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ConfigError("dark_count_prob must be in [0, 1)")
        if not 0.0 <= self.misalignment <= 0.5:
            raise ConfigError("misalignment must be in [0, 0.5]")
        if self.signal_intensity < 0 or self.decoy_intensity < 0:
            raise ConfigError("intensities must be >= 0")
        if min(self.signal_weight, self.decoy_weight, self.vacuum_weight) < 0:
            raise ConfigError("class weights must be >= 0")
        if self.signal_weight + self.decoy_weight + self.vacuum_weight <= 0:
            raise ConfigError("at least one class weight must be positive")
        if self.n_pulses < 1:
            raise ConfigError("n_pulses must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.bsm_mode not in ("complete", "partial"):
            raise ConfigError("bsm_mode must be 'complete' or 'partial'")
        if not 0.0 < self.epsilon_total < 1.0:
            raise ConfigError("epsilon_total must be in (0, 1)")
        if self.ec_efficiency < 1.0:
            raise ConfigError("ec_efficiency must be >= 1")
        if self.sweep_step_km <= 0:
            raise ConfigError("sweep_step_km must be > 0")
        if self.sweep_start_km > self.sweep_stop_km:
            raise ConfigError("sweep_start_km must be <= sweep_stop_km")
        if self.sweep_engine not in ("analytic", "monte_carlo"):
            raise ConfigError("sweep_engine must be 'analytic' or 'monte_carlo'")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format must be 'csv' or 'json'")
        return self

    # ---- text round trip -------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls()
        cfg.apply_text(text)
        return cfg

    def apply_text(self, text: str):
        """Apply key=value lines on top of the current values."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            setattr(self, key, _cast(key, types[key], value))
        return self

    # ---- builders for the domain objects ----------------------------------

    def intensity_classes(self) -> tuple:
        """Positive-weight classes only, in signal/decoy/vacuum order."""
        rows = (("signal", self.signal_intensity, self.signal_weight),
                ("decoy", self.decoy_intensity, self.decoy_weight),
                ("vacuum", 0.0, self.vacuum_weight))
        classes = tuple(IntensityClass(label, mean, weight)
                        for label, mean, weight in rows if weight > 0)
        if not classes:
            raise ConfigError("no intensity class has positive weight")
        return classes

    def link(self, distance_km: float | None = None) -> LinkParams:
        return LinkParams(
            distance_km=self.distance_km if distance_km is None else distance_km,
            loss_db_per_km=self.loss_db_per_km,
            insertion_loss_db=self.insertion_loss_db,
            detector_efficiency=self.detector_efficiency,
        )

    def detector_params(self) -> DetectorParams:
        return DetectorParams(dark_count_prob=self.dark_count_prob,
                              misalignment=self.misalignment)

    def protocol_config(self, distance_km: float | None = None) -> ProtocolConfig:
        return ProtocolConfig(
            bsm_mode=self.bsm_mode,
            intensity_classes=self.intensity_classes(),
            link=self.link(distance_km),
            detectors=self.detector_params(),
            n_pulses=self.n_pulses,
            seed=self.seed,
            batch_size=self.batch_size,
        )

    def signal_pulse_count(self) -> float:
        """Emitted pulses in the signal stratum under the configured mix."""
        classes = self.intensity_classes()
        total = sum(c.selection_weight for c in classes)
        for c in classes:
            if c.label == "signal":
                return self.n_pulses * c.selection_weight / total
        return 0.0

    def finite_key_params(self) -> FiniteKeyParams:
        return FiniteKeyParams(
            epsilon_total=self.epsilon_total,
            ec_efficiency=self.ec_efficiency,
            n_signal_pulses=self.signal_pulse_count(),
        )

    def sweep_distances(self) -> list:
        """Grid start, start+step, ... up to stop (inclusive, fp-tolerant)."""
        out = []
        k = 0
        while True:
            d = self.sweep_start_km + k * self.sweep_step_km
            if d > self.sweep_stop_km + 1e-9:
                break
            out.append(d)
            k += 1
        return out


def _cast(key: str, type_name, value: str):
    """Cast a config value string to the field's declared type."""
    name = type_name if isinstance(type_name, str) else getattr(type_name, "__name__", "str")
    try:
        if name == "bool":
            lowered = value.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if name == "int":
            try:
                return int(value)
            except ValueError:
                as_float = float(value)
                as_int = int(as_float)
                if as_int != as_float:
                    raise ValueError(f"not an integer: {value!r}")
                return as_int
        if name == "float":
            return float(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc
