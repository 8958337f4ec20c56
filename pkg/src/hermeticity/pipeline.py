"""End-to-end analysis of one transient record."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

from . import nid
from .moisture import CLASSIFIER_THRESHOLD
from .network import (
    SETTLING_THRESHOLD,
    CauerNetwork,
    FosterNetwork,
    NotSettledError,
    TransientRecord,
    steady_state_resistance,
)
from .structure import (
    DIVERGENCE_TOLERANCE,
    StructureFunction,
    cumulative_structure_function,
    foster_to_cauer,
)

FOSTER_STAGES = 100


@dataclass(frozen=True)
class AnalysisConfig:
    points_per_decade: int = nid.POINTS_PER_DECADE
    bayes_iterations: int = nid.BAYES_ITERATIONS
    smoothing_halfwidth: int = nid.SMOOTHING_HALFWIDTH
    foster_stages: int = FOSTER_STAGES
    divergence_rel_tolerance: float = DIVERGENCE_TOLERANCE
    classifier_threshold: float = CLASSIFIER_THRESHOLD
    early_cut_time: float = nid.EARLY_CUT_TIME
    settling_threshold: float = SETTLING_THRESHOLD

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not value > 0:
                raise ValueError(f"config value {f.name} must be positive, got {value!r}")
        for name in ("points_per_decade", "bayes_iterations", "smoothing_halfwidth", "foster_stages"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ValueError(f"config value {name} must be an integer")
            object.__setattr__(self, name, int(getattr(self, name)))

    def updated(self, **changes) -> "AnalysisConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class AnalysisResult:
    temperature: TransientRecord
    spectrum: nid.TimeConstantSpectrum
    foster: FosterNetwork
    cauer: CauerNetwork
    structure_function: StructureFunction
    steady_resistance: Optional[float]
    settle_message: str = ""

    @property
    def identified_resistance(self) -> float:
        return self.foster.total_resistance


def analyze_record(record: TransientRecord, config: AnalysisConfig = AnalysisConfig()) -> AnalysisResult:
    """Run NID on a record and build its structure function.

    The record is normalized by its power step first, so the spectrum and
    all networks are in K/W. The steady-state resistance is ``None`` when
    the record has not settled.
    """
    temperature = nid.to_temperature(record)
    try:
        steady = steady_state_resistance(temperature, config.settling_threshold)
        message = ""
    except NotSettledError as exc:
        steady, message = None, str(exc)
    impedance = TransientRecord(
        temperature.times, temperature.values / temperature.power_step, power_step=1.0
    )
    signal = nid.log_resample(impedance, config.points_per_decade, config.early_cut_time)
    dadz = nid.log_derivative(signal, config.smoothing_halfwidth)
    spectrum = nid.deconvolve_bayes(dadz, config.bayes_iterations)
    foster = nid.spectrum_to_foster(spectrum, config.foster_stages)
    cauer = foster_to_cauer(foster)
    return AnalysisResult(
        temperature,
        spectrum,
        foster,
        cauer,
        cumulative_structure_function(cauer),
        steady,
        message,
    )
