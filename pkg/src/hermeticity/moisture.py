"""Porous sensing layer physics and the hermeticity verdict."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import Layer
from .structure import (
    DIVERGENCE_TOLERANCE,
    IDENTICAL,
    NO_COMMON_SECTION,
    StructureFunction,
    divergence_point,
)

HERMETIC = "hermetic"
BREACHED = "breached"
INCONCLUSIVE = "inconclusive"

CLASSIFIER_THRESHOLD = 0.10
#: Total resistances differing by more than this fraction mean the two
#: curves were not taken on the same fixture.
FIXTURE_MISMATCH = 0.5


@dataclass(frozen=True)
class PhysicalConstants:
    lambda_water: float = 0.58  # W/(m K)
    lambda_air: float = 0.0257  # W/(m K)
    evaporation_heat: float = 2.25e6  # J/kg, stored only
    c_v_water: float = 4.18e6  # J/(m^3 K)
    c_v_air: float = 1.2e3  # J/(m^3 K)


REFERENCE_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class PorousLayerState:
    """Porous layer: solid skeleton ``base`` with partly water-filled pores.

    ``base.conductivity`` and ``base.volumetric_heat_capacity`` describe the
    solid phase; ``saturation`` is the fraction of pore volume holding water.
    """

    base: Layer
    porosity: float
    saturation: float

    def __post_init__(self):
        if not 0.0 < self.porosity < 1.0:
            raise ValueError(f"porosity must lie in (0, 1), got {self.porosity!r}")
        if not 0.0 <= self.saturation <= 1.0:
            raise ValueError(f"saturation must lie in [0, 1], got {self.saturation!r}")

    def with_saturation(self, saturation: float) -> "PorousLayerState":
        return PorousLayerState(self.base, self.porosity, saturation)


@dataclass(frozen=True)
class HermeticityVerdict:
    status: str
    sensing_layer_resistance_change: float
    divergence_point: float
    reason: str = ""


def effective_conductivity(
    state: PorousLayerState, constants: PhysicalConstants = REFERENCE_CONSTANTS
) -> float:
    """Geometric-mean mixing of solid and pore-fill conductivities."""
    s, phi = state.saturation, state.porosity
    pore = constants.lambda_air ** (1.0 - s) * constants.lambda_water**s
    return state.base.conductivity ** (1.0 - phi) * pore**phi


def wet_layer(state: PorousLayerState, constants: PhysicalConstants = REFERENCE_CONSTANTS) -> Layer:
    """Homogenized :class:`Layer` for the porous layer at its saturation."""
    s, phi = state.saturation, state.porosity
    pore_cv = (1.0 - s) * constants.c_v_air + s * constants.c_v_water
    return Layer(
        thickness=state.base.thickness,
        area=state.base.area,
        conductivity=effective_conductivity(state, constants),
        volumetric_heat_capacity=(1.0 - phi) * state.base.volumetric_heat_capacity + phi * pore_cv,
    )


def drying_sequence(
    initial_saturation: float, step_interval: float, time_constant: float, steps: int
) -> list[float]:
    """Saturations at ``k * step_interval`` for ``k = 0..steps`` under exponential drying."""
    if not 0.0 <= initial_saturation <= 1.0:
        raise ValueError("initial saturation must lie in [0, 1]")
    if steps < 0 or step_interval < 0.0 or not time_constant > 0.0:
        raise ValueError("need steps >= 0, step_interval >= 0 and a positive time constant")
    rate = 0.0 if math.isinf(time_constant) else step_interval / time_constant
    return [initial_saturation * math.exp(-k * rate) for k in range(steps + 1)]


def classify_hermeticity(
    sf_dry_reference: StructureFunction,
    sf_measured: StructureFunction,
    resistance_drop_threshold: float = CLASSIFIER_THRESHOLD,
    rel_tolerance: float = DIVERGENCE_TOLERANCE,
) -> HermeticityVerdict:
    """Compare a measured structure function with the dry reference of the same fixture.

    The sensing section runs from the divergence point of the two curves to
    each curve's end. Water in the porous layer lowers the section's
    resistance, so a drop of more than ``resistance_drop_threshold`` (as a
    fraction of the reference section) means moisture got into the package.

    A divergence inside the last ``rel_tolerance`` fraction of the common
    resistance range lies in the blurred rise towards the singularity and
    does not delimit a section; the total resistances are compared then.
    """
    r_ref = sf_dry_reference.total_resistance
    r_meas = sf_measured.total_resistance
    if r_ref <= 0.0 or abs(r_meas - r_ref) / r_ref > FIXTURE_MISMATCH:
        return HermeticityVerdict(
            INCONCLUSIVE, float("nan"), float("nan"), "total resistances differ by more than 50%"
        )
    div = divergence_point(sf_dry_reference, sf_measured, rel_tolerance)
    if div.flag == NO_COMMON_SECTION:
        return HermeticityVerdict(INCONCLUSIVE, float("nan"), 0.0, "curves share no common section")
    terminal = div.resistance > (1.0 - rel_tolerance) * min(r_ref, r_meas)
    if div.flag == IDENTICAL or terminal:
        # No separable section, or the curves only part inside the final
        # singularity rise: compare whole paths instead.
        change = (r_meas - r_ref) / r_ref
        reason = "no separable sensing section; total resistance compared"
    else:
        section_ref = r_ref - div.resistance
        section_meas = r_meas - div.resistance
        change = (section_meas - section_ref) / section_ref
        reason = f"sensing section {section_ref:.6g} -> {section_meas:.6g} K/W"
    status = BREACHED if change < -resistance_drop_threshold else HERMETIC
    return HermeticityVerdict(status, float(change), div.resistance, reason)


#: Relative humidity over saturated salt solutions at 25 degC.
SALT_RH_25C = {
    "LiCl": 0.113,
    "KNO3": 0.9358,
}

_SALT_ALIASES = {"KNO₃": "KNO3"}


def rh_of_salt_solution(salt: str, temperature: float = 25.0) -> float:
    """Relative humidity (fraction) above a saturated salt solution."""
    key = _SALT_ALIASES.get(salt, salt)
    if key not in SALT_RH_25C:
        raise KeyError(f"salt {salt!r} is not tabulated")
    if not np.isclose(temperature, 25.0, rtol=0.0, atol=1e-9):
        raise ValueError(f"{salt} is not tabulated at {temperature} degC (only 25 degC)")
    return SALT_RH_25C[key]
