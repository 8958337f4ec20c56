"""Reference layer stacks for the two test setups.

The geometry and material values are declared fixture constants; only the
1.56 K/W junction-to-case resistance of the power transistor and the
0.1 mm gypsum thickness come from the measured setup.
"""

from __future__ import annotations

from .moisture import REFERENCE_CONSTANTS, PhysicalConstants, PorousLayerState, wet_layer
from .network import Layer, LayerStack

JUNCTION_TO_CASE = 1.56  # K/W, power transistor datasheet value
GYPSUM_THICKNESS = 1.0e-4  # m
GYPSUM_AREA = 2.0e-3  # m^2
GYPSUM_SOLID_CONDUCTIVITY = 1.2  # W/(m K)
GYPSUM_SOLID_HEAT_CAPACITY = 1.6e6  # J/(m^3 K)
GYPSUM_POROSITY = 0.5

POWER_STEP = 0.1  # W
SENSITIVITY = -2.0e-3  # V/K, emitter-base voltage


def gypsum_layer(saturation: float) -> PorousLayerState:
    base = Layer(GYPSUM_THICKNESS, GYPSUM_AREA, GYPSUM_SOLID_CONDUCTIVITY, GYPSUM_SOLID_HEAT_CAPACITY)
    return PorousLayerState(base, GYPSUM_POROSITY, saturation)


def package_layers(junction_to_case: float = JUNCTION_TO_CASE) -> tuple[Layer, ...]:
    """Die, die attach and copper tab adding up to ``junction_to_case``."""
    die = Layer(3.0e-4, 4.0e-6, 148.0, 1.66e6)
    attach = Layer(5.0e-5, 4.0e-6, 35.0, 1.67e6)
    r_tab = junction_to_case - die.resistance - attach.resistance
    tab_thickness, tab_conductivity = 1.5e-3, 390.0
    tab = Layer(tab_thickness, tab_thickness / (tab_conductivity * r_tab), tab_conductivity, 3.45e6)
    return die, attach, tab


def gypsum_stack(
    saturation: float,
    constants: PhysicalConstants = REFERENCE_CONSTANTS,
    junction_to_case: float = JUNCTION_TO_CASE,
) -> LayerStack:
    """Power transistor on a gypsum layer over an aluminium heat sink.

    The far face of the heat sink is held at ambient temperature.
    """
    sink = Layer(5.0e-3, 2.0e-3, 237.0, 2.42e6)
    gypsum = wet_layer(gypsum_layer(saturation), constants)
    return LayerStack(package_layers(junction_to_case) + (gypsum, sink))


def open_package_stack(constants: PhysicalConstants = REFERENCE_CONSTANTS) -> LayerStack:
    """Small-signal transistor with its cap removed, cooled through still air."""
    die = Layer(2.0e-4, 1.0e-6, 148.0, 1.66e6)
    attach = Layer(3.0e-5, 1.0e-6, 35.0, 1.67e6)
    header = Layer(5.0e-4, 2.0e-5, 17.0, 3.8e6)
    air = Layer(1.0e-3, 1.0e-4, constants.lambda_air, constants.c_v_air)
    return LayerStack((die, attach, header, air))
