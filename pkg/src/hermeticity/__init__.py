"""Thermal transient analysis and porous-layer hermeticity testing.

The pipeline runs power-step transients through network identification by
deconvolution (NID), converts the identified Foster network into a Cauer
ladder and reads package features off the cumulative structure function.
"""

from .network import (
    CauerNetwork,
    FosterNetwork,
    Layer,
    LayerStack,
    NotSettledError,
    TransientRecord,
    cauer_step_response,
    foster_step_response,
    stack_to_cauer,
    steady_state_resistance,
)
from .nid import (
    LogTimeSignal,
    TimeConstantSpectrum,
    deconvolve_bayes,
    log_derivative,
    log_resample,
    spectrum_to_foster,
    to_temperature,
)
from .structure import (
    DivergenceResult,
    StructureFunction,
    cumulative_structure_function,
    differential_structure_function,
    divergence_point,
    foster_to_cauer,
    partial_resistance,
)
from .moisture import (
    HermeticityVerdict,
    PhysicalConstants,
    PorousLayerState,
    classify_hermeticity,
    drying_sequence,
    effective_conductivity,
    rh_of_salt_solution,
    wet_layer,
)

from .pipeline import AnalysisConfig, AnalysisResult, analyze_record

__version__ = "0.1.0"
