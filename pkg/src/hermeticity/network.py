"""Thermal RC network types, layer stacks and the forward step-response solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

TEMPERATURE = "temperature"
VOLTAGE = "voltage"

#: Capacitance of the ambient-side boundary rung; large enough to act as an
#: infinite heat reservoir on the structure function.
TERMINAL_CAPACITANCE = 1.0e6

#: Relative temperature change over the last decade below which a transient
#: counts as settled.
SETTLING_THRESHOLD = 1.0e-4


class NotSettledError(ValueError):
    """Raised when a transient has not reached thermal equilibrium."""


def _as_pairs(items: Iterable[Sequence[float]], what: str) -> tuple[tuple[float, float], ...]:
    pairs = tuple((float(a), float(b)) for a, b in items)
    for i, (a, b) in enumerate(pairs):
        if not (np.isfinite(a) and np.isfinite(b)) or a <= 0.0 or b <= 0.0:
            raise ValueError(f"{what} {i} has non-positive or non-finite element: {(a, b)}")
    return pairs


@dataclass(frozen=True)
class FosterNetwork:
    """Series chain of parallel RC stages, ``(resistance, time_constant)`` pairs.

    Stages are kept sorted by increasing time constant.
    """

    stages: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pairs = _as_pairs(self.stages, "Foster stage")
        pairs = tuple(sorted(pairs, key=lambda p: p[1]))
        taus = [tau for _, tau in pairs]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("Foster time constants must be distinct")
        object.__setattr__(self, "stages", pairs)

    @property
    def resistances(self) -> np.ndarray:
        return np.array([r for r, _ in self.stages])

    @property
    def time_constants(self) -> np.ndarray:
        return np.array([tau for _, tau in self.stages])

    @property
    def capacitances(self) -> np.ndarray:
        return self.time_constants / self.resistances

    @property
    def total_resistance(self) -> float:
        return float(sum(r for r, _ in self.stages))

    def __len__(self) -> int:
        return len(self.stages)


@dataclass(frozen=True)
class CauerNetwork:
    """Ladder of ``(resistance, capacitance)`` rungs, junction end first.

    Rung ``i`` puts its capacitance from node ``i`` to ambient and its
    resistance between node ``i`` and node ``i + 1``; the node after the
    last rung is the ambient.
    """

    rungs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "rungs", _as_pairs(self.rungs, "Cauer rung"))

    @property
    def resistances(self) -> np.ndarray:
        return np.array([r for r, _ in self.rungs])

    @property
    def capacitances(self) -> np.ndarray:
        return np.array([c for _, c in self.rungs])

    @property
    def total_resistance(self) -> float:
        return float(sum(r for r, _ in self.rungs))

    def __len__(self) -> int:
        return len(self.rungs)


@dataclass(frozen=True)
class Layer:
    """Homogeneous slab in a 1-D heat-flow path (SI units)."""

    thickness: float
    area: float
    conductivity: float
    volumetric_heat_capacity: float

    def __post_init__(self):
        for name in ("thickness", "area", "conductivity", "volumetric_heat_capacity"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"non-physical layer: {name}={value!r} must be positive")

    @property
    def resistance(self) -> float:
        return self.thickness / (self.conductivity * self.area)

    @property
    def capacitance(self) -> float:
        return self.volumetric_heat_capacity * self.area * self.thickness


@dataclass(frozen=True)
class LayerStack:
    layers: tuple[Layer, ...]
    boundary_resistance_to_ambient: float = 0.0

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("layer stack needs at least one layer")
        if not self.boundary_resistance_to_ambient >= 0.0:
            raise ValueError("boundary resistance must be non-negative")
        object.__setattr__(self, "layers", layers)

    @property
    def steady_resistance(self) -> float:
        return sum(layer.resistance for layer in self.layers) + self.boundary_resistance_to_ambient


@dataclass(frozen=True)
class TransientRecord:
    """Sampled response to a power step applied at ``t = 0``.

    ``values`` are temperature rises in K, or emitter-base voltage changes in V
    when ``kind`` is ``"voltage"``. ``sensitivity`` is in V/K.
    """

    times: np.ndarray
    values: np.ndarray
    power_step: float
    sensitivity: Optional[float] = None
    kind: str = TEMPERATURE

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if times.size == 0:
            raise ValueError("transient record is empty")
        if times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("sample times must be positive and strictly increasing")
        if not self.power_step > 0.0:
            raise ValueError("power step must be positive")
        if self.kind not in (TEMPERATURE, VOLTAGE):
            raise ValueError(f"unknown record kind {self.kind!r}")
        if self.kind == VOLTAGE and not self.sensitivity:
            raise ValueError("voltage records need a nonzero sensitivity")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)


def stack_to_cauer(
    stack: LayerStack,
    slices_per_layer: int,
    terminal_capacitance: float = TERMINAL_CAPACITANCE,
) -> CauerNetwork:
    """Discretize a layer stack into a Cauer ladder.

    Each layer is cut into ``slices_per_layer`` equal slices, one rung per
    slice. A positive boundary resistance becomes a final rung whose
    capacitance is ``terminal_capacitance``.
    """
    if slices_per_layer < 1:
        raise ValueError("slices_per_layer must be at least 1")
    rungs = []
    for layer in stack.layers:
        dx = layer.thickness / slices_per_layer
        r = dx / (layer.conductivity * layer.area)
        c = layer.volumetric_heat_capacity * layer.area * dx
        rungs.extend([(r, c)] * slices_per_layer)
    if stack.boundary_resistance_to_ambient > 0.0:
        rungs.append((stack.boundary_resistance_to_ambient, terminal_capacitance))
    return CauerNetwork(tuple(rungs))


def cauer_to_foster_modes(net: CauerNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Modal resistances and time constants of a Cauer ladder.

    The nodal system ``C dT/dt = -G T + P e_0`` is symmetrized with
    ``C^(-1/2)`` and diagonalized; the driving-point impedance then splits
    into one parallel RC term per eigenmode.
    """
    if len(net) == 0:
        raise ValueError("empty network")
    r = net.resistances
    c = net.capacitances
    g = 1.0 / r
    diag = g.copy()
    diag[1:] += g[:-1]
    diag /= c
    off = -g[:-1] / np.sqrt(c[:-1] * c[1:])
    eigvals, eigvecs = eigh_tridiagonal(diag, off)
    modal_r = eigvecs[0] ** 2 / (c[0] * eigvals)
    return modal_r, 1.0 / eigvals


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if times[0] <= 0.0 or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be positive and strictly increasing")
    return times


def _modal_response(total_r, modal_r, taus, power, times) -> np.ndarray:
    # Modal resistances are rescaled to the exact ladder total so the settled
    # value is exact; expm1 keeps early times free of cancellation.
    modal_r = modal_r * (total_r / modal_r.sum())
    rise = power * (-np.expm1(-np.outer(times, 1.0 / taus)) @ modal_r)
    return np.maximum.accumulate(rise)


def cauer_step_response(net: CauerNetwork, power: float, times) -> TransientRecord:
    """Junction temperature rise of a Cauer ladder under a power step."""
    if len(net) == 0:
        raise ValueError("empty network")
    times = _check_times(times)
    modal_r, taus = cauer_to_foster_modes(net)
    values = _modal_response(net.total_resistance, modal_r, taus, power, times)
    return TransientRecord(times, values, power_step=_record_power(power))


def foster_step_response(net: FosterNetwork, power: float, times) -> TransientRecord:
    """Closed-form step response ``P * sum(R_i (1 - exp(-t / tau_i)))``."""
    if len(net) == 0:
        raise ValueError("empty network")
    times = _check_times(times)
    values = power * (-np.expm1(-np.outer(times, 1.0 / net.time_constants)) @ net.resistances)
    return TransientRecord(times, values, power_step=_record_power(power))


def _record_power(power: float) -> float:
    # A zero-power response is identically zero; the record still needs a
    # positive nominal step so that it stays a valid TransientRecord.
    return power if power > 0.0 else 1.0


def _settling_windows(record: TransientRecord) -> tuple[np.ndarray, np.ndarray]:
    t, v = record.times, record.values
    t_end = t[-1]
    if t[0] > t_end / 10.0:
        raise NotSettledError("record spans less than one decade; equilibrium cannot be checked")
    final = v[t >= t_end * 10.0**-0.1]
    earlier = v[(t >= t_end * 10.0**-1.1) & (t <= t_end / 10.0)]
    if earlier.size == 0:
        earlier = np.interp([t_end / 10.0], t, v)
    return final, earlier


def settling_change(record: TransientRecord) -> float:
    """Relative temperature change over the last decade of the record.

    Each end of the decade is the mean over a tenth of a decade, which keeps
    the measure usable on noisy data.
    """
    final, earlier = _settling_windows(record)
    scale = abs(final.mean())
    if scale == 0.0:
        return 0.0 if np.all(record.values == 0.0) else np.inf
    return abs(final.mean() - earlier.mean()) / scale


def _noise_allowance(record: TransientRecord) -> float:
    # Three standard errors of the difference of the two window means,
    # relative to the final level. Zero for noise-free records.
    final, earlier = _settling_windows(record)
    se = np.sqrt(final.var() / final.size + earlier.var() / earlier.size)
    scale = abs(final.mean())
    return 0.0 if scale == 0.0 else 3.0 * se / scale


def steady_state_resistance(record: TransientRecord, threshold: float = SETTLING_THRESHOLD) -> float:
    """Junction-to-ambient resistance ``delta_T_final / P`` of a settled record.

    Raises
    ------
    NotSettledError
        If the relative change over the last decade exceeds both
        ``threshold`` and what sample noise alone would explain.
    """
    if record.kind != TEMPERATURE:
        raise ValueError("convert voltage records with to_temperature() first")
    change = settling_change(record)
    if change >= max(threshold, _noise_allowance(record)):
        raise NotSettledError(
            f"transient not in equilibrium: {change:.3g} relative change over the last decade"
        )
    final = record.values[record.times >= record.times[-1] * 10.0**-0.1].mean()
    return float(final / record.power_step)
