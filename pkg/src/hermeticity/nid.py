"""Network identification by deconvolution (NID).

The log-time derivative of a step response is the time-constant spectrum
convolved with the fixed kernel ``w(z) = exp(z - exp(z))``, where
``z = ln(t / 1 s)``. The spectrum is recovered with multiplicative Bayes
(Richardson-Lucy) iterations, which keep it nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import TEMPERATURE, VOLTAGE, FosterNetwork, TransientRecord

EARLY_CUT_TIME = 1.0e-6
POINTS_PER_DECADE = 48
BAYES_ITERATIONS = 500
SMOOTHING_HALFWIDTH = 3

#: Bins holding less than this fraction of the spectrum area are treated as
#: empty; such stages only make the continued-fraction expansion unstable.
NEGLIGIBLE_STAGE = 1e-12


@dataclass(frozen=True)
class LogTimeSignal:
    """Samples on a uniform grid of ``z = ln(t / 1 s)``."""

    z_grid: np.ndarray
    values: np.ndarray
    points_per_decade: int

    @property
    def spacing(self) -> float:
        return math.log(10.0) / self.points_per_decade

    @property
    def times(self) -> np.ndarray:
        return np.exp(self.z_grid)

    def __len__(self) -> int:
        return len(self.z_grid)


@dataclass(frozen=True)
class TimeConstantSpectrum:
    """Resistance density over ``zeta = ln(tau / 1 s)``, in K/W per unit zeta."""

    zeta_grid: np.ndarray
    density: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.zeta_grid[1] - self.zeta_grid[0]) if len(self.zeta_grid) > 1 else 1.0

    @property
    def area(self) -> float:
        return float(self.density.sum() * self.spacing)


def to_temperature(record: TransientRecord) -> TransientRecord:
    """Convert a voltage record to temperature rise using its sensitivity.

    Temperature records pass through unchanged.
    """
    if record.kind == TEMPERATURE:
        return record
    if not record.sensitivity:
        raise ValueError("zero or missing sensitivity")
    return TransientRecord(
        record.times,
        record.values / record.sensitivity,
        power_step=record.power_step,
        sensitivity=record.sensitivity,
        kind=TEMPERATURE,
    )


def log_resample(
    record: TransientRecord,
    points_per_decade: int = POINTS_PER_DECADE,
    early_cut_time: float = EARLY_CUT_TIME,
) -> LogTimeSignal:
    """Interpolate a record onto a uniform logarithmic time grid.

    The grid starts at ``early_cut_time`` or at the first sample, whichever
    is later, and ends at or before the last sample. Interpolation is linear
    in ``ln t``.
    """
    if points_per_decade < 1:
        raise ValueError("points_per_decade must be positive")
    z = np.log(record.times)
    z0 = max(math.log(early_cut_time), z[0])
    z1 = z[-1]
    if (z1 - z0) / math.log(10.0) < 2.0 - 1e-9:
        raise ValueError("record must span at least two decades after the early-time cut")
    step = math.log(10.0) / points_per_decade
    count = int(math.floor((z1 - z0) / step + 1e-9)) + 1
    grid = z0 + step * np.arange(count)
    return LogTimeSignal(grid, np.interp(grid, z, record.values), points_per_decade)


def _moving_average(values: np.ndarray, halfwidth: int) -> np.ndarray:
    # Symmetric window, shrunk near the ends so linear trends survive exactly.
    if halfwidth == 0:
        return values.copy()
    n = len(values)
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    h = np.minimum(halfwidth, np.minimum(idx, n - 1 - idx))
    return (csum[idx + h + 1] - csum[idx - h]) / (2 * h + 1)


def log_derivative(signal: LogTimeSignal, smoothing_halfwidth: int = SMOOTHING_HALFWIDTH) -> LogTimeSignal:
    """Smoothed derivative ``da/dz`` on the same grid."""
    if smoothing_halfwidth < 0:
        raise ValueError("smoothing_halfwidth must be non-negative")
    if len(signal) <= 2 * smoothing_halfwidth + 1 or len(signal) < 3:
        raise ValueError("signal too short for the requested smoothing")
    smoothed = _moving_average(np.asarray(signal.values, dtype=float), smoothing_halfwidth)
    deriv = np.gradient(smoothed, signal.spacing, edge_order=2)
    return LogTimeSignal(signal.z_grid, deriv, signal.points_per_decade)


def nid_kernel(offsets: np.ndarray) -> np.ndarray:
    """The NID weight function ``exp(x - exp(x))``."""
    return np.exp(offsets - np.exp(offsets))


def kernel_matrix(grid: np.ndarray, spacing: float) -> np.ndarray:
    """Discrete convolution operator mapping spectrum density to ``da/dz``.

    The kernel is sampled at all grid offsets and scaled so that its discrete
    integral is exactly one.
    """
    n = len(grid)
    offsets = spacing * np.arange(-(n - 1), n)
    w = nid_kernel(offsets)
    w /= w.sum()
    # K[i, j] = w(z_i - zeta_j), density is per unit zeta so the spacing cancels.
    idx = np.arange(n)
    return w[(idx[:, None] - idx[None, :]) + (n - 1)]


def deconvolve_bayes(
    dadz: LogTimeSignal,
    iterations: int = BAYES_ITERATIONS,
    callback=None,
) -> TimeConstantSpectrum:
    """Bayes iteration for the time-constant spectrum.

    ``callback(k, density)`` is called after every iteration when given.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    data = np.clip(np.asarray(dadz.values, dtype=float), 0.0, None)
    grid = np.asarray(dadz.z_grid, dtype=float)
    if not np.any(data > 0.0):
        return TimeConstantSpectrum(grid.copy(), np.zeros_like(data))
    kmat = kernel_matrix(grid, dadz.spacing)
    colsum = kmat.sum(axis=0)
    density = np.full_like(data, data.sum() / colsum.sum())
    for k in range(iterations):
        model = kmat @ density
        ratio = np.divide(data, model, out=np.zeros_like(data), where=model > 0.0)
        density = density * (kmat.T @ ratio) / colsum
        if callback is not None:
            callback(k + 1, density)
    return TimeConstantSpectrum(grid.copy(), density)


def reconvolve(spectrum: TimeConstantSpectrum) -> np.ndarray:
    """``da/dz`` implied by a spectrum on its own grid."""
    return kernel_matrix(spectrum.zeta_grid, spectrum.spacing) @ spectrum.density


def spectrum_to_foster(spectrum: TimeConstantSpectrum, stages: int) -> FosterNetwork:
    """Bin a spectrum into a Foster network of at most ``stages`` stages.

    Bins split the zeta range into equal parts. Each non-empty bin becomes
    one stage holding the bin's resistance at the area-weighted mean zeta.
    Bins below ``NEGLIGIBLE_STAGE`` of the total count as empty.
    """
    if stages < 1:
        raise ValueError("stages must be at least 1")
    zeta = np.asarray(spectrum.zeta_grid, dtype=float)
    mass = np.asarray(spectrum.density, dtype=float) * spectrum.spacing
    if not mass.sum() > 0.0:
        raise ValueError("spectrum has zero area")
    if len(zeta) > 1:
        edges = np.linspace(zeta[0], zeta[-1], stages + 1)
        bins = np.clip(np.searchsorted(edges, zeta, side="right") - 1, 0, stages - 1)
    else:
        bins = np.zeros(1, dtype=int)
    r = np.bincount(bins, weights=mass, minlength=stages)
    moment = np.bincount(bins, weights=mass * zeta, minlength=stages)
    total = r.sum()
    keep = r > NEGLIGIBLE_STAGE * total
    centers = np.flatnonzero(keep)
    r_keep = r[keep]
    taus = np.exp(moment[keep] / r_keep)
    # Mass of negligible bins goes to the nearest kept bin so the sum is kept.
    dropped = np.flatnonzero(~keep & (r > 0.0))
    if dropped.size:
        nearest = np.abs(dropped[:, None] - centers[None, :]).argmin(axis=1)
        np.add.at(r_keep, nearest, r[dropped])
    return FosterNetwork(tuple(zip(r_keep, taus)))
