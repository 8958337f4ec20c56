"""Foster to Cauer conversion and structure-function analysis."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import mpmath
import numpy as np

from .network import CauerNetwork, FosterNetwork

#: Working precision of the continued-fraction expansion, in bits. It is
#: doubled on numerical breakdown up to ``MAX_PRECISION``.
PRECISION = 256
MAX_PRECISION = 8192

DEGENERATE_RATIO = 1.0 + 1e-9
DIVERGENCE_TOLERANCE = 0.05

IDENTICAL = "identical"
NO_COMMON_SECTION = "no_common_section"
DIVERGED = "diverged"


class CauerBreakdownError(ArithmeticError):
    """The continued-fraction expansion produced a non-positive element."""


@dataclass(frozen=True)
class StructureFunction:
    """Cumulative capacitance against cumulative resistance from the junction."""

    resistance: np.ndarray
    capacitance: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.resistance, dtype=float)
        c = np.asarray(self.capacitance, dtype=float)
        if r.ndim != 1 or r.shape != c.shape or r.size == 0:
            raise ValueError("structure function needs matching 1-D coordinate arrays")
        if np.any(np.diff(r) < 0.0) or np.any(np.diff(c) < 0.0):
            raise ValueError("structure function coordinates must be nondecreasing")
        object.__setattr__(self, "resistance", r)
        object.__setattr__(self, "capacitance", c)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.resistance.tolist(), self.capacitance.tolist()))

    @property
    def total_resistance(self) -> float:
        """Resistance of the singularity point, where the curve ends."""
        return float(self.resistance[-1])

    def capacitance_at(self, r: float) -> float:
        """Cumulative capacitance at ``r``, linear between points."""
        return float(np.interp(r, self.resistance, self.capacitance))

    def __len__(self) -> int:
        return len(self.resistance)


@dataclass(frozen=True)
class DivergenceResult:
    resistance: float
    flag: str = DIVERGED

    def __float__(self) -> float:
        return self.resistance


def _merge_degenerate(stages):
    merged = [list(stages[0])]
    for r, tau in stages[1:]:
        last = merged[-1]
        if tau / last[1] < DEGENERATE_RATIO:
            warnings.warn(
                f"merging nearly degenerate Foster time constants {last[1]!r} and {tau!r}",
                RuntimeWarning,
                stacklevel=3,
            )
            total = last[0] + r
            last[1] = (last[0] * last[1] + r * tau) / total
            last[0] = total
        else:
            merged.append([r, tau])
    return [tuple(p) for p in merged]


def _poly_mul_linear(poly, tau):
    # poly * (1 + s*tau), coefficients in ascending powers of s
    out = poly + [mpmath.mpf(0)]
    for k in range(len(poly)):
        out[k + 1] += poly[k] * tau
    return out


def _expand(stages) -> list[tuple]:
    taus = [mpmath.mpf(tau) for _, tau in stages]
    rs = [mpmath.mpf(r) for r, _ in stages]
    n = len(stages)
    den = [mpmath.mpf(1)]
    for tau in taus:
        den = _poly_mul_linear(den, tau)
    num = [mpmath.mpf(0)] * n
    for i in range(n):
        term = [rs[i]]
        for j in range(n):
            if j != i:
                term = _poly_mul_linear(term, taus[j])
        for k, coef in enumerate(term):
            num[k] += coef
    rungs = []
    # Admittance den/num: deg(den) = m, deg(num) = m - 1.
    for m in range(n, 0, -1):
        c = den[m] / num[m - 1]
        den = [den[k] - (c * num[k - 1] if k >= 1 else 0) for k in range(m)]
        r = num[m - 1] / den[m - 1]
        num = [num[k] - r * den[k] for k in range(m - 1)]
        rungs.append((r, c))
    return rungs


def foster_to_cauer(net: FosterNetwork, precision: int = PRECISION) -> CauerNetwork:
    """Cauer ladder with the same driving-point impedance as ``net``.

    The impedance is expanded as a continued fraction in extended precision;
    the working precision doubles whenever the expansion breaks down.

    Raises
    ------
    CauerBreakdownError
        If a non-positive element survives the maximum precision.
    """
    if len(net) == 0:
        raise ValueError("empty network")
    stages = _merge_degenerate(list(net.stages))
    prec = precision
    while True:
        with mpmath.workprec(prec):
            rungs = _expand(stages)
            bad = next((i for i, (r, c) in enumerate(rungs) if r <= 0 or c <= 0), None)
            if bad is None:
                total = mpmath.fsum(mpmath.mpf(r) for r, _ in stages)
                out = [(float(r), float(c)) for r, c in rungs]
                # Last resistance absorbs rounding so the totals agree, unless
                # it is too small to take the correction.
                last_r = float(total - mpmath.fsum(mpmath.mpf(r) for r, _ in out[:-1]))
                if abs(last_r - out[-1][0]) <= 1e-9 * out[-1][0]:
                    out[-1] = (last_r, out[-1][1])
                return CauerNetwork(tuple(out))
        if prec >= MAX_PRECISION:
            raise CauerBreakdownError(
                f"continued-fraction expansion broke down at rung {bad} "
                f"(non-positive element at {prec}-bit precision)"
            )
        prec *= 2


def cumulative_structure_function(net: CauerNetwork) -> StructureFunction:
    """Prefix sums of rung resistances and capacitances, starting at the origin."""
    r = np.concatenate(([0.0], np.cumsum(net.resistances)))
    c = np.concatenate(([0.0], np.cumsum(net.capacitances)))
    return StructureFunction(r, c)


def differential_structure_function(sf: StructureFunction) -> list[tuple[float, float]]:
    """Slopes ``dC/dR`` between consecutive points, placed at segment midpoints."""
    if len(sf) < 2:
        raise ValueError("need at least two points")
    dr = np.diff(sf.resistance)
    dc = np.diff(sf.capacitance)
    keep = dr > 0.0
    mid = 0.5 * (sf.resistance[1:] + sf.resistance[:-1])
    return list(zip(mid[keep].tolist(), (dc[keep] / dr[keep]).tolist()))


def _log_capacitance(sf: StructureFunction, grid: np.ndarray) -> np.ndarray:
    pos = sf.capacitance > 0.0
    return np.interp(grid, sf.resistance[pos], np.log10(sf.capacitance[pos]))


def divergence_point(
    sf_a: StructureFunction,
    sf_b: StructureFunction,
    rel_tolerance: float = DIVERGENCE_TOLERANCE,
    grid_points: int = 4000,
) -> DivergenceResult:
    """Resistance up to which two structure functions coincide.

    The curves are compared as ``log10(C)`` on a common resistance grid,
    interpolating linearly in ``(R, log10 C)``. The result is the largest
    resistance below which they differ by less than ``rel_tolerance``.
    """
    if rel_tolerance <= 0.0:
        raise ValueError("rel_tolerance must be positive")
    end = min(sf_a.total_resistance, sf_b.total_resistance)

    def first_positive(sf):
        pos = np.flatnonzero(sf.capacitance > 0.0)
        return sf.resistance[pos[0]] if pos.size else np.inf

    start = max(first_positive(sf_a), first_positive(sf_b))
    if not start < end:
        return DivergenceResult(0.0, NO_COMMON_SECTION)
    knots = np.concatenate((sf_a.resistance, sf_b.resistance))
    knots = knots[(knots > start) & (knots < end)]
    grid = np.union1d(np.linspace(start, end, grid_points), knots)
    diff = np.abs(_log_capacitance(sf_a, grid) - _log_capacitance(sf_b, grid))
    over = np.flatnonzero(diff >= rel_tolerance)
    if over.size == 0:
        return DivergenceResult(end, IDENTICAL)
    i = over[0]
    if i == 0:
        return DivergenceResult(0.0, NO_COMMON_SECTION)
    # Linear crossing of the tolerance between the last agreeing grid point and i.
    d0, d1 = diff[i - 1], diff[i]
    frac = (rel_tolerance - d0) / (d1 - d0)
    return DivergenceResult(float(grid[i - 1] + frac * (grid[i] - grid[i - 1])), DIVERGED)


def partial_resistance(sf: StructureFunction, feature_a: float, feature_b: float) -> float:
    """Resistance between two features located on the curve's resistance axis."""
    total = sf.total_resistance
    slack = 1e-12 * max(total, 1.0)
    if not (-slack <= feature_a <= feature_b <= total + slack):
        raise ValueError(
            f"features must satisfy 0 <= a <= b <= {total!r}; got a={feature_a!r}, b={feature_b!r}"
        )
    return float(feature_b - feature_a)
