"""Text formats: transient, spectrum and structure-function CSV, stack and config files.

CSV files carry metadata on ``#``-prefixed lines ahead of the column
header. Floats are written with ``repr`` so that reading them back is
lossless.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .moisture import REFERENCE_CONSTANTS, PhysicalConstants, PorousLayerState, wet_layer
from .network import TEMPERATURE, VOLTAGE, TERMINAL_CAPACITANCE, Layer, LayerStack, TransientRecord
from .nid import TimeConstantSpectrum
from .pipeline import AnalysisConfig
from .structure import StructureFunction

TRANSIENT_COLUMNS = {TEMPERATURE: "temperature_K", VOLTAGE: "voltage_V"}
SF_COLUMNS = ("cum_R_K_per_W", "cum_C_J_per_K")
SPECTRUM_COLUMNS = ("zeta", "density")
DIFFERENTIAL_COLUMNS = ("cum_R_K_per_W", "dC_dR_J_per_K2_W")


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line: Optional[int], message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def fmt(x: float) -> str:
    return repr(float(x))


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(meta: dict, columns, rows) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _read_csv(path):
    """Return ``(meta, header, rows, first_data_line)`` with rows as float lists."""
    meta, header, rows = {}, None, []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, sep, value = text[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            cells = [c.strip() for c in text.split(",")]
            if header is None:
                header = cells
                continue
            if len(cells) != len(header):
                raise FormatError(path, lineno, f"expected {len(header)} columns, got {len(cells)}")
            try:
                rows.append((lineno, [float(c) for c in cells]))
            except ValueError:
                raise FormatError(path, lineno, f"non-numeric value in {text!r}") from None
    if header is None:
        raise FormatError(path, None, "missing column header")
    if not rows:
        raise FormatError(path, None, "no data rows")
    return meta, header, rows


def write_transient(path, record: TransientRecord) -> None:
    sens = "none" if record.sensitivity is None else fmt(record.sensitivity * 1e3)
    meta = {"power_W": fmt(record.power_step), "sensitivity_mV_per_K": sens}
    columns = ("time_s", TRANSIENT_COLUMNS[record.kind])
    write_atomic(path, _csv_text(meta, columns, zip(record.times, record.values)))


def read_transient(path) -> TransientRecord:
    meta, header, rows = _read_csv(path)
    kinds = {v: k for k, v in TRANSIENT_COLUMNS.items()}
    if len(header) != 2 or header[0] != "time_s" or header[1] not in kinds:
        raise FormatError(path, None, f"unexpected columns {header}; want time_s and temperature_K or voltage_V")
    try:
        power = float(meta["power_W"])
    except KeyError:
        raise FormatError(path, None, "missing '# power_W:' header line") from None
    except ValueError:
        raise FormatError(path, None, f"bad power_W value {meta['power_W']!r}") from None
    sens_text = meta.get("sensitivity_mV_per_K", "none")
    try:
        sensitivity = None if sens_text.lower() in ("", "none") else float(sens_text) * 1e-3
    except ValueError:
        raise FormatError(path, None, f"bad sensitivity_mV_per_K value {sens_text!r}") from None
    data = np.array([r for _, r in rows])
    times = data[:, 0]
    bad = np.flatnonzero(np.diff(times) <= 0.0)
    if times[0] <= 0.0:
        raise FormatError(path, rows[0][0], "sample times must be positive")
    if bad.size:
        raise FormatError(path, rows[bad[0] + 1][0], "sample times must be strictly increasing")
    try:
        return TransientRecord(times, data[:, 1], power, sensitivity, kinds[header[1]])
    except ValueError as exc:
        raise FormatError(path, None, str(exc)) from None


def write_structure_function(path, sf: StructureFunction, meta: Optional[dict] = None) -> None:
    write_atomic(path, _csv_text(meta or {}, SF_COLUMNS, zip(sf.resistance, sf.capacitance)))


def read_structure_function(path) -> StructureFunction:
    _, header, rows = _read_csv(path)
    if tuple(header) != SF_COLUMNS:
        raise FormatError(path, None, f"unexpected columns {header}; want {list(SF_COLUMNS)}")
    data = np.array([r for _, r in rows])
    for col in range(2):
        bad = np.flatnonzero(np.diff(data[:, col]) < 0.0)
        if bad.size:
            raise FormatError(path, rows[bad[0] + 1][0], f"{SF_COLUMNS[col]} decreases")
    return StructureFunction(data[:, 0], data[:, 1])


def write_spectrum(path, spectrum: TimeConstantSpectrum, meta: Optional[dict] = None) -> None:
    write_atomic(path, _csv_text(meta or {}, SPECTRUM_COLUMNS, zip(spectrum.zeta_grid, spectrum.density)))


def read_spectrum(path) -> TimeConstantSpectrum:
    _, header, rows = _read_csv(path)
    if tuple(header) != SPECTRUM_COLUMNS:
        raise FormatError(path, None, f"unexpected columns {header}; want {list(SPECTRUM_COLUMNS)}")
    data = np.array([r for _, r in rows])
    return TimeConstantSpectrum(data[:, 0], data[:, 1])


def write_differential(path, points) -> None:
    write_atomic(path, _csv_text({}, DIFFERENTIAL_COLUMNS, points))


# Stack description files
#
#   constants lambda_air=0.0257 ...        optional, before layers using them
#   layer die thickness=3e-4 area=4e-6 conductivity=148 heat_capacity=1.66e6
#   porous gypsum thickness=1e-4 area=2e-3 conductivity=1.2 heat_capacity=1.6e6 porosity=0.5 saturation=0.8
#   air gap thickness=1e-3 area=1e-4
#   boundary resistance=0.5 terminal_capacitance=1e6
#   slices 10

_LAYER_KEYS = {"thickness", "area", "conductivity", "heat_capacity"}
_KEYS = {
    "layer": _LAYER_KEYS,
    "porous": _LAYER_KEYS | {"porosity", "saturation"},
    "air": {"thickness", "area"},
}


@dataclass(frozen=True)
class StackSpec:
    stack: LayerStack
    slices_per_layer: int = 10
    terminal_capacitance: float = TERMINAL_CAPACITANCE


def _parse_pairs(path, lineno, tokens, allowed, required):
    values = {}
    for tok in tokens:
        key, sep, raw = tok.partition("=")
        if not sep:
            raise FormatError(path, lineno, f"expected key=value, got {tok!r}")
        if key not in allowed:
            raise FormatError(path, lineno, f"unknown key {key!r}; allowed: {', '.join(sorted(allowed))}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise FormatError(path, lineno, f"{key} is not a number: {raw!r}") from None
    missing = sorted(set(required) - values.keys())
    if missing:
        raise FormatError(path, lineno, f"missing {', '.join(missing)}")
    return values


def parse_stack(text: str, path="<stack>") -> StackSpec:
    constants = REFERENCE_CONSTANTS
    layers = []
    boundary, terminal, slices = 0.0, TERMINAL_CAPACITANCE, 10
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        kind, rest = tokens[0], tokens[1:]
        try:
            if kind == "constants":
                allowed = {f.name for f in fields(PhysicalConstants)}
                constants = replace(constants, **_parse_pairs(path, lineno, rest, allowed, ()))
            elif kind in _KEYS:
                if not rest or "=" in rest[0]:
                    raise FormatError(path, lineno, f"{kind} needs a name before its parameters")
                v = _parse_pairs(path, lineno, rest[1:], _KEYS[kind], _KEYS[kind])
                if kind == "air":
                    layers.append(Layer(v["thickness"], v["area"], constants.lambda_air, constants.c_v_air))
                    continue
                base = Layer(v["thickness"], v["area"], v["conductivity"], v["heat_capacity"])
                if kind == "porous":
                    base = wet_layer(PorousLayerState(base, v["porosity"], v["saturation"]), constants)
                layers.append(base)
            elif kind == "boundary":
                v = _parse_pairs(path, lineno, rest, {"resistance", "terminal_capacitance"}, {"resistance"})
                boundary = v["resistance"]
                terminal = v.get("terminal_capacitance", terminal)
                if boundary < 0.0 or terminal <= 0.0:
                    raise FormatError(path, lineno, "boundary values must be non-negative")
            elif kind == "slices":
                if len(rest) != 1 or not rest[0].isdigit() or int(rest[0]) < 1:
                    raise FormatError(path, lineno, "slices needs one positive integer")
                slices = int(rest[0])
            else:
                raise FormatError(path, lineno, f"unknown entry {kind!r}")
        except FormatError:
            raise
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
    if not layers:
        raise FormatError(path, None, "stack has no layers")
    return StackSpec(LayerStack(tuple(layers), boundary), slices, terminal)


def read_stack(path) -> StackSpec:
    return parse_stack(Path(path).read_text(), path)


def format_stack(stack: LayerStack, slices_per_layer: int = 10) -> str:
    """Stack file text with every layer written as a plain ``layer`` entry."""
    lines = [f"slices {slices_per_layer}"]
    for i, layer in enumerate(stack.layers):
        lines.append(
            f"layer L{i} thickness={fmt(layer.thickness)} area={fmt(layer.area)} "
            f"conductivity={fmt(layer.conductivity)} heat_capacity={fmt(layer.volumetric_heat_capacity)}"
        )
    if stack.boundary_resistance_to_ambient > 0.0:
        lines.append(f"boundary resistance={fmt(stack.boundary_resistance_to_ambient)}")
    return "\n".join(lines) + "\n"


def parse_config(text: str, path="<config>", base: AnalysisConfig = AnalysisConfig()) -> AnalysisConfig:
    """``key = value`` lines naming :class:`AnalysisConfig` fields."""
    types = {f.name: f.type for f in fields(AnalysisConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = (part.strip() for part in body.partition("="))
        if not sep:
            raise FormatError(path, lineno, f"expected key = value, got {body!r}")
        if key not in types:
            raise FormatError(path, lineno, f"unknown config key {key!r}")
        try:
            values[key] = int(raw) if types[key] in (int, "int") else float(raw)
        except ValueError:
            raise FormatError(path, lineno, f"bad value for {key}: {raw!r}") from None
    try:
        return replace(base, **values)
    except ValueError as exc:
        raise FormatError(path, None, str(exc)) from None


def read_config(path) -> AnalysisConfig:
    return parse_config(Path(path).read_text(), path)
