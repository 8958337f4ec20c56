"""Command-line front end: ``simulate``, ``analyze``, ``compare``, ``classify``.

Exit codes: 0 success (``classify``: hermetic), 1 breached, 2 inconclusive
or usage error, 3 bad input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .moisture import BREACHED, HERMETIC, classify_hermeticity
from .network import TEMPERATURE, VOLTAGE, TransientRecord, cauer_step_response, stack_to_cauer
from .pipeline import AnalysisConfig, analyze_record
from .structure import differential_structure_function, divergence_point

log = logging.getLogger("hermeticity")

EXIT_OK = 0
EXIT_BREACHED = 1
EXIT_INCONCLUSIVE = 2
EXIT_BAD_INPUT = 3


class UsageError(Exception):
    """Inconsistent command-line options."""


def _config(args) -> AnalysisConfig:
    config = io.read_config(args.config) if args.config else AnalysisConfig()
    return config.updated(
        points_per_decade=args.points_per_decade,
        bayes_iterations=args.iterations,
        smoothing_halfwidth=args.smoothing,
        foster_stages=args.stages,
        divergence_rel_tolerance=args.tolerance,
        classifier_threshold=args.threshold,
        early_cut_time=args.early_cut,
    )


def cmd_simulate(args) -> int:
    spec = io.read_stack(args.stack)
    if args.noise and args.seed is None:
        raise UsageError("--noise needs an explicit --seed")
    n = int(round(np.log10(args.t_max / args.t_min) * args.samples_per_decade)) + 1
    times = np.logspace(np.log10(args.t_min), np.log10(args.t_max), n)
    net = stack_to_cauer(spec.stack, args.slices or spec.slices_per_layer, spec.terminal_capacitance)
    values = cauer_step_response(net, args.power, times).values
    if args.noise:
        rng = np.random.default_rng(args.seed)
        values = values + rng.normal(0.0, args.noise * abs(values[-1]), size=values.shape)
    sensitivity = None if args.sensitivity is None else args.sensitivity * 1e-3
    kind = TEMPERATURE
    if args.voltage:
        if sensitivity is None:
            raise UsageError("--voltage needs --sensitivity")
        values, kind = values * sensitivity, VOLTAGE
    io.write_transient(args.output, TransientRecord(times, values, args.power, sensitivity, kind))
    log.info("wrote %s (%d samples, steady %.6g K/W)", args.output, n, spec.stack.steady_resistance)
    return EXIT_OK


def _analyze_one(path: str, outdir: str, config: AnalysisConfig) -> dict:
    record = io.read_transient(path)
    result = analyze_record(record, config)
    stem = Path(path).stem
    out = Path(outdir)
    io.write_spectrum(out / f"{stem}.spectrum.csv", result.spectrum)
    io.write_structure_function(
        out / f"{stem}.sf.csv", result.structure_function, {"source": Path(path).name}
    )
    io.write_differential(
        out / f"{stem}.dsf.csv", differential_structure_function(result.structure_function)
    )
    summary = {
        "source": Path(path).name,
        "power_W": record.power_step,
        "kind": record.kind,
        "settled": result.steady_resistance is not None,
        "steady_state_resistance_K_per_W": result.steady_resistance,
        "identified_resistance_K_per_W": result.identified_resistance,
        "foster_stages": len(result.foster),
        "warning": result.settle_message,
        "config": {k: getattr(config, k) for k in config.__dataclass_fields__},
    }
    io.write_atomic(out / f"{stem}.summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_analyze(args) -> int:
    config = _config(args)
    Path(args.output_dir).mkdir(parents=True, exist_ok=True)
    # Fail on unreadable inputs before any work starts.
    for path in args.transients:
        io.read_transient(path)
    if args.jobs > 1 and len(args.transients) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_analyze_one, p, args.output_dir, config) for p in args.transients]
            summaries = [f.result() for f in futures]
    else:
        summaries = [_analyze_one(p, args.output_dir, config) for p in args.transients]
    for s in summaries:
        if s["settled"]:
            steady = f"{s['steady_state_resistance_K_per_W']:.6g} K/W"
        else:
            steady = "withheld"
            print(f"warning: {s['source']}: {s['warning']}; steady-state resistance withheld", file=sys.stderr)
        print(f"{s['source']}: R_th(steady)={steady} R_th(identified)={s['identified_resistance_K_per_W']:.6g} K/W")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _config(args)
    sf_a = io.read_structure_function(args.sf_a)
    sf_b = io.read_structure_function(args.sf_b)
    result = divergence_point(sf_a, sf_b, config.divergence_rel_tolerance)
    report = {
        "divergence_point_K_per_W": result.resistance,
        "flag": result.flag,
        "total_resistance_a_K_per_W": sf_a.total_resistance,
        "total_resistance_b_K_per_W": sf_b.total_resistance,
    }
    if args.json:
        io.write_atomic(args.json, json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"divergence_point={result.resistance:.6g} K/W flag={result.flag}")
    return EXIT_OK


def cmd_classify(args) -> int:
    config = _config(args)
    reference = io.read_structure_function(args.reference)
    measured = io.read_structure_function(args.measured)
    verdict = classify_hermeticity(
        reference, measured, config.classifier_threshold, config.divergence_rel_tolerance
    )
    print(
        f"{verdict.status}: sensing-section change={verdict.sensing_layer_resistance_change:+.4g} "
        f"divergence={verdict.divergence_point:.6g} K/W ({verdict.reason})"
    )
    return {HERMETIC: EXIT_OK, BREACHED: EXIT_BREACHED}.get(verdict.status, EXIT_INCONCLUSIVE)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("analysis configuration (flag > --config file > default)")
    g.add_argument("--config", help="key = value configuration file")
    g.add_argument("--points-per-decade", type=int)
    g.add_argument("--iterations", type=int, help="Bayes deconvolution iterations")
    g.add_argument("--smoothing", type=int, help="moving-average halfwidth before differentiation")
    g.add_argument("--stages", type=int, help="Foster stages binned from the spectrum")
    g.add_argument("--tolerance", type=float, help="divergence tolerance on log10 capacitance")
    g.add_argument("--threshold", type=float, help="sensing-section drop that counts as breached")
    g.add_argument("--early-cut", type=float, help="discard samples before this time [s]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hermeticity", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="step response of a layer stack")
    p.add_argument("stack", help="stack description file")
    p.add_argument("-o", "--output", required=True, help="transient CSV to write")
    p.add_argument("--power", type=float, default=0.1, help="power step [W] (default 0.1)")
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--samples-per-decade", type=int, default=48)
    p.add_argument("--slices", type=int, help="override slices per layer from the stack file")
    p.add_argument("--sensitivity", type=float, help="sensitivity [mV/K] written to the header")
    p.add_argument("--voltage", action="store_true", help="write voltage instead of temperature")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma relative to final rise")
    p.add_argument("--seed", type=int, help="noise seed (u64)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="NID, spectrum and structure function of transients")
    p.add_argument("transients", nargs="+")
    p.add_argument("-o", "--output-dir", default=".")
    p.add_argument("-j", "--jobs", type=int, default=1, help="process files in parallel")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", help="divergence point of two structure functions")
    p.add_argument("sf_a")
    p.add_argument("sf_b")
    p.add_argument("--json", help="write the report as JSON")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("classify", help="hermeticity verdict against a dry reference")
    p.add_argument("reference")
    p.add_argument("measured")
    _add_config_flags(p)
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
