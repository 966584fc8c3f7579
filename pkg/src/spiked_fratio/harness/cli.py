"""Command-line entry point: ``spiked-fratio <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..analytics import (
    AspectRatios,
    asymptotic_variance,
    spike_limit,
)
from ..contour import joint_log_density_ratio
from ..core import EigenSample, ModelDims, Setting, SpikeSpec, sample_spiked_f
from ..errors import SpikedFError
from ..lan import efficient_test, lan_statistic, local_scaling, spike_confidence_interval
from .config import ExperimentConfig
from .experiments import run_experiment
from .io import dumps, format_float
from .verify import SUITES, verify_suite

SPECTRUM_FORMAT = "spiked-fratio-spectrum/1"


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def spectrum_to_dict(sample: EigenSample) -> dict:
    return {
        "format": SPECTRUM_FORMAT,
        "dims": sample.dims.to_dict(),
        "spikes": sample.spikes.to_dict(),
        "seed": sample.seed,
        "replication": sample.replication_index,
        "values": [float(v) for v in sample.values],
    }


def load_spectrum(path: str | Path) -> EigenSample:
    data = json.loads(Path(path).read_text())
    if data.get("format") != SPECTRUM_FORMAT:
        raise SpikedFError(f"{path} is not a spectrum file")
    return EigenSample(
        np.asarray(data["values"], dtype=float),
        ModelDims(**data["dims"]),
        SpikeSpec(**data["spikes"]),
        int(data["seed"]),
        int(data["replication"]),
    )


def _emit(payload, out: str | None) -> None:
    text = dumps(payload)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_simulate(args) -> int:
    spikes = SpikeSpec(args.setting, tuple(args.h))
    dims = ModelDims(args.p, args.n1, args.n2, spikes.k)
    sample = sample_spiked_f(dims, spikes, args.seed, args.rep, route=args.route)
    _emit(spectrum_to_dict(sample), args.out)
    return 0


def cmd_analytics(args) -> int:
    ar = AspectRatios(args.c1, args.c2)
    payload = {
        "c1": ar.c1,
        "c2": ar.c2,
        "b_minus": ar.b_minus,
        "b_plus": ar.b_plus,
        "h_bar": ar.h_bar,
    }
    for h in args.h or ():
        key = f"h={format_float(h)}"
        if h > ar.h_bar:
            payload[key] = {
                "regime": "super-critical",
                "limit": spike_limit(h, ar.c1, ar.c2),
                "variance": asymptotic_variance(h, ar.c1, ar.c2, args.setting),
                "omega": local_scaling(h, ar.c1, ar.c2, args.setting),
            }
        else:
            payload[key] = {"regime": "sub-critical", "limit": ar.b_plus}
    _emit(payload, args.out)
    return 0


def cmd_density(args) -> int:
    sample = load_spectrum(args.spectrum)
    setting = args.setting or sample.spikes.setting
    methods = ("quadrature", "laplace") if args.method == "both" else (args.method,)
    payload = {"h1": args.h1, "h0": args.h0, "setting": Setting.parse(setting).number}
    for method in methods:
        payload[f"log_lr_{method}"] = joint_log_density_ratio(sample, args.h1, args.h0, setting, method=method)
    _emit(payload, args.out)
    return 0


def cmd_lan(args) -> int:
    sample = load_spectrum(args.spectrum)
    setting = args.setting or sample.spikes.setting
    stat = lan_statistic(sample.top, args.h0, sample.dims, setting)
    test = efficient_test(sample, args.h0, setting, args.alpha)
    payload = {
        "lambda1": sample.top,
        "delta": stat.delta,
        "tau_sq": stat.tau_sq,
        "z": test.z,
        "p_value_one_sided": test.p_value_one_sided,
        "p_value_two_sided": test.p_value_two_sided,
        "reject_one_sided": test.reject_one_sided,
        "reject_two_sided": test.reject_two_sided,
    }
    try:
        ci = spike_confidence_interval(sample, setting, args.level)
        payload["interval"] = {"estimate": ci.h_hat, "low": ci.low, "high": ci.high, "level": ci.level}
    except SpikedFError as exc:
        payload["interval"] = {"error": str(exc)}
    _emit(payload, args.out)
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        changes["replications"] = args.reps
    if args.out is not None:
        changes["outputs"] = args.out
    if args.method is not None:
        changes["method"] = args.method
    if changes:
        cfg = replace(cfg, **changes)
    table = run_experiment(cfg)
    print(dumps({"outputs": cfg.outputs, "manifest": table.manifest}))
    return 0 if table.manifest["failure_rate_ok"] else 1


def cmd_verify(args) -> int:
    results = verify_suite(args.suite)
    for res in results:
        print(res.line(), flush=True)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        payload = [
            {
                "criterion": r.number,
                "name": r.name,
                "passed": r.passed,
                "measured": r.measured,
                "tolerance": r.tolerance,
                "runtime_seconds": r.runtime,
            }
            for r in results
        ]
        (Path(args.out) / f"verify_{args.suite}.json").write_text(dumps(payload) + "\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spiked-fratio", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw one spectrum")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--n1", type=int, required=True)
    sim.add_argument("--n2", type=int, required=True)
    sim.add_argument("--h", type=float, nargs="*", default=[], help="spike magnitudes, descending")
    sim.add_argument("--setting", default="1", choices=["1", "2"])
    sim.add_argument("--seed", type=_u64, default=0)
    sim.add_argument("--rep", type=int, default=0)
    sim.add_argument("--route", default="direct", choices=["direct", "canonical"])
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analytics", help="edges, threshold, limits and variances")
    ana.add_argument("--c1", type=float, required=True)
    ana.add_argument("--c2", type=float, required=True)
    ana.add_argument("--h", type=float, nargs="*")
    ana.add_argument("--setting", default="1", choices=["1", "2"])
    ana.add_argument("--out")
    ana.set_defaults(func=cmd_analytics)

    den = sub.add_parser("density", help="log likelihood ratio of a spectrum file")
    den.add_argument("spectrum")
    den.add_argument("--h1", type=float, required=True)
    den.add_argument("--h0", type=float, required=True)
    den.add_argument("--setting", choices=["1", "2"])
    den.add_argument("--method", default="both", choices=["quadrature", "laplace", "both"])
    den.add_argument("--out")
    den.set_defaults(func=cmd_density)

    lan = sub.add_parser("lan", help="LAN statistic, test and interval for a spectrum file")
    lan.add_argument("spectrum")
    lan.add_argument("--h0", type=float, required=True)
    lan.add_argument("--setting", choices=["1", "2"])
    lan.add_argument("--alpha", type=float, default=0.05)
    lan.add_argument("--level", type=float, default=0.95)
    lan.add_argument("--out")
    lan.set_defaults(func=cmd_lan)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("config")
    run.add_argument("--seed", type=_u64)
    run.add_argument("--reps", type=_positive)
    run.add_argument("--out")
    run.add_argument("--method", choices=["quadrature", "laplace"])
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("suite", choices=sorted(SUITES))
    ver.add_argument("--out")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpikedFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
