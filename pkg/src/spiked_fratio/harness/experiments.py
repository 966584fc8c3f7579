"""Seeded Monte Carlo campaigns: run, summarize and persist.

Each replication draws from its own ``(seed, replication)`` stream, so
replications can run in any order or concurrently.  Rows are reduced in
replication order, which makes every emitted number independent of the
worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .. import __version__
from ..analytics import (
    AspectRatios,
    asymptotic_variance,
    spike_centering,
    spike_limit,
    stieltjes_mx0,
)
from ..contour import (
    ContourKind,
    DensityInput,
    contour_integral_s1,
    contour_integral_s2,
    default_contour,
    joint_log_density_ratio,
    laplace_s1,
    laplace_s2,
)
from ..core import ModelDims, Setting, SpikeSpec, sample_spiked_f, sample_top_eigenvalue
from ..errors import NumericalError, SpikedFError
from ..lan import LocalParam, lan_statistic, local_scaling, loglr_closed_s1, loglr_closed_s2
from .config import ExperimentConfig, ExperimentKind
from .io import format_float, write_json
from .stats import Summary, summarize

THREADS_ENV = "SPIKED_FRATIO_THREADS"
MAX_FAILURE_RATE = 1e-3

Row = tuple[int, str, float]


class ExperimentError(SpikedFError):
    """A replication failed with a non-recoverable error."""

    def __init__(self, message: str, replication: int, stage: str) -> None:
        super().__init__(f"replication {replication}, stage {stage}: {message}")
        self.replication = replication
        self.stage = stage


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


@dataclass
class ResultTable:
    rows: list[Row]
    summary: dict[str, Summary]
    manifest: dict
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return self.manifest.get("failure_rate", 0.0)

    def values(self, statistic: str) -> np.ndarray:
        return np.array([v for _, s, v in self.rows if s == statistic])

    def statistics(self) -> list[str]:
        return list(dict.fromkeys(s for _, s, _ in self.rows))


def summarize_rows(rows: Iterable[Row], references: dict[str, tuple[float, float]] | None = None) -> dict[str, Summary]:
    """Per-statistic summary, recomputed from rows in replication order."""
    grouped: dict[str, list[tuple[int, float]]] = {}
    for rep, name, value in rows:
        grouped.setdefault(name, []).append((rep, value))
    references = references or {}
    out = {}
    for name, items in grouped.items():
        items.sort(key=lambda item: item[0])
        out[name] = summarize([v for _, v in items], references.get(name))
    return out


# --- replication kernels -------------------------------------------------------


def _phase_sweep(cfg: ExperimentConfig, rep: int) -> list[Row]:
    rows = []
    k = cfg.dims.with_k(1)
    for h in cfg.gamma_grid:
        lam = sample_top_eigenvalue(k, SpikeSpec(cfg.setting, (h,)), cfg.seed, rep)
        rows.append((rep, f"lambda1[h={h!r}]", lam))
    return rows


def _fluctuation(cfg: ExperimentConfig, rep: int) -> list[Row]:
    h = cfg.spikes.h[0]
    lam = sample_top_eigenvalue(cfg.dims, cfg.spikes, cfg.seed, rep)
    return [
        (rep, "lambda1", lam),
        (rep, "delta", math.sqrt(cfg.dims.p) * (lam - spike_centering(h, cfg.dims))),
    ]


def _null_spike(cfg: ExperimentConfig) -> float:
    return cfg.h0 if cfg.h0 is not None else cfg.spikes.h[0]


def _lan(cfg: ExperimentConfig, rep: int) -> list[Row]:
    h0 = _null_spike(cfg)
    lam = sample_top_eigenvalue(cfg.dims, cfg.spikes, cfg.seed, rep)
    closed = loglr_closed_s1 if cfg.setting is Setting.COVARIANCE else loglr_closed_s2
    rows = [(rep, "lambda1", lam)]
    for gamma in cfg.gamma_grid:
        lp = LocalParam.from_gamma(h0, gamma, cfg.dims, cfg.setting)
        quad = lan_statistic(lam, h0, cfg.dims, cfg.setting, lp.theta).log_lr_lan
        exact = closed(gamma, lam, h0, cfg.dims)
        rows += [
            (rep, f"closed[gamma={gamma!r}]", exact),
            (rep, f"lan[gamma={gamma!r}]", quad),
            (rep, f"gap[gamma={gamma!r}]", exact - quad),
        ]
    return rows


def _density(cfg: ExperimentConfig, rep: int) -> list[Row]:
    h0 = _null_spike(cfg)
    sample = sample_spiked_f(cfg.dims, cfg.spikes, cfg.seed, rep)
    inp = DensityInput.from_sample(sample)
    comparison = laplace_ratio(inp, h0, cfg.setting)
    rows = [
        (rep, "lambda1", sample.top),
        (rep, "quadrature_over_laplace", comparison.ratio),
        (rep, "tail_ratio", comparison.tail_ratio),
    ]
    for gamma in cfg.gamma_grid:
        h1 = h0 + gamma / math.sqrt(cfg.dims.p)
        q = joint_log_density_ratio(inp, h1, h0, cfg.setting, method="quadrature")
        lap = joint_log_density_ratio(inp, h1, h0, cfg.setting, method="laplace")
        rows += [(rep, f"quadrature[gamma={gamma!r}]", q), (rep, f"laplace[gamma={gamma!r}]", lap)]
    return rows


def _formula_audit(cfg: ExperimentConfig, rep: int) -> list[Row]:
    dims = cfg.dims
    ar = AspectRatios.from_dims(dims)
    rows = [(rep, "b_minus", ar.b_minus), (rep, "b_plus", ar.b_plus), (rep, "h_bar", ar.h_bar)]
    for h in cfg.spikes.h:
        if h <= ar.h_bar:
            continue
        x = spike_limit(h, dims.c1, dims.c2)
        point = stieltjes_mx0(x, dims.c1, dims.c2)
        rows += [
            (rep, f"x[h={h!r}]", x),
            (rep, f"tau_sq[h={h!r}]", asymptotic_variance(h, dims.c1, dims.c2, cfg.setting)),
            (rep, f"omega[h={h!r}]", local_scaling(h, dims.c1, dims.c2, cfg.setting)),
            (rep, f"m0_residual[h={h!r}]", point.m0 + 1 / (h + dims.c1)),
        ]
    return rows


KERNELS: dict[ExperimentKind, Callable[[ExperimentConfig, int], list[Row]]] = {
    ExperimentKind.PHASE_SWEEP: _phase_sweep,
    ExperimentKind.FLUCTUATION_NORMALITY: _fluctuation,
    ExperimentKind.LAN_CONSISTENCY: _lan,
    ExperimentKind.DENSITY_CROSS_CHECK: _density,
    ExperimentKind.FORMULA_AUDIT: _formula_audit,
}


@dataclass(frozen=True)
class LaplaceComparison:
    ratio: float
    tail_ratio: float


def laplace_ratio(inp: DensityInput, h0: float, setting: Setting | str | int) -> LaplaceComparison:
    """Real ratio of the quadrature loop integral to its Laplace approximation at ``h0``."""
    setting = Setting.parse(setting)
    if setting is Setting.COVARIANCE:
        spec = default_contour(inp, ContourKind.SETTING_ONE_K, h0)
        quad = contour_integral_s1(inp, h0, spec)
        lap = laplace_s1(inp, h0)
    else:
        spec = default_contour(inp, ContourKind.SETTING_TWO_C, h0)
        quad = contour_integral_s2(inp, h0, spec)
        lap = laplace_s2(inp, h0)
    log_ratio = quad.log_value.log_abs - lap.log_value.log_abs
    phase = math.remainder(quad.log_value.phase - lap.log_value.phase, 2 * math.pi)
    return LaplaceComparison(math.exp(log_ratio) * math.cos(phase), quad.tail_ratio)


def _references(cfg: ExperimentConfig) -> dict[str, tuple[float, float]]:
    if cfg.experiment_kind is ExperimentKind.FLUCTUATION_NORMALITY:
        h = cfg.spikes.h[0]
        tau = math.sqrt(asymptotic_variance(h, cfg.dims.c1, cfg.dims.c2, cfg.setting))
        return {"delta": (0.0, tau)}
    return {}


# --- runner --------------------------------------------------------------------


def run_experiment(
    config: ExperimentConfig,
    write: bool = True,
    threads: int | None = None,
) -> ResultTable:
    """Execute ``config`` and, when ``write`` is set, persist rows, summary and manifest.

    Replications failing with a :class:`NumericalError` are recorded and
    excluded; any other module error aborts the run after flushing the rows
    completed so far.
    """
    kernel = KERNELS[config.experiment_kind]
    threads = worker_count() if threads is None else max(1, int(threads))
    reps = range(1) if config.experiment_kind is ExperimentKind.FORMULA_AUDIT else range(config.replications)
    out_dir = Path(config.outputs)
    start = time.perf_counter()

    def job(rep: int):
        try:
            return rep, kernel(config, rep), None
        except NumericalError as exc:
            return rep, [], exc
        except SpikedFError as exc:
            return rep, None, exc

    rows: list[Row] = []
    failures: list[tuple[int, str]] = []
    handle = writer = None
    if write:
        out_dir.mkdir(parents=True, exist_ok=True)
        handle = open(out_dir / "rows.csv", "w", newline="")
        writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(["replication", "statistic", "value"])
    try:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map yields in submission order, so rows stream out sorted.
            for rep, rep_rows, err in pool.map(job, reps):
                if rep_rows is None:
                    raise ExperimentError(str(err), rep, config.experiment_kind.value) from err
                if err is not None:
                    failures.append((rep, str(err)))
                    continue
                rows.extend(rep_rows)
                if writer is not None:
                    writer.writerows((r, s, format_float(v)) for r, s, v in rep_rows)
                    handle.flush()
    finally:
        if handle is not None:
            handle.close()

    summary = summarize_rows(rows, _references(config))
    attempted = len(reps)
    manifest = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "code_version": __version__,
        "wall_time_seconds": time.perf_counter() - start,
        "replications_attempted": attempted,
        "replications_failed": len(failures),
        "failure_rate": len(failures) / attempted,
        "failure_rate_ok": len(failures) / attempted <= MAX_FAILURE_RATE,
        "failures": [{"replication": r, "error": e} for r, e in failures],
    }
    if write:
        write_json(out_dir / "summary.json", {k: v.to_dict() for k, v in summary.items()})
        write_json(out_dir / "manifest.json", manifest)
    return ResultTable(rows, summary, manifest, failures)


def read_rows(path: str | Path) -> list[Row]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [(int(r), s, float(v)) for r, s, v in reader]


def rerun_from_manifest(path: str | Path, outputs: str | Path | None = None) -> ResultTable:
    """Regenerate a table from a saved manifest."""
    data = json.loads(Path(path).read_text())
    cfg_data = dict(data["config"])
    if outputs is not None:
        cfg_data["outputs"] = str(outputs)
    return run_experiment(ExperimentConfig.from_dict(cfg_data))
