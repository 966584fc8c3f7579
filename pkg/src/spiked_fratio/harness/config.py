"""Experiment configuration with a versioned, lossless JSON form."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..core import ModelDims, Setting, SpikeSpec
from ..errors import ConfigurationError

SCHEMA_VERSION = 1


class ExperimentKind(str, enum.Enum):
    PHASE_SWEEP = "PhaseSweep"
    FLUCTUATION_NORMALITY = "FluctuationNormality"
    LAN_CONSISTENCY = "LanConsistency"
    DENSITY_CROSS_CHECK = "DensityCrossCheck"
    FORMULA_AUDIT = "FormulaAudit"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to regenerate an experiment bit for bit.

    ``gamma_grid`` holds the spike grid for a phase sweep and the local
    deviations ``gamma`` for LAN and density experiments.
    """

    name: str
    dims: ModelDims
    spikes: SpikeSpec
    experiment_kind: ExperimentKind
    replications: int = 1
    seed: int = 0
    h0: float | None = None
    gamma_grid: tuple[float, ...] = ()
    outputs: str = "results"
    method: str = "quadrature"
    schema_version: int = field(default=SCHEMA_VERSION)

    def __post_init__(self) -> None:
        object.__setattr__(self, "experiment_kind", ExperimentKind(self.experiment_kind))
        grid = tuple(float(g) for g in self.gamma_grid)
        if any(not math.isfinite(g) for g in grid):
            raise ConfigurationError("gamma_grid must contain finite values")
        object.__setattr__(self, "gamma_grid", grid)
        if isinstance(self.replications, bool) or int(self.replications) != self.replications:
            raise ConfigurationError("replications must be an integer")
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must fit in an unsigned 64-bit integer")
        if self.method not in ("quadrature", "laplace"):
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(
                f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}"
            )
        if self.spikes.k != self.dims.k:
            raise ConfigurationError(
                f"dims.k={self.dims.k} does not match {self.spikes.k} spike values"
            )

    @property
    def setting(self) -> Setting:
        return self.spikes.setting

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "experiment_kind": self.experiment_kind.value,
            "dims": self.dims.to_dict(),
            "spikes": self.spikes.to_dict(),
            "h0": self.h0,
            "gamma_grid": list(self.gamma_grid),
            "replications": self.replications,
            "seed": self.seed,
            "outputs": self.outputs,
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        version = data.pop("schema_version", None)
        if version is None:
            raise ConfigurationError("config is missing schema_version")
        try:
            dims = ModelDims(**data.pop("dims"))
            spikes = SpikeSpec(**data.pop("spikes"))
            return cls(dims=dims, spikes=spikes, schema_version=version, **data)
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc

    def to_json(self) -> str:
        # repr-based float encoding in json is already shortest round-trip.
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()
