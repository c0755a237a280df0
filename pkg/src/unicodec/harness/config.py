"""Experiment configuration files (JSON) with strict key checking.

Schema (all keys optional unless marked)::

    {
      "name": "fig1-polar-sc",
      "scheme": {                                   # required
        "family": "polar" | "ldpc" | "sc_ldpc",     # required
        "label": "Polar SC",
        "code": {...},                              # family specific, see below
        "decoder": {...},                           # family specific, see below
        "all_zero": null | true | false,            # null: scheme default
        "rate": null | float                        # Eb/N0 rate override
      },
      "snr_points": [3.0, 4.0],                     # required, strictly increasing
      "stop": {"min_frame_errors": 100, "max_frames": 10000000,
               "max_wall_seconds": null},
      "seed": {"master_seed": 0, "stream_id": 0},
      "workers": null | int,                        # null: $UNICODEC_WORKERS or 1
      "chunk_frames": null | int                    # null: scheme default
    }

Code descriptors:

* polar: ``{"spec_file": path}`` or ``{"N", "K", "construction": "ga" | "5g" |
  "aed", "design_snr_db", "target_fer", "crc": hex | null, "i_min": list |
  null, "length_match": {"kind", "count"}}``.  ``K`` includes CRC bits.
* ldpc: ``{"standard": "5g_bg2", "K", "E"}``, ``{"standard": "dvbs2",
  "rate": "1_2" | "8_9", "bch_t": null | int}`` or ``{"alist": path}``.
* sc_ldpc: ``{"chain_file": path}`` or ``{"dv", "dc", "w", "L_chain", "Z",
  "seed"}``.

Decoder descriptors:

* polar: ``{"kind": "sc" | "ssc" | "scl" | "aed", "list_size", "ensemble_size",
  "kernel": "minsum" | "exact", "perm_seed"}``.
* ldpc: the fields of :class:`~unicodec.ldpc.decode.BpConfig`.
* sc_ldpc: the fields of :class:`~unicodec.sc_ldpc.WindowConfig`.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..core import DomainError, SeedSpec

#: Environment variable holding the default worker count.
WORKERS_ENV = "UNICODEC_WORKERS"


class ConfigError(DomainError):
    """Invalid or unresolvable experiment configuration."""


_CODE_KEYS = {
    "polar": {"spec_file", "N", "K", "construction", "design_snr_db", "target_fer",
              "crc", "i_min", "length_match"},
    "ldpc": {"standard", "K", "E", "rate", "bch_t", "alist"},
    "sc_ldpc": {"chain_file", "dv", "dc", "w", "L_chain", "Z", "seed"},
}
_DECODER_KEYS = {
    "polar": {"kind", "list_size", "ensemble_size", "kernel", "perm_seed"},
    "ldpc": {"kernel", "schedule", "max_iterations", "alpha", "beta", "quant_bits",
             "quant_step", "early_stop"},
    "sc_ldpc": {"window_size", "iterations_per_step", "kernel", "warmup", "schedule"},
}


def _check_keys(d, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class StopRule:
    """Per-point stop rule; the first satisfied condition ends the point."""

    min_frame_errors: int = 100
    max_frames: int = 10_000_000
    max_wall_seconds: float | None = None

    def __post_init__(self):
        if self.min_frame_errors < 1:
            raise ConfigError("min_frame_errors must be >= 1")
        if self.max_frames < 0:
            raise ConfigError("max_frames must be >= 0")
        if self.max_wall_seconds is not None and not self.max_wall_seconds > 0:
            raise ConfigError("max_wall_seconds must be positive")


@dataclass(frozen=True)
class SchemeDescriptor:
    family: str
    label: str = ""
    code: dict = field(default_factory=dict)
    decoder: dict = field(default_factory=dict)
    all_zero: bool | None = None
    rate: float | None = None

    def __post_init__(self):
        if self.family not in _CODE_KEYS:
            raise ConfigError(f"unknown code family {self.family!r}")
        _check_keys(self.code, _CODE_KEYS[self.family], "scheme.code")
        _check_keys(self.decoder, _DECODER_KEYS[self.family], "scheme.decoder")
        if self.rate is not None and not 0 < self.rate <= 1:
            raise ConfigError("scheme.rate must lie in (0, 1]")

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: SchemeDescriptor
    snr_points: tuple[float, ...]
    stop: StopRule = StopRule()
    seed: SeedSpec = SeedSpec()
    workers: int | None = None
    chunk_frames: int | None = None
    name: str = ""

    def __post_init__(self):
        pts = tuple(float(s) for s in self.snr_points)
        object.__setattr__(self, "snr_points", pts)
        if not pts:
            raise ConfigError("snr_points must be nonempty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ConfigError("snr_points must be strictly increasing")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.chunk_frames is not None and self.chunk_frames < 1:
            raise ConfigError("chunk_frames must be >= 1")

    @property
    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                w = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
            if w < 1:
                raise ConfigError(f"{WORKERS_ENV} must be >= 1")
            return w
        return 1

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "scheme": self.scheme.to_dict(),
            "snr_points": list(self.snr_points),
            "stop": asdict(self.stop),
            "seed": {"master_seed": self.seed.master_seed, "stream_id": self.seed.stream_id},
            "workers": self.workers,
            "chunk_frames": self.chunk_frames,
        }


def config_from_dict(d: dict) -> ExperimentConfig:
    _check_keys(d, {"name", "scheme", "snr_points", "stop", "seed", "workers", "chunk_frames"},
                "config")
    for key in ("scheme", "snr_points"):
        if key not in d:
            raise ConfigError(f"missing required key {key!r}")
    sch = d["scheme"]
    _check_keys(sch, {"family", "label", "code", "decoder", "all_zero", "rate"}, "scheme")
    if "family" not in sch:
        raise ConfigError("missing required key 'scheme.family'")
    stop = d.get("stop", {})
    _check_keys(stop, {"min_frame_errors", "max_frames", "max_wall_seconds"}, "stop")
    seed = d.get("seed", {})
    _check_keys(seed, {"master_seed", "stream_id"}, "seed")
    try:
        return ExperimentConfig(
            scheme=SchemeDescriptor(**sch),
            snr_points=tuple(d["snr_points"]),
            stop=StopRule(**stop),
            seed=SeedSpec(**seed),
            workers=d.get("workers"),
            chunk_frames=d.get("chunk_frames"),
            name=d.get("name", ""),
        )
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from None
    return config_from_dict(d)


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=1) + "\n")
