"""Distortion chain sampling, application, alignment, and replay.

A chain is an ordered list of DistortionSpec records. Sampling draws the
chain length from a count distribution over {1..5}, then picks types
without replacement proportional to their selection weights, then asks
each type's sampler for parameters; every spec also receives its own rng
sub-seed. Because all randomness an applier consumes flows from that
logged sub-seed, `apply_chain` is a pure function of (signal, chain,
assets) — replaying a logged chain is bit-exact.

Chains that contain delay-introducing types (short delay, impulse
response convolution) are re-aligned against the clean reference by the
peak of the full normalized cross-correlation, ties broken toward the
smaller absolute offset, and both signals are trimmed to the common
support.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from ..errors import ConfigError, NumericError, ScorewaveError
from ..signal import Signal
from .primitives import DEFAULT_BOUNDS, PRIMITIVES

DEFAULT_COUNT_PROBS = (0.35, 0.45, 0.15, 0.04, 0.01)
CLIP_LEVEL = 4.0


class SoftClipWarning(UserWarning):
    """Raised (as a warning) when the chain output hit the soft-clip guard."""


def default_weights() -> dict[str, float]:
    return {name: float(p.weight) for name, p in PRIMITIVES.items()}


@dataclass(frozen=True)
class ChainConfig:
    """Knobs for chain sampling: count distribution over {1..5} distortions,
    per-type selection weights, parameter bounds, and the optional asset
    pools (noise recordings / room impulse responses, arrays at the
    processed signal's sample rate)."""

    count_probs: tuple = DEFAULT_COUNT_PROBS
    weights: dict = field(default_factory=default_weights)
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    noise_pool: tuple = ()
    rir_pool: tuple = ()
    clip_level: float = CLIP_LEVEL

    def __post_init__(self):
        probs = np.asarray(self.count_probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ConfigError("count_probs must be a non-empty 1-D sequence")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ConfigError("count_probs must be non-negative and sum to 1")
        if not self.weights:
            raise ConfigError("at least one distortion type must be enabled")
        for name, w in self.weights.items():
            if name not in PRIMITIVES:
                raise ConfigError(f"unknown distortion type {name!r}")
            if not w > 0:
                raise ConfigError(f"weight for {name!r} must be > 0")
        for name in self.bounds:
            if name not in PRIMITIVES:
                raise ConfigError(f"bounds given for unknown type {name!r}")

    def assets(self) -> dict:
        return {"noise_pool": self.noise_pool, "rir_pool": self.rir_pool}

    def available_types(self) -> list[str]:
        """Enabled types whose required asset pool is non-empty."""
        out = []
        for name in self.weights:
            needs = PRIMITIVES[name].needs
            if needs and not self.assets().get(needs):
                continue
            out.append(name)
        if not out:
            raise ConfigError("no distortion types available (check asset pools)")
        return out


@dataclass(frozen=True)
class DistortionSpec:
    """One applied distortion: type tag, full parameter record, rng sub-seed."""

    kind: str
    params: dict
    seed: int

    def __post_init__(self):
        if self.kind not in PRIMITIVES:
            raise ConfigError(f"unknown distortion type {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, record: dict) -> "DistortionSpec":
        return cls(kind=record["kind"], params=dict(record["params"]),
                   seed=int(record["seed"]))


@dataclass(frozen=True)
class DistortedPair:
    """Aligned (clean, distorted) signals plus the chain that produced them."""

    clean: Signal
    distorted: Signal
    chain: tuple
    offset: int

    def __post_init__(self):
        if not self.chain:
            raise ConfigError("a distortion chain must contain at least one step")
        if len(self.clean) != len(self.distorted):
            raise ConfigError("clean and distorted must have equal length after alignment")


def sample_chain(cfg: ChainConfig, rng) -> tuple:
    """Draw one chain: length from cfg.count_probs (over 1..len(probs)
    distortions), then types without replacement proportional to weight,
    then per-type parameters and an rng sub-seed for each step."""
    probs = np.asarray(cfg.count_probs, dtype=np.float64)
    count = 1 + int(rng.choice(probs.size, p=probs / probs.sum()))
    available = cfg.available_types()
    count = min(count, len(available))
    specs = []
    for _ in range(count):
        w = np.array([cfg.weights[name] for name in available], dtype=np.float64)
        name = available.pop(int(rng.choice(w.size, p=w / w.sum())))
        bounds = cfg.bounds.get(name, DEFAULT_BOUNDS[name])
        params = PRIMITIVES[name].sample(rng, bounds)
        seed = int(rng.integers(0, 2**63))
        specs.append(DistortionSpec(kind=name, params=params, seed=seed))
    return tuple(specs)


def _align_offset(clean: np.ndarray, distorted: np.ndarray) -> int:
    """Lag of the normalized full cross-correlation peak (positive = the
    distorted signal is delayed); exact ties go to the smaller |lag|."""
    corr = scipy.signal.correlate(distorted, clean, mode="full", method="fft")
    norm = np.linalg.norm(clean) * np.linalg.norm(distorted)
    if norm > 0:
        corr = corr / norm
    lags = scipy.signal.correlation_lags(distorted.size, clean.size, mode="full")
    near_peak = np.flatnonzero(corr >= corr.max() - 1e-12)
    return int(lags[near_peak[np.argmin(np.abs(lags[near_peak]))]])


def apply_chain(x: Signal, chain, cfg: ChainConfig | None = None) -> DistortedPair:
    """Apply the chain's steps in order. Every applier draws from a fresh
    generator seeded with its spec's sub-seed, so the result depends only
    on (x, chain, asset pools). Failures propagate with the chain index.
    Output exceeding ±clip_level is soft-clipped with a warning."""
    cfg = cfg if cfg is not None else ChainConfig()
    chain = tuple(chain)
    if not chain:
        raise ConfigError("a distortion chain must contain at least one step")
    assets = cfg.assets()
    y = x.samples.copy()
    for i, spec in enumerate(chain):
        prim = PRIMITIVES[spec.kind]
        try:
            y = prim.apply(y, x.sample_rate, spec.params, np.random.default_rng(spec.seed), assets)
        except ScorewaveError as exc:
            raise type(exc)(f"chain step {i} ({spec.kind}): {exc}") from exc
        y = np.asarray(y, dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"chain step {i} ({spec.kind}) produced non-finite samples")

    peak = float(np.max(np.abs(y))) if y.size else 0.0
    if peak > cfg.clip_level:
        warnings.warn(
            f"chain output peaked at {peak:.3g}; soft-clipped to ±{cfg.clip_level}",
            SoftClipWarning,
            stacklevel=2,
        )
        y = cfg.clip_level * np.tanh(y / cfg.clip_level)

    clean = x.samples
    offset = 0
    if any(PRIMITIVES[s.kind].introduces_delay for s in chain):
        offset = _align_offset(clean, y)
    start_d, start_c = max(offset, 0), max(-offset, 0)
    length = min(y.size - start_d, clean.size - start_c)
    if length <= 0:
        raise NumericError("alignment left no overlapping support")
    return DistortedPair(
        clean=Signal(samples=clean[start_c : start_c + length], sample_rate=x.sample_rate),
        distorted=Signal(samples=y[start_d : start_d + length], sample_rate=x.sample_rate),
        chain=chain,
        offset=offset,
    )


def chain_to_json(chain) -> str:
    """Serialize a chain for the run log; `chain_from_json` round-trips it."""
    return json.dumps([spec.to_dict() for spec in chain])


def chain_from_json(text: str) -> tuple:
    return tuple(DistortionSpec.from_dict(rec) for rec in json.loads(text))
