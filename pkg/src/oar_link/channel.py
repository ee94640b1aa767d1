"""Power normalisation, AWGN, and the capacity-based outage model for digital baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FULL_LENGTH = 2880  # reference length for length-scaled noise (all three streams)
NOISE_MODES = ("per_symbol", "length_scaled")


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float = math.inf
    noise_mode: str = "per_symbol"
    seed: int = 0

    def __post_init__(self):
        if self.noise_mode not in NOISE_MODES:
            raise ValueError(f"noise_mode must be one of {NOISE_MODES}")
        if math.isnan(self.snr_db):
            raise ValueError("snr_db is NaN")


@dataclass(frozen=True)
class DigitalLinkConfig:
    bits_per_symbol: float = 2.0        # 16-QAM with a rate-1/2 code
    capacity_penalty_db: float = 1.5
    block_size_bits: int = 8192
    per_block_snr_jitter_db: float = 0.0

    def __post_init__(self):
        if self.bits_per_symbol <= 0:
            raise ValueError("bits_per_symbol must be > 0")
        if self.block_size_bits <= 0:
            raise ValueError("block_size_bits must be > 0")
        if self.per_block_snr_jitter_db < 0:
            raise ValueError("per_block_snr_jitter_db must be >= 0")


@dataclass(frozen=True)
class OutageResult:
    outage: bool
    blocks_failed: int
    blocks_total: int


def power_scale(x: np.ndarray) -> float:
    """Gain that brings the mean power of ``x`` to one (1.0 for all-zero input)."""
    x = np.asarray(x, dtype=float)
    energy = float(np.dot(x.ravel(), x.ravel()))
    if energy == 0.0:
        return 1.0
    return math.sqrt(x.size / energy)


def normalize_power(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot normalise an empty sequence")
    return x * power_scale(x)


def noise_variance(snr_db: float, length: int, noise_mode: str = "per_symbol") -> float:
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    var = 10.0 ** (-snr_db / 10.0)
    if noise_mode == "length_scaled":
        var *= FULL_LENGTH / length
    return var


def awgn(x: np.ndarray, cfg: ChannelConfig, length: int | None = None) -> np.ndarray:
    """Add white Gaussian noise at ``cfg.snr_db`` to a unit-power sequence.

    ``length`` is the transmitted length used by length_scaled mode when
    ``x`` is only part of the transmission (default ``x.size``).
    """
    x = np.asarray(x, dtype=float)
    var = noise_variance(cfg.snr_db, length or x.size, cfg.noise_mode)
    if var == 0.0:
        return x.copy()
    rng = np.random.default_rng(cfg.seed)
    return x + rng.normal(0.0, math.sqrt(var), size=x.shape)


def capacity(snr_db: float) -> float:
    """log2(1 + SNR) in bits per symbol."""
    return math.log2(1.0 + 10.0 ** (snr_db / 10.0))


def outage_threshold_db(cfg: DigitalLinkConfig = DigitalLinkConfig()) -> float:
    """SNR at which the penalised capacity equals the link's bits per symbol."""
    return 10.0 * math.log10(2.0 ** cfg.bits_per_symbol - 1.0) + cfg.capacity_penalty_db


def digital_outage(payload_bits: int, snr_db: float, cfg: DigitalLinkConfig = DigitalLinkConfig(),
                   seed: int = 0) -> OutageResult:
    """Segment the payload into transport blocks; any failed block is an outage.

    Block k fails when the bits per symbol strictly exceed the capacity at
    ``snr_db - penalty + jitter_k``.
    """
    if payload_bits < 0:
        raise ValueError("payload_bits must be >= 0")
    n_blocks = -(-int(payload_bits) // cfg.block_size_bits)
    if n_blocks == 0:
        return OutageResult(False, 0, 0)
    if cfg.per_block_snr_jitter_db > 0:
        jitter = np.random.default_rng(seed).normal(0.0, cfg.per_block_snr_jitter_db, n_blocks)
    else:
        jitter = np.zeros(n_blocks)
    eff = snr_db - cfg.capacity_penalty_db + jitter
    cap = np.log2(1.0 + 10.0 ** (eff / 10.0))
    failed = int(np.count_nonzero(cfg.bits_per_symbol > cap))
    return OutageResult(failed > 0, failed, n_blocks)


def baseline_payload_model(rate_kbps: float, audio_kbps: float = 6.0, text_bits: int = 512,
                           duration_s: float = 1.0) -> int:
    """Bits per sample for a separated digital baseline.

    Image bits at ``rate_kbps`` plus audio at ``audio_kbps`` over a nominal
    one-second sample, plus a fixed text payload.
    """
    if min(rate_kbps, audio_kbps, text_bits) < 0:
        raise ValueError("rates must be >= 0")
    return int(round(rate_kbps * 1000 * duration_s + audio_kbps * 1000 * duration_s)) + int(text_bits)
