"""Sensing and communication performance metrics.

Voxel occupancy error rate (VOER) counts hard-decision disagreements per
voxel; it equals the environment sparsity for the blind all-empty estimator,
which serves as the absolute sensing baseline.  Symbol and bit error rates
use exact label lookup on hard decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .signals import Constellation, demap_bits

#: Two-sided 95% normal quantile used for confidence half-widths.
Z95 = 1.959963984540054


def _check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape {a.shape} does not match {b.shape}")


def voer(v_true: np.ndarray, v_hard: np.ndarray) -> float:
    """Fraction of voxels whose hard occupancy decision differs from the truth."""
    v_true = np.asarray(v_true)
    v_hard = np.asarray(v_hard)
    _check_same_shape(v_true, v_hard, "voer")
    return float(np.count_nonzero(v_true != v_hard) / v_true.size)


def mse_v(v_true: np.ndarray, v_soft: np.ndarray) -> float:
    """Mean squared error of the soft occupancy estimate."""
    v_true = np.asarray(v_true)
    v_soft = np.asarray(v_soft)
    _check_same_shape(v_true, v_soft, "mse_v")
    return float(np.mean(np.abs(v_true - v_soft) ** 2))


def ser(sym_true: np.ndarray, sym_hard: np.ndarray) -> float:
    """Symbol mismatch rate of hard decisions."""
    sym_true = np.asarray(sym_true)
    sym_hard = np.asarray(sym_hard)
    _check_same_shape(sym_true, sym_hard, "ser")
    return float(np.count_nonzero(sym_true != sym_hard) / sym_true.size)


def ber(bits_true: np.ndarray, bits_est: np.ndarray) -> float:
    """Hamming distance over the total number of bits."""
    bits_true = np.asarray(bits_true)
    bits_est = np.asarray(bits_est)
    _check_same_shape(bits_true, bits_est, "ber")
    return float(np.count_nonzero(bits_true != bits_est) / bits_true.size)


def ber_symbols(sym_true: np.ndarray, sym_hard: np.ndarray, constellation: Constellation) -> float:
    """BER between two hard symbol arrays via their Gray labels."""
    return ber(demap_bits(sym_true, constellation), demap_bits(sym_hard, constellation))


@dataclass(frozen=True)
class MetricReport:
    """Aggregate of one metric over Monte-Carlo trials."""

    name: str
    mean: float
    half_width: float   # 95% normal-approximation confidence half-width
    trials: int

    @classmethod
    def from_samples(cls, name: str, samples) -> "MetricReport":
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n == 0:
            raise ValueError("cannot aggregate zero trials")
        std = float(samples.std(ddof=1)) if n > 1 else 0.0
        return cls(name=name, mean=float(samples.mean()), half_width=Z95 * std / np.sqrt(n), trials=n)
