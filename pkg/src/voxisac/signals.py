"""Transmit frames, constellations and bit (de)mapping.

A frame stacks a pilot block of known symbols and a data block of unknown
symbols, Y = G [X_P X_D] + W, with W i.i.d. CN(0, N0).  SNR is defined per
transmit symbol: snr_db = 10 log10(E_x / N0) with E_x the constellation's
average power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class Constellation:
    """Finite symbol set with Gray bit labels.

    ``points[i]`` carries label ``labels[i]`` (row of bits); projection ties
    are broken toward the lowest point index so hard decisions are
    deterministic.
    """

    name: str
    points: np.ndarray   # (n_points,) complex
    labels: np.ndarray   # (n_points, bits_per_symbol) uint8

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return self.labels.shape[1]

    @property
    def avg_power(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def random_symbols(self, shape, rng: np.random.Generator) -> np.ndarray:
        return self.points[rng.integers(0, self.n_points, size=shape)]

    def project(self, values: np.ndarray) -> np.ndarray:
        """Nearest constellation point per entry (lowest index on ties)."""
        values = np.asarray(values)
        dist = np.abs(values[..., np.newaxis] - self.points)
        return self.points[np.argmin(dist, axis=-1)]

    def index_of(self, symbols: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        symbols = np.asarray(symbols)
        dist = np.abs(symbols[..., np.newaxis] - self.points)
        idx = np.argmin(dist, axis=-1)
        if np.any(np.take_along_axis(dist, idx[..., np.newaxis], axis=-1) > tol):
            raise ValueError("symbol not in constellation")
        return idx

    def map_bits(self, bits: np.ndarray) -> np.ndarray:
        """Inverse of demap_bits; ``bits`` has shape (..., bits_per_symbol)."""
        bits = np.asarray(bits, dtype=np.uint8)
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        keys = bits @ weights
        lut = np.empty(2 ** self.bits_per_symbol, dtype=int)
        lut[self.labels @ weights] = np.arange(self.n_points)
        return self.points[lut[keys]]


def demap_bits(symbols: np.ndarray, constellation: Constellation) -> np.ndarray:
    """Gray-labeled bits of exact constellation symbols, shape (..., bits_per_symbol)."""
    return constellation.labels[constellation.index_of(symbols)]


def make_qam4() -> Constellation:
    """Unit-power 4QAM with Gray labels: bit 0 selects the real sign, bit 1 the imaginary."""
    amp = 1.0 / np.sqrt(2.0)
    labels = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.uint8)
    points = np.array(
        [amp * ((1 - 2 * int(b0)) + 1j * (1 - 2 * int(b1))) for b0, b1 in labels]
    )
    return Constellation(name="4qam", points=points, labels=labels)


def make_qam16() -> Constellation:
    """Unit-power 16QAM, per-axis 2-bit Gray code [00, 01, 11, 10] -> [+3, +1, -1, -3]."""
    axis_levels = np.array([3.0, 1.0, -1.0, -3.0]) / np.sqrt(10.0)
    axis_bits = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)
    points, labels = [], []
    for re_i in range(4):
        for im_i in range(4):
            points.append(axis_levels[re_i] + 1j * axis_levels[im_i])
            labels.append(np.concatenate([axis_bits[re_i], axis_bits[im_i]]))
    return Constellation(name="16qam", points=np.array(points), labels=np.array(labels, dtype=np.uint8))


_CONSTELLATIONS = {"4qam": make_qam4, "qpsk": make_qam4, "16qam": make_qam16}


def get_constellation(name: str) -> Constellation:
    try:
        return _CONSTELLATIONS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}; known: {sorted(_CONSTELLATIONS)}") from None


def noise_variance(avg_power: float, snr_db: float) -> float:
    """N0 from the per-symbol SNR definition; snr_db = +inf gives N0 = 0."""
    if np.isinf(snr_db):
        return 0.0
    return avg_power / (10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class SignalFrame:
    """One transmitted frame and its received counterpart."""

    pilots: np.ndarray        # X_P, (n_ue, n_pilot)
    data: np.ndarray          # X_D, (n_ue, n_data)
    received: np.ndarray      # Y,   (n_rx_total, n_pilot + n_data)
    noise: np.ndarray         # W realization, same shape as received
    noise_var: float          # N0
    constellation: Constellation

    @property
    def n_ue(self) -> int:
        return self.pilots.shape[0]

    @property
    def n_pilot(self) -> int:
        return self.pilots.shape[1]

    @property
    def n_data(self) -> int:
        return self.data.shape[1]

    @property
    def n_slots(self) -> int:
        return self.n_pilot + self.n_data

    @property
    def pilot_ratio(self) -> float:
        return self.n_pilot / self.n_slots

    @property
    def transmit(self) -> np.ndarray:
        """Full transmit matrix [X_P X_D]."""
        return np.concatenate([self.pilots, self.data], axis=1)

    @property
    def received_pilot(self) -> np.ndarray:
        return self.received[:, : self.n_pilot]

    @property
    def received_data(self) -> np.ndarray:
        return self.received[:, self.n_pilot :]


def make_frame(
    effective: np.ndarray,
    constellation: Constellation,
    n_pilot: int,
    n_data: int,
    snr_db: float,
    rng: np.random.Generator,
) -> SignalFrame:
    """Draw uniform i.i.d. pilot and data symbols and the noisy received matrix."""
    if n_pilot < 0:
        raise ValueError("pilot length must be nonnegative")
    if n_data < 1:
        raise ValueError("data length must be at least 1")
    n_ue = effective.shape[1]
    pilots = constellation.random_symbols((n_ue, n_pilot), rng)
    data = constellation.random_symbols((n_ue, n_data), rng)
    n0 = noise_variance(constellation.avg_power, snr_db)
    noise = np.zeros((effective.shape[0], n_pilot + n_data), dtype=complex)
    if n0 > 0:
        scale = np.sqrt(n0 / 2.0)
        noise = scale * (rng.standard_normal(noise.shape) + 1j * rng.standard_normal(noise.shape))
    transmit = np.concatenate([pilots, data], axis=1)
    if effective.shape[1] != transmit.shape[0]:
        raise ShapeError(f"channel {effective.shape} incompatible with transmit {transmit.shape}")
    received = effective @ transmit + noise
    return SignalFrame(
        pilots=pilots,
        data=data,
        received=received,
        noise=noise,
        noise_var=n0,
        constellation=constellation,
    )
