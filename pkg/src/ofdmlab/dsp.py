"""Complex-signal primitives shared by the whole transmit/receive chain.

Oversampled OFDM synthesis and analysis, peak-to-average power metrics,
power normalization, and Welch PSD estimation. The data subcarriers occupy
the centre of the sampled spectrum; the outer (L-1)*K bins are the
oversampling guard band. All functions are pure and never mutate a frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .modulation import OfdmGrid


class Stage(enum.Enum):
    """Position of a time frame along the transmit pipeline."""

    RAW = "raw"
    ENCODED = "encoded"
    FILTERED = "filtered"
    BACKED_OFF = "backed_off"
    AMPLIFIED = "amplified"


@dataclass(frozen=True)
class TimeFrame:
    """Time-domain MIMO signal, one row of complex samples per antenna."""

    samples: np.ndarray
    L: int
    stage: Stage = Stage.RAW

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 2 or samples.size == 0:
            raise ValueError("frame must be a non-empty 2-D complex matrix")
        if self.L < 1:
            raise ValueError("oversampling factor must be >= 1")
        object.__setattr__(self, "samples", samples)

    @property
    def n_antennas(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def n_inband(self) -> int:
        """Number of data bins implied by the oversampling factor."""
        return self.n_samples // self.L

    def mean_power(self) -> float:
        """Mean |x|^2 over all antennas and samples."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples: np.ndarray, stage: Stage | None = None) -> "TimeFrame":
        return TimeFrame(samples, self.L, self.stage if stage is None else stage)


@dataclass(frozen=True)
class PsdEstimate:
    """Averaged periodogram, bins ordered from -fs/2 to +fs/2.

    ``bin_power`` is normalized so its sum equals the mean signal power.
    """

    bin_power: np.ndarray
    bin_spacing: float

    def __post_init__(self):
        power = np.asarray(self.bin_power, dtype=float)
        if power.ndim != 1 or power.size == 0:
            raise ValueError("bin_power must be a non-empty 1-D array")
        if np.any(power < 0):
            raise ValueError("bin powers must be nonnegative")
        object.__setattr__(self, "bin_power", power)

    @property
    def n_bins(self) -> int:
        return self.bin_power.size

    def total_power(self) -> float:
        return float(self.bin_power.sum())


@dataclass(frozen=True)
class PsdConfig:
    """Welch settings: rectangular window, no overlap, averaged segments."""

    segment_len: int | None = None


def inband_start(n_bins: int, n_inband: int) -> int:
    """First index of the centred data band in a shifted spectrum of ``n_bins``."""
    return (n_bins - n_inband) // 2


def subcarrier_frequencies(n_bins: int, n_inband: int) -> np.ndarray:
    """Signed integer frequency (cycles per frame) of each data subcarrier."""
    start = inband_start(n_bins, n_inband)
    return np.arange(n_inband) + start - n_bins // 2


def _as_symbol_matrix(grid) -> np.ndarray:
    symbols = grid.symbols if isinstance(grid, OfdmGrid) else np.asarray(grid, dtype=np.complex128)
    if symbols.ndim != 2 or symbols.size == 0:
        raise ValueError("grid must be a non-empty 2-D complex matrix")
    return symbols


def idft_oversampled(grid, L: int) -> TimeFrame:
    """Synthesize the oversampled time-domain frame of a symbol grid.

    Each antenna row of the K-bin grid is placed on the K centre bins of an
    L*K-bin spectrum and transformed with an inverse FFT scaled by 1/sqrt(K),
    so a unit-energy grid yields a unit-mean-power frame independent of L.
    """
    if L < 1:
        raise ValueError("oversampling factor must be >= 1")
    symbols = _as_symbol_matrix(grid)
    n_ant, k = symbols.shape
    n = L * k
    spectrum = np.zeros((n_ant, n), dtype=np.complex128)
    start = inband_start(n, k)
    spectrum[:, start:start + k] = symbols
    samples = (n / np.sqrt(k)) * np.fft.ifft(np.fft.ifftshift(spectrum, axes=1), axis=1)
    return TimeFrame(samples, L=L, stage=Stage.RAW)


def dft_unpad(frame: TimeFrame, n_inband: int) -> np.ndarray:
    """Forward transform a frame and keep only the centre data bins.

    Exact inverse of :func:`idft_oversampled` for in-band content. Returns a
    grid-shaped complex matrix [n_antennas, n_inband].
    """
    n = frame.n_samples
    if n % n_inband != 0:
        raise ValueError("frame length must be divisible by the data bin count")
    spectrum = np.fft.fftshift(np.fft.fft(frame.samples, axis=1), axes=1)
    start = inband_start(n, n_inband)
    return spectrum[:, start:start + n_inband] * (np.sqrt(n_inband) / n)


def papr(samples: np.ndarray) -> float:
    """Peak-to-average power ratio of a complex sequence, linear units."""
    samples = np.asarray(samples, dtype=np.complex128).reshape(-1)
    if samples.size == 0:
        raise ValueError("empty signal")
    power = np.abs(samples) ** 2
    mean = power.mean()
    if mean == 0.0:
        raise ValueError("all-zero signal has no defined PAPR")
    return float(power.max() / mean)


def papr_db(samples: np.ndarray) -> float:
    return 10.0 * np.log10(papr(samples))


def papr_mimo(frame: TimeFrame) -> float:
    """Worst-antenna PAPR of a MIMO frame, linear units."""
    return max(papr(row) for row in frame.samples)


def normalize_power(frame: TimeFrame) -> TimeFrame:
    """Scale a frame by one global real factor to unit mean power."""
    power = frame.mean_power()
    if power == 0.0:
        raise ValueError("cannot normalize an all-zero frame")
    return frame.with_samples(frame.samples / np.sqrt(power))


def estimate_psd(frame: TimeFrame, cfg: PsdConfig | None = None) -> PsdEstimate:
    """Welch-averaged periodogram over all antennas of a frame.

    Rows are chopped into non-overlapping rectangular-window segments
    (default: the whole row, i.e. one OFDM symbol) whose periodograms are
    averaged. Bin powers sum to the mean signal power (Parseval).
    """
    cfg = cfg or PsdConfig()
    seg_len = cfg.segment_len if cfg.segment_len is not None else frame.n_samples
    if seg_len < 1 or seg_len > frame.n_samples:
        raise ValueError("segment length must be in [1, frame length]")
    n_seg = frame.n_samples // seg_len
    rows = frame.samples[:, :n_seg * seg_len].reshape(frame.n_antennas * n_seg, seg_len)
    spectrum = np.fft.fftshift(np.fft.fft(rows, axis=1), axes=1)
    bin_power = (np.abs(spectrum) ** 2 / seg_len ** 2).mean(axis=0)
    return PsdEstimate(bin_power, 1.0 / seg_len)


def average_psd(estimates: list[PsdEstimate]) -> PsdEstimate:
    """Bin-wise mean of equally shaped PSD estimates (Welch across frames)."""
    if not estimates:
        raise ValueError("no estimates to average")
    spacing = estimates[0].bin_spacing
    if any(e.bin_spacing != spacing or e.n_bins != estimates[0].n_bins for e in estimates):
        raise ValueError("estimates must share bin layout")
    return PsdEstimate(np.mean([e.bin_power for e in estimates], axis=0), spacing)
