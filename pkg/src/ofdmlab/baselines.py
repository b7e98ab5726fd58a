"""Classical references: clipping-and-filtering, selected mapping, MLE, ZF.

Selected mapping uses one shared phase sequence per candidate across all
antennas and picks the candidate whose worst-antenna PAPR is lowest; the
chosen index is assumed known at the receiver. MLE searches all candidate
symbol vectors per subcarrier, which is exact but exponential in the
antenna count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .dsp import Stage, TimeFrame, idft_oversampled, papr
from .modulation import OfdmGrid, nearest_level_index, pam_levels, qam_alphabet
from .rf import bandpass_filter

MLE_CANDIDATE_GUARD = 2 ** 20
SLM_PHASES = np.array([1.0, -1.0, 1.0j, -1.0j])


@dataclass(frozen=True)
class ClipConfig:
    """Amplitude limit relative to the RMS level, in dB."""

    clip_ratio_db: float = 4.08

    def __post_init__(self):
        if not np.isfinite(self.clip_ratio_db):
            raise ValueError("clip ratio must be finite")


@dataclass(frozen=True)
class SlmCodebook:
    """Candidate phase sequences; entry 0 is always the identity sequence."""

    phases: np.ndarray      # [n_candidates, n_subcarriers], unit modulus
    seed: int

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=np.complex128)
        if phases.ndim != 2 or phases.size == 0:
            raise ValueError("phases must be [n_candidates, n_subcarriers]")
        if not np.allclose(np.abs(phases), 1.0, atol=0.0):
            raise ValueError("phase entries must have unit modulus")
        if not np.all(phases[0] == 1.0):
            raise ValueError("candidate 0 must be the identity sequence")
        object.__setattr__(self, "phases", phases)

    @property
    def n_candidates(self) -> int:
        return self.phases.shape[0]

    @classmethod
    def random(cls, seed: int, n_candidates: int, n_subcarriers: int) -> "SlmCodebook":
        if n_candidates < 1:
            raise ValueError("need at least one candidate")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
        idx = rng.integers(0, 4, size=(n_candidates, n_subcarriers))
        phases = SLM_PHASES[idx]
        phases[0] = 1.0
        return cls(phases, seed)


def clip_and_filter(frame: TimeFrame, cfg: ClipConfig) -> TimeFrame:
    """Hard-limit the envelope at rms * 10^(ratio/20), then band-limit.

    Single clip+filter pass; the filter restores strict band limitation at
    the price of some peak regrowth.
    """
    power = frame.mean_power()
    if power == 0.0:
        raise ValueError("cannot clip an all-zero frame")
    limit = np.sqrt(power) * 10.0 ** (cfg.clip_ratio_db / 20.0)
    magnitude = np.abs(frame.samples)
    scale = np.where(magnitude > limit, limit / np.maximum(magnitude, 1e-300), 1.0)
    clipped = frame.with_samples(frame.samples * scale)
    return bandpass_filter(clipped)


def clip_only(frame: TimeFrame, cfg: ClipConfig) -> TimeFrame:
    """The clipping stage alone (useful for spectral-regrowth comparisons)."""
    power = frame.mean_power()
    if power == 0.0:
        raise ValueError("cannot clip an all-zero frame")
    limit = np.sqrt(power) * 10.0 ** (cfg.clip_ratio_db / 20.0)
    magnitude = np.abs(frame.samples)
    scale = np.where(magnitude > limit, limit / np.maximum(magnitude, 1e-300), 1.0)
    return frame.with_samples(frame.samples * scale)


def slm_encode(grid: OfdmGrid, book: SlmCodebook, oversample: int) -> tuple[TimeFrame, int]:
    """Pick the candidate phase sequence with the lowest worst-antenna PAPR.

    All antennas share the candidate's sequence. Returns the synthesized
    frame of the winner and its index (side information for the receiver).
    """
    symbols = grid.symbols
    n_ant, k = symbols.shape
    if book.phases.shape[1] != k:
        raise ValueError("codebook length does not match the grid")
    candidates = book.phases[:, None, :] * symbols[None, :, :]
    stacked = idft_oversampled(candidates.reshape(-1, k), oversample)
    rows = stacked.samples.reshape(book.n_candidates, n_ant, -1)
    power = np.abs(rows) ** 2
    per_antenna = power.max(axis=2) / power.mean(axis=2)
    worst = per_antenna.max(axis=1)
    winner = int(np.argmin(worst))
    return TimeFrame(rows[winner], L=oversample, stage=Stage.RAW), winner


def _candidate_vectors(order: int, n_tx: int) -> np.ndarray:
    """All |M|^n_tx transmit vectors in lexicographic order, [count, n_tx]."""
    alphabet = qam_alphabet(order)
    count = alphabet.size ** n_tx
    if count > MLE_CANDIDATE_GUARD:
        raise ValueError(f"{count} candidates exceed the exhaustive-search guard")
    index_grids = np.meshgrid(*([np.arange(alphabet.size)] * n_tx), indexing="ij")
    idx = np.stack(index_grids, axis=-1).reshape(-1, n_tx)
    return alphabet[idx]


def mle_detect(chan: ChannelRealization, y_freq: np.ndarray, order: int) -> np.ndarray:
    """Exhaustive minimum-distance detection, one search per subcarrier.

    ``y_freq`` is [n_sub, n_rx]; returns the detected grid [n_tx, n_sub].
    Ties break toward the lexicographically first candidate.
    """
    y_freq = np.asarray(y_freq, dtype=np.complex128)
    if y_freq.shape != (chan.n_subcarriers, chan.n_rx):
        raise ValueError("y shape does not match the channel")
    candidates = _candidate_vectors(order, chan.n_tx)
    detected = np.empty((chan.n_tx, chan.n_subcarriers), dtype=np.complex128)
    for k in range(chan.n_subcarriers):
        hypotheses = candidates @ chan.h[k].T          # [count, n_rx]
        errors = np.abs(y_freq[k][None, :] - hypotheses) ** 2
        best = int(np.argmin(errors.sum(axis=1)))
        detected[:, k] = candidates[best]
    return detected


def zf_detect(chan: ChannelRealization, y_freq: np.ndarray, order: int) -> np.ndarray:
    """Pseudo-inverse equalization plus per-entry nearest constellation point."""
    y_freq = np.asarray(y_freq, dtype=np.complex128)
    if y_freq.shape != (chan.n_subcarriers, chan.n_rx):
        raise ValueError("y shape does not match the channel")
    levels = pam_levels(order)
    detected = np.empty((chan.n_tx, chan.n_subcarriers), dtype=np.complex128)
    for k in range(chan.n_subcarriers):
        h = chan.h[k]
        smallest = np.linalg.svd(h, compute_uv=False)[-1]
        if smallest < 1e-12:
            raise ValueError(f"channel matrix at subcarrier {k} is singular")
        equalized = np.linalg.pinv(h) @ y_freq[k]
        re = levels[nearest_level_index(equalized.real, levels)]
        im = levels[nearest_level_index(equalized.imag, levels)]
        detected[:, k] = re + 1j * im
    return detected
