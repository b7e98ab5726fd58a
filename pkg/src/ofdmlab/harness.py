"""Seeded Monte Carlo experiments emitting deterministic CSV.

Every frame gets its own counter-based generator derived from the master
seed, so results are identical for any worker count and rerun. Workers are
threads; numpy releases the GIL in the heavy kernels.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import baselines
from .autodiff import no_grad
from .autodiff.gradcheck import CheckResult, run_all
from .cae import losses as cae_losses
from .cae import pipeline as cae_pipeline
from .cae.training import load_system
from .channel import (Awgn, MultipathTaps, apply_channel, draw_channel,
                      noise_variance_for_psnr)
from .config import ExperimentConfig
from .csvio import write_csv
from .dsp import (PsdConfig, Stage, TimeFrame, dft_unpad, estimate_psd,
                  idft_oversampled, papr_mimo)
from .errors import ConfigError, NumericError
from .modulation import OfdmGrid, qam_alphabet, symbols_to_bits
from .rf import RappParams, acpr, apply_ibo, bandpass_filter, bussgang_alpha, obo, rapp_amplify

BER_HEADER = ["p_snr_db", "ber", "bit_count", "stderr"]
CCDF_HEADER = ["papr0_db", "ccdf"]
PSD_HEADER = ["normalized_freq", "psd_db", "linear_ref_db"]
ACPR_OBO_HEADER = ["method", "acpr_db", "obo_db"]


@dataclass(frozen=True)
class CurveRecord:
    x: float
    y: float
    count: int
    stderr: float

    def __post_init__(self):
        if self.count <= 0:
            raise ValueError("record count must be positive")


def frame_rng(seed: int, frame_index: int, point_index: int = 0) -> np.random.Generator:
    """Counter-split generator: one independent stream per (point, frame).

    Stream identifiers live in the high counter words; the low words are
    the ones that advance as the stream is consumed.
    """
    return np.random.Generator(
        np.random.Philox(key=seed, counter=[0, 0, frame_index, point_index + 2]))


def _channel_profile(cfg: ExperimentConfig):
    if cfg.channel.profile == "awgn":
        return Awgn()
    return MultipathTaps(cfg.channel.taps, cfg.channel.decay)


def _rapp_params(cfg: ExperimentConfig) -> RappParams:
    return RappParams.from_power_budget(cfg.rf.total_power, cfg.system.n_tx,
                                        v=cfg.rf.small_signal_gain,
                                        p=cfg.rf.smoothness)


class _FrameChain:
    """Per-run state shared by all frames: codebook, amplifier, checkpoint."""

    def __init__(self, cfg: ExperimentConfig):
        cfg.validated()
        self.cfg = cfg
        self.params = _rapp_params(cfg)
        self.profile = _channel_profile(cfg)
        self.book = None
        self.system = None
        if cfg.method.name == "slm":
            self.book = baselines.SlmCodebook.random(
                cfg.run.seed, cfg.method.slm_candidates, cfg.system.n_subcarriers)
        if cfg.method.name == "cae":
            if not cfg.method.checkpoint:
                raise ConfigError("the cae method needs a checkpoint path")
            self.system = load_system(cfg.method.checkpoint)
            sys_cfg = cfg.system
            if (self.system.n_tx != sys_cfg.n_tx
                    or self.system.n_subcarriers != sys_cfg.n_subcarriers
                    or self.system.oversample != sys_cfg.oversample
                    or self.system.mod_order != sys_cfg.mod_order):
                raise ConfigError("checkpoint geometry does not match the config")

    # -- transmit side -------------------------------------------------------

    def filtered_frame(self, grid: OfdmGrid) -> tuple[TimeFrame, np.ndarray | None]:
        """Method-specific band-limited frame plus SLM phases if any."""
        cfg = self.cfg
        if cfg.method.name == "none":
            raw = idft_oversampled(grid, cfg.system.oversample)
            return bandpass_filter(raw), None
        if cfg.method.name == "cf":
            raw = idft_oversampled(grid, cfg.system.oversample)
            clip = baselines.ClipConfig(cfg.method.clip_ratio_db)
            return baselines.clip_and_filter(raw, clip), None
        if cfg.method.name == "slm":
            frame, index = baselines.slm_encode(grid, self.book, cfg.system.oversample)
            return bandpass_filter(frame), self.book.phases[index]
        raise ConfigError(f"method {cfg.method.name!r} has no classical chain")

    def amplified(self, filtered: TimeFrame) -> tuple[TimeFrame, TimeFrame, complex]:
        """IBO + amplifier; returns (backed_off, amplified, bussgang gain).

        A linear front end bypasses both back-off and saturation: the frame
        is transmitted as filtered, at full power, with unit gain.
        """
        if self.cfg.rf.amplifier == "linear":
            backed = filtered.with_samples(filtered.samples, stage=Stage.BACKED_OFF)
            amplified = filtered.with_samples(filtered.samples, stage=Stage.AMPLIFIED)
            return backed, amplified, 1.0 + 0.0j
        backed = apply_ibo(filtered, self.cfg.rf.ibo_db, self.params)
        amplified = rapp_amplify(backed, self.params)
        alpha = bussgang_alpha(filtered, amplified).alpha
        return backed, amplified, alpha

    # -- one full link -------------------------------------------------------

    def ber_frame(self, frame_index: int, point_index: int, sigma_w2: float) -> tuple[int, int]:
        """Simulate one frame at one SNR point; returns (bit errors, bits)."""
        cfg = self.cfg
        rng = frame_rng(cfg.run.seed, frame_index, point_index)
        grid = OfdmGrid.random(rng, cfg.system.n_tx, cfg.system.n_subcarriers,
                               cfg.system.mod_order)
        chan = draw_channel(rng, cfg.system.n_subcarriers, cfg.system.n_tx,
                            cfg.system.n_rx, self.profile, sigma_w2)
        if cfg.method.name == "cae":
            return self._cae_ber_frame(grid, chan, rng)

        filtered, phases = self.filtered_frame(grid)
        _, amplified, alpha = self.amplified(filtered)
        x_freq = dft_unpad(amplified, cfg.system.n_subcarriers).T   # [K, n_tx]
        y = apply_channel(x_freq, chan, rng)
        y = y / alpha
        if cfg.detector == "mle":
            detected = baselines.mle_detect(chan, y, cfg.system.mod_order)
        elif cfg.detector == "zf":
            detected = baselines.zf_detect(chan, y, cfg.system.mod_order)
        else:
            raise ConfigError(f"detector {cfg.detector!r} not valid here")
        if phases is not None:
            detected = detected * np.conj(phases)[None, :]
        sent = symbols_to_bits(grid.symbols, cfg.system.mod_order)
        got = symbols_to_bits(detected, cfg.system.mod_order)
        return int(np.sum(sent != got)), sent.size

    def _cae_ber_frame(self, grid: OfdmGrid, chan, rng) -> tuple[int, int]:
        cfg = self.cfg
        k, n_rx = cfg.system.n_subcarriers, cfg.system.n_rx
        noise = (rng.standard_normal((1, k, n_rx)) + 1j * rng.standard_normal((1, k, n_rx))) \
            * np.sqrt(chan.sigma_w2 / 2.0)
        with no_grad():
            result = self.system.run_batch(grid.symbols[None], chan.h[None], noise,
                                           rng, train=False)
        hard = result.hard_symbols(cfg.system.mod_order)[0]
        sent = symbols_to_bits(grid.symbols, cfg.system.mod_order)
        got = symbols_to_bits(hard, cfg.system.mod_order)
        return int(np.sum(sent != got)), sent.size

    def ccdf_frame(self, frame_index: int) -> float:
        """Worst-antenna PAPR (dB) of the band-limited frame."""
        cfg = self.cfg
        rng = frame_rng(cfg.run.seed, frame_index, 0)
        grid = OfdmGrid.random(rng, cfg.system.n_tx, cfg.system.n_subcarriers,
                               cfg.system.mod_order)
        if cfg.method.name == "cae":
            with no_grad():
                stages = self.system.transmit(grid.symbols[None], train=False)
            filtered_rows = stages["filtered"].values()[0]
            frame = TimeFrame(filtered_rows, cfg.system.oversample, Stage.FILTERED)
        else:
            frame, _ = self.filtered_frame(grid)
        return 10.0 * np.log10(papr_mimo(frame))

    def psd_frame(self, frame_index: int) -> tuple[np.ndarray, np.ndarray]:
        """PSD bins of the amplified frame and of its linear reference."""
        cfg = self.cfg
        rng = frame_rng(cfg.run.seed, frame_index, 0)
        grid = OfdmGrid.random(rng, cfg.system.n_tx, cfg.system.n_subcarriers,
                               cfg.system.mod_order)
        if cfg.method.name == "cae":
            with no_grad():
                stages = self.system.transmit(grid.symbols[None], train=False)
            filtered = TimeFrame(stages["filtered"].values()[0],
                                 cfg.system.oversample, Stage.FILTERED)
        else:
            filtered, _ = self.filtered_frame(grid)
        backed, amplified, _ = self.amplified(filtered)
        reference = backed.with_samples(backed.samples, stage=Stage.AMPLIFIED)
        return (estimate_psd(amplified).bin_power,
                estimate_psd(reference).bin_power)

    def spectral_frame(self, frame_index: int) -> tuple[np.ndarray, float]:
        """PSD bins of the amplified frame plus the backed-off antenna power sum."""
        cfg = self.cfg
        rng = frame_rng(cfg.run.seed, frame_index, 0)
        grid = OfdmGrid.random(rng, cfg.system.n_tx, cfg.system.n_subcarriers,
                               cfg.system.mod_order)
        if cfg.method.name == "cae":
            with no_grad():
                stages = self.system.transmit(grid.symbols[None], train=False)
            filtered = TimeFrame(stages["filtered"].values()[0],
                                 cfg.system.oversample, Stage.FILTERED)
        else:
            filtered, _ = self.filtered_frame(grid)
        backed, amplified, _ = self.amplified(filtered)
        per_antenna_total = float(np.sum(np.mean(np.abs(backed.samples) ** 2, axis=1)))
        return estimate_psd(amplified).bin_power, per_antenna_total


def _map_frames(task, n_frames: int, workers: int) -> list:
    """Order-preserving map over frame indices, optionally threaded."""
    if workers <= 1:
        return [task(i) for i in range(n_frames)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, range(n_frames)))


# -- subcommands --------------------------------------------------------------


def run_ber(cfg: ExperimentConfig) -> tuple[str, list[CurveRecord]]:
    """BER over the peak-SNR grid; returns (csv text, records)."""
    if not cfg.run.p_snr_db:
        raise ConfigError("p_snr_db grid is empty")
    chain = _FrameChain(cfg)
    records = []
    for point_index, p_snr_db in enumerate(cfg.run.p_snr_db):
        sigma_w2 = noise_variance_for_psnr(p_snr_db, cfg.rf.total_power)
        results = _map_frames(
            lambda i, p=point_index, s=sigma_w2: chain.ber_frame(i, p, s),
            cfg.run.frames, cfg.run.workers)
        errors = sum(r[0] for r in results)
        bits = sum(r[1] for r in results)
        ber = errors / bits
        stderr = float(np.sqrt(max(ber * (1.0 - ber), 0.0) / bits))
        records.append(CurveRecord(p_snr_db, ber, bits, stderr))
    rows = [(r.x, r.y, r.count, r.stderr) for r in records]
    return write_csv(cfg.run.out, BER_HEADER, rows), records


def run_ccdf(cfg: ExperimentConfig, thresholds_db=None) -> tuple[str, list[CurveRecord]]:
    """Empirical P(worst-antenna PAPR > threshold) per threshold."""
    thresholds = tuple(thresholds_db) if thresholds_db is not None else cfg.run.ccdf_thresholds_db
    if not thresholds:
        raise ConfigError("threshold list is empty")
    if cfg.run.frames < 100:
        raise ConfigError("ccdf needs at least 100 frames")
    chain = _FrameChain(cfg)
    paprs = np.array(_map_frames(chain.ccdf_frame, cfg.run.frames, cfg.run.workers))
    records = []
    for t in thresholds:
        exceed = float(np.mean(paprs > t))
        stderr = float(np.sqrt(max(exceed * (1.0 - exceed), 0.0) / paprs.size))
        records.append(CurveRecord(t, exceed, paprs.size, stderr))
    rows = [(r.x, r.y) for r in records]
    return write_csv(cfg.run.out, CCDF_HEADER, rows), records


def run_psd(cfg: ExperimentConfig) -> str:
    """Frame-averaged PSD of the amplified signal, peak-normalized, in dB.

    A linear-amplifier reference trace (same frames, amplifier bypassed) is
    emitted alongside.
    """
    chain = _FrameChain(cfg)
    results = _map_frames(chain.psd_frame, cfg.run.frames, cfg.run.workers)
    psd = np.mean([r[0] for r in results], axis=0)
    ref = np.mean([r[1] for r in results], axis=0)
    n = psd.size
    freqs = (np.arange(n) - n // 2) / n
    floor = 1e-300
    psd_db = 10.0 * np.log10(np.maximum(psd / psd.max(), floor))
    ref_db = 10.0 * np.log10(np.maximum(ref / ref.max(), floor))
    rows = [(float(freqs[i]), float(psd_db[i]), float(ref_db[i])) for i in range(n)]
    return write_csv(cfg.run.out, PSD_HEADER, rows)


def run_acpr_obo(cfg_list: list[ExperimentConfig], out=None) -> str:
    """One (method, ACPR, OBO) row per configuration."""
    if not cfg_list:
        raise ConfigError("empty configuration list")
    rows = []
    for cfg in cfg_list:
        chain = _FrameChain(cfg)
        results = _map_frames(chain.spectral_frame, cfg.run.frames, cfg.run.workers)
        psd_bins = np.mean([r[0] for r in results], axis=0)
        mean_backed_total = float(np.mean([r[1] for r in results]))
        from .dsp import PsdEstimate
        estimate = PsdEstimate(psd_bins, 1.0 / psd_bins.size)
        acpr_db = acpr(estimate, cfg.system.oversample)
        obo_db = float(10.0 * np.log10(cfg.rf.total_power / mean_backed_total))
        rows.append((cfg.method.name, acpr_db, obo_db))
    return write_csv(out, ACPR_OBO_HEADER, rows)


def run_gradcheck(seed: int = 0, corrupt: str | None = None) -> tuple[list[CheckResult], bool]:
    """Layer checks plus the end-to-end pipeline check; True when all pass."""
    results = run_all(seed=seed, corrupt=corrupt)
    results.append(end_to_end_gradcheck(seed))
    return results, all(r.passed for r in results)


def end_to_end_gradcheck(seed: int = 0, tolerance: float = 1e-4) -> CheckResult:
    """Finite-difference check through encoder, RF chain, channel, decoder.

    The Bussgang gain is pinned at its unperturbed estimate, matching its
    detached-constant role in backpropagation. For each probed parameter the
    entry with the largest gradient is differenced (well-conditioned probes).
    """
    rng = np.random.default_rng(seed)
    n_batch, n_tx, n_rx, k, oversample, order = 2, 2, 2, 8, 4, 4
    system = cae_pipeline.build_system(n_tx, n_rx, k, oversample, order,
                                       ibo_db=6.0, seed=seed + 17)
    alphabet = qam_alphabet(order)
    grids = alphabet[rng.integers(0, alphabet.size, size=(n_batch, n_tx, k))]
    h = np.stack([draw_channel(rng, k, n_tx, n_rx, MultipathTaps(4)).h
                  for _ in range(n_batch)])
    noise = (rng.standard_normal((n_batch, k, n_rx))
             + 1j * rng.standard_normal((n_batch, k, n_rx))) * np.sqrt(1e-3 / 2.0)
    state = cae_losses.LagrangianState()
    alpha0 = system.run_batch(grids, h, noise, np.random.default_rng(99), train=True).alpha

    def forward():
        r = system.run_batch(grids, h, noise, np.random.default_rng(99),
                             train=True, alpha_override=alpha0)
        return cae_losses.total_loss(r.l1, r.l2a, r.l2b, r.l3, state)

    params = system.parameters()
    loss = forward()
    for p in params.values():
        p.grad = None
    loss.backward()

    probe_names = ["enc/conv1/w", "enc/conv3/w", "enc/fc/w", "enc/bn2/gamma",
                   "dec/it00/conv_a/w", "dec/it03/delta1", "dec/it09/fc/w"]
    step = 1e-6
    worst = 0.0
    for name in probe_names:
        p = params[name]
        grad = p.grad if p.grad is not None else np.zeros_like(p.values)
        flat_index = int(np.argmax(np.abs(grad)))
        analytic = grad.reshape(-1)[flat_index]
        flat = p.values.reshape(-1)
        original = flat[flat_index]
        flat[flat_index] = original + step
        up = forward().item()
        flat[flat_index] = original - step
        down = forward().item()
        flat[flat_index] = original
        numeric = (up - down) / (2.0 * step)
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, rel)
    return CheckResult("end_to_end", worst, tolerance)
