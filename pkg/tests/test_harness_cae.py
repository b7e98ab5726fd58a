"""The autoencoder method driven through the Monte Carlo harness."""

from dataclasses import replace

import numpy as np
import pytest

from ofdmlab.cae import TrainConfig, train
from ofdmlab.config import parse_config
from ofdmlab.errors import ConfigError
from ofdmlab.harness import run_ber, run_ccdf


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("cae") / "tiny.bin"
    cfg = TrainConfig(n_tx=2, n_rx=2, n_subcarriers=8, oversample=4, mod_order=4,
                      channel_taps=0, epochs=2, gradual_start_epoch=1,
                      batches_per_epoch=2, batch_size=4, decoder_iterations=3,
                      ibo_db=9.0, seed=8)
    train(cfg, checkpoint_path=path)
    return path


def cae_cfg(checkpoint, **run_kwargs):
    cfg = parse_config("""
[system]
n_tx = 2
n_rx = 2
n_subcarriers = 8
oversample = 4
mod_order = 4

[rf]
ibo_db = 9.0

[method]
name = cae

[detector]
name = cae
""")
    cfg = replace(cfg, method=replace(cfg.method, checkpoint=str(checkpoint)))
    if run_kwargs:
        cfg = replace(cfg, run=replace(cfg.run, **run_kwargs))
    return cfg.validated()


class TestCaeThroughHarness:
    def test_ber_runs_and_is_deterministic(self, tiny_checkpoint):
        cfg = cae_cfg(tiny_checkpoint, frames=6, p_snr_db=(20.0,))
        text1, records = run_ber(cfg)
        text2, _ = run_ber(cfg)
        assert text1 == text2
        assert 0.0 <= records[0].y <= 1.0

    def test_ccdf_uses_filtered_encoder_output(self, tiny_checkpoint):
        cfg = cae_cfg(tiny_checkpoint, frames=120)
        _, records = run_ccdf(cfg, thresholds_db=[0.0, 3.0, 60.0])
        assert records[0].y == 1.0
        assert records[-1].y == 0.0

    def test_missing_checkpoint_is_config_error(self):
        cfg = cae_cfg("")
        with pytest.raises(ConfigError):
            run_ber(replace(cfg, method=replace(cfg.method, checkpoint=None)))

    def test_geometry_mismatch_rejected(self, tiny_checkpoint):
        cfg = cae_cfg(tiny_checkpoint)
        bad = replace(cfg, system=replace(cfg.system, n_subcarriers=16)).validated()
        with pytest.raises(ConfigError):
            run_ber(bad)
