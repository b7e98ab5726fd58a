"""Train the end-to-end autoencoder at desk scale and watch the losses.

A short two-stage run: reconstruction-only epochs first, then the full
constrained objective with per-epoch multiplier updates. Expect a few
minutes on a laptop CPU. For the full-size recipe use the command line:

    ofdmlab train --config <file>
"""

import numpy as np

from ofdmlab.cae import TrainConfig, evaluate_ber, train

cfg = TrainConfig(
    n_tx=2, n_rx=2, n_subcarriers=16, oversample=4, mod_order=4,
    channel_taps=0,                 # fixed identity-like channel
    epochs=12, gradual_start_epoch=5,
    batches_per_epoch=10, batch_size=32,
    ibo_db=9.0, seed=3,
)

print("epoch  l1       l2a     l2b     l3      lam3")
result = train(cfg, progress=lambda e, row: print(
    f"{row[0]:5d}  {row[1]:7.3f}  {row[2]:.3f}  {row[3]:.3f}  {row[4]:+6.2f}  {row[7]:.4f}"))

state = result.state
print(f"\nmultipliers after the run: lam2a={state.lambda_2a:.4f} "
      f"lam2b={state.lambda_2b:.5f} lam3={state.lambda_3:.4f}")
ber, bits = evaluate_ber(result.system, cfg, p_snr_db=30.0, n_frames=100, seed=99)
print(f"hard-decision BER at 30 dB peak SNR: {ber:.4f} over {bits} bits")
print("(a real run uses many more batches; see the training recipe defaults)")
