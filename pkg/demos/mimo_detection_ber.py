"""Exhaustive-search detection versus zero forcing over a fading channel.

Small Monte Carlo: same channels, same noise, two detectors. The
exhaustive search is optimal; zero forcing pays for inverting bad
channel draws.
"""

import numpy as np

from ofdmlab import MultipathTaps, OfdmGrid, apply_channel, draw_channel, grid_bits, \
    noise_variance_for_psnr, symbols_to_bits
from ofdmlab.baselines import mle_detect, zf_detect

rng = np.random.default_rng(21)
n_frames = 150
print("P_SNR    exhaustive      zero-forcing")
for p_snr_db in (8.0, 12.0, 16.0, 20.0):
    sigma = noise_variance_for_psnr(p_snr_db)
    errors = {"mle": 0, "zf": 0}
    bits = 0
    for _ in range(n_frames):
        grid = OfdmGrid.random(rng, 2, 24, 4)
        chan = draw_channel(rng, 24, 2, 2, MultipathTaps(8), sigma_w2=sigma)
        y = apply_channel(grid.symbols.T, chan, rng)
        sent = grid_bits(grid)
        for name, detect in (("mle", mle_detect), ("zf", zf_detect)):
            got = symbols_to_bits(detect(chan, y, 4), 4)
            errors[name] += int(np.sum(got != sent))
        bits += sent.size
    print(f"{p_snr_db:5.1f}   {errors['mle'] / bits:10.5f}   {errors['zf'] / bits:10.5f}")

print("\nzero forcing always sits above the exhaustive search on fading draws.")
