"""Sampling fBm paths and checking their covariance.

Run with ``python3 demos/05_fbm_paths.py``.
"""
import numpy as np

from fbmcurrent.gaussian import fbm_covariance, sample_fbm_paths

for h in (0.3, 0.7):
    batch = sample_fbm_paths(h, T=1.0, n_steps=9, n_paths=50_000, seed=3)
    x = batch.paths[:, 1:, 0]
    t = batch.times[1:]
    emp = x.T @ x / x.shape[0]
    exact = fbm_covariance(h, t[:, None], t[None, :])
    print("H = %.1f (%s): max |empirical - exact| covariance %.4f" % (h, batch.method, np.abs(emp - exact).max()))

# long grids use the circulant embedding; roughness shows in the increments
for h in (0.2, 0.8):
    b = sample_fbm_paths(h, 1.0, 4097, 4, seed=5)
    inc = np.diff(b.paths[:, :, 0], axis=1)
    lag1 = np.mean(inc[:, 1:] * inc[:, :-1]) / np.mean(inc * inc)
    print("H = %.1f (%s): lag-1 increment correlation %.3f (theory %.3f)" % (h, b.method, lag1, 2 ** (2 * h - 1) - 1))
