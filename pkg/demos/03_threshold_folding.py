"""Folding batch norm + sign into one integer comparison per channel.

At inference, gamma*((x - mu)/sigma) + beta >= 0 collapses to
polarity*x >= threshold with the threshold computed once from exact
rationals.  The fold is verified exhaustively over every integer the
accumulator can take.
"""

import numpy as np

from binsed import fold_batchnorm, threshold_activation, unpack

# --- worked example -----------------------------------------------------------
gamma, beta, mu, sigma = 2.0, -1.0, 3.0, 1.0
fold = fold_batchnorm([gamma], [beta], [mu], [sigma], acc_range=(-288, 288))
print(f"BN(x) = {gamma}*(x - {mu})/{sigma} + {beta} >= 0  <=>  x >= 3.5")
print(f"fold: polarity {fold.polarity[0]:+d}, threshold {fold.threshold[0]}")

# --- negative scale flips the comparison --------------------------------------
fold_neg = fold_batchnorm([-1.0], [0.0], [0.0], [2.0], acc_range=(-288, 288))
print(f"\nBN(x) = -(x)/2 >= 0  <=>  x <= 0")
print(f"fold: polarity {fold_neg.polarity[0]:+d}, threshold {fold_neg.threshold[0]}")

# --- every attainable accumulator agrees with the float sign ------------------
rng = np.random.default_rng(1)
channels = 128
reach = 9 * channels  # 3x3 kernel over `channels` inputs: |acc| <= 1152
gamma = rng.uniform(0.5, 1.5, channels) * rng.choice([-1.0, 1.0], channels)
beta = rng.normal(0, 0.5, channels)
mu = rng.normal(0, 10, channels)
sigma = rng.uniform(5, 40, channels)
fold = fold_batchnorm(gamma, beta, mu, sigma, acc_range=(-reach, reach))

x = np.arange(-reach, reach + 1, dtype=np.int32)
acc = np.ascontiguousarray(
    np.broadcast_to(x[None, :, None], (1, x.size, channels)))
bits = unpack(threshold_activation(acc, fold))[0]
bn_sign = np.where(gamma * ((x[:, None] - mu) / sigma) + beta >= 0, 1, -1)
assert (bits == bn_sign).all()
print(f"\nexhaustive check: {channels} channels x {x.size} accumulator values, "
      "integer threshold == float batch-norm sign everywhere")

# --- cost ----------------------------------------------------------------------
print("\nper activation at inference: one multiply by +-1 and one compare;")
print("no division, no floats, and the threshold array costs 4 bytes/channel")
