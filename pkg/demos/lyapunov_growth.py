"""Growth rates of transfer matrices and box determinants.

Compares the closed-form Lyapunov exponent with phase-averaged Birkhoff sums,
then shows that log|P~_k| / k settles just below L - ln 2 for every phase.
"""
from __future__ import annotations

import math

import numpy as np

from maryland import ModelParams, golden
from maryland.cocycle import avg_log_ptilde, lyapunov, lyapunov_birkhoff, ptilde_log_rates

LAM = 1.5
freq = golden()

print(f"{'E':>5} {'closed':>9} {'Birkhoff D':>11} {'Birkhoff F+ln2':>15}")
for E in (0.0, 0.5, 1.0, 2.5):
    p = ModelParams(LAM, freq, 0.2, E)
    d = lyapunov_birkhoff(p, 20_000, 64, "D").value
    f = lyapunov_birkhoff(p, 20_000, 64, "F").value
    print(f"{E:5.2f} {lyapunov(E, LAM):9.6f} {d:11.6f} {f:15.6f}")

p = ModelParams(LAM, freq, 0.2, 0.0)
ceiling = lyapunov(0.0, LAM) - math.log(2)
thetas = (np.arange(256) + 0.5) / 256
print(f"\nL - ln 2 at E = 0: {ceiling:.4f}")
for k in (10, 100, 1000):
    rates = ptilde_log_rates(p, k, thetas)
    avg = avg_log_ptilde(p, k, 4096).value
    print(f"k={k:5d}  max over phases {rates.max():+.4f}   phase average {avg:+.4f}")
