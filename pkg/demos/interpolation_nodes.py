"""Interval scheme and Lagrange uniformity of its orbit nodes.

For a few scales k the scheme picks two blocks of sites whose phases
theta + j*alpha are spread evenly enough that sine-kernel Lagrange factors
stay below e^{k eps}.  The second half uses a frequency with a huge partial
quotient, where the blocks shrink to the second construction.
"""
from __future__ import annotations

from maryland import ModelParams, golden
from maryland.cocycle import default_epsilon
from maryland.interpolation import check_3eps_uniform, interval_scheme
from maryland.torus import frequency_from_coeffs

p = ModelParams(1.5, golden(), 0.2, 0.0)
eps = default_epsilon(0.0, 1.5)
print(f"golden frequency, eps = {eps:.3e}")
for k in (34, 55, 89):
    sch = interval_scheme(k, p.freq)
    rep = check_3eps_uniform(p, k, eps)
    print(f"  k={k:3d} {sch.case_tag}: I1={sch.I1} I2={sch.I2} h={sch.h}  "
          f"effective eps {rep.epsilon_effective:.2e} (limit {3 * eps:.2e})")

spiky = frequency_from_coeffs([1, 50, 100], tail=[1])
print("\npartial quotients [1, 50, 100, 1, 1, ...]:")
for k in (20, 60, 3000):
    sch = interval_scheme(k, spiky)
    print(f"  k={k:5d} {sch.case_tag}: I1={sch.I1} I2={sch.I2} h={sch.h}")
