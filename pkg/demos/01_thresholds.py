"""
How much squeezing does a secure key need?
==========================================

Bob's raw bit flips when the shift between his outcome and Alice's value lands
in an odd window of width sqrt(pi).  Keeping that probability below 11% per
basis is enough for a positive key rate.
"""

import math

import numpy as np

from qkdlab import security_analysis as sa
from qkdlab.gkp_code import EXACT, TAIL, WINDOW, shift_error_prob

# The widest pair width that still meets the 11% bound
delta = sa.solve_secure_delta(0.11)
p = sa.convert(delta=delta)
print(f"secure pair width      {delta:.4f}")
print(f"single-mode width      {p.tilde_delta:.4f}")
print(f"squeeze parameter r    {p.r:.4f}  ({p.db:.2f} dB)")
print(f"two-mode squeezing r   {p.r_two_mode:.4f}")
print(f"entanglement (ebits)   {sa.ebits(delta):.3f}")

# The three ways of computing the flip probability bracket each other
print("\n  width   window      exact       tail")
for d in (0.25, 0.4, 0.5, 0.784, 1.0):
    w, e, t = (shift_error_prob(d, m) for m in (WINDOW, EXACT, TAIL))
    print(f"  {d:5.3f}   {w:.3e}   {e:.3e}   {t:.3e}")

# Tighter targets need much narrower states
for target in (0.01, 1e-6):
    d = sa.solve_secure_delta(target)
    print(f"\nerror {target:g}: width {d:.4f}, {sa.convert(delta=d).db:.2f} dB")

# Key rate of the one-way protocol at equal error rates
for q in np.linspace(0, 0.12, 7):
    print(f"p = {q:.2f}  rate = {sa.key_rate(q, q):.4f}")
