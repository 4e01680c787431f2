"""Choosing the transmission rate that maximises throughput R (1 - P_out(R)).

The search splits the SNR axis at two boundaries. Below the lower one the
objective is concave, above the upper one a closed-form stationarity
condition applies, and the band between them is grid searched. This
script prints what each stage proposes next to a brute-force scan, so the
quality of the closed-form stages can be judged directly.
"""
import numpy as np

from fasaris import SystemConfig, derive_params, partition_for
from fasaris.ratemax import optimize_rate, throughput_curve

rates = np.linspace(0.0, 6.0, 1000)
for p_dbm in (10, 13, 16, 20):
    cfg = SystemConfig().with_power_dbm(p_dbm)
    params, part = derive_params(cfg), partition_for(cfg)
    res = optimize_rate(cfg, params, part)
    t = throughput_curve(rates, cfg, params, part)
    k = int(np.argmax(t))
    print(f"P={p_dbm} dBm")
    print(f"  band between boundaries: {res.interval_bits:.4f} bits/s/Hz wide")
    print(f"  candidates R = {res.r_star:.3f}, {res.r_star2:.3f}, {res.r_star3:.3f}"
          f"  T = {', '.join(f'{v:.3f}' for v in res.t_at_candidates)}")
    print(f"  chosen R = {res.r_final:.3f}  T = {res.t_final:.3f}")
    print(f"  scan     R = {rates[k]:.3f}  T = {t[k]:.3f}   ({res.evaluations['surrogate_total']} evaluations)")

# With the surface gain capped at 40 dB the two boundaries nearly coincide.
# The stationary point above them comes from an asymptotic expansion that
# assumes the line-of-sight amplitude dominates. At these settings it does
# not, so the closed-form stage stops at the boundary and the search falls
# short of the scan by roughly 0.6 to 0.7 bits/s/Hz.
