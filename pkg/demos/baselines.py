"""Active surface against the usual baselines on common channel draws.

Every mode sees the same fading realisations, so differences between
columns are due to the architecture and not to sampling noise.
"""
from fasaris import SystemConfig, derive_params, partition_for
from fasaris.mcsim import SimMode, mc_best_snr, outage_from_snr

RATE, TRIALS = 2.0, 20_000
modes = list(SimMode)
print(f"{'P dBm':>6} " + " ".join(f"{m.value:>12}" for m in modes))
for p_dbm in (6, 10, 14, 18, 22):
    cfg = SystemConfig().with_power_dbm(p_dbm)
    params, part = derive_params(cfg), partition_for(cfg)
    best = mc_best_snr(cfg, params, part, modes, TRIALS, seed=3)
    print(f"{p_dbm:>6} " + " ".join(f"{outage_from_snr(b, RATE).value:>12.4f}" for b in best))

# A passive surface with the same four elements stays in outage over this
# whole range. The doubly faded reflected path is far too weak on its own,
# and only the amplifier makes it usable. The single fixed antenna loses
# the port-selection diversity, and perfect CSI shows what ideal port and
# phase choice would add.
