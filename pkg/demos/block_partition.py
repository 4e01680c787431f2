"""Block structure of the port correlation matrix.

The ports of a fluid antenna spanning W wavelengths are strongly
correlated. Approximating the Jakes matrix by equal-correlation blocks
keeps the outage integral tractable. The block count settles near 2W once
the array is densely sampled.
"""
from fasaris.corrmodel import CorrelationSpec, bdma_partition

W = 5.0
for n in (8, 10, 20, 30, 40, 50, 60, 80, 100):
    part = bdma_partition(CorrelationSpec(n, W, 0.97))
    print(f"N={n:>3}  blocks={part.n_blocks:>2}  sizes={list(part.block_sizes)}")

print()
for w in (1.0, 2.0, 3.0, 5.0, 8.0):
    part = bdma_partition(CorrelationSpec(100, w, 0.97))
    print(f"W={w:>3}  blocks={part.n_blocks:>2}  (2W = {2 * w:g})")
