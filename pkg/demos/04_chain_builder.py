"""
Choosing chain members from benchmarks
======================================

Benchmarks put each model at a point (mean tokens/s, F1). A line through
(0, best F1) fitted to those points gives the expected accuracy at a given
speed; models furthest above it are the best trade-offs and become chain
members, fastest first.
"""

from lmchain import fit_correlation, propose_chains, rank_by_residual
from lmchain.synthetic import sample_benchmarks

benchmarks = sample_benchmarks()
line = fit_correlation(benchmarks)
print(f"F1 = {line.anchor_y:.1f} {line.slope:+.5f} * tps   (pearson r = {line.pearson_r:.3f})\n")

for name, residual in rank_by_residual(benchmarks, line):
    print(f"{name:18} {residual:+7.2f}")

print()
for proposal in propose_chains(benchmarks, k=3):
    print(f"{proposal.chain.id:22} {' -> '.join(proposal.chain.model_names)}")
    print(f"{'':22} {proposal.rationale}")
