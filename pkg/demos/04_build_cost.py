"""
How circuit size grows with the qubit array
===========================================

The lowered state-preparation circuit has exactly 2**n - 1 RY gates for n
qubits in total, so build time grows exponentially with qubits per asset.
"""

from qalloc.distload import QubitAllocation, synthesis_cost

print(f"{'alloc':>9} {'qubits':>6} {'RY':>7} {'CX':>7} {'synth ms':>9} {'lower ms':>9}")
for q in (1, 2, 3, 4, 5):
    alloc = QubitAllocation((q, q, q))
    cost = synthesis_cost(alloc, repeats=3 if q < 5 else 1)
    c = cost.lowered_counts
    print(f"{str(list(alloc.qubits_per_dim)):>9} {alloc.total:>6} {c['RY']:>7} {c['CX']:>7} "
          f"{cost.synthesis_seconds * 1e3:>9.3f} {cost.lowering_seconds * 1e3:>9.2f}")
