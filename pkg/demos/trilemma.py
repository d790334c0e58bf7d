"""Holomorphy versus boundedness for the six complex activations.

    python3 demos/trilemma.py
"""
from cxbench import activations as A

print(f"{'activation':10s} {'CR median':>10s} {'max |s|':>8s}  bounded")
for act in A.COMPLEX_ACTIVATIONS:
    r = A.trilemma_scan(act, init_seeds=())
    print(f"{act:10s} {r.cr_median:10.2e} {r.max_abs:8.2f}  {r.bounded_on_grid}")

# zrelu is piecewise holomorphic: its defect lives on the axes the scan excludes
for z in (1 + 1j, -1 + 1j, 0.5 - 2j):
    print(f"zrelu residual at {z}: {A.cr_residual('zrelu', z):.1e}")
