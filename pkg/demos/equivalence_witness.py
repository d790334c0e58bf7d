"""A complex 1-D convolution is a stacked-real convolution whose 2x2 tap blocks
are pinned to ``[[a, -b], [b, a]]``. This script checks both directions.

    python3 demos/equivalence_witness.py
"""
import numpy as np

from cxbench import cnum
from cxbench import layers as L

rng = np.random.default_rng(7)

# same layer, two code paths
layer = L.ComplexConv1d.random(rng, in_ch=2, out_ch=3, k=5, stride=2)
x = rng.standard_normal((4, 2, 40)) + 1j * rng.standard_normal((4, 2, 40))
y_complex = L.cconv_forward(layer, x)
y_real = L.constrained_real_forward(layer.taps(), L.stack_channels(x), layer.bias, layer.stride)
print("max |complex - constrained real| =", np.max(np.abs(L.stack_channels(y_complex) - y_real)))

# without bias the layer commutes with a global phase
layer.bias[:] = 0
phi = 1.234
rot = np.exp(1j * phi)
print("phase defect (bias-free) =", np.max(np.abs(L.cconv_forward(layer, rot * x) - rot * L.cconv_forward(layer, x))))

# an unconstrained real 2x2 block generally does not commute with rotations
W = cnum.RealMat2(*rng.standard_normal(4))
print("random block commutes with rotations:", cnum.commutes_with_rotations(W, 1e-9))
a, b = cnum.nearest_complex_scalar(W)
print(f"nearest aI + bJ: a={a:.4f} b={b:.4f}")
print("projected block commutes:", cnum.commutes_with_rotations(cnum.as_real_matrix(cnum.Cplx(a, b)), 1e-9))
