"""A deformable 1D convolution anchored at a dilation equal to the period.

With zero offsets it is an ordinary dilated convolution. Shifting the taps
by fractional amounts lets it sample a non-integer period.
"""

import numpy as np

from anchor.deform import DefOp, DefOpConfig
from anchor.interpolation import InterpKernel

rng = np.random.default_rng(1)
x = np.sin(2 * np.pi * np.arange(64) / 10.4)[None, None, :]

op = DefOp(DefOpConfig(1, 1, 3, 10, InterpKernel.gaussian(1.0), "free"), rng)
y0 = op.forward(x)
print("tap positions at p0=32, zero offsets:", op.last_positions[0, :, 32])

# move the outer taps onto the true period 10.4
op.params["offset_bias"][:] = [-0.4, 0.0, 0.4]
y1 = op.forward(x)
print("tap positions at p0=32, shifted:     ", op.last_positions[0, :, 32])
print("output change at p0=32:", float(y1[0, 0, 32] - y0[0, 0, 32]))
