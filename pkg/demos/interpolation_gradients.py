"""Contrast the position gradient of linear and Gaussian sub-sample reads.

A single spike sits four samples away from the read position. Linear
interpolation only sees its two neighbours, so its gradient is exactly zero;
the Gaussian read still feels the spike and points towards it.
"""

import numpy as np

from anchor.interpolation import InterpKernel, interp_bilinear, interp_gaussian
from anchor.numerics import finite_diff_grad

x = np.zeros(16)
x[8] = 1.0
kern = InterpKernel.gaussian(sigma=1.5, window_radius=6)

for p in (4.0, 4.3, 5.7, 7.2):
    lin = interp_bilinear(x, p)
    gau = interp_gaussian(x, p, kern)
    print(f"p={p:4.1f}  linear grad {lin.dvalue_dp:+.4f}   gaussian grad {gau.dvalue_dp:+.4f}")

# the analytic gradient agrees with a central difference
p = 4.3
fd = finite_diff_grad(lambda v: interp_gaussian(x, v[0], kern).value, [p])[0]
print("analytic", interp_gaussian(x, p, kern).dvalue_dp, "finite difference", fd)
