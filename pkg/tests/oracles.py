"""Independent reference implementations used only by the tests."""

import math

import mpmath
import numpy as np


def naive_dft(x):
    """Direct O(L^2) forward DFT, bins 0..floor(L/2)."""
    x = np.asarray(x, dtype=np.float64)
    L = x.size
    t = np.arange(L)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * t / L)) for f in range(L // 2 + 1)])


def dilated_conv1d(x, weight, bias, dilation):
    """Zero-padded 'same' dilated convolution over an explicit padded buffer.

    Taps are accumulated in the same order as the deformable operator so the
    two agree bit for bit when they read identical samples.
    """
    B, I, L = x.shape
    O, _, S = weight.shape
    half = S // 2
    pad = half * dilation
    buf = np.zeros((B, I, L + 2 * pad))
    buf[:, :, pad:pad + L] = x
    y = np.broadcast_to(bias[None, :, None], (B, O, L)).copy()
    for n in range(S):
        start = n * dilation
        y += np.matmul(weight[:, :, n], buf[:, :, start:start + L])
    return y


def gaussian_interp_mp(x, p, sigma, radius, dps=50):
    """Gaussian RBF value and position derivative in extended precision.

    The derivative is taken by differentiating the normalised-weight formula
    directly with mpmath rather than through the mean-shift identity.
    """
    mpmath.mp.dps = dps
    L = len(x)
    centre = math.floor(p + 0.5)
    qs = range(centre - radius, centre + radius + 1)

    def value(pp):
        ws = [mpmath.exp(-(pp - q) ** 2 / (2 * mpmath.mpf(sigma) ** 2)) for q in qs]
        feats = [mpmath.mpf(x[q]) if 0 <= q < L else mpmath.mpf(0) for q in qs]
        return sum(w * f for w, f in zip(ws, feats)) / sum(ws)

    pm = mpmath.mpf(p)
    return float(value(pm)), float(mpmath.diff(value, pm))
