"""Closed-form reference values used across the tests."""
import numpy as np
from scipy.special import ellipe, ellipk, i0e


def gaussian_radon(s):
    # R e^{-|x|^2}(s, w) for every w
    return np.sqrt(np.pi) * np.exp(-np.asarray(s, float) ** 2)


def gaussian_fourier(xi_norm):
    return np.pi * np.exp(-np.asarray(xi_norm, float) ** 2 / 4)


def disc_radon(s):
    s = np.abs(np.asarray(s, float))
    return np.where(s < 1, 2 * np.sqrt(np.clip(1 - s * s, 0, None)), 0.0)


def gaussian_normal_operator(r):
    """R*R e^{-|x|^2} = 4 pi |D|^-1 e^{-|x|^2} = 2 pi^(3/2) e^{-r^2/2} I0(r^2/2)."""
    r = np.asarray(r, float)
    return 2 * np.pi ** 1.5 * i0e(r * r / 2)


def disc_normal_operator(r):
    """R*R of the unit-disc indicator, by elliptic integrals (parameter m = k^2)."""
    r = np.asarray(r, float)
    out = np.empty_like(r)
    inside = r < 1
    out[inside] = 8 * ellipe(r[inside] ** 2)
    ro = r[~inside]
    m = 1 / ro ** 2
    out[~inside] = 8 * ro * (ellipe(m) - (1 - m) * ellipk(m))
    return out


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(np.abs(y)), 1)[0])
