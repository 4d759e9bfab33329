"""Analytic test fields with closed-form derivatives."""

from __future__ import annotations

import numpy as np
from scipy import special


class Gaussian:
    """Isotropic Gaussian field A exp(-|v-c|^2/(2 w^2)), with exact derivatives."""

    def __init__(self, center, width=1.0, amp=1.0):
        self.c = np.asarray(center, dtype=float)
        self.w = float(width)
        self.a = float(amp)

    def __call__(self, v):
        d = np.asarray(v) - self.c
        return self.a * np.exp(-0.5 * np.sum(d * d, axis=-1) / self.w ** 2)

    def grad(self, v):
        d = np.asarray(v) - self.c
        return -d / self.w ** 2 * self(v)[..., None]

    def deriv(self, beta, v):
        """Partial derivative d^beta."""
        v = np.asarray(v, dtype=float)
        out = self(v)
        for i, b in enumerate(beta):
            if b:
                y = (v[..., i] - self.c[i]) / self.w
                out = out * (-1) ** b * special.eval_hermitenorm(b, y) / self.w ** b
        return out

    def as_mixture(self):
        return GaussianMixture([self.c], [self.w], [self.a])


class HermiteGaussian:
    """prod_i He_{k_i}((v_i - c_i)/w) times a Gaussian of width w."""

    def __init__(self, center, width, index, amp=1.0):
        self.c = np.asarray(center, dtype=float)
        self.w = float(width)
        self.k = tuple(int(x) for x in index)
        self.a = float(amp)

    def __call__(self, v):
        return self.deriv((0,) * self.c.size, v)

    def deriv(self, beta, v):
        # d^b [He_k(y) e^{-y^2/2}] = (-1)^b He_{k+b}(y) e^{-y^2/2} / w^b
        v = np.asarray(v, dtype=float)
        y = (v - self.c) / self.w
        out = self.a * np.exp(-0.5 * np.sum(y * y, axis=-1))
        for i, (k, b) in enumerate(zip(self.k, beta)):
            out = out * (-1) ** b * special.eval_hermitenorm(k + b, y[..., i]) / self.w ** b
        return out


class GaussianMixture:
    """Sum of isotropic Gaussians; the form accepted by the compiled kernels."""

    def __init__(self, centers, widths, amps):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.widths = np.asarray(widths, dtype=float).ravel()
        self.amps = np.asarray(amps, dtype=float).ravel()

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        d = v[..., None, :] - self.centers
        e = np.exp(-0.5 * np.sum(d * d, axis=-1) / self.widths ** 2)
        return e @ self.amps

    def deriv(self, beta, v):
        v = np.asarray(v, dtype=float)
        out = 0.0
        for c, w, a in zip(self.centers, self.widths, self.amps):
            out = out + Gaussian(c, w, a).deriv(beta, v)
        return out


class Constant:
    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, v):
        return np.full(np.asarray(v).shape[:-1], self.value)

    def deriv(self, beta, v):
        if any(beta):
            return np.zeros(np.asarray(v).shape[:-1])
        return self(v)
