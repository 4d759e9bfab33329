"""Weighted polynomial bases: tensor Hermite functions and radial/sector bases.

Every basis function has the form e(v) = P(v) M(v) with M = sqrt(mu), so
integrals against mu reduce to polynomial quadrature.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import special

from .quadrature import tensor_hermite


def maxwellian(v):
    """mu(v) = (2 pi)^(-n/2) exp(-|v|^2/2)."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    return (2 * np.pi) ** (-n / 2) * np.exp(-0.5 * np.sum(v * v, axis=-1))


def sqrt_maxwellian(v):
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    return (2 * np.pi) ** (-n / 4) * np.exp(-0.25 * np.sum(v * v, axis=-1))


def hermite_polys(x, N):
    """Orthonormal probabilists' Hermite polynomials p_0..p_N at x, shape (..., N+1)."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (N + 1,))
    out[..., 0] = 1.0
    if N >= 1:
        out[..., 1] = x
    for k in range(1, N):
        out[..., k + 1] = (x * out[..., k] - np.sqrt(k) * out[..., k - 1]) / np.sqrt(k + 1)
    return out


def total_degree_indices(n, N):
    idx = [a for a in itertools.product(range(N + 1), repeat=n) if sum(a) <= N]
    idx.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return np.array(idx, dtype=int)


@dataclass
class HermiteBasis:
    """Tensor Hermite functions of total degree <= N, orthonormal in L^2(R^n)."""

    n: int
    N: int

    def __post_init__(self):
        self.indices = total_degree_indices(self.n, self.N)

    @property
    def size(self):
        return len(self.indices)

    def poly(self, v):
        """Polynomial parts G_alpha(v), shape (..., size)."""
        v = np.asarray(v, dtype=float)
        out = np.ones(v.shape[:-1] + (self.size,))
        for d in range(self.n):
            h = hermite_polys(v[..., d], self.N)
            out *= h[..., self.indices[:, d]]
        return out

    def __call__(self, v):
        return self.poly(v) * sqrt_maxwellian(v)[..., None]

    def project(self, f, order=None):
        """L^2 coefficients of a callable f decaying at least like sqrt(mu)."""
        m = order or (self.N + 8)
        nodes, w = tensor_hermite(m, self.n, scale=np.sqrt(2.0))
        # int f e_a = int (f / M) G_a mu ;  mu dv = (2 pi)^(-n/2) exp(-|v|^2/2) dv
        ratio = f(nodes) / sqrt_maxwellian(nodes)
        return (2 * np.pi) ** (-self.n / 2) * (w * ratio) @ self.poly(nodes)

    def ladder(self):
        """Index of each multi-index."""
        lookup = {tuple(a): k for k, a in enumerate(self.indices)}
        return lookup

    def multiplication(self, i):
        """Matrix of g -> v_i g restricted to the basis (symmetric tridiagonal):
        v_i e_a = sqrt(a_i + 1) e_(a + e_i) + sqrt(a_i) e_(a - e_i)."""
        lookup = self.ladder()
        J = np.zeros((self.size, self.size))
        for k, a in enumerate(self.indices):
            up = list(a)
            up[i] += 1
            m = lookup.get(tuple(up))
            if m is not None:
                J[m, k] = J[k, m] = np.sqrt(a[i] + 1.0)
        return J

    def derivative(self, i):
        """Matrix of g -> d_i g restricted to the basis:
        d_i e_a = (sqrt(a_i) e_(a - e_i) - sqrt(a_i + 1) e_(a + e_i)) / 2."""
        lookup = self.ladder()
        D = np.zeros((self.size, self.size))
        for k, a in enumerate(self.indices):
            up = list(a)
            up[i] += 1
            m = lookup.get(tuple(up))
            if m is not None:
                D[m, k] = -0.5 * np.sqrt(a[i] + 1.0)
                D[k, m] = 0.5 * np.sqrt(a[i] + 1.0)
        return D

    def null_coefficients(self):
        """Coefficient vectors of sqrt(mu), v_i sqrt(mu), |v|^2 sqrt(mu)."""
        rows = []
        funcs = [lambda v: np.ones(v.shape[:-1])]
        funcs += [lambda v, i=i: v[..., i] for i in range(self.n)]
        funcs += [lambda v: np.sum(v * v, axis=-1)]
        for g in funcs:
            rows.append(self.project(lambda v, g=g: g(v) * sqrt_maxwellian(v)))
        return np.array(rows)


class HermiteField:
    """Field given by Hermite coefficients; evaluable anywhere."""

    def __init__(self, basis: HermiteBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __call__(self, v):
        return self.basis(v) @ self.coeffs

    def poly(self, v):
        return self.basis.poly(v) @ self.coeffs

    def deriv(self, beta, v):
        """d_beta of the field (exact, truncation aside) for Hermite bases."""
        c = self.coeffs
        for i, k in enumerate(beta):
            for _ in range(k):
                c = self.basis.derivative(i) @ c
        return self.basis(v) @ c


# --- radial / sector functions -------------------------------------------

def laguerre_radial(x2, K, a):
    """Generalized Laguerre L_k^(a)(|v|^2/2) for k = 0..K-1, x2 = |v|^2."""
    x = 0.5 * np.asarray(x2, dtype=float)
    out = np.empty(x.shape + (K,))
    out[..., 0] = 1.0
    if K > 1:
        out[..., 1] = 1.0 + a - x
    for k in range(1, K - 1):
        out[..., k + 1] = ((2 * k + 1 + a - x) * out[..., k] - (k + a) * out[..., k - 1]) / (k + 1)
    return out


def sector_norm(n, k, l):
    """Normalization c_kl making c L_k^(a)(|v|^2/2)|v|^l Y_l M unit in L^2."""
    a = l + n / 2 - 1
    k = np.asarray(k, dtype=float)
    logn2 = (-n / 2) * np.log(2 * np.pi) + a * np.log(2.0) + special.gammaln(k + a + 1) - special.gammaln(k + 1)
    return np.exp(-0.5 * logn2)


def sector_radial(n, l, K, x2):
    """c_kl L_k^(a)(|v|^2/2) |v|^l for k < K, shape (..., K)."""
    a = l + n / 2 - 1
    lag = laguerre_radial(x2, K, a)
    c = sector_norm(n, np.arange(K), l)
    return lag * c * np.asarray(x2)[..., None] ** (0.5 * l)


def sector_sizes(N):
    """Number of radial indices k with 2k + l <= N for each l."""
    return {l: (N - l) // 2 + 1 for l in range(N + 1)}


def sector_multiplicity(n, l):
    if n == 2:
        return 1 if l == 0 else 2
    if n == 3:
        return 2 * l + 1
    raise NotImplementedError


def zonal_kernel(n, l, cosang):
    """sum_m Y_lm(a) Y_lm(b) for orthonormal real harmonics on S^(n-1)."""
    if n == 2:
        t = np.arccos(np.clip(cosang, -1, 1))
        return (1.0 if l == 0 else 2.0) * np.cos(l * t) / (2 * np.pi)
    if n == 3:
        return (2 * l + 1) / (4 * np.pi) * special.eval_legendre(l, np.clip(cosang, -1, 1))
    raise NotImplementedError


class RadialBasis:
    """Isotropic functions c_k L_k^(n/2-1)(|v|^2/2) M(v)/sqrt|S^(n-1)|, k < K."""

    def __init__(self, n, K):
        self.n = n
        self.K = K
        self.size = K
        self._y0 = np.sqrt(zonal_kernel(n, 0, 1.0))

    def poly(self, v):
        v = np.asarray(v, dtype=float)
        x2 = np.sum(v * v, axis=-1)
        return sector_radial(self.n, 0, self.K, x2) * self._y0

    def __call__(self, v):
        return self.poly(v) * sqrt_maxwellian(v)[..., None]

    def project(self, f, order=40):
        from .quadrature import half_range_rule, sphere_area
        r, w = half_range_rule(order, self.n - 1, c=0.5)
        pts = np.zeros((r.size, self.n))
        pts[:, 0] = r
        ratio = f(pts) / sqrt_maxwellian(pts)
        return sphere_area(self.n) * (2 * np.pi) ** (-self.n / 2) * (w * ratio) @ self.poly(pts)

    def null_coefficients(self):
        rows = []
        for g in (lambda v: np.ones(v.shape[:-1]), lambda v: np.sum(v * v, axis=-1)):
            rows.append(self.project(lambda v, g=g: g(v) * sqrt_maxwellian(v)))
        return np.array(rows)
