"""Gauss rules and collision-sphere node sets."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special


@lru_cache(maxsize=None)
def _leg(m):
    return np.polynomial.legendre.leggauss(m)


def gauss_legendre(m, a, b):
    x, w = _leg(m)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


@lru_cache(maxsize=None)
def _jac(m, beta):
    return special.roots_jacobi(m, 0.0, beta)


def gauss_jacobi(m, alpha, a, b):
    """Rule for int_a^b (t-a)^alpha g(t) dt."""
    x, w = _jac(m, float(alpha))
    h = 0.5 * (b - a)
    t = a + h * (1.0 + x)
    return t, w * h ** (alpha + 1.0)


@lru_cache(maxsize=None)
def _glag(m, alpha):
    return special.roots_genlaguerre(m, alpha)


def half_range_rule(m, a, c=0.25):
    """Rule for int_0^inf r^a exp(-c r^2) g(r) dr, exact for even polynomials g
    of degree < 4m."""
    x, w = _glag(m, 0.5 * (a - 1.0))
    r = np.sqrt(x / c)
    return r, w * 0.5 * c ** (-0.5 * (a + 1.0))


@lru_cache(maxsize=None)
def hermite_rule(m):
    """Physicists' Gauss-Hermite rule, weight exp(-x^2)."""
    return special.roots_hermite(m)


def tensor_hermite(m, n, scale=1.0):
    """Nodes/weights for int_{R^n} exp(-|x|^2/scale^2) g(x) dx."""
    x, w = hermite_rule(m)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1) * scale
    wg = np.meshgrid(*([w] * n), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    return nodes, weights * scale ** n


def sphere_rule(n, m):
    """Unit vectors and weights on S^(n-1); exact for polynomials of degree < m."""
    if n == 2:
        na = max(m, 2)
        a = 2 * np.pi * np.arange(na) / na
        return np.stack([np.cos(a), np.sin(a)], axis=-1), np.full(na, 2 * np.pi / na)
    if n == 3:
        mz = max((m + 1) // 2, 1)
        z, wz = _leg(mz)
        na = max(m, 2)
        a = 2 * np.pi * np.arange(na) / na
        rho = np.sqrt(1 - z * z)
        pts = np.stack([
            np.outer(rho, np.cos(a)).ravel(),
            np.outer(rho, np.sin(a)).ravel(),
            np.repeat(z, na),
        ], axis=-1)
        return pts, np.repeat(wz, na) * (2 * np.pi / na)
    raise NotImplementedError("sphere rules implemented for n = 2, 3")


def sphere_area(n):
    return 2 * np.pi ** (n / 2) / special.gamma(n / 2)


def orthonormal_complement(u):
    """For unit vectors u (..., n), tangent frames (..., n-1, n)."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    if n == 2:
        return np.stack([-u[..., 1], u[..., 0]], axis=-1)[..., None, :]
    if n == 3:
        # pick the helper axis least aligned with u
        ax = np.argmin(np.abs(u), axis=-1)
        e = np.zeros_like(u)
        np.put_along_axis(e, ax[..., None], 1.0, axis=-1)
        p1 = e - np.sum(e * u, axis=-1, keepdims=True) * u
        p1 /= np.linalg.norm(p1, axis=-1, keepdims=True)
        p2 = np.cross(u, p1)
        return np.stack([p1, p2], axis=-2)
    raise NotImplementedError("tangent frames implemented for n = 2, 3")


def azimuth_directions(n, n_az):
    """Azimuthal offsets as coefficient vectors in the tangent frame.

    The set is closed under negation so odd-in-azimuth integrands cancel.
    """
    if n == 2:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 3:
        if n_az % 2:
            n_az += 1
        a = 2 * np.pi * np.arange(n_az) / n_az
        return np.stack([np.cos(a), np.sin(a)], axis=-1), np.full(n_az, 2 * np.pi / n_az)
    raise NotImplementedError


def sigma_from_angles(uhat, theta, az_coef):
    """sigma = cos(theta) uhat + sin(theta) e(az) for tangent coefficients az_coef.

    uhat (..., n); theta broadcastable to (...,); az_coef (n-1,).
    """
    frame = orthonormal_complement(uhat)
    e = np.einsum("...in,i->...n", frame, az_coef)
    th = np.asarray(theta)[..., None]
    return np.cos(th) * uhat + np.sin(th) * e


def shell_theta_range(r, k):
    """Deviation-angle interval of shell k at relative speed r (clipped to pi/2)."""
    r = np.asarray(r, dtype=float)
    cap = np.sqrt(0.5)
    lo = 2 * np.arcsin(np.minimum(2.0 ** (-k - 1) / r, cap))
    hi = 2 * np.arcsin(np.minimum(2.0 ** (-k) / r, cap))
    return lo, hi


def shell_theta_nodes(r, k, m, s):
    """Gauss nodes in theta on shell k; weights carry theta^(-1-2s).

    r may be an array; returns arrays (..., m). Empty shells get zero weights.
    """
    lo, hi = shell_theta_range(r, k)
    x, w = _leg(m)
    h = 0.5 * (hi - lo)
    th = lo[..., None] + h[..., None] * (x + 1.0)
    safe = np.where(th > 0, th, 1.0)
    wt = h[..., None] * w * safe ** (-1.0 - 2.0 * s)
    wt = np.where(h[..., None] > 0, wt, 0.0)
    th = np.where(h[..., None] > 0, th, np.pi / 4)
    return th, wt


def min_shell(r_max):
    """Smallest k whose shell meets [0, r_max/sqrt 2]."""
    return int(np.floor(-np.log2(r_max * np.sqrt(0.5)))) - 1


def tanh_sinh(m, a=0.0, b=1.0, span=3.2):
    """Double-exponential rule with m nodes on [a, b]; suited to integrands
    with flat or algebraic endpoint behavior."""
    h = 2.0 * span / (m - 1)
    t = -span + h * np.arange(m)
    s = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(s)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2
    return a + 0.5 * (b - a) * (x + 1.0), 0.5 * (b - a) * w
