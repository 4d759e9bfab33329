"""Pure numpy implementations of the hot loops; the compiled core mirrors
these signatures."""

from __future__ import annotations

import itertools

import numpy as np


def lattice_offsets(n, radius):
    """Integer offsets d != 0 with |d| <= radius, one from each +-pair."""
    r = int(np.floor(radius))
    out = []
    for d in itertools.product(range(-r, r + 1), repeat=n):
        if sum(x * x for x in d) > radius * radius or not any(d):
            continue
        # keep the lexicographically positive representative
        first = next(x for x in d if x)
        if first > 0:
            out.append(d)
    return np.array(out, dtype=np.int64).reshape(-1, n)


def _slices(d, shape):
    a, b = [], []
    for di, m in zip(d, shape):
        if di >= 0:
            a.append(slice(0, m - di))
            b.append(slice(di, m))
        else:
            a.append(slice(-di, m))
            b.append(slice(0, m + di))
    return tuple(a), tuple(b)


def nsg_pair_sum(F, P, V, h, s, d_min, d_max=1.0):
    """sum over ordered grid pairs with d_min <= d <= d_max of
    P(v) P(v') (F(v') - F(v))^2 / d^(n+2s), times the cell volume squared.

    F, P: arrays on an n-dimensional grid; V: grid points, shape F.shape + (n,).
    """
    n = F.ndim
    offsets = lattice_offsets(n, d_max / h)
    total = 0.0
    height = 0.5 * np.sum(V * V, axis=-1)
    for d in offsets:
        a, b = _slices(d, F.shape)
        dv = V[b] - V[a]
        dd = np.sqrt(np.sum(dv * dv, axis=-1) + (height[b] - height[a]) ** 2)
        keep = (dd >= d_min) & (dd <= d_max)
        if not np.any(keep):
            continue
        diff = F[b] - F[a]
        term = P[a] * P[b] * diff * diff / np.where(keep, dd, 1.0) ** (n + 2 * s)
        total += np.sum(np.where(keep, term, 0.0))
    return 2.0 * total * h ** (2 * n)
