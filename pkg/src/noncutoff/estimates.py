"""Measured constants of the N, K and Gamma estimates on random Hermite data.

For gamma = 0 the hard weight w = <v> gives w^(2 ell) = (1 + |v|^2)^ell, a
polynomial: multiplying a degree-N expansion by it lands exactly in the basis
of degree N + 2 ell. Every pairing <w^(2 ell) A g, h> is then a matrix form in
that enlarged basis. Norms are evaluated on velocity grids.
"""

from __future__ import annotations

import numpy as np

from .basis import HermiteBasis, HermiteField
from .norms import VelocityGrid, WeightSpec, norm_L2_ell, seminorm_Nsg

LEVELS = ({"theta_nodes": 16, "grid": 48}, {"theta_nodes": 24, "grid": 64})


def embed(small, big, c):
    """Coefficients of a small-basis expansion in a larger tensor basis."""
    lookup = big.ladder()
    out = np.zeros(c.shape[:-1] + (big.size,))
    for k, a in enumerate(small.indices):
        out[..., lookup[tuple(a)]] = c[..., k]
    return out


def weight_operator(big, ell):
    """Matrix of g -> (1 + |v|^2)^ell g, exact on degrees <= big.N - 2 ell."""
    if int(ell) != ell or ell < 0:
        raise ValueError("the polynomial weight needs an integer ell >= 0")
    V2 = sum(J @ J for J in (big.multiplication(i) for i in range(big.n)))
    W = np.eye(big.size) + V2
    return np.linalg.matrix_power(W, int(ell))


def random_coefficients(basis, count, rng):
    """Smooth random expansions: coefficients damped by (1 + degree)^-2."""
    deg = basis.indices.sum(1)
    return rng.normal(size=(count, basis.size)) / (1.0 + deg) ** 2


def _ball_l2(field, grid, radius):
    V = grid.points
    F = field(V)
    inside = np.linalg.norm(V, axis=-1) <= radius
    return float(np.sum(np.where(inside, F * F, 0.0)) * grid.cell)


def _lower_pair(q, x, y):
    """(c, C) with q >= c x - C y on every sample: C = 0 when q / x > 0
    already; otherwise c is half the median ratio and C the smallest that works."""
    r = q / x
    if r.min() > 0:
        return float(r.min()), 0.0
    c = 0.5 * float(np.median(r))
    return c, float(max(0.0, np.max((c * x - q) / y)))


def _level(params, N, ell, coeffs, triples, lev, radius, eta):
    from .evolve import build_operators
    if params.n != 2 or params.gamma != 0.0:
        raise ValueError("the polynomial-weight reduction needs n = 2 and gamma = 0")
    small = HermiteBasis(2, N)
    big = HermiteBasis(2, N + 2 * int(ell))
    ops = build_operators(params, big, lev["theta_nodes"])
    W = weight_operator(big, ell)
    grid = VelocityGrid(2, lev["grid"], 8.0)
    spec = WeightSpec.from_params(params, ell)
    G = embed(small, big, coeffs)
    WG = G @ W.T
    fld = lambda c: HermiteField(small, c)
    nsg = np.array([seminorm_Nsg(spec, fld(c), grid) ** 2 for c in coeffs])
    ball = np.array([_ball_l2(fld(c), grid, radius) for c in coeffs])
    l2w = np.array([norm_L2_ell(spec, fld(c), grid, rho=spec.rate) ** 2 for c in coeffs])
    qN = np.einsum("ki,ij,kj->k", WG, ops.N, G)
    qK = np.einsum("ki,ij,kj->k", WG, ops.K, G)
    out = {"upper_N": float(np.max(np.abs(qN) / nsg))}
    out["lower_c"], out["lower_C"] = _lower_pair(qN, nsg, ball)
    out["compact_C_eta"] = float(max(0.0, np.max((np.abs(qK) - eta * l2w) / ball)))
    g, h, f = (embed(small, big, coeffs[t]) for t in triples.T)
    tri = np.abs(np.einsum("ijk,ti,tj,tk->t", ops.T, g, h, f @ W.T))
    l2 = np.array([norm_L2_ell(spec, fld(c), grid) for c in coeffs])
    nn = np.sqrt(nsg)
    a, b, c_ = triples.T
    rhs = (l2[a] * nn[b] + nn[a] * l2[b]) * nn[c_]
    out["trilinear_C"] = float(np.max(tri / rhs))
    return out


def estimate_ratio_suites(params, N=6, ells=(0, 1), n_samples=20, seed=0, radius=3.0, eta=0.1,
                          levels=LEVELS):
    """Measured constants for
      (i)   |<w^2l N g, g>| <= C |g|^2_N                        -> upper_N
      (ii)  <w^2l N g, g> >= c |g|^2_N - C |g|^2_{L^2(B)}       -> lower_c, lower_C
      (iii) |<w^2l K g, g>| <= eta |w^l g|^2_{L^2_{gamma+2s}} + C_eta |g|^2_{L^2(B)}
                                                                 -> compact_C_eta
      (iv)  |<w^2l Gamma(g, h), f>| <= C (|g| |h|_N + |g|_N |h|) |f|_N
                                                                 -> trilinear_C
    at each refinement level, for every ell. B is the ball of the given radius,
    |.|_N the N^{s,gamma}_ell norm and |.| the L^2_ell norm.
    """
    rng = np.random.default_rng(seed)
    coeffs = random_coefficients(HermiteBasis(2, N), n_samples, rng)
    triples = rng.integers(0, n_samples, size=(n_samples, 3))
    result = {}
    for ell in ells:
        per = [_level(params, N, ell, coeffs, triples, lev, radius, eta) for lev in levels]
        result[ell] = {k: [p[k] for p in per] for k in per[0]}
    return result


def refinement_spread(values):
    """|fine / coarse - 1| for a two-level list (0 when both vanish)."""
    a, b = values
    if a == b:
        return 0.0
    return abs(b / a - 1.0) if a != 0 else float("inf")
