"""Null space, the projection P, hydrodynamic and moment coefficients, and the
interaction functional on the torus.

Velocity fields are handled through a representation: either coefficients in
an orthonormal Hermite basis (inner product = dot product) or values on a
velocity quadrature (inner product = weighted sum). The last axis of every
field array is the velocity axis, so x-dependent fields broadcast.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .basis import HermiteBasis, sqrt_maxwellian


class HermiteRep:
    """Fields as coefficients in an orthonormal Hermite basis."""

    def __init__(self, basis: HermiteBasis):
        self.basis = basis
        self.n = basis.n

    def of(self, func):
        return self.basis.project(func)

    def dot(self, f, g):
        return np.tensordot(f, g, axes=([-1], [-1]))

    def values(self, f, v):
        return np.asarray(f) @ self.basis(v).T


class GridRep:
    """Fields as values on a velocity quadrature (points, weights)."""

    def __init__(self, points, weights):
        self.points = np.asarray(points, dtype=float).reshape(-1, np.shape(points)[-1])
        self.weights = np.broadcast_to(np.asarray(weights, dtype=float), self.points.shape[:1])
        self.n = self.points.shape[-1]

    @classmethod
    def from_grid(cls, grid):
        pts = grid.points.reshape(-1, grid.n)
        return cls(pts, np.full(pts.shape[0], grid.cell))

    def of(self, func):
        return np.asarray(func(self.points), dtype=float)

    def dot(self, f, g):
        return np.tensordot(np.asarray(f) * self.weights, g, axes=([-1], [-1]))


def null_functions(n):
    """sqrt(mu), v_i sqrt(mu), |v|^2 sqrt(mu)."""
    fs = [lambda v: sqrt_maxwellian(v)]
    fs += [lambda v, i=i: v[..., i] * sqrt_maxwellian(v) for i in range(n)]
    fs += [lambda v: np.sum(v * v, axis=-1) * sqrt_maxwellian(v)]
    return fs


def moment_labels(n):
    """Index set of the macroscopic equations, in the order of moment_functions."""
    labels = [("c", i) for i in range(n)]
    labels += [("i", i) for i in range(n)]
    labels += [("ij", (i, j)) for i, j in itertools.combinations(range(n), 2)]
    labels += [("b", i) for i in range(n)]
    labels += [("a", None)]
    return labels


def moment_functions(n):
    """v_i|v|^2, v_i^2, v_i v_j (i<j), v_i, 1, each times sqrt(mu)."""
    M = sqrt_maxwellian
    fs = [lambda v, i=i: v[..., i] * np.sum(v * v, -1) * M(v) for i in range(n)]
    fs += [lambda v, i=i: v[..., i] ** 2 * M(v) for i in range(n)]
    fs += [lambda v, i=i, j=j: v[..., i] * v[..., j] * M(v)
           for i, j in itertools.combinations(range(n), 2)]
    fs += [lambda v, i=i: v[..., i] * M(v) for i in range(n)]
    fs += [lambda v: M(v)]
    return fs


class _SpanBasis:
    """A finite family of functions in a representation, with its Gram solve."""

    def __init__(self, rep, funcs, cond_max=1e10):
        self.rep = rep
        self.E = np.array([rep.of(f) for f in funcs])        # (m, dof)
        self.gram = rep.dot(self.E, self.E)
        cond = np.linalg.cond(self.gram)
        if not np.isfinite(cond) or cond > cond_max:
            raise ValueError(f"Gram matrix ill-conditioned (cond {cond:.3g}); refine the grid")
        self.gram_inv = np.linalg.inv(self.gram)
        self.cond = cond

    @property
    def size(self):
        return self.E.shape[0]

    def coefficients(self, f):
        """Coefficients of the orthogonal projection of f onto the span."""
        rhs = self.rep.dot(f, self.E)                         # (..., m)
        return rhs @ self.gram_inv.T

    def synthesize(self, coeffs):
        return np.asarray(coeffs) @ self.E


@dataclass
class HydroCoefficients:
    a: np.ndarray
    b: np.ndarray          # (..., n)
    c: np.ndarray

    def as_array(self):
        return np.concatenate([self.a[..., None], self.b, self.c[..., None]], axis=-1)


class NullBasis(_SpanBasis):
    def __init__(self, rep):
        super().__init__(rep, null_functions(rep.n))


class MomentBasis(_SpanBasis):
    def __init__(self, rep):
        super().__init__(rep, moment_functions(rep.n))
        self.labels = moment_labels(rep.n)
        n = rep.n
        expected = 3 * n + 1 + n * (n - 1) // 2
        if self.size != expected:
            raise AssertionError(f"moment basis has {self.size} functions, expected {expected}")


def project_P(rep, f, null=None):
    """(P f, hydrodynamic coefficients a, b, c)."""
    null = null or NullBasis(rep)
    coef = null.coefficients(f)
    n = rep.n
    hydro = HydroCoefficients(coef[..., 0], coef[..., 1:1 + n], coef[..., 1 + n])
    return null.synthesize(coef), hydro


def micro_part(rep, f, null=None):
    Pf, _ = project_P(rep, f, null)
    return np.asarray(f) - Pf


def moment_coefficients(rep, f, null=None, moments=None):
    """r_mu for mu in the index set: base coefficients of {I - P} f.

    Returns a dict keyed by moment_labels; C_k^mu is the inverse Gram matrix.
    """
    moments = moments or MomentBasis(rep)
    r = moments.coefficients(micro_part(rep, f, null))
    return {lab: r[..., k] for k, lab in enumerate(moments.labels)}


# --- torus ---------------------------------------------------------------

@dataclass(frozen=True)
class Torus:
    """[0, 2 pi L)^d with N points per side and spectral derivatives."""

    d: int = 2
    N: int = 8
    L: float = 1.0

    @property
    def axis(self):
        return 2 * np.pi * self.L * np.arange(self.N) / self.N

    @property
    def points(self):
        return np.stack(np.meshgrid(*([self.axis] * self.d), indexing="ij"), axis=-1)

    @property
    def volume(self):
        return (2 * np.pi * self.L) ** self.d

    @property
    def wavenumbers(self):
        k = np.fft.fftfreq(self.N, d=1.0 / self.N) / self.L
        return np.stack(np.meshgrid(*([k] * self.d), indexing="ij"), axis=-1)

    def integrate(self, u):
        return float(np.sum(u) * self.volume / self.N ** self.d)

    def deriv(self, u, alpha):
        """d^alpha u for u on the x-grid (leading d axes)."""
        if not any(alpha):
            return np.asarray(u, dtype=float)
        axes = tuple(range(self.d))
        U = np.fft.fftn(u, axes=axes)
        k = self.wavenumbers
        sym = np.ones(k.shape[:-1], dtype=complex)
        for i, a in enumerate(alpha):
            if a:
                ki = k[..., i].copy()
                if a % 2 and self.N % 2 == 0:
                    # odd derivatives drop the Nyquist mode
                    ki[np.isclose(np.abs(ki), self.N / (2 * self.L))] = 0.0
                sym = sym * (1j * ki) ** a
        extra = (1,) * (np.ndim(u) - self.d)
        return np.real(np.fft.ifftn(U * sym.reshape(sym.shape + extra), axes=axes))


def _unit(d, i):
    return tuple(int(a == i) for a in range(d))


def _add(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def interaction_functional(rep, torus, f, K, null=None, moments=None):
    """I(t) = sum_{|alpha| <= K-1} (I_a + I_b + I_c) for a field f on the
    x-grid (torus.d leading axes, velocity last)."""
    f = np.asarray(f)
    if f.ndim == 1:
        warnings.warn("homogeneous field: the interaction functional is 0", stacklevel=2)
        return 0.0
    n = rep.n
    d = torus.d
    _, hydro = project_P(rep, f, null)
    r = moment_coefficients(rep, f, null, moments)
    a, b, c = hydro.a, hydro.b, hydro.c
    D = torus.deriv
    total = 0.0
    for order in range(K):
        for alpha in itertools.product(range(order + 1), repeat=d):
            if sum(alpha) != order:
                continue
            da = D(a, alpha)
            # I_a
            divb = sum(D(b[..., i], _add(alpha, _unit(d, i))) for i in range(d))
            term = divb * da
            for i in range(d):
                term = term + D(r[("b", i)], _add(alpha, _unit(d, i))) * da
            total += torus.integrate(term)
            # I_b
            for i in range(d):
                dbi = D(b[..., i], alpha)
                for j in range(d):
                    if j == i:
                        continue
                    rij = r[("ij", (min(i, j), max(i, j)))]
                    total -= torus.integrate(D(rij, _add(alpha, _unit(d, j))) * dbi)
            # I_c
            for i in range(d):
                total -= torus.integrate(D(r[("c", i)], alpha)
                                         * D(c, _add(alpha, _unit(d, i))))
    return float(total)


def macroscopic_a_residual(times, a, r_a, l_a, gamma_a, min_samples=5):
    """Relative residual of d_t a + d_t r_a - l_a - Gamma_a at interior times.

    Time derivatives are second-order central differences, so a, r_a, l_a and
    Gamma_a are sampled at the same times (x-dependence allowed on trailing
    axes).
    """
    t = np.asarray(times, dtype=float)
    if t.size < min_samples:
        raise ValueError(f"too few time samples ({t.size}) for a residual")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-8):
        raise ValueError("uniform time sampling required")
    a, r_a, l_a, gamma_a = (np.asarray(x, dtype=float) for x in (a, r_a, l_a, gamma_a))
    dta = (a[2:] - a[:-2]) / (2 * dt[0])
    dtr = (r_a[2:] - r_a[:-2]) / (2 * dt[0])
    rhs = l_a[1:-1] + gamma_a[1:-1]
    res = dta + dtr - rhs
    scale = max(np.linalg.norm(dta), np.linalg.norm(rhs), np.linalg.norm(dtr))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(res) / scale)


# --- coercivity on the micro part ------------------------------------------------

def coercivity_with_projection(params, N=8, n_samples=50, seed=0,
                               levels=((0, 16, 48), (2, 24, 64))):
    """delta = min over random g of <L g, g> / |{I-P}g|^2_{N^{s,gamma}}.

    g is drawn in the Hermite basis of degree N (no projection imposed) and
    re-evaluated at each level (extra basis degree, angular nodes, grid size):
    a finer level embeds the same g in a larger basis. Returns per-level delta
    and the ratios of the finest level.
    """
    from .basis import HermiteField
    from .estimates import embed, random_coefficients
    from .matrices import assemble_L
    from .norms import VelocityGrid, WeightSpec, seminorm_Nsg
    if params.n != 2:
        raise ValueError("the coercivity probe uses the n = 2 tensor basis")
    small = HermiteBasis(2, N)
    coeffs = random_coefficients(small, n_samples, np.random.default_rng(seed))
    spec = WeightSpec.from_params(params)
    deltas, ratios = [], None
    for extra, theta, gridN in levels:
        basis = HermiteBasis(2, N + extra)
        A = assemble_L(params, basis, theta)
        rep = HermiteRep(basis)
        null = NullBasis(rep)
        grid = VelocityGrid(2, gridN, 8.0)
        G = embed(small, basis, coeffs)
        num = np.einsum("ki,ij,kj->k", G, A, G)
        den = np.array([seminorm_Nsg(spec, HermiteField(basis, micro_part(rep, g, null)), grid) ** 2
                        for g in G])
        ratios = num / den
        deltas.append(float(ratios.min()))
    return {"delta": deltas, "ratios": ratios.tolist()}
