"""Weights, weighted Sobolev norms, the anisotropic N^{s,gamma} norm, the
collision semi-norm B_ell and the Littlewood-Paley square function."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .basis import sqrt_maxwellian
from .core import nsg_pair_sum
from .kernel import KernelParams
from .lp import japanese, lp_apply, metric_d
from .quadrature import gauss_legendre, sphere_area


@dataclass(frozen=True)
class WeightSpec:
    gamma: float
    s: float
    ell: float = 0.0

    @classmethod
    def from_params(cls, params: KernelParams, ell=0.0):
        return cls(params.gamma, params.s, ell)

    @property
    def rate(self):
        return self.gamma + 2 * self.s

    @property
    def regime(self):
        # gamma + 2s = 0 belongs to the hard branch
        return "hard" if self.rate >= 0 else "soft"

    def with_ell(self, ell):
        return WeightSpec(self.gamma, self.s, ell)


def weight_w(spec, v):
    """<v> for hard potentials, <v>^(-gamma-2s) for soft ones."""
    jv = japanese(v)
    return jv if spec.regime == "hard" else jv ** (-spec.rate)


@dataclass(frozen=True)
class VelocityGrid:
    """Cell-centred uniform grid on [-L, L]^n."""

    n: int = 2
    N: int = 32
    L: float = 8.0

    @property
    def h(self):
        return 2.0 * self.L / self.N

    @property
    def axis(self):
        return -self.L + self.h * (np.arange(self.N) + 0.5)

    @property
    def points(self):
        return np.stack(np.meshgrid(*([self.axis] * self.n), indexing="ij"), axis=-1)

    @property
    def cell(self):
        return self.h ** self.n

    def refined(self):
        return VelocityGrid(self.n, 2 * self.N, self.L)


def sample(grid, f):
    """Values of f on the grid; arrays are passed through after a shape check."""
    if callable(f):
        return np.asarray(f(grid.points), dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.shape != (grid.N,) * grid.n:
        raise ValueError(f"field shape {arr.shape} does not match grid {(grid.N,) * grid.n}")
    return arr


def as_callable(grid, f):
    """Callable view of f; grid arrays are interpolated (zero outside)."""
    if callable(f):
        return f
    arr = sample(grid, f)
    interp = RegularGridInterpolator((grid.axis,) * grid.n, arr, method="cubic",
                                     bounds_error=False, fill_value=0.0)
    return lambda v: interp(np.asarray(v, dtype=float).reshape(-1, grid.n)).reshape(
        np.shape(v)[:-1])


def _multi_indices(n, order):
    return [b for b in itertools.product(range(order + 1), repeat=n) if sum(b) == order]


def derivative(grid, f, beta):
    """d_beta f on the grid: analytic when f provides deriv, otherwise
    second-order central differences."""
    if not any(beta):
        return sample(grid, f)
    if callable(f) and hasattr(f, "deriv"):
        return np.asarray(f.deriv(tuple(beta), grid.points), dtype=float)
    out = sample(grid, f)
    for axis, k in enumerate(beta):
        for _ in range(k):
            out = np.gradient(out, grid.h, axis=axis, edge_order=2)
    return out


def norm_L2_ell(spec, f, grid=None, rho=0.0):
    """|w^ell f|_{L^2_rho}, with L^2_rho weighted by <v>^rho."""
    grid = grid or VelocityGrid()
    F = sample(grid, f)
    V = grid.points
    wt = weight_w(spec, V) ** (2 * spec.ell) * japanese(V) ** rho
    return float(np.sqrt(np.sum(wt * F * F) * grid.cell))


def norm_H_K_ell(spec, f, K, grid=None, parts=False):
    """(sum_{|beta| <= K} |w^(ell - |beta|) d_beta f|^2_{L^2})^(1/2)."""
    if K < 0 or K > 3:
        raise ValueError(f"K={K} outside the central-difference range 0..3")
    grid = grid or VelocityGrid()
    V = grid.points
    w = weight_w(spec, V)
    pieces = {}
    for order in range(K + 1):
        for beta in _multi_indices(grid.n, order):
            D = derivative(grid, f, beta)
            pieces[beta] = float(np.sum(w ** (2 * (spec.ell - order)) * D * D) * grid.cell)
    total = float(np.sqrt(sum(pieces.values())))
    return (total, pieces) if parts else total


def near_diagonal(spec, f, grid, radius, outer_radius=None):
    """Local correction for the pairs with d(v,v') < outer_radius.

    To leading order the integrand near v' = v is the quadratic form
    (g . delta)^2 / d_loc^(n+2s) with d_loc^2 = delta^T A delta, A = I + v v^T.
    The continuum integral of that form over d < outer_radius replaces the
    grid sum of the same form over radius <= d < outer_radius, so the
    lattice error at the exclusion edge cancels at leading order. With
    outer_radius = radius this is the plain excluded-ball integral.
    """
    n = grid.n
    h = grid.h
    outer_radius = radius if outer_radius is None else outer_radius
    V = grid.points
    grad = np.stack([derivative(grid, f, tuple(int(a == i) for a in range(n)))
                     for i in range(n)], axis=-1)
    jv = japanese(V)
    g2 = np.sum(grad * grad, axis=-1) - np.sum(V * grad, axis=-1) ** 2 / jv ** 2
    c = sphere_area(n) / (n * (2.0 - 2.0 * spec.s))
    P2 = jv ** (spec.rate + 1.0) * weight_w(spec, V) ** (2 * spec.ell)
    cont = c * outer_radius ** (2.0 - 2.0 * spec.s) * g2 / jv
    lattice = np.zeros_like(cont)
    if outer_radius > radius:
        r = int(np.ceil(outer_radius / h))
        for d in itertools.product(range(-r, r + 1), repeat=n):
            if not any(d):
                continue
            delta = h * np.asarray(d, dtype=float)
            dd = metric_d(V, V + delta)
            dloc = np.sqrt(np.sum(delta * delta) + (V @ delta) ** 2)
            keep = (dd >= radius) & (dd < outer_radius)
            lattice += np.where(keep, (grad @ delta) ** 2 / dloc ** (n + 2 * spec.s), 0.0)
        lattice *= grid.cell
    return float(np.sum(P2 * (cont - lattice)) * grid.cell)


def seminorm_Nsg(spec, f, grid=None, correction=True, parts=False, local=2.0):
    """|f|_{N^{s,gamma}_ell}: weighted L^2_{gamma+2s} part plus the double
    integral of (<v><v'>)^((rate+1)/2) (w w')^ell (f'-f)^2 / d^(n+2s) over d <= 1.

    Grid pairs with d < h are dropped and replaced, together with the
    lattice error of the annulus h <= d < local*h, by near_diagonal.
    """
    grid = grid or VelocityGrid()
    F = sample(grid, f)
    V = grid.points
    jv = japanese(V)
    P = jv ** (0.5 * (spec.rate + 1.0)) * weight_w(spec, V) ** spec.ell
    l2 = norm_L2_ell(spec, F, grid, rho=spec.rate) ** 2
    pair = nsg_pair_sum(F, P, V, grid.h, spec.s, d_min=grid.h)
    corr = near_diagonal(spec, f, grid, grid.h, local * grid.h) if correction else 0.0
    total = float(np.sqrt(l2 + pair + corr))
    if parts:
        return total, {"l2": l2, "pairs": pair, "near_diagonal": corr}
    return total


def nsg_oracle(spec, f, outer=48, L=6.0, r_nodes=24, ang_nodes=48):
    """Squared N^{s,gamma}_ell norm by polar quadrature around each outer
    point, with the r^(1-2s) behaviour at the diagonal in the Jacobi weight."""
    from .quadrature import gauss_jacobi, sphere_rule

    n = 2 if not hasattr(f, "center") else len(f.center)
    x, wx = gauss_legendre(outer, -L, L)
    V = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n)
    WV = np.prod(np.stack(np.meshgrid(*([wx] * n), indexing="ij"), -1).reshape(-1, n), -1)
    omega, wom = sphere_rule(n, ang_nodes)
    # radius where d(v, v + r omega) = 1, by bisection (monotone for r <= 4)
    lo = np.zeros((V.shape[0], omega.shape[0]))
    hi = np.ones_like(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        big = metric_d(V[:, None], V[:, None] + mid[..., None] * omega) > 1.0
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    rmax = 0.5 * (lo + hi)
    t, wt = gauss_jacobi(r_nodes, 1.0 - 2.0 * spec.s, 0.0, 1.0)
    r = rmax[..., None] * t
    vp = V[:, None, None, :] + r[..., None] * omega[None, :, None, :]
    d = metric_d(V[:, None, None, :], vp)
    P = lambda u: japanese(u) ** (0.5 * (spec.rate + 1.0)) * weight_w(spec, u) ** spec.ell
    diff = f(vp) - f(V)[:, None, None]
    # integrand r^(n-1) (...) / d^(n+2s), with r^(1-2s) moved into the weight
    core = P(V)[:, None, None] * P(vp) * diff * diff * r ** (n - 1) / d ** (n + 2 * spec.s)
    core = core / np.where(r > 0, r, 1.0) ** (1.0 - 2.0 * spec.s)
    inner = np.sum(core * wt * rmax[..., None] ** (2.0 - 2.0 * spec.s) * wom[None, :, None],
                   axis=(1, 2))
    l2 = np.sum(WV * japanese(V) ** spec.rate * weight_w(spec, V) ** (2 * spec.ell) * f(V) ** 2)
    return float(l2 + np.sum(WV * inner))


def seminorm_B_ell(params, spec, f, outer=None, quad=None, by_shell=False):
    """|f|_{B_ell}^2 = 1/2 int w^ell(v) int int B (f' - f)^2 M'_* M_*.

    With by_shell the per-shell values and the geometric tail estimate
    beyond the last shell are returned as well.
    """
    from .collision import SigmaQuadrature, outer_rule, tail_estimate
    from .quadrature import min_shell

    quad = quad or SigmaQuadrature(params)
    if outer is None:
        outer = outer_rule(12, params.n, scale=2.0)
    V, W = outer
    kmin = quad.k_min
    if kmin is None:
        kmin = min_shell(float(np.max(np.linalg.norm(V, axis=-1))) + quad.r_span)

    def integrand(v, vs, vp, vsp):
        diff = f(vp) - f(v)
        return diff * diff * sqrt_maxwellian(vsp) * sqrt_maxwellian(vs)

    rows = quad.integrate(V, integrand, by_shell=True, kmin=kmin)
    shells = np.stack([c for _, c in rows])                   # (V, k)
    per_shell = (0.5 * W * weight_w(spec, V) ** spec.ell) @ shells
    total = float(np.sum(per_shell))
    if by_shell:
        return total, per_shell, float(tail_estimate(per_shell, params.s))
    return total


def lp_square_norm(stack, spec, f, derivative_orders=(None, None), js=None, outer=16, L=6.0,
                   **kw):
    """sum_j 2^(2(s - |alpha|) j) int |d_beta tilde-grad^alpha Q_j f|^2 <v>^rate w^(2 ell - 2|beta|).

    derivative_orders = (alpha, beta); alpha is a multi-index in R^(n+1) acting
    on the kernel, beta has |beta| <= 1 and is applied by differentiating the kernel
    in v (d_i acts as 2^j (d_i + v_i d_(n+1)) on psi_j).

    spec may be a list; the projections are shared and a list is returned.
    """
    specs = list(spec) if isinstance(spec, (list, tuple)) else [spec]
    n = stack.n
    alpha, beta = derivative_orders
    nb = 0 if beta is None else sum(beta)
    if nb > 1:
        raise ValueError("only |beta| <= 1 is supported")
    js = range(stack.J_max + 1) if js is None else js
    x, wx = gauss_legendre(outer, -L, L)
    V = np.stack(np.meshgrid(*([x] * n), indexing="ij"), -1).reshape(-1, n)
    WV = np.prod(np.stack(np.meshgrid(*([wx] * n), indexing="ij"), -1).reshape(-1, n), -1)
    weights = [WV * japanese(V) ** sp.rate * weight_w(sp, V) ** (2 * sp.ell - 2 * nb) for sp in specs]
    base = tuple(alpha) if alpha is not None else (0,) * (n + 1)
    totals = np.zeros(len(specs))
    for j in js:
        which = "phi" if j == 0 else "psi"
        # 2^(-|alpha| j) tilde-grad^alpha Q_j is the same projection with d^alpha psi
        if nb == 0:
            q = lp_apply(stack, j, f, V, which, alpha=alpha, **kw)
        else:
            i = list(beta).index(1)
            ai = list(base)
            ai[i] += 1
            an = list(base)
            an[n] += 1
            q = 2.0 ** j * (lp_apply(stack, j, f, V, which, alpha=tuple(ai), **kw)
                            + V[:, i] * lp_apply(stack, j, f, V, which, alpha=tuple(an), **kw))
        for k, (sp, w) in enumerate(zip(specs, weights)):
            totals[k] += 2.0 ** (2 * sp.s * j) * np.sum(w * q * q)
    if isinstance(spec, (list, tuple)):
        return [float(t) for t in totals]
    return float(totals[0])


def compareton_rhs(spec, f, grid=None):
    """|f|^2_{L^2_rho} plus the d <= 1 double integral with rho = gamma + 2s."""
    return seminorm_Nsg(spec.with_ell(0.0), f, grid) ** 2


@dataclass
class NormReport:
    name: str
    l2_ell: float
    h_k_ell: float
    n_sg_ell: float
    b_ell: float
    lp_square: float
    ratios: dict = field(default_factory=dict)
    refinement: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def equivalence_report(fields, spec, params=None, stack=None, grid=None, K=1, refine=True,
                       names=None):
    """Norms of every field, ratios between variants and refinement deltas.

    fields is a list of callables (at least 5). B_ell needs params, the LP
    square function needs stack; either is skipped (reported as nan) if absent.
    """
    if not fields:
        raise ValueError("empty field list")
    if len(fields) < 5:
        raise ValueError(f"need at least 5 fields, got {len(fields)}")
    grid = grid or VelocityGrid()
    names = names or [f"field{i}" for i in range(len(fields))]
    out = []
    for name, f in zip(names, fields):
        l2 = norm_L2_ell(spec, f, grid)
        hk = norm_H_K_ell(spec, f, K, grid)
        nsg = seminorm_Nsg(spec, f, grid)
        b = np.sqrt(seminorm_B_ell(params, spec, f)) if params is not None else np.nan
        lp = np.sqrt(lp_square_norm(stack, spec, f)) if stack is not None else np.nan
        rep = NormReport(name, l2, hk, nsg, float(b), float(lp))
        base = nsg if nsg > 0 else np.nan
        rep.ratios = {"l2/nsg": l2 / base, "hk/nsg": hk / base, "b/nsg": float(b) / base,
                      "lp/nsg": float(lp) / base}
        if refine:
            fine = grid.refined()
            for key, coarse, val in (("l2_ell", l2, norm_L2_ell(spec, f, fine)),
                                     ("h_k_ell", hk, norm_H_K_ell(spec, f, K, fine)),
                                     ("n_sg_ell", nsg, seminorm_Nsg(spec, f, fine))):
                rep.refinement[key] = abs(val - coarse) / max(abs(val), 1e-300)
        out.append(rep)
    return out


def interpolation_check(spec, f, ell, m, grid=None):
    """(E_ell, E_(ell-1)^(m/(m+1)) E_(ell+m)^(1/(m+1))) with E_k = |w^k f|^2_{L^2_rate}.

    Hoelder in the weight gives E_ell <= the bound exactly.
    """
    grid = grid or VelocityGrid()
    E = lambda k: norm_L2_ell(spec.with_ell(k), f, grid, rho=spec.rate) ** 2
    return E(ell), E(ell - 1) ** (m / (m + 1)) * E(ell + m) ** (1 / (m + 1))
