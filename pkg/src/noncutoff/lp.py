"""Paraboloid lifting, the metric d and geometric Littlewood-Paley projections.

Kernels live on R^(n+1). phi is a finite combination of dilates of a radial
bump phi0, so every derivative of phi or psi is evaluated in closed form from
the derivatives of phi0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .quadrature import gauss_legendre, sphere_area, sphere_rule, tanh_sinh


# --- geometry -------------------------------------------------------------

@dataclass(frozen=True)
class LiftedPoint:
    v: tuple

    @property
    def height(self):
        return 0.5 * float(np.dot(self.v, self.v))

    def coords(self):
        return np.append(np.asarray(self.v, dtype=float), self.height)


def lift(v):
    """v -> (v, |v|^2 / 2)."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, 0.5 * np.sum(v * v, axis=-1, keepdims=True)], axis=-1)


def metric_d(v, v_prime):
    """d(v, v') = sqrt(|v - v'|^2 + (|v|^2 - |v'|^2)^2 / 4)."""
    v = np.asarray(v, dtype=float)
    vp = np.asarray(v_prime, dtype=float)
    a = np.sum((v - vp) ** 2, axis=-1)
    b = np.sum(v * v, axis=-1) - np.sum(vp * vp, axis=-1)
    return np.sqrt(a + 0.25 * b * b)


def japanese(v):
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


def tau_maps(v, u):
    """(tau_v u, tilde tau_v u): the isometry from R^n onto the tangent plane
    of the paraboloid at the lift of v."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    jv = japanese(v)[..., None]
    vu = np.sum(v * u, axis=-1, keepdims=True)
    v2 = np.sum(v * v, axis=-1, keepdims=True)
    coef = np.where(v2 > 0, (1.0 - 1.0 / jv) * vu / np.where(v2 > 0, v2, 1.0), 0.0)
    tu = u - coef * v
    return tu, np.concatenate([tu, vu / jv], axis=-1)


# --- radial bump and its derivatives ---------------------------------------

@lru_cache(maxsize=None)
def _q_poly(k):
    """q_k with h^(k)(rho) = exp(-t) q_k(t) / R^(2k), t = 1/(1 - rho/R^2),
    for h(rho) = exp(-t)."""
    q = np.polynomial.Polynomial([1.0])
    t2 = np.polynomial.Polynomial([0.0, 0.0, 1.0])
    for _ in range(k):
        q = t2 * (q.deriv() - q)
    return q


@lru_cache(maxsize=None)
def _chain_terms(alpha):
    """d^alpha h(|w|^2) = sum_k h^(k)(|w|^2) P_k(w); returns {k: {exps: coef}}."""
    dim = len(alpha)
    cur = {0: {(0,) * dim: 1.0}}
    for i, a in enumerate(alpha):
        for _ in range(a):
            new = {}
            for k, P in cur.items():
                for e, c in P.items():
                    e2 = list(e)
                    e2[i] += 1
                    d = new.setdefault(k + 1, {})
                    d[tuple(e2)] = d.get(tuple(e2), 0.0) + 2.0 * c
                    if e[i]:
                        e3 = list(e)
                        e3[i] -= 1
                        d = new.setdefault(k, {})
                        d[tuple(e3)] = d.get(tuple(e3), 0.0) + c * e[i]
            cur = new
    return {k: {e: c for e, c in P.items() if c != 0.0} for k, P in cur.items()}


@dataclass
class Bump:
    """phi0(w) = c exp(-1/(1 - |w|^2/R^2)) on R^(n+1), normalized so that its
    integral over any n-plane through the origin is 1."""

    n: int
    R: float

    @cached_property
    def const(self):
        x, w = gauss_legendre(400, 0.0, self.R)
        h = np.exp(-1.0 / (1.0 - (x / self.R) ** 2))
        return 1.0 / (sphere_area(self.n) * np.sum(w * h * x ** (self.n - 1)))

    def deriv(self, alpha, w):
        """d^alpha phi0 at points w (..., n+1); alpha=None means no derivative."""
        w = np.asarray(w, dtype=float)
        rho = np.sum(w * w, axis=-1) / self.R ** 2
        inside = rho < 1.0
        t = 1.0 / np.where(inside, 1.0 - rho, 1.0)
        base = np.where(inside & (t < 700.0), np.exp(-np.minimum(t, 700.0)), 0.0)
        if alpha is None or not any(alpha):
            return self.const * base
        out = np.zeros(w.shape[:-1])
        for k, P in _chain_terms(tuple(alpha)).items():
            poly = np.zeros(w.shape[:-1])
            for e, c in P.items():
                term = np.full(w.shape[:-1], c)
                for i, ei in enumerate(e):
                    if ei:
                        term = term * w[..., i] ** ei
                poly += term
            out += _q_poly(k)(t) / self.R ** (2 * k) * poly
        return self.const * base * out


# --- the Littlewood-Paley stack --------------------------------------------

def product_coefficients(n, M):
    """Coefficients a_m of prod_{0<|k|<=M} (1 - 2^(k-n) x)/(1 - 2^k) in powers of x,
    so phi = sum_m a_m D^m phi0."""
    poly = np.array([1.0])
    for k in range(-M, M + 1):
        if k == 0:
            continue
        poly = np.convolve(poly, np.array([1.0, -2.0 ** (k - n)])) / (1.0 - 2.0 ** k)
    return poly


@dataclass
class LPStack:
    n: int
    M: int
    R: float
    J_max: int
    phi_coef: np.ndarray
    psi_coef: np.ndarray
    bump: Bump
    report: dict = field(default_factory=dict)

    def coefficients(self, which):
        if which == "phi":
            return self.phi_coef
        if which == "psi":
            return self.psi_coef
        raise ValueError(f"unknown kernel {which!r}")

    def support(self, which):
        """Radius of the support ball."""
        return self.R * 2.0 ** (len(self.coefficients(which)) - 1)

    def kernel(self, w, which="psi", alpha=None):
        """d^alpha of phi or psi at points w in R^(n+1)."""
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape[:-1])
        na = 0 if alpha is None else sum(alpha)
        for m, c in enumerate(self.coefficients(which)):
            if c == 0.0:
                continue
            s = 2.0 ** m
            out += c * s ** (-na) * self.bump.deriv(alpha, w / s)
        return out

    def terms(self, which):
        """(coefficient, dilation 2^m) pairs."""
        return [(c, 2.0 ** m) for m, c in enumerate(self.coefficients(which)) if c != 0.0]


def build_lp_stack(M=4, n=2, J_max=6, check=True, tol_norm=1e-8, tol_moment=1e-6):
    """phi from the 2M-factor product, R = 2^(-2M), psi = phi - 2^(-n) D phi."""
    if M < 1:
        raise ValueError("M must be >= 1")
    R = 2.0 ** (-2 * M)
    a = product_coefficients(n, M)
    b = np.concatenate([a, [0.0]]) - 2.0 ** (-n) * np.concatenate([[0.0], a])
    stack = LPStack(n, M, R, J_max, a, b, Bump(n, R))
    if check:
        rng = np.random.default_rng(0)
        vs = np.vstack([np.zeros(n), rng.normal(scale=2.0, size=(5, n))])
        norm = max(abs(plane_moment(stack, v, (0,) * n, None, "phi")[0] - 1.0) for v in vs)
        worst = moment_residuals(stack, vs)
        stack.report = {"normalization_residual": float(norm),
                        "moment_residual": float(worst)}
        if norm > tol_norm:
            raise RuntimeError(f"normalization residual {norm:.2e} above {tol_norm:.0e}")
        if worst > tol_moment:
            raise RuntimeError(f"moment residual {worst:.2e} above {tol_moment:.0e}")
    return stack


def _multi_indices(dim, order):
    return [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) <= order]


def _monomials(u, powers):
    """u^p for each row p of powers, shape (points, len(powers))."""
    top = int(powers.max()) if powers.size else 0
    table = u[..., None] ** np.arange(top + 1)
    out = np.ones((u.shape[0], len(powers)))
    for d in range(u.shape[1]):
        out *= table[:, d, powers[:, d]]
    return out


def _plane_grid(stack, v, radius, r_nodes, ang_nodes):
    n = stack.n
    omega, wom = sphere_rule(n, ang_nodes)
    r, wr = gauss_legendre(r_nodes, 0.0, radius)
    u = (r[:, None, None] * omega[None]).reshape(-1, n)
    _, tu = tau_maps(np.broadcast_to(v, u.shape), u)
    wt = ((wr * r ** (n - 1))[:, None] * wom[None]).ravel()
    return u, tu, wt


def plane_moments(stack, v, powers, alpha, which="psi", r_nodes=160, ang_nodes=16):
    """Moments int u^p K(tilde tau_v u) du for each p in powers, and the
    scales int |u^p K(tilde tau_v u)| du. K is d^alpha of the chosen kernel."""
    powers = np.atleast_2d(np.asarray(powers))
    na = 0 if alpha is None else sum(alpha)
    val = np.zeros(len(powers))
    # one grid per dilated term keeps each bump resolved
    for c, s in stack.terms(which):
        u, tu, wt = _plane_grid(stack, v, stack.R * s, r_nodes, ang_nodes)
        k = c * s ** (-na) * stack.bump.deriv(alpha, tu / s)
        pu = _monomials(u, powers)
        val += (wt * k) @ pu
    u, tu, wt = _plane_grid(stack, v, stack.support(which), 4 * r_nodes, ang_nodes)
    pu = _monomials(u, powers)
    scale = np.abs(wt * stack.kernel(tu, which, alpha)) @ np.abs(pu)
    return val, scale


def plane_moment(stack, v, power, alpha, which="psi", **kw):
    val, scale = plane_moments(stack, v, [power], alpha, which, **kw)
    return float(val[0]), float(scale[0])


def moment_residuals(stack, vs, max_deg=None, max_alpha=None, which="psi"):
    """max over v, deg p <= max_deg, |alpha| <= max_alpha of |moment| / scale."""
    n = stack.n
    max_deg = stack.M if max_deg is None else max_deg
    max_alpha = stack.M if max_alpha is None else max_alpha
    powers = _multi_indices(n, max_deg)
    worst = 0.0
    for v in np.atleast_2d(vs):
        for alpha in _multi_indices(n + 1, max_alpha):
            val, scale = plane_moments(stack, v, powers, alpha, which,
                                       ang_nodes=max_deg + max_alpha + 8)
            ok = scale > 0
            if np.any(ok):
                worst = max(worst, float(np.max(np.abs(val[ok]) / scale[ok])))
    return worst


# --- projections ------------------------------------------------------------

def _support_radius(v, omega, j, rho, iters=60):
    """r*(v, omega) with |2^j (lift v - lift v')| = rho at v' = v + 2^(-j) tau_v (r omega).

    v (V, n), omega (A, n); returns r* (V, A) and tau_v omega (V, A, n).
    """
    vb = np.broadcast_to(v[:, None, :], (v.shape[0],) + omega.shape)
    tw = tau_maps(vb, np.broadcast_to(omega, vb.shape))[0]
    hi = np.broadcast_to(2.0 * rho * japanese(v)[:, None] + 1e-12, vb.shape[:-1]).copy()
    lo = np.zeros_like(hi)
    top = lift(vb)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        vp = vb + 2.0 ** (-j) * mid[..., None] * tw
        big = np.linalg.norm(2.0 ** j * (top - lift(vp)), axis=-1) > rho
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    return 0.5 * (lo + hi), tw


def lp_apply(stack, j, f, v, which="psi", alpha=None, kernel_factor=None, nodes=64,
             ang_nodes=32, level_check=True, absolute=False, chunk=64):
    """int 2^(nj) K(2^j (lift v - lift v')) <v'> f(v') dv' at each row of v.

    K is d^alpha of phi or psi, optionally multiplied by kernel_factor(w).
    With v' = v + 2^(-j) tau_v u the integral is taken in polar coordinates
    in u, one radial tanh-sinh rule per dilated term ending exactly at the
    edge of that term's support. absolute=True integrates the modulus of
    the integrand, the natural scale for quadrature residuals.
    """
    if level_check and j > stack.J_max:
        raise ValueError(f"level j={j} exceeds J_max={stack.J_max}")
    n = stack.n
    v = np.atleast_2d(np.asarray(v, dtype=float))
    omega, wom = sphere_rule(n, ang_nodes)
    x, wx = tanh_sinh(nodes)
    na = 0 if alpha is None else sum(alpha)
    if absolute:
        # assembled kernel on one grid reaching the outer support
        terms = [(None, stack.support(which) / stack.R)]
    else:
        terms = stack.terms(which)
    out = np.zeros(v.shape[0])
    for lo in range(0, v.shape[0], chunk):
        vq = v[lo:lo + chunk]
        top = lift(vq)[:, None, None, :]
        total = np.zeros(vq.shape[0])
        for coef, s in terms:
            rstar, tw = _support_radius(vq, omega, j, stack.R * s)
            r = rstar[..., None] * x
            wt = wom[:, None] * rstar[..., None] * wx * r ** (n - 1)
            vp = vq[:, None, None, :] + 2.0 ** (-j) * r[..., None] * tw[:, :, None, :]
            w = 2.0 ** j * (top - lift(vp))
            if coef is None:
                k = stack.kernel(w, which, alpha)
            else:
                k = coef * s ** (-na) * stack.bump.deriv(alpha, w / s)
            if kernel_factor is not None:
                k = k * kernel_factor(w)
            val = k * japanese(vp) * f(vp)
            total += np.sum(wt * (np.abs(val) if absolute else val), axis=(1, 2))
        out[lo:lo + chunk] = total / japanese(vq)
    return out


def project(stack, j, f, v, which="P", **kw):
    """P_j f or Q_j f (Q_0 = P_0)."""
    if j < 0:
        raise ValueError("j must be >= 0")
    if which == "P":
        return lp_apply(stack, j, f, v, "phi", **kw)
    if which == "Q":
        if j == 0:
            return lp_apply(stack, 0, f, v, "phi", **kw)
        return lp_apply(stack, j, f, v, "psi", **kw)
    raise ValueError(f"which must be 'P' or 'Q', got {which!r}")


def qj_one_decay(stack, j, sample_vs, **kw):
    """max over sample points of |Q_j(1)(v)|."""
    if j < 1:
        raise ValueError("j must be >= 1")
    one = lambda x: np.ones(np.asarray(x).shape[:-1])
    return float(np.max(np.abs(project(stack, j, one, sample_vs, "Q", **kw))))


def decay_slope(values, js):
    """Least-squares slope of log2 |values| against j."""
    return float(np.polyfit(np.asarray(js, dtype=float), np.log2(np.abs(values)), 1)[0])


def lp_smooth_rate(stack, f, alpha, k, v, js=range(1, 7), **kw):
    """Slope in j of max_v |2^(-|alpha| j) tilde-grad^alpha Q_j f(v)|."""
    na = 0 if alpha is None else sum(alpha)
    if not -1 <= k <= (stack.M - na) / 2:
        raise ValueError(f"k={k} outside the admissible range for M={stack.M}, |alpha|={na}")
    vals = [np.max(np.abs(lp_apply(stack, j, f, v, "psi", alpha=alpha, **kw))) for j in js]
    return decay_slope(vals, js), np.array(vals)


def commutator_decompose(stack, i, j, f, v, **kw):
    """max |[d_i, Q_j] f - (tilde Q_j f + Q_j tilde f)| over v, and the scale
    max int |integrand| of the pieces.

    d_i (Q_j f) is evaluated by differentiating the kernel:
    2^j (d_i psi + v_i d_(n+1) psi)_j; f must provide deriv(beta, v).
    """
    n = stack.n
    v = np.atleast_2d(np.asarray(v, dtype=float))
    ei = tuple(1 if a == i else 0 for a in range(n + 1))
    en = tuple(1 if a == n else 0 for a in range(n + 1))
    beta = tuple(1 if a == i else 0 for a in range(n))
    df = lambda x: f.deriv(beta, x)
    wi = lambda w: w[..., i]
    ft = lambda x: x[..., i] / japanese(x) ** 2 * f(x)
    pieces = [
        (2.0 ** j, dict(alpha=ei), f),
        (2.0 ** j * v[:, i], dict(alpha=en), f),
        (-1.0, {}, df),
        (-1.0, dict(alpha=en, kernel_factor=wi), f),
        (-1.0, {}, ft),
    ]
    resid = np.zeros(v.shape[0])
    scale = 0.0
    for c, opts, g in pieces:
        resid += c * lp_apply(stack, j, g, v, "psi", **opts, **kw)
        mag = np.abs(c) * lp_apply(stack, j, g, v, "psi", absolute=True, **opts, **kw)
        scale = max(scale, float(np.max(mag)))
    return float(np.max(np.abs(resid))), scale
