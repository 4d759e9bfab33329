"""Pointwise collision integrals: Gamma, nu-tilde, N, K, L, dyadic trilinear forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .basis import maxwellian, sqrt_maxwellian
from .fields import Gaussian  # noqa: F401  (re-exported)
from .kernel import KernelParams, plane_basis
from .quadrature import (azimuth_directions, gauss_jacobi, gauss_legendre,
                         min_shell, orthonormal_complement, shell_theta_nodes,
                         sphere_rule)


# --- Maxwellian family --------------------------------------------------

def p_beta(beta, v):
    """Polynomial p_beta with d^beta M = p_beta M."""
    v = np.asarray(v, dtype=float)
    out = np.ones(v.shape[:-1])
    for i, b in enumerate(beta):
        if b:
            out = out * (-1) ** b * 2.0 ** (-b / 2) * special.eval_hermitenorm(b, v[..., i] / np.sqrt(2))
    return out


def M_beta(beta, v):
    if beta is None or not any(beta):
        return sqrt_maxwellian(v)
    return p_beta(beta, v) * sqrt_maxwellian(v)


def japanese(v):
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


# --- sigma quadrature ---------------------------------------------------

@dataclass
class SigmaQuadrature:
    """Nodes over (v*, sigma) for integrals at fixed v.

    v* = v - r u with r on [0, |v| + r_span] (Jacobi weight r^(n-1+gamma)),
    u on the sphere, sigma on dyadic shells k <= k_max with azimuthally
    symmetric node sets. With axisym=True the direction rule assumes an
    integrand symmetric about the v-axis and v = |v| e_n.
    """

    params: KernelParams
    r_nodes: int = 16
    r_span: float = 12.0
    dir_nodes: int = 32
    shell_nodes: int = 12
    k_max: int = 12
    n_az: int = 8
    axisym: bool = False
    focus: bool = True
    k_min: int = None

    def directions(self, v):
        """Unit vectors u (and weights) for v* = v - r u.

        With focus on, only directions for which the ray meets the ball
        |v*| <= r_span are kept.
        """
        n = self.params.n
        nv = np.linalg.norm(v)
        amax = np.pi
        if self.focus and nv > self.r_span:
            amax = min(np.pi, 1.05 * np.arcsin(self.r_span / nv))
        if n == 2:
            if self.axisym:
                a, w = gauss_legendre(self.dir_nodes, 0.0, amax)
                w = 2 * w
            elif amax < np.pi:
                a, w = gauss_legendre(self.dir_nodes, -amax, amax)
            else:
                a = 2 * np.pi * np.arange(self.dir_nodes) / self.dir_nodes
                w = np.full(self.dir_nodes, 2 * np.pi / self.dir_nodes)
            loc = np.stack([np.sin(a), np.cos(a)], -1)
        else:
            z, wz = gauss_legendre(self.dir_nodes, np.cos(amax), 1.0)
            if self.axisym:
                loc = np.stack([np.sqrt(1 - z * z), 0 * z, z], -1)
                w = 2 * np.pi * wz
            else:
                na = 2 * self.dir_nodes
                ph = 2 * np.pi * np.arange(na) / na
                rho = np.sqrt(1 - z * z)
                loc = np.stack([np.outer(rho, np.cos(ph)).ravel(),
                                np.outer(rho, np.sin(ph)).ravel(),
                                np.repeat(z, na)], -1)
                w = np.repeat(wz, na) * (2 * np.pi / na)
        if nv == 0:
            return loc, w
        return loc @ rotation_to(v / nv).T, w

    def radial_rule(self, v, k):
        """Nodes in r = |v - v*| for shell k, weight r^(n-1+gamma) included.

        Shell k is empty for r < a/2 with a = sqrt(2) 2^(-k), clipped at
        theta = pi/2 on [a/2, a] and smooth beyond, so the rule is split at
        those points; wide segments near the origin use log-spaced nodes.
        Every shell gets the same node count (padding carries zero weight).
        """
        p = self.params
        n = p.n
        nv = np.linalg.norm(v)
        if self.focus and nv > self.r_span:
            lo, hi = nv - self.r_span, nv + self.r_span
        else:
            lo, hi = 0.0, nv + self.r_span
        a = np.sqrt(2.0) * 2.0 ** (-k)
        start = max(lo, 0.5 * a)
        cuts = sorted({start, hi} | {x for x in (a, 1.0) if start < x < hi})
        m = self.r_nodes
        r, w = segmented_rule(cuts, m)
        pad = 3 * m - r.size
        r = np.concatenate([r, np.ones(pad)])
        w = np.concatenate([w * r[:w.size] ** (n - 1 + p.gamma), np.zeros(pad)])
        return r, w

    def nodes(self, v, kmin=None):
        """Arrays for one velocity v: (vs, vp, vsp, weight, ks) with shape
        (k, r, dir, theta, az[, n])."""
        p = self.params
        n = p.n
        v = np.asarray(v, dtype=float)
        if kmin is None:
            kmin = self.k_min
        if kmin is None:
            kmin = min_shell(np.linalg.norm(v) + self.r_span)
        ks = np.arange(kmin, self.k_max + 1)
        rules = [self.radial_rule(v, k) for k in ks]
        r = np.stack([x for x, _ in rules])                    # (k, r)
        wr = np.stack([w for _, w in rules])
        u, wu = self.directions(v)
        th, wt = shell_theta_nodes(r, ks[:, None], self.shell_nodes, p.s)   # (k, r, t)
        azc, wa = azimuth_directions(n, self.n_az)
        frame = orthonormal_complement(u)                       # (d, n-1, n)
        e = np.einsum("dan,za->dzn", frame, azc)                # (d, z, n)
        cos = np.cos(th)[:, :, None, :, None, None]             # (k,r,1,t,1,1)
        sin = np.sin(th)[:, :, None, :, None, None]
        uu = u[None, None, :, None, None, :]
        sig = cos * uu + sin * e[None, None, :, None, :, :]     # (k,r,d,t,z,n)
        rr = r[:, :, None, None, None, None]
        vs = v - rr * uu                                        # (k,r,d,1,1,n)
        mid = 0.5 * (v + vs)
        vp = mid + 0.5 * rr * sig
        vsp = mid - 0.5 * rr * sig
        w = (p.C_phi * wr[:, :, None, None, None] * wu[None, None, :, None, None]
             * wt[:, :, None, :, None] * wa[None, None, None, None, :])
        return vs, vp, vsp, w, ks

    def integrate(self, v, integrand, by_shell=False, kmin=None):
        """sum over nodes of w * integrand(v, vs, vp, vsp) for each row of v."""
        v = np.atleast_2d(np.asarray(v, dtype=float))
        outs = []
        for vq in v:
            vs, vp, vsp, w, ks = self.nodes(vq, kmin=kmin)
            shape = vp.shape
            vb = np.broadcast_to(vq, shape)
            vsb = np.broadcast_to(vs, shape)
            val = integrand(vb, vsb, vp, vsp)
            contrib = np.sum(w * val, axis=(1, 2, 3, 4))        # per shell
            outs.append((ks, contrib))
        if by_shell:
            return outs
        return np.array([c.sum() for _, c in outs])


def segmented_rule(cuts, m):
    """Composite Gauss-Legendre rule over consecutive cut points; segments
    spanning more than a factor 4 use nodes uniform in log r."""
    rs, ws = [], []
    for x0, x1 in zip(cuts[:-1], cuts[1:]):
        if x0 > 0 and x1 / x0 > 4:
            u, wu = gauss_legendre(m, np.log(x0), np.log(x1))
            r = np.exp(u)
            rs.append(r)
            ws.append(wu * r)
        else:
            r, w = gauss_legendre(m, x0, x1)
            rs.append(r)
            ws.append(w)
    if not rs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(rs), np.concatenate(ws)


def rotation_to(a):
    """Orthogonal (Householder) matrix mapping e_n to the unit vector a."""
    e = np.zeros(a.size)
    e[-1] = 1.0
    w = e - a
    nw = np.linalg.norm(w)
    if nw < 1e-14:
        return np.eye(a.size)
    w /= nw
    return np.eye(a.size) - 2 * np.outer(w, w)


def tail_estimate(shell_values, s):
    """Geometric tail beyond the last shell at the 2^((2s-2)k) cancellation rate."""
    q = 2.0 ** (2 * s - 2)
    return abs(shell_values[-1]) * q / (1 - q)


# --- Gamma and friends --------------------------------------------------

def gamma_bilinear(params, g, h, v, quad=None, beta=None, report_tail=False):
    """Gamma_beta(g, h)(v) = int int B M_beta(v*) (g'* h' - g* h)."""
    quad = quad or SigmaQuadrature(params)

    def integrand(v, vs, vp, vsp):
        return M_beta(beta, vs) * (g(vsp) * h(vp) - g(vs) * h(v))

    res = quad.integrate(v, integrand, by_shell=True)
    vals = np.array([c.sum() for _, c in res])
    if report_tail:
        tails = np.array([tail_estimate(c, params.s) for _, c in res])
        return vals, tails
    return vals


def gamma_beta(params, beta, g, h, v, quad=None):
    if sum(beta) > 2:
        raise ValueError("only |beta| <= 2 is supported")
    return gamma_bilinear(params, g, h, v, quad=quad, beta=beta)


def leibniz_terms(beta):
    """Terms (coef, beta_minus_beta1_minus_beta2, beta1, beta2) of the
    expansion d^beta Gamma(g,h) = sum C Gamma_beta2(d^(beta-beta1-beta2) g, d^beta1 h)."""
    import itertools
    from math import comb
    terms = []
    ranges = [range(b + 1) for b in beta]
    for b1 in itertools.product(*ranges):
        rest = [b - x for b, x in zip(beta, b1)]
        for b2 in itertools.product(*[range(r + 1) for r in rest]):
            b0 = tuple(r - x for r, x in zip(rest, b2))
            c = 1
            for b, x, y in zip(beta, b1, b2):
                c *= comb(b, x) * comb(b - x, y)
            terms.append((c, b0, tuple(b1), tuple(b2)))
    return terms


def nu_tilde(params, v, quad=None):
    """nu~(v) = int int B (M* - M'*) M*; radial, evaluated along e_n."""
    quad = quad or SigmaQuadrature(params, axisym=True, dir_nodes=48, n_az=16)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    rad = np.linalg.norm(v, axis=-1)
    pts = np.zeros_like(v)
    pts[:, -1] = rad

    def integrand(v, vs, vp, vsp):
        m = sqrt_maxwellian(vs)
        return (m - sqrt_maxwellian(vsp)) * m

    return quad.integrate(pts, integrand)


def pao_fit(params, radii=None, quad=None):
    """Log-log slope of nu~ over |v| in [4, 8] and the amplitude at the
    theoretical exponent."""
    radii = np.linspace(4.0, 8.0, 9) if radii is None else np.asarray(radii)
    pts = np.zeros((radii.size, params.n))
    pts[:, -1] = radii
    vals = nu_tilde(params, pts, quad=quad)
    x = np.log(np.sqrt(1 + radii ** 2))
    slope, _ = np.polyfit(x, np.log(vals), 1)
    c_fit = np.exp(np.mean(np.log(vals) - params.rate * x))
    return {"slope": float(slope), "c_fit": float(c_fit), "radii": radii, "nu": vals}


@dataclass
class PaoSplit:
    """nu = c_fit <v>^(gamma+2s); nu_K = nu~ - nu."""

    params: KernelParams
    c_fit: float
    quad: SigmaQuadrature = None

    @classmethod
    def fit(cls, params, quad=None):
        return cls(params, pao_fit(params, quad=quad)["c_fit"], quad)

    def nu(self, v):
        return self.c_fit * japanese(v) ** self.params.rate

    def nu_K(self, v):
        return nu_tilde(self.params, v, quad=self.quad) - self.nu(v)


def norm_piece(params, g, v, quad=None):
    """-int int B (g' - g) M'* M*."""
    quad = quad or SigmaQuadrature(params)

    def integrand(v, vs, vp, vsp):
        return (g(vp) - g(v)) * sqrt_maxwellian(vsp) * sqrt_maxwellian(vs)

    return -quad.integrate(v, integrand)


def apply_N(params, split, g, v, quad=None):
    return norm_piece(params, g, v, quad) + split.nu(v) * g(v)


def apply_K(params, split, g, v, quad=None):
    M = sqrt_maxwellian
    return split.nu_K(v) * g(v) - gamma_bilinear(params, g, M, v, quad)


def apply_L(params, g, v, quad=None):
    M = sqrt_maxwellian
    return -gamma_bilinear(params, M, g, v, quad) - gamma_bilinear(params, g, M, v, quad)


# --- trilinear dyadic forms --------------------------------------------

def weight_w(params, v):
    jv = japanese(v)
    return jv if params.hard else jv ** (-params.rate)


def outer_rule(m, n, center=0.0, scale=1.0):
    """Gauss-Hermite nodes for int exp(-|v-c|^2/scale^2) F dv, returned with the
    Gaussian divided out so the rule integrates F directly."""
    from .quadrature import tensor_hermite
    x, w = tensor_hermite(m, n, scale=scale)
    return x + center, w * np.exp(np.sum(x * x, axis=-1) / scale ** 2)


def T_sigma(params, k, g, h, f, ell=0.0, beta=None, variant="plus", quad=None, outer=None):
    """T^{k,ell}_{+/-}(g,h,f) in the sigma representation.

    outer = (nodes, weights) for the v integral; defaults to a rule adapted to h.
    """
    quad = quad or SigmaQuadrature(params)
    vn, vw = outer
    if variant == "plus":
        def integrand(v, vs, vp, vsp):
            return g(vs) * h(v) * M_beta(beta, vsp) * f(vp) * weight_w(params, vp) ** (2 * ell)
    elif variant == "minus":
        def integrand(v, vs, vp, vsp):
            return g(vs) * h(v) * M_beta(beta, vs) * f(v) * weight_w(params, v) ** (2 * ell)
    else:
        raise ValueError(variant)
    res = quad.integrate(vn, integrand, by_shell=True)
    out = {}
    for (ks, c), wq in zip(res, vw):
        for kk, cc in zip(ks, c):
            out[int(kk)] = out.get(int(kk), 0.0) + wq * cc
    if k is None:
        return out
    return out.get(int(k), 0.0)


def direct_pairing(params, g, h, f, ell=0.0, beta=None, quad=None, outer=None):
    """<w^(2 ell) Gamma_beta(g,h), f> with Gamma evaluated pointwise."""
    vn, vw = outer
    gam = gamma_bilinear(params, g, h, vn, quad=quad, beta=beta)
    return float(np.sum(vw * gam * f(vn) * weight_w(params, vn) ** (2 * ell)))


def weak_pairing(params, g, h, f, ell=0.0, beta=None, outer=None, r_nodes=40,
                 r_span=12.0, dir_nodes=32, theta_nodes=24, n_az=8):
    """<w^(2 ell) Gamma_beta(g,h), f> from the weak form
    int int int B g(v*) h(v) (M_beta(v'*) F(v') - M_beta(v*) F(v)), F = w^(2 ell) f.

    Uses a Gauss-Jacobi rule in theta on (0, pi/2] with no shell splitting, so it
    is independent of the dyadic quadrature.
    """
    p = params
    n = p.n
    vn, vw = outer
    F = lambda x: f(x) * weight_w(p, x) ** (2 * ell)
    th, wt = gauss_jacobi(theta_nodes, 1.0 - 2.0 * p.s, 0.0, np.pi / 2)
    wt = wt / th ** 2
    u, wu = sphere_rule(n, dir_nodes)
    azc, wa = azimuth_directions(n, n_az)
    e = np.einsum("dan,za->dzn", orthonormal_complement(u), azc)
    total = 0.0
    for v, wv in zip(vn, vw):
        r, wr = gauss_jacobi(r_nodes, n - 1 + p.gamma, 0.0, np.linalg.norm(v) + r_span)
        rr = r[:, None, None, None, None]
        vs = v - rr * u[None, :, None, None, :]                          # (r,d,1,1,n)
        sig = (np.cos(th)[None, None, :, None, None] * u[None, :, None, None, :]
               + np.sin(th)[None, None, :, None, None] * e[None, :, None, :, :])
        vp = 0.5 * (v + vs) + 0.5 * rr * sig                             # (r,d,t,z,n)
        vsp = v + vs - vp
        pre = g(vs)[..., 0, 0] * h(v)
        diff = M_beta(beta, vsp) * F(vp) - (M_beta(beta, vs) * F(v))
        val = np.einsum("rd,rdtz,t,z->rd", pre, diff, wt, wa)
        total += wv * np.sum(p.C_phi * wr[:, None] * wu[None, :] * val)
    return float(total)


@dataclass
class CarlemanQuadrature:
    """Nodes for int dv' int dv* int_{E} dpi_v with v* = v' - rho omega and
    v = v' + t e on the plane through v' normal to omega."""

    params: KernelParams
    rho_nodes: int = 16
    rho_span: float = 12.0
    dir_nodes: int = 32
    t_nodes: int = 12
    az_nodes: int = 16

    def rho_rule(self, k, R):
        """rho = |v' - v*| nodes, split at the shell edges where the t-range
        stops being clipped (rho < 2^(-k-1) contributes nothing); wide
        segments use log-spaced nodes."""
        a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        if R <= a:
            return np.zeros(0), np.zeros(0)
        return segmented_rule(sorted({a, R} | {x for x in (b, 1.0) if a < x < R}),
                              self.rho_nodes)

    def shell_nodes(self, rho, k):
        """t-values with |t| in shell k, |t| <= rho (cos theta >= 0)."""
        lo = np.minimum(2.0 ** (-k - 1), rho)
        hi = np.minimum(2.0 ** (-k), rho)
        x, w = np.polynomial.legendre.leggauss(self.t_nodes)
        hw = 0.5 * (hi - lo)
        t = lo[..., None] + hw[..., None] * (x + 1)
        wt = hw[..., None] * w
        return t, wt


def T_carleman(params, k, g, h, f, ell=0.0, beta=None, variant="plus", cq=None, outer=None):
    """T^{k,ell}_{+} or T^{k,ell}_{*} in the Carleman representation."""
    p = params
    n = p.n
    cq = cq or CarlemanQuadrature(params)
    vn, vw = outer                                  # rule for v'
    om, wom = sphere_rule(n, cq.dir_nodes)          # omega = (v' - v*)/|v' - v*|
    total = 0.0
    for vp, wvp in zip(vn, vw):
        rho, wrho = cq.rho_rule(k, np.linalg.norm(vp) + cq.rho_span)
        t, wt = cq.shell_nodes(rho, k)              # (rho, t)
        frame = orthonormal_complement(om)          # (d, n-1, n)
        if n == 2:
            az = np.array([[1.0], [-1.0]])
            waz = np.array([1.0, 1.0])
        else:
            a = 2 * np.pi * np.arange(cq.az_nodes) / cq.az_nodes
            az = np.stack([np.cos(a), np.sin(a)], -1)
            waz = np.full(cq.az_nodes, 2 * np.pi / cq.az_nodes)
        e = np.einsum("dan,za->dzn", frame, az)     # (d, z, n)
        # shapes: (rho, d, t, z, n)
        rr = rho[:, None, None, None, None]
        tt = t[:, None, :, None, None]
        ee = e[None, :, None, :, :]
        oo = om[None, :, None, None, :]
        vs = vp - rr * oo
        v = vp + tt * ee
        vsp = v + vs - vp
        rel = v - vs
        rl = np.linalg.norm(rel, axis=-1)
        # deviation angle between v - v* and 2v' - v - v*
        dev = 2 * vp - v - vs
        cos = np.sum(rel * dev, axis=-1) / (rl * np.linalg.norm(dev, axis=-1))
        theta = np.arccos(np.clip(cos, -1.0, 1.0))
        Bk = p.C_phi * rl ** p.gamma * theta ** (-1 - 2 * p.s)
        if n == 3:
            Bk = Bk * np.sin(theta) ** (2 - n)
        # plane measure: n=2 dt ; n=3 |t| dt daz
        meas = wt[:, None, :, None] * waz[None, None, None, :]
        if n == 3:
            meas = meas * np.abs(t)[:, None, :, None]
        rho_b = rho[:, None, None, None]
        jac = wrho[:, None, None, None] * wom[None, :, None, None] * rho_b ** (n - 1)
        base = 2.0 ** (n - 1) * Bk * meas * jac
        vsb = np.broadcast_to(vs, v.shape)
        if variant == "plus":
            val = g(vsb) * f(vp) * M_beta(beta, vsp) * h(v) / (rho_b * rl ** (n - 2))
        elif variant == "star":
            ratio = (p.C_phi * rho_b ** p.gamma * rho_b ** (n - 1)) / (p.C_phi * rl ** p.gamma * rl ** (2 * n - 2))
            val = ratio * g(vsb) * f(vp) * M_beta(beta, vsb) * h(np.broadcast_to(vp, v.shape))
        else:
            raise ValueError(variant)
        total += wvp * weight_w(p, vp) ** (2 * ell) * np.sum(base * val)
    return float(total)


# --- compact kernel kappa_j ---------------------------------------------

def kappa_kernel(params, j, psi_fn, phi_fn, v_prime, v_star, t_nodes=24, az_nodes=16):
    """kappa_j(v', v*) = 2^(n-1) int_E dpi_v B_j psi(v'*) phi(v) / (|v'-v*| |v-v*|^(n-2))."""
    if j > 0:
        raise ValueError("kappa_j is only used for j <= 0")
    p = params
    n = p.n
    vp = np.asarray(v_prime, dtype=float)
    vs = np.asarray(v_star, dtype=float)
    d = vp - vs
    rho = np.linalg.norm(d)
    if rho == 0:
        raise ValueError("coincident points")
    basis = plane_basis(d / rho)
    lo = min(2.0 ** (-j - 1), rho)
    hi = min(2.0 ** (-j), rho)
    if hi <= lo:
        return 0.0
    t, wt = gauss_legendre(t_nodes, lo, hi)
    if n == 2:
        dirs = np.concatenate([basis, -basis])
        wd = np.array([1.0, 1.0])
        meas = wt[:, None] * wd[None, :]
    else:
        a = 2 * np.pi * np.arange(az_nodes) / az_nodes
        dirs = np.cos(a)[:, None] * basis[0] + np.sin(a)[:, None] * basis[1]
        meas = (wt * t)[:, None] * np.full(az_nodes, 2 * np.pi / az_nodes)[None, :]
    v = vp + t[:, None, None] * dirs[None, :, :]
    rel = v - vs
    rl = np.linalg.norm(rel, axis=-1)
    dev = 2 * vp - v - vs
    cos = np.sum(rel * dev, axis=-1) / (rl * np.linalg.norm(dev, axis=-1))
    theta = np.arccos(np.clip(cos, -1, 1))
    Bj = p.C_phi * rl ** p.gamma * theta ** (-1 - 2 * p.s)
    if n == 3:
        Bj = Bj * np.sin(theta) ** (2 - n)
    vsp = v + vs - vp
    val = 2.0 ** (n - 1) * Bj * psi_fn(vsp) * phi_fn(v) / (rho * rl ** (n - 2))
    return float(np.sum(meas * val))


def kappa_integral(params, j, psi_fn, phi_fn, v_star, ell=0.0, nodes=64, reverse=False, **kw):
    """int |kappa_j(v', v*)| w^ell(v') dv' over a box around v*.

    With reverse=True the roles are swapped: int |kappa_j(v*, v')| w^ell dv'.
    """
    p = params
    vs = np.asarray(v_star, dtype=float)
    L = np.linalg.norm(vs) + 8.0
    x, w = gauss_legendre(nodes, -L, L)
    grids = np.meshgrid(*([x] * p.n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], -1)
    wts = np.prod(np.stack(np.meshgrid(*([w] * p.n), indexing="ij"), -1).reshape(-1, p.n), -1)
    total = 0.0
    for vp, wv in zip(pts, wts):
        if np.linalg.norm(vp - vs) == 0:
            continue
        a, b = (vs, vp) if reverse else (vp, vs)
        val = kappa_kernel(p, j, psi_fn, phi_fn, a, b, **kw)
        total += wv * abs(val) * weight_w(p, vp) ** ell
    return total
