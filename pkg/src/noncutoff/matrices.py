"""Galerkin matrices of L, N, K and the Gamma tensor on weighted polynomial bases.

Integrals over (v, v*, sigma) are taken in centre-of-mass coordinates
v = V + r u/2, v* = V - r u/2, where mu mu* = (2 pi)^(-n) exp(-|V|^2 - r^2/4).
V uses a Gauss-Hermite rule, r a half-range Laguerre rule and theta a
Gauss-Jacobi rule with weight theta^(1-2s); the integrands vanish to second
order at theta = 0 after the V sum, so these rules converge spectrally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import (HermiteBasis, RadialBasis, sector_multiplicity,
                    sector_radial, sector_sizes, zonal_kernel)
from .kernel import KernelParams
from .quadrature import (azimuth_directions, gauss_jacobi, half_range_rule,
                         orthonormal_complement, sphere_area, sphere_rule,
                         tensor_hermite)


@dataclass
class CMRule:
    """Centre-of-mass quadrature for polynomial integrands of degree deg."""

    params: KernelParams
    deg: int
    theta_nodes: int = 24
    orient: str = "full"       # "full" or "reduced" (rotation-invariant integrands)
    n_az: int = 8

    def __post_init__(self):
        p = self.params
        n = p.n
        self.mV = self.deg // 2 + 1
        self.mr = self.deg // 4 + 2
        self.W, self.wW = tensor_hermite(self.mV, n)
        th, wt = gauss_jacobi(self.theta_nodes, 1.0 - 2.0 * p.s, 0.0, np.pi / 2)
        self.theta, self.wtheta = th, wt / th ** 2
        if self.orient == "reduced":
            u = np.zeros((1, n))
            u[0, -1] = 1.0
            wu = np.array([sphere_area(n)])
            if n == 2:
                azc, wa = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
            else:
                azc, wa = np.array([[1.0, 0.0]]), np.array([2 * np.pi])
        else:
            u, wu = sphere_rule(n, self.deg + 1)
            azc, wa = azimuth_directions(n, self.n_az if n > 2 else 2)
        self.u, self.wu, self.wa = u, wu, wa
        frame = orthonormal_complement(u)
        self.e = np.einsum("dan,za->dzn", frame, azc)          # (d, z, n)
        self.pref = (2 * np.pi) ** (-n) * p.C_phi

    def r_rule(self, c=0.25):
        p = self.params
        return half_range_rule(self.mr, p.n - 1 + p.gamma, c=c)

    def sigma(self, th):
        return np.cos(th) * self.u[:, None, :] + np.sin(th) * self.e   # (d, z, n)

    def chunks(self):
        """Per theta node: velocities (V, r, d, z, n) and weights (V, r, d, z)."""
        r, wr = self.r_rule()
        W = self.W[:, None, None, None, :]
        rr = r[None, :, None, None, None]
        uu = self.u[None, None, :, None, :]
        v = W + 0.5 * rr * uu
        vs = W - 0.5 * rr * uu
        base = (self.pref * self.wW[:, None, None, None] * wr[None, :, None, None]
                * self.wu[None, None, :, None] * self.wa[None, None, None, :])
        for th, wt in zip(self.theta, self.wtheta):
            sg = self.sigma(th)[None, None]
            vp = W + 0.5 * rr * sg
            vsp = W - 0.5 * rr * sg
            yield v, vs, vp, vsp, base * wt


def assemble_L(params, basis, theta_nodes=24, orient="full", symmetrize=True):
    """A_ij = <L e_i, e_j> = 1/4 int B mu mu* dG_i dG_j.

    symmetrize=False returns the raw accumulated sum (symmetric up to rounding).
    """
    n = params.n
    rule = CMRule(params, 2 * basis_degree(basis), theta_nodes, orient)
    A = np.zeros((basis.size, basis.size))
    for v, vs, vp, vsp, w in rule.chunks():
        shape = vp.shape
        f = lambda a: basis.poly(np.broadcast_to(a, shape).reshape(-1, n))
        dG = f(vp) + f(vsp) - f(v) - f(vs)
        A += (dG * w.reshape(-1, 1)).T @ dG
    A *= 0.25
    return 0.5 * (A + A.T) if symmetrize else A


def basis_degree(basis):
    if isinstance(basis, HermiteBasis):
        return basis.N
    if isinstance(basis, RadialBasis):
        return 2 * (basis.K - 1)
    raise TypeError(basis)


def assemble_sector_L(params, N, theta_nodes=24):
    """Blocks of L on the rotation sectors l = 0..N, radial index 2k + l <= N.

    Uses the addition theorem, so the integrand is rotation invariant and a
    single orientation suffices.
    """
    n = params.n
    rule = CMRule(params, 2 * N, theta_nodes, "reduced")
    sizes = sector_sizes(N)
    blocks = {l: np.zeros((K, K)) for l, K in sizes.items()}
    sgn = np.array([1.0, 1.0, -1.0, -1.0])
    for v, vs, vp, vsp, w in rule.chunks():
        shape = vp.shape
        pts = np.stack([np.broadcast_to(a, shape).reshape(-1, n) for a in (vp, vsp, v, vs)], 1)
        ww = w.reshape(-1)
        x2 = np.sum(pts * pts, axis=-1)                        # (P, 4)
        nr = np.sqrt(x2)
        unit = pts / np.where(nr > 0, nr, 1.0)[..., None]
        cosab = np.einsum("pan,pbn->pab", unit, unit)
        for l, K in sizes.items():
            X = sector_radial(n, l, K, x2) * sgn[None, :, None]   # (P, 4, K)
            C = zonal_kernel(n, l, cosab)                      # (P, 4, 4)
            CX = np.einsum("pab,pbk->pak", C, X)
            blocks[l] += np.einsum("p,pak,paj->kj", ww, X, CX) / sector_multiplicity(n, l)
    for l in blocks:
        B = 0.25 * blocks[l]
        blocks[l] = 0.5 * (B + B.T)
    return blocks


def sector_nu_blocks(params, N, nu, order=120):
    """<nu e, e> on each sector (nu radial callable of |v|)."""
    n = params.n
    r, w = half_range_rule(order, n - 1, c=0.5)
    base = w * (2 * np.pi) ** (-n / 2) * nu(r)
    out = {}
    for l, K in sector_sizes(N).items():
        X = sector_radial(n, l, K, r * r)
        out[l] = (X * base[:, None]).T @ X
    return out


def assemble_N_quadratic(params, basis, theta_nodes=24, orient="full"):
    """1/2 int B (e_i' - e_i)(e_j' - e_j) M'* M*, integrated exactly by
    shifting the V rule for the exp(+-V.a) factors."""
    n = params.n
    p = params
    rule = CMRule(params, 2 * basis_degree(basis), theta_nodes, orient)
    A = np.zeros((basis.size, basis.size))
    W = rule.W[:, None, None, None, :]
    uu = rule.u[None, None, :, None, :]
    ang = (rule.pref * rule.wW[:, None, None, None]
           * rule.wu[None, None, :, None] * rule.wa[None, None, None, :])
    r0, w0 = rule.r_rule(0.25)
    for th, wt in zip(rule.theta, rule.wtheta):
        sg = rule.sigma(th)[None, None]
        # shifted terms: exp(-|V|^2 +- V.a) with a = r (u - sigma)/4; completing
        # the square leaves exp(|a|^2/4) = exp(r^2 sin^2(theta/2)/16)
        rs, ws = rule.r_rule(0.25 - np.sin(th / 2) ** 2 / 16)
        for sign in (1.0, -1.0):
            rr = rs[None, :, None, None, None]
            a = rr * (uu - sg) / 4
            V = W + sign * 0.5 * a
            pt = V + 0.5 * rr * (sg if sign > 0 else uu)
            wgt = (ang * ws[None, :, None, None] * wt)
            shape = np.broadcast_shapes(pt.shape, a.shape)
            G = basis.poly(np.broadcast_to(pt, shape).reshape(-1, n))
            wflat = np.broadcast_to(wgt, shape[:-1]).reshape(-1)
            A += (G * wflat[:, None]).T @ G
        rr = r0[None, :, None, None, None]
        shape = np.broadcast_shapes(W.shape, (rr * sg).shape)
        Gp = basis.poly(np.broadcast_to(W + 0.5 * rr * sg, shape).reshape(-1, n))
        G0 = basis.poly(np.broadcast_to(W + 0.5 * rr * uu, shape).reshape(-1, n))
        wflat = np.broadcast_to(ang * w0[None, :, None, None] * wt, shape[:-1]).reshape(-1)
        X = (Gp * wflat[:, None]).T @ G0
        A -= X + X.T
    A *= 0.5
    return 0.5 * (A + A.T)


def nu_matrix(basis, nu, order=None):
    """<nu e_i, e_j> for a radial weight nu(|v|)."""
    n = basis.n
    if isinstance(basis, RadialBasis):
        r, w = half_range_rule(order or 120, n - 1, c=0.5)
        pts = np.zeros((r.size, n))
        pts[:, 0] = r
        G = basis.poly(pts)
        base = w * (2 * np.pi) ** (-n / 2) * sphere_area(n) * nu(r)
        return (G * base[:, None]).T @ G
    m = order or basis.N + 48
    x, w = tensor_hermite(m, n, scale=np.sqrt(2.0))
    G = basis.poly(x)
    base = w * (2 * np.pi) ** (-n / 2) * nu(np.linalg.norm(x, axis=-1))
    return (G * base[:, None]).T @ G


def gamma_tensor(params, basis, theta_nodes=24, orient="full"):
    """T_ijk = <Gamma(e_i, e_j), e_k> = int B mu mu* G_i(v*) G_j(v) (G_k(v') - G_k(v))."""
    n = params.n
    rule = CMRule(params, 3 * basis_degree(basis), theta_nodes, orient)
    nb = basis.size
    D = None
    for v, vs, vp, vsp, w in rule.chunks():
        shape = vp.shape
        Gp = basis.poly(np.broadcast_to(vp, shape).reshape(-1, n)).reshape(shape[:-1] + (nb,))
        if D is None:
            G0 = basis.poly(np.broadcast_to(v, shape).reshape(-1, n)).reshape(shape[:-1] + (nb,))
            Gs = basis.poly(np.broadcast_to(vs, shape).reshape(-1, n)).reshape(shape[:-1] + (nb,))
            D = np.zeros(shape[:-2] + (nb,))
        D += np.sum(w[..., None] * (Gp - G0), axis=-2)
    # collapse the azimuth axis (G0, Gs do not depend on it)
    G0 = G0[..., 0, :].reshape(-1, nb)
    Gs = Gs[..., 0, :].reshape(-1, nb)
    D = D.reshape(-1, nb)
    T = np.zeros((nb, nb, nb))
    step = max(1, 2_000_000 // (nb * nb))
    for s0 in range(0, Gs.shape[0], step):
        sl = slice(s0, s0 + step)
        BD = np.einsum("pj,pk->pjk", G0[sl], D[sl]).reshape(-1, nb * nb)
        T += (Gs[sl].T @ BD).reshape(nb, nb, nb)
    return T


@dataclass
class OperatorMatrix:
    """Dense symmetric matrix of L on an orthonormal basis, plus metadata."""

    A: np.ndarray
    basis: dict
    params: dict
    meta: dict = field(default_factory=dict)

    def save(self, stem):
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        np.save(stem.with_suffix(".npy"), self.A)
        info = {"dimension": int(self.A.shape[0]), "dtype": "float64", "order": "C",
                "basis": self.basis, "params": self.params, "quadrature": self.meta}
        stem.with_suffix(".json").write_text(json.dumps(info, indent=2, sort_keys=True))

    @classmethod
    def load(cls, stem):
        stem = Path(stem)
        info = json.loads(stem.with_suffix(".json").read_text())
        A = np.load(stem.with_suffix(".npy"))
        return cls(A, info["basis"], info["params"], info["quadrature"])


def assemble_matrix(params: KernelParams, N: int, theta_nodes=24) -> OperatorMatrix:
    """Matrix of L on tensor Hermite functions of total degree <= N."""
    if N > 16:
        raise ValueError("basis degree above the desk-scale limit (16)")
    if params.n != 2:
        raise NotImplementedError("tensor assembly is implemented for n = 2; "
                                  "use assemble_sector_L for n = 3")
    basis = HermiteBasis(params.n, N)
    A = assemble_L(params, basis, theta_nodes=theta_nodes)
    asym = np.abs(A - A.T).max() / max(np.abs(A).max(), 1e-300)
    if asym > 1e-6:
        raise RuntimeError(f"symmetry violation {asym:.2e}")
    meta = {"theta_nodes": theta_nodes, "V_nodes": N + 1, "r_nodes": N // 2 + 2,
            "direction_nodes": 2 * N + 1, "k_max": "none (Jacobi rule in theta)"}
    return OperatorMatrix(A, {"kind": "tensor-hermite", "n": params.n, "N": N,
                              "indices": basis.indices.tolist()}, params.to_dict(), meta)


def null_space_residual(params, A, basis):
    """max |A c| over the normalized collision invariants, relative to |A|."""
    C = basis.null_coefficients()
    C = C / np.linalg.norm(C, axis=1, keepdims=True)
    return float(np.abs(C @ A).max() / np.abs(A).max())


def gap_on_complement(A, null_coeffs):
    """Smallest eigenvalue of A restricted to the orthogonal complement of the
    span of null_coeffs."""
    Q, _ = np.linalg.qr(null_coeffs.T)
    P = np.eye(A.shape[0]) - Q @ Q.T
    # orthonormal basis of the complement
    U, s, _ = np.linalg.svd(P)
    Z = U[:, s > 0.5]
    ev = np.linalg.eigvalsh(Z.T @ A @ Z)
    return float(ev[0]), ev
