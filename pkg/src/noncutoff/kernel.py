"""Collision kernels, dyadic shells and collisional geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class KernelParams:
    """Power-law kernel B = C_phi |v - v*|^gamma b(cos theta).

    The angular part is b(cos theta) = theta^(-1-2s) sin^(2-n) theta on
    (0, pi/2], so the sandwich bound holds with c_b = 1.
    """

    n: int
    gamma: float
    s: float
    C_phi: float = 1.0
    c_b: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.gamma > -(self.n - 2) - 2 * self.s:
            raise ValueError(
                f"inadmissible kernel: gamma={self.gamma} must exceed "
                f"-(n-2)-2s = {-(self.n - 2) - 2 * self.s}"
            )
        if self.C_phi <= 0:
            raise ValueError("C_phi must be positive")
        if not 0.0 < self.c_b <= 1.0:
            raise ValueError("c_b must lie in (0, 1]")

    @property
    def hard(self) -> bool:
        return self.gamma + 2 * self.s >= 0

    @property
    def rate(self) -> float:
        """gamma + 2s, the order of the collision frequency."""
        return self.gamma + 2 * self.s

    def phi(self, r):
        return self.C_phi * np.asarray(r, dtype=float) ** self.gamma

    def b(self, theta):
        return angular_b(self, theta)

    def B(self, r, theta):
        return self.phi(r) * angular_b(self, theta)

    def to_dict(self) -> dict:
        return {"n": self.n, "gamma": self.gamma, "s": self.s,
                "C_phi": self.C_phi, "c_b": self.c_b}


def from_inverse_power(p: float, n: int = 3, C_phi: float = 1.0) -> KernelParams:
    """Inverse-power law potential with exponent p in three dimensions."""
    if p <= 2:
        raise ValueError(f"inverse-power exponent must exceed 2, got p={p}")
    if n != 3:
        raise ValueError("the inverse-power mapping is defined for n = 3; "
                         "supply gamma and s directly for other dimensions")
    gamma = (p - 5.0) / (p - 1.0)
    s = 1.0 / (p - 1.0)
    return KernelParams(n=n, gamma=gamma, s=s, C_phi=C_phi)


def angular_b(params: KernelParams, theta):
    """b(cos theta) = theta^(-1-2s) sin^(2-n) theta for theta in (0, pi/2]."""
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0) or np.any(th > np.pi / 2 + 1e-15):
        raise ValueError("theta must lie in (0, pi/2]")
    out = th ** (-1.0 - 2.0 * params.s)
    if params.n != 2:
        out = out * np.sin(th) ** (2.0 - params.n)
    return out


@dataclass
class CollisionPair:
    v: np.ndarray
    v_star: np.ndarray
    v_prime: np.ndarray
    v_star_prime: np.ndarray
    sigma: np.ndarray
    cos_theta: np.ndarray
    # |v - v'| = |v - v*| sin(theta/2)
    dist: np.ndarray = field(default=None)

    @property
    def theta(self):
        return np.arccos(np.clip(self.cos_theta, -1.0, 1.0))


def post_collision(v, v_star, sigma) -> CollisionPair:
    """Post-collisional velocities in the sigma-representation.

    Broadcasts over leading axes. sigma with a negative cosine is reflected
    to -sigma, which swaps v' and v'* (the symmetrized kernel lives on
    cos theta >= 0).
    """
    v = np.asarray(v, dtype=float)
    vs = np.asarray(v_star, dtype=float)
    sg = np.asarray(sigma, dtype=float)
    u = v - vs
    r = np.linalg.norm(u, axis=-1)
    if np.any(r == 0):
        raise ValueError("degenerate pair: v == v_star")
    nrm = np.linalg.norm(sg, axis=-1)
    if np.any(np.abs(nrm - 1.0) > 1e-10):
        raise ValueError("sigma must be a unit vector")
    cos = np.sum(u * sg, axis=-1) / r
    flip = cos < 0
    if np.any(flip):
        sg = np.where(flip[..., None], -sg, sg)
        cos = np.abs(cos)
    mid = 0.5 * (v + vs)
    half = 0.5 * r[..., None] * sg
    vp = mid + half
    vsp = mid - half
    dist = 0.5 * np.linalg.norm(u - r[..., None] * sg, axis=-1)
    return CollisionPair(v=v, v_star=vs, v_prime=vp, v_star_prime=vsp,
                         sigma=sg, cos_theta=cos, dist=dist)


def shell_index(r):
    """Index k of the dyadic shell [2^(-k-1), 2^(-k)) containing r."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("shell index needs r > 0")
    _, e = np.frexp(r)
    return -e


def shell_of(k: int, r):
    """chi_k(r): indicator of [2^(-k-1), 2^(-k))."""
    return (shell_index(r) == k).astype(float)


def shell_bounds(k):
    k = np.asarray(k, dtype=float)
    return 2.0 ** (-k - 1), 2.0 ** (-k)


@dataclass
class CarlemanFrame:
    origin: np.ndarray        # v'
    normal: np.ndarray        # unit (v' - v*)
    basis: np.ndarray         # (n-1, n) orthonormal tangent vectors
    nodes: np.ndarray         # (m, n) points of the plane inside the ball
    weights: np.ndarray       # (m,)


def plane_basis(normal):
    """Orthonormal basis of the hyperplane orthogonal to a unit normal."""
    normal = np.asarray(normal, dtype=float)
    n = normal.shape[-1]
    if n == 2:
        return np.array([[-normal[1], normal[0]]])
    # complete to an orthonormal frame via QR
    a = np.eye(n)
    a[:, 0] = normal
    q, _ = np.linalg.qr(a)
    if np.dot(q[:, 0], normal) < 0:
        q = -q
    return q[:, 1:].T.copy()


def carleman_frame(v_prime, v_star, L: float = 8.0, order: int = 32) -> CarlemanFrame:
    """Plane through v' with normal v' - v*, truncated to the ball |v| <= L."""
    vp = np.asarray(v_prime, dtype=float)
    vs = np.asarray(v_star, dtype=float)
    d = vp - vs
    nd = np.linalg.norm(d)
    if nd == 0:
        raise ValueError("coincident points: v' == v_star")
    nu = d / nd
    basis = plane_basis(nu)
    n = vp.size
    # foot of the perpendicular from the origin onto the plane
    c = np.dot(vp, nu) * nu
    rad2 = L * L - np.dot(c, c)
    if rad2 <= 0:
        return CarlemanFrame(vp, nu, basis, np.zeros((0, n)), np.zeros(0))
    rad = np.sqrt(rad2)
    x, w = np.polynomial.legendre.leggauss(order)
    if n == 2:
        t = rad * x
        nodes = c + t[:, None] * basis[0]
        weights = rad * w
    else:
        # polar rule on the (n-1)-disc; only n = 3 is needed here
        if n != 3:
            raise NotImplementedError("Carleman frames are implemented for n <= 3")
        rr = 0.5 * rad * (x + 1.0)
        wr = 0.5 * rad * w * rr
        na = 2 * order
        ang = 2 * np.pi * np.arange(na) / na
        dirs = np.cos(ang)[:, None] * basis[0] + np.sin(ang)[:, None] * basis[1]
        nodes = c + (rr[:, None, None] * dirs[None]).reshape(-1, 3)
        weights = np.repeat(wr, na) * (2 * np.pi / na)
    return CarlemanFrame(vp, nu, basis, nodes, weights)
