"""Galerkin solver for the perturbation equation, energy functionals and
entropy diagnostics.

The unknown is f with F = mu + sqrt(mu) f, expanded in an orthonormal
weighted polynomial basis. In torus mode f carries leading x-grid axes and
transport is diagonal in Fourier space.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .basis import HermiteBasis, HermiteField, RadialBasis, maxwellian, sqrt_maxwellian
from .collision import PaoSplit
from .kernel import KernelParams
from .macroscopic import HermiteRep, Torus, micro_part, moment_coefficients, project_P
from .matrices import CMRule, assemble_L, assemble_N_quadratic, basis_degree, gamma_tensor, nu_matrix
from .norms import VelocityGrid, WeightSpec, norm_L2_ell, seminorm_Nsg

log = logging.getLogger(__name__)


class StepError(RuntimeError):
    """Inner iteration failed; usually dt is too large for the data."""


class BlowUpError(RuntimeError):
    """A norm left the perturbative regime."""


# --- operators -------------------------------------------------------------

@dataclass
class OperatorSet:
    params: KernelParams
    basis: object
    L: np.ndarray
    N: np.ndarray
    K: np.ndarray
    T: np.ndarray               # T[i, j, k] = <Gamma(e_i, e_j), e_k>
    null: np.ndarray            # orthonormal rows spanning the null space
    c_fit: float
    J: list = field(default_factory=list)

    def gamma(self, f, g):
        """Coefficients of Gamma(f, g); broadcasts over leading axes."""
        return np.einsum("...i,...j,ijk->...k", f, g, self.T, optimize=True)

    def remove_null(self, f):
        return f - (f @ self.null.T) @ self.null


def make_basis(n, kind, N):
    if kind == "hermite":
        return HermiteBasis(n, N)
    if kind == "radial":
        return RadialBasis(n, N)
    raise ValueError(f"unknown basis kind {kind!r}")


def build_operators(params, basis, theta_nodes=24):
    """Assemble L, N, K and Gamma on the basis; nu = c_fit <v>^(gamma+2s)."""
    orient = "reduced" if isinstance(basis, RadialBasis) else "full"
    L = assemble_L(params, basis, theta_nodes, orient)
    split = PaoSplit.fit(params)
    Q = assemble_N_quadratic(params, basis, theta_nodes, orient)
    N = Q + nu_matrix(basis, lambda r: split.c_fit * np.sqrt(1 + r * r) ** params.rate)
    N = 0.5 * (N + N.T)
    K = L - N
    T = gamma_tensor(params, basis, theta_nodes, orient)
    Z = basis.null_coefficients()
    q, _ = np.linalg.qr(Z.T)
    J = [basis.multiplication(i) for i in range(basis.n)] if isinstance(basis, HermiteBasis) else []
    return OperatorSet(params, basis, L, N, K, T, q.T, split.c_fit, J)


# --- configuration ---------------------------------------------------------

DEFAULT_DT = {"hard": 1e-2, "soft": 5e-3}


@dataclass
class SolverConfig:
    params: KernelParams
    mode: str = "homogeneous"
    basis: str = "hermite"
    N: int = 8
    ell: float = 0.0
    m: int = 0
    dt: float = None
    t_end: float = 5.0
    amplitude: float = 0.05
    initial: dict = field(default_factory=lambda: {"kind": "bump"})
    torus_N: int = 8
    seed: int = 0
    output_every: int = 10
    theta_nodes: int = 24
    smallness: float = 0.2
    inner_tol: float = 1e-10
    inner_max: int = 50
    entropy: bool = True

    def __post_init__(self):
        if self.mode not in ("homogeneous", "torus"):
            raise ValueError(f"mode must be homogeneous or torus, got {self.mode!r}")
        if self.dt is None:
            self.dt = DEFAULT_DT["hard" if self.params.hard else "soft"]
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if not 0 <= self.amplitude <= self.smallness:
            raise ValueError(f"amplitude {self.amplitude} outside [0, {self.smallness}]")
        if self.mode == "torus":
            if self.params.n != 2:
                raise ValueError("torus mode is limited to n = 2")
            if self.torus_N > 16:
                raise ValueError("torus grid limited to 16 points per side")
            if self.basis != "hermite":
                raise ValueError("torus mode needs the Hermite basis")

    @property
    def spec(self):
        return WeightSpec.from_params(self.params, self.ell)

    def to_dict(self):
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d


def initial_data(config, ops, torus=None):
    """Coefficients of f_0, with the conservation constraints imposed.

    kinds: bump (Gaussian bump times <v>^-weight, scaled to |f_0| = amplitude),
    mixture (mu blended with two drifting Maxwellians at fraction amplitude,
    so F_0 > 0), mode (torus only: amplitude cos(k.x) sqrt(mu) phi).
    """
    n = config.params.n
    basis = ops.basis
    spec = dict(config.initial)
    kind = spec.get("kind", "bump")
    eps = config.amplitude
    if kind == "mixture":
        u = np.zeros(n)
        u[0] = spec.get("drift", 0.5)
        T = 1.0 - float(u @ u) / n

        def maxw(v, c):
            d = v - c
            return (2 * np.pi * T) ** (-n / 2) * np.exp(-0.5 * np.sum(d * d, -1) / T)

        g = lambda v: 0.5 * (maxw(v, u) + maxw(v, -u)) / sqrt_maxwellian(v) - sqrt_maxwellian(v)
        c = eps * basis.project(g)
    elif kind == "bump":
        ctr = np.asarray(spec.get("center", [0.5] + [0.0] * (n - 1)), dtype=float)
        wid = float(spec.get("width", 1.0))
        wexp = float(spec.get("weight", 0.0))
        g = lambda v: (np.exp(-0.5 * np.sum((v - ctr) ** 2, -1) / wid ** 2) * sqrt_maxwellian(v)
                       * (1 + np.sum(v * v, -1)) ** (-0.5 * wexp))
        c = basis.project(g)
        c = ops.remove_null(c)
        c *= eps / max(np.linalg.norm(c), 1e-300)
    elif kind == "mode":
        if torus is None:
            raise ValueError("kind 'mode' needs torus mode")
        k = np.asarray(spec.get("k", [1] + [0] * (torus.d - 1)), dtype=float)
        ctr = np.asarray(spec.get("center", [0.3] + [0.0] * (n - 1)), dtype=float)
        phi = lambda v: np.exp(-0.5 * np.sum((v - ctr) ** 2, -1)) * sqrt_maxwellian(v)
        cv = basis.project(phi)
        X = torus.points
        c = eps * np.cos(X @ k / torus.L)[..., None] * cv
    else:
        raise ValueError(f"unknown initial kind {kind!r}")
    if config.mode == "torus" and np.ndim(c) == 1:
        c = np.broadcast_to(c, (torus.N,) * torus.d + c.shape).copy()
    return conserve(ops, c, torus)


def conserve(ops, f, torus=None):
    """Remove the conserved moments: the null part of f (homogeneous) or of
    its x-average (torus)."""
    if torus is None or np.ndim(f) == 1:
        return ops.remove_null(f)
    axes = tuple(range(torus.d))
    mean = np.mean(f, axis=axes, keepdims=True)
    return f - (mean @ ops.null.T) @ ops.null


def conserved_moments(ops, f, torus=None):
    """Null-space components of f (x-averaged on the torus)."""
    if torus is None or np.ndim(f) == 1:
        return f @ ops.null.T
    return np.mean(f, axis=tuple(range(torus.d))) @ ops.null.T


# --- time stepping -----------------------------------------------------------

class Stepper:
    """Backward-Euler IMEX step:
    (I + dt (v.grad_x + N)) f1 = f0 - dt K f0 + dt Gamma(f0, f1),
    the Gamma coupling resolved by fixed-point iteration."""

    def __init__(self, ops, dt, torus=None, tol=1e-10, max_iter=50):
        self.ops, self.dt, self.torus = ops, dt, torus
        self.tol, self.max_iter = tol, max_iter
        m = ops.N.shape[0]
        if torus is None:
            self.chol = linalg.cho_factor(np.eye(m) + dt * ops.N)
        else:
            k = torus.wavenumbers.reshape(-1, torus.d)
            self.lu = []
            for kv in k:
                A = np.eye(m) + dt * ops.N + 1j * dt * sum(kv[i] * ops.J[i] for i in range(torus.d))
                self.lu.append(linalg.lu_factor(A))
        self.last_iterations = 0

    def solve(self, rhs):
        if self.torus is None:
            return linalg.cho_solve(self.chol, rhs)
        d = self.torus.d
        axes = tuple(range(d))
        R = np.fft.fftn(rhs, axes=axes)
        shape = R.shape
        R = R.reshape(-1, shape[-1])
        out = np.empty_like(R)
        for q, lu in enumerate(self.lu):
            out[q] = linalg.lu_solve(lu, R[q])
        return np.real(np.fft.ifftn(out.reshape(shape), axes=axes))

    def step(self, f):
        ops, dt = self.ops, self.dt
        if not np.any(f):
            self.last_iterations = 0
            return np.zeros_like(f)
        base = f - dt * f @ ops.K.T
        g = self.solve(base)
        for it in range(1, self.max_iter + 1):
            gam = conserve(ops, ops.gamma(f, g), self.torus)
            g_new = self.solve(base + dt * gam)
            delta = float(np.max(np.abs(g_new - g)))
            g = g_new
            if delta <= self.tol:
                self.last_iterations = it
                return conserve(ops, g, self.torus)
        raise StepError(f"inner iteration did not reach {self.tol:g} in {self.max_iter} "
                        f"iterations (last change {delta:.3e}); reduce dt")


def explicit_euler_step(ops, f, dt, torus=None):
    """f - dt (v.grad_x f + L f - Gamma(f, f)), for consistency checks."""
    return conserve(ops, f + dt * galerkin_rhs(ops, f, torus), torus)


def galerkin_rhs(ops, f, torus=None):
    """Right side of the semi-discrete system df/dt = -v.grad_x f - L f + Gamma(f, f)."""
    rhs = -(f @ ops.L.T) + conserve(ops, ops.gamma(f, f), torus)
    if torus is not None:
        for i in range(torus.d):
            rhs -= torus.deriv(f @ ops.J[i].T, tuple(int(a == i) for a in range(torus.d)))
    return rhs


def reference_trajectory(ops, f0, times, torus=None, rtol=1e-12, atol=1e-14):
    """Tight-tolerance solve of the semi-discrete system, sampled at times.

    Serves as a time-accurate reference where the first-order stepper is too
    coarse (e.g. finite-difference residuals of the moment equations).
    """
    from scipy.integrate import solve_ivp
    shape = np.shape(f0)
    times = np.asarray(times, dtype=float)
    sol = solve_ivp(lambda t, y: galerkin_rhs(ops, y.reshape(shape), torus).ravel(),
                    (times[0], times[-1]), np.ravel(f0), method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise StepError(f"reference integration failed: {sol.message}")
    return sol.y.T.reshape((times.size,) + shape)


def a_equation_series(ops, traj, torus):
    """(a, r_a, l_a, Gamma_a) along a torus trajectory of Hermite coefficients.

    l = -v.grad_x {I-P}f - L {I-P}f; l_a and Gamma_a are full moment
    coefficients on the sqrt(mu) slot, r_a the one of {I-P}f.
    """
    from .macroscopic import MomentBasis, NullBasis
    rep = HermiteRep(ops.basis)
    null, mom = NullBasis(rep), MomentBasis(rep)
    ka = mom.labels.index(("a", None))
    out = {"a": [], "r_a": [], "l_a": [], "gamma_a": []}
    for f in traj:
        _, hydro = project_P(rep, f, null)
        micro = micro_part(rep, f, null)
        lf = -(micro @ ops.L.T)
        for i in range(torus.d):
            lf -= torus.deriv(micro @ ops.J[i].T, tuple(int(a == i) for a in range(torus.d)))
        gam = conserve(ops, ops.gamma(f, f), torus)
        out["a"].append(hydro.a)
        out["r_a"].append(mom.coefficients(micro)[..., ka])
        out["l_a"].append(mom.coefficients(lf)[..., ka])
        out["gamma_a"].append(mom.coefficients(gam)[..., ka])
    return {k: np.array(v) for k, v in out.items()}


# --- diagnostics --------------------------------------------------------------

def l2_norm(f, torus=None):
    if torus is None or np.ndim(f) == 1:
        return float(np.linalg.norm(f))
    return float(np.sqrt(torus.integrate(np.sum(f * f, axis=-1))))


class BasisField:
    """Callable velocity field from coefficients (any basis)."""

    def __init__(self, basis, coeffs):
        self.basis, self.coeffs = basis, np.asarray(coeffs, dtype=float)

    def __call__(self, v):
        return self.basis(v) @ self.coeffs


def as_field(basis, coeffs):
    if isinstance(basis, HermiteBasis):
        return HermiteField(basis, coeffs)
    return BasisField(basis, coeffs)


RESOLVED_RADIUS = 6.0


def turning_radius(basis):
    """Classical turning point of the highest retained basis function; the
    expansion carries no information beyond it."""
    return float(np.sqrt(2 * basis_degree(basis) + basis.n))


def positivity_check(basis, f, grid=None, radius=None):
    """min of F = mu + sqrt(mu) f over velocity-grid points with |v| <= radius.

    A truncated expansion is a polynomial times mu and eventually turns
    negative, so only the resolved ball (default: the turning radius) is scanned.
    """
    grid = grid or VelocityGrid(basis.n)
    radius = turning_radius(basis) if radius is None else radius
    V = grid.points.reshape(-1, basis.n)
    V = V[np.linalg.norm(V, axis=-1) <= radius]
    coeffs = np.asarray(f, dtype=float)
    p = coeffs.reshape(-1, coeffs.shape[-1]) @ basis.poly(V).T          # (X, P)
    return float(np.min(maxwellian(V) * (1.0 + p)))


def _relative_p(basis, f, V):
    c = np.asarray(f, dtype=float)
    return c.reshape(-1, c.shape[-1]) @ basis.poly(V).T


def resolved_radius(basis, radius=None):
    """Ball where a truncated expansion is trusted: the turning radius, at most 6."""
    return min(turning_radius(basis), RESOLVED_RADIUS) if radius is None else radius


def entropy_H(basis, f, order=24, radius=None):
    """H = -int F log F for F = mu (1 + p), summed over leading x-axes.

    Split as int F (|v|^2/2 + n/2 log 2 pi) - int mu p - int mu ((1+p) log(1+p) - p);
    the first two parts are polynomial and exact, the last is restricted to the
    resolved ball. Its integrand is ~ mu p^2 / 2, so the dropped tail is second order.
    """
    from .quadrature import tensor_hermite

    n = basis.n
    radius = resolved_radius(basis, radius)
    V, w = tensor_hermite(order, n, scale=np.sqrt(2.0))
    w = w * (2 * np.pi) ** (-n / 2)                     # int mu g = sum w g
    one = 1.0 + _relative_p(basis, f, V)
    inside = np.linalg.norm(V, axis=-1) <= radius
    if np.any(one[:, inside] <= 0):
        raise ValueError("F is not positive in the resolved ball; H undefined")
    lin = one * (0.5 * np.sum(V * V, -1) + 0.5 * n * np.log(2 * np.pi))
    ent = np.where(inside, one * np.log(np.where(inside, one, 1.0)) - (one - 1.0), 0.0)
    return float(np.sum((lin - (one - 1.0) - ent) @ w))


def entropy_production(params, basis, f, theta_nodes=12, degree=None, radius=None):
    """D(F) for F = mu (1 + p), p = sum c_a G_a, in centre-of-mass coordinates:
    1/4 int B mu mu* (Y - X) log(Y / X), X = (1+p)(1+p*), Y = (1+p')(1+p'*).

    mu mu* is the quadrature weight, so D(mu) = 0 exactly. Nodes with
    |v|^2 + |v*|^2 > radius^2 are dropped; that set is collision invariant.
    The radius defaults to the resolved ball of the basis.
    """
    n = params.n
    radius = resolved_radius(basis, radius)
    c = np.asarray(f, dtype=float)
    orient = "reduced" if isinstance(basis, RadialBasis) else "full"
    rule = CMRule(params, degree or max(2 * basis_degree(basis), 16), theta_nodes, orient)
    total = 0.0
    X = keep = None
    for v, vs, vp, vsp, w in rule.chunks():
        shape = vp.shape
        P = lambda a: basis.poly(np.broadcast_to(a, shape).reshape(-1, n)) @ c
        if X is None:
            keep = (np.sum(np.broadcast_to(v, shape) ** 2, -1)
                    + np.sum(np.broadcast_to(vs, shape) ** 2, -1)).reshape(-1) <= radius ** 2
            X = (1 + P(v)) * (1 + P(vs))
            if np.any((X <= 0) & keep):
                raise ValueError("F is not positive at resolved quadrature nodes; D(F) undefined")
            Xs = np.where(keep, X, 1.0)
        Y = (1 + P(vp)) * (1 + P(vsp))
        if np.any((Y <= 0) & keep):
            raise ValueError("F is not positive at resolved quadrature nodes; D(F) undefined")
        Ys = np.where(keep, Y, 1.0)
        total += float(np.sum(np.broadcast_to(w, shape[:-1]).reshape(-1) * (Ys - Xs) * np.log(Ys / Xs)))
    return 0.25 * total


def entropy_production_shells(params, F, outer=None, quad=None):
    """D(F) for a positive callable F by the dyadic-shell sigma quadrature."""
    from .collision import SigmaQuadrature, outer_rule

    quad = quad or SigmaQuadrature(params)
    V, W = outer if outer is not None else outer_rule(12, params.n, scale=1.5)

    def integrand(v, vs, vp, vsp):
        x = F(v) * F(vs)
        y = F(vp) * F(vsp)
        if np.any(x <= 0) or np.any(y <= 0):
            raise ValueError("F must be positive")
        return (y - x) * np.log(y / x)

    return 0.25 * float(W @ quad.integrate(V, integrand))


def entropy_diagnostics(params, basis, f, **kw):
    """(H, D(F)) for the homogeneous state F = mu + sqrt(mu) f."""
    return entropy_H(basis, f), entropy_production(params, basis, f, **kw)


def entropy_lower_bound_probe(params, F, eps=1e-3, c=1.0, grid=None, outer=None, D=None):
    """D(F) against the d-metric semi-norm of sqrt(F) - sqrt(mu).

    F is a callable; the precondition F >= eps exp(-c|v|^2) is checked on the
    grid and the probe is skipped (None) if it fails. A precomputed D may be
    passed when only the grid is refined.
    """
    grid = grid or VelocityGrid(params.n)
    V = grid.points
    if np.any(F(V) < eps * np.exp(-c * np.sum(V * V, -1))):
        warnings.warn("lower-bound precondition F >= eps exp(-c|v|^2) violated; probe skipped",
                      stacklevel=2)
        return None
    spec = WeightSpec(params.gamma, params.s, 0.0)
    dev = lambda v: np.sqrt(F(v)) - sqrt_maxwellian(v)
    if D is None:
        D = entropy_production_shells(params, F, outer=outer)
    if np.max(np.abs(dev(V))) <= 1e-14:
        # Maxwellian up to roundoff
        return {"D": D, "seminorm": 0.0, "ratio": None, "exact_zero": True}
    _, parts = seminorm_Nsg(spec, dev, grid, parts=True)
    semi = parts["pairs"] + parts["near_diagonal"]
    if semi == 0.0:
        return {"D": D, "seminorm": 0.0, "ratio": None, "exact_zero": True}
    return {"D": D, "seminorm": float(semi), "ratio": D / semi, "exact_zero": False}


def energy_functionals(basis, f, spec, ell, m, K=None, torus=None, grid=None):
    """(E_{ell,m}, D_{ell,m}) with K total derivatives, |beta| <= m velocity ones.

    E = sum |w^(ell-|beta|) d^alpha_beta f|^2, D = sum |d^alpha_beta f|^2 in
    N^{s,gamma}_{ell-|beta|}; x-derivatives are spectral on the torus.
    """
    K = m if K is None else K
    if m > K:
        raise ValueError("m must not exceed K")
    grid = grid or VelocityGrid(basis.n)
    n = basis.n
    f = np.asarray(f, dtype=float)
    E = D = 0.0
    xs = [()] if torus is None or f.ndim == 1 else list(np.ndindex(*f.shape[:-1]))
    cellx = 1.0 if torus is None or f.ndim == 1 else torus.volume / torus.N ** torus.d
    for nb in range(m + 1):
        for beta in itertools.product(range(nb + 1), repeat=n):
            if sum(beta) != nb:
                continue
            sp = spec.with_ell(ell - nb)
            for na in range(K - nb + 1):
                dims = 0 if torus is None or f.ndim == 1 else torus.d
                alphas = [a for a in itertools.product(range(na + 1), repeat=dims) if sum(a) == na]
                if dims == 0:
                    alphas = [()] if na == 0 else []
                for alpha in alphas:
                    g = torus.deriv(f, alpha) if alpha else f
                    for x in xs:
                        fld = as_field(basis, g[x] if x else g)
                        if any(beta) and isinstance(basis, HermiteBasis):
                            vfld = (lambda fl, b: (lambda v: fl.deriv(b, v)))(fld, beta)
                            E += cellx * norm_L2_ell(sp, vfld, grid) ** 2
                            D += cellx * seminorm_Nsg(sp, vfld, grid) ** 2
                        elif any(beta):
                            from .norms import derivative
                            arr = derivative(grid, fld, beta)
                            E += cellx * norm_L2_ell(sp, arr, grid) ** 2
                            D += cellx * seminorm_Nsg(sp, arr, grid, correction=False) ** 2
                        else:
                            E += cellx * norm_L2_ell(sp, fld, grid) ** 2
                            D += cellx * seminorm_Nsg(sp, fld, grid) ** 2
    return float(E), float(D)


# --- runs ---------------------------------------------------------------------

@dataclass
class EnergyReport:
    times: list = field(default_factory=list)
    norm: list = field(default_factory=list)
    E00: list = field(default_factory=list)
    E: list = field(default_factory=list)
    D: list = field(default_factory=list)
    H: list = field(default_factory=list)
    DF: list = field(default_factory=list)
    drift: list = field(default_factory=list)
    min_F: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)      # per output: coefficients (rms over x on the torus)
    fit: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)

    COLUMNS = ("times", "norm", "E00", "E", "D", "H", "DF", "drift", "min_F", "iterations")

    def rows(self):
        return [dict(zip(self.COLUMNS, vals)) for vals in zip(*(getattr(self, c) for c in self.COLUMNS))]

    def summary(self):
        return {"fit": self.fit, "checks": self.checks, "config": self.config,
                "manifest": self.manifest}


def fit_decay(times, norms, t_min=1.0):
    """Exponential fit of log|f| on t >= t_min; power-law fit on log t as well."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(norms, dtype=float)
    sel = (t >= t_min) & (y > 0)
    out = {}
    if sel.sum() < 3:
        return out
    ly = np.log(y[sel])
    slope, icpt = np.polyfit(t[sel], ly, 1)
    pred = slope * t[sel] + icpt
    ss = np.sum((ly - ly.mean()) ** 2)
    out["lambda"] = float(-slope)
    out["r2_exp"] = float(1 - np.sum((ly - pred) ** 2) / ss) if ss > 0 else 1.0
    ps, pi = np.polyfit(np.log(t[sel]), ly, 1)
    pp = ps * np.log(t[sel]) + pi
    out["power"] = float(-ps)
    out["r2_power"] = float(1 - np.sum((ly - pp) ** 2) / ss) if ss > 0 else 1.0
    rate = -np.gradient(np.log(y[y > 0]), t[y > 0])
    out["rate_start"] = float(rate[0])
    out["rate_end"] = float(rate[-1])
    return out


def run(config: SolverConfig, ops=None, progress=None, blowup=10.0):
    """Integrate to t_end and collect the EnergyReport."""
    p = config.params
    basis = make_basis(p.n, config.basis, config.N)
    if ops is None:
        ops = build_operators(p, basis, config.theta_nodes)
    torus = Torus(2, config.torus_N) if config.mode == "torus" else None
    f = initial_data(config, ops, torus)
    stepper = Stepper(ops, config.dt, torus, config.inner_tol, config.inner_max)
    grid = VelocityGrid(p.n, 32 if p.n == 2 else 24, 8.0)
    rep = EnergyReport(config=config.to_dict())
    rep.manifest = {"basis": config.basis, "basis_size": basis.size,
                    "theta_nodes": config.theta_nodes, "velocity_grid": [grid.N, grid.L],
                    "c_fit": ops.c_fit}
    m0 = conserved_moments(ops, f, torus)
    n0 = l2_norm(f, torus)
    steps = int(round(config.t_end / config.dt))

    def record(t, f, iters):
        rep.times.append(t)
        rep.norm.append(l2_norm(f, torus))
        rep.E00.append(rep.norm[-1] ** 2)
        E, D = energy_functionals(basis, f, config.spec, config.ell, config.m, torus=torus, grid=grid)
        rep.E.append(E)
        rep.D.append(D)
        if config.entropy and torus is None:
            H, DF = entropy_diagnostics(p, basis, f)
        else:
            H, DF = float("nan"), float("nan")
        rep.H.append(H)
        rep.DF.append(DF)
        rep.drift.append(float(np.max(np.abs(conserved_moments(ops, f, torus) - m0))))
        rep.min_F.append(positivity_check(basis, f, grid))
        rep.iterations.append(iters)
        fa = np.asarray(f)
        rep.coeffs.append(fa if fa.ndim == 1 else np.sqrt(np.mean(fa * fa, axis=tuple(range(fa.ndim - 1)))))

    record(0.0, f, 0)
    for k in range(1, steps + 1):
        f = stepper.step(f)
        nrm = l2_norm(f, torus)
        if not np.isfinite(nrm) or nrm > blowup * max(n0, 1e-300):
            raise BlowUpError(f"|f| = {nrm:.3e} at t = {k * config.dt:.3f}")
        if k % config.output_every == 0 or k == steps:
            record(k * config.dt, f, stepper.last_iterations)
            if progress:
                progress(k * config.dt, nrm)
    rep.fit = fit_decay(rep.times, rep.norm)
    e = np.asarray(rep.E00)
    rep.checks = {
        "energy_monotone": bool(np.all(np.diff(e) <= 1e-10)),
        "conservation_drift": float(max(rep.drift)),
        "conservation_ok": bool(max(rep.drift) <= 1e-8 * max(1.0, n0)),
        "min_F": float(min(rep.min_F)),
        "positivity_ok": bool(min(rep.min_F) >= -1e-10),
    }
    if config.entropy and torus is None:
        H = np.asarray(rep.H)
        dH = np.diff(H) / np.diff(rep.times)
        rep.checks["H_nondecreasing"] = bool(np.all(dH >= -1e-8))
        rep.checks["D_nonnegative"] = bool(np.min(rep.DF) >= -1e-10)
    rep.final = f
    return rep
