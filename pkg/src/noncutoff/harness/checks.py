"""Named checks, one per acceptance criterion (c01-c14) plus the estimate-ratio
suites (c15, c16), each a list of sub-assertions.

A check passes when every sub-assertion passes. Sub-assertions flagged as
known deviations are measured and reported like the others; when only those
fail the status is "xfail" rather than "fail".
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..kernel import KernelParams, from_inverse_power, post_collision

CRITERIA = {}


@dataclass
class Assertion:
    label: str
    passed: bool
    measured: float
    bound: float
    known_deviation: bool = False
    note: str = ""


@dataclass
class CheckResult:
    name: str
    criterion: int
    suite: str
    title: str
    assertions: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str = ""

    @property
    def status(self):
        if self.error:
            return "fail"
        bad = [a for a in self.assertions if not a.passed]
        if not bad:
            return "pass"
        return "xfail" if all(a.known_deviation for a in bad) else "fail"

    def to_dict(self):
        d = asdict(self)
        d["status"] = self.status
        return d


class Recorder:
    """Collects sub-assertions inside a check."""

    def __init__(self):
        self.items = []
        self.data = {}

    def le(self, label, measured, bound, known=False, note=""):
        m = float(measured)
        self.items.append(Assertion(label, bool(m <= bound), m, float(bound), known, note))

    def ge(self, label, measured, bound, known=False, note=""):
        m = float(measured)
        self.items.append(Assertion(label, bool(m >= bound), m, float(bound), known, note))

    def within(self, label, measured, target, tol, known=False, note=""):
        m = float(measured)
        self.items.append(Assertion(label, bool(abs(m - target) <= tol), m, float(tol),
                                    known, note or f"target {target:g}"))

    def true(self, label, cond, known=False, note=""):
        self.items.append(Assertion(label, bool(cond), float(bool(cond)), 1.0, known, note))


def check(number, suite, title):
    def deco(fn):
        CRITERIA[f"c{number:02d}"] = (number, suite, title, fn)
        return fn
    return deco


def _quick(cfg):
    return cfg.scale == "quick"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def random_fields(n, count, seed):
    """Seeded smooth test fields: Gaussians, Hermite-Gaussians and mixtures."""
    from ..fields import Gaussian, GaussianMixture, HermiteGaussian
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        c = rng.normal(scale=0.6, size=n)
        w = rng.uniform(0.7, 1.3)
        kind = i % 3
        if kind == 0:
            out.append(Gaussian(c, w, rng.uniform(0.5, 1.5)))
        elif kind == 1:
            idx = rng.integers(0, 3, size=n)
            out.append(HermiteGaussian(c, w, idx, rng.uniform(0.5, 1.5)))
        else:
            cs = c + rng.normal(scale=0.8, size=(2, n))
            out.append(GaussianMixture(cs, rng.uniform(0.7, 1.3, 2), rng.uniform(-1, 1.5, 2)))
    return out


# --- kernel -----------------------------------------------------------------

@check(1, "kernel", "inverse-power mapping")
def c01(cfg, r):
    expected = {3: (-1.0, 0.5), 5: (0.0, 0.25), 9: (0.5, 0.125)}
    for p, (g, s) in expected.items():
        kp = from_inverse_power(p, 3)
        r.le(f"p={p} |gamma - {g}| + |s - {s}|", abs(kp.gamma - g) + abs(kp.s - s), 0.0)


@check(2, "kernel", "collision geometry")
def c02(cfg, r):
    rng = np.random.default_rng(cfg.seed)
    m = 10_000 if _quick(cfg) else 100_000
    for n in (2, 3):
        v = rng.normal(scale=2.0, size=(m, n))
        vs = rng.normal(scale=2.0, size=(m, n))
        sg = rng.normal(size=(m, n))
        sg /= np.linalg.norm(sg, axis=-1, keepdims=True)
        cp = post_collision(v, vs, sg)
        scale_p = np.abs(v).max() + np.abs(vs).max()
        e0 = np.sum(v * v, -1) + np.sum(vs * vs, -1)
        mom = np.abs(cp.v_prime + cp.v_star_prime - v - vs).max() / scale_p
        en = np.abs(np.sum(cp.v_prime ** 2, -1) + np.sum(cp.v_star_prime ** 2, -1) - e0).max() / e0.max()
        r.le(f"n={n} momentum", mom, 1e-12)
        r.le(f"n={n} energy", en, 1e-12)
        # involution: colliding (v', v*') along unit(v - v*) returns the pair {v, v*}
        u = v - vs
        back = post_collision(cp.v_prime, cp.v_star_prime, u / np.linalg.norm(u, axis=-1, keepdims=True))
        d1 = np.maximum(np.abs(back.v_prime - v).max(-1), np.abs(back.v_star_prime - vs).max(-1))
        d2 = np.maximum(np.abs(back.v_prime - vs).max(-1), np.abs(back.v_star_prime - v).max(-1))
        r.le(f"n={n} involution (rounding-level)", np.minimum(d1, d2).max() / scale_p, 1e-13)


# --- paraboloid / LP -----------------------------------------------------

@check(3, "lp", "paraboloid metric")
def c03(cfg, r):
    from ..lp import lift, metric_d
    rng = np.random.default_rng(cfg.seed + 3)
    m = 10_000
    for n in (2, 3):
        a, b, c = (rng.normal(scale=2.0, size=(m, n)) for _ in range(3))
        d = metric_d(a, b)
        chord = np.linalg.norm(lift(a) - lift(b), axis=-1)
        r.le(f"n={n} |d - chord| / max(1, d)", np.max(np.abs(d - chord) / np.maximum(1, d)), 1e-13)
        # independent form: |v|^2 - |v'|^2 = (v - v').(v + v')
        fac = np.sqrt(np.sum((a - b) ** 2, -1) + 0.25 * np.sum((a - b) * (a + b), -1) ** 2)
        r.le(f"n={n} |d - factored form| / max(1, d)", np.max(np.abs(d - fac) / np.maximum(1, d)), 1e-13)
        slack = metric_d(a, b) + metric_d(b, c) - metric_d(a, c)
        scale = np.maximum(1.0, metric_d(a, c))
        r.ge(f"n={n} triangle slack / scale", np.min(slack / scale), -1e-13)


@check(4, "lp", "LP kernel")
def c04(cfg, r):
    from ..lp import build_lp_stack, decay_slope, qj_one_decay
    st = build_lp_stack(M=cfg.M, n=2, J_max=cfg.J_max, check=True)
    r.le("normalization residual", st.report["normalization_residual"], 1e-8)
    r.le("moment residual (deg <= 4, |alpha| <= 4)", st.report["moment_residual"], 1e-6)
    vs = np.array([[0.0, 0.0], [1.0, -0.5], [2.0, 1.0]])
    js = list(range(1, cfg.J_max + 1))
    vals = [qj_one_decay(st, j, vs) for j in js]
    r.le("Q_j(1) log2-slope over j", decay_slope(vals, js), -1.8)
    r.data["qj_one"] = vals


# --- norms ------------------------------------------------------------------

COMPARETON_LEVELS = ({"outer": 12, "nodes": 32, "ang_nodes": 16, "grid": 32},
                     {"outer": 14, "nodes": 40, "ang_nodes": 20, "grid": 48})


@check(5, "norms", "square-function comparison")
def c05(cfg, r):
    from ..lp import build_lp_stack
    from ..norms import VelocityGrid, WeightSpec, compareton_rhs, lp_square_norm
    st = build_lp_stack(M=cfg.M, n=2, J_max=cfg.J_max, check=False)
    s_list = (0.25, 0.5, 0.75)
    specs = [WeightSpec(0.0, s, 0.0) for s in s_list]
    fields = random_fields(2, 3 if _quick(cfg) else 20, cfg.seed + 5)
    C = []
    for lev in COMPARETON_LEVELS:
        grid = VelocityGrid(2, lev["grid"], cfg.grid_L)
        ratios = np.zeros((len(fields), len(specs)))
        for i, f in enumerate(fields):
            lhs = lp_square_norm(st, specs, f, outer=lev["outer"], nodes=lev["nodes"],
                                 ang_nodes=lev["ang_nodes"])
            ratios[i] = [a / compareton_rhs(sp, f, grid) for a, sp in zip(lhs, specs)]
        C.append(ratios.max(axis=0))
        r.true(f"ratios finite and positive (level grid={lev['grid']})",
               np.all(np.isfinite(ratios)) and np.all(ratios > 0))
    for k, s in enumerate(s_list):
        r.le(f"s={s} |C_fine / C_coarse - 1|", abs(C[1][k] / C[0][k] - 1), 0.2)
    r.data["C"] = {str(s): [float(C[0][k]), float(C[1][k])] for k, s in enumerate(s_list)}


# --- collision ----------------------------------------------------------------

def _trilinear_fields(n):
    from ..fields import Gaussian
    g = Gaussian([0.3, -0.2, 0.1][:n], 1.0)
    h = Gaussian([-0.4, 0.1, 0.2][:n], 0.9)
    f = Gaussian([0.2, 0.5, -0.1][:n], 1.1)
    return g, h, f


@check(6, "collision", "trilinear consistency")
def c06(cfg, r):
    from ..collision import (CarlemanQuadrature, SigmaQuadrature, T_carleman, T_sigma,
                             direct_pairing, outer_rule, weak_pairing)
    p = KernelParams(2, 0.0, 0.25)
    g, h, f = _trilinear_fields(2)
    outer = outer_rule(10, 2, scale=1.0)
    q = SigmaQuadrature(p, k_max=cfg.K_max)
    Tp = T_sigma(p, None, g, h, f, outer=outer, quad=q)
    Tm = T_sigma(p, None, g, h, f, outer=outer, quad=q, variant="minus")
    S = sum(Tp[k] - Tm[k] for k in Tp)
    d = direct_pairing(p, g, h, f, outer=outer, quad=q)
    r.le("sum_k (T+ - T-) vs direct", _rel(S, d), 1e-4)
    if not _quick(cfg):
        w = weak_pairing(p, g, h, f, outer=outer)
        r.le("sum_k (T+ - T-) vs weak form", _rel(S, w), 1e-4)
    cq = CarlemanQuadrature(p)
    for k in ((0, 3) if _quick(cfg) else (-2, 0, 3, 8)):
        c = T_carleman(p, k, g, h, f, outer=outer, cq=cq)
        r.le(f"Carleman vs sigma T+ (k={k})", _rel(c, Tp[k]), 1e-4)
    r.data.update(sum=S, direct=d)


@check(7, "collision", "dyadic scaling slopes")
def c07(cfg, r):
    from ..collision import CarlemanQuadrature, SigmaQuadrature, T_carleman, T_sigma, outer_rule
    ks = np.arange(2, 9)
    slope = lambda a: float(np.polyfit(ks, np.log2(np.abs(a)), 1)[0])
    for g_, s in ((0.0, 0.25), (0.0, 0.5)):
        p = KernelParams(2, g_, s)
        g, h, f = _trilinear_fields(2)
        outer = outer_rule(8, 2)
        q = SigmaQuadrature(p, k_min=2, k_max=8, dir_nodes=32)
        Tp = T_sigma(p, None, g, h, f, outer=outer, quad=q)
        Tm = T_sigma(p, None, g, h, f, outer=outer, quad=q, variant="minus")
        tp = np.array([Tp[k] for k in ks])
        tm = np.array([Tm[k] for k in ks])
        lab = f"(gamma,s)=({g_},{s})"
        r.within(f"{lab} T+ slope", slope(tp), 2 * s, 0.2)
        r.within(f"{lab} T- slope", slope(tm), 2 * s, 0.2)
        r.le(f"{lab} T+ - T- slope", slope(tp - tm), 2 * s - 2 + 0.3)
        cq = CarlemanQuadrature(p, dir_nodes=32, az_nodes=8)
        cp = np.array([T_carleman(p, k, g, h, f, outer=outer, cq=cq) for k in ks])
        cs = np.array([T_carleman(p, k, g, h, f, outer=outer, cq=cq, variant="star") for k in ks])
        r.within(f"{lab} Carleman T* slope", slope(cs), 2 * s, 0.2)
        r.le(f"{lab} Carleman T+ - T* slope", slope(cp - cs), 2 * s - 2 + 0.3)


@check(8, "collision", "Pao asymptotics")
def c08(cfg, r):
    from ..collision import nu_tilde, pao_fit
    R = 2.0 ** np.arange(4, 11)
    x = np.log(np.sqrt(1 + R ** 2))
    for P in (3, 5, 9):
        p = from_inverse_power(P, 3)
        fit = pao_fit(p)
        r.within(f"p={P} slope over |v| in [4, 8]", fit["slope"], p.rate, 0.15, known=True,
                 note="pre-asymptotic range")
        nu = nu_tilde(p, np.stack([0 * R, 0 * R, R], -1))
        # the lower-order part ~ <v>^gamma fades only like <v>^(-2s)
        far = float(np.diff(np.log(nu[-2:]))[0] / np.diff(x[-2:])[0])
        r.within(f"p={P} local slope over |v| in [512, 1024]", far, p.rate, 0.15)
        X = np.stack([np.exp(p.rate * x), np.exp(p.gamma * x)], -1)
        coef = np.linalg.lstsq(X / nu[:, None], np.ones_like(nu), rcond=None)[0]
        r.le(f"p={P} misfit of A<v>^(gamma+2s) + B<v>^gamma on [16, 1024]",
             np.abs(X @ coef / nu - 1).max(), 0.05)
        r.data[f"p{P}_nu"] = nu.tolist()


@check(9, "collision", "kappa_j compact bound")
def c09(cfg, r):
    from ..collision import kappa_integral
    from ..fields import Gaussian
    p = KernelParams(2, 0.0, 0.25)
    G = Gaussian(np.zeros(2), math.sqrt(2.0))
    js = list(range(-4, 1))
    for vs in ([1.0, 0.0], [3.0, 0.0]):
        I = [kappa_integral(p, j, G, G, vs, nodes=32) for j in js]
        sl = float(np.polyfit(js, np.log2(I), 1)[0])
        r.ge(f"v*={vs} j-scaling (log2 per unit j)", sl, 2 * p.s - 0.2)
    I = [kappa_integral(p, j, G, G, [1.0, 0.0], nodes=32, reverse=True) for j in js]
    r.ge("reversed variables j-scaling", float(np.polyfit(js, np.log2(I), 1)[0]), 2 * p.s - 0.2)
    radii = np.array([3.0, 6.0])
    I0 = [kappa_integral(p, 0, G, G, [x, 0.0], nodes=32) for x in radii]
    ex = float(np.polyfit(np.log(np.sqrt(1 + radii ** 2)), np.log(I0), 1)[0])
    r.within("v*-decay exponent", ex, p.rate - (p.n - 1), 0.3, known=True,
             note="Gaussian test functions decay faster than the bound")
    r.data["kappa_0"] = I0


# --- operators -----------------------------------------------------------------

@check(10, "operators", "operator structure")
def c10(cfg, r):
    from ..basis import HermiteBasis
    from ..collision import PaoSplit, SigmaQuadrature, apply_K, apply_L, apply_N, outer_rule
    from ..fields import Gaussian
    from ..matrices import assemble_L, null_space_residual
    from ..norms import WeightSpec, seminorm_B_ell
    p = KernelParams(2, 0.0, 0.25)
    N = 6 if _quick(cfg) else cfg.basis_N
    basis = HermiteBasis(2, N)
    A = assemble_L(p, basis, symmetrize=False)
    scale = np.abs(A).max()
    r.le("L(null basis) / scale", null_space_residual(p, A, basis), 1e-6)
    r.le("asymmetry / scale", np.abs(A - A.T).max() / scale, 1e-8)
    r.ge("min eigenvalue", np.linalg.eigvalsh(0.5 * (A + A.T))[0], -1e-8)
    q = SigmaQuadrature(p)
    split = PaoSplit.fit(p, quad=q)
    g = Gaussian(np.array([0.3, -0.2]), 1.0)
    X = np.random.default_rng(cfg.seed + 10).normal(scale=1.5, size=(40, 2))
    Lg = apply_L(p, g, X, q)
    NK = apply_N(p, split, g, X, q) + apply_K(p, split, g, X, q)
    r.le("N + K vs L pointwise", np.abs(NK - Lg).max() / np.abs(Lg).max(), 1e-5)
    V, W = outer_rule(12, 2, scale=1.2)
    lhs = np.sum(W * g(V) * apply_N(p, split, g, V, q))
    b = seminorm_B_ell(p, WeightSpec.from_params(p), g, outer=(V, W), quad=q)
    nu = np.sum(W * split.nu(V) * g(V) ** 2)
    r.le("<N g, g> identity", _rel(lhs, b + nu), 1e-6)


def _sweep_configs():
    return [KernelParams(2, 0.0, 0.25), KernelParams(3, -0.5, 0.25), KernelParams(3, -1.0, 0.25)]


@check(11, "operators", "spectral-gap dichotomy")
def c11(cfg, r):
    from .sweep import assess_gaps, equivalence_probe, spectral_sweep
    Ns = (4, 6, 8) if _quick(cfg) else (8, 12, 16)
    entries = spectral_sweep(_sweep_configs(), Ns)
    for row in assess_gaps(entries):
        lab = f"n={row['n']} (gamma,s)=({row['gamma']},{row['s']}) {row['regime']}"
        if row["regime"] == "hard":
            r.le(f"{lab} gap spread over N", row["spread"], 0.10)
        elif row["regime"] == "soft":
            r.ge(f"{lab} gap drop N={Ns[0]}->{Ns[-1]}", row["drop"], 0.30, known=True,
                 note="truncation cannot resolve the continuous spectrum at desk scale")
        else:
            r.ge(f"{lab} min gap / gap(N={Ns[0]})", row["ratio"], 0.5)
    r.data["gaps"] = [dict(n=e.n, gamma=e.gamma, s=e.s, N=e.N, gap=e.gap) for e in entries]
    eq = equivalence_probe(KernelParams(2, 0.0, 0.25), N=8 if _quick(cfg) else 12,
                           n_samples=10 if _quick(cfg) else 50, seed=cfg.seed)
    r.ge("equivalence c > 0", eq["c"], 1e-300)
    r.le("equivalence C/c", eq["C_over_c"], 50.0)
    r.le("ratio homogeneity under g -> 2g", eq["homogeneity_defect"], 1e-12)
    r.data["equivalence"] = {k: eq[k] for k in ("c", "C", "C_over_c")}


# --- evolve ---------------------------------------------------------------------

def entropy_states(count, seed, N=4):
    """Coefficients of F = mu (1 + q) with q a random polynomial of degree <= N,
    scaled so that 1 + q >= 0.05 on |v| <= 6."""
    from ..basis import HermiteBasis, sqrt_maxwellian
    from ..quadrature import tensor_hermite
    rng = np.random.default_rng(seed)
    basis = HermiteBasis(2, N)
    t = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    rad = np.linspace(0, 6, 61)
    ring = np.stack([np.outer(rad, np.cos(t)), np.outer(rad, np.sin(t))], -1).reshape(-1, 2)
    out = []
    for _ in range(count):
        c = rng.normal(size=basis.size) / (1 + basis.indices.sum(1)) ** 2
        p = basis(ring) @ c / sqrt_maxwellian(ring)
        lo = p.min()
        amp = rng.uniform(0.2, 1.0) * (0.95 / -lo if lo < 0 else 1.0)
        out.append(amp * c)
    return basis, out


@check(12, "evolve", "H-theorem")
def c12(cfg, r):
    from ..evolve import SolverConfig, entropy_production, run
    p = KernelParams(2, 0.0, 0.25)
    basis, states = entropy_states(5 if _quick(cfg) else 20, cfg.seed + 12)
    r.le("D(mu)", abs(entropy_production(p, basis, np.zeros(basis.size))), 1e-10)
    D = [entropy_production(p, basis, c) for c in states]
    r.ge("min D(F) over states", min(D), -1e-10)
    r.data["D_states"] = D
    sc = SolverConfig(p, N=6 if _quick(cfg) else 8, t_end=1.0 if _quick(cfg) else 2.0,
                      output_every=10, seed=cfg.seed)
    rep = run(sc)
    dH = np.diff(rep.H) / np.diff(rep.times)
    r.ge("min dH/dt along trajectory", dH.min(), -1e-8)
    r.ge("min D along trajectory", min(rep.DF), -1e-10)


def solver_runs(cfg):
    from ..evolve import SolverConfig, run
    quick = _quick(cfg)
    hard = SolverConfig(KernelParams(2, 0.0, 0.25), N=6 if quick else 8, entropy=False,
                        t_end=3.0 if quick else 5.0)
    soft = SolverConfig(KernelParams(3, -1.25, 0.25), basis="radial", N=6 if quick else 8,
                        entropy=False, t_end=3.0 if quick else 5.0)
    hard_ref = SolverConfig(KernelParams(3, 0.0, 0.25), basis="radial", N=6 if quick else 8,
                            entropy=False, t_end=3.0 if quick else 5.0)
    torus = SolverConfig(KernelParams(2, 0.0, 0.25), mode="torus", N=6 if quick else 8,
                         torus_N=8, initial={"kind": "mode"}, entropy=False,
                         t_end=1.0 if quick else 3.0)
    return {name: run(c) for name, c in
            (("hard", hard), ("soft", soft), ("hard_radial", hard_ref), ("torus", torus))}


@check(13, "evolve", "solver decay")
def c13(cfg, r):
    reps = solver_runs(cfg)
    h, s = reps["hard"], reps["soft"]
    r.ge("hard lambda", h.fit["lambda"], 1e-12)
    r.ge("hard exponential R^2", h.fit["r2_exp"], 0.99)
    r.le("soft rate_end - rate_start", s.fit["rate_end"] - s.fit["rate_start"], 0.0)
    ratio = reps["soft"].norm[-1] / reps["hard_radial"].norm[-1]
    r.ge("soft / hard final |f| (same data)", ratio, 2.0)
    for name, rep in reps.items():
        r.le(f"{name} conservation drift", rep.checks["conservation_drift"], 1e-8)
        r.ge(f"{name} min F", rep.checks["min_F"], -1e-10)
        r.le(f"{name} max increase of E00", float(np.max(np.diff(rep.E00))), 1e-10)
    r.data["fits"] = {k: v.fit for k, v in reps.items()}


# --- macroscopic ------------------------------------------------------------

def oracle_field(basis, torus):
    """Hermite coefficients of a single-mode field with I(t) = -2 pi^2 (K = 1)."""
    from ..basis import sqrt_maxwellian as M
    x1 = torus.points[..., 0]
    v1 = lambda v: v[..., 0]
    parts = [
        (np.cos(x1), lambda v: M(v)),
        (np.sin(x1), lambda v: v1(v) * M(v)),
        (np.sin(x1), lambda v: v[..., 1] * M(v)),
        (np.cos(x1), lambda v: np.sum(v * v, -1) * M(v)),
        (np.sin(x1), lambda v: (v1(v) * np.sum(v * v, -1) - 4 * v1(v)) * M(v)),
        (np.cos(x1), lambda v: v1(v) * v[..., 1] * M(v)),
    ]
    return sum(amp[..., None] * basis.project(fn) for amp, fn in parts)


@check(14, "macroscopic", "interpolation and interaction functional")
def c14(cfg, r):
    from ..basis import HermiteBasis
    from ..evolve import (SolverConfig, a_equation_series, build_operators, initial_data,
                          reference_trajectory)
    from ..macroscopic import HermiteRep, Torus, interaction_functional, macroscopic_a_residual
    from ..norms import VelocityGrid, WeightSpec, interpolation_check
    spec = WeightSpec(0.0, 0.25, 0.0)
    grid = VelocityGrid(2, cfg.grid_N, cfg.grid_L)
    worst = 0.0
    for f in random_fields(2, 5 if _quick(cfg) else 20, cfg.seed + 14):
        for ell in (1, 2):
            for m in (1, 2):
                E, bound = interpolation_check(spec, f, ell, m, grid)
                worst = max(worst, E / bound)
    r.le("max E_ell / interpolation bound", worst, 1.05)
    basis = HermiteBasis(2, 4)
    torus = Torus(2, 8)
    I = interaction_functional(HermiteRep(basis), torus, oracle_field(basis, torus), 1)
    r.le("I vs -2 pi^2 (relative)", _rel(I, -2 * math.pi ** 2), 1e-6)
    p = KernelParams(2, 0.0, 0.25)
    ops = build_operators(p, HermiteBasis(2, 6))
    sc = SolverConfig(p, mode="torus", N=6, torus_N=8, initial={"kind": "mode"}, amplitude=0.1)
    f0 = initial_data(sc, ops, torus)
    res = []
    for dt in (0.04, 0.02, 0.01):
        T = np.arange(0.0, 0.4 + 1e-12, dt)
        s = a_equation_series(ops, reference_trajectory(ops, f0, T, torus), torus)
        res.append(macroscopic_a_residual(T, s["a"], s["r_a"], s["l_a"], s["gamma_a"]))
    for k in range(2):
        r.within(f"a-residual ratio dt={0.04 / 2 ** k:g} -> {0.02 / 2 ** k:g}",
                 res[k] / res[k + 1], 4.0, 0.5)
    r.data["a_residuals"] = res


# --- estimate suites ------------------------------------------------------------

@check(15, "operators", "estimate-ratio suites")
def c15(cfg, r):
    from ..estimates import estimate_ratio_suites, refinement_spread
    p = KernelParams(2, 0.0, 0.25)
    res = estimate_ratio_suites(p, N=4 if _quick(cfg) else 6, ells=(0, 1),
                                n_samples=8 if _quick(cfg) else 20, seed=cfg.seed + 15)
    for ell, d in res.items():
        for key in ("upper_N", "compact_C_eta", "trilinear_C"):
            r.true(f"ell={ell} {key} finite", all(np.isfinite(d[key])))
            r.le(f"ell={ell} {key} refinement spread", refinement_spread(d[key]), 0.25)
        r.ge(f"ell={ell} lower_c", min(d["lower_c"]), 1e-300)
        r.le(f"ell={ell} lower_c refinement spread", refinement_spread(d["lower_c"]), 0.25)
        r.true(f"ell={ell} lower_C finite", all(np.isfinite(d["lower_C"])))
    r.data.update({f"ell{ell}_{k}": v for ell, d in res.items() for k, v in d.items()})


@check(16, "macroscopic", "coercivity with projection")
def c16(cfg, r):
    from ..estimates import refinement_spread
    from ..macroscopic import coercivity_with_projection
    out = coercivity_with_projection(KernelParams(2, 0.0, 0.25), N=6 if _quick(cfg) else 8,
                                     n_samples=10 if _quick(cfg) else 50, seed=cfg.seed + 16)
    r.ge("delta", min(out["delta"]), 1e-300)
    r.le("delta refinement spread", refinement_spread(out["delta"]), 0.25)
    r.data["delta"] = out["delta"]


# --- orchestration --------------------------------------------------------------

SUITE_OF = {name: spec[1] for name, spec in CRITERIA.items()}


def select(cfg):
    """Check names selected by cfg.checks or cfg.suite, in criterion order."""
    if cfg.checks:
        unknown = [c for c in cfg.checks if c not in CRITERIA]
        if unknown:
            from .config import ConfigError
            raise ConfigError(f"unknown checks {unknown}")
        return sorted(cfg.checks)
    if "all" in cfg.suite:
        return sorted(CRITERIA)
    return sorted(n for n in CRITERIA if SUITE_OF[n] in cfg.suite)


def run_check(name, cfg):
    number, suite, title, fn = CRITERIA[name]
    rec = Recorder()
    t0 = time.perf_counter()
    err = ""
    try:
        fn(cfg, rec)
    except Exception as e:            # recorded as a failed check
        err = f"{type(e).__name__}: {e}"
    return CheckResult(name, number, suite, title, rec.items, rec.data,
                       time.perf_counter() - t0, err)


def run_checks(cfg, workers=1, progress=None):
    names = select(cfg)
    if workers <= 1:
        out = []
        for n in names:
            out.append(run_check(n, cfg))
            if progress:
                progress(out[-1])
        return out
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(workers) as ex:
        futures = [ex.submit(run_check, n, cfg) for n in names]
        out = [f.result() for f in futures]
    if progress:
        for res in out:
            progress(res)
    return out
