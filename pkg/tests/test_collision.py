import numpy as np
import pytest

from noncutoff.basis import HermiteBasis, HermiteField, sqrt_maxwellian
from noncutoff.collision import (M_beta, PaoSplit, SigmaQuadrature, T_sigma, apply_K, apply_L,
                                 apply_N, gamma_beta, gamma_bilinear, kappa_integral, kappa_kernel,
                                 leibniz_terms, norm_piece, nu_tilde, outer_rule, p_beta,
                                 tail_estimate)
from noncutoff.fields import Gaussian
from noncutoff.kernel import KernelParams
from noncutoff.matrices import (OperatorMatrix, assemble_matrix, assemble_sector_L, gamma_tensor,
                                null_space_residual)
from noncutoff.norms import WeightSpec, seminorm_B_ell

P2 = KernelParams(2, 0.0, 0.25)
V = np.random.default_rng(0).normal(size=(6, 2))


@pytest.fixture(scope="module")
def quad():
    return SigmaQuadrature(P2, r_nodes=8, dir_nodes=16, k_max=8)


def M(v):
    return sqrt_maxwellian(v)


# --- Maxwellian family --------------------------------------------------------------

def test_p_beta_matches_derivatives():
    v = np.array([[0.7, -1.3]])
    h = 1e-4
    e = np.array([h, 0.0])
    fd = (M(v + e) - M(v - e)) / (2 * h)
    assert p_beta((1, 0), v) * M(v) == pytest.approx(fd, rel=1e-7)
    fd2 = (M(v + e) - 2 * M(v) + M(v - e)) / h ** 2
    assert p_beta((2, 0), v) * M(v) == pytest.approx(fd2, rel=1e-5)
    assert np.array_equal(M_beta((0, 0), v), M(v))
    assert np.array_equal(M_beta(None, v), M(v))


def test_p_beta_degree():
    x = np.linspace(-3, 3, 9)
    v = np.stack([x, np.zeros_like(x)], -1)
    for b in range(4):
        coef = np.polyfit(x, p_beta((b, 0), v), 6)
        assert np.allclose(coef[:6 - b], 0.0, atol=1e-10)
        assert abs(coef[6 - b]) > 1e-3


# --- Gamma ------------------------------------------------------------------------------

def test_gamma_of_maxwellians_vanishes(quad):
    g = gamma_bilinear(P2, M, M, V, quad)
    assert np.abs(g).max() <= 1e-12


def test_gamma_beta_zero_is_gamma(quad):
    g, h = Gaussian([0.3, 0.0], 1.0), Gaussian([-0.2, 0.5], 0.8)
    assert np.array_equal(gamma_beta(P2, (0, 0), g, h, V, quad), gamma_bilinear(P2, g, h, V, quad))
    with pytest.raises(ValueError):
        gamma_beta(P2, (2, 1), g, h, V, quad)


def test_gamma_tail_reported(quad):
    vals, tails = gamma_bilinear(P2, Gaussian([0.3, 0.0], 1.0), M, V[:2], quad, report_tail=True)
    assert tails.shape == vals.shape and np.all(tails >= 0)


def test_tail_estimate_formula():
    q = 2.0 ** (2 * 0.25 - 2)
    assert tail_estimate(np.array([1.0, -0.5]), 0.25) == pytest.approx(0.5 * q / (1 - q))


def test_leibniz_terms():
    terms = leibniz_terms((1, 0))
    assert sorted(t[1:] for t in terms) == sorted([((1, 0), (0, 0), (0, 0)),
                                                   ((0, 0), (1, 0), (0, 0)),
                                                   ((0, 0), (0, 0), (1, 0))])
    assert all(c == 1 for c, *_ in terms)
    assert sum(c for c, *_ in leibniz_terms((2, 0))) == 9


def test_leibniz_expansion():
    """d_1 Gamma(g, h) by central differences against the expanded right side."""
    quad = SigmaQuadrature(P2)
    g, h = Gaussian([0.3, 0.0], 1.0), Gaussian([-0.2, 0.5], 0.8)
    v = np.array([[0.4, -0.3], [1.1, 0.6]])
    eps = 1e-3
    e = np.array([eps, 0.0])
    lhs = (gamma_bilinear(P2, g, h, v + e, quad) - gamma_bilinear(P2, g, h, v - e, quad)) / (2 * eps)
    rhs = 0.0
    for c, b0, b1, b2 in leibniz_terms((1, 0)):
        gd = lambda x, b=b0: g.deriv(b, x)
        hd = lambda x, b=b1: h.deriv(b, x)
        rhs = rhs + c * gamma_beta(P2, b2, gd, hd, v, quad)
    assert np.abs(lhs - rhs).max() <= 1e-4 * np.abs(rhs).max()


def _moments(values, weights, pts):
    mom = [M(pts), pts[:, 0] * M(pts), pts[:, 1] * M(pts), np.sum(pts ** 2, -1) * M(pts)]
    return (np.array([np.sum(weights * values * m) for m in mom]),
            np.array([np.sum(weights * np.abs(values * m)) for m in mom]))


G_PAIR = (Gaussian([0.4, -0.1], 0.9), Gaussian([-0.3, 0.2], 1.1))


@pytest.fixture(scope="module")
def gamma_pair_values():
    """Gamma(g, h) and Gamma(g, h) + Gamma(h, g) on a 16^2 Gauss-Hermite rule."""
    g, h = G_PAIR
    q = SigmaQuadrature(P2, k_max=10)
    pts, w = outer_rule(16, 2, scale=1.3)

    def both(v, vs, vp, vsp):
        return M(vs) * (g(vsp) * h(vp) - g(vs) * h(v)), M(vs) * (h(vsp) * g(vp) - h(vs) * g(v))

    single = q.integrate(pts, lambda *a: both(*a)[0])
    swapped = q.integrate(pts, lambda *a: both(*a)[1])
    return pts, w, single, single + swapped


def test_gamma_conserves_mass(gamma_pair_values):
    pts, w, single, _ = gamma_pair_values
    mom, scale = _moments(single, w, pts)
    assert abs(mom[0]) <= 1e-7 * scale[0]


def test_symmetrized_gamma_conserves_invariants(gamma_pair_values):
    pts, w, _, sym = gamma_pair_values
    mom, scale = _moments(sym, w, pts)
    assert np.abs(mom).max() <= 1e-7 * scale.max()


def test_single_gamma_moves_momentum(gamma_pair_values):
    """For g != h only the mass moment of Gamma(g, h) vanishes: the weak form
    int B g* h (phi' - phi) has no v <-> v* symmetry to cancel phi = v or |v|^2."""
    pts, w, single, _ = gamma_pair_values
    mom, scale = _moments(single, w, pts)
    assert np.abs(mom[1:]).max() > 1e-2 * scale.max()


def test_gamma_beta_maxwellian_mass_vanishes():
    q = SigmaQuadrature(P2, r_nodes=12, dir_nodes=24, k_max=10)
    pts, w = outer_rule(12, 2, scale=1.3)
    vals = gamma_beta(P2, (1, 0), M, M, pts, q)
    assert abs(np.sum(w * vals * M(pts))) <= 1e-7


# --- trilinear forms ---------------------------------------------------------------------

def test_empty_shell_is_zero(quad):
    f = Gaussian([0.0, 0.0], 1.0)
    outer = outer_rule(3, 2)
    # shells this coarse lie outside the truncated velocity box
    assert T_sigma(P2, -12, f, f, f, quad=quad, outer=outer) == 0.0
    with pytest.raises(ValueError):
        T_sigma(P2, 2, f, f, f, variant="star", quad=quad, outer=outer)


# --- nu-tilde ---------------------------------------------------------------------------

def test_nu_tilde_origin_oracle():
    """At v = 0, |v'*| = |v*| cos(theta/2), so M* - M'* < 0 and nu~(0) < 0. Reference
    value from a two-dimensional adaptive quadrature in (|v*|, theta)."""
    assert nu_tilde(P2, [[0.0, 0.0]])[0] == pytest.approx(-0.34078116, rel=1e-5)


def test_nu_tilde_positive_at_large_speed_and_radial():
    r = np.array([2.0, 3.0, 4.0, 6.0, 8.0])
    pts = np.stack([r, np.zeros_like(r)], -1)
    vals = nu_tilde(P2, pts)
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) > 0)
    rot = np.stack([r / np.sqrt(2), r / np.sqrt(2)], -1)
    assert np.allclose(nu_tilde(P2, rot), vals, rtol=1e-12, atol=0)


def test_nu_tilde_radial_full_quadrature():
    """Direction-independent without the axisymmetric reduction."""
    q = SigmaQuadrature(P2, dir_nodes=64, n_az=16)

    def integrand(v, vs, vp, vsp):
        m = sqrt_maxwellian(vs)
        return (m - sqrt_maxwellian(vsp)) * m

    a = q.integrate(np.array([[2.0, 0.0]]), integrand)[0]
    b = q.integrate(np.array([[2.0 * np.cos(0.7), 2.0 * np.sin(0.7)]]), integrand)[0]
    assert a == pytest.approx(b, rel=1e-6)
    assert a == pytest.approx(nu_tilde(P2, [[2.0, 0.0]])[0], rel=1e-4)


# --- compact kernel -----------------------------------------------------------------------

def test_kappa_trivial_cases():
    zero = lambda v: np.zeros(np.shape(v)[:-1])
    assert kappa_kernel(P2, -1, zero, zero, [0.5, 0.0], [0.0, 0.0]) == 0.0
    assert kappa_integral(P2, -1, zero, zero, [1.0, 0.0], nodes=8) == 0.0
    with pytest.raises(ValueError):
        kappa_kernel(P2, 1, M, M, [0.5, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        kappa_kernel(P2, -1, M, M, [0.5, 0.0], [0.5, 0.0])


# --- N, K, L ----------------------------------------------------------------------------------

def test_L_annihilates_invariants(quad):
    inv = [M, lambda v: v[..., 0] * M(v), lambda v: v[..., 1] * M(v),
           lambda v: np.sum(v * v, -1) * M(v)]
    g = Gaussian([0.3, -0.4], 0.9)
    scale = np.abs(apply_L(P2, g, V, quad)).max()
    for f in inv:
        assert np.abs(apply_L(P2, f, V, quad)).max() <= 1e-6 * scale


def test_N_plus_K_is_L(quad):
    split = PaoSplit(P2, 0.37, quad)      # any constant splits L the same way
    g = Gaussian([0.3, -0.4], 0.9)
    L = apply_L(P2, g, V, quad)
    NK = apply_N(P2, split, g, V, quad) + apply_K(P2, split, g, V, quad)
    assert np.abs(NK - L).max() <= 1e-10 * np.abs(L).max()


@pytest.mark.parametrize("pair,tol", [(0, 1e-5), (1, 5e-5)])
def test_pre_post_polarization(pair, tol):
    """-int B (g'-g) h M'* M* = (|g+h|^2_B - |g-h|^2_B) / 4, relative to the
    Cauchy-Schwarz scale (|g+h|^2_B + |g-h|^2_B) / 4. The second pair carries a
    quadratic weight whose shell sums converge more slowly in k_max."""
    g, h = [(Gaussian([0.3, 0.0], 1.0), Gaussian([-0.2, 0.4], 0.8)),
            (Gaussian([0.0, 0.5], 0.7), lambda v: (v[..., 0] + 0.3 * v[..., 1] ** 2) * M(v))][pair]
    q = SigmaQuadrature(P2, k_max=10)
    V_, W_ = outer_rule(12, 2, scale=1.2)
    spec = WeightSpec(P2.gamma, P2.s, 0.0)
    lhs = np.sum(W_ * norm_piece(P2, g, V_, q) * h(V_))
    qp = seminorm_B_ell(P2, spec, lambda v: g(v) + h(v), (V_, W_), q)
    qm = seminorm_B_ell(P2, spec, lambda v: g(v) - h(v), (V_, W_), q)
    assert abs(lhs - 0.25 * (qp - qm)) <= tol * 0.25 * (qp + qm)


# --- matrices -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def op6():
    return assemble_matrix(P2, 6)


def test_matrix_invariants(op6):
    A = op6.A
    assert np.abs(A - A.T).max() <= 1e-8 * np.abs(A).max()
    assert np.linalg.eigvalsh(A)[0] >= -1e-8 * np.abs(A).max()
    assert null_space_residual(P2, A, HermiteBasis(2, 6)) <= 1e-6


def test_matrix_quadratic_form_positive(op6):
    c = np.random.default_rng(4).normal(size=(50, op6.A.shape[0]))
    assert np.min(np.einsum("ki,ij,kj->k", c, op6.A, c)) >= -1e-8


def test_matrix_matches_pointwise_L(op6):
    """gamma = 0 keeps polynomial degree, so L g is the basis expansion of A c."""
    basis = HermiteBasis(2, 6)
    c = np.zeros(basis.size)
    c[[3, 7]] = [1.0, -0.5]
    pts = np.array([[0.3, -0.4], [1.2, 0.5], [-0.7, 1.6]])
    direct = apply_L(P2, HermiteField(basis, c), pts, SigmaQuadrature(P2))
    expanded = HermiteField(basis, op6.A @ c)(pts)
    assert np.abs(direct - expanded).max() <= 1e-5 * np.abs(expanded).max()


def test_matrix_save_load(op6, tmp_path):
    op6.save(tmp_path / "L6")
    back = OperatorMatrix.load(tmp_path / "L6")
    assert np.array_equal(back.A, op6.A)
    assert back.basis["N"] == 6 and back.params["n"] == 2
    assert (tmp_path / "L6.npy").exists() and (tmp_path / "L6.json").exists()


def test_matrix_guards():
    with pytest.raises(ValueError):
        assemble_matrix(P2, 17)
    with pytest.raises(NotImplementedError):
        assemble_matrix(KernelParams(3, 0.0, 0.25), 4)


def test_sector_blocks_match_tensor(op6):
    blocks = assemble_sector_L(P2, 6)
    ev = []
    for l, B in blocks.items():
        e = np.linalg.eigvalsh(B)
        ev.extend(e if l == 0 else np.repeat(e, 2))
    ref = np.linalg.eigvalsh(op6.A)
    assert np.allclose(np.sort(ev), ref, atol=1e-8 * np.abs(ref).max())


def test_gamma_tensor_conservation():
    basis = HermiteBasis(2, 3)
    T = gamma_tensor(P2, basis)
    C = basis.null_coefficients()
    # Gamma(g, h) + Gamma(h, g) is orthogonal to the invariants; Gamma(g, h) alone only to mass
    S = T + T.transpose(1, 0, 2)
    assert np.abs(np.einsum("ijk,mk->ijm", S, C)).max() <= 1e-10 * np.abs(T).max()
    assert np.abs(np.einsum("ijk,k->ij", T, C[0])).max() <= 1e-10 * np.abs(T).max()
    # Gamma(M, M) = 0 in coefficients
    m0 = C[0] / np.linalg.norm(C[0])
    assert np.abs(np.einsum("ijk,i,j->k", T, m0, m0)).max() <= 1e-10 * np.abs(T).max()
