import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noncutoff.fields import Constant, Gaussian, HermiteGaussian
from noncutoff.lp import (LiftedPoint, build_lp_stack, commutator_decompose, decay_slope, japanese,
                          lift, lp_smooth_rate, metric_d, product_coefficients, project,
                          qj_one_decay, tau_maps)

vec2 = arrays(float, 2, elements=st.floats(-4, 4))
vec3 = arrays(float, 3, elements=st.floats(-4, 4))


@pytest.fixture(scope="module")
def stack():
    return build_lp_stack(M=4, n=2, J_max=6)


# --- metric ---------------------------------------------------------------------------

def test_metric_examples():
    assert metric_d([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert metric_d([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(2), rel=1e-15)
    # chordal oracle: lifts (1, 0, 1/2) and (2, 0, 2)
    assert metric_d([1.0, 0.0], [2.0, 0.0]) == pytest.approx(np.sqrt(1 + 1.5 ** 2), rel=1e-15)
    assert metric_d([1.0, 0.0], [2.0, 0.0]) == pytest.approx(1.80278, abs=1e-5)


def test_lifted_point_height():
    p = LiftedPoint((3.0, 4.0))
    assert p.height == 12.5
    assert np.array_equal(p.coords(), [3.0, 4.0, 12.5])
    assert np.array_equal(lift([3.0, 4.0]), p.coords())


@given(a=vec3, b=vec3, c=vec3)
def test_metric_properties(a, b, c):
    dab = metric_d(a, b)
    assert dab >= 0
    assert dab == metric_d(b, a)
    assert dab >= np.linalg.norm(a - b)
    scale = 1 + metric_d(a, c)
    assert dab + metric_d(b, c) - metric_d(a, c) >= -1e-13 * scale
    assert abs(dab - np.linalg.norm(lift(a) - lift(b))) <= 1e-12 * (1 + dab)


def test_metric_zero_only_on_diagonal():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(100, 2))
    assert np.all(metric_d(a, a + 1e-6) > 0)


def test_tau_identity_at_origin():
    u = np.array([0.3, -1.2])
    tu, lt = tau_maps(np.zeros(2), u)
    assert np.array_equal(tu, u)
    assert np.array_equal(lt, [0.3, -1.2, 0.0])


@given(v=vec3, u=vec3)
def test_tau_maps_isometry(v, u):
    tu, lt = tau_maps(v, u)
    scale = 1 + np.abs(u).max() * (1 + np.abs(v).max())
    assert abs(np.linalg.norm(lt) - np.linalg.norm(u)) <= 1e-13 * scale
    assert abs(v @ tu - (v @ u) / japanese(v)) <= 1e-12 * scale * (1 + np.abs(v).max())


@given(v=vec2, u=vec2)
def test_tau_maps_tangent_to_paraboloid(v, u):
    tu, lt = tau_maps(v, u)
    # the vertical offset is |tau_v u|^2 / 2, which is |u|^2 / 2 only when v.u = 0
    gap = lift(v + tu) - (lift(v) + lt)
    scale = (1 + np.abs(u).max()) ** 2 * (1 + np.abs(v).max()) ** 2
    assert np.abs(gap[:-1]).max() <= 1e-13 * scale
    assert abs(gap[-1] - 0.5 * tu @ tu) <= 1e-12 * scale


def test_tau_offset_for_orthogonal_u():
    v, u = np.array([1.5, -2.0]), np.array([2.0, 1.5])
    tu, lt = tau_maps(v, u)
    assert np.allclose(tu, u, atol=1e-15)
    assert (lift(v + tu) - lift(v) - lt)[-1] == pytest.approx(0.5 * u @ u, rel=1e-14)


# --- the stack --------------------------------------------------------------------------

def test_product_coefficients_expand_the_product():
    n, M = 2, 3
    x = 0.37
    direct = np.prod([(1 - 2.0 ** (k - n) * x) / (1 - 2.0 ** k)
                      for k in range(-M, M + 1) if k])
    assert np.polyval(product_coefficients(n, M)[::-1], x) == pytest.approx(direct, rel=1e-13)


def test_stack_report(stack):
    assert stack.R == 2.0 ** -8
    assert stack.report["normalization_residual"] <= 1e-8
    assert stack.report["moment_residual"] <= 1e-6


def test_stack_support(stack):
    # phi lives in the unit ball; psi = phi - 2^-n phi(./2) reaches radius 2
    assert stack.support("phi") == 1.0
    assert stack.support("psi") == 2.0
    rng = np.random.default_rng(2)
    w = rng.normal(size=(500, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    t = 1.0 + rng.random((500, 1))
    assert np.all(stack.kernel(w * t, "phi") == 0.0)
    assert np.all(stack.kernel(w * 2 * t, "psi") == 0.0)
    assert np.any(stack.kernel(w * 1.5, "psi") != 0.0)


def test_stack_rejects_bad_order():
    with pytest.raises(ValueError):
        build_lp_stack(M=0)
    with pytest.raises(ValueError):
        stack_kernel = build_lp_stack(M=1, check=False)
        stack_kernel.coefficients("chi")


# --- projections ---------------------------------------------------------------------------

V = np.array([[0.0, 0.0], [1.0, -0.5], [2.0, 1.0]])


def test_project_telescopes(stack):
    f = Gaussian([0.3, -0.2], 1.0)
    J = 3
    P = project(stack, J, f, V, "P")
    Q = sum(project(stack, j, f, V, "Q") for j in range(J + 1))
    assert np.abs(P - Q).max() <= 1e-10 * np.abs(P).max()


def test_project_converges(stack):
    f = Gaussian([0.3, -0.2], 1.0)
    # fast convergence down to the quadrature floor (about 1e-10)
    err = [np.abs(project(stack, j, f, V, "P") - f(V)).max() for j in (0, 1, 2, 6)]
    assert err[0] > err[1] > err[2]
    assert err[-1] < 1e-3 * np.abs(f(V)).max()


def test_project_level_guards(stack):
    f = Constant()
    with pytest.raises(ValueError):
        project(stack, stack.J_max + 1, f, V)
    with pytest.raises(ValueError):
        project(stack, -1, f, V)
    with pytest.raises(ValueError):
        project(stack, 1, f, V, "R")


def test_qj_one_decay(stack):
    js = [1, 2, 3, 4]
    vals = [qj_one_decay(stack, j, V) for j in js]
    assert decay_slope(vals, js) <= -1.8
    with pytest.raises(ValueError):
        qj_one_decay(stack, 0, V)


def test_qj_one_ratio_minimal_order():
    # with M = 1 the bound 2^(-2j) is attained: consecutive levels drop by 4
    st1 = build_lp_stack(M=1, n=2, J_max=6, check=False)
    ratio = qj_one_decay(st1, 5, V) / qj_one_decay(st1, 4, V)
    assert 0.125 <= ratio <= 0.5


def test_qj_one_far_from_origin(stack):
    far = np.array([[7.5, 0.0], [-5.0, 5.0]])
    assert qj_one_decay(stack, 3, far) <= 4 * qj_one_decay(stack, 3, V) + 1e-12


def test_decay_slope_exact():
    js = np.arange(1, 7)
    assert decay_slope(3.0 * 2.0 ** (-2.5 * js), js) == pytest.approx(-2.5, abs=1e-12)


def test_smooth_rate_gaussian(stack):
    slope, vals = lp_smooth_rate(stack, Gaussian([0.0, 0.0], 1.0), None, 1, V[:2], js=range(1, 6))
    assert slope <= -2 + 0.3
    assert np.all(vals > 0)


def test_smooth_rate_first_derivative(stack):
    f = HermiteGaussian([0.2, 0.0], 1.0, (1, 0))
    slope, _ = lp_smooth_rate(stack, f, (1, 0, 0), 0, V[:2], js=range(1, 6))
    assert slope <= -1 + 0.3


def test_smooth_rate_rejects_k(stack):
    with pytest.raises(ValueError):
        lp_smooth_rate(stack, Constant(), None, 3, V)
    with pytest.raises(ValueError):
        lp_smooth_rate(stack, Constant(), None, -2, V)


def test_commutator_decomposition(stack):
    res, scale = commutator_decompose(stack, 0, 2, Gaussian([0.4, -0.3], 0.8), V)
    assert scale > 0
    assert res <= 1e-6 * scale


def test_commutator_zero_field(stack):
    res, scale = commutator_decompose(stack, 1, 2, Constant(0.0), V)
    assert res == 0.0 and scale == 0.0
