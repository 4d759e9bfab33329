import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from noncutoff.basis import HermiteBasis, sqrt_maxwellian as M
from noncutoff.harness.checks import oracle_field
from noncutoff.macroscopic import (GridRep, HermiteRep, MomentBasis, NullBasis, Torus,
                                   interaction_functional, macroscopic_a_residual, micro_part,
                                   moment_coefficients, moment_labels, project_P)
from noncutoff.norms import VelocityGrid

B4 = HermiteBasis(2, 4)
REP = HermiteRep(B4)
GRID_REP = GridRep.from_grid(VelocityGrid(2, 48, 8.0))


@pytest.fixture(params=["hermite", "grid"])
def rep(request):
    return REP if request.param == "hermite" else GRID_REP


# --- projection ---------------------------------------------------------------------------

def test_projection_of_basis_elements(rep):
    f = rep.of(M)
    Pf, h = project_P(rep, f)
    assert np.abs(Pf - f).max() <= 1e-12
    assert h.a == pytest.approx(1.0, abs=1e-12)
    assert np.abs(h.b).max() <= 1e-12 and abs(h.c) <= 1e-12
    _, h1 = project_P(rep, rep.of(lambda v: v[..., 0] * M(v)))
    assert np.allclose(h1.as_array(), [0, 1, 0, 0], atol=1e-12)


def test_projection_idempotent(rep):
    f = rep.of(lambda v: (1 + v[..., 0] ** 3 - v[..., 1] * v[..., 0]) * M(v))
    Pf, _ = project_P(rep, f)
    PPf, _ = project_P(rep, Pf)
    assert np.abs(PPf - Pf).max() <= 1e-12 * max(1.0, np.abs(Pf).max())


@settings(max_examples=50)
@given(arrays(float, B4.size, elements=st.floats(-3, 3)))
def test_micro_part_orthogonal_to_null(c):
    null = NullBasis(REP)
    w = micro_part(REP, c, null)
    assert np.abs(REP.dot(w, null.E)).max() <= 1e-12 * max(1.0, np.abs(c).max())


def test_null_basis_gram():
    null = NullBasis(REP)
    assert null.size == 4
    assert np.all(np.linalg.eigvalsh(null.gram) > 0)


def test_ill_conditioned_gram_flagged():
    with pytest.raises(ValueError):
        NullBasis(GridRep.from_grid(VelocityGrid(2, 2, 8.0)))


# --- moment coefficients --------------------------------------------------------------------

def test_moment_counts():
    assert MomentBasis(REP).size == 8
    assert MomentBasis(HermiteRep(HermiteBasis(3, 3))).size == 13
    assert len(moment_labels(3)) == 13


def test_moments_vanish_on_null_space(rep):
    f = rep.of(lambda v: (2 - v[..., 1] + 0.5 * np.sum(v * v, -1)) * M(v))
    r = moment_coefficients(rep, f)
    assert max(abs(x) for x in r.values()) <= 1e-10
    z = moment_coefficients(rep, np.zeros_like(f))
    assert all(x == 0 for x in z.values())


def test_cross_moment_oracle(rep):
    """v1 v2 sqrt(mu) is orthogonal to every other base function and to the null
    space, so r_(12) = 1 and every other coefficient vanishes."""
    r = moment_coefficients(rep, rep.of(lambda v: v[..., 0] * v[..., 1] * M(v)))
    assert r[("ij", (0, 1))] == pytest.approx(1.0, abs=1e-10)
    assert max(abs(x) for k, x in r.items() if k != ("ij", (0, 1))) <= 1e-10


def test_heat_flux_moment_oracle():
    """(v1|v|^2 - 4 v1) sqrt(mu) is micro in n = 2: r_c1 = 1, r_b1 = -4."""
    r = moment_coefficients(REP, REP.of(lambda v: (v[..., 0] * np.sum(v * v, -1) - 4 * v[..., 0]) * M(v)))
    assert r[("c", 0)] == pytest.approx(1.0, abs=1e-10)
    assert r[("b", 0)] == pytest.approx(-4.0, abs=1e-10)
    assert abs(r[("a", None)]) <= 1e-10


# --- interaction functional ---------------------------------------------------------------------

T8 = Torus(2, 8)


def test_torus_spectral_derivative():
    x = T8.points[..., 0]
    assert np.allclose(T8.deriv(np.sin(2 * x), (1, 0)), 2 * np.cos(2 * x), atol=1e-12)
    assert np.allclose(T8.deriv(np.sin(2 * x), (0, 1)), 0.0, atol=1e-12)
    assert T8.integrate(np.cos(x) ** 2) == pytest.approx(2 * math.pi ** 2, rel=1e-14)


def test_interaction_zero_and_constant_fields():
    zero = np.zeros((8, 8, B4.size))
    assert interaction_functional(REP, T8, zero, 2) == 0.0
    const = np.broadcast_to(oracle_field(B4, Torus(2, 1))[0, 0], (8, 8, B4.size))
    assert abs(interaction_functional(REP, T8, const, 2)) <= 1e-12


def test_interaction_homogeneous_warns():
    with pytest.warns(UserWarning):
        assert interaction_functional(REP, T8, np.ones(B4.size), 1) == 0.0


@pytest.mark.parametrize("K,expected", [(1, -2 * math.pi ** 2), (2, -4 * math.pi ** 2)])
def test_interaction_single_mode_oracle(K, expected):
    """a = c = cos x1, b = (sin x1, sin x1), r_c1 = sin x1, r_b1 = -4 sin x1, r_12 = cos x1.

    K = 1: I_a = 2 pi^2 - 8 pi^2, I_b = 2 pi^2, I_c = 2 pi^2. Each x1-derivative of a
    unit-wavenumber pair leaves its integral unchanged, so K = 2 doubles the value.
    """
    f = oracle_field(B4, T8)
    assert interaction_functional(REP, T8, f, K) == pytest.approx(expected, rel=1e-10)


# --- a-equation residual ------------------------------------------------------------------

def test_a_residual_stationary():
    t = np.linspace(0, 1, 6)
    z = np.zeros(6)
    assert macroscopic_a_residual(t, z, z, z, z) == 0.0


def test_a_residual_guards():
    with pytest.raises(ValueError):
        macroscopic_a_residual(np.arange(3.0), *np.zeros((4, 3)))
    t = np.array([0.0, 0.1, 0.3, 0.4, 0.5, 0.6])
    with pytest.raises(ValueError):
        macroscopic_a_residual(t, *np.zeros((4, 6)))


def test_a_residual_second_order():
    """a = sin t, r_a = t^3 / 10, l_a = cos t, Gamma_a = 3 t^2 / 10: exact solution;
    central differences leave an O(dt^2) residual."""
    res = []
    for dt in (0.1, 0.05, 0.025):
        t = np.arange(0, 1 + 1e-12, dt)
        res.append(macroscopic_a_residual(t, np.sin(t), t ** 3 / 10, np.cos(t), 0.3 * t ** 2))
    assert res[0] / res[1] == pytest.approx(4, rel=0.1)
    assert res[1] / res[2] == pytest.approx(4, rel=0.1)
