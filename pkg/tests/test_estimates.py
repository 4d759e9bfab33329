import numpy as np
import pytest

from noncutoff.basis import HermiteBasis, HermiteField
from noncutoff.estimates import (_lower_pair, embed, estimate_ratio_suites, random_coefficients,
                                 refinement_spread, weight_operator)
from noncutoff.kernel import KernelParams
from noncutoff.macroscopic import coercivity_with_projection

P2 = KernelParams(2, 0.0, 0.25)
V = np.random.default_rng(5).normal(size=(7, 2))


def test_embed_preserves_values():
    small, big = HermiteBasis(2, 3), HermiteBasis(2, 6)
    c = np.random.default_rng(0).normal(size=small.size)
    assert np.allclose(HermiteField(big, embed(small, big, c))(V), HermiteField(small, c)(V),
                       rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("ell", [0, 1, 2])
def test_weight_operator_exact(ell):
    small, big = HermiteBasis(2, 3), HermiteBasis(2, 3 + 2 * ell)
    c = np.random.default_rng(ell).normal(size=small.size)
    got = HermiteField(big, weight_operator(big, ell) @ embed(small, big, c))(V)
    want = (1 + np.sum(V * V, -1)) ** ell * HermiteField(small, c)(V)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        weight_operator(big, 0.5)


def test_random_coefficients_damped():
    b = HermiteBasis(2, 6)
    c = random_coefficients(b, 400, np.random.default_rng(1))
    top = b.indices.sum(1) == 6
    assert np.std(c[:, top]) < 0.1 * np.std(c[:, 0])


def test_lower_pair():
    x = np.array([1.0, 2.0, 4.0])
    assert _lower_pair(np.array([0.5, 2.0, 8.0]), x, np.ones(3)) == (0.5, 0.0)
    q, y = np.array([-1.0, 2.0, 4.0]), np.array([1.0, 1.0, 1.0])
    c, C = _lower_pair(q, x, y)
    assert c == 0.5 and C == pytest.approx(1.5)
    assert np.all(q >= c * x - C * y - 1e-15)


def test_refinement_spread():
    assert refinement_spread([2.0, 2.5]) == pytest.approx(0.25)
    assert refinement_spread([0.0, 0.0]) == 0.0
    assert refinement_spread([0.0, 1.0]) == float("inf")


def test_estimate_suites_small():
    res = estimate_ratio_suites(P2, N=3, ells=(0, 1), n_samples=6, seed=2)
    for d in res.values():
        assert all(len(v) == 2 for v in d.values())
        assert min(d["lower_c"]) > 0 and min(d["upper_N"]) >= max(d["lower_c"]) * 0.5
        assert all(np.isfinite(d["trilinear_C"])) and min(d["trilinear_C"]) > 0
        for key in ("upper_N", "lower_c", "trilinear_C"):
            assert refinement_spread(d[key]) <= 0.25
    with pytest.raises(ValueError):
        estimate_ratio_suites(KernelParams(2, 0.5, 0.25), N=3, ells=(0,), n_samples=2)


def test_coercivity_with_projection_small():
    out = coercivity_with_projection(P2, N=4, n_samples=8, seed=1)
    assert min(out["delta"]) > 0
    assert refinement_spread(out["delta"]) <= 0.25
    assert min(out["ratios"]) == out["delta"][-1]
    with pytest.raises(ValueError):
        coercivity_with_projection(KernelParams(3, 0.0, 0.25), N=2, n_samples=2)
