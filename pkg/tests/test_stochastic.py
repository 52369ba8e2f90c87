import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from rarprob.stochastic import Exponential, FoldedNormal, JointDensity, Uniform, distribution_from_dict

DISTS = [FoldedNormal(2, 1), FoldedNormal(2, 2), FoldedNormal(4, 1), FoldedNormal(0, 3), Exponential(2), Uniform(1, 4)]


def test_pdf_examples():
    assert Exponential(2).pdf(0) == 2
    assert Uniform(0, 2).pdf(1) == 0.5
    want = (1 + math.exp(-8)) / math.sqrt(2 * math.pi)
    assert FoldedNormal(2, 1).pdf(2) == pytest.approx(want, rel=1e-14)
    assert FoldedNormal(2, 1).pdf(2) == pytest.approx(0.39907, abs=1e-5)


def test_cdf_examples():
    for d in DISTS:
        assert d.cdf(0) == 0
    assert Exponential(2).cdf(1) == pytest.approx(1 - math.exp(-2), rel=1e-14)
    assert abs(FoldedNormal(2, 1).cdf(1e6) - 1) < 1e-12


def test_folded_normal_against_scipy():
    # scipy parametrizes by c = mu / sigma with scale sigma
    x = np.linspace(0, 12, 97)
    for mu, s in [(2, 1), (2, 2), (4, 1)]:
        ref = stats.foldnorm(mu / s, scale=s)
        np.testing.assert_allclose(FoldedNormal(mu, s).cdf(x), ref.cdf(x), atol=1e-14)
        np.testing.assert_allclose(FoldedNormal(mu, s).pdf(x), ref.pdf(x), rtol=1e-12)


def test_running_example_closed_forms():
    # 1 - cdf(1) under the three readings of the scale parameter
    assert FoldedNormal(2, 1).cdf(1) == pytest.approx(0.157305, abs=1e-6)
    assert FoldedNormal(2, math.sqrt(2)).cdf(1) == pytest.approx(0.222803, abs=1e-6)
    assert FoldedNormal(2, 2).cdf(1) == pytest.approx(0.241730, abs=1e-6)


def test_sf_has_no_cancellation_in_the_tail():
    assert FoldedNormal(4, 1).sf(100) < 1e-300
    assert Exponential(2).sf(20) == pytest.approx(math.exp(-40), rel=1e-12)
    assert FoldedNormal(2, 1).sf(10) == pytest.approx(stats.norm.sf(8) + stats.norm.sf(12), rel=1e-10)


@pytest.mark.parametrize("d", DISTS, ids=str)
def test_pdf_normalized(d):
    if isinstance(d, Uniform):
        total = _mass(d, d.a, d.b)
    else:
        total = integrate.quad(d.pdf, 0, np.inf, limit=200, epsabs=1e-13)[0]
    assert abs(total - 1) < 1e-9


def _mass(d, a, b):
    """Quadrature of the pdf, split at kinks so quad sees smooth pieces."""
    cuts = [a] + [c for c in (getattr(d, "a", None), getattr(d, "b", None)) if c is not None and a < c < b] + [b]
    return sum(integrate.quad(d.pdf, lo, hi, epsabs=1e-13, epsrel=1e-12)[0] for lo, hi in zip(cuts, cuts[1:]))


@pytest.mark.parametrize("d", DISTS, ids=str)
@settings(max_examples=40)
@given(a=st.floats(0, 10), w=st.floats(0, 5))
def test_cdf_matches_quadrature(d, a, w):
    b = a + w
    assert abs((d.cdf(b) - d.cdf(a)) - _mass(d, a, b)) < 1e-9
    assert d.cdf(b) >= d.cdf(a)
    assert abs(d.cdf(b) + d.sf(b) - 1) < 1e-12


@settings(max_examples=50)
@given(st.lists(st.floats(0, 8), min_size=3, max_size=3))
def test_joint_density_is_product(pt):
    j = JointDensity(DISTS[:3])
    assert j(pt) == DISTS[0].pdf(pt[0]) * DISTS[1].pdf(pt[1]) * DISTS[2].pdf(pt[2])


def test_joint_density_box_mass_and_shape():
    j = JointDensity([Exponential(1), Uniform(0, 2)])
    assert j.box_mass([0, 0], [1, 1]) == pytest.approx((1 - math.exp(-1)) * 0.5)
    assert j(np.zeros((4, 2))).shape == (4,)
    with pytest.raises(ValueError):
        j([1.0, 2.0, 3.0])


def test_negative_support_is_zero():
    for d in DISTS:
        assert d.pdf(-1) == 0
        assert d.sf(-1) == 1


def test_parameter_validation():
    with pytest.raises(ValueError):
        FoldedNormal(2, 0)
    with pytest.raises(ValueError):
        Exponential(-1)
    with pytest.raises(ValueError):
        Uniform(2, 1)


def test_dict_roundtrip():
    for d in DISTS:
        assert distribution_from_dict(d.to_dict()) == d
    with pytest.raises(ValueError):
        distribution_from_dict({"kind": "gamma"})
    with pytest.raises(ValueError):
        distribution_from_dict({"kind": "exponential"})
