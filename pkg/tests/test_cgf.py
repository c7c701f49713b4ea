import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlucb.cgf import (
    CgfBound,
    concentration_bound,
    conjugate_inverse,
    gaussian_conjugate,
    legendre_transform,
    numerical_conjugate,
    scale_by_samples,
)
from mlucb.errors import DomainError, InvariantError, TruncatedSupremumError


def test_gaussian_conjugate_examples():
    assert gaussian_conjugate(4.0).evaluate(1.0) == pytest.approx(0.125)
    assert gaussian_conjugate(1.0).evaluate(0.0) == 0.0
    assert gaussian_conjugate(2.0).inverse(1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("sigma2", [0.0, -1.0, float("nan"), float("inf")])
def test_gaussian_conjugate_rejects_bad_variance(sigma2):
    with pytest.raises(DomainError):
        gaussian_conjugate(sigma2)
    with pytest.raises(DomainError):
        CgfBound.gaussian(sigma2)


@pytest.mark.parametrize(
    "sigma2, eps, expected",
    [(1.0, 2.0, 2.0), (0.25, 1.0, 2.0), (1.0, 0.0, 0.0)],
)
def test_legendre_examples(sigma2, eps, expected):
    assert legendre_transform(CgfBound.gaussian(sigma2), eps) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("sigma2", [0.25, 1.0, 4.0])
def test_legendre_matches_closed_form_on_grid(sigma2):
    bound = CgfBound.gaussian(sigma2)
    for eps in np.linspace(0, 5, 26):
        assert abs(legendre_transform(bound, eps) - eps**2 / (2 * sigma2)) <= 1e-6


def test_legendre_flags_truncation():
    # maximiser eps/sigma2 = 100 lies beyond lambda_max = 10
    with pytest.raises(TruncatedSupremumError) as info:
        legendre_transform(CgfBound.gaussian(0.01), 1.0, lambda_max=10.0)
    assert info.value.argmax == pytest.approx(10.0)
    assert info.value.value <= 50.0


def test_legendre_rejects_negative_epsilon():
    with pytest.raises(DomainError):
        legendre_transform(CgfBound.gaussian(1.0), -0.1)


def test_bound_symmetry_and_zero():
    lam = np.linspace(-20, 20, 401)
    for bound in (
        CgfBound.gaussian(0.7),
        CgfBound.tabulated([0, 1, 2, 4, 8], [0, 0.3, 1.2, 4.8, 19.2]),
    ):
        assert bound.evaluate(0.0) == 0.0
        inside = np.abs(lam) <= bound.lambda_max
        vals, mirror = bound.evaluate(lam[inside]), bound.evaluate(-lam[inside])
        assert np.max(np.abs(vals - mirror)) <= 1e-12


def test_tabulated_validation():
    with pytest.raises(InvariantError):
        CgfBound.tabulated([0, 1, 2], [0.1, 1, 4])  # psi(0) != 0
    with pytest.raises(InvariantError):
        CgfBound.tabulated([0, 1, 2], [0, 2, 3])  # concave kink
    with pytest.raises(InvariantError):
        CgfBound.tabulated([0, 2, 1], [0, 1, 4])


def test_tabulated_conjugate_of_sampled_gaussian():
    lam = np.linspace(0, 50, 5001)
    tab = CgfBound.tabulated(lam, 0.5 * lam**2)
    for eps in (0.3, 1.0, 3.0):
        # piecewise-linear interpolation overestimates psi by at most h^2/8
        assert legendre_transform(tab, eps) == pytest.approx(eps**2 / 2, abs=1e-4)


def test_tabulated_csv_roundtrip(tmp_path):
    tab = CgfBound.tabulated([0, 0.5, 1.0, 3.0], [0, 0.1, 0.5, 4.5])
    path = tmp_path / "psi.csv"
    tab.to_csv(path)
    assert path.read_text().splitlines()[0] == "lambda,psi"
    back = CgfBound.from_csv(path)
    np.testing.assert_array_equal(back.lambdas, tab.lambdas)
    np.testing.assert_array_equal(back.psis, tab.psis)


@pytest.mark.parametrize(
    "n, s, y, expected",
    [(1, 1.0, 0.5, 1.0), (1, 1.0, 0.0, 0.0), (4, 1.0, 2.0, 1.0)],
)
def test_conjugate_inverse_examples(n, s, y, expected):
    conj = scale_by_samples(gaussian_conjugate(1.0), n, s)
    assert conjugate_inverse(conj, y) == pytest.approx(expected, rel=1e-12)


def test_conjugate_inverse_domain():
    with pytest.raises(DomainError):
        conjugate_inverse(gaussian_conjugate(1.0), -1.0)


@pytest.mark.parametrize("family", ["closed", "numerical"])
def test_conjugate_roundtrip_log_grid(family):
    if family == "closed":
        conj = gaussian_conjugate(1.3)
    else:
        lam = np.concatenate(([0.0], np.geomspace(1e-4, 1e4, 400)))
        conj = numerical_conjugate(CgfBound.tabulated(lam, 0.65 * lam**2))
    for y in np.geomspace(1e-6, 1e3, 19 if family == "numerical" else 91):
        assert abs(conj.evaluate(conj.inverse(y)) - y) <= 1e-9 * max(1.0, y)


def test_bisection_detects_non_monotone():
    from mlucb.cgf import ConjugateBound

    bumpy = ConjugateBound(base=lambda e: e**2 if e < 1.5 else 0.1 * e)
    with pytest.raises(InvariantError):
        conjugate_inverse(bumpy, 5.0)


def test_scale_by_samples_examples():
    base = gaussian_conjugate(1.0)
    assert scale_by_samples(base, 10, 1.0).evaluate(1.0) == pytest.approx(5.0)
    assert scale_by_samples(base, 4, 0.5).evaluate(1.0) == pytest.approx(1.0)
    for s in (0.3, 1.0, 2.0):
        assert scale_by_samples(base, 1, s).evaluate(0.7) == base.evaluate(0.7)
    with pytest.raises(DomainError):
        scale_by_samples(base, 0, 1.0)
    with pytest.raises(DomainError):
        scale_by_samples(base, 3, 0.0)


@pytest.mark.parametrize("n", [1, 7, 100])
def test_sample_mean_consistency(n):
    # CGF of the mean of n iid N(0, sigma2) is lambda^2 sigma2 / (2n)
    sigma2 = 2.0
    scaled = scale_by_samples(gaussian_conjugate(sigma2), n, 1.0)
    mean_cgf = CgfBound.gaussian(sigma2 / n)
    for eps in (0.1, 0.5, 1.0, 2.0):
        assert abs(scaled.evaluate(eps) - legendre_transform(mean_cgf, eps)) <= 1e-6


def test_concentration_examples():
    g = gaussian_conjugate(1.0)
    assert concentration_bound(g, 0.0) == 1.0
    assert concentration_bound(g, 2.0) == pytest.approx(2 * math.exp(-2.0))
    assert concentration_bound(g, 2.0) == pytest.approx(0.2707, abs=1e-4)
    g100 = scale_by_samples(g, 100, 1.0)
    assert concentration_bound(g100, 0.5) == pytest.approx(2 * math.exp(-12.5))


@settings(max_examples=60, deadline=None)
@given(
    t1=st.floats(0, 10),
    t2=st.floats(0, 10),
    n1=st.integers(1, 1000),
    n2=st.integers(1, 1000),
    sigma2=st.floats(0.05, 20),
)
def test_concentration_monotone(t1, t2, n1, n2, sigma2):
    base = gaussian_conjugate(sigma2)
    lo, hi = sorted((t1, t2))
    c = scale_by_samples(base, n1, 1.0)
    assert concentration_bound(c, hi) <= concentration_bound(c, lo)
    na, nb = sorted((n1, n2))
    if hi > 0:
        assert concentration_bound(scale_by_samples(base, nb, 1.0), hi) <= concentration_bound(
            scale_by_samples(base, na, 1.0), hi
        )


@settings(max_examples=50, deadline=None)
@given(sigma2=st.floats(0.01, 100), n=st.integers(1, 10_000), s=st.floats(0.1, 2.0), y=st.floats(0, 1e4))
def test_closed_form_inverse_roundtrip(sigma2, n, s, y):
    conj = scale_by_samples(gaussian_conjugate(sigma2), n, s)
    assert abs(conj.evaluate(conjugate_inverse(conj, y)) - y) <= 1e-9 * max(1.0, y)


def test_monte_carlo_soundness():
    g = np.random.default_rng(20240601)
    trials = 100_000
    sigma = 1.5
    for n in (1, 10, 100):
        # average n samples explicitly, in chunks
        means = np.concatenate(
            [g.normal(0, sigma, size=(trials // 10, n)).mean(axis=1) for _ in range(10)]
        )
        conj = scale_by_samples(gaussian_conjugate(sigma**2), n, 1.0)
        for t_frac in (0.1, 0.5, 1.0, 2.0):
            t = t_frac * sigma
            p_hat = np.mean(np.abs(means) >= t)
            se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / trials)
            assert p_hat <= concentration_bound(conj, t) + 3 * se
