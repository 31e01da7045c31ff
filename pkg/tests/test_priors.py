import time

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.stats import t as student_t

from kerdisc.exceptions import InvalidArgumentError, UnsupportedOperationError
from kerdisc.priors.densities import cf_full, cf_slice, log_density, score, score_1d, score_hvp, student_t_cf
from kerdisc.priors.sampling import sample
from kerdisc.priors.schemas import GaussianPrior, LaplacePrior, PriorConfig, StudentTPrior, UniformSpherePrior


def test_score_values():
    np.testing.assert_allclose(score(GaussianPrior(sigma=2.0, d=2), [4.0, 0.0]).values, [-1.0, 0.0])
    np.testing.assert_allclose(score(LaplacePrior(sigma=1.0, d=2), [3.0, 4.0]).values, [-0.6, -0.8])
    np.testing.assert_allclose(score(StudentTPrior(nu=3.0, sigma=1.0, d=1), [2.0]).values, [-8.0 / 7.0])
    np.testing.assert_array_equal(score(UniformSpherePrior(d=3), [1.0, 0.0, 0.0]).values, np.zeros(3))


def test_laplace_origin_is_flagged():
    result = score(LaplacePrior(d=2), np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert result.degenerate
    np.testing.assert_array_equal(result.values[0], [0.0, 0.0])
    assert not score(LaplacePrior(d=2), [1.0, 1.0]).degenerate


def test_score_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        score(GaussianPrior(d=3), [1.0, 2.0])


@pytest.mark.parametrize(
    "prior", [GaussianPrior(sigma=1.3, d=3), LaplacePrior(sigma=0.7, d=3), StudentTPrior(nu=4.0, sigma=1.2, d=3)]
)
def test_score_is_gradient_of_log_density(rng, prior):
    x = rng.child(20).generator().standard_normal(3) + 0.5
    h = 1e-6
    fd = [(log_density(prior, x + h * e) - log_density(prior, x - h * e)) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(score(prior, x).values, fd, atol=1e-6)


@pytest.mark.parametrize(
    "prior", [GaussianPrior(sigma=1.3, d=3), LaplacePrior(sigma=0.7, d=3), StudentTPrior(nu=4.0, sigma=1.2, d=3)]
)
def test_score_hvp_matches_finite_differences(rng, prior):
    gen = rng.child(21).generator()
    x, v = gen.standard_normal((1, 3)) + 0.5, gen.standard_normal((1, 3))
    h = 1e-6
    fd = (score(prior, x + h * v).values - score(prior, x - h * v).values) / (2 * h)
    np.testing.assert_allclose(score_hvp(prior, x, v), fd, atol=1e-6)


def test_log_density_values():
    assert log_density(GaussianPrior(d=2), [0.0, 0.0]) == pytest.approx(-np.log(2 * np.pi))
    assert log_density(StudentTPrior(nu=5.0, sigma=1.0, d=1), [0.7]) == pytest.approx(student_t.logpdf(0.7, 5.0))
    with pytest.raises(UnsupportedOperationError):
        log_density(UniformSpherePrior(d=2), [1.0, 0.0])


def test_laplace_density_normalises():
    """The d=2 Laplace density integrates to one over the plane (radial integral)."""
    from scipy.integrate import quad

    prior = LaplacePrior(sigma=0.8, d=2)
    radial, _ = quad(lambda r: 2 * np.pi * r * np.exp(log_density(prior, [r, 0.0])), 0.0, np.inf)
    assert radial == pytest.approx(1.0, abs=1e-8)


def test_cf_values():
    for prior in (GaussianPrior(d=2), LaplacePrior(d=2), StudentTPrior(d=2)):
        assert cf_full(prior, [0.0, 0.0]) == 1.0
    assert cf_full(GaussianPrior(d=2), [1.0, 1.0]) == pytest.approx(np.exp(-1.0))
    assert cf_full(LaplacePrior(d=1), [1.0]) == pytest.approx(0.5)
    with pytest.raises(UnsupportedOperationError):
        cf_full(UniformSpherePrior(d=2), [0.0, 0.0])


def test_cf_slice_values():
    assert cf_slice(GaussianPrior(d=5), 0.0) == 1.0
    assert cf_slice(LaplacePrior(d=5), 0.0) == 1.0
    assert cf_slice(GaussianPrior(sigma=1.0, d=5), 1.0) == pytest.approx(np.exp(-0.5))
    assert cf_slice(LaplacePrior(sigma=2.0, d=5), 1.0) == pytest.approx(0.2)
    assert cf_slice(LaplacePrior(sigma=2.0, d=5), 1.0, projected=True) == pytest.approx(5.0**-3)
    with pytest.raises(UnsupportedOperationError):
        cf_slice(StudentTPrior(d=2), 1.0)


def test_student_t_cf_matches_empirical(rng):
    draws = sample(StudentTPrior(nu=5.0, sigma=1.0, d=1), 200_000, rng.child(22)).data[:, 0]
    for w in (0.5, 1.0, 2.0):
        empirical = np.cos(w * draws)
        se = empirical.std(ddof=1) / np.sqrt(draws.size)
        assert abs(empirical.mean() - float(student_t_cf(5.0, 1.0, np.array([w]))[0])) <= 4.0 * se


def test_score_1d():
    u = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(score_1d("gaussian", u, 2.0), [0.5, 0.0, -0.75])
    np.testing.assert_allclose(score_1d("laplace", u, 2.0), [0.5, 0.0, -0.5])
    with pytest.raises(UnsupportedOperationError):
        score_1d("uniform-sphere", u, 1.0)


def test_sampler_moments(rng):
    """Per-coordinate variance, radial mean and Student-t variance match their closed forms."""
    start_time = time.time()
    n = 100_000
    gauss = sample(GaussianPrior(sigma=1.0, d=4), n, rng.child(23)).data
    assert np.all((gauss.var(axis=0) > 0.97) & (gauss.var(axis=0) < 1.03))

    radius = np.linalg.norm(sample(LaplacePrior(sigma=1.0, d=3), n, rng.child(24)).data, axis=1)
    assert abs(radius.mean() - 3.0) <= 4.0 * radius.std(ddof=1) / np.sqrt(n)

    t_draws = sample(StudentTPrior(nu=5.0, sigma=1.0, d=1), n, rng.child(25)).data[:, 0]
    # t^2 has infinite variance at nu=5
    assert np.mean(t_draws**2) == pytest.approx(5.0 / 3.0, rel=0.05)

    sphere = sample(UniformSpherePrior(d=3), 1000, rng.child(26))
    assert sphere.on_sphere
    np.testing.assert_allclose(np.linalg.norm(sphere.data, axis=1), 1.0, atol=1e-12)
    print(f"test_sampler_moments took {time.time() - start_time:.4f} seconds")


def test_prior_validation():
    with pytest.raises(ValidationError):
        StudentTPrior(nu=2.0, d=1)
    with pytest.raises(ValidationError):
        GaussianPrior(sigma=-1.0, d=1)
    with pytest.raises(InvalidArgumentError):
        sample(GaussianPrior(d=1), 0, None)


def test_prior_config_builds_for_dimension():
    prior = PriorConfig(kind="student-t", sigma=2.0, nu=7.0).build(3)
    assert prior == StudentTPrior(nu=7.0, sigma=2.0, d=3)
    assert PriorConfig(kind="uniform-sphere").build(4) == UniformSpherePrior(d=4)
