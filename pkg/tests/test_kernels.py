import numpy as np
import pytest
from pydantic import ValidationError
from scipy.integrate import quad

from kerdisc.core.sampling import uniform_sphere_rows
from kerdisc.exceptions import InvalidArgumentError, RangeError, UnsupportedOperationError
from kerdisc.kernels.base import (
    gram_matrix,
    kernel_eval,
    kernel_grad_x,
    kernel_profile,
    kernel_trace_hessian,
    median_heuristic_gamma,
)
from kerdisc.kernels.schemas import GaussianKernel, ImqKernel, KummerKernel, VmfKernel
from kerdisc.kernels.spectral import bochner_reconstruct, spectral_density
from kerdisc.specfun.schemas import KummerMode


def test_kernel_values():
    assert kernel_eval(GaussianKernel(gamma=1.0), [0.3, 0.1], [0.3, 0.1]) == 1.0
    assert kernel_eval(ImqKernel(alpha=1.0, beta=0.5), [np.sqrt(3.0)], [0.0]) == pytest.approx(0.5)
    assert kernel_eval(KummerKernel(gamma=1.0, d=2), [0.0, 0.0], [1.0, 0.0]) == pytest.approx(0.6514059, abs=1e-7)
    assert kernel_eval(VmfKernel(kappa=2.0), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)


def test_kernel_argument_errors():
    with pytest.raises(InvalidArgumentError):
        kernel_eval(GaussianKernel(), [0.0, 1.0], [0.0])
    with pytest.raises(InvalidArgumentError):
        kernel_eval(KummerKernel(gamma=1.0, d=3), [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        kernel_eval(VmfKernel(), [2.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValidationError):
        GaussianKernel(gamma=0.0)
    with pytest.raises(ValidationError):
        KummerKernel(gamma=1.0, d=3, mode=KummerMode.IMQ_APPROX)


def test_gradient_values():
    np.testing.assert_allclose(kernel_grad_x(GaussianKernel(gamma=0.5), [1.0, 0.0], [0.0, 0.0]), [-np.exp(-0.5), 0.0])
    np.testing.assert_allclose(kernel_grad_x(ImqKernel(alpha=1.0, beta=1.0), [2.0], [0.0]), [-0.16])
    np.testing.assert_array_equal(kernel_grad_x(ImqKernel(), [0.4, 0.2], [0.4, 0.2]), [0.0, 0.0])
    with pytest.raises(UnsupportedOperationError):
        kernel_grad_x(VmfKernel(), [1.0, 0.0], [0.0, 1.0])


def test_trace_hessian_values():
    assert kernel_trace_hessian(GaussianKernel(gamma=0.5), np.zeros(4), np.zeros(4)) == pytest.approx(4.0)
    assert kernel_trace_hessian(GaussianKernel(gamma=1.0), [1.0], [0.0]) == pytest.approx(-2.0 * np.exp(-1.0))
    assert kernel_trace_hessian(ImqKernel(alpha=1.0, beta=0.5), [0.0, 0.0], [0.0, 0.0]) == pytest.approx(2.0)
    with pytest.raises(UnsupportedOperationError):
        kernel_trace_hessian(KummerKernel(gamma=1.0, d=2), [0.0, 0.0], [1.0, 0.0])


def test_gradients_match_finite_differences(rng):
    """Central differences of kernel_eval agree with kernel_grad_x and the trace of the mixed Hessian."""
    gen = rng.child(10).generator()
    h = 1e-5
    for _ in range(200):
        d = int(gen.integers(1, 5))
        x, y = gen.standard_normal(d), gen.standard_normal(d)
        if gen.random() < 0.5:
            k = GaussianKernel(gamma=float(gen.uniform(0.2, 2.0)))
        else:
            k = ImqKernel(alpha=float(gen.uniform(0.2, 2.0)), beta=float(gen.uniform(0.2, 2.0)))
        eye = np.eye(d)
        fd = np.array([(kernel_eval(k, x + h * e, y) - kernel_eval(k, x - h * e, y)) / (2 * h) for e in eye])
        np.testing.assert_allclose(kernel_grad_x(k, x, y), fd, atol=1e-6)
        np.testing.assert_allclose(kernel_grad_x(k, x, y), -kernel_grad_x(k, y, x), atol=1e-14)

        hh = 1e-4
        mixed = sum(
            (
                kernel_eval(k, x + hh * e, y + hh * e)
                - kernel_eval(k, x + hh * e, y - hh * e)
                - kernel_eval(k, x - hh * e, y + hh * e)
                + kernel_eval(k, x - hh * e, y - hh * e)
            )
            / (4 * hh * hh)
            for e in eye
        )
        assert kernel_trace_hessian(k, x, y) == pytest.approx(mixed, abs=1e-4)


def test_profile_derivatives_for_kummer():
    """Profile derivatives in q agree with finite differences for the exact Kummer kernel."""
    k = KummerKernel(gamma=0.7, d=5)
    q, h = 1.3, 1e-5
    phi, d1, d2 = kernel_profile(k, q)
    assert float(d1) == pytest.approx((float(kernel_profile(k, q + h, 0)[0]) - float(kernel_profile(k, q - h, 0)[0])) / (2 * h), rel=1e-7)
    assert float(d2) == pytest.approx((float(kernel_profile(k, q + h, 1)[1]) - float(kernel_profile(k, q - h, 1)[1])) / (2 * h), rel=1e-6)


def test_gram_matrices_positive_semidefinite(rng):
    gen = rng.child(11).generator()
    X = gen.standard_normal((30, 3))
    S = uniform_sphere_rows(gen, 30, 3)
    for k, points in (
        (GaussianKernel(gamma=0.5), X),
        (ImqKernel(alpha=1.0, beta=0.5), X),
        (KummerKernel(gamma=0.5, d=3), X),
        (VmfKernel(kappa=1.0), S),
    ):
        G = gram_matrix(k, points)
        np.testing.assert_allclose(G, G.T, atol=1e-12)
        assert np.linalg.eigvalsh(G).min() >= -1e-8


def test_kummer_kernel_is_direction_average(rng):
    """Averaging the 1-D Gaussian kernel over random directions reproduces the Kummer kernel."""
    gen = rng.child(12).generator()
    for d in (2, 4, 16):
        x, y = gen.standard_normal(d), gen.standard_normal(d)
        theta = uniform_sphere_rows(gen, 100_000, d)
        values = np.exp(-0.5 * (theta @ (x - y)) ** 2)
        se = values.std(ddof=1) / np.sqrt(values.size)
        assert abs(values.mean() - kernel_eval(KummerKernel(gamma=0.5, d=d), x, y)) <= 4.0 * se


def test_spectral_density_values():
    assert spectral_density(GaussianKernel(gamma=0.25), [0.0]) == pytest.approx(np.pi**-0.5)
    total, _ = quad(lambda w: spectral_density(GaussianKernel(gamma=1.0), [w]), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(UnsupportedOperationError):
        spectral_density(VmfKernel(), [0.0])


def test_bochner_reconstruction():
    assert bochner_reconstruct(GaussianKernel(gamma=1.0), 0.5) == pytest.approx(np.exp(-0.25), abs=1e-6)
    k = ImqKernel(alpha=1.0, beta=1.5)
    assert bochner_reconstruct(k, 0.7) == pytest.approx(kernel_eval(k, [0.7], [0.0]), abs=1e-6)


def test_imq_density_at_origin():
    """beta > d/2 has a finite limit at omega = 0; beta <= d/2 diverges."""
    k = ImqKernel(alpha=1.0, beta=1.5)
    assert spectral_density(k, [0.0]) == pytest.approx(spectral_density(k, [1e-7]), rel=1e-6)
    with pytest.raises(RangeError):
        spectral_density(ImqKernel(alpha=1.0, beta=0.5), [0.0, 0.0])


def test_median_heuristic():
    X = np.array([[0.0], [1.0], [3.0]])
    # squared distances 1, 9, 4 -> median 4
    assert median_heuristic_gamma(X) == pytest.approx(0.25)
    with pytest.raises(InvalidArgumentError):
        median_heuristic_gamma(np.zeros((1, 2)))
