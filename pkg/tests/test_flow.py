import io
import time

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from kerdisc.core.schemas import RngState, SampleBatch
from kerdisc.exceptions import DivergenceError, InvalidArgumentError
from kerdisc.flow.objective import (
    alignment_gradient,
    alignment_loss,
    alignment_term,
    evaluate_regularizer,
    regularizer_gradient,
    ssl_objective,
)
from kerdisc.flow.runner import flow_run, initial_particles, write_trajectory
from kerdisc.flow.schemas import (
    BhepRegularizer,
    FlowState,
    KsdRegularizer,
    KummerMmdRegularizer,
    SlicedKsdAnalyticRegularizer,
    SlicedKsdRegularizer,
    SlicedMmdRegularizer,
    VmfKsdRegularizer,
    VmfMmdRegularizer,
)
from kerdisc.priors.sampling import sample
from kerdisc.priors.schemas import GaussianPrior, LaplacePrior, UniformSpherePrior
from kerdisc.specfun.schemas import KummerMode


def test_alignment_loss():
    assert alignment_loss([1.0, 2.0], [1.0, 0.0]) == 4.0
    with pytest.raises(InvalidArgumentError):
        alignment_loss([1.0, 2.0], [1.0])


def test_ssl_objective_alignment_only():
    views = [np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[2.0, 2.0], [2.0, 2.0]])]
    assert ssl_objective(views, 0.0, BhepRegularizer(), GaussianPrior(d=2)) == pytest.approx(0.5)


def test_ssl_objective_adds_weighted_regularizer():
    views = [np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([[0.5, -1.0], [0.0, 1.0]])]
    pooled = SampleBatch(data=np.vstack(views))
    reg = evaluate_regularizer(BhepRegularizer(), GaussianPrior(d=2), pooled, RngState()).value
    alignment = ssl_objective(views, 0.0, BhepRegularizer(), GaussianPrior(d=2))
    assert ssl_objective(views, 2.0, BhepRegularizer(), GaussianPrior(d=2)) == pytest.approx(alignment + 2.0 * reg)


def test_ssl_objective_errors():
    prior = GaussianPrior(d=2)
    with pytest.raises(InvalidArgumentError):
        ssl_objective([], 1.0, BhepRegularizer(), prior)
    with pytest.raises(InvalidArgumentError):
        ssl_objective([np.zeros((1, 2))], 1.0, BhepRegularizer(), prior)
    with pytest.raises(InvalidArgumentError):
        ssl_objective([np.zeros((2, 2)), np.zeros((2, 3))], 1.0, BhepRegularizer(), prior)


def test_alignment_gradient_matches_finite_differences(rng):
    Z = rng.child(90).generator().standard_normal((6, 2))
    h = 1e-6
    fd = np.zeros_like(Z)
    for idx in np.ndindex(*Z.shape):
        up, down = Z.copy(), Z.copy()
        up[idx] += h
        down[idx] -= h
        fd[idx] = (alignment_term(up, 3) - alignment_term(down, 3)) / (2 * h)
    np.testing.assert_allclose(alignment_gradient(Z, 3), fd, atol=1e-7)
    assert alignment_term(Z, 1) == 0.0


@pytest.mark.parametrize(
    "omega",
    [
        BhepRegularizer(),
        KummerMmdRegularizer(),
        SlicedMmdRegularizer(slices=128),
        SlicedKsdRegularizer(slices=128),
        KsdRegularizer(),
        SlicedKsdAnalyticRegularizer(),
        SlicedKsdAnalyticRegularizer(mode=KummerMode.IMQ_APPROX),
    ],
)
def test_collapsed_batch_is_penalised(rng, omega):
    """V-form regularizers score a collapsed batch far above prior draws."""
    prior = GaussianPrior(d=4)
    nulls = np.array([evaluate_regularizer(omega, prior, sample(prior, 64, rng.child(100 + b)), rng.child(200 + b)).value for b in range(20)])
    collapsed = evaluate_regularizer(omega, prior, SampleBatch(data=np.zeros((64, 4))), rng.child(300)).value
    assert collapsed > nulls.mean() + 5.0 * nulls.std(ddof=1)


def test_evaluate_regularizer_errors(gaussian_batch, rng):
    with pytest.raises(InvalidArgumentError):
        evaluate_regularizer(BhepRegularizer(), LaplacePrior(d=4), gaussian_batch, rng)
    with pytest.raises(InvalidArgumentError):
        evaluate_regularizer(BhepRegularizer(), GaussianPrior(d=3), gaussian_batch, rng)
    with pytest.raises(InvalidArgumentError):
        evaluate_regularizer(VmfMmdRegularizer(), GaussianPrior(d=4), gaussian_batch, rng)


def test_analytic_gradient_agrees_with_finite_differences(rng):
    Z = rng.child(91).generator().standard_normal((10, 3))
    prior = GaussianPrior(d=3)
    for omega in (KummerMmdRegularizer(), KsdRegularizer(), SlicedMmdRegularizer(slices=16)):
        analytic = regularizer_gradient(omega, prior, Z, rng.child(92))
        numeric = regularizer_gradient(omega, prior, Z, rng.child(92), analytic=False)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)


def test_gradient_falls_back_to_finite_differences(rng):
    """Projected Laplace slice scores have no analytic gradient; central differences are used instead."""
    Z = rng.child(93).generator().standard_normal((8, 2)) + 0.2
    grad = regularizer_gradient(SlicedKsdRegularizer(slices=8), LaplacePrior(d=2), Z, rng.child(94))
    assert grad.shape == Z.shape
    assert np.all(np.isfinite(grad))


def test_initial_particles(rng):
    collapsed = initial_particles("collapsed", 32, 3, rng.child(95))
    assert collapsed.data.var(axis=0).max() < 1e-5
    views = initial_particles("gaussian", 8, 2, rng.child(96), views=3)
    np.testing.assert_array_equal(views.data[0], views.data[2])
    cluster = initial_particles("sphere-cluster", 16, 3, rng.child(97))
    assert cluster.on_sphere
    assert np.linalg.norm(cluster.data.mean(axis=0)) > 0.9
    with pytest.raises(InvalidArgumentError):
        initial_particles("uniform", 4, 2, rng)


def test_flow_state_views_must_divide_particles():
    with pytest.raises(ValidationError):
        FlowState(particles=SampleBatch(data=np.zeros((5, 2))), views_per_particle=2)


def test_bhep_flow_spreads_collapsed_particles(rng):
    start_time = time.time()
    state = FlowState(particles=initial_particles("collapsed", 128, 4, rng.child(98)), lam=1.0, step_size=0.05)
    result = flow_run(state, BhepRegularizer(), GaussianPrior(d=4), 2000, rng.child(99))
    variance = result.state.particles.data.var(axis=0)
    assert np.all((variance > 0.6) & (variance < 1.4))
    assert result.state.step == 2000
    assert result.trajectory["objective"].iloc[-1] < result.trajectory["objective"].iloc[0]
    print(f"test_bhep_flow_spreads_collapsed_particles took {time.time() - start_time:.4f} seconds")


def test_sliced_mmd_flow_spreads_collapsed_particles(rng):
    start_time = time.time()
    state = FlowState(particles=initial_particles("collapsed", 128, 4, rng.child(100)), step_size=0.2)
    result = flow_run(state, SlicedMmdRegularizer(slices=128), GaussianPrior(d=4), 800, rng.child(101))
    variance = result.state.particles.data.var(axis=0)
    assert np.all((variance > 0.5) & (variance < 1.5))
    print(f"test_sliced_mmd_flow_spreads_collapsed_particles took {time.time() - start_time:.4f} seconds")


def test_ksd_flow_spreads_collapsed_particles(rng):
    state = FlowState(particles=initial_particles("collapsed", 64, 2, rng.child(102)), step_size=0.05)
    result = flow_run(state, KsdRegularizer(), GaussianPrior(d=2), 300, rng.child(103))
    final = result.state.particles.data
    assert np.all(np.isfinite(final))
    assert final.var(axis=0).mean() > 0.1


def test_imq_approx_sliced_ksd_flow_runs(rng):
    """The approximate analytic-sliced KSD is a valid V-form loss, so a flow can start from prior draws."""
    omega = SlicedKsdAnalyticRegularizer(mode=KummerMode.IMQ_APPROX)
    state = FlowState(particles=sample(GaussianPrior(d=4), 32, rng.child(400)), step_size=0.01)
    result = flow_run(state, omega, GaussianPrior(d=4), 10, rng.child(401), log_every=5)
    assert list(result.trajectory["step"]) == [0, 5, 10]
    assert (result.trajectory["objective"] >= 0.0).all()


@pytest.mark.slow
@pytest.mark.parametrize(
    "omega,step_size,steps",
    [(BhepRegularizer(), 0.05, 5000), (SlicedMmdRegularizer(slices=1024), 0.2, 2000), (KsdRegularizer(), 0.05, 5000)],
    ids=["bhep", "sliced-mmd", "ksd"],
)
def test_collapsed_flow_reaches_prior_variance(rng, omega, step_size, steps):
    """From a collapsed start (n=256, d=4) each regularizer restores unit per-coordinate variance within a 5000-step budget."""
    start_time = time.time()
    prior = GaussianPrior(d=4)
    state = FlowState(particles=initial_particles("collapsed", 256, 4, rng.child(402)), step_size=step_size)
    result = flow_run(state, omega, prior, steps, rng.child(403), log_every=500)
    variance = result.state.particles.data.var(axis=0)
    assert np.all((variance >= 0.8) & (variance <= 1.2)), variance
    print(f"test_collapsed_flow_reaches_prior_variance[{omega.kind}] took {time.time() - start_time:.4f} seconds")


@pytest.mark.parametrize("omega,step_size", [(VmfMmdRegularizer(), 0.02), (VmfKsdRegularizer(), 0.002)])
def test_sphere_flows_spread_clusters(rng, omega, step_size):
    prior = UniformSpherePrior(d=3)
    state = FlowState(particles=initial_particles("sphere-cluster", 64, 3, rng.child(104)), step_size=step_size)
    result = flow_run(state, omega, prior, 600, rng.child(105))
    final = result.state.particles
    assert final.on_sphere
    np.testing.assert_allclose(np.linalg.norm(final.data, axis=1), 1.0, atol=1e-12)
    norms = result.trajectory["mean_norm"]
    assert norms.iloc[-1] < 0.7 * norms.iloc[0]


def test_zero_lambda_leaves_particles_unchanged(gaussian_batch, rng):
    state = FlowState(particles=gaussian_batch, lam=0.0)
    result = flow_run(state, BhepRegularizer(), GaussianPrior(d=4), 10, rng)
    np.testing.assert_array_equal(result.state.particles.data, gaussian_batch.data)
    assert result.trajectory["mean_norm"].nunique() == 1


def test_alignment_pulls_views_together(rng):
    particles = initial_particles("gaussian", 16, 2, rng.child(106), views=2, view_jitter=0.3)
    state = FlowState(particles=particles, views_per_particle=2, lam=0.0, step_size=0.05)
    result = flow_run(state, BhepRegularizer(), GaussianPrior(d=2), 50, rng.child(107))
    assert result.trajectory["objective"].iloc[-1] < 0.01 * result.trajectory["objective"].iloc[0]


def test_flow_divergence_reports_step(rng):
    state = FlowState(particles=sample(GaussianPrior(d=2), 4, rng.child(108)), step_size=1000.0)
    with pytest.raises(DivergenceError) as info:
        flow_run(state, KsdRegularizer(), GaussianPrior(d=2), 1000, rng.child(109), log_every=1000)
    assert 1 <= info.value.step < 1000
    assert info.value.exit_code == 4


def test_flow_argument_errors(gaussian_batch, rng):
    state = FlowState(particles=gaussian_batch)
    prior = GaussianPrior(d=4)
    with pytest.raises(InvalidArgumentError):
        flow_run(state, BhepRegularizer(), prior, 0, rng)
    with pytest.raises(InvalidArgumentError):
        flow_run(state, BhepRegularizer(form="U"), prior, 5, rng)
    with pytest.raises(InvalidArgumentError):
        flow_run(state, VmfMmdRegularizer(), prior, 5, rng)
    with pytest.raises(InvalidArgumentError):
        flow_run(state, VmfMmdRegularizer(), UniformSpherePrior(d=4), 5, rng)


def test_write_trajectory():
    trajectory = pd.DataFrame({"step": [0, 10], "objective": [0.1, 1 / 3], "mean_norm": [0.0, 0.5], "var_mean": [1e-6, 0.9]})
    buffer = io.StringIO()
    write_trajectory(trajectory, buffer, {"seed": 3, "init": "collapsed"})
    lines = buffer.getvalue().splitlines()
    assert lines[:3] == ["# seed=3", "# init=collapsed", "step,objective,mean_norm,var_mean"]
    frame = pd.read_csv(io.StringIO(buffer.getvalue()), comment="#")
    assert frame["objective"].iloc[1] == 1 / 3
    assert list(frame["step"]) == [0, 10]
