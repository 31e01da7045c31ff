from typing import Dict, Tuple

from pydantic import ValidationError

from ..config import logger, DEFAULT_KNOTS, DEFAULT_STUDENT_NU
from ..core.io import load_samples
from ..core.schemas import DiscrepancyEstimate, RngState
from ..discrepancy.ksd import ksd_spectral_1d
from ..discrepancy.mmd import mmd_cf_quadrature_1d, mmd_two_sample_u
from ..exceptions import DiscrepancyException, InvalidArgumentError, NumericalError
from ..flow.objective import evaluate_regularizer
from ..flow.runner import FlowResult, flow_run, initial_particles
from ..flow.schemas import (
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
from ..kernels.schemas import GaussianKernel, ImqKernel, VmfKernel
from ..specfun.quadrature import gauss_hermite
from .schemas import EstimateArgs, FlowConfig


def _kernel(args: EstimateArgs):
    if args.kernel == "gaussian":
        return GaussianKernel(gamma=args.gamma)
    if args.kernel == "imq":
        return ImqKernel(alpha=args.alpha, beta=args.beta)
    return VmfKernel(kappa=args.kappa)


def _regularizer(args: EstimateArgs):
    form = args.resolved_form
    metric = args.metric
    if metric == "bhep":
        return BhepRegularizer(gamma=args.gamma, form=form)
    if metric == "kummer-mmd":
        return KummerMmdRegularizer(gamma=args.gamma, mode=args.mode, form=form)
    if metric == "sliced-mmd":
        return SlicedMmdRegularizer(
            slices=args.slices or 256, knots=args.knots or DEFAULT_KNOTS, gamma=args.gamma, form=form
        )
    if metric == "sliced-ksd":
        return SlicedKsdRegularizer(
            slices=args.slices or 256, knots=args.knots or DEFAULT_KNOTS, gamma=args.gamma, form=form
        )
    if metric == "ksd":
        return KsdRegularizer(base=_kernel(args), form=form)
    if metric == "sliced-ksd-analytic":
        return SlicedKsdAnalyticRegularizer(gamma=args.gamma, mode=args.mode, form=form)
    if metric == "vmf-mmd":
        return VmfMmdRegularizer(kappa=args.kappa, form=form)
    if metric == "vmf-ksd":
        return VmfKsdRegularizer(kappa=args.kappa, form=form)
    raise InvalidArgumentError(f"Unknown metric {metric!r}")


def run_estimate(args: EstimateArgs) -> DiscrepancyEstimate:
    """Load the sample file(s) and evaluate one discrepancy."""
    try:
        on_sphere = args.prior == "uniform-sphere" or args.kernel == "vmf"
        X = load_samples(args.input, on_sphere=on_sphere)
        logger.info(f"Estimating metric={args.metric} for n={X.n}, d={X.d}, seed={args.seed}")

        if args.metric == "mmd-u":
            Y = load_samples(args.input2, on_sphere=on_sphere)
            return mmd_two_sample_u(_kernel(args), X, Y, form=args.resolved_form)
        rule = gauss_hermite(args.knots or DEFAULT_KNOTS)
        if args.metric == "mmd-cf":
            return mmd_cf_quadrature_1d(args.gamma, X, args.prior_config().build(X.d), rule)
        if args.metric == "ksd-spectral":
            return ksd_spectral_1d(args.prior, args.sigma, X, args.gamma, rule, nu=args.nu or DEFAULT_STUDENT_NU)

        prior = args.prior_config().build(X.d)
        return evaluate_regularizer(_regularizer(args), prior, X, RngState(seed=args.seed))
    except (DiscrepancyException, ValidationError) as e:
        raise e
    except (ArithmeticError, ValueError) as e:
        logger.error(f"Error estimating metric={args.metric}: {e}")
        raise NumericalError(f"{args.metric} failed: {e}")


def flow_metadata(config: FlowConfig) -> Dict[str, object]:
    return {
        "regularizer": config.estimator.model_dump_json(),
        "prior": config.prior.model_dump_json(),
        "init": config.init,
        "n": config.n,
        "d": config.d,
        "steps": config.steps,
        "step_size": config.step_size,
        "lambda": config.lam,
        "views_per_particle": config.views_per_particle,
        "seed": config.seed,
    }


def run_flow(config: FlowConfig) -> Tuple[FlowResult, Dict[str, object]]:
    """Build the initial particles from the config and run the flow."""
    prior = config.prior.build(config.d)
    rng = RngState(seed=config.seed)
    sigma = getattr(prior, "sigma", 1.0)
    particles = initial_particles(
        config.init,
        config.n,
        config.d,
        rng.child(0),
        sigma=sigma,
        views=config.views_per_particle,
        view_jitter=config.view_jitter,
    )
    state = FlowState(
        particles=particles,
        views_per_particle=config.views_per_particle,
        lam=config.lam,
        step_size=config.step_size,
    )
    result = flow_run(
        state,
        config.estimator,
        prior,
        config.steps,
        rng.child(1),
        log_every=config.log_every,
        view_noise=config.view_noise,
    )
    return result, flow_metadata(config)
