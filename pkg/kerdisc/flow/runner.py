from typing import Dict, NamedTuple, Optional, TextIO

import numpy as np
import pandas as pd

from ..config import logger
from ..core.sampling import standard_normal_rows
from ..core.schemas import SampleBatch, RngState
from ..exceptions import DivergenceError, InvalidArgumentError
from ..priors.schemas import UniformSpherePrior
from .objective import alignment_gradient, alignment_term, evaluate_regularizer, regularizer_gradient
from .schemas import FlowState, SPHERE_REGULARIZERS

TRAJECTORY_COLUMNS = ["step", "objective", "mean_norm", "var_mean"]
COLLAPSE_JITTER = 1e-3
CLUSTER_SPREAD = 0.1


class FlowResult(NamedTuple):
    state: FlowState
    trajectory: pd.DataFrame


def initial_particles(kind: str, n: int, d: int, rng: RngState, sigma: float = 1.0, views: int = 1, view_jitter: float = 0.0) -> SampleBatch:
    """Starting particles: ``collapsed`` at the origin, ``gaussian`` N(0, sigma^2 I), or ``sphere-cluster`` around e_1.

    With ``views > 1`` every instance is repeated ``views`` times, each copy perturbed by ``view_jitter * sigma``.
    """
    if n < 1 or d < 1 or views < 1:
        raise InvalidArgumentError(f"initial_particles needs n, d, views >= 1, got n={n}, d={d}, views={views}")
    gen = rng.generator()
    if kind == "collapsed":
        base = COLLAPSE_JITTER * sigma * gen.standard_normal((n, d))
    elif kind == "gaussian":
        base = sigma * gen.standard_normal((n, d))
    elif kind == "sphere-cluster":
        centre = np.zeros(d)
        centre[0] = 1.0
        base = centre + CLUSTER_SPREAD * standard_normal_rows(gen, n, d)
    else:
        raise InvalidArgumentError(f"Unknown initial distribution {kind!r}")

    data = np.repeat(base, views, axis=0)
    if views > 1 and view_jitter > 0:
        data = data + view_jitter * sigma * gen.standard_normal(data.shape)
    on_sphere = kind == "sphere-cluster"
    if on_sphere:
        data = data / np.linalg.norm(data, axis=1, keepdims=True)
    return SampleBatch(data=data, on_sphere=on_sphere)


def _checkpoint(step: int, objective: float, Z: np.ndarray) -> Dict[str, float]:
    return {
        "step": step,
        "objective": objective,
        "mean_norm": float(np.linalg.norm(Z.mean(axis=0))),
        "var_mean": float(Z.var(axis=0).mean()),
    }


def flow_run(
    initial: FlowState,
    omega,
    prior,
    steps: int,
    rng: RngState,
    log_every: Optional[int] = None,
    view_noise: float = 0.0,
    analytic: bool = True,
) -> FlowResult:
    """Gradient descent on the particles for alignment + lambda * Omega, gradients rescaled by n."""
    if steps < 1:
        raise InvalidArgumentError(f"flow_run needs steps >= 1, got steps={steps}")
    if omega.form != "V":
        raise InvalidArgumentError(f"{omega.kind} must use the V-form inside a flow")
    sphere = omega.kind in SPHERE_REGULARIZERS
    if sphere != isinstance(prior, UniformSpherePrior):
        raise InvalidArgumentError(f"{omega.kind} regularizer does not match the {prior.kind} prior")
    if sphere and not initial.particles.on_sphere:
        raise InvalidArgumentError("sphere flows need particles on the unit sphere")

    log_every = log_every or max(1, steps // 50)
    views = initial.views_per_particle
    lam, eta = initial.lam, initial.step_size
    Z = np.array(initial.particles.data, copy=True)
    n = Z.shape[0]
    noise_gen = rng.child(0).generator()
    sigma = getattr(prior, "sigma", 1.0)
    logger.info(f"Starting flow: regularizer={omega.kind}, n={n}, d={Z.shape[1]}, steps={steps}, lambda={lam}, step_size={eta}")

    def objective(points: np.ndarray, step: int) -> float:
        total = alignment_term(points, views)
        if lam > 0:
            batch = SampleBatch(data=points, on_sphere=sphere)
            total += lam * evaluate_regularizer(omega, prior, batch, rng.child(2 * step + 1)).value
        return total

    records = [_checkpoint(initial.step, objective(Z, initial.step), Z)]
    for step in range(initial.step + 1, initial.step + steps + 1):
        grad = np.zeros_like(Z)
        if views > 1:
            jittered = Z + view_noise * sigma * noise_gen.standard_normal(Z.shape) if view_noise > 0 else Z
            grad += alignment_gradient(jittered, views)
        if lam > 0:
            grad += lam * regularizer_gradient(omega, prior, Z, rng.child(2 * step), analytic=analytic)
        grad *= n
        if sphere:
            grad -= Z * np.sum(Z * grad, axis=1, keepdims=True)
        Z = Z - eta * grad
        if sphere:
            Z /= np.linalg.norm(Z, axis=1, keepdims=True)

        if not np.all(np.isfinite(Z)):
            logger.error(f"Flow diverged at step {step} for regularizer={omega.kind}")
            raise DivergenceError(f"particle coordinates became non-finite at step {step}", step=step)
        if step % log_every == 0 or step == initial.step + steps:
            records.append(_checkpoint(step, objective(Z, step), Z))
            logger.info(f"Flow step {step}: objective={records[-1]['objective']:.6g}, var_mean={records[-1]['var_mean']:.4f}")

    final = initial.model_copy(
        update={"particles": SampleBatch(data=Z, on_sphere=sphere), "step": initial.step + steps}
    )
    return FlowResult(final, pd.DataFrame.from_records(records, columns=TRAJECTORY_COLUMNS))


def write_trajectory(trajectory: pd.DataFrame, stream: TextIO, metadata: Dict[str, object]) -> None:
    """Trajectory CSV preceded by '#'-prefixed metadata lines."""
    for key, value in metadata.items():
        stream.write(f"# {key}={value}\n")
    frame = trajectory.copy()
    frame["step"] = frame["step"].astype(int)
    frame.to_csv(stream, index=False, float_format="%.17g")
