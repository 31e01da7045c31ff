import numpy as np

from ..config import logger
from ..core.sampling import standard_normal_rows, uniform_sphere_rows
from ..core.schemas import SampleBatch, RngState
from ..exceptions import InvalidArgumentError
from .schemas import GaussianPrior, LaplacePrior, StudentTPrior, UniformSpherePrior


def sample(p, n: int, rng: RngState) -> SampleBatch:
    if n < 1:
        raise InvalidArgumentError(f"sample needs n >= 1, got n={n}")
    gen = rng.generator()
    logger.debug(f"Sampling n={n} from {p.kind} prior in d={p.d}")
    if isinstance(p, GaussianPrior):
        return SampleBatch(data=p.sigma * gen.standard_normal((n, p.d)))
    if isinstance(p, LaplacePrior):
        directions = uniform_sphere_rows(gen, n, p.d)
        radius = gen.gamma(shape=p.d, scale=p.sigma, size=(n, 1))
        return SampleBatch(data=directions * radius)
    if isinstance(p, StudentTPrior):
        z = standard_normal_rows(gen, n, p.d)
        chi2 = gen.chisquare(p.nu, size=(n, 1))
        return SampleBatch(data=p.sigma * z / np.sqrt(chi2 / p.nu))
    if isinstance(p, UniformSpherePrior):
        return SampleBatch(data=uniform_sphere_rows(gen, n, p.d), on_sphere=True)
    raise InvalidArgumentError(f"Unknown prior {p!r}")
