import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, kv

from ..config import logger
from ..exceptions import InvalidArgumentError, RangeError, UnsupportedOperationError
from .schemas import GaussianKernel, ImqKernel, KernelSpec

IMQ_EXCLUSION_RADIUS = 1e-8


def _imq_density(k: ImqKernel, radius: np.ndarray, d: int) -> np.ndarray:
    nu = k.beta - 0.5 * d
    log_pref = (1.0 - k.beta) * np.log(2.0) - gammaln(k.beta) - 0.5 * d * np.log(2.0 * np.pi * k.alpha)
    z = radius / np.sqrt(k.alpha)
    out = np.empty_like(z)
    zero = z == 0.0
    if zero.any():
        if nu <= 0:
            raise RangeError(f"IMQ spectral density diverges at omega=0 for beta={k.beta} <= d/2={0.5 * d}")
        # z^nu K_nu(z) -> Gamma(nu) 2^{nu-1}
        out[zero] = np.exp(log_pref + gammaln(nu) + (nu - 1.0) * np.log(2.0))
    nz = ~zero
    out[nz] = np.exp(log_pref) * z[nz] ** nu * kv(nu, z[nz])
    return out


def spectral_density(k: KernelSpec, omega) -> float:
    """Bochner spectral density rho(omega) with k(x, y) = integral of exp(i omega.(x-y)) rho(omega)."""
    omega = np.atleast_1d(np.asarray(omega, dtype=np.float64))
    if omega.ndim != 1:
        raise InvalidArgumentError("omega must be a single frequency vector")
    d = omega.size
    sq = float(omega @ omega)
    if isinstance(k, GaussianKernel):
        return float((4.0 * np.pi * k.gamma) ** (-0.5 * d) * np.exp(-sq / (4.0 * k.gamma)))
    if isinstance(k, ImqKernel):
        return float(_imq_density(k, np.array([np.sqrt(sq)]), d)[0])
    raise UnsupportedOperationError(f"No spectral density for the {k.kind} kernel")


def bochner_reconstruct(k: KernelSpec, delta: float) -> float:
    """Integral of cos(omega * delta) rho(omega) over the real line for a one-dimensional kernel."""
    if isinstance(k, GaussianKernel):
        integrand = lambda w: np.cos(w * delta) * spectral_density(k, [w])
        value, _ = quad(integrand, 0.0, np.inf, limit=200)
        return 2.0 * value
    if isinstance(k, ImqKernel):
        nu = k.beta - 0.5
        lower = 0.0
        excluded = 0.0
        if nu <= 0:
            # rho ~ C |omega|^{2 nu} near zero
            lower = IMQ_EXCLUSION_RADIUS
            excluded = 2.0 * spectral_density(k, [lower]) * lower / (2.0 * nu + 1.0)
            logger.warning(f"IMQ spectral density singular at 0; excluded |omega| < {lower:g} carrying mass <= {excluded:.3e}")
        integrand = lambda w: np.cos(w * delta) * spectral_density(k, [w])
        value, _ = quad(integrand, lower, np.inf, limit=400)
        return 2.0 * value
    raise UnsupportedOperationError(f"No spectral density for the {k.kind} kernel")
