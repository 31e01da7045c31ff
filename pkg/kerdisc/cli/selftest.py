from contextlib import contextmanager
from typing import Callable, List, NamedTuple, Optional, Tuple
import logging
import time

import numpy as np
from rich.console import Console
from rich.table import Table
from scipy.integrate import quad
from scipy.special import hyp1f1
from scipy.stats import norm, t as student_t

from ..config import logger
from ..core.sampling import uniform_sphere_rows
from ..core.schemas import RngState, SampleBatch
from ..discrepancy.ksd import ksd_u_statistic, sliced_ksd_analytic, vmf_stein_kernel, vmf_stein_ksd
from ..discrepancy.mmd import mmd_cf_quadrature_1d, mmd_gaussian_closed_form, mmd_kummer_analytic_sliced
from ..discrepancy.schemas import SlicedRegSpec, SliceFamily, SliceMetric, SteinKernelSpec
from ..discrepancy.sliced import mc_slice_oracle, sliced_mmd_reg
from ..exceptions import DiscrepancyException, InvalidArgumentError
from ..kernels.schemas import GaussianKernel, ImqKernel
from ..priors.densities import student_t_cf
from ..priors.sampling import sample
from ..priors.schemas import GaussianPrior, LaplacePrior, StudentTPrior
from ..specfun.bessel import sphere_area
from ..specfun.kummer import kummer_half_d, kummer_m
from ..specfun.quadrature import gauss_hermite
from ..specfun.schemas import KummerMode
from ..specfun.sphere import j1, j2, orthogonal_integral

# two-sided tail of a 3-standard-error band
THREE_SE_TAIL = 0.0027
SPECFUN_ORACLE_RTOL = 1e-9
CORRUPTION_FACTOR = 1.05


class CheckResult(NamedTuple):
    measured: float
    bound: str
    passed: bool


class SelfCheck(NamedTuple):
    name: str
    tags: Tuple[str, ...]
    fast: int
    full: int
    run: Callable[[int, RngState, bool], CheckResult]


class CheckOutcome(NamedTuple):
    name: str
    tags: Tuple[str, ...]
    budget: int
    measured: float
    bound: str
    passed: bool
    seconds: float
    error: Optional[str] = None


CHECKS: List[SelfCheck] = []


def register(name: str, tags: Tuple[str, ...], fast: int, full: int):
    def decorator(fn):
        CHECKS.append(SelfCheck(name, tags, fast, full, fn))
        return fn

    return decorator


def z_bound(cases: int) -> float:
    """Largest |z| tolerated over ``cases`` comparisons; 3.0 for a single one."""
    return float(norm.isf(THREE_SE_TAIL / (2 * cases)))


def _max_z(diffs, ses) -> float:
    diffs = np.abs(np.asarray(diffs, dtype=np.float64))
    ses = np.asarray(ses, dtype=np.float64)
    z = np.where(ses > 0, diffs / np.where(ses > 0, ses, 1.0), np.where(diffs > 0, np.inf, 0.0))
    return float(z.max())


def _z_result(diffs, ses) -> CheckResult:
    bound = z_bound(len(diffs))
    measured = _max_z(diffs, ses)
    return CheckResult(measured, f"max |z| <= {bound:.2f}", measured <= bound)


# specfun


@register("quadrature-exactness", ("quadrature", "specfun"), 1, 1)
def _quadrature_exactness(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    worst = 0.0
    for u in (2, 5, 21):
        rule = gauss_hermite(u)
        weights = rule.weights * (CORRUPTION_FACTOR if corrupt else 1.0)
        for k in range(2 * u):
            exact = 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2, dtype=np.float64)))
            approx = float(weights @ rule.knots**k)
            scale = float(rule.weights @ np.abs(rule.knots) ** k)
            worst = max(worst, abs(approx - exact) / scale)
    return CheckResult(worst, "<= 1e-10", worst <= 1e-10)


@register("kummer-series-vs-scipy", ("specfun", "kummer"), 1, 1)
def _kummer_vs_scipy(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    z = -np.concatenate(([1e-3], np.linspace(0.05, 50.0, 120)))
    worst = 0.0
    for a in (0.5, 1.5):
        for d in (2, 3, 8, 32, 128):
            b = 0.5 * d + (a - 0.5)
            ours = kummer_m(a * (CORRUPTION_FACTOR if corrupt else 1.0), b, z)
            ref = hyp1f1(a, b, z)
            worst = max(worst, float(np.max(np.abs(ours - ref) / np.abs(ref))))
    return CheckResult(worst, f"<= {SPECFUN_ORACLE_RTOL:g}", worst <= SPECFUN_ORACLE_RTOL)


@register("imq-large-d-limit", ("specfun", "kummer"), 1, 1)
def _imq_limit(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    c = np.linspace(0.0, 50.0, 501)
    maxima = []
    for d in (4, 20, 128):
        approx = kummer_half_d(c, d, KummerMode.IMQ_APPROX) * (CORRUPTION_FACTOR if corrupt else 1.0)
        maxima.append(np.abs(kummer_half_d(c, d) - approx))
    decreasing = all(float(a.max()) > float(b.max()) for a, b in zip(maxima, maxima[1:]))
    measured = float(maxima[-1][c <= 5.0].max())
    return CheckResult(measured, "decreasing in d, <= 1e-3 at d=128", decreasing and measured <= 1e-3)


@register("sphere-j1-j2", ("sphere", "jlemma"), 200_000, 1_000_000)
def _sphere_j1_j2(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    gen = rng.generator()
    diffs, ses = [], []
    for d in (2, 3, 8):
        theta1 = uniform_sphere_rows(gen, budget, d)[:, 0]
        area = sphere_area(d)
        for c in (0.3, 2.0):
            weight = area * np.exp(-c * theta1**2)
            for values, exact in ((weight, j1(c, d)), (weight * theta1**2, j2(c, d))):
                if corrupt:
                    exact *= CORRUPTION_FACTOR
                diffs.append(values.mean() - exact)
                ses.append(values.std(ddof=1) / np.sqrt(budget))
    return _z_result(diffs, ses)


@register("jlemma-orthogonal", ("sphere", "jlemma"), 200_000, 1_000_000)
def _jlemma_orthogonal(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    gen = rng.generator()
    diffs, ses = [], []
    for d in (2, 3, 8):
        theta = uniform_sphere_rows(gen, budget, d)
        u, v = gen.standard_normal(d), gen.standard_normal(d)
        u[0] = v[0] = 0.0
        for c in (0.3, 2.0):
            values = sphere_area(d) * (theta @ u) * (theta @ v) * np.exp(-c * theta[:, 0] ** 2)
            exact = orthogonal_integral(c, d, u, v) * (CORRUPTION_FACTOR if corrupt else 1.0)
            diffs.append(values.mean() - exact)
            ses.append(values.std(ddof=1) / np.sqrt(budget))
    return _z_result(diffs, ses)


@register("vmf-kernel-spot-values", ("sphere",), 1, 1)
def _vmf_spot_values(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    worst = 0.0
    for kappa in (0.5, 1.0, 2.0):
        for d in (3, 8):
            at_one = kappa * np.exp(kappa) * (d - 1.0) * (CORRUPTION_FACTOR if corrupt else 1.0)
            at_zero = kappa * (d - 2.0)
            worst = max(
                worst,
                abs(vmf_stein_kernel(kappa, 1.0, d, "tangent") - at_one) / abs(at_one),
                abs(vmf_stein_kernel(kappa, 0.0, d, "tangent") - at_zero) / abs(at_zero),
            )
    return CheckResult(worst, "<= 1e-12", worst <= 1e-12)


@register("student-t-cf-d1", ("priors",), 1, 1)
def _student_t_cf(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    nu, sigma = 5.0, 1.0
    radii = np.array([0.1, 0.5, 1.0, 2.0, 4.0])
    ours = student_t_cf(nu, sigma, radii) * (CORRUPTION_FACTOR if corrupt else 1.0)
    ref = [
        2.0 * quad(lambda x: student_t.pdf(x, nu, scale=sigma), 0.0, np.inf, weight="cos", wvar=w, epsabs=1e-13, limlst=100)[0]
        for w in radii
    ]
    worst = float(np.max(np.abs(ours - np.asarray(ref))))
    return CheckResult(worst, "<= 1e-7", worst <= 1e-7)


# slicing


def _spread_batch(rng: RngState, d: int, n: int = 128) -> SampleBatch:
    return SampleBatch(data=1.5 * rng.generator().standard_normal((n, d)))


@register("kummer-mmd-vs-slice-oracle", ("slicing", "mmd"), 20_000, 100_000)
def _kummer_mmd_oracle(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    diffs, ses = [], []
    for index, d in enumerate((2, 8, 32)):
        X = _spread_batch(rng.child(2 * index), d)
        analytic = mmd_kummer_analytic_sliced(1.0 if corrupt else 0.5, 1.0, X)
        mean, se = mc_slice_oracle(SliceMetric.GAUSSIAN_MMD_CLOSED_FORM_1D, X, GaussianPrior(d=d), budget, rng.child(2 * index + 1))
        diffs.append(analytic.value - mean)
        ses.append(se)
    return _z_result(diffs, ses)


@register("sliced-ksd-vs-slice-oracle", ("slicing", "ksd"), 20_000, 100_000)
def _sliced_ksd_oracle(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    diffs, ses = [], []
    for index, d in enumerate((2, 8, 32)):
        X = _spread_batch(rng.child(2 * index), d)
        analytic = sliced_ksd_analytic(1.0 if corrupt else 0.5, 1.0, X)
        mean, se = mc_slice_oracle(SliceMetric.GAUSSIAN_STEIN_KERNEL_1D, X, GaussianPrior(d=d), budget, rng.child(2 * index + 1))
        diffs.append(analytic.value - mean)
        ses.append(se)
    return _z_result(diffs, ses)


@register("slice-variance-scaling", ("slicing",), 2, 8)
def _slice_variance_scaling(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    prior = GaussianPrior(d=16)
    X = sample(prior, 256, rng.child(0))
    ratios = []
    for rep in range(budget):
        few = SlicedRegSpec(family=SliceFamily.MMD_REG, prior=prior, slices=256)
        many = SlicedRegSpec(family=SliceFamily.MMD_REG, prior=prior, slices=1024 if corrupt else 4096)
        se_few = sliced_mmd_reg(few, X, rng.child(2 * rep + 1)).std_error
        se_many = sliced_mmd_reg(many, X, rng.child(2 * rep + 2)).std_error
        ratios.append(se_many / se_few)
    measured = float(np.mean(ratios))
    return CheckResult(measured, "in [0.2, 0.3]", 0.2 <= measured <= 0.3)


# mmd


@register("bhep-null-unbiased", ("mmd", "bias"), 500, 2000)
def _bhep_null(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    prior = GaussianPrior(d=2)
    sigma = 1.5 if corrupt else 1.0
    values = np.array([mmd_gaussian_closed_form(0.5, sigma, sample(prior, 64, rng.child(b))).value for b in range(budget)])
    return _z_result([values.mean()], [values.std(ddof=1) / np.sqrt(budget)])


@register("bhep-v-bias-decay", ("mmd", "bias"), 200, 2000)
def _bhep_bias_decay(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    prior = GaussianPrior(d=2, sigma=1.2 if corrupt else 1.0)
    means = []
    for index, n in enumerate((32, 512)):
        stream = rng.child(index)
        means.append(
            np.mean([mmd_gaussian_closed_form(0.5, 1.0, sample(prior, n, stream.child(b)), form="V").value for b in range(budget)])
        )
    ratio = float(means[0] / means[1])
    return CheckResult(ratio, "in [8, 24]", 8.0 <= ratio <= 24.0)


@register("cf-quadrature-matches-closed-form", ("mmd", "quadrature"), 5, 20)
def _ep_is_mmd(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    prior = GaussianPrior(d=1)
    rule = gauss_hermite(64)
    worst = 0.0
    for seed in range(budget):
        X = sample(prior, 256, rng.child(seed))
        quadrature = mmd_cf_quadrature_1d(0.5, X, prior, rule).value
        closed = mmd_gaussian_closed_form(0.5, 1.5 if corrupt else 1.0, X, form="V").value
        worst = max(worst, abs(quadrature - closed))
    return CheckResult(worst, "<= 2e-3", worst <= 2e-3)


# stein


def _stein_null(base, prior_cls, budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    diffs, ses = [], []
    for index, d in enumerate((1, 4)):
        prior = prior_cls(d=d)
        spec = SteinKernelSpec(base=base, prior=prior_cls(d=d, sigma=1.5) if corrupt else prior)
        stream = rng.child(index)
        values = np.array([ksd_u_statistic(spec, sample(prior, 128, stream.child(b))).value for b in range(budget)])
        diffs.append(values.mean())
        ses.append(values.std(ddof=1) / np.sqrt(budget))
    return _z_result(diffs, ses)


def _register_stein_nulls() -> None:
    for base in (GaussianKernel(), ImqKernel()):
        for prior_cls in (GaussianPrior, LaplacePrior, StudentTPrior):
            name = f"stein-null-{base.kind}-{prior_cls.model_fields['kind'].default}"

            def run(budget, rng, corrupt, base=base, prior_cls=prior_cls):
                return _stein_null(base, prior_cls, budget, rng, corrupt)

            register(name, ("stein",), 100, 500)(run)


_register_stein_nulls()


@register("stein-null-vmf-sphere", ("stein", "sphere"), 100, 500)
def _vmf_stein_null(budget: int, rng: RngState, corrupt: bool) -> CheckResult:
    diffs, ses = [], []
    for index, d in enumerate((3, 8)):
        stream = rng.child(index)
        values = []
        for b in range(budget):
            batch = SampleBatch(data=uniform_sphere_rows(stream.child(b).generator(), 128, d), on_sphere=True)
            values.append(vmf_stein_ksd(1.0, batch, kernel_form="tangent" if corrupt else "divergence").value)
        values = np.asarray(values)
        diffs.append(values.mean())
        ses.append(values.std(ddof=1) / np.sqrt(budget))
    return _z_result(diffs, ses)


# runner


def select_checks(pattern: Optional[str] = None) -> List[Tuple[int, SelfCheck]]:
    """Checks whose name or one of whose tags contains ``pattern``, with their registry index."""
    return [
        (index, check)
        for index, check in enumerate(CHECKS)
        if not pattern or pattern in check.name or any(pattern in tag for tag in check.tags)
    ]


@contextmanager
def _quiet_logger(level: int = logging.WARNING):
    previous = logger.level
    logger.setLevel(max(level, previous))
    try:
        yield
    finally:
        logger.setLevel(previous)


def run_selftest(
    pattern: Optional[str] = None, fast: bool = False, corrupt: Optional[str] = None, seed: int = 0
) -> List[CheckOutcome]:
    selected = select_checks(pattern)
    if not selected:
        raise InvalidArgumentError(f"no self-test check matches {pattern!r}")
    if corrupt is not None and corrupt not in {check.name for _, check in selected}:
        raise InvalidArgumentError(f"--corrupt names unknown or unselected check {corrupt!r}")

    base = RngState(seed=seed)
    outcomes = []
    logger.info(f"Running {len(selected)} self-test check(s), fast={fast}, corrupt={corrupt}")
    for index, check in selected:
        budget = check.fast if fast else check.full
        started = time.perf_counter()
        try:
            with _quiet_logger():
                result = check.run(budget, base.child(index), check.name == corrupt)
            outcome = CheckOutcome(check.name, check.tags, budget, *result, time.perf_counter() - started)
        except DiscrepancyException as e:
            logger.error(f"Self-test check {check.name} raised: {e.detail}")
            outcome = CheckOutcome(check.name, check.tags, budget, float("nan"), "-", False, time.perf_counter() - started, e.detail)
        logger.info(f"Check {check.name}: measured={outcome.measured:.6g}, passed={outcome.passed}, seconds={outcome.seconds:.1f}")
        outcomes.append(outcome)
    return outcomes


def render_report(outcomes: List[CheckOutcome], console: Console) -> None:
    table = Table(title="kerdisc self-test")
    table.add_column("check")
    table.add_column("tags")
    table.add_column("budget", justify="right")
    table.add_column("measured", justify="right")
    table.add_column("bound")
    table.add_column("status")
    table.add_column("seconds", justify="right")
    for outcome in outcomes:
        status = "[green]PASS[/green]" if outcome.passed else "[red]FAIL[/red]"
        measured = outcome.error or f"{outcome.measured:.6g}"
        table.add_row(
            outcome.name, ",".join(outcome.tags), str(outcome.budget), measured, outcome.bound, status, f"{outcome.seconds:.1f}"
        )
    console.print(table)
    failed = [o.name for o in outcomes if not o.passed]
    console.print(f"{len(outcomes) - len(failed)}/{len(outcomes)} checks passed")
    for name in failed:
        console.print(f"FAILED: {name}")
