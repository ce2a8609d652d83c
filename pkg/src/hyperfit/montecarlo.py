"""Monte Carlo propagation of inflation-rate measurement error.

Each measured rate i(t_k) is treated as gaussian with mean i(t_k) and
standard deviation di * |i(t_k)| (the same relative error everywhere).
A generation is one full resample of the rate series; it is cumulated
into a price index and refitted to the singular model, and the parameter
means and standard deviations over all generations quantify the fit
uncertainty.  Results are accepted when every parameter's
|mean - direct| / std ratio stays below the configured threshold, i.e.
when resampling does not systematically displace the direct fit.

Determinism: generation j draws from a substream derived only from the
master seed and j (``SeedSequence(seed).spawn(m)[j]``), and all
aggregation is order-independent, so reports are bit-identical for a
fixed seed regardless of how the generations are chunked for execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats

from .fitting import FitConfig, FitError, fit_singularity, tc_search_window
from .models import alpha_to_gamma
from .series import InflationSeries, build_price_index


@dataclass(frozen=True)
class MCConfig:
    """Settings for the resampling run.

    ``di`` is the relative rate error as a fraction (0.25 = 25 percent);
    the generation count must be large enough for the sample moments to
    match the assigned gaussian (a few thousand in practice).
    """

    di: float = 0.25
    m: int = 4000
    seed: int = 0
    threshold: float = 0.1
    sweep: tuple[float, ...] | None = None
    workers: int = 1
    max_nonconverged_frac: float = 0.05

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"generation count must be >= 1, got {self.m}")
        if self.di < 0:
            raise ValueError(f"relative error must be >= 0, got {self.di}")
        if not self.threshold > 0:
            raise ValueError(f"acceptance threshold must be > 0, got {self.threshold}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class ParamStats:
    """Direct-fit value and resampled moments of one parameter."""

    direct: float
    mean: float
    std: float
    ratio: float          # |mean - direct| / std; 0 when std == 0 and mean == direct
    accepted: bool


@dataclass(frozen=True)
class MCReport:
    """Aggregated outcome of one resampling run."""

    di: float
    m: int
    seed: int
    threshold: float
    params: dict[str, ParamStats]        # tc, alpha, c0, p0, gamma
    accepted: bool                       # all of tc/alpha/c0/p0 below threshold
    n_nonconverged: int
    unreliable: bool
    truncated_draws: int
    tc_hist_edges: np.ndarray
    tc_hist_counts: np.ndarray
    tc_skewness: float
    tc_excess_kurtosis: float
    gaussian_ok: bool


@dataclass(frozen=True)
class SweepRow:
    """Standard deviations at one relative-error setting.

    Absolute stds per parameter, plus the relative (percent) standard
    deviations of the time to the singularity tc - t0 and of the growth
    exponent gamma, the two headline uncertainty measures.
    """

    di: float
    std_tc: float
    std_alpha: float
    std_c0: float
    std_p0: float
    sd_tc_rel_pct: float
    sd_gamma_rel_pct: float
    accepted: bool


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

_MAX_REDRAW_ROUNDS = 10000


def _sample_rates(rates: np.ndarray, di: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """One gaussian resample of a rate vector; redraws any value <= -1.

    The first rate has zero assigned error (it is zero by the loading
    convention), so it is reproduced exactly.  Returns the sample and the
    number of redraws forced by the i > -1 positivity requirement.
    """
    sd = di * np.abs(rates)
    vals = rng.normal(rates, sd)
    redraws = 0
    bad = vals <= -1.0
    rounds = 0
    while bad.any():
        redraws += int(bad.sum())
        vals[bad] = rng.normal(rates[bad], sd[bad])
        bad = vals <= -1.0
        rounds += 1
        if rounds > _MAX_REDRAW_ROUNDS:
            raise RuntimeError("rate resampling failed to stay above -1")
    return vals, redraws


def sample_generation(
    rates: InflationSeries, di: float, rng: np.random.Generator
) -> InflationSeries:
    """Draw one generation of inflation rates from the assigned error model."""
    vals, _ = _sample_rates(rates.rates, di, rng)
    return InflationSeries(epochs=rates.epochs, rates=vals)


# ---------------------------------------------------------------------------
# Batched refitting
# ---------------------------------------------------------------------------

def _theta_to_params(theta: np.ndarray, tc_lb: float):
    tc = tc_lb + np.exp(theta[:, 0])
    alpha = np.exp(theta[:, 1])
    c0 = np.exp(theta[:, 2])
    p0 = theta[:, 3]
    return tc, alpha, c0, p0


def _batch_residuals(theta: np.ndarray, t: np.ndarray, t0: float, tc_lb: float,
                     p_data: np.ndarray, with_jac: bool):
    """Residuals (data - model) and, optionally, d(model)/d(theta).

    theta rows are (log(tc - tc_lb), log alpha, log C0, p0): the log
    reparameterization keeps tc beyond the data and alpha, C0 positive
    without explicit constraints.
    """
    tc, alpha, c0, p0 = _theta_to_params(theta, tc_lb)
    s0 = tc - t0
    s = tc[:, None] - t[None, :]
    log_ratio = np.log(s0[:, None] / s)
    # Wild trial steps may overflow; they produce non-finite objectives and
    # are rejected by the damping loop.
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.exp(alpha[:, None] * log_ratio)
        g = (s0 / alpha)[:, None] * (f - 1.0)
        resid = p_data - (p0[:, None] + c0[:, None] * g)
    if not with_jac:
        return resid, None
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.exp(log_ratio)
        dg_dtc = ((1.0 + alpha[:, None]) * f - alpha[:, None] * f * ratio - 1.0) / alpha[:, None]
        dg_da = -(s0 / alpha ** 2)[:, None] * (f - 1.0) + (s0 / alpha)[:, None] * f * log_ratio
        jac = np.empty(resid.shape + (4,))
        jac[:, :, 0] = c0[:, None] * dg_dtc * (tc - tc_lb)[:, None]   # d/d log(tc - lb)
        jac[:, :, 1] = c0[:, None] * dg_da * alpha[:, None]           # d/d log alpha
        jac[:, :, 2] = c0[:, None] * g                                # d/d log C0
        jac[:, :, 3] = 1.0
    return resid, jac


def _refit_chunk(p_data, t, t0, tc_lb, theta0, xtol, ftol, max_iter):
    """Damped Gauss-Newton (Levenberg-Marquardt) over a chunk of generations.

    Each row is an independent 4-parameter fit; rows share vectorized model
    evaluations but have their own damping and convergence state, so the
    result does not depend on how generations are grouped into chunks.
    Steps are only ever accepted when they reduce the row's objective.
    """
    m = p_data.shape[0]
    theta = theta0.copy()
    resid, _ = _batch_residuals(theta, t, t0, tc_lb, p_data, with_jac=False)
    ssr = np.einsum("ij,ij->i", resid, resid)
    lam = np.full(m, 1e-3)
    converged = np.zeros(m, dtype=bool)

    for _ in range(max_iter):
        active = np.flatnonzero(~converged)
        if active.size == 0:
            break
        th = theta[active]
        r, jac = _batch_residuals(th, t, t0, tc_lb, p_data[active], with_jac=True)
        jtj = np.einsum("ijk,ijl->ikl", jac, jac)
        jtr = np.einsum("ijk,ij->ik", jac, r)
        diag = np.clip(np.einsum("ikk->ik", jtj), 1e-30, None)
        a_mat = jtj + lam[active, None, None] * diag[:, None, :] * np.eye(4)
        try:
            delta = np.linalg.solve(a_mat, jtr[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.einsum("ijk,ik->ij", np.linalg.pinv(a_mat), jtr)
        trial = th + np.clip(delta, -50.0, 50.0)
        trial[:, :3] = np.clip(trial[:, :3], -60.0, 60.0)
        r_new, _ = _batch_residuals(trial, t, t0, tc_lb, p_data[active], with_jac=False)
        ssr_new = np.einsum("ij,ij->i", r_new, r_new)
        better = np.isfinite(ssr_new) & (ssr_new <= ssr[active])

        step_small = np.max(np.abs(delta) / (np.abs(th) + 1.0), axis=1) < xtol
        decrease_small = (ssr[active] - ssr_new) <= ftol * np.maximum(ssr_new, 1e-300)
        done = better & (step_small | decrease_small)

        upd = active[better]
        theta[upd] = trial[better]
        ssr[upd] = ssr_new[better]
        lam[upd] = np.maximum(lam[upd] * 0.3, 1e-12)
        rej = active[~better]
        lam[rej] = np.minimum(lam[rej] * 10.0, 1e15)
        converged[active[done]] = True

    tc, alpha, c0, p0 = _theta_to_params(theta, tc_lb)
    return tc, alpha, c0, p0, ssr, converged


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _population_moments(x: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(x))
    std = float(np.sqrt(np.mean((x - mean) ** 2)))
    return mean, std


def _ratio(direct: float, mean: float, std: float, atol: float) -> float:
    """Displacement of the resampled mean in units of the resampled spread.

    A zero spread (all generations identical, as with di = 0) gives 0 when
    the mean agrees with the direct fit at optimizer resolution and
    infinity otherwise; two optimizers stopping within their tolerance of
    the same minimum count as agreeing.
    """
    diff = abs(mean - direct)
    if std == 0.0:
        return 0.0 if diff <= atol else math.inf
    return diff / std


def run_mc(
    rates: InflationSeries,
    fit_config: FitConfig | None = None,
    mc_config: MCConfig | None = None,
) -> MCReport:
    """Resample the rate series m times, refit each generation, aggregate.

    The direct fit of the unperturbed series anchors the comparison and
    seeds every refit.  Generations whose refit does not converge, or whose
    parameters leave the configured search box, are excluded from the
    moments and counted; more than ``max_nonconverged_frac`` of them marks
    the report unreliable.
    """
    fit_config = fit_config or FitConfig()
    mc = mc_config or MCConfig()

    index = build_price_index(rates)
    direct = fit_singularity(index, fit_config)
    if not direct.converged:
        raise FitError("direct fit did not converge; refusing to resample around it")

    t = index.times()
    t0 = float(t[0])
    tc_lo, tc_hi = tc_search_window(t, fit_config)
    a_lo, a_hi = fit_config.alpha_bounds

    # Draw all generations; each one consumes only its own substream.
    children = np.random.SeedSequence(mc.seed).spawn(mc.m)
    n = len(rates)
    samples = np.empty((mc.m, n))
    truncated = 0
    for j in range(mc.m):
        samples[j], redraws = _sample_rates(rates.rates, mc.di, np.random.default_rng(children[j]))
        truncated += redraws

    # Cumulate each generation into a log price index (log-space form of
    # the product over (1 + i)).
    p_data = np.cumsum(np.log1p(samples), axis=1)

    dp = direct.params
    theta0 = np.array([
        math.log(max(dp.tc - tc_lo, 1e-9)),
        math.log(dp.alpha),
        math.log(dp.c0),
        dp.p0,
    ])

    tc = np.empty(mc.m)
    alpha = np.empty(mc.m)
    c0 = np.empty(mc.m)
    p0 = np.empty(mc.m)
    converged = np.zeros(mc.m, dtype=bool)
    chunk = max(1, min(1024, -(-mc.m // mc.workers)))
    for lo in range(0, mc.m, chunk):
        hi = min(lo + chunk, mc.m)
        out = _refit_chunk(
            p_data[lo:hi], t, t0, tc_lo, np.tile(theta0, (hi - lo, 1)),
            fit_config.xtol, fit_config.ftol, fit_config.max_iter,
        )
        tc[lo:hi], alpha[lo:hi], c0[lo:hi], p0[lo:hi], _, converged[lo:hi] = out

    in_box = (tc <= tc_hi) & (alpha >= a_lo) & (alpha <= a_hi)
    ok = converged & in_box
    n_bad = int(mc.m - ok.sum())
    if not ok.any():
        raise FitError("no Monte Carlo generation produced a usable refit")

    gamma_direct = alpha_to_gamma(dp.alpha)
    gamma = (2.0 + alpha[ok]) / (1.0 + alpha[ok])
    values = {
        "tc": (dp.tc, tc[ok]),
        "alpha": (dp.alpha, alpha[ok]),
        "c0": (dp.c0, c0[ok]),
        "p0": (dp.p0, p0[ok]),
        "gamma": (gamma_direct, gamma),
    }
    params: dict[str, ParamStats] = {}
    for name, (direct_value, sample) in values.items():
        mean, std = _population_moments(sample)
        atol = 10.0 * fit_config.xtol * max(1.0, abs(direct_value))
        ratio = _ratio(direct_value, mean, std, atol)
        params[name] = ParamStats(
            direct=direct_value,
            mean=mean,
            std=std,
            ratio=ratio,
            accepted=bool(ratio < mc.threshold),
        )
    accepted = all(params[k].accepted for k in ("tc", "alpha", "c0", "p0"))

    tc_ok = tc[ok]
    if params["tc"].std > 0:
        skew = float(_stats.skew(tc_ok, bias=True))
        kurt = float(_stats.kurtosis(tc_ok, fisher=True, bias=True))
    else:
        skew, kurt = 0.0, 0.0
    counts, edges = np.histogram(tc_ok, bins=40)

    return MCReport(
        di=mc.di,
        m=mc.m,
        seed=mc.seed,
        threshold=mc.threshold,
        params=params,
        accepted=accepted,
        n_nonconverged=n_bad,
        unreliable=bool(n_bad > mc.max_nonconverged_frac * mc.m),
        truncated_draws=truncated,
        tc_hist_edges=edges,
        tc_hist_counts=counts,
        tc_skewness=skew,
        tc_excess_kurtosis=kurt,
        gaussian_ok=bool(abs(skew) < 0.5 and abs(kurt) < 1.0),
    )


def sweep_error(
    rates: InflationSeries,
    fit_config: FitConfig | None = None,
    di_values: tuple[float, ...] | list[float] = (),
    m: int = 4000,
    seed: int = 0,
    workers: int = 1,
) -> list[SweepRow]:
    """Repeat run_mc over a list of relative errors and tabulate the stds.

    Every run reuses the same master seed, so the underlying gaussian
    draws are common across error settings (the classic common-random-
    numbers device); std columns then vary smoothly with di.
    """
    rows: list[SweepRow] = []
    t0 = float(rates.times()[0])
    for di in di_values:
        mc = MCConfig(di=float(di), m=m, seed=seed, workers=workers)
        report = run_mc(rates, fit_config, mc)
        span = report.params["tc"].direct - t0
        rows.append(
            SweepRow(
                di=float(di),
                std_tc=report.params["tc"].std,
                std_alpha=report.params["alpha"].std,
                std_c0=report.params["c0"].std,
                std_p0=report.params["p0"].std,
                sd_tc_rel_pct=100.0 * report.params["tc"].std / span,
                sd_gamma_rel_pct=100.0 * report.params["gamma"].std
                / abs(report.params["gamma"].direct),
                accepted=report.accepted,
            )
        )
    return rows
