"""Nonlinear least-squares estimation of price-model parameters.

All fits minimize the sum of squared residuals of the natural-log price,
unweighted, and report the root-mean-square residue

    chi = sqrt(SSR / N)        (or SSR / (N - k) when configured)

The singular and double-exponential models are affine in (C0, p0) once
their shape parameters are fixed, so initialization evaluates a coarse
grid over the shape parameters with closed-form linear least squares at
each node, then refines the best node with a bounded trust-region
minimizer.  Everything is deterministic for a given configuration; grid
ties are broken toward the smaller critical time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .models import DoubleExpParams, LinearParams, SingularityParams, evaluate
from .series import Epoch, PriceIndexSeries, slice_window


class FitError(ValueError):
    """Fit rejected: degenerate input, too few points, or empty search window."""


@dataclass(frozen=True)
class FitConfig:
    """Search windows, bounds and stopping rules for the nonlinear fits.

    ``tc_window`` is in continuous time coordinates; when None it defaults
    to [last epoch + dt/2, last epoch + series span].  A singularity inside
    the data would contradict the finite observed prices, hence the dt/2
    standoff on the lower edge.
    """

    tc_window: tuple[float, float] | None = None
    alpha_bounds: tuple[float, float] = (0.01, 5.0)
    b2_max: float | None = None          # default: 20 / span
    grid_tc: int = 48
    grid_alpha: int = 32
    grid_b2: int = 48
    xtol: float = 1e-9                   # relative parameter change
    ftol: float = 1e-12                  # relative objective change
    max_iter: int = 400                  # residual evaluations for the refiner
    chi_divisor: str = "n"               # "n" or "n-k"
    pin_p0: bool = False                 # pin p0 to the observed ln P(t0)
    pin_b2: bool = False                 # pin b2 to 0 (linear limit)

    def __post_init__(self) -> None:
        if self.chi_divisor not in ("n", "n-k"):
            raise FitError(f"chi divisor must be 'n' or 'n-k', got {self.chi_divisor!r}")
        if self.xtol <= 0 or self.ftol <= 0:
            raise FitError("tolerances must be positive")
        lo, hi = self.alpha_bounds
        if not 0 < lo < hi:
            raise FitError(f"bad alpha bounds {self.alpha_bounds}")
        if self.tc_window is not None and not self.tc_window[0] < self.tc_window[1]:
            raise FitError(f"empty tc search window {self.tc_window}")


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters plus the residue diagnostics of one fit.

    ``chi`` follows the configured divisor; both conventions are kept so a
    published residue can be compared under either.  ``residuals`` is
    p_data - p_model, and ``objective`` its sum of squares, so chi is
    always recomputable from the stored vector.
    """

    model: str
    params: LinearParams | DoubleExpParams | SingularityParams
    chi: float
    residuals: np.ndarray
    converged: bool
    iterations: int
    objective: float
    n_points: int
    n_free_params: int
    chi_divisor: str
    chi_n: float
    chi_n_minus_k: float
    p0_pinned: bool = False


def _chi_pair(ssr: float, n: int, k: int) -> tuple[float, float]:
    chi_n = np.sqrt(ssr / n)
    chi_nk = np.sqrt(ssr / (n - k)) if n > k else float("inf")
    return float(chi_n), float(chi_nk)


def _result(model, params, resid, n, k, divisor, converged, iterations, pinned=False):
    ssr = float(resid @ resid)
    chi_n, chi_nk = _chi_pair(ssr, n, k)
    return FitResult(
        model=model,
        params=params,
        chi=chi_n if divisor == "n" else chi_nk,
        residuals=resid,
        converged=converged,
        iterations=iterations,
        objective=ssr,
        n_points=n,
        n_free_params=k,
        chi_divisor=divisor,
        chi_n=chi_n,
        chi_n_minus_k=chi_nk,
        p0_pinned=pinned,
    )


def _windowed(index: PriceIndexSeries, window) -> PriceIndexSeries:
    if window is None:
        return index
    start, end = window
    return slice_window(index, start, end)


def _clip_inside(x0: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Nudge a seed strictly inside its box (trust-region refiners require it)."""
    margin = 1e-12
    with np.errstate(invalid="ignore"):
        lo = np.where(np.isfinite(lb), lb + margin * np.maximum(np.abs(lb), 1.0), lb)
        hi = np.where(np.isfinite(ub), ub - margin * np.maximum(np.abs(ub), 1.0), ub)
    return np.clip(x0, lo, hi)


def _linear_ls(t: np.ndarray, p: np.ndarray, t0: float) -> tuple[float, float, np.ndarray]:
    """Closed-form OLS of p on (t - t0); returns (p0, c0, residuals)."""
    x = t - t0
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, p, rcond=None)
    p0, c0 = float(coef[0]), float(coef[1])
    return p0, c0, p - (p0 + c0 * x)


# ---------------------------------------------------------------------------
# Linear model
# ---------------------------------------------------------------------------

def fit_linear(
    index: PriceIndexSeries,
    window: tuple[Epoch | None, Epoch | None] | None = None,
    config: FitConfig | None = None,
) -> FitResult:
    """Ordinary least squares of the log index on time: global optimum in closed form."""
    config = config or FitConfig()
    index = _windowed(index, window)
    t = index.times()
    p = index.log_index
    if len(t) < 3:
        raise FitError(f"linear fit needs at least 3 points, got {len(t)}")
    if np.ptp(t) == 0.0:
        raise FitError("degenerate time values: all epochs identical")
    t0 = float(t[0])
    p0, c0, resid = _linear_ls(t, p, t0)
    params = LinearParams(p0=p0, c0=c0, t0=t0)
    return _result("linear", params, resid, len(t), 2, config.chi_divisor, True, 0)


# ---------------------------------------------------------------------------
# Finite-time singularity model
# ---------------------------------------------------------------------------

def tc_search_window(times: np.ndarray, config: FitConfig) -> tuple[float, float]:
    """Critical-time search interval for a set of observation times.

    Defaults to [last epoch + dt/2, last epoch + span]: a singularity inside
    the data would contradict the finite observed prices, and one further
    out than a full series span is unconstrained by the data.
    """
    t_last = float(times[-1])
    if config.tc_window is not None:
        tc_lo, tc_hi = config.tc_window
    else:
        dt = float(np.median(np.diff(times)))
        tc_lo, tc_hi = t_last + dt / 2.0, t_last + (t_last - float(times[0]))
    if not (tc_lo > t_last and tc_hi > tc_lo):
        raise FitError(f"empty tc search window ({tc_lo}, {tc_hi})")
    return tc_lo, tc_hi


def _sing_basis(t: np.ndarray, t0: float, tc, alpha):
    """g(t) such that p = p0 + C0 g; broadcasts over (tc, alpha) node axes."""
    span = tc - t0
    ratio = span / (tc - t)
    return span / alpha * (ratio ** alpha - 1.0)


def _sing_model_jac(x, t, t0, p_data, pinned_p0):
    """Residuals (model - data) and Jacobian for the trust-region refiner."""
    if pinned_p0 is None:
        tc, alpha, c0, p0 = x
    else:
        tc, alpha, c0 = x
        p0 = pinned_p0
    s0 = tc - t0
    s = tc - t
    ratio = s0 / s
    f = ratio ** alpha
    g = s0 / alpha * (f - 1.0)
    resid = p0 + c0 * g - p_data
    dg_dtc = ((1.0 + alpha) * f - alpha * f * ratio - 1.0) / alpha
    dg_da = -(s0 / alpha ** 2) * (f - 1.0) + (s0 / alpha) * f * np.log(ratio)
    cols = [c0 * dg_dtc, c0 * dg_da, g]
    if pinned_p0 is None:
        cols.append(np.ones_like(t))
    return resid, np.column_stack(cols)


def _sing_grid_seed(t, p, t0, tc_nodes, alpha_nodes, pinned_p0):
    """Best (tc, alpha, c0, p0) over the initialization grid.

    tc is the outer grid axis in ascending order, so the first minimum of
    the flattened objective (what argmin returns) is the smallest-tc tie.
    """
    n = len(t)
    tc = tc_nodes[:, None, None]
    alpha = alpha_nodes[None, :, None]
    g = _sing_basis(t[None, None, :], t0, tc, alpha)  # (n_tc, n_alpha, n)

    if pinned_p0 is None:
        sg = g.sum(axis=2)
        sgg = (g * g).sum(axis=2)
        sy = p.sum()
        sgy = g @ p
        den = n * sgg - sg ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            c0 = (n * sgy - sg * sy) / den
            p0 = (sy - c0 * sg) / n
        usable = den > 0
    else:
        q = p - pinned_p0
        sgg = (g * g).sum(axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            c0 = (g @ q) / sgg
        p0 = np.full_like(c0, pinned_p0)
        usable = sgg > 0

    resid = p[None, None, :] - (p0[..., None] + c0[..., None] * g)
    ssr = np.einsum("ijk,ijk->ij", resid, resid)
    feasible = usable & (c0 > 0) & np.isfinite(ssr)
    if feasible.any():
        masked = np.where(feasible, ssr, np.inf)
        i, j = np.unravel_index(np.argmin(masked), masked.shape)
        return float(tc_nodes[i]), float(alpha_nodes[j]), float(c0[i, j]), float(p0[i, j])
    # No node admits a positive C0 (for example globally deflationary data):
    # seed from the least-bad node with C0 clamped just above zero.
    masked = np.where(usable & np.isfinite(ssr), ssr, np.inf)
    i, j = np.unravel_index(np.argmin(masked), masked.shape)
    return float(tc_nodes[i]), float(alpha_nodes[j]), 1e-8, float(p[0])


def fit_singularity(
    index: PriceIndexSeries,
    config: FitConfig | None = None,
    window: tuple[Epoch | None, Epoch | None] | None = None,
) -> FitResult:
    """Fit the finite-time-singularity model to a log price index.

    Minimizes the squared log-price residuals over (tc, alpha, C0, p0)
    subject to tc beyond the last epoch, alpha > 0, C0 > 0.  p0 stays free
    by default: pinning it to the observed ln P(t0) fixes the curve at the
    first point and can bias tc, so that variant is opt-in via
    ``config.pin_p0``.
    """
    config = config or FitConfig()
    index = _windowed(index, window)
    t = index.times()
    p = index.log_index
    n = len(t)
    if n < 6:
        raise FitError(f"singularity fit needs at least 6 points, got {n}")
    if not np.all(np.diff(p[-4:]) > 0):
        warnings.warn(
            "log price index is not strictly increasing near the end of the "
            "window; the singular model may be inappropriate",
            stacklevel=2,
        )
    t0 = float(t[0])
    t_last = float(t[-1])
    tc_lo, tc_hi = tc_search_window(t, config)
    a_lo, a_hi = config.alpha_bounds

    tc_nodes = t_last + np.geomspace(tc_lo - t_last, tc_hi - t_last, config.grid_tc)
    alpha_nodes = np.geomspace(a_lo, a_hi, config.grid_alpha)
    pinned = float(p[0]) if config.pin_p0 else None
    tc_s, a_s, c0_s, p0_s = _sing_grid_seed(t, p, t0, tc_nodes, alpha_nodes, pinned)

    if pinned is None:
        x0 = np.array([tc_s, a_s, max(c0_s, 1e-12), p0_s])
        lb = np.array([tc_lo, a_lo, 1e-12, -np.inf])
        ub = np.array([tc_hi, a_hi, np.inf, np.inf])
    else:
        x0 = np.array([tc_s, a_s, max(c0_s, 1e-12)])
        lb = np.array([tc_lo, a_lo, 1e-12])
        ub = np.array([tc_hi, a_hi, np.inf])
    x0 = _clip_inside(x0, lb, ub)

    res = least_squares(
        lambda x: _sing_model_jac(x, t, t0, p, pinned)[0],
        x0,
        jac=lambda x: _sing_model_jac(x, t, t0, p, pinned)[1],
        bounds=(lb, ub),
        method="trf",
        xtol=config.xtol,
        ftol=config.ftol,
        gtol=1e-12,
        max_nfev=config.max_iter,
        x_scale="jac",
    )
    if pinned is None:
        tc, alpha, c0, p0 = res.x
    else:
        tc, alpha, c0 = res.x
        p0 = pinned
    params = SingularityParams(tc=float(tc), alpha=float(alpha), c0=float(c0),
                               p0=float(p0), t0=t0)
    resid = p - evaluate(params, t)
    k = 3 if config.pin_p0 else 4
    converged = bool(res.status > 0)
    return _result("singularity", params, resid, n, k, config.chi_divisor,
                   converged, int(res.nfev), pinned=config.pin_p0)


# ---------------------------------------------------------------------------
# Double-exponential model
# ---------------------------------------------------------------------------

def _dexp_basis(b2: float, x: np.ndarray) -> np.ndarray:
    """h(x) = expm1(b2 x) / b2, with the analytic b2 -> 0 limit h = x."""
    if b2 == 0.0:
        return x.astype(float)
    b2x = b2 * x
    if np.max(np.abs(b2x)) < 1e-8:
        # Series expansion: avoids amplified rounding in expm1(b2 x)/b2
        # derivatives downstream when b2 is tiny but nonzero.
        return x * (1.0 + b2x / 2.0 + b2x * b2x / 6.0)
    return np.expm1(b2x) / b2


def _dexp_model_jac(x_vec, x, p_data):
    b2, c0, p0 = x_vec
    b2x = b2 * x
    if b2 == 0.0 or np.max(np.abs(b2x)) < 1e-8:
        h = x * (1.0 + b2x / 2.0 + b2x * b2x / 6.0)
        dh = x * x / 2.0 * (1.0 + 2.0 * b2x / 3.0)
    else:
        e = np.exp(b2x)
        h = (e - 1.0) / b2
        dh = (x * e - h) / b2
    resid = p0 + c0 * h - p_data
    jac = np.column_stack([c0 * dh, h, np.ones_like(x)])
    return resid, jac


def fit_double_exp(
    index: PriceIndexSeries,
    config: FitConfig | None = None,
    window: tuple[Epoch | None, Epoch | None] | None = None,
) -> FitResult:
    """Fit the double-exponential model over (b2, C0, p0) with b2 >= 0.

    With ``config.pin_b2`` the acceleration is fixed at zero and the fit
    collapses to the closed-form linear solution (the Cagan limit).
    """
    config = config or FitConfig()
    index = _windowed(index, window)
    t = index.times()
    p = index.log_index
    n = len(t)
    if n < 6:
        raise FitError(f"double-exponential fit needs at least 6 points, got {n}")
    t0 = float(t[0])
    x = t - t0
    span = float(x[-1])
    if span <= 0:
        raise FitError("degenerate time values")

    if config.pin_b2:
        p0, c0, resid = _linear_ls(t, p, t0)
        params = DoubleExpParams(p0=p0, c0=c0, b2=0.0, t0=t0)
        return _result("doubleexp", params, resid, n, 2, config.chi_divisor, True, 0)

    b2_hi = config.b2_max if config.b2_max is not None else 20.0 / span
    b2_nodes = np.concatenate([[0.0], np.geomspace(1e-4 / span, b2_hi, config.grid_b2 - 1)])
    best = (np.inf, 0.0, 0.0, float(p[0]))
    for b2 in b2_nodes:
        h = _dexp_basis(float(b2), x)
        design = np.column_stack([np.ones_like(h), h])
        coef, *_ = np.linalg.lstsq(design, p, rcond=None)
        r = p - design @ coef
        ssr = float(r @ r)
        if ssr < best[0]:
            best = (ssr, float(b2), float(coef[1]), float(coef[0]))
    _, b2_s, c0_s, p0_s = best

    lb = np.array([0.0, -np.inf, -np.inf])
    ub = np.array([b2_hi, np.inf, np.inf])
    x0 = np.clip(np.array([b2_s, c0_s, p0_s]), lb, ub)
    res = least_squares(
        lambda v: _dexp_model_jac(v, x, p)[0],
        x0,
        jac=lambda v: _dexp_model_jac(v, x, p)[1],
        bounds=(lb, ub),
        method="trf",
        xtol=config.xtol,
        ftol=config.ftol,
        gtol=1e-12,
        max_nfev=config.max_iter,
        x_scale="jac",
    )
    b2, c0, p0 = (float(v) for v in res.x)
    params = DoubleExpParams(p0=p0, c0=c0, b2=b2, t0=t0)
    resid = p - evaluate(params, t)
    return _result("doubleexp", params, resid, n, 3, config.chi_divisor,
                   bool(res.status > 0), int(res.nfev))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def predict(fit: FitResult, t) -> float | np.ndarray:
    """Price index P(t) = exp(p_model(t)) from a fit result.

    For singularity fits the target must lie strictly before tc; at or
    beyond it the model has no finite price and a domain error is raised.
    """
    p = evaluate(fit.params, t)
    return np.exp(p) if isinstance(p, np.ndarray) else float(np.exp(p))
