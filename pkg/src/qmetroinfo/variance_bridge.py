"""Bridge between the variance picture and the information picture.

Repeated estimation produces, for each true parameter value, ``r``
independent estimates whose average is close to Gaussian by the central
limit theorem.  That Gaussian conditional law turns a variance profile
``Delta(phi)`` into a conditional differential entropy in closed form, and a
variance lower bound of the form ``Delta >= 1 / (sqrt(s) W N^alpha)`` into an
upper bound on the mutual information between estimate and parameter.  This
module simulates the estimation pipeline, evaluates the closed forms, and
checks the bounds empirically.

Averages of estimates are taken linearly, which is only meaningful when the
estimates never wrap around the phase circle; simulations therefore restrict
the prior to a window that is narrow compared to the unambiguous range
``2 pi / W`` and re-center raw estimates on that window.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, xlogy

from .exceptions import ResourceLimitError, UnsupportedConfigurationError, ValidationError
from .infomeasure import (
    DiscretePrior,
    Prior,
    Quadrature,
    Strategy,
    build_quadrature,
    cond_prob_matrix,
    prior_entropy,
    prior_weights,
)
from .qcp_strategy import QcpConfig
from .tolerances import TOL


# --------------------------------------------------------------------------
# estimator models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianEstimator:
    """Synthetic estimator: s-point estimates are N(phi, delta^2) draws.

    Bypasses the quantum layer; ``delta`` may be a constant or a callable
    ``phi -> Delta(phi)``.
    """

    delta: float | object = 1.0

    def delta_at(self, phi: float) -> float:
        d = self.delta(phi) if callable(self.delta) else float(self.delta)
        if d <= 0:
            raise ValidationError("estimator spread must be positive")
        return d


@dataclass(frozen=True)
class GridMlEstimator:
    """Maximum likelihood over a parameter grid for a generic strategy."""

    strategy: Strategy
    channel: object
    n_probes: int
    grid: Quadrature

    def log_likelihood_table(self) -> np.ndarray:
        p = cond_prob_matrix(self.strategy, self.channel, self.grid, self.n_probes)
        return np.log(np.maximum(p, TOL.log_floor))


@dataclass(frozen=True)
class EstimatorRun:
    """r repeated estimates at one true parameter value."""

    phi_true: float
    s: int
    r: int
    estimates: np.ndarray
    mean: float       # the averaged estimate
    delta: float      # root-mean-square error of single estimates
    sigma: float      # delta / sqrt(r), spread of the average

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValidationError("repetitions and data points per estimate must be >= 1")
        if not np.isfinite(self.sigma):
            raise ValidationError("estimator spread is not finite")


def _recenter(values: np.ndarray, center: float, period: float) -> np.ndarray:
    """Representative of each value in the window of one period around center."""
    return center + np.mod(values - center + period / 2.0, period) - period / 2.0


def qcp_estimate_batch(
    cfg: QcpConfig,
    phi_true: float,
    n_estimates: int,
    s: int,
    seed,
    *,
    window_center: float | None = None,
) -> np.ndarray:
    """Independent phase estimates, each from ``s`` outcome samples.

    Outcomes map to comb angles ``2 pi m / (N + 1)``; an s-sample circular
    mean gives the raw phase, which is re-centered on the window so that
    linear averaging downstream is wrap-free.
    """
    if s < 1 or n_estimates < 1:
        raise ValidationError("need at least one sample and one estimate")
    rng = np.random.default_rng(seed)
    Np = cfg.outcome_count
    m = np.zeros((n_estimates, s), dtype=np.int64)
    for l in range(cfg.L):
        n_l = 2 ** (cfg.L - 1 - l)
        beta = 2.0 * np.pi * m / Np
        p1 = (1.0 - np.cos(n_l * (cfg.W * phi_true - beta))) / 2.0
        bits = rng.random((n_estimates, s)) < p1
        m += bits.astype(np.int64) << l
    angles = 2.0 * np.pi * m / Np
    mean_vec = np.exp(1j * angles).mean(axis=1)
    raw = np.angle(mean_vec) / cfg.W
    center = phi_true if window_center is None else window_center
    return _recenter(raw, center, 2.0 * np.pi / cfg.W)


def _gaussian_estimate_batch(est: GaussianEstimator, phi_true, n, rng) -> np.ndarray:
    return phi_true + est.delta_at(phi_true) * rng.standard_normal(n)


def _ml_estimate_batch(est: GridMlEstimator, phi_true, n, s, rng) -> np.ndarray:
    table = est.log_likelihood_table()                     # (K, M)
    p_true = cond_prob_matrix(
        est.strategy, est.channel, Quadrature(np.array([phi_true]), np.array([1.0])),
        est.n_probes,
    )[0]
    draws = rng.choice(p_true.size, size=(n, s), p=p_true / p_true.sum())
    nodes = np.asarray(est.grid.nodes, dtype=float)
    out = np.empty(n)
    for i in range(n):
        counts = np.bincount(draws[i], minlength=p_true.size)
        out[i] = nodes[np.argmax(table @ counts)]
    return out


def simulate_estimates(
    model,
    phi_true: float,
    s: int,
    r: int,
    seed,
    *,
    window_center: float | None = None,
    prior_width: float | None = None,
    allow_wrap: bool = False,
) -> EstimatorRun:
    """Run ``r`` independent estimations of ``phi_true``, each from ``s`` data points.

    ``model`` is a ``QcpConfig``, a ``GaussianEstimator`` or a
    ``GridMlEstimator``.  When ``prior_width`` is given and exceeds the
    wrap-safe limit ``pi / W`` for a phase-periodic model, the run is refused
    unless ``allow_wrap`` is set, because linear averaging of wrapped
    estimates is meaningless.
    """
    if isinstance(model, QcpConfig) and prior_width is not None and not allow_wrap:
        if prior_width > np.pi / model.W:
            raise UnsupportedConfigurationError(
                f"prior window {prior_width} exceeds the wrap-safe limit {np.pi / model.W}; "
                "pass allow_wrap=True to override"
            )
    rng = np.random.default_rng(seed)
    if isinstance(model, QcpConfig):
        estimates = qcp_estimate_batch(
            model, phi_true, r, s, rng, window_center=window_center
        )
    elif isinstance(model, GaussianEstimator):
        estimates = _gaussian_estimate_batch(model, phi_true, r, rng)
    elif isinstance(model, GridMlEstimator):
        estimates = _ml_estimate_batch(model, phi_true, r, s, rng)
    else:
        raise ValidationError(f"unsupported estimator model {type(model).__name__}")
    delta = float(np.sqrt(np.mean((estimates - phi_true) ** 2)))
    return EstimatorRun(
        phi_true=float(phi_true),
        s=s,
        r=r,
        estimates=estimates,
        mean=float(estimates.mean()),
        delta=delta,
        sigma=delta / np.sqrt(r),
    )


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------

def gaussian_conditional_entropy(
    r: int, delta_values: np.ndarray, prior: Prior, quad: Quadrature
) -> float:
    """Conditional entropy (nats) of an r-fold averaged Gaussian estimate.

    ``(1/2) ln(2 pi e / r) + int dphi q(phi) ln Delta(phi)`` for the
    conditional law N(phi, Delta(phi)^2 / r); ``delta_values`` holds
    Delta(phi) on the quadrature nodes.
    """
    delta_values = np.asarray(delta_values, dtype=float)
    if np.any(delta_values <= 0):
        raise ValidationError("Delta(phi) must be positive on the prior support")
    wq = prior_weights(prior, quad)
    if delta_values.shape != wq.shape:
        raise ValidationError("delta_values must be given on the quadrature nodes")
    return float(0.5 * np.log(2.0 * np.pi * np.e / r) + wq @ np.log(delta_values))


def mi_upper_bound(
    s: int,
    w_width: float,
    n_probes: int,
    alpha: float,
    h_prior: float,
    *,
    mode: str = "repeated",
    r: int = 1,
    eps: float = 0.0,
) -> float:
    """Information ceiling implied by a variance floor ``1/(sqrt(s) W N^alpha)``.

    mode "repeated": ``ln(sqrt(r s) W N^alpha) + H(prior)`` for r averaged
    repetitions.  mode "epsilon": ``ln(sqrt(s^(1+eps)) W N^alpha) + H(prior)``,
    the single-run form with a small exponent slack; equal to the repeated
    form under ``r = s^eps`` (e.g. eps = ln(ln s)/ln s gives r = ln s).
    """
    if min(s, n_probes, r) < 1 or w_width <= 0 or alpha <= 0:
        raise ValidationError("bound arguments must be positive")
    if mode == "repeated":
        data_term = 0.5 * np.log(r * s)
    elif mode == "epsilon":
        data_term = 0.5 * (1.0 + eps) * np.log(s)
    else:
        raise ValidationError(f"unknown bound mode {mode!r}")
    return float(data_term + np.log(w_width) + alpha * np.log(n_probes) + h_prior)


# --------------------------------------------------------------------------
# empirical information estimates
# --------------------------------------------------------------------------

def histogram_entropy(samples: np.ndarray, bin_width: float) -> float:
    """Plug-in differential entropy from an equal-width histogram (nats)."""
    samples = np.asarray(samples, dtype=float)
    if bin_width <= 0:
        raise ValidationError("bin width must be positive")
    edges = np.arange(samples.min(), samples.max() + 2 * bin_width, bin_width)
    counts, _ = np.histogram(samples, bins=edges)
    p = counts[counts > 0] / samples.size
    return float(-(p * np.log(p)).sum() + np.log(bin_width))


@dataclass(frozen=True)
class MiEstimate:
    value: float
    spread: float     # |value - half-bin-width re-estimate|, a bias indicator
    bin_width: float


def _axis_codes(x: np.ndarray, bin_width: float) -> np.ndarray:
    uniq = np.unique(x)
    if uniq.size <= max(2, int(np.sqrt(x.size) / 2)):
        return np.searchsorted(uniq, x)
    return np.floor((x - x.min()) / bin_width).astype(np.int64)


def _plugin_mi(phi: np.ndarray, est: np.ndarray, bin_width: float) -> float:
    ci = _axis_codes(phi, bin_width)
    cj = _axis_codes(est, bin_width)
    n = phi.size
    width = int(cj.max()) + 1
    if (int(ci.max()) + 1) * width > 5 * 10**7:
        raise ResourceLimitError("histogram for the information estimate would be too fine")
    pair = ci.astype(np.int64) * width + cj
    counts = np.bincount(pair)
    counts = counts[counts > 0]
    pi = np.bincount(ci) / n
    pj = np.bincount(cj) / n
    joint_term = float((counts / n) @ np.log(counts / n))
    return joint_term - float(xlogy(pi, pi).sum()) - float(xlogy(pj, pj).sum())


def empirical_mi(
    phi: np.ndarray,
    est: np.ndarray,
    *,
    bin_width: float | None = None,
    sigmas: np.ndarray | None = None,
) -> MiEstimate:
    """Plug-in histogram estimate of the information between phi and estimate.

    The default bin width is a quarter of the smallest conditional spread
    (``min(sigma)/4`` when the per-run spreads are passed, otherwise a
    quarter of the residual standard deviation).  The same estimate at half
    the bin width is reported as a bias-awareness spread.  Degenerate samples
    (all equal) give 0 with a warning.
    """
    phi = np.asarray(phi, dtype=float)
    est = np.asarray(est, dtype=float)
    if phi.shape != est.shape or phi.ndim != 1:
        raise ValidationError("phi and est must be matching 1-d sample arrays")
    if np.ptp(est) == 0 or np.ptp(phi) == 0:
        warnings.warn("degenerate samples; empirical information is 0", stacklevel=2)
        return MiEstimate(value=0.0, spread=0.0, bin_width=0.0)
    if bin_width is None:
        if sigmas is not None:
            base = float(np.min(sigmas))
        else:
            base = float(np.std(est - phi))
        if base <= 0:
            base = float(np.std(est))
        bin_width = base / 4.0
        # keep the joint histogram within a fixed cell budget; a width driven
        # by one near-degenerate run would swamp the sample count otherwise
        floor = float(np.sqrt(max(np.ptp(phi) * np.ptp(est), 1e-300) / 4e6))
        bin_width = max(bin_width, floor)
    mi = _plugin_mi(phi, est, bin_width)
    mi_half = _plugin_mi(phi, est, bin_width / 2.0)
    return MiEstimate(value=float(mi), spread=float(abs(mi_half - mi)), bin_width=bin_width)


# --------------------------------------------------------------------------
# scaling fits and bound checks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit: exponent alpha, additive constant, per-point residuals."""

    alpha: float
    constant: float
    residuals: np.ndarray
    model: str


def fit_scaling(n_values, y_values, model: str = "variance") -> ScalingFit:
    """Least squares on ln-transformed scaling data.

    model "variance": ``ln y = c - alpha ln N`` (spread shrinking with N);
    model "information": ``y = alpha ln N + c`` (information growing with N).
    """
    n_values = np.asarray(n_values, dtype=float)
    y_values = np.asarray(y_values, dtype=float)
    if n_values.size < 3 or n_values.size != y_values.size:
        raise ValidationError("need at least three (N, y) points")
    if np.any(n_values <= 0):
        raise ValidationError("N values must be positive")
    x = np.log(n_values)
    if model == "variance":
        if np.any(y_values <= 0):
            raise ValidationError("variance data must be positive")
        y = np.log(y_values)
        slope, const = np.polyfit(x, y, 1)
        resid = y - (slope * x + const)
        return ScalingFit(alpha=float(-slope), constant=float(const), residuals=resid, model=model)
    if model == "information":
        slope, const = np.polyfit(x, y_values, 1)
        resid = y_values - (slope * x + const)
        return ScalingFit(alpha=float(slope), constant=float(const), residuals=resid, model=model)
    raise ValidationError(f"unknown scaling model {model!r}")


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    margin: float


def bound_check(
    phi: np.ndarray,
    est: np.ndarray,
    prior: Prior,
    *,
    s: int,
    w_width: float,
    n_probes: int,
    alpha: float,
    r: int = 1,
    mode: str = "repeated",
    eps: float = 0.0,
    sigmas: np.ndarray | None = None,
) -> BoundReport:
    """Empirical information vs the variance-implied ceiling.

    ``lhs`` is the histogram estimate of the information carried by the
    averaged estimates about the parameter; ``rhs`` the closed-form ceiling
    with the prior entropy computed from ``prior``.  ``satisfied`` allows a
    statistical margin of three times the histogram bias spread.
    """
    h_prior = prior_entropy(prior)
    rhs = mi_upper_bound(
        s, w_width, n_probes, alpha, h_prior, mode=mode, r=r, eps=eps
    )
    est_mi = empirical_mi(phi, est, sigmas=sigmas)
    margin = 3.0 * est_mi.spread
    return BoundReport(
        lhs=est_mi.value,
        rhs=rhs,
        satisfied=bool(est_mi.value <= rhs + margin),
        slack=float(rhs - est_mi.value),
        margin=float(margin),
    )


def ks_distance_to_normal(samples: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of standardized samples to N(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float))
    x = (x - x.mean()) / x.std()
    cdf = ndtr(x)
    n = x.size
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))
