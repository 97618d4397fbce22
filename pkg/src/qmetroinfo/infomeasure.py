"""Priors, quadrature and the Shannon information functionals.

All information quantities are in nats (natural logarithm) and all angles in
radians.  Probabilities hitting zero follow the continuity convention
``0 ln 0 = 0``; conditionals are clipped at zero before any logarithm.

Quadrature-node evaluations are vectorized numpy operations, and reductions
use numpy's pairwise summation, so results are bit-stable for a fixed node
count.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import xlogy

from . import channel as channel_mod
from . import qcore
from .exceptions import ResourceLimitError, ValidationError
from .tolerances import TOL


# --------------------------------------------------------------------------
# priors
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformPrior:
    """Uniform density on the interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not np.isfinite(self.lo) or not np.isfinite(self.hi) or self.hi <= self.lo:
            raise ValidationError(f"invalid uniform prior bounds [{self.lo}, {self.hi}]")

    n_params = 1

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / self.width, 0.0)


@dataclass(frozen=True)
class TabulatedPrior:
    """Piecewise-linear density through (nodes, values), normalized on build."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or values.shape != nodes.shape:
            raise ValidationError("tabulated prior needs matching 1-d nodes and values")
        if np.any(np.diff(nodes) <= 0):
            raise ValidationError("tabulated prior nodes must be strictly increasing")
        if np.any(values < 0):
            raise ValidationError("tabulated prior density must be nonnegative")
        total = np.trapezoid(values, nodes)
        if total <= 0:
            raise ValidationError("tabulated prior has zero mass")
        object.__setattr__(self, "nodes", nodes.copy())
        object.__setattr__(self, "values", (values / total).copy())
        self.nodes.setflags(write=False)
        self.values.setflags(write=False)

    n_params = 1

    @property
    def lo(self) -> float:
        return float(self.nodes[0])

    @property
    def hi(self) -> float:
        return float(self.nodes[-1])

    def density(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.nodes, self.values, left=0.0, right=0.0)


@dataclass(frozen=True)
class DiscretePrior:
    """Probability masses on a finite set of parameter points.

    ``points`` is ``(K,)`` for one parameter or ``(K, n)`` for n parameters.
    """

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        ms = np.asarray(self.masses, dtype=float)
        if pts.ndim not in (1, 2) or ms.ndim != 1 or ms.size != pts.shape[0]:
            raise ValidationError("discrete prior needs (K,) or (K, n) points and (K,) masses")
        if np.any(ms < 0):
            raise ValidationError("discrete prior masses must be nonnegative")
        if abs(ms.sum() - 1.0) > TOL.prior_norm:
            raise ValidationError(f"discrete prior masses sum to {ms.sum()}, expected 1")
        object.__setattr__(self, "points", pts.copy())
        object.__setattr__(self, "masses", ms.copy())
        self.points.setflags(write=False)
        self.masses.setflags(write=False)

    @property
    def n_params(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]


Prior = UniformPrior | TabulatedPrior | DiscretePrior


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Quadrature:
    """Nodes and positive weights realizing the prior integral."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or nodes.shape[0] != weights.size:
            raise ValidationError("quadrature nodes and weights disagree in length")
        if np.any(weights <= 0):
            raise ValidationError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes.copy())
        object.__setattr__(self, "weights", weights.copy())
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.weights.size


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _panels_to_quadrature(edges: np.ndarray, order: int) -> Quadrature:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    x, w = _GL_CACHE[order]
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return Quadrature(nodes=nodes, weights=weights)


def build_quadrature(
    prior: Prior,
    *,
    oscillation_scale: float = 1.0,
    min_nodes: int = 0,
    nodes_per_panel: int = 16,
    node_cap: int = TOL.node_cap,
) -> Quadrature:
    """Composite Gauss-Legendre rule resolving an oscillatory integrand.

    ``oscillation_scale`` is the angular frequency of the fastest factor the
    integrand contains (metrology integrands pass ``(N + 1) * W``); one panel
    of ``nodes_per_panel`` Gauss-Legendre nodes is laid per oscillation
    period, which comfortably exceeds the two-nodes-per-period floor.
    ``min_nodes`` can force a finer rule.  Deterministic for fixed inputs.
    """
    if isinstance(prior, DiscretePrior):
        return Quadrature(nodes=prior.points, weights=np.ones(prior.masses.size))
    lo, hi = prior.lo, prior.hi
    width = hi - lo
    periods = width * abs(oscillation_scale) / (2.0 * np.pi)
    n_panels = max(1, int(np.ceil(periods)))
    if min_nodes > 0:
        n_panels = max(n_panels, int(np.ceil(min_nodes / nodes_per_panel)))
    if n_panels * nodes_per_panel > node_cap:
        raise ResourceLimitError(
            f"{n_panels * nodes_per_panel} quadrature nodes exceed cap {node_cap}"
        )
    edges = np.linspace(lo, hi, n_panels + 1)
    if isinstance(prior, TabulatedPrior):
        # align panel edges with the tabulation kinks so each panel is smooth
        edges = np.unique(np.concatenate([edges, prior.nodes]))
    return _panels_to_quadrature(edges, nodes_per_panel)


def prior_weights(prior: Prior, quad: Quadrature) -> np.ndarray:
    """Combined weights ``w_k q(phi_k)``; validates normalization."""
    if isinstance(prior, DiscretePrior):
        if quad.node_count != prior.masses.size:
            raise ValidationError("quadrature does not match the discrete prior points")
        wq = quad.weights * prior.masses
    else:
        wq = quad.weights * prior.density(quad.nodes)
    total = float(wq.sum())
    if abs(total - 1.0) > TOL.prior_norm:
        raise ValidationError(f"prior integrates to {total}, expected 1 within {TOL.prior_norm}")
    return wq


# --------------------------------------------------------------------------
# strategies and probabilities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Strategy:
    """An initial probe state paired with a POVM on the same space.

    ``initial`` may be a pure state vector or a density matrix; the optimizer
    only searches pure states, but the evaluation operations accept mixtures.
    """

    initial: np.ndarray
    povm: qcore.Povm

    def __post_init__(self):
        init = np.asarray(self.initial, dtype=complex)
        if init.ndim == 1:
            init = qcore.pure_state(init)
        elif init.ndim == 2:
            init = qcore.density_operator(init)
        else:
            raise ValidationError("initial must be a state vector or a density matrix")
        if init.shape[0] != self.povm.dim:
            raise ValidationError(
                f"initial dimension {init.shape[0]} does not match POVM dimension {self.povm.dim}"
            )
        object.__setattr__(self, "initial", init)

    @property
    def is_pure(self) -> bool:
        return self.initial.ndim == 1

    @property
    def dim(self) -> int:
        return self.povm.dim


def _clip_probs(p: np.ndarray) -> np.ndarray:
    if np.any(p < -TOL.prob_clip):
        raise ValidationError(f"probability {p.min()} below clipping tolerance")
    return np.maximum(p, 0.0)


def cond_prob(strategy: Strategy, ch: channel_mod.ParamChannel, phi, n_probes: int) -> np.ndarray:
    """Outcome distribution ``p(m | phi) = tr(pi_m U rho U^dag)``."""
    u = channel_mod.parallel_unitary(ch, phi, n_probes)
    if u.shape[0] != strategy.dim:
        raise ValidationError(
            f"channel dimension {u.shape[0]} does not match strategy dimension {strategy.dim}"
        )
    if strategy.is_pure:
        out = u @ strategy.initial
        p = np.real(np.einsum("j,mjk,k->m", out.conj(), strategy.povm.elements, out))
    else:
        rho = u @ strategy.initial @ u.conj().T
        p = np.real(np.einsum("mjk,kj->m", strategy.povm.elements, rho))
    p = _clip_probs(p)
    if abs(p.sum() - 1.0) > TOL.prob_sum:
        raise ValidationError(f"conditional probabilities sum to {p.sum()}")
    return p


def cond_prob_matrix(
    strategy: Strategy, ch: channel_mod.ParamChannel, quad: Quadrature, n_probes: int
) -> np.ndarray:
    """Stack ``p(m | phi_k)`` over quadrature nodes, shape ``(K, M)``.

    Uses the cached channel eigenbasis so the per-node work is a couple of
    matrix-vector products rather than a fresh matrix exponential.
    """
    levels, basis = channel_mod.parallel_phase_basis(ch, n_probes)
    if levels.shape[1] != strategy.dim:
        raise ValidationError(
            f"channel dimension {levels.shape[1]} does not match strategy dimension {strategy.dim}"
        )
    nodes = np.asarray(quad.nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    theta = nodes @ levels  # (K, D)
    phases = np.exp(-1j * theta)
    if strategy.is_pure:
        psi = strategy.initial if basis is None else basis.conj().T @ strategy.initial
        amp = phases * psi[None, :]
        if basis is not None:
            amp = amp @ basis.T
        w = strategy.povm.rank_one_vectors()
        if w is not None:
            p = np.abs(amp @ w.conj()) ** 2
        else:
            p = np.real(np.einsum("kj,mjl,kl->km", amp.conj(), strategy.povm.elements, amp))
    else:
        rho = strategy.initial if basis is None else basis.conj().T @ strategy.initial @ basis
        rot = phases[:, :, None] * rho[None, :, :] * phases.conj()[:, None, :]
        if basis is not None:
            rot = np.einsum("ij,kjl,ml->kim", basis, rot, basis.conj())
        p = np.real(np.einsum("mjl,klj->km", strategy.povm.elements, rot))
    p = _clip_probs(p)
    sums = p.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > TOL.prob_sum:
        raise ValidationError("conditional probabilities do not sum to 1 across nodes")
    return p


def marginal_prob(
    strategy: Strategy,
    ch: channel_mod.ParamChannel,
    prior: Prior,
    quad: Quadrature,
    n_probes: int,
) -> np.ndarray:
    """Average outcome distribution ``p_m`` under the prior."""
    wq = prior_weights(prior, quad)
    p = wq @ cond_prob_matrix(strategy, ch, quad, n_probes)
    if abs(p.sum() - 1.0) > TOL.marginal_sum:
        raise ValidationError(f"marginal probabilities sum to {p.sum()}")
    return p


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats with the 0 ln 0 = 0 convention."""
    return float(-xlogy(p, p).sum())


def mutual_information(
    strategy: Strategy,
    ch: channel_mod.ParamChannel,
    prior: Prior,
    quad: Quadrature,
    n_probes: int,
) -> float:
    """Mutual information (nats) between the outcome and the parameter."""
    wq = prior_weights(prior, quad)
    p = cond_prob_matrix(strategy, ch, quad, n_probes)
    p_m = wq @ p
    mi = entropy(p_m) - float(wq @ (-xlogy(p, p).sum(axis=1)))
    m_outcomes = p.shape[1]
    if mi < -1e-9 or mi > np.log(m_outcomes) + 1e-9:
        raise ValidationError(f"mutual information {mi} outside [0, ln M]")
    return mi


def prior_entropy(prior: Prior, quad: Quadrature | None = None) -> float:
    """Entropy of the prior: Shannon for discrete, differential otherwise."""
    if isinstance(prior, DiscretePrior):
        return entropy(prior.masses)
    if quad is None:
        quad = build_quadrature(prior)
    q = prior.density(quad.nodes)
    return float(-(quad.weights * xlogy(q, q)).sum())
