"""Search for maximum-information strategies and certify stationarity.

The search runs over pure initial states and rank-one complete POVMs, the
class in which an information-optimal strategy always exists.  A rank-one
POVM with elements ``pi_m = w_m w_m^dag`` embeds into an orthogonal
measurement on probes (x) auxiliary: orthonormal vectors ``v_m`` whose
auxiliary-reference blocks are the ``w_m``.  In a variational setup over two
unitaries (one rotating the probe state, one rotating the embedded
measurement), the first-order change of the mutual information under
Hermitian generators ``g`` (probes) and ``h`` (composite) is

    dH = tr(G_I g) + tr(G_M h)

with ``G_I = -i int dphi q(phi) sum_m ln[p_m / p(m|phi)] [A_m(phi), rho_0]``
(``A_m = U^dag pi_m U`` on the probes) and ``G_M`` its composite-space
counterpart built from the evolved state and the projectors ``|v_m><v_m|``.
Both vanish at an information-optimal strategy; their matrix elements are the
stationarity residuals reported by ``povm_condition_residual`` (off-diagonal
measurement blocks) and ``state_condition_residual`` (components orthogonal
to the initial state).  These conditions are necessary, not sufficient, so
``optimize_strategy`` ascends from multiple seeded Haar-random restarts.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from . import channel as channel_mod
from . import infomeasure, qcore
from .exceptions import (
    DimensionCapError,
    ResourceLimitError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .infomeasure import Prior, Quadrature, Strategy
from .tolerances import TOL


# --------------------------------------------------------------------------
# dilation of a rank-one POVM into an orthogonal measurement
# --------------------------------------------------------------------------

def _canonical_dilation_frame(w: np.ndarray) -> np.ndarray:
    """Orthonormal composite vectors ``v_m`` with auxiliary-0 blocks ``w_m``.

    ``w`` is ``(D, M)`` with ``w w^dag = 1`` (completeness).  The composite
    space is probes (x) auxiliary with index ``i * M + a``; the residual
    blocks are filled from the PSD square root of ``1 - w^dag w``, the exact
    freedom the embedding leaves open.
    """
    d, m_out = w.shape
    if m_out < 2:
        raise UnsupportedConfigurationError("an orthogonal embedding needs at least two outcomes")
    gram = w.conj().T @ w
    rest = np.eye(m_out) - gram
    ev, vec = np.linalg.eigh((rest + rest.conj().T) / 2.0)
    root = (vec * np.sqrt(np.maximum(ev, 0.0))[None, :]) @ vec.conj().T
    vmat = np.zeros((d * m_out, m_out), dtype=complex)
    vmat[0::m_out, :] = w  # auxiliary index 0 blocks
    for c in range(m_out):
        aux = 1 + c % (m_out - 1)
        probe = c // (m_out - 1)
        vmat[probe * m_out + aux, :] = root[c, :]
    return vmat


def dilation_vectors(povm: qcore.Povm) -> np.ndarray:
    """Composite frame ``(D*M, M)`` embedding a rank-one complete POVM."""
    w = povm.rank_one_vectors()
    if w is None:
        raise UnsupportedConfigurationError("POVM is not rank-one")
    return _canonical_dilation_frame(w)


def _complete_frame(frame: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal completion of a column frame."""
    dim, k = frame.shape
    held = [frame[:, j] for j in range(k)]
    out = []
    for j in range(dim):
        cand = np.zeros(dim, dtype=complex)
        cand[j] = 1.0
        for b in held:
            cand = cand - b * (b.conj() @ cand)
        for b in out:
            cand = cand - b * (b.conj() @ cand)
        nrm = np.linalg.norm(cand)
        if nrm > 1e-10:
            out.append(cand / nrm)
        if k + len(out) == dim:
            break
    return np.stack(out, axis=1) if out else np.zeros((dim, 0), dtype=complex)


def dilate_povm(povm: qcore.Povm) -> tuple[np.ndarray, np.ndarray]:
    """Embed a rank-one POVM as an orthogonal measurement with an auxiliary.

    Returns ``(V, vmat)``: ``V`` is a unitary on probes (x) auxiliary acting
    on the auxiliary reference level as

        V (|psi> (x) |a_0>) = sum_m (w_m^dag psi) |u_m> (x) |a_m>,

    and the columns of ``vmat`` are the orthogonal measurement vectors
    ``v_m = V^dag (|u_m> (x) |a_m>)``, which reproduce the POVM statistics on
    any probe state tensored with the auxiliary reference.
    """
    w = povm.rank_one_vectors()
    if w is None:
        raise UnsupportedConfigurationError("POVM is not rank-one")
    d, m_out = w.shape
    dim = d * m_out
    if dim > TOL.dim_cap:
        raise DimensionCapError(f"dilated dimension {dim} exceeds cap {TOL.dim_cap}")
    lam = np.linalg.norm(w, axis=0) ** 2
    if np.any(lam <= TOL.rank_one):
        raise ValidationError("POVM has a vanishing element; its direction is undefined")
    u = w / np.sqrt(lam)[None, :]
    vmat = _canonical_dilation_frame(w)
    targets = np.zeros((dim, m_out), dtype=complex)
    for m in range(m_out):
        targets[m::m_out, m] = u[:, m]  # |u_m> (x) |a_m>
    v_rest = _complete_frame(vmat)
    t_rest = _complete_frame(targets)
    v_full = targets @ vmat.conj().T + t_rest @ v_rest.conj().T
    return qcore.unitary(v_full), vmat


# --------------------------------------------------------------------------
# evaluation context shared by gradients, residuals and the optimizer
# --------------------------------------------------------------------------

class _EvalContext:
    """Per-instance precomputation: channel unitaries and prior weights."""

    def __init__(self, ch, prior, quad, n_probes):
        self.wq = infomeasure.prior_weights(prior, quad)
        nodes = np.asarray(quad.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        levels, basis = channel_mod.parallel_phase_basis(ch, n_probes)
        dim = levels.shape[1]
        if nodes.shape[0] * dim * dim > 2**26:
            raise ResourceLimitError(
                "dense per-node unitaries would exceed the memory budget; "
                "use a coarser quadrature or a smaller probe space"
            )
        phases = np.exp(-1j * (nodes @ levels))  # (K, D)
        if basis is None:
            self.unitaries = phases[:, :, None] * np.eye(dim)[None, :, :]
        else:
            self.unitaries = np.einsum("id,kd,jd->kij", basis, phases, basis.conj())
        self.dim = dim

    def amplitudes(self, psi: np.ndarray) -> np.ndarray:
        """Evolved states U_k psi, shape (K, D)."""
        return np.einsum("kij,j->ki", self.unitaries, psi)


def _log_ratio(p_m: np.ndarray, p: np.ndarray) -> np.ndarray:
    """ln(p_m / p(m|phi)) with probabilities floored inside the logs."""
    return np.log(np.maximum(p_m, TOL.log_floor))[None, :] - np.log(np.maximum(p, TOL.log_floor))


def _rank_one_vectors_or_raise(povm: qcore.Povm) -> np.ndarray:
    w = povm.rank_one_vectors()
    if w is None:
        raise UnsupportedConfigurationError("operation requires a rank-one POVM")
    return w


def _pieces(ctx: _EvalContext, psi: np.ndarray, w: np.ndarray):
    """Intermediates at one iterate: amplitudes, probabilities, logs, z.

    ``z = sum_k wq_k sum_m L[k,m] a[k,m] U_k^dag w_m`` is the state-side
    integral applied to the initial state (``L = ln(p_m / p(m|phi))``).
    """
    amp = ctx.amplitudes(psi)          # (K, D)
    a = amp @ w.conj()                 # a[k, m] = w_m^dag U_k psi
    p = np.abs(a) ** 2
    p_m = ctx.wq @ p
    logr = _log_ratio(p_m, p)          # (K, M)
    bc = w @ (logr * a).T              # (D, K)
    z = np.einsum("k,kji,jk->i", ctx.wq, ctx.unitaries.conj(), bc)
    return amp, a, p, p_m, logr, z


def _mi_from(ctx: _EvalContext, a: np.ndarray) -> float:
    """Mutual information from the amplitude table a[k, m]."""
    p = np.abs(a) ** 2
    p_m = ctx.wq @ p
    return float(ctx.wq @ xlogy(p, p).sum(axis=1) - xlogy(p_m, p_m).sum())


def _povm_residual_matrix(ctx: _EvalContext, amp: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Stationarity residual magnitudes of the measurement conditions."""
    lam = np.linalg.norm(w, axis=0) ** 2
    alive = lam > TOL.rank_one
    u = np.where(alive[None, :], w / np.sqrt(np.maximum(lam, TOL.rank_one))[None, :], 0.0)
    a_u = amp @ u.conj()               # a_u[k, m] = u_m^dag U_k psi
    p = np.abs(amp @ w.conj()) ** 2
    p_m = ctx.wq @ p
    ell = -_log_ratio(p_m, p)          # ln p(m|phi_k) - ln p_m
    weighted = ctx.wq[:, None] * a_u
    term1 = (weighted * ell).T @ a_u.conj()
    term2 = weighted.T @ (ell * a_u.conj())
    res = np.abs(term2 - term1)
    res[~alive, :] = 0.0
    res[:, ~alive] = 0.0
    bad = alive & (p_m <= 0.0) & ((ctx.wq @ (p > 0.0)) > 0.0)
    if np.any(bad):
        res[bad, :] = np.inf
        res[:, bad] = np.inf
    np.fill_diagonal(res, 0.0)
    return res


# --------------------------------------------------------------------------
# public residuals and gradient
# --------------------------------------------------------------------------

def povm_condition_residual(
    strategy: Strategy, ch, prior: Prior, quad: Quadrature, n_probes: int
) -> np.ndarray:
    """Measurement-side stationarity residual magnitudes, shape (M, M).

    Entry (m, m') is the modulus of
    ``int dphi q(phi) <u_m|rho_phi|u_m'> ln[p_m p(m'|phi) / (p_m' p(m|phi))]``
    with unit-normalized element directions ``u_m`` and the element weights
    absorbed into the probabilities.  The diagonal is zero, the matrix of
    moduli is symmetric, and every entry vanishes at an information-optimal
    strategy.  Outcomes whose element vanishes identically carry no
    information and give zero rows and columns; a zero marginal paired with a
    nonzero conditional is reported as an infinite residual.
    """
    if not strategy.is_pure:
        raise UnsupportedConfigurationError("residuals are defined for pure initial states")
    w = _rank_one_vectors_or_raise(strategy.povm)
    ctx = _EvalContext(ch, prior, quad, n_probes)
    if ctx.dim != strategy.dim:
        raise ValidationError("channel and strategy dimensions disagree")
    amp = ctx.amplitudes(strategy.initial)
    return _povm_residual_matrix(ctx, amp, w)


def state_condition_residual(
    strategy: Strategy, ch, prior: Prior, quad: Quadrature, n_probes: int
) -> np.ndarray:
    """State-side stationarity residual magnitudes, shape (D - 1,).

    Component j is ``|<perp_j| T |psi_0>|`` over a deterministic orthonormal
    completion of the initial state, where T integrates
    ``ln[p_m / p(m|phi)] U^dag pi_m U`` against the prior.  All components
    vanish at an information-optimal strategy.
    """
    if not strategy.is_pure:
        raise UnsupportedConfigurationError("residuals are defined for pure initial states")
    w = _rank_one_vectors_or_raise(strategy.povm)
    ctx = _EvalContext(ch, prior, quad, n_probes)
    if ctx.dim != strategy.dim:
        raise ValidationError("channel and strategy dimensions disagree")
    _, _, _, _, _, z = _pieces(ctx, strategy.initial, w)
    perp = qcore.orthonormal_complement(strategy.initial)
    return np.abs(perp.conj().T @ z)


def orthogonality_check(povm: qcore.Povm) -> float:
    """max over pairs of ``||pi_m pi_m' - delta_mm' pi_m||`` (0 iff orthogonal)."""
    return qcore.orthogonality_defect(povm)


def mi_gradient(
    strategy: Strategy, ch, prior: Prior, quad: Quadrature, n_probes: int
) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian ascent generators (G_I on probes, G_M on probes (x) auxiliary).

    Along the curves ``psi(t) = exp(-i t g) psi`` and
    ``v_m(t) = exp(-i t h) v_m``, with ``v_m`` the canonical embedding frame
    of the rank-one POVM (see ``dilation_vectors``), the mutual information
    satisfies ``dH/dt|_0 = tr(G_I g) + tr(G_M h)``.
    """
    if not strategy.is_pure:
        raise UnsupportedConfigurationError("the gradient is defined for pure initial states")
    w = _rank_one_vectors_or_raise(strategy.povm)
    d, m_out = w.shape
    if d * m_out > TOL.dim_cap:
        raise DimensionCapError(f"dilated dimension {d * m_out} exceeds cap {TOL.dim_cap}")
    ctx = _EvalContext(ch, prior, quad, n_probes)
    if ctx.dim != strategy.dim:
        raise ValidationError("channel and strategy dimensions disagree")
    psi = strategy.initial
    amp, a, p, p_m, logr, z = _pieces(ctx, psi, w)
    g_i = -1j * (np.outer(z, psi.conj()) - np.outer(psi, z.conj()))
    vmat = _canonical_dilation_frame(w)
    comp = np.zeros((amp.shape[0], d * m_out), dtype=complex)
    comp[:, 0::m_out] = amp            # evolved composite states live on auxiliary level 0
    chi = (logr * a) @ vmat.T
    wx = ctx.wq[:, None] * comp
    wy = ctx.wq[:, None] * chi
    g_m = -1j * (wx.T @ chi.conj() - wy.T @ comp.conj())
    return g_i, g_m


# --------------------------------------------------------------------------
# optimizer
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OptimizeOptions:
    restarts: int = 16
    max_iters: int = 2000
    step_init: float = 0.5
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_grow: float = 1.3
    residual_tol: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        if min(self.restarts, self.max_iters) < 1:
            raise ValidationError("restarts and max_iters must be positive")
        if min(self.step_init, self.armijo_c1) <= 0:
            raise ValidationError("step and Armijo constants must be positive")
        if not (0 < self.armijo_shrink < 1 <= self.armijo_grow):
            raise ValidationError("need 0 < shrink < 1 <= grow")
        if self.residual_tol < 1e-10:
            raise ValidationError("residual tolerance must be >= 1e-10")


@dataclass(frozen=True)
class OptimumReport:
    strategy: Strategy
    mi: float
    povm_residual: float
    state_residual: float
    orthogonality_defect: float
    iterations: int
    converged: bool
    restarts: int
    best_seed: int
    povm_linearly_independent: bool


def _complete_vectors(b: np.ndarray) -> np.ndarray:
    """Project POVM vectors back onto the completeness manifold w w^dag = 1."""
    s = b @ b.conj().T
    ev, vec = np.linalg.eigh((s + s.conj().T) / 2.0)
    inv_root = (vec / np.sqrt(np.maximum(ev, 1e-300))[None, :]) @ vec.conj().T
    return inv_root @ b


def _stiefel_polar(a: np.ndarray) -> np.ndarray:
    """Nearest matrix with orthonormal columns (polar factor)."""
    u, _, vh = np.linalg.svd(a, full_matrices=False)
    return u @ vh


def _run_restart(
    ctx: _EvalContext, m_out: int, opts: OptimizeOptions, seed: int, trace: list | None = None
):
    rng = np.random.default_rng(seed)
    d = ctx.dim
    psi = qcore.haar_state(d, rng)
    b = qcore.haar_unitary(m_out, rng)[:d, :]
    mi = _mi_from(ctx, ctx.amplitudes(psi) @ b.conj())
    if trace is not None:
        trace.append(mi)
    step = opts.step_init
    iters = 0
    converged = False
    for iters in range(1, opts.max_iters + 1):
        amp, a, p, p_m, logr, z = _pieces(ctx, psi, b)
        res4 = float(_povm_residual_matrix(ctx, amp, b).max(initial=0.0))
        zeta = z - psi * np.vdot(psi, z)   # tangent part; <psi|z> is real
        res5 = float(np.linalg.norm(zeta))
        if res4 < opts.residual_tol and res5 < opts.residual_tol:
            converged = True
            iters -= 1
            break
        # ascent directions: d psi = -i G_I psi = -zeta ; dV = -i t G_M V
        vmat = _canonical_dilation_frame(b)
        la = logr * a
        comp = np.zeros((amp.shape[0], d * m_out), dtype=complex)
        comp[:, 0::m_out] = amp
        chi = la @ vmat.T
        gmv = -1j * (
            (ctx.wq[:, None] * comp).T @ la.conj() - (ctx.wq[:, None] * chi).T @ a.conj()
        )  # G_M vmat
        grad2 = float(2.0 * res5**2 + np.linalg.norm(vmat.conj().T @ gmv) ** 2)
        if grad2 < 1e-28:
            break
        t = step
        accepted = False
        for _ in range(60):
            psi_c = psi - t * zeta
            psi_c = psi_c / np.linalg.norm(psi_c)
            v_c = _stiefel_polar(vmat - 1j * t * gmv)
            b_c = _complete_vectors(v_c[0::m_out, :])
            mi_c = _mi_from(ctx, ctx.amplitudes(psi_c) @ b_c.conj())
            if mi_c >= mi + opts.armijo_c1 * t * grad2:
                psi, b, mi = psi_c, b_c, mi_c
                step = min(t * opts.armijo_grow, 64.0)
                accepted = True
                if trace is not None:
                    trace.append(mi)
                break
            t *= opts.armijo_shrink
        if not accepted:
            break
    if not converged:
        amp, *_ = _pieces(ctx, psi, b)
        res4 = float(_povm_residual_matrix(ctx, amp, b).max(initial=0.0))
        _, _, _, _, _, z = _pieces(ctx, psi, b)
        res5 = float(np.linalg.norm(z - psi * np.vdot(psi, z)))
        converged = res4 < opts.residual_tol and res5 < opts.residual_tol
    return psi, b, mi, iters, converged


def optimize_strategy(
    ch,
    prior: Prior,
    quad: Quadrature,
    n_probes: int,
    m_outcomes: int,
    opts: OptimizeOptions = OptimizeOptions(),
    *,
    threads: int = 1,
) -> OptimumReport:
    """Best-of-restarts gradient ascent over (pure state, rank-one POVM).

    Each restart draws a Haar-random state and measurement frame, then takes
    additive Hermitian-generator steps followed by a polar retraction and a
    completeness restoration, with Armijo backtracking on the mutual
    information.  Restart results merge deterministically by (information
    descending, seed ascending).  ``m_outcomes`` must be at least the
    probe-space dimension: a rank-one POVM with fewer outcomes cannot resolve
    the identity.  Overcomplete measurements (more outcomes than dimensions)
    are supported.
    """
    ctx = _EvalContext(ch, prior, quad, n_probes)
    d = ctx.dim
    if m_outcomes < d:
        raise UnsupportedConfigurationError(
            f"rank-one completeness needs at least {d} outcomes, got {m_outcomes}"
        )
    if d * m_outcomes > TOL.dim_cap:
        raise DimensionCapError("dilated search space exceeds the dimension cap")
    seeds = [opts.seed + 1000003 * r for r in range(opts.restarts)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda s: _run_restart(ctx, m_outcomes, opts, s), seeds))
    else:
        results = [_run_restart(ctx, m_outcomes, opts, s) for s in seeds]
    best = min(range(len(seeds)), key=lambda i: (-results[i][2], seeds[i]))
    psi, b, mi, iters, converged = results[best]
    povm = qcore.Povm.from_vectors(b)
    strategy = Strategy(initial=psi, povm=povm)
    res4 = povm_condition_residual(strategy, ch, prior, quad, n_probes)
    res5 = state_condition_residual(strategy, ch, prior, quad, n_probes)
    flat = povm.elements.reshape(m_outcomes, -1)
    independent = np.linalg.matrix_rank(flat, tol=1e-10) == m_outcomes
    return OptimumReport(
        strategy=strategy,
        mi=mi,
        povm_residual=float(res4.max(initial=0.0)),
        state_residual=float(res5.max(initial=0.0)),
        orthogonality_defect=orthogonality_check(povm),
        iterations=iters,
        converged=bool(converged),
        restarts=opts.restarts,
        best_seed=seeds[best],
        povm_linearly_independent=bool(independent),
    )
