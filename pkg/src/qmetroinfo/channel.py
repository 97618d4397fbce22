"""Parameter-imprinting unitary channels and their spectral metadata.

A channel maps a real parameter vector ``phi`` to the unitary
``U_phi = exp(-i sum_i phi_i H_i)`` acting on one probe, with Hermitian
generators ``H_i``.  Multi-parameter channels are supported when the
generators commute, so that a common eigenbasis exists and the exponential is
unambiguous.  The common eigenbasis is computed once and cached on the
channel, because evaluation loops call ``unitary_at`` at every quadrature
node.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .exceptions import DimensionCapError, UnsupportedConfigurationError, ValidationError
from .tolerances import TOL


def _common_eigenbasis(generators: np.ndarray, atol: float) -> tuple[np.ndarray, np.ndarray]:
    """Simultaneously diagonalize a commuting Hermitian family.

    Returns ``(levels, basis)`` with ``levels[i]`` the eigenvalues of
    ``generators[i]`` in the columns-of-``basis`` order.
    """
    n, d, _ = generators.shape
    basis = np.eye(d, dtype=complex)
    # refine the basis one generator at a time, splitting degenerate blocks
    blocks = [np.arange(d)]
    for i in range(n):
        new_blocks = []
        for blk in blocks:
            sub = basis[:, blk].conj().T @ generators[i] @ basis[:, blk]
            w, v = qcore.eigh(sub, atol=max(atol, 1e-9 * max(1.0, qcore.spectral_norm(sub))))
            basis[:, blk] = basis[:, blk] @ v
            # group near-equal eigenvalues into blocks for the next generator
            start = 0
            for j in range(1, blk.size + 1):
                if j == blk.size or w[j] - w[start] > 1e-8 * max(1.0, abs(w[start])):
                    new_blocks.append(blk[start:j])
                    start = j
        blocks = new_blocks
    levels = np.stack(
        [np.real(np.einsum("ji,jk,ki->i", basis.conj(), generators[i], basis)) for i in range(n)]
    )
    return levels, basis


@dataclass(frozen=True)
class ParamChannel:
    """Unitary parameter channel ``phi -> exp(-i sum_i phi_i H_i)``.

    ``generators`` is a ``(n, d, d)`` stack of Hermitian matrices.  The
    cached fields hold the common eigenbasis (``basis`` is None when every
    generator is diagonal, in which case the standard basis is used).
    """

    generators: np.ndarray
    levels: np.ndarray = field(init=False, repr=False)
    basis: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=complex)
        if g.ndim == 2:
            g = g[None, :, :]
        if g.ndim != 3 or g.shape[1] != g.shape[2] or g.shape[0] < 1:
            raise ValidationError(f"generators must be (n, d, d), got {g.shape}")
        for i in range(g.shape[0]):
            qcore.hermitian(g[i])
        for i in range(g.shape[0]):
            for j in range(i + 1, g.shape[0]):
                comm = g[i] @ g[j] - g[j] @ g[i]
                if qcore.spectral_norm(comm) > TOL.commuting:
                    raise UnsupportedConfigurationError(
                        f"generators {i} and {j} do not commute; "
                        "multi-parameter channels require commuting generators"
                    )
        object.__setattr__(self, "generators", g.copy())
        self.generators.setflags(write=False)
        off = max(
            qcore.spectral_norm(g[i] - np.diag(np.diag(g[i]))) for i in range(g.shape[0])
        )
        if off <= TOL.hermitian:
            levels = np.real(np.einsum("nii->ni", g)).copy()
            basis = None
        else:
            levels, basis = _common_eigenbasis(g, TOL.hermitian)
            basis.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "basis", basis)

    @property
    def n_params(self) -> int:
        return self.generators.shape[0]

    @property
    def probe_dim(self) -> int:
        return self.generators.shape[1]


def qubit_phase() -> ParamChannel:
    """Two-level phase channel with generator diag(0, 1)."""
    return ParamChannel(np.diag([0.0, 1.0]).astype(complex))


def equal_ladder(d: int) -> ParamChannel:
    """d-level channel with equally spaced levels ``2 pi k``, k = 0..d-1."""
    if d < 2:
        raise ValidationError("equal ladder needs d >= 2")
    return ParamChannel(np.diag(2.0 * np.pi * np.arange(d)).astype(complex))


def identity_channel(d: int = 2) -> ParamChannel:
    """Channel whose unitary is the identity for every parameter value."""
    return ParamChannel(np.zeros((d, d), dtype=complex))


def _phases(ch: ParamChannel, phi: np.ndarray) -> np.ndarray:
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if phi.size != ch.n_params:
        raise ValidationError(
            f"parameter vector has {phi.size} entries, channel expects {ch.n_params}"
        )
    return phi @ ch.levels  # (d,) accumulated eigenphases


def unitary_at(ch: ParamChannel, phi) -> np.ndarray:
    """The channel unitary at parameter value ``phi``."""
    theta = _phases(ch, phi)
    diag = np.exp(-1j * theta)
    if ch.basis is None:
        return np.diag(diag)
    return (ch.basis * diag[None, :]) @ ch.basis.conj().T


def parallel_unitary(ch: ParamChannel, phi, n_probes: int, *, dim_cap: int = TOL.dim_cap) -> np.ndarray:
    """N-fold tensor power of ``unitary_at`` on the joint probe space."""
    if n_probes < 1:
        raise ValidationError("probe count must be >= 1")
    dim = ch.probe_dim**n_probes
    if dim > dim_cap:
        raise DimensionCapError(f"parallel dimension {dim} exceeds cap {dim_cap}")
    u = unitary_at(ch, phi)
    out = u
    for _ in range(n_probes - 1):
        out = np.kron(out, u)
    return out


def parallel_phase_basis(ch: ParamChannel, n_probes: int, *, dim_cap: int = TOL.dim_cap):
    """Eigen-description of the N-probe channel.

    Returns ``(levels, basis)`` where ``levels`` is ``(n_params, d**N)`` so
    that ``U_phi^(xN) = basis @ diag(exp(-i phi . levels)) @ basis^dag``
    (``basis`` is None when the generators are diagonal).  Lets callers
    evaluate many parameter values without re-exponentiating matrices.
    """
    dim = ch.probe_dim**n_probes
    if dim > dim_cap:
        raise DimensionCapError(f"parallel dimension {dim} exceeds cap {dim_cap}")
    lev = ch.levels
    out = lev
    for _ in range(n_probes - 1):
        out = (out[:, :, None] + lev[:, None, :]).reshape(lev.shape[0], -1)
    if ch.basis is None:
        return out, None
    basis = ch.basis
    full = basis
    for _ in range(n_probes - 1):
        full = np.kron(full, basis)
    return out, full


def spectrum_width(h: np.ndarray) -> float:
    """Width ``lambda_max - lambda_min`` of a Hermitian spectrum."""
    w, _ = qcore.eigh(h)
    return float(w[-1] - w[0])
