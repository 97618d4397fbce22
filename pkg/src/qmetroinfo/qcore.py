"""Dense complex vectors and operators at small dimension.

States and operators are plain ``numpy`` arrays; this module supplies the
constructors and validators that give them their quantum meaning (unit norm,
Hermiticity, unitarity, POVM structure), plus the handful of primitives the
rest of the package is built on: Kronecker products, a phase-fixed Hermitian
eigendecomposition, GHZ states and POVM validation.

All values returned here are immutable (arrays are marked non-writeable) and
all functions are pure, so everything is safe to share across workers.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionCapError, ValidationError
from .tolerances import TOL


def spectral_norm(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_operator(entries) -> np.ndarray:
    """Coerce to a square complex matrix."""
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValidationError("operator has non-finite entries")
    return a


def pure_state(entries, *, atol: float = TOL.state_norm) -> np.ndarray:
    """Validate a unit-norm complex vector and return it (non-writeable)."""
    v = np.asarray(entries, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"expected a 1-d state vector, got shape {v.shape}")
    if not np.all(np.isfinite(v.view(float))):
        raise ValidationError("state has non-finite entries")
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > atol:
        raise ValidationError(f"state norm {nrm} deviates from 1 by more than {atol}")
    return _freeze(v.copy())


def hermitian(entries, *, atol: float = TOL.hermitian) -> np.ndarray:
    """Validate Hermiticity and return the matrix (non-writeable)."""
    a = as_operator(entries)
    defect = spectral_norm(a - a.conj().T)
    if defect > atol:
        raise ValidationError(f"Hermiticity defect {defect} exceeds {atol}")
    return _freeze(a.copy())


def unitary(entries, *, atol: float = TOL.unitary) -> np.ndarray:
    """Validate unitarity and return the matrix (non-writeable)."""
    a = as_operator(entries)
    defect = spectral_norm(a.conj().T @ a - np.eye(a.shape[0]))
    if defect > atol:
        raise ValidationError(f"unitarity defect {defect} exceeds {atol}")
    return _freeze(a.copy())


def density_operator(entries, *, atol: float = TOL.completeness) -> np.ndarray:
    """Validate a density operator (Hermitian, PSD, unit trace)."""
    a = hermitian(entries, atol=atol)
    ev = np.linalg.eigvalsh(a)
    if ev[0] < -TOL.psd_floor:
        raise ValidationError(f"density operator has negative eigenvalue {ev[0]}")
    tr = float(np.real(np.trace(a)))
    if abs(tr - 1.0) > atol:
        raise ValidationError(f"density operator trace {tr} deviates from 1")
    return a


def tensor(*factors, dim_cap: int = TOL.dim_cap) -> np.ndarray:
    """Kronecker product of vectors or of square matrices.

    The output dimension is the product of the factor dimensions and must not
    exceed ``dim_cap``.
    """
    if not factors:
        raise ValidationError("tensor needs at least one factor")
    dim = 1
    for f in factors:
        a = np.asarray(f)
        dim *= a.shape[0]
    if dim > dim_cap:
        raise DimensionCapError(f"tensor dimension {dim} exceeds cap {dim_cap}")
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def eigh(a: np.ndarray, *, atol: float = TOL.hermitian) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix with a deterministic gauge.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and the
    global phase of each eigenvector fixed so that its largest-modulus entry
    is real and positive.
    """
    a = hermitian(a, atol=atol)
    w, v = np.linalg.eigh(a)
    # phase gauge: largest-modulus entry of each column made real positive
    idx = np.argmax(np.abs(v), axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    phases = lead / np.abs(lead)
    v = v * phases.conj()[None, :]
    return w, v


def ghz_state(n: int, phase: float, dim: int = 2, *, dim_cap: int = TOL.dim_cap) -> np.ndarray:
    """Equal superposition of the all-ground and all-top product states.

    ``(|0...0> + e^{-i phase} |t...t>)/sqrt(2)`` on ``n`` probes of ``dim``
    levels, where level 0 is the ground state and level ``dim - 1`` the
    highest one.
    """
    if n < 1:
        raise ValidationError("probe count must be >= 1")
    if dim < 2:
        raise ValidationError("probe dimension must be >= 2")
    total = dim**n
    if total > dim_cap:
        raise DimensionCapError(f"GHZ dimension {total} exceeds cap {dim_cap}")
    v = np.zeros(total, dtype=complex)
    v[0] = 1.0 / np.sqrt(2.0)
    v[-1] = np.exp(-1j * phase) / np.sqrt(2.0)
    return _freeze(v)


@dataclass(frozen=True)
class Povm:
    """A positive operator-valued measure as a stack of matrices.

    ``elements`` has shape ``(M, D, D)``.  ``vectors`` is set when the POVM is
    rank-one and holds the scaled element vectors ``w_m`` (columns of a
    ``(D, M)`` matrix) with ``pi_m = w_m w_m^dag``.
    """

    elements: np.ndarray
    vectors: np.ndarray | None = None

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2]:
            raise ValidationError(f"POVM elements must be (M, D, D), got {el.shape}")
        for m in range(el.shape[0]):
            defect = spectral_norm(el[m] - el[m].conj().T)
            if defect > TOL.hermitian * max(1.0, spectral_norm(el[m])):
                raise ValidationError(f"POVM element {m} is not Hermitian (defect {defect})")
            ev_min = float(np.linalg.eigvalsh(el[m])[0])
            if ev_min < -TOL.psd_floor:
                raise ValidationError(f"POVM element {m} has negative eigenvalue {ev_min}")
        defect = spectral_norm(el.sum(axis=0) - np.eye(el.shape[1]))
        if defect > TOL.completeness:
            raise ValidationError(f"POVM completeness defect {defect} exceeds {TOL.completeness}")
        object.__setattr__(self, "elements", _freeze(el.copy()))
        if self.vectors is not None:
            w = np.asarray(self.vectors, dtype=complex)
            if w.shape != (el.shape[1], el.shape[0]):
                raise ValidationError(f"POVM vectors must be (D, M), got {w.shape}")
            object.__setattr__(self, "vectors", _freeze(w.copy()))

    @property
    def outcome_count(self) -> int:
        return self.elements.shape[0]

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @classmethod
    def from_vectors(cls, vectors) -> "Povm":
        """Rank-one POVM ``pi_m = w_m w_m^dag`` from the columns of ``vectors``."""
        w = np.asarray(vectors, dtype=complex)
        if w.ndim != 2:
            raise ValidationError("vectors must form a (D, M) matrix")
        elements = np.einsum("im,jm->mij", w, w.conj())
        return cls(elements=elements, vectors=w)

    @classmethod
    def projective(cls, basis) -> "Povm":
        """Orthogonal rank-one POVM from the columns of a unitary ``basis``."""
        return cls.from_vectors(unitary(basis))

    def rank_one_vectors(self) -> np.ndarray | None:
        """Columns ``w_m`` with ``pi_m = w_m w_m^dag``, or None if not rank-one."""
        if self.vectors is not None:
            return self.vectors
        cols = []
        for m in range(self.outcome_count):
            w, v = eigh(self.elements[m])
            if w[-1] < 0 or (self.elements[m].shape[0] > 1 and abs(w[-2]) > TOL.rank_one):
                return None
            cols.append(np.sqrt(max(w[-1], 0.0)) * v[:, -1])
        return np.stack(cols, axis=1)


@dataclass(frozen=True)
class PovmReport:
    """Report of ``validate_povm`` (all defects in spectral norm)."""

    positivity_defect: float
    completeness_defect: float
    rank_one: bool
    orthogonality_defect: float

    @property
    def orthogonal(self) -> bool:
        return self.orthogonality_defect < TOL.completeness


def orthogonality_defect(povm: Povm) -> float:
    """max over outcome pairs of || pi_m pi_m' - delta_mm' pi_m ||."""
    el = povm.elements
    worst = 0.0
    for m in range(el.shape[0]):
        for mp in range(el.shape[0]):
            prod = el[m] @ el[mp]
            if m == mp:
                prod = prod - el[m]
            worst = max(worst, spectral_norm(prod))
    return worst


def validate_povm(povm: Povm) -> PovmReport:
    """Report positivity, completeness, rank-one status and orthogonality."""
    el = povm.elements
    pos = 0.0
    rank_one = True
    for m in range(el.shape[0]):
        ev = np.linalg.eigvalsh(el[m])
        pos = max(pos, float(max(0.0, -ev[0])))
        if el.shape[1] > 1 and abs(ev[-2]) > TOL.rank_one:
            rank_one = False
    comp = spectral_norm(el.sum(axis=0) - np.eye(el.shape[1]))
    return PovmReport(
        positivity_defect=pos,
        completeness_defect=comp,
        rank_one=rank_one,
        orthogonality_defect=orthogonality_defect(povm),
    )


def orthonormal_complement(psi: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the subspace orthogonal to ``psi``.

    Returns a ``(D, D-1)`` matrix with orthonormal columns, built by
    Gram-Schmidt over the standard basis.
    """
    psi = np.asarray(psi, dtype=complex)
    d = psi.size
    basis = [psi / np.linalg.norm(psi)]
    for j in range(d):
        cand = np.zeros(d, dtype=complex)
        cand[j] = 1.0
        for b in basis:
            cand = cand - b * (b.conj() @ cand)
        nrm = np.linalg.norm(cand)
        if nrm > 1e-8:
            basis.append(cand / nrm)
        if len(basis) == d:
            break
    return np.stack(basis[1:], axis=1)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph = ph / np.abs(ph)
    return q * ph[None, :]


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (z + z.conj().T) / 2.0
