"""Independent oracles shared across the test modules.

Everything here recomputes expected values through a different route than
the package: exhaustive state vectors, explicit loops, Taylor series.
"""

import numpy as np


def kron_by_hand(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product via explicit index loops."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1:
        out = np.zeros(a.size * b.size, dtype=complex)
        for i in range(a.size):
            for j in range(b.size):
                out[i * b.size + j] = a[i] * b[j]
        return out
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(b.shape[0]):
                for l in range(b.shape[1]):
                    out[i * b.shape[0] + k, j * b.shape[1] + l] = a[i, j] * b[k, l]
    return out


def expm_series(a: np.ndarray, terms: int = 60) -> np.ndarray:
    """Matrix exponential by Taylor series."""
    a = np.asarray(a, dtype=complex)
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def ghz_group_bit_prob_statevector(n: int, theta: float, beta: float) -> float:
    """P(odd number of -1 readings) for a GHZ group, by exhaustive state vector.

    The group state is (|0..0> + e^{-i theta} |1..1>)/sqrt(2); each probe is
    read in the eigenbasis of [[0, e^{i beta}], [e^{-i beta}, 0]], whose -1
    eigenvector is (|0> - e^{-i beta}|1>)/sqrt(2).
    """
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1 / np.sqrt(2)
    state[-1] = np.exp(-1j * theta) / np.sqrt(2)
    plus = np.array([1.0, np.exp(-1j * beta)]) / np.sqrt(2)
    minus = np.array([1.0, -np.exp(-1j * beta)]) / np.sqrt(2)
    basis = np.stack([plus, minus], axis=1)  # columns: +1 then -1 eigenvector
    rot = np.eye(1, dtype=complex)
    for _ in range(n):
        rot = np.kron(rot, basis.conj().T)
    amps = rot @ state
    probs = np.abs(amps) ** 2
    odd = 0.0
    for idx in range(2**n):
        if bin(idx).count("1") % 2 == 1:
            odd += probs[idx]
    return float(odd)


def qcp_distribution_statevector(L: int, W: float, phi: float) -> np.ndarray:
    """Exact outcome law by chaining exhaustive group simulations."""
    n_out = 2**L
    p = np.zeros(n_out)
    for m in range(n_out):
        prob = 1.0
        for l in range(L):
            n_l = 2 ** (L - 1 - l)
            beta = 2 * np.pi * (m % (1 << l)) / n_out
            p_one = ghz_group_bit_prob_statevector(n_l, n_l * W * phi, beta)
            bit = (m >> l) & 1
            prob *= p_one if bit else 1.0 - p_one
        p[m] = prob
    return p


def mi_by_direct_sum(cond: np.ndarray, weights: np.ndarray) -> float:
    """Mutual information by looping over the joint table (nats)."""
    p_m = weights @ cond
    total = 0.0
    for k in range(cond.shape[0]):
        for m in range(cond.shape[1]):
            if cond[k, m] > 0 and p_m[m] > 0:
                total += weights[k] * cond[k, m] * np.log(cond[k, m] / p_m[m])
    return float(total)
