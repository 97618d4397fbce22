"""Central numerical tolerance record.

Every module reads its defaults from the single ``TOL`` instance so that
validation thresholds stay consistent across the package and can be tightened
or relaxed in one place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    state_norm: float = 1e-12       # |  ||psi|| - 1  | for pure states
    hermitian: float = 1e-12        # ||A - A^dag||_2
    unitary: float = 1e-10          # ||U^dag U - 1||_2
    psd_floor: float = 1e-10        # min eigenvalue of a POVM element > -psd_floor
    completeness: float = 1e-10     # ||sum_m pi_m - 1||_2
    eig_residual: float = 1e-10     # ||A v - lambda v|| / ||A||
    prob_clip: float = 1e-12        # negative probabilities above -prob_clip clip to 0
    prob_sum: float = 1e-10         # | sum_m p(m|x) - 1 |
    marginal_sum: float = 1e-8      # | sum_m p_m - 1 | after quadrature
    prior_norm: float = 1e-8        # | integral of the prior - 1 |
    commuting: float = 1e-10        # ||[H_i, H_j]||_2 for multi-parameter channels
    rank_one: float = 1e-10         # subdominant eigenvalue of a rank-one element
    log_floor: float = 1e-300       # probability floor inside logarithms
    dim_cap: int = 4096             # largest composite dimension built densely
    node_cap: int = 2**22           # largest quadrature node count


TOL = Tolerances()
