"""Brute-force order check on a two-site system over all up-sets of X^2.

For localized two-site systems with generators L~ (lower) and L (upper),
the lower system is dominated iff for every pair of configurations
xi <= eta and every up-set V with 1_V(xi) = 1_V(eta)

    (L~ 1_V)(xi) <= (L 1_V)(eta).

Up-sets of the grid {0..M}^2 are generated from their antichains of
minimal elements.  All arithmetic is on integers (rates scaled by a common
denominator) held in numpy object arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StateSpaceTooLarge
from .rates import LocalizedPair, System, canonicalize, common_denominator

DEFAULT_MAX_STATE = 4


def grid_antichains(M):
    """Antichains of {0..M}^2 as tuples of points with a increasing, b decreasing."""
    out = []

    def grow(chain, a_min, b_max):
        out.append(tuple(chain))
        for a in range(a_min, M + 1):
            for b in range(b_max, -1, -1):
                chain.append((a, b))
                grow(chain, a + 1, b - 1)
                chain.pop()

    grow([], 0, M)
    return out


def upset_matrix(M):
    """(antichains, U) with U[v, s] = 1 iff state s = a*(M+1)+b lies in up-set v."""
    chains = grid_antichains(M)
    side = M + 1
    U = np.zeros((len(chains), side * side), dtype=np.int64)
    for v, chain in enumerate(chains):
        for a0, b0 in chain:
            for a in range(a0, side):
                U[v, a * side + b0: a * side + side] = 1
    return chains, U


def generator_matrix(spec, M, scale):
    """Integer two-site generator (times scale) on the grid {0..M}^2."""
    side = M + 1
    Q = np.zeros((side * side, side * side), dtype=object)
    Q[:, :] = 0
    for a in spec.values:
        for b in spec.values:
            s = a * side + b
            for k in range(1, spec.k_max + 1):
                moves = (
                    (spec.gamma(k, a, b), a - k, b + k),
                    (spec.pi_birth(k, a, b), a, b + k),
                    (spec.pi_death(k, a, b), a - k, b),
                )
                for rate, a2, b2 in moves:
                    if rate and 0 <= a2 <= spec.state_max and 0 <= b2 <= spec.state_max:
                        r = int(rate * scale)
                        Q[s, a2 * side + b2] += r
                        Q[s, s] -= r
    return Q


@dataclass
class OracleResult:
    ordered: bool
    counterexample: tuple = None  # (xi, eta, antichain of V)
    upsets_checked: int = 0
    pairs_checked: int = 0

    def to_dict(self):
        out = {"ordered": self.ordered, "upsets": self.upsets_checked, "pairs": self.pairs_checked}
        if self.counterexample is not None:
            xi, eta, chain = self.counterexample
            out["counterexample"] = {"xi": list(xi), "eta": list(eta),
                                     "upset_minimal": [list(p) for p in chain]}
        return out


def _as_spec(obj, which):
    if isinstance(obj, LocalizedPair):
        return obj.effective(which)
    if isinstance(obj, System):
        return obj.rates
    return obj


def oracle_increasing_sets(lower, upper=None, max_state=DEFAULT_MAX_STATE):
    """Check the generator inequality on every up-set; returns an OracleResult.

    Accepts two RateSpecs (the kernel weight cancels) or a single
    LocalizedPair, whose weighted lower and upper systems are compared.
    """
    if upper is None and isinstance(lower, LocalizedPair):
        lower, upper = lower.effective("lower"), lower.effective("upper")
    lower = canonicalize(_as_spec(lower, "lower"))
    upper = canonicalize(_as_spec(upper, "upper"))
    M = max(lower.state_max, upper.state_max)
    if M > max_state:
        raise StateSpaceTooLarge(f"state_max {M} exceeds the oracle cap {max_state}")
    side = M + 1
    scale = common_denominator(lower, upper)
    chains, U = upset_matrix(M)
    Ut = U.T.astype(object)
    A = generator_matrix(lower, M, scale).dot(Ut)
    B = generator_matrix(upper, M, scale).dot(Ut)
    n_pairs = 0
    for a in lower.values:
        for b in lower.values:
            xi = a * side + b
            for c in range(a, upper.state_max + 1):
                for d in range(b, upper.state_max + 1):
                    eta = c * side + d
                    n_pairs += 1
                    same = U[:, xi] == U[:, eta]
                    bad = np.nonzero(same & (A[xi] > B[eta]).astype(bool))[0]
                    if bad.size:
                        return OracleResult(False, ((a, b), (c, d), chains[bad[0]]), len(chains), n_pairs)
    return OracleResult(True, None, len(chains), n_pairs)


__all__ = ["grid_antichains", "upset_matrix", "generator_matrix", "OracleResult",
           "oracle_increasing_sets"]
