"""u-criterion for the individual-recovery epidemic model.

With m = max(lam, beta) the weight sequence is

    u_0 = U,
    u_l = ( -eps * sum_{j<l} u_j - U*m*2d*l + l*u_{l-1} ) / (phi*l),   l = 1..M,

and the criterion asks, for every l,

    phi*l*u_l - l*u_{l-1} <= -eps * sum_{j<l} u_j - ubar*m*2d*l,   u_l > 0,

with ubar = max_l u_l.  A passing sequence defines the metric
F(x, y) = sum_{j < |y-x|} u_j on {0..M}, under which the coupled dynamics
contracts.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import BadParams, PhiOutOfRange, PhiZero
from .rates import fraction_str, to_fraction

MODES = ("proof_supported", "theorem_text")
GRID_STEPS = 60
GRID_MIN = Fraction(1, 10**6)


@dataclass(frozen=True)
class EpidemicParams:
    lam: Fraction
    beta: Fraction
    gamma: Fraction
    phi: Fraction
    M: int
    d: int = 1

    def __post_init__(self):
        for name in ("lam", "beta", "gamma", "phi"):
            v = to_fraction(getattr(self, name))
            if v < 0:
                raise BadParams(f"{name} must be >= 0")
            object.__setattr__(self, name, v)
        if int(self.M) != self.M or self.M < 1:
            raise BadParams("M must be an integer >= 1")
        if int(self.d) != self.d or self.d < 1:
            raise BadParams("d must be an integer >= 1")

    @property
    def rate(self):
        """max(lam, beta)."""
        return max(self.lam, self.beta)


@dataclass(frozen=True)
class USequence:
    U: Fraction
    epsilon: Fraction
    u: tuple

    @property
    def ubar(self):
        return max(self.u)

    def to_list(self):
        return [fraction_str(x) for x in self.u]


def _check_phi(params):
    if params.phi >= 1:
        raise PhiOutOfRange(f"phi must be < 1, got {fraction_str(params.phi)}")


def threshold(params):
    """(1 - phi) / (2d (1 - phi^M))."""
    _check_phi(params)
    phi = params.phi
    return (1 - phi) / (2 * params.d * (1 - phi ** params.M))


def crude_threshold(params):
    """(1 - phi) / (2d), the limit of ``threshold`` as M grows."""
    _check_phi(params)
    return (1 - params.phi) / (2 * params.d)


def u_sequence(params, epsilon, U=Fraction(1)):
    if params.phi == 0:
        raise PhiZero("the recursion divides by phi; use constant_sequence for phi = 0")
    eps, U = to_fraction(epsilon), to_fraction(U)
    if eps <= 0 or U <= 0:
        raise BadParams("epsilon and U must be > 0")
    c = params.rate * 2 * params.d
    u = [U]
    total = U
    for l in range(1, params.M + 1):
        nxt = (-eps * total - U * c * l + l * u[-1]) / (params.phi * l)
        u.append(nxt)
        total += nxt
    return USequence(U, eps, tuple(u))


def constant_sequence(params, U=Fraction(1)):
    """u = U constant with the largest epsilon it allows, 1 - phi - 2d*max(lam, beta)."""
    U = to_fraction(U)
    eps = 1 - params.phi - 2 * params.d * params.rate
    return USequence(U, eps, (U,) * (params.M + 1))


def check_u_criterion(params, useq):
    u, eps = useq.u, useq.epsilon
    if eps <= 0 or len(u) != params.M + 1:
        return False
    if any(x <= 0 for x in u):
        return False
    ubar = max(u)
    c = params.rate * 2 * params.d
    total = Fraction(0)
    for l in range(1, params.M + 1):
        total += u[l - 1]
        if params.phi * l * u[l] - l * u[l - 1] > -eps * total - ubar * c * l:
            return False
    return True


def epsilon_grid(params, eps_min=GRID_MIN, eps_max=None, steps=GRID_STEPS):
    """Geometric grid of exact rationals (interior points rounded to denominators <= 1e9)."""
    _check_phi(params)
    lo = to_fraction(eps_min)
    hi = 1 - params.phi if eps_max is None else to_fraction(eps_max)
    if steps < 2 or hi <= lo:
        return [hi]
    ratio = float(hi) / float(lo)
    out = [lo]
    for i in range(1, steps - 1):
        out.append(Fraction(float(lo) * ratio ** (i / (steps - 1))).limit_denominator(10**9))
    out.append(hi)
    return out


def find_epsilon(params, eps_min=GRID_MIN, eps_max=None, steps=GRID_STEPS, U=Fraction(1)):
    """First grid epsilon (smallest first) whose sequence passes; None if none does.

    For phi = 0 the recursion is undefined and the constant sequence is tried instead.
    """
    _check_phi(params)
    if params.phi == 0:
        seq = constant_sequence(params, U)
        return (seq.epsilon, seq) if check_u_criterion(params, seq) else None
    for eps in epsilon_grid(params, eps_min, eps_max, steps):
        seq = u_sequence(params, eps, U)
        if check_u_criterion(params, seq):
            return eps, seq
    return None


@dataclass(frozen=True)
class Classification:
    ergodic: bool
    reason: str
    mode: str


def classify_ergodic(params, mode="proof_supported"):
    """Sufficient ergodicity test: max(lam, beta) below threshold plus a clause on gamma.

    mode "proof_supported" asks beta - lam <= gamma/(2dM) when gamma > 0;
    mode "theorem_text" asks the weaker beta - lam <= gamma/(2d).
    """
    if mode not in MODES:
        raise BadParams(f"mode must be one of {MODES}")
    t = threshold(params)
    if params.rate >= t:
        return Classification(False, "threshold", mode)
    if params.gamma > 0:
        bound = params.gamma / (2 * params.d * (params.M if mode == "proof_supported" else 1))
        if params.beta - params.lam > bound:
            return Classification(False, "gamma_clause", mode)
        return Classification(True, "below threshold, gamma clause holds", mode)
    return Classification(True, "below threshold, gamma = 0", mode)


def metric_F(x, y, useq):
    u = useq.u if isinstance(useq, USequence) else useq
    return sum((u[j] for j in range(abs(y - x))), Fraction(0))


def weights(lattice):
    """alpha(x) = 2^(-|x|_1) on the torus, normalized to sum 1."""
    raw = [Fraction(1, 2 ** lattice.norm1(x)) for x in lattice.sites()]
    total = sum(raw)
    return [w / total for w in raw]


def distance_rho(xi, eta, useq, w):
    return sum((metric_F(a, b, useq) * wx for a, b, wx in zip(xi, eta, w)), Fraction(0))
