"""Exact certification of stochastic order and attractiveness.

For every pair of local states (a, b) <= (c, d) and every admissible family
of nondecreasing tuples, the checker evaluates

  (C+)  sum_{k > d-b+j1} PiB~(k,a,b) + sum_{k in Ia} G~(k,a,b)
            <= sum_{l > j1} PiB(l,c,d) + sum_{l in Ib} G(l,c,d)
  (C-)  sum_{k > h1} PiD~(k,a,b) + sum_{k in Id} G~(k,a,b)
            >= sum_{l > c-a+h1} PiD(l,c,d) + sum_{l in Ic} G(l,c,d)

with Ia = U{k : m_i >= k > d-b+j_i},  Ib = U{k : c-a+m_i >= k > j_i},
     Ic = U{k : m_i >= k > c-a+h_i},  Id = U{k : d-b+m_i >= k > h_i}.
The tilde marks the lower system.  All sums are done on integers after
scaling every rate by a common denominator, so comparisons are exact.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import NotConservative, NotSingleChange
from .rates import RateSpec, System, canonicalize, common_denominator, fraction_str, pair_only


def _spec(obj):
    spec = obj.rates if isinstance(obj, System) else obj
    return canonicalize(spec)


@dataclass(frozen=True)
class Quadruple:
    alpha: int
    beta: int
    gamma: int
    delta: int

    def __iter__(self):
        return iter((self.alpha, self.beta, self.gamma, self.delta))

    @property
    def ordered(self):
        return self.alpha <= self.gamma and self.beta <= self.delta


@dataclass(frozen=True)
class TupleFamily:
    first: tuple  # j (plus side) or h (minus side)
    m: tuple

    @property
    def K(self):
        return len(self.first)


@dataclass(frozen=True)
class PlusSets:
    I_a: frozenset
    I_b: frozenset


@dataclass(frozen=True)
class MinusSets:
    I_c: frozenset
    I_d: frozenset


def _interval_union(pairs):
    out = set()
    for lo, hi in pairs:
        out.update(range(lo + 1, hi + 1))
    return frozenset(out)


def index_sets_plus(q, fam):
    s, t = q.delta - q.beta, q.gamma - q.alpha
    return PlusSets(
        I_a=_interval_union((s + j, m) for j, m in zip(fam.first, fam.m)),
        I_b=_interval_union((j, t + m) for j, m in zip(fam.first, fam.m)),
    )


def index_sets_minus(q, fam):
    s, t = q.delta - q.beta, q.gamma - q.alpha
    return MinusSets(
        I_c=_interval_union((t + h, m) for h, m in zip(fam.first, fam.m)),
        I_d=_interval_union((h, s + m) for h, m in zip(fam.first, fam.m)),
    )


@dataclass(frozen=True)
class ConditionValue:
    holds: bool
    lhs: Fraction
    rhs: Fraction


def check_condition_plus(lower, upper, q, fam):
    lower, upper = _spec(lower), _spec(upper)
    a, b, c, d = q
    sets = index_sets_plus(q, fam)
    j1 = fam.first[0]
    K = max(lower.k_max, upper.k_max)
    lhs = sum((lower.pi_birth(k, a, b) for k in range(d - b + j1 + 1, K + 1)), Fraction(0))
    lhs += sum((lower.gamma(k, a, b) for k in sets.I_a), Fraction(0))
    rhs = sum((upper.pi_birth(l, c, d) for l in range(j1 + 1, K + 1)), Fraction(0))
    rhs += sum((upper.gamma(l, c, d) for l in sets.I_b), Fraction(0))
    return ConditionValue(lhs <= rhs, lhs, rhs)


def check_condition_minus(lower, upper, q, fam):
    lower, upper = _spec(lower), _spec(upper)
    a, b, c, d = q
    sets = index_sets_minus(q, fam)
    h1 = fam.first[0]
    K = max(lower.k_max, upper.k_max)
    lhs = sum((lower.pi_death(k, a, b) for k in range(h1 + 1, K + 1)), Fraction(0))
    lhs += sum((lower.gamma(k, a, b) for k in sets.I_d), Fraction(0))
    rhs = sum((upper.pi_death(l, c, d) for l in range(c - a + h1 + 1, K + 1)), Fraction(0))
    rhs += sum((upper.gamma(l, c, d) for l in sets.I_c), Fraction(0))
    return ConditionValue(lhs >= rhs, lhs, rhs)


# ---------------------------------------------------------------------------
# family enumeration

def _mask(lo, hi, N):
    """Bits k with lo < k <= hi, clipped to 1..N."""
    lo = max(lo, 0)
    hi = min(hi, N)
    if hi <= lo:
        return 0
    return ((1 << (hi + 1)) - 1) ^ ((1 << (lo + 1)) - 1)


@lru_cache(maxsize=None)
def _families(x_shift, y_shift, N):
    """Deduplicated chains of (f_i, m_i) pairs, K <= N, entries in [0, N].

    X = U (x_shift + f_i, m_i], Y = U (f_i, y_shift + m_i], both clipped to
    1..N.  Returns a tuple of (f_tuple, m_tuple, f1, X, Y) in scan order:
    by K, then lexicographically in the chain.
    """
    if N <= 0:
        return ()
    grid = [(f, m) for f in range(N + 1) for m in range(N + 1)]
    seen_sig = set()
    seen_state = set()
    out = []
    level = []
    for f, m in grid:
        X, Y = _mask(x_shift + f, m, N), _mask(f, y_shift + m, N)
        state = ((f, m), f, X, Y)
        if state in seen_state:
            continue
        seen_state.add(state)
        level.append(((f,), (m,), X, Y))
        sig = (f, X, Y)
        if sig not in seen_sig:
            seen_sig.add(sig)
            out.append(((f,), (m,), f, X, Y))
    for _K in range(2, N + 1):
        nxt = []
        for fs, ms, X, Y in level:
            lf, lm = fs[-1], ms[-1]
            for f, m in grid:
                if f < lf or m < lm or (f == lf and m == lm):
                    continue
                X2 = X | _mask(x_shift + f, m, N)
                Y2 = Y | _mask(f, y_shift + m, N)
                state = ((f, m), fs[0], X2, Y2)
                if state in seen_state:
                    continue
                seen_state.add(state)
                nxt.append((fs + (f,), ms + (m,), X2, Y2))
                sig = (fs[0], X2, Y2)
                if sig not in seen_sig:
                    seen_sig.add(sig)
                    out.append((fs + (f,), ms + (m,), fs[0], X2, Y2))
        if not nxt:
            break
        level = nxt
    return tuple(out)


def _raw_chains(N):
    """Every strict chain of (f, m) pairs in [0, N]^2 of length 1..N, by length then lexicographically."""
    grid = [(f, m) for f in range(N + 1) for m in range(N + 1)]
    level = [((f,), (m,)) for f, m in grid]
    for K in range(1, N + 1):
        yield from level
        if K == N:
            break
        level = [(fs + (f,), ms + (m,)) for fs, ms in level for f, m in grid
                 if f >= fs[-1] and m >= ms[-1] and (f, m) != (fs[-1], ms[-1])]


def enumerate_families(q, N, side="plus", dedup=True):
    """Yield tuple families for quadruple q on the given side.

    With dedup=False every nondecreasing pair of K-tuples (K <= N, entries
    in [0, N], no repeated (f, m) pair) is produced; with dedup=True only the
    first family of each distinct (first index, index sets) signature.
    """
    if not dedup:
        for fs, ms in _raw_chains(N):
            yield TupleFamily(fs, ms)
        return
    s, t = q.delta - q.beta, q.gamma - q.alpha
    if side == "plus":
        shifts = (min(s, N), min(t, N))
    elif side == "minus":
        shifts = (min(t, N), min(s, N))
    else:
        raise ValueError("side must be 'plus' or 'minus'")
    for fs, ms, _f1, _X, _Y in _families(shifts[0], shifts[1], N):
        yield TupleFamily(fs, ms)


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Witness:
    quadruple: Quadruple
    side: str
    family: TupleFamily
    lhs: Fraction
    rhs: Fraction
    pair: tuple = None

    def to_dict(self):
        a, b, c, d = self.quadruple
        out = {"alpha": a, "beta": b, "gamma": c, "delta": d, "side": self.side}
        if self.family is not None:
            key = "j" if self.side == "Cplus" else "h"
            out.update({"K": self.family.K, key: list(self.family.first), "m": list(self.family.m)})
        out.update({"lhs": fraction_str(self.lhs), "rhs": fraction_str(self.rhs)})
        if self.pair is not None:
            out["pair"] = list(self.pair)
        return out


@dataclass
class Certificate:
    verdict: str
    quadruples_checked: int = 0
    families_checked: int = 0
    witness: Witness = None
    method: str = "theorem"
    sufficient_only: bool = False

    @property
    def ordered(self):
        return self.verdict == "Ordered"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "method": self.method,
            "sufficient_only": self.sufficient_only,
            "counts": {"quadruples": self.quadruples_checked, "families": self.families_checked},
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


class _IntTables:
    """Integer rate tables (scaled by a common denominator) with suffix sums."""

    def __init__(self, spec, K, scale):
        self.spec = spec
        X = spec.values
        self.N = [[spec.compute_N(a, b) for b in X] for a in X]
        G, B, D = spec.dense(K)
        self.G = [[[int(v * scale) for v in G[a][b]] for b in X] for a in X]
        self.Bsuf = [[self._suffix(B[a][b], scale, K) for b in X] for a in X]
        self.Dsuf = [[self._suffix(D[a][b], scale, K) for b in X] for a in X]

    @staticmethod
    def _suffix(row, scale, K):
        # out[j] = sum_{k > j} row[k], for j = 0..K; beyond K it is 0
        out = [0] * (K + 1)
        acc = 0
        for j in range(K, -1, -1):
            out[j] = acc
            acc += int(row[j] * scale) if j else 0
        return out

    def masked(self, a, b, mask):
        row = self.G[a][b]
        total = 0
        k = 1
        mask >>= 1
        while mask:
            if mask & 1:
                total += row[k]
            mask >>= 1
            k += 1
        return total


def _suffix_at(suf, j):
    if j < 0:
        j = 0
    return suf[j] if j < len(suf) else 0


class _Checker:
    def __init__(self, lower, upper, w_lower=Fraction(1), w_upper=Fraction(1)):
        self.lower, self.upper = lower, upper
        self.K = max(lower.k_max, upper.k_max, 1)
        self.scale = common_denominator(lower, upper)
        self.lo = _IntTables(lower, self.K, self.scale)
        self.up = _IntTables(upper, self.K, self.scale)
        wl, wu = Fraction(w_lower), Fraction(w_upper)
        wden = wl.denominator * wu.denominator
        self.wl = int(wl * wden)
        self.wu = int(wu * wden)
        self.wden = wden

    def value(self, x):
        return Fraction(x, self.scale * self.wden)

    def quadruples(self):
        for a in self.lower.values:
            for b in self.lower.values:
                for c in range(a, self.upper.state_max + 1):
                    for d in range(b, self.upper.state_max + 1):
                        yield a, b, c, d

    def scan(self, first_only=True):
        """Return (quadruples, families, witnesses)."""
        nq = nf = 0
        witnesses = []
        lo, up = self.lo, self.up
        for a, b, c, d in self.quadruples():
            nq += 1
            N = max(lo.N[a][b], up.N[c][d])
            if N == 0:
                continue
            s, t = d - b, c - a
            Gl, Gu = lo.G[a][b], up.G[c][d]
            # (C+)
            Bl, Bu = lo.Bsuf[a][b], up.Bsuf[c][d]
            for fs, ms, j1, X, Y in _families(min(s, N), min(t, N), N):
                nf += 1
                lhs = (_suffix_at(Bl, s + j1) + lo.masked(a, b, X)) * self.wl
                rhs = (_suffix_at(Bu, j1) + up.masked(c, d, Y)) * self.wu
                if lhs > rhs:
                    witnesses.append(Witness(Quadruple(a, b, c, d), "Cplus", TupleFamily(fs, ms),
                                             self.value(lhs), self.value(rhs)))
                    if first_only:
                        return nq, nf, witnesses
            # (C-): families with X = Ic (upper jumps), Y = Id (lower jumps)
            Dl, Du = lo.Dsuf[a][b], up.Dsuf[c][d]
            for fs, ms, h1, X, Y in _families(min(t, N), min(s, N), N):
                nf += 1
                lhs = (_suffix_at(Dl, h1) + lo.masked(a, b, Y)) * self.wl
                rhs = (_suffix_at(Du, t + h1) + up.masked(c, d, X)) * self.wu
                if lhs < rhs:
                    witnesses.append(Witness(Quadruple(a, b, c, d), "Cminus", TupleFamily(fs, ms),
                                             self.value(lhs), self.value(rhs)))
                    if first_only:
                        return nq, nf, witnesses
        return nq, nf, witnesses


def certify_stochastic_order(lower, upper):
    """Check (C+) and (C-) everywhere; the first violation in scan order is the witness.

    The lower system may live on a different {0..M~}: quadruples take (a, b)
    from the lower state space and (c, d) from the upper one.
    """
    lower, upper = _spec(lower), _spec(upper)
    nq, nf, wit = _Checker(lower, upper).scan()
    if wit:
        return Certificate("NotOrdered", nq, nf, wit[0])
    return Certificate("Ordered", nq, nf)


def certify_attractiveness(spec):
    return certify_stochastic_order(spec, spec)


def all_witnesses(lower, upper):
    """Every violated (quadruple, family) pair, in scan order."""
    lower, upper = _spec(lower), _spec(upper)
    return _Checker(lower, upper).scan(first_only=False)[2]


# ---------------------------------------------------------------------------
# single-change systems

def check_single_change(lower, upper):
    """Conditions for systems changing at most one particle per transition."""
    lower, upper = _spec(lower), _spec(upper)
    for name, spec in (("lower", lower), ("upper", upper)):
        if spec.N_bar > 1:
            raise NotSingleChange(f"{name} system has transitions of size {spec.N_bar} > 1")
    nq = nf = 0

    def fail(q, side, lhs, rhs):
        return Certificate("NotOrdered", nq, nf, Witness(Quadruple(*q), side, None, lhs, rhs),
                           method="single_change")

    for a in lower.values:
        for b in lower.values:
            for c in range(a, upper.state_max + 1):
                for d in range(b, upper.state_max + 1):
                    nq += 1
                    if b == d:
                        # (C+1): births plus jumps onto y
                        nf += 1
                        lhs = lower.pi_birth(1, a, b) + lower.gamma(1, a, b)
                        rhs = upper.pi_birth(1, c, d) + upper.gamma(1, c, d)
                        if lhs > rhs:
                            return fail((a, b, c, d), "C+1", lhs, rhs)
                        if a == c:
                            nf += 1
                            lhs, rhs = lower.pi_birth(1, a, b), upper.pi_birth(1, c, d)
                            if lhs > rhs:
                                return fail((a, b, c, d), "C+10", lhs, rhs)
                    if a == c:
                        nf += 1
                        lhs = lower.pi_death(1, a, b) + lower.gamma(1, a, b)
                        rhs = upper.pi_death(1, c, d) + upper.gamma(1, c, d)
                        if lhs < rhs:
                            return fail((a, b, c, d), "C-1", lhs, rhs)
                        if b == d:
                            nf += 1
                            lhs, rhs = lower.pi_death(1, a, b), upper.pi_death(1, c, d)
                            if lhs < rhs:
                                return fail((a, b, c, d), "C-10", lhs, rhs)
    return Certificate("Ordered", nq, nf, method="single_change")


# ---------------------------------------------------------------------------
# conservative systems

@dataclass
class ConservativeComparison:
    verdict_single_index: str
    verdict_interval_form: str
    single_index_witness: Witness = None
    interval_witness: Witness = None

    @property
    def agree(self):
        return self.verdict_single_index == self.verdict_interval_form

    def to_dict(self):
        return {
            "verdict_single_index": self.verdict_single_index,
            "verdict_interval_form": self.verdict_interval_form,
            "agree": self.agree,
        }


def _single_index_form(lower, upper):
    """Tail-sum conditions on jump rates, one index j (or h) at a time."""
    for a in lower.values:
        for b in lower.values:
            for c in range(a, upper.state_max + 1):
                for d in range(b, upper.state_max + 1):
                    N = max(lower.compute_N(a, b), upper.compute_N(c, d))
                    s, t = d - b, c - a
                    for j in range(N + 1):
                        lhs = sum((lower.gamma(k, a, b) for k in range(s + j + 1, N + 1)), Fraction(0))
                        rhs = sum((upper.gamma(l, c, d) for l in range(j + 1, N + 1)), Fraction(0))
                        if lhs > rhs:
                            return Witness(Quadruple(a, b, c, d), "Cplus", TupleFamily((j,), ()), lhs, rhs)
                    for h in range(N + 1):
                        lhs = sum((lower.gamma(k, a, b) for k in range(h + 1, N + 1)), Fraction(0))
                        rhs = sum((upper.gamma(l, c, d) for l in range(t + h + 1, N + 1)), Fraction(0))
                        if lhs < rhs:
                            return Witness(Quadruple(a, b, c, d), "Cminus", TupleFamily((h,), ()), lhs, rhs)
    return None


def check_conservative_equivalence(lower, upper):
    lower, upper = _spec(lower), _spec(upper)
    for name, spec in (("lower", lower), ("upper", upper)):
        if not spec.is_conservative:
            raise NotConservative(f"{name} system has birth or death rates")
    w1 = _single_index_form(lower, upper)
    cert = certify_stochastic_order(lower, upper)
    return ConservativeComparison(
        "Ordered" if w1 is None else "NotOrdered",
        cert.verdict,
        w1,
        cert.witness,
    )


# ---------------------------------------------------------------------------
# site-dependent systems (sufficient conditions only)

@dataclass(frozen=True)
class GeneralSystem:
    """Rates and kernel weight attached to each ordered site pair.

    ``pair_rates`` maps (x, y) to a RateSpec whose site tables hold the
    independent rates acting on that pair (births of y, deaths of x).
    """

    state_max: int
    weights: tuple
    pair_rates: tuple = field(default=())
    default_rates: RateSpec = None

    @classmethod
    def build(cls, state_max, weights, pair_rates=None, default_rates=None):
        w = tuple(sorted((tuple(k), Fraction(v)) for k, v in dict(weights).items()))
        pr = tuple(sorted((tuple(k), v) for k, v in dict(pair_rates or {}).items()))
        return cls(state_max, w, pr, default_rates)

    @classmethod
    def from_system(cls, system, lattice):
        return cls.build(system.state_max, system.kernel.site_weights(lattice),
                         default_rates=system.rates)

    def rates_for(self, pair):
        spec = dict(self.pair_rates).get(pair, self.default_rates)
        return RateSpec.zero(self.state_max) if spec is None else spec

    def weight(self, pair):
        return dict(self.weights).get(pair, Fraction(0))

    def pairs(self):
        return {p for p, _ in self.weights} | {p for p, _ in self.pair_rates}


def certify_general(lowerG, upperG):
    """Kernel-weighted conditions per site pair; Ordered is sufficient, not necessary.

    Self-pairs (x, x) are skipped: the simulator drops them as well.
    """
    pairs = sorted(p for p in lowerG.pairs() | upperG.pairs() if p[0] != p[1])
    nq = nf = 0
    done = {}
    for pair in pairs:
        lspec = canonicalize(lowerG.rates_for(pair))
        uspec = canonicalize(upperG.rates_for(pair))
        wl, wu = lowerG.weight(pair), upperG.weight(pair)
        key = (lspec, uspec, wl, wu)
        if key in done:
            continue
        q, f, wit = _Checker(pair_only(lspec), pair_only(uspec), wl, wu).scan()
        done[key] = True
        nq += q
        nf += f
        if wit:
            w = wit[0]
            w = Witness(w.quadruple, w.side, w.family, w.lhs, w.rhs, pair)
            return Certificate("NotOrdered", nq, nf, w, method="general", sufficient_only=True)
    return Certificate("Ordered", nq, nf, method="general", sufficient_only=True)
