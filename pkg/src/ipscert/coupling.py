"""Increasing coupling of two systems at one site pair, built by a downward recursion.

For a quadruple (a, b) <= (c, d) (lower state at the pair, upper state at
the pair) the coupled rates pair a lower change with an upper change:

    JJ(k, l)  lower jump k   / upper jump l
    BB(k, l)  lower birth k  / upper birth l
    DD(k, l)  lower death k  / upper death l
    JB(k, l)  lower jump k   / upper birth l
    DJ(k, l)  lower death k  / upper jump l
    BJ(k, l)  lower birth k  / upper jump l
    JD(k, l)  lower jump k   / upper death l

Each coupled rate is the minimum of what is left of the two rates it
combines (the "remainders"), subject to a guard that says when the pair of
changes is used at all.  Whatever is left after all couplings acts alone
(the uncoupled terms).  Every term is linear in the kernel weight p, so the
recursion runs at p = 1 and the table is scaled at the end.

Terms are evaluated lazily with memoization: a term reads the remainders it
needs, which read other terms at larger indices.  A dependency cycle would
raise CouplingCycle; none occurs for the guards used here.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CouplingCycle, NotSingleChange
from .order_checker import Quadruple
from .rates import canonicalize, fraction_str

ZERO = Fraction(0)
CHANGE_KINDS = ("jump", "birth", "death", "none")


@dataclass(frozen=True, order=True)
class Change:
    kind: str
    k: int = 0

    def to_dict(self):
        return {"kind": self.kind, "k": self.k}

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}({self.k})"


NONE = Change("none", 0)


@dataclass(frozen=True)
class CouplingTerm:
    lower: Change
    upper: Change
    rate: Fraction

    def to_dict(self):
        return {"lower": self.lower.to_dict(), "upper": self.upper.to_dict(), "rate": fraction_str(self.rate)}


@dataclass
class CouplingTable:
    quadruple: Quadruple
    p: Fraction
    terms: list
    thresholds: dict = field(default_factory=dict)
    remainders: dict = field(default_factory=dict)
    state_max: tuple = (None, None)  # (lower M, upper M), used to clamp no-op changes

    def as_dict(self):
        """{(lower Change, upper Change): rate}."""
        return {(t.lower, t.upper): t.rate for t in self.terms}

    def to_dict(self):
        a, b, c, d = self.quadruple
        return {
            "quadruple": [a, b, c, d],
            "p": fraction_str(self.p),
            "terms": [t.to_dict() for t in self.terms],
            "thresholds": {name: {str(k): v for k, v in sorted(row.items())}
                           for name, row in sorted(self.thresholds.items())},
        }


# ---------------------------------------------------------------------------
# recursion

class _Recursion:
    """Coupled rates and remainders at p = 1 for one quadruple."""

    def __init__(self, lower, upper, q):
        self.q = q
        a, b, c, d = q
        self.N = max(lower.compute_N(a, b), upper.compute_N(c, d))
        N = self.N
        self.Gl = [ZERO] + [lower.gamma(k, a, b) for k in range(1, N + 1)]
        self.Bl = [ZERO] + [lower.pi_birth(k, a, b) for k in range(1, N + 1)]
        self.Dl = [ZERO] + [lower.pi_death(k, a, b) for k in range(1, N + 1)]
        self.Gu = [ZERO] + [upper.gamma(l, c, d) for l in range(1, N + 1)]
        self.Bu = [ZERO] + [upper.pi_birth(l, c, d) for l in range(1, N + 1)]
        self.Du = [ZERO] + [upper.pi_death(l, c, d) for l in range(1, N + 1)]
        self.memo = {}
        self.active = set()

    # guards -------------------------------------------------------------
    def guard(self, name, k, l):
        a, b, c, d = self.q
        if name == "JJ":
            return (a > c - l or b + k > d) and b + k <= d + l and a - k <= c - l
        if name == "BB":
            return d + l >= b + k > d
        if name == "DD":
            return a > c - l >= a - k
        if name == "JB":
            return b + k > d
        if name == "DJ":
            return a > c - l
        if name == "BJ":
            return b + k > d and a <= c - l
        if name == "JD":
            return a > c - l and b + k <= d
        raise KeyError(name)

    def term(self, name, k, l):
        if k < 1 or l < 1 or k > self.N or l > self.N:
            return ZERO
        if not self.guard(name, k, l):
            return ZERO
        key = (name, k, l)
        if key in self.memo:
            return self.memo[key]
        if key in self.active:
            raise CouplingCycle(f"{name}({k},{l}) depends on itself at quadruple {tuple(self.q)}")
        self.active.add(key)
        value = getattr(self, "_" + name)(k, l)
        self.active.discard(key)
        self.memo[key] = value
        return value

    def _sum(self, name, ks, ls):
        return sum((self.term(name, k, l) for k in ks for l in ls), ZERO)

    # remainders ---------------------------------------------------------
    # lower side: fixed k, coupled with upper indices >= l
    def J_low(self, k, l):
        ls = range(l, self.N + 1)
        return self.Gl[k] - self._sum("JJ", [k], ls) - self._sum("JD", [k], ls)

    def Jc_low(self, k, l):
        a, b, c, d = self.q
        return (self.Gl[k] - self._sum("JJ", [k], range(max(k - d + b, 1), self.N + 1))
                - self._sum("JB", [k], range(l, self.N + 1)))

    def B_low(self, k, l):
        return self.Bl[k] - self._sum("BB", [k], range(l, self.N + 1))

    def Bc_low(self, k, l):
        a, b, c, d = self.q
        return (self.Bl[k] - self._sum("BB", [k], range(max(k - d + b, 1), self.N + 1))
                - self._sum("BJ", [k], range(l, min(c - a, self.N) + 1)))

    def D_low(self, k, l):
        ls = range(l, self.N + 1)
        return self.Dl[k] - self._sum("DD", [k], ls) - self._sum("DJ", [k], ls)

    # upper side: fixed l, coupled with lower indices >= k
    def J_up(self, k, l):
        ks = range(k, self.N + 1)
        return self.Gu[l] - self._sum("JJ", ks, [l]) - self._sum("BJ", ks, [l])

    def Jc_up(self, k, l):
        a, b, c, d = self.q
        return (self.Gu[l] - self._sum("JJ", range(max(l - c + a, 1), self.N + 1), [l])
                - self._sum("DJ", range(k, self.N + 1), [l]))

    def B_up(self, k, l):
        ks = range(k, self.N + 1)
        return self.Bu[l] - self._sum("BB", ks, [l]) - self._sum("JB", ks, [l])

    def D_up(self, k, l):
        return self.Du[l] - self._sum("DD", range(k, self.N + 1), [l])

    def Dc_up(self, k, l):
        a, b, c, d = self.q
        return (self.Du[l] - self._sum("DD", range(max(l - c + a, 1), self.N + 1), [l])
                - self._sum("JD", range(k, min(d - b, self.N) + 1), [l]))

    # coupled terms ------------------------------------------------------
    def _JJ(self, k, l):
        return min(self.J_low(k, l + 1), self.J_up(k + 1, l))

    def _BB(self, k, l):
        return min(self.B_low(k, l + 1), self.B_up(k + 1, l))

    def _DD(self, k, l):
        return min(self.D_low(k, l + 1), self.D_up(k + 1, l))

    def _JB(self, k, l):
        return min(self.Jc_low(k, l + 1), self.B_up(k + 1, l) - self.term("BB", k, l))

    def _DJ(self, k, l):
        return min(self.D_low(k, l + 1) - self.term("DD", k, l), self.Jc_up(k + 1, l))

    def _BJ(self, k, l):
        return min(self.Bc_low(k, l + 1), self.J_up(k + 1, l) - self.term("JJ", k, l))

    def _JD(self, k, l):
        return min(self.J_low(k, l + 1) - self.term("JJ", k, l), self.Dc_up(k + 1, l))

    # uncoupled closures -------------------------------------------------
    def lower_bad(self, k):
        a, b, c, d = self.q
        return b + k > d

    def upper_bad(self, l):
        a, b, c, d = self.q
        return c - l < a

    def alone_lower(self, kind, k):
        if kind == "jump":
            return self.Jc_low(k, 1) if self.lower_bad(k) else self.J_low(k, 1)
        if kind == "birth":
            return self.Bc_low(k, 1) if self.lower_bad(k) else self.B_low(k, 1)
        return self.D_low(k, 1)

    def alone_upper(self, kind, l):
        if kind == "jump":
            return self.Jc_up(1, l) if self.upper_bad(l) else self.J_up(1, l)
        if kind == "birth":
            return self.B_up(1, l)
        return self.Dc_up(1, l) if self.upper_bad(l) else self.D_up(1, l)


PAIRS = {
    "JJ": ("jump", "jump"),
    "BB": ("birth", "birth"),
    "DD": ("death", "death"),
    "JB": ("jump", "birth"),
    "DJ": ("death", "jump"),
    "BJ": ("birth", "jump"),
    "JD": ("jump", "death"),
}


def _thresholds(r):
    """Diagnostic thresholds per row k (lower side) and column l (upper side)."""
    a, b, c, d = r.q
    N = r.N
    out = {name: {} for name in ("N_d_plus", "N_B", "N_dB", "N_Bd", "N_d_minus", "N_D", "N_dD", "N_Dd")}
    for k in range(1, N + 1):
        hat = k - d + b
        if not r.lower_bad(k):
            for name in ("N_d_plus", "N_B", "N_dB", "N_Bd"):
                out[name][k] = N + 1
            continue
        out["N_d_plus"][k] = _first_exhausted(range(N, hat - 1, -1), lambda l: r.term("JJ", k, l) == r.J_low(k, l + 1), hat - 1)
        out["N_B"][k] = _first_exhausted(range(N, hat - 1, -1), lambda l: r.term("BB", k, l) == r.B_low(k, l + 1), hat - 1)
        if r.J_low(k, hat) == 0 or out["N_d_plus"][k] >= hat:
            out["N_dB"][k] = N + 1
        else:
            out["N_dB"][k] = _first_exhausted(range(N, 0, -1), lambda l: r.term("JB", k, l) == r.Jc_low(k, l + 1), 0)
        if r.B_low(k, hat) == 0 or out["N_B"][k] >= hat:
            out["N_Bd"][k] = N + 1
        else:
            top = min(N, c - a)
            out["N_Bd"][k] = _first_exhausted(range(top, 0, -1), lambda l: r.term("BJ", k, l) == r.Bc_low(k, l + 1), 0)
    for l in range(1, N + 1):
        hat = l - c + a
        if not r.upper_bad(l):
            for name in ("N_d_minus", "N_D", "N_dD", "N_Dd"):
                out[name][l] = N + 1
            continue
        out["N_d_minus"][l] = _first_exhausted(range(N, hat - 1, -1), lambda k: r.term("JJ", k, l) == r.J_up(k + 1, l), hat - 1)
        out["N_D"][l] = _first_exhausted(range(N, hat - 1, -1), lambda k: r.term("DD", k, l) == r.D_up(k + 1, l), hat - 1)
        if r.J_up(hat, l) == 0 or out["N_d_minus"][l] >= hat:
            out["N_dD"][l] = N + 1
        else:
            out["N_dD"][l] = _first_exhausted(range(N, 0, -1), lambda k: r.term("DJ", k, l) == r.Jc_up(k + 1, l), 0)
        if r.D_up(hat, l) == 0 or out["N_D"][l] >= hat:
            out["N_Dd"][l] = N + 1
        else:
            top = min(N, d - b)
            out["N_Dd"][l] = _first_exhausted(range(top, 0, -1), lambda k: r.term("JD", k, l) == r.Dc_up(k + 1, l), 0)
    return out


def _first_exhausted(indices, test, default):
    for i in indices:
        if test(i):
            return i
    return default


def _remainder_snapshot(r, p):
    N = r.N
    names = {
        "J": r.J_low, "B": r.B_low, "D": r.D_low, "J_cal": r.Jc_low, "B_cal": r.Bc_low,
        "J_up": r.J_up, "B_up": r.B_up, "D_up": r.D_up, "J_cal_up": r.Jc_up, "D_cal_up": r.Dc_up,
    }
    out = {}
    for name, fn in names.items():
        # lower remainders are indexed (k, l) with l up to N+1, upper ones with k up to N+1
        ks, ls = (range(1, N + 2), range(1, N + 1)) if name.endswith("up") else (range(1, N + 1), range(1, N + 2))
        out[name] = {(k, l): fn(k, l) * p for k in ks for l in ls}
    return out


def build_coupling_table(lower, upper, q, p=Fraction(1), with_remainders=True):
    lower, upper = canonicalize(lower), canonicalize(upper)
    q = q if isinstance(q, Quadruple) else Quadruple(*q)
    p = Fraction(p)
    r = _Recursion(lower, upper, q)
    N = r.N
    terms = []
    for name, (lk, uk) in PAIRS.items():
        for k in range(1, N + 1):
            for l in range(1, N + 1):
                v = r.term(name, k, l)
                if v:
                    terms.append(CouplingTerm(Change(lk, k), Change(uk, l), v * p))
    for kind in ("jump", "birth", "death"):
        for k in range(1, N + 1):
            v = r.alone_lower(kind, k)
            if v:
                terms.append(CouplingTerm(Change(kind, k), NONE, v * p))
            v = r.alone_upper(kind, k)
            if v:
                terms.append(CouplingTerm(NONE, Change(kind, k), v * p))
    terms.sort(key=lambda t: (t.lower, t.upper))
    table = CouplingTable(q, p, terms, _thresholds(r), {}, (lower.state_max, upper.state_max))
    if with_remainders:
        table.remainders = _remainder_snapshot(r, p)
    return table


def build_coupling_n1(lower, upper, q, p=Fraction(1)):
    """Closed form for systems that change at most one particle per transition."""
    lower, upper = canonicalize(lower), canonicalize(upper)
    for name, spec in (("lower", lower), ("upper", upper)):
        if spec.N_bar > 1:
            raise NotSingleChange(f"{name} system has transitions of size {spec.N_bar} > 1")
    q = q if isinstance(q, Quadruple) else Quadruple(*q)
    a, b, c, d = q
    p = Fraction(p)
    gl, bl, dl = lower.gamma(1, a, b) * p, lower.pi_birth(1, a, b) * p, lower.pi_death(1, a, b) * p
    gu, bu, du = upper.gamma(1, c, d) * p, upper.pi_birth(1, c, d) * p, upper.pi_death(1, c, d) * p
    JJ = min(gl, gu) if (b == d or a == c) else ZERO
    BB = JB = BJ = DD = DJ = JD = ZERO
    if b == d:
        BB = min(bl, bu)
        JB = min(gl - JJ, bu - BB)
        if c > a:
            BJ = min(bl - BB, gu - JJ)
    if a == c:
        DD = min(dl, du)
        DJ = min(max(dl - DD, ZERO), gu - JJ)
        if b < d:
            JD = min(gl - JJ, du - DD)
    J1, B1, D1 = Change("jump", 1), Change("birth", 1), Change("death", 1)
    rates = {
        (J1, J1): JJ, (B1, B1): BB, (J1, B1): JB, (B1, J1): BJ,
        (D1, D1): DD, (D1, J1): DJ, (J1, D1): JD,
        (B1, NONE): bl - BB - BJ,
        (J1, NONE): gl - JJ - JD - JB,
        (NONE, B1): bu - BB - JB,
        (NONE, J1): gu - JJ - BJ - DJ,
        (D1, NONE): dl - DD - DJ,
        (NONE, D1): du - DD - JD,
    }
    terms = sorted((CouplingTerm(lo, up, v) for (lo, up), v in rates.items() if v),
                   key=lambda t: (t.lower, t.upper))
    return CouplingTable(q, p, terms, {}, {}, (lower.state_max, upper.state_max))


# ---------------------------------------------------------------------------
# verification

@dataclass(frozen=True)
class Mismatch:
    side: str
    change: Change
    expected: Fraction
    got: Fraction

    def __str__(self):
        return (f"{self.side} {self.change}: expected {fraction_str(self.expected)}, "
                f"marginal sum {fraction_str(self.got)}")


@dataclass
class MarginalReport:
    mismatches: list

    @property
    def ok(self):
        return not self.mismatches


def verify_marginals(table, lower, upper):
    """Compare every marginal sum of the table with the p-weighted rates."""
    lower, upper = canonicalize(lower), canonicalize(upper)
    a, b, c, d = table.quadruple
    p = table.p
    sums = {}
    for t in table.terms:
        if t.lower.kind != "none":
            key = ("lower", t.lower)
            sums[key] = sums.get(key, ZERO) + t.rate
        if t.upper.kind != "none":
            key = ("upper", t.upper)
            sums[key] = sums.get(key, ZERO) + t.rate
    expected = {}
    K = max(lower.k_max, upper.k_max)
    for k in range(1, K + 1):
        for side, spec, x, y in (("lower", lower, a, b), ("upper", upper, c, d)):
            for kind, rate in (("jump", spec.gamma(k, x, y)), ("birth", spec.pi_birth(k, x, y)),
                               ("death", spec.pi_death(k, x, y))):
                if rate:
                    expected[(side, Change(kind, k))] = rate * p
    mismatches = []
    for key in sorted(set(sums) | set(expected)):
        e, g = expected.get(key, ZERO), sums.get(key, ZERO)
        if e != g:
            mismatches.append(Mismatch(key[0], key[1], e, g))
    return MarginalReport(mismatches)


def _apply(x, y, change, M):
    if change.kind == "jump":
        if x - change.k >= 0 and (M is None or y + change.k <= M):
            return x - change.k, y + change.k
    elif change.kind == "birth":
        if M is None or y + change.k <= M:
            return x, y + change.k
    elif change.kind == "death":
        if x - change.k >= 0:
            return x - change.k, y
    return x, y


def apply_term(state, term, M=None):
    """Apply (lower, upper) changes to (a, b, c, d); changes leaving X are no-ops.

    ``M`` is one bound for both systems or a (lower M, upper M) pair.
    """
    a, b, c, d = state
    ml, mu = M if isinstance(M, tuple) else (M, M)
    a2, b2 = _apply(a, b, term.lower, ml)
    c2, d2 = _apply(c, d, term.upper, mu)
    return a2, b2, c2, d2


@dataclass(frozen=True)
class BrokenTerm:
    term: CouplingTerm
    result: tuple


@dataclass
class OrderReport:
    broken: list

    @property
    def ok(self):
        return not self.broken


def verify_increasing(table, q=None, M=None):
    """Flag nonzero terms whose result leaves the lower pair above the upper pair."""
    q = table.quadruple if q is None else q
    M = table.state_max if M is None else M
    broken = []
    for t in table.terms:
        if t.rate == 0:
            continue
        a, b, c, d = apply_term(tuple(q), t, M)
        if a > c or b > d:
            broken.append(BrokenTerm(t, (a, b, c, d)))
    return OrderReport(broken)


def negative_entries(table):
    """Terms or stored remainders below zero."""
    bad = [("term", t) for t in table.terms if t.rate < 0]
    for name, values in table.remainders.items():
        bad.extend(("remainder", (name, key, v)) for key, v in values.items() if v < 0)
    return bad


def all_tables(lower, upper, p=Fraction(1), with_remainders=False):
    """Coupling tables for every ordered quadruple, keyed by (a, b, c, d)."""
    lower, upper = canonicalize(lower), canonicalize(upper)
    out = {}
    for a in lower.values:
        for b in lower.values:
            for c in range(a, upper.state_max + 1):
                for d in range(b, upper.state_max + 1):
                    out[(a, b, c, d)] = build_coupling_table(lower, upper, (a, b, c, d), p, with_remainders)
    return out
