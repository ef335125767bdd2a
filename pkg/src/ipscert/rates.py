"""Rate families of a particle system with multiple births, deaths and jumps.

A system on the local state space X = {0..M} is described by

* jump[k, a, b]        k particles jump from x (value a) to y (value b)
* birth_pair[k, a, b]  k particles are added on y, depending on both sites
* death_pair[k, a, b]  k particles are removed from x, depending on both sites
* birth_site[k, b]     k particles are added on a site with value b
* death_site[k, a]     k particles are removed from a site with value a

and a kernel p(x, y).  All rates are exact ``Fraction`` values.  The
combined birth and death rates used by the order conditions are

    Pi_birth(k, a, b) = birth_pair[k, a, b] + birth_site[k, b]
    Pi_death(k, a, b) = death_pair[k, a, b] + death_site[k, a]
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm

from .errors import ZeroKernel

PAIR_KINDS = ("jump", "birth_pair", "death_pair")
SITE_KINDS = ("birth_site", "death_site")
KINDS = PAIR_KINDS + SITE_KINDS
DIRECTIONS = ("reverse", "forward")
DEFAULT_K_CAP = 8


def to_fraction(value):
    """Exact conversion; floats go through their decimal repr (0.3 -> 3/10)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("boolean is not a rate")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as a rational number")


def fraction_str(value):
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _freeze(table):
    items = []
    for key, value in table.items():
        value = to_fraction(value)
        if value != 0:
            items.append((tuple(int(i) for i in key), value))
    return tuple(sorted(items))


@dataclass(frozen=True)
class StateSpace:
    max_occupancy: int

    @property
    def values(self):
        return range(self.max_occupancy + 1)


@dataclass(frozen=True)
class RateSpec:
    """Immutable sparse rate tables; only nonzero entries are stored."""

    state_max: int
    jump: tuple = ()
    birth_pair: tuple = ()
    death_pair: tuple = ()
    birth_site: tuple = ()
    death_site: tuple = ()

    @classmethod
    def build(cls, state_max, jump=None, birth_pair=None, death_pair=None,
              birth_site=None, death_site=None):
        """Build from dicts keyed by (k, a, b) or (k, a)."""
        return cls(
            state_max=int(state_max),
            jump=_freeze(jump or {}),
            birth_pair=_freeze(birth_pair or {}),
            death_pair=_freeze(death_pair or {}),
            birth_site=_freeze(birth_site or {}),
            death_site=_freeze(death_site or {}),
        )

    @classmethod
    def zero(cls, state_max):
        return cls(state_max=int(state_max))

    @cached_property
    def _lookup(self):
        return {kind: dict(getattr(self, kind)) for kind in KINDS}

    def table(self, kind):
        return self._lookup[kind]

    def entries(self):
        """Yield (kind, key, value) for every stored rate, in canonical order."""
        for kind in KINDS:
            for key, value in getattr(self, kind):
                yield kind, key, value

    @property
    def values(self):
        return range(self.state_max + 1)

    # rate accessors ---------------------------------------------------
    def gamma(self, k, a, b):
        return self._lookup["jump"].get((k, a, b), Fraction(0))

    def pi_birth(self, k, a, b):
        lk = self._lookup
        return lk["birth_pair"].get((k, a, b), Fraction(0)) + lk["birth_site"].get((k, b), Fraction(0))

    def pi_death(self, k, a, b):
        lk = self._lookup
        return lk["death_pair"].get((k, a, b), Fraction(0)) + lk["death_site"].get((k, a), Fraction(0))

    @cached_property
    def k_max(self):
        ks = [key[0] for _, key, _ in self.entries()]
        return max(ks, default=0)

    def compute_N(self, a, b):
        """Largest n with a nonzero jump, birth or death of size n at (a, b)."""
        for n in range(self.k_max, 0, -1):
            if self.gamma(n, a, b) or self.pi_birth(n, a, b) or self.pi_death(n, a, b):
                return n
        return 0

    @cached_property
    def N_bar(self):
        return max((self.compute_N(a, b) for a in self.values for b in self.values), default=0)

    @property
    def is_conservative(self):
        return not (self.birth_pair or self.death_pair or self.birth_site or self.death_site)

    def dense(self, K=None):
        """Per (a, b) lists of jump, birth and death rates indexed by k = 0..K."""
        K = self.k_max if K is None else K
        X = self.values
        G = [[[self.gamma(k, a, b) if k else Fraction(0) for k in range(K + 1)] for b in X] for a in X]
        B = [[[self.pi_birth(k, a, b) if k else Fraction(0) for k in range(K + 1)] for b in X] for a in X]
        D = [[[self.pi_death(k, a, b) if k else Fraction(0) for k in range(K + 1)] for b in X] for a in X]
        return G, B, D

    def denominators(self):
        return [v.denominator for _, _, v in self.entries()]

    def scaled(self, factor):
        factor = to_fraction(factor)
        return RateSpec.build(
            self.state_max,
            **{kind: {key: v * factor for key, v in getattr(self, kind)} for kind in KINDS},
        )

    def canonicalize(self):
        return canonicalize(self)

    def with_state_max(self, state_max):
        return canonicalize(RateSpec(state_max, self.jump, self.birth_pair, self.death_pair,
                                     self.birth_site, self.death_site))


@dataclass(frozen=True)
class Kernel:
    """Either a translation-invariant stencil or an explicit table of site pairs.

    Stencil entries are (offset, probability) with offsets in Z^d; explicit
    pairs are ((x, y), probability) with x, y flattened site indices.
    """

    kind: str
    d: int = 1
    stencil: tuple = ()
    pairs: tuple = ()

    @classmethod
    def nearest_neighbor(cls, d):
        w = Fraction(1, 2 * d)
        offsets = []
        for i in range(d):
            for s in (1, -1):
                off = [0] * d
                off[i] = s
                offsets.append((tuple(off), w))
        return cls("nearest_neighbor", d=d, stencil=tuple(sorted(offsets)))

    @classmethod
    def from_stencil(cls, d, stencil):
        items = tuple(sorted((tuple(int(c) for c in off), to_fraction(v))
                             for off, v in dict(stencil).items() if to_fraction(v) != 0))
        return cls("stencil", d=d, stencil=items)

    @classmethod
    def from_pairs(cls, pairs, d=1):
        items = tuple(sorted(((int(x), int(y)), to_fraction(v))
                             for (x, y), v in dict(pairs).items() if to_fraction(v) != 0))
        return cls("pairs", d=d, pairs=items)

    @property
    def is_translation_invariant(self):
        return self.kind in ("nearest_neighbor", "stencil")

    def site_weights(self, lattice):
        """Accumulated p(x, y) over flattened torus sites (wrap-around merges offsets)."""
        out = {}
        if self.is_translation_invariant:
            if lattice.d != self.d:
                raise ValueError(f"kernel is {self.d}-dimensional, lattice is {lattice.d}-dimensional")
            for x in lattice.sites():
                for off, w in self.stencil:
                    y = lattice.shift(x, off)
                    out[(x, y)] = out.get((x, y), Fraction(0)) + w
        else:
            n = lattice.n_sites
            for (x, y), w in self.pairs:
                if x >= n or y >= n:
                    raise ValueError(f"kernel pair ({x},{y}) outside a lattice of {n} sites")
                out[(x, y)] = w
        return out

    def weight(self, x, y, lattice=None):
        if lattice is not None:
            return self.site_weights(lattice).get((x, y), Fraction(0))
        if self.is_translation_invariant:
            off = tuple(b - a for a, b in zip(x, y))
            return dict(self.stencil).get(off, Fraction(0))
        return dict(self.pairs).get((x, y), Fraction(0))

    def distinct_weights(self):
        table = self.stencil if self.is_translation_invariant else self.pairs
        return sorted({w for _, w in table})

    def is_symmetric(self):
        if self.is_translation_invariant:
            st = dict(self.stencil)
            return all(st.get(tuple(-c for c in off), 0) == w for off, w in st.items())
        pr = dict(self.pairs)
        return all(pr.get((y, x), 0) == w for (x, y), w in pr.items())

    def bistochastic_errors(self):
        """Rows/columns whose sums differ from 1."""
        errors = []
        if self.is_translation_invariant:
            total = sum((w for _, w in self.stencil), Fraction(0))
            if total != 1:
                errors.append(f"stencil sums to {fraction_str(total)}, expected 1")
            for off, w in self.stencil:
                if len(off) != self.d:
                    errors.append(f"stencil offset {off} is not {self.d}-dimensional")
                if w < 0:
                    errors.append(f"negative kernel weight at offset {off}")
            return errors
        rows, cols = {}, {}
        for (x, y), w in self.pairs:
            if w < 0:
                errors.append(f"negative kernel weight at ({x},{y})")
            rows[x] = rows.get(x, Fraction(0)) + w
            cols[y] = cols.get(y, Fraction(0)) + w
        for x in sorted(set(rows) | set(cols)):
            r, c = rows.get(x, Fraction(0)), cols.get(x, Fraction(0))
            if r != 1:
                errors.append(f"row {x} sums to {fraction_str(r)}, expected 1")
            if c != 1:
                errors.append(f"column {x} sums to {fraction_str(c)}, expected 1")
        return errors


@dataclass(frozen=True)
class System:
    """A rate specification together with its kernel and death-kernel convention."""

    rates: RateSpec
    kernel: Kernel
    death_kernel_direction: str = "reverse"
    name: str = ""
    params: tuple = field(default=(), compare=False)

    @property
    def state_max(self):
        return self.rates.state_max


@dataclass(frozen=True)
class Issue:
    severity: str  # "error" or "warning"
    code: str
    message: str


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def errors(self):
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self):
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self):
        return not self.errors

    def __bool__(self):
        return bool(self.issues)

    def to_dict(self):
        return {
            "ok": self.ok,
            "issues": [{"severity": i.severity, "code": i.code, "message": i.message} for i in self.issues],
        }


def _leaves_space(kind, key, M):
    k = key[0]
    if kind == "jump":
        _, a, b = key
        return a - k < 0 or b + k > M
    if kind == "birth_pair":
        return key[2] + k > M
    if kind == "birth_site":
        return key[1] + k > M
    if kind == "death_pair":
        return key[1] - k < 0
    return key[1] - k < 0  # death_site


def validate(spec, space=None, kernel=None, k_cap=DEFAULT_K_CAP, direction="reverse"):
    """List every violated invariant of (spec, space, kernel); never raises."""
    report = ValidationReport()
    add = report.issues.append
    M = spec.state_max if space is None else space.max_occupancy
    if M < 0:
        add(Issue("error", "state_max", f"state_max must be >= 0, got {M}"))
    if space is not None and space.max_occupancy != spec.state_max:
        add(Issue("error", "state_max", f"spec is declared on X={{0..{spec.state_max}}} but the state space is {{0..{M}}}"))
    for kind, key, value in spec.entries():
        k = key[0]
        where = f"{kind}{list(key)}"
        if value < 0:
            add(Issue("error", "negative_rate", f"{where} = {fraction_str(value)} is negative"))
        if k < 1:
            add(Issue("error", "bad_k", f"{where}: k must be >= 1"))
        elif k > k_cap:
            add(Issue("error", "k_cap", f"{where}: k = {k} exceeds the cap {k_cap}"))
        if any(v < 0 or v > M for v in key[1:]):
            add(Issue("error", "state_out_of_range", f"{where}: occupancy outside X={{0..{M}}}"))
        elif k >= 1 and _leaves_space(kind, key, M):
            add(Issue("warning", "no_op_transition", f"{where}: transition leaves X, canonicalized to 0 (no-op transition)"))
    if kernel is not None:
        for msg in kernel.bistochastic_errors():
            add(Issue("error", "kernel_not_bistochastic", msg))
    if direction not in DIRECTIONS:
        add(Issue("error", "death_kernel_direction", f"death_kernel_direction must be one of {DIRECTIONS}, got {direction!r}"))
    return report


def canonicalize(spec):
    """Zero every rate whose transition would leave X; idempotent."""
    M = spec.state_max
    tables = {}
    for kind in KINDS:
        tables[kind] = {key: v for key, v in getattr(spec, kind)
                        if key[0] >= 1 and all(0 <= c <= M for c in key[1:]) and not _leaves_space(kind, key, M)}
    return RateSpec.build(M, **tables)


def compute_N(spec, a, b):
    return spec.compute_N(a, b)


@dataclass(frozen=True)
class LocalizedPair:
    """Two-site systems attached to an ordered pair (x, y).

    ``lower`` and ``upper`` keep jumps and pair rates and fold the independent
    rates in (births on y, deaths on x); every rate acts with weight ``p``.
    """

    lower: RateSpec
    upper: RateSpec
    p: Fraction
    pair: tuple = ()

    def effective(self, which):
        spec = self.lower if which == "lower" else self.upper
        return spec.scaled(self.p)


def pair_only(spec):
    """Fold P^k (on y) and P^{-k} (on x) into the pair birth/death tables."""
    X = spec.values
    births, deaths = {}, {}
    for k in range(1, spec.k_max + 1):
        for a in X:
            for b in X:
                pb = spec.pi_birth(k, a, b)
                pd = spec.pi_death(k, a, b)
                if pb:
                    births[(k, a, b)] = pb
                if pd:
                    deaths[(k, a, b)] = pd
    return canonicalize(RateSpec.build(spec.state_max, jump=dict(spec.jump),
                                       birth_pair=births, death_pair=deaths))


def localize(lower, upper, kernel, pair, lattice=None):
    x, y = pair
    p = kernel.weight(x, y, lattice)
    if p == 0:
        raise ZeroKernel(f"p({x},{y}) = 0: the pair carries no rates")
    return LocalizedPair(pair_only(lower), pair_only(upper), p, (x, y))


def common_denominator(*specs):
    den = 1
    for spec in specs:
        for d in spec.denominators():
            den = lcm(den, d)
    return den
