"""Built-in example systems and a seeded random rate generator.

Every builder returns a ``Built`` triple (spec, space, kernel) on the
nearest-neighbour kernel p(x, y) = 1/(2d).  Rates that act on a neighbouring
site carry a factor 2d so that each bond contributes the per-pair rate.
"""

import random
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import NamedTuple

from .errors import BadParams
from .rates import KINDS, Kernel, RateSpec, StateSpace, System, canonicalize, fraction_str, to_fraction


class Built(NamedTuple):
    spec: RateSpec
    space: StateSpace
    kernel: Kernel


def _rat(name, value):
    try:
        v = to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise BadParams(f"{name} must be a rational number, got {value!r}") from None
    if v < 0:
        raise BadParams(f"{name} must be >= 0, got {value}")
    return v


def _pos_int(name, value, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise BadParams(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


class _Model:
    name = ""

    def params(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Fraction):
                v = fraction_str(v)
            elif isinstance(v, tuple):
                v = ",".join(str(i) for i in v)
            out.append((f.name, str(v)))
        return tuple(out)

    def build(self):
        spec = canonicalize(self._rates())
        return Built(spec, StateSpace(spec.state_max), Kernel.nearest_neighbor(self.d))

    def system(self):
        b = self.build()
        return System(b.spec, b.kernel, "reverse", self.name, self.params())


@dataclass(frozen=True)
class Epidemic(_Model):
    """Individual-recovery epidemic on clusters of size M.

    An infected cluster with a infected infects a healthy neighbour at rate
    lam*a and an infected-but-not-full neighbour at rate beta*a; each
    infective recovers at rate 1, spreads inside its cluster at rate phi,
    and a healthy cluster is infected from outside at rate gamma.
    """

    lam: Fraction
    beta: Fraction
    gamma: Fraction
    phi: Fraction
    M: int
    d: int = 1
    name = "epidemic"

    def __post_init__(self):
        for f in ("lam", "beta", "gamma", "phi"):
            object.__setattr__(self, f, _rat(f, getattr(self, f)))
        object.__setattr__(self, "M", _pos_int("M", self.M))
        object.__setattr__(self, "d", _pos_int("d", self.d))

    def _rates(self):
        M, two_d = self.M, 2 * self.d
        bp, bs, ds = {}, {}, {}
        for a in range(1, M + 1):
            bp[(1, a, 0)] = two_d * self.lam * a
            for b in range(1, M):
                bp[(1, a, b)] = two_d * self.beta * a
        bs[(1, 0)] = self.gamma
        for b in range(1, M):
            bs[(1, b)] = self.phi * b
        for b in range(1, M + 1):
            ds[(1, b)] = Fraction(b)
        return RateSpec.build(M, birth_pair=bp, birth_site=bs, death_site=ds)


@dataclass(frozen=True)
class Tuberculosis(_Model):
    """Clusters of size M: outside infection lam*a, inside growth phi*b, whole-cluster recovery at rate 1."""

    lam: Fraction
    phi: Fraction
    M: int
    d: int = 1
    name = "tuberculosis"

    def __post_init__(self):
        object.__setattr__(self, "lam", _rat("lam", self.lam))
        object.__setattr__(self, "phi", _rat("phi", self.phi))
        object.__setattr__(self, "M", _pos_int("M", self.M))
        object.__setattr__(self, "d", _pos_int("d", self.d))

    def _rates(self):
        M = self.M
        bp = {(1, a, 0): 2 * self.d * self.lam * a for a in range(1, M + 1)}
        bs = {(1, b): self.phi * b for b in range(1, M)}
        ds = {(b, b): 1 for b in range(1, M + 1)}
        return RateSpec.build(M, birth_pair=bp, birth_site=bs, death_site=ds)


LABELINGS = ((0, 1, 2), (1, 0, 2))


@dataclass(frozen=True)
class TwoTypeContact(_Model):
    """Species A (empty), B, C coded by ``labeling`` = (code of A, code of B, code of C).

    B and C invade empty neighbours at rates lam1 and lam2 and recover at rate 1.
    """

    lam1: Fraction
    lam2: Fraction
    labeling: tuple = (0, 1, 2)
    d: int = 1
    name = "two_type_contact"

    def __post_init__(self):
        object.__setattr__(self, "lam1", _rat("lam1", self.lam1))
        object.__setattr__(self, "lam2", _rat("lam2", self.lam2))
        lab = tuple(int(i) for i in self.labeling)
        if lab not in LABELINGS:
            raise BadParams(f"labeling must be one of {LABELINGS}, got {self.labeling!r}")
        object.__setattr__(self, "labeling", lab)
        object.__setattr__(self, "d", _pos_int("d", self.d))

    def _rates(self):
        A, B, C = self.labeling
        two_d = 2 * self.d
        tables = {kind: {} for kind in KINDS}

        def invade(source, rate):
            # the invader sits on one site, the empty site on the other; the
            # change on the empty site is a birth on y or a death on x
            if source > A:
                tables["birth_pair"][(source - A, source, A)] = two_d * rate
            else:
                tables["death_pair"][(A - source, A, source)] = two_d * rate

        def recover(code):
            if code > A:
                tables["death_site"][(code - A, code)] = 1
            else:
                tables["birth_site"][(A - code, code)] = 1

        invade(B, self.lam1)
        invade(C, self.lam2)
        recover(B)
        recover(C)
        return RateSpec.build(2, **tables)


@dataclass(frozen=True)
class MetapopAllee(_Model):
    """Reproduction at rate 1 per individual, death phi_A (small sites) or phi,
    and mass migration of k individuals at rate lam when the source keeps
    at least M - N individuals."""

    M: int
    M_A: int
    N: int
    lam: Fraction
    phi: Fraction
    phi_A: Fraction
    d: int = 1
    name = "metapop_allee"

    def __post_init__(self):
        for f in ("lam", "phi", "phi_A"):
            object.__setattr__(self, f, _rat(f, getattr(self, f)))
        for f in ("M", "M_A", "N", "d"):
            object.__setattr__(self, f, _pos_int(f, getattr(self, f)))
        if not self.M >= self.M_A:
            raise BadParams("need M >= M_A > 0")
        if not self.M > self.N:
            raise BadParams("need M > N > 0")

    def _rates(self):
        M, N = self.M, self.N
        bs = {(1, b): b for b in range(1, M)}
        ds = {(1, b): b * (self.phi_A if b <= self.M_A else self.phi) for b in range(1, M + 1)}
        jump = {}
        for k in range(1, N + 1):
            for a in range(M + 1):
                for b in range(M + 1):
                    if a - k >= M - N and b + k <= M:
                        jump[(k, a, b)] = self.lam
        return RateSpec.build(M, jump=jump, birth_site=bs, death_site=ds)


@dataclass(frozen=True)
class Conservative(_Model):
    """Misanthrope-style jumps: k particles leave x at rate ``rate`` when x holds at least k.

    ``jumps`` overrides the default with explicit ((k, a, b), value) entries.
    """

    M: int
    rate: Fraction = Fraction(1)
    k_max: int = 1
    jumps: tuple = ()
    d: int = 1
    name = "conservative"

    def __post_init__(self):
        object.__setattr__(self, "M", _pos_int("M", self.M))
        object.__setattr__(self, "rate", _rat("rate", self.rate))
        object.__setattr__(self, "k_max", _pos_int("k_max", self.k_max))
        object.__setattr__(self, "d", _pos_int("d", self.d))
        jumps = tuple(sorted((tuple(key), _rat("jump", v)) for key, v in dict(self.jumps).items()))
        object.__setattr__(self, "jumps", jumps)

    def params(self):
        return tuple(p for p in super().params() if p[0] != "jumps")

    def _rates(self):
        if self.jumps:
            return RateSpec.build(self.M, jump=dict(self.jumps))
        jump = {(k, a, b): self.rate
                for k in range(1, self.k_max + 1)
                for a in range(k, self.M + 1)
                for b in range(self.M + 1)}
        return RateSpec.build(self.M, jump=jump)


MODELS = {cls.name: cls for cls in (Epidemic, Tuberculosis, TwoTypeContact, MetapopAllee, Conservative)}


def build(model):
    return model.build()


def random_spec(M, k_max, density, denominator_bound=4, seed=0, kinds=KINDS):
    """Sparse random rational rates, canonicalized; same seed gives the same spec."""
    rng = random.Random(seed)
    tables = {kind: {} for kind in KINDS}

    def draw():
        return Fraction(rng.randint(1, 2 * denominator_bound), rng.randint(1, denominator_bound))

    for kind in KINDS:
        for k in range(1, k_max + 1):
            if kind in ("jump", "birth_pair", "death_pair"):
                keys = [(k, a, b) for a in range(M + 1) for b in range(M + 1)]
            else:
                keys = [(k, a) for a in range(M + 1)]
            for key in keys:
                # always consume the same number of draws so kinds do not shift the stream
                hit = rng.random() < density
                value = draw()
                if hit and kind in kinds:
                    tables[kind][key] = value
    return canonicalize(RateSpec.build(M, **tables))
