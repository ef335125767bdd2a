import random
from fractions import Fraction

import pytest

from ipscert.models import random_spec
from ipscert.rates import RateSpec, canonicalize

ACCEPTANCE = {}


def record(criterion, passed, detail=""):
    """Store the outcome of one acceptance check; checks of the same criterion are AND-ed."""
    if criterion in ACCEPTANCE:
        old_passed, old_detail = ACCEPTANCE[criterion]
        passed, detail = old_passed and passed, f"{old_detail}; {detail}"
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")


def _tweak(spec, rng, up):
    """Move rates in the direction that tends to keep `spec` below (up=True) or above the original."""
    tables = {}
    for kind in ("jump", "birth_pair", "death_pair", "birth_site", "death_site"):
        grow = (kind.startswith("birth") and up) or (kind.startswith("death") and not up)
        out = {}
        for key, v in getattr(spec, kind):
            r = rng.random()
            if r < 0.25:
                v = v * Fraction(3, 2) if grow else v / 2
            elif r < 0.35:
                v = v / 2 if grow else v * Fraction(3, 2)
            out[key] = v
        tables[kind] = out
    return canonicalize(RateSpec.build(spec.state_max, **tables))


def random_pair(seed, M_max=3, k_max_max=2, density=None):
    """A seeded (lower, upper) pair; the mix covers ordered and non-ordered cases."""
    rng = random.Random(seed)
    M = rng.randint(1, M_max)
    k_max = rng.randint(1, min(k_max_max, M))
    dens = density if density is not None else rng.choice([0.1, 0.2, 0.35])
    base = random_spec(M, k_max, dens, 3, seed=rng.randrange(2**32))
    flavour = seed % 4
    if flavour == 0:
        return base, base
    if flavour == 1:
        return base, _tweak(base, rng, up=True)
    if flavour == 2:
        return _tweak(base, rng, up=False), base
    other = random_spec(M, k_max, dens, 3, seed=rng.randrange(2**32))
    return base, other


@pytest.fixture
def pair_factory():
    return random_pair
