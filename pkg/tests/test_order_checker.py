from fractions import Fraction as F
from itertools import product

import pytest

from conftest import random_pair
from ipscert.errors import NotConservative, NotSingleChange
from ipscert.lattice import Lattice
from ipscert.models import Epidemic, MetapopAllee, Tuberculosis, TwoTypeContact, random_spec
from ipscert.order_checker import (GeneralSystem, Quadruple, TupleFamily, all_witnesses, certify_attractiveness,
                                   certify_general, certify_stochastic_order, check_condition_minus,
                                   check_condition_plus, check_conservative_equivalence, check_single_change,
                                   enumerate_families, index_sets_minus, index_sets_plus)
from ipscert.rates import Kernel, RateSpec, System

Q = Quadruple


def fam(first, m):
    return TupleFamily(tuple(first), tuple(m))


# index sets --------------------------------------------------------------

@pytest.mark.parametrize("q, f, I_a, I_b", [
    ((0, 0, 1, 1), fam([0], [2]), {2}, {1, 2, 3}),
    ((0, 0, 0, 0), fam([0], [0]), set(), set()),
    ((0, 0, 1, 0), fam([0, 1], [1, 3]), {1, 2, 3}, {1, 2, 3, 4}),
])
def test_index_sets_plus(q, f, I_a, I_b):
    sets = index_sets_plus(Q(*q), f)
    assert (sets.I_a, sets.I_b) == (I_a, I_b)


@pytest.mark.parametrize("q, f, I_c, I_d", [
    ((0, 0, 1, 1), fam([0], [2]), {2}, {1, 2, 3}),
    ((1, 1, 1, 1), fam([0], [1]), {1}, {1}),
    ((0, 1, 2, 1), fam([0], [3]), {3}, {1, 2, 3}),
])
def test_index_sets_minus(q, f, I_c, I_d):
    sets = index_sets_minus(Q(*q), f)
    assert (sets.I_c, sets.I_d) == (I_c, I_d)


# single conditions ----------------------------------------------------------

CONTACT_BAD = TwoTypeContact(1, 1, (0, 1, 2)).build().spec
CONTACT_GOOD = TwoTypeContact(1, 1, (1, 0, 2)).build().spec


def test_condition_plus_two_type_contact():
    v = check_condition_plus(CONTACT_BAD, CONTACT_BAD, Q(2, 0, 2, 1), fam([0], [0]))
    assert (v.holds, v.lhs, v.rhs) == (False, 2, 0)


def test_condition_plus_reflexive_and_zero_lower():
    spec = random_spec(3, 2, 0.4, seed=3)
    for a, b in product(range(4), repeat=2):
        for f in enumerate_families(Q(a, b, a, b), 2, dedup=False):
            assert check_condition_plus(spec, spec, Q(a, b, a, b), f).holds
            assert check_condition_plus(RateSpec.zero(3), spec, Q(a, b, a, b), f).lhs == 0


def test_condition_minus_tuberculosis():
    spec = Tuberculosis(1, 1, 2).build().spec
    v = check_condition_minus(spec, spec, Q(1, 0, 1, 0), fam([0], [1]))
    assert (v.holds, v.lhs, v.rhs) == (True, 1, 1)


def test_condition_minus_zero_upper_and_pure_death():
    spec = random_spec(2, 2, 0.4, seed=5)
    assert check_condition_minus(spec, RateSpec.zero(2), Q(0, 0, 1, 1), fam([0], [1])).rhs == 0
    lower = RateSpec.build(1, death_site={})
    upper = RateSpec.build(1, death_site={(1, 1): 1})
    v = check_condition_minus(lower, upper, Q(0, 0, 1, 0), fam([0], [0]))
    assert (v.holds, v.lhs, v.rhs) == (True, 0, 0)


# family enumeration ----------------------------------------------------------

def test_families_n1():
    raw = list(enumerate_families(Q(0, 0, 0, 0), 1, dedup=False))
    assert {(f.first, f.m) for f in raw} == {((j,), (m,)) for j in (0, 1) for m in (0, 1)}
    deduped = list(enumerate_families(Q(0, 0, 0, 0), 1))
    assert len(deduped) == 3 < len(raw)


def test_families_n0_empty():
    assert list(enumerate_families(Q(0, 0, 0, 0), 0)) == []
    assert list(enumerate_families(Q(0, 0, 0, 0), 0, dedup=False)) == []


def signature_plus(q, f, N):
    sets = index_sets_plus(q, f)
    clip = set(range(1, N + 1))
    return f.first[0], sets.I_a & clip, sets.I_b & clip


def test_families_n2_contains_chain_up_to_signature():
    q, N = Q(0, 0, 0, 0), 2
    target = fam([0, 1], [1, 2])
    assert target in list(enumerate_families(q, N, dedup=False))
    deduped = list(enumerate_families(q, N))
    assert any(f.K == 2 for f in deduped)
    assert signature_plus(q, target, N) in {signature_plus(q, f, N) for f in deduped}


def test_dedup_keeps_every_signature():
    for q in (Q(0, 0, 1, 0), Q(1, 0, 2, 2), Q(0, 1, 0, 3)):
        for N in (1, 2, 3):
            raw = {signature_plus(q, f, N) for f in enumerate_families(q, N, dedup=False)}
            kept = [signature_plus(q, f, N) for f in enumerate_families(q, N)]
            assert set(kept) == raw
            assert len(kept) == len(set(kept))


# certificates ------------------------------------------------------------------

def test_certify_two_type_contact():
    cert = certify_stochastic_order(CONTACT_BAD, CONTACT_BAD)
    assert cert.verdict == "NotOrdered"
    assert cert.witness.quadruple == Q(2, 0, 2, 1)
    assert certify_stochastic_order(CONTACT_GOOD, CONTACT_GOOD).ordered


def test_certify_tuberculosis_pair():
    lower = Tuberculosis(1, 1, 2).build().spec
    upper = Tuberculosis(2, 2, 3).build().spec
    assert certify_stochastic_order(lower, upper).ordered
    assert not certify_stochastic_order(upper, lower).ordered


def test_tuberculosis_characterization():
    # phi never acts when M = 1, so the lower phi is free there
    grid = list(product([F(1, 2), F(1), F(2)], [F(1, 2), F(1), F(2)], [1, 2, 3]))
    specs = {g: Tuberculosis(*g).build().spec for g in grid}
    for lo, up in product(grid, repeat=2):
        expected = lo[0] <= up[0] and lo[2] <= up[2] and (lo[1] <= up[1] or lo[2] == 1)
        assert certify_stochastic_order(specs[lo], specs[up]).ordered == expected, (lo, up)


def test_certify_attractiveness_examples():
    for params in product([F(1, 5), F(2)], [F(1, 5), F(2)], [0, F(1)], [0, F(1, 2)], [1, 3]):
        assert certify_attractiveness(Epidemic(*params).build().spec).ordered
    assert certify_attractiveness(MetapopAllee(4, 2, 2, 1, 1, 1).build().spec).ordered
    assert not certify_attractiveness(CONTACT_BAD).ordered


def test_certificate_json_shape():
    doc = certify_attractiveness(CONTACT_BAD).to_dict()
    assert doc["verdict"] == "NotOrdered"
    assert set(doc["counts"]) == {"quadruples", "families"}
    w = doc["witness"]
    assert (w["alpha"], w["beta"], w["gamma"], w["delta"], w["side"]) == (2, 0, 2, 1, "Cplus")
    assert (w["K"], w["j"], w["m"], w["lhs"], w["rhs"]) == (1, [0], [0], "2/1", "0/1")


def test_witnesses_reproduce_their_values():
    for seed in range(80):
        lower, upper = random_pair(seed)
        for w in all_witnesses(lower, upper)[:20]:
            check = check_condition_plus if w.side == "Cplus" else check_condition_minus
            v = check(lower, upper, w.quadruple, w.family)
            assert not v.holds
            assert (v.lhs, v.rhs) == (w.lhs, w.rhs)


def test_monotone_redundancy_of_large_m():
    """Raising a last m that sits at the cap N above N never turns a holding condition into a failing one."""
    for seed in range(30):
        lower, upper = random_pair(seed)
        for a, b in product(lower.values, repeat=2):
            for c, d in product(range(a, upper.state_max + 1), range(b, upper.state_max + 1)):
                q = Q(a, b, c, d)
                N = max(lower.compute_N(a, b), upper.compute_N(c, d))
                for f in enumerate_families(q, N, dedup=False):
                    if f.m[-1] != N:
                        continue
                    big = TupleFamily(f.first, f.m[:-1] + (N + 3,))
                    for check in (check_condition_plus, check_condition_minus):
                        if check(lower, upper, q, f).holds:
                            assert check(lower, upper, q, big).holds


def test_different_state_spaces():
    lower = Tuberculosis(1, 1, 1).build().spec
    upper = Tuberculosis(1, 1, 3).build().spec
    cert = certify_stochastic_order(lower, upper)
    assert cert.ordered
    assert cert.quadruples_checked == sum(1 for a, b in product(range(2), repeat=2)
                                          for c in range(a, 4) for d in range(b, 4))


# single-change systems ------------------------------------------------------------

def test_single_change_epidemic():
    spec = Epidemic(F(3, 10), F(1, 2), F(1, 10), F(1, 2), 3).build().spec
    assert check_single_change(spec, spec).ordered
    assert check_single_change(spec, spec).method == "single_change"


def test_single_change_nonmonotone_reaction_diffusion():
    # jump rate 2 from occupancy 1 but only 1 from occupancy 2
    spec = RateSpec.build(2, jump={(1, 1, 0): 2, (1, 1, 1): 2, (1, 2, 0): 1, (1, 2, 1): 1},
                          birth_site={(1, 0): 1}, death_site={(1, 1): 1, (1, 2): 2})
    cert = check_single_change(spec, spec)
    assert not cert.ordered
    assert not certify_stochastic_order(spec, spec).ordered
    assert cert.witness.side in ("C+1", "C+10", "C-1", "C-10")


def test_single_change_rejects_big_jumps():
    spec = RateSpec.build(2, jump={(2, 2, 0): 1})
    with pytest.raises(NotSingleChange):
        check_single_change(spec, spec)


def test_single_change_matches_general_checker():
    for seed in range(300):
        lower, upper = random_pair(seed, k_max_max=1)
        assert check_single_change(lower, upper).verdict == certify_stochastic_order(lower, upper).verdict


# conservative systems ------------------------------------------------------------

def test_conservative_misanthrope():
    spec = RateSpec.build(2, jump={(1, a, b): 1 for a in (1, 2) for b in (0, 1)})
    res = check_conservative_equivalence(spec, spec)
    assert (res.verdict_single_index, res.verdict_interval_form, res.agree) == ("Ordered", "Ordered", True)


def test_conservative_jumps_against_none():
    lower = RateSpec.build(2, jump={(2, 2, 0): 1})
    res = check_conservative_equivalence(lower, RateSpec.zero(2))
    assert (res.verdict_single_index, res.verdict_interval_form, res.agree) == ("NotOrdered", "NotOrdered", True)


def test_conservative_zero_and_errors():
    res = check_conservative_equivalence(RateSpec.zero(2), RateSpec.zero(2))
    assert res.verdict_single_index == res.verdict_interval_form == "Ordered"
    with pytest.raises(NotConservative):
        check_conservative_equivalence(RateSpec.build(1, birth_site={(1, 0): 1}), RateSpec.zero(1))


# site-dependent systems -----------------------------------------------------------

def test_general_identical_systems():
    system = Epidemic(F(3, 10), F(3, 10), F(1, 10), F(1, 2), 2).system()
    lat = Lattice(1, 6)
    g = GeneralSystem.from_system(system, lat)
    cert = certify_general(g, g)
    assert cert.ordered and cert.sufficient_only and cert.method == "general"
    assert cert.to_dict()["sufficient_only"] is True


def test_general_lower_without_kernel():
    lat = Lattice(1, 4)
    lower = GeneralSystem.build(3, {}, default_rates=random_spec(3, 1, 0.5, seed=2))
    births = random_spec(3, 1, 0.5, seed=9, kinds=("birth_pair", "birth_site"))
    upper = GeneralSystem.from_system(System(births, Kernel.nearest_neighbor(1)), lat)
    assert certify_general(lower, upper).ordered
    # with deaths in the upper system the weightless lower one cannot match them
    upper = GeneralSystem.from_system(MetapopAllee(3, 1, 1, 1, 1, 1).system(), lat)
    cert = certify_general(lower, upper)
    assert not cert.ordered and cert.witness.side == "Cminus" and cert.witness.lhs == 0


def test_general_tuberculosis():
    lat = Lattice(1, 6)
    lower = GeneralSystem.from_system(Tuberculosis(1, 1, 2).system(), lat)
    upper = GeneralSystem.from_system(Tuberculosis(2, 2, 3).system(), lat)
    assert certify_general(lower, upper).ordered
    assert not certify_general(upper, lower).ordered


def test_general_different_kernels():
    lat = Lattice(1, 4)
    spec = RateSpec.build(1, jump={(1, 1, 0): 1})
    fast = GeneralSystem.from_system(System(spec, Kernel.nearest_neighbor(1)), lat)
    lazy = GeneralSystem.from_system(
        System(spec, Kernel.from_stencil(1, {(1,): F(1, 4), (-1,): F(1, 4), (0,): F(1, 2)})), lat)
    # the lazy walker leaves an occupied site at half the rate: (C-) fails on the
    # quadruple (1,0,1,0) in one direction and (C+) in the other
    cert = certify_general(lazy, fast)
    assert not cert.ordered and cert.witness.side == "Cminus"
    assert cert.witness.quadruple == Q(1, 0, 1, 0)
    assert cert.witness.pair[0] != cert.witness.pair[1]
    back = certify_general(fast, lazy)
    assert not back.ordered and back.witness.side == "Cplus"
