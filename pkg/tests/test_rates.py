from fractions import Fraction as F

import pytest

from ipscert.errors import ZeroKernel
from ipscert.lattice import Lattice
from ipscert.models import Epidemic, random_spec
from ipscert.rates import (Kernel, RateSpec, StateSpace, canonicalize, common_denominator, compute_N,
                           fraction_str, localize, pair_only, to_fraction, validate)


def codes(report):
    return [i.code for i in report.issues]


def test_validate_zero_spec_is_clean():
    report = validate(RateSpec.zero(2), StateSpace(2), Kernel.nearest_neighbor(1))
    assert report.issues == []
    assert report.ok


def test_validate_kernel_row_sum():
    kernel = Kernel.from_pairs({(0, 1): F(3, 4), (1, 0): F(1)})
    report = validate(RateSpec.zero(2), StateSpace(2), kernel)
    assert "kernel_not_bistochastic" in codes(report)
    assert not report.ok
    assert any("row 0 sums to 3/4" in i.message for i in report.errors)


def test_validate_warns_on_no_op_jump():
    spec = RateSpec.build(2, jump={(2, 1, 0): 1})
    report = validate(spec, StateSpace(2))
    assert report.ok
    assert [i.code for i in report.warnings] == ["no_op_transition"]
    assert "no-op transition" in report.warnings[0].message


def test_validate_errors():
    spec = RateSpec.build(2, jump={(1, 1, 0): -1, (1, 3, 0): 1}, birth_site={(9, 0): 1})
    report = validate(spec, StateSpace(2), k_cap=8, direction="sideways")
    assert set(codes(report)) >= {"negative_rate", "state_out_of_range", "k_cap", "death_kernel_direction"}


def test_canonicalize_examples():
    assert canonicalize(RateSpec.build(2, jump={(2, 1, 0): 1})).gamma(2, 1, 0) == 0
    assert canonicalize(RateSpec.build(2, birth_site={(2, 1): 5})).pi_birth(2, 0, 1) == 0
    spec = RateSpec.build(3, jump={(1, 1, 0): 1})
    assert canonicalize(spec) == spec


def test_canonicalize_idempotent():
    for seed in range(20):
        spec = random_spec(3, 2, 0.4, seed=seed)
        assert canonicalize(canonicalize(spec)) == canonicalize(spec)


def test_pi_combines_pair_and_site_rates():
    spec = RateSpec.build(2, birth_pair={(1, 1, 0): F(1, 2)}, birth_site={(1, 0): F(1, 3)},
                          death_pair={(1, 1, 1): 2}, death_site={(1, 1): 1})
    assert spec.pi_birth(1, 1, 0) == F(5, 6)
    assert spec.pi_birth(1, 2, 0) == F(1, 3)
    assert spec.pi_death(1, 1, 1) == 3
    assert spec.pi_death(1, 1, 0) == 1


def test_compute_N_examples():
    spec = RateSpec.build(3, jump={(1, 1, 0): 1, (3, 1, 0): 2})
    # (3, 1, 0) leaves X only after canonicalization, compute_N reads the table as stored
    assert compute_N(spec, 1, 0) == 3
    assert compute_N(RateSpec.zero(2), 0, 0) == 0
    epi = Epidemic(F(1), F(1), F(1), F(1, 2), 3).build().spec
    # N is 1 wherever some rate acts; at (0, M) nothing can happen, so N is 0 there
    zero = [(a, b) for a in range(4) for b in range(4) if compute_N(epi, a, b) != 1]
    assert zero == [(0, 3)]
    assert epi.N_bar == 1


def test_localize_epidemic_pair():
    built = Epidemic(F(3, 10), F(3, 10), F(1, 10), F(1, 2), 2).build()
    lat = Lattice(1, 10)
    loc = localize(built.spec, built.spec, built.kernel, (0, 1), lat)
    assert loc.p == F(1, 2)
    eff = loc.effective("upper")
    assert eff.pi_birth(1, 1, 0) == (built.spec.pi_birth(1, 1, 0)) * F(1, 2)
    assert eff.pi_death(1, 2, 0) == 1  # 2 * 1/2
    assert not eff.birth_site and not eff.death_site


def test_localize_conservative_has_jumps_only():
    spec = RateSpec.build(2, jump={(1, 1, 0): 1, (1, 2, 1): 1})
    loc = localize(spec, spec, Kernel.nearest_neighbor(1), (0, 1), Lattice(1, 4))
    assert loc.lower.is_conservative and loc.lower.jump


def test_localize_zero_kernel():
    with pytest.raises(ZeroKernel):
        localize(RateSpec.zero(1), RateSpec.zero(1), Kernel.nearest_neighbor(1), (0, 2), Lattice(1, 5))


def test_pair_only_preserves_rates():
    spec = random_spec(3, 2, 0.3, seed=11)
    folded = pair_only(spec)
    for k in range(1, 3):
        for a in range(4):
            for b in range(4):
                assert folded.pi_birth(k, a, b) == spec.pi_birth(k, a, b)
                assert folded.pi_death(k, a, b) == spec.pi_death(k, a, b)


def test_kernel_weights_on_torus():
    kernel = Kernel.nearest_neighbor(2)
    weights = kernel.site_weights(Lattice(2, 3))
    assert len(weights) == 9 * 4
    assert set(weights.values()) == {F(1, 4)}
    # on a side-2 torus left and right neighbours coincide
    assert set(Kernel.nearest_neighbor(1).site_weights(Lattice(1, 2)).values()) == {F(1)}
    assert kernel.is_symmetric()
    assert not Kernel.from_stencil(1, {(1,): 1}).is_symmetric()


def test_fractions():
    assert to_fraction("3/5") == F(3, 5)
    assert to_fraction(2) == 2
    assert fraction_str(F(2)) == "2/1"
    assert common_denominator(RateSpec.build(1, jump={(1, 1, 0): F(1, 6)}),
                              RateSpec.build(1, birth_site={(1, 0): F(1, 4)})) == 12
