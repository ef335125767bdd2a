"""Exact order certificates, increasing couplings, u-criterion ergodicity and
coupled simulation for particle systems with multiple births, deaths and jumps."""

from .errors import (BadParams, CouplingCycle, ExplodingRate, IpsError, ModelFileError, NotConservative,
                     NotSingleChange, OrderBroken, PhiOutOfRange, PhiZero, StateSpaceTooLarge, ZeroKernel)
from .lattice import Lattice
from .rates import Kernel, RateSpec, StateSpace, System, canonicalize, compute_N, localize, validate
from .order_checker import (Certificate, Quadruple, TupleFamily, Witness, certify_attractiveness,
                            certify_general, certify_stochastic_order, check_conservative_equivalence,
                            check_single_change, enumerate_families, index_sets_minus, index_sets_plus)
from .oracle import oracle_increasing_sets

__version__ = "0.1.0"
