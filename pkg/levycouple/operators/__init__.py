#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Coupling operators built from jump systems.

"""

from .systems import (
    Row, JumpSystem, SubDensity,
    synchronous_system, reflection_system, refined_basic_system, reflection_basic_system,
    build_multiplicative_system, multiplicative_reflection_system, multiplicative_refined_basic_system,
)
from .kernel import (
    CouplingKernel, KernelAtom,
    build_kernel, verify_marginality, verify_symmetry_condition,
    marginal_generator, kernel_generator,
)
from .generator import (
    TestFunction, Identity, Capped, Exponential, PhiProfile, GeneratorValue,
    make_test_function, eval_generator, compare_operators, compare_pair, check_lemma_bound, tail_bound,
    INFINITE_RANGE, FINITE_RANGE, L1_REFLECTION, L2_BASIC,
)

system_kinds = ('synchronous', 'reflection', 'refined_basic', 'reflection_basic')

def system_from_config(nu, block, sigma=None):
    """Build a jump system from a config block naming its kind."""
    from ..core import ConfigInvalid
    kind = block.get('kind')
    if kind == 'synchronous':
        js = synchronous_system(nu)
    elif kind == 'reflection':
        if sigma is not None:
            return multiplicative_reflection_system(nu, sigma, block.get('eta', 0.5))
        js = reflection_system(nu, block.get('eta', 0.5))
    elif kind == 'refined_basic':
        if sigma is not None:
            return multiplicative_refined_basic_system(nu, sigma, block.get('kappa', 1.0))
        js = refined_basic_system(nu, block.get('kappa', 1.0))
    elif kind == 'reflection_basic':
        js = reflection_basic_system(nu, SubDensity(nu, **block.get('q0', {"kind": "same"})))
    else:
        raise ConfigInvalid('system.kind must be one of %s, got %r' % (system_kinds, kind))
    return js if sigma is None else build_multiplicative_system(js, sigma)
