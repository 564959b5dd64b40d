#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Levy measures and the scalar functionals built from them.

A measure is built from a config block naming its kind:

    {"kind": "atoms", "atoms": [[1.0, 1.0], [-1.0, 1.0]]}
    {"kind": "atoms", "csv": "atoms.csv", "dimension": 2}
    {"kind": "stable", "alpha": 1.0, "c": 1.0, "dimension": 1}
    {"kind": "radial", "family": "truncated_stable", "alpha": 1.0, "range_bound": 0.5}

Atom rows list d coordinates followed by the mass.

"""

import math

import numpy as np

from ..core import ConfigInvalid, NonSymmetricMeasure, ZeroShift
from .base import LevyMeasure, TruncationConfig
from .profile import (
    REFLECTION_A, BASIC_B,
    integrability_check, limsup_condition, phi_derivatives, distance_profile,
    grid_sensitivity, psi_general_grid,
)
from . import profile as _profile

measure_kinds = ('atoms', 'stable', 'radial')

def construct_with_lazy_import(block, quad_points=128):
    """Instantiate the appropriate measure kind for a config block, with lazy module loading."""
    kind = block.get('kind')
    fields = {k: v for k, v in block.items() if k != 'kind'}
    try:
        if kind == 'atoms':
            from . import atoms
            dimension = fields.get('dimension')
            if 'csv' in fields:
                return atoms.DiscreteAtoms.from_csv(fields['csv'], dimension=dimension)
            return atoms.DiscreteAtoms.from_pairs(fields.get('atoms', []), dimension=dimension)
        elif kind == 'stable':
            from . import stable
            return stable.StableClosedForm(
                fields['alpha'], fields.get('c', 1.0), fields.get('dimension', 1), quad_points=quad_points,
            )
        elif kind == 'radial':
            from . import radial
            family = fields.pop('family', None)
            if family not in radial.profile_families:
                raise ConfigInvalid('measure.family must be one of %s, got %r' % (sorted(radial.profile_families), family))
            dimension = fields.pop('dimension', 1)
            profile = radial.profile_families[family](**fields)
            return radial.RadialDensity(profile, dimension, quad_points=quad_points)
    except KeyError as e:
        raise ConfigInvalid('measure block of kind %r is missing key %s' % (kind, e))
    except TypeError as e:
        raise ConfigInvalid('measure block of kind %r: %s' % (kind, e))
    raise ConfigInvalid('measure.kind must be one of %s, got %r' % (measure_kinds, kind))

from_config = construct_with_lazy_import

def _positive(r, name='r'):
    if not r > 0.0:
        raise ValueError('%s must be positive, got %r' % (name, r))

def psi_symmetric(nu, r):
    """Return the integral of |z|^2 nu(dz) over {|z| <= r}."""
    _positive(r)
    if not nu.is_symmetric:
        raise NonSymmetricMeasure('psi_symmetric needs a symmetric measure')
    return nu.psi(r)

def psi_general(nu, r, cfg=None):
    """Return r^2 times the grid infimum of the overlap mass over 0 < |x| <= r."""
    _positive(r)
    return _profile.psi_general(nu, r, cfg)

def phi(nu, r, variant=REFLECTION_A, cfg=None):
    return _profile.phi(nu, r, variant, cfg)

def overlap_mass(nu, x, epsilon=0.0, cfg=None, with_error=False):
    """Return (nu ^ (delta_x * nu)) restricted to {|z| > epsilon}.

       With with_error=True return (value, std_error); the error is
       nonzero only for Monte Carlo quadrature in d >= 2.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.any(x) and not nu.is_finite and epsilon == 0.0:
        raise ZeroShift('overlap of an infinite measure with itself is infinite')
    value, stderr = nu.overlap(x, epsilon, cfg)
    return (value, stderr) if with_error else value

def rho(nu, x, z, epsilon=0.0):
    """Return the control function at z (scalar for one point, array for rows)."""
    z = np.asarray(z, dtype=float)
    values = nu.rho(np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_2d(z) if z.ndim else z.reshape(1, 1), epsilon)
    return float(values[0]) if z.ndim <= 1 else values

def tail_mass(nu, r):
    """Return nu({|z| >= r})."""
    _positive(r)
    return nu.tail(r)

def sample_jump(nu, epsilon, rng, n=None):
    """Draw from nu(. | |z| > epsilon): one vector, or an (n, d) array when n is given."""
    jumps = nu.sample(epsilon, rng, 1 if n is None else n)
    return jumps[0] if n is None else jumps

def compensator_drift(nu, epsilon):
    """Return -integral of z nu(dz) over {epsilon < |z| < 1}."""
    return nu.compensator(epsilon)
