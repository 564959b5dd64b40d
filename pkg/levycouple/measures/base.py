#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Shared Levy measure behaviour.

A measure kind implements the LevyMeasure API below.  Callers other
than the measures package itself should use the module-level
operations in levycouple.measures, which add argument checks.

"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

from ..core import ConfigInvalid, EmptyTail, UnsupportedPoint

@dataclass(frozen=True)
class TruncationConfig (object):
    """Small-jump cutoff and quadrature resolution.

       epsilon: jumps with |z| <= epsilon are not simulated
       quad_points: knots per radial quadrature table
       mc_points: Monte Carlo sample count for d >= 2 integrals
       seed: seed for Monte Carlo quadrature streams
    """
    epsilon: float = 1e-3
    quad_points: int = 128
    mc_points: int = 20000
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigInvalid('truncation.epsilon must lie in (0, 1), got %r' % (self.epsilon,))
        if int(self.quad_points) != self.quad_points or self.quad_points < 64:
            raise ConfigInvalid('truncation.quad_points must be an integer >= 64, got %r' % (self.quad_points,))
        if int(self.mc_points) != self.mc_points or self.mc_points < 1:
            raise ConfigInvalid('truncation.mc_points must be a positive integer, got %r' % (self.mc_points,))

    @classmethod
    def from_config(cls, block):
        return cls(**block)

    def mc_generator(self, *key):
        """Return a Monte Carlo quadrature stream for the given key."""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=tuple(key))))

def sphere_area(d):
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / gamma(d / 2.0)

def ball_volume(d):
    """Volume of the unit ball in R^d."""
    return sphere_area(d) / d

def random_directions(rng, n, d):
    """Return n independent uniform unit vectors in R^d as an (n, d) array."""
    if d == 1:
        return rng.choice([-1.0, 1.0], size=(n, 1))
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)

class LevyMeasure (object):
    """Abstract pure-jump Levy measure on R^d minus the origin.

       Subclasses set kind and implement tail, psi, overlap, rho,
       sample, and compensator.  Radial kinds also provide
       radial_density(r).
    """
    kind = None
    atomic = False
    radial = False

    def __init__(self, dimension, range_bound=None):
        self.dimension = int(dimension)
        if self.dimension < 1:
            raise ConfigInvalid('measure dimension must be >= 1, got %r' % (dimension,))
        self.range_bound = range_bound
        self._cache = {}

    @property
    def is_symmetric(self):
        """True for rotationally symmetric measures."""
        return self.radial

    @property
    def is_finite(self):
        """True when the total mass is finite."""
        return False

    def total_mass(self):
        return math.inf

    def tail(self, r):
        """Return nu({|z| >= r})."""
        raise NotImplementedError()

    def psi(self, r):
        """Return the integral of |z|^2 over {|z| <= r}."""
        raise NotImplementedError()

    def overlap(self, x, epsilon=0.0, cfg=None):
        """Return (value, std_error) of (nu ^ (delta_x * nu)) restricted to |z| > epsilon."""
        raise NotImplementedError()

    def density(self, z):
        """Return the density (or atom mass) of nu at each row of z."""
        raise NotImplementedError()

    def shifted_density(self, x, z, epsilon=0.0):
        """Return the density of delta_x * nu restricted to |z - x| > epsilon at each row of z."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        w = z - np.asarray(x, dtype=float)
        values = self.density(w)
        return np.where(np.linalg.norm(w, axis=1) > epsilon, values, 0.0)

    def rho(self, x, z, epsilon=0.0):
        """Return d(nu ^ (delta_x * nu))/d nu at each row of z."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        own = self.density(z)
        if np.any(~(own > 0.0)):
            raise UnsupportedPoint('point outside the support of the %s measure' % (self.kind,))
        if not np.any(np.asarray(x, dtype=float)):
            return np.ones(len(z))
        return np.minimum(own, self.shifted_density(x, z, epsilon)) / own

    def sample(self, epsilon, rng, n=1):
        """Return n jumps drawn from nu(. | |z| > epsilon) as an (n, d) array."""
        raise NotImplementedError()

    def compensator(self, epsilon):
        """Return -integral of z over {epsilon < |z| < 1}."""
        return np.zeros(self.dimension)

    def check_tail(self, epsilon):
        mass = self.tail_open(epsilon)
        if not mass > 0.0:
            raise EmptyTail('no %s mass beyond |z| > %g' % (self.kind, epsilon))
        return mass

    def tail_open(self, r):
        """Return nu({|z| > r}); equals tail(r) for measures without atoms."""
        return self.tail(r)

    def to_config(self):
        raise NotImplementedError()

    def __reduce__(self):
        # tables hold closures; workers rebuild the measure from its config
        return (rebuild_measure, (self.to_config(), getattr(self, 'quad_points', 128)))

def rebuild_measure(block, quad_points=128):
    from . import construct_with_lazy_import
    return construct_with_lazy_import(dict(block), quad_points=quad_points)
