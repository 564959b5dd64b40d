#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Rotationally symmetric alpha-stable Levy measure in closed form.

"""

import math

from .base import LevyMeasure, sphere_area
from .radial import RadialDensity, StableProfile

class StableClosedForm (RadialDensity):
    """nu(dz) = c |z|^(-d-alpha) dz with closed-form tail and psi."""
    kind = 'stable'

    def __init__(self, alpha, c=1.0, dimension=1, quad_points=128):
        profile = StableProfile(alpha, c)
        LevyMeasure.__init__(self, dimension)
        self.profile = profile
        self.quad_points = int(quad_points)
        self.area = sphere_area(self.dimension)
        self.upper = math.inf
        self.alpha = profile.alpha
        self.c = profile.c

    def to_config(self):
        return {"kind": self.kind, "alpha": self.alpha, "c": self.c, "dimension": self.dimension}

    def tail(self, r):
        return self.c * self.area * r ** (-self.alpha) / self.alpha

    def psi(self, r):
        return self.c * self.area * r ** (2.0 - self.alpha) / (2.0 - self.alpha)

    def sample_radius(self, epsilon, rng, n=1):
        """Pareto radii: P(R > s) = (s/epsilon)^(-alpha) for s >= epsilon."""
        self.check_tail(epsilon)
        return epsilon * (1.0 - rng.random(n)) ** (-1.0 / self.alpha)
