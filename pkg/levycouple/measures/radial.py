#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Rotationally symmetric Levy measures with a radial density.

The measure is nu(dz) = q(|z|) dz.  Every radial functional reduces
to a one-dimensional integral with the sphere area factor, and those
integrals are tabulated once per measure on geometric panels.

"""

import math

import numpy as np

from ..core import InvalidMeasure, QuadratureFailure, ConfigInvalid, logger
from .base import LevyMeasure, TruncationConfig, sphere_area, ball_volume, random_directions
from .quadrature import PanelIntegral, integrate, line_integral, log_knots

class StableProfile (object):
    """q(r) = c r^(-d-alpha)"""
    family = 'stable'

    def __init__(self, alpha, c=1.0):
        if not (0.0 < alpha < 2.0):
            raise ConfigInvalid('stability index alpha must lie in (0, 2), got %r' % (alpha,))
        if not c > 0.0:
            raise ConfigInvalid('scale c must be positive, got %r' % (c,))
        self.alpha = float(alpha)
        self.c = float(c)

    range_bound = None

    def __call__(self, r, d):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide='ignore'):
            return self.c * r ** (-d - self.alpha)

    def to_config(self):
        return {"family": self.family, "alpha": self.alpha, "c": self.c}

class TruncatedStableProfile (StableProfile):
    """q(r) = c r^(-d-alpha) for r <= R, zero beyond."""
    family = 'truncated_stable'

    def __init__(self, alpha, c=1.0, range_bound=1.0):
        StableProfile.__init__(self, alpha, c)
        if not (range_bound > 0.0 and math.isfinite(range_bound)):
            raise ConfigInvalid('range_bound must be positive and finite, got %r' % (range_bound,))
        self.range_bound = float(range_bound)

    def __call__(self, r, d):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.range_bound, StableProfile.__call__(self, r, d), 0.0)

    def to_config(self):
        return dict(StableProfile.to_config(self), range_bound=self.range_bound)

class TemperedStableProfile (StableProfile):
    """q(r) = c r^(-d-alpha) exp(-lambda r)"""
    family = 'tempered_stable'

    def __init__(self, alpha, c=1.0, tempering=1.0):
        StableProfile.__init__(self, alpha, c)
        if not tempering > 0.0:
            raise ConfigInvalid('tempering must be positive, got %r' % (tempering,))
        self.tempering = float(tempering)

    def __call__(self, r, d):
        r = np.asarray(r, dtype=float)
        return StableProfile.__call__(self, r, d) * np.exp(-self.tempering * r)

    def to_config(self):
        return dict(StableProfile.to_config(self), tempering=self.tempering)

profile_families = {
    'stable': StableProfile,
    'truncated_stable': TruncatedStableProfile,
    'tempered_stable': TemperedStableProfile,
}

class RadialDensity (LevyMeasure):
    kind = 'radial'
    radial = True

    # radial tables start here and extend to range_bound or table_max
    table_min = 1e-8
    table_max = 1e3

    def __init__(self, profile, dimension, quad_points=128):
        LevyMeasure.__init__(self, dimension, range_bound=profile.range_bound)
        self.profile = profile
        self.quad_points = int(quad_points)
        self.area = sphere_area(self.dimension)
        self.upper = self.range_bound if self.range_bound is not None else math.inf
        top = self.upper if math.isfinite(self.upper) else self.table_max
        knots = log_knots(self.table_min, top, self.quad_points)
        d = self.dimension
        try:
            self._psi = PanelIntegral(lambda s: self.area * s ** (d + 1) * self.q(s), knots, upper=self.upper)
            self._tail = PanelIntegral(lambda s: self.area * s ** (d - 1) * self.q(s), knots, upper=self.upper, origin=False)
            moment = self.psi(1.0) + self.tail(1.0)
        except QuadratureFailure as e:
            raise InvalidMeasure('integral of 1 ^ |z|^2 does not converge for %s: %s' % (profile.family, e))
        if not math.isfinite(moment):
            raise InvalidMeasure('integral of 1 ^ |z|^2 is infinite for %s' % (profile.family,))

    def to_config(self):
        return dict(self.profile.to_config(), kind=self.kind, dimension=self.dimension)

    def q(self, r):
        """Return the radial density at scalar radius r."""
        return float(self.profile(r, self.dimension))

    def radial_density(self, r):
        return self.profile(r, self.dimension)

    def density(self, z):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return self.radial_density(np.linalg.norm(z, axis=1))

    def tail(self, r):
        if r >= self.upper:
            return 0.0
        return max(self._tail.integral(r, self.upper), 0.0)

    def psi(self, r):
        return max(self._psi.below(r), 0.0)

    def _radial_tail_increment(self, a, b):
        return integrate(lambda s: self.area * s ** (self.dimension - 1) * self.q(s), a, b)

    ## overlap (nu ^ delta_x * nu)

    def overlap(self, x, epsilon=0.0, cfg=None):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            return self.tail_open(epsilon), 0.0
        if self.dimension == 1:
            return self._overlap_line(float(x[0]), epsilon), 0.0
        return self._overlap_monte_carlo(x, norm, epsilon, cfg or TruncationConfig())

    def _overlap_line(self, x, epsilon):
        if epsilon == 0.0:
            # q is nonincreasing, so the min picks q(max(|z|, |z-x|))
            return self.tail(abs(x) / 2.0)
        q = self.profile
        def integrand(z):
            return min(float(q(abs(z), 1)), float(q(abs(z - x), 1)))
        breaks = [x, x / 2.0, -epsilon, epsilon, x - epsilon, x + epsilon]
        if self.range_bound is not None:
            R = self.range_bound
            breaks.extend([R, -R, x - R, x + R])
        left = line_integral(integrand, breaks, upper=-epsilon, what='overlap integral')
        right = line_integral(integrand, breaks, lower=epsilon, what='overlap integral')
        return left + right

    def _overlap_monte_carlo(self, x, norm, epsilon, cfg):
        """Importance-sampled overlap in d >= 2.

           Outside radius b = max(epsilon, |x|/8) samples come from nu
           itself; inside, from the uniform law on the ball of radius b.
        """
        d = self.dimension
        n = cfg.mc_points
        rng = cfg.mc_generator(d, 0)
        b = max(epsilon, norm / 8.0)

        z = self.sample(b, rng, n)
        own = self.density(z)
        shifted = self.density(z - x)
        ratio = np.minimum(own, shifted) / own
        outer_mass = self.tail_open(b)
        value = outer_mass * ratio.mean()
        var = (outer_mass ** 2) * ratio.var(ddof=1) / n

        if b > epsilon:
            u = random_directions(rng, n, d) * (b * rng.random((n, 1)) ** (1.0 / d))
            inside = np.linalg.norm(u, axis=1) > epsilon
            w = np.where(inside, np.minimum(self.density(u), self.density(u - x)), 0.0)
            vol = ball_volume(d) * b ** d
            value += vol * w.mean()
            var += (vol ** 2) * w.var(ddof=1) / n

        stderr = math.sqrt(var)
        logger.debug('overlap |x|=%g epsilon=%g: %g +/- %g' % (norm, epsilon, value, stderr))
        return float(value), float(stderr)

    ## sampling

    def _sampling_table(self, epsilon):
        key = ('sample', epsilon)
        if key not in self._cache:
            top = self.upper if math.isfinite(self.upper) else max(self.table_max, 10.0 * epsilon)
            knots = log_knots(epsilon, top, self.quad_points)
            increments = np.array([
                self._radial_tail_increment(a, b)
                for a, b in zip(knots[:-1], knots[1:])
            ])
            last = self.tail(top)
            tails = last + np.concatenate([np.cumsum(increments[::-1])[::-1], [0.0]])
            self._cache[key] = (knots, tails)
        return self._cache[key]

    def sample_radius(self, epsilon, rng, n=1):
        """Return n radii from the normalized restriction of nu to |z| > epsilon."""
        self.check_tail(epsilon)
        knots, tails = self._sampling_table(epsilon)
        target = tails[0] * (1.0 - rng.random(n))
        out = np.empty(n)

        # targets below the last knot's tail follow a Pareto extrapolation
        beyond = target < tails[-1]
        if np.any(beyond):
            slope = math.log(tails[-2] / tails[-1]) / math.log(knots[-1] / knots[-2])
            out[beyond] = knots[-1] * (target[beyond] / tails[-1]) ** (-1.0 / slope)

        inside = ~beyond
        rev_tails = tails[::-1]
        k = len(knots) - 1 - np.searchsorted(rev_tails, target[inside], side='left')
        k = np.clip(k, 0, len(knots) - 2)
        t0, t1 = tails[k], tails[k + 1]
        s0, s1 = knots[k], knots[k + 1]
        with np.errstate(divide='ignore', invalid='ignore'):
            loglog = np.exp(np.log(s0) + (np.log(target[inside]) - np.log(t0)) * np.log(s1 / s0) / np.log(t1 / t0))
            linear = s0 * (s1 / s0) ** ((t0 - target[inside]) / (t0 - t1))
        out[inside] = np.where(t1 > 0.0, loglog, linear)
        return np.clip(out, epsilon, self.upper)

    def sample(self, epsilon, rng, n=1):
        radii = self.sample_radius(epsilon, rng, n)
        return random_directions(rng, n, self.dimension) * radii[:, None]
