#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Rate functions psi and the concave distance profile Phi.

Two variants exist.  ReflectionA uses psi(r), the second moment of nu
on the ball of radius r, scaled as psi(s/4); it needs a rotationally
symmetric measure.  BasicB uses the overlap rate

    psi(r) = r^2 inf_{|x| <= r} (nu ^ (delta_x * nu))(R^d)

scaled as psi(s/2).  In both cases

    Phi(r) = integral over [0, 1] of (s ^ r) / psi(s/k) ds

which is constant for r >= 1.

"""

import math

import numpy as np

from ..core import IntegrabilityViolation, NonSymmetricMeasure, QuadratureFailure, logger
from .base import TruncationConfig, random_directions
from .quadrature import PanelIntegral, integrate, log_knots

REFLECTION_A = 'ReflectionA'
BASIC_B = 'BasicB'

variants = {
    REFLECTION_A: 4.0,
    BASIC_B: 2.0,
}

def variant_scale(variant):
    try:
        return variants[variant]
    except KeyError:
        raise ValueError('unknown Phi variant %r, expected one of %s' % (variant, sorted(variants)))

def shift_directions(nu, count=16):
    """Return unit shift directions for the psi_general infimum."""
    d = nu.dimension
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if nu.radial:
        e1 = np.zeros((1, d))
        e1[0, 0] = 1.0
        return e1
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
    return random_directions(rng, count, d)

def psi_general_grid(nu, r, magnitudes=32, directions=16, cfg=None):
    """Return (value, x_star) for the grid infimum of r^2 overlap(x) over |x| <= r."""
    mags = np.geomspace(r / 100.0, r, magnitudes + 1)[1:]
    best = math.inf
    x_star = None
    for e in shift_directions(nu, directions):
        for m in mags:
            value, stderr = nu.overlap(m * e, 0.0, cfg)
            if value < best:
                best = value
                x_star = m * e
    return r * r * best, x_star

def psi_general(nu, r, cfg=None):
    return psi_general_grid(nu, r, cfg=cfg)[0]

def grid_sensitivity(nu, r, cfg=None):
    """Relative change of psi_general when the magnitude grid is refined fourfold."""
    coarse = psi_general_grid(nu, r, magnitudes=32, cfg=cfg)[0]
    fine = psi_general_grid(nu, r, magnitudes=128, cfg=cfg)[0]
    if fine == 0.0:
        return 0.0 if coarse == 0.0 else math.inf
    return abs(coarse - fine) / fine

class TabulatedRate (object):
    """psi_general interpolated log-log between knots on (0, 1]."""
    def __init__(self, nu, count=61, lo=1e-7, cfg=None):
        self.knots = log_knots(lo, 1.0, count)
        self.values = np.array([psi_general(nu, u, cfg) for u in self.knots])
        if np.any(~(self.values > 0.0)):
            raise IntegrabilityViolation('overlap rate vanishes at r = %g' % (self.knots[np.argmin(self.values)],))
        self.log_knots = np.log(self.knots)
        self.log_values = np.log(self.values)
        self.slope = (self.log_values[1] - self.log_values[0]) / (self.log_knots[1] - self.log_knots[0])

    def __call__(self, u):
        lu = math.log(u)
        if lu < self.log_knots[0]:
            return math.exp(self.log_values[0] + self.slope * (lu - self.log_knots[0]))
        return math.exp(np.interp(lu, self.log_knots, self.log_values))

def rate_function(nu, variant, cfg=None):
    """Return the unscaled rate u -> psi(u) for the variant."""
    variant_scale(variant)
    if variant == REFLECTION_A:
        if not nu.is_symmetric:
            raise NonSymmetricMeasure('the reflection profile needs a rotationally symmetric measure')
        return nu.psi
    key = ('rate', variant)
    if key not in nu._cache:
        nu._cache[key] = TabulatedRate(nu, cfg=cfg)
    return nu._cache[key]

def integrability_check(nu, variant, cfg=None, levels=30, window=5, threshold=0.95):
    """Check numerically that integral over (0, 1] of s/psi(s) is finite.

       The dyadic increments I_k over [2^-k, 2^-k+1] must decay
       geometrically: the last `window` ratios I_(k+1)/I_k stay below
       threshold.  Returns a report dict, never raises for a failed check.
    """
    report = dict(variant=variant, ok=False, value=math.inf, ratio=math.inf, reason=None)
    try:
        rate = rate_function(nu, variant, cfg)
    except IntegrabilityViolation as e:
        report['reason'] = str(e)
        return report
    edges = [2.0 ** -k for k in range(levels + 1)]
    if any(not rate(s) > 0.0 for s in edges[1:]):
        report['reason'] = 'rate vanishes on (0, 1]'
        return report
    try:
        increments = np.array([
            integrate(lambda s: s / rate(s), lo, hi)
            for hi, lo in zip(edges[:-1], edges[1:])
        ])
    except QuadratureFailure as e:
        report['reason'] = str(e)
        return report
    ratios = increments[-window:] / increments[-window - 1:-1]
    ratio = float(ratios.max())
    report['ratio'] = ratio
    if ratio <= threshold:
        report['ok'] = True
        report['value'] = float(increments.sum() + increments[-1] * ratio / (1.0 - ratio))
    else:
        report['reason'] = 'dyadic increments decay too slowly (ratio %.3f)' % ratio
    return report

class DistanceProfile (object):
    """Phi with its first two derivatives for one measure and variant."""

    def __init__(self, nu, variant, cfg=None):
        self.variant = variant
        self.k = variant_scale(variant)
        cfg = cfg or TruncationConfig()
        report = integrability_check(nu, variant, cfg)
        if not report['ok']:
            raise IntegrabilityViolation('integral of s/psi(s) over (0, 1] appears infinite: %s' % report['reason'])
        self.rate = rate_function(nu, variant, cfg)
        knots = log_knots(1e-7, 1.0, cfg.quad_points)
        k = self.k
        try:
            self._first = PanelIntegral(lambda s: s / self.rate(s / k), knots, upper=1.0)
            self._second = PanelIntegral(lambda s: 1.0 / self.rate(s / k), knots, upper=1.0, origin=False)
        except QuadratureFailure as e:
            raise IntegrabilityViolation('Phi quadrature failed: %s' % e)
        logger.debug('Phi %s ready, Phi(1) = %g' % (variant, self._first.total()))

    def __call__(self, r):
        if r <= 0.0:
            return 0.0
        r = min(r, 1.0)
        return self._first.below(r) + r * self._second.integral(r, 1.0)

    def derivative(self, r):
        if r >= 1.0:
            return 0.0
        if r <= 0.0:
            return math.inf
        return self._second.integral(r, 1.0)

    def second_derivative(self, r):
        if r >= 1.0:
            return 0.0
        return -1.0 / self.rate(r / self.k)

def distance_profile(nu, variant, cfg=None):
    """Return the cached DistanceProfile of nu for variant."""
    key = ('phi', variant)
    if key not in nu._cache:
        nu._cache[key] = DistanceProfile(nu, variant, cfg)
    return nu._cache[key]

def phi(nu, r, variant, cfg=None):
    if r < 0.0:
        raise ValueError('Phi needs r >= 0, got %r' % (r,))
    if r == 0.0:
        return 0.0
    return distance_profile(nu, variant, cfg)(r)

def phi_derivatives(nu, r, variant, cfg=None):
    """Return (Phi(r), Phi'(r), Phi''(r))."""
    prof = distance_profile(nu, variant, cfg)
    return prof(r), prof.derivative(r), prof.second_derivative(r)

limsup_grid = [2.0 ** -k for k in range(4, 13)]

def limsup_condition(nu, modulus, variant, cfg=None, margin=0.05):
    """Check limsup as r -> 0 of B(r) * Phi'(r) against 2/d (ReflectionA) or 1/2 (BasicB).

       modulus: callable r -> B(r)

       The limit is read off the three smallest grid radii.
    """
    prof = distance_profile(nu, variant, cfg)
    bound = 2.0 / nu.dimension if variant == REFLECTION_A else 0.5
    values = [(r, modulus(r) * prof.derivative(r)) for r in limsup_grid]
    statistic = max(v for r, v in values[-3:])
    return dict(
        variant=variant,
        bound=bound,
        margin=margin,
        statistic=statistic,
        values=values,
        ok=bool(statistic < bound - margin),
    )
