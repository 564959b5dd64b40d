#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Composite Gauss-Kronrod quadrature on split panels.

All integrals go through integrate() so that SciPy integration
warnings surface as QuadratureFailure exceptions instead of stderr
noise.

"""

import math
import warnings

import numpy as np
from scipy.integrate import quad, IntegrationWarning

from ..core import config, logger, QuadratureFailure

def integrate(func, a, b, failure=QuadratureFailure, what='integral'):
    """Return the integral of scalar func over [a, b] (a or b may be infinite)."""
    if a == b:
        return 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always', IntegrationWarning)
        value, abserr = quad(
            func, a, b,
            limit=config.get('quad_limit', 200),
            epsabs=1e-13, epsrel=1e-11,
        )
    if not math.isfinite(value) or not math.isfinite(abserr):
        raise failure('%s over [%g, %g] is not finite.' % (what, a, b))
    problems = [w for w in caught if issubclass(w.category, IntegrationWarning)]
    if problems:
        # tight tolerances trip roundoff warnings on converged integrals
        if abserr > 1e-7 * max(1.0, abs(value)):
            raise failure('%s over [%g, %g] did not converge: %s' % (what, a, b, problems[0].message))
        logger.debug('accepted %s over [%g, %g] with abserr %g' % (what, a, b, abserr))
    return value

def log_knots(lo, hi, count):
    """Return count geometric knots spanning [lo, hi]."""
    return np.geomspace(lo, hi, count)

def split_integral(func, points, failure=QuadratureFailure, what='integral'):
    """Integrate func over consecutive panels between sorted points."""
    points = sorted(set(points))
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        total += integrate(func, a, b, failure=failure, what=what)
    return total

def line_integral(func, breakpoints, lower=-math.inf, upper=math.inf, failure=QuadratureFailure, what='integral'):
    """Integrate func over [lower, upper] splitting at breakpoints.

       Panels touching zero are further split geometrically toward
       zero so that algebraic singularities at the origin get their own
       small panels.
    """
    points = {lower, upper}
    for p in breakpoints:
        if lower < p < upper:
            points.add(float(p))
    if lower < 0.0 < upper:
        points.add(0.0)
    points = sorted(points)
    refined = []
    for a, b in zip(points[:-1], points[1:]):
        refined.append(a)
        if a == 0.0 and math.isfinite(b):
            refined.extend(b * 10.0 ** -k for k in range(8, 0, -1))
        elif b == 0.0 and math.isfinite(a):
            refined.extend(a * 10.0 ** -k for k in range(1, 9))
    refined.append(points[-1])
    return split_integral(func, refined, failure=failure, what=what)

class PanelIntegral (object):
    """Cached panel integrals of a scalar integrand on (0, upper].

       The integrand g is integrated once over each panel between
       geometric knots; integral(a, b) then reuses whole panels and
       only integrates the partial panels at either end.  With
       origin=False g need not be integrable at zero and below() is
       unavailable.
    """
    def __init__(self, g, knots, upper=math.inf, origin=True, failure=QuadratureFailure):
        self.g = g
        self.failure = failure
        self.knots = np.asarray(knots, dtype=float)
        self.upper = upper
        self.head = integrate(g, 0.0, self.knots[0], failure=failure) if origin else None
        self.panels = np.array([
            integrate(g, a, b, failure=failure)
            for a, b in zip(self.knots[:-1], self.knots[1:])
        ])
        self.cumulative = np.concatenate([[0.0], np.cumsum(self.panels)])
        if self.upper > self.knots[-1]:
            self.beyond = integrate(g, self.knots[-1], self.upper, failure=failure)
        else:
            self.beyond = 0.0

    def _primitive(self, r):
        """Signed integral over [knots[0], r] for finite r <= upper."""
        if r < self.knots[0]:
            return - integrate(self.g, r, self.knots[0], failure=self.failure)
        if r >= self.knots[-1]:
            return self.cumulative[-1] + integrate(self.g, self.knots[-1], r, failure=self.failure)
        k = int(np.searchsorted(self.knots, r, side='right')) - 1
        return self.cumulative[k] + integrate(self.g, self.knots[k], r, failure=self.failure)

    def below(self, r):
        """Integral over [0, r]."""
        if self.head is None:
            raise ValueError('integrand is not integrable at the origin')
        r = min(r, self.upper)
        if r <= 0.0:
            return 0.0
        if r <= self.knots[0]:
            return integrate(self.g, 0.0, r, failure=self.failure)
        return self.head + self._primitive(r)

    def total(self):
        """Integral over [0, upper]."""
        return self.below(self.upper) if math.isfinite(self.upper) else self.head + self.cumulative[-1] + self.beyond

    def above(self, r):
        """Integral over [r, upper] for r > 0."""
        return self.integral(r, self.upper)

    def integral(self, a, b):
        b = min(b, self.upper)
        if b <= a:
            return 0.0
        if math.isinf(b):
            return self.cumulative[-1] + self.beyond - self._primitive(a)
        if b - a < 1e-3 * b:
            return integrate(self.g, a, b, failure=self.failure)
        return self._primitive(b) - self._primitive(a)
