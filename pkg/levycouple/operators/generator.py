#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Coupled generators applied to radial test functions g(x, y) = f(|x-y|).

For a jump system bound to (x, y) with r = |x-y| and e = (x-y)/r,

  Lg(x, y) = f'(r) <b(x) - b(y), e>
           + sum over rows of the integral of
             [f(|x-y + u - v|) - f(r) - f'(r)<e, u> 1_{|z|<1} + f'(r)<e, v> 1_{|Psi z|<1}]
             against the row rate, with (u, v) the row displacements.

Synchronous jumps contribute nothing.  In d = 1 the row integrals are
deterministic quadratures; in d >= 2 they are importance-sampled from
nu restricted to |z| > epsilon, with the small jumps added in closed
form.

"""

import collections
import math

import numpy as np

from ..core import CompensationDivergence, ConfigInvalid, HypothesisViolation, NonSymmetricMeasure, logger
from ..geometry import as_vector, degenerate_distance
from ..measures import overlap_mass, psi_symmetric
from ..measures.base import TruncationConfig, ball_volume
from ..measures.profile import REFLECTION_A, distance_profile
from ..measures.quadrature import line_integral
from .kernel import build_kernel, kernel_generator
from .systems import SubDensity, reflection_basic_system, reflection_system, refined_basic_system

GeneratorValue = collections.namedtuple('GeneratorValue', ['value', 'std_error'])

# relative size of z - Psi(z) below which the integrand is Taylor expanded
taylor_threshold = 1e-5

def _shaped(r, value):
    value = np.asarray(value, dtype=float)
    return float(value) if np.ndim(r) == 0 else value

class TestFunction (object):
    """Concave nondecreasing f on [0, upper] with f(0) = 0 and closed-form derivatives."""
    __test__ = False
    kind = None

    # f is C^2 on (0, smooth_upper)
    smooth_upper = math.inf

    def __init__(self, upper=2.0):
        self.upper = float(upper)

    def value(self, r):
        raise NotImplementedError()

    def first(self, r):
        raise NotImplementedError()

    def second(self, r):
        raise NotImplementedError()

    def __call__(self, r):
        return _shaped(r, self.value(np.asarray(r, dtype=float)))

    def d1(self, r):
        return _shaped(r, self.first(np.asarray(r, dtype=float)))

    def d2(self, r):
        return _shaped(r, self.second(np.asarray(r, dtype=float)))

    def grid(self, upper=None, points=256):
        return np.geomspace(1e-6, 1.0, points) * (self.upper if upper is None else upper)

    def check(self, upper=None, points=256):
        """Raise HypothesisViolation unless f(0)=0, f' >= 0, f'' <= 0 on the grid."""
        s = self.grid(upper, points)
        if abs(self(0.0)) > 1e-12:
            raise HypothesisViolation('%s test function has f(0) = %g' % (self.kind, self(0.0)))
        if np.any(self.d1(s) < -1e-12):
            raise HypothesisViolation("%s test function has f' < 0 on its domain" % (self.kind,))
        if np.any(self.d2(s) > 1e-12):
            raise HypothesisViolation("%s test function has f'' > 0 on its domain" % (self.kind,))

    def check_increasing_second(self, upper, points=256):
        """Raise HypothesisViolation unless f is C^2 with nondecreasing f'' on (0, upper]."""
        if upper >= self.smooth_upper:
            raise HypothesisViolation('%s test function is not C^2 on (0, %g]' % (self.kind, upper))
        self.check(upper, points)
        second = self.d2(self.grid(upper, points))
        if np.any(np.diff(second) < -1e-12 * np.maximum(1.0, np.abs(second[1:]))):
            raise HypothesisViolation("%s test function has f'' decreasing on (0, %g]" % (self.kind, upper))

    def to_config(self):
        return {"kind": self.kind}

class Identity (TestFunction):
    """f(r) = r"""
    kind = 'identity'

    def value(self, r):
        return r

    def first(self, r):
        return np.ones_like(r)

    def second(self, r):
        return np.zeros_like(r)

class Capped (TestFunction):
    """f(r) = r ^ c"""
    kind = 'capped'

    def __init__(self, c=1.0, upper=2.0):
        TestFunction.__init__(self, upper)
        if not c > 0.0:
            raise ConfigInvalid('capped test function needs c > 0, got %r' % (c,))
        self.c = float(c)
        self.smooth_upper = self.c

    def value(self, r):
        return np.minimum(r, self.c)

    def first(self, r):
        return np.where(r < self.c, 1.0, 0.0)

    def second(self, r):
        return np.zeros_like(r)

    def to_config(self):
        return {"kind": self.kind, "c": self.c}

class Exponential (TestFunction):
    """f(r) = 1 - exp(-a r)"""
    kind = 'exponential'

    def __init__(self, a=1.0, upper=2.0):
        TestFunction.__init__(self, upper)
        if not a > 0.0:
            raise ConfigInvalid('exponential test function needs a > 0, got %r' % (a,))
        self.a = float(a)

    def value(self, r):
        return -np.expm1(-self.a * r)

    def first(self, r):
        return self.a * np.exp(-self.a * r)

    def second(self, r):
        return -self.a * self.a * np.exp(-self.a * r)

    def to_config(self):
        return {"kind": self.kind, "a": self.a}

class PhiProfile (TestFunction):
    """The distance profile Phi of a measure, constant beyond 1."""
    kind = 'phi'

    def __init__(self, nu, variant=REFLECTION_A, cfg=None, upper=2.0):
        TestFunction.__init__(self, upper)
        self.variant = variant
        self.profile = distance_profile(nu, variant, cfg)
        self._value = np.vectorize(self.profile, otypes=[float])
        self._first = np.vectorize(self.profile.derivative, otypes=[float])
        self._second = np.vectorize(self.profile.second_derivative, otypes=[float])

    def value(self, r):
        return self._value(r)

    def first(self, r):
        return self._first(r)

    def second(self, r):
        return self._second(r)

    def to_config(self):
        return {"kind": self.kind, "variant": self.variant}

test_function_kinds = {
    'identity': Identity,
    'capped': Capped,
    'exponential': Exponential,
}

def make_test_function(block, nu=None, cfg=None):
    block = dict(block or {"kind": "phi"})
    kind = block.pop('kind', None)
    if kind == 'phi':
        return PhiProfile(nu, cfg=cfg, **block)
    if kind not in test_function_kinds:
        raise ConfigInvalid('test_function.kind must be one of %s, got %r' % (sorted(test_function_kinds) + ['phi'], kind))
    try:
        return test_function_kinds[kind](**block)
    except TypeError as e:
        raise ConfigInvalid('test_function block of kind %r: %s' % (kind, e))

## generator evaluation

def _zero_drift(x):
    return np.zeros_like(x)

def row_integrand(row, f, diff, z):
    """Return the compensated jump integrand of one row at rows of z."""
    r = float(np.linalg.norm(diff))
    e = diff / r
    z = np.atleast_2d(z)
    w = row.forward(z)
    u = row.x_jump(z)
    v = row.y_jump(z)
    small_z = np.linalg.norm(z, axis=1) < 1.0
    small_w = np.linalg.norm(w, axis=1) < 1.0
    fr = f(r)
    f1 = f.d1(r)
    comp = f1 * (np.where(small_w, v @ e, 0.0) - np.where(small_z, u @ e, 0.0))
    jump = u - v
    exact = f(np.linalg.norm(diff + jump, axis=1)) - fr + comp

    ej = jump @ e
    nj = np.linalg.norm(jump, axis=1)
    linear = np.where(small_z & small_w, 0.0, f1 * ej + comp)
    taylor = linear + f1 * (nj * nj - ej * ej) / (2.0 * r) + 0.5 * f.d2(r) * ej * ej
    return np.where(nj <= taylor_threshold * r, taylor, exact)

def _integrand(row, f, diff, z):
    if row.symmetric:
        return 0.5 * (row_integrand(row, f, diff, z) + row_integrand(row, f, diff, -z))
    return row_integrand(row, f, diff, z)

def _row_bound(row, nu):
    bounds = [b for b in (row.support, nu.range_bound) if b is not None]
    return min(bounds) if bounds else math.inf

def _line_row(row, nu, f, diff):
    def integrand(t):
        z = np.array([[t]])
        rate = float(row.density(nu, z)[0])
        if rate == 0.0:
            return 0.0
        return rate * float(_integrand(row, f, diff, z)[0])
    bound = _row_bound(row, nu)
    if bound == 0.0:
        return 0.0
    return line_integral(
        integrand, row.breakpoints, lower=-bound, upper=bound,
        failure=CompensationDivergence, what='%s row integral' % row.label,
    )

def _monte_carlo_row(row, nu, f, diff, cfg):
    d = nu.dimension
    eps = cfg.epsilon
    n = cfg.mc_points
    # one stream for every row and pair: common random numbers across operators
    rng = cfg.mc_generator(2)
    mass = nu.tail_open(eps)
    value = 0.0
    var = 0.0
    if mass > 0.0:
        z = nu.sample(eps, rng, n)
        own = nu.density(z)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(own > 0.0, row.density(nu, z) / own, 0.0)
        samples = mass * ratio * _integrand(row, f, diff, z)
        value = float(samples.mean())
        var = float(samples.var(ddof=1)) / n if n > 1 else 0.0

    r = float(np.linalg.norm(diff))
    if row.small_jump_weight is not None:
        # isometric rows: jumps below epsilon move the distance by 2<e, z> at second order
        radius = min(eps, _row_bound(row, nu))
        if radius > 0.0:
            value += 2.0 * f.d2(r) * nu.psi(radius) * row.small_jump_weight / d
    else:
        zero = np.zeros((1, d))
        value += float(row.density(nu, zero)[0]) * ball_volume(d) * eps ** d * float(_integrand(row, f, diff, zero)[0])
    return value, var

def eval_generator(js, f, drift, x, y, cfg=None):
    """Return GeneratorValue(value, std_error) of the coupled generator on f(|x-y|).

       The standard error is zero except for Monte Carlo quadrature in d >= 2.
    """
    cfg = cfg or TruncationConfig()
    x = as_vector(x)
    y = as_vector(y)
    diff = x - y
    r = float(np.linalg.norm(diff))
    if r < degenerate_distance:
        return GeneratorValue(0.0, 0.0)
    e = diff / r
    drift = drift or _zero_drift
    value = f.d1(r) * float((as_vector(drift(x)) - as_vector(drift(y))) @ e)
    nu = js.base

    if nu.atomic:
        def F(a, b):
            return f(float(np.linalg.norm(a - b)))
        def grad(a, b):
            s = float(np.linalg.norm(a - b))
            if s < degenerate_distance:
                return np.zeros_like(a), np.zeros_like(b)
            g = f.d1(s) * (a - b) / s
            return g, -g
        value += kernel_generator(build_kernel(js, x, y), F, grad)
        return GeneratorValue(value, 0.0)

    var = 0.0
    for row in js.rows(x, y):
        if nu.dimension == 1:
            value += _line_row(row, nu, f, diff)
        else:
            v, s = _monte_carlo_row(row, nu, f, diff, cfg)
            value += v
            var += s
    logger.debug('generator %s at r=%g: %g' % (js.name, r, value))
    return GeneratorValue(float(value), math.sqrt(var))

## operator comparisons

INFINITE_RANGE = 'InfiniteRange'
FINITE_RANGE = 'FiniteRange'

def comparison_systems(nu, case, r, kappa=1.0):
    """Return (reflection, reflection_basic, basic) jump systems for a comparison case."""
    if not nu.radial:
        raise NonSymmetricMeasure('operator comparisons need a rotationally symmetric density')
    if case == INFINITE_RANGE:
        return (
            reflection_system(nu, math.inf),
            reflection_basic_system(nu, SubDensity(nu, 'same')),
            refined_basic_system(nu, kappa),
        )
    if case == FINITE_RANGE:
        if nu.range_bound is None:
            raise HypothesisViolation('the finite range comparison needs a measure with bounded support')
        if not r > 2.0 * nu.range_bound:
            raise HypothesisViolation('the finite range comparison needs |x-y| > 2 * range (%g), got %g' % (nu.range_bound, r))
        return (
            reflection_system(nu, 0.5),
            reflection_basic_system(nu, SubDensity(nu, 'half_distance')),
            refined_basic_system(nu, math.inf, half_ball=True),
        )
    raise ConfigInvalid('comparison case must be %s or %s, got %r' % (INFINITE_RANGE, FINITE_RANGE, case))

def compare_pair(case, nu, f, x, y, drift=None, cfg=None, kappa=1.0):
    """Return one comparison row for the pair (x, y)."""
    x = as_vector(x)
    y = as_vector(y)
    r = float(np.linalg.norm(x - y))
    systems = comparison_systems(nu, case, r, kappa)
    refl, refl_basic, basic = (eval_generator(js, f, drift, x, y, cfg) for js in systems)
    noise = 3.0 * (refl.std_error + refl_basic.std_error)
    row = dict(
        x=x.tolist(), y=y.tolist(), distance=r,
        reflection=refl.value, reflection_basic=refl_basic.value, basic=basic.value,
        std_error=max(refl.std_error, refl_basic.std_error, basic.std_error),
        ok=bool(refl_basic.value <= refl.value + 1e-6 + noise),
    )
    if case == FINITE_RANGE:
        row['ok'] = bool(
            row['ok']
            and abs(refl_basic.value - refl.value) <= 1e-8 * max(1.0, abs(refl.value)) + noise
            and refl.value <= basic.value + 1e-8 + noise
        )
    return row

def compare_operators(case, nu, f, pairs, drift=None, cfg=None, kappa=1.0, pool=None):
    """Return comparison rows for each (x, y) pair, in input order.

       pool: optional executor; rows are computed with pool.map when given
    """
    jobs = [(case, nu, f, x, y, drift, cfg, kappa) for x, y in pairs]
    if pool is None:
        return [compare_pair(*job) for job in jobs]
    return list(pool.map(_compare_job, jobs))

def _compare_job(job):
    return compare_pair(*job)

## lemma bounds

L1_REFLECTION = 'L1_reflection'
L2_BASIC = 'L2_basic'

def check_lemma_bound(which, nu, drift, f, x, y, cfg=None, kappa=1.0):
    """Evaluate a coupling's generator against its closed-form upper bound.

       L1_reflection: reflection below |x-y|/2, 0 < |x-y| <= 1,
         rhs = drift term + (2/d) f''(2r) psi(r/2)
       L2_basic: refined basic coupling, 0 < |x-y| <= kappa,
         rhs = drift term + (1/2) overlap(x-y) r^2 f''(2r)

       Returns dict(which, lhs, rhs, std_error, ok).
    """
    cfg = cfg or TruncationConfig()
    x = as_vector(x)
    y = as_vector(y)
    r = float(np.linalg.norm(x - y))
    drift = drift or _zero_drift
    if which == L1_REFLECTION:
        if not 0.0 < r <= 1.0:
            raise HypothesisViolation('the reflection bound needs 0 < |x-y| <= 1, got %g' % r)
        if not nu.is_symmetric:
            raise NonSymmetricMeasure('the reflection bound needs a symmetric measure')
        f.check_increasing_second(2.0)
        js = reflection_system(nu, 0.5)
        jump_bound = (2.0 / nu.dimension) * f.d2(2.0 * r) * psi_symmetric(nu, r / 2.0)
        overlap_error = 0.0
    elif which == L2_BASIC:
        if not 0.0 < r <= kappa:
            raise HypothesisViolation('the basic coupling bound needs 0 < |x-y| <= kappa = %g, got %g' % (kappa, r))
        f.check_increasing_second(2.0 * kappa)
        js = refined_basic_system(nu, kappa)
        mass, overlap_error = overlap_mass(nu, x - y, cfg=cfg, with_error=True)
        jump_bound = 0.5 * mass * r * r * f.d2(2.0 * r)
        overlap_error = abs(0.5 * overlap_error * r * r * f.d2(2.0 * r))
    else:
        raise ConfigInvalid('lemma must be %s or %s, got %r' % (L1_REFLECTION, L2_BASIC, which))

    lhs = eval_generator(js, f, drift, x, y, cfg)
    drift_term = f.d1(r) * float((as_vector(drift(x)) - as_vector(drift(y))) @ ((x - y) / r))
    rhs = drift_term + jump_bound
    tol = 1e-8 * max(1.0, abs(rhs)) + 3.0 * (lhs.std_error + overlap_error)
    return dict(which=which, lhs=lhs.value, rhs=rhs, std_error=lhs.std_error, ok=bool(lhs.value <= rhs + tol))

def tail_bound(phi_delta, c0, phi_eps0, t):
    """Return Phi(delta) (1/(t c0) + 1/Phi(epsilon0)), the bound on P(T > t)."""
    if not (c0 > 0.0 and t > 0.0 and phi_eps0 > 0.0):
        raise ValueError('tail_bound needs positive c0, t and Phi(epsilon0)')
    return phi_delta * (1.0 / (t * c0) + 1.0 / phi_eps0)
