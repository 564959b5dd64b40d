#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Jump systems: rows of paired displacements with their rate measures.

A JumpSystem binds a base Levy measure nu to a builder which, for a
pair of positions (x, y), returns the list of non-synchronous Rows.
Whatever mass the rows leave over jumps synchronously.

Each Row carries a thinning weight w(z) in [0, 1] giving the component
measure nu_i(dz) = w(z) nu(dz) and a bijection Psi with its inverse.
Rows come in two forms:

  overlap: the row rate is nu_i ^ (nu_i o Psi), the general construction
  direct:  the row rate is nu_i itself, as the reflection systems are
           written; these rows are couplings only when Psi preserves nu_i

"""

import math

import numpy as np

from ..core import ConfigInvalid, DensityDominationViolation, NonSymmetricMeasure, SingularSigma
from ..geometry import ReflectionMap, as_vector, truncate_kappa

OVERLAP = 'overlap'
DIRECT = 'direct'

# reciprocal condition number below which sigma counts as singular
sigma_rcond = 1e-10

def _rows_of(z):
    return np.atleast_2d(np.asarray(z, dtype=float))

class Row (object):
    """One row of a jump system bound to a pair (x, y).

       label: event name used by simulations and reports
       weight: z -> w(z), vectorized over rows of z
       forward, inverse: Psi and Psi^-1, vectorized over rows of z
       density: optional z -> row rate density, for direct rows whose
         rate is not naturally w(z) times the density of nu
       support: radius beyond which the row carries no mass, or None
       symmetric: row rate invariant under z -> -z
       small_jump_weight: limit of w(z) as z -> 0 for rows that move
         small jumps by an isometry, None for rows of bounded rate
    """
    def __init__(self, label, weight, forward, inverse, form=OVERLAP, density=None,
                 breakpoints=(), support=None, symmetric=False, small_jump_weight=None,
                 sigma_x=None, sigma_y=None):
        self.label = label
        self.weight = weight
        self.forward = forward
        self.inverse = inverse
        self.form = form
        self._density = density
        self.breakpoints = list(breakpoints)
        self.support = support
        self.symmetric = symmetric
        self.small_jump_weight = small_jump_weight
        self.sigma_x = sigma_x
        self.sigma_y = sigma_y

    def _weighted(self, nu, z):
        w = self.weight(z)
        own = nu.density(z)
        with np.errstate(invalid='ignore'):
            return np.where(w > 0.0, w * own, 0.0)

    def density(self, nu, z):
        """Return the row rate (density, or atom mass for atomic nu) at rows of z."""
        z = _rows_of(z)
        if self._density is not None:
            return self._density(z)
        own = self._weighted(nu, z)
        if self.form == DIRECT:
            return own
        return np.minimum(own, self._weighted(nu, self.forward(z)))

    def inverse_density(self, nu, z):
        """Return the rate of nu_i ^ (nu_i o Psi^-1) at rows of z (overlap rows only)."""
        z = _rows_of(z)
        return np.minimum(self._weighted(nu, z), self._weighted(nu, self.inverse(z)))

    def x_jump(self, z):
        z = _rows_of(z)
        return z if self.sigma_x is None else z @ self.sigma_x.T

    def y_jump(self, z):
        v = self.forward(_rows_of(z))
        return v if self.sigma_y is None else v @ self.sigma_y.T

    def with_sigma(self, sigma_x, sigma_y):
        return Row(
            self.label, self.weight, self.forward, self.inverse, form=self.form, density=self._density,
            breakpoints=self.breakpoints, support=self.support, symmetric=self.symmetric,
            small_jump_weight=self.small_jump_weight, sigma_x=sigma_x, sigma_y=sigma_y,
        )

class JumpSystem (object):
    """Base measure plus a row builder; remainder jumps synchronously."""
    def __init__(self, base, name, builder, params=None, sigma=None):
        self.base = base
        self.name = name
        self.builder = builder
        self.params = dict(params or {})
        self.sigma = sigma

    def sigma_at(self, x):
        """Return sigma(x) as a checked d x d matrix."""
        d = self.base.dimension
        m = np.atleast_2d(np.asarray(self.sigma(x), dtype=float))
        if m.shape != (d, d):
            raise SingularSigma('sigma(x) has shape %s, expected %s' % (m.shape, (d, d)))
        if not np.all(np.isfinite(m)) or 1.0 / np.linalg.cond(m) < sigma_rcond:
            raise SingularSigma('sigma is numerically singular at x = %s' % (x,))
        return m

    def rows(self, x, y):
        x = as_vector(x)
        y = as_vector(y)
        rows = self.builder(x, y)
        if self.sigma is None:
            return rows
        sx = self.sigma_at(x)
        sy = self.sigma_at(y)
        return [row.with_sigma(sx, sy) for row in rows]

    def synchronous_jumps(self, x, y, z):
        """Return the (u, v) displacements of the synchronous remainder."""
        z = _rows_of(z)
        if self.sigma is None:
            return z, z
        return z @ self.sigma_at(as_vector(x)).T, z @ self.sigma_at(as_vector(y)).T

def _constant(value):
    def weight(z):
        return np.full(len(_rows_of(z)), value)
    return weight

def _shift(a):
    def forward(z):
        return _rows_of(z) + a
    return forward

def _line_breaks(*values):
    points = set()
    for v in values:
        v = float(v)
        if math.isfinite(v):
            points.update([v, -v])
    return sorted(points)

def synchronous_system(nu):
    """All mass jumps synchronously."""
    return JumpSystem(nu, 'synchronous', lambda x, y: [])

def reflection_system(nu, eta=0.5):
    """Reflect jumps with |z| < eta |x-y|, synchronous otherwise."""
    if not eta > 0.0:
        raise ConfigInvalid('eta must be positive (math.inf allowed), got %r' % (eta,))

    def builder(x, y):
        refl = ReflectionMap(x, y)
        if refl.is_identity:
            return []
        threshold = eta * float(np.linalg.norm(x - y))
        def weight(z):
            return (np.linalg.norm(_rows_of(z), axis=1) < threshold).astype(float)
        return [Row(
            'reflect', weight, refl, refl, form=DIRECT,
            breakpoints=_line_breaks(threshold, 1.0),
            support=threshold if math.isfinite(threshold) else None,
            symmetric=True, small_jump_weight=1.0,
        )]

    return JumpSystem(nu, 'reflection', builder, params=dict(eta=eta))

def refined_basic_system(nu, kappa=1.0, half_ball=False):
    """Contract by (x-y)_kappa with half the overlap rate, expand with the other half.

       half_ball restricts both component measures to |z| <= |x-y|/2.
    """
    if not kappa > 0.0:
        raise ConfigInvalid('kappa must be positive (math.inf allowed), got %r' % (kappa,))

    def builder(x, y):
        diff = x - y
        r = float(np.linalg.norm(diff))
        a = truncate_kappa(diff, kappa)
        if half_ball:
            def weight(z):
                return np.where(np.linalg.norm(_rows_of(z), axis=1) <= r / 2.0, 0.5, 0.0)
        else:
            weight = _constant(0.5)
        s = float(np.linalg.norm(a))
        breaks = _line_breaks(s, s / 2.0, 1.0, 1.0 + s, 1.0 - s, r / 2.0, r / 2.0 + s, r / 2.0 - s)
        return [
            Row('contract', weight, _shift(a), _shift(-a), form=OVERLAP, breakpoints=breaks),
            Row('expand', weight, _shift(-a), _shift(a), form=OVERLAP, breakpoints=breaks),
        ]

    return JumpSystem(nu, 'refined_basic', builder, params=dict(kappa=kappa, half_ball=half_ball))

class SubDensity (object):
    """Radial sub-density q0 <= q for the reflection-and-basic system.

       kind: "same" (q0 = q), "ball" (q restricted to |z| <= radius),
       "half_distance" (q restricted to |z| <= |x-y|/2), "scaled"
       (factor * q), or "zero".

       q is the radial density of nu, or for symmetric atoms on the
       line the atom mass at radius s.
    """
    kinds = ('same', 'ball', 'half_distance', 'scaled', 'zero')

    def __init__(self, nu, kind='same', radius=None, factor=None):
        if kind not in self.kinds:
            raise ConfigInvalid('q0.kind must be one of %s, got %r' % (self.kinds, kind))
        if not (nu.radial or (nu.atomic and nu.dimension == 1 and nu.is_symmetric)):
            raise NonSymmetricMeasure('a sub-density needs a radial density or symmetric atoms on the line')
        if kind == 'ball' and not (radius is not None and radius > 0.0):
            raise ConfigInvalid('q0 of kind ball needs a positive radius')
        if kind == 'scaled' and not (factor is not None and factor >= 0.0):
            raise ConfigInvalid('q0 of kind scaled needs a nonnegative factor')
        self.nu = nu
        self.kind = kind
        self.radius = radius
        self.factor = factor

    def to_config(self):
        doc = {"kind": self.kind}
        if self.radius is not None:
            doc["radius"] = self.radius
        if self.factor is not None:
            doc["factor"] = self.factor
        return doc

    def base_density(self, s):
        """Return q at radii s."""
        s = np.asarray(s, dtype=float)
        if self.nu.atomic:
            return self.nu.mass_at(s.reshape(-1, 1)).reshape(s.shape)
        return self.nu.radial_density(s)

    def __call__(self, s, distance=0.0):
        """Return q0 at radii s for a pair at the given distance."""
        s = np.asarray(s, dtype=float)
        q = self.base_density(s)
        if self.kind == 'same':
            return q
        if self.kind == 'zero':
            return np.zeros_like(s)
        if self.kind == 'scaled':
            return self.factor * q
        radius = self.radius if self.kind == 'ball' else distance / 2.0
        return np.where(s <= radius, q, 0.0)

    def ratio_at_origin(self, distance=0.0):
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'scaled':
            return self.factor
        if self.kind == 'half_distance' and distance == 0.0:
            return 0.0
        return 1.0

    def support(self, distance):
        if self.kind == 'ball':
            return self.radius
        if self.kind == 'half_distance':
            return distance / 2.0
        if self.kind == 'zero':
            return 0.0
        return self.nu.range_bound

    def check_domination(self, s, distance=0.0):
        """Raise DensityDominationViolation unless q0 <= q at radii s."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        q = self.base_density(s)
        q0 = self(s, distance)
        bad = q0 > q * (1.0 + 1e-12)
        if np.any(bad):
            raise DensityDominationViolation('q0 exceeds q at |z| = %g' % (s[np.argmax(bad)],))

def reflection_basic_system(nu, q0):
    """Coalesce with rate q0(|z|) ^ q0(|z+x-y|), reflect the rest of q0, synchronous q - q0."""
    q0.check_domination(np.geomspace(1e-6, 1e3, 256), 1.0)

    def builder(x, y):
        refl = ReflectionMap(x, y)
        if refl.is_identity:
            return []
        diff = x - y
        r = float(np.linalg.norm(diff))

        def coalesce_density(z):
            z = _rows_of(z)
            return np.minimum(q0(np.linalg.norm(z, axis=1), r), q0(np.linalg.norm(z + diff, axis=1), r))

        def reflect_density(z):
            z = _rows_of(z)
            own = q0(np.linalg.norm(z, axis=1), r)
            return own - np.minimum(own, q0(np.linalg.norm(z + diff, axis=1), r))

        def ratio(density):
            def weight(z):
                z = _rows_of(z)
                q = nu.density(z)
                with np.errstate(divide='ignore', invalid='ignore'):
                    return np.where(q > 0.0, density(z) / q, 0.0)
            return weight

        support = q0.support(r)
        breaks = _line_breaks(r, r / 2.0, 1.0, 1.0 + r, 1.0 - r)
        if support is not None:
            breaks = sorted(set(breaks) | set(_line_breaks(support, support + r, support - r)))
        return [
            Row('coalesce', ratio(coalesce_density), _shift(diff), _shift(-diff), form=DIRECT,
                density=coalesce_density, breakpoints=breaks, support=support),
            Row('reflect', ratio(reflect_density), refl, refl, form=DIRECT,
                density=reflect_density, breakpoints=breaks, support=support,
                small_jump_weight=q0.ratio_at_origin(r)),
        ]

    return JumpSystem(nu, 'reflection_basic', builder, params=dict(q0=q0.to_config()))

## multiplicative noise

def build_multiplicative_system(js, sigma):
    """Return js with displacements (sigma(x) z, sigma(y) Psi_i(z)).

       sigma: x -> d x d matrix (a scalar is accepted in d = 1)
    """
    return JumpSystem(js.base, 'multiplicative_%s' % js.name, js.builder, params=js.params, sigma=sigma)

def _sigma_matrix(sigma, x, d):
    m = np.atleast_2d(np.asarray(sigma(x), dtype=float))
    if m.shape != (d, d) or not np.all(np.isfinite(m)) or 1.0 / np.linalg.cond(m) < sigma_rcond:
        raise SingularSigma('sigma is numerically singular at x = %s' % (x,))
    return m

def multiplicative_reflection_system(nu, sigma, eta=0.5):
    """Psi_1 = sigma(y)^-1 sigma(x) R, Psi_2 = Psi_1^-1, nu_1 = nu_2 = nu/2 on |z| <= eta |x-y|."""
    d = nu.dimension

    def builder(x, y):
        refl = ReflectionMap(x, y)
        if refl.is_identity:
            return []
        sx = _sigma_matrix(sigma, x, d)
        sy = _sigma_matrix(sigma, y, d)
        m1 = np.linalg.solve(sy, sx) @ refl.matrix()
        m2 = refl.matrix() @ np.linalg.solve(sx, sy)
        threshold = eta * float(np.linalg.norm(x - y))
        def weight(z):
            return np.where(np.linalg.norm(_rows_of(z), axis=1) <= threshold, 0.5, 0.0)
        def linear(m):
            return lambda z: _rows_of(z) @ m.T
        return [
            Row('reflect', weight, linear(m1), linear(m2), form=OVERLAP),
            Row('reflect', weight, linear(m2), linear(m1), form=OVERLAP),
        ]

    inner = JumpSystem(nu, 'reflection', builder, params=dict(eta=eta))
    return build_multiplicative_system(inner, sigma)

def multiplicative_refined_basic_system(nu, sigma, kappa=1.0):
    """Psi_1(z) = sigma(y)^-1 (sigma(x) z + (x-y)_kappa), Psi_2 = Psi_1^-1, nu_1 = nu_2 = nu/2."""
    d = nu.dimension

    def builder(x, y):
        sx = _sigma_matrix(sigma, x, d)
        sy = _sigma_matrix(sigma, y, d)
        a = truncate_kappa(x - y, kappa)
        def psi1(z):
            return np.linalg.solve(sy, (_rows_of(z) @ sx.T + a).T).T
        def psi2(z):
            return np.linalg.solve(sx, (_rows_of(z) @ sy.T - a).T).T
        weight = _constant(0.5)
        return [
            Row('contract', weight, psi1, psi2, form=OVERLAP),
            Row('expand', weight, psi2, psi1, form=OVERLAP),
        ]

    inner = JumpSystem(nu, 'refined_basic', builder, params=dict(kappa=kappa))
    return build_multiplicative_system(inner, sigma)
