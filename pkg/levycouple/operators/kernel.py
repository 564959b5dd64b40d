#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Exact coupling kernels for atomic base measures.

A CouplingKernel lists the joint jump atoms ((u, v), mass) of a jump
system bound to (x, y): one atom per (row, base atom) with positive
row mass, plus the synchronous remainder.

"""

import collections

import numpy as np
from scipy.spatial import cKDTree

from ..core import NonAtomicBase, SubMeasureViolation, logger
from ..geometry import as_vector
from ..measures.atoms import match_tolerance

# masses and defects below this count as zero
mass_tolerance = 1e-12

# (u, v): displacements of x and y; (z, w): the base jump and its image,
# which carry the compensation indicators
KernelAtom = collections.namedtuple('KernelAtom', ['u', 'v', 'mass', 'label', 'z', 'w'])

class CouplingKernel (object):
    """Discrete coupling kernel of a jump system at (x, y)."""
    def __init__(self, x, y, atoms, sigma_x=None, sigma_y=None, system=None):
        self.x = as_vector(x)
        self.y = as_vector(y)
        self.atoms = list(atoms)
        self.sigma_x = sigma_x
        self.sigma_y = sigma_y
        self.system = system

    def __len__(self):
        return len(self.atoms)

    def arrays(self):
        """Return (u, v, mass) as stacked arrays."""
        d = len(self.x)
        if not self.atoms:
            return np.empty((0, d)), np.empty((0, d)), np.empty(0)
        u = np.array([a.u for a in self.atoms])
        v = np.array([a.v for a in self.atoms])
        m = np.array([a.mass for a in self.atoms])
        return u, v, m

    def total_mass(self):
        return float(sum(a.mass for a in self.atoms))

    def mass_by_label(self):
        totals = collections.defaultdict(float)
        for a in self.atoms:
            totals[a.label] += a.mass
        return dict(totals)

def _require_atomic(nu):
    if not nu.atomic:
        raise NonAtomicBase('an exact kernel needs a discrete base measure, got %s' % (nu.kind,))

def row_masses(js, x, y):
    """Return (rows, locations, base masses, per-row mass arrays) for an atomic base."""
    nu = js.base
    _require_atomic(nu)
    rows = js.rows(x, y)
    locations = nu.locations
    base = nu.masses
    component = np.zeros(len(locations))
    masses = []
    for row in rows:
        component += np.where(row.weight(locations) > 0.0, row.weight(locations) * base, 0.0)
        masses.append(np.clip(row.density(nu, locations), 0.0, None))
    excess = component - base
    if len(excess) and excess.max() > mass_tolerance:
        i = int(np.argmax(excess))
        raise SubMeasureViolation(
            'component measures exceed the base measure by %g at atom %s' % (excess[i], locations[i])
        )
    return rows, locations, base, masses

def build_kernel(js, x, y):
    """Return the CouplingKernel of js at (x, y).

       Raises NonAtomicBase for a non-discrete base measure and
       SubMeasureViolation when the rows claim more than nu.
    """
    x = as_vector(x)
    y = as_vector(y)
    rows, locations, base, masses = row_masses(js, x, y)
    atoms = []
    used = np.zeros(len(locations))
    for row, mass in zip(rows, masses):
        sel = np.flatnonzero(mass > 0.0)
        if not len(sel):
            continue
        z = locations[sel]
        u = row.x_jump(z)
        v = row.y_jump(z)
        w = row.forward(z)
        for k, i in enumerate(sel):
            atoms.append(KernelAtom(u[k], v[k], float(mass[i]), row.label, z[k], w[k]))
        used += mass

    remainder = base - used
    if len(remainder) and remainder.min() < -mass_tolerance:
        i = int(np.argmin(remainder))
        raise SubMeasureViolation('row rates exceed the base measure by %g at atom %s' % (-remainder[i], locations[i]))
    remainder = np.clip(remainder, 0.0, None)
    sel = np.flatnonzero(remainder > mass_tolerance)
    if len(sel):
        u, v = js.synchronous_jumps(x, y, locations[sel])
        for k, i in enumerate(sel):
            atoms.append(KernelAtom(u[k], v[k], float(remainder[i]), 'sync', locations[i], locations[i]))

    sigma_x = js.sigma_at(x) if js.sigma is not None else None
    sigma_y = js.sigma_at(y) if js.sigma is not None else None
    kernel = CouplingKernel(x, y, atoms, sigma_x=sigma_x, sigma_y=sigma_y, system=js.name)
    logger.debug('kernel %s at |x-y|=%g: %d atoms, %s' % (
        js.name, float(np.linalg.norm(x - y)), len(atoms), kernel.mass_by_label()))
    return kernel

def atom_defect(points_a, masses_a, points_b, masses_b, tolerance=match_tolerance):
    """Return max |a(p) - b(p)| over the union of two atomic measures."""
    points = np.concatenate([np.atleast_2d(points_a), np.atleast_2d(points_b)])
    signed = np.concatenate([np.asarray(masses_a, dtype=float), -np.asarray(masses_b, dtype=float)])
    if not len(points):
        return 0.0
    tree = cKDTree(points)
    groups = np.array([min(tree.query_ball_point(p, tolerance)) for p in points])
    totals = np.bincount(groups, weights=signed, minlength=len(points))
    return float(np.abs(totals).max())

def _pushed_base(nu, sigma):
    if sigma is None:
        return nu.locations, nu.masses
    return nu.locations @ sigma.T, nu.masses

def verify_marginality(kernel, nu):
    """Check that both kernel marginals equal the (pushed) base measure.

       Returns dict(ok, max_defect, first_defect, second_defect).
    """
    _require_atomic(nu)
    u, v, m = kernel.arrays()
    first = atom_defect(u, m, *_pushed_base(nu, kernel.sigma_x))
    second = atom_defect(v, m, *_pushed_base(nu, kernel.sigma_y))
    worst = max(first, second)
    return dict(ok=bool(worst <= mass_tolerance), max_defect=worst, first_defect=first, second_defect=second)

def verify_symmetry_condition(js, x, y):
    """Check sum_i mu_i = sum_i Psi_i # mu_i for the rows of js at (x, y).

       For overlap rows Psi_i # mu_i is nu_i ^ (nu_i o Psi_i^-1); direct
       rows push their component measure forward.  Returns
       dict(ok, max_defect).
    """
    nu = js.base
    _require_atomic(nu)
    rows = js.rows(as_vector(x), as_vector(y))
    loc = nu.locations
    d = nu.dimension
    lhs_points, lhs_masses, rhs_points, rhs_masses = [], [], [], []
    for row in rows:
        lhs_points.append(loc)
        lhs_masses.append(row.density(nu, loc))
        if row.form == 'direct':
            rhs_points.append(row.forward(loc))
            rhs_masses.append(row.density(nu, loc))
        else:
            rhs_points.append(loc)
            rhs_masses.append(row.inverse_density(nu, loc))
    if not rows:
        return dict(ok=True, max_defect=0.0)
    defect = atom_defect(
        np.concatenate(lhs_points).reshape(-1, d), np.concatenate(lhs_masses),
        np.concatenate(rhs_points).reshape(-1, d), np.concatenate(rhs_masses),
    )
    return dict(ok=bool(defect <= mass_tolerance), max_defect=defect)

## generators acting on test functions of (x, y)

def _zero_drift(x):
    return np.zeros_like(x)

def marginal_generator(nu, f, grad, x, drift=None, sigma=None):
    """Return <grad f(x), b(x)> + sum over atoms of [f(x+sz) - f(x) - <grad f(x), sz> 1_{|z|<1}] nu({z}).

       s is sigma(x), the identity when sigma is omitted.
    """
    _require_atomic(nu)
    x = as_vector(x)
    drift = drift or _zero_drift
    s = np.eye(len(x)) if sigma is None else np.atleast_2d(np.asarray(sigma(x), dtype=float))
    g = as_vector(grad(x))
    value = float(g @ as_vector(drift(x)))
    for z, m in nu.atom_list():
        u = s @ z
        small = 1.0 if np.linalg.norm(z) < 1.0 else 0.0
        value += (f(x + u) - f(x) - small * float(g @ u)) * m
    return value

def kernel_generator(kernel, F, grad, drift=None):
    """Return the coupled generator applied to F at the kernel's (x, y).

       F: (x, y) -> float
       grad: (x, y) -> (grad_x F, grad_y F)
       drift: x -> b(x), zero when omitted
    """
    x, y = kernel.x, kernel.y
    drift = drift or _zero_drift
    gx, gy = (as_vector(g) for g in grad(x, y))
    base = F(x, y)
    value = float(gx @ as_vector(drift(x)) + gy @ as_vector(drift(y)))
    for a in kernel.atoms:
        cx = float(gx @ a.u) if np.linalg.norm(a.z) < 1.0 else 0.0
        cy = float(gy @ a.v) if np.linalg.norm(a.w) < 1.0 else 0.0
        value += (F(x + a.u, y + a.v) - base - cx - cy) * a.mass
    return value
