#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Discrete (atomic) Levy measures.

Every operation is an exact atom sum.  Atom lookups go through a
KD-tree with a small matching tolerance, so locations produced by
floating point maps (reflections, shifts) still find their atoms.

"""

import math

import numpy as np
from scipy.spatial import cKDTree

from ..core import InvalidMeasure, IoError
from .base import LevyMeasure

# atoms closer than this are the same atom
match_tolerance = 1e-9

class DiscreteAtoms (LevyMeasure):
    kind = 'atoms'
    atomic = True

    def __init__(self, locations, masses, dimension=None, range_bound=None):
        locations = np.asarray(locations, dtype=float)
        masses = np.asarray(masses, dtype=float).reshape(-1)
        if locations.size == 0:
            if dimension is None:
                raise InvalidMeasure('an empty atom list needs an explicit dimension')
            locations = locations.reshape(0, int(dimension))
        locations = np.atleast_2d(locations)
        if locations.shape[0] != masses.shape[0]:
            raise InvalidMeasure('got %d atom locations but %d masses' % (locations.shape[0], masses.shape[0]))
        if dimension is not None and locations.shape[1] != int(dimension):
            raise InvalidMeasure('atom locations have dimension %d, expected %d' % (locations.shape[1], dimension))
        if not np.all(np.isfinite(locations)) or not np.all(np.isfinite(masses)):
            raise InvalidMeasure('atom locations and masses must be finite')
        if np.any(masses < 0.0):
            raise InvalidMeasure('atom masses must be nonnegative')
        norms = np.linalg.norm(locations, axis=1)
        if np.any(norms < match_tolerance):
            raise InvalidMeasure('a Levy measure cannot charge the origin')

        if len(locations):
            # merge repeated locations
            locations, inverse = np.unique(locations, axis=0, return_inverse=True)
            masses = np.bincount(inverse.reshape(-1), weights=masses, minlength=len(locations))
            norms = np.linalg.norm(locations, axis=1)

        LevyMeasure.__init__(self, locations.shape[1], range_bound=range_bound)
        self.locations = locations
        self.masses = masses
        self.norms = norms
        self._tree = cKDTree(locations) if len(locations) else None
        self._symmetric = bool(np.all(np.abs(self.mass_at(-locations) - masses) <= 1e-12)) if len(locations) else True
        if self.range_bound is None and len(locations):
            self.range_bound = float(norms.max())

    @classmethod
    def from_pairs(cls, pairs, dimension=None):
        """Build from rows of d coordinates followed by the mass."""
        rows = np.asarray(pairs, dtype=float)
        if rows.size == 0:
            return cls(np.empty((0, dimension or 1)), [], dimension=dimension)
        rows = np.atleast_2d(rows)
        if rows.shape[1] < 2:
            raise InvalidMeasure('atom rows need at least one coordinate and a mass')
        return cls(rows[:, :-1], rows[:, -1], dimension=dimension)

    @classmethod
    def from_csv(cls, path, dimension=None):
        """Load atoms from CSV rows of d coordinates followed by the mass.

           A first line containing letters is taken as a header.
        """
        try:
            with open(path) as f:
                first = f.readline()
            skip = 1 if any(c.isalpha() for c in first) else 0
            rows = np.loadtxt(path, delimiter=',', ndmin=2, comments='#', skiprows=skip)
        except OSError as e:
            raise IoError('cannot read atom file %s: %s' % (path, e))
        except ValueError as e:
            raise InvalidMeasure('malformed atom file %s: %s' % (path, e))
        return cls.from_pairs(rows, dimension=dimension)

    def to_config(self):
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "atoms": [list(map(float, loc)) + [float(m)] for loc, m in zip(self.locations, self.masses)],
        }

    @property
    def is_symmetric(self):
        return self._symmetric

    @property
    def is_finite(self):
        return True

    def total_mass(self):
        return float(self.masses.sum())

    def mass_at(self, z):
        """Return the atom mass at each row of z (0 where there is no atom)."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if self._tree is None:
            return np.zeros(len(z))
        dist, idx = self._tree.query(z, k=1, distance_upper_bound=match_tolerance)
        found = np.isfinite(dist)
        out = np.zeros(len(z))
        out[found] = self.masses[idx[found]]
        return out

    density = mass_at

    def tail(self, r):
        return float(self.masses[self.norms >= r].sum())

    def tail_open(self, r):
        return float(self.masses[self.norms > r].sum())

    def psi(self, r):
        sel = self.norms <= r
        return float((self.norms[sel] ** 2 * self.masses[sel]).sum())

    def overlap(self, x, epsilon=0.0, cfg=None):
        x = np.asarray(x, dtype=float)
        sel = self.norms > epsilon
        shifted = self.mass_at(self.locations[sel] - x)
        return float(np.minimum(self.masses[sel], shifted).sum()), 0.0

    def sample(self, epsilon, rng, n=1):
        self.check_tail(epsilon)
        sel = np.flatnonzero(self.norms > epsilon)
        weights = self.masses[sel]
        idx = rng.choice(sel, size=n, p=weights / weights.sum())
        return self.locations[idx].copy()

    def compensator(self, epsilon):
        sel = (self.norms > epsilon) & (self.norms < 1.0)
        return - (self.locations[sel] * self.masses[sel, None]).sum(axis=0)

    def atom_list(self):
        """Return [(location, mass), ...] with positive masses."""
        return [(loc.copy(), float(m)) for loc, m in zip(self.locations, self.masses) if m > 0.0]
