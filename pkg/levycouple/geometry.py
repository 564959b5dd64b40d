#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Deterministic vector maps shared by all couplings.

Both maps accept a single vector of shape (d,) or a stack of vectors
of shape (n, d) for the argument they transform.

"""

import numpy as np

# pairs closer than this are treated as coincident by reflect()
degenerate_distance = 1e-12

def as_vector(v):
    """Return v as a float array with at least one dimension."""
    return np.atleast_1d(np.asarray(v, dtype=float))

class ReflectionMap (object):
    """Reflection at the hyperplane orthogonal to x-y.

       The map is the identity when x and y coincide (or are closer
       than degenerate_distance), otherwise an involutive isometry.
    """
    def __init__(self, x, y):
        self.x = as_vector(x)
        self.y = as_vector(y)
        diff = self.x - self.y
        norm = np.linalg.norm(diff)
        if norm < degenerate_distance:
            self.e = None
        else:
            self.e = diff / norm

    @property
    def is_identity(self):
        return self.e is None

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self.e is None:
            return z.copy()
        return z - 2.0 * np.multiply.outer(z @ self.e, self.e)

    def inverse(self, z):
        return self(z)

    def matrix(self):
        """Return I - 2ee^T as a dense matrix."""
        d = len(self.x)
        if self.e is None:
            return np.eye(d)
        return np.eye(d) - 2.0 * np.outer(self.e, self.e)

def reflect(x, y, z):
    """Return R_{x,y}(z)."""
    return ReflectionMap(x, y)(z)

def truncate_kappa(v, kappa):
    """Return (1 ^ kappa/|v|) v, i.e. v shortened to length at most kappa.

       kappa may be math.inf; v = 0 maps to 0.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    with np.errstate(divide='ignore', invalid='ignore'):
        factor = np.where(norm > kappa, kappa / np.where(norm > 0, norm, 1.0), 1.0)
    return v * factor
