#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Named coefficient functions: drifts b(x) and noise matrices sigma(x).

Config blocks:

    {"kind": "zero"}
    {"kind": "linear", "k": -1.0}                       b(x) = k x
    {"kind": "table", "points": [...], "values": [...]} b_i(x) = interp(x_i)

    {"kind": "identity"}
    {"kind": "one_plus_square"}                         sigma(x) = (1 + |x|^2) I

Every coefficient is a module-level class instance so it pickles into
worker processes.

"""

import numpy as np

from .core import ConfigInvalid

class Drift (object):
    kind = None
    lipschitz = 0.0
    is_zero = False

    def __call__(self, x):
        raise NotImplementedError()

    def to_config(self):
        return {"kind": self.kind}

class ZeroDrift (Drift):
    kind = 'zero'
    is_zero = True

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

class LinearDrift (Drift):
    """b(x) = k x"""
    kind = 'linear'

    def __init__(self, k=-1.0):
        self.k = float(k)
        self.lipschitz = abs(self.k)
        self.is_zero = self.k == 0.0

    def __call__(self, x):
        return self.k * np.asarray(x, dtype=float)

    def to_config(self):
        return {"kind": self.kind, "k": self.k}

class TableDrift (Drift):
    """Piecewise linear b applied coordinatewise, constant beyond the table."""
    kind = 'table'

    def __init__(self, points, values):
        points = np.asarray(points, dtype=float)
        values = np.asarray(values, dtype=float)
        if points.ndim != 1 or points.shape != values.shape or len(points) < 2:
            raise ConfigInvalid('drift table needs matching points and values with at least two entries')
        if np.any(np.diff(points) <= 0.0):
            raise ConfigInvalid('drift table points must be strictly increasing')
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(values))):
            raise ConfigInvalid('drift table entries must be finite')
        self.points = points
        self.values = values
        self.lipschitz = float(np.max(np.abs(np.diff(values) / np.diff(points))))

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.points, self.values)

    def to_config(self):
        return {"kind": self.kind, "points": self.points.tolist(), "values": self.values.tolist()}

drift_kinds = {
    'zero': ZeroDrift,
    'linear': LinearDrift,
    'table': TableDrift,
}

def make_drift(block):
    """Return the drift named by a config block."""
    kind = block.get('kind')
    if kind not in drift_kinds:
        raise ConfigInvalid('drift.kind must be one of %s, got %r' % (sorted(drift_kinds), kind))
    try:
        return drift_kinds[kind](**{k: v for k, v in block.items() if k != 'kind'})
    except TypeError as e:
        raise ConfigInvalid('drift block of kind %r: %s' % (kind, e))

class IdentitySigma (object):
    kind = 'identity'

    def __call__(self, x):
        return np.eye(len(np.atleast_1d(x)))

class OnePlusSquareSigma (object):
    kind = 'one_plus_square'

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return (1.0 + float(x @ x)) * np.eye(len(x))

sigma_kinds = {
    'identity': IdentitySigma,
    'one_plus_square': OnePlusSquareSigma,
}

def make_sigma(block):
    """Return the noise coefficient named by a config block, or None."""
    if block is None:
        return None
    kind = block.get('kind')
    if kind not in sigma_kinds:
        raise ConfigInvalid('sigma.kind must be one of %s, got %r' % (sorted(sigma_kinds), kind))
    return sigma_kinds[kind]()
