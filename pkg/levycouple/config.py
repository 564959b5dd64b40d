#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Experiment configuration documents.

An experiment config is one JSON document overlaid on DEFAULTS.  Plain
blocks merge key by key.  Polymorphic blocks (those carrying a "kind")
replace the default block wholesale and are checked against the keys
of their kind.  Every error names the dotted key at fault.

"""

import json
import math
import os

from .core import ConfigInvalid, IoError, config_hash

DEFAULTS = {
    "measure": {"kind": "stable", "alpha": 1.0, "c": 1.0, "dimension": 1},
    "drift": {"kind": "linear", "k": -1.0},
    "scheme": {"kind": "basic", "kappa": 1.0, "meet_threshold": None},
    "truncation": {"epsilon": 1e-3, "quad_points": 128, "mc_points": 20000, "seed": 0},
    "sde": {"x0": [0.0], "y0": [0.05], "max_step": 1e-3, "horizon": 1.0},
    "grids": {
        "t_grid": [0.5, 1.0, 2.0, 4.0],
        "delta_grid": [0.01, 0.05, 0.1],
        "drift_grid": [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
    },
    "regularity": {"observable": "tanh"},
    "compare": {
        "case": "InfiniteRange",
        "pairs": 10,
        "kappa": 1.0,
        "test_function": {"kind": "exponential", "a": 1.0},
    },
    "verify": {"pairs": [[[0.5], [-0.5]]], "sigma": None},
    "n_paths": 1000,
    "seed": 0,
    "workers": 1,
    "output": {"path": None, "format": "csv", "summary": None},
}

# kind -> (allowed keys, required keys) for each polymorphic block
POLYMORPHIC = {
    "measure": {
        "atoms": ({"kind", "atoms", "csv", "dimension"}, set()),
        "stable": ({"kind", "alpha", "c", "dimension"}, {"alpha"}),
        "radial": ({"kind", "family", "alpha", "c", "range_bound", "tempering", "dimension"}, {"family", "alpha"}),
    },
    "drift": {
        "zero": ({"kind"}, set()),
        "linear": ({"kind", "k"}, {"k"}),
        "table": ({"kind", "points", "values"}, {"points", "values"}),
    },
    "scheme": {
        "reflection": ({"kind", "eta", "meet_threshold"}, set()),
        "basic": ({"kind", "kappa", "meet_threshold"}, set()),
        "refbasic": ({"kind", "q0", "meet_threshold"}, set()),
    },
    "scheme.q0": {
        "same": ({"kind"}, set()),
        "ball": ({"kind", "radius"}, {"radius"}),
        "half_distance": ({"kind"}, set()),
        "scaled": ({"kind", "factor"}, {"factor"}),
        "zero": ({"kind"}, set()),
    },
    "compare.test_function": {
        "identity": ({"kind"}, set()),
        "capped": ({"kind", "c"}, {"c"}),
        "exponential": ({"kind", "a"}, set()),
        "phi": ({"kind", "variant"}, set()),
    },
    "verify.sigma": {
        "identity": ({"kind"}, set()),
        "one_plus_square": ({"kind"}, set()),
    },
}

SCHEME_DEFAULTS = {
    "reflection": {"kind": "reflection", "eta": 0.5, "meet_threshold": None},
    "basic": {"kind": "basic", "kappa": 1.0, "meet_threshold": None},
    "refbasic": {"kind": "refbasic", "q0": {"kind": "same"}, "meet_threshold": None},
}

def _merge(dst, src, path):
    for k, v in src.items():
        key = '%s.%s' % (path, k) if path else k
        if k not in dst:
            raise ConfigInvalid('unknown config key %s' % key)
        if isinstance(v, dict) and isinstance(dst[k], dict) and 'kind' not in v:
            _merge(dst[k], v, key)
        else:
            dst[k] = v
    return dst

def _lookup(doc, path):
    for part in path.split('.'):
        if not isinstance(doc, dict):
            return None
        doc = doc.get(part)
    return doc

def _check_kind(doc, path):
    block = _lookup(doc, path)
    if block is None and path in ('verify.sigma', 'scheme.q0'):
        return
    if not isinstance(block, dict):
        raise ConfigInvalid('config key %s must be an object' % path)
    kinds = POLYMORPHIC[path]
    kind = block.get('kind')
    if kind not in kinds:
        raise ConfigInvalid('%s.kind must be one of %s, got %r' % (path, sorted(kinds), kind))
    allowed, required = kinds[kind]
    for k in sorted(block):
        if k not in allowed:
            raise ConfigInvalid('unknown config key %s.%s for kind %r' % (path, k, kind))
    for k in sorted(required):
        if k not in block:
            raise ConfigInvalid('missing required config key %s.%s' % (path, k))

def _number(doc, path, positive=False, integer=False, minimum=None, allow_inf=False):
    value = _lookup(doc, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid('config key %s must be a number, got %r' % (path, value))
    if integer and int(value) != value:
        raise ConfigInvalid('config key %s must be an integer, got %r' % (path, value))
    if not allow_inf and not math.isfinite(value):
        raise ConfigInvalid('config key %s must be finite, got %r' % (path, value))
    if positive and not value > 0:
        raise ConfigInvalid('config key %s must be positive, got %r' % (path, value))
    if minimum is not None and value < minimum:
        raise ConfigInvalid('config key %s must be >= %s, got %r' % (path, minimum, value))

def _grid(doc, path):
    grid = _lookup(doc, path)
    if not isinstance(grid, list) or not grid:
        raise ConfigInvalid('config key %s must be a nonempty list' % path)
    for i, v in enumerate(grid):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigInvalid('config key %s[%d] must be a positive number, got %r' % (path, i, v))

def _point(doc, path, d, label=None):
    v = _lookup(doc, path)
    if not isinstance(v, list) or len(v) != d or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        raise ConfigInvalid('config key %s must be a list of %d numbers, got %r' % (label or path, d, v))

def validate(doc):
    """Raise ConfigInvalid unless doc is a complete, well-typed experiment config."""
    for path in POLYMORPHIC:
        _check_kind(doc, path)
    measure = doc['measure']
    if measure['kind'] == 'atoms' and ('atoms' in measure) == ('csv' in measure):
        raise ConfigInvalid('measure of kind atoms needs exactly one of measure.atoms and measure.csv')
    d = measure.get('dimension', 1)
    if measure['kind'] == 'atoms' and 'atoms' in measure and measure['atoms'] and 'dimension' not in measure:
        d = len(measure['atoms'][0]) - 1
    if 'dimension' in measure:
        _number(doc, 'measure.dimension', integer=True, minimum=1)

    _number(doc, 'truncation.epsilon', positive=True)
    _number(doc, 'truncation.quad_points', integer=True, minimum=64)
    _number(doc, 'truncation.mc_points', integer=True, minimum=1)
    _number(doc, 'truncation.seed', integer=True, minimum=0)
    _number(doc, 'sde.max_step', positive=True)
    _number(doc, 'sde.horizon', positive=True)
    _point(doc, 'sde.x0', d)
    _point(doc, 'sde.y0', d)
    for name in ('t_grid', 'delta_grid', 'drift_grid'):
        _grid(doc, 'grids.%s' % name)
    _number(doc, 'n_paths', integer=True, minimum=1)
    _number(doc, 'seed', integer=True, minimum=0)
    _number(doc, 'workers', integer=True, minimum=1)
    _number(doc, 'compare.pairs', integer=True, minimum=1)
    _number(doc, 'compare.kappa', positive=True, allow_inf=True)
    if doc['compare']['case'] not in ('InfiniteRange', 'FiniteRange'):
        raise ConfigInvalid('compare.case must be InfiniteRange or FiniteRange, got %r' % (doc['compare']['case'],))
    if doc['regularity']['observable'] not in ('tanh', 'cos', 'constant'):
        raise ConfigInvalid('regularity.observable must be tanh, cos or constant, got %r' % (doc['regularity']['observable'],))
    pairs = doc['verify']['pairs']
    if not isinstance(pairs, list) or not pairs:
        raise ConfigInvalid('config key verify.pairs must be a nonempty list of [x, y] pairs')
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigInvalid('config key verify.pairs[%d] must be an [x, y] pair' % i)
        for j, name in enumerate('xy'):
            _point({name: pair[j]}, name, d, 'verify.pairs[%d].%s' % (i, name))
    if doc['output']['format'] not in ('csv', 'json'):
        raise ConfigInvalid('output.format must be csv or json, got %r' % (doc['output']['format'],))
    return doc

def load_document(path):
    """Return the JSON document at path."""
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise IoError('cannot read config %s: %s' % (path, e))
    except ValueError as e:
        raise ConfigInvalid('config %s is not valid JSON: %s' % (path, e))

def apply_overrides(doc, overrides):
    """Overlay command-line overrides onto a user document."""
    doc = json.loads(json.dumps(doc))
    overrides = dict(overrides or {})
    scheme = overrides.pop('scheme', None)
    if scheme is not None:
        if scheme not in SCHEME_DEFAULTS:
            raise ConfigInvalid('scheme must be one of %s, got %r' % (sorted(SCHEME_DEFAULTS), scheme))
        current = doc.get('scheme', DEFAULTS['scheme'])
        if current.get('kind') != scheme:
            doc['scheme'] = dict(SCHEME_DEFAULTS[scheme])
    for path, value in overrides.items():
        if value is None:
            continue
        parts = path.split('.')
        block = doc
        for part in parts[:-1]:
            block = block.setdefault(part, {})
        block[parts[-1]] = value
    return doc

class ExperimentConfig (object):
    """A validated experiment config with builders for its parts."""
    def __init__(self, doc=None, base_dir=None):
        merged = json.loads(json.dumps(DEFAULTS))
        _merge(merged, doc or {}, '')
        self.doc = validate(merged)
        self.base_dir = base_dir or os.getcwd()
        self._measure = None

    @classmethod
    def load(cls, path, overrides=None):
        doc = apply_overrides(load_document(path), overrides) if path else apply_overrides({}, overrides)
        base_dir = os.path.dirname(os.path.abspath(path)) if path else None
        return cls(doc, base_dir)

    @property
    def hash(self):
        return config_hash(self.doc)

    def __getitem__(self, key):
        return self.doc[key]

    def truncation(self):
        from .measures.base import TruncationConfig
        return TruncationConfig.from_config(self.doc['truncation'])

    def measure(self):
        if self._measure is None:
            from .measures import construct_with_lazy_import
            block = dict(self.doc['measure'])
            if 'csv' in block:
                block['csv'] = os.path.join(self.base_dir, block['csv'])
            self._measure = construct_with_lazy_import(block, quad_points=self.doc['truncation']['quad_points'])
        return self._measure

    def drift(self):
        from .drift import make_drift
        return make_drift(self.doc['drift'])

    def sde_spec(self, horizon=None):
        from .simulate import SdeSpec
        sde = self.doc['sde']
        return SdeSpec(
            self.measure(), self.drift(), self.truncation(),
            max_step=sde['max_step'], horizon=horizon or sde['horizon'],
        )

    def coupling(self):
        from .simulate import CouplingSpec
        return CouplingSpec.from_config(self.doc['scheme'])

    def dump(self):
        return json.dumps(self.doc, indent=2, sort_keys=True)

def print_defaults():
    return json.dumps(DEFAULTS, indent=2, sort_keys=True)
