#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Core module config

"""

import sys
import json
import hashlib
import logging
import datetime
from datetime import timezone

from webauthn2.util import merge_config

site_defaults = {
    "log_level": "WARNING",
    "workers": 1,
    "explosion_bound": 1e8,
    "quad_limit": 200,
}

config = merge_config(
    jsonFileName='levycouple_config.json',
    built_ins={},
)
# add defaults incrementally in case local config is sparsely populated
for key, value in site_defaults.items():
    config.setdefault(key, value)

## setup logger and audit trace helpers
logger = logging.getLogger('levycouple')
if not logger.handlers:
    streamhandler = logging.StreamHandler(sys.stderr)
    streamformatter = logging.Formatter('%(name)s[%(process)d.%(thread)d]: %(message)s')
    streamhandler.setFormatter(streamformatter)
    logger.addHandler(streamhandler)
logger.setLevel(getattr(logging, str(config.get('log_level', 'WARNING')).upper(), logging.WARNING))

def trace(event, **fields):
    """Log one audit event as a single JSON line.

       event: short event name, e.g. "run.start"
       fields: JSON-serializable event attributes
    """
    fields = dict(fields)
    fields['event'] = event
    fields['time'] = datetime.datetime.now(timezone.utc).isoformat()
    logger.info(json.dumps(fields, sort_keys=True, default=str))

def coalesce(*args):
    for arg in args:
        if arg is not None:
            return arg

def config_hash(d):
    """Stable hash of a JSON-compatible config document."""
    return hashlib.sha256(
        json.dumps(d, sort_keys=True, separators=(',', ':')).encode()
    ).hexdigest()

class LevyCoupleException (Exception):
    """Base class for levycouple exceptions."""
    pass

class ConfigInvalid (LevyCoupleException):
    """Exceptions representing malformed or unknown configuration."""
    pass

class IoError (LevyCoupleException):
    """Exceptions representing unreadable inputs or unwritable outputs."""
    pass

class NumericFailure (LevyCoupleException):
    """Base class for failures of a numeric computation."""
    pass

class InvalidMeasure (NumericFailure):
    """A Levy measure violates its construction invariants."""
    pass

class NonSymmetricMeasure (NumericFailure):
    """An operation needs a rotationally symmetric measure."""
    pass

class QuadratureFailure (NumericFailure):
    """A numeric integral did not converge."""
    pass

class CompensationDivergence (QuadratureFailure):
    """A compensated small-jump integral did not converge."""
    pass

class IntegrabilityViolation (NumericFailure):
    """The integral of s/psi(s) over (0,1] appears infinite."""
    pass

class HypothesisViolation (NumericFailure):
    """Inputs violate the hypotheses of a bound being checked."""
    pass

class ZeroShift (NumericFailure):
    """Overlap with a zero shift of an infinite measure is infinite."""
    pass

class UnsupportedPoint (NumericFailure):
    """A point lies outside the support of the measure."""
    pass

class EmptyTail (NumericFailure):
    """No mass beyond the truncation cutoff to sample from."""
    pass

class SubMeasureViolation (NumericFailure):
    """Jump system component measures exceed the base measure."""
    pass

class NonAtomicBase (NumericFailure):
    """An exact kernel needs a discrete base measure."""
    pass

class SingularSigma (NumericFailure):
    """A noise coefficient matrix is numerically singular."""
    pass

class ExplosionDetected (NumericFailure):
    """A simulated state left the configured bound."""
    pass

class DensityDominationViolation (NumericFailure):
    """A sub-density exceeds the density it must be dominated by."""
    pass
