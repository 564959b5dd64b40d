#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

import sys

from . import core
from .config import ExperimentConfig

def instantiate(config=None, overrides=None):
    """Return a validated ExperimentConfig.

       config may be a path to a JSON file, an already parsed document,
       or None for the built-in defaults.
    """
    if config is None or isinstance(config, str):
        return ExperimentConfig.load(config, overrides)
    from .config import apply_overrides
    return ExperimentConfig(apply_overrides(config, overrides))

def couple_cli(argv=None):
    """Run the levy-couple command line and return its exit status."""
    from . import cli
    return cli.main(sys.argv if argv is None else argv)
