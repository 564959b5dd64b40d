#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

import json
import logging
import os
import shutil

from levycouple import core
from levycouple.core import (
    CompensationDivergence, ConfigInvalid, LevyCoupleException, NumericFailure, QuadratureFailure,
    coalesce, config_hash, merge_config, trace,
)

def test_config_hash_ignores_key_order():
    a = {"seed": 1, "measure": {"kind": "stable", "alpha": 1.0}}
    b = {"measure": {"alpha": 1.0, "kind": "stable"}, "seed": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, seed=2))
    assert len(config_hash(a)) == 64

def test_merge_config_overlays_site_file(tmp_path, monkeypatch, test_dir):
    shutil.copy(os.path.join(test_dir, 'levycouple_config.json'), str(tmp_path / 'levycouple_config.json'))
    monkeypatch.setenv('HOME', str(tmp_path))
    merged = merge_config(jsonFileName='levycouple_config.json', built_ins={})
    assert merged['workers'] == 2
    assert merged['log_level'] == 'INFO'
    assert merged.get('quad_limit') == 400

def test_merge_config_without_site_file(tmp_path, monkeypatch):
    monkeypatch.setenv('HOME', str(tmp_path))
    merged = merge_config(jsonFileName='levycouple_config.json', built_ins={"workers": 1})
    assert merged.get('workers') == 1
    assert merged.get('log_level') is None

def test_trace_logs_one_json_line(caplog):
    caplog.set_level(logging.INFO, logger='levycouple')
    trace('run.start', seed=3, values=[0.5])
    records = [r for r in caplog.records if r.name == 'levycouple']
    assert len(records) == 1
    doc = json.loads(records[0].getMessage())
    assert doc['event'] == 'run.start'
    assert doc['seed'] == 3 and doc['values'] == [0.5]
    assert 'time' in doc

def test_exception_hierarchy():
    assert issubclass(ConfigInvalid, LevyCoupleException)
    assert issubclass(CompensationDivergence, QuadratureFailure)
    assert issubclass(QuadratureFailure, NumericFailure)
    assert not issubclass(ConfigInvalid, NumericFailure)

def test_coalesce():
    assert coalesce(None, 0, 5) == 0
    assert coalesce(None, None) is None

def test_site_config_defaults():
    for key in core.site_defaults:
        assert core.config.get(key) is not None
