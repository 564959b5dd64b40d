#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

import json
import os

import pytest

from levycouple import cli, couple_cli
from levycouple.cli import csv_text, main, write_atomic
from levycouple.config import DEFAULTS
from levycouple.core import IoError

QUICK = {
    "measure": {"kind": "stable", "alpha": 1.0, "c": 1.0, "dimension": 1},
    "truncation": {"epsilon": 0.05},
    "sde": {"x0": [0.0], "y0": [0.05], "max_step": 0.01, "horizon": 0.2},
    "grids": {"t_grid": [0.25, 0.5], "delta_grid": [0.05], "drift_grid": [0.1, 0.2]},
    "n_paths": 3,
    "seed": 21,
}

def _config(tmp_path, doc, name='experiment.json'):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)

def _run(*args):
    return main(['levy-couple'] + list(args))

def test_print_config_defaults(capsys):
    assert _run('print-config') == 0
    assert json.loads(capsys.readouterr().out) == DEFAULTS

def test_print_config_merges_file(tmp_path, capsys):
    path = _config(tmp_path, {"seed": 9})
    assert _run('print-config', '--config', path, '--paths', '12') == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc['seed'] == 9 and doc['n_paths'] == 12

def test_missing_key_exits_1(tmp_path, capsys):
    path = _config(tmp_path, {"measure": {"kind": "stable"}})
    assert _run('simulate', '--config', path) == 1
    assert 'measure.alpha' in capsys.readouterr().err

def test_bad_arguments_exit_1(capsys):
    assert _run('teleport') == 1
    assert _run('simulate', '--paths', 'many') == 1
    assert 'levy-couple' in capsys.readouterr().err

def test_simulate_is_reproducible(tmp_path, capsys):
    path = _config(tmp_path, QUICK)
    first = str(tmp_path / 'first.csv')
    second = str(tmp_path / 'second.csv')
    assert _run('simulate', '--config', path, '--out', first) == 0
    assert _run('simulate', '--config', path, '--out', second) == 0
    out = capsys.readouterr().out
    assert out.startswith('simulate basic: 3 paths')
    with open(first, 'rb') as f:
        data = f.read()
    with open(second, 'rb') as f:
        assert f.read() == data
    lines = data.decode().split('\n')
    assert b'\r' not in data
    assert lines[0] == 'path,t,x_1,y_1,event_type'
    assert lines[1] == '0,0.0,0.0,0.05,drift'
    assert {line.split(',')[0] for line in lines[1:] if line} == {'0', '1', '2'}

def test_simulate_seed_and_scheme_overrides(tmp_path, capsys):
    path = _config(tmp_path, QUICK)
    assert _run('simulate', '--config', path, '--format', 'json', '--scheme', 'reflection', '--seed', '4') == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert doc['scheme']['kind'] == 'reflection'
    assert doc['seed'] == 4
    assert len(doc['paths']) == 3
    assert captured.err.startswith('simulate reflection')

def test_verify_atoms(test_dir, capsys):
    assert _run('verify', '--config', os.path.join(test_dir, 'experiment_atoms.json')) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc['system'] == 'refined_basic'
    assert len(doc['rows']) == 3
    assert doc['marginality_defect'] <= 1e-12
    assert doc['symmetry_defect'] <= 1e-12

def test_verify_reflection_basic_atoms(test_dir, capsys):
    assert _run('verify', '--config', os.path.join(test_dir, 'experiment_atoms.json'), '--scheme', 'refbasic') == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc['system'] == 'reflection_basic'
    assert doc['marginality_defect'] <= 1e-12

def test_verify_asymmetric_atoms_exits_2(tmp_path, capsys):
    path = _config(tmp_path, {
        "measure": {"kind": "atoms", "atoms": [[1.0, 1.0], [-1.0, 2.0]]},
        "scheme": {"kind": "refbasic"},
    })
    assert _run('verify', '--config', path) == 2
    assert 'NonSymmetricMeasure' in capsys.readouterr().err

@pytest.mark.parametrize('subcommand, columns', [
    ('tail', 't,value,std_error,n_paths,seed,config_hash'),
    ('tv', 't,value,std_error,lower,tail,n_paths,seed,config_hash'),
    ('regularity', 'delta,t,ratio,std_error,ceiling,ceiling_std_error'),
])
def test_estimator_tables(tmp_path, capsys, subcommand, columns):
    path = _config(tmp_path, QUICK)
    assert _run(subcommand, '--config', path) == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().split('\n')
    assert lines[0] == columns
    assert len(lines) == 3
    assert captured.err.startswith(subcommand)

def test_tail_json(tmp_path, capsys):
    path = _config(tmp_path, QUICK)
    assert _run('tail', '--config', path, '--format', 'json') == 0
    doc = json.loads(capsys.readouterr().out)
    assert [row['t'] for row in doc['estimates']] == [0.25, 0.5]
    assert all(0.0 <= row['value'] <= 1.0 for row in doc['estimates'])

def test_driftcheck(tmp_path, capsys):
    path = _config(tmp_path, dict(QUICK, scheme={"kind": "reflection", "eta": 0.5, "meet_threshold": None}))
    assert _run('driftcheck', '--config', path) == 0
    lines = capsys.readouterr().out.strip().split('\n')
    assert lines[0] == 'delta,value,std_error,negative'
    assert [line.split(',')[-1] for line in lines[1:]] == ['true', 'true']

def test_compare_finite_range(tmp_path, capsys):
    path = _config(tmp_path, dict(
        QUICK,
        measure={"kind": "radial", "family": "truncated_stable", "alpha": 1.0, "range_bound": 0.2},
        compare={"case": "FiniteRange", "pairs": 2, "kappa": 1.0, "test_function": {"kind": "exponential", "a": 1.0}},
    ))
    assert _run('compare', '--config', path, '--workers', '2') == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().split('\n')
    assert lines[0] == 'x_1,y_1,distance,reflection,reflection_basic,basic,std_error,ok'
    assert [line.split(',')[-1] for line in lines[1:]] == ['true', 'true']
    assert captured.err.startswith('compare FiniteRange: 2 of 2')

def test_summary_file(tmp_path, capsys):
    summary = str(tmp_path / 'summary.json')
    path = _config(tmp_path, dict(QUICK, output={"path": None, "format": "csv", "summary": summary}))
    assert _run('tail', '--config', path, '--out', str(tmp_path / 'tail.csv')) == 0
    with open(summary) as f:
        doc = json.load(f)
    assert doc['subcommand'] == 'tail'
    assert doc['seed'] == 21 and doc['n_paths'] == 3
    assert capsys.readouterr().out.startswith('tail basic')

def test_summary_file_carries_constants(tmp_path):
    summary = str(tmp_path / 'summary.json')
    scheme = {"kind": "reflection", "eta": 0.5, "meet_threshold": None}
    path = _config(tmp_path, dict(QUICK, scheme=scheme, output={"path": None, "format": "csv", "summary": summary}))
    assert _run('driftcheck', '--config', path, '--out', str(tmp_path / 'dc.csv')) == 0
    with open(summary) as f:
        doc = json.load(f)
    assert doc['epsilon0_hat'] == 0.2
    assert doc['c0_hat'] > 0.0
    assert doc['ok'] is True
    assert doc['c_hat'] is None

    assert _run('regularity', '--config', path, '--out', str(tmp_path / 'reg.csv')) == 0
    with open(summary) as f:
        doc = json.load(f)
    assert doc['subcommand'] == 'regularity'
    assert doc['c_hat'] >= 0.0
    assert doc['epsilon0_hat'] is None and doc['c0_hat'] is None

def test_value_error_exits_1(tmp_path, monkeypatch, capsys):
    def broken(cfg):
        raise ValueError('r must be positive')
    monkeypatch.setitem(cli.handlers, 'tv', broken)
    path = _config(tmp_path, QUICK)
    assert _run('tv', '--config', path) == 1
    assert 'tv: r must be positive' in capsys.readouterr().err

def test_unwritable_output_exits_1(tmp_path, capsys):
    path = _config(tmp_path, QUICK)
    assert _run('simulate', '--config', path, '--out', str(tmp_path / 'missing' / 'out.csv')) == 1
    assert 'cannot write' in capsys.readouterr().err

def test_write_atomic_replaces(tmp_path):
    target = str(tmp_path / 'out.txt')
    write_atomic(target, 'one\n')
    write_atomic(target, 'two\n')
    with open(target) as f:
        assert f.read() == 'two\n'
    assert os.listdir(str(tmp_path)) == ['out.txt']
    with pytest.raises(IoError):
        write_atomic(str(tmp_path / 'no' / 'out.txt'), 'x')

def test_csv_cells():
    text = csv_text(['a', 'b', 'c', 'd'], [dict(a=1, b=0.1, c=True, d=None)])
    assert text == 'a,b,c,d\n1,0.1,true,\n'

def test_entry_point(capsys):
    assert couple_cli(['levy-couple', 'print-config']) == 0
    assert json.loads(capsys.readouterr().out) == DEFAULTS
