#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""The levy-couple command line.

    levy-couple SUBCOMMAND [--config FILE] [--scheme S] [--paths N] [--seed N]
                           [--out FILE] [--format csv|json] [--workers N]

Exit status is 0 on success, 1 for invalid configuration or unusable
input/output, and 2 for numeric failures.

"""

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from webauthn2.util import jsonWriter

from .config import SCHEME_DEFAULTS, ExperimentConfig, print_defaults
from .core import ConfigInvalid, IoError, NumericFailure, logger, trace
from .drift import make_sigma
from .estimators import (
    coupling_time_tail, drift_inequality_check, observables, regularity_ratio, tv_bound,
)
from .geometry import as_vector
from .operators import (
    FINITE_RANGE, build_kernel, compare_operators, make_test_function, system_from_config,
    verify_marginality, verify_symmetry_condition,
)
from .pool import worker_count
from .simulate import simulate_pairs

subcommands = ('verify', 'simulate', 'tail', 'tv', 'regularity', 'driftcheck', 'compare', 'print-config')

# scheme kind -> jump system kind
scheme_systems = {
    'reflection': 'reflection',
    'basic': 'refined_basic',
    'refbasic': 'reflection_basic',
}

class ArgumentParser (argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid('%s: %s' % (self.prog, message))

def make_parser(prog='levy-couple'):
    parser = ArgumentParser(prog=prog, description='Couplings of Levy-driven SDEs.')
    parser.add_argument('subcommand', choices=subcommands)
    parser.add_argument('--config', help='experiment config JSON file')
    parser.add_argument('--scheme', choices=sorted(SCHEME_DEFAULTS), help='coupling scheme override')
    parser.add_argument('--paths', type=int, help='number of simulated paths')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--out', help='output file (default: standard output)')
    parser.add_argument('--format', choices=('csv', 'json'), help='output format')
    parser.add_argument('--workers', type=int, help='worker processes')
    parser.add_argument('--envelope', action='store_true',
                        help='tail: also report the drift-inequality envelope')
    return parser

def overrides_from(args):
    return {
        'scheme': args.scheme,
        'n_paths': args.paths,
        'seed': args.seed,
        'output.path': args.out,
        'output.format': args.format,
        'workers': args.workers,
    }

## output

def _cell(v):
    if v is None:
        return ''
    if isinstance(v, (bool, np.bool_)):
        return 'true' if v else 'false'
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)

def csv_text(columns, rows):
    """Render rows (dicts) as CSV with '.' decimals and LF line endings."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()

def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v

def json_text(doc):
    return jsonWriter(_jsonable(doc)).decode() + '\n'

def write_atomic(path, text):
    """Write text to path through a temporary file in the same directory."""
    dirname = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=dirname, prefix='.%s.' % os.path.basename(path), suffix='.tmp')
    except OSError as e:
        raise IoError('cannot write %s: %s' % (path, e))
    try:
        with os.fdopen(fd, 'w', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise IoError('cannot write %s: %s' % (path, e))

class Result (object):
    """What a subcommand produced: a table, a JSON document and a summary line.

       constants: fitted constants copied into the JSON run summary
    """
    def __init__(self, summary, doc, columns=None, rows=None, constants=None):
        self.summary = summary
        self.doc = doc
        self.columns = columns
        self.rows = rows
        self.constants = constants or {}

    def render(self, fmt):
        if fmt == 'csv' and self.columns is not None:
            return csv_text(self.columns, self.rows)
        return json_text(self.doc)

## subcommands

def _coordinates(prefix, d):
    return ['%s_%d' % (prefix, i + 1) for i in range(d)]

def _spread(row, prefix, v):
    for i, c in enumerate(as_vector(v)):
        row['%s_%d' % (prefix, i + 1)] = float(c)
    return row

def _constants(c_hat=None, epsilon0_hat=None, c0_hat=None, **more):
    return dict(more, c_hat=c_hat, epsilon0_hat=epsilon0_hat, c0_hat=c0_hat)

def _scheme_system_block(scheme):
    block = dict(scheme)
    kind = block.pop('kind')
    block.pop('meet_threshold', None)
    block['kind'] = scheme_systems[kind]
    return block

def run_verify(cfg):
    nu = cfg.measure()
    sigma = make_sigma(cfg['verify']['sigma'])
    js = system_from_config(nu, _scheme_system_block(cfg['scheme']), sigma)
    rows = []
    for x, y in cfg['verify']['pairs']:
        marginality = verify_marginality(build_kernel(js, x, y), nu)
        row = dict(x=x, y=y, marginality_defect=marginality['max_defect'],
                   first_defect=marginality['first_defect'], second_defect=marginality['second_defect'])
        if sigma is None:
            row['symmetry_defect'] = verify_symmetry_condition(js, x, y)['max_defect']
        rows.append(row)
    marginality = max(row['marginality_defect'] for row in rows)
    symmetry = max(row['symmetry_defect'] for row in rows) if sigma is None else None
    doc = dict(system=js.name, marginality_defect=marginality, symmetry_defect=symmetry, rows=rows)
    summary = 'verify %s: %d pairs, marginality defect %.3g, symmetry defect %s' % (
        js.name, len(rows), marginality, 'n/a' if symmetry is None else '%.3g' % symmetry)
    return Result(summary, doc)

def run_simulate(cfg):
    spec = cfg.sde_spec()
    coupling = cfg.coupling()
    sde = cfg['sde']
    paths = simulate_pairs(
        spec, coupling, sde['x0'], sde['y0'], cfg['n_paths'],
        seed=cfg['seed'], workers=cfg['workers'], record=True,
    )
    d = spec.dimension
    columns = ['path', 't'] + _coordinates('x', d) + _coordinates('y', d) + ['event_type']
    rows = []
    for p in paths:
        for t, x, y, event in p.rows():
            row = dict(path=p.index, t=float(t), event_type=event)
            _spread(row, 'x', x)
            _spread(row, 'y', y)
            rows.append(row)
    coalesced = sum(1 for p in paths if p.coalesced)
    doc = dict(
        scheme=coupling.to_config(), seed=cfg['seed'], config_hash=cfg.hash,
        paths=[dict(path=p.index, tau=p.tau, final_x=p.final_x, final_y=p.final_y) for p in paths],
        rows=rows,
    )
    summary = 'simulate %s: %d paths, %d coalesced by t = %g' % (
        coupling.scheme, len(paths), coalesced, spec.horizon)
    return Result(summary, doc, columns, rows)

def run_tail(cfg, envelope=False):
    spec = cfg.sde_spec()
    coupling = cfg.coupling()
    sde = cfg['sde']
    check = None
    if envelope:
        check = drift_inequality_check(coupling, spec.nu, spec.drift, cfg['grids']['drift_grid'], cfg.truncation())
    results = coupling_time_tail(
        coupling, spec, sde['x0'], sde['y0'], cfg['grids']['t_grid'], cfg['n_paths'],
        seed=cfg['seed'], workers=cfg['workers'], config_hash=cfg.hash, drift_check=check,
    )
    rows = [r.to_dict() for r in results]
    columns = ['t', 'value', 'std_error', 'n_paths', 'seed', 'config_hash']
    if envelope:
        columns.append('envelope')
    summary = 'tail %s: P(tau > %g) = %.4g +- %.2g over %d paths' % (
        coupling.scheme, rows[-1]['t'], rows[-1]['value'], rows[-1]['std_error'], cfg['n_paths'])
    constants = _constants(
        epsilon0_hat=check['epsilon0_hat'] if check else None, c0_hat=check['c0_hat'] if check else None)
    return Result(summary, dict(scheme=coupling.to_config(), estimates=rows), columns, rows, constants)

def run_tv(cfg):
    spec = cfg.sde_spec()
    coupling = cfg.coupling()
    sde = cfg['sde']
    rows = []
    for t in cfg['grids']['t_grid']:
        result = tv_bound(
            coupling, spec, sde['x0'], sde['y0'], t, cfg['n_paths'],
            seed=cfg['seed'], workers=cfg['workers'], config_hash=cfg.hash,
        )
        rows.append(result.to_dict())
    columns = ['t', 'value', 'std_error', 'lower', 'tail', 'n_paths', 'seed', 'config_hash']
    summary = 'tv %s: %.4g <= TV at t = %g <= %.4g' % (
        coupling.scheme, rows[-1]['lower'], rows[-1]['t'], rows[-1]['value'])
    return Result(summary, dict(scheme=coupling.to_config(), estimates=rows), columns, rows, _constants())

def run_regularity(cfg):
    spec = cfg.sde_spec()
    coupling = cfg.coupling()
    f, bound = observables[cfg['regularity']['observable']]
    report = regularity_ratio(
        coupling, spec, f, bound, cfg['sde']['x0'], cfg['grids']['delta_grid'], cfg['grids']['t_grid'],
        cfg['n_paths'], seed=cfg['seed'], workers=cfg['workers'], config_hash=cfg.hash,
    )
    columns = ['delta', 't', 'ratio', 'std_error', 'ceiling', 'ceiling_std_error']
    summary = 'regularity %s: fitted constant %.4g over %d paths' % (coupling.scheme, report['c_hat'], cfg['n_paths'])
    return Result(summary, report, columns, report['table'], _constants(c_hat=report['c_hat']))

def run_driftcheck(cfg):
    nu = cfg.measure()
    coupling = cfg.coupling()
    report = drift_inequality_check(coupling, nu, cfg.drift(), cfg['grids']['drift_grid'], cfg.truncation())
    failed = set(report['failure_region'])
    rows = [dict(row, negative=row['delta'] not in failed) for row in report['table']]
    columns = ['delta', 'value', 'std_error', 'negative']
    if report['epsilon0_hat'] is None:
        summary = 'driftcheck %s: generator not negative at the smallest distance' % coupling.scheme
    else:
        summary = 'driftcheck %s: epsilon0 = %g, c0 = %.4g' % (
            coupling.scheme, report['epsilon0_hat'], report['c0_hat'])
    constants = _constants(epsilon0_hat=report['epsilon0_hat'], c0_hat=report['c0_hat'], ok=report['ok'])
    return Result(summary, report, columns, rows, constants)

def comparison_pairs(nu, case, count, seed):
    """Return count random (x, y) pairs suitable for a comparison case."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    d = nu.dimension
    pairs = []
    for _ in range(count):
        x = rng.uniform(-1.0, 1.0, d)
        e = rng.standard_normal(d)
        e /= np.linalg.norm(e)
        if case == FINITE_RANGE:
            distance = 2.0 * nu.range_bound * (1.0 + rng.uniform(0.05, 1.0)) if nu.range_bound else 1.0
        else:
            distance = rng.uniform(0.05, 1.0)
        pairs.append((x, x - distance * e))
    return pairs

def run_compare(cfg):
    nu = cfg.measure()
    cmp = cfg['compare']
    truncation = cfg.truncation()
    f = make_test_function(cmp['test_function'], nu, truncation)
    pairs = comparison_pairs(nu, cmp['case'], cmp['pairs'], cfg['seed'])
    workers = worker_count(cfg['workers'])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = compare_operators(cmp['case'], nu, f, pairs, cfg.drift(), truncation, cmp['kappa'], pool)
    else:
        table = compare_operators(cmp['case'], nu, f, pairs, cfg.drift(), truncation, cmp['kappa'])
    d = nu.dimension
    rows = []
    for row in table:
        flat = dict((k, v) for k, v in row.items() if k not in ('x', 'y'))
        _spread(flat, 'x', row['x'])
        _spread(flat, 'y', row['y'])
        rows.append(flat)
    columns = (_coordinates('x', d) + _coordinates('y', d)
               + ['distance', 'reflection', 'reflection_basic', 'basic', 'std_error', 'ok'])
    passed = sum(1 for row in table if row['ok'])
    summary = 'compare %s: %d of %d pairs within bounds' % (cmp['case'], passed, len(table))
    return Result(summary, dict(case=cmp['case'], rows=table), columns, rows)

handlers = {
    'verify': run_verify,
    'simulate': run_simulate,
    'tail': run_tail,
    'tv': run_tv,
    'regularity': run_regularity,
    'driftcheck': run_driftcheck,
    'compare': run_compare,
}

def run(args):
    """Run parsed arguments; return the exit status."""
    if args.subcommand == 'print-config':
        if args.config:
            text = ExperimentConfig.load(args.config, overrides_from(args)).dump() + '\n'
        else:
            text = print_defaults() + '\n'
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
        return 0

    cfg = ExperimentConfig.load(args.config, overrides_from(args))
    try:
        if args.subcommand == 'tail':
            result = run_tail(cfg, envelope=args.envelope)
        else:
            result = handlers[args.subcommand](cfg)
    except ValueError as e:
        raise ConfigInvalid('%s: %s' % (args.subcommand, e))

    output = cfg['output']
    text = result.render(output['format'])
    if output['path']:
        write_atomic(output['path'], text)
        sys.stdout.write(result.summary + '\n')
    else:
        sys.stdout.write(text)
        sys.stderr.write(result.summary + '\n')
    if output['summary']:
        doc = dict(result.constants)
        doc.update(
            subcommand=args.subcommand, summary=result.summary, config_hash=cfg.hash,
            seed=cfg['seed'], n_paths=cfg['n_paths'],
        )
        write_atomic(output['summary'], json_text(doc))
    trace('cli.run', subcommand=args.subcommand, config_hash=cfg.hash, seed=cfg['seed'])
    return 0

def main(argv=None):
    """Run the command line in argv (sys.argv when None); return the exit status."""
    argv = sys.argv if argv is None else argv
    parser = make_parser(os.path.basename(argv[0]) if argv else 'levy-couple')
    try:
        return run(parser.parse_args(argv[1:]))
    except (ConfigInvalid, IoError) as e:
        sys.stderr.write('%s: %s\n' % (parser.prog, e))
        return 1
    except NumericFailure as e:
        sys.stderr.write('%s: %s: %s\n' % (parser.prog, type(e).__name__, e))
        logger.debug('numeric failure', exc_info=True)
        return 2
