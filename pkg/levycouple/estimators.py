#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Monte Carlo estimators built on coupled paths.

All estimators take a master seed and fan paths out through
levycouple.pool, so results depend only on (seed, config) and never on
the worker count.

"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from .core import HypothesisViolation, logger, trace
from .geometry import as_vector
from .measures import limsup_condition, phi
from .measures.base import TruncationConfig
from .operators import PhiProfile, eval_generator, tail_bound
from .simulate import simulate_pairs, simulate_singles

@dataclass
class EstimateResult (object):
    """One Monte Carlo estimate with its provenance."""
    value: float
    std_error: float
    n_paths: int
    seed: int
    config_hash: str = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.std_error >= 0.0:
            raise ValueError('std_error must be nonnegative, got %r' % (self.std_error,))

    def to_dict(self):
        doc = dict(value=self.value, std_error=self.std_error, n_paths=self.n_paths, seed=self.seed,
                   config_hash=self.config_hash)
        doc.update(self.extra)
        return doc

def _proportion(hits, n):
    p = float(np.mean(hits)) if n else 0.0
    return p, math.sqrt(p * (1.0 - p) / n) if n else 0.0

## drift modulus

def drift_modulus_B(b, r, d=1, n_samples=512, seed=0, extent=10.0):
    """Estimate B(r) = sup over |x-y| = r of <b(x) - b(y), x-y> / r.

       d = 1 scans a grid of x in [-extent, extent] with y = x +- r.  For
       d > 1, random pairs on the sphere of radius r are refined locally
       around the best few.  The result never exceeds the true sup.
    """
    if not r > 0.0:
        raise ValueError('B(r) needs r > 0, got %r' % (r,))

    def score(x, e):
        y = x - r * e
        return float((as_vector(b(x)) - as_vector(b(y))) @ (x - y)) / r

    if d == 1:
        best = -math.inf
        for x in np.linspace(-extent, extent, n_samples):
            for sign in (1.0, -1.0):
                best = max(best, score(np.array([x]), np.array([sign])))
        return best

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    xs = rng.uniform(-extent, extent, (n_samples, d))
    es = rng.standard_normal((n_samples, d))
    es /= np.linalg.norm(es, axis=1, keepdims=True)
    scores = np.array([score(x, e) for x, e in zip(xs, es)])
    best = float(scores.max())
    for i in np.argsort(scores)[-4:]:
        for _ in range(16):
            x = xs[i] + 0.1 * rng.standard_normal(d)
            e = es[i] + 0.1 * rng.standard_normal(d)
            e /= np.linalg.norm(e)
            best = max(best, score(x, e))
    logger.debug('B(%g) from %d samples in d=%d: %g' % (r, n_samples, d, best))
    return best

def modulus(b, d=1, **kwargs):
    """Return r -> B(r) for a drift."""
    return lambda r: drift_modulus_B(b, r, d, **kwargs)

## coupling time

def _taus(paths):
    return np.array([p.tau for p in paths])

def coupling_time_tail(coupling, spec, x0, y0, t_grid, n_paths, seed=0, workers=1, config_hash=None, drift_check=None):
    """Return one EstimateResult of P(tau > t) per t in t_grid.

       drift_check: optional drift_inequality_check result; when it found
       (epsilon0, c0) each estimate also carries the envelope
       Phi(|x0-y0|) (1/(t c0) + 1/Phi(epsilon0)).
    """
    t_grid = [float(t) for t in t_grid]
    spec = spec.with_horizon(max(t_grid))
    paths = simulate_pairs(spec, coupling, x0, y0, n_paths, seed=seed, observe=t_grid, workers=workers)
    taus = _taus(paths)
    delta = float(np.linalg.norm(as_vector(x0) - as_vector(y0)))
    results = []
    for t in t_grid:
        p, se = _proportion(taus > t, n_paths)
        extra = dict(t=t)
        if drift_check and drift_check.get('epsilon0_hat'):
            nu = spec.nu
            extra['envelope'] = tail_bound(
                phi(nu, delta, coupling.variant, spec.truncation), drift_check['c0_hat'],
                phi(nu, drift_check['epsilon0_hat'], coupling.variant, spec.truncation), t,
            )
        results.append(EstimateResult(p, se, n_paths, seed, config_hash, extra))
    trace('estimate.tail', scheme=coupling.scheme, n_paths=n_paths, seed=seed,
          values=[r.value for r in results])
    return results

def _histogram_l1(a, b):
    """Return the L1 distance between the histograms of two samples on common bins."""
    a = np.atleast_2d(a.T).T
    b = np.atleast_2d(b.T).T
    both = np.concatenate([a, b])
    if np.ptp(both, axis=0).max() == 0.0:
        return 0.0
    d = both.shape[1]
    if d == 1:
        edges = np.histogram_bin_edges(both[:, 0], bins='auto')
        ha, _ = np.histogram(a[:, 0], bins=edges)
        hb, _ = np.histogram(b[:, 0], bins=edges)
    else:
        bins = max(2, int(len(a) ** (1.0 / (d + 2))))
        ranges = [(lo, hi if hi > lo else lo + 1.0) for lo, hi in zip(both.min(axis=0), both.max(axis=0))]
        ha, _ = np.histogramdd(a, bins=bins, range=ranges)
        hb, _ = np.histogramdd(b, bins=bins, range=ranges)
    return float(np.abs(ha / len(a) - hb / len(b)).sum())

def tv_bound(coupling, spec, x0, y0, t, n_paths, seed=0, workers=1, config_hash=None):
    """Return 2 P(tau > t) as an upper estimate of the total variation distance.

       extra['lower'] holds the histogram L1 distance between the X_t and
       Y_t samples of the same paths, a lower estimate.
    """
    t = float(t)
    paths = simulate_pairs(spec.with_horizon(t), coupling, x0, y0, n_paths, seed=seed, observe=[t], workers=workers)
    p, se = _proportion(_taus(paths) > t, n_paths)
    xs = np.array([path.x_at(t) for path in paths])
    ys = np.array([path.y_at(t) for path in paths])
    lower = _histogram_l1(xs, ys)
    return EstimateResult(2.0 * p, 2.0 * se, n_paths, seed, config_hash, dict(t=t, lower=lower, tail=p))

## regularity

def regularity_ratio(coupling, spec, f, f_bound, x, delta_grid, t_grid, n_paths, seed=0, workers=1, config_hash=None):
    """Estimate |P_t f(x) - P_t f(y)| / Phi(delta) with y = x + delta e_1.

       f maps an (n, d) array of states to n values with |f| <= f_bound.
       Both expectations are read from the same coupled paths.  Returns
       dict(table, c_hat) where c_hat is the largest ratio / (1 ^ 1/t).
    """
    x = as_vector(x)
    t_grid = [float(t) for t in t_grid]
    spec = spec.with_horizon(max(t_grid))
    nu = spec.nu
    table = []
    for delta in delta_grid:
        e1 = np.zeros_like(x)
        e1[0] = 1.0
        y = x + delta * e1
        scale = phi(nu, delta, coupling.variant, spec.truncation)
        paths = simulate_pairs(spec, coupling, x, y, n_paths, seed=seed, observe=t_grid, workers=workers)
        taus = _taus(paths)
        for t in t_grid:
            diff = (np.asarray(f(np.array([p.x_at(t) for p in paths])), dtype=float)
                    - np.asarray(f(np.array([p.y_at(t) for p in paths])), dtype=float))
            se = float(diff.std(ddof=1)) / math.sqrt(n_paths) if n_paths > 1 else 0.0
            tail, tail_se = _proportion(taus > t, n_paths)
            table.append(dict(
                delta=float(delta), t=t,
                ratio=abs(float(diff.mean())) / scale, std_error=se / scale,
                ceiling=2.0 * f_bound * tail / scale, ceiling_std_error=2.0 * f_bound * tail_se / scale,
            ))
    c_hat = max(row['ratio'] / min(1.0, 1.0 / row['t']) for row in table) if table else 0.0
    trace('estimate.regularity', scheme=coupling.scheme, n_paths=n_paths, seed=seed, c_hat=c_hat)
    return dict(table=table, c_hat=c_hat, n_paths=n_paths, seed=seed, config_hash=config_hash)

## drift inequality

def drift_inequality_check(coupling, nu, b, delta_grid, cfg=None, B=None):
    """Evaluate the coupled generator on Phi(|x-y|) over delta_grid.

       Raises HypothesisViolation unless limsup B(r) Phi'(r) stays below
       its bound.  Returns dict(epsilon0_hat, c0_hat, table, limsup, ok)
       where epsilon0_hat is the largest grid delta with the generator
       negative at every grid point up to it, and c0_hat the smallest
       -value there.
    """
    cfg = cfg or TruncationConfig()
    B = B or modulus(b, nu.dimension)
    variant = coupling.variant
    report = limsup_condition(nu, B, variant, cfg)
    if not report['ok']:
        raise HypothesisViolation('limsup of B(r) Phi\'(r) is %g, not below %g - %g' % (
            report['statistic'], report['bound'], report['margin']))

    f = PhiProfile(nu, variant, cfg)
    js = coupling.jump_system(nu)
    d = nu.dimension
    table = []
    for delta in sorted(float(v) for v in delta_grid):
        x = np.zeros(d)
        x[0] = delta
        value = eval_generator(js, f, b, x, np.zeros(d), cfg)
        table.append(dict(delta=delta, value=value.value, std_error=value.std_error))

    epsilon0 = None
    c0 = None
    for row in table:
        if not row['value'] < 0.0:
            break
        epsilon0 = row['delta']
        c0 = -row['value'] if c0 is None else min(c0, -row['value'])
    failures = [row['delta'] for row in table if not row['value'] < 0.0]
    trace('estimate.driftcheck', scheme=coupling.scheme, epsilon0_hat=epsilon0, c0_hat=c0)
    return dict(
        epsilon0_hat=epsilon0, c0_hat=c0, table=table, failure_region=failures,
        limsup=dict((k, v) for k, v in report.items() if k != 'values'),
        ok=bool(epsilon0 is not None and c0 > 0.0),
    )

## marginal law

def ks_critical_value(n, m, alpha=0.01):
    """Asymptotic two-sample Kolmogorov-Smirnov critical value."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / float(n * m))

def marginal_ks(coupling, spec, x0, y0, t, n_paths, seed=0, workers=1, alpha=0.01):
    """Compare coupled X_t and Y_t samples with independent single-SDE samples.

       Reference paths use path indices disjoint from the coupled ones.
       Returns dict(statistics, critical, ok) with one KS statistic per
       marginal and coordinate.
    """
    t = float(t)
    spec = spec.with_horizon(t)
    pairs = simulate_pairs(spec, coupling, x0, y0, n_paths, seed=seed, observe=[t], workers=workers)
    ref_x = simulate_singles(spec, x0, n_paths, seed=seed, observe=[t], workers=workers, offset=n_paths)
    ref_y = simulate_singles(spec, y0, n_paths, seed=seed, observe=[t], workers=workers, offset=2 * n_paths)
    coupled_x = np.array([p.x_at(t) for p in pairs])
    coupled_y = np.array([p.y_at(t) for p in pairs])
    single_x = np.array([p.x_at(t) for p in ref_x])
    single_y = np.array([p.x_at(t) for p in ref_y])
    stats = []
    for name, a, b in (('x', coupled_x, single_x), ('y', coupled_y, single_y)):
        for i in range(spec.dimension):
            result = ks_2samp(a[:, i], b[:, i])
            stats.append(dict(marginal=name, coordinate=i, statistic=float(result.statistic), pvalue=float(result.pvalue)))
    critical = ks_critical_value(n_paths, n_paths, alpha)
    return dict(statistics=stats, critical=critical, ok=all(s['statistic'] < critical for s in stats))

## bounded observables for regularity runs, as (f, sup |f|)

def _tanh(states):
    return np.tanh(states[:, 0])

def _cosine(states):
    return np.cos(states[:, 0])

def _constant(states):
    return np.ones(len(states))

observables = {
    'tanh': (_tanh, 1.0),
    'cos': (_cosine, 1.0),
    'constant': (_constant, 1.0),
}
