#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

import numpy as np
import pytest

from levycouple.core import HypothesisViolation
from levycouple.drift import LinearDrift
from levycouple.estimators import (
    EstimateResult, coupling_time_tail, drift_inequality_check, drift_modulus_B, ks_critical_value,
    marginal_ks, observables, regularity_ratio, tv_bound,
)
from levycouple.measures import phi
from levycouple.operators import tail_bound
from levycouple.simulate import REFINED_BASIC, REFLECTION, REFLECTION_BASIC, CouplingSpec, SdeSpec

@pytest.fixture
def spec(stable, coarse):
    return SdeSpec(stable, LinearDrift(-1.0), coarse, max_step=1e-2, horizon=1.0)

def test_estimate_result():
    result = EstimateResult(0.25, 0.01, 100, 3, 'abc', dict(t=1.0))
    assert result.to_dict() == dict(value=0.25, std_error=0.01, n_paths=100, seed=3, config_hash='abc', t=1.0)
    with pytest.raises(ValueError):
        EstimateResult(0.25, -0.01, 100, 3)

def test_linear_drift_modulus():
    b = LinearDrift(-2.0)
    assert drift_modulus_B(b, 0.5) == pytest.approx(-1.0)
    assert drift_modulus_B(b, 0.5, d=2, n_samples=64) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        drift_modulus_B(b, 0.0)

def test_coupling_time_tail(spec):
    results = coupling_time_tail(CouplingSpec(REFINED_BASIC), spec, [0.0], [0.05], [0.5, 1.0], 40, seed=1)
    assert [r.extra['t'] for r in results] == [0.5, 1.0]
    assert 0.0 <= results[1].value <= results[0].value <= 1.0
    for r in results:
        assert r.std_error == pytest.approx(np.sqrt(r.value * (1.0 - r.value) / 40))
        assert r.n_paths == 40 and r.seed == 1

def test_coupling_time_tail_envelope(spec):
    coupling = CouplingSpec(REFLECTION)
    check = dict(epsilon0_hat=0.2, c0_hat=0.5)
    results = coupling_time_tail(coupling, spec, [0.0], [0.1], [1.0], 10, seed=2, drift_check=check)
    nu = spec.nu
    expected = tail_bound(
        phi(nu, 0.1, coupling.variant, spec.truncation), 0.5, phi(nu, 0.2, coupling.variant, spec.truncation), 1.0,
    )
    assert results[0].extra['envelope'] == pytest.approx(expected)

def test_tail_non_increasing_in_t(spec):
    t_grid = [0.25, 0.5, 1.0]
    results = coupling_time_tail(CouplingSpec(REFINED_BASIC), spec, [0.0], [0.1], t_grid, 200, seed=12)
    for early, late in zip(results, results[1:]):
        assert late.value <= early.value + 3.0 * max(early.std_error, late.std_error)

def test_tail_shrinks_with_initial_distance(spec):
    # P(tau > t) is bounded by a multiple of Phi(|x0 - y0|) for alpha = 1
    coupling = CouplingSpec(REFINED_BASIC)
    tails = [
        coupling_time_tail(coupling, spec, [0.0], [delta], [0.5], 300, seed=13)[0]
        for delta in (0.4, 0.1, 0.01)
    ]
    for wide, narrow in zip(tails, tails[1:]):
        assert narrow.value <= wide.value + 3.0 * max(wide.std_error, narrow.std_error, 1.0 / 300)
    assert tails[-1].value < tails[0].value

def test_coincident_pair_never_waits(spec):
    results = coupling_time_tail(CouplingSpec(REFLECTION), spec, [0.3], [0.3], [0.5], 10)
    assert results[0].value == 0.0 and results[0].std_error == 0.0

def test_tv_bound_dominates_histogram_distance(spec):
    result = tv_bound(CouplingSpec(REFLECTION_BASIC), spec, [0.0], [0.2], 0.5, 60, seed=4)
    assert result.value == pytest.approx(2.0 * result.extra['tail'])
    assert result.extra['lower'] <= result.value + 1e-12

def test_regularity_ratio_below_coupling_ceiling(spec):
    f, bound = observables['tanh']
    report = regularity_ratio(CouplingSpec(REFLECTION), spec, f, bound, [0.0], [0.05, 0.1], [0.5, 1.0], 40, seed=6)
    assert len(report['table']) == 4
    for row in report['table']:
        assert row['ratio'] <= row['ceiling'] + 1e-12
    f, bound = observables['constant']
    report = regularity_ratio(CouplingSpec(REFLECTION), spec, f, bound, [0.0], [0.05], [1.0], 10)
    assert report['c_hat'] == 0.0

def test_drift_inequality_check(stable, coarse):
    report = drift_inequality_check(CouplingSpec(REFLECTION), stable, LinearDrift(-1.0), [0.2, 0.1], coarse,
                                    B=lambda r: -r)
    assert report['ok']
    assert report['epsilon0_hat'] >= 0.1
    assert report['c0_hat'] > 0.0
    assert [row['delta'] for row in report['table']] == [0.1, 0.2]
    assert report['failure_region'] == []

def test_drift_inequality_uses_configured_eta(stable, coarse):
    B = lambda r: -r
    half = drift_inequality_check(CouplingSpec(REFLECTION, eta=0.5), stable, LinearDrift(-1.0), [0.1], coarse, B=B)
    wide = drift_inequality_check(CouplingSpec(REFLECTION, eta=2.0), stable, LinearDrift(-1.0), [0.1], coarse, B=B)
    assert half['table'][0]['value'] != wide['table'][0]['value']

def test_drift_inequality_needs_limsup(stable, coarse):
    with pytest.raises(HypothesisViolation):
        drift_inequality_check(CouplingSpec(REFLECTION), stable, LinearDrift(1.0), [0.1], coarse, B=lambda r: 1.0)

def test_ks_critical_value():
    assert ks_critical_value(100, 100, 0.05) == pytest.approx(1.3581 * np.sqrt(0.02), rel=1e-3)

@pytest.mark.parametrize('scheme', [REFLECTION, REFINED_BASIC, REFLECTION_BASIC])
def test_coupled_marginals_match_single_paths(spec, scheme):
    report = marginal_ks(CouplingSpec(scheme), spec, [0.0], [0.3], 0.5, 400, seed=8, alpha=1e-6)
    assert [(s['marginal'], s['coordinate']) for s in report['statistics']] == [('x', 0), ('y', 0)]
    assert report['ok'], report
