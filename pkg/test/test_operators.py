#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from levycouple.core import (
    ConfigInvalid, DensityDominationViolation, HypothesisViolation, NonAtomicBase, NonSymmetricMeasure, SingularSigma,
)
from levycouple.drift import IdentitySigma, LinearDrift, OnePlusSquareSigma
from levycouple.measures import overlap_mass
from levycouple.measures.atoms import DiscreteAtoms
from levycouple.measures.base import TruncationConfig
from levycouple.operators import (
    FINITE_RANGE, INFINITE_RANGE, L1_REFLECTION, L2_BASIC,
    Capped, CouplingKernel, Exponential, Identity, SubDensity,
    build_kernel, build_multiplicative_system, check_lemma_bound, compare_operators, compare_pair,
    eval_generator, kernel_generator, make_test_function, marginal_generator,
    multiplicative_reflection_system, multiplicative_refined_basic_system,
    reflection_basic_system, reflection_system, refined_basic_system, synchronous_system,
    system_from_config, tail_bound, verify_marginality, verify_symmetry_condition,
)

@pytest.fixture
def unit_atoms():
    return DiscreteAtoms.from_pairs([[1.0, 1.0], [-1.0, 1.0]])

## kernels

def test_synchronous_kernel(lattice_atoms):
    kernel = build_kernel(synchronous_system(lattice_atoms), [0.5], [0.0])
    u, v, m = kernel.arrays()
    np.testing.assert_array_equal(u, v)
    assert kernel.mass_by_label() == {'sync': pytest.approx(lattice_atoms.total_mass())}
    report = verify_marginality(kernel, lattice_atoms)
    assert report['ok'] and report['max_defect'] == 0.0

def test_refined_basic_kernel_rows(unit_atoms):
    kernel = build_kernel(refined_basic_system(unit_atoms, kappa=2.0), [2.0], [0.0])
    labels = kernel.mass_by_label()
    assert labels['contract'] == pytest.approx(0.5)
    assert labels['expand'] == pytest.approx(0.5)
    assert labels['sync'] == pytest.approx(1.0)
    contract = [a for a in kernel.atoms if a.label == 'contract']
    assert len(contract) == 1
    assert contract[0].u[0] == -1.0 and contract[0].v[0] == 1.0
    assert verify_marginality(kernel, unit_atoms)['ok']

def test_reflection_kernel_below_threshold_is_synchronous(unit_atoms):
    kernel = build_kernel(reflection_system(unit_atoms, eta=0.5), [1.0], [0.0])
    assert kernel.mass_by_label() == {'sync': pytest.approx(2.0)}

def test_corrupted_kernel_fails_marginality(unit_atoms):
    kernel = build_kernel(refined_basic_system(unit_atoms, kappa=2.0), [2.0], [0.0])
    atoms = list(kernel.atoms)
    atoms[0] = atoms[0]._replace(v=atoms[0].v + 0.1)
    report = verify_marginality(CouplingKernel(kernel.x, kernel.y, atoms), unit_atoms)
    assert not report['ok']
    assert report['first_defect'] == 0.0
    assert report['second_defect'] > 0.0

def test_kernel_needs_atoms(stable):
    with pytest.raises(NonAtomicBase):
        build_kernel(reflection_system(stable), [1.0], [0.0])

def _systems(nu):
    return [
        reflection_system(nu, 0.5),
        refined_basic_system(nu, 0.5),
        refined_basic_system(nu, 1.0),
        multiplicative_refined_basic_system(nu, OnePlusSquareSigma(), 1.0),
    ]

def test_marginality_on_random_symmetric_atoms(lattice_factory):
    rng = np.random.default_rng(2024)
    for trial in range(20):
        nu = lattice_factory(rng)
        x = [0.25 * rng.integers(-6, 7)]
        y = [0.25 * rng.integers(-6, 7) + (0.25 if trial % 2 else 0.0)]
        for js in _systems(nu):
            kernel = build_kernel(js, x, y)
            report = verify_marginality(kernel, nu)
            assert report['ok'], (trial, js.name, report)
            assert report['max_defect'] <= 1e-12

def test_symmetry_condition(lattice_atoms):
    for js in (reflection_system(lattice_atoms, 0.5), refined_basic_system(lattice_atoms, 1.0)):
        report = verify_symmetry_condition(js, [0.75], [0.0])
        assert report['ok'], js.name

def test_symmetry_condition_fails_for_asymmetric_atoms():
    nu = DiscreteAtoms.from_pairs([[1.0, 1.0], [-1.0, 2.0]])
    report = verify_symmetry_condition(reflection_system(nu, 0.5), [3.0], [0.0])
    assert not report['ok']
    assert report['max_defect'] == pytest.approx(1.0)

def test_reflection_basic_on_symmetric_atoms():
    nu = DiscreteAtoms.from_pairs([[0.25, 2.0], [-0.25, 2.0], [0.75, 1.0], [-0.75, 1.0], [1.5, 0.5], [-1.5, 0.5]])
    js = reflection_basic_system(nu, SubDensity(nu, 'same'))
    kernel = build_kernel(js, [0.5], [0.0])
    assert kernel.mass_by_label()['coalesce'] > 0.0
    assert verify_marginality(kernel, nu)['ok']
    assert verify_symmetry_condition(js, [0.5], [0.0])['ok']

def test_sub_density_checks(stable):
    with pytest.raises(DensityDominationViolation):
        reflection_basic_system(stable, SubDensity(stable, 'scaled', factor=2.0))
    with pytest.raises(NonSymmetricMeasure):
        SubDensity(DiscreteAtoms.from_pairs([[1.0, 1.0], [-1.0, 2.0]]))
    with pytest.raises(ConfigInvalid):
        SubDensity(stable, 'ball')
    q0 = SubDensity(stable, 'half_distance')
    np.testing.assert_allclose(q0(np.array([0.1, 0.3]), 0.4), [100.0, 0.0], rtol=1e-9)
    assert q0.ratio_at_origin(0.0) == 0.0

## multiplicative noise

def test_identity_sigma_reduces_to_input(lattice_atoms):
    plain = build_kernel(refined_basic_system(lattice_atoms, 1.0), [0.5], [0.0])
    wrapped = build_kernel(build_multiplicative_system(refined_basic_system(lattice_atoms, 1.0), IdentitySigma()), [0.5], [0.0])
    for a, b in zip(plain.arrays(), wrapped.arrays()):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)

def test_multiplicative_reflection_inverse(stable2):
    def sigma(x):
        return np.array([[1.0 + x[0] ** 2, 0.3], [0.0, 2.0]])
    js = multiplicative_reflection_system(stable2, sigma, eta=0.5)
    z = np.random.default_rng(5).standard_normal((50, 2))
    for row in js.rows([0.5, 0.2], [-0.1, 0.4]):
        np.testing.assert_allclose(row.inverse(row.forward(z)), z, rtol=0, atol=1e-12)

def test_singular_sigma(lattice_atoms):
    js = multiplicative_refined_basic_system(lattice_atoms, lambda x: np.zeros((1, 1)), 1.0)
    with pytest.raises(SingularSigma):
        build_kernel(js, [0.5], [0.0])

def test_system_from_config(lattice_atoms):
    js = system_from_config(lattice_atoms, {"kind": "refined_basic", "kappa": 0.5}, OnePlusSquareSigma())
    assert js.name == 'multiplicative_refined_basic'
    js = system_from_config(lattice_atoms, {"kind": "reflection_basic", "q0": {"kind": "ball", "radius": 1.0}})
    assert js.name == 'reflection_basic'
    with pytest.raises(ConfigInvalid):
        system_from_config(lattice_atoms, {"kind": "mirror"})

## generators

def _sin(p):
    return float(np.sin(p[0]))

def _cos(p):
    return np.array([np.cos(p[0])])

@pytest.mark.parametrize('make', [
    lambda nu: reflection_system(nu, 0.5),
    lambda nu: refined_basic_system(nu, 1.0),
])
def test_coupled_generator_has_marginal_generators(lattice_atoms, make):
    drift = LinearDrift(-1.0)
    x, y = np.array([0.75]), np.array([-0.25])
    kernel = build_kernel(make(lattice_atoms), x, y)
    first = kernel_generator(kernel, lambda a, b: _sin(a), lambda a, b: (_cos(a), np.zeros_like(b)), drift)
    second = kernel_generator(kernel, lambda a, b: _sin(b), lambda a, b: (np.zeros_like(a), _cos(b)), drift)
    assert first == pytest.approx(marginal_generator(lattice_atoms, _sin, _cos, x, drift), abs=1e-10)
    assert second == pytest.approx(marginal_generator(lattice_atoms, _sin, _cos, y, drift), abs=1e-10)

def test_generator_vanishes_on_the_diagonal(stable):
    value = eval_generator(reflection_system(stable), Exponential(), LinearDrift(-1.0), [0.3], [0.3])
    assert value.value == 0.0 and value.std_error == 0.0

def test_synchronous_generator_is_zero(lattice_atoms):
    value = eval_generator(synchronous_system(lattice_atoms), Exponential(), None, [0.5], [0.0])
    assert value.value == pytest.approx(0.0, abs=1e-12)

def test_refined_basic_generator_on_atoms(lattice_atoms):
    f = Exponential(1.0)
    value = eval_generator(refined_basic_system(lattice_atoms, 1.0), f, None, [0.5], [0.0])
    expected = 0.5 * overlap_mass(lattice_atoms, [0.5]) * (f(1.0) - 2.0 * f(0.5))
    assert value.value == pytest.approx(expected, abs=1e-12)

def test_refined_basic_generator_on_stable_line(stable):
    f = Exponential(1.0)
    drift = LinearDrift(-1.0)
    value = eval_generator(refined_basic_system(stable, 1.0), f, drift, [0.3], [0.0])
    # drift term f'(r) <b(x) - b(y), e> = -r f'(r)
    expected = -0.3 * f.d1(0.3) + 0.5 * overlap_mass(stable, [0.3]) * (f(0.6) - 2.0 * f(0.3))
    assert value.value == pytest.approx(expected, rel=1e-6)

def test_monte_carlo_generator_is_reproducible(stable2):
    cfg = TruncationConfig(epsilon=1e-3, mc_points=2000, seed=3)
    js = reflection_system(stable2, 0.5)
    a = eval_generator(js, Exponential(), None, [0.5, 0.0], [0.0, 0.0], cfg)
    b = eval_generator(js, Exponential(), None, [0.5, 0.0], [0.0, 0.0], cfg)
    assert a == b
    assert a.std_error > 0.0
    assert a.value < 0.0

def test_second_difference_bound():
    f = Exponential(2.0)
    rng = np.random.default_rng(11)
    r = rng.uniform(0.01, 1.0, 1000)
    delta = r * rng.random(1000)
    lhs = f(r + delta) + f(r - delta) - 2.0 * f(r)
    assert np.all(lhs <= f.d2(r + delta) * delta ** 2 + 1e-15)

def test_test_function_hypotheses():
    Identity().check()
    Exponential(3.0).check_increasing_second(2.0)
    with pytest.raises(HypothesisViolation):
        Capped(0.5).check_increasing_second(2.0)
    with pytest.raises(ConfigInvalid):
        Exponential(-1.0)
    with pytest.raises(ConfigInvalid):
        make_test_function({"kind": "sigmoid"})
    assert make_test_function({"kind": "capped", "c": 0.5}).to_config() == {"kind": "capped", "c": 0.5}

## comparisons and lemma bounds

def random_pair(rng, lo=0.05, hi=1.0):
    x = rng.uniform(-1.0, 1.0)
    r = rng.uniform(lo, hi)
    return [x], [x - rng.choice([-1.0, 1.0]) * r]

def test_infinite_range_comparison(stable):
    rng = np.random.default_rng(2024)
    pairs = [random_pair(rng) for _ in range(10)]
    rows = compare_operators(INFINITE_RANGE, stable, Exponential(1.0), pairs)
    assert len(rows) == 10
    for row in rows:
        assert row['ok'], row
        assert row['reflection_basic'] <= row['reflection'] + 1e-6
        assert row['std_error'] == 0.0

def test_finite_range_comparison(truncated):
    row = compare_pair(FINITE_RANGE, truncated, Exponential(1.0), [0.5], [0.0])
    assert row['basic'] == 0.0
    assert abs(row['reflection_basic'] - row['reflection']) <= 1e-8
    assert row['reflection'] < 0.0
    assert row['ok']

def test_finite_range_needs_separated_pairs(truncated):
    with pytest.raises(HypothesisViolation):
        compare_pair(FINITE_RANGE, truncated, Exponential(1.0), [0.3], [0.0])

def test_comparison_pool_keeps_order(truncated):
    pairs = [([0.5], [0.0]), ([0.0], [0.7]), ([1.0], [0.1])]
    serial = compare_operators(FINITE_RANGE, truncated, Exponential(1.0), pairs)
    with ThreadPoolExecutor(max_workers=2) as pool:
        pooled = compare_operators(FINITE_RANGE, truncated, Exponential(1.0), pairs, pool=pool)
    assert serial == pooled
    assert [row['distance'] for row in serial] == pytest.approx([0.5, 0.7, 0.9])

def lemma_config(seed, kappa=1.0):
    """Return (drift, f, x, y) drawn at random within the lemma hypotheses."""
    rng = np.random.default_rng(seed)
    x, y = random_pair(rng, lo=0.1, hi=kappa)
    return LinearDrift(-rng.uniform(0.0, 2.0)), Exponential(rng.uniform(1.0, 3.0)), x, y

@pytest.mark.parametrize('seed', range(25))
def test_reflection_lemma_bound(stable, seed):
    drift, f, x, y = lemma_config(seed)
    report = check_lemma_bound(L1_REFLECTION, stable, drift, f, x, y)
    assert report['ok'], report
    assert report['lhs'] <= report['rhs'] + 1e-6

def test_reflection_lemma_bound_linear(stable):
    report = check_lemma_bound(L1_REFLECTION, stable, None, Identity(), [0.4], [0.0])
    assert report['rhs'] == 0.0
    assert report['ok'], report

@pytest.mark.parametrize('seed', range(25))
def test_basic_lemma_bound(stable, seed):
    kappa = 0.5 + 0.5 * (seed % 5) / 4.0
    drift, f, x, y = lemma_config(100 + seed, kappa)
    report = check_lemma_bound(L2_BASIC, stable, drift, f, x, y, kappa=kappa)
    assert report['ok'], report
    assert report['lhs'] < report['rhs']

def test_lemma_hypotheses(stable):
    with pytest.raises(HypothesisViolation):
        check_lemma_bound(L1_REFLECTION, stable, None, Exponential(), [0.2], [0.2])
    with pytest.raises(HypothesisViolation):
        check_lemma_bound(L1_REFLECTION, stable, None, Exponential(), [1.5], [0.0])
    with pytest.raises(HypothesisViolation):
        check_lemma_bound(L2_BASIC, stable, None, Exponential(), [0.6], [0.0], kappa=0.5)

def test_tail_bound():
    assert tail_bound(0.5, 2.0, 1.0, 4.0) == pytest.approx(0.5 * (1.0 / 8.0 + 1.0))
    with pytest.raises(ValueError):
        tail_bound(0.5, 0.0, 1.0, 4.0)
