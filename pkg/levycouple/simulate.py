#
# Copyright 2015-2024 University of Southern California
# Distributed under the Apache License, Version 2.0. See LICENSE for more info.
#

"""Pathwise simulation of dX = b(X) dt + dZ and of coupled pairs.

Jumps with |z| <= epsilon are dropped.  The remaining jumps arrive as a
Poisson stream with rate nu(|z| > epsilon); between arrivals the state
follows explicit Euler substeps of the drift plus the compensator
-integral of z over {epsilon < |z| < 1}.

A coupled pair shares one jump stream.  Each arrival z moves X by z and
Y by a displacement chosen from the rows of the coupling, evaluated at
the pre-jump states.  Coupling marks come from a second stream, so the
X path of a coupled run is exactly the simulate_single path for the
same (seed, index).

"""

import math

import numpy as np

from .core import ConfigInvalid, DensityDominationViolation, ExplosionDetected, NonSymmetricMeasure, coalesce, config, logger
from .drift import ZeroDrift
from .geometry import ReflectionMap, as_vector, truncate_kappa
from .measures.base import TruncationConfig
from .measures.profile import BASIC_B, REFLECTION_A
from .operators.systems import SubDensity, reflection_basic_system, reflection_system, refined_basic_system
from .pool import path_streams, run_paths

REFLECTION = 'reflection'
REFINED_BASIC = 'basic'
REFLECTION_BASIC = 'refbasic'

schemes = (REFLECTION, REFINED_BASIC, REFLECTION_BASIC)

# path CSV event labels
event_types = ('drift', 'sync', 'reflect', 'contract', 'expand', 'coalesce')

class SdeSpec (object):
    """The SDE dX = b(X) dt + dZ with its discretization.

       nu: Levy measure of Z
       drift: b, a levycouple.drift coefficient
       truncation: TruncationConfig (epsilon, quadrature resolution)
       max_step: largest Euler substep h
       horizon: final time T
    """
    def __init__(self, nu, drift=None, truncation=None, max_step=1e-3, horizon=1.0, explosion_bound=None):
        if not max_step > 0.0:
            raise ConfigInvalid('sde.max_step must be positive, got %r' % (max_step,))
        if not horizon > 0.0:
            raise ConfigInvalid('sde.horizon must be positive, got %r' % (horizon,))
        if max_step > horizon:
            raise ConfigInvalid('sde.max_step %g exceeds the horizon %g' % (max_step, horizon))
        self.nu = nu
        self.drift = drift or ZeroDrift()
        self.truncation = truncation or TruncationConfig()
        self.max_step = float(max_step)
        self.horizon = float(horizon)
        self.explosion_bound = float(coalesce(explosion_bound, config.get('explosion_bound', 1e8)))
        self.dimension = nu.dimension

        for point in (np.zeros(self.dimension), np.ones(self.dimension), -np.ones(self.dimension)):
            value = np.asarray(self.drift(point), dtype=float)
            if value.shape != (self.dimension,) or not np.all(np.isfinite(value)):
                raise ConfigInvalid('drift %s is not a finite R^%d field' % (self.drift.kind, self.dimension))
        if self.drift.lipschitz * self.max_step > 0.5:
            logger.warning('Euler substep %g is coarse for a drift with Lipschitz constant %g' % (
                self.max_step, self.drift.lipschitz))

        eps = self.truncation.epsilon
        self.rate = float(nu.tail_open(eps))
        self.compensator = np.asarray(nu.compensator(eps), dtype=float)
        self.flow_free = bool(self.drift.is_zero and not np.any(self.compensator))

    def with_horizon(self, horizon):
        return SdeSpec(
            self.nu, self.drift, self.truncation, max_step=min(self.max_step, horizon),
            horizon=horizon, explosion_bound=self.explosion_bound,
        )

    def flow(self, x, dt):
        """Advance x by dt of drift plus compensator with Euler substeps of at most h."""
        if self.flow_free or dt <= 0.0:
            return x
        n = max(1, int(math.ceil(dt / self.max_step - 1e-9)))
        h = dt / n
        for _ in range(n):
            x = x + h * (self.drift(x) + self.compensator)
        return x

class CouplingSpec (object):
    """Coupling scheme with its parameters.

       scheme: "reflection" (eta), "basic" (kappa) or "refbasic" (q0)
       meet_threshold: distance at which the pair is declared coalesced;
         None means 1e-4 times the initial distance, or 0 for "basic"
    """
    def __init__(self, scheme, eta=0.5, kappa=1.0, q0=None, meet_threshold=None):
        if scheme not in schemes:
            raise ConfigInvalid('scheme.kind must be one of %s, got %r' % (schemes, scheme))
        if not eta > 0.0:
            raise ConfigInvalid('scheme.eta must be positive, got %r' % (eta,))
        if not kappa > 0.0:
            raise ConfigInvalid('scheme.kappa must be positive, got %r' % (kappa,))
        if meet_threshold is not None and not meet_threshold >= 0.0:
            raise ConfigInvalid('scheme.meet_threshold must be nonnegative, got %r' % (meet_threshold,))
        self.scheme = scheme
        self.eta = float(eta)
        self.kappa = float(kappa)
        self.q0 = dict(q0 or {"kind": "same"})
        self.meet_threshold = meet_threshold

    @classmethod
    def from_config(cls, block):
        block = dict(block)
        return cls(block.pop('kind', None), **block)

    def to_config(self):
        doc = {"kind": self.scheme, "meet_threshold": self.meet_threshold}
        if self.scheme == REFLECTION:
            doc['eta'] = self.eta
        elif self.scheme == REFINED_BASIC:
            doc['kappa'] = self.kappa
        else:
            doc['q0'] = self.q0
        return doc

    def meet(self, initial_distance):
        if self.meet_threshold is not None:
            return float(self.meet_threshold)
        if self.scheme == REFINED_BASIC:
            return 0.0
        return 1e-4 * initial_distance

    @property
    def variant(self):
        """Distance profile variant matching the scheme."""
        return BASIC_B if self.scheme == REFINED_BASIC else REFLECTION_A

    def jump_system(self, nu):
        if self.scheme == REFLECTION:
            return reflection_system(nu, self.eta)
        if self.scheme == REFINED_BASIC:
            return refined_basic_system(nu, self.kappa)
        return reflection_basic_system(nu, SubDensity(nu, **self.q0))

    def rule(self, nu, epsilon):
        if self.scheme == REFLECTION:
            return ReflectionRule(nu, self.eta)
        if self.scheme == REFINED_BASIC:
            return RefinedBasicRule(nu, self.kappa, epsilon)
        return ReflectionBasicRule(nu, SubDensity(nu, **self.q0), epsilon)

class Path (object):
    """One simulated path.

       obs_times, obs_x: states at the observation times (horizon included)
       times, x, events: every recorded state when simulated with record=True
    """
    def __init__(self, seed, index, obs_times, obs_x, times=None, x=None, events=None):
        self.seed = seed
        self.index = index
        self.obs_times = np.asarray(obs_times, dtype=float)
        self.obs_x = np.asarray(obs_x, dtype=float)
        self.times = times
        self.x = x
        self.events = events

    def x_at(self, t):
        return self.obs_x[self._obs_index(t)]

    def _obs_index(self, t):
        k = np.flatnonzero(np.isclose(self.obs_times, t, rtol=0.0, atol=1e-12))
        if not len(k):
            raise ValueError('time %g was not observed' % (t,))
        return int(k[0])

    @property
    def final_x(self):
        return self.obs_x[-1]

class PathPair (Path):
    """One coupled path; tau is the coupling time or math.inf."""
    def __init__(self, seed, index, obs_times, obs_x, obs_y, tau, scheme,
                 times=None, x=None, y=None, events=None):
        Path.__init__(self, seed, index, obs_times, obs_x, times=times, x=x, events=events)
        self.obs_y = np.asarray(obs_y, dtype=float)
        self.tau = tau
        self.scheme = scheme
        self.y = y

    @property
    def coalesced(self):
        return self.tau < math.inf

    def y_at(self, t):
        return self.obs_y[self._obs_index(t)]

    @property
    def final_y(self):
        return self.obs_y[-1]

    def rows(self):
        """Yield (t, x, y, event) for every recorded state."""
        for t, x, y, e in zip(self.times, self.x, self.y, self.events):
            yield t, x, y, e

## coupling rules: (x, y, z, mark_rng) -> (event, y displacement)

class ReflectionRule (object):
    def __init__(self, nu, eta):
        if not nu.is_symmetric or (nu.atomic and nu.dimension > 1):
            raise NonSymmetricMeasure('the reflection coupling needs a rotationally symmetric measure')
        self.eta = eta

    def __call__(self, x, y, z, marks):
        if np.linalg.norm(z) < self.eta * np.linalg.norm(x - y):
            return 'reflect', ReflectionMap(x, y)(z)
        return 'sync', z

class RefinedBasicRule (object):
    def __init__(self, nu, kappa, epsilon):
        self.nu = nu
        self.kappa = kappa
        self.epsilon = epsilon

    def __call__(self, x, y, z, marks):
        u = marks.random()
        a = truncate_kappa(x - y, self.kappa)
        point = z[None, :]
        contract = 0.5 * float(self.nu.rho(-a, point, self.epsilon)[0])
        if u <= contract:
            return 'contract', z + a
        expand = 0.5 * float(self.nu.rho(a, point, self.epsilon)[0])
        if u <= contract + expand:
            return 'expand', z - a
        return 'sync', z

class ReflectionBasicRule (object):
    def __init__(self, nu, q0, epsilon):
        self.nu = nu
        self.q0 = q0
        self.epsilon = epsilon

    def __call__(self, x, y, z, marks):
        member, u = marks.random(2)
        diff = x - y
        r = float(np.linalg.norm(diff))
        s = float(np.linalg.norm(z))
        q = float(self.q0.base_density(s))
        q0 = float(self.q0(s, r))
        if q0 > q * (1.0 + 1e-12):
            raise DensityDominationViolation('q0 exceeds q at sampled |z| = %g' % s)
        if member * q >= q0:
            return 'sync', z
        target = float(np.linalg.norm(diff + z))
        overlap = min(q0, float(self.q0(target, r))) if target > self.epsilon else 0.0
        if u <= overlap / q0:
            return 'coalesce', z + diff
        return 'reflect', ReflectionMap(x, y)(z)

## path engine

class JumpStream (object):
    """Buffered Poisson arrivals with jumps from nu(. | |z| > epsilon)."""
    block = 256

    def __init__(self, spec, rng):
        self.spec = spec
        self.rng = rng
        self._waits = []
        self._jumps = None
        self._next = 0

    def _refill(self):
        spec = self.spec
        self._waits = self.rng.exponential(1.0 / spec.rate, self.block)
        self._jumps = spec.nu.sample(spec.truncation.epsilon, self.rng, self.block)
        self._next = 0

    def next(self):
        if not self.spec.rate > 0.0:
            return math.inf, None
        if self._next >= len(self._waits):
            self._refill()
        k = self._next
        self._next += 1
        return float(self._waits[k]), self._jumps[k]

def _observation_times(spec, observe):
    times = sorted(set(float(t) for t in (observe or ())) | {spec.horizon})
    if times[0] < 0.0 or times[-1] > spec.horizon:
        raise ConfigInvalid('observation times must lie in [0, %g]' % spec.horizon)
    return times

def _check_bound(spec, t, *states):
    for s in states:
        if not np.all(np.isfinite(s)) or np.linalg.norm(s) > spec.explosion_bound:
            raise ExplosionDetected('state left the bound %g at t = %g' % (spec.explosion_bound, t))

def _run(spec, x0, y0, seed, index, observe, record, rule=None, meet=0.0, kappa=None):
    jump_rng, mark_rng = path_streams(seed, index)
    stream = JumpStream(spec, jump_rng)
    obs = _observation_times(spec, observe)
    paired = y0 is not None

    x = as_vector(x0).copy()
    y = as_vector(y0).copy() if paired else None
    if len(x) != spec.dimension or (paired and len(y) != spec.dimension):
        raise ConfigInvalid('initial states must lie in R^%d' % spec.dimension)
    tau = math.inf
    if paired and np.linalg.norm(x - y) <= meet:
        tau = 0.0
        y = x.copy()

    obs_x, obs_y = [], []
    times, xs, ys, events = [], [], [], []

    def note(t, event):
        if record:
            times.append(t)
            xs.append(x.copy())
            if paired:
                ys.append(y.copy())
            events.append(event)

    def advance(dt):
        nonlocal x, y
        x = spec.flow(x, dt)
        if paired:
            y = x.copy() if tau < math.inf else spec.flow(y, dt)

    t = 0.0
    k = 0
    note(t, 'drift')
    while True:
        wait, z = stream.next()
        t_jump = t + wait
        t_end = min(t_jump, spec.horizon)
        while k < len(obs) and obs[k] <= t_end:
            advance(obs[k] - t)
            t = obs[k]
            obs_x.append(x.copy())
            if paired:
                obs_y.append(y.copy())
            k += 1
        if t < t_end:
            advance(t_end - t)
            t = t_end
        if paired and tau == math.inf and np.linalg.norm(x - y) <= meet:
            tau = t
            y = x.copy()
        _check_bound(spec, t, x, *((y,) if paired else ()))
        if not spec.flow_free:
            note(t, 'drift')
        if t_jump > spec.horizon:
            break

        if not paired:
            x = x + z
            note(t, 'sync')
            continue
        if tau < math.inf:
            x = x + z
            y = x.copy()
            note(t, 'sync')
            continue
        before = float(np.linalg.norm(x - y))
        event, dy = rule(x, y, z, mark_rng)
        x = x + z
        y = y + dy
        exact = event == 'coalesce' or (event == 'contract' and before <= kappa)
        if exact or np.linalg.norm(x - y) <= meet:
            tau = t
            y = x.copy()
        _check_bound(spec, t, x, y)
        note(t, event)

    if not record:
        return obs, obs_x, obs_y, tau, None
    trace = (np.array(times), np.array(xs), np.array(ys) if paired else None, events)
    return obs, obs_x, obs_y, tau, trace

def simulate_single(spec, x0, seed=0, index=0, observe=None, record=False):
    """Simulate X from x0 on [0, horizon]; return a Path."""
    obs, obs_x, _, _, trace = _run(spec, x0, None, seed, index, observe, record)
    if trace is None:
        return Path((seed, index), index, obs, obs_x)
    times, xs, _, events = trace
    return Path((seed, index), index, obs, obs_x, times=times, x=xs, events=events)

def simulate_pair(spec, coupling, x0, y0, seed=0, index=0, observe=None, record=False):
    """Simulate a coupled pair from (x0, y0); return a PathPair."""
    x0 = as_vector(x0)
    y0 = as_vector(y0)
    meet = coupling.meet(float(np.linalg.norm(x0 - y0)))
    rule = coupling.rule(spec.nu, spec.truncation.epsilon)
    kappa = coupling.kappa if coupling.scheme == REFINED_BASIC else -1.0
    obs, obs_x, obs_y, tau, trace = _run(spec, x0, y0, seed, index, observe, record, rule=rule, meet=meet, kappa=kappa)
    if trace is None:
        return PathPair((seed, index), index, obs, obs_x, obs_y, tau, coupling.scheme)
    times, xs, ys, events = trace
    return PathPair((seed, index), index, obs, obs_x, obs_y, tau, coupling.scheme,
                    times=times, x=xs, y=ys, events=events)

def simulate_reflection_pair(spec, eta, x0, y0, seed=0, index=0, observe=None, record=False, meet_threshold=None):
    return simulate_pair(spec, CouplingSpec(REFLECTION, eta=eta, meet_threshold=meet_threshold),
                         x0, y0, seed, index, observe, record)

def simulate_refined_basic_pair(spec, kappa, x0, y0, seed=0, index=0, observe=None, record=False, meet_threshold=None):
    return simulate_pair(spec, CouplingSpec(REFINED_BASIC, kappa=kappa, meet_threshold=meet_threshold),
                         x0, y0, seed, index, observe, record)

def simulate_reflection_basic_pair(spec, q0, x0, y0, seed=0, index=0, observe=None, record=False, meet_threshold=None):
    """q0: sub-density config block, e.g. {"kind": "ball", "radius": 0.5}"""
    return simulate_pair(spec, CouplingSpec(REFLECTION_BASIC, q0=q0, meet_threshold=meet_threshold),
                         x0, y0, seed, index, observe, record)

## fan-out

class SingleJob (object):
    def __init__(self, spec, x0, seed, observe=None, record=False, offset=0):
        self.spec = spec
        self.x0 = as_vector(x0)
        self.seed = seed
        self.observe = observe
        self.record = record
        self.offset = offset

    def __call__(self, index):
        return simulate_single(self.spec, self.x0, self.seed, self.offset + index, self.observe, self.record)

class PairJob (object):
    def __init__(self, spec, coupling, x0, y0, seed, observe=None, record=False):
        self.spec = spec
        self.coupling = coupling
        self.x0 = as_vector(x0)
        self.y0 = as_vector(y0)
        self.seed = seed
        self.observe = observe
        self.record = record

    def __call__(self, index):
        return simulate_pair(self.spec, self.coupling, self.x0, self.y0, self.seed, index, self.observe, self.record)

def simulate_pairs(spec, coupling, x0, y0, n_paths, seed=0, observe=None, workers=1, record=False):
    """Return n_paths PathPairs ordered by path index."""
    return run_paths(PairJob(spec, coupling, x0, y0, seed, observe, record), n_paths, workers)

def simulate_singles(spec, x0, n_paths, seed=0, observe=None, workers=1, offset=0):
    """Return n_paths Paths for indices offset, ..., offset + n_paths - 1."""
    return run_paths(SingleJob(spec, x0, seed, observe, offset=offset), n_paths, workers)
