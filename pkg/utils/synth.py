"""
synthetic preference data drawn from known weights, and an exact 1-D posterior mean, used as fitting oracles
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

from utils.utils import ConfigError, make_rng
from utils.properties import PropertyId, N_PROPERTIES, BASIC, RATING_KEYS, REPETITIVE, OTHERS
from utils.dataloader import (GroupTag, QueryMeta, ResponseAnnotation, AnnotatedSample, ErrorRecord,
                              QS_INTENT, QS_EMPATHY, QS_CONSTRAINTS, QS_STANCES, QS_MISTAKES)
from utils.features import DesignMatrix

SYNTHETIC_JUDGE = 'synthetic'


@dataclass(frozen=True)
class SynthSpec:
    alpha_star: tuple
    n_samples: int
    feature_sparsity: float = 0.4
    seed: int = 0

    def __post_init__(self):
        if len(self.alpha_star) != N_PROPERTIES:
            raise ConfigError('alpha_star needs %d weights, got %d' % (N_PROPERTIES, len(self.alpha_star)))
        if self.n_samples <= 0:
            raise ConfigError('n_samples must be positive')
        if not 0 < self.feature_sparsity <= 1:
            raise ConfigError('feature_sparsity must lie in (0, 1], got `%s`' % self.feature_sparsity)


def generate(spec):
    """
    :return: DesignMatrix whose slots are nonzero with probability feature_sparsity (then +-1 evenly)
        and whose labels are Bernoulli(sigmoid(alpha_star . phi))
    """
    rng = make_rng(spec.seed, 'synth')
    shape = (spec.n_samples, N_PROPERTIES)
    nonzero = rng.uniform(size=shape) < spec.feature_sparsity
    signs = np.where(rng.uniform(size=shape) < 0.5, -1, 1)
    features = (nonzero * signs).astype(np.int8)
    p = expit(features @ np.asarray(spec.alpha_star, dtype=np.float64))
    labels = (rng.uniform(size=spec.n_samples) < p).astype(np.float64)
    ids = ['synth-%06d' % i for i in range(spec.n_samples)]
    return DesignMatrix(features, labels, ids)


def _single_column(design):
    features = np.asarray(design.features, dtype=np.float64)
    if features.ndim == 1 or features.shape[1] == 1:
        return features.reshape(-1)
    active = np.flatnonzero(np.any(features != 0, axis=0))
    if len(active) != 1:
        raise ConfigError('exact 1-D posterior needs exactly one nonzero column, got %d' % len(active))
    return features[:, active[0]]


def exact_posterior_1d(design, b):
    """
    posterior mean of the single active weight by adaptive quadrature
    """
    x = _single_column(design)
    y = np.asarray(design.labels, dtype=np.float64)

    def log_density(a):
        z = x * a
        return np.sum(y * z - np.logaddexp(0., z)) - abs(a) / b

    mode = optimize.minimize_scalar(lambda a: -log_density(a), bounds=(-50., 50.), method='bounded',
                                    options={'xatol': 1e-10}).x
    peak = log_density(mode)
    half_width = 40. * b + 40. / np.sqrt(1. + np.sum(x ** 2)) + 1.
    lo, hi = min(mode, 0.) - half_width, max(mode, 0.) + half_width
    points = sorted({0., float(mode)})

    def density(a):
        return np.exp(log_density(a) - peak)

    norm = integrate.quad(density, lo, hi, points=points, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    first = integrate.quad(lambda a: a * density(a), lo, hi, points=points, epsabs=1e-12, epsrel=1e-10,
                           limit=200)[0]
    return float(first / norm)


# per-slot annotations realising a comparison value of +1 / 0 / -1 as (A, B)
_GENERIC = {1: (2, 1), 0: (1, 1), -1: (1, 2)}
_RELEVANT = {1: (1, 0), 0: (1, 1), -1: (0, 1)}
_LENGTH = {1: (20, 10), 0: (10, 10), -1: (10, 20)}
_STANCE = {1: ('weakly supported', 'neutral'), 0: ('neutral', 'neutral'), -1: ('neutral', 'weakly supported')}
_MISTAKE = {1: ('corrected without being pointed out', 'pointed out but not corrected'),
            0: ('pointed out but not corrected', 'pointed out but not corrected'),
            -1: ('pointed out but not corrected', 'corrected without being pointed out')}
# error slots compare counts, fewer is better
_ERRORS = {1: (0, 1), 0: (0, 0), -1: (1, 0)}

_SEVERITY = {PropertyId.NO_MINOR_ERRORS: 'minor', PropertyId.NO_MODERATE_ERRORS: 'moderate',
             PropertyId.NO_SEVERE_ERRORS: 'severe'}


def _responses(phi):
    ratings = ({}, {})
    for prop in BASIC:
        v = int(phi[prop])
        if prop is PropertyId.LENGTHY:
            continue
        pair = _RELEVANT[v] if prop is PropertyId.RELEVANT else _GENERIC[v]
        for side in (0, 1):
            if prop is PropertyId.NON_REPETITIVE:
                ratings[side][REPETITIVE] = 3 - pair[side]
            else:
                ratings[side][prop.label] = pair[side]
    assert all(set(r) == set(RATING_KEYS) for r in ratings)

    qs = ({}, {})
    for side in (0, 1):
        qs[side][QS_INTENT] = _GENERIC[int(phi[PropertyId.CLARIFY_INTENT])][side]
        qs[side][QS_EMPATHY] = _GENERIC[int(phi[PropertyId.SHOW_EMPATHETIC])][side]
        qs[side][QS_CONSTRAINTS] = [_GENERIC[int(phi[PropertyId.SATISFY_CONSTRAINTS])][side]]
        qs[side][QS_STANCES] = [_STANCE[int(phi[PropertyId.SUPPORT_STANCES])][side]]
        qs[side][QS_MISTAKES] = [_MISTAKE[int(phi[PropertyId.CORRECT_MISTAKES])][side]]

    errors = ([], [])
    for prop, severity in _SEVERITY.items():
        counts = _ERRORS[int(phi[prop])]
        for side in (0, 1):
            errors[side].extend(ErrorRecord('placeholder %s error' % severity, 'factual', severity)
                                for _ in range(counts[side]))

    lengths = _LENGTH[int(phi[PropertyId.LENGTHY])]
    return tuple(ResponseAnnotation(text='placeholder response %s' % 'AB'[side], basic_ratings=ratings[side],
                                    word_count=lengths[side], error_check_applicable=True,
                                    errors=tuple(errors[side]), query_specific_raw=qs[side])
                 for side in (0, 1))


def to_samples(design, judge=SYNTHETIC_JUDGE, scenario=OTHERS):
    """
    annotated samples whose comparison features equal the design rows and whose judge labels equal its labels
    """
    meta = QueryMeta(query_text='placeholder query', scenario=GroupTag.parse(scenario), clear_intent=False,
                     expresses_feelings=True, constraints=('placeholder constraint',),
                     stances=('placeholder stance',), mistakes=('placeholder mistake',))
    samples = []
    for sid, phi, label in zip(design.sample_ids, design.features, design.labels):
        resp_a, resp_b = _responses(np.asarray(phi, dtype=np.int64))
        samples.append(AnnotatedSample(sid, meta, resp_a, resp_b, labels={judge: 'A' if label == 1 else 'B'}))
    return samples
