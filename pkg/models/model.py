"""
Bayesian logistic regression over comparison features with a Laplace prior on the weights:
P(A preferred | phi, alpha) = sigmoid(alpha . phi), no intercept
"""
import logging
from dataclasses import dataclass, field, asdict, replace

import numpy as np
from scipy.special import expit
from sklearn.metrics import accuracy_score
from joblib import Parallel, delayed

from models.nuts import run_chain
from utils.utils import (ConfigError, GroupError, SchemaError, stable_seed, make_rng, dump_json, load_json)
from utils.properties import PROPERTY_NAMES, N_PROPERTIES
from utils.dataloader import GroupTag, dataset_hash
from utils.features import build_design_matrix, ERROR_POLICIES
from utils.diagnostics import summarize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
PRIOR_GRID = (0.03, 0.1, 0.3, 1.0)


@dataclass(frozen=True)
class FitConfig:
    prior_scale: float = 0.1
    chains: int = 4
    warmup: int = 500
    samples_per_chain: int = 1500
    folds: int = 10
    target_accept: float = 0.8
    max_tree_depth: int = 10
    seed: int = 2024
    error_policy: str = 'zero-error-slots'
    rhat_threshold: float = 1.1

    def __post_init__(self):
        if not self.prior_scale > 0:
            raise ConfigError('prior_scale must be positive, got `%s`' % self.prior_scale)
        for name in ('chains', 'samples_per_chain', 'folds', 'max_tree_depth'):
            if int(getattr(self, name)) < 1:
                raise ConfigError('`%s` must be a positive integer' % name)
        if self.warmup < 0:
            raise ConfigError('warmup must be nonnegative')
        if not 0 < self.target_accept < 1:
            raise ConfigError('target_accept must lie in (0, 1), got `%s`' % self.target_accept)
        if self.error_policy not in ERROR_POLICIES:
            raise ConfigError('unknown error policy `%s`' % self.error_policy)

    @property
    def total_samples(self):
        return self.chains * self.samples_per_chain

    def fast(self):
        return replace(self, chains=2, samples_per_chain=500)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError('unknown fit config keys `%s`' % ', '.join(sorted(unknown)))
        return cls(**d)


def predict(alpha, phi):
    """
    :param alpha: 29 weights
    :param phi: one comparison feature or a matrix of them (rows)
    :return: probability that response A is preferred
    """
    return expit(np.dot(np.asarray(phi, dtype=np.float64), np.asarray(alpha, dtype=np.float64)))


def log_posterior(alpha, design, b):
    alpha = np.asarray(alpha, dtype=np.float64)
    z = design.features @ alpha
    log_lik = np.sum(design.labels * z - np.logaddexp(0., z))
    log_prior = -np.sum(np.abs(alpha)) / b - len(alpha) * np.log(2. * b)
    return float(log_lik + log_prior)


def grad_log_posterior(alpha, design, b):
    alpha = np.asarray(alpha, dtype=np.float64)
    z = design.features @ alpha
    return design.features.T @ (design.labels - expit(z)) - np.sign(alpha) / b


def make_log_prob_fn(design, b):
    """
    :return: alpha -> (log posterior, gradient), sharing one pass over the rows
    """
    features, labels = design.features, design.labels

    def log_prob_fn(alpha):
        z = features @ alpha
        logp = np.sum(labels * z - np.logaddexp(0., z)) - np.sum(np.abs(alpha)) / b - len(alpha) * np.log(2. * b)
        grad = features.T @ (labels - expit(z)) - np.sign(alpha) / b
        return logp, grad

    return log_prob_fn


@dataclass
class PosteriorDraws:
    draws: np.ndarray
    chain_stats: list

    @property
    def mean(self):
        return self.draws.reshape(-1, self.draws.shape[-1]).mean(axis=0)


def nuts_sample(design, config, seed, log_prob_fn=None, dim=N_PROPERTIES):
    """
    :param design: DesignMatrix, ignored when log_prob_fn is given
    :param config: FitConfig
    :param seed: base seed; chain c draws from stable_seed(seed, c)
    :param log_prob_fn: optional alpha -> (logp, grad) replacing the Laplace-logistic posterior
    :param dim: dimension of the target when log_prob_fn is given
    :return: PosteriorDraws with draws shaped (chains, samples_per_chain, dim)
    """
    if log_prob_fn is None:
        if design is None or len(design) == 0:
            raise GroupError('cannot sample from an empty design')
        log_prob_fn = make_log_prob_fn(design, config.prior_scale)
        dim = design.features.shape[1]

    draws, stats = [], []
    for chain in range(config.chains):
        rng = make_rng(seed, chain)
        init = rng.laplace(0., config.prior_scale, size=dim)
        result = run_chain(log_prob_fn, init, config.warmup, config.samples_per_chain, rng,
                           target_accept=config.target_accept, max_tree_depth=config.max_tree_depth)
        draws.append(result.draws)
        stats.append(result.stats())
    return PosteriorDraws(np.stack(draws), stats)


def fit_single(design, config, seed, log_prob_fn=None, dim=N_PROPERTIES):
    """
    :return: (posterior mean over every kept draw of every chain, diagnostics dict)
    """
    posterior = nuts_sample(design, config, seed, log_prob_fn=log_prob_fn, dim=dim)
    diagnostics = summarize(posterior.draws, posterior.chain_stats, config.rhat_threshold)
    return posterior.mean, diagnostics


def accuracy(model, design):
    """
    :param model: FittedPreferenceModel or a weight vector
    :return: share of rows whose prediction matches the label; probability 0.5 predicts A
    """
    alpha = model.alpha if isinstance(model, FittedPreferenceModel) else np.asarray(model, dtype=np.float64)
    if len(design) == 0:
        raise GroupError('cannot score an empty design')
    pred = (predict(alpha, design.features) >= 0.5).astype(np.float64)
    return float(accuracy_score(design.labels, pred))


def judge_accuracy(models, groups=None):
    """
    unweighted mean of per-group training accuracies
    :param models: dict GroupTag -> FittedPreferenceModel (or float accuracy)
    :param groups: groups that must be present, default every key of models
    """
    if groups is None:
        groups = list(models)
    if not groups:
        raise GroupError('no groups to average over')
    values = []
    for group in groups:
        group = GroupTag.parse(group)
        if group not in models:
            raise GroupError('no model for group `%s`' % group)
        m = models[group]
        values.append(m.train_accuracy if isinstance(m, FittedPreferenceModel) else float(m))
    return float(np.mean(values))


def heldout_log_likelihood(alpha, design):
    if len(design) == 0:
        return float('nan')
    z = design.features @ np.asarray(alpha, dtype=np.float64)
    return float(np.mean(design.labels * z - np.logaddexp(0., z)))


@dataclass
class FittedPreferenceModel:
    judge: str
    group: GroupTag
    alpha: np.ndarray
    fold_alphas: np.ndarray
    diagnostics: list
    train_accuracy: float
    heldout_accuracy: float
    n_rows: int
    uninformative: tuple
    config: dict
    dataset_hash: str = ''
    property_names: tuple = field(default=PROPERTY_NAMES)

    @property
    def degrees(self):
        return expit(self.alpha)

    def to_dict(self):
        return dict(
            schema_version=SCHEMA_VERSION,
            judge=self.judge,
            group=self.group.to_dict(),
            property_names=list(self.property_names),
            alpha=[float(a) for a in self.alpha],
            fold_alphas=[[float(a) for a in row] for row in self.fold_alphas],
            diagnostics=self.diagnostics,
            train_accuracy=self.train_accuracy,
            heldout_accuracy=self.heldout_accuracy,
            n_rows=self.n_rows,
            uninformative=[bool(u) for u in self.uninformative],
            config=self.config,
            dataset_hash=self.dataset_hash,
        )

    @classmethod
    def from_dict(cls, d):
        if d.get('schema_version') != SCHEMA_VERSION:
            raise SchemaError('unsupported model schema version `%s`' % d.get('schema_version'),
                              field='schema_version')
        if tuple(d['property_names']) != PROPERTY_NAMES:
            raise SchemaError('property order differs from this build', field='property_names')
        return cls(judge=d['judge'],
                   group=GroupTag(d['group']['kind'], d['group']['name']),
                   alpha=np.asarray(d['alpha'], dtype=np.float64),
                   fold_alphas=np.asarray(d['fold_alphas'], dtype=np.float64).reshape(-1, N_PROPERTIES),
                   diagnostics=d['diagnostics'],
                   train_accuracy=d['train_accuracy'],
                   heldout_accuracy=d['heldout_accuracy'],
                   n_rows=d['n_rows'],
                   uninformative=tuple(d['uninformative']),
                   config=d['config'],
                   dataset_hash=d.get('dataset_hash', ''))


def save_model(model, path):
    dump_json(model.to_dict(), path)


def load_model(path):
    return FittedPreferenceModel.from_dict(load_json(path))


def _fit_fold(design, train, config, seed):
    return fit_single(design.subset(train), config, seed)


def _iter_fold_fits(design, judge, group, config, n_jobs):
    rng = make_rng(config.seed, judge, group.name)
    folds = list(design.iter_folds(config.folds, rng))
    seeds = [stable_seed(config.seed, judge, group.name, k) for k, _, _ in folds]
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_fold)(design, train, config, seed) for (_, train, _), seed in zip(folds, seeds))
    for (k, train, held), (alpha_k, diag_k) in zip(folds, results):
        yield k, train, held, alpha_k, diag_k


def fit_folds(samples, judge, group, config, data_hash=None, n_jobs=1):
    """
    fit one model per fold on the rows outside that fold and average the per-fold posterior means
    :param samples: list of AnnotatedSample
    :param judge: judge whose labels are explained
    :param group: GroupTag or group name
    :param config: FitConfig
    :param data_hash: dataset content hash to stamp, computed from samples when None
    :param n_jobs: joblib workers over folds, results do not depend on it
    :return: FittedPreferenceModel
    """
    group = GroupTag.parse(group)
    design = build_design_matrix(samples, judge, group, config.error_policy).sorted_by_id()
    if len(design) < config.folds:
        raise GroupError('group `%s` has %d labeled samples for judge `%s`, fewer than %d folds'
                         % (group, len(design), judge, config.folds))

    fold_alphas, diagnostics, held_acc = [], [], []
    for k, train, held, alpha_k, diag_k in _iter_fold_fits(design, judge, group, config, n_jobs):
        diag_k = dict(diag_k, fold=k, n_train=int(len(train)), n_heldout=int(len(held)))
        if len(held):
            held_design = design.subset(held)
            diag_k['heldout_accuracy'] = accuracy(alpha_k, held_design)
            diag_k['heldout_log_likelihood'] = heldout_log_likelihood(alpha_k, held_design)
            held_acc.append(diag_k['heldout_accuracy'])
        fold_alphas.append(alpha_k)
        diagnostics.append(diag_k)

    fold_alphas = np.stack(fold_alphas)
    alpha = fold_alphas.mean(axis=0)
    model = FittedPreferenceModel(
        judge=judge, group=group, alpha=alpha, fold_alphas=fold_alphas, diagnostics=diagnostics,
        train_accuracy=accuracy(alpha, design),
        heldout_accuracy=float(np.mean(held_acc)) if held_acc else None,
        n_rows=len(design), uninformative=tuple(bool(u) for u in design.uninformative),
        config=config.to_dict(),
        dataset_hash=dataset_hash(samples) if data_hash is None else data_hash)
    logger.info('fitted %s / %s on %d rows, accuracy %.4f', judge, group, len(design), model.train_accuracy)
    return model


def select_prior_scale(samples, judge, group, config, grid=PRIOR_GRID, n_jobs=1):
    """
    pick the prior scale with the best mean held-out log-likelihood across folds
    :return: (best scale, dict scale -> mean held-out log-likelihood)
    """
    if config.folds < 2:
        raise ConfigError('prior selection needs at least 2 folds')
    group = GroupTag.parse(group)
    design = build_design_matrix(samples, judge, group, config.error_policy).sorted_by_id()
    if len(design) < config.folds:
        raise GroupError('group `%s` has fewer labeled samples than folds' % group)
    scores = {}
    for b in grid:
        cfg = replace(config, prior_scale=float(b))
        values = [heldout_log_likelihood(alpha_k, design.subset(held))
                  for _, _, held, alpha_k, _ in _iter_fold_fits(design, judge, group, cfg, n_jobs)]
        scores[float(b)] = float(np.mean(values))
    best = max(scores, key=lambda b: (scores[b], -b))
    logger.info('prior scale %s selected for %s / %s', best, judge, group)
    return best, scores
