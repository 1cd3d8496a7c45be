"""
headline quantities derived from fitted models: degrees of preference, rankings, similarities, group aggregates
"""
import logging
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from utils.utils import CorrelationError, GroupError, JudgeError, UnsupportedDataError
from utils.properties import PropertyId, N_PROPERTIES, ERROR_DETECTION, judge_groups
from utils.dataloader import GroupTag, scenario_groups

logger = logging.getLogger(__name__)


def degree_of_preference(alpha_i):
    return expit(alpha_i)


@dataclass(frozen=True)
class PreferenceProfile:
    judge: str
    group: GroupTag
    degree: tuple
    uninformative: tuple = (False,) * N_PROPERTIES

    def __post_init__(self):
        assert len(self.degree) == N_PROPERTIES and len(self.uninformative) == N_PROPERTIES

    def __getitem__(self, prop):
        return self.degree[int(prop)]

    def ranked(self):
        """
        :return: informative properties by degree descending, ties by index ascending
        """
        props = [p for p in PropertyId if not self.uninformative[p]]
        return sorted(props, key=lambda p: (-self.degree[p], int(p)))

    def to_dict(self):
        return dict(judge=self.judge, group=self.group.to_dict(),
                    degree={p.label: float(self.degree[p]) for p in PropertyId},
                    uninformative=[p.label for p in PropertyId if self.uninformative[p]],
                    ranking=[p.label for p in self.ranked()])


def build_profile(model):
    return PreferenceProfile(judge=model.judge, group=model.group,
                             degree=tuple(float(d) for d in degree_of_preference(model.alpha)),
                             uninformative=tuple(bool(u) for u in model.uninformative))


def rank_properties(profile, k):
    """
    :return: (top k, last k) of the ranked properties, both in descending degree order
    """
    if not 0 <= k <= N_PROPERTIES:
        raise ValueError('k must lie in [0, %d], got `%s`' % (N_PROPERTIES, k))
    ranked = profile.ranked()
    if k == 0:
        return [], []
    return ranked[:k], ranked[max(len(ranked) - k, 0):]


def pearson(alpha_m, alpha_n):
    x = np.asarray(alpha_m, dtype=np.float64)
    y = np.asarray(alpha_n, dtype=np.float64)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise CorrelationError('correlation is undefined for a constant weight vector')
    rho = np.dot(dx, dy) / np.sqrt(sxx * syy)
    return float(np.clip(rho, -1., 1.))


def default_similarity_groups(include_unsafe=True):
    return scenario_groups(include_unsafe=include_unsafe)


def _alpha(models, judge, group):
    if judge not in models:
        raise JudgeError('no models for judge `%s`' % judge)
    if group not in models[judge]:
        raise GroupError('no model for judge `%s` in group `%s`' % (judge, group))
    m = models[judge][group]
    return getattr(m, 'alpha', m)


def similarity(m, n, models, groups=None):
    """
    :param m, n: judge names
    :param models: dict judge -> dict GroupTag -> FittedPreferenceModel (or weight vector)
    :param groups: group set to average over, default the 10 scenarios plus unsafe
    :return: mean per-group pearson correlation of the two judges' weights
    """
    groups = default_similarity_groups() if groups is None else [GroupTag.parse(g) for g in groups]
    if not groups:
        raise GroupError('empty group set')
    return float(np.mean([pearson(_alpha(models, m, g), _alpha(models, n, g)) for g in groups]))


@dataclass
class SimilarityMatrix:
    judges: list
    values: np.ndarray
    groups: list

    def __getitem__(self, pair):
        m, n = pair
        try:
            return float(self.values[self.judges.index(m), self.judges.index(n)])
        except ValueError:
            raise JudgeError('judge pair `%s`/`%s` is not in the matrix' % (m, n))

    def to_dict(self):
        return dict(judges=list(self.judges), groups=[str(g) for g in self.groups],
                    values=[[float(v) for v in row] for row in self.values])


def similarity_matrix(judges, models, groups=None):
    groups = default_similarity_groups() if groups is None else [GroupTag.parse(g) for g in groups]
    judges = list(judges)
    values = np.eye(len(judges))
    for i, j in itertools.combinations(range(len(judges)), 2):
        values[i, j] = values[j, i] = similarity(judges[i], judges[j], models, groups)
    return SimilarityMatrix(judges, values, groups)


def intra_group(judges, matrix):
    """
    mean similarity over unordered pairs of distinct judges in the group
    """
    judges = list(dict.fromkeys(judges))
    if len(judges) < 2:
        raise GroupError('intra-group similarity needs at least two judges')
    return float(np.mean([matrix[m, n] for m, n in itertools.combinations(judges, 2)]))


def inter_group(group_a, group_b, matrix):
    """
    mean similarity over every pair with one judge from each group
    """
    if not group_a or not group_b:
        raise GroupError('inter-group similarity needs two nonempty groups')
    return float(np.mean([matrix[m, n] for m in group_a for n in group_b]))


def resolve_judge_group(name):
    """
    :param name: a size group (`<14B`, `>30B`) or series name from the shipped definitions
    :return: list of judge names
    """
    defs = judge_groups()
    if name in defs['size']:
        return list(defs['size'][name])
    if name in defs['series']:
        return list(defs['series'][name])
    raise GroupError('unknown judge group `%s`' % name)


def series_similarity(matrix):
    """
    :return: (mean intra-series similarity, mean similarity across series) over judges present in the matrix
    """
    present = set(matrix.judges)
    series = {name: [j for j in members if j in present] for name, members in judge_groups()['series'].items()}
    series = {name: members for name, members in series.items() if len(members) >= 2}
    if len(series) < 2:
        raise GroupError('series similarity needs two series with at least two fitted judges')
    intra = [intra_group(members, matrix) for members in series.values()]
    inter = [inter_group(series[a], series[b], matrix) for a, b in itertools.combinations(series, 2)]
    return float(np.mean(intra)), float(np.mean(inter))


def error_sensitivity(profiles):
    """
    :param profiles: one judge's profiles over the group set
    :return: (minor, moderate, severe) mean degree in percent
    """
    if not profiles:
        raise GroupError('no profiles to average')
    return tuple(float(np.mean([p[prop] for p in profiles]) * 100.) for prop in ERROR_DETECTION)


def logprob_margin(judge, samples):
    """
    mean over samples of the gap between the two responses, each scored over both positions it held
    """
    margins = [abs((q[0] + q[3]) / 2. - (q[1] + q[2]) / 2.) for q in
               (s.logprobs[judge] for s in samples if judge in s.logprobs)]
    if not margins:
        raise UnsupportedDataError('no log-probabilities recorded for judge `%s`' % judge)
    if len(margins) < len(samples):
        logger.warning('%d of %d samples lack log-probabilities for %s', len(samples) - len(margins),
                       len(samples), judge)
    return float(np.mean(margins))


def alignment_shift(base, variants, matrix):
    """
    mean similarity between a pretrained-only judge and its aligned variants
    """
    if not variants:
        raise JudgeError('judge `%s` has no aligned variants' % base)
    return float(np.mean([matrix[base, v] for v in variants]))


def alignment_shifts(matrix):
    """
    :return: dict base judge -> alignment_shift for every fitted base model with at least one fitted variant
    """
    present = set(matrix.judges)
    out = {}
    for base, variants in judge_groups()['base_models'].items():
        variants = [v for v in variants if v in present]
        if base in present and variants:
            out[base] = alignment_shift(base, variants, matrix)
    return out


def feature_density(design):
    return design.density()
