"""
comparison features between two responses and the per (judge, group) design matrices built from them
"""
from fractions import Fraction

import numpy as np

from utils.utils import GroupError, JudgeError, ConfigError
from utils.properties import PropertyId, N_PROPERTIES, ERROR_DETECTION
from utils.ratings import assemble_property_vector
from utils.dataloader import GroupTag, filter_group

ERROR_POLICIES = ('zero-error-slots', 'drop')

# the shorter response must have fewer than this share of the longer one's words
LENGTH_RATIO = Fraction(7, 10)


def _sign(x):
    return (x > 0) - (x < 0)


def _compare_slot(prop, a, b):
    if prop in ERROR_DETECTION:
        # fewer errors is better
        return _sign(b - a)
    if prop is PropertyId.RELEVANT:
        if a == 0 and b > 0:
            return -1
        if b == 0 and a > 0:
            return 1
        return 0
    if prop is PropertyId.LENGTHY:
        longer, shorter = max(a, b), min(a, b)
        if longer == 0 or Fraction(shorter, longer) >= LENGTH_RATIO:
            return 0
        return _sign(a - b)
    return _sign(a - b)


def compare(pv_a, pv_b):
    """
    :param pv_a: PropertyVector of response A
    :param pv_b: PropertyVector of response B, annotated against the same query
    :return: comparison feature phi, int8 array of 29 values in {-1, 0, +1}
    """
    phi = np.zeros(N_PROPERTIES, dtype=np.int8)
    for prop in PropertyId:
        if pv_a.is_applicable(prop) and pv_b.is_applicable(prop):
            phi[prop] = _compare_slot(prop, pv_a[prop], pv_b[prop])
    return phi


def sample_feature(sample):
    return compare(assemble_property_vector(sample.response_a, sample.meta),
                   assemble_property_vector(sample.response_b, sample.meta))


class DesignMatrix:
    """
    rows of comparison features with labels (1.0 when A is preferred) and the ids of their samples
    """

    def __init__(self, features, labels, sample_ids):
        features = np.asarray(features, dtype=np.float64).reshape(-1, N_PROPERTIES)
        labels = np.asarray(labels, dtype=np.float64).reshape(-1)
        assert len(features) == len(labels) == len(sample_ids)

        self.features = features
        self.labels = labels
        self.sample_ids = list(sample_ids)

    def __len__(self):
        return len(self.labels)

    @property
    def n_rows(self):
        return len(self.labels)

    @property
    def uninformative(self):
        """
        :return: bool array, True where the column never differs between responses
        """
        return ~np.any(self.features != 0, axis=0)

    def density(self):
        if self.features.size == 0:
            return 0.0
        return float(np.count_nonzero(self.features)) / self.features.size

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return DesignMatrix(self.features[idx], self.labels[idx], [self.sample_ids[i] for i in idx])

    def sorted_by_id(self):
        order = sorted(range(len(self.sample_ids)), key=self.sample_ids.__getitem__)
        return self.subset(order)

    def swapped(self):
        return DesignMatrix(-self.features, 1.0 - self.labels, self.sample_ids)

    def iter_folds(self, folds, rng):
        """
        yield (fold index, training row indices, held-out row indices). Rows are permuted once by rng
          and cut into `folds` contiguous slices; folds=1 trains on every row with nothing held out.
        """
        if folds <= 1:
            yield 0, np.arange(len(self)), np.arange(0)
            return
        order = rng.permutation(len(self))
        chunks = np.array_split(order, folds)
        for k in range(folds):
            train = np.concatenate([c for i, c in enumerate(chunks) if i != k])
            yield k, np.sort(train), np.sort(chunks[k])


def build_design_matrix(samples, judge, group, error_policy='zero-error-slots'):
    """
    :param samples: list of AnnotatedSample
    :param judge: judge whose labels become the targets
    :param group: GroupTag or group name
    :param error_policy: `zero-error-slots` keeps samples whose error check is not applicable (their error
        slots compare as 0), `drop` excludes them
    :return: DesignMatrix with one row per sample the judge labeled, input order preserved
    """
    if error_policy not in ERROR_POLICIES:
        raise ConfigError('unknown error policy `%s`' % error_policy)
    group = GroupTag.parse(group)
    rows = filter_group(samples, group)
    if not rows:
        raise GroupError('group `%s` is empty' % group)
    labeled = [s for s in rows if judge in s.labels]
    if not labeled:
        raise JudgeError('judge `%s` has no labels in group `%s`' % (judge, group))
    if error_policy == 'drop':
        labeled = [s for s in labeled if not s.error_flagged]
        if not labeled:
            raise GroupError('group `%s` is empty after dropping error-flagged samples' % group)

    features = np.stack([sample_feature(s) for s in labeled])
    labels = [1.0 if s.labels[judge] == 'A' else 0.0 for s in labeled]
    return DesignMatrix(features, labels, [s.id for s in labeled])
