"""
raw annotations -> final per-response rating for each of the 29 properties
"""
import re
from dataclasses import dataclass
from fractions import Fraction
from collections import OrderedDict

import numpy as np
import pandas as pd

from utils.utils import InapplicableError, AssemblyError
from utils.properties import PropertyId, PROPERTY_NAMES, N_PROPERTIES, REPETITIVE, BASIC
from utils.dataloader import (QS_INTENT, QS_EMPATHY, QS_CONSTRAINTS, QS_STANCES, QS_MISTAKES)

STANCE_SCORES = OrderedDict([
    ('strongly supported', Fraction(3)),
    ('weakly supported', Fraction(9, 4)),
    ('neutral', Fraction(3, 2)),
    ('weakly opposed', Fraction(3, 4)),
    ('strongly opposed', Fraction(0)),
])

MISTAKE_SCORES = OrderedDict([
    ('pointed out and corrected', Fraction(3)),
    ('corrected without being pointed out', Fraction(2)),
    ('pointed out but not corrected', Fraction(1)),
    ('neither pointed out nor corrected', Fraction(0)),
])

# word runs and punctuation runs each count as one token
WORD_PATTERN = re.compile(r'\w+|[^\w\s]+')


def _mean(scores):
    return sum(scores, Fraction(0)) / len(scores)


def _mapped_mean(labels, table, what):
    if not labels:
        raise InapplicableError('%s score needs at least one label' % what)
    scores = []
    for label in labels:
        key = str(label).strip().lower()
        if key not in table:
            raise AssemblyError('unknown %s label `%s`' % (what, label))
        scores.append(table[key])
    return _mean(scores)


def stance_score(labels):
    """
    :param labels: stance labels, one per stance the user expressed
    :return: exact mean of the mapped scores, in [0, 3]
    """
    return _mapped_mean(labels, STANCE_SCORES, 'stance')


def mistake_score(labels):
    return _mapped_mean(labels, MISTAKE_SCORES, 'mistake')


def constraint_score(per_constraint):
    """
    :param per_constraint: integer scores 0..3, one per explicit constraint
    :return: exact arithmetic mean
    """
    if not per_constraint:
        raise InapplicableError('constraint score needs at least one constraint')
    return _mean([Fraction(int(s)) for s in per_constraint])


def error_counts(errors):
    """
    :return: (minor, moderate, severe) counts
    """
    counts = {'minor': 0, 'moderate': 0, 'severe': 0}
    for err in errors:
        counts[err.severity] += 1
    return counts['minor'], counts['moderate'], counts['severe']


def word_count(text):
    return len(WORD_PATTERN.findall(text))


@dataclass(frozen=True)
class PropertyVector:
    """
    29 slots: basic ratings with the word count in the lengthy slot, query-specific ratings, error counts.
    Inapplicable slots hold None.
    """
    values: tuple
    applicable: tuple

    def __post_init__(self):
        assert len(self.values) == N_PROPERTIES and len(self.applicable) == N_PROPERTIES

    def __getitem__(self, prop):
        return self.values[int(prop)]

    def is_applicable(self, prop):
        return self.applicable[int(prop)]


def _basic_rating(ratings, key, prop):
    if key not in ratings:
        raise AssemblyError('missing rating for `%s`' % prop.label, prop=prop)
    return Fraction(int(ratings[key]))


def _qs_value(raw, key, prop):
    if key not in raw:
        raise AssemblyError('missing query-specific annotation for `%s`' % prop.label, prop=prop)
    return raw[key]


def assemble_property_vector(resp, meta):
    """
    :param resp: a validated ResponseAnnotation
    :param meta: QueryMeta of the query the response answers
    :return: PropertyVector
    """
    values = [None] * N_PROPERTIES
    applicable = [False] * N_PROPERTIES
    ratings = resp.basic_ratings

    for prop in BASIC:
        if prop is PropertyId.LENGTHY:
            values[prop] = int(resp.word_count)
        elif prop is PropertyId.NON_REPETITIVE:
            values[prop] = 3 - _basic_rating(ratings, REPETITIVE, prop)
        else:
            values[prop] = _basic_rating(ratings, prop.label, prop)
        applicable[prop] = True

    raw = resp.query_specific_raw or {}
    if not meta.clear_intent:
        prop = PropertyId.CLARIFY_INTENT
        values[prop] = Fraction(int(_qs_value(raw, QS_INTENT, prop)))
        applicable[prop] = True
    if meta.expresses_feelings:
        prop = PropertyId.SHOW_EMPATHETIC
        values[prop] = Fraction(int(_qs_value(raw, QS_EMPATHY, prop)))
        applicable[prop] = True
    if meta.constraints:
        prop = PropertyId.SATISFY_CONSTRAINTS
        values[prop] = constraint_score(_qs_value(raw, QS_CONSTRAINTS, prop))
        applicable[prop] = True
    if meta.stances:
        prop = PropertyId.SUPPORT_STANCES
        values[prop] = stance_score(_qs_value(raw, QS_STANCES, prop))
        applicable[prop] = True
    if meta.mistakes:
        prop = PropertyId.CORRECT_MISTAKES
        values[prop] = mistake_score(_qs_value(raw, QS_MISTAKES, prop))
        applicable[prop] = True

    if resp.error_check_applicable:
        minor, moderate, severe = error_counts(resp.errors)
        values[PropertyId.NO_MINOR_ERRORS] = minor
        values[PropertyId.NO_MODERATE_ERRORS] = moderate
        values[PropertyId.NO_SEVERE_ERRORS] = severe
        for prop in (PropertyId.NO_MINOR_ERRORS, PropertyId.NO_MODERATE_ERRORS, PropertyId.NO_SEVERE_ERRORS):
            applicable[prop] = True

    return PropertyVector(tuple(values), tuple(applicable))


def property_statistics(samples):
    """
    mean rating per property over both responses of every sample, applicable slots only.
    The lengthy slot reports the mean word count and error slots the mean error count.
    :return: pandas Series indexed by property name
    """
    rows = []
    for sample in samples:
        for resp in (sample.response_a, sample.response_b):
            pv = assemble_property_vector(resp, sample.meta)
            rows.append([float(v) if ok else np.nan for v, ok in zip(pv.values, pv.applicable)])
    frame = pd.DataFrame(rows, columns=list(PROPERTY_NAMES))
    return frame.mean(axis=0, skipna=True)
