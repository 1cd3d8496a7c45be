"""
canonical dataset schema: newline-delimited JSON, one annotated sample per line
"""
import os
import re
import json
import math
import logging
from dataclasses import dataclass, field
from collections import OrderedDict

import numpy as np
import pandas as pd
from tqdm import tqdm
from jsonschema import Draft7Validator

from utils.utils import DatasetError, SchemaError, GroupError, sha256_text, ensure_dir
from utils.properties import (RATING_KEYS, SEVERITIES, ERROR_TYPES, SCENARIOS, UNSAFE, PREREQUISITES,
                              FINE_TO_SCENARIO, REPETITIVE, judge_groups)

logger = logging.getLogger(__name__)

GROUP_KINDS = ('scenario', 'unsafe', 'query_specific')
LABELS = ('A', 'B')

STANCE_LABELS = ('strongly supported', 'weakly supported', 'neutral', 'weakly opposed', 'strongly opposed')
MISTAKE_LABELS = ('pointed out and corrected', 'corrected without being pointed out',
                  'pointed out but not corrected', 'neither pointed out nor corrected')

# keys of the optional per-response `query_specific` object
QS_INTENT = 'clarify intent'
QS_EMPATHY = 'show empathetic'
QS_CONSTRAINTS = 'satisfy constraints'
QS_STANCES = 'support stances'
QS_MISTAKES = 'correct mistakes'


@dataclass(frozen=True)
class GroupTag:
    kind: str
    name: str

    def __post_init__(self):
        if self.kind == 'scenario' and self.name in SCENARIOS:
            return
        if self.kind == 'unsafe' and self.name == UNSAFE:
            return
        if self.kind == 'query_specific' and self.name in PREREQUISITES:
            return
        raise GroupError('unknown group `%s` of kind `%s`' % (self.name, self.kind))

    @classmethod
    def parse(cls, text):
        """
        resolve a group by its display name, case-insensitive
        """
        if isinstance(text, GroupTag):
            return text
        key = str(text).strip().lower()
        for name in SCENARIOS:
            if name.lower() == key:
                return cls('scenario', name)
        if key in (UNSAFE.lower(), 'unsafe', 'unsafe queries'):
            return cls('unsafe', UNSAFE)
        for name in PREREQUISITES:
            if name.lower() == key:
                return cls('query_specific', name)
        raise GroupError('unknown group name `%s`' % text)

    @property
    def slug(self):
        return re.sub(r'[^A-Za-z0-9]+', '_', self.name).strip('_')

    def to_dict(self):
        return {'kind': self.kind, 'name': self.name}

    def __str__(self):
        return self.name


def scenario_groups(include_unsafe=True):
    groups = [GroupTag('scenario', name) for name in SCENARIOS]
    if include_unsafe:
        groups.append(GroupTag('unsafe', UNSAFE))
    return groups


def prerequisite_groups():
    return [GroupTag('query_specific', name) for name in PREREQUISITES]


def all_groups():
    return scenario_groups(include_unsafe=True) + prerequisite_groups()


@dataclass(frozen=True)
class QueryMeta:
    query_text: str
    scenario: GroupTag
    clear_intent: bool
    expresses_feelings: bool
    constraints: tuple = ()
    stances: tuple = ()
    mistakes: tuple = ()


@dataclass(frozen=True)
class ErrorRecord:
    description: str
    error_type: str
    severity: str


@dataclass(frozen=True)
class ResponseAnnotation:
    text: str
    basic_ratings: dict
    word_count: int
    error_check_applicable: bool = True
    errors: tuple = ()
    query_specific_raw: dict = None


@dataclass(frozen=True)
class AnnotatedSample:
    id: str
    meta: QueryMeta
    response_a: ResponseAnnotation
    response_b: ResponseAnnotation
    labels: dict = field(default_factory=dict)
    logprobs: dict = field(default_factory=dict)

    @property
    def error_flagged(self):
        # error annotation is undefined for at least one response
        return not (self.response_a.error_check_applicable and self.response_b.error_check_applicable)

    def swapped(self):
        """
        the same comparison with the two responses trading places
        """
        flip = {'A': 'B', 'B': 'A'}
        labels = {judge: flip.get(value, value) for judge, value in self.labels.items()}
        logprobs = {judge: (q[2], q[3], q[0], q[1]) for judge, q in self.logprobs.items()}
        return AnnotatedSample(self.id, self.meta, self.response_b, self.response_a, labels, logprobs)


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str

    def __str__(self):
        return '`%s` %s' % (self.field, self.message)


_RESPONSE_SCHEMA = {
    'type': 'object',
    'required': ['text', 'ratings', 'word_count', 'error_check', 'errors'],
    'properties': {
        'text': {'type': 'string'},
        'ratings': {'type': 'object', 'additionalProperties': {'type': 'integer'}},
        'word_count': {'type': 'integer'},
        'error_check': {'type': 'boolean'},
        'errors': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['desc', 'type', 'severity'],
                'properties': {'desc': {'type': 'string'}, 'type': {'type': 'string'},
                               'severity': {'type': 'string'}},
            },
        },
        'query_specific': {
            'type': 'object',
            'properties': {
                QS_INTENT: {'type': 'integer'},
                QS_EMPATHY: {'type': 'integer'},
                QS_CONSTRAINTS: {'type': 'array', 'items': {'type': 'integer'}},
                QS_STANCES: {'type': 'array', 'items': {'type': 'string'}},
                QS_MISTAKES: {'type': 'array', 'items': {'type': 'string'}},
            },
            'additionalProperties': False,
        },
    },
}

RECORD_SCHEMA = {
    'type': 'object',
    'required': ['id', 'query', 'scenario', 'prereq', 'resp_a', 'resp_b', 'labels'],
    'properties': {
        'id': {'type': 'string'},
        'query': {'type': 'string'},
        'scenario': {'type': 'string'},
        'prereq': {
            'type': 'object',
            'required': ['clear_intent', 'expresses_feelings', 'constraints', 'stances', 'mistakes'],
            'properties': {
                'clear_intent': {'type': 'boolean'},
                'expresses_feelings': {'type': 'boolean'},
                'constraints': {'type': 'array', 'items': {'type': 'string'}},
                'stances': {'type': 'array', 'items': {'type': 'string'}},
                'mistakes': {'type': 'array', 'items': {'type': 'string'}},
            },
        },
        'resp_a': _RESPONSE_SCHEMA,
        'resp_b': _RESPONSE_SCHEMA,
        'labels': {'type': 'object', 'additionalProperties': {'type': 'string'}},
        'logprobs': {
            'type': 'object',
            'additionalProperties': {'type': 'array', 'items': {'type': 'number'}, 'minItems': 4, 'maxItems': 4},
        },
    },
}

_validator = Draft7Validator(RECORD_SCHEMA)


def _response_from_record(rec):
    errors = tuple(ErrorRecord(e['desc'], e['type'], e['severity']) for e in rec['errors'])
    qs = rec.get('query_specific')
    if qs is not None:
        qs = {key: (tuple(value) if isinstance(value, list) else value) for key, value in qs.items()}
    return ResponseAnnotation(text=rec['text'], basic_ratings=dict(rec['ratings']), word_count=rec['word_count'],
                              error_check_applicable=rec['error_check'], errors=errors, query_specific_raw=qs)


def _response_to_record(resp):
    rec = OrderedDict(
        text=resp.text,
        ratings=dict(resp.basic_ratings),
        word_count=resp.word_count,
        error_check=resp.error_check_applicable,
        errors=[{'desc': e.description, 'type': e.error_type, 'severity': e.severity} for e in resp.errors],
    )
    if resp.query_specific_raw is not None:
        rec['query_specific'] = {key: (list(value) if isinstance(value, tuple) else value)
                                 for key, value in resp.query_specific_raw.items()}
    return rec


def sample_from_record(record, line=None):
    """
    build a sample from a decoded JSON record, raising SchemaError on structural problems
    """
    problems = sorted(_validator.iter_errors(record), key=lambda e: list(e.absolute_path))
    if problems:
        err = problems[0]
        where = '/'.join(str(p) for p in err.absolute_path) or 'record'
        raise SchemaError(err.message, field=where, line=line)
    try:
        scenario = GroupTag.parse(record['scenario'])
    except GroupError as e:
        raise SchemaError(str(e), field='scenario', line=line)
    if scenario.kind == 'query_specific':
        raise SchemaError('must name a scenario or the unsafe group', field='scenario', line=line)
    prereq = record['prereq']
    meta = QueryMeta(query_text=record['query'], scenario=scenario,
                     clear_intent=prereq['clear_intent'], expresses_feelings=prereq['expresses_feelings'],
                     constraints=tuple(prereq['constraints']), stances=tuple(prereq['stances']),
                     mistakes=tuple(prereq['mistakes']))
    logprobs = {judge: tuple(float(v) for v in q) for judge, q in record.get('logprobs', {}).items()}
    return AnnotatedSample(id=record['id'], meta=meta,
                           response_a=_response_from_record(record['resp_a']),
                           response_b=_response_from_record(record['resp_b']),
                           labels=dict(record['labels']), logprobs=logprobs)


def sample_to_record(sample):
    meta = sample.meta
    record = OrderedDict(
        id=sample.id,
        query=meta.query_text,
        scenario=meta.scenario.name,
        prereq=OrderedDict(clear_intent=meta.clear_intent, expresses_feelings=meta.expresses_feelings,
                           constraints=list(meta.constraints), stances=list(meta.stances),
                           mistakes=list(meta.mistakes)),
        resp_a=_response_to_record(sample.response_a),
        resp_b=_response_to_record(sample.response_b),
        labels=dict(sample.labels),
    )
    if sample.logprobs:
        record['logprobs'] = {judge: list(q) for judge, q in sample.logprobs.items()}
    return record


def dumps_sample(sample):
    return json.dumps(sample_to_record(sample), sort_keys=True, ensure_ascii=False)


def iter_records(path):
    """
    yield (line number, decoded record) for every non-blank line
    """
    with open(path, encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError('malformed JSON: %s' % e.msg, line=lineno)


def load_dataset(path):
    """
    load and validate a canonical dataset, order preserved
    :param path: newline-delimited JSON file
    :return: list of AnnotatedSample
    """
    if not os.path.exists(path):
        raise DatasetError('cannot find dataset at `%s`' % path)
    samples = []
    for lineno, record in iter_records(path):
        sample = sample_from_record(record, line=lineno)
        diagnostics = validate_sample(sample)
        if diagnostics:
            d = diagnostics[0]
            raise SchemaError(d.message, field=d.field, line=lineno)
        samples.append(sample)
    return samples


def scan_dataset(path):
    """
    lenient variant of load_dataset that collects every problem instead of stopping at the first
    :return: (valid samples, list of (line number, message))
    """
    if not os.path.exists(path):
        raise DatasetError('cannot find dataset at `%s`' % path)
    samples, problems = [], []
    with open(path, encoding='utf-8') as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                sample = sample_from_record(json.loads(line), line=lineno)
            except json.JSONDecodeError as e:
                problems.append((lineno, 'malformed JSON: %s' % e.msg))
                continue
            except SchemaError as e:
                problems.append((lineno, str(e)))
                continue
            diagnostics = validate_sample(sample)
            if diagnostics:
                problems.extend((lineno, str(d)) for d in diagnostics)
            else:
                samples.append(sample)
    return samples, problems


def dump_dataset(samples, path):
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8') as f:
        for sample in samples:
            f.write(dumps_sample(sample))
            f.write('\n')


def dataset_hash(samples):
    """
    sha256 of the canonical serialization, independent of sample order
    """
    lines = sorted(dumps_sample(s) for s in samples)
    return sha256_text('\n'.join(lines))


def _validate_response(resp, meta, side):
    out = []
    ratings = resp.basic_ratings
    for key in RATING_KEYS:
        if key not in ratings:
            out.append(Diagnostic('%s.ratings' % side, 'basic_ratings missing `%s`' % key))
    for key, value in ratings.items():
        if key not in RATING_KEYS:
            out.append(Diagnostic('%s.ratings' % side, 'basic_ratings has unknown property `%s`' % key))
        elif isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not 0 <= value <= 3:
            out.append(Diagnostic('%s.ratings' % side, 'basic_ratings out of range: `%s`=%r' % (key, value)))
    if isinstance(resp.word_count, bool) or not isinstance(resp.word_count, (int, np.integer)) \
            or resp.word_count < 0:
        out.append(Diagnostic('%s.word_count' % side, 'must be a nonnegative integer'))
    if resp.errors and not resp.error_check_applicable:
        out.append(Diagnostic('%s.errors' % side, 'errors present but error_check_applicable is false'))
    for err in resp.errors:
        if err.severity not in SEVERITIES:
            out.append(Diagnostic('%s.errors' % side, 'unknown severity `%s`' % err.severity))
        if err.error_type not in ERROR_TYPES:
            out.append(Diagnostic('%s.errors' % side, 'unknown error type `%s`' % err.error_type))

    qs = resp.query_specific_raw or {}
    where = '%s.query_specific' % side
    needed = {
        QS_INTENT: not meta.clear_intent,
        QS_EMPATHY: meta.expresses_feelings,
        QS_CONSTRAINTS: bool(meta.constraints),
        QS_STANCES: bool(meta.stances),
        QS_MISTAKES: bool(meta.mistakes),
    }
    for key, required in needed.items():
        if required and key not in qs:
            out.append(Diagnostic(where, 'missing `%s` although its prerequisite holds' % key))
    for key in (QS_INTENT, QS_EMPATHY):
        if key in qs and not (isinstance(qs[key], (int, np.integer)) and 0 <= qs[key] <= 3):
            out.append(Diagnostic(where, '`%s` out of range' % key))
    if QS_CONSTRAINTS in qs:
        scores = qs[QS_CONSTRAINTS]
        if any(not 0 <= s <= 3 for s in scores):
            out.append(Diagnostic(where, '`%s` scores out of range' % QS_CONSTRAINTS))
        if meta.constraints and len(scores) != len(meta.constraints):
            out.append(Diagnostic(where, '`%s` has %d scores for %d constraints'
                                  % (QS_CONSTRAINTS, len(scores), len(meta.constraints))))
    for key, allowed, items in ((QS_STANCES, STANCE_LABELS, meta.stances),
                                (QS_MISTAKES, MISTAKE_LABELS, meta.mistakes)):
        if key not in qs:
            continue
        bad = [label for label in qs[key] if str(label).lower() not in allowed]
        if bad:
            out.append(Diagnostic(where, '`%s` has unknown labels %s' % (key, bad)))
        if items and len(qs[key]) != len(items):
            out.append(Diagnostic(where, '`%s` has %d labels for %d items' % (key, len(qs[key]), len(items))))
    return out


def validate_sample(sample):
    """
    check every type invariant of a sample
    :return: list of Diagnostic, empty iff the sample is valid
    """
    out = []
    if not sample.id:
        out.append(Diagnostic('id', 'must be nonempty'))
    if sample.meta.scenario.kind not in ('scenario', 'unsafe'):
        out.append(Diagnostic('scenario', 'must name a scenario or the unsafe group'))
    out.extend(_validate_response(sample.response_a, sample.meta, 'resp_a'))
    out.extend(_validate_response(sample.response_b, sample.meta, 'resp_b'))
    for judge, value in sample.labels.items():
        if value not in LABELS:
            out.append(Diagnostic('labels.%s' % judge, 'label must be A or B, got `%s`' % value))
    for judge, q in sample.logprobs.items():
        if len(q) != 4 or not all(math.isfinite(v) for v in q):
            out.append(Diagnostic('logprobs.%s' % judge, 'must be four finite numbers'))
    return out


def prerequisite_met(meta, name):
    if name == 'unclear intent':
        return not meta.clear_intent
    if name == 'express feelings':
        return meta.expresses_feelings
    if name == 'with explicit constraints':
        return bool(meta.constraints)
    if name == 'show subjective stances':
        return bool(meta.stances)
    if name == 'contain mistakes or bias':
        return bool(meta.mistakes)
    raise GroupError('unknown prerequisite `%s`' % name)


def filter_group(samples, tag):
    """
    :param tag: GroupTag or its display name
    :return: the samples belonging to the group, order preserved
    """
    tag = GroupTag.parse(tag)
    if tag.kind == 'scenario':
        return [s for s in samples if s.meta.scenario == tag]
    if tag.kind == 'unsafe':
        return [s for s in samples if s.meta.scenario.kind == 'unsafe']
    return [s for s in samples if prerequisite_met(s.meta, tag.name)]


def group_counts(samples, judge=None):
    """
    :param judge: if given, count only samples this judge labeled
    :return: OrderedDict GroupTag -> count over all 16 groups
    """
    if judge is not None:
        samples = [s for s in samples if judge in s.labels]
    return OrderedDict((tag, len(filter_group(samples, tag))) for tag in all_groups())


def judges_in(samples):
    seen = OrderedDict()
    for s in samples:
        for judge in s.labels:
            seen[judge] = True
    return list(seen)


def merge_scenario(fine_name):
    """
    fold a fine-grained classifier scenario into one of the 10 analysis scenarios
    """
    key = str(fine_name).strip().lower()
    if key in FINE_TO_SCENARIO:
        return FINE_TO_SCENARIO[key]
    for name in SCENARIOS:
        if name.lower() == key:
            return name
    raise GroupError('unknown scenario `%s`' % fine_name)


# raw basic-property names used by the annotation prompts
RAW_BASIC_NAMES = {
    'harmlessness': 'harmless',
    'grammar, spelling, punctuation, and code-switching': 'grammarly correct',
    'friendly': 'friendly',
    'polite': 'polite',
    'interactive': 'interactive',
    'authoritative tone': 'authoritative',
    'funny and humorous': 'funny',
    'metaphors, personification, similes, hyperboles, irony, parallelism': 'use rhetorical devices',
    'complex word usage and sentence structure': 'complex word & sentence',
    'use of direct and explicit supporting materials': 'use supporting materials',
    'well formatted': 'well formatted',
    'admit limitations or mistakes': 'admit limits',
    'persuade user': 'persuasive',
    'step by step solution': 'step-by-step',
    'use of informal expressions': 'use informal expressions',
    'repetitive': REPETITIVE,
    'clear and understandable': 'clear',
    'information richness without considering inaccuracy': 'contain rich info',
    'innovative and novel': 'novel',
    'relevance without considering inaccuracy': 'relevant',
}

RAW_QS_NAMES = {
    'clarify user intent': QS_INTENT,
    'showing empathetic': QS_EMPATHY,
    'satisfying explicit constraints': QS_CONSTRAINTS,
    'supporting explicit subjective stances': QS_STANCES,
    'correcting explicit mistakes or biases': QS_MISTAKES,
}

_JUDGE_ALIASES = {
    'gpt4turbo': 'GPT-4-Turbo', 'gpt41106preview': 'GPT-4-Turbo',
    'gpt35turbo': 'GPT-3.5-Turbo', 'gpt35turbo1106': 'GPT-3.5-Turbo',
    'human': 'human',
}


def _judge_key(name):
    key = re.sub(r'[^a-z0-9]', '', name.lower())
    key = key.replace('instruct', 'inst').replace('mixtral', 'mistral')
    if key.endswith('hf'):
        key = key[:-2]
    return key


def canonical_judge(raw):
    """
    map an upstream judge identifier onto the canonical judge names, unknown names are kept verbatim
    """
    key = _judge_key(raw)
    if key in _JUDGE_ALIASES:
        return _JUDGE_ALIASES[key]
    for name in judge_groups()['judges']:
        if _judge_key(name) == key:
            return name
    return raw


def _error_type(raw):
    raw = str(raw).lower()
    if 'fact' in raw:
        return 'factual'
    if 'contradiction' in raw:
        return 'query_contradiction'
    if 'math' in raw:
        return 'math'
    if 'code' in raw:
        return 'code'
    raise SchemaError('unknown error type `%s`' % raw, field='errors')


def _raw_label(value):
    value = str(value).strip().lower()
    if value in ('a', 'response_1', 'response 1', 'model_a', '1'):
        return 'A'
    if value in ('b', 'response_2', 'response 2', 'model_b', '2'):
        return 'B'
    return None


def _first(row, *keys, default=None):
    for key in keys:
        if key in row and row[key] is not None:
            value = row[key]
            if isinstance(value, float) and math.isnan(value):
                continue
            return value
    return default


def _raw_response(row, side, word_count):
    basic = _first(row, 'basic_response_%d' % side, default={}) or {}
    ratings = {}
    for raw_name, value in basic.items():
        name = RAW_BASIC_NAMES.get(raw_name, raw_name)
        ratings[name] = int(value)
    errors_raw = _first(row, 'errors_response_%d' % side, default={}) or {}
    applicable = str(_first(errors_raw, 'applicable or not', 'accuracy check', default='applicable')).lower()
    applicable = applicable == 'applicable'
    errors = []
    if applicable:
        for e in _first(errors_raw, 'errors', 'inaccuracies', default=[]) or []:
            errors.append(ErrorRecord(e.get('brief description', ''), _error_type(e.get('type', '')),
                                      str(e.get('severity', '')).lower()))
    qs_raw = _first(row, 'query-specific_response_%d' % side, 'query_specific_response_%d' % side, default=None)
    qs = None
    if qs_raw:
        qs = {}
        for raw_name, value in qs_raw.items():
            key = RAW_QS_NAMES.get(raw_name, raw_name)
            if isinstance(value, dict):
                value = list(value.values())
            if key in (QS_INTENT, QS_EMPATHY):
                qs[key] = int(value)
            elif key == QS_CONSTRAINTS:
                qs[key] = tuple(int(v) for v in value)
            else:
                qs[key] = tuple(str(v).lower() for v in value)
    response = _first(row, 'response_%d' % side, default='')
    text = response.get('content', '') if isinstance(response, dict) else str(response)
    return ResponseAnnotation(text=text, basic_ratings=ratings, word_count=word_count(text),
                              error_check_applicable=applicable, errors=tuple(errors), query_specific_raw=qs)


def _read_raw(path):
    if not os.path.exists(path):
        raise DatasetError('cannot find released dataset at `%s`' % path)
    if path.endswith('.parquet'):
        return pd.read_parquet(path).to_dict(orient='records')
    if path.endswith('.jsonl'):
        return pd.read_json(path, lines=True, dtype=False).to_dict(orient='records')
    with open(path, encoding='utf-8') as f:
        data = json.load(f)
    if isinstance(data, dict):
        data = data.get('data', list(data.values()))
    return list(data)


def import_released(path):
    """
    one-shot conversion of the public release into the canonical schema. Records that cannot be
    converted or fail validation are skipped and counted; tie labels are dropped per judge.
    :param path: .json, .jsonl or .parquet file
    :return: list of AnnotatedSample
    """
    from utils.ratings import word_count

    rows = _read_raw(path)
    samples = []
    skipped = 0
    for i, row in enumerate(tqdm(rows, desc='import')):
        try:
            group = str(_first(row, 'scenario_group', 'scenario', default='Others'))
            if group.lower().startswith('unsafe'):
                scenario = GroupTag('unsafe', UNSAFE)
            else:
                try:
                    scenario = GroupTag('scenario', merge_scenario(group))
                except GroupError:
                    scenario = GroupTag('scenario', merge_scenario(_first(row, 'scenario_auto-j', default='default')))
            clear_intent = str(_first(row, 'clear intent', default='Yes')).lower() == 'yes'
            feelings = str(_first(row, 'explicitly express feelings', default='No')).lower() == 'yes'
            meta = QueryMeta(query_text=str(_first(row, 'query', 'prompt', default='')), scenario=scenario,
                             clear_intent=clear_intent, expresses_feelings=feelings,
                             constraints=tuple(_first(row, 'explicit constraints', default=[]) or []),
                             stances=tuple(_first(row, 'explicit subjective stances', default=[]) or []),
                             mistakes=tuple(_first(row, 'explicit mistakes or biases', default=[]) or []))
            labels = {}
            for judge, value in (_first(row, 'preference_labels', default={}) or {}).items():
                label = _raw_label(value)
                if label is not None:
                    labels[canonical_judge(judge)] = label
            logprobs = {canonical_judge(j): tuple(float(v) for v in q)
                        for j, q in (_first(row, 'logprobs', default={}) or {}).items()}
            sample = AnnotatedSample(id=str(_first(row, 'id', default=i)), meta=meta,
                                     response_a=_raw_response(row, 1, word_count),
                                     response_b=_raw_response(row, 2, word_count),
                                     labels=labels, logprobs=logprobs)
        except (KeyError, TypeError, ValueError) as e:
            logger.debug('record %d skipped: %s', i, e)
            skipped += 1
            continue
        diagnostics = validate_sample(sample)
        if diagnostics:
            logger.debug('record %d skipped: %s', i, diagnostics[0])
            skipped += 1
            continue
        samples.append(sample)
    if skipped:
        logger.warning('%d of %d released records skipped during import', skipped, len(rows))
    return samples
