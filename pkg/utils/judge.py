"""
preference labels from judge log-probabilities, with the two response orders averaged to cancel positional bias
"""
import os
import json
import re
import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

from tqdm import tqdm

from utils.utils import TieError, JudgeError, DatasetError, ConfigError, DissectError
from utils.properties import read_asset
from utils.dataloader import iter_records

logger = logging.getLogger(__name__)

ENDPOINT_ENV = 'PREFDISSECT_JUDGE_ENDPOINT'
API_KEY_ENV = 'PREFDISSECT_JUDGE_API_KEY'
PLACEHOLDER = re.compile(r'\{(query|response_a|response_b)\}')


@dataclass(frozen=True)
class LogProbQuadruple:
    """
    o1_*: log-probabilities of tokens A / B with the responses in original order,
    o2_*: the same with the responses swapped, so o2_A scores the original response B
    """
    o1_A: float
    o1_B: float
    o2_A: float
    o2_B: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise JudgeError('log-probabilities must be finite, got %s' % (self.as_tuple(),))

    def as_tuple(self):
        return self.o1_A, self.o1_B, self.o2_A, self.o2_B

    @classmethod
    def from_sequence(cls, values):
        values = list(values)
        if len(values) != 4:
            raise JudgeError('a quadruple needs 4 values, got %d' % len(values))
        return cls(*(float(v) for v in values))


def debias_label(q):
    """
    :param q: LogProbQuadruple
    :return: (label A or B, margin) where each response scores the mean over the two positions it held
    """
    score_1 = (q.o1_A + q.o2_B) / 2.
    score_2 = (q.o1_B + q.o2_A) / 2.
    if score_1 == score_2:
        raise TieError('equal debiased scores %.6f' % score_1)
    return ('A' if score_1 > score_2 else 'B'), abs(score_1 - score_2)


def swap_quadruple(q):
    """
    the quadruple observed when responses A and B trade places in the sample
    """
    return LogProbQuadruple(q.o2_A, q.o2_B, q.o1_A, q.o1_B)


def render_judge_prompt(query, response_1, response_2):
    template = read_asset('judge_prompt.txt').rstrip('\n')
    fills = dict(query=query, response_a=response_1, response_b=response_2)
    # single pass, filled text is never rescanned
    return PLACEHOLDER.sub(lambda m: fills[m.group(1)], template)


class JudgeClient(ABC):
    """
    a model exposing first-token log-probabilities for the judge prompt
    """

    @abstractmethod
    def first_token_logprobs(self, sample, swapped):
        """
        :param sample: AnnotatedSample whose two responses are compared
        :param swapped: present response B in the first position when True
        :return: (log-probability of token A, log-probability of token B)
        """

    def quadruple(self, sample):
        o1 = self.first_token_logprobs(sample, False)
        o2 = self.first_token_logprobs(sample, True)
        return LogProbQuadruple(o1[0], o1[1], o2[0], o2[1])


class FixtureJudgeClient(JudgeClient):
    """
    replays recorded quadruples from newline-delimited JSON records {sample_id, judge, quadruple}
    """

    def __init__(self, records, judge=None):
        self.judge = judge
        self.records = {}
        for rec in records:
            if judge is not None and rec.get('judge') != judge:
                continue
            self.records[rec['sample_id']] = LogProbQuadruple.from_sequence(rec['quadruple'])

    @classmethod
    def from_file(cls, path, judge=None):
        if not os.path.exists(path):
            raise DatasetError('cannot find fixture at `%s`' % path)
        records = []
        for lineno, rec in iter_records(path):
            if not all(k in rec for k in ('sample_id', 'judge', 'quadruple')):
                raise DatasetError('fixture record needs sample_id, judge and quadruple', line=lineno)
            records.append(rec)
        return cls(records, judge=judge)

    @classmethod
    def from_samples(cls, samples, judge):
        """
        a fixture replaying the quadruples stored in the dataset itself
        """
        return cls([{'sample_id': s.id, 'judge': judge, 'quadruple': list(s.logprobs[judge])}
                    for s in samples if judge in s.logprobs], judge=judge)

    def first_token_logprobs(self, sample, swapped):
        if sample.id not in self.records:
            raise JudgeError('no recorded log-probabilities for sample `%s`' % sample.id)
        q = self.records[sample.id]
        return (q.o2_A, q.o2_B) if swapped else (q.o1_A, q.o1_B)


@dataclass(frozen=True)
class HTTPJudgeClientConfig:
    """
    settings for a live judge endpoint; the wire protocol itself is left to the caller
    """
    endpoint: str
    api_key: str = field(default='', repr=False)
    model: str = ''

    @classmethod
    def from_env(cls, model='', environ=None):
        environ = os.environ if environ is None else environ
        endpoint = environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ConfigError('set `%s` to use a live judge' % ENDPOINT_ENV)
        return cls(endpoint=endpoint, api_key=environ.get(API_KEY_ENV, ''), model=model)


@dataclass
class CollectResult:
    labels: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    quadruples: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def records(self):
        ids = sorted(set(self.labels) | set(self.errors))
        out = []
        for sid in ids:
            if sid in self.labels:
                out.append(dict(sample_id=sid, label=self.labels[sid], margin=self.margins[sid],
                                quadruple=list(self.quadruples[sid].as_tuple())))
            else:
                out.append(dict(sample_id=sid, error=self.errors[sid]))
        return out


def collect_preferences(client, samples, max_workers=4, progress=False):
    """
    query the client in both orders for every sample and debias
    :return: CollectResult, failures are kept per sample as error messages
    """
    result = CollectResult()
    if not samples:
        return result

    def work(sample):
        try:
            q = client.quadruple(sample)
            label, margin = debias_label(q)
            return sample.id, q, label, margin, None
        except (DissectError, OSError) as e:
            return sample.id, None, None, None, '%s: %s' % (type(e).__name__, e)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outputs = pool.map(work, samples)
        if progress:
            outputs = tqdm(outputs, total=len(samples), desc='collect')
        for sid, q, label, margin, error in outputs:
            if error is not None:
                result.errors[sid] = error
                continue
            result.quadruples[sid] = q
            result.labels[sid] = label
            result.margins[sid] = margin
    if result.errors:
        logger.warning('%d of %d samples failed', len(result.errors), len(samples))
    return result


def write_collected(result, path):
    with open(path, 'w', encoding='utf-8') as f:
        for rec in result.records():
            f.write(json.dumps(rec, sort_keys=True))
            f.write('\n')
