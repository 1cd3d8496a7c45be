import json

import numpy as np
import pytest

from conftest import make_itinerary_sample, synthetic_samples
from utils.utils import TieError, JudgeError, ConfigError, DatasetError
from utils.judge import (LogProbQuadruple, debias_label, swap_quadruple, render_judge_prompt, JudgeClient,
                         FixtureJudgeClient, HTTPJudgeClientConfig, collect_preferences, write_collected,
                         ENDPOINT_ENV, API_KEY_ENV)


def test_debias_label():
    label, margin = debias_label(LogProbQuadruple(-0.2, -1.0, -0.3, -0.9))
    assert label == 'A'
    assert margin == pytest.approx(0.10)
    with pytest.raises(TieError):
        debias_label(LogProbQuadruple(-0.5, -0.5, -0.5, -0.5))


def test_quadruple_must_be_finite():
    with pytest.raises(JudgeError):
        LogProbQuadruple(-0.1, float('nan'), -0.2, -0.3)
    with pytest.raises(JudgeError):
        LogProbQuadruple.from_sequence([-0.1, -0.2])


def test_debias_properties():
    rng = np.random.default_rng(0)
    for _ in range(10000):
        q = LogProbQuadruple(*(-rng.exponential(size=4)))
        label, margin = debias_label(q)
        swapped, swapped_margin = debias_label(swap_quadruple(q))
        assert swapped != label
        assert swapped_margin == pytest.approx(margin)
        c = rng.normal()
        shifted = LogProbQuadruple(*(v + c for v in q.as_tuple()))
        assert debias_label(shifted)[0] == label


def test_render_judge_prompt():
    prompt = render_judge_prompt('what is 2+2?', 'four', '5')
    assert prompt.startswith('[Query]\nwhat is 2+2?')
    assert '[Response A]\nfour' in prompt
    assert '[Response B]\n5' in prompt
    assert prompt.endswith("which better addresses the user's query? The better response is Response")


def test_render_judge_prompt_keeps_braces_in_text():
    prompt = render_judge_prompt('quote {response_b} and {query}', 'says {response_a}', 'plain')
    assert '[Query]\nquote {response_b} and {query}' in prompt
    assert '[Response A]\nsays {response_a}' in prompt
    assert '[Response B]\nplain' in prompt


def test_fixture_client_replays_dataset_labels():
    samples, _, _ = synthetic_samples(40)
    rng = np.random.default_rng(1)
    records, recorded = [], {}
    for s in samples:
        q = -rng.exponential(size=4)
        records.append(dict(sample_id=s.id, judge='j', quadruple=q.tolist()))
        recorded[s.id] = debias_label(LogProbQuadruple(*q))[0]
    result = collect_preferences(FixtureJudgeClient(records, judge='j'), samples, max_workers=3)
    assert result.labels == recorded
    assert result.errors == {}


def test_fixture_from_samples():
    sample = make_itinerary_sample()
    client = FixtureJudgeClient.from_samples([sample], 'GPT-4-Turbo')
    assert client.first_token_logprobs(sample, False) == (-0.2, -1.0)
    assert client.first_token_logprobs(sample, True) == (-0.3, -0.9)
    assert collect_preferences(client, [sample]).labels == {'itinerary': 'A'}


def test_fixture_file(tmp_path):
    path = tmp_path / 'fixture.jsonl'
    lines = [dict(sample_id='itinerary', judge='j', quadruple=[-0.2, -1.0, -0.3, -0.9]),
             dict(sample_id='itinerary', judge='other', quadruple=[-1.0, -0.2, -0.9, -0.3])]
    path.write_text('\n'.join(json.dumps(x) for x in lines) + '\n', encoding='utf-8')
    assert FixtureJudgeClient.from_file(str(path), judge='j').quadruple(make_itinerary_sample()).o1_A == -0.2
    path.write_text(json.dumps(dict(sample_id='x')) + '\n', encoding='utf-8')
    with pytest.raises(DatasetError):
        FixtureJudgeClient.from_file(str(path))
    with pytest.raises(DatasetError):
        FixtureJudgeClient.from_file(str(tmp_path / 'missing.jsonl'))


class ConstantClient(JudgeClient):
    def first_token_logprobs(self, sample, swapped):
        return -0.7, -0.7


class BrokenClient(JudgeClient):
    def first_token_logprobs(self, sample, swapped):
        raise OSError('connection reset')


def test_constant_client_ties_everywhere():
    samples, _, _ = synthetic_samples(5)
    result = collect_preferences(ConstantClient(), samples)
    assert result.labels == {}
    assert sorted(result.errors) == [s.id for s in samples]
    assert all(e.startswith('TieError') for e in result.errors.values())


def test_failures_are_recorded_not_fabricated(tmp_path):
    samples, _, _ = synthetic_samples(3)
    result = collect_preferences(BrokenClient(), samples)
    assert result.labels == {} and len(result.errors) == 3
    missing = collect_preferences(FixtureJudgeClient([], judge='j'), samples)
    assert all(e.startswith('JudgeError') for e in missing.errors.values())

    path = str(tmp_path / 'collected.jsonl')
    write_collected(result, path)
    with open(path) as f:
        records = [json.loads(line) for line in f]
    assert [r['sample_id'] for r in records] == sorted(s.id for s in samples)
    assert all('error' in r for r in records)


def test_empty_sample_list():
    result = collect_preferences(ConstantClient(), [])
    assert result.labels == {} and result.errors == {}
    assert result.records() == []


def test_http_config_from_env():
    with pytest.raises(ConfigError):
        HTTPJudgeClientConfig.from_env(environ={})
    config = HTTPJudgeClientConfig.from_env('judge-model', environ={ENDPOINT_ENV: 'http://localhost:8000',
                                                                    API_KEY_ENV: 'secret'})
    assert config.endpoint == 'http://localhost:8000'
    assert config.model == 'judge-model'
    assert 'secret' not in repr(config)
