import json
import dataclasses

import pytest

from conftest import make_itinerary_sample, synthetic_samples
from utils.utils import DatasetError, SchemaError, GroupError
from utils.dataloader import (GroupTag, load_dataset, scan_dataset, dump_dataset, dataset_hash, sample_to_record,
                              validate_sample, filter_group, group_counts, judges_in, merge_scenario,
                              canonical_judge, all_groups, import_released, iter_records)


def _write_lines(path, lines):
    path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    return str(path)


def test_group_tag_parse():
    assert GroupTag.parse('communication') == GroupTag('scenario', 'Communication')
    assert GroupTag.parse('Unsafe Query') == GroupTag('unsafe', 'Unsafe Query')
    assert GroupTag.parse('show subjective stances') == GroupTag('query_specific', 'show subjective stances')
    assert GroupTag.parse('Daily Tasks').slug == 'Daily_Tasks'
    with pytest.raises(GroupError):
        GroupTag.parse('Poetry')
    with pytest.raises(GroupError):
        GroupTag('scenario', 'unclear intent')


def test_all_groups_has_sixteen():
    groups = all_groups()
    assert len(groups) == 16
    assert len(set(groups)) == 16


def test_empty_file_loads_empty(tmp_path):
    path = tmp_path / 'empty.jsonl'
    path.write_text('', encoding='utf-8')
    assert load_dataset(str(path)) == []


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(str(tmp_path / 'nope.jsonl'))


def test_itinerary_round_trip(tmp_path):
    sample = make_itinerary_sample()
    path = str(tmp_path / 'data.jsonl')
    dump_dataset([sample], path)
    loaded = load_dataset(path)
    assert len(loaded) == 1
    assert loaded[0].response_a.word_count == 102
    assert loaded[0].response_b.word_count == 346
    assert sample_to_record(loaded[0]) == sample_to_record(sample)

    again = str(tmp_path / 'again.jsonl')
    dump_dataset(loaded, again)
    with open(path, encoding='utf-8') as f1, open(again, encoding='utf-8') as f2:
        assert f1.read() == f2.read()


def test_malformed_json_names_line(tmp_path):
    record = json.dumps(sample_to_record(make_itinerary_sample()))
    path = _write_lines(tmp_path / 'bad.jsonl', [record, '{"id": '])
    with pytest.raises(DatasetError) as e:
        load_dataset(path)
    assert e.value.line == 2
    assert 'line 2' in str(e.value)


def test_rating_out_of_range_is_rejected(tmp_path):
    record = sample_to_record(make_itinerary_sample())
    record['resp_a']['ratings']['harmless'] = 4
    path = _write_lines(tmp_path / 'bad.jsonl', [json.dumps(record)])
    with pytest.raises(SchemaError) as e:
        load_dataset(path)
    assert e.value.line == 1


def test_scan_collects_every_problem(tmp_path):
    good = sample_to_record(make_itinerary_sample())
    bad = json.loads(json.dumps(good))
    bad['id'] = 'other'
    bad['labels'] = {'human': 'Tie'}
    path = _write_lines(tmp_path / 'mixed.jsonl', [json.dumps(good), 'not json', json.dumps(bad)])
    samples, problems = scan_dataset(path)
    assert [s.id for s in samples] == ['itinerary']
    assert [line for line, _ in problems] == [2, 3]


def test_validate_itinerary_is_clean():
    assert validate_sample(make_itinerary_sample()) == []


def test_validate_errors_without_error_check():
    sample = make_itinerary_sample()
    resp = dataclasses.replace(sample.response_a, error_check_applicable=False)
    sample = dataclasses.replace(sample, response_a=resp)
    diagnostics = validate_sample(sample)
    assert len(diagnostics) == 1
    assert 'error_check_applicable' in diagnostics[0].message


def test_validate_tie_label():
    sample = dataclasses.replace(make_itinerary_sample(), labels={'human': 'Tie'})
    diagnostics = validate_sample(sample)
    assert len(diagnostics) == 1
    assert diagnostics[0].field == 'labels.human'


def test_validate_missing_query_specific():
    sample = make_itinerary_sample()
    raw = dict(sample.response_b.query_specific_raw)
    del raw['support stances']
    sample = dataclasses.replace(sample, response_b=dataclasses.replace(sample.response_b, query_specific_raw=raw))
    diagnostics = validate_sample(sample)
    assert any('support stances' in d.message for d in diagnostics)


def test_filter_group_by_scenario_and_prerequisite():
    itinerary = make_itinerary_sample()
    others, _, _ = synthetic_samples(5)
    samples = others + [itinerary]
    assert filter_group(samples, 'Daily Tasks') == [itinerary]
    assert len(filter_group(samples, 'Others')) == 5
    # the synthetic meta expresses feelings and has stances, itinerary has stances too
    assert len(filter_group(samples, 'show subjective stances')) == 6
    assert filter_group(samples, 'unclear intent') == others
    assert filter_group(samples, 'Unsafe Query') == []
    with pytest.raises(GroupError):
        filter_group(samples, 'Poetry')


def test_group_counts_per_judge():
    samples, _, _ = synthetic_samples(4)
    counts = group_counts(samples + [make_itinerary_sample()], judge='human')
    assert len(counts) == 16
    assert counts[GroupTag('scenario', 'Daily Tasks')] == 1
    assert counts[GroupTag('scenario', 'Others')] == 0


def test_dataset_hash_ignores_order():
    samples, _, _ = synthetic_samples(6)
    assert dataset_hash(samples) == dataset_hash(samples[::-1])
    assert dataset_hash(samples) != dataset_hash(samples[1:])


def test_swapped_sample_flips_labels_and_logprobs():
    sample = make_itinerary_sample()
    swapped = sample.swapped()
    assert swapped.labels == {'human': 'B'}
    assert swapped.response_a is sample.response_b
    assert swapped.logprobs['GPT-4-Turbo'] == (-0.3, -0.9, -0.2, -1.0)
    assert swapped.swapped() == sample


def test_judges_in_keeps_first_seen_order():
    synth, _, _ = synthetic_samples(2)
    assert judges_in([make_itinerary_sample()] + synth) == ['human', 'synthetic']


def test_merge_scenario():
    assert merge_scenario('chitchat') == 'Communication'
    assert merge_scenario('planning') == 'Daily Tasks'
    assert merge_scenario('default') == 'Others'
    assert merge_scenario('Code') == 'Code'
    with pytest.raises(GroupError):
        merge_scenario('astrology')


def test_canonical_judge():
    assert canonical_judge('gpt-4-1106-preview') == 'GPT-4-Turbo'
    assert canonical_judge('Llama-2-70b-chat-hf') == 'LLaMA-2-70B-Chat'
    assert canonical_judge('mixtral-8x7b-instruct-v0.1') == 'Mistral-8x7B-Inst-v0.1'
    assert canonical_judge('some-new-model') == 'some-new-model'


def _released_row(itinerary):
    basic = {
        'harmlessness': 3, 'grammar, spelling, punctuation, and code-switching': 3, 'friendly': 2, 'polite': 3,
        'interactive': 0, 'authoritative tone': 2, 'funny and humorous': 0,
        'metaphors, personification, similes, hyperboles, irony, parallelism': 0,
        'complex word usage and sentence structure': 1, 'use of direct and explicit supporting materials': 0,
        'well formatted': 2, 'admit limitations or mistakes': 0, 'persuade user': 0, 'step by step solution': 0,
        'use of informal expressions': 0, 'repetitive': 0, 'clear and understandable': 3,
        'information richness without considering inaccuracy': 2, 'innovative and novel': 1,
        'relevance without considering inaccuracy': 3,
    }
    return {
        'id': 'released-0', 'query': itinerary.meta.query_text, 'scenario_auto-j': 'planning',
        'scenario_group': 'Daily Tasks', 'clear intent': 'Yes', 'explicitly express feelings': 'No',
        'explicit constraints': [], 'explicit subjective stances': [], 'explicit mistakes or biases': [],
        'response_1': itinerary.response_a.text, 'response_2': itinerary.response_a.text,
        'basic_response_1': basic, 'basic_response_2': basic,
        'errors_response_1': {'applicable or not': 'applicable', 'errors': []},
        'errors_response_2': {'applicable or not': 'not applicable', 'errors': []},
        'preference_labels': {'human': 'response_1', 'gpt-4-1106-preview': 'tie'},
    }


def test_import_released(tmp_path):
    row = _released_row(make_itinerary_sample())
    path = tmp_path / 'released.json'
    path.write_text(json.dumps([row, {'id': 'broken'}]), encoding='utf-8')
    samples = import_released(str(path))
    assert len(samples) == 1
    sample = samples[0]
    assert sample.meta.scenario == GroupTag('scenario', 'Daily Tasks')
    assert sample.labels == {'human': 'A'}
    assert sample.response_a.word_count == 102
    assert sample.response_b.error_check_applicable is False
    assert sample.error_flagged


def test_import_dataset_script(tmp_path, capsys):
    from exp.import_dataset import main, parse_args

    source = tmp_path / 'released.json'
    source.write_text(json.dumps([_released_row(make_itinerary_sample())]), encoding='utf-8')
    output = str(tmp_path / 'data' / 'dataset.jsonl')
    args = parse_args(['--input', str(source), '--output', output])
    assert main(args) == 0
    assert len(load_dataset(output)) == 1
    with open(output + '.info.json', encoding='utf-8') as f:
        info = json.load(f)
    assert info['n_samples'] == 1
    assert info['judges'] == ['human']
    assert info['groups']['Daily Tasks'] == 1
    assert main(args) == 0
    assert 'already imported, exit.' in capsys.readouterr().out


def test_iter_records_skips_blank_lines(tmp_path):
    path = _write_lines(tmp_path / 'records.jsonl', ['{"a": 1}', '', '   ', '{"b": 2}'])
    assert list(iter_records(path)) == [(1, {'a': 1}), (4, {'b': 2})]
