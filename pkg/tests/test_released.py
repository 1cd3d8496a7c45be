"""
checks against the public release, run with PREFDISSECT_DATASET pointing at an imported dataset;
fits for every shipped judge also need PREFDISSECT_FULL=1
"""
import os

import pytest

from utils.properties import PropertyId, judge_groups
from utils.dataloader import GroupTag, load_dataset, filter_group, scenario_groups
from utils.features import build_design_matrix
from utils.analytics import (build_profile, rank_properties, error_sensitivity, similarity_matrix, intra_group,
                             inter_group, resolve_judge_group, series_similarity)
from utils.manipulate import RelabelConfig, relabel
from models.model import FitConfig, fit_folds, judge_accuracy

DATASET = os.environ.get('PREFDISSECT_DATASET')
FULL = os.environ.get('PREFDISSECT_FULL') == '1'

pytestmark = pytest.mark.skipif(not DATASET, reason='PREFDISSECT_DATASET is not set')
full_only = pytest.mark.skipif(not FULL, reason='set PREFDISSECT_FULL=1 to fit every judge')


@pytest.fixture(scope='module')
def samples():
    return load_dataset(DATASET)


@pytest.fixture(scope='module')
def fitted(samples):
    cache = {}

    def models_for(judge):
        if judge not in cache:
            config = FitConfig().fast()
            cache[judge] = {g: fit_folds(samples, judge, g, config, n_jobs=-1) for g in scenario_groups()}
        return cache[judge]
    return models_for


def _sensitivity(models):
    return error_sensitivity([build_profile(m) for m in models.values()])


def test_prerequisite_group_sizes(samples):
    assert len(filter_group(samples, 'show subjective stances')) == 388
    assert len(filter_group(samples, 'unclear intent')) == 459


def test_design_rows_match_labeled_count(samples):
    labeled = [s for s in filter_group(samples, 'Communication') if 'human' in s.labels]
    assert build_design_matrix(samples, 'human', 'Communication').n_rows == len(labeled)


@pytest.mark.slow
def test_human_accuracy(fitted):
    assert judge_accuracy(fitted('human')) * 100. == pytest.approx(78.12, abs=3.)


@pytest.mark.slow
def test_human_prefers_length_in_communication(fitted):
    top, _ = rank_properties(build_profile(fitted('human')[GroupTag.parse('Communication')]), 3)
    assert PropertyId.LENGTHY in top


@pytest.mark.slow
def test_human_error_sensitivity(fitted):
    minor, moderate, severe = _sensitivity(fitted('human'))
    assert minor == pytest.approx(49.01, abs=3.)
    assert moderate == pytest.approx(52.45, abs=3.)
    assert severe == pytest.approx(62.86, abs=3.)


@pytest.mark.slow
@full_only
def test_gpt4_accuracy(fitted):
    assert judge_accuracy(fitted('GPT-4-Turbo')) * 100. == pytest.approx(86.79, abs=3.)


@pytest.mark.slow
@full_only
def test_gpt4_error_sensitivity(fitted):
    minor, moderate, severe = _sensitivity(fitted('GPT-4-Turbo'))
    assert minor == pytest.approx(50.11, abs=3.)
    assert moderate == pytest.approx(58.00, abs=3.)
    assert severe == pytest.approx(76.19, abs=3.)


@pytest.mark.slow
@full_only
def test_llama2_7b_accuracy(fitted):
    assert judge_accuracy(fitted('LLaMA-2-7B')) * 100. == pytest.approx(63.16, abs=4.)


@pytest.mark.slow
@full_only
@pytest.mark.parametrize('judge, expected', [('GPT-3.5-Turbo', 4022), ('GPT-4-Turbo', 3991)])
def test_relabel_counts(samples, fitted, judge, expected):
    pairs = relabel(fitted(judge), samples, RelabelConfig(judge=judge, band_halfwidth=0.15))
    assert len(pairs) == pytest.approx(expected, rel=0.05)


@pytest.mark.slow
@full_only
def test_group_similarity(fitted):
    judges = judge_groups()['judges']
    matrix = similarity_matrix(judges, {j: fitted(j) for j in judges})
    small, large = resolve_judge_group('<14B'), resolve_judge_group('>30B')
    assert intra_group(small, matrix) == pytest.approx(0.83, abs=0.05)
    assert intra_group(large, matrix) == pytest.approx(0.88, abs=0.05)
    assert inter_group(small, large, matrix) == pytest.approx(0.74, abs=0.05)
    intra, inter = series_similarity(matrix)
    assert intra == pytest.approx(0.81, abs=0.05)
    assert inter == pytest.approx(0.81, abs=0.05)
