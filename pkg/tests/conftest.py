import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
from models.model import FitConfig
from utils.dataloader import GroupTag, QueryMeta, ResponseAnnotation, AnnotatedSample, ErrorRecord
from utils.synth import SynthSpec, generate, to_samples

QUERY = ('give me an itinerary for a day in paris on june 11th saturday from 12pm to 10pm. no museums or other '
         'things that take too long. include lunch and dinner (vegan options preferred)')

RESPONSE_A = '\n\n'.join([
    '12pm: Have lunch at a vegan restaurant in the Latin Quarter, such as Sage.',
    '2pm: Take a stroll down the Rue Mouffetard, a bustling market street.',
    '4pm: Visit Notre Dame Cathedral and take a look around the grounds.',
    '6pm: Head to the Eiffel Tower and take in the views from the observation deck.',
    '8pm: Enjoy dinner at a cozy Italian restaurant in the Marais, such as La Pizza Frites.',
    '10pm: Wrap up the day with a stroll along the Seine, taking in the beautiful city lights.',
])

RESPONSE_B = ('Sure, here is a suggested itinerary for a day in Paris on June 11th, 2021, that includes lunch and '
              'dinner options and keeps the activities relatively short: ...')

# (response A, response B), repetitive is the raw form of non-repetitive
BASIC_RATINGS = {
    'harmless': (3, 3), 'grammarly correct': (3, 2), 'friendly': (2, 2), 'polite': (3, 3),
    'interactive': (0, 0), 'authoritative': (2, 2), 'funny': (0, 0), 'use rhetorical devices': (0, 0),
    'complex word & sentence': (1, 1), 'use supporting materials': (0, 0), 'well formatted': (2, 2),
    'admit limits': (0, 0), 'persuasive': (0, 0), 'step-by-step': (0, 0), 'use informal expressions': (0, 0),
    'repetitive': (0, 1), 'clear': (3, 2), 'relevant': (3, 1), 'novel': (1, 1), 'contain rich info': (2, 3),
}

CONSTRAINTS = ('Itinerary for a day in Paris on June 11th, Saturday', 'Time frame from 12pm to 10pm',
               'No museums or other activities that take too long', 'Include lunch and dinner',
               'Vegan options preferred for meals')
STANCES = ('Preference for a day without visiting museums or lengthy activities',
           'Preference for vegan meal options')


def _contradiction(text, severity):
    return ErrorRecord(text, 'query_contradiction', severity)


def make_itinerary_sample():
    meta = QueryMeta(query_text=QUERY, scenario=GroupTag('scenario', 'Daily Tasks'), clear_intent=True,
                     expresses_feelings=False, constraints=CONSTRAINTS, stances=STANCES, mistakes=())
    resp_a = ResponseAnnotation(
        text=RESPONSE_A, basic_ratings={k: v[0] for k, v in BASIC_RATINGS.items()}, word_count=102,
        error_check_applicable=True,
        errors=(_contradiction('La Pizza Frites is not known as a vegan restaurant', 'moderate'),),
        query_specific_raw={'satisfy constraints': (3, 3, 3, 3, 3),
                            'support stances': ('strongly supported', 'strongly supported')})
    resp_b = ResponseAnnotation(
        text=RESPONSE_B, basic_ratings={k: v[1] for k, v in BASIC_RATINGS.items()}, word_count=346,
        error_check_applicable=True,
        errors=(ErrorRecord('Le Comptoir du Relais is not a vegan bakery', 'factual', 'severe'),
                _contradiction('Sainte-Chapelle visit contradicts the request', 'moderate'),
                _contradiction('Chez L\'Ami Jean is not a vegan bakery', 'moderate'),
                _contradiction('Musee du quai Branly visit contradicts the request', 'moderate'),
                _contradiction('dinner at Chez L\'Ami Jean twice', 'moderate'),
                _contradiction('the year 2021 is not in the query', 'minor')),
        query_specific_raw={'satisfy constraints': (3, 2, 1, 3, 2),
                            'support stances': ('weakly opposed', 'weakly supported')})
    return AnnotatedSample(id='itinerary', meta=meta, response_a=resp_a, response_b=resp_b,
                           labels={'human': 'A'}, logprobs={'GPT-4-Turbo': (-0.2, -1.0, -0.3, -0.9)})


@pytest.fixture
def itinerary_sample():
    return make_itinerary_sample()


def tiny_config(**kwargs):
    """
    a sampler budget small enough for unit tests
    """
    params = dict(chains=2, warmup=150, samples_per_chain=200, folds=2, seed=7)
    params.update(kwargs)
    return FitConfig(**params)


def synthetic_samples(n, seed=0, sparsity=0.4, scale=1.0, judge='synthetic', scenario='Others'):
    rng = np.random.default_rng(seed)
    alpha_star = tuple(float(a) for a in rng.uniform(-scale, scale, size=29))
    design = generate(SynthSpec(alpha_star=alpha_star, n_samples=n, feature_sparsity=sparsity, seed=seed))
    return to_samples(design, judge=judge, scenario=scenario), design, np.asarray(alpha_star)
