"""
the 29 properties a preference is dissected into, the analysis groups, and the shipped text assets
"""
import os
import json
from enum import IntEnum
from functools import lru_cache

ASSET_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'assets')

N_PROPERTIES = 29


class PropertyId(IntEnum):
    # basic
    HARMLESS = 0
    GRAMMARLY_CORRECT = 1
    WELL_FORMATTED = 2
    NON_REPETITIVE = 3
    FUNNY = 4
    USE_RHETORICAL_DEVICES = 5
    ADMIT_LIMITS = 6
    CLEAR = 7
    FRIENDLY = 8
    USE_INFORMAL_EXPRESSIONS = 9
    CONTAIN_RICH_INFO = 10
    PERSUASIVE = 11
    POLITE = 12
    COMPLEX_WORD_AND_SENTENCE = 13
    STEP_BY_STEP = 14
    NOVEL = 15
    INTERACTIVE = 16
    USE_SUPPORTING_MATERIALS = 17
    AUTHORITATIVE = 18
    RELEVANT = 19
    LENGTHY = 20
    # query-specific
    CLARIFY_INTENT = 21
    SHOW_EMPATHETIC = 22
    SATISFY_CONSTRAINTS = 23
    SUPPORT_STANCES = 24
    CORRECT_MISTAKES = 25
    # error detection
    NO_MINOR_ERRORS = 26
    NO_MODERATE_ERRORS = 27
    NO_SEVERE_ERRORS = 28

    @property
    def label(self):
        return PROPERTY_NAMES[self.value]

    @classmethod
    def from_label(cls, label):
        try:
            return cls(PROPERTY_NAMES.index(label))
        except ValueError:
            raise ValueError('unknown property name `%s`' % label)


PROPERTY_NAMES = (
    'harmless', 'grammarly correct', 'well formatted', 'non-repetitive', 'funny',
    'use rhetorical devices', 'admit limits', 'clear', 'friendly', 'use informal expressions',
    'contain rich info', 'persuasive', 'polite', 'complex word & sentence', 'step-by-step',
    'novel', 'interactive', 'use supporting materials', 'authoritative', 'relevant', 'lengthy',
    'clarify intent', 'show empathetic', 'satisfy constraints', 'support stances', 'correct mistakes',
    'no minor errors', 'no moderate errors', 'no severe errors',
)

BASIC = tuple(PropertyId(i) for i in range(0, 21))
QUERY_SPECIFIC = tuple(PropertyId(i) for i in range(21, 26))
ERROR_DETECTION = tuple(PropertyId(i) for i in range(26, 29))

# keys of the per-response `ratings` object: every basic property except lengthy,
# with non-repetitive annotated in its raw "repetitive" form
REPETITIVE = 'repetitive'
RATING_KEYS = tuple(REPETITIVE if p is PropertyId.NON_REPETITIVE else p.label
                    for p in BASIC if p is not PropertyId.LENGTHY)

SEVERITIES = ('minor', 'moderate', 'severe')
ERROR_TYPES = ('factual', 'query_contradiction', 'math', 'code')

SCENARIOS = (
    'Exam Questions', 'Code', 'Creative Writing', 'Functional Writing', 'Communication',
    'Knowledge-aware', 'Advice', 'Daily Tasks', 'NLP Tasks', 'Others',
)
UNSAFE = 'Unsafe Query'
OTHERS = 'Others'

# prerequisite names, in the order of the query-specific slots they gate
PREREQUISITES = (
    'unclear intent', 'express feelings', 'with explicit constraints',
    'show subjective stances', 'contain mistakes or bias',
)
PREREQUISITE_PROPERTY = dict(zip(PREREQUISITES, QUERY_SPECIFIC))

# fine-grained classifier scenarios folded into the 10 analysis scenarios
SCENARIO_MERGE = {
    'Exam Questions': ['math-reasoning', 'solving-exam-question-with-math', 'solving-exam-question-without-math'],
    'Code': ['code-simplification', 'code-generation', 'explaining-code', 'code-correction-rewriting',
             'code-to-code-translation'],
    'Creative Writing': ['writing-song-lyrics', 'writing-social-media-post', 'writing-blog-post',
                         'writing-personal-essay', 'creative-writing', 'writing-advertisement',
                         'writing-marketing-materials', 'writing-presentation-script', 'counterfactual'],
    'Functional Writing': ['writing-product-description', 'writing-job-application', 'writing-news-article',
                           'writing-biography', 'writing-email', 'writing-legal-document',
                           'writing-technical-document', 'writing-scientific-paper', 'functional-writing',
                           'writing-cooking-recipe'],
    'Communication': ['value-judgement', 'chitchat'],
    'Knowledge-aware': ['open-question', 'explaining-general', 'verifying-fact'],
    'Advice': ['asking-how-to-question', 'seeking-advice'],
    'Daily Tasks': ['analyzing-general', 'roleplay', 'planning', 'recommendation', 'brainstorming'],
    'NLP Tasks': ['ranking', 'text-to-text-translation', 'classification-identification', 'title-generation',
                  'question-generation', 'reading-comprehension', 'keywords-extraction',
                  'information-extraction', 'topic-modeling', 'data-analysis', 'post-summarization',
                  'text-summarization', 'note-summarization', 'text-simplification', 'language-polishing',
                  'instructional-rewriting', 'text-correction', 'paraphrasing'],
    'Others': ['default'],
}
FINE_TO_SCENARIO = {fine: name for name, fines in SCENARIO_MERGE.items() for fine in fines}


def asset_path(name):
    return os.path.join(ASSET_DIR, name)


def read_asset(name):
    path = asset_path(name)
    if not os.path.exists(path):
        raise ValueError('cannot find asset at `%s`' % path)
    with open(path, encoding='utf-8') as f:
        return f.read()


@lru_cache(maxsize=None)
def property_descriptions():
    """
    :return: dict property label -> plain-language description
    """
    descriptions = json.loads(read_asset('property_descriptions.json'))
    missing = [name for name in PROPERTY_NAMES if name not in descriptions]
    if missing:
        raise ValueError('property descriptions missing for `%s`' % ', '.join(missing))
    return descriptions


def describe(prop):
    return property_descriptions()[PropertyId(prop).label]


@lru_cache(maxsize=None)
def judge_groups():
    """
    :return: the shipped judge group definitions (size groups, series groups, base models)
    """
    return json.loads(read_asset('judge_groups.json'))


ANNOTATION_PROMPTS = ('basic', 'prerequisites', 'query_specific', 'errors')


def annotation_prompt(kind):
    """
    :param kind: one of ANNOTATION_PROMPTS
    :return: the shipped annotation instructions for that pass
    """
    if kind not in ANNOTATION_PROMPTS:
        raise ValueError('unknown annotation prompt `%s`' % kind)
    return read_asset('annotation_%s.txt' % kind)
