"""
inputs for steering a judged benchmark: model-synthesized preference pairs and ranked-property system messages
"""
import os
import json
import logging
from dataclasses import dataclass, asdict

from utils.utils import ConfigError, GroupError, DissectError, dump_json, ensure_dir
from utils.properties import read_asset, describe, OTHERS
from utils.dataloader import GroupTag
from utils.features import sample_feature
from utils.analytics import rank_properties
from models.model import predict

logger = logging.getLogger(__name__)

GROUP_POLICIES = ('scenario-else-others', 'scenario')
DIRECTIONS = ('top', 'last')


@dataclass(frozen=True)
class RelabelConfig:
    judge: str
    band_halfwidth: float = 0.15
    invert: bool = False
    group_policy: str = 'scenario-else-others'

    def __post_init__(self):
        if not 0 <= self.band_halfwidth < 0.5:
            raise ConfigError('band_halfwidth must lie in [0, 0.5), got `%s`' % self.band_halfwidth)
        if self.group_policy not in GROUP_POLICIES:
            raise ConfigError('unknown group policy `%s`' % self.group_policy)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SyntheticPair:
    sample_id: str
    prompt: str
    chosen: str
    rejected: str
    probability: float
    group: GroupTag
    chosen_side: str

    def inverted(self):
        return SyntheticPair(self.sample_id, self.prompt, self.rejected, self.chosen, self.probability,
                             self.group, 'B' if self.chosen_side == 'A' else 'A')

    def to_record(self):
        return {'prompt': self.prompt, 'chosen': self.chosen, 'rejected': self.rejected}


def _model_for(models, sample, policy):
    group = sample.meta.scenario
    if group in models:
        return models[group]
    if policy == 'scenario-else-others':
        others = GroupTag('scenario', OTHERS)
        if others in models:
            return models[others]
    raise GroupError('no model for group `%s` of sample `%s`' % (group, sample.id))


def in_band(probability, band_halfwidth):
    # closed interval, both endpoints excluded from export
    return 0.5 - band_halfwidth <= probability <= 0.5 + band_halfwidth


def relabel(models, samples, config):
    """
    :param models: dict GroupTag -> FittedPreferenceModel of config.judge
    :param samples: list of AnnotatedSample
    :param config: RelabelConfig
    :return: list of SyntheticPair for the samples whose predicted probability falls outside the band
    """
    pairs = []
    for sample in samples:
        model = _model_for(models, sample, config.group_policy)
        p = float(predict(model.alpha, sample_feature(sample)))
        if in_band(p, config.band_halfwidth):
            continue
        if p > 0.5:
            pair = SyntheticPair(sample.id, sample.meta.query_text, sample.response_a.text,
                                 sample.response_b.text, p, model.group, 'A')
        else:
            pair = SyntheticPair(sample.id, sample.meta.query_text, sample.response_b.text,
                                 sample.response_a.text, p, model.group, 'B')
        pairs.append(pair.inverted() if config.invert else pair)
    logger.info('kept %d of %d samples outside the band', len(pairs), len(samples))
    return pairs


def export_dpo_pairs(pairs, path, config=None, data_hash=None):
    """
    write {prompt, chosen, rejected} records ordered by sample id, with a `.meta.json` sidecar
    :return: number of records written
    """
    if not pairs:
        raise DissectError('no pairs to export')
    ensure_dir(os.path.dirname(path) or '.')
    pairs = sorted(pairs, key=lambda p: p.sample_id)
    with open(path, 'w', encoding='utf-8') as f:
        for pair in pairs:
            f.write(json.dumps(pair.to_record(), sort_keys=True, ensure_ascii=False))
            f.write('\n')
    meta = dict(count=len(pairs), band_interval='closed', dataset_hash=data_hash,
                sample_ids=[p.sample_id for p in pairs])
    if config is not None:
        meta.update(config.to_dict())
    dump_json(meta, path + '.meta.json')
    return len(pairs)


def _template():
    lines = [line for line in read_asset('system_message_template.txt').splitlines()
             if line.strip() and not line.startswith('#')]
    if len(lines) < 2:
        raise ConfigError('system message template needs a header line and an item line')
    return lines[0], lines[1]


def compose_system_message(profile, scenario, k, direction):
    """
    :param profile: PreferenceProfile fitted for scenario
    :param k: number of ranked properties to name
    :param direction: `top` or `last`
    :return: the system message text
    """
    if direction not in DIRECTIONS:
        raise ConfigError('direction must be `top` or `last`, got `%s`' % direction)
    if GroupTag.parse(scenario) != profile.group:
        raise GroupError('profile was fitted for `%s`, not `%s`' % (profile.group, scenario))
    header, item = _template()
    top, last = rank_properties(profile, k)
    chosen = top if direction == 'top' else last
    items = '; '.join(item.format(name=p.label, description=describe(p)) for p in chosen)
    return header.format(items=items).rstrip() + '\n'


def write_system_messages(profiles, k, outdir):
    """
    one file `{judge}-{scenario}-{direction}.txt` per profile and direction
    :return: list of written paths
    """
    ensure_dir(outdir)
    paths = []
    for profile in profiles:
        for direction in DIRECTIONS:
            path = os.path.join(outdir, '%s-%s-%s.txt' % (profile.judge, profile.group.slug, direction))
            with open(path, 'w', encoding='utf-8') as f:
                f.write(compose_system_message(profile, profile.group, k, direction))
            paths.append(path)
    return paths
