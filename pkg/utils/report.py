"""
report emission: JSON, CSV tables, a markdown summary and per-profile SVG bar charts
"""
import os
import re
import logging
from collections import OrderedDict

import numpy as np
import pandas as pd
import matplotlib
matplotlib.use('Agg')
from matplotlib import pyplot as plt

from utils.utils import dump_json, ensure_dir
from utils.properties import PropertyId, ERROR_DETECTION
from utils.analytics import rank_properties, error_sensitivity

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
FORMATS = ('json', 'csv', 'md', 'svg')
FLOAT_FORMAT = '%.6f'

# fixed salt and no date keep the SVG bytes stable across runs
matplotlib.rcParams['svg.hashsalt'] = 'prefdissect'


def _slug(text):
    return re.sub(r'[^A-Za-z0-9]+', '-', text).strip('-').lower()


def chart_name(profile):
    return '%s__%s.svg' % (profile.judge, profile.group.slug)


def plot_profile(profile, path):
    """
    horizontal bars of the ranked properties' degrees in percent, with a 50% reference line
    :return: number of bars drawn
    """
    ranked = profile.ranked()
    values = [profile[p] * 100. for p in ranked]
    fig, ax = plt.subplots(figsize=(6, 0.28 * max(len(ranked), 1) + 1.2))
    ypos = np.arange(len(ranked))[::-1]
    bars = ax.barh(ypos, values, height=0.7, color='#4c72b0')
    for bar, prop in zip(bars, ranked):
        bar.set_gid('bar-%s' % _slug(prop.label))
    ax.axvline(50., color='#c44e52', linestyle='--', linewidth=1., gid='reference-50')
    ax.set_yticks(ypos)
    ax.set_yticklabels([p.label for p in ranked], fontsize=8)
    ax.set_xlim(0., 100.)
    ax.set_xlabel('degree of preference (%)')
    ax.set_title('%s / %s' % (profile.judge, profile.group), fontsize=10)
    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return len(ranked)


def _degree_table(profiles):
    rows = [dict(judge=p.judge, group=str(p.group), property=prop.label, degree=p[prop],
                 uninformative=bool(p.uninformative[prop]))
            for p in profiles for prop in PropertyId]
    return pd.DataFrame(rows, columns=['judge', 'group', 'property', 'degree', 'uninformative'])


def _accuracy_table(models):
    rows = [dict(judge=m.judge, group=str(m.group), n_rows=m.n_rows, train_accuracy=m.train_accuracy,
                 heldout_accuracy=m.heldout_accuracy) for m in models]
    return pd.DataFrame(rows, columns=['judge', 'group', 'n_rows', 'train_accuracy', 'heldout_accuracy'])


def _error_rows(profiles):
    by_judge = OrderedDict()
    for p in profiles:
        if p.group.kind != 'query_specific':
            by_judge.setdefault(p.judge, []).append(p)
    return [dict(judge=judge, **dict(zip(('minor', 'moderate', 'severe'), error_sensitivity(ps))))
            for judge, ps in by_judge.items()]


def _similarity_table(matrices):
    rows = []
    for name, matrix in matrices.items():
        for i, m in enumerate(matrix.judges):
            for j, n in enumerate(matrix.judges):
                rows.append(dict(matrix=name, judge_m=m, judge_n=n, value=float(matrix.values[i, j])))
    return pd.DataFrame(rows, columns=['matrix', 'judge_m', 'judge_n', 'value'])


def _markdown(models, profiles, error_rows, meta):
    lines = ['# Preference dissection report', '']
    lines.append('- dataset hash: `%s`' % meta.get('dataset_hash'))
    lines.append('- models: %d, profiles: %d' % (len(models), len(profiles)))
    lines.append('')
    if models:
        lines += ['## Accuracy', '', '| judge | group | rows | accuracy |', '|---|---|---|---|']
        lines += ['| %s | %s | %d | %.2f |' % (m.judge, m.group, m.n_rows, m.train_accuracy * 100.) for m in models]
        lines.append('')
    if error_rows:
        lines += ['## Error sensitivity (%)', '', '| judge | minor | moderate | severe |', '|---|---|---|---|']
        lines += ['| %s | %.2f | %.2f | %.2f |' % (r['judge'], r['minor'], r['moderate'], r['severe'])
                  for r in error_rows]
        lines.append('')
    if profiles:
        lines += ['## Top / last 3 properties', '', '| judge | group | top 3 | last 3 |', '|---|---|---|---|']
        for p in profiles:
            top, last = rank_properties(p, min(3, len(p.ranked())))
            lines.append('| %s | %s | %s | %s |' % (p.judge, p.group, ', '.join(x.label for x in top),
                                                    ', '.join(x.label for x in last)))
        lines.append('')
    return '\n'.join(lines)


def emit_report(models, profiles, matrices, outdir, formats=FORMATS, meta=None):
    """
    :param models: list of FittedPreferenceModel
    :param profiles: list of PreferenceProfile
    :param matrices: dict name -> SimilarityMatrix
    :param outdir: output directory
    :param formats: subset of json, csv, md, svg
    :param meta: run metadata (dataset hash, config snapshot) stamped into every output
    :return: list of written paths
    """
    meta = dict(meta or {})
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValueError('unknown report formats `%s`' % ', '.join(sorted(unknown)))
    ensure_dir(outdir)
    written = []
    error_rows = _error_rows(profiles)

    if 'json' in formats:
        path = os.path.join(outdir, 'report.json')
        dump_json(dict(schema_version=REPORT_SCHEMA_VERSION, meta=meta,
                       models=[dict(judge=m.judge, group=m.group.to_dict(), n_rows=m.n_rows,
                                    train_accuracy=m.train_accuracy, heldout_accuracy=m.heldout_accuracy,
                                    alpha=[float(a) for a in m.alpha]) for m in models],
                       profiles=[p.to_dict() for p in profiles],
                       error_sensitivity=error_rows,
                       error_properties=[p.label for p in ERROR_DETECTION],
                       similarity={name: m.to_dict() for name, m in matrices.items()}), path)
        written.append(path)

    if 'csv' in formats:
        tables = (('degrees.csv', _degree_table(profiles)), ('accuracy.csv', _accuracy_table(models)),
                  ('errors.csv', pd.DataFrame(error_rows, columns=['judge', 'minor', 'moderate', 'severe'])),
                  ('similarity.csv', _similarity_table(matrices)))
        for name, frame in tables:
            path = os.path.join(outdir, name)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
            written.append(path)

    if 'md' in formats:
        path = os.path.join(outdir, 'summary.md')
        with open(path, 'w', encoding='utf-8') as f:
            f.write(_markdown(models, profiles, error_rows, meta))
        written.append(path)

    if 'svg' in formats and profiles:
        chart_dir = ensure_dir(os.path.join(outdir, 'charts'))
        for p in profiles:
            path = os.path.join(chart_dir, chart_name(p))
            plot_profile(p, path)
            written.append(path)

    logger.info('report written to %s (%d files)', outdir, len(written))
    return written
