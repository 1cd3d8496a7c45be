"""
preference dissection command line: validate data, fit per (judge, group) models and derive every table from them
"""
import os
import sys
import json
import argparse
import logging
from dataclasses import replace

from tqdm import tqdm
from joblib import Parallel, delayed

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
from models.model import FitConfig, fit_folds, save_model, load_model, judge_accuracy, select_prior_scale
from utils.utils import DissectError, ConfigError, JudgeError, pprint, set_log_file, dump_json, \
    ensure_dir, make_rng
from utils.properties import N_PROPERTIES, PropertyId
from utils.dataloader import (GroupTag, load_dataset, scan_dataset, dump_dataset, dataset_hash, group_counts,
                              judges_in, scenario_groups)
from utils.ratings import property_statistics
from utils.features import ERROR_POLICIES, build_design_matrix
from utils.analytics import (build_profile, rank_properties, similarity_matrix, intra_group, inter_group,
                             resolve_judge_group, series_similarity, alignment_shifts, error_sensitivity,
                             logprob_margin, feature_density)
from utils.judge import FixtureJudgeClient, collect_preferences, write_collected
from utils.manipulate import RelabelConfig, GROUP_POLICIES, relabel, export_dpo_pairs, write_system_messages
from utils.synth import SynthSpec, generate, to_samples, SYNTHETIC_JUDGE
from utils.report import emit_report, FORMATS

OUTDIR_ENV = 'PREFDISSECT_OUTDIR'
DEFAULT_OUTDIR = 'output'

logger = logging.getLogger(__name__)


def fit_config(args):
    config = FitConfig(prior_scale=args.prior_scale, chains=args.chains, warmup=args.warmup,
                       samples_per_chain=args.samples_per_chain, folds=args.folds,
                       target_accept=args.target_accept, max_tree_depth=args.max_tree_depth, seed=args.seed,
                       error_policy=args.error_policy)
    return config.fast() if args.fast else config


def resolve_groups(args):
    if args.group:
        return [GroupTag.parse(g) for g in args.group]
    return scenario_groups(include_unsafe=not args.exclude_unsafe)


def model_path(outdir, judge, group):
    return os.path.join(outdir, 'models', judge, '%s.json' % group.slug)


def _cached(path, config, data_hash):
    if not os.path.exists(path):
        return None
    model = load_model(path)
    if model.dataset_hash != data_hash or model.config != config.to_dict():
        return None
    return model


def get_models(samples, judges, groups, config, args, data_hash):
    """
    load cached models that match the data and config, fit the rest
    :return: dict judge -> dict GroupTag -> FittedPreferenceModel
    """
    models = {judge: {} for judge in judges}
    todo = []
    for judge in judges:
        for group in groups:
            path = model_path(args.outdir, judge, group)
            model = None if args.overwrite else _cached(path, config, data_hash)
            if model is None:
                todo.append((judge, group))
            else:
                models[judge][group] = model
    if todo:
        pprint('fitting %d models (%d cached)...' % (len(todo), len(judges) * len(groups) - len(todo)))
    if args.workers > 1 and len(todo) > 1:
        fitted = Parallel(n_jobs=args.workers)(
            delayed(fit_folds)(samples, judge, group, config, data_hash) for judge, group in todo)
    else:
        fitted = [fit_folds(samples, judge, group, config, data_hash)
                  for judge, group in tqdm(todo, desc='fit', file=sys.stderr, disable=not todo)]
    for (judge, group), model in zip(todo, fitted):
        save_model(model, model_path(args.outdir, judge, group))
        models[judge][group] = model
    return models


def _judges(args, samples):
    judges = list(args.judge) if args.judge else judges_in(samples)
    present = set(judges_in(samples))
    missing = [j for j in judges if j not in present]
    if missing:
        raise JudgeError('judges without labels in the dataset: %s' % ', '.join(missing))
    return judges


def _load(args):
    if not args.dataset:
        raise ConfigError('`--dataset` is required for `%s`' % args.command)
    pprint('load dataset...')
    samples = load_dataset(args.dataset)
    return samples, dataset_hash(samples)


def cmd_validate(args):
    samples, problems = scan_dataset(args.dataset)
    for lineno, message in problems:
        print('line %d: %s' % (lineno, message))
    pprint('%d valid samples, %d problems' % (len(samples), len(problems)))
    for tag, count in group_counts(samples).items():
        print('%s\t%s\t%d' % (tag.kind, tag.name, count))
    for judge in judges_in(samples):
        print('judge\t%s\t%d' % (judge, sum(judge in s.labels for s in samples)))
    if samples:
        for name, mean in property_statistics(samples).dropna().items():
            print('property\t%s\t%.3f' % (name, mean))
    return 1 if problems else 0


def cmd_fit(args):
    samples, data_hash = _load(args)
    config = fit_config(args)
    groups = resolve_groups(args)
    judges = _judges(args, samples)
    if args.tune_prior:
        if len(judges) != 1 or len(groups) != 1:
            raise ConfigError('`--tune_prior` needs exactly one `--judge` and one `--group`')
        best, scores = select_prior_scale(samples, judges[0], groups[0], config, n_jobs=args.workers)
        pprint('held-out log-likelihood by prior scale: %s' % scores)
        config = replace(config, prior_scale=best)
        pprint('prior scale set to %s' % best)
    for judge in judges:
        for group in groups:
            design = build_design_matrix(samples, judge, group, config.error_policy)
            pprint('%s / %s: %d rows, feature density %.3f' % (judge, group, len(design), feature_density(design)))
    models = get_models(samples, judges, groups, config, args, data_hash)
    for judge in judges:
        for group in groups:
            m = models[judge][group]
            print('%s\t%s\t%.2f' % (judge, group, m.train_accuracy * 100.))
    return 0


def _profiles(models):
    return [build_profile(m) for by_group in models.values() for m in by_group.values()]


def cmd_profile(args):
    samples, data_hash = _load(args)
    models = get_models(samples, _judges(args, samples), resolve_groups(args), fit_config(args), args, data_hash)
    profiles = _profiles(models)
    for p in profiles:
        top, last = rank_properties(p, min(args.k, len(p.ranked())))
        print('%s\t%s\ttop: %s\tlast: %s' % (p.judge, p.group, ', '.join(x.label for x in top),
                                             ', '.join(x.label for x in last)))
    dump_json(dict(dataset_hash=data_hash, profiles=[p.to_dict() for p in profiles]),
              os.path.join(args.outdir, 'profiles.json'))
    return 0


def _judge_set(name, present):
    judges = resolve_judge_group(name)
    kept = [j for j in judges if j in present]
    if len(kept) < len(judges):
        logger.warning('judge group %s: %d of %d judges have labels', name, len(kept), len(judges))
    return kept


def cmd_similarity(args):
    samples, data_hash = _load(args)
    present = set(judges_in(samples))
    judges = list(args.judge) if args.judge else []
    sets = {}
    for name in (args.intra or []) + (args.inter or []):
        sets[name] = _judge_set(name, present)
    if args.series or args.alignment or not (judges or sets):
        judges = judges or sorted(present)
    for members in sets.values():
        judges += [j for j in members if j not in judges]
    if len(judges) < 2:
        raise JudgeError('similarity needs at least two judges')
    groups = resolve_groups(args)
    models = get_models(samples, judges, groups, fit_config(args), args, data_hash)
    matrix = similarity_matrix(judges, models, groups)

    out = dict(dataset_hash=data_hash, matrix=matrix.to_dict())
    for name in args.intra or []:
        out.setdefault('intra', {})[name] = intra_group(sets[name], matrix)
        print('intra\t%s\t%.4f' % (name, out['intra'][name]))
    if args.inter:
        if len(args.inter) != 2:
            raise ConfigError('`--inter` takes exactly two judge groups')
        a, b = args.inter
        out['inter'] = {'%s|%s' % (a, b): inter_group(sets[a], sets[b], matrix)}
        print('inter\t%s\t%s\t%.4f' % (a, b, out['inter']['%s|%s' % (a, b)]))
    if args.series:
        intra, inter = series_similarity(matrix)
        out['series'] = dict(intra=intra, inter=inter)
        print('series\tintra\t%.4f\tinter\t%.4f' % (intra, inter))
    if args.alignment:
        out['alignment'] = alignment_shifts(matrix)
        for base, value in out['alignment'].items():
            print('alignment\t%s\t%.4f' % (base, value))
    if not (args.intra or args.inter or args.series or args.alignment):
        for i, m in enumerate(matrix.judges):
            print('\t'.join([m] + ['%.4f' % v for v in matrix.values[i]]))
    dump_json(out, os.path.join(args.outdir, 'similarity.json'))
    return 0


def cmd_errors(args):
    samples, data_hash = _load(args)
    judges = _judges(args, samples)
    groups = resolve_groups(args)
    models = get_models(samples, judges, groups, fit_config(args), args, data_hash)
    rows = {}
    for judge in judges:
        rows[judge] = error_sensitivity([build_profile(models[judge][g]) for g in groups])
        print('%s\t%.2f\t%.2f\t%.2f' % ((judge,) + rows[judge]))
        if args.margin:
            try:
                print('%s\tlogprob margin\t%.2f' % (judge, logprob_margin(judge, samples)))
            except DissectError as e:
                logger.warning(str(e))
    dump_json(dict(dataset_hash=data_hash, errors=rows), os.path.join(args.outdir, 'errors.json'))
    return 0


def cmd_accuracy(args):
    samples, data_hash = _load(args)
    judges = _judges(args, samples)
    groups = resolve_groups(args)
    models = get_models(samples, judges, groups, fit_config(args), args, data_hash)
    rows = {}
    for judge in judges:
        rows[judge] = judge_accuracy(models[judge], groups) * 100.
        print('%s\t%.2f' % (judge, rows[judge]))
    dump_json(dict(dataset_hash=data_hash, accuracy=rows), os.path.join(args.outdir, 'accuracy.json'))
    return 0


def cmd_relabel(args):
    samples, data_hash = _load(args)
    if not args.judge or len(args.judge) != 1:
        raise ConfigError('`relabel` needs exactly one `--judge`')
    config = RelabelConfig(judge=args.judge[0], band_halfwidth=args.band, invert=args.invert,
                           group_policy=args.group_policy)
    groups = resolve_groups(args)
    models = get_models(samples, [config.judge], groups, fit_config(args), args, data_hash)[config.judge]
    pairs = relabel(models, samples, config)
    output = args.output or os.path.join(args.outdir, 'dpo_%s%s.jsonl' % (config.judge, '_inverted' * config.invert))
    count = export_dpo_pairs(pairs, output, config=config, data_hash=data_hash)
    print('%s\t%d' % (output, count))
    return 0


def cmd_sysmsg(args):
    samples, data_hash = _load(args)
    judges = _judges(args, samples)
    models = get_models(samples, judges, resolve_groups(args), fit_config(args), args, data_hash)
    paths = write_system_messages(_profiles(models), args.k, os.path.join(args.outdir, 'sysmsg'))
    for path in paths:
        print(path)
    return 0


def cmd_synth(args):
    rng = make_rng(args.seed, 'alpha_star')
    alpha_star = tuple(float(a) for a in rng.uniform(-1., 1., size=N_PROPERTIES))
    spec = SynthSpec(alpha_star=alpha_star, n_samples=args.n_samples, feature_sparsity=args.sparsity,
                     seed=args.seed)
    design = generate(spec)
    samples = to_samples(design)
    output = args.output or os.path.join(args.outdir, 'synthetic.jsonl')
    dump_dataset(samples, output)
    dump_json(dict(alpha_star={p.label: a for p, a in zip(PropertyId, alpha_star)}, judge=SYNTHETIC_JUDGE,
                   n_samples=spec.n_samples, feature_sparsity=spec.feature_sparsity, seed=spec.seed),
              output + '.alpha.json')
    print('%s\t%d' % (output, len(samples)))
    return 0


def cmd_collect(args):
    samples, _ = _load(args)
    if not args.fixture:
        raise ConfigError('`collect` needs `--fixture`; live judges are not built in')
    judge = args.judge[0] if args.judge else None
    client = FixtureJudgeClient.from_file(args.fixture, judge=judge)
    result = collect_preferences(client, samples, max_workers=max(args.workers, 1), progress=True)
    output = args.output or os.path.join(args.outdir, 'collected_%s.jsonl' % (judge or 'judge'))
    ensure_dir(os.path.dirname(output) or '.')
    write_collected(result, output)
    print('%s\t%d labels\t%d errors' % (output, len(result.labels), len(result.errors)))
    return 0


def cmd_report(args):
    samples, data_hash = _load(args)
    judges = _judges(args, samples)
    groups = resolve_groups(args)
    config = fit_config(args)
    models = get_models(samples, judges, groups, config, args, data_hash)
    model_list = [models[j][g] for j in judges for g in groups]
    matrices = {}
    if len(judges) >= 2:
        matrices['judges'] = similarity_matrix(judges, models, groups)
    meta = dict(dataset_hash=data_hash, config=config.to_dict(), groups=[str(g) for g in groups])
    written = emit_report(model_list, _profiles(models), matrices, os.path.join(args.outdir, 'report'),
                          formats=args.formats, meta=meta)
    for path in written:
        print(path)
    return 0


def read_config_file(filename):
    """
    :return: dict of option values from a TOML or JSON file
    """
    if not os.path.exists(filename):
        raise ConfigError('cannot find config at `%s`' % filename)
    if filename.endswith('.json'):
        with open(filename) as f:
            return json.load(f)
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(filename, 'rb') as f:
        return tomllib.load(f)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)

    # data
    common.add_argument('--dataset', default=None)
    common.add_argument('--judge', nargs='+', default=None)
    common.add_argument('--group', nargs='+', default=None)
    common.add_argument('--exclude_unsafe', action='store_true', default=False)
    common.add_argument('--error_policy', choices=ERROR_POLICIES, default='zero-error-slots')

    # model setting
    common.add_argument('--prior_scale', type=float, default=0.1)
    common.add_argument('--chains', type=int, default=4)
    common.add_argument('--warmup', type=int, default=500)
    common.add_argument('--samples_per_chain', type=int, default=1500)
    common.add_argument('--folds', type=int, default=10)
    common.add_argument('--target_accept', type=float, default=0.8)
    common.add_argument('--max_tree_depth', type=int, default=10)
    common.add_argument('--seed', type=int, default=2024)
    common.add_argument('--fast', action='store_true', default=False, help='2 chains x 500 samples')

    # other
    common.add_argument('--outdir', default=DEFAULT_OUTDIR)
    common.add_argument('--workers', type=int, default=1)
    common.add_argument('--overwrite', action='store_true', default=False)
    common.add_argument('--config', default=None, help='TOML or JSON file of option defaults')
    common.add_argument('--log_level', default='INFO')

    parser = argparse.ArgumentParser(prog='dissect')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('validate', parents=[common])
    p = sub.add_parser('fit', parents=[common])
    p.add_argument('--tune_prior', action='store_true', default=False)
    p = sub.add_parser('profile', parents=[common])
    p.add_argument('--k', type=int, default=3)
    p = sub.add_parser('similarity', parents=[common])
    p.add_argument('--intra', nargs='+', default=None, help='judge groups such as <14B or a series name')
    p.add_argument('--inter', nargs=2, default=None)
    p.add_argument('--series', action='store_true', default=False)
    p.add_argument('--alignment', action='store_true', default=False)
    p = sub.add_parser('errors', parents=[common])
    p.add_argument('--margin', action='store_true', default=False, help='also print the log-probability margin')
    sub.add_parser('accuracy', parents=[common])
    p = sub.add_parser('relabel', parents=[common])
    p.add_argument('--band', type=float, default=0.15)
    p.add_argument('--invert', action='store_true', default=False)
    p.add_argument('--group_policy', choices=GROUP_POLICIES, default='scenario-else-others')
    p.add_argument('--output', default=None)
    p = sub.add_parser('sysmsg', parents=[common])
    p.add_argument('--k', type=int, default=3)
    p = sub.add_parser('synth', parents=[common])
    p.add_argument('--n_samples', type=int, default=2000)
    p.add_argument('--sparsity', type=float, default=0.4)
    p.add_argument('--output', default=None)
    p = sub.add_parser('collect', parents=[common])
    p.add_argument('--fixture', default=None)
    p.add_argument('--output', default=None)
    p = sub.add_parser('report', parents=[common])
    p.add_argument('--formats', nargs='+', choices=FORMATS, default=list(FORMATS))
    return parser, sub


def parse_args(argv=None, environ=None):
    """
    precedence: explicit flags, then the output directory environment variable, then the config file
    """
    environ = os.environ if environ is None else environ
    parser, sub = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument('--config', default=None)
    known, _ = pre.parse_known_args(argv)

    defaults = {}
    if known.config:
        defaults = read_config_file(known.config)
        dests = {a.dest for p in sub.choices.values() for a in p._actions}
        unknown = sorted(set(defaults) - dests)
        if unknown:
            raise ConfigError('unknown config keys `%s`' % ', '.join(unknown))
    if environ.get(OUTDIR_ENV):
        defaults['outdir'] = environ[OUTDIR_ENV]
    for p in sub.choices.values():
        own = {a.dest for a in p._actions}
        p.set_defaults(**{k: v for k, v in defaults.items() if k in own})
    return parser.parse_args(argv)


COMMAND_FNS = dict(validate=cmd_validate, fit=cmd_fit, profile=cmd_profile, similarity=cmd_similarity,
                   errors=cmd_errors, accuracy=cmd_accuracy, relabel=cmd_relabel, sysmsg=cmd_sysmsg,
                   synth=cmd_synth, collect=cmd_collect, report=cmd_report)


def main(args):
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, str(args.log_level).upper(), logging.INFO))
    ensure_dir(args.outdir)
    set_log_file(os.path.join(args.outdir, args.command + '_run.log'))
    if args.command == 'validate' and not args.dataset:
        raise ConfigError('`--dataset` is required for `validate`')
    code = COMMAND_FNS[args.command](args)
    pprint('finished.')
    return code


def run_cli(argv=None, environ=None):
    """
    :return: process exit code, 0 on success, 1 on a data or configuration error, 2 on bad flags
    """
    try:
        args = parse_args(argv, environ)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except DissectError as e:
        print('error: %s' % e, file=sys.stderr)
        return 1
    try:
        return main(args)
    except DissectError as e:
        print('error: %s' % e, file=sys.stderr)
        return 1
    finally:
        set_log_file(None)


if __name__ == '__main__':
    sys.exit(run_cli())
