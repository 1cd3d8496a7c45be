"""
convert the public release (JSON, JSONL or parquet) into the canonical newline-delimited dataset
"""
import os
import sys
import argparse
import logging

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), '..'))
from utils.utils import DissectError, pprint, dump_json
from utils.dataloader import import_released, dump_dataset, dataset_hash, group_counts, judges_in

logging.basicConfig(stream=sys.stderr, level=logging.INFO)


def main(args):
    if not args.overwrite and os.path.exists(args.output):
        print('already imported, exit.')
        return 0

    pprint('import %s...' % args.input)
    samples = import_released(args.input)
    dump_dataset(samples, args.output)

    info = dict(source=args.input, n_samples=len(samples), dataset_hash=dataset_hash(samples),
                judges=judges_in(samples), groups={str(t): c for t, c in group_counts(samples).items()})
    dump_json(info, args.output + '.info.json')
    pprint('%d samples written to %s' % (len(samples), args.output))
    return 0


def parse_args(argv=None):
    parser = argparse.ArgumentParser()

    # data
    parser.add_argument('--input', required=True)
    parser.add_argument('--output', default='data/dataset.jsonl')

    # other
    parser.add_argument('--overwrite', action='store_true', default=False)
    return parser.parse_args(argv)


if __name__ == '__main__':
    args = parse_args()
    try:
        sys.exit(main(args))
    except DissectError as e:
        print('error: %s' % e, file=sys.stderr)
        sys.exit(1)
