import os
import json
import hashlib
import datetime
from fractions import Fraction

import numpy as np

global_log_file = None


def set_log_file(path):
    """
    register a file that every pprint line is appended to, None to disable
    """
    global global_log_file
    if path is not None:
        ensure_dir(os.path.dirname(path) or '.')
    global_log_file = path


def pprint(*args):
    # print with local time
    time = '[' + str(datetime.datetime.now())[:19] + '] -'
    print(time, *args, flush=True)

    if global_log_file is None:
        return
    with open(global_log_file, 'a') as f:
        print(time, *args, flush=True, file=f)


class DissectError(ValueError):
    """
    base class of every error raised on purpose by this package
    """


class DatasetError(DissectError):
    def __init__(self, message, line=None):
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super(DatasetError, self).__init__(message)
        self.line = line


class SchemaError(DissectError):
    def __init__(self, message, field=None, line=None):
        if field is not None:
            message = '`%s` %s' % (field, message)
        if line is not None:
            message = 'line %d: %s' % (line, message)
        super(SchemaError, self).__init__(message)
        self.field = field
        self.line = line


class InapplicableError(DissectError):
    pass


class AssemblyError(DissectError):
    def __init__(self, message, prop=None):
        super(AssemblyError, self).__init__(message)
        self.prop = prop


class GroupError(DissectError):
    pass


class JudgeError(DissectError):
    pass


class SamplerError(DissectError):
    def __init__(self, message, diagnostic=None):
        super(SamplerError, self).__init__(message)
        self.diagnostic = diagnostic or {}


class CorrelationError(DissectError):
    pass


class TieError(DissectError):
    pass


class UnsupportedDataError(DissectError):
    pass


class ConfigError(DissectError):
    pass


def stable_seed(*parts):
    """
    derive a 64-bit seed from any sequence of printable parts, stable across processes and platforms
    :param parts: e.g. (seed, judge, group, fold, chain)
    :return: non-negative int < 2**64
    """
    key = '\x1f'.join(str(p) for p in parts).encode('utf-8')
    return int.from_bytes(hashlib.sha256(key).digest()[:8], 'little')


def make_rng(*parts):
    return np.random.default_rng(stable_seed(*parts))


def default(x):
    # json fallback for numpy and exact rationals
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    raise TypeError('object of type `%s` is not JSON serializable' % type(x).__name__)


def dumps(obj, indent=4):
    return json.dumps(obj, default=default, indent=indent, sort_keys=True, ensure_ascii=False)


def dump_json(obj, path):
    ensure_dir(os.path.dirname(path) or '.')
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps(obj))
        f.write('\n')


def load_json(path):
    if not os.path.exists(path):
        raise DissectError('cannot find file at `%s`' % path)
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def sha256_text(text):
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def ensure_dir(path):
    if path and not os.path.exists(path):
        os.makedirs(path, exist_ok=True)
    return path
