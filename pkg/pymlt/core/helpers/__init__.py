"""
Contains classes and other objects for helping

+ seeded random streams (``named_stream``, ``iteration_streams``)
+ staged output files (``StagedFile``, ``FileDict``, ``staging_area``)
+ deterministic JSON writing and hashing
"""
import collections.abc
import concurrent.futures
import contextlib
import hashlib
import json
import os
import shutil
import tempfile
import zlib

import numpy as np
from ruamel.yaml import YAML

import pymlt.core.logging as logging
from pymlt.core.errors import ParseError


logger = logging.getLogger(__name__)

yaml = YAML(typ="safe")


def load_environmental_variable_1_0(varstring):
    return True if os.environ.get(varstring, False) == "1" else False


################################################################################
#
#           R A N D O M   S T R E A M S
#
################################################################################
def _stream_key(key):
    if isinstance(key, (int, np.integer)):
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def named_stream(seed, *keys):
    """
    Derives an independent random generator from a top-level seed.

    Parameters
    ----------
    seed : int
        The top-level seed of a run.
    *keys : str or int
        Names of the sub-stream, e.g. ``"folds"`` or ``("negatives", 3, 0)``.
        Strings are hashed with crc32, which is stable across platforms and
        interpreter runs.

    Returns
    -------
    numpy.random.Generator

    Example
    -------
    >>> a = named_stream(7, "bootstrap").random()
    >>> b = named_stream(7, "bootstrap").random()
    >>> a == b
    True
    """
    entropy = [int(seed)] + [_stream_key(key) for key in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_generator(rng):
    """ Accepts a Generator, an int seed or None and returns a Generator """
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def iteration_streams(rng, n_iterations):
    """
    One child generator per loop iteration, keyed by the iteration index.

    The children only depend on a single draw from ``rng``, so results do not
    change when the loop is split over threads.
    """
    root = np.random.SeedSequence(int(as_generator(rng).integers(2 ** 63)))
    return [np.random.default_rng(child) for child in root.spawn(n_iterations)]


def parallel_map(func, items, threads=1):
    """ ``list(map(func, items))``, on a thread pool if ``threads > 1``; order is kept """
    items = list(items)
    if threads > 1 and len(items) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


################################################################################
#
#           J S O N   A N D   H A S H I N G
#
################################################################################
def _to_builtin(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError("Object of type %s is not JSON serializable" % type(obj).__name__)


def dumps_json(obj):
    """ Canonical JSON text: sorted keys, two space indent, trailing newline """
    return json.dumps(obj, sort_keys=True, indent=2, default=_to_builtin) + "\n"


def write_json(path, obj):
    with open(path, "w") as json_file:
        json_file.write(dumps_json(obj))


def read_json(path):
    """ Loads a JSON file, raising ``ParseError`` for malformed content """
    with open(path, "r") as json_file:
        try:
            return json.load(json_file)
        except json.JSONDecodeError as error:
            raise ParseError(error.msg, path, error.lineno)


def config_hash(resolved_config):
    """ SHA-256 of the canonical JSON of a resolved configuration """
    canonical = json.dumps(resolved_config, sort_keys=True, separators=(",", ":"),
                           default=_to_builtin)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


################################################################################
#
#           S T A G E D   O U T P U T   F I L E S
#
################################################################################
class StagedFile(object):
    """
    An output file written to a staging location before it is moved to its
    final destination.

    Attributes
    ----------
    src : str
        The staged path, including the filename
    dest : str
        The final destination, including the filename
    """

    def __init__(self, src, dest):
        self.src, self.dest = src, dest
        self._current_location = src

    def digest(self):
        """ Moves ``src`` to ``dest``, replacing an existing file. """
        dest_dir = os.path.dirname(self.dest)
        if dest_dir and not os.path.isdir(dest_dir):
            os.makedirs(dest_dir)
        os.replace(self.src, self.dest)
        self._current_location = self.dest

    def __eq__(self, other):
        return bool(self.src == other.src and self.dest == other.dest)

    def __str__(self):
        return "%s -- moved --> %s" % (self.src, self.dest)

    def __repr__(self):
        return self._current_location


class FileDict(collections.abc.MutableMapping):
    """A dictionary that only accepts StagedFile as values for its keys"""

    def __init__(self, *args, **kwargs):
        self.store = dict()
        self.update(dict(*args, **kwargs))

    def __getitem__(self, key):
        return self.store[key]

    def __setitem__(self, key, value):
        self.store[key] = self._check_value(value)

    def __delitem__(self, key):
        del self.store[key]

    def __iter__(self):
        return iter(self.store)

    def __len__(self):
        return len(self.store)

    def _check_value(self, value):
        if not isinstance(value, StagedFile):
            raise TypeError("FileDict only holds StagedFile values, got %s" % type(value).__name__)
        return value

    def destinations(self):
        """ Sorted basenames of every destination """
        return sorted(os.path.basename(entry.dest) for entry in self.values())

    def digest(self):
        """ Moves every staged file to its destination """
        for key in sorted(self):
            logger.debug("Publishing %s", self[key])
            self[key].digest()


class StagingArea(FileDict):
    """
    A ``FileDict`` bound to a temporary directory and a final output
    directory. ``path(name)`` reserves a staged file and returns where to
    write it.
    """

    def __init__(self, staging_dir, out_dir):
        super(StagingArea, self).__init__()
        self.staging_dir = staging_dir
        self.out_dir = out_dir

    def path(self, name):
        staged = os.path.join(self.staging_dir, name)
        self[name] = StagedFile(src=staged, dest=os.path.join(self.out_dir, name))
        return staged


@contextlib.contextmanager
def staging_area(out_dir):
    """
    Stage output files and publish them together.

    Files written through ``area.path(name)`` only reach ``out_dir`` when the
    block finishes without an exception; otherwise they are discarded.

    Example
    -------
    >>> with staging_area("results") as area:
    ...     write_json(area.path("params.json"), {"beta": []})
    """
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    staging_dir = tempfile.mkdtemp(prefix=".staging_", dir=out_dir)
    area = StagingArea(staging_dir, out_dir)
    try:
        yield area
        area.digest()
    finally:
        shutil.rmtree(staging_dir, ignore_errors=True)
