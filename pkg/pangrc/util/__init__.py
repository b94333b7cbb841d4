#
# Copyright 2024 The pangrc Authors.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
"""Utility functions."""
import hashlib
import json
from collections import abc

import yaml
from joblib import delayed
from joblib import Parallel

from .log import LOG  # noqa: F401
from .log import LOG_FORMAT  # noqa: F401
from .log import LOG_VERBOSITY  # noqa: F401
from .log import set_verbosity  # noqa: F401


class PangrcError(Exception):
    """Base exception; carries the process exit code used by the CLI."""

    exit_code = 1


class ConfigError(PangrcError, ValueError):
    """Invalid experiment configuration."""

    exit_code = 1


class DataError(PangrcError, ValueError):
    """Missing, short or inconsistent data."""

    exit_code = 2


class NumericalError(PangrcError, ArithmeticError):
    """A numerical procedure failed (singular system, divergence, ...)."""

    exit_code = 3


class dicta(dict):
    """
    Dict subclass that can access values via key or attribute.

    Ex:
        x = dicta(a=1, b=2)
        print(x.a)     # 1
        print(x['b'])  # 2
    """

    def __getattr__(self, key):
        """Get attribute."""
        try:
            return super().__getitem__(key)
        except KeyError as err:
            raise AttributeError(key) from err

    def __setattr__(self, key, val):
        """Set attribute."""
        super().__setitem__(key, val)

    def __delattr__(self, key):
        """Delete attribute."""
        super().__delitem__(key)

    def copy(self):
        """Get a copy."""
        return self.__class__(self)


def to_dicta(objekt):
    """Recursively convert mappings into dicta objects."""
    if isinstance(objekt, abc.Mapping):
        return dicta({key: to_dicta(value) for key, value in objekt.items()})
    if isinstance(objekt, list):
        return [to_dicta(value) for value in objekt]
    return objekt


def to_plain(objekt):
    """Recursively convert dicta (and tuples) into plain dicts and lists."""
    if isinstance(objekt, abc.Mapping):
        return {key: to_plain(value) for key, value in objekt.items()}
    if isinstance(objekt, (list, tuple)):
        return [to_plain(value) for value in objekt]
    return objekt


def load_yaml(objekt):
    """Load a yaml document.

    Params:
        objekt (str): A filename containing a YAML document OR a YAML document.
    """
    if objekt is None:
        return None

    yamlfile = None
    try:
        with open(objekt, "r") as yaml_file:
            yamlfile = yaml.safe_load(yaml_file)
    except (TypeError, OSError, IOError):
        yamlfile = yaml.safe_load(objekt)
    return yamlfile


def deepupdate(original, update):
    """Recursively update a dict.

    Subdict's won't be overwritten but also updated.
    """
    if not isinstance(original, abc.Mapping):
        return update
    for key, value in update.items():
        if isinstance(value, abc.Mapping):
            original[key] = deepupdate(original.get(key, dicta()), value)
        else:
            original[key] = value
    return original


def canonical_json(objekt):
    """Serialize to a canonical JSON string (sorted keys, compact separators)."""
    return json.dumps(to_plain(objekt), sort_keys=True, separators=(",", ":"))


def settings_hash(objekt):
    """Return the sha256 hex digest of the canonical JSON form of objekt."""
    return hashlib.sha256(canonical_json(objekt).encode("utf-8")).hexdigest()


def parallel_map(func, items, threads=1):
    """Map func over items, in worker processes when threads > 1.

    Results keep the order of items either way, so output is independent of
    the worker count. func and items must be picklable for threads > 1.
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=min(threads, len(items)), prefer="processes")(delayed(func)(item) for item in items)
