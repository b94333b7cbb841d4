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
import logging
import math
from unittest import TestCase

from pangrc.util import canonical_json
from pangrc.util import ConfigError
from pangrc.util import DataError
from pangrc.util import deepupdate
from pangrc.util import dicta
from pangrc.util import load_yaml
from pangrc.util import LOG
from pangrc.util import NumericalError
from pangrc.util import PangrcError
from pangrc.util import set_verbosity
from pangrc.util import parallel_map
from pangrc.util import settings_hash
from pangrc.util import to_dicta
from pangrc.util import to_plain


class UtilTestCase(TestCase):
    """
    TestCase class for the util helpers
    """

    def test_dicta_attribute_access(self):
        """Test dicta reads, writes and deletes keys through attributes."""
        value = dicta(a=1)
        value.b = 2
        self.assertEqual(value["b"], 2)
        self.assertEqual(value.a, 1)
        del value.a
        self.assertNotIn("a", value)
        with self.assertRaises(AttributeError):
            value.missing

    def test_to_dicta_nested(self):
        """Test nested mappings inside lists become dicta."""
        value = to_dicta({"a": {"b": [{"c": 1}]}})
        self.assertEqual(value.a.b[0].c, 1)
        self.assertEqual(to_plain(value), {"a": {"b": [{"c": 1}]}})

    def test_deepupdate_merges_subdicts(self):
        """Test deepupdate keeps sibling keys of nested mappings."""
        original = dicta(ngrc=dicta(k=2, s=2), name="x")
        deepupdate(original, {"ngrc": {"k": 4}})
        self.assertEqual(original.ngrc, {"k": 4, "s": 2})
        self.assertEqual(original.name, "x")

    def test_deepupdate_replaces_none(self):
        """Test a mapping replaces a null default."""
        original = dicta(grid=None)
        deepupdate(original, {"grid": {"values": [1.0]}})
        self.assertEqual(original.grid, {"values": [1.0]})

    def test_load_yaml_document(self):
        """Test load_yaml falls back to parsing the string itself."""
        self.assertEqual(load_yaml("beta: 1.0e-8"), {"beta": 1.0e-8})
        self.assertIsNone(load_yaml(None))

    def test_settings_hash_ignores_key_order(self):
        """Test the settings hash depends on content, not insertion order."""
        first = {"a": 1, "b": [1.5, 2]}
        second = {"b": [1.5, 2], "a": 1}
        self.assertEqual(canonical_json(first), canonical_json(second))
        self.assertEqual(settings_hash(first), settings_hash(second))
        self.assertNotEqual(settings_hash(first), settings_hash({"a": 2, "b": [1.5, 2]}))
        self.assertEqual(len(settings_hash(first)), 64)

    def test_parallel_map_order(self):
        """Test parallel_map returns results in item order with and without workers."""
        items = [4.0, 9.0, 16.0, 25.0]
        self.assertEqual(parallel_map(math.sqrt, items), [2.0, 3.0, 4.0, 5.0])
        self.assertEqual(parallel_map(math.sqrt, items, threads=3), [2.0, 3.0, 4.0, 5.0])

    def test_exit_codes(self):
        """Test the error hierarchy carries the CLI exit codes."""
        self.assertEqual(ConfigError.exit_code, 1)
        self.assertEqual(DataError.exit_code, 2)
        self.assertEqual(NumericalError.exit_code, 3)
        for error in (ConfigError, DataError, NumericalError):
            self.assertTrue(issubclass(error, PangrcError))
        self.assertTrue(issubclass(DataError, ValueError))

    def test_set_verbosity(self):
        """Test -l counts map to levels and clamp at DEBUG."""
        try:
            self.assertEqual(set_verbosity(2), logging.INFO)
            self.assertEqual(LOG.level, logging.INFO)
            self.assertEqual(set_verbosity(7), logging.DEBUG)
        finally:
            set_verbosity(0)
        self.assertEqual(LOG.level, logging.ERROR)
