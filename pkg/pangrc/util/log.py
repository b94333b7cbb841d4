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
"""Package logger.

Messages go to standard error; standard output is left to the command
summaries. The level is ERROR until the CLI raises it with ``-l``.
"""
import logging
import sys

LOG = logging.getLogger("pangrc")
LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
LOG_VERBOSITY = [logging.ERROR, logging.WARNING, logging.INFO, logging.DEBUG]

if not LOG.handlers:
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    LOG.addHandler(_handler)
    LOG.setLevel(logging.ERROR)
    LOG.propagate = False


def set_verbosity(count):
    """Map a -l count to a level (0 ERROR ... 3 or more DEBUG) and apply it."""
    level = LOG_VERBOSITY[max(0, min(int(count), len(LOG_VERBOSITY) - 1))]
    LOG.setLevel(level)
    return level
