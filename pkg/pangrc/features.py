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
"""NG-RC feature construction.

A feature vector is built in four stages: time-shift embedding of the
state history, the library of unique monomials of the embedded vector,
the parameter channel (an elementwise shift by gamma * theta) and the
post-processing powers with an optional bias.
"""
import csv
import math
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from itertools import combinations_with_replacement
from typing import Tuple

import numpy as np
from pangrc.util import ConfigError
from pangrc.util import DataError
from pangrc.util import LOG

MONOMIAL_ORDER = "graded-lex"


def _order_tuple(values, name, minimum):
    try:
        orders = tuple(sorted({int(v) for v in values}))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{name}: must be a list of integers.") from err
    if not orders:
        raise ConfigError(f"{name}: must not be empty.")
    if orders[0] < minimum:
        raise ConfigError(f"{name}: orders must be >= {minimum}, got {list(orders)}.")
    return orders


@dataclass(frozen=True)
class NgrcConfig:
    """NG-RC architecture.

    ``orders`` are the monomial orders of the library and ``state_orders``
    the post-processing powers, where 0 requests the bias term.
    """

    d: int
    k: int = 1
    s: int = 1
    orders: Tuple[int, ...] = (1, 2)
    state_orders: Tuple[int, ...] = (0, 1)
    beta: float = 1.0e-6
    gamma: float = 0.0
    monomial_order: str = field(default=MONOMIAL_ORDER)

    def __post_init__(self):
        for name in ("d", "k", "s"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"ngrc.{name}: must be an integer >= 1, got {value!r}.")
        object.__setattr__(self, "orders", _order_tuple(self.orders, "ngrc.orders", 1))
        object.__setattr__(self, "state_orders", _order_tuple(self.state_orders, "ngrc.state_orders", 0))
        if self.state_orders == (0,):
            raise ConfigError("ngrc.state_orders: needs at least one order >= 1 besides the bias.")
        if not self.beta >= 0:
            raise ConfigError(f"ngrc.beta: must be >= 0, got {self.beta}.")
        if self.monomial_order != MONOMIAL_ORDER:
            raise ConfigError(f"ngrc.monomial_order: only '{MONOMIAL_ORDER}' is supported.")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def warmup(self):
        """Return the history length (k - 1) * s the embedding needs."""
        return (self.k - 1) * self.s

    @property
    def embed_dim(self):
        """Return D = d * k."""
        return self.d * self.k

    @property
    def has_bias(self):
        """Return True when the bias term is requested."""
        return 0 in self.state_orders

    def to_dict(self):
        """Serialize to a plain dict."""
        data = asdict(self)
        data["orders"] = list(self.orders)
        data["state_orders"] = list(self.state_orders)
        return data

    @classmethod
    def from_dict(cls, data):
        """Build from a mapping (inverse of to_dict)."""
        return cls(**dict(data))


class MonomialTable:
    """Immutable table of unique monomials over D delayed variables.

    Rows are graded by total degree (ascending). Within a degree they follow
    the lexicographic order of the sorted variable-index tuples, where the
    current time point's variables come first, then lag s, lag 2s, ...
    """

    def __init__(self, D, orders):
        """Build the table for D variables and the given orders."""
        if D < 1:
            raise ConfigError(f"Monomial table needs D >= 1, got {D}.")
        self.D = int(D)
        self.orders = _order_tuple(orders, "orders", 1)
        max_order = self.orders[-1]
        rows = []
        degrees = []
        for order in self.orders:
            for combo in combinations_with_replacement(range(self.D), order):
                # pad with index D, which points at a constant 1.0 during evaluation
                rows.append(combo + (self.D,) * (max_order - order))
                degrees.append(order)
        self._index = np.array(rows, dtype=np.intp).reshape(len(rows), max_order)
        self._index.setflags(write=False)
        self.degrees = np.array(degrees, dtype=int)
        self.degrees.setflags(write=False)
        exponents = np.zeros((len(rows), self.D + 1), dtype=int)
        np.add.at(exponents, (np.repeat(np.arange(len(rows)), max_order), self._index.ravel()), 1)
        self.exponents = exponents[:, : self.D]
        self.exponents.setflags(write=False)

    def __len__(self):
        """Return the number of monomials N."""
        return self._index.shape[0]

    def block(self, order):
        """Return the slice of rows holding monomials of the given degree."""
        positions = np.flatnonzero(self.degrees == order)
        if positions.size == 0:
            return slice(0, 0)
        return slice(int(positions[0]), int(positions[-1]) + 1)

    def evaluate(self, v):
        """Evaluate every monomial at a single delayed vector v (length D)."""
        v = np.asarray(v, dtype=float)
        if v.shape != (self.D,):
            raise DataError(f"Delayed vector must have length {self.D}, got shape {v.shape}.")
        extended = np.append(v, 1.0)
        return np.prod(extended[self._index], axis=1)

    def evaluate_rows(self, V):
        """Evaluate every monomial for each row of V (shape n x D); returns n x N."""
        V = np.asarray(V, dtype=float)
        extended = np.hstack([V, np.ones((V.shape[0], 1))])
        out = np.empty((V.shape[0], len(self)))
        for column in range(len(self)):
            out[:, column] = np.prod(extended[:, self._index[column]], axis=1)
        return out

    def to_csv(self, path):
        """Write exponent rows as CSV for inspection."""
        header = [f"e{a}" for a in range(self.D)]
        with open(path, "w", newline="") as file:
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(self.exponents.tolist())
        LOG.info(f"Wrote {len(self)} monomials to {path}")


def monomial_table(D, orders):
    """Return the MonomialTable of all unique monomials of the given orders."""
    return MonomialTable(D, orders)


def _as_states(traj):
    return np.asarray(getattr(traj, "states", traj), dtype=float)


def delay_embed(traj, k, s, i):
    """Return (x_i, x_{i-s}, ..., x_{i-(k-1)s}) concatenated.

    Args:
        traj (Trajectory or ndarray): states, shape (n, d)
        k (int): number of concatenated time points
        s (int): separation in steps
        i (int): current step index
    Raises:
        (DataError): if i is inside the warm-up

    """
    states = _as_states(traj)
    warmup = (k - 1) * s
    if i < warmup:
        raise DataError(f"Index {i} is inside the warm-up: the embedding needs {warmup} prior steps.")
    if i >= states.shape[0]:
        raise DataError(f"Index {i} is past the end of a trajectory of {states.shape[0]} states.")
    return np.concatenate([states[i - lag * s] for lag in range(k)])


def delay_embed_all(traj, k, s, stop=None):
    """Return the delayed vectors for every index warmup <= i < stop as rows."""
    states = _as_states(traj)
    n = states.shape[0] if stop is None else stop
    warmup = (k - 1) * s
    if n <= warmup:
        raise DataError(f"Need more than {warmup} states for k={k}, s={s}; got {n}.")
    return np.hstack([states[warmup - lag * s : n - lag * s] for lag in range(k)])


def poly_features(v, table):
    """Evaluate the monomial library at v: r_j = prod_a v_a ** e_ja."""
    return table.evaluate(v)


def apply_parameter_channel(r, gamma, theta):
    """Shift every raw feature by gamma * theta."""
    shift = gamma * theta
    if shift == 0:
        return np.array(r, dtype=float)
    return np.asarray(r, dtype=float) + shift


def postprocess(r, state_orders):
    """Concatenate the bias (if 0 in state_orders) and elementwise powers of r.

    Works on a single feature vector or row-wise on a matrix (features on
    the last axis).
    """
    r = np.asarray(r, dtype=float)
    parts = []
    orders = sorted(set(state_orders))
    if 0 in orders:
        parts.append(np.ones(r.shape[:-1] + (1,)))
    for order in orders:
        if order >= 1:
            parts.append(r if order == 1 else r**order)
    return np.concatenate(parts, axis=-1)


def feature_dim(config):
    """Return the expanded feature dimension for an NgrcConfig."""
    D = config.embed_dim
    raw = sum(math.comb(D + order - 1, order) for order in config.orders)
    powers = sum(1 for order in config.state_orders if order >= 1)
    return int(config.has_bias) + powers * raw


def feature_vector(history, config, table, theta):
    """Build the expanded feature vector from the last (k - 1) * s + 1 states."""
    states = _as_states(history)
    v = delay_embed(states, config.k, config.s, states.shape[0] - 1)
    r = apply_parameter_channel(poly_features(v, table), config.gamma, theta)
    return postprocess(r, config.state_orders)


def feature_rows(traj, config, table, theta, stop=None):
    """Return expanded feature vectors for every usable index as rows (n x Ntilde)."""
    V = delay_embed_all(traj, config.k, config.s, stop)
    r = apply_parameter_channel(table.evaluate_rows(V), config.gamma, theta)
    return postprocess(r, config.state_orders)
