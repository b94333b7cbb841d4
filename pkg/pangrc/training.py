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
"""Ridge-regression training of the NG-RC readout.

Features and increment targets are built per stationary sample and the
normal equations are accumulated sample by sample, so the concatenated
feature matrix never has to be held in memory.
"""
import json
import math
import warnings
from dataclasses import dataclass
from dataclasses import field
from functools import partial
from typing import List

import numpy as np
from pangrc.features import feature_dim
from pangrc.features import feature_rows
from pangrc.features import monomial_table
from pangrc.features import NgrcConfig
from pangrc.models import Trajectory
from pangrc.util import DataError
from pangrc.util import LOG
from pangrc.util import NumericalError
from pangrc.util import parallel_map
from pangrc.util import settings_hash
from scipy.linalg import cho_factor
from scipy.linalg import cho_solve
from scipy.linalg import LinAlgError
from scipy.linalg import LinAlgWarning
from scipy.linalg import solve


@dataclass
class TrainingSample:
    """One stationary trajectory and the bifurcation parameter it was recorded at."""

    trajectory: Trajectory
    theta: float


@dataclass
class TrainingSet:
    """Stationary samples sharing dimension and time step."""

    samples: List[TrainingSample] = field(default_factory=list)

    def __post_init__(self):
        self.samples = [s if isinstance(s, TrainingSample) else TrainingSample(*s) for s in self.samples]
        if not self.samples:
            raise DataError("A training set needs at least one sample.")
        first = self.samples[0].trajectory
        for position, sample in enumerate(self.samples[1:], start=1):
            traj = sample.trajectory
            if traj.dim != first.dim:
                raise DataError(f"Sample {position} has dimension {traj.dim}, expected {first.dim}.")
            if not math.isclose(traj.dt, first.dt, rel_tol=1e-12):
                raise DataError(f"Sample {position} has dt={traj.dt}, expected {first.dt}.")

    def __len__(self):
        """Return the number of samples."""
        return len(self.samples)

    def __iter__(self):
        """Iterate over samples."""
        return iter(self.samples)

    @property
    def thetas(self):
        """Return the sample parameters in order."""
        return [sample.theta for sample in self.samples]

    @property
    def dt(self):
        """Return the shared time step."""
        return self.samples[0].trajectory.dt


@dataclass
class ReadoutMatrix:
    """Trained readout W_out (d x Ntilde) with its architecture and provenance."""

    W_out: np.ndarray
    config: NgrcConfig
    training: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W_out = np.asarray(self.W_out, dtype=float)
        expected = (self.config.d, feature_dim(self.config))
        if self.W_out.shape != expected:
            raise DataError(f"W_out has shape {self.W_out.shape}, the architecture needs {expected}.")
        if not np.all(np.isfinite(self.W_out)):
            raise NumericalError("W_out has non-finite entries.")
        self.W_out.setflags(write=False)

    @property
    def config_hash(self):
        """Return the settings hash of the architecture."""
        return settings_hash(self.config.to_dict())

    def to_dict(self):
        """Serialize; floats keep their shortest round-trip representation."""
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config_hash,
            "monomial_order": self.config.monomial_order,
            "shape": list(self.W_out.shape),
            "W_out": [float(value) for value in self.W_out.ravel(order="C")],
            "training": self.training,
        }

    @classmethod
    def from_dict(cls, data):
        """Deserialize (inverse of to_dict)."""
        try:
            config = NgrcConfig.from_dict(data["config"])
            shape = tuple(data["shape"])
            values = np.array(data["W_out"], dtype=float).reshape(shape)
        except (KeyError, TypeError, ValueError) as err:
            raise DataError(f"Malformed model document: {err}") from err
        return cls(values, config, data.get("training", {}))


def save_readout(readout, path):
    """Write a readout as JSON."""
    with open(path, "w") as file:
        file.write(json.dumps(readout.to_dict(), indent=2, sort_keys=True))
        file.write("\n")
    LOG.info(f"Wrote model to {path}")


def load_readout(path):
    """Read a readout written by save_readout."""
    try:
        with open(path, "r") as file:
            data = json.load(file)
    except (OSError, json.JSONDecodeError) as err:
        raise DataError(f"Cannot read model file {path}: {err}") from err
    return ReadoutMatrix.from_dict(data)


def _check_length(traj, warmup):
    if len(traj) <= warmup + 1:
        raise DataError(
            f"Trajectory of {len(traj)} states is too short: at least {warmup + 2} are needed "
            f"for a warm-up of {warmup} steps."
        )


def build_feature_matrix(traj, config, theta, table=None):
    """Return the feature matrix R (Ntilde x columns) of one trajectory.

    Column j holds the features at index warmup + j and is paired with the
    increment to step warmup + j + 1, so the last state only serves as a target.
    """
    _check_length(traj, config.warmup)
    if table is None:
        table = monomial_table(config.embed_dim, config.orders)
    return feature_rows(traj, config, table, theta, stop=len(traj) - 1).T


def build_target_matrix(traj, warmup):
    """Return the increments (x_i - x_{i-1}) for i = warmup + 1 ... T as columns."""
    _check_length(traj, warmup)
    states = np.asarray(traj.states)
    return np.diff(states[warmup:], axis=0).T


def concat_multifunctional(training_set, config):
    """Concatenate per-sample feature and target matrices column-wise.

    Delay embedding runs inside each sample, never across sample borders.
    """
    if not isinstance(training_set, TrainingSet):
        training_set = TrainingSet(list(training_set))
    _check_dimension(training_set, config)
    table = monomial_table(config.embed_dim, config.orders)
    features = []
    targets = []
    for sample in training_set:
        features.append(build_feature_matrix(sample.trajectory, config, sample.theta, table))
        targets.append(build_target_matrix(sample.trajectory, config.warmup))
    return np.hstack(features), np.hstack(targets)


def _check_dimension(training_set, config):
    dim = training_set.samples[0].trajectory.dim
    if dim != config.d:
        raise DataError(f"Training data has dimension {dim} but the architecture expects d={config.d}.")


def solve_normal_equations(gram, cross, beta):
    """Solve W (gram + beta I) = cross, by Cholesky factorization when possible.

    With beta > 0 a system that is positive definite in exact arithmetic can
    still lose definiteness in floating point when shifted polynomial features
    are nearly collinear. Those systems are solved with a symmetric indefinite
    (Bunch-Kaufman) factorization instead.

    Args:
        gram (ndarray): R R^T, Ntilde x Ntilde
        cross (ndarray): Y R^T, d x Ntilde
        beta (float): ridge strength >= 0
    Returns:
        (ndarray): W_out, d x Ntilde
    Raises:
        (NumericalError): if the system is singular or not finite

    """
    if beta < 0:
        raise NumericalError(f"beta must be >= 0, got {beta}.")
    system = np.array(gram, dtype=float)
    system[np.diag_indices_from(system)] += beta
    rhs = np.asarray(cross, dtype=float).T
    try:
        factor, lower = cho_factor(system, lower=False, check_finite=True)
    except ValueError as err:
        raise NumericalError(f"Ridge system has non-finite entries ({err}).") from err
    except LinAlgError as err:
        if beta == 0:
            raise NumericalError(f"Ridge system is not positive definite ({err}); try a larger beta.") from err
        LOG.warning(f"Cholesky failed on the ridge system ({err}); using a symmetric indefinite solve.")
        solution = _solve_symmetric(system, rhs)
    else:
        if beta == 0:
            pivots = np.diag(factor) ** 2
            if pivots.min() <= pivots.max() * system.shape[0] * np.finfo(float).eps:
                raise NumericalError("Feature Gram matrix is singular within tolerance; try a larger beta.")
        solution = cho_solve((factor, lower), rhs)
    if not np.all(np.isfinite(solution)):
        raise NumericalError("Ridge solve produced non-finite values; try a larger beta.")
    return solution.T


def _solve_symmetric(system, rhs):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", LinAlgWarning)
        try:
            solution = solve(system, rhs, assume_a="sym", check_finite=False)
        except LinAlgError as err:
            raise NumericalError(f"Ridge system is singular ({err}); try a larger beta.") from err
    for warning in caught:
        LOG.warning(f"Ridge system is ill-conditioned: {warning.message}")
    return solution


def ridge_solve(R, Y, beta, config=None, training=None):
    """Fit W_out = Y R^T (R R^T + beta I)^-1 without forming an inverse.

    Returns a bare ndarray when no config is given, else a ReadoutMatrix.
    """
    R = np.asarray(R, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if R.shape[1] != Y.shape[1]:
        raise DataError(f"R has {R.shape[1]} columns but Y has {Y.shape[1]}.")
    W_out = solve_normal_equations(R @ R.T, Y @ R.T, beta)
    if config is None:
        return W_out
    return ReadoutMatrix(W_out, config, training or {})


def monomials_per_degree(table):
    """Return {degree: number of monomials} for the degrees of a MonomialTable."""
    counts = {}
    for order in table.orders:
        rows = table.block(order)
        counts[str(order)] = rows.stop - rows.start
    return counts


def _sample_gram(sample, config):
    table = monomial_table(config.embed_dim, config.orders)
    R = build_feature_matrix(sample.trajectory, config, sample.theta, table)
    Y = build_target_matrix(sample.trajectory, config.warmup)
    return R @ R.T, Y @ R.T, R.shape[1]


def fit(training_set, config, threads=1):
    """Train the readout on a multi-sample training set.

    Args:
        training_set (TrainingSet): stationary samples and their parameters
        config (NgrcConfig): architecture
        threads (int): worker processes for the per-sample accumulation
    Returns:
        (ReadoutMatrix): trained readout with a training descriptor

    """
    if not isinstance(training_set, TrainingSet):
        training_set = TrainingSet(list(training_set))
    _check_dimension(training_set, config)
    n_features = feature_dim(config)
    LOG.info(f"Training on {len(training_set)} samples with {n_features} features")
    parts = parallel_map(partial(_sample_gram, config=config), training_set.samples, threads)
    gram = np.zeros((n_features, n_features))
    cross = np.zeros((config.d, n_features))
    columns = []
    for position, (sample_gram, sample_cross, n_columns) in enumerate(parts, start=1):
        LOG.debug(f"Accumulated sample {position}/{len(parts)} ({n_columns} columns)")
        gram += sample_gram
        cross += sample_cross
        columns.append(n_columns)
    W_out = solve_normal_equations(gram, cross, config.beta)
    training = {
        "thetas": [float(theta) for theta in training_set.thetas],
        "dt": float(training_set.dt),
        "columns_per_sample": columns,
        "total_columns": int(sum(columns)),
        "feature_dim": n_features,
        "monomials_per_degree": monomials_per_degree(monomial_table(config.embed_dim, config.orders)),
    }
    return ReadoutMatrix(W_out, config, training)
