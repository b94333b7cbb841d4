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
"""Largest Lyapunov exponent estimators.

``rosenstein_lle`` works on a scalar time series; ``benettin_lle`` needs
the vector field and serves as an independent check of the former.
"""
from dataclasses import dataclass
from dataclasses import field
from typing import Optional
from typing import Tuple

import numpy as np
from pangrc.models import is_diverged
from pangrc.models import rk4_step
from pangrc.util import DataError
from pangrc.util import NumericalError
from scipy.spatial import cKDTree

ROSENSTEIN = "rosenstein"
BENETTIN = "benettin"
MAX_EMBED_DELAY = 50


@dataclass
class LyapunovEstimate:
    """Largest Lyapunov exponent per unit time."""

    lambda_max: float
    fit_range: Tuple[int, int]
    method: str
    divergence: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class RosensteinParams:
    """Estimator settings; None selects the data-driven default."""

    embed_dim: int = 5
    embed_delay: Optional[int] = None
    theiler: Optional[int] = None
    fit_start: int = 5
    fit_stop: int = 50

    @classmethod
    def from_dict(cls, data):
        """Build from a mapping, ignoring None values."""
        return cls(**{key: value for key, value in dict(data or {}).items() if value is not None})


def autocorrelation_delay(series, cap=MAX_EMBED_DELAY):
    """Return the first zero crossing of the autocorrelation, capped."""
    centered = np.asarray(series, dtype=float) - np.mean(series)
    n = centered.size
    spectrum = np.fft.rfft(centered, 2 * n)
    acorr = np.fft.irfft(spectrum * np.conj(spectrum))[: min(n, cap + 1)]
    crossings = np.flatnonzero(acorr[1:] <= 0)
    if crossings.size == 0:
        return cap
    return int(max(1, min(cap, crossings[0] + 1)))


def mean_period(series):
    """Return the mean spacing of upward zero crossings of the centered series, or None."""
    centered = np.asarray(series, dtype=float) - np.mean(series)
    upward = np.flatnonzero((centered[:-1] < 0) & (centered[1:] >= 0))
    if upward.size < 2:
        return None
    return int(np.ceil(np.mean(np.diff(upward))))


def delay_vectors(series, embed_dim, delay):
    """Return rows (x_i, x_{i+delay}, ..., x_{i+(m-1)delay})."""
    series = np.asarray(series, dtype=float)
    count = series.size - (embed_dim - 1) * delay
    if count <= 0:
        raise DataError(f"Series of {series.size} points is too short for embed_dim={embed_dim}, delay={delay}.")
    return np.column_stack([series[j * delay : j * delay + count] for j in range(embed_dim)])


def _nearest_outside_window(points, theiler, chunk=2000):
    """Nearest neighbour of each point with a time separation above theiler."""
    count = points.shape[0]
    tree = cKDTree(points)
    neighbors = np.full(count, -1, dtype=int)
    distances = np.full(count, np.inf)
    pending = np.arange(count)
    k = min(count, 16)
    limit = min(count, 2 * theiler + 2)
    while pending.size:
        for start in range(0, pending.size, chunk):
            index = pending[start : start + chunk]
            dist, idx = tree.query(points[index], k=k)
            dist = np.atleast_2d(dist).reshape(index.size, -1)
            idx = np.atleast_2d(idx).reshape(index.size, -1)
            valid = (np.abs(idx - index[:, None]) > theiler) & (dist > 0) & np.isfinite(dist)
            has_valid = valid.any(axis=1)
            first = np.argmax(valid, axis=1)
            rows = np.flatnonzero(has_valid)
            neighbors[index[rows]] = idx[rows, first[rows]]
            distances[index[rows]] = dist[rows, first[rows]]
        unresolved = pending[neighbors[pending] < 0]
        if k >= limit:
            break
        pending = unresolved
        k = min(limit, k * 4)
    return neighbors, distances


def rosenstein_lle(series, dt, params=None):
    """Estimate the largest Lyapunov exponent of a scalar series (Rosenstein).

    Delay-embed the series, pair every point with its nearest neighbour
    outside the Theiler window, average the log separation of the pairs
    over time and fit a line over the fit window.

    Args:
        series (array-like): scalar observable sampled every dt
        dt (float): sampling step
        params (RosensteinParams): estimator settings
    Returns:
        (LyapunovEstimate): slope of the mean log divergence divided by dt
    Raises:
        (DataError): when the series is too short, constant or has no valid neighbours

    """
    params = params or RosensteinParams()
    series = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(series)):
        raise DataError("Series contains non-finite values.")
    if series.size < 2 or np.ptp(series) == 0:
        raise DataError("Series is constant: there is no divergence to measure.")
    if not 0 <= params.fit_start < params.fit_stop:
        raise DataError("fit_start must be >= 0 and below fit_stop.")
    delay = params.embed_delay or autocorrelation_delay(series)
    theiler = params.theiler
    if theiler is None:
        theiler = mean_period(series) or max(1, series.size // 10)
    points = delay_vectors(series, params.embed_dim, delay)
    horizon = params.fit_stop
    usable = points.shape[0] - horizon
    if usable <= 2 * theiler + 2:
        raise DataError(
            f"Series of {series.size} points is too short: {2 * theiler + 3 + horizon} embedded points are "
            f"needed for a Theiler window of {theiler} and a fit window of {horizon}."
        )
    neighbors, _ = _nearest_outside_window(points[:usable], theiler)
    found = np.flatnonzero(neighbors >= 0)
    if found.size == 0:
        raise DataError("No valid nearest neighbours outside the Theiler window.")
    divergence = np.full(horizon + 1, -np.inf)
    for step in range(horizon + 1):
        separation = np.linalg.norm(points[found + step] - points[neighbors[found] + step], axis=1)
        separation = separation[separation > 0]
        if separation.size:
            divergence[step] = np.mean(np.log(separation))
    steps = np.arange(params.fit_start, params.fit_stop + 1)
    curve = divergence[steps]
    finite = np.isfinite(curve)
    if finite.sum() < 2:
        raise DataError("Divergence curve has fewer than two finite points in the fit window.")
    slope = np.polyfit(steps[finite], curve[finite], 1)[0]
    return LyapunovEstimate(
        float(slope / dt), (params.fit_start, params.fit_stop), ROSENSTEIN, divergence=divergence
    )


def benettin_lle(deriv, x0, dt, n_steps, renorm_interval=10, d0=1.0e-8, transient_steps=0):
    """Estimate the largest Lyapunov exponent from the vector field (two-trajectory method).

    Args:
        deriv (Callable): vector field, e.g. an ODE model
        x0 (array-like): initial state
        dt (float): RK4 step
        n_steps (int): measured steps after the transient
        renorm_interval (int): steps between renormalizations
        d0 (float): separation after each renormalization
        transient_steps (int): steps discarded before measuring
    Returns:
        (LyapunovEstimate): mean log stretching rate per unit time
    Raises:
        (NumericalError): if the base trajectory diverges

    """
    if n_steps < renorm_interval or renorm_interval < 1:
        raise DataError("n_steps must cover at least one renormalization interval.")
    x = np.asarray(x0, dtype=float)
    for step in range(transient_steps):
        x = rk4_step(deriv, x, dt)
        if is_diverged(x):
            raise NumericalError(f"Base trajectory diverged during the transient at step {step + 1}.")
    direction = np.ones_like(x) / np.sqrt(x.size)
    y = x + d0 * direction
    total = 0.0
    intervals = n_steps // renorm_interval
    for interval in range(intervals):
        for _ in range(renorm_interval):
            x = rk4_step(deriv, x, dt)
            y = rk4_step(deriv, y, dt)
        if is_diverged(x):
            raise NumericalError(f"Base trajectory diverged after {interval + 1} renormalizations.")
        separation = y - x
        distance = np.linalg.norm(separation)
        if not np.isfinite(distance) or distance == 0:
            raise NumericalError("Perturbed trajectory separation became degenerate.")
        total += np.log(distance / d0)
        y = x + separation * (d0 / distance)
    measured = intervals * renorm_interval
    return LyapunovEstimate(
        float(total / (measured * dt)), (transient_steps, transient_steps + measured), BENETTIN
    )


def observable_lle(traj, index, discard, params=None):
    """Rosenstein estimate on one state component after discarding a transient."""
    series = np.asarray(traj.states)[discard:, index]
    return rosenstein_lle(series, traj.dt, params)
