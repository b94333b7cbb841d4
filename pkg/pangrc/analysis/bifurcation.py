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
"""Bifurcation diagrams from ground-truth integration and from trained models."""
import math
from dataclasses import dataclass
from dataclasses import field
from functools import partial
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from pangrc.analysis.lyapunov import observable_lle
from pangrc.analysis.lyapunov import RosensteinParams
from pangrc.models import integrate
from pangrc.predictor import detect_collapse
from pangrc.predictor import free_run
from pangrc.predictor import make_warmup
from pangrc.util import DataError
from pangrc.util import LOG
from pangrc.util import NumericalError
from pangrc.util import parallel_map
from scipy.signal import argrelmax
from scipy.stats import ks_2samp

COLLAPSE_TIPPING = "collapse"
DISCONTINUITY_TIPPING = "discontinuity"


def local_maxima(series, discard=0):
    """Return the strict interior local maxima after dropping the first discard points."""
    segment = np.asarray(series, dtype=float)[max(0, int(discard)) :]
    if segment.size < 3:
        return []
    return [float(value) for value in segment[argrelmax(segment)[0]]]


@dataclass
class BifurcationRow:
    """One parameter value of a bifurcation diagram."""

    theta: float
    scatter: List[float] = field(default_factory=list)
    lambda_max: float = math.nan
    collapse: Optional[str] = None
    collapse_step: Optional[int] = None
    error: Optional[str] = None


@dataclass
class BifurcationDiagram:
    """Rows sorted by theta."""

    rows: List[BifurcationRow] = field(default_factory=list)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda row: row.theta)

    def __len__(self):
        """Return the number of rows."""
        return len(self.rows)

    def __iter__(self):
        """Iterate over rows."""
        return iter(self.rows)

    @property
    def thetas(self):
        """Return the parameter values."""
        return [row.theta for row in self.rows]

    def scatter_points(self):
        """Return (theta, value) pairs in long format."""
        return [(row.theta, value) for row in self.rows for value in row.scatter]

    def summary(self):
        """Return (theta, lambda_max, collapse) triples."""
        return [(row.theta, row.lambda_max, row.collapse or "") for row in self.rows]

    def row_at(self, theta, tol=1e-12):
        """Return the row closest to theta within tol, or None."""
        for row in self.rows:
            if abs(row.theta - theta) <= tol:
                return row
        return None


@dataclass(frozen=True)
class GenerationRecipe:
    """Integration settings for ground-truth runs."""

    x0: Tuple[float, ...]
    dt: float
    n_steps: int
    transient_fraction: float = 0.3
    observable: Optional[int] = None
    lyapunov: RosensteinParams = field(default_factory=RosensteinParams)

    def discard(self):
        """Return the number of leading states dropped as transient."""
        return int(round(self.transient_fraction * (self.n_steps + 1)))


@dataclass(frozen=True)
class RunSettings:
    """Prediction settings for diagrams reconstructed from a trained model.

    ``ode_model`` provides the RK4 warm-up and the collapse rules. With
    ``warmup="fixed"`` every grid point starts from the warm-up integrated
    at ``warmup_theta``; with ``warmup="rk4"`` it is integrated at the grid value.
    ``rollouts`` > 1 averages the Lyapunov exponent over rollouts whose warm-ups
    start ``rollout_offset`` RK4 steps apart along the same orbit.
    """

    ode_model: object
    recipe: GenerationRecipe
    warmup: str = "rk4"
    warmup_theta: Optional[float] = None
    rollouts: int = 1
    rollout_offset: int = 500


def ensemble_starts(model, x0, dt, count, offset):
    """Return up to count initial states, offset RK4 steps apart on the orbit of x0.

    The first start is x0 itself. The list is shorter when the orbit diverges.
    """
    starts = [np.asarray(x0, dtype=float)]
    if count <= 1:
        return starts
    if offset < 1:
        raise DataError(f"rollout_offset must be at least 1, got {offset}.")
    traj = integrate(model, x0, dt, offset * (count - 1))
    for position in range(1, count):
        if position * offset >= len(traj):
            break
        starts.append(traj.states[position * offset].copy())
    return starts


def mean_exponent(estimates):
    """Return the mean of the finite estimates, or NaN when there are none."""
    finite = [value for value in estimates if math.isfinite(value)]
    return float(np.mean(finite)) if finite else math.nan


def _observable(model, recipe):
    return model.default_observable if recipe.observable is None else recipe.observable


def _row_from_trajectory(theta, traj, collapse, recipe, observable):
    row = BifurcationRow(theta=float(theta))
    discard = recipe.discard()
    end = len(traj)
    if collapse is not None:
        row.collapse = collapse.kind
        row.collapse_step = int(collapse.step)
        end = min(end, collapse.step)
    row.scatter = local_maxima(np.asarray(traj.states)[:end, observable], discard)
    if collapse is None:
        try:
            row.lambda_max = observable_lle(traj, observable, discard, recipe.lyapunov).lambda_max
        except (DataError, NumericalError) as err:
            row.error = str(err)
            LOG.warning(f"Lyapunov estimate failed at theta={theta}: {err}")
    return row


def _ground_truth_row(theta, model, recipe):
    system = model.with_theta(theta)
    traj = integrate(system, recipe.x0, recipe.dt, recipe.n_steps)
    collapse = detect_collapse(traj, system.collapse_rules())
    return _row_from_trajectory(theta, traj, collapse, recipe, _observable(model, recipe))


def ground_truth_bifurcation(model, grid, recipe, threads=1):
    """Integrate the ODE at each grid value and summarize the attractor.

    Every grid value starts from recipe.x0. Per-point divergence is recorded
    in its row.
    """
    grid = [float(theta) for theta in grid]
    if not grid:
        raise DataError("The parameter grid is empty.")
    LOG.info(f"Ground-truth diagram over {len(grid)} values of {model.parameter_name}")
    rows = parallel_map(partial(_ground_truth_row, model=model, recipe=recipe), grid, threads)
    return BifurcationDiagram(rows)


def _rollout_exponent(start, trained, theta, settings, system):
    recipe = settings.recipe
    warmup = make_warmup(system, start, recipe.dt, trained)
    result = free_run(warmup, trained, theta, recipe.n_steps, system.collapse_rules())
    if result.collapse is not None:
        return math.nan
    return observable_lle(result.trajectory, _observable(system, recipe), recipe.discard(), recipe.lyapunov).lambda_max


def _predicted_row(theta, trained, settings):
    ode = settings.ode_model
    recipe = settings.recipe
    warmup_theta = theta if settings.warmup == "rk4" else settings.warmup_theta
    system = ode.with_theta(warmup_theta)
    try:
        starts = ensemble_starts(system, recipe.x0, recipe.dt, settings.rollouts, settings.rollout_offset)
        warmup = make_warmup(system, starts[0], recipe.dt, trained)
        result = free_run(warmup, trained, theta, recipe.n_steps, ode.collapse_rules())
    except (DataError, NumericalError) as err:
        LOG.warning(f"Prediction failed at theta={theta}: {err}")
        return BifurcationRow(theta=float(theta), error=str(err))
    row = _row_from_trajectory(theta, result.trajectory, result.collapse, recipe, _observable(ode, recipe))
    if row.collapse is None and row.error is None and len(starts) > 1:
        estimates = [row.lambda_max]
        for start in starts[1:]:
            try:
                estimates.append(_rollout_exponent(start, trained, theta, settings, system))
            except (DataError, NumericalError) as err:
                LOG.debug(f"Extra rollout at theta={theta} skipped: {err}")
        row.lambda_max = mean_exponent(estimates)
    return row


def reconstruct_bifurcation(trained, grid, settings, threads=1):
    """Free-run the trained model at each grid value and summarize its attractor."""
    grid = [float(theta) for theta in grid]
    if not grid:
        raise DataError("The parameter grid is empty.")
    if settings.warmup not in ("rk4", "fixed"):
        raise DataError(f"Unknown warm-up source {settings.warmup!r}.")
    if settings.warmup == "fixed" and settings.warmup_theta is None:
        raise DataError("A fixed warm-up needs warmup_theta.")
    LOG.info(f"Reconstructing diagram over {len(grid)} parameter values")
    rows = parallel_map(partial(_predicted_row, trained=trained, settings=settings), grid, threads)
    return BifurcationDiagram(rows)


@dataclass(frozen=True)
class TippingPoint:
    """A located tipping point between two adjacent grid values."""

    theta_critical: float
    kind: str
    lower: float
    upper: float
    detail: str = ""


def _envelope_jumps(rows):
    pairs = []
    for left, right in zip(rows[:-1], rows[1:]):
        if left.collapse or right.collapse or not left.scatter or not right.scatter:
            continue
        jump = max(abs(max(right.scatter) - max(left.scatter)), abs(min(right.scatter) - min(left.scatter)))
        pairs.append((left, right, jump))
    return pairs


def find_tipping(diagram, jump_factor=3.0, window=5, min_jump=1.0e-6):
    """Locate collapse boundaries and scatter discontinuities.

    Args:
        diagram (BifurcationDiagram): sorted rows
        jump_factor (float): a jump must exceed this multiple of the median
            neighbouring jump to count as a discontinuity
        window (int): neighbouring pairs on each side used for the median
        min_jump (float): relative floor, scaled by the envelope magnitude
    Returns:
        (list): TippingPoint entries ordered by theta

    """
    rows = diagram.rows
    found = []
    for left, right in zip(rows[:-1], rows[1:]):
        if bool(left.collapse) != bool(right.collapse):
            kind = right.collapse or left.collapse
            found.append(
                TippingPoint(0.5 * (left.theta + right.theta), COLLAPSE_TIPPING, left.theta, right.theta, kind)
            )
    pairs = _envelope_jumps(rows)
    if pairs:
        jumps = np.array([jump for _, _, jump in pairs])
        scale = max(max(abs(v) for row in rows for v in row.scatter), 1.0) if diagram.scatter_points() else 1.0
        for position, (left, right, jump) in enumerate(pairs):
            lo = max(0, position - window)
            neighbours = np.concatenate([jumps[lo:position], jumps[position + 1 : position + window + 1]])
            if neighbours.size == 0:
                continue
            local = float(np.median(neighbours))
            if jump > jump_factor * local and jump > min_jump * scale:
                found.append(
                    TippingPoint(
                        0.5 * (left.theta + right.theta),
                        DISCONTINUITY_TIPPING,
                        left.theta,
                        right.theta,
                        f"envelope jump {jump:.6g} vs local {local:.6g}",
                    )
                )
    return sorted(found, key=lambda point: (point.theta_critical, point.kind))


def ks_statistic(first, second):
    """Two-sample Kolmogorov-Smirnov distance between scatter sets; NaN if either is empty."""
    if len(first) == 0 or len(second) == 0:
        return math.nan
    return float(ks_2samp(first, second).statistic)


def compare_diagrams(truth, predicted, tol=1e-12):
    """Return (theta, ks distance) for every theta present in both diagrams."""
    distances = []
    for row in predicted.rows:
        reference = truth.row_at(row.theta, tol)
        if reference is not None:
            distances.append((row.theta, ks_statistic(reference.scatter, row.scatter)))
    return distances
