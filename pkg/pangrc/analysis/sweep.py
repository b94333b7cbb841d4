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
"""Sweep the parameter-channel scale gamma and validate each reconstruction."""
import math
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Dict
from typing import List
from typing import Optional

import numpy as np
from pangrc.analysis.bifurcation import BifurcationDiagram
from pangrc.analysis.bifurcation import ensemble_starts
from pangrc.analysis.bifurcation import mean_exponent
from pangrc.analysis.bifurcation import reconstruct_bifurcation
from pangrc.analysis.lyapunov import observable_lle
from pangrc.models import integrate
from pangrc.predictor import detect_collapse
from pangrc.predictor import TrainedModel
from pangrc.training import fit
from pangrc.util import DataError
from pangrc.util import LOG
from pangrc.util import NumericalError

RELATIVE_TOLERANCE = 0.05
ABSOLUTE_TOLERANCE = 0.005


def lyapunov_tolerance(reference, relative=RELATIVE_TOLERANCE, absolute=ABSOLUTE_TOLERANCE):
    """Return the accepted |lambda_pred - lambda_true| for a reference exponent."""
    return max(relative * abs(reference), absolute)


@dataclass
class ValidationPoint:
    """Predicted against training-data exponent at one training theta."""

    theta: float
    lambda_true: float
    lambda_pred: float
    tolerance: float
    passed: bool


@dataclass
class GammaResult:
    """Outcome of one gamma value."""

    gamma: float
    diagram: Optional[BifurcationDiagram] = None
    validation: List[ValidationPoint] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def passed(self):
        """Return True when training succeeded and every validation point passed."""
        return self.error is None and bool(self.validation) and all(point.passed for point in self.validation)

    def lambda_curve(self):
        """Return (theta, lambda_max) pairs of the reconstructed diagram."""
        if self.diagram is None:
            return []
        return [(row.theta, row.lambda_max) for row in self.diagram.rows]


@dataclass
class GammaSweepResult:
    """All gamma outcomes plus the lambda envelope over the passing ones."""

    results: List[GammaResult]
    envelope: List[Dict[str, float]]

    @property
    def passing(self):
        """Return the gammas whose reconstructions validated."""
        return [result.gamma for result in self.results if result.passed]

    def to_dict(self):
        """Return a JSON-ready mapping."""
        return {
            "gammas": [
                {
                    "gamma": result.gamma,
                    "passed": result.passed,
                    "error": result.error,
                    "validation": [vars(point) for point in result.validation],
                    "lambda_curve": [
                        {"theta": theta, "lambda_max": _json_float(value)} for theta, value in result.lambda_curve()
                    ],
                }
                for result in self.results
            ],
            "passing": self.passing,
            "envelope": self.envelope,
        }


def _json_float(value):
    return None if value is None or not math.isfinite(value) else float(value)


def training_exponents(training_set, observable, transient_fraction=0.3, params=None):
    """Return the Rosenstein exponent of every training trajectory, keyed by theta."""
    exponents = {}
    for sample in training_set:
        discard = int(round(transient_fraction * len(sample.trajectory)))
        try:
            exponents[sample.theta] = observable_lle(sample.trajectory, observable, discard, params).lambda_max
        except DataError as err:
            LOG.warning(f"No training exponent at theta={sample.theta}: {err}")
            exponents[sample.theta] = math.nan
    return exponents


def reference_exponents(training_set, settings, observable):
    """Return per-theta reference exponents averaged like the predicted ones.

    Each training trajectory contributes its own estimate. With
    ``settings.rollouts`` > 1 the ODE is also integrated from the same
    orbit offsets the predicted rollouts start from, for the same length,
    and those estimates join the mean.
    """
    recipe = settings.recipe
    reference = training_exponents(training_set, observable, recipe.transient_fraction, recipe.lyapunov)
    if settings.rollouts <= 1:
        return reference
    for sample in training_set:
        system = settings.ode_model.with_theta(sample.theta)
        traj = sample.trajectory
        discard = int(round(recipe.transient_fraction * len(traj)))
        starts = ensemble_starts(system, traj.states[0], traj.dt, settings.rollouts, settings.rollout_offset)
        estimates = [reference[sample.theta]]
        for start in starts[1:]:
            run = integrate(system, start, traj.dt, len(traj) - 1)
            if detect_collapse(run, system.collapse_rules()) is not None:
                continue
            try:
                estimates.append(observable_lle(run, observable, discard, recipe.lyapunov).lambda_max)
            except DataError as err:
                LOG.debug(f"Reference run at theta={sample.theta} skipped: {err}")
        reference[sample.theta] = mean_exponent(estimates)
    return reference


def validate(diagram, reference):
    """Compare predicted exponents at the training thetas with the training-data exponents."""
    points = []
    for theta, lambda_true in sorted(reference.items()):
        row = diagram.row_at(theta)
        lambda_pred = math.nan if row is None else row.lambda_max
        tolerance = lyapunov_tolerance(lambda_true) if math.isfinite(lambda_true) else math.nan
        finite = math.isfinite(lambda_pred) and math.isfinite(lambda_true)
        passed = finite and abs(lambda_pred - lambda_true) <= tolerance
        points.append(ValidationPoint(theta, lambda_true, lambda_pred, tolerance, bool(passed)))
    return points


def lambda_envelope(results, grid):
    """Return the per-theta min and max exponent over passing gamma values."""
    passing = [result for result in results if result.passed]
    envelope = []
    for theta in grid:
        values = []
        for result in passing:
            row = result.diagram.row_at(theta)
            if row is not None and math.isfinite(row.lambda_max):
                values.append(row.lambda_max)
        envelope.append(
            {
                "theta": float(theta),
                "lambda_min": float(np.min(values)) if values else None,
                "lambda_max": float(np.max(values)) if values else None,
                "count": len(values),
            }
        )
    return envelope


def gamma_sweep(training_set, config, gammas, grid, settings, threads=1):
    """Train once per gamma, reconstruct the diagram and validate it.

    Args:
        training_set (TrainingSet): multifunctional training data
        config (NgrcConfig): feature settings; gamma is replaced per entry
        gammas (list): gamma values
        grid (list): parameter values of the reconstructed diagrams
        settings (RunSettings): rollout settings
        threads (int): worker processes per diagram
    Returns:
        (GammaSweepResult): per-gamma outcomes and the envelope

    """
    if not gammas:
        raise DataError("The gamma list is empty.")
    recipe = settings.recipe
    observable = settings.ode_model.default_observable if recipe.observable is None else recipe.observable
    reference = reference_exponents(training_set, settings, observable)
    full_grid = sorted({round(float(theta), 12) for theta in grid} | {round(theta, 12) for theta in reference})
    results = []
    for gamma in sorted(float(value) for value in gammas):
        LOG.info(f"gamma={gamma}")
        result = GammaResult(gamma)
        try:
            trained = TrainedModel(fit(training_set, replace(config, gamma=gamma), threads))
        except NumericalError as err:
            result.error = str(err)
            LOG.warning(f"Training failed for gamma={gamma}: {err}")
            results.append(result)
            continue
        result.diagram = reconstruct_bifurcation(trained, full_grid, settings, threads)
        result.validation = validate(result.diagram, reference)
        LOG.info(f"gamma={gamma} {'passed' if result.passed else 'failed'} validation")
        results.append(result)
    return GammaSweepResult(results, lambda_envelope(results, full_grid))
