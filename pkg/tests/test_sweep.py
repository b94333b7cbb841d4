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
import json
import math
from dataclasses import replace
from unittest import TestCase

from pangrc.analysis.bifurcation import BifurcationDiagram
from pangrc.analysis.bifurcation import BifurcationRow
from pangrc.analysis.bifurcation import ensemble_starts
from pangrc.analysis.bifurcation import GenerationRecipe
from pangrc.analysis.bifurcation import mean_exponent
from pangrc.analysis.bifurcation import RunSettings
from pangrc.analysis.lyapunov import observable_lle
from pangrc.analysis.sweep import gamma_sweep
from pangrc.analysis.sweep import GammaResult
from pangrc.analysis.sweep import GammaSweepResult
from pangrc.analysis.sweep import lambda_envelope
from pangrc.analysis.sweep import lyapunov_tolerance
from pangrc.analysis.sweep import reference_exponents
from pangrc.analysis.sweep import training_exponents
from pangrc.analysis.sweep import validate
from pangrc.analysis.sweep import ValidationPoint
from pangrc.features import NgrcConfig
from pangrc.models import FoodChainModel
from pangrc.models import integrate
from pangrc.training import TrainingSample
from pangrc.training import TrainingSet
from pangrc.util import DataError


def diagram(values):
    """Return a diagram with the given theta -> lambda values."""
    return BifurcationDiagram([BifurcationRow(theta=theta, lambda_max=value) for theta, value in values.items()])


class ValidationTestCase(TestCase):
    """
    TestCase class for gamma validation
    """

    def test_tolerance(self):
        """Test the tolerance is 5 percent of |lambda| with a 0.005 floor."""
        self.assertAlmostEqual(lyapunov_tolerance(0.2), 0.01)
        self.assertAlmostEqual(lyapunov_tolerance(-0.4), 0.02)
        self.assertAlmostEqual(lyapunov_tolerance(0.01), 0.005)

    def test_validate(self):
        """Test each training theta passes only within tolerance."""
        reference = {1.0: 0.2, 2.0: 0.2, 3.0: 0.0}
        points = validate(diagram({1.0: 0.205, 2.0: 0.25, 3.0: -0.004}), reference)
        self.assertEqual([point.passed for point in points], [True, False, True])
        self.assertAlmostEqual(points[0].tolerance, 0.01)

    def test_missing_or_collapsed_fails(self):
        """Test a missing row or a NaN exponent fails validation."""
        points = validate(diagram({1.0: math.nan}), {1.0: 0.1, 2.0: 0.1})
        self.assertEqual([point.passed for point in points], [False, False])

    def test_passed_requires_all_points(self):
        """Test a gamma passes only when every validation point does."""
        good = ValidationPoint(1.0, 0.1, 0.1, 0.005, True)
        bad = ValidationPoint(2.0, 0.1, 0.3, 0.005, False)
        self.assertTrue(GammaResult(0.6, validation=[good]).passed)
        self.assertFalse(GammaResult(0.6, validation=[good, bad]).passed)
        self.assertFalse(GammaResult(0.6, validation=[good], error="singular").passed)
        self.assertFalse(GammaResult(0.6).passed)


class EnvelopeTestCase(TestCase):
    """
    TestCase class for the lambda envelope
    """

    def test_envelope_over_passing(self):
        """Test failing gammas are left out of the envelope."""
        good = ValidationPoint(1.0, 0.1, 0.1, 0.005, True)
        bad = ValidationPoint(1.0, 0.1, 0.5, 0.005, False)
        results = [
            GammaResult(0.6, diagram({1.0: 0.1, 2.0: 0.3}), [good]),
            GammaResult(0.8, diagram({1.0: 0.12, 2.0: math.nan}), [good]),
            GammaResult(1.1, diagram({1.0: 0.9, 2.0: 0.9}), [bad]),
        ]
        envelope = lambda_envelope(results, [1.0, 2.0, 3.0])
        self.assertEqual(envelope[0], {"theta": 1.0, "lambda_min": 0.1, "lambda_max": 0.12, "count": 2})
        self.assertEqual(envelope[1], {"theta": 2.0, "lambda_min": 0.3, "lambda_max": 0.3, "count": 1})
        self.assertEqual(envelope[2], {"theta": 3.0, "lambda_min": None, "lambda_max": None, "count": 0})
        sweep = GammaSweepResult(results, envelope)
        self.assertEqual(sweep.passing, [0.6, 0.8])
        document = json.loads(json.dumps(sweep.to_dict()))
        self.assertIsNone(document["gammas"][1]["lambda_curve"][1]["lambda_max"])


class GammaSweepTestCase(TestCase):
    """
    TestCase class for the gamma sweep driver
    """

    def setUp(self):
        """Build a tiny food chain training set."""
        self.ode = FoodChainModel()
        samples = [
            TrainingSample(integrate(self.ode.with_theta(theta), self.ode.default_x0, 0.1, 1500), theta)
            for theta in (0.92, 0.94)
        ]
        self.training_set = TrainingSet(samples)
        self.config = NgrcConfig(d=3, k=2, s=2, orders=(1, 2), state_orders=(0, 1), beta=1.0e-3)
        self.settings = RunSettings(self.ode, GenerationRecipe(x0=self.ode.default_x0, dt=0.1, n_steps=300))

    def test_empty_gamma_list(self):
        """Test an empty gamma list is rejected."""
        with self.assertRaises(DataError):
            gamma_sweep(self.training_set, self.config, [], [0.93], self.settings)

    def test_one_result_per_gamma(self):
        """Test results are sorted by gamma and validated at the training thetas."""
        result = gamma_sweep(self.training_set, self.config, [0.5, 0.2], [0.93], self.settings)
        self.assertEqual([entry.gamma for entry in result.results], [0.2, 0.5])
        for entry in result.results:
            self.assertEqual([point.theta for point in entry.validation], [0.92, 0.94])
            self.assertEqual(entry.diagram.thetas, [0.92, 0.93, 0.94])
        self.assertEqual([entry["theta"] for entry in result.envelope], [0.92, 0.93, 0.94])

    def test_reference_single_rollout(self):
        """Test one rollout keeps the plain training-data exponents."""
        expected = training_exponents(self.training_set, 2, 0.3)
        self.assertEqual(reference_exponents(self.training_set, self.settings, 2), expected)

    def test_reference_rollout_average(self):
        """Test extra rollouts add ground-truth runs from the same orbit offsets."""
        settings = replace(self.settings, rollouts=2, rollout_offset=100)
        reference = reference_exponents(self.training_set, settings, 2)
        for sample in self.training_set:
            system = self.ode.with_theta(sample.theta)
            traj = sample.trajectory
            estimates = [training_exponents(TrainingSet([sample]), 2, 0.3)[sample.theta]]
            start = ensemble_starts(system, traj.states[0], traj.dt, 2, 100)[1]
            run = integrate(system, start, traj.dt, len(traj) - 1)
            try:
                estimates.append(observable_lle(run, 2, int(round(0.3 * len(traj)))).lambda_max)
            except DataError:
                pass
            expected = mean_exponent(estimates)
            with self.subTest(theta=sample.theta):
                if math.isnan(expected):
                    self.assertTrue(math.isnan(reference[sample.theta]))
                else:
                    self.assertAlmostEqual(reference[sample.theta], expected, places=12)
