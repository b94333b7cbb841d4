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
"""Long reproduction runs of the published experiments.

Skipped unless PANGRC_ACCEPTANCE=1. PANGRC_THREADS sets the worker count.
"""
import json
import math
import os
from tempfile import TemporaryDirectory
from unittest import skipUnless
from unittest import TestCase
from unittest.mock import patch

from pangrc.analysis import find_tipping
from pangrc.analysis import gamma_sweep
from pangrc.analysis import ground_truth_bifurcation
from pangrc.analysis import ks_statistic
from pangrc.analysis import local_maxima
from pangrc.analysis import reconstruct_bifurcation
from pangrc.analysis.bifurcation import COLLAPSE_TIPPING
from pangrc.analysis.bifurcation import DISCONTINUITY_TIPPING
from pangrc.config import build_model
from pangrc.config import generation_recipe
from pangrc.config import load_config
from pangrc.config import make_grid
from pangrc.config import ngrc_config
from pangrc.config import run_settings
from pangrc.models import integrate
from pangrc.predictor import TrainedModel
from pangrc.report import cmd_generate
from pangrc.report import cmd_lyapunov
from pangrc.report import cmd_nonstationary
from pangrc.report import cmd_train
from pangrc.report import simulate_training_set
from pangrc.training import fit

ACCEPTANCE = os.environ.get("PANGRC_ACCEPTANCE") == "1"
THREADS = int(os.environ.get("PANGRC_THREADS", "1"))


def collapse_points(tipping):
    return [point.theta_critical for point in tipping if point.kind == COLLAPSE_TIPPING]


def sign(value, tol=0.005):
    if value > tol:
        return 1
    if value < -tol:
        return -1
    return 0


@skipUnless(ACCEPTANCE, "set PANGRC_ACCEPTANCE=1 to run")
class PowerSystemAcceptanceTestCase(TestCase):
    """
    TestCase class for the voltage collapse experiments
    """

    @classmethod
    def setUpClass(cls):
        cls.config = load_config("power-system")
        cls.model = build_model(cls.config)
        cls.training_set = simulate_training_set(cls.config, cls.model)

    def test_ground_truth_collapse(self):
        """Test the integrated sweep collapses at Q1 = 2.989820."""
        grid = make_grid({"start": 2.98980, "stop": 2.98984, "step": 1.0e-6})
        diagram = ground_truth_bifurcation(self.model, grid, generation_recipe(self.config, self.model), THREADS)
        points = collapse_points(find_tipping(diagram))
        self.assertTrue(points)
        self.assertLessEqual(abs(points[0] - 2.989820), 5.0e-6)

    def test_predicted_collapse(self):
        """Test the trained model extrapolates the collapse."""
        trained = TrainedModel(fit(self.training_set, ngrc_config(self.config, self.model.dim), THREADS))
        grid = make_grid({"start": 2.98978, "stop": 2.98984, "step": 1.0e-6})
        diagram = reconstruct_bifurcation(trained, grid, run_settings(self.config, self.model), THREADS)
        points = collapse_points(find_tipping(diagram))
        self.assertTrue(points)
        if abs(points[0] - 2.989819) <= 2.0e-5:
            return
        self.assertTrue(any(2.98980 <= point <= 2.98984 for point in points))
        sweep = gamma_sweep(
            self.training_set,
            ngrc_config(self.config, self.model.dim),
            [0.6],
            list(self.training_set.thetas),
            run_settings(self.config, self.model),
            THREADS,
        )
        self.assertTrue(sweep.results[0].passed)

    def test_gamma_discrimination(self):
        """Test gamma 0.6, 0.8 and 1.05 pass validation and 1.1 fails."""
        sweep = gamma_sweep(
            self.training_set,
            ngrc_config(self.config, self.model.dim),
            [0.6, 0.8, 1.05, 1.1],
            list(self.training_set.thetas),
            run_settings(self.config, self.model),
            THREADS,
        )
        outcome = {result.gamma: result.passed for result in sweep.results}
        self.assertEqual(outcome, {0.6: True, 0.8: True, 1.05: True, 1.1: False})
        self.assertEqual(sweep.passing, [0.6, 0.8, 1.05])


@skipUnless(ACCEPTANCE, "set PANGRC_ACCEPTANCE=1 to run")
class FoodChainAcceptanceTestCase(TestCase):
    """
    TestCase class for the food chain tipping experiments
    """

    @classmethod
    def setUpClass(cls):
        cls.directory = TemporaryDirectory()
        cls.config = load_config("food-chain-switch")
        cls.config.generation.grid = None
        cls.config.output.directory = cls.directory.name
        with patch("builtins.print"):
            cmd_generate(cls.config, THREADS)
            cmd_train(cls.config, threads=THREADS)
        cls.trained = TrainedModel.load(os.path.join(cls.directory.name, "model.json"))

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def test_tipping_capture(self):
        """Test the reconstructed diagram jumps near 0.96075 and collapses near 0.99875."""
        config = load_config("food-chain")
        model = build_model(config)
        diagram = reconstruct_bifurcation(
            self.trained, make_grid(config.prediction.grid), run_settings(config, model), THREADS
        )
        tipping = find_tipping(diagram, config.tipping.jump_factor, config.tipping.window)
        jumps = [point.theta_critical for point in tipping if point.kind == DISCONTINUITY_TIPPING]
        self.assertTrue(any(abs(theta - 0.96075) <= 0.005 for theta in jumps), jumps)
        self.assertTrue(any(abs(theta - 0.99875) <= 0.005 for theta in collapse_points(tipping)))

    def test_switch_transition(self):
        """Test the step schedule run stays bounded and changes its maxima distribution."""
        model = build_model(self.config)
        recipe = generation_recipe(self.config, model, 20000)
        observable = model.default_observable
        maxima = []
        for theta in (0.955, 0.965):
            traj = integrate(model.with_theta(theta), recipe.x0, recipe.dt, recipe.n_steps)
            maxima.append(local_maxima(traj.states[:, observable], recipe.discard()))
        self.assertGreater(ks_statistic(*maxima), 0.2)

        result = cmd_nonstationary(self.config)
        self.assertIsNone(result.collapse)
        self.assertGreaterEqual(len(result.trajectory) - 1, 20000)
        with open(os.path.join(self.directory.name, "nonstationary_summary.json")) as file:
            summary = json.load(file)
        self.assertGreater(summary["ks_statistic"], 0.2)


@skipUnless(ACCEPTANCE, "set PANGRC_ACCEPTANCE=1 to run")
class LyapunovAcceptanceTestCase(TestCase):
    """
    TestCase class for the estimator cross-check on both systems
    """

    def check(self, preset, thetas):
        with TemporaryDirectory() as directory:
            config = load_config(preset)
            config.lyapunov.thetas = thetas
            config.output.directory = directory
            with patch("builtins.print"):
                rows = cmd_lyapunov(config)
        for theta, rosenstein, benettin in rows:
            with self.subTest(theta=theta):
                self.assertFalse(math.isnan(rosenstein))
                self.assertEqual(sign(rosenstein), sign(benettin))
                if benettin > 0.005:
                    self.assertLessEqual(abs(rosenstein - benettin), 0.25 * benettin)

    def test_food_chain(self):
        """Test both estimators agree in periodic and chaotic regimes of the food chain."""
        self.check("food-chain", [0.94, 0.95, 0.955, 0.985, 0.99, 0.995])

    def test_power_system(self):
        """Test both estimators agree for the power system."""
        self.check("power-system", [2.98953, 2.98960, 2.98967, 2.98975, 2.98978, 2.98979])
