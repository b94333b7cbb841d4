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
import os
from tempfile import TemporaryDirectory
from unittest import TestCase

from pangrc.config import build_model
from pangrc.config import config_hash
from pangrc.config import config_to_dict
from pangrc.config import default_config
from pangrc.config import generation_recipe
from pangrc.config import load_config
from pangrc.config import make_grid
from pangrc.config import ngrc_config
from pangrc.config import preset_path
from pangrc.config import PRESETS
from pangrc.config import run_settings
from pangrc.features import feature_dim
from pangrc.util import ConfigError
from pangrc.util import load_yaml


class PresetTestCase(TestCase):
    """
    TestCase class for the shipped presets
    """

    def test_presets_exist(self):
        """Test every preset file ships with the package."""
        for name in PRESETS:
            with self.subTest(name=name):
                self.assertTrue(os.path.isfile(preset_path(name)))
        self.assertIsNone(preset_path("lorenz"))

    def test_model_presets_match_defaults(self):
        """Test the model presets spell out the built-in defaults."""
        for name in ("power-system", "food-chain"):
            with self.subTest(name=name):
                self.assertEqual(config_to_dict(load_yaml(preset_path(name))), config_to_dict(default_config(name)))

    def test_published_feature_dimensions(self):
        """Test the presets give 493 and 271 features."""
        power = load_config("power-system")
        food = load_config("food-chain")
        self.assertEqual(feature_dim(ngrc_config(power, 4)), 493)
        self.assertEqual(feature_dim(ngrc_config(food, 3)), 271)
        self.assertEqual(power.ngrc.beta, 1.0e-8)
        self.assertEqual(food.ngrc.beta, 1.0e-3)

    def test_training_grids(self):
        """Test the published training values."""
        power = load_config("power-system")
        food = load_config("food-chain")
        self.assertEqual(power.training.thetas, [2.98953, 2.98956, 2.98960, 2.98964, 2.98967, 2.98969, 2.98975])
        self.assertEqual(food.training.thetas, [0.92, 0.925, 0.93, 0.935, 0.94, 0.945, 0.95])

    def test_food_chain_gamma_scan(self):
        """Test the food chain sweep scans 15 gamma values over [0.3, 0.5]."""
        gammas = load_config("food-chain").sweep.gammas
        self.assertEqual(len(gammas), 15)
        self.assertEqual((gammas[0], gammas[7], gammas[-1]), (0.3, 0.4, 0.5))
        self.assertEqual(gammas, sorted(gammas))
        self.assertTrue(all(abs(b - a - 0.2 / 14) < 1e-4 for a, b in zip(gammas, gammas[1:])))

    def test_schedule_presets(self):
        """Test the schedule presets inherit the food chain defaults."""
        switch = load_config("food-chain-switch")
        self.assertEqual(switch.schedule.kind, "step")
        self.assertEqual(switch.schedule.before, 0.955)
        self.assertEqual(switch.schedule.after, 0.965)
        self.assertEqual(switch.ngrc.k, 4)
        sine = load_config("food-chain-sine")
        self.assertEqual(sine.schedule.kind, "sine-linear")


class LoadConfigTestCase(TestCase):
    """
    TestCase class for loading and validation
    """

    def assertConfigError(self, document, fragment):
        """Assert loading document fails with a message containing fragment."""
        with self.assertRaises(ConfigError) as context:
            load_config(document)
        self.assertIn(fragment, str(context.exception))

    def test_default_is_power_system(self):
        """Test no source gives the power-system setup."""
        self.assertEqual(load_config().model.name, "power-system")

    def test_overrides_merge(self):
        """Test partial documents merge over the model defaults."""
        config = load_config({"model": {"name": "food-chain"}, "ngrc": {"gamma": 0.3}})
        self.assertEqual(config.ngrc.gamma, 0.3)
        self.assertEqual(config.ngrc.k, 4)
        self.assertEqual(config.generation.dt, 0.1)

    def test_unknown_key(self):
        """Test unknown keys are rejected with their dotted path."""
        self.assertConfigError({"ngrc": {"kk": 2}}, "ngrc.kk: unknown key")
        self.assertConfigError({"extra": 1}, "extra: unknown key")
        self.assertConfigError({"prediction": {"grid": {"start": 1.0, "stop": 2.0, "step": 0.1, "x": 1}}}, "grid.x")

    def test_wrong_type(self):
        """Test wrong types name the field."""
        self.assertConfigError({"ngrc": {"k": "two"}}, "ngrc.k: must be of type integer")
        self.assertConfigError({"ngrc": {"k": True}}, "ngrc.k: must be of type integer")
        self.assertConfigError({"training": {"thetas": [1.0, "x"]}}, "training.thetas")
        self.assertConfigError({"generation": {"dt": None}}, "generation.dt: must not be null")

    def test_ranges(self):
        """Test out-of-range values are config errors."""
        self.assertConfigError({"generation": {"n_steps": 0}}, "generation.n_steps")
        self.assertConfigError({"prediction": {"n_steps": 0}}, "prediction.n_steps")
        self.assertConfigError({"sweep": {"gammas": []}}, "sweep.gammas")
        self.assertConfigError({"generation": {"x0": [1.0, 2.0]}}, "generation.x0")
        self.assertConfigError({"model": {"name": "lorenz"}}, "model.name")
        self.assertConfigError({"model": {"params": {"nope": 1.0}}}, "model.params")
        self.assertConfigError({"model": {"params": {"Q1": "abc"}}}, "model.params.Q1: must be a number")
        self.assertConfigError({"ngrc": {"k": 0}}, "ngrc.k")
        self.assertConfigError({"schedule": {"kind": "random"}}, "schedule.kind")
        self.assertConfigError({"prediction": {"warmup": "euler"}}, "prediction.warmup")

    def test_missing_file(self):
        """Test a missing file is a config error."""
        self.assertConfigError("/nonexistent/config.yml", "not found")

    def test_yaml_and_json_files(self):
        """Test YAML and JSON files load to the same configuration."""
        with TemporaryDirectory() as directory:
            yaml_path = os.path.join(directory, "config.yml")
            json_path = os.path.join(directory, "config.json")
            with open(yaml_path, "w") as file:
                file.write("model:\n  name: food-chain\nngrc:\n  beta: 1.0e-4\n")
            with open(json_path, "w") as file:
                json.dump({"model": {"name": "food-chain"}, "ngrc": {"beta": 1.0e-4}}, file)
            self.assertEqual(load_config(yaml_path), load_config(json_path))
            self.assertEqual(load_config(yaml_path).ngrc.beta, 1.0e-4)

    def test_not_a_mapping(self):
        """Test a top-level list is rejected."""
        with TemporaryDirectory() as directory:
            path = os.path.join(directory, "config.yml")
            with open(path, "w") as file:
                file.write("- 1\n- 2\n")
            self.assertConfigError(path, "mapping")

    def test_round_trip(self):
        """Test parse, serialize, parse is the identity."""
        config = load_config("food-chain-switch")
        again = load_config(json.loads(json.dumps(config_to_dict(config))))
        self.assertEqual(config_to_dict(again), config_to_dict(config))
        self.assertEqual(config_hash(again), config_hash(config))
        self.assertNotEqual(config_hash(config), config_hash(load_config("food-chain")))


class GridTestCase(TestCase):
    """
    TestCase class for grid expansion
    """

    def test_step_grid(self):
        """Test the published power-system grid has 341 points."""
        grid = make_grid({"start": 2.98950, "stop": 2.98984, "step": 1.0e-6})
        self.assertEqual(len(grid), 341)
        self.assertEqual(grid[0], 2.9895)
        self.assertEqual(grid[-1], 2.98984)
        self.assertIn(2.98953, grid)

    def test_food_chain_grid(self):
        """Test the food chain grid has 561 points."""
        self.assertEqual(len(make_grid({"start": 0.92, "stop": 1.06, "step": 0.00025})), 561)

    def test_values(self):
        """Test explicit values are sorted."""
        self.assertEqual(make_grid({"values": [0.95, 0.92]}), [0.92, 0.95])
        self.assertEqual(make_grid(None), [])


class SettingsTestCase(TestCase):
    """
    TestCase class for building run objects from a configuration
    """

    def test_recipe_and_settings(self):
        """Test the recipe and run settings follow the configuration."""
        config = load_config("food-chain-switch")
        model = build_model(config)
        recipe = generation_recipe(config, model)
        self.assertEqual(recipe.n_steps, 25000)
        self.assertEqual(recipe.x0, (0.6, 0.35, 0.9))
        settings = run_settings(config, model)
        self.assertEqual(settings.recipe.n_steps, 40000)
        self.assertEqual(settings.warmup, "fixed")
        self.assertEqual(settings.warmup_theta, 0.955)
        self.assertEqual(settings.rollouts, 1)

    def test_power_system_rollouts(self):
        """Test the power system averages exponents over four rollouts."""
        config = load_config("power-system")
        settings = run_settings(config, build_model(config))
        self.assertEqual((settings.rollouts, settings.rollout_offset), (4, 500))
        with self.assertRaises(ConfigError):
            load_config({"lyapunov": {"rollouts": 0}})
