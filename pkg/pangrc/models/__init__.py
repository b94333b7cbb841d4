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
"""Benchmark ODE models."""
from pangrc.models.food_chain_model import food_chain_deriv  # noqa: F401
from pangrc.models.food_chain_model import FoodChainModel
from pangrc.models.food_chain_model import FoodChainParams  # noqa: F401
from pangrc.models.model import AbstractModel  # noqa: F401
from pangrc.models.model import CollapseRule  # noqa: F401
from pangrc.models.model import DIVERGENCE  # noqa: F401
from pangrc.models.model import DIVERGENCE_BOUND  # noqa: F401
from pangrc.models.model import EXTINCTION  # noqa: F401
from pangrc.models.model import integrate  # noqa: F401
from pangrc.models.model import is_diverged  # noqa: F401
from pangrc.models.model import rk4_step  # noqa: F401
from pangrc.models.model import Trajectory  # noqa: F401
from pangrc.models.model import VOLTAGE_COLLAPSE  # noqa: F401
from pangrc.models.power_system_model import derived_constants  # noqa: F401
from pangrc.models.power_system_model import DerivedPowerConstants  # noqa: F401
from pangrc.models.power_system_model import power_system_deriv  # noqa: F401
from pangrc.models.power_system_model import PowerSystemModel
from pangrc.models.power_system_model import PowerSystemParams  # noqa: F401
from pangrc.util import ConfigError

MODEL_MAP = {
    PowerSystemModel.name: PowerSystemModel,
    FoodChainModel.name: FoodChainModel,
}


def _coerce_overrides(overrides):
    coerced = {}
    for name, value in overrides.items():
        if isinstance(value, bool):
            raise ConfigError(f"model.params.{name}: must be a number, got {value!r}.")
        try:
            coerced[name] = float(value)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"model.params.{name}: must be a number, got {value!r}.") from err
    return coerced


def get_model(name, overrides=None):
    """Build a model by name, applying numeric parameter overrides."""
    model_cls = MODEL_MAP.get(name)
    if not model_cls:
        raise ConfigError(f"Invalid model: {name} (expected one of {', '.join(MODEL_MAP)}).")
    model = model_cls()
    if overrides:
        try:
            model = model.with_overrides(**_coerce_overrides(overrides))
        except TypeError as err:
            raise ConfigError(f"model.params: {err}") from err
    return model
