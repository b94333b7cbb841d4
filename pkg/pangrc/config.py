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
"""Experiment configuration: defaults, presets, merging and validation."""
import math
import os
from collections import abc

from pangrc.analysis.bifurcation import GenerationRecipe
from pangrc.analysis.bifurcation import RunSettings
from pangrc.analysis.lyapunov import RosensteinParams
from pangrc.features import MONOMIAL_ORDER
from pangrc.features import NgrcConfig
from pangrc.models import get_model
from pangrc.models import MODEL_MAP
from pangrc.predictor import ParameterSchedule
from pangrc.util import ConfigError
from pangrc.util import deepupdate
from pangrc.util import dicta
from pangrc.util import load_yaml
from pangrc.util import LOG
from pangrc.util import settings_hash
from pangrc.util import to_dicta
from pangrc.util import to_plain

FILE_DIR = os.path.dirname(os.path.abspath(__file__))
STATIC_DIR = os.path.join(FILE_DIR, "static")
PRESETS = {
    "power-system": "power_system.yml",
    "food-chain": "food_chain.yml",
    "food-chain-switch": "food_chain_switch.yml",
    "food-chain-sine": "food_chain_sine.yml",
}

NUMBER = "number"
INTEGER = "integer"
STRING = "string"
BOOLEAN = "boolean"
MAPPING = "mapping"
NUMBER_LIST = "number list"
INTEGER_LIST = "integer list"

# dotted path -> (type, nullable); mappings marked open accept any keys
SCHEMA = {
    "model": (MAPPING, False),
    "model.name": (STRING, False),
    "model.params": (MAPPING, False),
    "generation": (MAPPING, False),
    "generation.x0": (NUMBER_LIST, True),
    "generation.dt": (NUMBER, False),
    "generation.n_steps": (INTEGER, False),
    "generation.transient_fraction": (NUMBER, False),
    "generation.observable": (INTEGER, True),
    "generation.grid": (MAPPING, True),
    "training": (MAPPING, False),
    "training.thetas": (NUMBER_LIST, False),
    "ngrc": (MAPPING, False),
    "ngrc.k": (INTEGER, False),
    "ngrc.s": (INTEGER, False),
    "ngrc.orders": (INTEGER_LIST, False),
    "ngrc.state_orders": (INTEGER_LIST, False),
    "ngrc.beta": (NUMBER, False),
    "ngrc.gamma": (NUMBER, False),
    "ngrc.monomial_order": (STRING, False),
    "prediction": (MAPPING, False),
    "prediction.n_steps": (INTEGER, False),
    "prediction.theta": (NUMBER, True),
    "prediction.warmup": (STRING, False),
    "prediction.warmup_theta": (NUMBER, True),
    "prediction.grid": (MAPPING, True),
    "prediction.ground_truth": (BOOLEAN, False),
    "schedule": (MAPPING, True),
    "sweep": (MAPPING, False),
    "sweep.gammas": (NUMBER_LIST, False),
    "sweep.grid": (MAPPING, True),
    "lyapunov": (MAPPING, False),
    "lyapunov.embed_dim": (INTEGER, False),
    "lyapunov.embed_delay": (INTEGER, True),
    "lyapunov.theiler": (INTEGER, True),
    "lyapunov.fit_start": (INTEGER, False),
    "lyapunov.fit_stop": (INTEGER, False),
    "lyapunov.thetas": (NUMBER_LIST, True),
    "lyapunov.renorm_interval": (INTEGER, False),
    "lyapunov.d0": (NUMBER, False),
    "lyapunov.rollouts": (INTEGER, False),
    "lyapunov.rollout_offset": (INTEGER, False),
    "tipping": (MAPPING, False),
    "tipping.jump_factor": (NUMBER, False),
    "tipping.window": (INTEGER, False),
    "output": (MAPPING, False),
    "output.directory": (STRING, False),
}
OPEN_MAPPINGS = ("model.params", "schedule")
GRID_KEYS = ("start", "stop", "step", "values")


def _common_defaults():
    return dicta(
        prediction=dicta(
            n_steps=10000, theta=None, warmup="rk4", warmup_theta=None, grid=None, ground_truth=False
        ),
        schedule=None,
        lyapunov=dicta(
            embed_dim=5,
            embed_delay=None,
            theiler=None,
            fit_start=5,
            fit_stop=50,
            thetas=None,
            renorm_interval=10,
            d0=1.0e-8,
            rollouts=1,
            rollout_offset=500,
        ),
        tipping=dicta(jump_factor=3.0, window=5),
        output=dicta(directory="out"),
    )


def _power_system_defaults():
    grid = dicta(start=2.98950, stop=2.98984, step=1.0e-6)
    return dicta(
        model=dicta(name="power-system", params=dicta()),
        generation=dicta(
            x0=[0.17, 0.05, 0.05, 0.83], dt=0.05, n_steps=10000, transient_fraction=0.3, observable=3, grid=grid.copy()
        ),
        training=dicta(thetas=[2.98953, 2.98956, 2.98960, 2.98964, 2.98967, 2.98969, 2.98975]),
        ngrc=dicta(
            k=2, s=2, orders=[1, 2, 3], state_orders=[0, 1, 2, 3], beta=1.0e-8, gamma=0.6, monomial_order=MONOMIAL_ORDER
        ),
        sweep=dicta(
            gammas=[0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0, 1.05],
            grid=dicta(start=2.98950, stop=2.98984, step=1.0e-5),
        ),
        prediction=dicta(n_steps=10000, grid=grid.copy()),
        lyapunov=dicta(rollouts=4),
    )


def _food_chain_defaults():
    grid = dicta(start=0.92, stop=1.06, step=0.00025)
    return dicta(
        model=dicta(name="food-chain", params=dicta()),
        generation=dicta(
            x0=[0.6, 0.35, 0.9], dt=0.1, n_steps=25000, transient_fraction=0.3, observable=2, grid=grid.copy()
        ),
        training=dicta(thetas=[0.92, 0.925, 0.93, 0.935, 0.94, 0.945, 0.95]),
        ngrc=dicta(
            k=4, s=4, orders=[1, 2], state_orders=[0, 1, 2, 3], beta=1.0e-3, gamma=0.4, monomial_order=MONOMIAL_ORDER
        ),
        sweep=dicta(
            gammas=[round(0.3 + 0.2 * position / 14, 4) for position in range(15)],
            grid=dicta(start=0.92, stop=1.06, step=0.0025),
        ),
        prediction=dicta(n_steps=25000, grid=grid.copy()),
    )


MODEL_DEFAULTS = {
    "power-system": _power_system_defaults,
    "food-chain": _food_chain_defaults,
}


def default_config(model_name="power-system"):
    """Return the published setup for a model as nested dicta."""
    if model_name not in MODEL_DEFAULTS:
        raise ConfigError(f"model.name: must be one of {', '.join(MODEL_MAP)}, got {model_name!r}.")
    return deepupdate(_common_defaults(), MODEL_DEFAULTS[model_name]())


def preset_path(name):
    """Return the path of a shipped preset, or None if name is not a preset."""
    filename = PRESETS.get(name)
    return os.path.join(STATIC_DIR, filename) if filename else None


def _read(source):
    if isinstance(source, abc.Mapping):
        return to_dicta(source)
    path = preset_path(source) or source
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {source}")
    try:
        document = load_yaml(path)
    except Exception as err:
        raise ConfigError(f"Config file {source} could not be parsed: {err}") from err
    if document is None:
        document = {}
    if not isinstance(document, abc.Mapping):
        raise ConfigError(f"Config file {source} must contain a mapping at the top level.")
    return to_dicta(document)


def load_config(source=None):
    """Load a preset name, a YAML/JSON file or a mapping, merge it over the defaults and validate.

    Args:
        source (str or dict): preset name, file path, mapping or None for the power-system defaults
    Returns:
        (dicta): validated configuration

    """
    document = _read(source) if source is not None else dicta()
    model = document.get("model") or {}
    name = model.get("name", "power-system") if isinstance(model, abc.Mapping) else "power-system"
    if not isinstance(name, str):
        raise ConfigError("model.name: must be of type string.")
    config = deepupdate(default_config(name), document)
    validate_config(config)
    LOG.debug(f"Loaded configuration for {name}")
    return config


def _type_ok(value, kind):
    if kind == NUMBER:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == INTEGER:
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == STRING:
        return isinstance(value, str)
    if kind == BOOLEAN:
        return isinstance(value, bool)
    if kind == MAPPING:
        return isinstance(value, abc.Mapping)
    if kind in (NUMBER_LIST, INTEGER_LIST):
        item_kind = NUMBER if kind == NUMBER_LIST else INTEGER
        return isinstance(value, (list, tuple)) and all(_type_ok(item, item_kind) for item in value)
    return False


def _check_keys(node, prefix=""):
    for key, value in node.items():
        path = f"{prefix}{key}"
        if path not in SCHEMA:
            raise ConfigError(f"{path}: unknown key.")
        kind, nullable = SCHEMA[path]
        if value is None:
            if not nullable:
                raise ConfigError(f"{path}: must not be null.")
            continue
        if not _type_ok(value, kind):
            raise ConfigError(f"{path}: must be of type {kind}.")
        if kind != MAPPING or path in OPEN_MAPPINGS:
            continue
        if path.endswith(".grid"):
            _check_grid(value, path)
        else:
            _check_keys(value, f"{path}.")


def _check_grid(grid, path):
    for key, value in grid.items():
        if key not in GRID_KEYS:
            raise ConfigError(f"{path}.{key}: unknown key.")
        if key == "values":
            if not _type_ok(value, NUMBER_LIST) or not value:
                raise ConfigError(f"{path}.values: must be a non-empty number list.")
        elif not _type_ok(value, NUMBER):
            raise ConfigError(f"{path}.{key}: must be of type number.")
    if "values" not in grid:
        missing = [key for key in ("start", "stop", "step") if key not in grid]
        if missing:
            raise ConfigError(f"{path}.{missing[0]}: required unless values are given.")
        if grid["step"] <= 0 or grid["stop"] < grid["start"]:
            raise ConfigError(f"{path}: needs step > 0 and stop >= start.")


def validate_config(config):
    """Check keys, types and ranges; raise ConfigError naming the offending field."""
    if not isinstance(config, abc.Mapping):
        raise ConfigError("Configuration must be a mapping.")
    _check_keys(config)
    if config.model.name not in MODEL_MAP:
        raise ConfigError(f"model.name: must be one of {', '.join(MODEL_MAP)}, got {config.model.name!r}.")
    model = get_model(config.model.name, config.model.params)
    generation = config.generation
    if generation.n_steps < 1:
        raise ConfigError(f"generation.n_steps: must be >= 1, got {generation.n_steps}.")
    if config.prediction.n_steps < 1:
        raise ConfigError(f"prediction.n_steps: must be >= 1, got {config.prediction.n_steps}.")
    if not generation.dt > 0:
        raise ConfigError(f"generation.dt: must be positive, got {generation.dt}.")
    if not 0 <= generation.transient_fraction < 1:
        raise ConfigError("generation.transient_fraction: must be in [0, 1).")
    if generation.x0 is not None and len(generation.x0) != model.dim:
        raise ConfigError(f"generation.x0: needs {model.dim} values for {model.name}, got {len(generation.x0)}.")
    if generation.observable is not None and not 0 <= generation.observable < model.dim:
        raise ConfigError(f"generation.observable: must be a state index below {model.dim}.")
    if not config.training.thetas:
        raise ConfigError("training.thetas: must not be empty.")
    if not config.sweep.gammas:
        raise ConfigError("sweep.gammas: must not be empty.")
    if config.prediction.warmup not in ("rk4", "fixed"):
        raise ConfigError("prediction.warmup: must be 'rk4' or 'fixed'.")
    if config.tipping.window < 1 or config.tipping.jump_factor <= 0:
        raise ConfigError("tipping: window must be >= 1 and jump_factor > 0.")
    if config.lyapunov.fit_stop <= config.lyapunov.fit_start:
        raise ConfigError("lyapunov.fit_stop: must exceed lyapunov.fit_start.")
    if config.lyapunov.rollouts < 1 or config.lyapunov.rollout_offset < 1:
        raise ConfigError("lyapunov.rollouts: rollouts and rollout_offset must be >= 1.")
    ngrc_config(config, model.dim)
    if config.schedule is not None:
        ParameterSchedule.from_dict(config.schedule)
    return config


def config_to_dict(config):
    """Return the configuration as plain dicts and lists."""
    return to_plain(config)


def config_hash(config):
    """Return the settings hash identifying a configuration; the output location is not part of it."""
    settings = config_to_dict(config)
    settings.pop("output", None)
    return settings_hash(settings)


def make_grid(grid):
    """Expand a grid {start, stop, step} or {values} into a sorted list."""
    if grid is None:
        return []
    if "values" in grid:
        return sorted(float(value) for value in grid["values"])
    start, stop, step = float(grid["start"]), float(grid["stop"]), float(grid["step"])
    count = int(math.floor((stop - start) / step + 0.5)) + 1
    return [round(start + step * index, 12) for index in range(count)]


def ngrc_config(config, dim):
    """Build the NgrcConfig of a configuration for state dimension dim."""
    return NgrcConfig(d=dim, **to_plain(config.ngrc))


def build_model(config):
    """Return the ODE model with parameter overrides applied."""
    return get_model(config.model.name, config.model.params)


def lyapunov_params(config):
    """Return the Rosenstein settings of a configuration."""
    settings = config.lyapunov
    return RosensteinParams(
        embed_dim=settings.embed_dim,
        embed_delay=settings.embed_delay,
        theiler=settings.theiler,
        fit_start=settings.fit_start,
        fit_stop=settings.fit_stop,
    )


def generation_recipe(config, model, n_steps=None):
    """Return the integration recipe of a configuration."""
    generation = config.generation
    return GenerationRecipe(
        x0=tuple(generation.x0 if generation.x0 is not None else model.default_x0),
        dt=float(generation.dt),
        n_steps=int(n_steps or generation.n_steps),
        transient_fraction=float(generation.transient_fraction),
        observable=generation.observable,
        lyapunov=lyapunov_params(config),
    )


def run_settings(config, model):
    """Return rollout settings for reconstructed diagrams."""
    prediction = config.prediction
    warmup_theta = prediction.warmup_theta
    if prediction.warmup == "fixed" and warmup_theta is None:
        warmup_theta = config.training.thetas[0]
    return RunSettings(
        ode_model=model,
        recipe=generation_recipe(config, model, prediction.n_steps),
        warmup=prediction.warmup,
        warmup_theta=warmup_theta,
        rollouts=config.lyapunov.rollouts,
        rollout_offset=config.lyapunov.rollout_offset,
    )
