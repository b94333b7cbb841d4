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
"""Closed-loop prediction with a trained NG-RC.

The trained readout acts as a one-step integrator
``x_{i+1} = x_i + W_out q(P(L(x_i)) + gamma * theta_i)``, where theta_i is
either fixed or read from a parameter schedule.
"""
import math
import os
from dataclasses import dataclass
from dataclasses import field
from typing import Optional

import numpy as np
from pangrc.features import apply_parameter_channel
from pangrc.features import delay_embed_all
from pangrc.features import feature_vector
from pangrc.features import monomial_table
from pangrc.features import MonomialTable
from pangrc.features import postprocess
from pangrc.models import DIVERGENCE
from pangrc.models import DIVERGENCE_BOUND
from pangrc.models import integrate
from pangrc.models import is_diverged
from pangrc.models import Trajectory
from pangrc.training import build_target_matrix
from pangrc.training import load_readout
from pangrc.training import ReadoutMatrix
from pangrc.training import save_readout
from pangrc.util import ConfigError
from pangrc.util import DataError

SCHEDULE_KINDS = ("constant", "step", "linear", "sine-linear", "explicit")


@dataclass
class TrainedModel:
    """A trained readout together with its monomial table."""

    readout: ReadoutMatrix
    table: MonomialTable = field(default=None)

    def __post_init__(self):
        if self.table is None:
            self.table = monomial_table(self.config.embed_dim, self.config.orders)
        if self.table.D != self.config.embed_dim or self.table.orders != self.config.orders:
            raise DataError("Monomial table does not match the architecture.")

    @property
    def config(self):
        """Return the NgrcConfig."""
        return self.readout.config

    @property
    def W_out(self):
        """Return the readout matrix values."""
        return self.readout.W_out

    @property
    def history_length(self):
        """Return the number of states a prediction step needs."""
        return self.config.warmup + 1

    def save(self, path):
        """Write the model as JSON."""
        save_readout(self.readout, path)

    @classmethod
    def load(cls, path):
        """Read a model written by save."""
        return cls(load_readout(path))


def save_model(model, path):
    """Write a TrainedModel (or a bare ReadoutMatrix) as JSON."""
    readout = model.readout if isinstance(model, TrainedModel) else model
    save_readout(readout, path)


def load_model(path):
    """Read a model JSON into a TrainedModel.

    Raises:
        (DataError): if the file is missing or unreadable

    """
    if not os.path.isfile(path):
        raise DataError(f"Model file not found: {path}")
    return TrainedModel.load(path)


@dataclass
class ParameterSchedule:
    """Per-step bifurcation parameter values.

    ``kind`` selects a generator; ``settings`` holds its parameters:

    - constant: theta
    - step: before, after, switch_step
    - linear: start, stop (linear over the run)
    - sine-linear: offset, slope, amplitude, period (time units);
      theta(t) = offset + slope * t + amplitude * sin(2 pi t / period)
    - explicit: values
    """

    kind: str
    settings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"schedule.kind: must be one of {', '.join(SCHEDULE_KINDS)}, got {self.kind!r}.")

    @classmethod
    def constant(cls, theta):
        """Return a constant schedule."""
        return cls("constant", {"theta": float(theta)})

    def _setting(self, name):
        try:
            return float(self.settings[name])
        except KeyError as err:
            raise ConfigError(f"schedule.{name}: required for a {self.kind} schedule.") from err

    def resolve(self, n_steps, dt):
        """Return theta at each of the n_steps + 1 rollout times.

        Step i -> i + 1 is driven by value i.
        """
        n_values = n_steps + 1
        times = dt * np.arange(n_values)
        if self.kind == "constant":
            return np.full(n_values, self._setting("theta"))
        if self.kind == "step":
            switch = int(self._setting("switch_step"))
            values = np.full(n_values, self._setting("before"))
            values[switch:] = self._setting("after")
            return values
        if self.kind == "linear":
            return np.linspace(self._setting("start"), self._setting("stop"), n_values)
        if self.kind == "sine-linear":
            period = self._setting("period")
            if period <= 0:
                raise ConfigError("schedule.period: must be positive.")
            return (
                self._setting("offset")
                + self._setting("slope") * times
                + self._setting("amplitude") * np.sin(2.0 * math.pi * times / period)
            )
        values = np.asarray(self.settings.get("values", []), dtype=float)
        if values.size < n_steps:
            raise DataError(f"Explicit schedule has {values.size} values but the run needs {n_steps}.")
        if values.size == n_steps:
            values = np.append(values, values[-1])
        return values[:n_values].copy()

    def to_dict(self):
        """Serialize to a plain dict."""
        return {"kind": self.kind, **self.settings}

    @classmethod
    def from_dict(cls, data):
        """Build from a mapping with a 'kind' key."""
        data = dict(data)
        kind = data.pop("kind", None)
        return cls(kind, data)


@dataclass(frozen=True)
class Collapse:
    """First collapse event in a trajectory."""

    step: int
    kind: str


@dataclass
class PredictionResult:
    """Rollout states (from the last warm-up state on), the thetas used and any collapse."""

    trajectory: Trajectory
    thetas: np.ndarray
    collapse: Optional[Collapse] = None

    @property
    def collapsed(self):
        """Return True when the rollout stopped on a collapse."""
        return self.collapse is not None


class CollapseMonitor:
    """Incremental collapse detection over a stream of states."""

    def __init__(self, rules=(), bound=DIVERGENCE_BOUND):
        """Initialize with sustained-threshold rules and a divergence bound."""
        self.rules = tuple(rules)
        self.bound = bound
        self._run_start = [None] * len(self.rules)

    def update(self, step, x):
        """Feed state x at index step; return a Collapse once a rule fires."""
        if is_diverged(x, self.bound):
            return Collapse(step, DIVERGENCE)
        for position, rule in enumerate(self.rules):
            if x[rule.index] < rule.threshold:
                if self._run_start[position] is None:
                    self._run_start[position] = step
                if step - self._run_start[position] + 1 >= rule.min_steps:
                    return Collapse(self._run_start[position], rule.kind)
            else:
                self._run_start[position] = None
        return None


def detect_collapse(traj, rules=(), bound=DIVERGENCE_BOUND):
    """Return the first collapse (step index, kind) in a trajectory, or None."""
    states = np.asarray(getattr(traj, "states", traj), dtype=float)
    monitor = CollapseMonitor(rules, bound)
    for step, x in enumerate(states):
        collapse = monitor.update(step, x)
        if collapse is not None:
            return collapse
    diverged_at = getattr(traj, "diverged_at", None)
    if diverged_at is not None:
        return Collapse(diverged_at, DIVERGENCE)
    return None


def _history_states(history, model):
    states = np.asarray(getattr(history, "states", history), dtype=float)
    if states.ndim != 2 or states.shape[1] != model.config.d:
        raise DataError(f"Warm-up must have shape (n, {model.config.d}), got {states.shape}.")
    if states.shape[0] < model.history_length:
        raise DataError(
            f"Warm-up has {states.shape[0]} states; the embedding needs {model.history_length} "
            f"(k={model.config.k}, s={model.config.s})."
        )
    return states[-model.history_length :]


def predict_step(history, model, theta):
    """Return x_{i+1} = x_i + W_out r~ from the last (k - 1) * s + 1 states."""
    states = _history_states(history, model)
    return states[-1] + model.W_out @ feature_vector(states, model.config, model.table, theta)


def free_run_nonstationary(warmup, model, schedule, n_steps, rules=(), bound=DIVERGENCE_BOUND):
    """Closed-loop rollout with a per-step parameter schedule.

    Args:
        warmup (Trajectory): at least (k - 1) * s + 1 ground-truth states
        model (TrainedModel): trained NG-RC
        schedule (ParameterSchedule or array-like): theta per step
        n_steps (int): rollout length
        rules (tuple): sustained-threshold collapse rules
    Returns:
        (PredictionResult): rollout truncated at the first collapse

    """
    if n_steps < 1:
        raise DataError(f"n_steps must be at least 1, got {n_steps}.")
    history = _history_states(warmup, model)
    dt = getattr(warmup, "dt", None) or model.readout.training.get("dt")
    if not dt:
        raise DataError("The rollout time step is unknown: pass a Trajectory as warm-up.")
    if isinstance(schedule, ParameterSchedule):
        thetas = schedule.resolve(n_steps, dt)
    else:
        thetas = ParameterSchedule("explicit", {"values": list(np.asarray(schedule, dtype=float))}).resolve(
            n_steps, dt
        )

    config = model.config
    lag = config.warmup
    offset = lag
    buffer = np.empty((lag + n_steps + 1, config.d))
    buffer[: lag + 1] = history
    t0 = getattr(warmup, "t0", 0.0) + (len(getattr(warmup, "states", history)) - 1) * dt
    monitor = CollapseMonitor(rules, bound)
    collapse = monitor.update(0, buffer[offset])
    stop = n_steps + 1
    if collapse is None:
        for step in range(n_steps):
            current = offset + step
            v = np.concatenate([buffer[current - j * config.s] for j in range(config.k)])
            r = apply_parameter_channel(model.table.evaluate(v), config.gamma, thetas[step])
            x_next = buffer[current] + model.W_out @ postprocess(r, config.state_orders)
            collapse = monitor.update(step + 1, x_next)
            if collapse is not None:
                if collapse.kind == DIVERGENCE:
                    stop = step + 1
                else:
                    buffer[current + 1] = x_next
                    stop = collapse.step + 1
                break
            buffer[current + 1] = x_next
    elif collapse.kind == DIVERGENCE:
        raise DataError("Warm-up ends in a diverged state.")
    else:
        stop = 1
    states = buffer[offset : offset + stop].copy()
    return PredictionResult(Trajectory(states, dt, t0), thetas[:stop].copy(), collapse)


def free_run(warmup, model, theta, n_steps, rules=(), bound=DIVERGENCE_BOUND):
    """Closed-loop rollout at a fixed bifurcation parameter."""
    return free_run_nonstationary(warmup, model, ParameterSchedule.constant(theta), n_steps, rules, bound)


def make_warmup(ode_model, x0, dt, model):
    """Integrate the ground-truth ODE for the (k - 1) * s + 1 warm-up states."""
    steps = model.config.warmup
    if steps == 0:
        return Trajectory(np.atleast_2d(np.asarray(x0, dtype=float)), dt)
    warmup = integrate(ode_model, x0, dt, steps)
    if warmup.diverged_at is not None:
        raise DataError(f"Warm-up integration diverged at step {warmup.diverged_at}.")
    return warmup


def teacher_forced_residuals(model, traj, theta):
    """Return one-step residuals x_{i+1} - (x_i + W_out r~_i) along a trajectory (d x columns)."""
    config = model.config
    rows = delay_embed_all(traj, config.k, config.s, stop=len(traj) - 1)
    features = postprocess(
        apply_parameter_channel(model.table.evaluate_rows(rows), config.gamma, theta), config.state_orders
    )
    targets = build_target_matrix(traj, config.warmup)
    return targets - model.W_out @ features.T
