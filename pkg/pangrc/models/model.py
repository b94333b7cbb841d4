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
"""Defines the abstract ODE model, the RK4 integrator and trajectories."""
from abc import ABC
from abc import abstractmethod
from dataclasses import dataclass
from dataclasses import replace
from typing import Callable
from typing import Optional

import numpy as np
from pangrc.util import DataError

DIVERGENCE_BOUND = 1.0e6

DIVERGENCE = "divergence"
VOLTAGE_COLLAPSE = "voltage-collapse"
EXTINCTION = "extinction"


@dataclass(frozen=True)
class CollapseRule:
    """A sustained-threshold collapse rule on one state component.

    The rule fires at the first step of a run of at least ``min_steps``
    consecutive states whose component ``index`` is below ``threshold``.
    """

    index: int
    threshold: float
    min_steps: int
    kind: str


@dataclass
class Trajectory:
    """Uniformly sampled states of a d-dimensional system.

    ``states`` has shape (n, d). ``diverged_at`` is the step index at which
    integration left the divergence bound; the diverged state itself is not stored.
    """

    states: np.ndarray
    dt: float
    t0: float = 0.0
    diverged_at: Optional[int] = None

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] == 0:
            raise DataError("A trajectory needs at least one state.")
        if not self.dt > 0:
            raise DataError(f"Trajectory time step must be positive, got {self.dt}.")

    def __len__(self):
        """Return the number of states."""
        return self.states.shape[0]

    @property
    def dim(self):
        """Return the state dimension d."""
        return self.states.shape[1]

    @property
    def times(self):
        """Return the sample times."""
        return self.t0 + self.dt * np.arange(len(self))

    def segment(self, start, stop=None):
        """Return the states [start:stop] as a new trajectory with shifted t0."""
        return Trajectory(self.states[start:stop], self.dt, self.t0 + start * self.dt)


def is_diverged(x, bound=DIVERGENCE_BOUND):
    """Return True when x has a non-finite entry or one whose magnitude exceeds bound."""
    x = np.asarray(x)
    return bool(not np.all(np.isfinite(x)) or np.any(np.abs(x) > bound))


def rk4_step(deriv: Callable[[np.ndarray], np.ndarray], x, dt):
    """Advance x by one classical fourth-order Runge-Kutta step.

    Args:
        deriv (Callable): vector field f(x)
        x (ndarray): current state
        dt (float): time step, must be positive
    Returns:
        (ndarray): the next state, possibly non-finite (see is_diverged)

    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}.")
    x = np.asarray(x, dtype=float)
    k1 = deriv(x)
    k2 = deriv(x + 0.5 * dt * k1)
    k3 = deriv(x + 0.5 * dt * k2)
    k4 = deriv(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class AbstractModel(ABC):
    """Defines an abstract class for the benchmark ODE systems."""

    name = None
    state_labels = ()
    parameter_name = None
    default_observable = 0

    def __init__(self, params=None):
        """Initialize the model with a parameter dataclass (defaults if None)."""
        self.params = params if params is not None else self.default_params()

    @property
    def dim(self):
        """Return the state dimension d."""
        return len(self.state_labels)

    @property
    def theta(self):
        """Return the current bifurcation parameter value."""
        return getattr(self.params, self.parameter_name)

    def with_theta(self, theta):
        """Return a copy of the model at another bifurcation parameter value."""
        return self.__class__(replace(self.params, **{self.parameter_name: float(theta)}))

    def with_overrides(self, **overrides):
        """Return a copy of the model with some parameters replaced."""
        return self.__class__(replace(self.params, **overrides))

    def __call__(self, x):
        """Evaluate the vector field at x."""
        return self.deriv(x)

    def __repr__(self):
        """Return a readable representation."""
        return f"{self.__class__.__name__}({self.params!r})"

    @classmethod
    @abstractmethod
    def default_params(cls):
        """Return the default parameter dataclass."""

    @abstractmethod
    def deriv(self, x):
        """Return the time derivative of the state x."""

    @abstractmethod
    def collapse_rules(self):
        """Return the sustained-threshold collapse rules of this system."""


def integrate(model, x0, dt, n_steps, bound=DIVERGENCE_BOUND, t0=0.0):
    """Integrate a model (or any vector field callable) with fixed-step RK4.

    Args:
        model (Callable): vector field, usually an AbstractModel
        x0 (array-like): initial state
        dt (float): time step
        n_steps (int): number of steps, the trajectory holds n_steps + 1 states
        bound (float): divergence bound on any component
    Returns:
        (Trajectory): truncated before the first diverged state, with diverged_at set

    """
    if n_steps < 1:
        raise DataError(f"n_steps must be at least 1, got {n_steps}.")
    x = np.asarray(x0, dtype=float)
    states = np.empty((n_steps + 1, x.size))
    states[0] = x
    for step in range(1, n_steps + 1):
        x = rk4_step(model, x, dt)
        if is_diverged(x, bound):
            return Trajectory(states[:step].copy(), dt, t0, diverged_at=step)
        states[step] = x
    return Trajectory(states, dt, t0)
