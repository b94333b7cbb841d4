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
"""Generic power system model with voltage collapse.

State ``(delta_m, omega, delta, V)``: generator angle, rotor speed, load
angle and load voltage. ``Q1``, the load reactive power demand, is the
bifurcation parameter.
"""
import math
from dataclasses import dataclass

import numpy as np
from pangrc.models.model import AbstractModel
from pangrc.models.model import CollapseRule
from pangrc.models.model import VOLTAGE_COLLAPSE
from pangrc.util import NumericalError

VOLTAGE_INDEX = 3


@dataclass(frozen=True)
class PowerSystemParams:
    """Power system constants; Q1 is the bifurcation parameter.

    With Q0 = 1.3 the voltage collapses near Q1 = 2.98982.
    """

    K_pw: float = 0.4
    K_pv: float = 0.3
    K_qw: float = -0.03
    K_qv: float = -2.8
    K_qv2: float = 2.1
    T_load: float = 8.5
    P0: float = 0.6
    Q0: float = 1.3
    P1: float = 0.0
    Y0: float = 3.33
    Ym: float = 5.0
    Pm: float = 1.0
    dm: float = 0.05
    theta0: float = 0.0
    Em: float = 1.05
    M: float = 0.01464
    C: float = 3.5
    E0: float = 1.0
    Q1: float = 2.98953

    def __post_init__(self):
        for name in ("M", "K_qw", "K_pv", "T_load"):
            if getattr(self, name) == 0:
                raise NumericalError(f"Power system parameter {name} must be non-zero.")


@dataclass(frozen=True)
class DerivedPowerConstants:
    """Thevenin-equivalent constants E0', Y0' and theta0'."""

    E0_prime: float
    Y0_prime: float
    theta0_prime: float


def derived_constants(p):
    """Compute E0', Y0' and theta0' from the network constants.

    Args:
        p (PowerSystemParams): model constants
    Returns:
        (DerivedPowerConstants): the primed constants
    Raises:
        (NumericalError): if Y0 is zero or the radicand vanishes

    """
    if p.Y0 == 0:
        raise NumericalError("Y0 must be non-zero to derive the primed constants.")
    ratio = p.C / p.Y0
    root = math.sqrt(1.0 + ratio**2 - 2.0 * ratio * math.cos(p.theta0))
    if root == 0:
        raise NumericalError("C/Y0 = 1 with theta0 = 0 makes E0' undefined.")
    denominator = 1.0 - ratio * math.cos(p.theta0)
    if denominator == 0:
        raise NumericalError("theta0' is undefined for C cos(theta0) = Y0.")
    theta0_prime = p.theta0 + math.atan(ratio * math.sin(p.theta0) / denominator)
    return DerivedPowerConstants(E0_prime=p.E0 / root, Y0_prime=p.Y0 * root, theta0_prime=theta0_prime)


def power_system_deriv(x, p, constants=None):
    """Evaluate the four power system equations.

    Args:
        x (array-like): state (delta_m, omega, delta, V)
        p (PowerSystemParams): model constants
        constants (DerivedPowerConstants): precomputed primed constants (optional)
    Returns:
        (ndarray): (d delta_m/dt, d omega/dt, d delta/dt, dV/dt)

    """
    if constants is None:
        constants = derived_constants(p)
    delta_m, omega, delta, volt = (float(v) for v in x)
    e_y = constants.E0_prime * constants.Y0_prime
    em_ym = p.Em * p.Ym
    angle = delta_m - delta

    real_power = -e_y * volt * math.sin(delta) + em_ym * volt * math.sin(angle)
    # E0'Y0' V cos(delta) enters Q with a plus sign; with a minus every Q1 diverges within a few steps.
    reactive_power = (
        e_y * volt * math.cos(delta)
        - (constants.Y0_prime + p.Ym) * volt**2
        + em_ym * volt * math.cos(angle)
    )

    d_delta_m = omega
    d_omega = (-p.dm * omega + p.Pm - em_ym * math.sin(angle) * volt) / p.M
    d_delta = (-p.K_qv2 * volt**2 - p.K_qv * volt + reactive_power - p.Q0 - p.Q1) / p.K_qw
    d_volt = (
        p.K_pw * p.K_qv2 * volt**2
        + (p.K_pw * p.K_qv - p.K_qw * p.K_pv) * volt
        + p.K_qw * (real_power - p.P0 - p.P1)
        - p.K_pw * (reactive_power - p.Q0 - p.Q1)
    ) / (p.T_load * p.K_qw * p.K_pv)
    return np.array([d_delta_m, d_omega, d_delta, d_volt])


class PowerSystemModel(AbstractModel):
    """Power system model bound to a parameter set."""

    name = "power-system"
    state_labels = ("delta_m", "omega", "delta", "V")
    parameter_name = "Q1"
    default_observable = VOLTAGE_INDEX
    default_x0 = (0.17, 0.05, 0.05, 0.83)
    default_dt = 0.05

    def __init__(self, params=None):
        """Initialize the model and cache the primed constants."""
        super().__init__(params)
        self.constants = derived_constants(self.params)

    @classmethod
    def default_params(cls):
        """Return the default constants."""
        return PowerSystemParams()

    def deriv(self, x):
        """Return the time derivative of the state x."""
        return power_system_deriv(x, self.params, self.constants)

    def collapse_rules(self):
        """Voltage collapse: V below 0.05 for 200 consecutive steps."""
        return (CollapseRule(index=VOLTAGE_INDEX, threshold=0.05, min_steps=200, kind=VOLTAGE_COLLAPSE),)
