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
"""Three-species chaotic food chain model.

State ``(R, C, P)``: resource, consumer and predator densities. The
resource carrying capacity ``K`` is the bifurcation parameter.
"""
from dataclasses import dataclass

import numpy as np
from pangrc.models.model import AbstractModel
from pangrc.models.model import CollapseRule
from pangrc.models.model import EXTINCTION
from pangrc.util import NumericalError

PREDATOR_INDEX = 2


@dataclass(frozen=True)
class FoodChainParams:
    """Food chain constants; K is the bifurcation parameter."""

    x_c: float = 0.4
    y_c: float = 2.009
    x_p: float = 0.08
    y_p: float = 2.876
    R0: float = 0.16129
    C0: float = 0.5
    K: float = 0.92

    def __post_init__(self):
        if not self.K > 0:
            raise NumericalError(f"Carrying capacity K must be positive, got {self.K}.")


def food_chain_deriv(x, p):
    """Evaluate the three food chain equations.

    Args:
        x (array-like): state (R, C, P)
        p (FoodChainParams): model constants
    Returns:
        (ndarray): (dR/dt, dC/dt, dP/dt)

    """
    resource, consumer, predator = (float(v) for v in x)
    uptake = resource / (resource + p.R0)
    predation = consumer / (consumer + p.C0)
    d_resource = resource * (1.0 - resource / p.K) - p.x_c * p.y_c * consumer * uptake
    d_consumer = p.x_c * consumer * (p.y_c * uptake - 1.0) - p.x_p * p.y_p * predator * predation
    d_predator = p.x_p * predator * (p.y_p * predation - 1.0)
    return np.array([d_resource, d_consumer, d_predator])


class FoodChainModel(AbstractModel):
    """Food chain model bound to a parameter set."""

    name = "food-chain"
    state_labels = ("R", "C", "P")
    parameter_name = "K"
    default_observable = PREDATOR_INDEX
    default_x0 = (0.6, 0.35, 0.9)
    default_dt = 0.1

    @classmethod
    def default_params(cls):
        """Return the default constants."""
        return FoodChainParams()

    def deriv(self, x):
        """Return the time derivative of the state x."""
        return food_chain_deriv(x, self.params)

    def collapse_rules(self):
        """Predator extinction: P below 1e-6 for 200 consecutive steps."""
        return (CollapseRule(index=PREDATOR_INDEX, threshold=1.0e-6, min_steps=200, kind=EXTINCTION),)
