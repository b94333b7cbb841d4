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
"""Attractor analysis: Lyapunov exponents, bifurcation diagrams and gamma sweeps."""
from pangrc.analysis.bifurcation import BifurcationDiagram  # noqa: F401
from pangrc.analysis.bifurcation import BifurcationRow  # noqa: F401
from pangrc.analysis.bifurcation import compare_diagrams  # noqa: F401
from pangrc.analysis.bifurcation import find_tipping  # noqa: F401
from pangrc.analysis.bifurcation import GenerationRecipe  # noqa: F401
from pangrc.analysis.bifurcation import ground_truth_bifurcation  # noqa: F401
from pangrc.analysis.bifurcation import ks_statistic  # noqa: F401
from pangrc.analysis.bifurcation import local_maxima  # noqa: F401
from pangrc.analysis.bifurcation import reconstruct_bifurcation  # noqa: F401
from pangrc.analysis.bifurcation import RunSettings  # noqa: F401
from pangrc.analysis.bifurcation import TippingPoint  # noqa: F401
from pangrc.analysis.lyapunov import benettin_lle  # noqa: F401
from pangrc.analysis.lyapunov import LyapunovEstimate  # noqa: F401
from pangrc.analysis.lyapunov import observable_lle  # noqa: F401
from pangrc.analysis.lyapunov import rosenstein_lle  # noqa: F401
from pangrc.analysis.lyapunov import RosensteinParams  # noqa: F401
from pangrc.analysis.sweep import gamma_sweep  # noqa: F401
from pangrc.analysis.sweep import GammaSweepResult  # noqa: F401
