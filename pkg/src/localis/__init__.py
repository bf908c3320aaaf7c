"""Desk-scale laboratory for localisation of operators on homogeneous groups.

Groups (Euclidean and Heisenberg) with dilations, the scaled group acting on
sampled functions, Simonenko-type symbols of operator matrices, and the
reconstruction of operators from local data.
"""

from .function_space import GridSpec, PairingKind, RegionMask, SampledFunction, make_grid
from .group_core import Group, ScaledElement, euclidean, heisenberg
from .localization import local_equiv, presymbol, symbol, symbol_field
from .operator_lab import WindowSpec, enorm_proxy, local_type_score
from .representation import RepParams, act, double_act
from .synthesis import OperatorField, envelope_sum, inverse_covariant

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "PairingKind", "RegionMask", "SampledFunction", "make_grid",
    "Group", "ScaledElement", "euclidean", "heisenberg",
    "local_equiv", "presymbol", "symbol", "symbol_field",
    "WindowSpec", "enorm_proxy", "local_type_score",
    "RepParams", "act", "double_act",
    "OperatorField", "envelope_sum", "inverse_covariant",
]
