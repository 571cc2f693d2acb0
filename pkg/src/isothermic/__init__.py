"""Discrete isothermic surfaces, their Darboux transforms, and closed transforms of cylinders and tori."""
from .quat import Quaternion
from .polarised import DiscreteCurve, PolarisedDomain1D, QMatrix2, RiccatiState
from .surface import Check, IsothermicNet, PolarisedDomain2D

__all__ = [
    "Check",
    "DiscreteCurve",
    "IsothermicNet",
    "PolarisedDomain1D",
    "PolarisedDomain2D",
    "QMatrix2",
    "Quaternion",
    "RiccatiState",
]
