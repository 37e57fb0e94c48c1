"""Local-model numerics for conifold transitions.

Modules
-------
jets, conifold, potentials
    Truncated Taylor arithmetic, points and charts, Kaehler potentials.
forms, curvature
    (p,q)-form algebra and Chern curvature quantities.
gluing, analysis
    Glued metrics and forms, sampling, decay fits and weighted norms.
checks, cli, plotting
    Named numerical checks and the ``conifold-forge`` runner.
"""

from .conifold import Chart, ModelPoint, make_cyl_chart, phi_apply, phi_inverse, scale_action, smoothing_point
from .jets import Jet, jet_space

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "Jet",
    "ModelPoint",
    "jet_space",
    "make_cyl_chart",
    "phi_apply",
    "phi_inverse",
    "scale_action",
    "smoothing_point",
]
