"""Local stability of diffusively coupled patch networks at homogeneous equilibria."""

__version__ = "0.1.0"

from .assembly import (  # noqa: E402
    CoupledSystem,
    HomogeneousEquilibrium,
    average_jacobian,
    coupled_jacobian,
    eval_coupled_f,
    make_homogeneous_equilibrium,
    stack_index,
)
from .errors import ConvergenceError, DomainError, NetstabError, ScenarioError  # noqa: E402
from .graph import LayerEdge, LayeredNetwork, build_laplacian, fiedler_value, laplacian_set  # noqa: E402
from .models import LotkaVolterra, RatioDependent, RosenzweigMacArthur, make_model  # noqa: E402
from .stability import coupling_threshold, spectral_verdict, stability_report, theorem_verdict  # noqa: E402

__all__ = [
    "ConvergenceError",
    "CoupledSystem",
    "DomainError",
    "HomogeneousEquilibrium",
    "LayerEdge",
    "LayeredNetwork",
    "LotkaVolterra",
    "NetstabError",
    "RatioDependent",
    "RosenzweigMacArthur",
    "ScenarioError",
    "average_jacobian",
    "build_laplacian",
    "coupled_jacobian",
    "coupling_threshold",
    "eval_coupled_f",
    "fiedler_value",
    "laplacian_set",
    "make_homogeneous_equilibrium",
    "make_model",
    "spectral_verdict",
    "stability_report",
    "stack_index",
    "theorem_verdict",
]
