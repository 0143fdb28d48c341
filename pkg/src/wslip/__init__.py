"""Jump planning and control for wheeled-bipedal robots on the W-SLIP template.

Modules: ``model`` (dynamics), ``poly`` (polynomial trajectories), ``qp``
(active-set solver), ``stance_planner``, ``flight_planner``, ``tracking``,
``sim`` (hybrid closed-loop simulator) and ``cli``.
"""
from .kernels import BACKEND
from .model import FlightState, StanceInput, StanceState, WSlipParams

__version__ = "0.1.0"
__all__ = ["BACKEND", "FlightState", "StanceInput", "StanceState", "WSlipParams", "__version__"]
