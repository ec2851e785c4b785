"""
Routers for the IAB planner API.
"""

from .bap import router as bap_router
from .experiments import router as experiments_router

__all__ = ["bap_router", "experiments_router"]
