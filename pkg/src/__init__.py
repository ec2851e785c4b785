"""
IAB Planner service layer: settings, schemas, result storage and HTTP routers.
"""

__version__ = "0.1.0"
