"""
premcheck API Routes Package
Provides braid, fold map, double point and verdict endpoints.
"""

from app.routes import braid, foldmap, theta, verdict

__all__ = ['braid', 'foldmap', 'theta', 'verdict']
