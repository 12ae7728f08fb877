"""
premcheck Services Package
Exact group-theoretic engines behind the 2-prem obstruction reports.
"""


class PremError(ValueError):
    """Base class for invariant and precondition violations in the engines."""


from app.services.freegroup import freegroup_service
from app.services.linkhomotopy import linkhomotopy_service
from app.services.braid import braid_service
from app.services.towers import tower_service
from app.services.foldmap import foldmap_service
from app.services.theta import theta_service

__all__ = [
    'PremError',
    'freegroup_service',
    'linkhomotopy_service',
    'braid_service',
    'tower_service',
    'foldmap_service',
    'theta_service'
]
