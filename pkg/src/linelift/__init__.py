"""Single-view 3D Manhattan line reconstruction via MILP.

Back-projects labeled 2D line segments into 3D rays, decides which 2D
crossings are true 3D intersections by solving a mixed-integer linear
program with cycle, planarity, and boundary feasibility constraints, and
evaluates results via the real-edge fraction of the minimum spanning
tree of the line graph.
"""

from . import constraints, evaluate, geometry, linegraph, milp, pipeline, sceneio, synth
from .config import PipelineConfig, load_default_config
from .pipeline import PipelineResult, reconstruct_instance

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "PipelineResult",
    "constraints",
    "evaluate",
    "geometry",
    "linegraph",
    "load_default_config",
    "milp",
    "pipeline",
    "reconstruct_instance",
    "sceneio",
    "synth",
]
