"""Pipeline configuration and tuned defaults.

Defaults follow the reconstruction protocol this package implements:
30-pixel segment extension, planarity weight mu1 = 0.5, boundary weight
mu2 = 10, and a 300 s solver budget. The junction weight table is not a
published set of values; it is a documented, configurable choice of this
package (corner-like Y junctions weighted highest).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

CONFIG_ENV_VAR = "LINELIFT_CONFIG"

#: Junction class -> objective weight of edges formed at such a junction.
#: Y junctions (three mutually non-collinear rays, typical of box corners)
#: dominate; X/HIGHER junctions are interior-interior crossings, the usual
#: signature of a coincidental 2D crossing rather than a corner.
DEFAULT_JUNCTION_WEIGHTS: dict[str, float] = {
    "L": 10.0,
    "T": 10.0,
    "Y": 30.0,
    "X": 10.0,
    "HIGHER": 10.0,
}


@dataclass
class PipelineConfig:
    """All knobs of the reconstruction pipeline, with tuned defaults."""

    # line graph construction
    extension_px: float = 30.0
    min_segment_length_px: float = 10.0
    junction_radius_px: float = 5.0
    junction_angle_tol_deg: float = 2.0
    junction_weights: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_JUNCTION_WEIGHTS))

    # geometry / labeling
    label_tol_deg: float = 5.0
    vp_ortho_tol_deg: float = 2.0
    seed: int = 0

    # planarity pair gating (bounding-box distance in pixels; inf = no gating)
    planarity_gate_px: float = math.inf

    # constraint families
    use_cycles: bool = True
    use_planarity: bool = True
    use_boundary: bool = True

    # MILP parameters
    mu1: float = 0.5
    mu2: float = 10.0
    slack_penalty: float = 10.0
    lambda_max: float = 1e4
    time_budget_s: float = 300.0
    mip_gap: float = 1e-6
    enable_slacks: bool = True
    strict_eq4: bool = False
    workers: int = 1

    def model_flags(self) -> dict[str, bool]:
        return {
            "cycles": self.use_cycles,
            "planarity": self.use_planarity,
            "boundary": self.use_boundary,
        }

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_default_config() -> PipelineConfig:
    """Default config, optionally overridden by $LINELIFT_CONFIG (a JSON path)."""
    path = os.environ.get(CONFIG_ENV_VAR)
    if path:
        return PipelineConfig.from_json(path)
    return PipelineConfig()
