"""Instance and result file formats (versioned JSON) plus OBJ export.

Instance files carry the camera, optionally the Manhattan rotation, the
2D segments (optionally pre-labeled), and optional ground-truth edge
labels. All writers serialize deterministically (sorted keys, repr
floats), so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import SchemaError
from .geometry import CameraIntrinsics, Direction, Point2H, WorldRotation

SCHEMA_VERSION = 1

_POINT2 = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_POINT3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_MAT9 = {"type": "array", "items": {"type": "number"}, "minItems": 9, "maxItems": 9}

SCENE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "camera", "lines"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "camera": {
            "type": "object",
            "required": ["k", "width", "height"],
            "properties": {
                "k": _MAT9,
                "width": {"type": "integer", "minimum": 1},
                "height": {"type": "integer", "minimum": 1},
            },
        },
        "rotation": _MAT9,
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "p1", "p2"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "p1": _POINT2,
                    "p2": _POINT2,
                    "dir": {"enum": ["x", "y", "z"]},
                },
            },
        },
        "gt_edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["i", "j", "real"],
                "properties": {
                    "i": {"type": "integer", "minimum": 0},
                    "j": {"type": "integer", "minimum": 0},
                    "real": {"type": "boolean"},
                },
            },
        },
    },
}

RECONSTRUCTION_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "status", "objective", "component", "lines", "edges"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "status": {"enum": ["optimal", "budget_incumbent"]},
        "objective": {"type": "number"},
        "component": {"type": "array", "items": {"type": "integer"}},
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "p1", "p2"],
                "properties": {"id": {"type": "integer"}, "p1": _POINT3, "p2": _POINT3},
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["i", "j", "b"],
                "properties": {"i": {"type": "integer"}, "j": {"type": "integer"},
                               "b": {"enum": [0, 1]}},
            },
        },
    },
}


@dataclass
class InstanceLine:
    """One detected 2D segment as stored in an instance file."""

    id: int
    p1: Point2H
    p2: Point2H
    direction: Direction | None = None


@dataclass
class SceneInstance:
    """Calibrated camera plus 2D segments, optionally labeled."""

    camera: CameraIntrinsics
    lines: list[InstanceLine]
    rotation: WorldRotation | None = None
    gt_edges: dict[tuple[int, int], bool] = field(default_factory=dict)

    @property
    def fully_labeled(self) -> bool:
        return bool(self.lines) and all(ln.direction is not None for ln in self.lines)


def _validate(data: dict, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"invalid {what} file at '{path}': {exc.message}", path=path)


def _dump(data: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _load(path: str, schema: dict, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid {what} file: not valid JSON ({exc})")
    _validate(data, schema, what)
    return data


def instance_to_dict(inst: SceneInstance) -> dict:
    data: dict = {
        "schema_version": SCHEMA_VERSION,
        "camera": {
            "k": [float(x) for x in inst.camera.k.reshape(-1)],
            "width": inst.camera.width,
            "height": inst.camera.height,
        },
        "lines": [],
    }
    if inst.rotation is not None:
        data["rotation"] = [float(x) for x in inst.rotation.r.reshape(-1)]
    for ln in sorted(inst.lines, key=lambda l: l.id):
        rec = {"id": ln.id, "p1": list(ln.p1.xy()), "p2": list(ln.p2.xy())}
        if ln.direction is not None:
            rec["dir"] = ln.direction.value
        data["lines"].append(rec)
    if inst.gt_edges:
        data["gt_edges"] = [
            {"i": i, "j": j, "real": real}
            for (i, j), real in sorted(inst.gt_edges.items())
        ]
    return data


def instance_from_dict(data: dict) -> SceneInstance:
    _validate(data, SCENE_SCHEMA, "instance")
    cam = CameraIntrinsics(
        k=np.array(data["camera"]["k"], dtype=float).reshape(3, 3),
        width=data["camera"]["width"], height=data["camera"]["height"])
    rotation = None
    if "rotation" in data:
        rotation = WorldRotation(np.array(data["rotation"], dtype=float).reshape(3, 3))
    lines = []
    ids = set()
    for rec in data["lines"]:
        if rec["id"] in ids:
            raise SchemaError(f"duplicate line id {rec['id']}", path="lines")
        ids.add(rec["id"])
        direction = Direction(rec["dir"]) if "dir" in rec else None
        lines.append(InstanceLine(
            id=rec["id"],
            p1=Point2H.from_xy(*rec["p1"]),
            p2=Point2H.from_xy(*rec["p2"]),
            direction=direction))
        for u, v in (rec["p1"], rec["p2"]):
            if not (0 <= u <= cam.width and 0 <= v <= cam.height):
                warnings.warn(
                    f"line {rec['id']} endpoint ({u:.1f}, {v:.1f}) lies outside "
                    f"the {cam.width}x{cam.height} image", stacklevel=2)
    gt_edges = {}
    for rec in data.get("gt_edges", []):
        i, j = sorted((rec["i"], rec["j"]))
        gt_edges[(i, j)] = rec["real"]
    return SceneInstance(camera=cam, lines=lines, rotation=rotation, gt_edges=gt_edges)


def write_instance(inst: SceneInstance, path: str) -> None:
    _dump(instance_to_dict(inst), path)


def read_instance(path: str) -> SceneInstance:
    return instance_from_dict(_load(path, SCENE_SCHEMA, "instance"))


def reconstruction_to_dict(rec) -> dict:
    """Serialize a milp.Reconstruction."""
    lines = []
    for vid in sorted({key[0] for key in rec.points}):
        p1, p2 = rec.line(vid)
        lines.append({"id": vid, "p1": [float(x) for x in p1],
                      "p2": [float(x) for x in p2]})
    return {
        "schema_version": SCHEMA_VERSION,
        "status": rec.status.value,
        "objective": float(rec.objective),
        "component": sorted(rec.component),
        "lines": lines,
        "edges": [{"i": i, "j": j, "b": b}
                  for (i, j), b in sorted(rec.edge_decisions.items())],
    }


def write_reconstruction(rec, path: str) -> None:
    _dump(reconstruction_to_dict(rec), path)


def read_reconstruction(path: str) -> dict:
    return _load(path, RECONSTRUCTION_SCHEMA, "reconstruction")


def write_obj(rec, path: str) -> None:
    """Wavefront OBJ wireframe: `v x y z` vertices, `l i j` polylines.

    12 significant digits, so re-importing reproduces coordinates to 1e-9
    at typical scene scales.
    """
    lines_out = ["# linelift wireframe"]
    index = {}
    for vid in sorted({key[0] for key in rec.points}):
        for a in (1, 2):
            p = rec.points[(vid, a)]
            index[(vid, a)] = len(index) + 1  # OBJ indices are 1-based
            lines_out.append("v " + " ".join(f"{float(c):.12g}" for c in p))
    for vid in sorted({key[0] for key in rec.points}):
        lines_out.append(f"l {index[(vid, 1)]} {index[(vid, 2)]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines_out) + "\n")


def read_obj(path: str) -> tuple[list[np.ndarray], list[tuple[int, int]]]:
    """Parse the vertices and line elements back (for round-trip checks)."""
    verts, polylines = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            parts = raw.split()
            if not parts or parts[0] == "#":
                continue
            if parts[0] == "v":
                verts.append(np.array([float(x) for x in parts[1:4]]))
            elif parts[0] == "l":
                polylines.append((int(parts[1]), int(parts[2])))
    return verts, polylines
