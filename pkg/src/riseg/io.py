"""On-disk formats: scene JSON, PGM rasters, flow fields and run configs."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .scene import RigidBody, SceneState

FLOW_MAGIC = b"RISFLOW1"


def scene_to_dict(scene: SceneState) -> dict:
    return {
        "workspace": list(scene.workspace),
        "pixel_pitch": scene.pixel_pitch,
        "image_size": list(scene.image_size),
        "bodies": [
            {
                "id": b.id,
                "vertices": b.vertices.tolist(),
                "pose": {"theta": b.theta, "x": b.x, "y": b.y},
            }
            for b in scene.bodies
        ],
    }


def scene_from_dict(d: dict) -> SceneState:
    try:
        bodies = [
            RigidBody(int(b["id"]), b["vertices"], b["pose"]["theta"], b["pose"]["x"], b["pose"]["y"])
            for b in d["bodies"]
        ]
        return SceneState(tuple(bodies), tuple(d["workspace"]), float(d["pixel_pitch"]), tuple(d["image_size"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed scene document: {exc}") from exc


def write_scene(path, scene: SceneState) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=1) + "\n")


def read_scene(path) -> SceneState:
    return scene_from_dict(json.loads(Path(path).read_text()))


def write_pgm(path, image: np.ndarray, maxval: int) -> None:
    """Binary (P5) PGM. 16-bit samples are big-endian as the format requires."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM images are 2-D")
    if img.min(initial=0) < 0 or img.max(initial=0) > maxval:
        raise ValueError(f"values outside [0, {maxval}]")
    h, w = img.shape
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + img.astype(dtype).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while data[pos : pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise FormatError("only binary P5 PGM is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    return arr.reshape(h, w).astype(np.int32)


def write_label_pgm(path, labels: np.ndarray) -> None:
    write_pgm(path, labels, 65535)


def write_uncertainty_pgm(path, values: np.ndarray) -> None:
    write_pgm(path, values, 255)


def write_flow(path, du: np.ndarray, dv: np.ndarray) -> None:
    du = np.asarray(du, dtype="<f4")
    dv = np.asarray(dv, dtype="<f4")
    if du.shape != dv.shape or du.ndim != 2:
        raise ValueError("du and dv must be equal-shape 2-D arrays")
    h, w = du.shape
    Path(path).write_bytes(FLOW_MAGIC + struct.pack("<II", h, w) + du.tobytes() + dv.tobytes())


def read_flow(path):
    data = Path(path).read_bytes()
    if data[:8] != FLOW_MAGIC:
        raise FormatError("bad flow magic")
    h, w = struct.unpack("<II", data[8:16])
    n = h * w
    if len(data) != 16 + 8 * n:
        raise FormatError("flow payload has the wrong size")
    du = np.frombuffer(data, dtype="<f4", count=n, offset=16).reshape(h, w)
    dv = np.frombuffer(data, dtype="<f4", count=n, offset=16 + 4 * n).reshape(h, w)
    return du.astype(np.float64), dv.astype(np.float64)
