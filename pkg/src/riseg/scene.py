"""Planar rigid-body scenes: generation, quasi-static pushing and rasterization.

World coordinates are metres with z = 0 on the table. The camera looks
straight down; pixel ``(row, col)`` has its centre at

    x = xmin + (col + 0.5) * pixel_pitch
    y = ymin + (row + 0.5) * pixel_pitch

so flow ``du`` runs along columns (+x) and ``dv`` along rows (+y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from shapely.geometry import Point, Polygon
from shapely import affinity

from .errors import NoContact, PlacementFailure
from .se3 import Pose


@dataclass(frozen=True, eq=False)
class RigidBody:
    """Polygon in its own frame plus a planar pose ``(theta, x, y)``."""

    id: int
    vertices: np.ndarray
    theta: float = 0.0
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if self.id <= 0:
            raise ValueError("body ids must be positive")
        if len(v) < 3:
            raise ValueError("a body needs at least three vertices")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @property
    def pose(self) -> Pose:
        return Pose.planar(self.theta, self.x, self.y)

    def world_vertices(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        rot = np.array([[c, -s], [s, c]])
        return self.vertices @ rot.T + np.array([self.x, self.y])

    def polygon(self) -> Polygon:
        return Polygon(self.world_vertices())

    def centroid(self) -> np.ndarray:
        c = self.polygon().centroid
        return np.array([c.x, c.y])

    def moved(self, dtheta: float, shift, pivot) -> "RigidBody":
        """Rotate by ``dtheta`` about ``pivot`` (world xy), then translate by ``shift``."""
        c, s = math.cos(dtheta), math.sin(dtheta)
        pivot = np.asarray(pivot, dtype=float)
        t = np.array([self.x, self.y]) - pivot
        t = np.array([c * t[0] - s * t[1], s * t[0] + c * t[1]]) + pivot + np.asarray(shift, dtype=float)
        return replace(self, theta=self.theta + dtheta, x=float(t[0]), y=float(t[1]))

    def same_as(self, other: "RigidBody") -> bool:
        return (
            self.id == other.id
            and self.theta == other.theta
            and self.x == other.x
            and self.y == other.y
            and np.array_equal(self.vertices, other.vertices)
        )


@dataclass(frozen=True, eq=False)
class SceneState:
    bodies: tuple = ()
    workspace: tuple = (-0.256, -0.256, 0.256, 0.256)
    pixel_pitch: float = 0.002
    image_size: tuple = (256, 256)

    def __post_init__(self):
        object.__setattr__(self, "bodies", tuple(sorted(self.bodies, key=lambda b: b.id)))
        object.__setattr__(self, "workspace", tuple(float(w) for w in self.workspace))
        object.__setattr__(self, "image_size", tuple(int(s) for s in self.image_size))
        ids = [b.id for b in self.bodies]
        if len(set(ids)) != len(ids):
            raise ValueError("body ids must be unique")

    @property
    def ids(self) -> list[int]:
        return [b.id for b in self.bodies]

    def body(self, body_id: int) -> RigidBody:
        for b in self.bodies:
            if b.id == body_id:
                return b
        raise KeyError(body_id)

    def with_bodies(self, bodies) -> "SceneState":
        return replace(self, bodies=tuple(bodies))

    def pixel_to_world(self, rows, cols):
        xmin, ymin = self.workspace[0], self.workspace[1]
        rows = np.asarray(rows, dtype=float)
        cols = np.asarray(cols, dtype=float)
        return xmin + (cols + 0.5) * self.pixel_pitch, ymin + (rows + 0.5) * self.pixel_pitch

    def world_to_pixel(self, x, y):
        xmin, ymin = self.workspace[0], self.workspace[1]
        cols = (np.asarray(x, dtype=float) - xmin) / self.pixel_pitch - 0.5
        rows = (np.asarray(y, dtype=float) - ymin) / self.pixel_pitch - 0.5
        return rows, cols

    def same_as(self, other: "SceneState") -> bool:
        return (
            self.workspace == other.workspace
            and self.pixel_pitch == other.pixel_pitch
            and self.image_size == other.image_size
            and len(self.bodies) == len(other.bodies)
            and all(a.same_as(b) for a, b in zip(self.bodies, other.bodies))
        )


@dataclass(frozen=True)
class PushAction:
    """Push starting at pixel ``contact_point`` along ``direction`` (drow, dcol)."""

    contact_point: tuple
    direction: tuple
    distance: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        n = np.linalg.norm(d)
        if not n > 0:
            raise ValueError("push direction must be non-zero")
        if abs(n - 1.0) > 1e-9:
            d = d / n
        object.__setattr__(self, "direction", (float(d[0]), float(d[1])))
        object.__setattr__(self, "contact_point", tuple(float(c) for c in self.contact_point))
        object.__setattr__(self, "distance", float(self.distance))

    def to_dict(self, push_index: int | None = None) -> dict:
        out = {
            "contact_px": list(self.contact_point),
            "direction": list(self.direction),
            "distance_m": self.distance,
        }
        if push_index is not None:
            out = {"push_index": push_index, **out}
        return out


@dataclass(frozen=True)
class GeneratorConfig:
    n_vertices: tuple = (5, 10)
    diameter: tuple = (0.04, 0.10)
    radial_jitter: float = 0.2
    touch_eps: float = 0.002
    p_touch: float = 0.75
    gap: tuple = (0.006, 0.03)
    spread: float = 0.05
    margin: float = 0.02
    overlap_eps: float = 1e-6
    max_attempts: int = 200
    workspace: tuple = (-0.256, -0.256, 0.256, 0.256)
    pixel_pitch: float = 0.002
    image_size: tuple = (256, 256)


@dataclass(frozen=True)
class PushConfig:
    contact_eps: float = 0.01
    rot_gain: float = 1.0
    max_rot: float = 0.5
    max_chain: int = 4
    overlap_eps: float = 1e-6


def polygon_area(v) -> float:
    v = np.asarray(v, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def radius_of_gyration_sq(body: RigidBody) -> float:
    """Polar second moment about the centroid divided by area."""
    v = body.vertices - body.vertices.mean(axis=0)
    poly = Polygon(v)
    c = np.array([poly.centroid.x, poly.centroid.y])
    v = v - c
    x0, y0 = v[:, 0], v[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    cross = x0 * y1 - x1 * y0
    ixx = np.sum(cross * (y0**2 + y0 * y1 + y1**2)) / 12.0
    iyy = np.sum(cross * (x0**2 + x0 * x1 + x1**2)) / 12.0
    return float((ixx + iyy) / polygon_area(v))


def random_polygon(rng: np.random.Generator, cfg: GeneratorConfig) -> np.ndarray:
    """Star-shaped CCW polygon centred on its area centroid."""
    n = int(rng.integers(cfg.n_vertices[0], cfg.n_vertices[1] + 1))
    base = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    angles = base + rng.uniform(-0.3, 0.3, n) * (2 * np.pi / n)
    angles = np.sort(np.mod(angles + rng.uniform(0, 2 * np.pi), 2 * np.pi))
    radii = 1.0 + rng.uniform(-cfg.radial_jitter, cfg.radial_jitter, n)
    v = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    poly = Polygon(v)
    v = v - np.array([poly.centroid.x, poly.centroid.y])
    diam = np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1))
    target = rng.uniform(*cfg.diameter)
    return v * (target / diam)


def _inside_workspace(poly: Polygon, ws, margin: float) -> bool:
    xmin, ymin, xmax, ymax = poly.bounds
    return xmin >= ws[0] + margin and ymin >= ws[1] + margin and xmax <= ws[2] - margin and ymax <= ws[3] - margin


def _place_at_gap(anchor: Polygon, shape: Polygon, u: np.ndarray, gap: float) -> Polygon:
    """Slide ``shape`` along ``-u`` towards ``anchor`` until their gap is ``gap``."""
    ac = np.array([anchor.centroid.x, anchor.centroid.y])
    reach = math.sqrt(anchor.area) + math.sqrt(shape.area) + 1.0

    def at(s):
        p = ac + s * u
        return affinity.translate(shape, p[0], p[1])

    lo, hi = 0.0, reach
    while at(hi).distance(anchor) < gap:
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        cand = at(mid)
        if cand.intersects(anchor) and cand.intersection(anchor).area > 0:
            lo = mid
        elif cand.distance(anchor) < gap:
            lo = mid
        else:
            hi = mid
    return at(hi)


def count_touching_pairs(scene: SceneState, touch_eps: float) -> int:
    polys = [b.polygon() for b in scene.bodies]
    n = 0
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polys[i].distance(polys[j]) < touch_eps:
                n += 1
    return n


def generate_scene(seed: int, n_objects: int, config: GeneratorConfig | None = None) -> SceneState:
    """Random cluttered scene of ``n_objects`` polygons, deterministic in ``seed``.

    Each new body is either slid against an existing one (probability
    ``p_touch``) or dropped next to it with a small gap. Scenes with fewer
    than ``ceil(n_objects / 2)`` touching pairs are rejected and resampled.
    """
    cfg = config or GeneratorConfig()
    if not 2 <= n_objects <= 8:
        raise ValueError("n_objects must be in [2, 8]")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5CE4E]))
    need = math.ceil(n_objects / 2)
    attempts = 0
    while attempts < cfg.max_attempts:
        attempts += 1
        polys: list[Polygon] = []
        shapes: list[tuple[np.ndarray, float]] = []
        ok = True
        for k in range(n_objects):
            verts = random_polygon(rng, cfg)
            theta = float(rng.uniform(-np.pi, np.pi))
            c, s = math.cos(theta), math.sin(theta)
            local = Polygon(verts @ np.array([[c, -s], [s, c]]).T)
            placed = None
            for _ in range(30):
                if k == 0:
                    p = rng.uniform(-cfg.spread, cfg.spread, 2)
                    cand = affinity.translate(local, p[0], p[1])
                else:
                    anchor = polys[int(rng.integers(len(polys)))]
                    ang = rng.uniform(0, 2 * np.pi)
                    u = np.array([math.cos(ang), math.sin(ang)])
                    if rng.random() < cfg.p_touch:
                        gap = float(rng.uniform(0.0, 0.5 * cfg.touch_eps))
                    else:
                        gap = float(rng.uniform(*cfg.gap))
                    cand = _place_at_gap(anchor, local, u, gap)
                if not _inside_workspace(cand, cfg.workspace, cfg.margin):
                    continue
                if any(cand.intersection(q).area > cfg.overlap_eps for q in polys):
                    continue
                placed = cand
                break
            if placed is None:
                ok = False
                break
            polys.append(placed)
            shapes.append((verts, theta))
        if not ok:
            continue
        bodies = []
        for k, ((verts, theta), poly) in enumerate(zip(shapes, polys)):
            # verts are centred on the area centroid, so the pose translation is the centroid
            bodies.append(RigidBody(k + 1, verts, theta, poly.centroid.x, poly.centroid.y))
        scene = SceneState(tuple(bodies), cfg.workspace, cfg.pixel_pitch, cfg.image_size)
        if count_touching_pairs(scene, cfg.touch_eps) >= need:
            return scene
    raise PlacementFailure(f"no valid placement for seed={seed}, n_objects={n_objects} after {attempts} attempts")


def _overlap(a: Polygon, b: Polygon) -> float:
    if not a.intersects(b):
        return 0.0
    return a.intersection(b).area


def _lever_angle(body: RigidBody, contact, direction, dist: float, cfg: PushConfig) -> float:
    c = body.centroid()
    arm = np.asarray(contact, dtype=float) - c
    torque = arm[0] * direction[1] - arm[1] * direction[0]
    ang = cfg.rot_gain * dist * torque / radius_of_gyration_sq(body)
    return float(np.clip(ang, -cfg.max_rot, cfg.max_rot))


def find_contact_body(scene: SceneState, point_xy, eps: float) -> RigidBody:
    pt = Point(float(point_xy[0]), float(point_xy[1]))
    best, best_d = None, None
    for b in scene.bodies:
        d = b.polygon().distance(pt)
        if d <= eps and (best_d is None or d < best_d):
            best, best_d = b, d
    if best is None:
        raise NoContact(f"no body within {eps} m of contact point {tuple(point_xy)}")
    return best


def apply_push(scene: SceneState, action: PushAction, config: PushConfig | None = None) -> SceneState:
    """Quasi-static push of the contacted body and anything it shoves.

    The contacted body translates by ``distance`` along the push and turns
    about its centroid by ``rot_gain * distance * torque / r_g^2`` where the
    torque arm runs from the centroid to the contact point. Bodies it then
    overlaps are translated along the push by the smallest amount that
    clears the overlap, each with its own lever-arm rotation about the
    overlap centroid. At most ``max_chain`` bodies move.
    """
    cfg = config or PushConfig()
    row, col = action.contact_point
    px, py = scene.pixel_to_world(row, col)
    contact = np.array([float(px), float(py)])
    # (drow, dcol) -> (dx, dy)
    d = np.array([action.direction[1], action.direction[0]])
    d = d / np.linalg.norm(d)

    pushed = find_contact_body(scene, contact, cfg.contact_eps)
    ang = _lever_angle(pushed, contact, d, action.distance, cfg)
    moved = {pushed.id: pushed.moved(ang, action.distance * d, pushed.centroid())}
    queue = [pushed.id]
    others = {b.id: b for b in scene.bodies}
    while queue:
        src = moved[queue.pop(0)].polygon()
        for bid in sorted(others):
            if bid in moved or len(moved) >= cfg.max_chain:
                continue
            body = others[bid]
            poly = body.polygon()
            if _overlap(src, poly) <= cfg.overlap_eps:
                continue
            inter = src.intersection(poly)
            cp = np.array([inter.centroid.x, inter.centroid.y])
            piv = body.centroid()

            def shoved(s, body=body, cp=cp, piv=piv):
                return body.moved(_lever_angle(body, cp, d, s, cfg), s * d, piv)

            hi = action.distance
            while _overlap(src, shoved(hi).polygon()) > cfg.overlap_eps:
                hi *= 2
                if hi > 1.0:
                    break
            lo = 0.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if _overlap(src, shoved(mid).polygon()) > cfg.overlap_eps:
                    lo = mid
                else:
                    hi = mid
            moved[bid] = shoved(hi)
            queue.append(bid)
    bodies = [moved.get(b.id, b) for b in scene.bodies]
    return scene.with_bodies(bodies)


def _pixel_centers_in_polygon(verts: np.ndarray, scene: SceneState):
    """Even-odd test of every pixel centre inside the polygon's bounding box."""
    h, w = scene.image_size
    rmin, cmin = scene.world_to_pixel(verts[:, 0].min(), verts[:, 1].min())
    rmax, cmax = scene.world_to_pixel(verts[:, 0].max(), verts[:, 1].max())
    r0, r1 = max(int(np.floor(rmin)), 0), min(int(np.ceil(rmax)), h - 1)
    c0, c1 = max(int(np.floor(cmin)), 0), min(int(np.ceil(cmax)), w - 1)
    if r0 > r1 or c0 > c1:
        return None
    rows, cols = np.mgrid[r0 : r1 + 1, c0 : c1 + 1]
    px, py = scene.pixel_to_world(rows, cols)
    inside = np.zeros(rows.shape, dtype=bool)
    x1, y1 = verts[:, 0], verts[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    for a, b, c, e in zip(x1, y1, x2, y2):
        if b == e:
            continue
        crosses = (b > py) != (e > py)
        xint = a + (py - b) * (c - a) / (e - b)
        inside ^= crosses & (px < xint)
    return (slice(r0, r1 + 1), slice(c0, c1 + 1)), inside


def render_labels(scene: SceneState) -> np.ndarray:
    """Ground-truth label raster: body id under each pixel centre, 0 elsewhere."""
    labels = np.zeros(scene.image_size, dtype=np.int32)
    # paint high ids first so the lower id wins any shared pixel
    for body in sorted(scene.bodies, key=lambda b: -b.id):
        hit = _pixel_centers_in_polygon(body.world_vertices(), scene)
        if hit is None:
            continue
        window, inside = hit
        labels[window][inside] = body.id
    return labels


def body_polygons(scene: SceneState) -> dict:
    return {b.id: b.polygon() for b in scene.bodies}


def is_valid_scene(scene: SceneState, overlap_eps: float = 1e-6) -> bool:
    ws = scene.workspace
    polys = [b.polygon() for b in scene.bodies]
    for p in polys:
        if not p.is_valid or not _inside_workspace(p, ws, 0.0):
            return False
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if _overlap(polys[i], polys[j]) > overlap_eps:
                return False
    return True


__all__ = [
    "RigidBody",
    "SceneState",
    "PushAction",
    "GeneratorConfig",
    "PushConfig",
    "generate_scene",
    "apply_push",
    "render_labels",
    "count_touching_pairs",
    "radius_of_gyration_sq",
    "is_valid_scene",
]
