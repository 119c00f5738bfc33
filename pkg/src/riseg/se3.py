"""Rigid transforms, triplet frames and spatial twists.

Poses are stored as a rotation matrix plus translation. Composition follows
the usual homogeneous-matrix product, so ``pose_compose(a, b)`` applies ``b``
first and then ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CollinearTriplet, DegenerateDt, RotationNearPi, TripletTooWide

AREA_EPS = 1e-8
D_C = 0.03
_ORTHO_DRIFT = 1e-12
_PI_MARGIN = 1e-6


def skew(w):
    w = np.asarray(w, dtype=float)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]], dtype=float)


def _orthonormalize(r):
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0:
        u[:, -1] *= -1
        out = u @ vt
    return out


@dataclass(frozen=True, eq=False)
class Pose:
    """Element of SE(3): ``x -> rotation @ x + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("pose entries must be finite")
        if np.linalg.det(r) <= 0 or np.linalg.norm(r.T @ r - np.eye(3)) > 1e-6:
            raise ValueError("rotation is not a proper orthonormal matrix")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_matrix(cls, m) -> "Pose":
        m = np.asarray(m, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_translation(cls, x=0.0, y=0.0, z=0.0) -> "Pose":
        return cls(np.eye(3), [x, y, z])

    @classmethod
    def planar(cls, theta: float, x: float = 0.0, y: float = 0.0) -> "Pose":
        """Rotation by ``theta`` about +z followed by an xy translation."""
        c, s = np.cos(theta), np.sin(theta)
        return cls([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]], [x, y, 0.0])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Transform an ``(..., 3)`` array of points."""
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def __matmul__(self, other: "Pose") -> "Pose":
        return pose_compose(self, other)

    def allclose(self, other: "Pose", atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def pose_compose(a: Pose, b: Pose) -> Pose:
    r = a.rotation @ b.rotation
    if np.linalg.norm(r.T @ r - np.eye(3)) > _ORTHO_DRIFT:
        r = _orthonormalize(r)
    return Pose(r, a.rotation @ b.translation + a.translation)


@dataclass(frozen=True, eq=False)
class Twist:
    """Angular velocity ``angular`` and linear velocity ``linear``."""

    angular: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        w = np.array(self.angular, dtype=float).reshape(3)
        v = np.array(self.linear, dtype=float).reshape(3)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
            raise ValueError("twist components must be finite")
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "angular", w)
        object.__setattr__(self, "linear", v)

    @classmethod
    def zero(cls) -> "Twist":
        return cls(np.zeros(3), np.zeros(3))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.angular, self.linear])

    def __repr__(self):
        return f"Twist(angular={self.angular.tolist()}, linear={self.linear.tolist()})"


@dataclass(frozen=True, eq=False)
class BodyFrame:
    """A triplet frame together with the pixels that defined it.

    ``anchor_pixels`` is a ``(3, 2)`` array of (row, col) positions; at time
    t they are integer pixel centres, after flow tracking they are real.
    """

    pose: Pose
    anchor_pixels: np.ndarray
    object_hint: int = 0

    def __post_init__(self):
        a = np.array(self.anchor_pixels, dtype=float).reshape(3, 2)
        a.flags.writeable = False
        object.__setattr__(self, "anchor_pixels", a)

    @property
    def origin_pixel(self) -> tuple[int, int]:
        r, c = np.rint(self.anchor_pixels[0]).astype(int)
        return int(r), int(c)


def frame_from_triplet(p0, p1, p2, d_c: float | None = None, area_eps: float = AREA_EPS) -> Pose:
    """Frame with origin ``p0``, x towards ``p1`` and z normal to the triangle.

    ``d_c`` caps every pairwise distance; ``None`` disables the check.
    """
    p0, p1, p2 = (np.asarray(p, dtype=float).reshape(3) for p in (p0, p1, p2))
    e1 = p1 - p0
    e2 = p2 - p0
    n = np.cross(e1, e2)
    if 0.5 * np.linalg.norm(n) <= area_eps:
        raise CollinearTriplet(f"triangle area {0.5 * np.linalg.norm(n):.3g} <= {area_eps:.3g}")
    if d_c is not None:
        widest = max(np.linalg.norm(e1), np.linalg.norm(e2), np.linalg.norm(p2 - p1))
        if widest > d_c:
            raise TripletTooWide(f"pairwise distance {widest:.4g} exceeds d_c={d_c:.4g}")
    x = e1 / np.linalg.norm(e1)
    z = n / np.linalg.norm(n)
    y = np.cross(z, x)
    return Pose(np.column_stack([x, y, z]), p0)


def log_se3(pose: Pose) -> Twist:
    """Matrix logarithm of a rigid transform, returned as a unit-time twist."""
    r, p = pose.rotation, pose.translation
    s = 0.5 * np.linalg.norm(vee(r - r.T))
    c = 0.5 * (np.trace(r) - 1.0)
    theta = np.arctan2(s, c)
    if theta > np.pi - _PI_MARGIN:
        raise RotationNearPi(f"rotation angle {theta:.9f} too close to pi")
    if theta < 1e-6:
        # series expansions of theta/(2 sin theta) and the V^-1 coefficient
        a = 0.5 + theta**2 / 12.0
        b = 1.0 / 12.0 + theta**2 / 720.0
    else:
        a = theta / (2.0 * np.sin(theta))
        b = (1.0 - theta * np.sin(theta) / (2.0 * (1.0 - np.cos(theta)))) / theta**2
    w = a * vee(r - r.T)
    wx = skew(w)
    v_inv = np.eye(3) - 0.5 * wx + b * (wx @ wx)
    return Twist(w, v_inv @ p)


def exp_se3(twist: Twist, dt: float = 1.0) -> Pose:
    """Rigid transform reached by following ``twist`` for ``dt``."""
    w = twist.angular * dt
    v = twist.linear * dt
    theta = np.linalg.norm(w)
    wx = skew(w)
    if theta < 1e-4:
        # series forms avoid the cancellation in 1 - cos and theta - sin
        t2 = theta * theta
        a = 1.0 - t2 / 6.0
        b = 0.5 - t2 / 24.0
        cc = 1.0 / 6.0 - t2 / 120.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
        cc = (theta - np.sin(theta)) / theta**3
    r = np.eye(3) + a * wx + b * wx @ wx
    vmat = np.eye(3) + b * wx + cc * wx @ wx
    return Pose(r, vmat @ v)


def spatial_twist(frame_t: Pose, frame_t1: Pose, dt: float = 1.0, method: str = "log") -> Twist:
    """Spatial twist of a frame that moved from ``frame_t`` to ``frame_t1``.

    Parameters
    ----------
    method : {"log", "fd"}
        ``"log"`` takes the matrix logarithm of the space-frame displacement
        ``frame_t1 @ frame_t.inverse()``, exact for constant-twist motion.
        ``"fd"`` evaluates ``Tdot T^-1`` with a forward difference for
        ``Tdot`` and ``T^-1`` averaged over both endpoints, which keeps the
        discrepancy to the log method second order in the rotation angle.
    """
    if not dt > 0:
        raise DegenerateDt(f"dt must be positive, got {dt}")
    if method not in ("log", "fd"):
        raise ValueError(f"unknown twist method {method!r}")
    if np.array_equal(frame_t.rotation, frame_t1.rotation) and np.array_equal(frame_t.translation, frame_t1.translation):
        return Twist.zero()
    disp = pose_compose(frame_t1, frame_t.inverse())
    if method == "log":
        tw = log_se3(disp)
        return Twist(tw.angular / dt, tw.linear / dt)
    if method == "fd":
        theta = np.arctan2(
            0.5 * np.linalg.norm(vee(disp.rotation - disp.rotation.T)),
            0.5 * (np.trace(disp.rotation) - 1.0),
        )
        if theta > np.pi - _PI_MARGIN:
            raise RotationNearPi(f"rotation angle {theta:.9f} too close to pi")
        t0, t1 = frame_t.matrix(), frame_t1.matrix()
        tdot = (t1 - t0) / dt
        inv_mid = 0.5 * (frame_t.inverse().matrix() + frame_t1.inverse().matrix())
        xi = tdot @ inv_mid
        w = 0.5 * vee(xi[:3, :3] - xi[:3, :3].T)
        return Twist(w, xi[:3, 3])
    raise ValueError(f"unknown twist method {method!r}")


def twist_distance(a: Twist, b: Twist) -> float:
    return float(np.linalg.norm(a.vector() - b.vector()))
