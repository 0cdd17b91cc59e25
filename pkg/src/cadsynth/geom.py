"""Small geometry helpers: quaternions, axis-aligned boxes, 2D footprints.

Quaternions are (w, x, y, z) tuples throughout, matching the on-disk scene
format. The camera frame convention is x right, y down, z forward (pinhole
looking along +z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Quat = tuple[float, float, float, float]
Vec3 = tuple[float, float, float]


def quat_normalize(q: Quat) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero quaternion")
    return (w / n, x / n, y / n, z / n)


def quat_from_yaw(angle: float) -> Quat:
    """Rotation by `angle` radians about +z."""
    h = 0.5 * angle
    return (math.cos(h), 0.0, 0.0, math.sin(h))


def quat_to_matrix(q: Quat) -> np.ndarray:
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    wx, wy, wz = w * x, w * y, w * z
    xy, xz, yz = x * y, x * z, y * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ],
        dtype=np.float64,
    )


def quat_from_matrix(m: np.ndarray) -> Quat:
    """Shepperd's method; m must be a proper rotation matrix."""
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    return quat_normalize((float(w), float(x), float(y), float(z)))


def look_at_quat(eye: np.ndarray, at: np.ndarray, up: Vec3 = (0.0, 0.0, 1.0)) -> Quat:
    """Camera-to-world rotation for a camera at `eye` looking at `at`.

    Columns of the resulting matrix are the camera axes in world space:
    x right, y down, z forward.
    """
    fwd = np.asarray(at, dtype=np.float64) - np.asarray(eye, dtype=np.float64)
    n = np.linalg.norm(fwd)
    if n == 0.0:
        raise ValueError("eye and look-at point coincide")
    fwd = fwd / n
    upv = np.asarray(up, dtype=np.float64)
    right = np.cross(fwd, upv)
    rn = np.linalg.norm(right)
    if rn < 1e-9:
        # looking straight up/down the world up axis; pick a fallback
        right = np.cross(fwd, np.array([0.0, 1.0, 0.0]))
        rn = np.linalg.norm(right)
    right = right / rn
    down = np.cross(fwd, right)
    m = np.stack([right, down, fwd], axis=1)
    return quat_from_matrix(m)


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned 3D box; mins/maxs are shape-(3,) float arrays."""

    mins: np.ndarray
    maxs: np.ndarray

    @staticmethod
    def of_points(points: np.ndarray) -> "Aabb":
        pts = np.asarray(points, dtype=np.float64)
        return Aabb(pts.min(axis=0), pts.max(axis=0))

    def translated(self, offset) -> "Aabb":
        off = np.asarray(offset, dtype=np.float64)
        return Aabb(self.mins + off, self.maxs + off)

    def contains(self, point, tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=np.float64)
        return bool(np.all(p >= self.mins - tol) and np.all(p <= self.maxs + tol))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.mins + self.maxs)

    @property
    def size(self) -> np.ndarray:
        return self.maxs - self.mins


# 2D footprint rectangles as (xmin, ymin, xmax, ymax)
Rect = tuple[float, float, float, float]


def rect_area(r: Rect) -> float:
    return max(0.0, r[2] - r[0]) * max(0.0, r[3] - r[1])


def rect_intersection_area(a: Rect, b: Rect) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def rect_overlap_fraction(a: Rect, b: Rect) -> float:
    """Intersection area over the smaller rectangle's area (0 when disjoint)."""
    inter = rect_intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    denom = min(rect_area(a), rect_area(b))
    if denom == 0.0:
        return 0.0
    return inter / denom
