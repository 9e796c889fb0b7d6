"""Quaternion math and the overlapping spherical viewport grid.

Orientations are unit quaternions stored as length-4 arrays in (w, x, y, z)
order; stacked arrays keep the quaternion on the last axis. The view
direction is the rotated +x axis. Yaw is measured about +z and reported in
degrees in (-180, 180]; pitch is the elevation above the horizontal plane,
in [-90, 90]. Roll never moves the view direction, so viewport mapping
ignores it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Viewport selection policies.
NEAREST = "nearest"
PREFER_CACHED = "prefer-cached"

# Slack for containment tests at exact viewport edges (degrees).
_EDGE_EPS = 1e-9


# ---------------------------------------------------------------------------
# Quaternion operations
# ---------------------------------------------------------------------------
def normalize(q: np.ndarray) -> np.ndarray:
    """Scale quaternion(s) to unit norm. Raises ValueError on zero norm."""
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm < 1e-12):
        raise ValueError("cannot normalize a zero-norm quaternion")
    return q / norm


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(a, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_from_axis_angle(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Unit quaternion rotating by ``angle_rad`` about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n < 1e-15:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle_rad
    return np.concatenate([[math.cos(half)], math.sin(half) * axis / n])


def rotate_vector(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion(s) q; broadcasts over leading axes."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = 2.0 * np.cross(u, np.broadcast_to(v, u.shape))
    return v + w * t + np.cross(u, t)


def angular_distance(q0: np.ndarray, q1: np.ndarray) -> float:
    """Rotation angle in radians between two orientations, in [0, pi].

    Invariant under a global sign flip of either argument, since q and -q
    denote the same orientation.
    """
    a = normalize(q0)
    b = normalize(q1)
    dot = min(1.0, abs(float(np.dot(a, b))))
    return 2.0 * math.acos(dot)


def angular_distance_many(q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Vectorized ``angular_distance`` over the leading axes (radians)."""
    a = normalize(q0)
    b = normalize(q1)
    dots = np.clip(np.abs(np.sum(a * b, axis=-1)), 0.0, 1.0)
    return 2.0 * np.arccos(dots)


def enforce_sign_continuity(poses: np.ndarray) -> np.ndarray:
    """Flip quaternion signs so consecutive poses have non-negative dot, and
    start the sequence in the w >= 0 hemisphere.

    Removes the q/-q discontinuity from a pose sequence (and the arbitrary
    global sign) without changing any orientation.
    """
    q = np.array(poses, dtype=float)
    if q.ndim != 2 or q.shape[0] == 0:
        return q
    if q[0, 0] < 0.0:
        q *= -1.0
    if q.shape[0] < 2:
        return q
    dots = np.sum(q[1:] * q[:-1], axis=-1)
    flips = np.cumprod(np.where(dots < 0.0, -1.0, 1.0))
    q[1:] *= flips[:, None]
    return q


def random_orientations(n: int, rng: np.random.Generator) -> np.ndarray:
    """n orientations uniform over the rotation group, as (n, 4) quaternions."""
    q = rng.standard_normal((n, 4))
    return normalize(q)


def from_yaw_pitch(yaw_deg: float, pitch_deg: float) -> np.ndarray:
    """Quaternion whose view direction has the given yaw and pitch (roll 0)."""
    qz = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), math.radians(yaw_deg))
    qy = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), -math.radians(pitch_deg))
    return quat_multiply(qz, qy)


def view_angles(q: np.ndarray) -> tuple[float, float]:
    """(yaw, pitch) of the view direction in degrees."""
    d = rotate_vector(normalize(q), np.array([1.0, 0.0, 0.0]))
    yaw = math.degrees(math.atan2(d[1], d[0]))
    pitch = math.degrees(math.asin(min(1.0, max(-1.0, d[2]))))
    return yaw, pitch


def view_angles_many(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``view_angles``; returns (yaw, pitch) arrays in degrees."""
    d = rotate_vector(normalize(q), np.array([1.0, 0.0, 0.0]))
    yaw = np.degrees(np.arctan2(d[..., 1], d[..., 0]))
    pitch = np.degrees(np.arcsin(np.clip(d[..., 2], -1.0, 1.0)))
    return yaw, pitch


def wrap_angle_deg(a):
    """Wrap angle(s) to (-180, 180]."""
    return -((180.0 - np.asarray(a, dtype=float)) % 360.0 - 180.0)


# ---------------------------------------------------------------------------
# Viewport grid
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class FovSpec:
    """Angular size of the region the headset actually displays."""

    yaw_extent: float = 100.0
    pitch_extent: float = 100.0

    def __post_init__(self):
        for name, v in (("yaw_extent", self.yaw_extent), ("pitch_extent", self.pitch_extent)):
            if not 0.0 < v <= 180.0:
                raise ValueError(f"FovSpec.{name} must be in (0, 180], got {v}")


@dataclass(frozen=True, order=True)
class ViewportId:
    """Index into the viewport grid: row selects pitch, col selects yaw."""

    row: int
    col: int


@dataclass(eq=False)
class ViewportGrid:
    """Fixed overlapping partition of the sphere into n_pitch x n_yaw viewports.

    Per-axis extent exceeds the center spacing by the field-of-view extent,
    so any field of view whose center lies within half a spacing of some
    viewport center is fully contained in that viewport. Together with the
    even center layout this guarantees every orientation has at least one
    fully containing viewport.
    """

    n_yaw: int
    n_pitch: int
    yaw_extent: float
    pitch_extent: float
    yaw_centers: np.ndarray
    pitch_centers: np.ndarray

    @property
    def centers(self) -> list[tuple[float, float]]:
        """All (yaw, pitch) centers, row-major over (pitch, yaw)."""
        return [
            (float(y), float(p))
            for p in self.pitch_centers
            for y in self.yaw_centers
        ]

    @property
    def n_viewports(self) -> int:
        return self.n_yaw * self.n_pitch


def build_grid(n_yaw: int, n_pitch: int, fov: FovSpec) -> ViewportGrid:
    """Construct the overlapping grid for a given field-of-view size."""
    if n_yaw < 2 or n_pitch < 2:
        raise ValueError("grid needs at least 2 viewports per axis")
    yaw_spacing = 360.0 / n_yaw
    pitch_spacing = 180.0 / n_pitch
    yaw_extent = yaw_spacing + fov.yaw_extent
    pitch_extent = pitch_spacing + fov.pitch_extent
    if pitch_extent > 180.0:
        raise ValueError(
            f"pitch extent {pitch_extent:.1f} deg exceeds 180; "
            f"use more pitch rows or a smaller field of view"
        )
    if yaw_extent > 360.0:
        raise ValueError(f"yaw extent {yaw_extent:.1f} deg exceeds 360")
    yaw_centers = -180.0 + (np.arange(n_yaw) + 0.5) * yaw_spacing
    pitch_centers = -90.0 + (np.arange(n_pitch) + 0.5) * pitch_spacing
    return ViewportGrid(n_yaw, n_pitch, yaw_extent, pitch_extent, yaw_centers, pitch_centers)


def containment_mask(yaw_deg, pitch_deg, fov: FovSpec, grid: ViewportGrid) -> np.ndarray:
    """Which viewports fully contain the FoV centered at (yaw, pitch).

    Containment is evaluated in yaw/pitch space: the FoV rectangle must fit
    inside the viewport rectangle, with wraparound on the yaw axis only.
    Inputs broadcast; the result gains two trailing axes (n_pitch, n_yaw).
    """
    yaw = np.asarray(yaw_deg, dtype=float)[..., None, None]
    pitch = np.asarray(pitch_deg, dtype=float)[..., None, None]
    dyaw = np.abs((grid.yaw_centers[None, :] - yaw + 180.0) % 360.0 - 180.0)
    dpitch = np.abs(grid.pitch_centers[:, None] - pitch)
    yaw_margin = 0.5 * (grid.yaw_extent - fov.yaw_extent) + _EDGE_EPS
    pitch_margin = 0.5 * (grid.pitch_extent - fov.pitch_extent) + _EDGE_EPS
    return (dyaw <= yaw_margin) & (dpitch <= pitch_margin)


def center_distances(yaw_deg, pitch_deg, grid: ViewportGrid) -> np.ndarray:
    """Great-circle angle (radians) from viewport centers to a view direction.

    Inputs broadcast; the result gains two trailing axes (n_pitch, n_yaw).
    """
    yaw = np.radians(np.asarray(yaw_deg, dtype=float))[..., None, None]
    pitch = np.radians(np.asarray(pitch_deg, dtype=float))[..., None, None]
    cy = np.radians(grid.yaw_centers)[None, :]
    cp = np.radians(grid.pitch_centers)[:, None]
    cosang = np.sin(pitch) * np.sin(cp) + np.cos(pitch) * np.cos(cp) * np.cos(cy - yaw)
    return np.arccos(np.clip(cosang, -1.0, 1.0))


def candidate_viewports(q: np.ndarray, fov: FovSpec, grid: ViewportGrid) -> list[ViewportId]:
    """All viewports fully containing the FoV of q, nearest center first.

    Ties in center distance break toward the lowest (row, col). Never empty
    for a grid built by ``build_grid``; an empty result would mean the grid
    violates its coverage guarantee, so it is asserted.
    """
    yaw, pitch = view_angles(q)
    mask = containment_mask(yaw, pitch, fov, grid)
    dist = center_distances(yaw, pitch, grid)
    rows, cols = np.nonzero(mask)
    assert rows.size > 0, "coverage guarantee violated: no containing viewport"
    order = sorted(range(rows.size), key=lambda i: (dist[rows[i], cols[i]], rows[i], cols[i]))
    return [ViewportId(int(rows[i]), int(cols[i])) for i in order]


def select_viewport(
    candidates: list[ViewportId],
    policy: str = NEAREST,
    cached: frozenset[ViewportId] | set[ViewportId] = frozenset(),
) -> ViewportId:
    """Pick one viewport from an ordered candidate list.

    ``nearest`` returns the first candidate. ``prefer-cached`` returns the
    first candidate present in ``cached``, falling back to the first
    candidate overall.
    """
    if not candidates:
        raise ValueError("candidate list must be non-empty")
    if policy == NEAREST:
        return candidates[0]
    if policy == PREFER_CACHED:
        for vp in candidates:
            if vp in cached:
                return vp
        return candidates[0]
    raise ValueError(f"unknown selection policy {policy!r}")


# ---------------------------------------------------------------------------
# Solid angles
# ---------------------------------------------------------------------------
def rect_solid_angle(yaw_extent_deg: float, pitch_extent_deg: float,
                     pitch_center_deg: float = 0.0) -> float:
    """Solid angle (sr) of a yaw/pitch rectangle, pitch span clipped at the poles."""
    lo = math.radians(max(-90.0, pitch_center_deg - 0.5 * pitch_extent_deg))
    hi = math.radians(min(90.0, pitch_center_deg + 0.5 * pitch_extent_deg))
    if hi <= lo:
        return 0.0
    return math.radians(yaw_extent_deg) * (math.sin(hi) - math.sin(lo))


def mean_viewport_solid_angle(grid: ViewportGrid) -> float:
    """Average solid angle of one viewport over the grid (columns are alike)."""
    total = sum(
        rect_solid_angle(grid.yaw_extent, grid.pitch_extent, float(p))
        for p in grid.pitch_centers
    )
    return total / grid.n_pitch
