"""Pose-trace files and synthetic head-motion generation.

Traces are CSV files with one row per (user, frame) holding a unit
quaternion: ``user_id, frame_index, w, x, y, z``, frames contiguous from 0
per user. The generator integrates a seeded mean-reverting (discretized
Ornstein-Uhlenbeck) angular-velocity walk per user, which gives smooth
motion whose predictability degrades with horizon. A configurable share of
users is pulled toward a shared attractor direction to induce a spatial
popularity skew ("hotspot" mode).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    enforce_sign_continuity,
    from_yaw_pitch,
    normalize,
    quat_multiply,
    random_orientations,
    rotate_vector,
)

_TRACE_HEADER = ["user_id", "frame_index", "w", "x", "y", "z"]


@dataclass
class PoseTrace:
    """Time-ordered unit quaternions for one user, one pose per frame."""

    user_id: int
    poses: np.ndarray  # (frames, 4) in (w, x, y, z) order
    frame_rate: float = 30.0

    def __len__(self) -> int:
        return self.poses.shape[0]


@dataclass(frozen=True)
class MotionModelParams:
    mean_reversion: float = 2.0      # 1/s pull of angular velocity toward its mean
    volatility: float = 0.35         # rad/s^1.5 diffusion of angular velocity
    max_speed: float = 0.8           # rad/s hard cap on angular speed
    hotspot_fraction: float = 0.0    # share of users pulled toward the attractor
    attractor_yaw: float = 0.0       # degrees
    attractor_pitch: float = 0.0     # degrees
    attractor_gain: float = 1.5      # rad/s per radian of offset from attractor
    initial_speed: tuple[float, float, float] | None = None  # rad/s, same for all users

    def __post_init__(self):
        for name in ("mean_reversion", "volatility", "max_speed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.hotspot_fraction <= 1.0:
            raise ValueError("hotspot_fraction must be in [0, 1]")


# Calibrated presets: "slow" keeps half-second-scale motion predictable,
# "fast" decorrelates angular velocity quickly so extrapolation error grows
# steeply with horizon.
SLOW_MOTION = MotionModelParams(mean_reversion=2.0, volatility=0.3, max_speed=0.8)
FAST_MOTION = MotionModelParams(mean_reversion=0.6, volatility=0.3, max_speed=2.0)

PRESETS = {"slow": SLOW_MOTION, "fast": FAST_MOTION}


def generate_traces(n_users: int, n_frames: int, params: MotionModelParams,
                    seed: int = 0, frame_rate: float = 30.0,
                    start_user_id: int = 0) -> list[PoseTrace]:
    """Seeded synthetic head-motion traces, one per user.

    The first ``round(hotspot_fraction * n_users)`` users start looking at
    the attractor and have their velocity mean pulled back toward it; the
    rest start at uniformly random orientations with a zero-mean velocity.
    Deterministic per (seed, n_users, n_frames, params).
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    dt = 1.0 / frame_rate
    n_hot = int(round(params.hotspot_fraction * n_users))
    attractor_dir = rotate_vector(
        from_yaw_pitch(params.attractor_yaw, params.attractor_pitch),
        np.array([1.0, 0.0, 0.0]),
    )
    traces = []
    for u in range(n_users):
        hot = u < n_hot
        if hot:
            q = from_yaw_pitch(params.attractor_yaw, params.attractor_pitch)
        else:
            q = random_orientations(1, rng)[0]
        omega = (
            np.array(params.initial_speed, dtype=float)
            if params.initial_speed is not None
            else np.zeros(3)
        )
        noise = rng.standard_normal((n_frames - 1, 3)) if n_frames > 1 else None
        poses = np.empty((n_frames, 4))
        poses[0] = q
        for t in range(1, n_frames):
            mean = _attractor_pull(q, attractor_dir, params.attractor_gain) if hot else 0.0
            omega = omega + params.mean_reversion * (mean - omega) * dt
            omega = omega + params.volatility * math.sqrt(dt) * noise[t - 1]
            speed = float(np.linalg.norm(omega))
            if speed > params.max_speed:
                omega = omega * (params.max_speed / speed)
                speed = params.max_speed
            if speed > 1e-12:
                half = 0.5 * speed * dt
                axis = omega / speed
                step = np.concatenate([[math.cos(half)], math.sin(half) * axis])
                q = normalize(quat_multiply(step, q))
            poses[t] = q
        traces.append(PoseTrace(
            user_id=start_user_id + u,
            poses=enforce_sign_continuity(poses),
            frame_rate=frame_rate,
        ))
    return traces


def generate_population(n_videos: int, users_per_video: int, n_frames: int,
                        params: MotionModelParams, seed: int = 0,
                        frame_rate: float = 30.0, video_seed: int = 0) -> list[PoseTrace]:
    """Traces for a whole arcade: users grouped by video, each video with its
    own attractor direction.

    The attractor is a property of the video content, keyed by ``video_seed``
    and the video index only, so two populations with different ``seed``
    (e.g. a historical one and a simulated one) watch the same videos and
    share their popularity skew.
    """
    traces: list[PoseTrace] = []
    for v in range(n_videos):
        vrng = np.random.default_rng([video_seed, 0x5EED, v])
        per_video = replace(
            params,
            attractor_yaw=float(vrng.uniform(-180.0, 180.0)),
            attractor_pitch=float(vrng.uniform(-15.0, 15.0)),
        )
        traces.extend(generate_traces(
            users_per_video, n_frames, per_video,
            seed=seed * 10007 + v, frame_rate=frame_rate,
            start_user_id=v * users_per_video,
        ))
    return traces


def _attractor_pull(q: np.ndarray, attractor_dir: np.ndarray, gain: float) -> np.ndarray:
    """Angular velocity (rad/s) rotating the view direction toward the attractor."""
    view = rotate_vector(q, np.array([1.0, 0.0, 0.0]))
    axis = np.cross(view, attractor_dir)
    sin_a = float(np.linalg.norm(axis))
    cos_a = float(np.dot(view, attractor_dir))
    if sin_a < 1e-12:
        return np.zeros(3)
    angle = math.atan2(sin_a, cos_a)
    return gain * angle * (axis / sin_a)


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------
def save_traces(traces, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRACE_HEADER)
        for trace in traces:
            for f, q in enumerate(trace.poses):
                writer.writerow([trace.user_id, f] + [repr(float(v)) for v in q])


def load_traces(path: str, frame_rate: float = 30.0) -> list[PoseTrace]:
    """Parse a trace CSV; quaternions come back normalized and
    sign-continuized. Malformed rows and out-of-order frames are rejected
    with the offending line number."""
    per_user: dict[int, list[np.ndarray]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise ValueError(f"line {lineno}: expected 6 fields, got {len(row)}")
            try:
                user_id = int(row[0])
                frame = int(row[1])
                q = np.array([float(v) for v in row[2:]], dtype=float)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            frames = per_user.setdefault(user_id, [])
            if frame != len(frames):
                raise ValueError(
                    f"line {lineno}: user {user_id} frame {frame} out of order "
                    f"(expected {len(frames)})"
                )
            if np.linalg.norm(q) < 1e-12:
                raise ValueError(f"line {lineno}: quaternion is not normalizable")
            frames.append(q)
    traces = []
    for user_id in sorted(per_user):
        poses = normalize(np.array(per_user[user_id]))
        traces.append(PoseTrace(user_id=user_id,
                                poses=enforce_sign_continuity(poses),
                                frame_rate=frame_rate))
    return traces
