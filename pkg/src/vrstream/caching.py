"""Spatial popularity profiles and the top-K edge cache.

Popularity of a viewport at a frame is the fraction of historical users
that requested it there. The K most popular viewports per (video, frame)
are cached at the edge for the whole run; a hit removes the backhaul fetch
from a request's critical path, a miss pays it in full.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    FovSpec,
    ViewportGrid,
    ViewportId,
    center_distances,
    containment_mask,
    view_angles_many,
)


@dataclass
class PopularityProfile:
    """Ranked per-frame viewport popularity, plus the raw counts behind it.

    ``ranked[(video, frame)]`` lists (viewport, fraction) by descending
    fraction, ties broken by ascending viewport index.
    """

    ranked: dict[tuple[int, int], list[tuple[ViewportId, float]]] = field(default_factory=dict)
    counts: dict[tuple[int, int], Counter] = field(default_factory=dict)
    totals: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.ranked


@dataclass
class CacheState:
    """Per (video, frame) set of cached viewports, at most ``capacity`` each."""

    capacity: int
    contents: dict[tuple[int, int], frozenset[ViewportId]] = field(default_factory=dict)


def build_popularity(requests) -> PopularityProfile:
    """Aggregate (video_id, frame_index, viewport) request records.

    Each historical user is expected to contribute exactly one viewport per
    watched frame, so per-frame fractions sum to 1. An empty history yields
    an empty profile (which disables caching downstream).
    """
    counts: dict[tuple[int, int], Counter] = {}
    for video_id, frame_index, viewport in requests:
        counts.setdefault((video_id, frame_index), Counter())[viewport] += 1
    profile = PopularityProfile()
    for key, counter in counts.items():
        total = sum(counter.values())
        ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
        profile.ranked[key] = [(vp, c / total) for vp, c in ranked]
        profile.counts[key] = counter
        profile.totals[key] = total
    return profile


def requests_from_traces(traces, users_per_video: int, grid: ViewportGrid,
                         fov: FovSpec, n_frames: int | None = None):
    """Map a historical population to (video, frame, viewport) records.

    Each user contributes its nearest containing viewport per frame; users
    are grouped into videos ``users_per_video`` at a time, in trace order.
    """
    records: list[tuple[int, int, ViewportId]] = []
    n_vp = grid.n_yaw * grid.n_pitch
    for i, trace in enumerate(traces):
        video = i // users_per_video
        poses = trace.poses[:n_frames] if n_frames is not None else trace.poses
        yaw, pitch = view_angles_many(poses)
        mask = containment_mask(yaw, pitch, fov, grid).reshape(len(poses), n_vp)
        dist = center_distances(yaw, pitch, grid).reshape(len(poses), n_vp)
        codes = np.argmin(np.where(mask, dist, np.inf), axis=-1)
        for f, code in enumerate(codes):
            records.append((video, f, ViewportId(int(code) // grid.n_yaw,
                                                 int(code) % grid.n_yaw)))
    return records


def populate_cache(profile: PopularityProfile, capacity: int) -> CacheState:
    """Cache the top-``capacity`` ranked viewports at every frame."""
    if capacity < 0:
        raise ValueError("cache capacity must be non-negative")
    cache = CacheState(capacity=capacity)
    if capacity == 0:
        return cache
    for key, ranked in profile.ranked.items():
        cache.contents[key] = frozenset(vp for vp, _ in ranked[:capacity])
    return cache


def lookup(cache: CacheState | None, video_id: int, frame_index: int,
           viewport: ViewportId) -> bool:
    """True when the viewport-frame is held at the edge (no backhaul fetch)."""
    if cache is None or cache.capacity == 0:
        return False
    return viewport in cache.contents.get((video_id, frame_index), frozenset())


def cached_viewports(cache: CacheState | None, video_id: int,
                     frame_index: int) -> frozenset[ViewportId]:
    if cache is None:
        return frozenset()
    return cache.contents.get((video_id, frame_index), frozenset())


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
_PROFILE_HEADER = ["video_id", "frame_index", "viewport_row", "viewport_col", "fraction"]


def save_profile_csv(profile: PopularityProfile, path: str) -> None:
    """Rows: video_id, frame_index, viewport_row, viewport_col, fraction."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_PROFILE_HEADER)
        for (video_id, frame_index) in sorted(profile.ranked):
            for vp, fraction in profile.ranked[(video_id, frame_index)]:
                writer.writerow([video_id, frame_index, vp.row, vp.col,
                                 repr(float(fraction))])


def load_profile_csv(path: str) -> PopularityProfile:
    profile = PopularityProfile()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _PROFILE_HEADER:
            raise ValueError(f"unexpected profile header: {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields, got {len(row)}")
            video_id, frame_index = int(row[0]), int(row[1])
            vp = ViewportId(int(row[2]), int(row[3]))
            fraction = float(row[4])
            profile.ranked.setdefault((video_id, frame_index), []).append((vp, fraction))
    # Ranking order is persisted; counts/totals are not recoverable from CSV.
    return profile
