"""Request queues and user/base-station matching.

Admission puts one proactively predicted viewport request per frame into a
user's queue (deadline at the predicted frame's start) and, whenever the
viewport actually needed now differs from what was predicted for it, one
real-time request due immediately. Queues serve earliest deadline first;
a flag restores literal latest-deadline-first ordering for comparison.

Matching runs user-proposing deferred acceptance over a shared preference
matrix of estimated link rates, producing the user-optimal stable matching.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .channel import achievable_rate
from .geometry import ViewportId

PREDICTED = "predicted"
REAL_TIME = "real-time"


@dataclass
class Request:
    """One viewport-frame delivery demand."""

    user_id: int
    video_id: int
    frame_index: int
    viewport: ViewportId
    kind: str
    size_remaining: float  # bits
    deadline: int          # slot index
    created_at: int        # slot index
    available_at: int      # slot index content reaches the edge
    request_id: int
    completed_at: int | None = None
    dropped: bool = False

    def __post_init__(self):
        if self.size_remaining < 0:
            raise ValueError("size_remaining must be non-negative")
        if self.kind == REAL_TIME and self.deadline != self.created_at:
            raise ValueError("real-time requests are due at creation")
        if self.kind == PREDICTED and self.deadline < self.created_at:
            raise ValueError("predicted requests cannot be due before creation")

    def sort_key(self, literal_descending: bool = False):
        head = -self.deadline if literal_descending else self.deadline
        return (head, self.created_at, self.frame_index)


def order_queue(requests, literal_descending: bool = False) -> list[Request]:
    """Earliest-deadline-first by default; ties break on creation time then
    frame index. ``literal_descending`` serves the slackest deadline first."""
    return sorted(requests, key=lambda r: r.sort_key(literal_descending))


class UserQueue:
    """One user's pending requests, kept in service order.

    Enqueues of a viewport-frame that is already pending or already
    delivered are suppressed, so a request is never duplicated.
    """

    def __init__(self, user_id: int, literal_descending: bool = False):
        self.user_id = user_id
        self.literal_descending = literal_descending
        self._keys: list[tuple] = []
        self._requests: list[Request] = []
        self._pending: set[tuple[int, ViewportId]] = set()
        self._delivered: set[tuple[int, ViewportId]] = set()

    def __len__(self) -> int:
        return len(self._requests)

    def __iter__(self):
        return iter(self._requests)

    @property
    def has_pending(self) -> bool:
        return bool(self._requests)

    def add(self, request: Request) -> bool:
        """Insert in service order; returns False if suppressed as duplicate."""
        key = (request.frame_index, request.viewport)
        if key in self._pending or key in self._delivered:
            return False
        sk = request.sort_key(self.literal_descending)
        pos = bisect.bisect_right(self._keys, sk)
        self._keys.insert(pos, sk)
        self._requests.insert(pos, request)
        self._pending.add(key)
        return True

    def first_servable(self, slot: int) -> Request | None:
        """Head-most request whose content has reached the edge."""
        for req in self._requests:
            if req.available_at <= slot:
                return req
        return None

    def complete(self, request: Request, slot: int) -> None:
        request.completed_at = slot
        idx = self._requests.index(request)
        del self._requests[idx]
        del self._keys[idx]
        key = (request.frame_index, request.viewport)
        self._pending.discard(key)
        self._delivered.add(key)

    def drop_predicted(self, frame_index: int) -> Request | None:
        """Remove the pending predicted request for a frame, if any (it has
        been superseded by a real-time twin after a misprediction)."""
        for idx, req in enumerate(self._requests):
            if req.frame_index == frame_index and req.kind == PREDICTED:
                del self._requests[idx]
                del self._keys[idx]
                self._pending.discard((req.frame_index, req.viewport))
                req.dropped = True
                return req
        return None

    def remove(self, request: Request) -> None:
        """Drop a pending request without marking it delivered."""
        idx = self._requests.index(request)
        del self._requests[idx]
        del self._keys[idx]
        self._pending.discard((request.frame_index, request.viewport))
        request.dropped = True


def eligible_users(queues: dict[int, UserQueue]) -> set[int]:
    """Users with at least one incomplete request."""
    return {uid for uid, q in queues.items() if q.has_pending}


def admission_plan(predicted_vp, actual_vp, past_predicted_vp,
                   proactive: bool) -> tuple[bool, bool]:
    """Stage-one decision for one user at one frame instant.

    Returns (enqueue_predicted, enqueue_real_time). Without proactive
    scheduling every frame is fetched in real time. With it, the new
    prediction is always enqueued (when one exists), and a real-time
    request fires only if the viewport needed now differs from the one
    predicted for this frame (including the case where none was predicted).
    """
    if not proactive:
        return False, True
    need_rt = past_predicted_vp is None or past_predicted_vp != actual_vp
    return predicted_vp is not None, need_rt


def compute_preferences(signal_w: np.ndarray, interference_w: np.ndarray,
                        noise_w: float, bandwidth_hz: float) -> np.ndarray:
    """Estimated rate matrix (users x stations) used by both matching sides.

    ``signal_w[u, b]`` is the received signal power assuming aligned beams;
    ``interference_w[u]`` is the user's current interference estimate.
    """
    signal_w = np.asarray(signal_w, dtype=float)
    interference_w = np.asarray(interference_w, dtype=float)
    est_sinr = signal_w / (interference_w[:, None] + noise_w)
    return achievable_rate(est_sinr, bandwidth_hz)


def deferred_acceptance(prefs: np.ndarray,
                        rng: np.random.Generator | None = None) -> list[tuple[int, int]]:
    """User-proposing deferred acceptance on a shared preference matrix.

    Users rank stations by their row; a station ranks users by its column.
    Exact ties break toward the lower index on both sides, which makes all
    preference orders strict, so the result is the unique user-optimal
    stable matching regardless of proposal order. ``rng`` only randomizes
    the (outcome-irrelevant) order in which free users propose.
    """
    prefs = np.asarray(prefs, dtype=float)
    if prefs.ndim != 2:
        raise ValueError("preference matrix must be 2-D")
    if not np.all(np.isfinite(prefs)):
        raise ValueError("preferences must be finite")
    n_users, n_stations = prefs.shape
    if n_users == 0 or n_stations == 0:
        return []
    # Stable argsort keeps the original (ascending index) order on ties.
    order = np.argsort(-prefs, axis=1, kind="stable").tolist()
    rows = prefs.tolist()
    next_choice = [0] * n_users
    holder = [-1] * n_stations
    stack = list(range(n_users))
    if rng is not None:
        rng.shuffle(stack)
    proposals = 0
    budget = n_users * n_stations
    while stack:
        u = stack.pop()
        while next_choice[u] < n_stations:
            b = order[u][next_choice[u]]
            next_choice[u] += 1
            proposals += 1
            if proposals > budget:  # pragma: no cover - proposal set shrinks
                raise RuntimeError("deferred acceptance failed to terminate")
            incumbent = holder[b]
            if incumbent < 0:
                holder[b] = u
                break
            pu, pi = rows[u][b], rows[incumbent][b]
            if pu > pi or (pu == pi and u < incumbent):
                holder[b] = u
                stack.append(incumbent)
                break
        # A user with no stations left simply stays unmatched.
    return sorted((u, b) for b, u in enumerate(holder) if u >= 0)
