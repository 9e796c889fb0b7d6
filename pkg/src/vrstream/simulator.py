"""Slot-based discrete-event simulator for proactive viewport streaming.

Time advances in fixed transmission slots (integer indices). A frame starts
every ``slots_per_frame`` slots: at that instant the admission stage runs
(new predicted request, plus a real-time request on a viewport miss),
matching and service happen every slot, and path losses refresh on their
own cadence. A request finishing during slot s completes at the end of
that slot.

Latency accounting: frame f wants its content at the frame start instant
t_f; the per-frame latency is max(0, completion - t_f) of the earliest
completed viewport that fully contains the user's actual field of view at
f. A frame still counts as delivered in high quality when that completion
lands within one frame duration of t_f (past that point the headset has
already downgraded or interpolated); frames never covered contribute one
frame duration of latency, which bounds the tail without discarding it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as ch
from .caching import CacheState, PopularityProfile, populate_cache
from .geometry import (
    FovSpec,
    ViewportGrid,
    ViewportId,
    build_grid,
    center_distances,
    containment_mask,
    mean_viewport_solid_angle,
    rect_solid_angle,
    view_angles_many,
)
from .matching import (
    PREDICTED,
    REAL_TIME,
    Request,
    UserQueue,
    deferred_acceptance,
)
from .prediction import baseline_predict_many, predict_poses

SCHEMES = ("ml", "ml-cache", "nml", "nml-cache")

# Payload anchor: a 150x120 degree field of view at 1 Gbps; one viewport
# frame carries that bitrate scaled by the solid-angle ratio.
_REF_RATE_BPS = 1.0e9
_REF_FOV_SR = rect_solid_angle(150.0, 120.0)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SimConfig:
    arcade_side: float = 100.0
    sbs_positions: tuple[tuple[float, float], ...] | None = None  # default: 4 corners
    users_per_video: int = 12
    catalog_size: int = 4
    sim_time_s: float = 30.0
    slot_ms: float = 0.25
    frame_ms: float = 33.0
    history_window: int = 10
    horizon: int = 10
    backhaul_ms: float = 3.0
    grid_n: int = 5
    fov_yaw: float = 100.0
    fov_pitch: float = 100.0
    scheme: str = "ml"
    cache_size: int = 2
    viewport_bits: float | None = None   # default derived from the grid
    payload_scale: float = 1.0
    pathloss_mode: str = "expected"      # or "bernoulli"
    mobility_speed_mps: float = 0.0
    literal_descending_deadlines: bool = False
    collect_events: bool = False
    seed: int = 0
    channel: ch.ChannelConfig = field(default_factory=ch.ChannelConfig)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.pathloss_mode not in ("expected", "bernoulli"):
            raise ValueError("pathloss_mode must be 'expected' or 'bernoulli'")
        spf = self.frame_ms / self.slot_ms
        if abs(spf - round(spf)) > 1e-9:
            raise ValueError("frame duration must be an integer number of slots")
        if self.users_per_video < 1 or self.catalog_size < 1:
            raise ValueError("users_per_video and catalog_size must be >= 1")

    @property
    def num_users(self) -> int:
        return self.users_per_video * self.catalog_size

    @property
    def slots_per_frame(self) -> int:
        return int(round(self.frame_ms / self.slot_ms))

    @property
    def n_frames(self) -> int:
        return int(self.sim_time_s * 1000.0 // self.frame_ms)

    @property
    def backhaul_slots(self) -> int:
        return int(round(self.backhaul_ms / self.slot_ms))

    @property
    def refresh_slots(self) -> int:
        return max(1, int(round(self.channel.pathloss_refresh_s * 1000.0 / self.slot_ms)))

    @property
    def proactive(self) -> bool:
        return self.scheme.startswith("ml")

    @property
    def uses_cache(self) -> bool:
        return self.scheme.endswith("cache")

    def with_users(self, num_users: int) -> "SimConfig":
        """Derive a config for a different load, keeping 12-per-video grouping."""
        if num_users % self.users_per_video:
            raise ValueError(
                f"num_users must be a multiple of users_per_video "
                f"({self.users_per_video}), got {num_users}"
            )
        return replace(self, catalog_size=num_users // self.users_per_video)


def default_viewport_bits(config: SimConfig, grid: ViewportGrid) -> float:
    """Per viewport-frame payload from the 1 Gbps field-of-view anchor."""
    ratio = mean_viewport_solid_angle(grid) / _REF_FOV_SR
    return _REF_RATE_BPS * (config.frame_ms / 1000.0) * ratio * config.payload_scale


@dataclass
class RunMetrics:
    mean_delay_ms: float
    p99_delay_ms: float
    hd_delivery_rate: float
    quality_transition: float
    hd_failure_ratio: float
    per_user: dict[int, dict[str, float]]
    counters: dict[str, int]
    events: list[tuple] | None = None


# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------
class OraclePredictor:
    """Perfect foresight: the prediction for a frame is its true pose, for
    every frame including the first horizon (which the admission stage
    prebuffers at session start)."""

    def predicted_poses(self, traces, n_frames: int, horizon: int,
                        history_window: int) -> np.ndarray:
        out = np.empty((len(traces), n_frames, 4))
        for u, trace in enumerate(traces):
            out[u] = trace.poses[:n_frames]
        return out


class ExtrapolationPredictor:
    """Constant-angular-velocity extrapolation from the last two poses."""

    def predicted_poses(self, traces, n_frames: int, horizon: int,
                        history_window: int) -> np.ndarray:
        out = np.full((len(traces), n_frames, 4), np.nan)
        first = horizon + max(1, history_window - 1)
        if first >= n_frames:
            return out
        for u, trace in enumerate(traces):
            origins = np.arange(first - horizon, n_frames - horizon)
            windows = np.stack(
                [trace.poses[origins - 1], trace.poses[origins]], axis=1
            )
            out[u, first:] = baseline_predict_many(windows, horizon)
        return out


class GruPredictor:
    """Batched inference with a trained recurrent model.

    The model must have been trained for the horizon the simulation uses;
    a mismatch is a configuration error, not something to silently rescale.
    """

    def __init__(self, model, history_window: int, horizon: int):
        self.model = model
        self.history_window = history_window
        self.horizon = horizon
        self._cache: dict[int, tuple] = {}

    def predicted_poses(self, traces, n_frames: int, horizon: int,
                        history_window: int) -> np.ndarray:
        if horizon != self.horizon:
            raise ValueError(
                f"model trained for horizon {self.horizon}, run wants {horizon}"
            )
        if history_window != self.history_window:
            raise ValueError("history window mismatch between model and run")
        key = id(traces)
        hit = self._cache.get(key)
        if hit is not None and hit[0] is traces and hit[1] == n_frames:
            return hit[2]
        out = np.full((len(traces), n_frames, 4), np.nan)
        first = horizon + history_window - 1
        if first < n_frames:
            offsets = np.arange(1 - history_window, 1)
            for u, trace in enumerate(traces):
                origins = np.arange(history_window - 1, n_frames - horizon)
                windows = trace.poses[origins[:, None] + offsets[None, :]]
                out[u, first:] = predict_poses(self.model, windows)
        self._cache = {key: (traces, n_frames, out)}
        return out


# ---------------------------------------------------------------------------
# Pure helpers
# ---------------------------------------------------------------------------
def frame_outcome(completion_ms: float | None, frame_start_ms: float,
                  frame_duration_ms: float) -> tuple[bool, float]:
    """(delivered-in-HD, latency_ms) for one frame.

    ``completion_ms`` is when the earliest viewport covering the user's
    actual field of view finished transmission, or None if none ever did.
    """
    if completion_ms is None:
        return False, frame_duration_ms
    hd = completion_ms <= frame_start_ms + frame_duration_ms
    return hd, max(0.0, completion_ms - frame_start_ms)


def nearest_rank_percentile(values: np.ndarray, pct: float) -> float:
    """Percentile as the nearest whole sample at or above the requested
    position (so one 5 ms outlier among 100 zeros gives p99 = 5 ms)."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        return 0.0
    idx = min(v.size - 1, math.ceil(pct / 100.0 * (v.size - 1)))
    return float(v[idx])


def compute_metrics(latency_ms: np.ndarray, hd: np.ndarray,
                    counters: dict[str, int],
                    events: list | None = None) -> RunMetrics:
    """Aggregate per-(user, frame) outcomes; metrics average over users."""
    transitions = np.mean(hd[:, 1:] != hd[:, :-1], axis=1) if hd.shape[1] > 1 \
        else np.zeros(hd.shape[0])
    per_user = {}
    for u in range(latency_ms.shape[0]):
        per_user[u] = {
            "mean_delay_ms": float(np.mean(latency_ms[u])),
            "p99_delay_ms": nearest_rank_percentile(latency_ms[u], 99.0),
            "hd_delivery_rate": float(np.mean(hd[u])),
            "quality_transition": float(transitions[u]),
        }
    hd_rate = float(np.mean(hd))
    return RunMetrics(
        mean_delay_ms=float(np.mean(latency_ms)),
        p99_delay_ms=nearest_rank_percentile(latency_ms, 99.0),
        hd_delivery_rate=hd_rate,
        quality_transition=float(np.mean(transitions)),
        hd_failure_ratio=1.0 - hd_rate,
        per_user=per_user,
        counters=dict(counters),
        events=events,
    )


def _antenna_tensors(positions: np.ndarray, sbs: np.ndarray, cfg: ch.ChannelConfig):
    """Sectored gains for every beam geometry the run can encounter.

    tx[b, j, v]: gain from station b toward victim v while aimed at user j.
    rx[v, b, s]: gain at user v from station b's direction while its own
    beam points at station s.
    """
    d_bu = positions[None, :, :] - sbs[:, None, :]
    theta = np.degrees(np.arctan2(d_bu[..., 1], d_bu[..., 0]))  # (B, N)
    diff_tx = np.abs((theta[:, :, None] - theta[:, None, :] + 180.0) % 360.0 - 180.0)
    g_tx = np.where(diff_tx <= 0.5 * cfg.tx_beamwidth_deg,
                    ch.mainlobe_gain(cfg.tx_beamwidth_deg), cfg.sidelobe_gain)

    d_ub = sbs[None, :, :] - positions[:, None, :]
    phi = np.degrees(np.arctan2(d_ub[..., 1], d_ub[..., 0]))  # (N, B)
    diff_rx = np.abs((phi[:, :, None] - phi[:, None, :] + 180.0) % 360.0 - 180.0)
    g_rx = np.where(diff_rx <= 0.5 * cfg.rx_beamwidth_deg,
                    ch.mainlobe_gain(cfg.rx_beamwidth_deg), cfg.sidelobe_gain)
    return g_tx, g_rx


def _select_codes(mask: np.ndarray, dist: np.ndarray,
                  cached: np.ndarray | None) -> np.ndarray:
    """Pick a viewport code per (user, frame) from flattened candidates.

    Nearest containing viewport; with ``cached`` given, the nearest cached
    containing viewport when one exists. Entries with no candidate get -1.
    ``np.argmin`` takes the first minimum, which is the lowest (row, col).
    """
    masked = np.where(mask, dist, np.inf)
    nearest = np.argmin(masked, axis=-1)
    valid = np.isfinite(np.min(masked, axis=-1))
    if cached is not None:
        masked_c = np.where(mask & cached, dist, np.inf)
        pick_c = np.argmin(masked_c, axis=-1)
        has_c = np.isfinite(np.min(masked_c, axis=-1))
        nearest = np.where(has_c, pick_c, nearest)
    return np.where(valid, nearest, -1).astype(np.int32)


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------
def run(config: SimConfig, traces, predictor=None,
        profile: PopularityProfile | None = None) -> RunMetrics:
    """Simulate one scheme over one seeded arcade; deterministic per
    (config, traces, trained model)."""
    n = config.num_users
    n_frames = config.n_frames
    spf = config.slots_per_frame
    if len(traces) != n:
        raise ValueError(f"need {n} traces (one per user), got {len(traces)}")
    for trace in traces:
        if len(trace) < n_frames:
            raise ValueError(
                f"trace for user {trace.user_id} has {len(trace)} frames, "
                f"run needs {n_frames}"
            )
    if config.proactive and predictor is None:
        raise ValueError(f"scheme {config.scheme!r} needs a predictor")

    ss = np.random.SeedSequence(config.seed)
    rng_main, rng_match = (np.random.default_rng(c) for c in ss.spawn(2))
    ccfg = config.channel

    side = config.arcade_side
    sbs = np.array(config.sbs_positions if config.sbs_positions is not None
                   else [(0.0, 0.0), (side, 0.0), (0.0, side), (side, side)])
    n_sbs = sbs.shape[0]
    positions = rng_main.uniform(0.0, side, size=(n, 2))

    fov = FovSpec(config.fov_yaw, config.fov_pitch)
    grid = build_grid(config.grid_n, config.grid_n, fov)
    n_vp = grid.n_viewports
    payload = (config.viewport_bits if config.viewport_bits is not None
               else default_viewport_bits(config, grid))
    vp_objects = [ViewportId(r, c) for r in range(grid.n_pitch) for c in range(grid.n_yaw)]
    video_of = np.arange(n) // config.users_per_video

    # --- Viewport mapping, precomputed for the whole run -------------------
    pose_mat = np.stack([t.poses[:n_frames] for t in traces])
    yaw, pitch = view_angles_many(pose_mat)
    mask_flat = containment_mask(yaw, pitch, fov, grid).reshape(n, n_frames, n_vp)
    dist_flat = center_distances(yaw, pitch, grid).reshape(n, n_frames, n_vp)

    cache: CacheState | None = None
    cached_flat = None
    if config.uses_cache and profile is not None and not profile.empty:
        cache = populate_cache(profile, config.cache_size)
        cached_flat = np.zeros((config.catalog_size, n_frames, n_vp), dtype=bool)
        for (video_id, frame_index), vps in cache.contents.items():
            if 0 <= video_id < config.catalog_size and 0 <= frame_index < n_frames:
                for vp in vps:
                    cached_flat[video_id, frame_index, vp.row * grid.n_yaw + vp.col] = True

    cached_by_user = cached_flat[video_of] if cached_flat is not None else None
    rt_code = _select_codes(mask_flat, dist_flat, cached_by_user)

    pred_code = None
    if config.proactive:
        pred_poses = predictor.predicted_poses(
            traces, n_frames, config.horizon, config.history_window
        )
        p_yaw, p_pitch = view_angles_many(_safe_poses(pred_poses))
        p_mask = containment_mask(p_yaw, p_pitch, fov, grid).reshape(n, n_frames, n_vp)
        p_dist = center_distances(p_yaw, p_pitch, grid).reshape(n, n_frames, n_vp)
        invalid = np.isnan(pred_poses[..., 0])
        p_mask[invalid] = False
        pred_code = _select_codes(p_mask, p_dist, cached_by_user)

    # --- Channel state ------------------------------------------------------
    p_w = float(ch.dbm_to_watts(ccfg.tx_power_dbm))
    noise_w = ch.thermal_noise_w(ccfg)
    main_tx = ch.mainlobe_gain(ccfg.tx_beamwidth_deg)
    main_rx = ch.mainlobe_gain(ccfg.rx_beamwidth_deg)
    bw = ccfg.bandwidth_hz
    slot_s = config.slot_ms / 1000.0
    arange_n = np.arange(n)

    waypoints = rng_main.uniform(0.0, side, size=(n, 2)) if config.mobility_speed_mps > 0 else None

    def refresh_channel():
        dist = np.linalg.norm(positions[:, None, :] - sbs[None, :, :], axis=-1)
        if config.pathloss_mode == "bernoulli":
            loss = ch.sampled_path_loss(dist, rng_main, ccfg)
        else:
            loss = ch.effective_path_loss(dist, ccfg)
        signal = p_w * main_tx * main_rx / loss
        home = np.argmin(loss, axis=1)
        g_tx_t, g_rx_t = _antenna_tensors(positions, sbs, ccfg)
        return loss, signal, home, g_tx_t, g_rx_t

    loss, signal_w, home, g_tx_t, g_rx_t = refresh_channel()

    # --- Queues and bookkeeping ---------------------------------------------
    # ``active`` holds users with at least one request whose content is at
    # the edge now; only those enter matching (a station granted to a user
    # whose content is still in the backhaul would idle the slot away).
    # ``wakeups`` re-checks users when a pending fetch lands.
    queues = [UserQueue(u, config.literal_descending_deadlines) for u in range(n)]
    active: set[int] = set()
    wakeups: dict[int, list[int]] = {}
    # Requests indexed by frame so everything still pending for a frame can
    # be dropped once its display cutoff passes (the headset has moved on;
    # keeping stale work would let overload backlogs grow without bound).
    by_frame: dict[int, list[Request]] = {}
    ema_i = np.zeros(n)
    inst_i = np.zeros(n)
    covered_at = np.full((n, n_frames), -1, dtype=np.int64)
    in_flight: dict[tuple[int, int, int], int] = {}
    bh_slots = config.backhaul_slots
    counters = {
        "admitted_predicted": 0,
        "admitted_realtime": 0,
        "suppressed_duplicates": 0,
        "completed": 0,
        "dropped_stale_predicted": 0,
        "dropped_expired": 0,
        "pending_at_end": 0,
    }
    events: list[tuple] | None = [] if config.collect_events else None
    next_request_id = 0
    beta = ccfg.ema_beta

    def availability(video: int, frame: int, code: int, s0: int) -> int:
        if config.uses_cache:
            if cached_by_user is None:
                pass  # no profile: every lookup is a miss
            elif cached_flat[video, frame, code]:
                return s0
            key = (video, frame, code)
            ready = in_flight.get(key)
            if ready is None or ready < s0:
                # Earlier fetch already left the edge; fetch again.
                ready = s0 + bh_slots
                in_flight[key] = ready
            return ready
        return s0 + bh_slots

    def enqueue(u: int, frame: int, code: int, kind: str, s0: int, deadline: int):
        nonlocal next_request_id
        req = Request(
            user_id=u,
            video_id=int(video_of[u]),
            frame_index=frame,
            viewport=vp_objects[code],
            kind=kind,
            size_remaining=payload,
            deadline=deadline,
            created_at=s0,
            available_at=availability(int(video_of[u]), frame, code, s0),
            request_id=next_request_id,
        )
        if queues[u].add(req):
            next_request_id += 1
            counters["admitted_predicted" if kind == PREDICTED else "admitted_realtime"] += 1
            by_frame.setdefault(frame, []).append(req)
            if req.available_at <= s0:
                active.add(u)
            else:
                wakeups.setdefault(req.available_at, []).append(u)
        else:
            counters["suppressed_duplicates"] += 1

    def admit_frame(f: int, s0: int):
        for u in range(n):
            if config.proactive:
                if f == 0:
                    # Session start: prebuffer whatever is already predictable
                    # of the first horizon (only an oracle has this).
                    for tgt in range(min(config.horizon, n_frames)):
                        if pred_code[u, tgt] >= 0:
                            enqueue(u, tgt, int(pred_code[u, tgt]), PREDICTED,
                                    s0, tgt * spf)
                tgt = f + config.horizon
                if tgt < n_frames and pred_code[u, tgt] >= 0:
                    enqueue(u, tgt, int(pred_code[u, tgt]), PREDICTED, s0, tgt * spf)
                past = int(pred_code[u, f])
                actual = int(rt_code[u, f])
                if past < 0 or past != actual:
                    if queues[u].drop_predicted(f) is not None:
                        counters["dropped_stale_predicted"] += 1
                        if queues[u].first_servable(s0) is None:
                            active.discard(u)
                    enqueue(u, f, actual, REAL_TIME, s0, s0)
            else:
                enqueue(u, f, int(rt_code[u, f]), REAL_TIME, s0, s0)

    # --- Slot loop ------------------------------------------------------------
    total_slots = max(int(round(config.sim_time_s * 1000.0 / config.slot_ms)),
                      n_frames * spf)
    refresh_every = config.refresh_slots
    refresh_dt = refresh_every * slot_s
    one_minus_beta = 1.0 - beta

    def expire_frame(f: int, now: int):
        stale = by_frame.pop(f, None)
        if not stale:
            return
        for req in stale:
            if req.completed_at is None and not req.dropped:
                queue = queues[req.user_id]
                queue.remove(req)
                counters["dropped_expired"] += 1
                if req.user_id in active and queue.first_servable(now) is None:
                    active.discard(req.user_id)

    for s in range(total_slots):
        if s % spf == 0:
            f = s // spf
            # Frame f-1's display cutoff has passed; its leftovers are moot.
            if f > 0:
                expire_frame(f - 1, s)
            if f < n_frames:
                admit_frame(f, s)
        woke = wakeups.pop(s, None)
        if woke:
            for u in woke:
                if queues[u].first_servable(s) is not None:
                    active.add(u)
        if s and s % refresh_every == 0:
            if waypoints is not None:
                _advance_positions(positions, waypoints, config.mobility_speed_mps,
                                   refresh_dt, side, rng_main)
            if waypoints is not None or config.pathloss_mode == "bernoulli":
                loss, signal_w, home, g_tx_t, g_rx_t = refresh_channel()

        if active:
            users = sorted(active)
            est_sinr = signal_w[users] / (ema_i[users][:, None] + noise_w)
            prefs = bw * (np.log1p(est_sinr) / _LN2)
            pairs = deferred_acceptance(prefs, rng_match)
            matched = [(users[lu], b) for lu, b in pairs]

            # True interference seen by every user this slot (Eq.-style sum
            # over the other active downlinks, sectored gains applied).
            inst_i[:] = 0.0
            beam_at = home.copy()
            for u, b in matched:
                beam_at[u] = b
            for u, b in matched:
                inst_i += p_w * g_tx_t[b, u, :] * g_rx_t[arange_n, b, beam_at] / loss[:, b]
            for u, b in matched:
                inst_i[u] -= p_w * g_tx_t[b, u, u] * g_rx_t[u, b, b] / loss[u, b]

            for u, b in matched:
                sig = p_w * main_tx * main_rx / loss[u, b]
                snr = sig / (inst_i[u] + noise_w)
                budget = bw * math.log2(1.0 + snr) * slot_s
                queue = queues[u]
                while budget > 1e-9:
                    req = queue.first_servable(s)
                    if req is None:
                        break
                    bits = min(budget, req.size_remaining)
                    req.size_remaining -= bits
                    budget -= bits
                    if events is not None:
                        events.append((s, u, b, req.request_id, bits, snr))
                    if req.size_remaining <= 1e-9:
                        queue.complete(req, s)
                        counters["completed"] += 1
                        fi = req.frame_index
                        code = req.viewport.row * grid.n_yaw + req.viewport.col
                        if covered_at[u, fi] < 0 and mask_flat[u, fi, code]:
                            covered_at[u, fi] = s
                        if queue.first_servable(s) is None:
                            active.discard(u)
                            break
                    else:
                        break
        else:
            inst_i[:] = 0.0

        # Interference estimate for the next slot: EMA over instantaneous.
        ema_i *= one_minus_beta
        ema_i += beta * inst_i

    counters["pending_at_end"] = sum(len(q) for q in queues)

    # --- Outcomes ---------------------------------------------------------
    latency = np.empty((n, n_frames))
    hd = np.empty((n, n_frames), dtype=bool)
    for u in range(n):
        for f in range(n_frames):
            slot = covered_at[u, f]
            completion = (slot + 1) * config.slot_ms if slot >= 0 else None
            hd[u, f], latency[u, f] = frame_outcome(
                completion, f * config.frame_ms, config.frame_ms
            )
    return compute_metrics(latency, hd, counters, events)


def _safe_poses(poses: np.ndarray) -> np.ndarray:
    """Replace NaN pose rows with the identity so angle math stays finite;
    callers mask those entries out afterwards."""
    out = np.where(np.isnan(poses[..., :1]), np.array([1.0, 0.0, 0.0, 0.0]), poses)
    return out


def _advance_positions(positions: np.ndarray, waypoints: np.ndarray, speed: float,
                       dt: float, side: float, rng: np.random.Generator) -> None:
    """Random-waypoint walk: move toward the waypoint, redraw on arrival."""
    step = speed * dt
    delta = waypoints - positions
    dist = np.linalg.norm(delta, axis=1)
    arrive = dist <= step
    move = ~arrive & (dist > 0)
    positions[arrive] = waypoints[arrive]
    positions[move] += delta[move] * (step / dist[move])[:, None]
    if np.any(arrive):
        waypoints[arrive] = rng.uniform(0.0, side, size=(int(np.sum(arrive)), 2))
