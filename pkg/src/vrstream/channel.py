"""Millimeter-wave link model.

Path loss uses the 3GPP indoor-hotspot office formulas at the configured
carrier, blended between line-of-sight and non-line-of-sight branches by a
distance-dependent LOS probability (in the linear domain, so the blend is
an expected linear loss). Antennas are sectored: a flat mainlobe of gain
2*pi/beamwidth inside the beam, a flat sidelobe outside. Every helper
accepts scalars or numpy arrays and never mutates its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    carrier_ghz: float = 28.0
    bandwidth_hz: float = 0.85e9
    noise_dbm_hz: float = -174.0
    tx_power_dbm: float = 24.0
    tx_beamwidth_deg: float = 90.0
    rx_beamwidth_deg: float = 45.0
    sidelobe_gain: float = 0.1
    ema_beta: float = 0.9
    pathloss_refresh_s: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.tx_beamwidth_deg < 360.0:
            raise ValueError("tx beamwidth must be in (0, 360) degrees")
        if not 0.0 < self.rx_beamwidth_deg < 360.0:
            raise ValueError("rx beamwidth must be in (0, 360) degrees")
        if not 0.0 <= self.ema_beta <= 1.0:
            raise ValueError("ema_beta must be in [0, 1]")
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth must be positive")


@dataclass
class LinkState:
    """Per user/base-station link quantities, all in linear units."""

    pathloss: float
    los: bool
    g_tx: float
    g_rx: float
    channel_gain: float
    inst_interference_w: float = 0.0
    ema_interference_w: float = 0.0


# ---------------------------------------------------------------------------
# Unit conversions
# ---------------------------------------------------------------------------
def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(np.asarray(lin, dtype=float))


def dbm_to_watts(dbm):
    return np.power(10.0, (np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0


# ---------------------------------------------------------------------------
# Path loss
# ---------------------------------------------------------------------------
def los_probability(d):
    """Line-of-sight probability as a piecewise function of distance (m)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise ValueError("distance must be non-negative")
    with np.errstate(invalid="ignore"):
        p = np.where(
            d <= 5.0,
            1.0,
            np.where(
                d <= 49.0,
                np.exp(-(d - 5.0) / 70.8),
                0.54 * np.exp(-(d - 49.0) / 211.7),
            ),
        )
    return float(p) if p.ndim == 0 else p


def path_loss_db(d, los: bool, cfg: ChannelConfig):
    """Indoor-hotspot path loss in dB; distances are clamped below 1 m.

    The non-line-of-sight branch is clamped to be at least the
    line-of-sight value at the same distance.
    """
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    lg_d = np.log10(d)
    lg_f = math.log10(cfg.carrier_ghz)
    pl_los = 32.4 + 17.3 * lg_d + 20.0 * lg_f
    if los:
        out = pl_los
    else:
        out = np.maximum(pl_los, 17.3 + 38.3 * lg_d + 24.9 * lg_f)
    return float(out) if np.ndim(out) == 0 else out


def effective_path_loss(d, cfg: ChannelConfig):
    """LOS-probability-weighted linear path loss (deterministic in d)."""
    p = los_probability(d)
    lin_los = db_to_linear(path_loss_db(d, True, cfg))
    lin_nlos = db_to_linear(path_loss_db(d, False, cfg))
    out = p * lin_los + (1.0 - p) * lin_nlos
    return float(out) if np.ndim(out) == 0 else out


def sampled_path_loss(d, rng: np.random.Generator, cfg: ChannelConfig):
    """Linear path loss with the LOS state drawn as a Bernoulli per link."""
    d = np.asarray(d, dtype=float)
    los = rng.random(d.shape) < los_probability(d)
    out = np.where(
        los,
        db_to_linear(path_loss_db(d, True, cfg)),
        db_to_linear(path_loss_db(d, False, cfg)),
    )
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Antennas, interference, rate
# ---------------------------------------------------------------------------
def mainlobe_gain(beamwidth_deg: float) -> float:
    return 2.0 * math.pi / math.radians(beamwidth_deg)


def antenna_gain(alignment_deg, beamwidth_deg: float, sidelobe: float):
    """Sectored gain: mainlobe inside half a beamwidth of boresight, else sidelobe."""
    if not 0.0 < beamwidth_deg < 360.0:
        raise ValueError("beamwidth must be in (0, 360) degrees")
    a = np.abs((np.asarray(alignment_deg, dtype=float) + 180.0) % 360.0 - 180.0)
    out = np.where(a <= 0.5 * beamwidth_deg, mainlobe_gain(beamwidth_deg), sidelobe)
    return float(out) if np.ndim(out) == 0 else out


def thermal_noise_w(cfg: ChannelConfig) -> float:
    """Noise power over the configured bandwidth, in watts."""
    return float(dbm_to_watts(cfg.noise_dbm_hz)) * cfg.bandwidth_hz


def instantaneous_interference(tx_power_w, tx_gains, rx_gains, pathlosses) -> float:
    """Total received interference power from a set of active links.

    All arguments are broadcastable arrays over the interferers; an empty
    set yields zero. Each term is p * g_tx * g_rx / pathloss.
    """
    terms = (
        np.asarray(tx_power_w, dtype=float)
        * np.asarray(tx_gains, dtype=float)
        * np.asarray(rx_gains, dtype=float)
        / np.asarray(pathlosses, dtype=float)
    )
    return float(np.sum(terms))


def update_interference_ema(inst_prev_w, ema_prev_w, beta: float):
    """Next interference estimate: beta * instantaneous + (1 - beta) * average."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must be in [0, 1]")
    return beta * inst_prev_w + (1.0 - beta) * ema_prev_w


def sinr(signal_w, interference_w, noise_w):
    """Signal to interference-plus-noise power ratio (all watts, linear out)."""
    return np.asarray(signal_w, dtype=float) / (
        np.asarray(interference_w, dtype=float) + noise_w
    )


def link_sinr(link: LinkState, interference_w: float, cfg: ChannelConfig) -> float:
    """SINR of a link: p * g_c * g_rx * g_tx / (interference + thermal noise)."""
    if interference_w < 0.0:
        raise ValueError("interference must be non-negative")
    p_w = float(dbm_to_watts(cfg.tx_power_dbm))
    num = p_w * link.channel_gain * link.g_rx * link.g_tx
    return num / (interference_w + thermal_noise_w(cfg))


def achievable_rate(sinr_linear, bandwidth_hz: float):
    """Shannon rate in bits/second."""
    out = bandwidth_hz * np.log2(1.0 + np.asarray(sinr_linear, dtype=float))
    return float(out) if np.ndim(out) == 0 else out
