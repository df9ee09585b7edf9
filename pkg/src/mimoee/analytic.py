"""Closed-form SINRs and achievable-rate lower bounds for the centre cell.

The array helpers accept ``beta`` with arbitrary leading batch axes
``(..., C, K, C)`` so that a stack of drops is evaluated in one call; ``M``
may be an array and broadcasts in front of the batch axes.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import SystemConfig, rho_d_for
from .geometry import LargeScaleMap

SINR_CAP = 1e12


class Scheme(str, Enum):
    FD = "FD"   # FDMRC over OFDM
    TD = "TD"   # TRMRC over single carrier

    @classmethod
    def parse(cls, s) -> "Scheme":
        if isinstance(s, cls):
            return s
        key = str(s).strip().upper()
        aliases = {"OFDM": cls.FD, "FDMRC": cls.FD, "SC": cls.TD, "TRMRC": cls.TD}
        return aliases.get(key) or cls(key)


class Link(str, Enum):
    UL_FD = "UL_FD"
    UL_TD = "UL_TD"
    DL = "DL"


class OverheadError(ValueError):
    """K >= coherence block length leaves no room for data."""


def _check_powers(config: SystemConfig) -> None:
    if not (config.rho_u > 0 and config.noise_power_w > 0):
        raise ValueError("rho_u and noise power must be positive")


def _with_m_axis(M, batch_ndim: int):
    M = np.asarray(M, dtype=float)
    return M.reshape(M.shape + (1,) * batch_ndim)


def ul_sinr_array(beta: np.ndarray, M, noise_over_rho_u: float, noise_over_rho_p: float,
                  gamma: float = 1.0) -> np.ndarray:
    """Uplink MRC SINR of the K centre-cell users for beta of shape (..., C, K, C)."""
    b0 = beta[..., 0, :, :]                          # (..., K, C) gains into BS 0
    own = b0[..., 0]
    coherent = np.sum(b0[..., 1:] ** 2, axis=-1)
    alpha_sq = np.sum(b0, axis=-1) + noise_over_rho_p
    noncoherent = np.sum(b0, axis=(-2, -1))[..., None]
    M = _with_m_axis(M, own.ndim)
    return M * own**2 / (M * coherent + alpha_sq * (noncoherent + noise_over_rho_u / gamma))


def dl_sinr_array(beta: np.ndarray, M, noise_over_rho_d, noise_over_rho_p: float) -> np.ndarray:
    """Downlink MRT SINR of the centre-cell users (uniform per-user power)."""
    K = beta.shape[-2]
    b = beta[..., :, :, 0]                           # (..., C_bs, K): user k of cell 0 seen by BS l
    alpha_sq = np.sum(beta, axis=-1) + noise_over_rho_p  # (..., C_bs, K)
    t = b**2 / alpha_sq
    coherent = np.sum(t[..., 1:, :], axis=-2)
    noncoherent = K * np.sum(b, axis=-2) + noise_over_rho_d
    M = _with_m_axis(M, t.ndim - 1)
    return t[..., 0, :] / (coherent + noncoherent / M)


def asymptotic_sinr_array(beta: np.ndarray) -> np.ndarray:
    b0 = beta[..., 0, :, :]
    den = np.sum(b0[..., 1:] ** 2, axis=-1)
    with np.errstate(divide="ignore"):
        out = np.where(den > 0, b0[..., 0] ** 2 / np.where(den > 0, den, 1.0), SINR_CAP)
    return np.minimum(out, SINR_CAP)


def sinr_ul(ls: LargeScaleMap, config: SystemConfig, scheme, M=None) -> np.ndarray:
    """Per-user SINR of FDMRC (CP-reduced power) or TRMRC."""
    _check_powers(config)
    scheme = Scheme.parse(scheme)
    gamma = config.gamma if scheme is Scheme.FD else 1.0
    return ul_sinr_array(ls.beta, config.M if M is None else M,
                         config.noise_power_w / config.rho_u, ls.noise_over_rho_p, gamma)


def sinr_dl(ls: LargeScaleMap, config: SystemConfig, M=None) -> np.ndarray:
    _check_powers(config)
    rho_d = rho_d_for(config, ls.K)
    if not rho_d > 0:
        raise ValueError("DL power must be positive")
    return dl_sinr_array(ls.beta, config.M if M is None else M,
                         config.noise_power_w / rho_d, ls.noise_over_rho_p)


def sinr_asymptotic(ls: LargeScaleMap) -> np.ndarray:
    """M -> infinity limit: own gain squared over co-pilot gains squared."""
    return asymptotic_sinr_array(ls.beta)


def rate_prefactor(config: SystemConfig, link, K: int | None = None) -> float:
    link = Link(link)
    K = config.K if K is None else K
    if K >= config.S:
        raise OverheadError(f"K={K} >= coherence block S={config.S}")
    overhead = 1.0 - K / config.S
    if link is Link.UL_FD:
        return config.xi_u * config.gamma * overhead
    if link is Link.UL_TD:
        return config.xi_u * overhead
    return config.xi_d * config.gamma * overhead


def rate_lower_bound(sinr, config: SystemConfig, link, K: int | None = None):
    """Per-user spectral efficiency bound in bit/s/Hz."""
    return rate_prefactor(config, link, K) * np.log2(1.0 + np.asarray(sinr))


@dataclass(frozen=True)
class SinrReport:
    sinr_fd: np.ndarray
    sinr_td: np.ndarray
    sinr_dl: np.ndarray
    sinr_asym: np.ndarray


@dataclass(frozen=True)
class RateReport:
    rate_ul_fd: np.ndarray
    rate_ul_td: np.ndarray
    rate_dl: np.ndarray

    def sum_se(self, scheme) -> float:
        ul = self.rate_ul_fd if Scheme.parse(scheme) is Scheme.FD else self.rate_ul_td
        return float(np.sum(ul + self.rate_dl))


def sinr_report(ls: LargeScaleMap, config: SystemConfig) -> SinrReport:
    return SinrReport(
        sinr_fd=sinr_ul(ls, config, Scheme.FD),
        sinr_td=sinr_ul(ls, config, Scheme.TD),
        sinr_dl=sinr_dl(ls, config),
        sinr_asym=sinr_asymptotic(ls),
    )


def rate_report(ls: LargeScaleMap, config: SystemConfig) -> RateReport:
    s = sinr_report(ls, config)
    K = ls.K
    return RateReport(
        rate_ul_fd=rate_lower_bound(s.sinr_fd, config, Link.UL_FD, K),
        rate_ul_td=rate_lower_bound(s.sinr_td, config, Link.UL_TD, K),
        rate_dl=rate_lower_bound(s.sinr_dl, config, Link.DL, K),
    )
