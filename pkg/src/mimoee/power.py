"""Radiated, circuit and computation power, and total energy efficiency.

Rates in this module are in bit/s (spectral efficiency times B) unless a
name says ``se``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import complexity as cx
from .analytic import OverheadError, Scheme, rate_report
from .config import PowerModelConfig, SystemConfig, rho_d_for
from .geometry import LargeScaleMap


@dataclass(frozen=True)
class PowerBreakdown:
    p_tx_ul: float
    p_tx_dl: float
    p_tx_tr: float
    p_fix: float
    p_tc: float
    p_ce: float
    p_cd: float
    p_bh: float
    p_lp_dl: float
    p_lp_ul: float
    scheme: Scheme

    COMPONENTS = ("p_tx_ul", "p_tx_dl", "p_tx_tr", "p_fix", "p_tc", "p_ce", "p_cd", "p_bh", "p_lp_dl", "p_lp_ul")

    @property
    def total(self) -> float:
        return float(sum(getattr(self, c) for c in self.COMPONENTS))

    @property
    def circuit(self) -> float:
        """P_CP: everything except the PA terms."""
        return self.total - self.p_tx_ul - self.p_tx_dl - self.p_tx_tr

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in self.COMPONENTS}


@dataclass(frozen=True)
class EEResult:
    ee: float           # bit/J
    sum_se: float       # bit/s/Hz
    power: PowerBreakdown


def _ul_eta(pm: PowerModelConfig, scheme: Scheme) -> float:
    return pm.eta_ul_fd if scheme is Scheme.FD else pm.eta_ul_td


def radiated_powers(config: SystemConfig, pm: PowerModelConfig, scheme, K: int | None = None):
    """(p_tx_ul, p_tx_dl, p_tx_tr) in W, with tau = K."""
    scheme = Scheme.parse(scheme)
    K = config.K if K is None else K
    S = config.S
    if K >= S:
        raise OverheadError(f"K={K} >= coherence block S={S}")
    if K == 0:
        return 0.0, 0.0, 0.0
    eta_u = _ul_eta(pm, scheme)
    frac = 1.0 - K / S
    p_ul = K * config.xi_u * frac * config.rho_u / eta_u
    p_dl = K * config.xi_d * frac * rho_d_for(config, K) / pm.eta_dl
    p_tr = K * (K / S) * config.rho_p / eta_u
    return p_ul, p_dl, p_tr


def ul_processing_flops(config: SystemConfig, pm: PowerModelConfig, scheme, M: int, K: int) -> float:
    """UL detection power per unit symbol rate, i.e. W per (symbol/s), split BS/MT.

    The complexity-table counts cover one frame of N symbols, so they are
    divided by N before multiplying by the symbol rate.
    """
    scheme = Scheme.parse(scheme)
    N, L = config.N, config.L
    if K == 0 and M == 0:
        return 0.0
    if scheme is Scheme.FD:
        fft = 5 * N * np.log2(N)
        bs = M * fft + N * K * (8 * M - 2)
        return (K * fft / pm.L_mt_eff + bs / pm.L_bs_eff) / N
    lg = np.log2(2 * L)
    total = K * (M * (N + L) * (10 * lg + 14) + 2 * N * (M - 1)) + M * (N + L) * 10 * lg
    return total / pm.L_bs_eff / N


def circuit_power(config: SystemConfig, pm: PowerModelConfig, scheme, sum_rate_bits_per_s: float,
                  M: int | None = None, K: int | None = None) -> PowerBreakdown:
    """Circuit part of the breakdown (radiated terms are zero here)."""
    scheme = Scheme.parse(scheme)
    M = config.M if M is None else M
    K = config.K if K is None else K
    B, S = config.bandwidth_hz, config.S
    tau = K
    data_frac = 1.0 - tau / S
    L_bs = pm.L_bs_eff
    p_tc = pm.P_syn + M * pm.P_bs + K * pm.P_mt
    p_ce = (B / S) * M * K * (8 * tau - 2) / L_bs if K else 0.0
    p_cd = sum_rate_bits_per_s * (pm.P_cod + pm.P_dec)
    p_bh = sum_rate_bits_per_s * pm.P_bt
    if M and K:
        per_sym, setup = cx.flops_dl_precoding(M, K)
        p_lp_dl = B * data_frac * config.xi_d * per_sym / L_bs + (B / S) * setup / L_bs
        p_lp_ul = B * data_frac * config.xi_u * ul_processing_flops(config, pm, scheme, M, K)
    else:
        p_lp_dl = p_lp_ul = 0.0
    return PowerBreakdown(0.0, 0.0, 0.0, pm.P_fix, p_tc, p_ce, p_cd, p_bh, p_lp_dl, p_lp_ul, scheme)


def power_breakdown(config: SystemConfig, pm: PowerModelConfig, scheme, sum_se: float,
                    M: int | None = None, K: int | None = None) -> PowerBreakdown:
    """Full breakdown for a sum spectral efficiency in bit/s/Hz."""
    scheme = Scheme.parse(scheme)
    K = config.K if K is None else K
    p_ul, p_dl, p_tr = radiated_powers(config, pm, scheme, K)
    cp = circuit_power(config, pm, scheme, sum_se * config.bandwidth_hz, M, K)
    return PowerBreakdown(p_ul, p_dl, p_tr, cp.p_fix, cp.p_tc, cp.p_ce, cp.p_cd, cp.p_bh,
                          cp.p_lp_dl, cp.p_lp_ul, scheme)


def evaluate_ee(sum_se: float, config: SystemConfig, pm: PowerModelConfig, scheme,
                M: int | None = None, K: int | None = None) -> EEResult:
    """EE = B * sum SE / total power, in bit/J."""
    br = power_breakdown(config, pm, scheme, sum_se, M, K)
    return EEResult(ee=config.bandwidth_hz * sum_se / br.total, sum_se=float(sum_se), power=br)


def total_ee(ls: LargeScaleMap, config: SystemConfig, pm: PowerModelConfig, scheme) -> EEResult:
    """EE of one drop at config.M with K = ls.K; DL is always OFDM with MRT."""
    rr = rate_report(ls, config)
    return evaluate_ee(rr.sum_se(scheme), config, pm, scheme, config.M, ls.K)


def breakdown_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(PowerBreakdown) if f.name != "scheme")
