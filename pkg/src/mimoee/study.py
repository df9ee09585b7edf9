"""Monte Carlo drivers: EE(M, K) surfaces, sweeps and link-level validation.

Every drop draws from its own substream keyed by ``(seed, K, drop)``, so
results do not depend on the number of worker threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import linklevel as ll
from .analytic import (Link, OverheadError, Scheme, dl_sinr_array, rate_prefactor, sinr_ul,
                       ul_sinr_array)
from .channel import build_pilot_book, gen_channel
from .config import ConfigError, PowerModelConfig, SystemConfig, rho_d_for
from .geometry import build_layout, drop_seed, drop_users
from .power import PowerBreakdown, evaluate_ee

DEFAULT_M_GRID = tuple(range(10, 201, 5))
DEFAULT_K_GRID = tuple(range(2, 41, 2))
DEFAULT_DROPS = 1000
FULL_SCALE_DROPS = 100_000
CELL_RADIUS_SCHEDULE = ((500.0, 50.0, 16), (400.0, 40.0, 8), (300.0, 30.0, 4), (200.0, 20.0, 2), (100.0, 10.0, 1))


@dataclass(frozen=True)
class EEPoint:
    M: int
    K: int
    ee_sc: float
    ee_ofdm: float
    se_sc: float
    se_ofdm: float
    drops: int
    seed: int
    power_sc: PowerBreakdown | None = field(default=None, compare=False, repr=False)
    power_ofdm: PowerBreakdown | None = field(default=None, compare=False, repr=False)

    def ee(self, scheme) -> float:
        return self.ee_ofdm if Scheme.parse(scheme) is Scheme.FD else self.ee_sc

    def se(self, scheme) -> float:
        return self.se_ofdm if Scheme.parse(scheme) is Scheme.FD else self.se_sc

    def power(self, scheme) -> PowerBreakdown | None:
        return self.power_ofdm if Scheme.parse(scheme) is Scheme.FD else self.power_sc


@dataclass(frozen=True)
class Optimum:
    M: int
    K: int
    ee: float
    se: float


@dataclass
class StudyResult:
    grid: list[EEPoint]
    argmax_sc: Optimum
    argmax_ofdm: Optimum
    metadata: dict

    def argmax(self, scheme) -> Optimum:
        return self.argmax_ofdm if Scheme.parse(scheme) is Scheme.FD else self.argmax_sc

    @property
    def winner(self) -> Scheme:
        return Scheme.TD if self.argmax_sc.ee >= self.argmax_ofdm.ee else Scheme.FD

    def max_gain_fd_over_td(self) -> tuple[float, EEPoint]:
        """Largest (EE_FD - EE_TD)/EE_TD over the grid, with the point where it occurs."""
        best = max(self.grid, key=lambda p: ((p.ee_ofdm - p.ee_sc) / p.ee_sc, -p.M, -p.K))
        return (best.ee_ofdm - best.ee_sc) / best.ee_sc, best


def _argmax(points: list[EEPoint], scheme: Scheme) -> Optimum:
    # ties: smaller M, then smaller K
    p = max(points, key=lambda q: (q.ee(scheme), -q.M, -q.K))
    return Optimum(p.M, p.K, float(p.ee(scheme)), float(p.se(scheme)))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def check_grid(config: SystemConfig, k_grid) -> None:
    bad = []
    for K in k_grid:
        k_max = (K if config.tau is None else config.tau) * config.N_sm
        if K < 1 or K > k_max or K >= config.S:
            bad.append(K)
    if bad:
        raise ConfigError(f"K values outside 1..K_max (or >= S): {bad}")


def beta_stack(config: SystemConfig, K: int, drops: int, seed: int, workers: int = 1) -> np.ndarray:
    """(drops, C, K, C) large-scale tensors of independent drops."""
    layout = build_layout(config)

    def one(d):
        return drop_users(layout, K, np.random.default_rng(drop_seed(seed, K, d)), config).beta

    return np.stack(_map(one, range(drops), workers))


def sum_se_over_m(config: SystemConfig, beta: np.ndarray, m_grid) -> dict[Scheme, np.ndarray]:
    """Drop-averaged sum SE (UL + DL) for every M of the grid, per scheme."""
    K = beta.shape[-2]
    M = np.asarray(m_grid, dtype=float)
    nrp = config.noise_power_w / config.rho_p
    nru = config.noise_power_w / config.rho_u
    nrd = config.noise_power_w / rho_d_for(config, K)

    def mean_sum_log(s):   # (nM, D, K) -> (nM,)
        return np.log2(1.0 + s).sum(axis=-1).mean(axis=-1)

    dl = rate_prefactor(config, Link.DL, K) * mean_sum_log(dl_sinr_array(beta, M, nrd, nrp))
    fd = rate_prefactor(config, Link.UL_FD, K) * mean_sum_log(ul_sinr_array(beta, M, nru, nrp, config.gamma))
    td = rate_prefactor(config, Link.UL_TD, K) * mean_sum_log(ul_sinr_array(beta, M, nru, nrp, 1.0))
    return {Scheme.FD: fd + dl, Scheme.TD: td + dl}


def se_surface(config: SystemConfig, m_grid, k_grid, drops: int, seed: int,
               workers: int = 1) -> dict[Scheme, np.ndarray]:
    """Sum SE arrays of shape (len(m_grid), len(k_grid)) per scheme, common drops for both."""
    if drops < 1:
        raise ValueError("drops must be >= 1")
    if not len(m_grid) or not len(k_grid):
        raise ValueError("grids must be nonempty")
    check_grid(config, k_grid)
    out = {s: np.empty((len(m_grid), len(k_grid))) for s in Scheme}
    for j, K in enumerate(k_grid):
        se = sum_se_over_m(config, beta_stack(config, K, drops, seed, workers), m_grid)
        for s in Scheme:
            out[s][:, j] = se[s]
    return out


def surface_from_se(config: SystemConfig, pm: PowerModelConfig, m_grid, k_grid, se: dict,
                    drops: int, seed: int, metadata: dict | None = None) -> StudyResult:
    pts = []
    for i, M in enumerate(m_grid):
        for j, K in enumerate(k_grid):
            r_td = evaluate_ee(se[Scheme.TD][i, j], config, pm, Scheme.TD, M, K)
            r_fd = evaluate_ee(se[Scheme.FD][i, j], config, pm, Scheme.FD, M, K)
            pts.append(EEPoint(int(M), int(K), r_td.ee, r_fd.ee, r_td.sum_se, r_fd.sum_se,
                               drops, seed, r_td.power, r_fd.power))
    meta = {"config": asdict(config), "power_model": asdict(pm), "seed": seed, "drops": drops}
    meta.update(metadata or {})
    return StudyResult(pts, _argmax(pts, Scheme.TD), _argmax(pts, Scheme.FD), meta)


def ee_surface(config: SystemConfig, pm: PowerModelConfig, m_grid=DEFAULT_M_GRID, k_grid=DEFAULT_K_GRID,
               drops: int = DEFAULT_DROPS, seed: int = 0, workers: int = 1) -> StudyResult:
    """EE of both schemes over the (M, K) grid; EE is computed from drop-averaged rates."""
    se = se_surface(config, m_grid, k_grid, drops, seed, workers)
    return surface_from_se(config, pm, m_grid, k_grid, se, drops, seed)


def cell_radius_sweep(config: SystemConfig, pm: PowerModelConfig, schedule=CELL_RADIUS_SCHEDULE,
                      drops: int = DEFAULT_DROPS, seed: int = 0, m_grid=DEFAULT_M_GRID,
                      k_grid=DEFAULT_K_GRID, workers: int = 1) -> list[StudyResult]:
    """One full optimum search per (r_cell, d_min, L) row."""
    out = []
    for r_cell, d_min, L in schedule:
        cfg = config.with_(r_cell=float(r_cell), d_min=float(d_min), L=int(L))
        res = ee_surface(cfg, pm, m_grid, k_grid, drops, seed, workers)
        res.metadata.update(r_cell=float(r_cell), d_min=float(d_min), L=int(L))
        out.append(res)
    return out


@dataclass
class CeSweepReport:
    scales: list[float]
    results: list[StudyResult]
    crossover: float | None   # smallest scale of the grid where SC >= OFDM

    def ee_max(self, scheme) -> np.ndarray:
        return np.array([r.argmax(scheme).ee for r in self.results])


def ce_sweep(config: SystemConfig, pm: PowerModelConfig, scale_grid=None, drops: int = DEFAULT_DROPS,
             seed: int = 0, m_grid=DEFAULT_M_GRID, k_grid=DEFAULT_K_GRID, workers: int = 1) -> CeSweepReport:
    """Max EE of both schemes as L_bs and L_mt are scaled; rates are shared across scales."""
    scales = list(np.round(np.arange(1.0, 2.0001, 0.05), 10)) if scale_grid is None else [float(s) for s in scale_grid]
    se = se_surface(config, m_grid, k_grid, drops, seed, workers)
    results = []
    for s in scales:
        res = surface_from_se(config, pm.with_(ce_scale=s), m_grid, k_grid, se, drops, seed, {"ce_scale": s})
        results.append(res)
    cross = next((s for s, r in zip(scales, results) if r.argmax_sc.ee >= r.argmax_ofdm.ee), None)
    return CeSweepReport(scales, results, cross)


@dataclass(frozen=True)
class TradeoffPoint:
    scheme: Scheme
    M: int
    K: int
    se: float
    ee: float


def tradeoff_curve(config: SystemConfig, pm: PowerModelConfig, m_grid=DEFAULT_M_GRID, drops: int = DEFAULT_DROPS,
                   seed: int = 0, k_grid=DEFAULT_K_GRID, workers: int = 1,
                   result: StudyResult | None = None) -> list[TradeoffPoint]:
    """For each M the EE-maximising K per scheme, as (SE, EE) pairs."""
    res = ee_surface(config, pm, m_grid, k_grid, drops, seed, workers) if result is None else result
    out = []
    for scheme in (Scheme.TD, Scheme.FD):
        for M in m_grid:
            row = [p for p in res.grid if p.M == M]
            p = max(row, key=lambda q: (q.ee(scheme), -q.K))
            out.append(TradeoffPoint(scheme, int(M), p.K, p.se(scheme), p.ee(scheme)))
    return out


# --- link-level validation ---------------------------------------------------

@dataclass
class ValidationReport:
    sinr_gap_db: dict          # scheme -> mean over users of |mean_d dB(analytic) - mean_d dB(measured)|
    rate_gap_bpcu: dict        # scheme -> same averaging for log2(1+SINR), measured vs bound
    genie_rate_gap_bpcu: dict  # scheme -> mean of E[log2(1+SINR | channel)] - log2(1+analytic SINR)
    sinr_analytic: dict        # scheme -> (drops, K)
    sinr_measured: dict
    rate_simulated: dict
    drops: int
    symbols_per_drop: int
    seed: int

    def per_drop_abs_gap_db(self, scheme) -> float:
        s = Scheme.parse(scheme)
        return float(np.mean(np.abs(_db(self.sinr_analytic[s]) - _db(self.sinr_measured[s]))))


def _db(x):
    return 10.0 * np.log10(x)


def _validate_drop(config: SystemConfig, symbols: int, seed: int, d: int):
    rng = np.random.default_rng(drop_seed(seed, config.K, d))
    ls = drop_users(build_layout(config), config.K, rng, config)
    M, N, L, K, C = config.M, config.N, config.L, config.K, config.C
    sigma2 = config.noise_power_w
    book = build_pilot_book(config.pilot_len, N, L, K)
    frames = -(-symbols // N)
    runs = {Scheme.FD: [], Scheme.TD: []}
    for _ in range(frames):
        ch = gen_channel(ls, M, N, L, rng, bs=(0,))
        csi = ll.train_fd(ch, book, config.rho_p, sigma2, rng)
        data = ll.draw_data(rng, (C, K, N, 1))
        runs[Scheme.FD].append(ll.detect_fdmrc(csi, ch, data, config.gamma * config.rho_u, sigma2, rng))
        csi = ll.train_td(ch, config.rho_p, sigma2, rng)
        data = ll.draw_data(rng, (C, K, N))
        runs[Scheme.TD].append(ll.detect_trmrc(csi, ch, data, config.rho_u, sigma2, rng))
    out = {}
    for s, rs in runs.items():
        run = ll.DetectionRun.concat(rs)
        out[s] = (sinr_ul(ls, config, s), ll.measure_sinr(run), ll.simulated_rate(run))
    return out


def validate_linklevel(config: SystemConfig, drops: int = 200, symbols_per_drop: int = 1000, seed: int = 0,
                       workers: int = 1) -> ValidationReport:
    """Compare closed-form UL SINRs with sample-level training + MRC detection.

    The large-scale drop is fixed per drop; small-scale fading and pilots
    are redrawn every frame (one OFDM symbol, or one N-symbol SC block).
    """
    if drops < 1:
        raise ValueError("drops must be >= 1")
    if symbols_per_drop < ll.MIN_SLOTS:
        raise ll.StatisticalInsufficiencyError(f"{symbols_per_drop} symbols per drop < {ll.MIN_SLOTS}")
    per_drop = _map(lambda d: _validate_drop(config, symbols_per_drop, seed, d), range(drops), workers)
    an, me, rt, sg, rg, gg = {}, {}, {}, {}, {}, {}
    for s in Scheme:
        an[s] = np.stack([p[s][0] for p in per_drop])
        me[s] = np.stack([p[s][1] for p in per_drop])
        rt[s] = np.stack([p[s][2] for p in per_drop])
        # average over drops per user slot first, then over the K slots
        sg[s] = float(np.mean(np.abs(_db(an[s]).mean(axis=0) - _db(me[s]).mean(axis=0))))
        rg[s] = float(np.mean(np.abs(np.log2(1 + an[s]).mean(axis=0) - np.log2(1 + me[s]).mean(axis=0))))
        gg[s] = float(np.mean(rt[s] - np.log2(1.0 + an[s])))
    return ValidationReport(sg, rg, gg, an, me, rt, drops, symbols_per_drop, seed)


__all__ = [
    "EEPoint", "Optimum", "StudyResult", "CeSweepReport", "TradeoffPoint", "ValidationReport",
    "ee_surface", "se_surface", "surface_from_se", "cell_radius_sweep", "ce_sweep", "tradeoff_curve",
    "validate_linklevel", "beta_stack", "sum_se_over_m", "check_grid", "OverheadError",
    "DEFAULT_M_GRID", "DEFAULT_K_GRID", "DEFAULT_DROPS", "FULL_SCALE_DROPS", "CELL_RADIUS_SCHEDULE",
]
