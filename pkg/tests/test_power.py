import dataclasses

import numpy as np
import pytest

from mimoee.analytic import OverheadError, Scheme
from mimoee.config import ConfigError, PowerModelConfig, SystemConfig
from mimoee.power import (PowerBreakdown, circuit_power, evaluate_ee, power_breakdown,
                          radiated_powers, total_ee)

from conftest import make_drop


def test_table_defaults(pm):
    assert (pm.eta_ul_td, pm.eta_ul_fd, pm.eta_dl) == (0.50, 0.30, 0.39)
    assert pm.L_bs == 12.8e9 and pm.L_mt == 5e9
    assert (pm.P_fix, pm.P_syn, pm.P_bs, pm.P_mt) == (18.0, 2.0, 1.0, 0.1)
    assert (pm.P_cod, pm.P_dec, pm.P_bt) == (0.1e-9, 0.8e-9, 0.25e-9)


@pytest.mark.parametrize("bad", [dict(eta_dl=0.0), dict(eta_ul_td=1.2), dict(eta_ul_fd=-0.3),
                                 dict(P_fix=-1.0), dict(L_bs=0.0), dict(ce_scale=-2.0)])
def test_invalid_power_model(bad):
    with pytest.raises(ConfigError):
        PowerModelConfig(**bad)


def test_radiated_powers(cfg, pm):
    ul_td, dl, tr = radiated_powers(cfg, pm, "TD", K=22)
    assert ul_td == pytest.approx(22 * 0.4 * 0.89 * 0.2 / 0.5, rel=1e-12)
    assert ul_td == pytest.approx(3.1328, rel=1e-12)
    ul_fd, dl_fd, tr_fd = radiated_powers(cfg, pm, "FD", K=22)
    assert ul_fd / ul_td == pytest.approx(0.5 / 0.3)
    assert tr == pytest.approx(22 * 22 / 200 * 0.2 / 0.5)
    # P_TX^DL * eta^d is fixed at 2 W
    assert dl * pm.eta_dl == pytest.approx(2.0) and dl_fd == dl
    assert radiated_powers(cfg, pm, "TD", K=0) == (0.0, 0.0, 0.0)
    with pytest.raises(OverheadError):
        radiated_powers(cfg, pm, "TD", K=200)


def test_circuit_power_empty_system(cfg, pm):
    br = circuit_power(cfg, pm, "FD", 0.0, M=0, K=0)
    assert br.total == pytest.approx(pm.P_fix + pm.P_syn)


def test_channel_estimation_power(cfg, pm):
    br = circuit_power(cfg, pm, "TD", 0.0, M=100, K=22)
    assert br.p_ce == pytest.approx(1e5 * 100 * 22 * 174 / 12.8e9, rel=1e-12)
    assert br.p_ce == pytest.approx(2.9906, abs=1e-4)


def test_rate_dependent_terms(cfg, pm):
    br = circuit_power(cfg, pm, "FD", 1e8, M=50, K=10)
    assert br.p_cd == pytest.approx(1e8 * 0.9e-9)
    assert br.p_bh == pytest.approx(1e8 * 0.25e-9)
    assert br.p_tc == pytest.approx(2 + 50 + 1.0)


def test_linear_processing_terms(cfg, pm):
    M, K, N, L = 100, 22, 256, 16
    B, S = 20e6, 200
    frac = 1 - K / S
    td = circuit_power(cfg, pm, "TD", 0.0, M=M, K=K)
    fd = circuit_power(cfg, pm, "FD", 0.0, M=M, K=K)
    assert td.p_lp_ul > fd.p_lp_ul
    # closed-form counts are per N-symbol frame, charged at the symbol rate
    trmrc = K * (M * (N + L) * (10 * 5 + 14) + 2 * N * (M - 1)) + M * (N + L) * 50
    assert td.p_lp_ul == pytest.approx(B * frac * 0.4 * trmrc / N / 12.8e9, rel=1e-12)
    fft = 5 * N * 8
    fd_ref = B * frac * 0.4 * (K * fft / 5e9 + (M * fft + N * K * (8 * M - 2)) / 12.8e9) / N
    assert fd.p_lp_ul == pytest.approx(fd_ref, rel=1e-12)
    # BS-side share only
    fd_bs = B * frac * 0.4 * (M * fft + N * K * (8 * M - 2)) / 12.8e9 / N
    assert td.p_lp_ul / fd_bs == pytest.approx(trmrc / (M * fft + N * K * (8 * M - 2)), rel=1e-12)
    dl_ref = B * frac * 0.6 * M * (8 * K - 2) / 12.8e9 + B / S * K * (14 * M - 2) / 12.8e9
    assert td.p_lp_dl == pytest.approx(dl_ref, rel=1e-12) and fd.p_lp_dl == td.p_lp_dl


def test_breakdown_sums_to_total(cfg, pm):
    for scheme in Scheme:
        br = power_breakdown(cfg, pm, scheme, 25.0, M=80, K=20)
        parts = [getattr(br, c) for c in PowerBreakdown.COMPONENTS]
        assert all(p >= 0 for p in parts)
        assert abs(sum(parts) - br.total) <= 1e-9 * br.total
        assert br.circuit == pytest.approx(br.total - br.p_tx_ul - br.p_tx_dl - br.p_tx_tr)


def test_zero_rate_zero_ee(cfg, pm):
    r = evaluate_ee(0.0, cfg, pm, "TD", M=50, K=10)
    assert r.ee == 0.0 and r.power.total > 0


def test_bandwidth_is_not_a_scale(cfg, pm):
    a = evaluate_ee(30.0, cfg, pm, "FD", M=60, K=20)
    b = evaluate_ee(30.0, cfg.with_(bandwidth_hz=40e6), pm, "FD", M=60, K=20)
    # P_fix and P_tc do not grow with B, so EE rises but by less than a factor of 2
    assert a.ee < b.ee < 2 * a.ee
    assert b.power.p_fix == a.power.p_fix and b.power.p_tc == a.power.p_tc


def test_scheme_symmetry(pm):
    cfg = SystemConfig(L=1)
    pm_eq = pm.with_(eta_ul_fd=0.4, eta_ul_td=0.4)
    ls = make_drop(cfg, seed=1)
    td, fd = total_ee(ls, cfg, pm_eq, "TD"), total_ee(ls, cfg, pm_eq, "FD")
    assert td.sum_se == fd.sum_se
    # give both the same UL processing power
    fd_pw = dataclasses.replace(fd.power, p_lp_ul=td.power.p_lp_ul)
    assert fd_pw.total == td.power.total
    assert cfg.bandwidth_hz * fd.sum_se / fd_pw.total == td.ee


def test_ee_increases_with_ce_scale(cfg, pm):
    ee = {s: [] for s in Scheme}
    for scale in (1.0, 1.1, 1.3, 1.6, 2.0, 4.0):
        for s in Scheme:
            ee[s].append(evaluate_ee(40.0, cfg, pm.with_(ce_scale=scale), s, M=100, K=22).ee)
    for s in Scheme:
        assert np.all(np.diff(ee[s]) > 0)
    gap = np.array(ee[Scheme.TD]) - np.array(ee[Scheme.FD])
    assert np.all(np.diff(gap) > 0)


def test_total_ee_on_drop(cfg, pm):
    ls = make_drop(cfg, seed=2)
    r = total_ee(ls, cfg, pm, "SC")
    assert r.ee == pytest.approx(cfg.bandwidth_hz * r.sum_se / r.power.total)
    assert r.power.scheme is Scheme.TD
    assert 1e5 < r.ee < 1e8
