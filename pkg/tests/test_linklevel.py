import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimoee import linklevel as ll
from mimoee.analytic import SINR_CAP, Scheme
from mimoee.channel import ChannelRealization, build_pilot_book, cir_to_fd, gen_channel

from conftest import hand_map


def random_map(C, K, seed, lo=0.1, hi=1.0):
    return hand_map(np.random.default_rng(seed).uniform(lo, hi, size=(C, K, C)), 1.0)


def one_bs_channel(C, K, M, N, L, seed):
    rng = np.random.default_rng(seed)
    return gen_channel(random_map(C, K, seed), M, N, L, rng, bs=(0,)), rng


# --- training ----------------------------------------------------------------

def test_train_fd_noiseless_single_cell_is_exact():
    ch, rng = one_bs_channel(1, 6, 4, 32, 4, 1)
    csi = ll.train_fd(ch, build_pilot_book(6, 32, 4, K=6), 0.2, 0.0, rng)
    np.testing.assert_allclose(csi.fd_hat, ch.fd[0][:, 0], atol=1e-12)
    np.testing.assert_allclose(csi.cir_hat, ch.cir[0][:, 0], atol=1e-12)


def test_train_fd_noiseless_multicell_is_pure_contamination():
    ch, rng = one_bs_channel(7, 10, 3, 64, 8, 2)
    csi = ll.train_fd(ch, build_pilot_book(10, 64, 8, K=10), 0.2, 0.0, rng)
    np.testing.assert_allclose(csi.fd_hat, ch.fd[0].sum(axis=1), atol=1e-12)


def test_train_fd_noise_variance():
    rho_p, s2 = 0.2, 0.05
    ls = random_map(3, 4, 3)
    rng = np.random.default_rng(3)
    book = build_pilot_book(4, 16, 4, K=4)
    err = []
    for _ in range(400):
        ch = gen_channel(ls, 8, 16, 4, rng, bs=(0,))
        csi = ll.train_fd(ch, book, rho_p, s2, rng)
        # only the L pilot subcarriers carry independent noise
        e = csi.fd_hat - ch.fd[0].sum(axis=1)
        err.append(np.stack([e[k][book.subcarrier_sets[k]] for k in range(4)]))
    v = np.mean(np.abs(np.array(err)) ** 2)     # 400*4*4*8 = 51200 entries
    assert v == pytest.approx(s2 / rho_p, rel=0.03)


def test_train_td_noiseless_single_cell_and_energy():
    ch, rng = one_bs_channel(1, 5, 4, 32, 8, 4)
    csi = ll.train_td(ch, 0.2, 0.0, rng)
    np.testing.assert_allclose(csi.cir_hat, ch.cir[0][:, 0], atol=1e-12)
    np.testing.assert_allclose(csi.pilot_energy, 8 * 0.2, rtol=1e-12)


def test_train_td_multicell_and_noise_variance():
    rho_p, s2, L = 0.2, 0.05, 8
    ch, rng = one_bs_channel(7, 6, 3, 32, L, 5)
    clean = ll.train_td(ch, rho_p, 0.0, rng)
    np.testing.assert_allclose(clean.cir_hat, ch.cir[0].sum(axis=1), atol=1e-12)
    ls = random_map(7, 6, 5)
    err = []
    for _ in range(200):
        ch = gen_channel(ls, 8, 32, L, rng, bs=(0,))
        err.append(ll.train_td(ch, rho_p, s2, rng).cir_hat - ch.cir[0].sum(axis=1))
    v = np.mean(np.abs(np.array(err)) ** 2)     # 200*6*8*8 = 76800 entries
    assert v == pytest.approx(s2 / (L * rho_p), rel=0.03)


# --- FDMRC -------------------------------------------------------------------

def test_fdmrc_two_antenna_hand_oracle():
    g = np.array([1 + 1j, 2 - 0.5j])
    ghat = np.array([0.9 + 1.2j, 2.1 - 0.4j])
    x = 0.6 - 0.8j
    ch = ChannelRealization(cir=g.reshape(1, 1, 1, 1, 2), fd=g.reshape(1, 1, 1, 1, 2), bs=(0,))
    csi = ll.EstimatedCsi(fd_hat=ghat.reshape(1, 1, 2), cir_hat=None, pilot_energy=np.zeros(1))
    run = ll.detect_fdmrc(csi, ch, np.full((1, 1, 1, 1), x), 1.0, 0.0, np.random.default_rng(0))
    y = g * x
    hand = (np.conj(ghat[0]) * y[0] + np.conj(ghat[1]) * y[1]) / 2
    assert run.rx_estimates[0, 0] == pytest.approx(hand, abs=1e-15)


def test_fdmrc_zero_input_gives_zero():
    ch, rng = one_bs_channel(7, 3, 4, 16, 4, 6)
    run = ll.detect_fdmrc(ll.perfect_csi(ch), ch, np.zeros((7, 3, 16, 2), complex), 1.0, 0.0, rng)
    assert np.all(run.rx_estimates == 0)


def test_fdmrc_channel_hardening():
    beta = 0.7
    ls = hand_map([[[beta]]])
    rng = np.random.default_rng(7)
    ch = gen_channel(ls, 4096, 16, 4, rng, bs=(0,))
    data = ll.draw_data(rng, (1, 1, 16, 4))
    run = ll.detect_fdmrc(ll.perfect_csi(ch), ch, data, 1.0, 0.0, rng)
    ratio = run.rx_estimates / run.tx_symbols
    np.testing.assert_allclose(ratio, beta, rtol=0.06)


# --- TRMRC -------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(lgL=st.integers(0, 4), extra=st.integers(0, 3), M=st.integers(1, 6), K=st.integers(1, 4),
       C=st.sampled_from([1, 2]), seed=st.integers(0, 2**31))
def test_overlap_add_equals_direct(lgL, extra, M, K, C, seed):
    L = 2**lgL
    N = L * 2**extra
    ch, rng = one_bs_channel(C, K, M, N, L, seed)
    csi = ll.train_td(ch, 0.2, 0.1, rng)
    r = ll.sc_receive(ch, ll.sc_stream(ll.draw_data(rng, (C, K, N)), L, rng), 0.2, 0.1, rng)
    a = ll.trmrc_direct(csi.cir_hat, r, N)
    b = ll.trmrc_overlap_add(csi.cir_hat, r, N)
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


def test_overlap_add_reference_case():
    ch, rng = one_bs_channel(2, 3, 4, 64, 8, 8)
    csi = ll.train_td(ch, 0.2, 0.1, rng)
    data = ll.draw_data(rng, (2, 3, 64))
    guard = (ll.draw_data(rng, (2, 3, 7)), ll.draw_data(rng, (2, 3, 7)))
    a = ll.detect_trmrc(csi, ch, data, 0.2, 0.0, rng, method="direct", guard=guard)
    b = ll.detect_trmrc(csi, ch, data, 0.2, 0.0, rng, method="overlap_add", guard=guard)
    assert np.max(np.abs(a.rx_estimates - b.rx_estimates)) <= 1e-9 * np.max(np.abs(a.rx_estimates))


def test_direct_correlator_by_brute_force(rng):
    K, L, M, N = 2, 3, 2, 8
    h = rng.standard_normal((K, L, M)) + 1j * rng.standard_normal((K, L, M))
    r = rng.standard_normal((N + L - 1, M)) + 1j * rng.standard_normal((N + L - 1, M))
    out = ll.trmrc_direct(h, r, N)
    for k in range(K):
        for t in range(N):
            ref = sum(np.vdot(h[k, l], r[t + l]) for l in range(L)) / M
            assert out[k, t] == pytest.approx(ref, abs=1e-13)


def test_single_tap_trmrc_equals_fdmrc_flat():
    ch, rng = one_bs_channel(3, 2, 5, 16, 1, 9)
    csi = ll.perfect_csi(ch)
    data = ll.draw_data(rng, (3, 2, 16))
    td = ll.detect_trmrc(csi, ch, data, 0.5, 0.0, rng)
    fd = ll.detect_fdmrc(csi, ch, data[..., None], 0.5, 0.0, rng)
    np.testing.assert_allclose(td.rx_estimates, fd.rx_estimates, atol=1e-12)


def test_frame_shorter_than_channel_rejected():
    ch, rng = one_bs_channel(1, 1, 2, 8, 8, 10)
    with pytest.raises(ValueError):
        ll.detect_trmrc(ll.perfect_csi(ch), ch, np.zeros((1, 1, 4), complex), 1.0, 0.0, rng)


def test_unknown_method_rejected():
    ch, rng = one_bs_channel(1, 1, 2, 8, 2, 10)
    with pytest.raises(ValueError):
        ll.detect_trmrc(ll.perfect_csi(ch), ch, np.zeros((1, 1, 8), complex), 1.0, 0.0, rng, method="fft")


def _noiseless_self_interference(M, frames, seed):
    ls = hand_map([[[1.0]]])
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(frames):
        ch = gen_channel(ls, M, 64, 8, rng, bs=(0,))
        runs.append(ll.detect_trmrc(ll.perfect_csi(ch), ch, ll.draw_data(rng, (1, 1, 64)), 1.0, 0.0, rng))
    return ll.measure_sinr(ll.DetectionRun.concat(runs))[0]


def test_self_interference_scales_with_m():
    # closed form for C = K = 1, perfect CSI, no noise: SINR = M
    s64 = _noiseless_self_interference(64, 300, 11)
    s256 = _noiseless_self_interference(256, 300, 12)
    assert s64 / 64 == pytest.approx(1.0, rel=0.1)
    assert s256 / 256 == pytest.approx(1.0, rel=0.1)
    assert s256 / s64 == pytest.approx(4.0, rel=0.15)


# --- metrics and power accounting ---------------------------------------------

def _run(tx, rx, scheme=Scheme.FD):
    return ll.DetectionRun(scheme, tx, rx, 1.0)


def test_measure_sinr_definitions(rng):
    x = ll.draw_data(rng, (2, 100_000))
    assert np.all(ll.measure_sinr(_run(x, 3.0 * x)) == SINR_CAP)
    s = ll.measure_sinr(_run(x, x + ll.draw_data(rng, x.shape)))
    np.testing.assert_allclose(s, 1.0, rtol=0.03)
    with pytest.raises(ll.StatisticalInsufficiencyError):
        ll.measure_sinr(_run(x[:, :99], x[:, :99]))


def test_unit_power_constellation(rng):
    x = ll.draw_data(rng, 200_000)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.01)


def test_transmit_power_accounting():
    ch, rng = one_bs_channel(7, 4, 4, 64, 8, 13)
    gamma, rho_u = 64 / 71, 0.2
    fd = [ll.detect_fdmrc(ll.perfect_csi(ch), ch, ll.draw_data(rng, (7, 4, 64, 8)), gamma * rho_u, 0.1, rng,
                          genie=False) for _ in range(10)]
    td = [ll.detect_trmrc(ll.perfect_csi(ch), ch, ll.draw_data(rng, (7, 4, 64)), rho_u, 0.1, rng, genie=False)
          for _ in range(60)]
    assert ll.DetectionRun.concat(fd).tx_power == pytest.approx(gamma * rho_u, rel=0.02)
    assert ll.DetectionRun.concat(td).tx_power == pytest.approx(rho_u, rel=0.02)


def test_genie_sinr_matches_measured_when_channel_is_fixed():
    # with one channel held fixed, the sample SINR estimates the conditional (genie) SINR
    ch, rng = one_bs_channel(3, 2, 16, 64, 4, 14)
    csi = ll.train_td(ch, 0.2, 0.05, rng)
    runs = [ll.detect_trmrc(csi, ch, ll.draw_data(rng, (3, 2, 64)), 0.2, 0.05, rng) for _ in range(400)]
    run = ll.DetectionRun.concat(runs)
    np.testing.assert_allclose(ll.measure_sinr(run), run.inst_sinr[:, 0], rtol=0.05)
    csi = ll.train_fd(ch, build_pilot_book(2, 64, 4, K=2), 0.2, 0.05, rng)
    runs = [ll.detect_fdmrc(csi, ch, ll.draw_data(rng, (3, 2, 64, 1)), 0.2, 0.05, rng) for _ in range(400)]
    run = ll.DetectionRun.concat(runs)
    # per subcarrier: pick subcarrier 5 of every frame
    sel = ll.DetectionRun(Scheme.FD, run.tx_symbols[:, 5::64], run.rx_estimates[:, 5::64], 0.2)
    np.testing.assert_allclose(ll.measure_sinr(sel), run.inst_sinr[:, 5], rtol=0.2)


def test_simulated_rate_requires_genie(rng):
    x = ll.draw_data(rng, (1, 200))
    with pytest.raises(ValueError):
        ll.simulated_rate(_run(x, x))
