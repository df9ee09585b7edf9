"""Sample-level uplink training and MRC detection for both waveforms.

Only the receiving BS ``channel.bs[0]`` is simulated. Users are indexed
``u = j*K + k`` (cell-major) when flattened; cell 0 is the scored cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import complexity as cx
from .analytic import SINR_CAP, Scheme
from .channel import ChannelRealization, PilotBook, cir_to_fd, cn, fd_to_cir, pilot_index

MIN_SLOTS = 100


class StatisticalInsufficiencyError(ValueError):
    """Too few symbol slots to estimate an SINR."""


@dataclass(frozen=True)
class EstimatedCsi:
    """Channel estimates of the scored cell's K users at one BS.

    fd_hat: (K, N, M) or None; cir_hat: (K, L, M) or None.
    pilot_energy: energy each user radiated during training.
    """

    fd_hat: np.ndarray | None
    cir_hat: np.ndarray | None
    pilot_energy: np.ndarray


@dataclass
class DetectionRun:
    scheme: Scheme
    tx_symbols: np.ndarray    # (K, slots) scored users' data
    rx_estimates: np.ndarray  # (K, slots)
    tx_power: float           # mean radiated energy per data symbol over every active user
    inst_sinr: np.ndarray | None = None  # (K, slots) genie SINR given the channel
    flops: cx.FlopCounter | None = None

    @property
    def slots(self) -> int:
        return self.tx_symbols.shape[1]

    @staticmethod
    def concat(runs: list["DetectionRun"]) -> "DetectionRun":
        inst = None if any(r.inst_sinr is None for r in runs) else np.concatenate([r.inst_sinr for r in runs], 1)
        w = np.array([r.slots for r in runs], dtype=float)
        return DetectionRun(
            scheme=runs[0].scheme,
            tx_symbols=np.concatenate([r.tx_symbols for r in runs], axis=1),
            rx_estimates=np.concatenate([r.rx_estimates for r in runs], axis=1),
            tx_power=float(np.dot(w, [r.tx_power for r in runs]) / w.sum()),
            inst_sinr=inst,
        )


def draw_data(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-power circular Gaussian symbols."""
    return cn(rng, shape)


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _taps_by_user(h: np.ndarray) -> np.ndarray:
    """(K, C, L, M) taps -> (L, C*K, M) with cell-major user rows."""
    K, C, L, M = h.shape
    return np.ascontiguousarray(h.transpose(2, 1, 0, 3).reshape(L, C * K, M))


# --- training ----------------------------------------------------------------

def train_fd(channel: ChannelRealization, pilots: PilotBook, rho_p: float, noise_var: float, rng,
             bs_index: int = 0) -> EstimatedCsi:
    """Comb pilots with orthogonal sequences, correlation, then DFT interpolation."""
    rng = _rng(rng)
    g = channel.fd[bs_index]                        # (K, C, N, M)
    K, C, N, M = g.shape
    L = channel.L
    N_sm = N // L
    tau = pilots.tau
    g_hat_pilot = np.empty((K, L, M), dtype=complex)
    for comb in range(N_sm):
        users = np.arange(comb, K, N_sm)
        if users.size == 0:
            continue
        sub = comb + N_sm * np.arange(L)
        psi = pilots.psi[:, [pilot_index(k, pilots) for k in users]]   # (tau, U)
        # Y_n = sqrt(rho_p) sum_j sum_k g_{kjn} psi_k^H + noise, shape (L, M, tau)
        tx = g[users][:, :, sub, :].sum(axis=1)                           # (U, L, M)
        Y = np.sqrt(rho_p) * np.einsum("ulm,tu->lmt", tx, psi.conj())
        Y = Y + cn(rng, Y.shape, noise_var)
        g_hat_pilot[users] = np.einsum("lmt,tu->ulm", Y, psi) / np.sqrt(rho_p)
    cir_hat = np.stack([fd_to_cir(g_hat_pilot[k], user_index=k, N=N) for k in range(K)])
    fd_hat = cir_to_fd(cir_hat, N)
    energy = np.full(K, rho_p * L)   # unit-norm sequence on each of L pilot subcarriers
    return EstimatedCsi(fd_hat=fd_hat, cir_hat=cir_hat, pilot_energy=energy)


def train_td(channel: ChannelRealization, rho_p: float, noise_var: float, rng,
             bs_index: int = 0) -> EstimatedCsi:
    """Staggered impulses of amplitude sqrt(L rho_p): user k fires at channel use k*L.

    Co-indexed users of every cell fire together, which is where the pilot
    contamination comes from.
    """
    rng = _rng(rng)
    h = channel.cir[bs_index]                       # (K, C, L, M)
    K, C, L, M = h.shape
    amp = np.sqrt(L * rho_p)
    T = K * L + L - 1
    impulses = np.zeros((C, K, T), dtype=complex)
    impulses[:, np.arange(K), np.arange(K) * L] = amp
    # r_p[t] = sum_{j,k} sum_l h_{kjl} x_{kj}[t-l] + n[t]
    hu = _taps_by_user(h)
    r = np.zeros((T, M), dtype=complex)
    for l in range(L):
        x = impulses.reshape(C * K, T)[:, : T - l]  # x[t - l]
        r[l:] += x.T @ hu[l]
    r += cn(rng, r.shape, noise_var)
    cir_hat = np.stack([r[k * L: k * L + L] for k in range(K)]) / amp
    energy = np.sum(np.abs(impulses[0]) ** 2, axis=1)
    return EstimatedCsi(fd_hat=cir_to_fd(cir_hat, channel.N), cir_hat=cir_hat, pilot_energy=energy)


def perfect_csi(channel: ChannelRealization, bs_index: int = 0) -> EstimatedCsi:
    """Genie estimates of the scored cell's own channels (no contamination, no noise)."""
    h = channel.cir[bs_index][:, 0]
    return EstimatedCsi(fd_hat=channel.fd[bs_index][:, 0], cir_hat=h,
                        pilot_energy=np.zeros(h.shape[0]))


# --- FDMRC -------------------------------------------------------------------

def detect_fdmrc(csi: EstimatedCsi, channel: ChannelRealization, data: np.ndarray, rho_u_eff: float,
                 noise_var: float, rng, bs_index: int = 0, genie: bool = True,
                 count: bool = False) -> DetectionRun:
    """x_hat_{kn} = (1/M) g_hat_{kn}^H y_n on every subcarrier.

    data: (C, K, N, S) unit-power symbols for S OFDM symbols. With
    ``count=True`` the receiver runs the full OFDM chain (user IFFTs,
    antenna FFTs, inner products) on Counted numbers.
    """
    rng = _rng(rng)
    g = channel.fd[bs_index]                        # (K, C, N, M)
    K, C, N, M = g.shape
    S = data.shape[3]
    if count:
        return _fdmrc_counted(csi, channel, data, rho_u_eff, noise_var, rng, bs_index)
    G = g.transpose(2, 3, 1, 0).reshape(N, M, C * K)          # (N, M, U) cell-major users
    X = data.reshape(C * K, N, S).transpose(1, 0, 2)          # (N, U, S)
    y = np.sqrt(rho_u_eff) * (G @ X) + cn(rng, (N, M, S), noise_var)
    W = csi.fd_hat.transpose(1, 0, 2).conj() / M              # (N, K, M)
    xhat = (W @ y).transpose(1, 0, 2).reshape(K, N * S)       # (K, N*S)
    tx = data[0].reshape(K, N * S)
    inst = None
    if genie:
        A = W @ G                                             # (N, K, U): w_k^H g_u
        p = rho_u_eff * np.abs(A) ** 2
        own = p[:, np.arange(K), np.arange(K)]                # cell 0 user k is u = k
        noise = noise_var * np.sum(np.abs(W) ** 2, axis=2)
        sinr_n = _capped_ratio(own, p.sum(axis=2) - own + noise)   # (N, K)
        inst = np.repeat(sinr_n.T[:, :, None], S, axis=2).reshape(K, N * S)
    return DetectionRun(Scheme.FD, tx, xhat, rho_u_eff * float(np.mean(np.abs(data) ** 2)), inst)


def _fdmrc_counted(csi, channel, data, rho_u_eff, noise_var, rng, bs_index):
    ctr = cx.FlopCounter()
    g = channel.fd[bs_index]
    K, C, N, M = g.shape
    h = channel.cir[bs_index]                                 # (K, C, L, M)
    L = h.shape[2]
    S = data.shape[3]
    xhat = np.empty((K, N, S), dtype=complex)
    # combining weights absorb 1/M and the 1/N of the unnormalised FFT pair
    W = csi.fd_hat.conj() / (M * N)                           # (K, N, M)
    for s in range(S):
        # users' OFDM modulators: scored cell counted, other cells are not ours
        ctr.stage("ue_ifft")
        x_time = np.empty((C, K, N), dtype=complex)
        for k in range(K):
            x_time[0, k] = cx.unwrap(cx.fft_radix2(cx.wrap(data[0, k, :, s], ctr), inverse=True))
        x_time[1:] = np.fft.ifft(data[1:, :, :, s], axis=-1) * N
        # channel with cyclic prefix == circular convolution (physical, not counted)
        y_time = np.zeros((M, N), dtype=complex)
        for j in range(C):
            for k in range(K):
                for l in range(L):
                    y_time += np.outer(h[k, j, l], np.roll(x_time[j, k], l))
        y_time = np.sqrt(rho_u_eff) * y_time + cn(rng, (M, N), noise_var * N)
        ctr.stage("bs_fft")
        Y = [cx.fft_radix2(cx.wrap(y_time[m], ctr)) for m in range(M)]
        ctr.stage("inner_products")
        for n in range(N):
            for k in range(K):
                acc = Y[0][n] * complex(W[k, n, 0])
                for m in range(1, M):
                    acc = acc + Y[m][n] * complex(W[k, n, m])
                xhat[k, n, s] = acc.v
    run = DetectionRun(Scheme.FD, data[0].reshape(K, N * S), xhat.reshape(K, N * S),
                       rho_u_eff * float(np.mean(np.abs(data) ** 2)), None, ctr)
    return run


# --- TRMRC -------------------------------------------------------------------

def sc_stream(data: np.ndarray, L: int, rng, guard: tuple | None = None) -> np.ndarray:
    """Frame symbols framed by the previous frame's tail and the next frame's head.

    Returns (C, K, N + 2(L-1)) with frame symbol t at index t + L - 1.
    """
    C, K, N = data.shape
    if guard is None:
        guard = (draw_data(rng, (C, K, L - 1)), draw_data(rng, (C, K, L - 1)))
    return np.concatenate([guard[0], data, guard[1]], axis=2)


def sc_receive(channel: ChannelRealization, stream: np.ndarray, rho_u: float, noise_var: float, rng,
               bs_index: int = 0) -> np.ndarray:
    """r[t] = sqrt(rho_u) sum_{j,k,l} h_{kjl} s_{kj}[t-l] + n[t] for t = 0..N+L-2."""
    h = channel.cir[bs_index]                       # (K, C, L, M)
    K, C, L, M = h.shape
    N = stream.shape[2] - 2 * (L - 1)
    T = N + L - 1
    hu = _taps_by_user(h)
    flat = stream.reshape(C * K, -1)
    r = np.zeros((T, M), dtype=complex)
    for l in range(L):
        r += flat[:, L - 1 - l: L - 1 - l + T].T @ hu[l]   # s[t - l], t = 0..T-1
    return np.sqrt(rho_u) * r + cn(rng, (T, M), noise_var)


def trmrc_direct(cir_hat: np.ndarray, r: np.ndarray, N: int) -> np.ndarray:
    """s_hat_k[t] = (1/M) sum_l h_hat_{kl}^H r[t+l], t = 0..N-1."""
    K, L, M = cir_hat.shape
    out = np.zeros((K, N), dtype=complex)
    for l in range(L):
        out += cir_hat[:, l, :].conj() @ r[l: l + N].T
    return out / M


def trmrc_overlap_add(cir_hat: np.ndarray, r: np.ndarray, N: int) -> np.ndarray:
    """Same correlator as fast convolution: 2L-point FFT blocks, overlap-add, antenna sum."""
    K, L, M = cir_hat.shape
    T = r.shape[0]
    mu = -(-T // L)
    blocks = np.zeros((mu, 2 * L, M), dtype=complex)
    blocks[:, :L] = np.pad(r, ((0, mu * L - T), (0, 0))).reshape(mu, L, M)
    X = np.fft.fft(blocks, axis=1)                              # per antenna, shared by users
    f = cir_hat[:, ::-1, :].conj()                              # time-reversed conjugate taps
    F = np.fft.fft(f, n=2 * L, axis=1)                          # (K, 2L, M)
    Y = np.fft.ifft(X[:, None] * F[None], axis=2)               # (mu, K, 2L, M)
    acc = np.zeros((K, (mu + 1) * L, M), dtype=complex)
    for b in range(mu):
        acc[:, b * L: b * L + 2 * L] += Y[b]
    return acc[:, L - 1: L - 1 + N].sum(axis=2) / M


def trmrc_overlap_add_counted(cir_hat: np.ndarray, r: np.ndarray, N: int, ctr: cx.FlopCounter) -> np.ndarray:
    """Overlap-add TRMRC on Counted numbers (small sizes only)."""
    K, L, M = cir_hat.shape
    T = r.shape[0]
    mu = -(-T // L)
    rp = np.pad(r, ((0, mu * L - T), (0, 0)))
    # filter spectra with the 1/(2L) IFFT and 1/M scalings folded in: CSI prep, not counted
    F = np.fft.fft(cir_hat[:, ::-1, :].conj(), n=2 * L, axis=1) / (2 * L * M)
    ctr.stage("antenna_ffts")
    X = [[cx.fft_radix2(cx.wrap(np.r_[rp[b * L:(b + 1) * L, m], np.zeros(L)], ctr)) for b in range(mu)]
         for m in range(M)]
    out = np.empty((K, N), dtype=complex)
    for k in range(K):
        per_antenna = []
        for m in range(M):
            acc = [None] * ((mu + 1) * L)
            for b in range(mu):
                ctr.stage("filter_multiply")
                prod = [X[m][b][q] * complex(F[k, q, m]) for q in range(2 * L)]
                ctr.stage("block_iffts")
                yb = cx.fft_radix2(prod, inverse=True)
                ctr.stage("overlap_add")
                for q in range(L):          # overlapping half
                    i = b * L + q
                    acc[i] = yb[q] + acc[i] if acc[i] is not None else yb[q] + 0j
                for q in range(L, 2 * L):   # fresh half
                    acc[b * L + q] = yb[q]
            per_antenna.append(acc[L - 1: L - 1 + N])
        ctr.stage("antenna_combine")
        for t in range(N):
            s = per_antenna[0][t]
            for m in range(1, M):
                s = s + per_antenna[m][t]
            out[k, t] = s.v
    return out


def detect_trmrc(csi: EstimatedCsi, channel: ChannelRealization, data: np.ndarray, rho_u: float,
                 noise_var: float, rng, bs_index: int = 0, method: str = "overlap_add",
                 guard: tuple | None = None, genie: bool = True, count: bool = False) -> DetectionRun:
    """Time-reversal MRC on a CP-free single-carrier frame.

    data: (C, K, N) unit-power symbols of the current frame. Neighbouring
    frames' symbols (``guard``, drawn if omitted) leak into the frame edges.
    """
    rng = _rng(rng)
    C, K, N = data.shape
    L = channel.L
    if N < L:
        raise ValueError(f"frame of {N} symbols is shorter than the channel (L={L})")
    stream = sc_stream(data, L, rng, guard)
    r = sc_receive(channel, stream, rho_u, noise_var, rng, bs_index)
    ctr = None
    if count:
        ctr = cx.FlopCounter()
        shat = trmrc_overlap_add_counted(csi.cir_hat, r, N, ctr)
    elif method == "direct":
        shat = trmrc_direct(csi.cir_hat, r, N)
    elif method == "overlap_add":
        shat = trmrc_overlap_add(csi.cir_hat, r, N)
    else:
        raise ValueError(f"unknown TRMRC method {method!r}")
    inst = None
    if genie:
        inst = np.repeat(_trmrc_genie_sinr(csi.cir_hat, channel.cir[bs_index], rho_u, noise_var)[:, None], N, 1)
    return DetectionRun(Scheme.TD, data[0], shat, rho_u * float(np.mean(np.abs(stream) ** 2)), inst, ctr)


def _trmrc_genie_sinr(cir_hat: np.ndarray, h: np.ndarray, rho_u: float, noise_var: float) -> np.ndarray:
    """SINR of s_hat_k given the channels: all (user, lag) terms except (k, 0) are interference."""
    K, L, M = cir_hat.shape
    U = h.shape[0] * h.shape[1]
    hu = h.transpose(1, 0, 2, 3).reshape(U, L, M)             # cell-major users
    P = (cir_hat.conj().reshape(K * L, M) @ hu.reshape(U * L, M).T).reshape(K, L, U, L) / M
    P = P.transpose(0, 2, 1, 3)                                # (K, U, l, l')
    total = np.zeros(K)
    own = np.zeros(K)
    for d in range(-(L - 1), L):
        c = np.trace(P, offset=d, axis1=2, axis2=3)            # coefficient of s_u[t - d]
        p = rho_u * np.abs(c) ** 2
        total += p.sum(axis=1)
        if d == 0:
            own = p[np.arange(K), np.arange(K)]
    noise = noise_var * np.sum(np.abs(cir_hat) ** 2, axis=(1, 2)) / M**2
    return _capped_ratio(own, total - own + noise)


def _capped_ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), SINR_CAP)
    return np.minimum(out, SINR_CAP)


# --- metrics -----------------------------------------------------------------

def measure_sinr(run: DetectionRun) -> np.ndarray:
    """Per-user SINR with the gain estimated from the data: a = E[x_hat x*]/E|x|^2."""
    if run.slots < MIN_SLOTS:
        raise StatisticalInsufficiencyError(f"{run.slots} symbol slots < {MIN_SLOTS}")
    x, xh = run.tx_symbols, run.rx_estimates
    px = np.mean(np.abs(x) ** 2, axis=1)
    a = np.mean(xh * x.conj(), axis=1) / px
    err = np.mean(np.abs(xh - a[:, None] * x) ** 2, axis=1)
    sig = np.abs(a) ** 2 * px
    with np.errstate(divide="ignore"):
        sinr = np.where(err > 0, sig / np.where(err > 0, err, 1.0), SINR_CAP)
    return np.minimum(sinr, SINR_CAP)


def simulated_rate(run: DetectionRun) -> np.ndarray:
    """Per-user ergodic rate E[log2(1 + instantaneous SINR)] in bit per channel use."""
    if run.inst_sinr is None:
        raise ValueError("run carries no instantaneous SINR")
    return np.mean(np.log2(1.0 + run.inst_sinr), axis=1)
