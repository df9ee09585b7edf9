"""Small-scale fading (L-tap CIRs and their DFT images) and pilot structures."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError
from .geometry import LargeScaleMap


@dataclass(frozen=True)
class ChannelRealization:
    """One small-scale realization for the receiving BSs in ``bs``.

    cir: (len(bs), K, C, L, M) complex taps h_{ikjt}
    fd:  (len(bs), K, C, N, M) complex g_{ikjn} = sum_t h_t exp(-j 2 pi n t / N)
    """

    cir: np.ndarray
    fd: np.ndarray
    bs: tuple[int, ...]

    @property
    def L(self) -> int:
        return self.cir.shape[3]

    @property
    def N(self) -> int:
        return self.fd.shape[3]

    @property
    def M(self) -> int:
        return self.cir.shape[4]


def cn(rng: np.random.Generator, shape, var=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance `var`."""
    s = np.sqrt(np.asarray(var) / 2.0)
    return s * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def cir_to_fd(cir: np.ndarray, N: int) -> np.ndarray:
    """DFT of the tap axis (-2) onto N subcarriers."""
    return np.fft.fft(cir, n=N, axis=-2)


def gen_channel(ls: LargeScaleMap, M: int, N: int, L: int, rng_seed, bs=None) -> ChannelRealization:
    """Uniform-PDP taps, per-entry variance beta/L, plus their N-point DFT."""
    if L < 1 or N % L:
        raise ConfigError(f"L={L} must be >= 1 and divide N={N}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    bs = tuple(range(ls.C)) if bs is None else tuple(bs)
    beta = ls.beta[list(bs)]                        # (B, K, C)
    var = (beta / L)[..., None, None]
    cir = cn(rng, beta.shape + (L, M), var)
    return ChannelRealization(cir=cir, fd=cir_to_fd(cir, N), bs=bs)


def fd_to_cir(fd_on_pilot_set: np.ndarray, user_index: int = 0, N: int | None = None) -> np.ndarray:
    """Recover L taps from the channel on one user's L pilot subcarriers.

    Computes ``h_t = (1/L) sum_l g_{I(l)} exp(+j 2 pi l t / L)`` over the leading
    axis (pilot subcarriers in comb order); trailing axes are carried along.
    That sum alone returns ``h_t exp(-j 2 pi I(0) t / N)`` for a comb starting
    at I(0) = user_index mod (N/L). Passing N removes this ramp so the taps
    are exact for every comb; without N the plain inverse DFT is returned.
    """
    g = np.asarray(fd_on_pilot_set)
    if g.ndim < 1 or g.shape[0] < 1:
        raise ValueError("need at least one pilot subcarrier")
    L = g.shape[0]
    h = np.fft.ifft(g, axis=0)
    if N is None:
        return h
    if N % L:
        raise ValueError(f"{L} pilot subcarriers do not tile N={N}")
    first = user_index % (N // L)
    if first:
        t = np.arange(L).reshape((L,) + (1,) * (g.ndim - 1))
        h = h * np.exp(2j * np.pi * first * t / N)
    return h


@dataclass(frozen=True)
class PilotBook:
    psi: np.ndarray                 # (tau, tau), column k is user k's sequence
    subcarrier_sets: np.ndarray     # (K, L) pilot subcarrier indices per user
    N_sm: int

    @property
    def tau(self) -> int:
        return self.psi.shape[0]

    @property
    def K_max(self) -> int:
        return self.tau * self.N_sm


def build_pilot_book(tau: int, N: int, L: int, K: int | None = None) -> PilotBook:
    """Unit-norm DFT pilot columns and interleaved combs I_k(0) = k mod N_sm."""
    if tau < 1:
        raise ConfigError("tau must be >= 1")
    if L < 1 or N % L:
        raise ConfigError(f"L={L} must divide N={N}")
    N_sm = N // L
    K = tau if K is None else K
    if K > tau * N_sm:
        raise ConfigError(f"K={K} exceeds K_max = tau*N_sm = {tau * N_sm}")
    n = np.arange(tau)
    psi = np.exp(-2j * np.pi * np.outer(n, n) / tau) / np.sqrt(tau)
    sets = (np.arange(K) % N_sm)[:, None] + N_sm * np.arange(L)[None, :]
    return PilotBook(psi=psi, subcarrier_sets=sets, N_sm=N_sm)


def pilot_index(k: int, book: PilotBook) -> int:
    """Pilot column for user k: users on the same comb get distinct columns."""
    return (k // book.N_sm) % book.tau
