"""Flop-count models and an instrumented arithmetic counter.

Conventions: real add or multiply = 1 flop, complex add = 2, complex
multiply = 6, an N-point radix-2 FFT = 5 N log2 N.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

from .config import ConfigError, is_power_of_two


def _log2_exact(n: int, what: str) -> int:
    if not is_power_of_two(n):
        raise ConfigError(f"{what}={n} must be a power of two")
    return n.bit_length() - 1


def flops_fdmrc(M: int, K: int, N: int) -> int:
    """FDMRC per OFDM frame of N symbols: user IFFTs, antenna FFTs, N*K inner products."""
    lg = _log2_exact(N, "N")
    fft = 5 * N * lg
    return K * fft + M * fft + N * K * (8 * M - 2)


def flops_trmrc(M: int, K: int, N: int, L: int) -> int:
    """TRMRC with overlap-add fast convolution per block of N symbols."""
    lg = _log2_exact(2 * L, "2L")
    return K * (M * (N + L) * (10 * lg + 14) + 2 * N * (M - 1)) + M * (N + L) * 10 * lg


def flops_trmrc_itemized(M: int, K: int, N: int, L: int) -> int:
    """Same count built stage by stage with mu = (N+L)/L blocks of 2L-point FFTs.

    Requires L | N so that mu is an integer; the result is then identical to
    :func:`flops_trmrc` (the 12L multiply and 2L overlap terms make the +14).
    """
    lg = _log2_exact(2 * L, "2L")
    if N % L:
        raise ConfigError(f"L={L} must divide N={N}")
    mu = (N + L) // L
    antenna_ffts = M * mu * 10 * L * lg
    per_user = K * M * mu * (10 * L * lg + 12 * L + 2 * L)
    combine = K * 2 * N * (M - 1)
    return antenna_ffts + per_user + combine


def flops_channel_estimation(M: int, K: int, tau: int) -> int:
    """Correlating the M x tau pilot observation with each user's sequence."""
    if tau < 1:
        raise ConfigError("tau must be >= 1")
    return M * K * (8 * tau - 2)


def flops_dl_precoding(M: int, K: int) -> tuple[int, int]:
    """(per DL symbol vector, per coherence block) flops of MRT precoding."""
    if M < 1 or K < 1:
        raise ConfigError("M and K must be >= 1")
    return M * (8 * K - 2), K * (14 * M - 2)


@dataclass(frozen=True)
class FlopCount:
    fdmrc_ul: int
    trmrc_ul: int
    ce: int
    dl_precode_per_symbol: int
    dl_precoder_setup: int


def flop_count(M: int, K: int, N: int, L: int, tau: int | None = None) -> FlopCount:
    per_symbol, setup = flops_dl_precoding(M, K)
    return FlopCount(
        fdmrc_ul=flops_fdmrc(M, K, N),
        trmrc_ul=flops_trmrc(M, K, N, L),
        ce=flops_channel_estimation(M, K, K if tau is None else tau),
        dl_precode_per_symbol=per_symbol,
        dl_precoder_setup=setup,
    )


# --- instrumented arithmetic -------------------------------------------------

@dataclass
class FlopCounter:
    total: int = 0
    stages: dict = field(default_factory=dict)
    _stage: str = "unlabelled"

    def add(self, n: int) -> None:
        self.total += n
        self.stages[self._stage] = self.stages.get(self._stage, 0) + n

    def stage(self, name: str) -> "FlopCounter":
        self._stage = name
        return self


def _is_complex(v) -> bool:
    return isinstance(v, complex)


class Counted:
    """Scalar wrapper that charges every arithmetic operation to a counter.

    Operands that are plain Python numbers are constants (twiddles, folded
    normalisations) and are charged like any other operand.
    """

    __slots__ = ("v", "ctr")

    def __init__(self, v, ctr: FlopCounter):
        self.v = v
        self.ctr = ctr

    @staticmethod
    def _raw(o):
        return o.v if isinstance(o, Counted) else o

    def __add__(self, o):
        ov = self._raw(o)
        self.ctr.add(2 if (_is_complex(self.v) or _is_complex(ov)) else 1)
        return Counted(self.v + ov, self.ctr)

    __radd__ = __add__

    def __sub__(self, o):
        ov = self._raw(o)
        self.ctr.add(2 if (_is_complex(self.v) or _is_complex(ov)) else 1)
        return Counted(self.v - ov, self.ctr)

    def __mul__(self, o):
        ov = self._raw(o)
        c1, c2 = _is_complex(self.v), _is_complex(ov)
        self.ctr.add(6 if (c1 and c2) else 2 if (c1 or c2) else 1)
        return Counted(self.v * ov, self.ctr)

    __rmul__ = __mul__

    def conjugate(self):
        # sign flip of the imaginary part is free in this model
        return Counted(self.v.conjugate() if _is_complex(self.v) else self.v, self.ctr)

    def __repr__(self):
        return f"Counted({self.v!r})"


def wrap(values, ctr: FlopCounter) -> list:
    return [Counted(complex(v), ctr) for v in values]


def unwrap(values) -> list:
    return [v.v if isinstance(v, Counted) else v for v in values]


def fft_radix2(x: list, inverse: bool = False) -> list:
    """Iterative decimation-in-time FFT, unnormalised in both directions.

    Every butterfly is one twiddle multiply and two adds, (N/2) log2 N
    butterflies in total, i.e. exactly 5 N log2 N flops on Counted input.
    """
    n = len(x)
    lg = _log2_exact(n, "FFT size")
    # bit-reversal permutation (index shuffling, no arithmetic)
    a = [x[int(format(i, f"0{lg}b")[::-1], 2)] if lg else x[i] for i in range(n)]
    sign = 1 if inverse else -1
    size = 2
    while size <= n:
        half = size // 2
        tw = [cmath.exp(sign * 2j * cmath.pi * k / size) for k in range(half)]
        for start in range(0, n, size):
            for k in range(half):
                t = a[start + k + half] * tw[k]
                u = a[start + k]
                a[start + k] = u + t
                a[start + k + half] = u - t
        size *= 2
    return a


def instrument_count(run, stages=None) -> int:
    """Total flops charged while a detection run executed on Counted numbers.

    ``stages`` restricts the sum to the named pipeline stages.
    """
    tally = getattr(run, "flops", None)
    if tally is None:
        raise ValueError("run was not executed with flop counting enabled")
    if stages is None:
        return tally.total
    return sum(tally.stages.get(s, 0) for s in stages)
