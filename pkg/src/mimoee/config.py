"""System and power-model parameters.

All fields are stored in linear SI units (W, Hz, s, m, flops/W, W per bit/s).
Unit conversions from the human-facing config file happen in :mod:`mimoee.cli`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """Physical layer and scenario parameters (defaults: 500 m scenario)."""

    M: int = 100
    K: int = 22
    C: int = 7
    N: int = 256
    L: int = 16
    tau: int | None = None  # None -> one pilot per served user (tau = K)

    r_cell: float = 500.0
    d_min: float = 50.0
    pathloss_exponent: float = 3.8
    shadowing_std_db: float = 8.0
    # The path-loss intercept is fixed so that an unshadowed user at
    # `pathloss_ref_m` sees `ref_snr_db` with power rho_u. It is NOT re-anchored
    # when r_cell changes, so smaller cells see higher SNR.
    pathloss_ref_m: float = 500.0
    ref_snr_db: float = 0.0

    noise_power_w: float = field(default_factory=lambda: dbm_to_watt(-96.0))
    rho_u: float = 0.2
    rho_p: float = 0.2
    dl_radiated_power_w: float = 2.0

    bandwidth_hz: float = 20e6
    coherence_bandwidth_hz: float = 100e3
    coherence_time_s: float = 2e-3
    xi_u: float = 0.4
    xi_d: float = 0.6

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("M", "K", "C", "N", "L"):
            v = getattr(self, name)
            if not isinstance(v, (int,)) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.tau is not None and self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if not (self.r_cell > self.d_min > 0):
            raise ConfigError(f"need r_cell > d_min > 0, got r_cell={self.r_cell}, d_min={self.d_min}")
        for name in ("noise_power_w", "rho_u", "rho_p", "dl_radiated_power_w", "bandwidth_hz",
                     "coherence_bandwidth_hz", "coherence_time_s", "pathloss_ref_m",
                     "pathloss_exponent"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.shadowing_std_db < 0:
            raise ConfigError("shadowing_std_db must be non-negative")
        for name in ("xi_u", "xi_d"):
            if not 0 < getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in (0, 1]")
        if self.N % self.L:
            raise ConfigError(f"L={self.L} must divide N={self.N}")
        if self.K > self.K_max:
            raise ConfigError(f"K={self.K} exceeds K_max = tau*N_sm = {self.K_max}")

    @property
    def S(self) -> int:
        """Coherence block length in symbols, T_c * W_c."""
        return int(round(self.coherence_time_s * self.coherence_bandwidth_hz))

    @property
    def pilot_len(self) -> int:
        return self.K if self.tau is None else self.tau

    @property
    def N_sm(self) -> int:
        return self.N // self.L

    @property
    def K_max(self) -> int:
        return self.pilot_len * self.N_sm

    @property
    def n_cp(self) -> int:
        return self.L - 1

    @property
    def gamma(self) -> float:
        """Fraction of transmit energy left for data after the cyclic prefix."""
        return self.N / (self.N + self.n_cp)

    @property
    def pathloss_intercept(self) -> float:
        """Linear gain at the reference distance, sigma^2/rho_u scaled by the reference SNR."""
        return 10.0 ** (self.ref_snr_db / 10.0) * self.noise_power_w / self.rho_u

    @property
    def rho_d(self) -> float:
        """Per-user DL power back-solved from the fixed total radiated DL power."""
        return rho_d_for(self, self.K)

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


def rho_d_for(config: SystemConfig, K) -> float:
    overhead = 1.0 - K / config.S
    return config.dl_radiated_power_w / (K * config.xi_d * overhead)


@dataclass(frozen=True)
class PowerModelConfig:
    """Power amplifier efficiencies and circuit power parameters."""

    eta_ul_fd: float = 0.30
    eta_ul_td: float = 0.50
    eta_dl: float = 0.39
    P_fix: float = 18.0
    P_syn: float = 2.0
    P_bs: float = 1.0
    P_mt: float = 0.10
    P_cod: float = 0.10e-9   # W per bit/s
    P_dec: float = 0.80e-9
    P_bt: float = 0.25e-9
    L_bs: float = 12.8e9     # flops per W
    L_mt: float = 5.0e9
    ce_scale: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("eta_ul_fd", "eta_ul_td", "eta_dl"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0 < v <= 1):
                raise ConfigError(f"{name} must lie in (0, 1], got {v!r}")
        for name in ("P_fix", "P_syn", "P_bs", "P_mt", "P_cod", "P_dec", "P_bt"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a non-negative power, got {v!r}")
        for name in ("L_bs", "L_mt", "ce_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")

    @property
    def L_bs_eff(self) -> float:
        return self.L_bs * self.ce_scale

    @property
    def L_mt_eff(self) -> float:
        return self.L_mt * self.ce_scale

    def with_(self, **changes) -> "PowerModelConfig":
        return replace(self, **changes)
