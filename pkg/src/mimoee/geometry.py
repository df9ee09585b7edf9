"""Hexagonal multicell layout, user drops and large-scale fading."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, SystemConfig

SQRT3 = np.sqrt(3.0)
MAX_REDRAW_ROUNDS = 1000


class DropError(RuntimeError):
    """Rejection sampling did not converge."""


@dataclass(frozen=True)
class CellLayout:
    cell_count: int
    cell_radius: float
    min_distance: float
    bs_positions: np.ndarray  # (C, 2), centre BS first


@dataclass(frozen=True)
class LargeScaleMap:
    """Large-scale coefficients of one spatial drop.

    ``beta[i, k, j]`` is the gain from user ``k`` of cell ``j`` to BS ``i``.
    ``alpha_sq[i, k] = sum_c beta[i, k, c] + noise/rho_p``.
    """

    beta: np.ndarray
    alpha_sq: np.ndarray
    user_positions: np.ndarray  # (C, K, 2)
    noise_over_rho_p: float

    @property
    def C(self) -> int:
        return self.beta.shape[0]

    @property
    def K(self) -> int:
        return self.beta.shape[1]


def build_layout(config: SystemConfig) -> CellLayout:
    """Centre cell plus (for C=7) one ring of six neighbours at sqrt(3)*r_cell."""
    if config.C not in (1, 7):
        raise ConfigError(f"only C=1 or C=7 cells are supported, got C={config.C}")
    if not config.r_cell > config.d_min > 0:
        raise ConfigError("need r_cell > d_min > 0")
    pos = [(0.0, 0.0)]
    if config.C == 7:
        ang = np.pi / 6 + np.arange(6) * np.pi / 3
        d = SQRT3 * config.r_cell
        pos += list(zip(d * np.cos(ang), d * np.sin(ang)))
    return CellLayout(config.C, float(config.r_cell), float(config.d_min), np.array(pos))


def pathloss(distance, shadow_db, config: SystemConfig):
    """Linear gain ``G0 * (d / d_ref)^-lambda * 10^(shadow/10)``."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance < config.d_min):
        raise ValueError(f"distance below d_min={config.d_min} m")
    return (config.pathloss_intercept
            * (distance / config.pathloss_ref_m) ** (-config.pathloss_exponent)
            * 10.0 ** (np.asarray(shadow_db, dtype=float) / 10.0))


def in_hexagon(xy: np.ndarray, radius: float) -> np.ndarray:
    # vertices at 0, 60, ... degrees; flat sides face the neighbours
    ax, ay = np.abs(xy[..., 0]), np.abs(xy[..., 1])
    return (ay <= SQRT3 / 2 * radius) & (SQRT3 * ax + ay <= SQRT3 * radius)


def sample_positions(rng: np.random.Generator, n: int, radius: float, d_min: float) -> np.ndarray:
    """Uniform points in the hexagon of circumradius `radius` minus the d_min disc."""
    out = np.empty((n, 2))
    filled = 0
    for _ in range(MAX_REDRAW_ROUNDS):
        m = max(2 * (n - filled), 8)
        xy = rng.uniform(-radius, radius, size=(m, 2))
        ok = in_hexagon(xy, radius) & (np.hypot(xy[:, 0], xy[:, 1]) >= d_min)
        xy = xy[ok][: n - filled]
        out[filled: filled + len(xy)] = xy
        filled += len(xy)
        if filled == n:
            return out
    raise DropError(f"could not place {n} points after {MAX_REDRAW_ROUNDS} rounds")


def drop_users(layout: CellLayout, K: int, rng_seed, config: SystemConfig) -> LargeScaleMap:
    """Drop K users per cell and compute the beta tensor.

    A user belongs to the cell it was drawn in only if that BS has the
    strongest large-scale coefficient; otherwise position and shadowing are
    redrawn, so every cell keeps exactly K users.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    C = layout.cell_count
    bs = layout.bs_positions
    r, d_min = layout.cell_radius, layout.min_distance
    sigma = config.shadowing_std_db

    beta = np.empty((C, K, C))            # [bs, user, cell]
    pos = np.empty((C, K, 2))
    home = np.repeat(np.arange(C), K)      # cell of each pending user slot
    slot = np.tile(np.arange(K), C)
    for _ in range(MAX_REDRAW_ROUNDS):
        n = home.size
        xy = sample_positions(rng, n, r, d_min) + bs[home]
        dist = np.linalg.norm(xy[:, None, :] - bs[None, :, :], axis=2)
        shadow = rng.normal(0.0, sigma, size=(n, C)) if sigma > 0 else np.zeros((n, C))
        # distances to foreign BSs are > r*(sqrt(3)-1) > d_min for C=7, so no clamp is needed
        b = (config.pathloss_intercept
             * (dist / config.pathloss_ref_m) ** (-config.pathloss_exponent)
             * 10.0 ** (shadow / 10.0))
        ok = b.argmax(axis=1) == home
        beta[:, slot[ok], home[ok]] = b[ok].T
        pos[home[ok], slot[ok]] = xy[ok]
        home, slot = home[~ok], slot[~ok]
        if home.size == 0:
            break
    else:
        raise DropError(f"{home.size} users still unassociated after {MAX_REDRAW_ROUNDS} redraw rounds")

    nrp = config.noise_power_w / config.rho_p
    alpha_sq = beta.sum(axis=2) + nrp
    return LargeScaleMap(beta=beta, alpha_sq=alpha_sq, user_positions=pos, noise_over_rho_p=nrp)


def drop_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent substream for one drop, addressed by (seed, *key)."""
    return np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
