"""
Euler-Maruyama integration of the continuous-time limit of the ZHawkes process:

    dH = beta * [-(1 - n_H) H + n_H (baseline + Z**2)] dt
    dZ = drift(H, Z) dt + gamma * sqrt(baseline + H + Z**2) dW

drift is -omega * Z by default (Z as an exponential moving average of
returns); z_drift = "h" selects -omega * H instead.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numba import njit

from services.errors import ConfigError, NonFiniteStateError
from services.kernels import ZHawkesParams, zumbach_gamma

logger = logging.getLogger(__name__)

MAX_STEPS = 1e9
CHUNK_STEPS = 1 << 20
Z_DRIFTS = {'z': 0, 'h': 1}


@dataclass(frozen=True)
class SdeConfig:
    dt: float
    horizon: float
    seed: int
    record_stride: int = 1
    burn_in_fraction: float = 0.1
    z_drift: str = 'z'

    def validate(self, p: ZHawkesParams) -> None:
        if not self.dt > 0 or not self.horizon > 0:
            raise ConfigError(f"sde_dt and horizon must be > 0 (got {self.dt}, {self.horizon})")
        if self.dt * p.hawkes_decay * (1 - p.hawkes_ratio) >= 1:
            raise ConfigError(
                f"sde_dt={self.dt} violates dt * beta * (1 - n_H) < 1 "
                f"(beta={p.hawkes_decay}, n_H={p.hawkes_ratio})"
            )
        if self.horizon / self.dt > MAX_STEPS:
            raise ConfigError(f"horizon / sde_dt = {self.horizon / self.dt:.3g} exceeds {MAX_STEPS:.0e} steps")
        if self.record_stride < 1:
            raise ConfigError(f"record_stride must be >= 1, got {self.record_stride}")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError(f"burn_in_fraction must lie in [0, 1), got {self.burn_in_fraction}")
        if self.z_drift not in Z_DRIFTS:
            raise ConfigError(f"z_drift must be one of {sorted(Z_DRIFTS)}, got {self.z_drift!r}")


@dataclass(frozen=True, eq=False)
class DiffusionPath:
    t0: float
    dt_recorded: float
    h_values: np.ndarray
    z_values: np.ndarray
    baseline: float

    def __len__(self) -> int:
        return len(self.h_values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_recorded * np.arange(len(self.h_values))

    @property
    def intensity(self) -> np.ndarray:
        return self.baseline + self.h_values + self.z_values ** 2


@njit(cache=True)
def _em_step(h, z, baseline, n_h, beta, omega, gamma, drift_on_h, dt, noise):
    lam = baseline + h + z * z
    h_next = h + beta * (-(1.0 - n_h) * h + n_h * (baseline + z * z)) * dt
    if h_next < 0.0:
        h_next = 0.0
    drift = -omega * h if drift_on_h else -omega * z
    z_next = z + drift * dt + gamma * math.sqrt(lam) * math.sqrt(dt) * noise
    return h_next, z_next


def em_step(h: float, z: float, p: ZHawkesParams, dt: float, noise: float,
            z_drift: str = 'z') -> Tuple[float, float]:
    """One Euler-Maruyama step; H is clamped at zero from below."""
    if z_drift not in Z_DRIFTS:
        raise ConfigError(f"z_drift must be one of {sorted(Z_DRIFTS)}, got {z_drift!r}")
    h_next, z_next = _em_step(h, z, p.baseline, p.hawkes_ratio, p.hawkes_decay, p.zumbach_decay,
                              zumbach_gamma(p), Z_DRIFTS[z_drift] == 1, dt, noise)
    if not (math.isfinite(h_next) and math.isfinite(z_next)):
        raise NonFiniteStateError(0, h_next, z_next)
    return h_next, z_next


@njit(cache=True)
def _em_kernel(h, z, step, noises, baseline, n_h, beta, omega, gamma, drift_on_h, dt,
               stride, record_from, h_out, z_out, n_rec):
    """Advance over one chunk of noises; returns -1 in the last slot when all steps stayed finite."""
    for k in range(noises.shape[0]):
        h, z = _em_step(h, z, baseline, n_h, beta, omega, gamma, drift_on_h, dt, noises[k])
        step += 1
        if not (math.isfinite(h) and math.isfinite(z)):
            return h, z, step, n_rec, step
        if step >= record_from and (step - record_from) % stride == 0:
            h_out[n_rec] = h
            z_out[n_rec] = z
            n_rec += 1
    return h, z, step, n_rec, -1


def simulate_sde(p: ZHawkesParams, c: SdeConfig,
                 noise_source: Optional[Callable[[int], np.ndarray]] = None) -> DiffusionPath:
    """
    Integrate from (H, Z) = (0, 0), discard the burn-in, record every
    record_stride-th step. noise_source(n) replaces the seeded normal draws.
    """
    c.validate(p)
    if noise_source is None:
        noise_source = np.random.default_rng(c.seed).standard_normal

    n_steps = int(round(c.horizon / c.dt))
    record_from = int(math.ceil(c.burn_in_fraction * n_steps))
    n_records = (n_steps - record_from) // c.record_stride + 1

    h_out = np.zeros(n_records)
    z_out = np.zeros(n_records)
    gamma = zumbach_gamma(p)
    drift_on_h = Z_DRIFTS[c.z_drift] == 1

    h, z, step, n_rec = 0.0, 0.0, 0, 0
    if record_from == 0:
        h_out[0], z_out[0], n_rec = h, z, 1

    while step < n_steps:
        chunk = min(CHUNK_STEPS, n_steps - step)
        noises = np.ascontiguousarray(noise_source(chunk), dtype=np.float64)
        h, z, step, n_rec, failed = _em_kernel(
            h, z, step, noises, p.baseline, p.hawkes_ratio, p.hawkes_decay, p.zumbach_decay,
            gamma, drift_on_h, c.dt, c.record_stride, record_from, h_out, z_out, n_rec,
        )
        if failed >= 0:
            raise NonFiniteStateError(int(failed), h, z)
        logger.debug("SDE progress: step %d / %d", step, n_steps)

    logger.info("Integrated %d SDE steps (dt=%g), recorded %d samples", n_steps, c.dt, n_rec)
    return DiffusionPath(
        t0=record_from * c.dt,
        dt_recorded=c.record_stride * c.dt,
        h_values=h_out[:n_rec],
        z_values=z_out[:n_rec],
        baseline=p.baseline,
    )
