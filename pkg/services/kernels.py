"""
Kernel and parameter definitions for the Hawkes / ZHawkes family.

Intensity model:

    lambda_t = baseline + H_t + Z_t**2
    H_t = sum over past events of n_H * beta * exp(-beta * (t - t_i))
    Z_t = sum over past events of eps_i * gamma * exp(-omega * (t - t_i))

with gamma = sqrt(2 * n_Z * omega) so that the integral of z(s)**2 is n_Z.
"""

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Dict, Tuple

from services.errors import ConfigError, DomainError, InvalidRegimeError


@dataclass(frozen=True)
class ExpKernel:
    """amplitude * exp(-decay * s) for s >= 0."""
    amplitude: float
    decay: float

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise DomainError(f"Kernel amplitude must be >= 0, got {self.amplitude}")
        if not self.decay > 0:
            raise DomainError(f"Kernel decay must be > 0, got {self.decay}")

    def __call__(self, s: float) -> float:
        return self.amplitude * math.exp(-self.decay * s) if s >= 0 else 0.0

    def norm(self) -> float:
        return kernel_norm(self)


@dataclass(frozen=True)
class ZHawkesParams:
    baseline: float
    hawkes_ratio: float
    hawkes_decay: float
    zumbach_ratio: float
    zumbach_decay: float
    tick: float = 1.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = {
            'baseline': self.baseline > 0,
            'hawkes_ratio': self.hawkes_ratio >= 0,
            'hawkes_decay': self.hawkes_decay > 0,
            'zumbach_ratio': self.zumbach_ratio >= 0,
            'zumbach_decay': self.zumbach_decay > 0,
            'tick': self.tick > 0,
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if not ok or not math.isfinite(value):
                raise ConfigError(f"Invalid value for {name}: {value}")

    @property
    def gamma(self) -> float:
        return zumbach_gamma(self)

    @property
    def chi(self) -> float:
        return 2.0 * self.zumbach_decay / self.hawkes_decay

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


class TailRegime(str, Enum):
    EXACT_NH0 = 'exact_nH0'
    CHI_SMALL = 'chi_small'
    CHI_LARGE = 'chi_large'


class StabilityClass(str, Enum):
    STATIONARY_FINITE_MEAN = 'stationary-finite-mean'
    STATIONARY_INFINITE_MEAN = 'stationary-infinite-mean'
    EXPLOSIVE = 'explosive'


@dataclass(frozen=True)
class TailPrediction:
    exponent: float
    correction_a: float
    chi: float
    regime: TailRegime
    infinite_mean: bool


def kernel_norm(k: ExpKernel) -> float:
    """Integral of the kernel over [0, inf)."""
    return k.amplitude / k.decay


def zumbach_gamma(p: ZHawkesParams) -> float:
    return math.sqrt(2.0 * p.zumbach_ratio * p.zumbach_decay)


def hawkes_kernel(p: ZHawkesParams) -> ExpKernel:
    return ExpKernel(p.hawkes_ratio * p.hawkes_decay, p.hawkes_decay)


def zumbach_kernel(p: ZHawkesParams) -> ExpKernel:
    return ExpKernel(zumbach_gamma(p), p.zumbach_decay)


def quadratic_kernel(p: ZHawkesParams, s: float, u: float) -> float:
    """Rank-one part z(s) z(u) of the quadratic kernel (no leverage term)."""
    z = zumbach_kernel(p)
    return z(s) * z(u)


def quadratic_diagonal(p: ZHawkesParams, s: float) -> float:
    """Q(s, s) = phi(s) + z(s)**2; integrates to n_H + n_Z."""
    return hawkes_kernel(p)(s) + zumbach_kernel(p)(s) ** 2


def endogeneity(p: ZHawkesParams) -> Tuple[float, float, float]:
    return p.hawkes_ratio, p.zumbach_ratio, p.hawkes_ratio + p.zumbach_ratio


def classify_stability(p: ZHawkesParams) -> StabilityClass:
    n_h, _, n = endogeneity(p)
    if n_h >= 1:
        return StabilityClass.EXPLOSIVE
    if n >= 1:
        return StabilityClass.STATIONARY_INFINITE_MEAN
    return StabilityClass.STATIONARY_FINITE_MEAN


def theoretical_mean_intensity(p: ZHawkesParams) -> float:
    """baseline / (1 - n), or math.inf once n >= 1."""
    _, _, n = endogeneity(p)
    if n >= 1:
        return math.inf
    return p.baseline / (1.0 - n)


def _correction_a(p: ZHawkesParams, regime: TailRegime) -> float:
    n_h, n_z = p.hawkes_ratio, p.zumbach_ratio
    if regime is TailRegime.EXACT_NH0:
        if n_h != 0:
            raise InvalidRegimeError(f"Regime {regime.value} requires hawkes_ratio = 0, got {n_h}")
        return 0.0
    if n_h >= 1:
        raise InvalidRegimeError(f"Regime {regime.value} requires hawkes_ratio < 1, got {n_h}")
    chi = p.chi
    if regime is TailRegime.CHI_SMALL:
        return n_h / (1 - n_h) * (1 - chi * (1 - n_h - n_z) / (1 - n_h) ** 2)
    if n_z == 1:
        raise InvalidRegimeError(f"Regime {regime.value} is undefined for zumbach_ratio = 1")
    return n_h / (chi * (1 - n_z))


def predict_tail_exponent(p: ZHawkesParams, regime) -> TailPrediction:
    """
    Survival-function slope of the intensity, -(1/2) * (1 + 1 / (n_Z * (1 + a))).

    The correction a is computed with the asymptotic formula of the
    requested regime; no regime is picked automatically from chi.
    """
    try:
        regime = TailRegime(regime)
    except ValueError:
        raise InvalidRegimeError(f"Unknown regime: {regime}")

    if not p.zumbach_ratio > 0:
        raise InvalidRegimeError("Tail prediction requires zumbach_ratio > 0")

    a = _correction_a(p, regime)
    effective = p.zumbach_ratio * (1 + a)
    if effective <= 0:
        raise DomainError(f"n_Z * (1 + a) = {effective} <= 0; no power-law tail predicted")

    exponent = -0.5 * (1 + 1 / effective)
    return TailPrediction(
        exponent=exponent,
        correction_a=a,
        chi=p.chi,
        regime=regime,
        infinite_mean=effective > 1,
    )
