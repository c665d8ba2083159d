"""
Brute-force intensity by direct summation over the whole event history.

Deliberately O(N) per evaluation; it exists to certify the recursive
state updates used by the simulator.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from services.kernels import ZHawkesParams, zumbach_gamma
from services.point_process import EventStream, replay_intensity

logger = logging.getLogger(__name__)

EARLY_EVENTS_CHECKED = 100


@dataclass(frozen=True)
class VerificationReport:
    n_checkpoints: int
    max_rel_err: float
    worst_time: Optional[float]
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol

    def summary(self) -> str:
        lines = [
            f"checkpoints: {self.n_checkpoints}",
            f"max_rel_err: {self.max_rel_err:.3e}",
            f"tolerance: {self.tol:.3e}",
        ]
        if self.worst_time is not None:
            lines.append(f"worst_checkpoint_time: {self.worst_time:.17g}")
        lines.append(f"verdict: {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)


def intensity_bruteforce(e: EventStream, p: ZHawkesParams, t: float, reverse: bool = False) -> float:
    prior = e.times < t
    ages = t - e.times[prior]
    signs = e.signs[prior].astype(np.float64)
    if reverse:
        ages, signs = ages[::-1], signs[::-1]

    h = np.sum(p.hawkes_ratio * p.hawkes_decay * np.exp(-p.hawkes_decay * ages))
    z = np.sum(signs * zumbach_gamma(p) * np.exp(-p.zumbach_decay * ages))
    return float(p.baseline + h + z * z)


def checkpoint_times(e: EventStream, n_checkpoints: int) -> np.ndarray:
    """One uniform draw per stratum of the span, plus the first event times."""
    if n_checkpoints < 1:
        raise ValueError(f"n_checkpoints must be >= 1, got {n_checkpoints}")
    rng = np.random.default_rng(e.seed)
    width = e.span / n_checkpoints
    stratified = width * (np.arange(n_checkpoints) + rng.random(n_checkpoints))
    return np.concatenate((stratified, e.times[:EARLY_EVENTS_CHECKED]))


def verify_path(e: EventStream, p: ZHawkesParams, n_checkpoints: int, tol: float) -> VerificationReport:
    times = checkpoint_times(e, n_checkpoints)
    recursive, _, _ = replay_intensity(e, p, times)
    brute = np.array([intensity_bruteforce(e, p, t) for t in times])

    rel_err = np.abs(brute - recursive) / brute
    worst = int(np.argmax(rel_err)) if len(rel_err) else None
    report = VerificationReport(
        n_checkpoints=len(times),
        max_rel_err=float(rel_err[worst]) if worst is not None else 0.0,
        worst_time=float(times[worst]) if worst is not None and rel_err[worst] > 0 else None,
        tol=tol,
    )
    logger.info("Oracle check over %d checkpoints: max_rel_err=%.3e", report.n_checkpoints, report.max_rel_err)
    return report


def locate_divergence(expected: EventStream, observed: EventStream) -> Optional[int]:
    """Index of the first event where two streams disagree, or None when identical."""
    n = min(len(expected), len(observed))
    differs = (expected.times[:n] != observed.times[:n]) | (expected.signs[:n] != observed.signs[:n])
    if differs.any():
        return int(np.argmax(differs))
    if len(expected) != len(observed):
        return n
    return None
