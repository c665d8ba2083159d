"""
Event-by-event simulation of the ZHawkes process by Ogata thinning.

With exponential kernels the state (H, Z) is updated in O(1) per candidate:
between events H and Z decay geometrically, at an event H jumps by
n_H * beta and Z by sign * gamma. The intensity baseline + H + Z**2 never
increases between events, so the intensity at the current candidate is a
valid majorant for the next waiting time.

Random numbers come from numpy's PCG64 generator, drawn in chunks and
consumed in a fixed order per candidate: waiting time, acceptance uniform,
then the sign uniform when the candidate is accepted.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from numba import njit

from services.errors import InsufficientSpanError
from services.kernels import ZHawkesParams, zumbach_gamma

logger = logging.getLogger(__name__)

DEFAULT_EVENT_CAP = 100_000_000
DEFAULT_BURN_IN = 1e5
CHUNK_SIZE = 1 << 20


@dataclass(frozen=True)
class ProcessState:
    h: float = 0.0
    z: float = 0.0
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class EventStream:
    times: np.ndarray
    signs: np.ndarray
    horizon: float
    params: ZHawkesParams
    seed: int
    truncated: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.signs):
            raise ValueError(f"times and signs differ in length ({len(self.times)} != {len(self.signs)})")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def span(self) -> float:
        """Simulated time actually covered; shorter than horizon after truncation."""
        if self.truncated and len(self.times):
            return float(self.times[-1])
        return self.horizon

    def head(self, n: int) -> 'EventStream':
        """First n events; the horizon moves to the (n+1)-th event time."""
        if len(self) <= n:
            return self
        return EventStream(times=self.times[:n], signs=self.signs[:n], horizon=float(self.times[n]),
                           params=self.params, seed=self.seed)


@dataclass(frozen=True, eq=False)
class SampledSeries:
    """
    Values on the grid t0 + k * dt, or at explicit sample_times (event-time
    sampling). For the latter dt holds the mean spacing.
    """
    t0: float
    dt: float
    values: np.ndarray
    sample_times: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if len(self.values) < 1:
            raise ValueError("A sampled series needs at least one value")
        if self.sample_times is not None and len(self.sample_times) != len(self.values):
            raise ValueError("sample_times and values differ in length")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def uniform(self) -> bool:
        return self.sample_times is None

    @property
    def times(self) -> np.ndarray:
        if self.sample_times is not None:
            return self.sample_times
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def duration(self) -> float:
        if self.sample_times is not None:
            return float(self.sample_times[-1] - self.sample_times[0])
        return len(self.values) * self.dt

    def after(self, t: float) -> 'SampledSeries':
        """Samples at times >= t."""
        if self.sample_times is None:
            start = int(math.ceil(max(t - self.t0, 0.0) / self.dt))
        else:
            start = int(np.searchsorted(self.sample_times, t, side='left'))
        if start >= len(self.values):
            raise InsufficientSpanError(f"No samples left after t={t:g}")
        if start == 0:
            return self
        if self.sample_times is None:
            return SampledSeries(self.t0 + start * self.dt, self.dt, self.values[start:])
        return with_times(self.values[start:], self.sample_times[start:])


def with_times(values: np.ndarray, times: np.ndarray) -> SampledSeries:
    """Series sampled at explicit, strictly increasing times."""
    times = np.asarray(times, dtype=np.float64)
    dt = float((times[-1] - times[0]) / (len(times) - 1)) if len(times) > 1 else 1.0
    return SampledSeries(float(times[0]), dt if dt > 0 else 1.0, np.asarray(values), sample_times=times)


def intensity(state: ProcessState, p: ZHawkesParams) -> float:
    return p.baseline + state.h + state.z * state.z


def decay_state(s: ProcessState, delta: float, p: ZHawkesParams) -> ProcessState:
    """Relax H and Z over an event-free interval of length delta."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    decayed = ProcessState(
        h=s.h * math.exp(-p.hawkes_decay * delta),
        z=s.z * math.exp(-p.zumbach_decay * delta),
        t=s.t + delta,
    )
    assert decayed.h >= 0
    return decayed


def apply_event(s: ProcessState, sign: int, p: ZHawkesParams) -> ProcessState:
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    jumped = ProcessState(
        h=s.h + p.hawkes_ratio * p.hawkes_decay,
        z=s.z + sign * zumbach_gamma(p),
        t=s.t,
    )
    assert jumped.h >= 0 and intensity(jumped, p) >= p.baseline
    return jumped


@njit(cache=True)
def _thinning_kernel(uniforms, h, z, t, horizon, baseline, beta, omega, jump_h, gamma,
                     times_out, signs_out):
    n_uniforms = uniforms.shape[0]
    capacity = times_out.shape[0]
    pos = 0
    n_out = 0
    finished = False
    while pos + 3 <= n_uniforms and n_out < capacity:
        bound = baseline + h + z * z
        candidate = t - math.log(1.0 - uniforms[pos]) / bound
        pos += 1
        if candidate > horizon:
            finished = True
            break
        elapsed = candidate - t
        h *= math.exp(-beta * elapsed)
        z *= math.exp(-omega * elapsed)
        t = candidate
        lam = baseline + h + z * z
        accept = uniforms[pos] * bound <= lam
        pos += 1
        if accept:
            sign = 1 if uniforms[pos] < 0.5 else -1
            pos += 1
            times_out[n_out] = t
            signs_out[n_out] = sign
            n_out += 1
            h += jump_h
            z += sign * gamma
    return pos, n_out, h, z, t, finished


def simulate_thinning(p: ZHawkesParams, horizon: float, seed: int,
                      event_cap: int = DEFAULT_EVENT_CAP,
                      chunk_size: int = CHUNK_SIZE) -> EventStream:
    """
    Exact sample of the process on (0, horizon], starting from an empty history.

    Runs for any hawkes_ratio; once more than event_cap events have been
    accepted the run stops and the first event_cap events are returned
    with truncated=True.
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")

    rng = np.random.default_rng(seed)
    jump_h = p.hawkes_ratio * p.hawkes_decay
    gamma = zumbach_gamma(p)

    h, z, t = 0.0, 0.0, 0.0
    uniforms = rng.random(chunk_size)
    time_chunks: List[np.ndarray] = []
    sign_chunks: List[np.ndarray] = []
    total = 0
    truncated = False

    while True:
        room = min(chunk_size, event_cap + 1 - total)
        times_buf = np.empty(room, dtype=np.float64)
        signs_buf = np.empty(room, dtype=np.int8)
        pos, n_out, h, z, t, finished = _thinning_kernel(
            uniforms, h, z, t, horizon, p.baseline, p.hawkes_decay, p.zumbach_decay,
            jump_h, gamma, times_buf, signs_buf,
        )
        time_chunks.append(times_buf[:n_out])
        sign_chunks.append(signs_buf[:n_out])
        total += n_out
        logger.debug("Thinning chunk: %d events (total %d, t=%.6g)", n_out, total, t)

        if finished:
            break
        if total > event_cap:
            truncated = True
            break
        uniforms = np.concatenate((uniforms[pos:], rng.random(chunk_size)))

    times = np.concatenate(time_chunks)
    signs = np.concatenate(sign_chunks)
    if truncated:
        times, signs = times[:event_cap], signs[:event_cap]
        logger.warning(
            "Event cap %d exceeded at t=%.6g of %.6g; returning truncated stream",
            event_cap, t, horizon,
        )

    logger.info("Simulated %d events over horizon %g (seed=%d)", len(times), horizon, seed)
    return EventStream(times=times, signs=signs, horizon=float(horizon), params=p,
                       seed=int(seed), truncated=truncated)


@njit(cache=True)
def _replay_kernel(event_times, signs, query_times, beta, omega, jump_h, gamma, h_out, z_out):
    n_events = event_times.shape[0]
    h = 0.0
    z = 0.0
    t = 0.0
    j = 0
    for k in range(query_times.shape[0]):
        q = query_times[k]
        while j < n_events and event_times[j] < q:
            elapsed = event_times[j] - t
            h = h * math.exp(-beta * elapsed) + jump_h
            z = z * math.exp(-omega * elapsed) + signs[j] * gamma
            t = event_times[j]
            j += 1
        h_out[k] = h * math.exp(-beta * (q - t))
        z_out[k] = z * math.exp(-omega * (q - t))


def replay_intensity(e: EventStream, p: ZHawkesParams,
                     times: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Left limits (lambda, H, Z) at the given times, rebuilt by the recursion."""
    times = np.asarray(times, dtype=np.float64)
    order = np.argsort(times, kind='stable')
    sorted_times = np.ascontiguousarray(times[order])

    h_sorted = np.empty_like(sorted_times)
    z_sorted = np.empty_like(sorted_times)
    _replay_kernel(
        np.ascontiguousarray(e.times, dtype=np.float64),
        np.ascontiguousarray(e.signs, dtype=np.float64),
        sorted_times, p.hawkes_decay, p.zumbach_decay,
        p.hawkes_ratio * p.hawkes_decay, zumbach_gamma(p), h_sorted, z_sorted,
    )

    h = np.empty_like(h_sorted)
    z = np.empty_like(z_sorted)
    h[order] = h_sorted
    z[order] = z_sorted
    return p.baseline + h + z * z, h, z


def sample_components(e: EventStream, p: ZHawkesParams,
                      dt: float) -> Tuple[SampledSeries, SampledSeries, SampledSeries]:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n = int(math.floor(e.span / dt)) + 1
    grid = dt * np.arange(n)
    lam, h, z = replay_intensity(e, p, grid)
    return SampledSeries(0.0, dt, lam), SampledSeries(0.0, dt, h), SampledSeries(0.0, dt, z)


def sample_intensity(e: EventStream, p: ZHawkesParams, dt: float) -> SampledSeries:
    """Intensity on the grid t_k = k * dt over the simulated span."""
    lam, _, _ = sample_components(e, p, dt)
    return lam


def sample_at_events(e: EventStream,
                     p: ZHawkesParams) -> Tuple[SampledSeries, SampledSeries, SampledSeries]:
    """(lambda, H, Z) just before each event, the event-time sampling measure."""
    if len(e) == 0:
        raise InsufficientSpanError("Event-time sampling of an empty stream")
    lam, h, z = replay_intensity(e, p, e.times)
    return with_times(lam, e.times), with_times(h, e.times), with_times(z, e.times)


def price_path(e: EventStream) -> np.ndarray:
    return np.cumsum(e.signs.astype(np.int64)) * e.params.tick


def flip_signs(e: EventStream) -> EventStream:
    return replace(e, signs=(-e.signs).astype(e.signs.dtype))


def effective_burn_in(horizon: float, burn_in: Optional[float] = None) -> float:
    """Configured burn-in, clipped to a tenth of the horizon for short runs."""
    burn_in = DEFAULT_BURN_IN if burn_in is None else burn_in
    if burn_in >= horizon:
        return horizon / 10
    return burn_in
