import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats as sps

from services.errors import InsufficientSpanError
from services.kernels import ZHawkesParams
from services.point_process import (
    EventStream,
    ProcessState,
    SampledSeries,
    apply_event,
    decay_state,
    effective_burn_in,
    flip_signs,
    intensity,
    price_path,
    replay_intensity,
    sample_at_events,
    sample_components,
    sample_intensity,
    simulate_thinning,
    with_times,
)
from services.stats import mean_intensity_check


def hawkes_params(n_h, baseline=0.5, beta=1.0):
    return ZHawkesParams(baseline=baseline, hawkes_ratio=n_h, hawkes_decay=beta,
                         zumbach_ratio=0.0, zumbach_decay=1.0)


class TestStateUpdates:
    def test_decay(self, mixed_params):
        s = decay_state(ProcessState(h=1.0, z=2.0, t=3.0), 1.0, mixed_params)
        assert s.h == pytest.approx(math.exp(-1.0))
        assert s.z == pytest.approx(2.0 * math.exp(-0.1))
        assert s.t == 4.0

    def test_decay_by_ln2_halves_h(self):
        p = ZHawkesParams(baseline=0.5, hawkes_ratio=0.2, hawkes_decay=1.0, zumbach_ratio=1.0, zumbach_decay=0.5)
        s = decay_state(ProcessState(h=1.0, z=2.0), math.log(2.0), p)
        assert s.h == pytest.approx(0.5)
        assert s.z == pytest.approx(2.0 * 2 ** -0.5)
        assert intensity(s, p) <= intensity(ProcessState(h=1.0, z=2.0), p)

    def test_zero_decay_is_identity(self, mixed_params):
        s = ProcessState(h=0.7, z=-1.3, t=2.0)
        assert decay_state(s, 0.0, mixed_params) == s

    def test_negative_interval_rejected(self, mixed_params):
        with pytest.raises(ValueError):
            decay_state(ProcessState(), -1e-3, mixed_params)

    def test_event_jumps(self, zumbach_params):
        gamma = math.sqrt(0.12)
        up = apply_event(ProcessState(), +1, zumbach_params)
        assert up.h == 0.0
        assert up.z == pytest.approx(gamma, rel=1e-15)
        assert intensity(up, zumbach_params) == pytest.approx(0.62)

    def test_opposite_events_cancel_zumbach_state(self, zumbach_params):
        s = apply_event(apply_event(ProcessState(), +1, zumbach_params), -1, zumbach_params)
        assert s.z == 0.0

    def test_hawkes_jump(self, mixed_params):
        s = apply_event(ProcessState(h=0.3), -1, mixed_params)
        assert s.h == pytest.approx(0.5)

    @pytest.mark.parametrize('sign', [0, 2, -3])
    def test_bad_sign(self, mixed_params, sign):
        with pytest.raises(ValueError):
            apply_event(ProcessState(), sign, mixed_params)


class TestThinning:
    def test_same_seed_same_stream(self, zumbach_params):
        a = simulate_thinning(zumbach_params, 2e3, seed=7)
        b = simulate_thinning(zumbach_params, 2e3, seed=7)
        assert_array_equal(a.times, b.times)
        assert_array_equal(a.signs, b.signs)

    def test_chunking_does_not_change_the_stream(self, mixed_params):
        a = simulate_thinning(mixed_params, 2e3, seed=11)
        b = simulate_thinning(mixed_params, 2e3, seed=11, chunk_size=997)
        assert_array_equal(a.times, b.times)
        assert_array_equal(a.signs, b.signs)

    def test_stream_is_well_formed(self, mixed_params):
        e = simulate_thinning(mixed_params, 5e3, seed=3)
        assert len(e) > 0
        assert np.all(np.diff(e.times) > 0)
        assert e.times[0] > 0 and e.times[-1] <= 5e3
        assert set(np.unique(e.signs)) <= {-1, 1}
        assert not e.truncated
        assert e.span == 5e3

    def test_poisson_counts(self, poisson_params):
        horizon = 1e4
        expected = poisson_params.baseline * horizon
        inside = [abs(len(simulate_thinning(poisson_params, horizon, seed)) - expected) <= 3 * math.sqrt(expected)
                  for seed in range(20)]
        assert sum(inside) >= 19

    def test_poisson_gaps_are_exponential(self, poisson_params):
        accepted = 0
        for seed in range(20):
            gaps = np.diff(simulate_thinning(poisson_params, 1e4, seed).times)
            result = sps.anderson(gaps, dist='expon')
            accepted += result.statistic < result.critical_values[-1]
        assert accepted >= 18

    def test_linear_hawkes_rate(self):
        p = hawkes_params(0.5)
        e = simulate_thinning(p, 1e5, seed=5)
        assert mean_intensity_check(e.times, e.span, burn_in=1e3) == pytest.approx(1.0, rel=0.1)

    def test_explosive_run_is_truncated(self):
        p = hawkes_params(1.2)
        e = simulate_thinning(p, 1e4, seed=1, event_cap=10_000)
        assert e.truncated
        assert len(e) == 10_000
        assert e.span == e.times[-1] < 1e4

    def test_invalid_horizon(self, poisson_params):
        with pytest.raises(ValueError):
            simulate_thinning(poisson_params, 0.0, seed=1)


class TestReplay:
    def test_empty_stream_is_baseline(self, mixed_params):
        e = EventStream(np.empty(0), np.empty(0, dtype=np.int8), 10.0, mixed_params, seed=0)
        lam = sample_intensity(e, mixed_params, 1.0)
        assert len(lam) == 11
        assert np.all(lam.values == 0.5)

    def test_single_event_closed_form(self):
        p = ZHawkesParams(baseline=0.5, hawkes_ratio=0.0, hawkes_decay=1.0, zumbach_ratio=2.0, zumbach_decay=0.03)
        e = EventStream(np.array([1.0]), np.array([1], dtype=np.int8), 10.0, p, seed=0)
        lam = sample_intensity(e, p, 0.5)
        t = lam.times
        expected = np.where(t > 1.0, 0.5 + 0.12 * np.exp(-0.06 * (t - 1.0)), 0.5)
        assert_allclose(lam.values, expected, rtol=1e-13)

    def test_left_limit_at_event(self, mixed_params):
        e = EventStream(np.array([2.0]), np.array([-1], dtype=np.int8), 5.0, mixed_params, seed=0)
        lam, h, z = replay_intensity(e, mixed_params, np.array([2.0, 2.0 + 1e-12]))
        assert lam[0] == 0.5 and h[0] == 0.0 and z[0] == 0.0
        assert h[1] == pytest.approx(0.2, rel=1e-9)
        assert z[1] == pytest.approx(-mixed_params.gamma, rel=1e-9)

    def test_unsorted_queries(self, mixed_params):
        e = simulate_thinning(mixed_params, 500.0, seed=2)
        query = np.array([400.0, 10.0, 250.0, 0.0])
        lam, _, _ = replay_intensity(e, mixed_params, query)
        lam_sorted, _, _ = replay_intensity(e, mixed_params, np.sort(query))
        assert_array_equal(lam, lam_sorted[np.argsort(np.argsort(query))])

    def test_sampled_components_are_consistent(self, mixed_params):
        e = simulate_thinning(mixed_params, 2e3, seed=4)
        lam, h, z = sample_components(e, mixed_params, 1.0)
        assert len(lam) == 2001
        assert np.all(h.values >= 0)
        assert np.all(lam.values >= mixed_params.baseline)
        assert_allclose(lam.values, 0.5 + h.values + z.values ** 2, rtol=1e-15)

    def test_sign_flip_leaves_intensity_unchanged(self, zumbach_params):
        e = simulate_thinning(zumbach_params, 2e3, seed=9)
        flipped = flip_signs(e)
        assert_array_equal(flipped.signs, -e.signs)
        assert_array_equal(sample_at_events(e, zumbach_params)[0].values,
                           sample_at_events(flipped, zumbach_params)[0].values)
        assert_array_equal(sample_intensity(e, zumbach_params, 1.0).values,
                           sample_intensity(flipped, zumbach_params, 1.0).values)


class TestEventTimeSampling:
    def test_series_carries_event_times(self, mixed_params):
        e = simulate_thinning(mixed_params, 500.0, seed=4)
        lam, h, z = sample_at_events(e, mixed_params)
        assert not lam.uniform
        assert_array_equal(lam.times, e.times)
        assert_array_equal(z.times, e.times)
        assert lam.duration == pytest.approx(e.times[-1] - e.times[0])
        assert_allclose(lam.values, mixed_params.baseline + h.values + z.values ** 2, rtol=1e-15)

    def test_empty_stream_rejected(self, mixed_params):
        e = EventStream(np.empty(0), np.empty(0, dtype=np.int8), 10.0, mixed_params, seed=0)
        with pytest.raises(InsufficientSpanError):
            sample_at_events(e, mixed_params)

    def test_after_uses_sample_times(self):
        times = np.concatenate((np.arange(1000) * 0.01, 10.0 + np.arange(1000)))
        series = with_times(np.ones(times.size), times)
        tail = series.after(500.0)
        assert len(tail) == 510
        assert tail.times[0] == 500.0

    def test_after_on_grid(self):
        series = SampledSeries(0.0, 0.5, np.arange(10.0))
        assert_array_equal(series.after(2.2).values, [5.0, 6.0, 7.0, 8.0, 9.0])
        with pytest.raises(InsufficientSpanError):
            series.after(100.0)


def test_head_keeps_first_events(mixed_params):
    e = simulate_thinning(mixed_params, 1e3, seed=2)
    first = e.head(10)
    assert len(first) == 10
    assert first.horizon == e.times[10]
    assert_array_equal(first.signs, e.signs[:10])
    assert e.head(len(e)) is e


def test_price_path_uses_tick():
    p = ZHawkesParams(baseline=1.0, hawkes_ratio=0.0, hawkes_decay=1.0, zumbach_ratio=0.0,
                      zumbach_decay=1.0, tick=0.5)
    e = EventStream(np.array([1.0, 2.0, 3.0]), np.array([1, 1, -1], dtype=np.int8), 4.0, p, seed=0)
    assert_array_equal(price_path(e), [0.5, 1.0, 0.5])


@pytest.mark.parametrize('horizon, burn_in, expected', [
    (1e6, 1e5, 1e5),
    (1e4, 1e5, 1e3),
    (1e4, 0.0, 0.0),
])
def test_effective_burn_in(horizon, burn_in, expected):
    assert effective_burn_in(horizon, burn_in) == expected
