import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv

from services import storage
from services.config import RunConfig
from services.diffusion import simulate_sde
from services.errors import (
    InsufficientPointsError,
    InsufficientSamplesError,
    InsufficientSpanError,
    ParseError,
    ToolkitError,
)
from services.kernels import (
    TailRegime,
    ZHawkesParams,
    classify_stability,
    endogeneity,
    predict_tail_exponent,
    theoretical_mean_intensity,
)
from services.oracle import locate_divergence, verify_path
from services.point_process import (
    effective_burn_in,
    sample_at_events,
    sample_components,
    simulate_thinning,
)
from services.stats import (
    DEFAULT_FIT_RANGE,
    DEFAULT_STATIONARITY_THRESHOLD,
    empirical_survival,
    fit_tail_exponent,
    hill_estimator,
    log_grid,
    max_relative_jump,
    mean_intensity_check,
    rate_growth,
    running_mean,
    stationarity_diagnostic,
)

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

MODES = ('thinning', 'sde')
# Acceptance band around the predicted slope; looser when the a-correction is asymptotic
SLOPE_TOLERANCE = {TailRegime.EXACT_NH0: 0.1, TailRegime.CHI_SMALL: 0.15, TailRegime.CHI_LARGE: 0.15}
ORACLE_PREFIX = 100_000


def default_regime(p: ZHawkesParams) -> TailRegime:
    return TailRegime.EXACT_NH0 if p.hawkes_ratio == 0 else TailRegime.CHI_SMALL


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


class ZHawkesToolkit:
    def __init__(self, event_cap: Optional[int] = None):
        """Simulation/analysis entry points shared by the CLI and the HTTP API."""
        self.event_cap = event_cap

    def predict(self, p: ZHawkesParams, regime: Optional[str] = None) -> Dict[str, Any]:
        """
        Closed-form predictions for a parameter set.

        Returns:
            Dictionary with endogeneity ratios, mean intensity (None when
            infinite), stability class and, when n_Z > 0, the tail prediction
        """
        n_h, n_z, n = endogeneity(p)
        mean = theoretical_mean_intensity(p)
        result = {
            'params': p.as_dict(),
            'endogeneity': {'hawkes_ratio': n_h, 'zumbach_ratio': n_z, 'total': n},
            'mean_intensity': _finite_or_none(mean),
            'mean_intensity_infinite': math.isinf(mean),
            'classification': classify_stability(p).value,
            'tail_prediction': None,
        }
        if n_z > 0 and (regime is not None or n_h < 1):
            prediction = predict_tail_exponent(p, regime or default_regime(p))
            result['tail_prediction'] = {
                'exponent': prediction.exponent,
                'correction_a': prediction.correction_a,
                'chi': prediction.chi,
                'regime': prediction.regime.value,
                'infinite_mean': prediction.infinite_mean,
            }
        return result

    def simulate(self, config: RunConfig, mode: str = 'thinning', out_dir: Optional[str] = None) -> Dict[str, Any]:
        if mode not in MODES:
            raise ToolkitError(f"Unknown mode {mode!r}; expected one of {MODES}")
        started = storage.utc_now()
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

        if mode == 'thinning':
            summary, outputs = self._simulate_thinning(config, out_dir)
        else:
            summary, outputs = self._simulate_sde(config, out_dir)

        summary.update({'mode': mode, 'seed': config.seed, 'classification': classify_stability(config.params).value})
        if out_dir:
            summary['outputs'] = [os.path.basename(p) for p in outputs]
            summary['manifest'] = storage.write_manifest(
                out_dir, config, outputs, started,
                extra={'mode': mode, 'truncated': summary.get('truncated', False), 'summary': dict(summary)},
            )
        return summary

    def _simulate_thinning(self, config: RunConfig, out_dir: Optional[str]):
        p = config.params
        cap = config.event_cap if self.event_cap is None else min(config.event_cap, self.event_cap)
        stream = simulate_thinning(p, config.horizon, config.seed, event_cap=cap)
        burn_in = effective_burn_in(stream.span, config.burn_in)

        summary = {
            'n_events': len(stream),
            'truncated': stream.truncated,
            'span': stream.span,
            'burn_in': burn_in,
            'empirical_rate': mean_intensity_check(stream.times, stream.span, burn_in),
            'theoretical_mean_intensity': _finite_or_none(theoretical_mean_intensity(p)),
            'rate_growth': _finite_or_none(rate_growth(stream.times, stream.span)),
        }

        outputs: List[str] = []
        if out_dir:
            events_path = os.path.join(out_dir, 'events.csv')
            storage.write_events(events_path, stream, config)
            outputs.append(events_path)

            series_path = os.path.join(out_dir, 'series.csv')
            if config.sample_at == 'events' and len(stream) == 0:
                empty = np.empty(0)
                storage.write_series(series_path, empty, empty, empty, empty, config)
            else:
                if config.sample_at == 'events':
                    lam, h, z = sample_at_events(stream, p)
                else:
                    lam, h, z = sample_components(stream, p, config.sample_dt)
                storage.write_series(series_path, lam.times, lam.values, h.values, z.values, config)
            outputs.append(series_path)
        return summary, outputs

    def _simulate_sde(self, config: RunConfig, out_dir: Optional[str]):
        path = simulate_sde(config.params, config.sde_config())
        lam = path.intensity
        summary = {
            'n_records': len(path),
            'burn_in': path.t0,
            'mean_intensity_sample': float(lam.mean()) if len(lam) else None,
            'max_intensity_sample': float(lam.max()) if len(lam) else None,
        }
        outputs: List[str] = []
        if out_dir:
            path_file = os.path.join(out_dir, 'path.csv')
            storage.write_path(path_file, path, config)
            outputs.append(path_file)
        return summary, outputs

    def analyze(self, series_file: storage.SeriesFile,
                fit_min: float = DEFAULT_FIT_RANGE[0], fit_max: float = DEFAULT_FIT_RANGE[1],
                n_windows: int = 9, burn_in: Optional[float] = None,
                subsample_gap: Optional[float] = None,
                threshold: float = DEFAULT_STATIONARITY_THRESHOLD,
                out_dir: Optional[str] = None) -> Dict[str, Any]:
        """
        Survival curve, OLS and Hill tail fits, theory comparison,
        stationarity report and running mean of a sampled intensity series.

        Returns:
            Dictionary with one entry per diagnostic and a `verdicts` map;
            `passed` is False iff an enabled verdict failed
        """
        series, config = series_file.series, series_file.config
        if burn_in is None:
            if config is not None and series_file.kind == 'thinning':
                burn_in = effective_burn_in(config.horizon, config.burn_in)
            else:
                burn_in = 0.0

        trimmed = series.after(burn_in)
        samples = trimmed.values

        baseline = config.params.baseline if config is not None else float(samples.min())
        top = float(samples.max())
        grid = log_grid(baseline, top) if top > baseline else np.array([baseline])
        curve = empirical_survival(samples, grid)

        result: Dict[str, Any] = {
            'n_samples': int(samples.size),
            'burn_in': burn_in,
            'uniform_grid': series_file.uniform,
            'survival': {'thresholds': curve.thresholds.tolist(), 'probabilities': curve.probabilities.tolist()},
        }
        verdicts: Dict[str, str] = {}

        tail_fit = None
        try:
            tail_fit = fit_tail_exponent(curve, fit_min, fit_max)
            result['tail_fit'] = {'slope': tail_fit.slope, 'stderr': tail_fit.stderr, 'fit_min': tail_fit.fit_min,
                                  'fit_max': tail_fit.fit_max, 'n_points': tail_fit.n_points}
        except InsufficientPointsError as e:
            result['tail_fit'] = None
            result['tail_fit_error'] = str(e)
            verdicts['tail'] = 'insufficient-points'

        if tail_fit is not None:
            k = int(np.clip(np.count_nonzero(samples >= fit_min), 10, samples.size - 1))
            try:
                hill = hill_estimator(samples, k)
                joint = 2 * math.hypot(hill.stderr, tail_fit.stderr)
                result['hill'] = {'slope': hill.slope, 'stderr': hill.stderr, 'k': hill.k,
                                  'agrees_with_ols': abs(hill.slope - tail_fit.slope) <= joint}
            except InsufficientSamplesError as e:
                result['hill'] = {'error': str(e)}

        theory = self.predict(config.params) if config is not None else None
        result['theory'] = theory
        prediction = theory['tail_prediction'] if theory else None
        if tail_fit is not None and prediction is not None:
            regime = TailRegime(prediction['regime'])
            within = abs(tail_fit.slope - prediction['exponent']) <= SLOPE_TOLERANCE[regime]
            if regime is TailRegime.EXACT_NH0:
                verdicts['tail'] = 'pass' if within else 'fail'
            else:
                verdicts['tail_advisory'] = 'pass' if within else 'fail'
            result['infinite_mean_from_fit'] = tail_fit.slope > -1

        if subsample_gap is None:
            subsample_gap = 10 / config.params.zumbach_decay if config is not None else 10 * series.dt
        try:
            report = stationarity_diagnostic(trimmed, n_windows, subsample_gap, threshold=threshold,
                                             baseline=baseline)
            result['stationarity'] = {
                'window_boundaries': report.window_boundaries.tolist(),
                'max_pairwise_distance': report.max_pairwise_distance,
                'trend_statistic': report.trend_statistic,
                'trend_pvalue': report.trend_pvalue,
                'threshold': report.threshold,
                'verdict': report.verdict,
            }
            verdicts['stationarity'] = report.verdict
        except InsufficientSpanError as e:
            result['stationarity'] = {'error': str(e)}
            verdicts['stationarity'] = 'insufficient-span'

        means = running_mean(trimmed)
        result['running_mean'] = {
            'final': float(means.values[-1]),
            'max_relative_jump': max_relative_jump(means, after=trimmed.t0, lag=max(trimmed.duration / 100, means.dt)),
        }

        result['verdicts'] = verdicts
        result['passed'] = 'fail' not in (verdicts.get('tail'), verdicts.get('stationarity'))
        for name, verdict in verdicts.items():
            if verdict == 'fail' and name.endswith('advisory'):
                logger.warning("Advisory check %s failed (not gating)", name)

        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            storage.write_curve(os.path.join(out_dir, 'survival.csv'), curve)
            storage.write_running_mean(os.path.join(out_dir, 'running_mean.csv'), means)
        return result

    def verify(self, events_path: str, config: RunConfig, tol: float = 1e-9,
               n_checkpoints: int = 1000, replay: bool = True) -> Dict[str, Any]:
        """
        Certify an events file: structure, echoed parameters, identity with a
        fresh run from the echoed seed, and oracle agreement on a prefix.

        An empty stream skips the replay: an empty file of a low-rate config
        passes on structure and echo alone. replay=False checks hand-made
        files against the oracle only.
        """
        try:
            stream, file_config = storage.read_events(events_path)
        except ParseError as e:
            return {'passed': False, 'error': str(e), 'line': e.line}
        storage.check_echo(file_config, config)

        result: Dict[str, Any] = {'n_events': len(stream)}
        if replay and len(stream) == 0:
            result['replay'] = 'skipped-empty'
        elif replay:
            regenerated = simulate_thinning(config.params, config.horizon, config.seed,
                                            event_cap=file_config.event_cap)
            index = locate_divergence(regenerated, stream)
            result['replay'] = 'identical' if index is None else 'diverged'
            result['replay_divergence'] = index
            if index is not None:
                source = stream if index < len(stream) else regenerated
                result.update({
                    'passed': False,
                    'divergence_time': float(source.times[index]),
                    'error': f"Stream diverges from regeneration at event {index}",
                })
                logger.warning("Replay of seed %d diverges at event %d", config.seed, index)
                return result
        else:
            result['replay'] = 'disabled'

        prefix = stream.head(ORACLE_PREFIX)
        report = verify_path(prefix, config.params, n_checkpoints, tol)
        result.update({
            'n_checkpoints': report.n_checkpoints,
            'max_rel_err': report.max_rel_err,
            'worst_checkpoint_time': report.worst_time,
            'tol': tol,
            'passed': report.passed,
            'report': report.summary(),
        })
        return result

    def sweep(self, config: RunConfig, seeds: Sequence[int], out_dir: str, mode: str = 'thinning',
              workers: Optional[int] = None) -> List[Dict[str, Any]]:
        """Independent runs, one output directory and one process per seed."""
        os.makedirs(out_dir, exist_ok=True)
        jobs = [(config.with_seed(seed), mode, os.path.join(out_dir, f"seed_{seed}"), self.event_cap)
                for seed in seeds]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_sweep_job, jobs))

        rows = [{'seed': s['seed'], 'n_events': s.get('n_events'), 'empirical_rate': s.get('empirical_rate'),
                 'truncated': s.get('truncated', False)} for s in summaries]
        with open(os.path.join(out_dir, 'sweep.csv'), 'w') as fh:
            fh.write('seed,n_events,empirical_rate,truncated\n')
            for row in rows:
                fh.write(f"{row['seed']},{row['n_events']},{row['empirical_rate']!r},{str(row['truncated']).lower()}\n")
        return summaries


def _sweep_job(job) -> Dict[str, Any]:
    config, mode, out_dir, event_cap = job
    return ZHawkesToolkit(event_cap=event_cap).simulate(config, mode, out_dir)

