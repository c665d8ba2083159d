"""
Plain-text outputs: events, sampled series, diffusion paths, survival
curves and the JSON run manifest.

Every data file starts with `# key=value` comment lines echoing the run
configuration, then one header line, then comma-delimited rows with
floats written to 17 significant digits.
"""

import hashlib
import json
import logging
import os
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services import __version__
from services.config import KEYS, RunConfig, config_from_mapping
from services.diffusion import DiffusionPath
from services.errors import ParseError, StreamMismatchError
from services.point_process import EventStream, SampledSeries, price_path, with_times
from services.stats import SurvivalCurve

logger = logging.getLogger(__name__)

FLOAT_FMT = '%.17g'
EVENT_COLUMNS = ('time', 'sign', 'cumulative_price')
SERIES_COLUMNS = ('time', 'lambda', 'h', 'z')
PATH_COLUMNS = ('time', 'h', 'z', 'lambda')
MANIFEST_NAME = 'manifest.json'


@dataclass(frozen=True, eq=False)
class SeriesFile:
    series: SampledSeries
    config: Optional[RunConfig]
    kind: str
    uniform: bool


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_table(path: str, meta: Dict[str, Any], columns: Sequence[str],
                 table: np.ndarray, fmt) -> None:
    with open(path, 'w', newline='\n') as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={_format_meta(value)}\n")
        fh.write(','.join(columns) + '\n')
        if len(table):
            np.savetxt(fh, table, fmt=fmt, delimiter=',')
    logger.info("Wrote %d rows to %s", len(table), path)


def _format_meta(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return FLOAT_FMT % value
    return str(value)


def _read_table(path: str, columns: Optional[Sequence[str]] = None
                ) -> Tuple[Dict[str, str], List[str], np.ndarray, int]:
    """Returns (meta, header, rows, line number of the first data row)."""
    if not os.path.isfile(path):
        raise ParseError(path, 0, "file not found")

    meta: Dict[str, str] = {}
    with open(path) as fh:
        line_no = 0
        header: Optional[List[str]] = None
        while True:
            line = fh.readline()
            if not line:
                break
            line_no += 1
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith('#'):
                key, sep, value = stripped.lstrip('#').strip().partition('=')
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            header = [name.strip() for name in stripped.split(',')]
            break

        if header is None:
            raise ParseError(path, line_no, "missing header line")
        if columns is not None and tuple(header) != tuple(columns):
            raise ParseError(path, line_no, f"expected header {','.join(columns)}, got {','.join(header)}")

        first_data_line = line_no + 1
        position = fh.tell()
        if not fh.readline().strip():
            return meta, header, np.empty((0, len(header))), first_data_line
        fh.seek(position)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter('ignore')
                rows = np.loadtxt(fh, delimiter=',', ndmin=2, dtype=np.float64)
        except ValueError:
            bad_line, reason = _locate_bad_row(path, first_data_line, len(header))
            raise ParseError(path, bad_line, reason)

    if rows.shape[1] != len(header):
        bad_line, reason = _locate_bad_row(path, first_data_line, len(header))
        raise ParseError(path, bad_line, reason)
    if not np.all(np.isfinite(rows)):
        bad = int(np.argmax(~np.all(np.isfinite(rows), axis=1)))
        raise ParseError(path, first_data_line + bad, "non-finite value")
    return meta, header, rows, first_data_line


def _locate_bad_row(path: str, first_data_line: int, n_columns: int) -> Tuple[int, str]:
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if line_no < first_data_line or not line.strip():
                continue
            fields = line.strip().split(',')
            if len(fields) != n_columns:
                return line_no, f"expected {n_columns} columns, got {len(fields)}"
            try:
                [float(f) for f in fields]
            except ValueError:
                return line_no, f"unparseable row: {line.strip()!r}"
    return first_data_line, "malformed data block"


def _config_from_meta(path: str, meta: Dict[str, str]) -> Optional[RunConfig]:
    echo = {key: value for key, value in meta.items() if key in KEYS}
    if not echo:
        return None
    try:
        return config_from_mapping(echo)
    except Exception as e:
        raise ParseError(path, 1, f"invalid parameter echo: {e}")


def write_events(path: str, e: EventStream, config: RunConfig) -> None:
    meta = dict(config.echo(), kind='events', truncated=e.truncated, toolkit_version=__version__)
    table = np.column_stack((e.times, e.signs.astype(np.float64), price_path(e)))
    _write_table(path, meta, EVENT_COLUMNS, table, fmt=[FLOAT_FMT, '%d', FLOAT_FMT])


def read_events(path: str) -> Tuple[EventStream, RunConfig]:
    meta, _, rows, first = _read_table(path, EVENT_COLUMNS)
    config = _config_from_meta(path, meta)
    if config is None:
        raise ParseError(path, 1, "missing parameter echo (# key=value lines)")

    times = rows[:, 0].copy()
    signs = rows[:, 1]
    prices = rows[:, 2]

    bad_sign = np.flatnonzero((signs != 1) & (signs != -1))
    if bad_sign.size:
        raise ParseError(path, first + int(bad_sign[0]), f"sign must be +1 or -1, got {signs[bad_sign[0]]:g}")
    if times.size:
        if times[0] <= 0:
            raise ParseError(path, first, f"event time {times[0]!r} not in (0, horizon]")
        steps = np.flatnonzero(np.diff(times) <= 0)
        if steps.size:
            raise ParseError(path, first + int(steps[0]) + 1, "event times not strictly increasing")
        if times[-1] > config.horizon:
            raise ParseError(path, first + times.size - 1, f"event time beyond horizon {config.horizon:g}")

    stream = EventStream(
        times=times,
        signs=signs.astype(np.int8),
        horizon=config.horizon,
        params=config.params,
        seed=config.seed,
        truncated=meta.get('truncated', 'false') == 'true',
    )
    expected = price_path(stream)
    drift = np.flatnonzero(np.abs(expected - prices) > 1e-9 * np.maximum(1.0, np.abs(expected)))
    if drift.size:
        raise ParseError(path, first + int(drift[0]), "cumulative_price inconsistent with signs")
    return stream, config


def check_echo(file_config: RunConfig, config: RunConfig) -> None:
    """Raise when the echoed run parameters differ from the given config."""
    ours, theirs = file_config.echo(), config.echo()
    for key in ('baseline', 'hawkes_ratio', 'hawkes_decay', 'zumbach_ratio', 'zumbach_decay',
                'tick', 'horizon', 'seed'):
        if ours[key] != theirs[key]:
            raise StreamMismatchError(f"Events file was produced with {key}={ours[key]}, config has {theirs[key]}")


def write_series(path: str, times: np.ndarray, lam: np.ndarray, h: np.ndarray, z: np.ndarray,
                 config: RunConfig) -> None:
    meta = dict(config.echo(), kind='thinning', toolkit_version=__version__)
    _write_table(path, meta, SERIES_COLUMNS, np.column_stack((times, lam, h, z)), fmt=FLOAT_FMT)


def write_path(path: str, diffusion: DiffusionPath, config: RunConfig) -> None:
    meta = dict(config.echo(), kind='sde', toolkit_version=__version__)
    table = np.column_stack((diffusion.times, diffusion.h_values, diffusion.z_values, diffusion.intensity))
    _write_table(path, meta, PATH_COLUMNS, table, fmt=FLOAT_FMT)


def read_series(path: str) -> SeriesFile:
    """Reads either a thinning series (time,lambda,h,z) or an SDE path (time,h,z,lambda)."""
    meta, header, rows, first = _read_table(path)
    if 'time' not in header or 'lambda' not in header:
        raise ParseError(path, first - 1, "header must contain time and lambda columns")
    if rows.shape[0] == 0:
        raise ParseError(path, first, "no data rows")

    times = rows[:, header.index('time')]
    values = rows[:, header.index('lambda')]
    steps = np.diff(times)
    if steps.size and np.any(steps <= 0):
        raise ParseError(path, first + int(np.argmax(steps <= 0)) + 1, "time column not strictly increasing")

    dt = float((times[-1] - times[0]) / (len(times) - 1)) if len(times) > 1 else 1.0
    uniform = bool(steps.size == 0 or np.allclose(steps, dt, rtol=1e-6, atol=0))
    series = SampledSeries(float(times[0]), dt, values.copy()) if uniform else with_times(values.copy(), times.copy())
    return SeriesFile(
        series=series,
        config=_config_from_meta(path, meta),
        kind=meta.get('kind', 'unknown'),
        uniform=uniform,
    )


def write_curve(path: str, curve: SurvivalCurve) -> None:
    _write_table(path, {'n_samples': curve.n_samples}, ('threshold', 'probability'),
                 np.column_stack((curve.thresholds, curve.probabilities)), fmt=FLOAT_FMT)


def write_running_mean(path: str, means: SampledSeries) -> None:
    _write_table(path, {}, ('time', 'running_mean'), np.column_stack((means.times, means.values)), fmt=FLOAT_FMT)


def sha256sum(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for block in iter(lambda: fh.read(1 << 20), b''):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_dir: str, config: RunConfig, outputs: Sequence[str], started: str,
                   extra: Optional[Dict[str, Any]] = None) -> str:
    manifest = {
        'toolkit_version': __version__,
        'config': config.echo(),
        'seed': config.seed,
        'started_at': started,
        'finished_at': utc_now(),
        'outputs': [{'path': os.path.basename(p), 'sha256': sha256sum(p)} for p in outputs],
    }
    manifest.update(extra or {})
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, 'w') as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def verify_manifest(path: str) -> List[str]:
    """Names of listed outputs that are missing or whose checksum changed."""
    with open(path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(path)
    broken = []
    for entry in manifest['outputs']:
        target = os.path.join(base, entry['path'])
        if not os.path.isfile(target) or sha256sum(target) != entry['sha256']:
            broken.append(entry['path'])
    return broken
