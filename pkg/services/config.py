"""
Run configuration.

Config files are plain `key = value` text, read with python-dotenv so the
same parser handles comments, quoting and blank lines. Unknown keys are
rejected.
"""

import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values

from services.diffusion import SdeConfig, Z_DRIFTS
from services.errors import ConfigError
from services.kernels import ZHawkesParams
from services.point_process import DEFAULT_BURN_IN, DEFAULT_EVENT_CAP

PARAM_KEYS = ('baseline', 'hawkes_ratio', 'hawkes_decay', 'zumbach_ratio', 'zumbach_decay', 'tick')
REQUIRED_KEYS = ('baseline', 'hawkes_ratio', 'zumbach_ratio', 'zumbach_decay', 'horizon', 'seed')

# key -> (parser, default)
KEYS = {
    'baseline': (float, None),
    'hawkes_ratio': (float, None),
    'hawkes_decay': (float, 1.0),
    'zumbach_ratio': (float, None),
    'zumbach_decay': (float, None),
    'tick': (float, 1.0),
    'horizon': (float, None),
    'seed': (int, None),
    'sample_dt': (float, 1.0),
    'sde_dt': (float, 0.01),
    'record_stride': (int, 100),
    'burn_in': (float, DEFAULT_BURN_IN),
    'burn_in_fraction': (float, 0.1),
    'z_drift': (str, 'z'),
    'event_cap': (int, None),
    'sample_at': (str, 'grid'),
}

SAMPLING_MEASURES = ('grid', 'events')


@dataclass(frozen=True)
class RunConfig:
    params: ZHawkesParams
    horizon: float
    seed: int
    sample_dt: float = 1.0
    sde_dt: float = 0.01
    record_stride: int = 100
    burn_in: float = DEFAULT_BURN_IN
    burn_in_fraction: float = 0.1
    z_drift: str = 'z'
    event_cap: int = DEFAULT_EVENT_CAP
    sample_at: str = 'grid'

    def sde_config(self) -> SdeConfig:
        return SdeConfig(
            dt=self.sde_dt,
            horizon=self.horizon,
            seed=self.seed,
            record_stride=self.record_stride,
            burn_in_fraction=self.burn_in_fraction,
            z_drift=self.z_drift,
        )

    def with_seed(self, seed: int) -> 'RunConfig':
        return replace(self, seed=seed)

    def echo(self) -> Dict[str, Any]:
        """Flat key -> value mapping, the same keys a config file uses."""
        flat = self.params.as_dict()
        flat.update({
            'horizon': self.horizon,
            'seed': self.seed,
            'sample_dt': self.sample_dt,
            'sde_dt': self.sde_dt,
            'record_stride': self.record_stride,
            'burn_in': self.burn_in,
            'burn_in_fraction': self.burn_in_fraction,
            'z_drift': self.z_drift,
            'event_cap': self.event_cap,
            'sample_at': self.sample_at,
        })
        return flat


def _parse_value(key: str, raw: Any) -> Any:
    parser, _ = KEYS[key]
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        raise ConfigError(f"Config key {key} has no value")
    try:
        if parser is int and isinstance(raw, str):
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError(raw)
            return int(as_float)
        return parser(raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value for config key {key}: {raw!r}")


def default_event_cap() -> int:
    raw = os.environ.get('ZHAWKES_EVENT_CAP')
    return int(float(raw)) if raw else DEFAULT_EVENT_CAP


def config_from_mapping(mapping: Mapping[str, Any], seed_override: Optional[int] = None) -> RunConfig:
    unknown = sorted(set(mapping) - set(KEYS))
    if unknown:
        raise ConfigError(f"Unknown config key: {unknown[0]}")

    values = {key: _parse_value(key, raw) for key, raw in mapping.items()}
    if seed_override is not None:
        values['seed'] = int(seed_override)

    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"Missing required config key: {key}")
    for key, (_, default) in KEYS.items():
        if key not in values and default is not None:
            values[key] = default
    values.setdefault('event_cap', default_event_cap())

    if values['z_drift'] not in Z_DRIFTS:
        raise ConfigError(f"z_drift must be one of {sorted(Z_DRIFTS)}, got {values['z_drift']!r}")
    if values['sample_at'] not in SAMPLING_MEASURES:
        raise ConfigError(f"sample_at must be one of {SAMPLING_MEASURES}, got {values['sample_at']!r}")
    for key in ('horizon', 'sample_dt', 'sde_dt'):
        if not values[key] > 0:
            raise ConfigError(f"{key} must be > 0, got {values[key]}")
    if values['burn_in'] < 0:
        raise ConfigError(f"burn_in must be >= 0, got {values['burn_in']}")
    if values['event_cap'] < 1:
        raise ConfigError(f"event_cap must be >= 1, got {values['event_cap']}")

    params = ZHawkesParams(**{key: values.pop(key) for key in PARAM_KEYS})
    return RunConfig(params=params, **values)


def load_config(path: str, seed_override: Optional[int] = None) -> RunConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    return config_from_mapping(dotenv_values(path), seed_override=seed_override)


def params_from_mapping(mapping: Mapping[str, Any]) -> ZHawkesParams:
    """Process parameters alone, for requests that do not run anything."""
    unknown = sorted(set(mapping) - set(PARAM_KEYS))
    if unknown:
        raise ConfigError(f"Unknown parameter: {unknown[0]}")
    values = {key: _parse_value(key, raw) for key, raw in mapping.items()}
    for key in PARAM_KEYS:
        if key not in values:
            default = KEYS[key][1]
            if default is None:
                raise ConfigError(f"Missing required config key: {key}")
            values[key] = default
    return ZHawkesParams(**values)
