import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from services import storage
from services.config import config_from_mapping
from services.errors import ParseError, StreamMismatchError
from services.point_process import EventStream, simulate_thinning
from services.toolkit import ZHawkesToolkit

META = ('# baseline=0.5\n# hawkes_ratio=0\n# zumbach_ratio=2\n# zumbach_decay=0.03\n'
        '# horizon=100\n# seed=1\n')


@pytest.fixture
def config():
    return config_from_mapping(dict(baseline='0.5', hawkes_ratio='0.2', zumbach_ratio='1.5', zumbach_decay='0.1',
                                    horizon='500', seed='3', burn_in='0'))


def write_events_file(tmp_path, rows):
    path = tmp_path / 'events.csv'
    path.write_text(META + 'time,sign,cumulative_price\n' + ''.join(row + '\n' for row in rows))
    return str(path)


def test_events_keep_full_precision(tmp_path, config):
    stream = simulate_thinning(config.params, config.horizon, config.seed)
    path = str(tmp_path / 'events.csv')
    storage.write_events(path, stream, config)
    loaded, echoed = storage.read_events(path)
    assert_array_equal(loaded.times, stream.times)
    assert_array_equal(loaded.signs, stream.signs)
    assert echoed == config
    with open(path) as fh:
        assert fh.readline().startswith('# ')


def test_empty_events_file(tmp_path):
    stream, config = storage.read_events(write_events_file(tmp_path, []))
    assert len(stream) == 0
    assert config.horizon == 100.0


@pytest.mark.parametrize('rows, line, reason', [
    (['1.0,1,1', '0.5,-1,0'], 9, 'strictly increasing'),
    (['abc,1,1'], 8, 'unparseable'),
    (['1.0,1'], 8, 'columns'),
    (['1.0,2,2'], 8, 'sign'),
    (['1.0,1,1', '2.0,1,5'], 9, 'cumulative_price'),
    (['150.0,1,1'], 8, 'horizon'),
])
def test_bad_rows_report_their_line(tmp_path, rows, line, reason):
    with pytest.raises(ParseError, match=reason) as info:
        storage.read_events(write_events_file(tmp_path, rows))
    assert info.value.line == line


def test_missing_echo(tmp_path):
    path = tmp_path / 'events.csv'
    path.write_text('time,sign,cumulative_price\n1.0,1,1\n')
    with pytest.raises(ParseError, match='echo'):
        storage.read_events(str(path))


def test_echo_mismatch(config):
    with pytest.raises(StreamMismatchError, match='seed'):
        storage.check_echo(config, config.with_seed(4))


def test_series_without_metadata(tmp_path):
    path = tmp_path / 'series.csv'
    path.write_text('time,lambda\n' + ''.join(f"{t},0.5\n" for t in range(10)))
    series_file = storage.read_series(str(path))
    assert series_file.config is None
    assert series_file.uniform
    assert series_file.series.dt == 1.0
    assert len(series_file.series) == 10


def test_series_needs_lambda_column(tmp_path):
    path = tmp_path / 'series.csv'
    path.write_text('time,value\n0,1\n')
    with pytest.raises(ParseError):
        storage.read_series(str(path))


class TestManifest:
    def test_checksums(self, tmp_path, config):
        out = tmp_path / 'run'
        summary = ZHawkesToolkit().simulate(config, out_dir=str(out))
        with open(summary['manifest']) as fh:
            manifest = json.load(fh)
        assert {entry['path'] for entry in manifest['outputs']} == {'events.csv', 'series.csv'}
        assert manifest['seed'] == 3
        assert storage.verify_manifest(summary['manifest']) == []

    def test_tampering_is_detected(self, tmp_path, config):
        out = tmp_path / 'run'
        summary = ZHawkesToolkit().simulate(config, out_dir=str(out))
        with open(out / 'series.csv', 'a') as fh:
            fh.write('1e9,1,0,0\n')
        assert storage.verify_manifest(summary['manifest']) == ['series.csv']

    def test_same_seed_same_bytes(self, tmp_path, config):
        toolkit = ZHawkesToolkit()
        toolkit.simulate(config, out_dir=str(tmp_path / 'a'))
        toolkit.simulate(config, out_dir=str(tmp_path / 'b'))
        for name in ('events.csv', 'series.csv'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


def test_curve_file(tmp_path):
    from services.stats import empirical_survival
    path = str(tmp_path / 'survival.csv')
    storage.write_curve(path, empirical_survival([1.0, 2.0, 3.0], [0.5, 1.5, 2.5]))
    lines = open(path).read().splitlines()
    assert lines[0] == '# n_samples=3'
    assert lines[1] == 'threshold,probability'
    assert len(lines) == 5


def test_event_stream_length_mismatch(config):
    with pytest.raises(ValueError):
        EventStream(np.array([1.0, 2.0]), np.array([1], dtype=np.int8), 10.0, config.params, seed=0)
