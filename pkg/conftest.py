import pytest

from services.kernels import ZHawkesParams


@pytest.fixture
def zumbach_params():
    """Pure Zumbach feedback, n_Z = 2, omega = 0.03."""
    return ZHawkesParams(baseline=0.5, hawkes_ratio=0.0, hawkes_decay=1.0,
                         zumbach_ratio=2.0, zumbach_decay=0.03)


@pytest.fixture
def mixed_params():
    """Hawkes plus Zumbach feedback, n = 1.7."""
    return ZHawkesParams(baseline=0.5, hawkes_ratio=0.2, hawkes_decay=1.0,
                         zumbach_ratio=1.5, zumbach_decay=0.1)


@pytest.fixture
def poisson_params():
    return ZHawkesParams(baseline=0.5, hawkes_ratio=0.0, hawkes_decay=1.0,
                         zumbach_ratio=0.0, zumbach_decay=1.0)


@pytest.fixture
def write_cfg(tmp_path):
    """Write `key = value` lines to a config file and return its path."""
    def _write(name='run.cfg', **entries):
        path = tmp_path / name
        path.write_text(''.join(f"{key} = {value}\n" for key, value in entries.items()))
        return str(path)
    return _write
