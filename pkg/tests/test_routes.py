import io

import pytest

from main import app

PARAMS = {'baseline': 0.5, 'hawkes_ratio': 0.0, 'zumbach_ratio': 2.0, 'zumbach_decay': 0.03}


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


def test_home_lists_endpoints(client):
    response = client.get('/')
    assert response.status_code == 200
    assert set(response.get_json()['endpoints']) == {'predict', 'simulate', 'analyze'}


class TestPredict:
    def test_prediction(self, client):
        response = client.post('/predict', json=PARAMS)
        body = response.get_json()
        assert response.status_code == 200
        assert body['success']
        assert body['tail_prediction']['exponent'] == pytest.approx(-0.75)
        assert body['classification'] == 'stationary-infinite-mean'

    def test_regime(self, client):
        response = client.post('/predict', json=dict(PARAMS, hawkes_ratio=0.2, zumbach_decay=0.1,
                                                     zumbach_ratio=1.5, regime='chi_small'))
        assert response.get_json()['tail_prediction']['correction_a'] == pytest.approx(0.3046875)

    def test_no_body(self, client):
        response = client.post('/predict')
        assert response.status_code == 400
        assert not response.get_json()['success']

    def test_array_body(self, client):
        response = client.post('/predict', json=[1, 2])
        assert response.status_code == 400
        assert not response.get_json()['success']

    def test_invalid_regime(self, client):
        response = client.post('/predict', json=dict(PARAMS, hawkes_ratio=0.2, regime='exact_nH0'))
        assert response.status_code == 400

    def test_unknown_parameter(self, client):
        response = client.post('/predict', json=dict(PARAMS, horizon=10))
        assert response.status_code == 400
        assert 'horizon' in response.get_json()['error']


class TestSimulate:
    def test_thinning_summary(self, client):
        response = client.post('/simulate', json=dict(PARAMS, zumbach_ratio=0.0, horizon=1000, seed=1, burn_in=0))
        body = response.get_json()
        assert response.status_code == 200
        assert body['summary']['n_events'] > 0
        assert body['summary']['mode'] == 'thinning'
        assert 'manifest' not in body['summary']

    def test_same_request_same_summary(self, client):
        request = dict(PARAMS, horizon=500, seed=5, burn_in=0)
        first = client.post('/simulate', json=request).get_json()['summary']
        second = client.post('/simulate', json=request).get_json()['summary']
        assert first['n_events'] == second['n_events']
        assert first['empirical_rate'] == second['empirical_rate']

    def test_sde(self, client):
        response = client.post('/simulate', json=dict(PARAMS, horizon=50, seed=1, mode='sde'))
        assert response.status_code == 200
        assert response.get_json()['summary']['n_records'] > 0

    def test_array_body(self, client):
        response = client.post('/simulate', json=[1, 2])
        assert response.status_code == 400
        assert not response.get_json()['success']

    def test_bad_mode(self, client):
        response = client.post('/simulate', json=dict(PARAMS, horizon=50, seed=1, mode='exact'))
        assert response.status_code == 400

    def test_horizon_limit(self, client):
        response = client.post('/simulate', json=dict(PARAMS, horizon=1e12, seed=1))
        assert response.status_code == 400
        assert 'Horizon' in response.get_json()['error']

    def test_missing_seed(self, client):
        response = client.post('/simulate', json=dict(PARAMS, horizon=50))
        assert response.status_code == 400
        assert 'seed' in response.get_json()['error']


class TestAnalyze:
    def upload(self, client, text, name='series.csv', **form):
        data = dict(form, series=(io.BytesIO(text.encode()), name))
        return client.post('/analyze', data=data, content_type='multipart/form-data')

    def test_constant_series(self, client):
        text = 'time,lambda\n' + ''.join(f"{t},0.5\n" for t in range(2000))
        response = self.upload(client, text)
        body = response.get_json()
        assert response.status_code == 200
        assert body['analysis']['verdicts']['stationarity'] == 'pass'
        assert 'survival' not in body['analysis']

    def test_options(self, client):
        text = 'time,lambda\n' + ''.join(f"{t},0.5\n" for t in range(2000))
        response = self.upload(client, text, windows='4', burn_in='100')
        body = response.get_json()
        assert body['analysis']['burn_in'] == 100.0
        assert len(body['analysis']['stationarity']['window_boundaries']) == 5

    def test_no_file(self, client):
        response = client.post('/analyze', data={}, content_type='multipart/form-data')
        assert response.status_code == 400

    def test_wrong_extension(self, client):
        response = self.upload(client, 'time,lambda\n0,1\n', name='series.png')
        assert response.status_code == 400

    def test_malformed_file(self, client):
        response = self.upload(client, 'time,lambda\n0,0.5\n1,x\n')
        assert response.status_code == 400
        assert ':3:' in response.get_json()['error']
