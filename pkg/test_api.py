# test_api.py
import pytest
from fastapi.testclient import TestClient

from univoque.api import app


@pytest.fixture
def client():
    return TestClient(app)


def test_alpha(client):
    response = client.get('/alpha', params={'q': '2', 'length': 5})
    assert response.status_code == 200
    assert response.json()['digits'] == '11111'


def test_kl(client):
    response = client.get('/kl', params={'M': 2, 'width': '1e-6', 'length': 40})
    assert response.status_code == 200
    assert response.json()['digits'].startswith('21020121')


def test_classify(client):
    response = client.get('/classify', params={'q': 'alpha:(10)'})
    assert response.json()['status'] == 'Outside'


def test_entropy_flagged_not_failed(client):
    response = client.get('/entropy', params={'q': '2', 'tol': '1e-9', 'n_max': 4})
    assert response.status_code == 200
    assert response.json()['tolerance_reached'] is False


def test_dimension(client):
    response = client.get('/dimension', params={'q': '2', 'n_max': 16})
    assert response.status_code == 200
    assert response.json()['dimension']['hi'] == '1'


def test_error_mapping(client):
    response = client.get('/plateau', params={'word': '110'})
    assert response.status_code == 422
    assert response.json() == {'error': 'NotPrimitive', 'detail': '110 is not primitive'}
    response = client.get('/alpha', params={'q': '3'})
    assert response.status_code == 422
    assert response.json()['error'] == 'InputError'


def test_plateau(client):
    response = client.get('/plateau', params={'word': '111', 'width': '1e-8'})
    assert response.status_code == 200
    assert response.json()['above_kl'] is True


def test_sweep(client):
    response = client.post('/sweep', json={'q_from': '1.5', 'q_to': '1.7', 'steps': 3, 'n_max': 6})
    assert response.status_code == 200
    body = response.json()
    assert len(body['rows']) == 3
    assert body['performance_metrics']['item_count'] == 3


def test_verify(client):
    response = client.post('/verify', json={'suite': 'xg'})
    assert response.status_code == 200
    assert response.json()['failures'] == 0
