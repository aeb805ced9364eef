# test_verification.py
import pytest

from univoque.errors import InputError
from univoque.verification import run_suite


def test_collapse_suite_has_no_failures(serial_runner):
    report = run_suite('collapse', M=1, k_max=16, seed=7, runner=serial_runner)
    assert report['failures'] == 0, report['witnesses']
    assert {'lr_identity', 'lr_reconstruct', 'lr_primitive', 'lr_tail',
            'domain', 'advance', 'equivariance', 'image', 'fiber', 'counting'} <= set(report['checks'])
    assert len(report['contexts']) == 3
    for context in report['contexts']:
        observed = report['min_advance'][context['u']]
        assert observed is None or observed >= context['required_advance']


def test_collapse_b_suite(serial_runner):
    report = run_suite('collapse-b', k_max=12, runner=serial_runner)
    assert report['failures'] == 0, report['witnesses']
    assert report['contexts'][0]['u'] == '111010101'
    assert report['contexts'][0]['required_advance'] == 1


def test_counting_suite():
    report = run_suite('counting', k_max=10)
    assert report['failures'] == 0, report['witnesses']
    assert report['checks']['count_oracle']['passed'] == 4 * 5 * 2


def test_xg_suite():
    report = run_suite('xg')
    assert report['failures'] == 0
    assert report['checks']['xg_entropy']['passed'] == 5


def test_sampling_when_over_budget(settings_env, serial_runner):
    settings_env(state_cap=2 ** 8)
    first = run_suite('collapse', k_max=9, seed=3, runner=serial_runner)
    second = run_suite('collapse', k_max=9, seed=3, runner=serial_runner)
    assert first == second
    assert first['failures'] == 0


def test_suite_arguments():
    with pytest.raises(InputError):
        run_suite('nonsense')
    with pytest.raises(InputError):
        run_suite('collapse', M=2)
    with pytest.raises(InputError):
        run_suite('xg', k_max=0)
