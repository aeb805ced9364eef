# test_cli.py
import io
import json

from univoque.cli import parse_and_run
from univoque.dimension import CSV_FIELDS


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = parse_and_run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_alpha_command():
    code, out, _ = run('alpha', '--q', '2', '--M', '1', '--len', '5')
    assert code == 0
    assert json.loads(out)['digits'] == '11111'


def test_output_is_deterministic():
    assert run('alpha', '--q', '7/4', '--len', '20') == run('alpha', '--q', '7/4', '--len', '20')


def test_kl_command():
    code, out, _ = run('kl', '--M', '1', '--width', '1e-5')
    payload = json.loads(out)
    assert code == 0
    assert payload['digits'].startswith('110100110010')
    assert abs(float(payload['approx']) - 1.78723) < 1e-4


def test_base_command():
    code, out, _ = run('base', '--alpha', '(10)', '--width', '1e-9')
    payload = json.loads(out)
    assert code == 0
    assert payload['polynomial'] == [-1, -1, 1]
    lo = payload['q']['lo'].split('/')
    assert abs(int(lo[0]) / int(lo[1]) - 1.6180339887) < 1e-8


def test_invalid_input_exit_code():
    code, out, err = run('alpha', '--q', 'abc')
    assert code == 2
    assert out == ''
    assert json.loads(err)['error'] == 'InputError'


def test_validation_error_exit_code():
    code, _, err = run('alpha', '--q', '2', '--len', '0')
    assert code == 2
    assert json.loads(err)['error'] == 'ValidationError'


def test_missing_argument_exit_code():
    assert run('alpha')[0] == 2


def test_domain_error_exit_code():
    code, _, err = run('plateau', '--word', '110')
    assert code == 2
    assert json.loads(err)['error'] == 'NotPrimitive'


def test_tolerance_not_reached_still_emits():
    code, out, _ = run('entropy', '--q', '2', '--tol', '1e-9', '--n-max', '4')
    assert code == 4
    payload = json.loads(out)
    assert payload['tolerance_reached'] is False
    assert payload['n_used'] == 4


def test_entropy_csv():
    code, out, _ = run('entropy', '--q', '2', '--n-max', '16', '--format', 'csv')
    assert code == 0
    header, row = out.splitlines()
    assert header == ','.join(CSV_FIELDS)
    assert row.endswith(',ok')


def test_csv_not_available_for_alpha():
    code, _, err = run('alpha', '--q', '2', '--format', 'csv')
    assert code == 2


def test_dim_command():
    code, out, _ = run('dim', '--q', '2', '--n-max', '16')
    payload = json.loads(out)
    assert code == 0
    assert payload['dimension']['hi'] == '1'


def test_classify_command():
    code, out, _ = run('classify', '--q', 'alpha:(10)')
    assert code == 0
    assert json.loads(out)['status'] == 'Outside'


def test_plateau_command():
    code, out, _ = run('plateau', '--word', '111', '--width', '1e-8')
    payload = json.loads(out)
    assert code == 0
    assert payload['word'] == '111'
    assert payload['above_kl'] is True


def test_verify_command():
    code, out, _ = run('verify', '--suite', 'xg', '--seed', '7')
    report = json.loads(out)
    assert code == 0
    assert report['failures'] == 0
    assert report['seed'] == 7


def test_sweep_to_file(tmp_path):
    target = tmp_path / 'sweep.csv'
    code, out, _ = run('sweep', '--q-from', '1.5', '--q-to', '1.7', '--steps', '3',
                       '--n-max', '6', '--threads', '1', '--format', 'csv', '--out', str(target))
    assert code in (0, 4)
    assert out == ''
    lines = target.read_text().splitlines()
    assert lines[0] == ','.join(CSV_FIELDS)
    assert len(lines) == 4
