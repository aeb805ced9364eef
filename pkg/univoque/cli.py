# univoque/cli.py
import argparse
import csv
import io
import json
import sys
from typing import Any, Callable, Dict, List, Optional, TextIO, Tuple

from pydantic import BaseModel, Field, ValidationError

from .benchmark import PerformanceBenchmarker, generate_performance_report
from .dimension import CSV_FIELDS, plateau_from_word, sandwich_entropy, sweep
from .errors import InputError, UnivoqueError
from .expansions import (
    base_from_alpha,
    classify_univoque,
    greedy_beta,
    kl_alpha_digits,
    kl_base,
    parse_base,
    quasi_greedy_alpha,
    UnivoqueKind,
)
from .parallel import SmartParallelRunner
from .utils import format_rational, setup_logger
from .verification import SUITES, run_suite
from .words import parse_sequence, parse_word

logger = setup_logger('univoque.cli')

TOLERANCE_EXIT = 4

# (payload, exit code, csv rows or None)
Outcome = Tuple[Dict[str, Any], int, Optional[List[Dict[str, Any]]]]


class Command(BaseModel):
    M: int = Field(default=1, ge=1)
    format: str = Field(default='json', pattern='^(json|csv)$')
    out: Optional[str] = None
    seed: int = 0
    threads: Optional[int] = Field(default=None, ge=1)

    def runner(self) -> Optional[SmartParallelRunner]:
        return SmartParallelRunner(max_workers=self.threads) if self.threads else None


class AlphaCommand(Command):
    q: str
    length: int = Field(default=32, ge=1)
    width: str = '1e-12'


class BaseCommand(Command):
    alpha: str
    width: str = '1e-12'


class KlCommand(Command):
    length: int = Field(default=64, ge=2)
    width: str = '1e-12'


class ClassifyCommand(Command):
    q: str
    depth: int = Field(default=64, ge=1)
    width: str = '1e-12'


class EntropyCommand(Command):
    q: str
    tol: str = '1e-3'
    n_max: Optional[int] = Field(default=None, ge=2)
    k_max: int = Field(default=64, ge=1)
    width: str = '1e-12'


class PlateauCommand(Command):
    word: str
    width: str = '1e-12'


class VerifyCommand(Command):
    suite: str = Field(default='all', pattern='^(' + '|'.join(SUITES) + ')$')
    k_max: int = Field(default=14, ge=1)


class SweepCommand(Command):
    q_from: str
    q_to: str
    steps: int = Field(default=50, ge=2)
    tol: str = '1e-3'
    n_max: Optional[int] = Field(default=None, ge=2)
    k_max: int = Field(default=64, ge=1)


class BenchCommand(Command):
    q_from: str = '1.6'
    q_to: str = '2'
    steps: int = Field(default=16, ge=2)
    tol: str = '1e-3'
    n_max: int = Field(default=8, ge=2)
    workers: List[int] = Field(default_factory=lambda: [1, 2, 4])


# --- command handlers --------------------------------------------------------------

def run_alpha(cmd: AlphaCommand) -> Outcome:
    q = parse_base(cmd.q, cmd.M, cmd.width)
    prefix = quasi_greedy_alpha(q, cmd.length)
    payload = {
        'q': q.to_json(),
        'digits': str(prefix.digits),
        'certified_len': prefix.certified_len,
        'beta': str(greedy_beta(q, cmd.length)),
    }
    if prefix.sequence is not None:
        payload['sequence'] = str(prefix.sequence)
    return payload, 0, None


def run_base(cmd: BaseCommand) -> Outcome:
    target = parse_sequence(cmd.alpha, cmd.M) if '(' in cmd.alpha else parse_word(cmd.alpha, cmd.M)
    q = base_from_alpha(target, cmd.M, cmd.width)
    payload = {'alpha': str(target), 'q': q.to_json(), 'width': format_rational(q.width)}
    if q.polynomial is not None:
        payload['polynomial'] = list(q.polynomial)
    return payload, 0, None


def run_kl(cmd: KlCommand) -> Outcome:
    q = kl_base(cmd.M, cmd.length, cmd.width)
    payload = {
        'M': cmd.M,
        'q': q.to_json(),
        'approx': f'{float(q.midpoint):.12g}',
        'digits': str(kl_alpha_digits(cmd.M, cmd.length)),
    }
    return payload, 0, None


def run_classify(cmd: ClassifyCommand) -> Outcome:
    q = parse_base(cmd.q, cmd.M, cmd.width)
    status = classify_univoque(q, cmd.depth)
    code = TOLERANCE_EXIT if status.kind is UnivoqueKind.UNKNOWN_AT_DEPTH else 0
    return {'q': q.to_json(), **status.to_json()}, code, None


def run_entropy(cmd: EntropyCommand) -> Outcome:
    q = parse_base(cmd.q, cmd.M, cmd.width)
    estimate = sandwich_entropy(q, cmd.tol, cmd.n_max, cmd.k_max)
    code = 0 if estimate.tolerance_reached else TOLERANCE_EXIT
    return estimate.to_json(), code, [estimate.csv_row()]


def run_dim(cmd: EntropyCommand) -> Outcome:
    q = parse_base(cmd.q, cmd.M, cmd.width)
    estimate = sandwich_entropy(q, cmd.tol, cmd.n_max, cmd.k_max)
    payload = {
        'q': q.to_json(),
        'dimension': estimate.dimension.to_json(),
        'entropy': estimate.entropy.to_json(),
        'n_used': estimate.n_used,
        'tolerance_reached': estimate.tolerance_reached,
    }
    code = 0 if estimate.tolerance_reached else TOLERANCE_EXIT
    return payload, code, [estimate.csv_row()]


def run_plateau(cmd: PlateauCommand) -> Outcome:
    plateau = plateau_from_word(parse_word(cmd.word, cmd.M), cmd.width)
    return plateau.to_json(), 0, None


def run_verify(cmd: VerifyCommand) -> Outcome:
    report = run_suite(cmd.suite, cmd.M, cmd.k_max, cmd.seed, cmd.runner())
    return report, TOLERANCE_EXIT if report['failures'] else 0, None


def run_sweep(cmd: SweepCommand) -> Outcome:
    result = sweep(cmd.q_from, cmd.q_to, cmd.steps, cmd.tol, cmd.M, cmd.n_max, cmd.k_max, cmd.runner())
    flagged = any(row.estimate is None or not row.estimate.tolerance_reached for row in result.rows)
    return result.to_json(), TOLERANCE_EXIT if flagged else 0, [row.csv_row() for row in result.rows]


def run_bench(cmd: BenchCommand) -> Outcome:
    if any(w < 1 for w in cmd.workers):
        raise InputError('worker counts must be positive')
    benchmarker = PerformanceBenchmarker()
    results = benchmarker.benchmark_sweep(cmd.q_from, cmd.q_to, cmd.steps, cmd.workers, cmd.tol, cmd.n_max, cmd.M)
    return generate_performance_report(results), 0, None


COMMANDS: Dict[str, Tuple[type, Callable[[Any], Outcome]]] = {
    'alpha': (AlphaCommand, run_alpha),
    'base': (BaseCommand, run_base),
    'kl': (KlCommand, run_kl),
    'classify': (ClassifyCommand, run_classify),
    'entropy': (EntropyCommand, run_entropy),
    'dim': (EntropyCommand, run_dim),
    'plateau': (PlateauCommand, run_plateau),
    'verify': (VerifyCommand, run_verify),
    'sweep': (SweepCommand, run_sweep),
    'bench': (BenchCommand, run_bench),
}


# --- argument parsing ----------------------------------------------------------------

def _common(parser: argparse.ArgumentParser):
    parser.add_argument('--M', type=int, default=argparse.SUPPRESS, help='largest digit (default 1)')
    parser.add_argument('--format', choices=['json', 'csv'], default=argparse.SUPPRESS)
    parser.add_argument('--out', default=argparse.SUPPRESS, help='write output here instead of stdout')
    parser.add_argument('--seed', type=int, default=argparse.SUPPRESS)
    parser.add_argument('--threads', type=int, default=argparse.SUPPRESS, help='worker processes')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='univoque', description='Unique expansions in non-integer bases')
    sub = parser.add_subparsers(dest='command', required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser('alpha', help='quasi-greedy expansion of 1')
    p.add_argument('--q', required=True, help='decimal, p/r or alpha:<literal>')
    p.add_argument('--len', dest='length', type=int, default=S)
    p.add_argument('--width', default=S)

    p = sub.add_parser('base', help='base bracket from an expansion of 1')
    p.add_argument('--alpha', required=True, help="word or eventually periodic literal such as 11(01)")
    p.add_argument('--width', default=S)

    p = sub.add_parser('kl', help='Komornik-Loreti constant')
    p.add_argument('--len', dest='length', type=int, default=S)
    p.add_argument('--width', default=S)

    p = sub.add_parser('classify', help='membership of q in the univoque set')
    p.add_argument('--q', required=True)
    p.add_argument('--depth', type=int, default=S)
    p.add_argument('--width', default=S)

    for name in ('entropy', 'dim'):
        p = sub.add_parser(name, help='certified entropy sandwich' if name == 'entropy' else 'Hausdorff dimension interval')
        p.add_argument('--q', required=True)
        p.add_argument('--tol', default=S)
        p.add_argument('--n-max', dest='n_max', type=int, default=S)
        p.add_argument('--k-max', dest='k_max', type=int, default=S)
        p.add_argument('--width', default=S)

    p = sub.add_parser('plateau', help='entropy plateau generated by a primitive word')
    p.add_argument('--word', required=True)
    p.add_argument('--width', default=S)

    p = sub.add_parser('verify', help='collapse-map and counting verification suites')
    p.add_argument('--suite', default=S, choices=SUITES)
    p.add_argument('--k-max', '--kmax', dest='k_max', type=int, default=S)

    p = sub.add_parser('sweep', help='entropy and dimension on an evenly spaced grid')
    p.add_argument('--q-from', dest='q_from', required=True)
    p.add_argument('--q-to', dest='q_to', required=True)
    p.add_argument('--steps', type=int, default=S)
    p.add_argument('--tol', default=S)
    p.add_argument('--n-max', dest='n_max', type=int, default=S)
    p.add_argument('--k-max', dest='k_max', type=int, default=S)

    p = sub.add_parser('bench', help='serial versus parallel sweep timing')
    p.add_argument('--q-from', dest='q_from', default=S)
    p.add_argument('--q-to', dest='q_to', default=S)
    p.add_argument('--steps', type=int, default=S)
    p.add_argument('--tol', default=S)
    p.add_argument('--n-max', dest='n_max', type=int, default=S)
    p.add_argument('--workers', type=int, nargs='+', default=S)

    for subparser in sub.choices.values():
        _common(subparser)
    return parser


def render(payload: Dict[str, Any], rows: Optional[List[Dict[str, Any]]], fmt: str) -> str:
    if fmt == 'json':
        return json.dumps(payload, indent=2) + '\n'
    if rows is None:
        raise InputError('csv output is available for entropy, dim and sweep')
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator='\n')
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: Optional[str], stream: TextIO):
    if out:
        with open(out, 'w', newline='') as handle:
            handle.write(text)
        logger.info(f'Wrote {out}')
    else:
        stream.write(text)


def parse_and_run(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None,
                  stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    name = args.pop('command')
    model, handler = COMMANDS[name]
    try:
        cmd = model(**args)
    except ValidationError as exc:
        stderr.write(json.dumps({'error': 'ValidationError', 'detail': exc.errors(include_url=False)}, default=str) + '\n')
        return 2

    try:
        payload, code, rows = handler(cmd)
        _emit(render(payload, rows, cmd.format), cmd.out, stdout)
    except UnivoqueError as exc:
        logger.error(f'{name} failed: {exc.message}')
        stderr.write(json.dumps(exc.to_dict(), default=str) + '\n')
        return exc.exit_code
    return code


def main():
    sys.exit(parse_and_run())


if __name__ == '__main__':
    main()
