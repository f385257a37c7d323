import json
import math

import jsonschema
from pytest import approx, fixture, mark

from coherent4odes import __version__
from coherent4odes.cli import EXIT_INCOHERENT, EXIT_INTEGRATION, EXIT_OK, \
    EXIT_USAGE, main, parse_args
from coherent4odes.report import load_schema
from coherent4odes.sysdsl import parse_system, variable

x1, x2 = variable(1), variable(2)

TANH = "x1' = -x1 + tanh(x2)\nx2' = x1 - x2\n"
DAMPED_TANH = "x1' = -2*x1 + tanh(x2)\nx2' = x1 - 2*x2\n"
BOTH_MINUS = "x1' = -x1 - x2\nx2' = -x1 - x2\n"
CHAIN = "x1' = -x1\nx2' = x1 - x2\nx3' = x2 - x3\n"
DECAY = "x1' = -x1\n"
CUBIC = "var x1 in [-2, 2]\nx1' = x1 - x1^3\n"
LAMBDA_OMEGA = "x1' = x1 - x2 - x1*(x1^2 + x2^2)\n" \
               "x2' = x1 + x2 - x2*(x1^2 + x2^2)\n"
PLUS_MINUS = {'n': 2, 'edges': [{'from': 1, 'to': 2, 'sign': '+'},
                                {'from': 2, 'to': 1, 'sign': '-'}]}
MINUS_MINUS = {'n': 2, 'edges': [{'from': 1, 'to': 2, 'sign': '-'},
                                 {'from': 2, 'to': 1, 'sign': '-'}]}


@fixture
def files(tmp_path):
    def write(name, content):
        path = tmp_path / name
        if isinstance(content, dict):
            content = json.dumps(content)
        path.write_text(content, encoding='utf-8')
        return str(path)
    return write


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, out


def run_json(capsys, *argv):
    status, out = run(capsys, *argv)
    report = json.loads(out)
    jsonschema.validate(report, load_schema())
    assert status == report['status']
    assert __version__ == report['version']
    assert argv[0] == report['command']
    return status, report['result']


# arguments

def test_defaults(files):
    cfg = parse_args(['analyze', '--input', files('s.ode', TANH)])
    assert 'ode' == cfg.format
    assert 'json' == cfg.emit
    assert 42 == cfg.seed
    assert 1e-8 == cfg.opts.rtol


@mark.parametrize('command, emit', [
    ('simulate', 'csv'),
    ('transform', 'dsl'),
    ('verify', 'json'),
])
def test_default_emit(files, command, emit):
    assert emit == parse_args([command, '-i', files('s.ode', TANH)]).emit


def test_graph_format_from_extension(files):
    cfg = parse_args(['spin', '-i', files('g.json', PLUS_MINUS)])
    assert 'graph' == cfg.format


def test_tolerance_overrides(files):
    cfg = parse_args(['omega', '-i', files('s.ode', TANH), '--rtol', '1e-9',
                      '--tol.eq_tol', '1e-8', '--tol.loop_budget=10',
                      '--dt', '0.5'])
    assert 1e-9 == cfg.opts.rtol
    assert 1e-8 == cfg.opts.eq_tol
    assert 10 == cfg.opts.loop_budget
    assert 0.5 == cfg.opts.dt


@mark.parametrize('argv', [
    ['analyze', '--tol.nope', '1'],
    ['analyze', '--tol.rtol', '-1'],
    ['analyze', '--dt', '-1'],
    ['analyze', '--rtol', '0'],
    ['analyze', '--tol.rtol'],
    ['analyze', '--bogus'],
    ['analyze', '--csv'],
    ['analyze', '--seed', '-3'],
    ['simulate', '--x0', '1,a'],
    ['frobnicate'],
    [],
])
def test_usage_errors(files, capsys, argv):
    path = files('s.ode', TANH)
    if argv:
        argv = argv[:1] + ['-i', path] + argv[1:]
    assert EXIT_USAGE == main(argv)
    assert '' == capsys.readouterr().out


def test_version(capsys):
    assert EXIT_OK == main(['--version'])
    assert __version__ in capsys.readouterr().out


# input errors

def test_missing_file(tmp_path, capsys):
    status, out = run(capsys, 'analyze', '-i', str(tmp_path / 'none.ode'))
    assert EXIT_USAGE == status
    assert '' == out


def test_dsl_error(files, capsys):
    status, out = run(capsys, 'analyze', '-i', files('bad.ode', "x1' = -x1 +"))
    assert EXIT_USAGE == status
    assert '' == out


def test_invalid_graph(files, capsys):
    graph = {'n': 2, 'edges': [{'from': 1, 'to': 1, 'sign': '+'}]}
    assert EXIT_USAGE == run(capsys, 'spin', '-i', files('g.json', graph))[0]


def test_graph_where_system_needed(files, capsys):
    path = files('g.json', PLUS_MINUS)
    assert EXIT_USAGE == run(capsys, 'simulate', '-i', path, '--x0', '1,0')[0]


@mark.parametrize('x0', ['1', '1,2,3'])
def test_bad_initial_point(files, capsys, x0):
    path = files('s.ode', TANH)
    assert EXIT_USAGE == run(capsys, 'simulate', '-i', path, '--x0', x0)[0]


def test_missing_initial_point(files, capsys):
    assert EXIT_USAGE == run(capsys, 'omega', '-i', files('s.ode', TANH))[0]


def test_integration_error(files, capsys):
    path = files('s.ode', "var x1 in [0, 1]\nx1' = -x1\n")
    status, out = run(capsys, 'simulate', '-i', path, '--x0', '2')
    assert EXIT_INTEGRATION == status
    assert '' == out


def test_loop_budget(files, capsys):
    edges = [{'from': u, 'to': v, 'sign': '+'}
             for u in range(1, 7) for v in range(1, 7) if u != v]
    path = files('k6.json', {'n': 6, 'edges': edges})
    status, result = run_json(capsys, 'analyze', '-i', path,
                              '--tol.loop_budget', '5')
    assert EXIT_OK == status
    assert result['loops'] is None
    assert result['loops_truncated']
    assert 'cooperative' == result['verdict']['class']
    assert 30 == len(result['loop_edges'])


# commands

def test_analyze_system(files, capsys):
    status, result = run_json(capsys, 'analyze', '-i', files('s.ode', TANH))
    assert EXIT_OK == status
    assert 'cooperative' == result['verdict']['class']
    assert 'C1' == result['domain_class']
    assert [(1, 2, '+'), (2, 1, '+')] == sorted(
        (e['from'], e['to'], e['sign']) for e in result['edges'])
    assert [[1, 2], [2, 1]] == result['loop_edges']
    assert not result['loops_truncated']
    loop, = result['loops']
    assert [1, 2] == loop['vertices']
    assert '+' == loop['sign']
    assert [[1, 2]] == result['components']
    holds = dict((g['result'], g['holds']) for g in result['guarantees'])
    assert holds['equilibrium_attractors_cooperative']
    assert not result['conservative']


def test_analyze_graph(files, capsys):
    status, result = run_json(capsys, 'analyze', '-i',
                              files('g.json', PLUS_MINUS))
    assert EXIT_OK == status
    assert 'incoherent' == result['verdict']['class']
    assert [1, 2] == sorted(result['verdict']['witness']['vertices'])
    assert 'guarantees' not in result


def test_spin(files, capsys):
    status, result = run_json(capsys, 'spin', '-i', files('s.ode', BOTH_MINUS))
    assert EXIT_OK == status
    assert {'1': 1, '2': -1} == result['sigma']
    assert {'sigma': {'1': 1, '2': -1}} == result['orthant']


def test_spin_graph(files, capsys):
    status, result = run_json(capsys, 'spin', '-i',
                              files('g.json', MINUS_MINUS))
    assert EXIT_OK == status
    assert {'1': 1, '2': -1} == result['sigma']


def test_spin_incoherent(files, capsys):
    status, result = run_json(capsys, 'spin', '-i',
                              files('g.json', PLUS_MINUS))
    assert EXIT_INCOHERENT == status
    assert 'negative' == result['witness']['reason']


def test_decompose_chain(files, capsys):
    status, result = run_json(capsys, 'decompose', '-i', files('s.ode', CHAIN))
    assert EXIT_OK == status
    assert [[1], [2], [3]] == result['blocks']
    assert 1 == result['n1']
    assert [1, 2, 3] == result['perm']
    assert parse_system(CHAIN) == parse_system(result['system'])


def test_decompose_incoherent(files, capsys):
    status, result = run_json(capsys, 'decompose', '-i',
                              files('g.json', PLUS_MINUS))
    assert EXIT_INCOHERENT == status
    assert 'incoherent' == result['verdict']['class']


def test_transform_dsl(files, capsys):
    status, out = run(capsys, 'transform', '-i', files('s.ode', BOTH_MINUS))
    assert EXIT_OK == status
    assert (-x1 + x2, x1 - x2) == parse_system(out).fields


def test_transform_json(files, capsys):
    status, result = run_json(capsys, 'transform', '-i',
                              files('s.ode', BOTH_MINUS), '--json')
    assert EXIT_OK == status
    assert [1, -1] == result['rho']
    assert (-x1 + x2, x1 - x2) == parse_system(result['system']).fields


def test_transform_incoherent(files, capsys):
    path = files('s.ode', "x1' = x2\nx2' = -x1\n")
    status, result = run_json(capsys, 'transform', '-i', path)
    assert EXIT_INCOHERENT == status
    assert 'witness' in result['verdict']


def test_simulate_csv(files, capsys):
    status, out = run(capsys, 'simulate', '-i', files('s.ode', DECAY),
                      '--x0', '1', '--t-end', '1')
    assert EXIT_OK == status
    lines = out.splitlines()
    assert 't,x1' == lines[0]
    assert 102 == len(lines)
    t, x = map(float, lines[-1].split(','))
    assert 1.0 == t
    assert x == approx(math.exp(-1), abs=1e-6)


def test_simulate_json(files, capsys):
    status, result = run_json(capsys, 'simulate', '-i', files('s.ode', DECAY),
                              '--x0', '1', '--t-end', '1', '--dt', '0.5',
                              '--json')
    assert EXIT_OK == status
    assert [0.0, 0.5, 1.0] == result['times']
    assert 't_end' == result['terminated_by']


def test_omega_cycle(files, capsys):
    status, result = run_json(capsys, 'omega', '-i',
                              files('s.ode', LAMBDA_OMEGA), '--x0', '2,0')
    assert EXIT_OK == status
    assert 'cycle' == result['verdict']
    assert result['period'] == approx(2 * math.pi, abs=0.05)


def test_verify_cooperative(files, capsys):
    status, result = run_json(capsys, 'verify', '-i',
                              files('s.ode', DAMPED_TANH), '--points', '3')
    assert EXIT_OK == status
    assert result['passed']
    statuses = dict((c['name'], c['status']) for c in result['checks'])
    assert {'monotone': 'pass', 'conjugacy': 'pass', 'semiconjugacy': 'pass',
            'inheritance': 'pass',
            'no_periodic_attractor': 'pass', 'unordered_omega': 'pass',
            'global_convergence': 'pass'} == statuses


def test_verify_incoherent(files, capsys):
    status, result = run_json(capsys, 'verify', '-i',
                              files('s.ode', LAMBDA_OMEGA), '--points', '2',
                              '--pairs', '2')
    assert EXIT_OK == status
    statuses = dict((c['name'], c['status']) for c in result['checks'])
    assert 'skipped' == statuses['monotone']
    assert 'skipped' == statuses['no_periodic_attractor']
    assert 'conjugacy' not in statuses
    assert 'incoherent' == result['verdict']['class']


def test_equilibria(files, capsys):
    status, result = run_json(capsys, 'equilibria', '-i', files('s.ode', CUBIC))
    assert EXIT_OK == status
    assert 3 == result['count']
    assert [p[0] for p in result['equilibria']] == approx([-1, 0, 1], abs=1e-6)


# output

def test_out_file(files, tmp_path, capsys):
    out = tmp_path / 'report.json'
    status, text = run(capsys, 'analyze', '-i', files('s.ode', TANH),
                       '-o', str(out))
    assert EXIT_OK == status
    assert '' == text
    report = json.loads(out.read_text(encoding='utf-8'))
    assert str(out) == report['config']['output']


def test_reports_are_reproducible(files, capsys):
    path = files('s.ode', TANH)
    for command in ('analyze', 'decompose', 'verify'):
        first = run(capsys, command, '-i', path, '--points', '2')
        second = run(capsys, command, '-i', path, '--points', '2')
        assert first == second


def test_seed_in_config(files, capsys):
    status, out = run(capsys, 'analyze', '-i', files('s.ode', TANH),
                      '--seed', '42')
    assert 42 == json.loads(out)['config']['seed']
