"""
Command line front end.

Usage::

    coherent4odes COMMAND --input FILE [options] [--tol.NAME VALUE ...]

Reports go to stdout (or ``--out``), log messages to stderr.
Exit status: 0 on success (whatever the verdict), 2 on a usage or input
error, 3 on an analysis failure, 4 when spin, decompose or transform
get an incoherent system, 5 on an integration failure.
"""
import argparse
from dataclasses import dataclass
import logging
import sys

import numpy as np

from . import __version__
from .cascade import IncoherentError, decompose, decompose_graph
from .config import DEFAULT_SEED, Tolerances
from .dynamics import IntegrationError, Verdict, check_conjugacy, \
    check_fibres, check_global_convergence, check_monotone, \
    check_semiconjugacy, check_unordered_omega, CheckReport, \
    estimate_omega_limit, find_equilibria, integrate, omega_samples, sample_box
from .guarantees import applicable_results
from .igraph import InteractionGraph, LoopBudgetError, \
    analyze_edges, build_interaction_graph, classify, enumerate_simple_loops, \
    fundamental_subgraphs, loop_edges, scc
from .report import dumps, trajectory_csv, write_output
from .spin import FailureWitness, find_consistent_spin, find_orthant_spin
from .sysdsl import DslError, FieldEvaluationError, SystemDef, parse_system, \
    pretty_print

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ANALYSIS = 3
EXIT_INCOHERENT = 4
EXIT_INTEGRATION = 5


class UsageError(ValueError):
    """Bad command line or unreadable input."""


@dataclass(frozen=True)
class RunConfig(object):
    command: str
    input: str
    format: str
    seed: int = DEFAULT_SEED
    tolerances: Tolerances = None
    output: str = None
    emit: str = 'json'
    x0: tuple = None
    t_end: float = 10.0
    pairs: int = 10
    points: int = 5

    @property
    def opts(self):
        return self.tolerances or Tolerances()

    def export_as_dict(self):
        return {
            'command': self.command,
            'input': self.input,
            'format': self.format,
            'seed': self.seed,
            'tolerances': self.opts.export_as_dict(),
            'output': self.output or '-',
            'emit': self.emit,
            'x0': None if self.x0 is None else list(self.x0),
            't_end': self.t_end,
            'pairs': self.pairs,
            'points': self.points,
        }


# input

def load_input(cfg):
    if cfg.input is None:
        raise UsageError('--input is required')
    try:
        with open(cfg.input, encoding='utf-8') as f:
            text = f.read()
    except OSError as err:
        raise UsageError('can not read %s: %s' % (cfg.input, err.strerror))
    if cfg.format == 'graph':
        try:
            return InteractionGraph.from_str(text)
        except (ValueError, KeyError, TypeError) as err:
            raise UsageError('invalid graph %s: %s' % (cfg.input, err))
    return parse_system(text)


def load_system(cfg):
    source = load_input(cfg)
    if not isinstance(source, SystemDef):
        raise UsageError('command %s needs an ode input' % cfg.command)
    return source


def _graph_of(cfg, source):
    if isinstance(source, SystemDef):
        return build_interaction_graph(source, cfg.opts, cfg.seed)
    return source


def _x0(cfg, s):
    if cfg.x0 is None:
        raise UsageError('command %s needs --x0' % cfg.command)
    if len(cfg.x0) != s.n:
        raise UsageError('--x0 has %d coordinates, system has %d'
                         % (len(cfg.x0), s.n))
    return np.array(cfg.x0)


# commands

def cmd_analyze(cfg):
    """Interaction graph, class and sign evidence."""
    source = load_input(cfg)
    result = {}
    verdicts = {}
    if isinstance(source, SystemDef):
        verdicts = analyze_edges(source, cfg.opts, cfg.seed)
        g = build_interaction_graph(source, verdicts=verdicts)
        result['edges'] = [dict(v.export_as_dict(), **{'from': j, 'to': i})
                           for (j, i), v in sorted(verdicts.items())]
        result['domain_class'] = source.domain.domain_class.value
        result['bigbox'] = cfg.opts.bigbox
    else:
        g = source
    verdict = classify(g)
    try:
        loops = enumerate_simple_loops(g, max(2, g.n), cfg.opts.loop_budget)
    except LoopBudgetError as err:
        LOG.warning('loops not listed: %s', err)
        loops = None
    result.update({
        'graph': g,
        'verdict': verdict,
        'loops': loops,
        'loops_truncated': loops is None,
        'loop_edges': [list(e) for e in sorted(loop_edges(g))],
        'components': [sorted(c) for c in scc(g).components],
        'fundamental_subgraphs': [sub.export_as_dict(g)
                                  for sub in fundamental_subgraphs(g)],
        'conservative': verdict.witness is not None and any(
            verdicts[e].conservative for e in verdict.witness.edges
            if e in verdicts),
    })
    if isinstance(source, SystemDef):
        result['guarantees'] = applicable_results(verdict.klass, source.domain)
    return EXIT_OK, result


def cmd_spin(cfg):
    """Consistent spin assignment, or the loop preventing one."""
    g = _graph_of(cfg, load_input(cfg))
    spin = find_consistent_spin(g)
    if isinstance(spin, FailureWitness):
        return EXIT_INCOHERENT, {'witness': spin}
    result = spin.export_as_dict()
    orthant = find_orthant_spin(g)
    result['orthant'] = None if orthant is None else orthant.export_as_dict()
    return EXIT_OK, result


def cmd_decompose(cfg):
    """Change of variables and cascade blocks."""
    source = load_input(cfg)
    try:
        if isinstance(source, SystemDef):
            d = decompose(source, cfg.opts, cfg.seed)
        else:
            d = decompose_graph(source)
    except IncoherentError as err:
        return EXIT_INCOHERENT, {'verdict': err.verdict}
    result = d.export_as_dict()
    if d.system is not None:
        result['system'] = pretty_print(d.system)
    return EXIT_OK, result


def cmd_transform(cfg):
    """The transformed system, in the DSL."""
    s = load_system(cfg)
    try:
        d = decompose(s, cfg.opts, cfg.seed)
    except IncoherentError as err:
        return EXIT_INCOHERENT, {'verdict': err.verdict}
    if cfg.emit == 'dsl':
        return EXIT_OK, pretty_print(d.system)
    result = d.change.export_as_dict()
    result['system'] = pretty_print(d.system)
    return EXIT_OK, result


def cmd_simulate(cfg):
    """Trajectory from --x0 over [0, --t-end]."""
    s = load_system(cfg)
    traj = integrate(s, _x0(cfg, s), cfg.t_end, cfg.opts)
    if cfg.emit == 'csv':
        return EXIT_OK, trajectory_csv(traj)
    return EXIT_OK, {'times': traj.times, 'states': traj.states,
                     'terminated_by': traj.terminated_by}


def cmd_omega(cfg):
    """Omega limit estimate from --x0."""
    s = load_system(cfg)
    return EXIT_OK, estimate_omega_limit(s, _x0(cfg, s), cfg.opts)


def cmd_verify(cfg):
    """Sampled checks of the dynamical consequences of the class."""
    s = load_system(cfg)
    opts = cfg.opts
    g = build_interaction_graph(s, opts, cfg.seed)
    verdict = classify(g)
    coherent = verdict.is_coherent
    orthant = find_orthant_spin(g)
    if orthant is None:
        checks = [CheckReport('monotone', 'skipped')]
    else:
        checks = [check_monotone(s, cfg.pairs, opts=opts, seed=cfg.seed,
                                 orthant=orthant.sigma)]

    if coherent:
        d = decompose(s, opts, cfg.seed, graph=g)
        checks.append(check_conjugacy(s, d.change, cfg.points, opts=opts,
                                      seed=cfg.seed))
        checks.append(check_semiconjugacy(s, d, cfg.points, opts=opts,
                                          seed=cfg.seed))
        checks.append(check_fibres(d, opts, cfg.seed))

    estimates = []
    failures = []
    rng = np.random.default_rng(cfg.seed)
    for x0 in sample_box(s.domain, opts.search_radius, rng, cfg.points):
        try:
            estimates.append(estimate_omega_limit(s, x0, opts))
        except (IntegrationError, FieldEvaluationError) as err:
            failures.append({'x0': x0.tolist(), 'reason': str(err)})
    cycles = [e for e in estimates if e.verdict is Verdict.CYCLE]
    checks.append(CheckReport(
        'no_periodic_attractor',
        'skipped' if not coherent else 'fail' if cycles else 'pass',
        failures=tuple(failures),
        details={'verdicts': [e.verdict for e in estimates]}))

    if orthant is not None:
        sign = np.array(orthant.sigma)
        unordered = [check_unordered_omega([sign * np.array(x)
                                            for x in omega_samples(e)],
                                           opts.margin)
                     for e in estimates]
        bad = [r for r in unordered if not r.passed]
        checks.append(bad[0] if bad else CheckReport(
            'unordered_omega', 'pass', details={'sets': len(unordered)}))
    else:
        checks.append(CheckReport('unordered_omega', 'skipped'))

    if coherent and s.domain.is_open:
        checks.append(check_global_convergence(s, cfg.points, opts, cfg.seed))
    else:
        checks.append(CheckReport('global_convergence', 'skipped'))

    return EXIT_OK, {
        'verdict': verdict,
        'checks': checks,
        'passed': all(c.status != 'fail' for c in checks),
        'omega': estimates,
    }


def cmd_equilibria(cfg):
    """Equilibria found by multistart root finding."""
    s = load_system(cfg)
    equilibria = find_equilibria(s, cfg.opts, cfg.seed)
    return EXIT_OK, {'equilibria': [list(p) for p in equilibria],
                     'count': len(equilibria)}


COMMANDS = {
    'analyze': cmd_analyze,
    'spin': cmd_spin,
    'decompose': cmd_decompose,
    'transform': cmd_transform,
    'simulate': cmd_simulate,
    'omega': cmd_omega,
    'verify': cmd_verify,
    'equilibria': cmd_equilibria,
}


# command line

def _floats(text):
    try:
        return tuple(float(v) for v in text.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError('expected comma-separated numbers, '
                                         'got %r' % text)

def _seed(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError('seed must be unsigned')
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--input', '-i', help='system (DSL) or graph (JSON) file')
    common.add_argument('--format', choices=('ode', 'graph'),
                        help='input format (default: from the file extension)')
    common.add_argument('--x0', type=_floats, help='initial point, e.g. 1,0')
    common.add_argument('--t-end', type=float, default=10.0)
    common.add_argument('--dt', type=float, help='sample spacing')
    common.add_argument('--rtol', type=float, help='integrator tolerance')
    common.add_argument('--seed', type=_seed, default=DEFAULT_SEED)
    common.add_argument('--pairs', type=int, default=10,
                        help='ordered pairs for the monotonicity check')
    common.add_argument('--points', type=int, default=5,
                        help='sample points for the other checks')
    emit = common.add_mutually_exclusive_group()
    emit.add_argument('--json', dest='emit', action='store_const', const='json')
    emit.add_argument('--csv', dest='emit', action='store_const', const='csv')
    common.add_argument('--out', '-o', help='output file (default: stdout)')
    common.add_argument('--verbose', '-v', action='store_true')

    parser = argparse.ArgumentParser(
        prog='coherent4odes',
        description='Structural analysis of coherent ODE systems.',
        epilog='Any tolerance may be set with --tol.NAME VALUE.')
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True
    for name, func in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=func.__doc__)
    return parser


def _tolerance_overrides(extras, parser):
    overrides = []
    extras = list(extras)
    while extras:
        item = extras.pop(0)
        if not item.startswith('--tol.'):
            parser.error('unrecognized arguments: %s' % item)
        item = item[len('--tol.'):]
        if '=' not in item:
            if not extras:
                parser.error('--tol.%s expects a value' % item)
            item = '%s=%s' % (item, extras.pop(0))
        overrides.append(item)
    return overrides


def parse_args(argv):
    """Return a :class:`RunConfig`; exit with status 2 on bad arguments."""
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    base = Tolerances()
    try:
        if args.dt is not None:
            base.dt = args.dt
        if args.rtol is not None:
            base.rtol = args.rtol
        opts = Tolerances.from_overrides(_tolerance_overrides(extras, parser),
                                         base)
    except ValueError as err:
        parser.error(str(err))
    fmt = args.format
    if fmt is None:
        fmt = 'graph' if (args.input or '').endswith('.json') else 'ode'
    emit = args.emit
    if emit == 'csv' and args.command != 'simulate':
        parser.error('--csv only applies to simulate')
    if emit is None:
        emit = {'simulate': 'csv', 'transform': 'dsl'}.get(args.command, 'json')
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s',
                        stream=sys.stderr)
    return RunConfig(args.command, args.input, fmt, args.seed, opts, args.out,
                     emit, args.x0, args.t_end, args.pairs, args.points)


def run(cfg):
    """
    Run a command; return ``(exit status, text)``.

    ``text`` is the serialized report, or the DSL / CSV output of
    ``transform`` and ``simulate``; it is None when nothing is to be written.
    Exit statuses 2, 3 and 5 come with no report.
    """
    try:
        status, result = COMMANDS[cfg.command](cfg)
    except (UsageError, DslError) as err:
        LOG.error('%s', err)
        return EXIT_USAGE, None
    except IntegrationError as err:
        LOG.error('integration failed: %s', err)
        return EXIT_INTEGRATION, None
    except (LoopBudgetError, FieldEvaluationError, IncoherentError,
            ArithmeticError, ValueError, RuntimeError) as err:
        LOG.error('analysis failed: %s', err)
        return EXIT_ANALYSIS, None
    if isinstance(result, str):
        return status, result
    return status, dumps({
        'command': cfg.command,
        'version': __version__,
        'config': cfg,
        'status': status,
        'result': result,
    })


def main(argv=None):
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return exc.code
    status, text = run(cfg)
    if status in (EXIT_USAGE, EXIT_ANALYSIS, EXIT_INTEGRATION):
        print('coherent4odes: %s failed, see messages above' % cfg.command,
              file=sys.stderr)
    if text is not None:
        write_output(text, cfg.output)
    return status
