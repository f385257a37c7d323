"""
Numerical dynamics: integration, omega limits, equilibria,
and sampled checks of monotonicity and (semi)conjugacy.
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar, root

from .config import DEFAULT_SEED, Tolerances
from .sysdsl import DomainClass, FieldEvaluationError, eval_field, \
    field_function, field_many

LOG = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """The initial point is invalid, or the field stopped being finite."""


class Termination(Enum):
    T_END = 't_end'
    BLOW_UP = 'blow_up'
    DOMAIN_EXIT = 'domain_exit'


@dataclass(frozen=True)
class Trajectory(object):
    """
    ``states[k]`` is the state at ``times[k]``;
    ``dense`` interpolates between them (None for fixed-step runs).
    """
    times: np.ndarray
    states: np.ndarray
    terminated_by: Termination
    dense: object = None

    @property
    def final(self):
        return self.states[-1]

    @property
    def t_final(self):
        return float(self.times[-1])

    def at(self, t):
        """States at times ``t`` (within ``[0, t_final]``), one row each."""
        return np.atleast_2d(self.dense(np.asarray(t, dtype=float)).T)


def _check_start(s, x0, opts):
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (s.n,):
        raise IntegrationError('Expected an initial point of dimension %d, '
                               'got %r' % (s.n, x0.shape))
    if not s.domain.contains(x0, opts.boundary_tol):
        raise IntegrationError('%r is outside the domain' % (tuple(x0),))
    try:
        eval_field(s, x0)
    except FieldEvaluationError as err:
        raise IntegrationError(str(err))
    return x0


def _events(s, opts):
    def blow_up(t, x):
        return opts.blowup - np.max(np.abs(x))
    blow_up.terminal = True
    blow_up.direction = -1
    events = [blow_up]

    lower = np.array([b.lower for b in s.domain.bounds])
    upper = np.array([b.upper for b in s.domain.bounds])
    if np.any(np.isfinite(lower)) or np.any(np.isfinite(upper)):
        finite_lower = np.isfinite(lower)
        finite_upper = np.isfinite(upper)
        def domain_exit(t, x):
            slack = np.concatenate([x[finite_lower] - lower[finite_lower],
                                    upper[finite_upper] - x[finite_upper]])
            return np.min(slack) + opts.boundary_tol
        domain_exit.terminal = True
        domain_exit.direction = -1
        events.append(domain_exit)
    return events


def _time_grid(t_end, dt):
    count = int(math.floor(t_end / dt + 1e-9))
    times = dt * np.arange(count + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, t_end):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


def integrate(s, x0, t_end, opts=None, dt=None):
    """
    Integrate ``s`` from ``x0`` over ``[0, t_end]``
    with the adaptive Dormand-Prince pair, sampling every ``dt``.

    Stop early when the state exceeds ``blowup`` or leaves the domain
    by more than ``boundary_tol``.
    """
    opts = opts or Tolerances()
    dt = dt or opts.dt
    if not t_end > 0:
        raise IntegrationError('t_end must be positive, got %r' % t_end)
    x0 = _check_start(s, x0, opts)
    f = field_function(s)
    events = _events(s, opts)
    sol = solve_ivp(lambda t, x: f(x), (0.0, float(t_end)), x0,
                    method='RK45', t_eval=_time_grid(t_end, dt),
                    events=events, dense_output=True,
                    rtol=opts.rtol, atol=opts.atol)
    if sol.status < 0:
        raise IntegrationError(sol.message)
    times, states = sol.t, sol.y.T
    terminated_by = Termination.T_END
    if sol.status == 1:
        k = next(k for k, te in enumerate(sol.t_events) if len(te))
        terminated_by = (Termination.BLOW_UP, Termination.DOMAIN_EXIT)[k]
        t_stop = sol.t_events[k][0]
        if not len(times) or t_stop > times[-1]:
            times = np.append(times, t_stop)
            states = np.vstack([states, sol.y_events[k][0]])
    if not np.all(np.isfinite(states)):
        raise IntegrationError('field is not finite along the trajectory')
    LOG.debug('integrated to t=%g (%s)', times[-1], terminated_by.value)
    return Trajectory(times, states, terminated_by, sol.sol)


def integrate_fixed(s, x0, t_end, h):
    """Classical fourth order Runge-Kutta with fixed step ``h``."""
    f = field_function(s)
    steps = int(round(t_end / h))
    x = np.asarray(x0, dtype=float)
    times = [0.0]
    states = [x]
    for k in range(steps):
        k1 = f(x)
        k2 = f(x + h / 2 * k1)
        k3 = f(x + h / 2 * k2)
        k4 = f(x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append((k + 1) * h)
        states.append(x)
    return Trajectory(np.array(times), np.array(states), Termination.T_END)


# omega limits

class Verdict(Enum):
    EQUILIBRIUM = 'equilibrium'
    CYCLE = 'cycle'
    UNRESOLVED = 'unresolved'
    UNBOUNDED = 'unbounded'


@dataclass(frozen=True)
class OmegaEstimate(object):
    verdict: Verdict
    point: tuple = None
    period: float = None
    samples: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    def export_as_dict(self):
        ret = {'verdict': self.verdict.value,
               'diagnostics': dict(self.diagnostics)}
        if self.point is not None:
            ret['point'] = list(self.point)
        if self.period is not None:
            ret['period'] = self.period
            ret['samples'] = [list(x) for x in self.samples]
        return ret


def omega_samples(estimate):
    if estimate.verdict is Verdict.EQUILIBRIUM:
        return [estimate.point]
    if estimate.verdict is Verdict.CYCLE:
        return list(estimate.samples)
    return []


def _near_returns(traj, start, reference, speeds, opts):
    """Times after ``start`` where the orbit comes back within ``cyc_tol``
    of ``reference``, refined on the dense output."""
    times, states = traj.times, traj.states
    dist = np.max(np.abs(states - reference), axis=1)
    dt = times[1] - times[0]
    k = np.arange(max(start, 1), len(times) - 2)
    candidates = k[(dist[k] <= dist[k - 1]) & (dist[k] < dist[k + 1])
                   & (dist[k] <= np.maximum(opts.cyc_tol, 2 * dt * speeds[k]))]
    ret = []
    for k in candidates:
        result = minimize_scalar(
            lambda t: np.sum((traj.at(t)[0] - reference) ** 2),
            bounds=(times[k - 1], times[k + 1]), method='bounded',
            options={'xatol': 1e-10})
        distance = np.max(np.abs(traj.at(result.x)[0] - reference))
        if distance <= opts.cyc_tol:
            ret.append((float(result.x), float(distance)))
    return ret


def _polish(s, f, x, opts, diagnostics):
    """
    Root of the field near a settled endpoint ``x``, or None.

    The endpoint of an adaptive run only reaches a residual of the order
    of ``rtol``; the root must lie within ``drift_tol`` of it.
    """
    with np.errstate(all='ignore'):
        try:
            result = root(f, x, method='hybr')
        except (ValueError, FieldEvaluationError) as err:
            LOG.debug('polishing %r failed: %s', tuple(x), err)
            return None
    p = result.x
    if not np.all(np.isfinite(p)) \
    or not s.domain.contains(p, opts.boundary_tol):
        return None
    residual = float(np.max(np.abs(f(p))))
    shift = float(np.max(np.abs(p - x)))
    diagnostics.update({'polished_residual': residual, 'polish_shift': shift})
    if residual <= opts.eq_tol and shift <= opts.drift_tol:
        return p
    return None


def estimate_omega_limit(s, x0, opts=None):
    """
    Integrate over ``[0, t_omega]`` and classify the end of the orbit.

    A cycle needs at least three near-returns to the final state
    with consistent periods, a field speed above ``min_speed``
    and an excursion well above ``cyc_tol`` along the period.
    """
    opts = opts or Tolerances()
    traj = integrate(s, x0, opts.t_omega, opts)
    if traj.terminated_by is Termination.BLOW_UP:
        return OmegaEstimate(Verdict.UNBOUNDED,
                             diagnostics={'t_stop': traj.t_final})
    if traj.terminated_by is Termination.DOMAIN_EXIT:
        return OmegaEstimate(Verdict.UNRESOLVED,
                             diagnostics={'t_stop': traj.t_final,
                                          'reason': 'domain_exit'})
    f = field_function(s)
    times, states = traj.times, traj.states
    final = traj.final
    residual = float(np.max(np.abs(f(final))))
    tail = states[times >= traj.t_final * (1 - opts.tail_fraction)]
    drift = float(np.max(np.abs(tail - final)))
    diagnostics = {'residual': residual, 'drift': drift}
    if drift <= opts.drift_tol:
        point = final if residual <= opts.eq_tol \
            else _polish(s, f, final, opts, diagnostics)
        if point is not None:
            return OmegaEstimate(Verdict.EQUILIBRIUM,
                                 tuple(float(v) for v in point),
                                 diagnostics=diagnostics)

    start = int(np.searchsorted(times, traj.t_final * (1 - opts.cycle_fraction)))
    speeds = np.max(np.abs(field_many(s, states)), axis=1)
    returns = _near_returns(traj, start, final, speeds, opts)
    diagnostics['returns'] = len(returns)
    if len(returns) >= 3:
        marks = [t for t, _ in returns] + [traj.t_final]
        periods = np.diff(marks)
        # the last returns are the most converged
        periods = periods[-min(len(periods), 8):]
        period = float(np.mean(periods))
        spread = float((np.max(periods) - np.min(periods)) / period)
        last = (times >= traj.t_final - period)
        excursion = float(np.max(np.abs(states[last] - final)))
        min_speed = float(np.min(speeds[last]))
        diagnostics.update({'period_spread': spread, 'excursion': excursion,
                            'min_speed': min_speed,
                            'recurrence': max(d for _, d in returns[-len(periods):])})
        if spread <= opts.period_spread and min_speed >= opts.min_speed \
        and excursion >= 10 * opts.cyc_tol:
            samples = traj.at(np.linspace(traj.t_final - period,
                                          traj.t_final, 64, endpoint=False))
            return OmegaEstimate(Verdict.CYCLE, period=period,
                                 samples=tuple(tuple(float(v) for v in x)
                                               for x in samples),
                                 diagnostics=diagnostics)
    return OmegaEstimate(Verdict.UNRESOLVED, diagnostics=diagnostics)


# equilibria

def _grid(domain, radius, count):
    axes = []
    for b in domain.bounds:
        lo, hi = b.finite(radius)
        if not b.lower_closed:
            lo += (hi - lo) * 1e-3
        if not b.upper_closed:
            hi -= (hi - lo) * 1e-3
        axes.append(np.linspace(lo, hi, count) if hi > lo else np.array([lo]))
    return [np.array(x) for x in product(*axes)]


def sample_box(domain, radius, rng, size):
    box = np.array(domain.search_box(radius))
    return box[:, 0] + rng.uniform(size=(size, domain.n)) * (box[:, 1] - box[:, 0])


def find_equilibria(s, opts=None, seed=DEFAULT_SEED):
    """
    Equilibria found by Powell's hybrid method from a grid over the
    search box and from the ends of a few trajectories;
    sorted and deduplicated within ``eq_cluster_tol``.
    """
    opts = opts or Tolerances()
    f = field_function(s)
    count = max(2, min(opts.grid_points, int(64 ** (1.0 / s.n))))
    starts = _grid(s.domain, opts.search_radius, count)
    rng = np.random.default_rng(seed)
    for x0 in sample_box(s.domain, opts.search_radius, rng, opts.eq_tails):
        try:
            starts.append(integrate(s, x0, opts.eq_settle, opts).final)
        except (IntegrationError, FieldEvaluationError) as err:
            LOG.debug('no tail from %r: %s', x0, err)

    found = []
    for x0 in starts:
        with np.errstate(all='ignore'):
            try:
                result = root(f, x0, method='hybr')
            except (ValueError, FieldEvaluationError):
                continue
        p = result.x
        if not np.all(np.isfinite(p)) \
        or not s.domain.contains(p, opts.boundary_tol):
            continue
        residual = np.max(np.abs(f(p)))
        if not residual <= opts.eq_tol:
            continue
        if all(np.max(np.abs(p - q)) > opts.eq_cluster_tol for q in found):
            found.append(p)
    ret = sorted(tuple(float(v) + 0.0 for v in p) for p in found)
    LOG.debug('%d equilibria found from %d starts', len(ret), len(starts))
    return ret


# order

class Order(Enum):
    EQUAL = 'equal'
    GEQ = 'geq'
    LEQ = 'leq'
    INCOMPARABLE = 'incomparable'


@dataclass(frozen=True)
class OrderRelation(object):
    verdict: Order
    strict_dominance: bool


def order_compare(x, y, margin=0.0):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError('Can not compare vectors of shapes %r and %r'
                         % (x.shape, y.shape))
    diff = x - y
    if np.all(diff == 0):
        verdict = Order.EQUAL
    elif np.all(diff >= 0):
        verdict = Order.GEQ
    elif np.all(diff <= 0):
        verdict = Order.LEQ
    else:
        verdict = Order.INCOMPARABLE
    strict = bool(np.min(diff) > margin or np.max(diff) < -margin)
    return OrderRelation(verdict, strict)


@dataclass(frozen=True)
class AccessFlags(object):
    above: bool
    below: bool


def accessibility(domain, p):
    """Whether ``p`` is strongly accessible from above and from below."""
    if not domain.contains(p):
        raise ValueError('%r is outside the domain' % (tuple(p),))
    if domain.domain_class in (DomainClass.C1, DomainClass.C2):
        return AccessFlags(True, True)
    return AccessFlags(all(v < b.upper for b, v in zip(domain.bounds, p)),
                       all(v > b.lower for b, v in zip(domain.bounds, p)))


# checks

@dataclass(frozen=True)
class CheckReport(object):
    """
    Outcome of a sampled check. ``status`` is ``pass``, ``fail`` or
    ``skipped`` (the check does not apply).
    """
    name: str
    status: str
    max_deviation: float = 0.0
    violations: tuple = ()
    failures: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == 'pass'

    def export_as_dict(self):
        return {
            'name': self.name,
            'status': self.status,
            'max_deviation': self.max_deviation,
            'violations': list(self.violations),
            'failures': list(self.failures),
            'details': dict(self.details),
        }


def default_t_grid():
    return np.linspace(0.0, 10.0, 101)


def _ordered_pairs(domain, radius, rng, n_pairs, orthant):
    a = sample_box(domain, radius, rng, n_pairs)
    b = sample_box(domain, radius, rng, n_pairs)
    upper, lower = np.maximum(a, b), np.minimum(a, b)
    flip = np.asarray(orthant) < 0
    return (np.where(flip, lower, upper), np.where(flip, upper, lower))


def _flows(s, x0s, t_grid, opts):
    """Each trajectory sampled on ``t_grid``, or the reason it failed."""
    t_end = float(t_grid[-1])
    for x0 in x0s:
        try:
            traj = integrate(s, x0, t_end, opts)
        except (IntegrationError, FieldEvaluationError) as err:
            yield None, str(err)
            continue
        if traj.terminated_by is not Termination.T_END:
            yield None, traj.terminated_by.value
            continue
        yield traj.at(t_grid), None


def check_monotone(s, n_pairs=10, t_grid=None, tol=None, opts=None,
                   seed=DEFAULT_SEED, region=None, pairs=None, orthant=None):
    """
    Integrate ordered pairs and report every pair whose order breaks.

    With ``orthant`` (a sign vector ``K``) pairs are ordered by
    ``K_i (x_i - y_i) >= 0``. ``region`` (a DomainBox) restricts sampling;
    ``pairs`` replaces it.
    """
    opts = opts or Tolerances()
    tol = opts.order_tol if tol is None else tol
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, float)
    orthant = np.ones(s.n) if orthant is None else np.asarray(orthant, float)
    if pairs is None:
        rng = np.random.default_rng(seed)
        xs, ys = _ordered_pairs(region or s.domain, opts.search_radius, rng,
                                n_pairs, orthant)
    else:
        xs = np.array([x for x, _ in pairs], dtype=float)
        ys = np.array([y for _, y in pairs], dtype=float)
    violations = []
    failures = []
    worst = 0.0
    flows = zip(_flows(s, xs, t_grid, opts), _flows(s, ys, t_grid, opts))
    for k, ((fx, ex), (fy, ey)) in enumerate(flows):
        if fx is None or fy is None:
            failures.append({'pair': k, 'reason': ex or ey})
            continue
        gap = orthant * (fx - fy)
        worst = max(worst, float(-np.min(gap)))
        bad = np.argwhere(gap < -tol)
        if len(bad):
            t, i = bad[0]
            violations.append({'pair': k, 't': float(t_grid[t]),
                               'coordinate': int(i) + 1,
                               'x0': xs[k].tolist(), 'y0': ys[k].tolist(),
                               'amount': float(-gap[t, i])})
    LOG.debug('monotone check: %d violations, %d failures',
              len(violations), len(failures))
    return CheckReport('monotone', 'fail' if violations else 'pass', worst,
                       tuple(violations), tuple(failures),
                       {'pairs': len(xs), 'tol': tol})


def _compare_flows(name, s, g, x0s, to_g, project, t_grid, tol, opts):
    worst = 0.0
    failures = []
    for k, x0 in enumerate(x0s):
        (fs, es), = _flows(s, [x0], t_grid, opts)
        (fg, eg), = _flows(g, [to_g(x0)], t_grid, opts)
        if fs is None or fg is None:
            failures.append({'point': k, 'reason': es or eg})
            continue
        worst = max(worst, float(np.max(np.abs(project(fs) - fg))))
    status = 'pass' if worst <= tol and not failures else 'fail'
    return CheckReport(name, status, worst, (), tuple(failures),
                       {'points': len(x0s), 'tol': tol})


def check_conjugacy(s, change, n_points=20, t_grid=None, tol=None,
                    opts=None, seed=DEFAULT_SEED):
    """Compare ``L(Phi_t(x))`` with the transformed flow from ``L x``."""
    from .cascade import apply_change
    opts = opts or Tolerances()
    tol = opts.conj_tol if tol is None else tol
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, float)
    g = apply_change(s, change)
    x0s = sample_box(s.domain, opts.search_radius,
                   np.random.default_rng(seed), n_points)
    return _compare_flows('conjugacy', s, g, x0s, change.forward,
                          change.forward, t_grid, tol, opts)


def check_semiconjugacy(s, d, n_points=20, t_grid=None, tol=None,
                        opts=None, seed=DEFAULT_SEED):
    """Compare the first block of the transformed flow with the flow of
    the top system from the projected point."""
    from .cascade import BlockCouplingError, apply_change, top_system
    opts = opts or Tolerances()
    tol = opts.conj_tol if tol is None else tol
    t_grid = default_t_grid() if t_grid is None else np.asarray(t_grid, float)
    g = d.system if d.system is not None else apply_change(s, d.change)
    try:
        top = top_system(d)
    except BlockCouplingError as err:
        return CheckReport('semiconjugacy', 'fail', math.inf,
                           failures=({'reason': str(err)},))
    n1 = d.top_index
    y0s = sample_box(g.domain, opts.search_radius,
                   np.random.default_rng(seed), n_points)
    return _compare_flows('semiconjugacy', g, top, y0s,
                          lambda y: y[:n1], lambda flow: flow[:, :n1],
                          t_grid, tol, opts)


def check_fibres(d, opts=None, seed=DEFAULT_SEED):
    """
    Check inheritance by the top system and by the fibre system
    over each equilibrium found for the top system.
    """
    from .cascade import check_inheritance, fibre_systems
    opts = opts or Tolerances()
    if d.system is None:
        raise ValueError('Graph-only decomposition has no fibre systems')
    violations = [{'problem': problem} for problem
                  in check_inheritance(d, None, opts, seed).problems]
    fibres = fibre_systems(d, opts, seed)
    for fibre in fibres:
        violations.extend({'p': list(fibre.p), 'problem': problem}
                          for problem
                          in check_inheritance(d, fibre, opts, seed).problems)
    return CheckReport('inheritance', 'fail' if violations else 'pass',
                       violations=tuple(violations),
                       details={'fibres': [list(f.p) for f in fibres]})


def check_unordered_omega(points, margin=None):
    """Fail on the first pair of points related by strict dominance."""
    if margin is None:
        margin = Tolerances().margin
    for x, y in combinations(points, 2):
        if order_compare(x, y, margin).strict_dominance:
            return CheckReport('unordered_omega', 'fail', violations=(
                {'pair': [list(map(float, x)), list(map(float, y))]},))
    return CheckReport('unordered_omega', 'pass',
                       details={'points': len(points), 'margin': margin})


def check_global_convergence(s, n_points=5, opts=None, seed=DEFAULT_SEED):
    """
    When a single equilibrium is found, every sampled orbit must converge
    to it; skipped otherwise.
    """
    opts = opts or Tolerances()
    equilibria = find_equilibria(s, opts, seed)
    if len(equilibria) != 1:
        return CheckReport('global_convergence', 'skipped',
                           details={'equilibria': [list(p) for p in equilibria]})
    p = np.array(equilibria[0])
    rng = np.random.default_rng(seed)
    violations = []
    worst = 0.0
    for x0 in sample_box(s.domain, opts.search_radius, rng, n_points):
        estimate = estimate_omega_limit(s, x0, opts)
        if estimate.verdict is not Verdict.EQUILIBRIUM:
            violations.append({'x0': x0.tolist(),
                               'verdict': estimate.verdict.value})
            continue
        distance = float(np.max(np.abs(np.array(estimate.point) - p)))
        worst = max(worst, distance)
        if distance > opts.eq_cluster_tol:
            violations.append({'x0': x0.tolist(), 'verdict': 'equilibrium',
                               'distance': distance})
    return CheckReport('global_convergence', 'fail' if violations else 'pass',
                       worst, tuple(violations),
                       details={'equilibria': [list(equilibria[0])]})
