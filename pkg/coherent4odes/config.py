"""
Numerical options shared by the analysis and simulation routines.

:class:`Tolerances` is a proxy over a plain dict of explicit values;
every option falls back to its default when it is not set.
"""
import json
import math

_NOT_SET = object()


def _positive(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) \
        and math.isfinite(value) and value > 0

def _positive_int(value):
    return isinstance(value, int) and not isinstance(value, bool) and value > 0

def _fraction(value):
    return _positive(value) and value <= 1


class _Option(property):
    """A property remembering its default and its validity check."""


def _make_option_property(name, default, check_value, doc):
    def getter(self):
        ret = self._data.get(name, _NOT_SET)
        if ret is _NOT_SET:
            ret = default
        return ret

    def setter(self, value):
        if not check_value(value):
            raise ValueError('Invalid value for Tolerances.%s: %r'
                             % (name, value))
        self._data[name] = value

    def deleter(self):
        self._data.pop(name, None)

    prop = _Option(getter, setter, deleter, doc)
    prop.option_default = default
    prop.option_check = check_value
    return prop


class Tolerances(object):
    """Tolerances and sample sizes, with documented defaults."""

    def __init__(self, data=None):
        self._data = {}
        for name, value in (data or {}).items():
            if name not in OPTIONS:
                raise ValueError('Unknown tolerance %r' % name)
            setattr(self, name, value)

    @classmethod
    def from_dict(cls, dictobj):
        return cls(dict(dictobj))

    @classmethod
    def from_str(cls, json_str):
        return cls(json.loads(json_str))

    @classmethod
    def from_overrides(cls, overrides, base=None):
        """
        Build from ``name=value`` strings (as given on the command line).

        Values are coerced to the type of the option's default.
        """
        data = dict(base._data) if base is not None else {}
        for item in overrides:
            name, sep, text = item.partition('=')
            name = name.strip()
            if not sep or name not in OPTIONS:
                raise ValueError('Unknown tolerance %r' % name)
            default = OPTIONS[name].option_default
            try:
                data[name] = int(text) if isinstance(default, int) \
                    else float(text)
            except ValueError:
                raise ValueError('Invalid value for tolerance %s: %r'
                                 % (name, text))
        return cls(data)

    def replace(self, **kw):
        data = dict(self._data)
        data.update(kw)
        return Tolerances(data)

    def export_as_dict(self):
        return dict((name, getattr(self, name)) for name in sorted(OPTIONS))

    def __eq__(self, other):
        return isinstance(other, Tolerances) \
            and self.export_as_dict() == other.export_as_dict()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'Tolerances(%r)' % self._data

    # integration

    rtol = _make_option_property('rtol', 1e-8, _positive,
        "Relative tolerance of the adaptive Runge-Kutta pair.")
    atol = _make_option_property('atol', 1e-12, _positive,
        "Absolute tolerance of the adaptive Runge-Kutta pair.")
    dt = _make_option_property('dt', 0.01, _positive,
        "Spacing of recorded trajectory samples.")
    blowup = _make_option_property('blowup', 1e8, _positive,
        "Sup-norm above which a trajectory is declared unbounded.")
    boundary_tol = _make_option_property('boundary_tol', 1e-9, _positive,
        "Distance outside the closed domain box tolerated before domain exit.")

    # omega limits

    t_omega = _make_option_property('t_omega', 500.0, _positive,
        "Integration horizon used to estimate omega limit sets.")
    eq_tol = _make_option_property('eq_tol', 1e-9, _positive,
        "Sup-norm of the field below which a point is an equilibrium.")
    drift_tol = _make_option_property('drift_tol', 1e-7, _positive,
        "Largest state drift over the tail for an equilibrium verdict.")
    cyc_tol = _make_option_property('cyc_tol', 1e-4, _positive,
        "Largest recurrence distance for a near-return.")
    min_speed = _make_option_property('min_speed', 1e-6, _positive,
        "Smallest field norm along a cycle.")
    period_spread = _make_option_property('period_spread', 0.05, _fraction,
        "Largest relative spread of successive return periods.")
    tail_fraction = _make_option_property('tail_fraction', 0.1, _fraction,
        "Fraction of the horizon inspected for equilibrium drift.")
    cycle_fraction = _make_option_property('cycle_fraction', 0.5, _fraction,
        "Fraction of the horizon searched for near-returns.")

    # equilibria

    eq_cluster_tol = _make_option_property('eq_cluster_tol', 1e-6, _positive,
        "Equilibria closer than this are merged.")
    search_radius = _make_option_property('search_radius', 10.0, _positive,
        "Half-width used in place of infinite bounds when searching.")
    eq_tails = _make_option_property('eq_tails', 8, _positive_int,
        "Number of trajectory tails used as extra Newton starts.")
    eq_settle = _make_option_property('eq_settle', 20.0, _positive,
        "Integration time of those trajectories.")

    # sign analysis

    bigbox = _make_option_property('bigbox', 1e6, _positive,
        "Replacement for infinite bounds in interval and sampling analysis.")
    grid_points = _make_option_property('grid_points', 5, _positive_int,
        "Grid points per axis for sign sampling.")
    grid_cap = _make_option_property('grid_cap', 5 ** 6, _positive_int,
        "Largest number of grid points for sign sampling.")
    random_points = _make_option_property('random_points', 256, _positive_int,
        "Number of pseudorandom points for sign sampling.")
    loop_budget = _make_option_property('loop_budget', 100000, _positive_int,
        "Largest number of simple loops enumerated before giving up.")

    # verification

    order_tol = _make_option_property('order_tol', 1e-7, _positive,
        "Tolerance on order violations in monotonicity checks.")
    margin = _make_option_property('margin', 1e-6, _positive,
        "Margin of strict dominance.")
    conj_tol = _make_option_property('conj_tol', 1e-6, _positive,
        "Tolerance of conjugacy and semiconjugacy checks.")
    jacobian_tol = _make_option_property('jacobian_tol', 1e-12, _positive,
        "Largest numeric Jacobian entry allowed in a forbidden block.")
    jacobian_points = _make_option_property('jacobian_points', 50, _positive_int,
        "Sample points for numeric Jacobian checks.")
    fd_step = _make_option_property('fd_step', 1e-6, _positive,
        "Step of central finite differences.")


OPTIONS = dict((name, value) for name, value in vars(Tolerances).items()
               if isinstance(value, _Option))

DEFAULT_SEED = 42
