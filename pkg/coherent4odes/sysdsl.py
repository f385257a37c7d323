"""
ODE systems: the text DSL, symbolic derivatives and sign analysis.

A system is written one statement per line::

    # a positive feedback loop
    param k = 2
    var x2 in [0, inf)
    x1' = -x1 + tanh(k*x2)
    x2' = x1 - x2

See :doc:`syntax` for the grammar.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import islice, product
import logging
import math
import re

import numpy as np
import sympy as sp
from sympy.printing.precedence import precedence
from sympy.printing.str import StrPrinter

from .config import DEFAULT_SEED, Tolerances
from .functions import DIRECTORY as function_directory
from .functions import NUMPY_IMPLEMENTATIONS
from .interval import Interval, IntervalDomainError, sqrt_depth
from .interval import evaluate as interval_evaluate

LOG = logging.getLogger(__name__)

INF = float('inf')
KEYWORDS = ('var', 'param', 'in', 'inf')
VARIABLE_NAME = re.compile(r'^x([1-9][0-9]*)$')


class DslError(ValueError):
    """A system definition could not be parsed."""

    def __init__(self, kind, message, line, column):
        ValueError.__init__(self, 'line %d, column %d: %s'
                                  % (line, column, message))
        self.kind = kind
        self.line = line
        self.column = column


class FieldEvaluationError(ValueError):
    """The vector field is undefined (or not finite) at a point."""

    def __init__(self, coordinate, point):
        ValueError.__init__(self, 'field component %d is not finite at %r'
                                  % (coordinate, tuple(point)))
        self.coordinate = coordinate
        self.point = tuple(point)


@lru_cache(maxsize=None)
def variable(k):
    """The symbol of the ``k``-th coordinate (1-based)."""
    return sp.Symbol('x%d' % k)

def variables(n):
    return tuple(variable(k) for k in range(1, n + 1))


# domains

class DomainClass(Enum):
    C1 = 'C1'
    C2 = 'C2'
    C3 = 'C3'
    C4 = 'C4'
    OTHER = 'OTHER'


@dataclass(frozen=True)
class Bounds(object):
    """An interval of the domain box; infinite endpoints are always open."""
    lower: float = -INF
    upper: float = INF
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError('Lower bound %r exceeds upper bound %r'
                             % (self.lower, self.upper))
        if math.isinf(self.lower) and self.lower_closed \
        or math.isinf(self.upper) and self.upper_closed:
            raise ValueError('Infinite endpoints must be open')
        if self.lower == self.upper \
        and not (self.lower_closed and self.upper_closed):
            raise ValueError('Empty interval')

    @property
    def is_unbounded(self):
        return math.isinf(self.lower) and math.isinf(self.upper)

    @property
    def is_half_bounded(self):
        return math.isinf(self.lower) != math.isinf(self.upper)

    @property
    def is_bounded(self):
        return not (math.isinf(self.lower) or math.isinf(self.upper))

    @property
    def is_open(self):
        return not (self.lower_closed or self.upper_closed)

    @property
    def is_default(self):
        return self.is_unbounded

    def reflect(self):
        return Bounds(-self.upper, -self.lower,
                      self.upper_closed, self.lower_closed)

    def contains(self, value, tol=0.0):
        if self.lower_closed or tol > 0:
            above = value >= self.lower - tol
        else:
            above = value > self.lower
        if self.upper_closed or tol > 0:
            below = value <= self.upper + tol
        else:
            below = value < self.upper
        return above and below

    def finite(self, radius):
        """Endpoints with infinities replaced by ``-radius`` / ``radius``."""
        lo = -radius if math.isinf(self.lower) else self.lower
        hi = radius if math.isinf(self.upper) else self.upper
        return lo, max(lo, hi)

    def text(self):
        return '%s%s, %s%s' % ('[' if self.lower_closed else '(',
                               _endpoint_text(self.lower),
                               _endpoint_text(self.upper),
                               ']' if self.upper_closed else ')')

def _endpoint_text(value):
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if float(value).is_integer():
        return '%d' % value
    return repr(float(value))


@dataclass(frozen=True)
class DomainBox(object):
    """A product of :class:`Bounds`, one per coordinate."""
    bounds: tuple

    @classmethod
    def whole(cls, n):
        return cls(tuple(Bounds() for _ in range(n)))

    @property
    def n(self):
        return len(self.bounds)

    @property
    def domain_class(self):
        bounds = self.bounds
        if all(b.is_unbounded for b in bounds):
            return DomainClass.C1
        if all(b.lower == 0 and b.lower_closed and math.isinf(b.upper)
               for b in bounds):
            return DomainClass.C3
        if sum(b.is_half_bounded for b in bounds) == 1 \
        and all(b.is_unbounded or b.is_half_bounded for b in bounds):
            return DomainClass.C2
        if all(b.is_bounded for b in bounds):
            return DomainClass.C4
        return DomainClass.OTHER

    @property
    def is_open(self):
        return all(b.is_open for b in self.bounds)

    def contains(self, x, tol=0.0):
        return len(x) == self.n \
            and all(b.contains(v, tol) for b, v in zip(self.bounds, x))

    def analysis_box(self, bigbox):
        return [b.finite(bigbox) for b in self.bounds]

    def search_box(self, radius):
        return [b.finite(radius) for b in self.bounds]

    def select(self, indices):
        """The sub-box of the given 1-based coordinates."""
        return DomainBox(tuple(self.bounds[i - 1] for i in indices))

    def reflect(self, i):
        """The box with coordinate ``i`` (1-based) mirrored through 0."""
        bounds = list(self.bounds)
        bounds[i - 1] = bounds[i - 1].reflect()
        return DomainBox(tuple(bounds))


# systems

@dataclass(frozen=True)
class SystemDef(object):
    """
    An autonomous ODE system ``x' = F(x)`` on a domain box.

    ``fields`` holds one sympy expression per coordinate,
    over the symbols returned by :func:`variables`;
    ``params`` is a tuple of ``(name, value)`` pairs,
    already substituted in the fields.
    """
    fields: tuple
    domain: DomainBox = None
    params: tuple = ()

    def __post_init__(self):
        fields = tuple(sp.sympify(f) for f in self.fields)
        object.__setattr__(self, 'fields', fields)
        if not fields:
            raise ValueError('A system needs at least one coordinate')
        if self.domain is None:
            object.__setattr__(self, 'domain', DomainBox.whole(len(fields)))
        if self.domain.n != len(fields):
            raise ValueError('Domain has %d coordinates, system has %d'
                             % (self.domain.n, len(fields)))
        allowed = set(variables(len(fields)))
        for i, expr in enumerate(fields, 1):
            free = expr.free_symbols - allowed
            if free:
                raise ValueError('Field %d references unknown names %s'
                                 % (i, sorted(str(s) for s in free)))

    @property
    def n(self):
        return len(self.fields)

    @property
    def param_dict(self):
        return dict(self.params)


@dataclass(frozen=True)
class _Token(object):
    kind: str
    text: str
    column: int

_TOKENS = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),'=\[\]])
""", re.VERBOSE)


def _tokenize(text, line):
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKENS.match(text, pos)
        if match is None:
            raise DslError('syntax', 'unexpected character %r' % text[pos],
                           line, pos + 1)
        if match.lastgroup != 'space':
            tokens.append(_Token(match.lastgroup, match.group(), pos + 1))
        pos = match.end()
    tokens.append(_Token('end', '', len(text) + 1))
    return tokens


def _number(text):
    if re.match(r'^\d+$', text):
        return sp.Integer(text)
    return sp.Float(text)


class _LineParser(object):
    """Parse one statement; expressions are parsed by precedence climbing."""

    # left binding powers
    BINARY = {'+': 10, '-': 10, '*': 20, '/': 20, '^': 30}
    UNARY_MINUS = 25

    def __init__(self, tokens, line, names=None, n=None):
        self.tokens = tokens
        self.pos = 0
        self.line = line
        self.names = names or {}
        self.n = n
        self.exponent_checks = []

    @property
    def token(self):
        return self.tokens[self.pos]

    def advance(self):
        token = self.tokens[self.pos]
        if token.kind != 'end':
            self.pos += 1
        return token

    def error(self, kind, message, token=None):
        token = token or self.token
        return DslError(kind, message, self.line, token.column)

    def expect(self, text):
        token = self.token
        if token.text != text or token.kind not in ('op', 'name'):
            raise self.error('syntax', 'expected %r, found %r'
                             % (text, token.text or 'end of line'))
        return self.advance()

    def expect_end(self):
        if self.token.kind != 'end':
            raise self.error('syntax', 'unexpected %r' % self.token.text)

    # statements

    def signed_number(self):
        negative = False
        if self.token.text == '-':
            self.advance()
            negative = True
        token = self.token
        if token.kind == 'number':
            self.advance()
            value = _number(token.text)
        elif token.kind == 'name' and token.text == 'inf':
            self.advance()
            value = sp.oo
        else:
            raise self.error('syntax', 'expected a number, found %r'
                             % (token.text or 'end of line'))
        return -value if negative else value

    def interval(self):
        opening = self.token
        if opening.text not in ('[', '('):
            raise self.error('syntax', "expected '[' or '('")
        self.advance()
        lower = self.signed_number()
        self.expect(',')
        upper = self.signed_number()
        closing = self.token
        if closing.text not in (']', ')'):
            raise self.error('syntax', "expected ']' or ')'")
        self.advance()
        try:
            return Bounds(float(lower), float(upper),
                          opening.text == '[', closing.text == ']')
        except ValueError as err:
            raise self.error('bad-interval', str(err), opening)

    # expressions

    def expression(self, rbp=0):
        left = self.prefix(self.advance())
        while rbp < self.BINARY.get(self.token.text, 0) \
        and self.token.kind == 'op':
            left = self.infix(self.advance(), left)
        return left

    def prefix(self, token):
        if token.kind == 'number':
            return _number(token.text)
        if token.text == '-' and token.kind == 'op':
            return -self.expression(self.UNARY_MINUS)
        if token.text == '(' and token.kind == 'op':
            ret = self.expression()
            self.expect(')')
            return ret
        if token.kind == 'name':
            if self.token.text == '(':
                return self.call(token)
            return self.name(token)
        raise self.error('syntax', 'unexpected %r' % (token.text or 'end of line'),
                         token)

    def infix(self, token, left):
        op = token.text
        if op == '^':
            exponent_token = self.token
            # right associative
            right = self.expression(self.BINARY['^'] - 1)
            if right.free_symbols or not right.is_Integer:
                raise self.error('non-integer-exponent',
                                 'exponent must be an integer, found %s' % right,
                                 exponent_token)
            return left ** right
        right = self.expression(self.BINARY[op])
        if op == '+':
            return left + right
        if op == '-':
            return left - right
        if op == '*':
            return left * right
        if right == 0:
            raise self.error('syntax', 'division by zero', token)
        return left / right

    def call(self, token):
        func = function_directory.get(token.text)
        if func is None:
            raise self.error('unknown-function',
                             'unknown function %r' % token.text, token)
        self.expect('(')
        arg = self.expression()
        self.expect(')')
        return func(arg)

    def name(self, token):
        match = VARIABLE_NAME.match(token.text)
        if match:
            k = int(match.group(1))
            if self.n is not None and k > self.n:
                raise self.error('unbound-name',
                                 'variable %s is not a coordinate of this system'
                                 % token.text, token)
            return variable(k)
        if token.text in self.names:
            return self.names[token.text]
        raise self.error('unbound-name', 'unbound name %r' % token.text, token)


def _split_lines(text):
    for line_no, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0]
        if line.strip():
            yield line_no, line


def parse_system(text):
    """
    Parse a system definition and return a :class:`SystemDef`.

    Parameters are substituted as literals once every statement has been read.
    Raise :class:`DslError` (with line and column) on any problem.
    """
    params = []
    param_values = {}
    var_decls = {}
    equations = {}

    # first pass: statements, declarations, dimension
    for line_no, line in _split_lines(text):
        tokens = _tokenize(line, line_no)
        parser = _LineParser(tokens, line_no)
        head = parser.token
        if head.kind == 'name' and head.text == 'var':
            parser.advance()
            name = parser.token
            if name.kind != 'name' or not VARIABLE_NAME.match(name.text):
                raise parser.error('syntax', 'expected a variable name x<k>')
            parser.advance()
            parser.expect('in')
            bounds = parser.interval()
            parser.expect_end()
            k = int(VARIABLE_NAME.match(name.text).group(1))
            if k in var_decls:
                raise parser.error('duplicate', 'variable %s declared twice'
                                   % name.text, name)
            var_decls[k] = bounds
        elif head.kind == 'name' and head.text == 'param':
            parser.advance()
            name = parser.token
            if name.kind != 'name' or name.text in KEYWORDS \
            or name.text in function_directory or VARIABLE_NAME.match(name.text):
                raise parser.error('syntax', 'invalid parameter name %r'
                                   % name.text)
            parser.advance()
            parser.expect('=')
            value = parser.signed_number()
            if not value.is_finite:
                raise parser.error('syntax', 'parameters must be finite')
            parser.expect_end()
            if name.text in param_values:
                raise parser.error('duplicate', 'parameter %s declared twice'
                                   % name.text, name)
            param_values[name.text] = value
            params.append((name.text, float(value)))
        elif head.kind == 'name' and VARIABLE_NAME.match(head.text):
            parser.advance()
            parser.expect("'")
            parser.expect('=')
            k = int(VARIABLE_NAME.match(head.text).group(1))
            if k in equations:
                raise parser.error('duplicate', 'coordinate %s defined twice'
                                   % head.text, head)
            equations[k] = (line_no, tokens, parser.pos)
        else:
            raise parser.error('syntax', 'expected an equation, '
                               "'var' or 'param'")

    n = max(list(equations) + list(var_decls) or [0])
    if n == 0:
        raise DslError('missing-coordinate', 'no equation found', 1, 1)
    for k in range(1, n + 1):
        if k not in equations:
            raise DslError('missing-coordinate', 'no equation for x%d' % k,
                           1 if not equations else max(e[0] for e in equations.values()),
                           1)

    # second pass: expressions, with parameters substituted
    fields = []
    for k in range(1, n + 1):
        line_no, tokens, start = equations[k]
        parser = _LineParser(tokens, line_no, param_values, n)
        parser.pos = start
        expr = parser.expression()
        parser.expect_end()
        if expr.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
            raise DslError('syntax', 'expression for x%d is not finite' % k,
                           line_no, tokens[start].column)
        fields.append(expr)

    domain = DomainBox(tuple(var_decls.get(k, Bounds()) for k in range(1, n + 1)))
    LOG.debug('parsed system of dimension %d (domain %s)',
              n, domain.domain_class.value)
    return SystemDef(tuple(fields), domain, tuple(params))


def parse_file(path):
    with open(path, encoding='utf-8') as f:
        return parse_system(f.read())


class _DslPrinter(StrPrinter):
    """Print sympy expressions in the DSL syntax."""

    def _print_Pow(self, expr, rational=False):
        base, exp = expr.base, expr.exp
        prec = precedence(expr)
        depth = None
        if exp.is_Rational and not exp.is_Integer:
            depth = sqrt_depth(exp)
        if depth is not None:
            text = self._print(base)
            for _ in range(depth):
                text = 'sqrt(%s)' % text
            if exp.p == 1:
                return text
            return '%s^%s' % (text, self._exponent(int(exp.p)))
        if exp == -1:
            return '1/%s' % self.parenthesize(base, prec, strict=False)
        if not exp.is_Integer:
            raise ValueError('Exponent %s can not be printed in the DSL' % exp)
        return '%s^%s' % (self.parenthesize(base, prec, strict=False),
                          self._exponent(int(exp)))

    def _exponent(self, k):
        return '%d' % k if k >= 0 else '(%d)' % k

    def _print_Exp1(self, expr):
        return 'exp(1)'


def format_expr(expr):
    return _DslPrinter().doprint(expr)


def pretty_print(s):
    """Print a :class:`SystemDef` back in the DSL."""
    lines = []
    for name, value in s.params:
        lines.append('param %s = %r' % (name, value))
    for k, bounds in enumerate(s.domain.bounds, 1):
        if not bounds.is_default:
            lines.append('var x%d in %s' % (k, bounds.text()))
    for k, expr in enumerate(s.fields, 1):
        lines.append("x%d' = %s" % (k, format_expr(expr)))
    return '\n'.join(lines) + '\n'


# derivatives and signs

def differentiate(e, j):
    """Exact partial derivative of ``e`` with respect to ``x_j``."""
    return sp.diff(e, variable(j))


def jacobian(s):
    """Symbolic Jacobian of ``s``, as a tuple of rows."""
    return tuple(tuple(differentiate(f, j) for j in range(1, s.n + 1))
                 for f in s.fields)


class Sign(Enum):
    ZERO = '0'
    PLUS = '+'
    MINUS = '-'
    THETA = '?'


@dataclass(frozen=True)
class SignVerdict(object):
    """
    The sign of a partial derivative over the domain, with its evidence.

    ``evidence`` is one of ``symbolic`` (derivative is literally zero),
    ``interval`` (an enclosure proves the sign),
    ``witnesses`` (two points with derivatives of opposite signs),
    ``conservative`` (nothing proves a sign, no witness pair found) or
    ``failure`` (the derivative could not be evaluated).
    """
    sign: Sign
    evidence: str
    derivative: str = ''
    interval: tuple = None
    witnesses: tuple = ()
    note: str = ''

    @property
    def conservative(self):
        return self.evidence in ('conservative', 'failure')

    def export_as_dict(self):
        ret = {
            'sign': self.sign.value,
            'evidence': self.evidence,
            'derivative': self.derivative,
        }
        if self.interval is not None:
            ret['interval'] = list(self.interval)
        if self.witnesses:
            ret['witnesses'] = [{'point': list(point), 'value': value}
                                for point, value in self.witnesses]
        if self.note:
            ret['note'] = self.note
        return ret


def _axis_points(bounds, radius, count):
    lo, hi = bounds.finite(radius)
    if lo == hi:
        return np.array([lo])
    if not bounds.lower_closed:
        lo = lo + (hi - lo) * 1e-6
    if not bounds.upper_closed:
        hi = hi - (hi - lo) * 1e-6
    if bounds.is_bounded:
        return np.linspace(lo, hi, count)
    # spread over magnitudes when the axis is unbounded
    return np.sinh(np.linspace(np.arcsinh(lo), np.arcsinh(hi), count))

def _random_axis(bounds, radius, u):
    lo, hi = bounds.finite(radius)
    if bounds.is_bounded:
        return lo + u * (hi - lo)
    a, b = np.arcsinh(lo), np.arcsinh(hi)
    return np.sinh(a + u * (b - a))


def sample_points(domain, opts=None, seed=DEFAULT_SEED):
    """
    Deterministic sample of the domain: a grid capped at ``grid_cap`` points
    followed by ``random_points`` pseudorandom points.

    Infinite endpoints are replaced by ``bigbox``;
    unbounded axes are sampled uniformly in ``asinh`` scale.
    """
    opts = opts or Tolerances()
    n = domain.n
    per_axis = opts.grid_points
    if per_axis ** n > opts.grid_cap:
        per_axis = max(2, int(opts.grid_cap ** (1.0 / n)))
    axes = [_axis_points(b, opts.bigbox, per_axis) for b in domain.bounds]
    grid = np.array(list(islice(product(*axes), opts.grid_cap)), dtype=float)
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, size=(opts.random_points, n))
    randoms = np.column_stack([_random_axis(b, opts.bigbox, u[:, k])
                               for k, b in enumerate(domain.bounds)])
    return np.vstack([grid.reshape(-1, n), randoms])


@lru_cache(maxsize=4096)
def _vectorized(expr, n):
    return sp.lambdify(variables(n), expr,
                       modules=[NUMPY_IMPLEMENTATIONS, 'numpy'])

def evaluate_many(expr, n, points):
    """Evaluate ``expr`` at each row of ``points`` (non-finite values are nan)."""
    points = np.asarray(points, dtype=float)
    with np.errstate(all='ignore'):
        values = _vectorized(expr, n)(*points.T)
    values = np.broadcast_to(np.asarray(values, dtype=float),
                             (points.shape[0],)).copy()
    values[~np.isfinite(values)] = np.nan
    return values


def sign_of_partial(s, i, j, opts=None, seed=DEFAULT_SEED):
    """
    Decide the sign of ``dF_i/dx_j`` over the domain of ``s``.

    The derivative is zero when it simplifies to the literal 0;
    otherwise interval arithmetic over the (finite) analysis box
    may prove a sign, and sampling looks for witnesses of a sign change.
    """
    if i == j:
        raise ValueError('Diagonal entries have no label')
    opts = opts or Tolerances()
    d = differentiate(s.fields[i - 1], j)
    text = format_expr(d)
    if d == 0:
        return SignVerdict(Sign.ZERO, 'symbolic', text)

    box = dict((variable(k), Interval(lo, hi)) for k, (lo, hi)
               in enumerate(s.domain.analysis_box(opts.bigbox), 1))
    try:
        enclosure = interval_evaluate(d, box)
    except IntervalDomainError as err:
        LOG.debug('dF%d/dx%d could not be evaluated: %s', i, j, err)
        return SignVerdict(Sign.THETA, 'failure', text, note=str(err))
    bounds = (enclosure.lo, enclosure.hi)
    if enclosure.lo >= 0:
        return SignVerdict(Sign.PLUS, 'interval', text, bounds)
    if enclosure.hi <= 0:
        return SignVerdict(Sign.MINUS, 'interval', text, bounds)

    points = sample_points(s.domain, opts, seed)
    values = evaluate_many(d, s.n, points)
    if np.all(np.isnan(values)):
        return SignVerdict(Sign.THETA, 'failure', text, bounds,
                           note='derivative undefined at every sample point')
    positive = np.flatnonzero(values > 0)
    negative = np.flatnonzero(values < 0)
    if positive.size and negative.size:
        witnesses = tuple((tuple(float(v) for v in points[k]), float(values[k]))
                          for k in (positive[0], negative[0]))
        return SignVerdict(Sign.THETA, 'witnesses', text, bounds, witnesses)
    LOG.debug('dF%d/dx%d: enclosure %s straddles 0, no witness found',
              i, j, enclosure)
    return SignVerdict(Sign.THETA, 'conservative', text, bounds)


# evaluation

@lru_cache(maxsize=1024)
def _compiled(fields):
    return sp.lambdify(variables(len(fields)), list(fields),
                       modules=[NUMPY_IMPLEMENTATIONS, 'numpy'])

def field_function(s):
    """A plain ``x -> F(x)`` numpy function (no finiteness check)."""
    func = _compiled(s.fields)
    n = s.n
    def f(x):
        with np.errstate(all='ignore'):
            return np.array(func(*x), dtype=float).reshape(n)
    return f


def eval_field(s, x):
    """Evaluate the field at ``x``; raise :class:`FieldEvaluationError`."""
    x = np.asarray(x, dtype=float)
    if x.shape != (s.n,):
        raise ValueError('Expected a point of dimension %d, got %r'
                         % (s.n, x.shape))
    value = field_function(s)(x)
    bad = np.flatnonzero(~np.isfinite(value))
    if bad.size:
        raise FieldEvaluationError(int(bad[0]) + 1, x)
    return value


def numeric_jacobian(s, x, h=1e-6):
    """Central-difference Jacobian; row ``i`` holds the partials of ``F_i``."""
    x = np.asarray(x, dtype=float)
    columns = []
    for j in range(s.n):
        step = np.zeros(s.n)
        step[j] = h
        columns.append((eval_field(s, x + step) - eval_field(s, x - step))
                       / (2 * h))
    return np.column_stack(columns)


def field_many(s, points):
    """The field at each row of ``points``; undefined values are nan."""
    points = np.asarray(points, dtype=float)
    return np.column_stack([evaluate_many(expr, s.n, points)
                            for expr in s.fields])
