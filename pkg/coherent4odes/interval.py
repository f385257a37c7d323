"""
Float interval arithmetic over sympy expression trees.

No directed rounding is performed:
bounds are only as reliable as double precision arithmetic,
which is enough to tell the sign of a partial derivative
at the tolerances used by the sign analysis.
"""
from dataclasses import dataclass
import logging
import math

LOG = logging.getLogger(__name__)

INF = float('inf')


class IntervalDomainError(ValueError):
    """A function was evaluated on an interval lying outside its domain."""


def _mul(a, b):
    # 0 * inf is 0 for bound products
    if a == 0 or b == 0:
        return 0.0
    return a * b

def _pow(x, k):
    try:
        return x ** k
    except OverflowError:
        return INF if x > 0 or k % 2 == 0 else -INF
    except ZeroDivisionError:
        return INF

def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return INF

def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + _exp(-x))
    e = _exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class Interval(object):
    """A closed interval ``[lo, hi]`` of extended reals."""
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            object.__setattr__(self, 'lo', -INF)
            object.__setattr__(self, 'hi', INF)
        elif self.lo > self.hi:
            raise ValueError('Empty interval [%r, %r]' % (self.lo, self.hi))

    @classmethod
    def point(cls, value):
        return cls(float(value), float(value))

    @classmethod
    def whole(cls):
        return cls(-INF, INF)

    @property
    def width(self):
        return self.hi - self.lo

    def contains_zero(self):
        return self.lo <= 0 <= self.hi

    def __add__(self, other):
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        products = [_mul(a, b) for a in (self.lo, self.hi)
                               for b in (other.lo, other.hi)]
        return Interval(min(products), max(products))

    def __truediv__(self, other):
        return self * other.reciprocal()

    def reciprocal(self):
        if self.lo > 0 or self.hi < 0:
            return Interval(1.0 / self.hi, 1.0 / self.lo)
        if self.lo == 0 and self.hi > 0:
            return Interval(1.0 / self.hi, INF)
        if self.hi == 0 and self.lo < 0:
            return Interval(-INF, 1.0 / self.lo)
        return Interval.whole()

    def __pow__(self, k):
        if k == 0:
            return Interval.point(1)
        if k < 0:
            return Interval.point(1) / (self ** -k)
        lo, hi = _pow(self.lo, k), _pow(self.hi, k)
        if k % 2 == 1 or self.lo >= 0:
            return Interval(lo, hi)
        if self.hi <= 0:
            return Interval(hi, lo)
        return Interval(0.0, max(lo, hi))

    def sqrt(self):
        if self.hi < 0:
            raise IntervalDomainError('sqrt of negative interval %s' % (self,))
        return Interval(math.sqrt(max(self.lo, 0.0)), math.sqrt(self.hi))

    def log(self):
        if self.hi <= 0:
            raise IntervalDomainError('log of nonpositive interval %s' % (self,))
        lo = math.log(self.lo) if self.lo > 0 else -INF
        return Interval(lo, math.log(self.hi))

    def exp(self):
        return Interval(_exp(self.lo), _exp(self.hi))

    def tanh(self):
        return Interval(math.tanh(self.lo), math.tanh(self.hi))

    def sigmoid(self):
        return Interval(_sigmoid(self.lo), _sigmoid(self.hi))

    def sin(self):
        return _periodic(math.sin, self, math.pi / 2)

    def cos(self):
        return _periodic(math.cos, self, 0.0)

    def __str__(self):
        return '[%r, %r]' % (self.lo, self.hi)


def _periodic(func, x, peak):
    """Range of sin or cos, whose maxima sit at ``peak + 2k*pi``."""
    if not math.isfinite(x.width) or x.width >= 2 * math.pi:
        return Interval(-1.0, 1.0)
    values = [func(x.lo), func(x.hi)]
    lo, hi = min(values), max(values)
    if _hits(x, peak):
        hi = 1.0
    if _hits(x, peak + math.pi):
        lo = -1.0
    return Interval(lo, hi)

def _hits(x, phase):
    period = 2 * math.pi
    return math.ceil((x.lo - phase) / period) <= math.floor((x.hi - phase) / period)


def sqrt_depth(exponent):
    """
    Number of nested square roots spelling the rational ``exponent``,
    or None when its denominator is not a power of two.
    """
    q = int(exponent.q)
    if q & (q - 1):
        return None
    return q.bit_length() - 1


FUNCTIONS = {
    'exp': Interval.exp,
    'log': Interval.log,
    'tanh': Interval.tanh,
    'sigmoid': Interval.sigmoid,
    'sin': Interval.sin,
    'cos': Interval.cos,
}


def evaluate(expr, box):
    """
    Enclose the range of ``expr`` over ``box``,
    a dict mapping sympy symbols to :class:`Interval`.

    Raise :class:`IntervalDomainError` when a function is applied
    entirely outside its domain.
    """
    if expr.is_Number or expr.is_NumberSymbol:
        return Interval.point(float(expr))
    if expr.is_Symbol:
        return box[expr]
    if expr.is_Add:
        ret = Interval.point(0)
        for arg in expr.args:
            ret = ret + evaluate(arg, box)
        return ret
    if expr.is_Mul:
        ret = Interval.point(1)
        for arg in expr.args:
            ret = ret * evaluate(arg, box)
        return ret
    if expr.is_Pow:
        base = evaluate(expr.base, box)
        exponent = expr.exp
        if exponent.is_Integer:
            return base ** int(exponent)
        depth = sqrt_depth(exponent) if exponent.is_Rational else None
        if depth is not None:
            for _ in range(depth):
                base = base.sqrt()
            return base ** int(exponent.p)
        raise ValueError('Unsupported exponent %s' % exponent)
    if expr.is_Function:
        name = type(expr).__name__
        if name not in FUNCTIONS:
            raise ValueError('Unsupported function %s' % name)
        return FUNCTIONS[name](evaluate(expr.args[0], box))
    raise ValueError('Unsupported expression %s' % expr)
