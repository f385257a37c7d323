"""
.. data:: DIRECTORY
   :annotation: = a dict

   It maps every function name accepted by the system DSL
   to the sympy function used to build expressions.

.. data:: NUMPY_IMPLEMENTATIONS
   :annotation: = a dict

   Numpy implementations of the functions that sympy does not know,
   handed to :func:`sympy.lambdify`.

"""
import numpy as np
import sympy as sp


class sigmoid(sp.Function):
    """
    The logistic function ``1/(1+exp(-x))``.

    It is kept as a function of its own so that systems print back
    the way they were written.
    """
    nargs = 1

    @classmethod
    def eval(cls, arg):
        if arg.is_zero:
            return sp.Rational(1, 2)
        if arg.is_Float:
            return 1 / (1 + sp.exp(-arg))

    def fdiff(self, argindex=1):
        s = sigmoid(self.args[0])
        return s * (1 - s)

    def _eval_rewrite_as_exp(self, arg, **kwargs):
        return 1 / (1 + sp.exp(-arg))


def np_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


DIRECTORY = {
    'exp': sp.exp,
    'log': sp.log,
    'tanh': sp.tanh,
    'sigmoid': sigmoid,
    'sin': sp.sin,
    'cos': sp.cos,
    'sqrt': sp.sqrt,
}

NUMPY_IMPLEMENTATIONS = {
    'sigmoid': np_sigmoid,
}
