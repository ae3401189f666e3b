"""First-order dual numbers for forward-mode differentiation.

Chart maps written with the module-level ``sin``/``cos``/``exp``/``log``/
``sqrt`` wrappers work unchanged on floats, numpy arrays and :class:`Dual`
values, so the same map can be differentiated exactly (dual mode) or by
finite differences.
"""

from __future__ import annotations

import math

import numpy as np


class Dual:
    """Number of the form a + b*eps with eps**2 = 0."""

    __slots__ = ("a", "b")

    def __init__(self, a: float, b: float = 0.0):
        self.a = float(a)
        self.b = float(b)

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.b + other.b)
        return Dual(self.a + other, self.b)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Dual) else -other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.b + self.b * other.a)
        return Dual(self.a * other, self.b * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a / other.a,
                        (self.b * other.a - self.a * other.b) / (other.a * other.a))
        return Dual(self.a / other, self.b / other)

    def __rtruediv__(self, other):
        return Dual(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Dual):
            # a^e = exp(e log a); requires a > 0
            return exp(exponent * log(self))
        a, b = self.a, self.b
        return Dual(a ** exponent, exponent * a ** (exponent - 1) * b)

    def __eq__(self, other):
        if isinstance(other, Dual):
            return self.a == other.a and self.b == other.b
        return self.a == other and self.b == 0.0

    def __lt__(self, other):
        return self.a < (other.a if isinstance(other, Dual) else other)

    def __gt__(self, other):
        return self.a > (other.a if isinstance(other, Dual) else other)

    def __float__(self):
        raise TypeError("Dual cannot be coerced to float; use .a")

    def __hash__(self):
        return hash((self.a, self.b))


def value(x):
    """Real part of x (identity on ordinary numbers)."""
    return x.a if isinstance(x, Dual) else x


def sin(x):
    if isinstance(x, Dual):
        return Dual(math.sin(x.a), math.cos(x.a) * x.b)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(math.cos(x.a), -math.sin(x.a) * x.b)
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = math.exp(x.a)
        return Dual(e, e * x.b)
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(math.log(x.a), x.b / x.a)
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = math.sqrt(x.a)
        return Dual(s, 0.5 * x.b / s)
    return np.sqrt(x)


def derivative(f, x0: float) -> float:
    """d/dx f at x0 for a scalar map written with the wrappers above."""
    return f(Dual(x0, 1.0)).b
