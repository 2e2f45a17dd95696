"""Exact numbers of the form ``sum_k c_k * sqrt(m_k)`` with rational ``c_k``.

Each ``m_k`` is a product of distinct rational radicands; radicands are kept
symbolic, so ``sqrt(2) * sqrt(3)`` stays ``sqrt(2 * 3)`` as a two-symbol
product.  Signs are decided exactly by peeling one radicand at a time:
``A + B sqrt(p)`` has the sign of ``A`` (or ``B``) when they agree, otherwise
the sign of ``A`` times the sign of ``A^2 - p B^2``.  A float evaluation with
a conservative error bound short-circuits the common case.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .geom import Q, div


def _rat_sqrt(q):
    """Exact square root of a nonnegative rational, or None if irrational."""
    if isinstance(q, int):
        num, den = q, 1
    else:
        num, den = int(q.numerator), int(q.denominator)
    if num < 0:
        raise ValueError("square root of a negative number")
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return rn if rd == 1 else div(rn, rd)
    return None


_ONE = frozenset()


class AlgNum:
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = {k: v for k, v in terms.items() if v != 0}

    # -- construction

    @staticmethod
    def lift(x):
        if isinstance(x, AlgNum):
            return x
        return AlgNum({_ONE: x})

    @property
    def is_rational(self):
        return all(k == _ONE for k in self.terms)

    def rational(self):
        """Value as a plain rational; raises if a radical remains."""
        if not self.is_rational:
            raise ValueError("not rational")
        return self.terms.get(_ONE, 0)

    # -- arithmetic

    def __add__(self, other):
        other = AlgNum.lift(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return AlgNum(t)

    __radd__ = __add__

    def __neg__(self):
        return AlgNum({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-AlgNum.lift(other))

    def __rsub__(self, other):
        return AlgNum.lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, AlgNum):
            return AlgNum({k: v * other for k, v in self.terms.items()})
        t = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                common = k1 & k2
                c = v1 * v2
                for p in common:
                    c = c * p
                k = k1 ^ k2
                t[k] = t.get(k, 0) + c
        return AlgNum(t)

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise TypeError("only nonnegative integer powers are supported")
        out = AlgNum({frozenset(): 1})
        for _ in range(k):
            out = out * self
        return out

    def __truediv__(self, other):
        if isinstance(other, AlgNum):
            if not other.is_rational:
                raise TypeError("division by an irrational AlgNum is not supported")
            other = other.rational()
        return AlgNum({k: div(v, other) for k, v in self.terms.items()})

    # -- comparison

    def sign(self):
        return alg_sign(self)

    def __float__(self):
        return sum(float(v) * math.prod(math.sqrt(float(p)) for p in k)
                   for k, v in self.terms.items())

    def _cmp(self, other):
        return alg_sign(self - other)

    def __eq__(self, other):
        if not isinstance(other, (AlgNum, int)) and not hasattr(other, "denominator"):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.is_rational:
            return hash(self.rational())
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        parts = []
        for k, v in sorted(self.terms.items(), key=lambda kv: len(kv[0])):
            if k == _ONE:
                parts.append(str(v))
            else:
                parts.append(f"{v}*sqrt({'*'.join(str(p) for p in sorted(k))})")
        return "AlgNum(" + (" + ".join(parts) or "0") + ")"


def sqrt(x):
    """Exact square root of a nonnegative rational as an int, rational or AlgNum."""
    if isinstance(x, AlgNum):
        x = x.rational()
    if x < 0:
        raise ValueError("square root of a negative number")
    r = _rat_sqrt(x)
    if r is not None:
        return r
    return AlgNum({frozenset([Q(x) if not isinstance(x, int) else x]): 1})


def _split(x: AlgNum, p):
    a, b = {}, {}
    for k, v in x.terms.items():
        if p in k:
            b[k - {p}] = v
        else:
            a[k] = v
    return AlgNum(a), AlgNum(b)


def _float_sign(x: AlgNum):
    total = 0.0
    mag = 0.0
    for k, v in x.terms.items():
        term = float(v)
        for p in k:
            term *= math.sqrt(float(p))
        total += term
        mag += abs(term)
    if mag == 0.0:
        return 0 if not x.terms else None
    if abs(total) > 1e-9 * mag:
        return 1 if total > 0 else -1
    return None


def alg_sign(x) -> int:
    if not isinstance(x, AlgNum):
        return (x > 0) - (x < 0)
    if not x.terms:
        return 0
    if x.is_rational:
        v = x.terms[_ONE]
        return (v > 0) - (v < 0)
    fs = _float_sign(x)
    if fs is not None:
        return fs
    return _exact_sign(x)


def _exact_sign(x: AlgNum) -> int:
    if x.is_rational:
        v = x.terms.get(_ONE, 0)
        return (v > 0) - (v < 0)
    p = max(pp for k in x.terms for pp in k)
    a, b = _split(x, p)
    sa, sb = _exact_sign(a), _exact_sign(b)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb if sa == 0 else sa
    d = a * a - b * b * p
    return sa * _exact_sign(d)


def as_float(x) -> float:
    return float(x)


def to_exact_str(x) -> str:
    if isinstance(x, AlgNum):
        return repr(x)
    if isinstance(x, int):
        return str(x)
    return str(Fraction(int(x.numerator), int(x.denominator)))
