"""Exact coefficient rings: Gaussian rationals Q(i) and cyclotomic rationals Q(zeta_N).

Plain ``Fraction`` is the default coefficient everywhere; these classes enter
only where i or an N-th root of unity is genuinely needed (root-of-unity
projections, Z_N component relations).  Both are immutable, hashable, and
mix freely with int/Fraction in arithmetic.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


class GaussianRational:
    """a + b*i with a, b rational."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, *a):
        raise AttributeError("GaussianRational is immutable")

    @staticmethod
    def _coerce(x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(x, 0)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def inverse(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("inverse of 0 in Q(i)")
        return GaussianRational(self.re / n, -self.im / n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = GaussianRational(1, 0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __repr__(self):
        if self.im == 0:
            return f"{self.re}"
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


I = GaussianRational(0, 1)


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n):
    """Coefficients of Phi_n(x), low degree first, as a tuple of Fractions.

    Computed by dividing x^n - 1 by all Phi_d with d | n, d < n.
    """
    if n == 1:
        return (Fraction(-1), Fraction(1))
    num = [Fraction(0)] * (n + 1)
    num[0], num[n] = Fraction(-1), Fraction(1)
    for d in range(1, n):
        if n % d == 0:
            num = _polydiv_exact(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _polydiv_exact(num, den):
    num = list(num)
    out = [Fraction(0)] * (len(num) - len(den) + 1)
    dl = len(den) - 1
    lead = den[-1]
    for i in range(len(num) - 1, dl - 1, -1):
        c = num[i] / lead
        out[i - dl] = c
        if c:
            for j, dj in enumerate(den):
                num[i - dl + j] -= c * dj
    if any(num[:dl]):
        raise ArithmeticError("non-exact polynomial division")
    return out


class Cyclotomic:
    """Element of Q(zeta_N), stored as a vector modulo Phi_N(x).

    ``vec[j]`` is the coefficient of zeta^j, 0 <= j < deg Phi_N.
    """

    __slots__ = ("N", "vec")

    def __init__(self, N, vec=None):
        object.__setattr__(self, "N", N)
        d = len(cyclotomic_polynomial(N)) - 1
        v = [Fraction(0)] * d
        if vec is not None:
            for j, c in enumerate(vec):
                if c:
                    v[j] = Fraction(c) if not isinstance(c, Fraction) else c
        object.__setattr__(self, "vec", tuple(v))

    def __setattr__(self, *a):
        raise AttributeError("Cyclotomic is immutable")

    @classmethod
    def from_rational(cls, N, c):
        d = len(cyclotomic_polynomial(N)) - 1
        return cls(N, [Fraction(c)] + [0] * (d - 1))

    @classmethod
    def root_power(cls, N, j):
        """zeta_N^j, reduced mod Phi_N."""
        j %= N
        d = len(cyclotomic_polynomial(N)) - 1
        raw = [Fraction(0)] * (j + 1)
        raw[j] = Fraction(1)
        return cls(N, _reduce_mod_phi(raw, N))

    def _coerce(self, x):
        if isinstance(x, Cyclotomic):
            if x.N != self.N:
                raise ValueError("mixed cyclotomic orders")
            return x
        if isinstance(x, (int, Fraction)):
            return Cyclotomic.from_rational(self.N, x)
        if isinstance(x, GaussianRational):
            if self.N % 4 == 0:
                i_elt = Cyclotomic.root_power(self.N, self.N // 4)
                return Cyclotomic.from_rational(self.N, x.re) + i_elt * x.im
            if x.im == 0:
                return Cyclotomic.from_rational(self.N, x.re)
            raise ValueError("i is not in this cyclotomic field")
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Cyclotomic(self.N, [a + b for a, b in zip(self.vec, o.vec)])

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.N, [-a for a in self.vec])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return Cyclotomic(self.N, [a - b for a, b in zip(self.vec, o.vec)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = len(self.vec)
        raw = [Fraction(0)] * (2 * d - 1)
        for i, a in enumerate(self.vec):
            if a:
                for j, b in enumerate(o.vec):
                    if b:
                        raw[i + j] += a * b
        return Cyclotomic(self.N, _reduce_mod_phi(raw, self.N))

    __rmul__ = __mul__

    def inverse(self):
        """Inverse via the extended Euclidean algorithm mod Phi_N."""
        phi = list(cyclotomic_polynomial(self.N))
        a = list(self.vec)
        if not any(a):
            raise ZeroDivisionError("inverse of 0 in Q(zeta)")
        # extended gcd over Q[x]
        r0, r1 = phi, a
        s0, s1 = [Fraction(0)], [Fraction(1)]
        while _degree(r1) > 0:
            q, r = _polydivmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _polysub(s0, _polymul(q, s1))
        if _degree(r1) < 0:
            raise ZeroDivisionError("not invertible mod Phi_N")
        c = r1[0]
        inv = [x / c for x in s1]
        return Cyclotomic(self.N, _reduce_mod_phi(inv, self.N))

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = Cyclotomic.from_rational(self.N, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.vec == o.vec

    def __hash__(self):
        return hash((self.N, self.vec))

    def __bool__(self):
        return any(self.vec)

    def rational_part(self):
        """The element as a Fraction if it is rational, else None."""
        if any(self.vec[1:]):
            return None
        return self.vec[0]

    def __repr__(self):
        parts = [f"{c}*z{self.N}^{j}" if j else f"{c}"
                 for j, c in enumerate(self.vec) if c]
        return " + ".join(parts) if parts else "0"


def _reduce_mod_phi(raw, N):
    phi = cyclotomic_polynomial(N)
    d = len(phi) - 1
    raw = list(raw) + [Fraction(0)] * max(0, d - len(raw))
    for i in range(len(raw) - 1, d - 1, -1):
        c = raw[i]
        if c:
            for j in range(d + 1):
                raw[i - d + j] -= c * phi[j]
    return raw[:d]


def _degree(p):
    for i in range(len(p) - 1, -1, -1):
        if p[i]:
            return i
    return -1


def _polydivmod(a, b):
    a = list(a)
    db, da = _degree(b), _degree(a)
    if db < 0:
        raise ZeroDivisionError
    q = [Fraction(0)] * max(1, da - db + 1)
    while _degree(a) >= db:
        daa = _degree(a)
        c = a[daa] / b[db]
        q[daa - db] = c
        for j in range(db + 1):
            a[daa - db + j] -= c * b[j]
    return q, a


def _polymul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return out


def _polysub(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return [x - y for x, y in zip(a, b)]
