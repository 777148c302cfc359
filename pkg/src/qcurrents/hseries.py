"""Truncated hbar-adic series with multivariate Laurent coefficients in a region.

A RegionSeries is exact modulo hbar^K.  Its coefficients are Laurent monomials
in a fixed tuple of variables carrying a dominance order (position 0 dominates:
|v0| > |v1| > ...).  Every series carries, per variable and per hbar-order, a
pair of intervals:

  * a support interval [slo, shi]  -- a true mathematical bound on where the
    untruncated series can have nonzero exponents (may be infinite);
  * a certified window [wlo, whi]  -- the finite range on which the stored
    coefficients are complete.

Coefficients on the certified window are exact; between window and support
bound they are unknown (truncated away); beyond the support bound they are
known to vanish.  Every operation computes the widest certifiable output
window from these data, so identity checks downstream are exact statements
on explicit windows, never "probably converged" ones.

Coefficients are exact rationals (Fraction) by default and may be Gaussian or
cyclotomic rationals; nothing here ever rounds.
"""

from __future__ import annotations

from fractions import Fraction

INF = float("inf")
NEG_INF = float("-inf")

# canonical empty certified interval
_EMPTY = (INF, NEG_INF)


class StructuralError(ValueError):
    """Variable lists or dominance orders do not match."""


class WindowUnderflowError(ArithmeticError):
    """An operation left no certifiable window."""


class NotInvertibleError(ArithmeticError):
    """Leading structure does not admit region inversion."""


class DomainError(ValueError):
    """Precondition on hbar-order-0 part violated."""


class IdentityViolationError(AssertionError):
    """A paper identity failed at window scale; carries a witness."""


def _fr(c):
    if isinstance(c, (int, str)):
        return Fraction(c)
    return c


# ---------------------------------------------------------------------------
# per-(variable, hbar-order) window bookkeeping
#
# meta for one order: tuple over variables of (slo, wlo, whi, shi), or None
# when the order is certified identically zero.


def _eff(m):
    """Knowledge interval for a (slo, wlo, whi, shi) quadruple."""
    slo, wlo, whi, shi = m
    lo = NEG_INF if wlo <= slo else wlo
    hi = INF if whi >= shi else whi
    return lo, hi


def _mk(slo, efflo, effhi, shi):
    """Rebuild a quadruple from support bounds and a knowledge interval."""
    if efflo > effhi:
        return (slo, INF, NEG_INF, shi)
    wlo = slo if efflo == NEG_INF else efflo
    whi = shi if effhi == INF else effhi
    return (slo, wlo, whi, shi)


def _meta_add(m1, m2):
    if m1 is None:
        return m2
    if m2 is None:
        return m1
    out = []
    for a, b in zip(m1, m2):
        slo = min(a[0], b[0])
        shi = max(a[3], b[3])
        l1, h1 = _eff(a)
        l2, h2 = _eff(b)
        out.append(_mk(slo, max(l1, l2), min(h1, h2), shi))
    return tuple(out)


def _meta_mul_pair(m1, m2, shift=0):
    """Window quadruples for the product of two single-order parts.

    ``shift`` subtracts a constant from the OUTPUT exponent (used by
    substitution, where an hbar-order j of the image shifts exponents by
    -j*N); the certifying constraints move with it.
    """
    out = []
    for a, b in zip(m1, m2):
        slo1, _, _, shi1 = a
        slo2, _, _, shi2 = b
        l1, h1 = _eff(a)
        l2, h2 = _eff(b)
        psl, psh = slo1 + slo2 - shift, shi1 + shi2 - shift
        lo_cons = NEG_INF
        if slo1 < l1:
            lo_cons = max(lo_cons, l1 + shi2 - shift)
        if slo2 < l2:
            lo_cons = max(lo_cons, l2 + shi1 - shift)
        hi_cons = INF
        if shi1 > h1:
            hi_cons = min(hi_cons, h1 + slo2 - shift)
        if shi2 > h2:
            hi_cons = min(hi_cons, h2 + slo1 - shift)
        if lo_cons > hi_cons:
            out.append((psl, INF, NEG_INF, psh))
            continue
        kl = NEG_INF if lo_cons <= psl else lo_cons
        kh = INF if hi_cons >= psh else hi_cons
        out.append(_mk(psl, kl, kh, psh))
    return tuple(out)


def _meta_intersect_knowledge(ms):
    """Combine same-order contributions; support unions, knowledge intersects."""
    ms = [m for m in ms if m is not None]
    if not ms:
        return None
    nvars = len(ms[0])
    out = []
    for v in range(nvars):
        slo = min(m[v][0] for m in ms)
        shi = max(m[v][3] for m in ms)
        loics = [_eff(m[v]) for m in ms]
        efflo = max(l for l, _ in loics)
        effhi = min(h for _, h in loics)
        out.append(_mk(slo, efflo, effhi, shi))
    return tuple(out)


def _meta_window_empty(m, v):
    if m is None:
        return False
    slo, wlo, whi, shi = m[v]
    return wlo > whi


# ---------------------------------------------------------------------------


class RegionSeries:
    """Immutable truncated hbar-series over a declared dominance region.

    terms: {hbar_order k: {exponent tuple: coefficient}}, zero coefficients
    never stored.  prof: tuple of per-order window metadata as above.
    """

    __slots__ = ("vars", "K", "terms", "prof")

    def __init__(self, vars, K, terms, prof):
        if K < 1:
            raise DomainError("hbar order K must be >= 1")
        object.__setattr__(self, "vars", tuple(vars))
        object.__setattr__(self, "K", int(K))
        tt = {}
        for k, tab in terms.items():
            if k >= K or k < 0:
                continue
            row = {e: c for e, c in tab.items() if c}
            if row:
                tt[k] = row
        object.__setattr__(self, "terms", tt)
        if len(prof) != K:
            raise StructuralError("profile length must equal K")
        object.__setattr__(self, "prof", tuple(prof))

    def __setattr__(self, *a):
        raise AttributeError("RegionSeries is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_terms(cls, vars, K, terms):
        """Series from a finite, fully known term table (a Laurent polynomial)."""
        vars = tuple(vars)
        nv = len(vars)
        prof = []
        for k in range(K):
            tab = {e: _fr(c) for e, c in terms.get(k, {}).items() if _fr(c)}
            if not tab:
                prof.append(None)
                continue
            quads = []
            for v in range(nv):
                es = [e[v] for e in tab]
                m, M = min(es), max(es)
                quads.append((m, m, M, M))
            prof.append(tuple(quads))
        tt = {k: {e: _fr(c) for e, c in tab.items() if _fr(c)}
              for k, tab in terms.items()}
        return cls(vars, K, tt, prof)

    @classmethod
    def zero(cls, vars, K):
        return cls(vars, K, {}, tuple([None] * K))

    @classmethod
    def one(cls, vars, K):
        z = (0,) * len(vars)
        return cls.from_terms(vars, K, {0: {z: 1}})

    @classmethod
    def monomial(cls, vars, K, coeff, exps, hbar=0):
        return cls.from_terms(vars, K, {hbar: {tuple(exps): coeff}})

    # -- basic structure ---------------------------------------------------

    def _vcheck(self, other):
        if self.vars != other.vars:
            raise StructuralError(
                f"variable/dominance mismatch: {self.vars} vs {other.vars}")

    def coeff(self, k, exps):
        return self.terms.get(k, {}).get(tuple(exps), Fraction(0))

    def truncated(self, K):
        if K >= self.K:
            return self
        return RegionSeries(self.vars, K,
                            {k: t for k, t in self.terms.items() if k < K},
                            self.prof[:K])

    def hbar_shifted(self, d):
        """Multiply by hbar^d (d may be negative; dropped orders must be zero)."""
        if d == 0:
            return self
        if d > 0:
            terms = {k + d: t for k, t in self.terms.items() if k + d < self.K}
            prof = tuple([None] * d) + self.prof[: self.K - d]
            return RegionSeries(self.vars, self.K, terms, prof)
        for k in range(-d):
            if self.terms.get(k):
                raise DomainError("hbar_shifted: nonzero low orders")
            if not self.order_certified_zero(k):
                raise WindowUnderflowError(
                    "hbar division across an uncertified order")
        terms = {k + d: t for k, t in self.terms.items()}
        prof = self.prof[-d:] + tuple([None] * (-d))
        return RegionSeries(self.vars, self.K, terms, prof)

    def order_certified_zero(self, k):
        """Is order k certifiably the zero coefficient (no terms, and the
        knowledge interval covers the whole support)?"""
        if self.terms.get(k):
            return False
        m = self.prof[k]
        if m is None:
            return True
        for q in m:
            slo, wlo, whi, shi = q
            if slo > shi:
                continue
            l, h = _eff(q)
            if not (l <= slo and shi <= h):
                return False
        return True

    def hbar_valuation(self):
        for k in range(self.K):
            if not self.order_certified_zero(k):
                return k
        return self.K

    def map_coeffs(self, f):
        terms = {k: {e: f(c) for e, c in t.items()} for k, t in self.terms.items()}
        return RegionSeries(self.vars, self.K, terms, self.prof)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RegionSeries.monomial(self.vars, self.K, other,
                                          (0,) * len(self.vars))
        if not isinstance(other, RegionSeries):
            return NotImplemented
        self._vcheck(other)
        K = min(self.K, other.K)
        a, b = self.truncated(K), other.truncated(K)
        terms = {}
        for k in range(K):
            row = dict(a.terms.get(k, {}))
            for e, c in b.terms.get(k, {}).items():
                s = row.get(e, 0) + c
                if s:
                    row[e] = s
                elif e in row:
                    del row[e]
            if row:
                terms[k] = row
        prof = tuple(_meta_add(a.prof[k], b.prof[k]) for k in range(K))
        return RegionSeries(self.vars, K, terms, prof)

    __radd__ = __add__

    def __neg__(self):
        return self.map_coeffs(lambda c: -c)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RegionSeries) else -_fr(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) or (
                not isinstance(other, RegionSeries) and other.__class__.__name__
                in ("GaussianRational", "Cyclotomic")):
            c = _fr(other)
            if not c:
                return RegionSeries.zero(self.vars, self.K)
            return self.map_coeffs(lambda x: x * c)
        if not isinstance(other, RegionSeries):
            return NotImplemented
        self._vcheck(other)
        K = min(self.K, other.K)
        a, b = self.truncated(K), other.truncated(K)
        terms = {k: {} for k in range(K)}
        prof = []
        for k in range(K):
            contribs = []
            row = terms[k]
            for k1 in range(k + 1):
                k2 = k - k1
                m1, m2 = a.prof[k1], b.prof[k2]
                if m1 is None or m2 is None:
                    continue
                contribs.append(_meta_mul_pair(m1, m2))
                t1 = a.terms.get(k1)
                t2 = b.terms.get(k2)
                if not t1 or not t2:
                    continue
                for e1, c1 in t1.items():
                    for e2, c2 in t2.items():
                        e = tuple(x + y for x, y in zip(e1, e2))
                        s = row.get(e, 0) + c1 * c2
                        if s:
                            row[e] = s
                        elif e in row:
                            del row[e]
            prof.append(_meta_intersect_knowledge(contribs))
        return RegionSeries(self.vars, K, terms, tuple(prof))

    __rmul__ = __mul__

    # -- windows -----------------------------------------------------------

    def window(self, var):
        """Exposed certified interval for one variable: intersection over
        hbar-orders of the per-order knowledge intervals (values beyond the
        support bound count as known zeros).  Returns (lo, hi), possibly
        infinite, or None when nothing is certified."""
        v = self.vars.index(var)
        lo, hi = NEG_INF, INF
        for m in self.prof:
            if m is None:
                continue
            slo, wlo, whi, shi = m[v]
            if slo > shi:
                continue
            l, h = _eff(m[v])
            if l > h:
                return None
            lo, hi = max(lo, l), min(hi, h)
        if lo > hi:
            return None
        return (lo, hi)

    def has_empty_window(self):
        return any(self.window(v) is None for v in self.vars)

    def trimmed(self, box):
        """Restrict stored data and certification to a finite box.

        box: {var: (lo, hi)}.  Certified windows narrow to the box; support
        bounds are unchanged (they are mathematical facts).
        """
        idx = {v: box.get(v) for v in self.vars}
        terms = {}
        for k, tab in self.terms.items():
            row = {}
            for e, c in tab.items():
                ok = True
                for v, b in enumerate(idx.values()):
                    if b is not None and not (b[0] <= e[v] <= b[1]):
                        ok = False
                        break
                if ok:
                    row[e] = c
            if row:
                terms[k] = row
        prof = []
        for m in self.prof:
            if m is None:
                prof.append(None)
                continue
            quads = []
            for v, var in enumerate(self.vars):
                b = idx[var]
                slo, wlo, whi, shi = m[v]
                if b is None:
                    quads.append(m[v])
                    continue
                l, h = _eff(m[v])
                quads.append(_mk(slo, max(l, b[0]), min(h, b[1]), shi))
            prof.append(tuple(quads))
        return RegionSeries(self.vars, self.K, terms, tuple(prof))

    def certified_only(self):
        """Drop stored keys outside the certified region.

        Certified output coefficients of any operation never depend on an
        operand's uncertified scratch, so this is safe whenever downstream
        code needs a clean table (e.g. to test an hbar^0 precondition)."""
        terms = {}
        for k, tab in self.terms.items():
            row = {e: c for e, c in tab.items() if self.certified_on(k, e)}
            if row:
                terms[k] = row
        return RegionSeries(self.vars, self.K, terms, self.prof)

    def certified_on(self, k, exps):
        """Is the coefficient at (k, exps) certified (known exactly)?"""
        m = self.prof[k]
        if m is None:
            return True
        for v, e in enumerate(exps):
            slo, wlo, whi, shi = m[v]
            if e < slo or e > shi:
                continue  # beyond support: known zero
            l, h = _eff(m[v])
            if not (l <= e <= h):
                return False
        return True

    # -- comparisons -------------------------------------------------------

    def is_zero_on(self, box, orders=None):
        """True iff the series is certifiably zero on the box at the given
        orders.  Raises WindowUnderflowError when the box is not certified."""
        orders = range(self.K) if orders is None else orders
        for k in orders:
            m = self.prof[k]
            if m is None:
                continue
            for v, var in enumerate(self.vars):
                lo, hi = box[var]
                slo, wlo, whi, shi = m[v]
                l, h = _eff(m[v])
                need_lo, need_hi = max(lo, slo), min(hi, shi)
                if need_lo > need_hi:
                    continue  # box misses the support entirely: zero there
                if not (l <= need_lo and need_hi <= h):
                    raise WindowUnderflowError(
                        f"order {k}, var {var}: box {lo}..{hi} not certified "
                        f"(window {wlo}..{whi}, support {slo}..{shi})")
            for e, c in self.terms.get(k, {}).items():
                if all(box[var][0] <= e[v] <= box[var][1]
                       for v, var in enumerate(self.vars)):
                    return False
        return True

    def nonzero_witness_on(self, box, orders=None):
        orders = range(self.K) if orders is None else orders
        for k in orders:
            for e, c in sorted(self.terms.get(k, {}).items()):
                if all(box[var][0] <= e[v] <= box[var][1]
                       for v, var in enumerate(self.vars)):
                    return (k, e, c)
        return None

    def spec_equal(self, other, box=None):
        """Spec equality: vars, K, and all terms coincide after intersecting
        certified windows (optionally further restricted to a box)."""
        if self.vars != other.vars or self.K != other.K:
            return False
        if box is None:
            box = {}
            for v in self.vars:
                w1, w2 = self.window(v), other.window(v)
                if w1 is None or w2 is None:
                    return False
                lo, hi = max(w1[0], w2[0]), min(w1[1], w2[1])
                if lo > hi:
                    return False
                box[v] = (lo, hi)
        try:
            return (self - other).is_zero_on(box)
        except WindowUnderflowError:
            return False

    def __eq__(self, other):
        if not isinstance(other, RegionSeries):
            return NotImplemented
        return (self.vars == other.vars and self.K == other.K
                and self.terms == other.terms and self.prof == other.prof)

    def __hash__(self):
        return hash((self.vars, self.K))

    def __repr__(self):
        n = sum(len(t) for t in self.terms.values())
        return f"RegionSeries(vars={self.vars}, K={self.K}, terms={n})"

    # -- variable plumbing --------------------------------------------------

    def extended(self, new_vars):
        """Embed into a larger variable tuple (new variables at exponent 0).

        The relative order of existing variables must be preserved."""
        new_vars = tuple(new_vars)
        pos = []
        j = 0
        for v in self.vars:
            while j < len(new_vars) and new_vars[j] != v:
                j += 1
            if j == len(new_vars):
                raise StructuralError("extended(): dominance order changed")
            pos.append(j)
        nmap = {old: new for old, new in enumerate(pos)}
        nv = len(new_vars)
        terms = {}
        for k, tab in self.terms.items():
            row = {}
            for e, c in tab.items():
                ee = [0] * nv
                for old, x in enumerate(e):
                    ee[nmap[old]] = x
                row[tuple(ee)] = c
            terms[k] = row
        prof = []
        for m in self.prof:
            if m is None:
                prof.append(None)
                continue
            quads = [(0, 0, 0, 0)] * nv
            for old, q in enumerate(m):
                quads[nmap[old]] = q
            prof.append(tuple(quads))
        return RegionSeries(new_vars, self.K, terms, tuple(prof))

    def swapped(self, perm=None):
        """Formal table transpose: exponents permuted among variables.

        This is the (21)-operation a(z,w) -> a(w,z) at table level; it does
        not re-expand, so the result is a formal object of the SAME variable
        tuple whose region validity is the caller's concern."""
        nv = len(self.vars)
        if perm is None:
            if nv != 2:
                raise StructuralError("default swap needs exactly two variables")
            perm = (1, 0)
        terms = {}
        for k, tab in self.terms.items():
            terms[k] = {tuple(e[perm[v]] for v in range(nv)): c
                        for e, c in tab.items()}
        prof = []
        for m in self.prof:
            prof.append(None if m is None else tuple(m[perm[v]] for v in range(nv)))
        return RegionSeries(self.vars, self.K, terms, tuple(prof))

    def scaled(self, var_scale=None, hbar_scale=1):
        """Substitute v -> alpha_v * v and hbar -> beta * hbar (exact rationals)."""
        var_scale = var_scale or {}
        alphas = [_fr(var_scale.get(v, 1)) for v in self.vars]
        beta = _fr(hbar_scale)
        terms = {}
        for k, tab in self.terms.items():
            bk = beta ** k
            row = {}
            for e, c in tab.items():
                f = bk
                for a, x in zip(alphas, e):
                    f = f * a ** x
                row[e] = c * f
            terms[k] = row
        return RegionSeries(self.vars, self.K, terms, self.prof)


# ---------------------------------------------------------------------------
# spec-level operation wrappers


def ring_op(kind, a, b, allow_empty_window=False):
    """add/mul with the spec's error contract."""
    if kind == "add":
        out = a + b
    elif kind == "mul":
        out = a * b
    else:
        raise ValueError(f"unknown ring_op kind {kind!r}")
    if not allow_empty_window and out.has_empty_window():
        raise WindowUnderflowError(f"{kind}: empty output window")
    return out


def _leading_zero_order(a):
    """Leading monomial (exps, coeff) of the hbar^0 part, by dominance-lex."""
    t0 = a.terms.get(0, {})
    if not t0:
        raise NotInvertibleError("no hbar^0 part to lead with")
    e = max(t0)
    return e, t0[e]


def _is_small(diff):
    """Is a relative exponent vector 'small' in the region order?

    Reads subordinate-most variable first: the first nonzero among
    (e_last, ..., e_1, -e_0) must be positive."""
    probe = list(diff[1:][::-1]) + [-diff[0]]
    for x in probe:
        if x:
            return x > 0
    return False  # the zero vector would be the leading term itself


def invert_unit(a, box=None, max_geo=None):
    """Multiplicative inverse of a region unit, exact on a certified window.

    The hbar^0 part must have a single leading monomial dominating the rest
    in the region order (e.g. z - w = z(1 - w/z)).  ``box`` bounds the
    stored output ({var: (lo, hi)}); it defaults to the mirrored input box.
    """
    a = a.certified_only()
    lead_e, lead_c = _leading_zero_order(a)
    for e in a.terms.get(0, {}):
        if e == lead_e:
            continue
        if not _is_small(tuple(x - y for x, y in zip(e, lead_e))):
            raise NotInvertibleError(
                f"hbar^0 term {e} not dominated by leading {lead_e}")
    if box is None:
        box = {}
        for v, var in enumerate(a.vars):
            exts = [e[v] for tab in a.terms.values() for e in tab]
            lo, hi = min(exts), max(exts)
            w = max(hi - lo, 4)
            box[var] = (-lead_e[v] - w, -lead_e[v] + w)

    K = a.K
    inv_lead = RegionSeries.monomial(a.vars, K, 1 / lead_c,
                                     tuple(-x for x in lead_e))
    r = RegionSeries.one(a.vars, K) - (inv_lead * a)
    # split the perturbation into its hbar^0 part and the rest
    r0 = RegionSeries(a.vars, K, {0: r.terms.get(0, {})},
                      (r.prof[0],) + tuple([None] * (K - 1)))
    rp = RegionSeries(a.vars, K, {k: t for k, t in r.terms.items() if k > 0},
                      (None,) + r.prof[1:])

    # Iterates are trimmed to an inflated working box.  A term that left the
    # box can only re-enter coordinate v by steps with positive v-exponent,
    # and each such step moves some other coordinate monotonically, so the
    # recoverable excursion is bounded by (other widths) x (largest positive
    # v-step).  Trimming to the bare box could silently drop terms that
    # re-enter it, which would poison certified coefficients.
    def _maxpos(series, v):
        m = 0
        for tab in series.terms.values():
            for e in tab:
                m = max(m, e[v])
        return m

    widths = {v: box[v][1] - box[v][0] + 1 for v in a.vars}
    total_w = sum(widths.values())
    work_box = {}
    for i, v in enumerate(a.vars):
        slack = ((total_w - widths[v]) * _maxpos(r0, i)
                 + (K - 1) * _maxpos(rp, i))
        work_box[v] = (box[v][0] - slack, box[v][1] + slack)

    B = RegionSeries.one(a.vars, K)
    p = RegionSeries.one(a.vars, K)
    cap = sum(w[1] - w[0] + 1 for w in work_box.values()) + 2
    for _ in range(cap):
        p = (p * r0).trimmed(work_box)
        if not p.terms:
            break
        B = B + p
    if p.terms:
        raise NotInvertibleError("geometric tail did not leave the working box")
    # full inverse: sum_m (B rp)^m B, finite in hbar
    out = B
    q = B
    for _ in range(1, K):
        q = (q * rp * B).trimmed(work_box)
        if not any(q.terms.values()):
            break
        out = out + q
    out = (out * inv_lead).trimmed(box)
    if out.has_empty_window():
        raise WindowUnderflowError("invert_unit: empty certified window")
    # cross-check a * out = 1 wherever the product itself is certified
    res = a * out - RegionSeries.one(a.vars, K)
    chk = {}
    for v in a.vars:
        w = res.window(v)
        if w is None or w[0] > w[1]:
            continue
        lo = max(w[0], box[v][0]) if w[0] != NEG_INF else box[v][0]
        hi = min(w[1], box[v][1]) if w[1] != INF else box[v][1]
        chk[v] = (lo, hi)
    if len(chk) == len(a.vars):
        try:
            ok = res.is_zero_on(chk)
        except WindowUnderflowError:
            ok = True
        if not ok:
            raise NotInvertibleError("inversion self-check failed on window")
    return out


def transcendental(kind, a):
    """exp (hbar^0 part must vanish) or log (hbar^0 part must be 1)."""
    K = a.K
    a = a.certified_only()
    if kind == "exp":
        if a.terms.get(0):
            raise DomainError("exp requires a = 0 at hbar order 0")
        out = RegionSeries.one(a.vars, K)
        p = RegionSeries.one(a.vars, K)
        f = Fraction(1)
        for m in range(1, K):
            p = p * a
            f = f / m
            if not any(p.terms.values()):
                break
            out = out + p.map_coeffs(lambda c, f=f: c * f)
        return out
    if kind == "log":
        x = a - RegionSeries.one(a.vars, K)
        if x.terms.get(0):
            raise DomainError("log requires a = 1 at hbar order 0")
        out = RegionSeries.zero(a.vars, K)
        p = RegionSeries.one(a.vars, K)
        for m in range(1, K):
            p = p * x
            if not any(p.terms.values()):
                break
            sign = Fraction((-1) ** (m + 1), m)
            out = out + p.map_coeffs(lambda c, s=sign: c * s)
        return out
    raise ValueError(f"unknown transcendental kind {kind!r}")


def region_expand_reciprocal(vars, K, numerator, c1, vi, c2, vj, box):
    """Expansion of numerator/(c1*vi + c2*vj) valid for |vj| << |vi|.

    numerator: (coeff, exponent tuple).  vi must dominate vj in the declared
    order and c1 must be nonzero.  The window is as wide as the box allows.
    """
    vars = tuple(vars)
    c1, c2 = _fr(c1), _fr(c2)
    if not c1:
        raise DomainError("degenerate root: c1 = 0")
    i, j = vars.index(vi), vars.index(vj)
    if i >= j:
        raise StructuralError(f"{vi} must dominate {vj}")
    ncoeff, nexp = numerator
    ncoeff = _fr(ncoeff)
    # numerator/(c1 vi) * sum_m (-c2 vj / (c1 vi))^m
    tab = {}
    ratio = -c2 / c1
    m = 0
    while True:
        e = list(nexp)
        e[i] += -1 - m
        e[j] += m
        if e[i] < box[vi][0] or e[j] > box[vj][1]:
            break
        if ratio == 0 and m > 0:
            break
        c = (ncoeff / c1) * ratio ** m
        if c:
            tab[tuple(e)] = c
        m += 1
    quads = []
    for v, var in enumerate(vars):
        if v == i:
            shi = nexp[i] - 1
            slo = shi if c2 == 0 else NEG_INF
            quads.append(_mk(slo, max(box[var][0], NEG_INF), INF, shi))
        elif v == j:
            slo = nexp[j]
            shi = slo if c2 == 0 else INF
            quads.append(_mk(slo, NEG_INF, min(box[var][1], INF), shi))
        else:
            quads.append((nexp[v], nexp[v], nexp[v], nexp[v]))
    prof = [tuple(quads)] + [None] * (K - 1)
    return RegionSeries(vars, K, {0: tab}, tuple(prof))


class SubstitutionSeries:
    """A variable image v -> g(u, hbar) with g = u at hbar order 0."""

    __slots__ = ("target", "image")

    def __init__(self, target, image):
        if len(image.vars) != 1:
            raise StructuralError("substitution image must be univariate")
        t0 = image.terms.get(0, {})
        if t0 != {(1,): Fraction(1)}:
            raise StructuralError("image must equal its variable at hbar^0")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "image", image)

    def __setattr__(self, *a):
        raise AttributeError("SubstitutionSeries is immutable")

    @property
    def var(self):
        return self.image.vars[0]


def binomial_series_root(N, lam, K, var="z"):
    """The shifted variable z_lam with (z_lam)^N = z^N + lam*N*hbar, exactly
    mod hbar^K:  z_lam = z*(1 + lam*N*hbar*z^(-N))^(1/N)."""
    if N < 2:
        raise DomainError("N must be >= 2")
    lam = _fr(lam)
    terms = {}
    c = Fraction(1)
    s = Fraction(1, N)
    for m in range(K):
        coeff = c * (lam * N) ** m
        if coeff:
            terms.setdefault(m, {})[(1 - m * N,)] = coeff
        c = c * (s - m) / (m + 1)
    img = RegionSeries.from_terms((var,), K, terms)
    return SubstitutionSeries(var, img)


def nth_root_shift(N, lam, K, var="z"):
    return binomial_series_root(N, lam, K, var)


def substitute(a, subst):
    """Substitute subst.target -> subst.image inside ``a``.

    When the image lives in another variable of ``a`` the exponents merge
    there (e.g. z -> (w^N - N hbar)^{1/N} turns an (z,w)-series into a
    w-series embedded in the same variable tuple).  Certification is
    propagated per hbar-order from the joint windows.
    """
    t = subst.target
    if t not in a.vars:
        raise StructuralError(f"{t} not among {a.vars}")
    ti = a.vars.index(t)
    u = subst.var
    same = (u == t)
    ui = a.vars.index(u) if u in a.vars else None
    if ui is None:
        raise StructuralError("image variable must be one of the series' variables")
    K = min(a.K, subst.image.K)
    a = a.truncated(K)

    # U = image / u  (unit 1 + O(hbar)); powers cached per needed exponent
    img = subst.image.truncated(K)
    u_tab = {}  # hbar-order -> {relative exponent: coeff} for U = image/u
    for k, tab in img.terms.items():
        for (e,), c in tab.items():
            u_tab.setdefault(k, {})[e - 1] = c
    Useries = RegionSeries.from_terms((u,), K, {k: {(e,): c for e, c in tab.items()}
                                                for k, tab in u_tab.items()})

    pow_cache = {0: RegionSeries.one((u,), K)}
    inv_cache = None

    def upow(n):
        nonlocal inv_cache
        if n in pow_cache:
            return pow_cache[n]
        if n > 0:
            p = upow(n - 1) * Useries
        else:
            if inv_cache is None:
                # U = 1 + hbar(...): the Neumann series stops by order K
                x = Useries - RegionSeries.one((u,), K)
                inv = RegionSeries.one((u,), K)
                p0 = RegionSeries.one((u,), K)
                for m in range(1, K):
                    p0 = p0 * x
                    if not any(p0.terms.values()):
                        break
                    inv = inv + p0.map_coeffs(lambda c, s=(-1) ** m: c * s)
                inv_cache = inv
            p = upow(n + 1) * inv_cache
        pow_cache[n] = p
        return p

    out_terms = {k: {} for k in range(K)}
    for k, tab in a.terms.items():
        for e, c in tab.items():
            n = e[ti]
            up = upow(n)
            for j, jt in up.terms.items():
                if k + j >= K:
                    continue
                row = out_terms[k + j]
                for (de,), uc in jt.items():
                    ee = list(e)
                    ee[ti] = 0
                    ee[ui] += n + de
                    key = tuple(ee)
                    s = row.get(key, 0) + c * uc
                    if s:
                        row[key] = s
                    elif key in row:
                        del row[key]

    # certification: output order m needs input order k = m - j through the
    # hbar^j part of U^n.  For any n (positive or negative) that part's
    # relative exponents lie within composition bounds of U's own parts,
    # computed by a small DP over j.
    part = {r: (min(t), max(t)) for r, t in u_tab.items() if r > 0 and t}
    dp_lo = [0] + [INF] * (K - 1)
    dp_hi = [0] + [NEG_INF] * (K - 1)
    for j in range(1, K):
        for r, (lo_r, hi_r) in part.items():
            if r <= j and dp_lo[j - r] != INF:
                dp_lo[j] = min(dp_lo[j], dp_lo[j - r] + lo_r)
                dp_hi[j] = max(dp_hi[j], dp_hi[j - r] + hi_r)
    uo_supp = {j: (None if dp_lo[j] == INF else (dp_lo[j], dp_hi[j]))
               for j in range(K)}
    out_prof = []
    for m in range(K):
        contribs = []
        for j in range(m + 1):
            if uo_supp[j] is None:
                continue
            k = m - j
            mi = a.prof[k]
            if mi is None:
                continue
            dlo, dhi = uo_supp[j]
            if same:
                tq = mi[ti]
                pseudo = (dlo, dlo, dhi, dhi)
                merged = _meta_mul_pair((tq,), (pseudo,))[0]
                quads = list(mi)
                quads[ti] = merged
                contribs.append(tuple(quads))
            else:
                tq, uq = mi[ti], mi[ui]
                pair = _meta_mul_pair((tq,), (uq,))[0]
                pseudo = (dlo, dlo, dhi, dhi)
                merged = _meta_mul_pair((pair,), (pseudo,))[0]
                quads = list(mi)
                quads[ui] = merged
                quads[ti] = (0, 0, 0, 0)
                contribs.append(tuple(quads))
        out_prof.append(_meta_intersect_knowledge(contribs))
    return RegionSeries(a.vars, K, out_terms, tuple(out_prof))


def apply_derivation(N, a, leg):
    """The derivation d/omega with omega = v^(N-1) dv on one leg:
    v^(1-N) d/dv, i.e. c*v^e -> c*e*v^(e-N)."""
    if leg not in a.vars:
        raise StructuralError(f"unknown variable {leg!r}")
    v = a.vars.index(leg)
    terms = {}
    for k, tab in a.terms.items():
        row = {}
        for e, c in tab.items():
            if e[v] == 0:
                continue
            ee = list(e)
            ee[v] -= N
            cc = c * e[v]
            key = tuple(ee)
            s = row.get(key, 0) + cc
            if s:
                row[key] = s
            elif key in row:
                del row[key]
        if row:
            terms[k] = row
    prof = []
    for m in a.prof:
        if m is None:
            prof.append(None)
            continue
        quads = list(m)
        slo, wlo, whi, shi = m[v]
        quads[v] = (slo - N, wlo - N, whi - N, shi - N)
        prof.append(tuple(quads))
    return RegionSeries(a.vars, a.K, terms, tuple(prof))


# ---------------------------------------------------------------------------
# hbar-series with polynomial coefficients in abstract variables g0, g1, ...


class GammaPolySeries:
    """Sum over k < K of hbar^k * (polynomial in gamma_0..gamma_m).

    terms: {k: {multidegree tuple: Fraction}}; multidegrees are trimmed of
    trailing zeros so (1,) and (1,0) are the same monomial."""

    __slots__ = ("K", "terms")

    def __init__(self, K, terms):
        object.__setattr__(self, "K", K)
        tt = {}
        for k, tab in terms.items():
            if k >= K:
                continue
            row = {}
            for d, c in tab.items():
                d = _trim(d)
                c = _fr(c)
                if c:
                    row[d] = row.get(d, Fraction(0)) + c
            row = {d: c for d, c in row.items() if c}
            if row:
                tt[k] = row
        object.__setattr__(self, "terms", tt)

    def __setattr__(self, *a):
        raise AttributeError("GammaPolySeries is immutable")

    @classmethod
    def zero(cls, K):
        return cls(K, {})

    def __add__(self, other):
        K = min(self.K, other.K)
        terms = {}
        for k in range(K):
            row = dict(self.terms.get(k, {}))
            for d, c in other.terms.get(k, {}).items():
                row[d] = row.get(d, Fraction(0)) + c
            terms[k] = row
        return GammaPolySeries(K, terms)

    def __neg__(self):
        return GammaPolySeries(self.K, {k: {d: -c for d, c in t.items()}
                                        for k, t in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c0 = _fr(other)
            return GammaPolySeries(self.K, {k: {d: c * c0 for d, c in t.items()}
                                            for k, t in self.terms.items()})
        K = min(self.K, other.K)
        terms = {k: {} for k in range(K)}
        for k1, t1 in self.terms.items():
            for k2, t2 in other.terms.items():
                if k1 + k2 >= K:
                    continue
                row = terms[k1 + k2]
                for d1, c1 in t1.items():
                    for d2, c2 in t2.items():
                        d = _degadd(d1, d2)
                        row[d] = row.get(d, Fraction(0)) + c1 * c2
        return GammaPolySeries(K, terms)

    __rmul__ = __mul__

    def shift_operator(self):
        """D = sum_i gamma_{i+1} d/d gamma_i applied to the series."""
        terms = {}
        for k, tab in self.terms.items():
            row = terms.setdefault(k, {})
            for d, c in tab.items():
                for i, di in enumerate(d):
                    if not di:
                        continue
                    nd = list(d) + [0]
                    nd[i] -= 1
                    nd[i + 1] += 1
                    key = _trim(tuple(nd))
                    row[key] = row.get(key, Fraction(0)) + c * di
        return GammaPolySeries(self.K, terms)

    def hbar_integral(self):
        """Integral from 0 with respect to hbar (raises each order by one)."""
        terms = {}
        for k, tab in self.terms.items():
            if k + 1 >= self.K:
                continue
            terms[k + 1] = {d: c / (k + 1) for d, c in tab.items()}
        return GammaPolySeries(self.K, terms)

    def coeff(self, k, degs):
        return self.terms.get(k, {}).get(_trim(tuple(degs)), Fraction(0))

    def max_gamma_index(self):
        m = -1
        for tab in self.terms.values():
            for d in tab:
                for i, di in enumerate(d):
                    if di:
                        m = max(m, i)
        return m

    def substitute_gammas(self, images):
        """Substitute gamma_i -> images[i] (RegionSeries); returns RegionSeries."""
        if not images:
            raise ValueError("need at least one gamma image")
        proto = images[0]
        out = RegionSeries.zero(proto.vars, proto.K)
        pcache = {}

        def gpow(i, p):
            if p == 0:
                return RegionSeries.one(proto.vars, proto.K)
            key = (i, p)
            if key not in pcache:
                pcache[key] = gpow(i, p - 1) * images[i]
            return pcache[key]

        for k, tab in self.terms.items():
            for d, c in tab.items():
                term = RegionSeries.monomial(proto.vars, proto.K, c,
                                             (0,) * len(proto.vars), hbar=k)
                for i, di in enumerate(d):
                    for _ in range(di):
                        term = term * images[i]
                out = out + term
        return out

    def __eq__(self, other):
        return (isinstance(other, GammaPolySeries) and self.K == other.K
                and self.terms == other.terms)

    def __repr__(self):
        return f"GammaPolySeries(K={self.K}, orders={sorted(self.terms)})"


def _trim(d):
    d = tuple(d)
    while d and d[-1] == 0:
        d = d[:-1]
    return d


def _degadd(d1, d2):
    n = max(len(d1), len(d2))
    return _trim(tuple((d1[i] if i < len(d1) else 0) + (d2[i] if i < len(d2) else 0)
                       for i in range(n)))


# ---------------------------------------------------------------------------
# canonical text serialization (golden-file format)


def _fmt_coeff(c):
    from .coeffs import GaussianRational
    if isinstance(c, GaussianRational):
        re, im = c.re, c.im
    else:
        re, im = Fraction(c), Fraction(0)
    s = f"{re.numerator}/{re.denominator}"
    if im:
        sign = "+" if im >= 0 else "-"
        a = abs(im)
        s += f"{sign}{a.numerator}/{a.denominator}i"
    return s


def serialize(series):
    """Canonical text form: header, then sorted 'k;e1,e2;coeff' lines.

    Only certified content is emitted, so two equal values serialize
    identically regardless of internal scratch data."""
    hdr_win = []
    for v in series.vars:
        w = series.window(v)
        if w is None:
            hdr_win.append(f"{v}:empty")
        else:
            lo = "-inf" if w[0] == NEG_INF else str(int(w[0]))
            hi = "+inf" if w[1] == INF else str(int(w[1]))
            hdr_win.append(f"{v}:{lo}..{hi}")
    lines = [f"vars={','.join(series.vars)} K={series.K} "
             f"window={';'.join(hdr_win)}"]
    rows = []
    for k in sorted(series.terms):
        for e, c in series.terms[k].items():
            if series.certified_on(k, e):
                rows.append((k, e, c))
    rows.sort(key=lambda r: (r[0], r[1]))
    for k, e, c in rows:
        lines.append(f"{k};{','.join(str(x) for x in e)};{_fmt_coeff(c)}")
    return "\n".join(lines) + "\n"
