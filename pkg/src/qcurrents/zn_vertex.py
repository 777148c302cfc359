"""Z_N component presentation of the vertex relations, and the normal-ordering
engine that certifies relation equivalence and the PBW symmetry gate.

The master relation (z_1 - w) e~(z) e~(w) = (z - w_1) e~(w) e~(z) decomposes,
after splitting e~ into mu_N-isotypic components E^(alpha), into the carry
relation family in the variables Z = z^N, W = w^N.  Everything here is exact:
roots of unity live in Q(zeta_N), and every equivalence residual is required
to vanish identically on its window.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coeffs import Cyclotomic
from .hseries import (
    NotInvertibleError,
    RegionSeries,
    StructuralError,
    SubstitutionSeries,
    invert_unit,
    serialize,
)

ZW = ("z", "w")


class RewriteError(ArithmeticError):
    """A normal-ordering step could not invert its structure series."""


# ---------------------------------------------------------------------------
# carries


def carry(N, a, b):
    """r(a,b) in {0,1} with abar + bbar = (a+b)bar + r(a,b) N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return 1 if (a % N) + (b % N) >= N else 0


@dataclass(frozen=True)
class CarryTable:
    N: int

    def r(self, a, b):
        return carry(self.N, a, b)

    def table(self):
        return {(a, b): carry(self.N, a, b)
                for a in range(self.N) for b in range(self.N)}


# ---------------------------------------------------------------------------
# root-of-unity partial fractions


def _expand_reciprocal_linear_rooted(vars, K, numcoeff, nexp, c1, vi, c2, vj,
                                     box, step=1):
    """numerator/(c1 vi^step - ... ) geometric expansion with period ``step``:
    expansion of numcoeff * vi^a vj^b / (c1 vi^step + c2 vj^step)."""
    vars = tuple(vars)
    i, j = vars.index(vi), vars.index(vj)
    tab = {}
    ratio = (-1) * c2 / c1
    m = 0
    while True:
        e = list(nexp)
        e[i] += -step - m * step
        e[j] += m * step
        if e[i] < box[vi][0] or e[j] > box[vj][1]:
            break
        c = (numcoeff / c1) * ratio ** m
        if c:
            tab[tuple(e)] = c
        if not ratio:
            break
        m += 1
    from .hseries import NEG_INF, INF, _mk
    quads = []
    for v, var in enumerate(vars):
        if v == i:
            shi = nexp[i] - step
            quads.append(_mk(NEG_INF, max(box[var][0], NEG_INF), INF, shi))
        elif v == j:
            slo = nexp[j]
            quads.append(_mk(slo, NEG_INF, min(box[var][1], INF), INF))
        else:
            quads.append((nexp[v], nexp[v], nexp[v], nexp[v]))
    prof = [tuple(quads)] + [None] * (K - 1)
    return RegionSeries(vars, K, {0: tab}, tuple(prof))


def mu_projection(N, p, window, K=1):
    """sum_{zeta in mu_N} zeta^p/(zeta z - w)  ==  N w^(pb-1) z^(N-pb) /
    (z^N - w^N), with pb the representative of p in [1..N].

    Both sides are expanded for |w| < |z| in exact cyclotomic arithmetic and
    compared; returns (lhs, rhs, ok)."""
    box = {"z": (-window, window), "w": (-window, window)}
    lhs = RegionSeries.zero(ZW, K)
    for r in range(N):
        zr = Cyclotomic.root_power(N, r)
        term = _expand_reciprocal_linear_rooted(
            ZW, K, Cyclotomic.root_power(N, (p * r) % N), (0, 0),
            zr, "z", Cyclotomic.from_rational(N, -1), "w", box)
        lhs = lhs + term
    pb = p % N or N
    rhs = _expand_reciprocal_linear_rooted(
        ZW, K, Cyclotomic.from_rational(N, N), (N - pb, pb - 1),
        Cyclotomic.from_rational(N, 1), "z",
        Cyclotomic.from_rational(N, -1), "w", box, step=N)
    diff = lhs - rhs
    ok = diff.is_zero_on(box)
    return lhs, rhs, ok


# ---------------------------------------------------------------------------
# field products and exchange rules


@dataclass(frozen=True)
class FieldProduct:
    """Ordered word of field symbols at distinct variables, with a series
    coefficient over the canonical dominance order of those variables."""
    factors: tuple  # of (symbol, var)
    coefficient: RegionSeries

    def __post_init__(self):
        vs = [v for _, v in self.factors]
        if len(set(vs)) != len(vs):
            raise StructuralError("factor variables must be pairwise distinct")
        for v in vs:
            if v not in self.coefficient.vars:
                raise StructuralError(f"coefficient missing variable {v!r}")


class ExchangeRule:
    """Structure pair (a, b), both = z - w at hbar^0, for the relation
    a(z,w) x(z)x(w) = b(z,w) x(w)x(z).

    ``a_fn(x, y, vars, K)`` must return the expansion of a at the variable
    pair (x, y) inside the canonical region of ``vars``."""

    def __init__(self, a_fn, b_fn, name="rule"):
        self.a_fn = a_fn
        self.b_fn = b_fn
        self.name = name

    def a(self, x, y, vars, K):
        return self.a_fn(x, y, vars, K)

    def b(self, x, y, vars, K):
        return self.b_fn(x, y, vars, K)


def _linear_rule_fn(coeffs):
    """Rule builder for a = x - y + sum_k c_k hbar^k (Laurent-free shape)."""
    def fn(x, y, vars, K):
        vars = tuple(vars)
        ex = tuple(1 if v == x else 0 for v in vars)
        ey = tuple(1 if v == y else 0 for v in vars)
        terms = {0: {ex: 1, ey: -1}}
        for k, c in coeffs.items():
            if 0 < k < K:
                terms.setdefault(k, {})[(0,) * len(vars)] = c
        return RegionSeries.from_terms(vars, K, terms)
    return fn


def trivial_rule():
    return ExchangeRule(_linear_rule_fn({}), _linear_rule_fn({}), "z-w")


def adversarial_rule():
    """a = z - w + hbar, b = z - w: fails the symmetry gate with residual
    hbar^2 (direct expansion: (z-w+h)(w-z+h) - (z-w)(w-z) = h^2)."""
    return ExchangeRule(_linear_rule_fn({1: 1}), _linear_rule_fn({}),
                        "adversarial")


def shift_image(N, lam, K, var):
    """The series (v^N + lam N hbar)^(1/N); N = 1 degenerates to v + lam hbar."""
    if N == 1:
        img = RegionSeries.from_terms((var,), K,
                                      {0: {(1,): 1}, 1: {(0,): Fraction(lam)}})
        return SubstitutionSeries(var, img)
    from .hseries import nth_root_shift
    return nth_root_shift(N, lam, K, var=var)


def _shift_table(N, lam, K, var, vars):
    return shift_image(N, lam, K, var).image.extended(vars)


def master_rule(N):
    """The rational-case rule (a, b) = (z_1 - w, z - w_1), the unit-free
    structure pair of q(z,w) (compute_q_closed divided by its exponential
    unit, as in the auxiliary factorization lemma)."""
    def a_fn(x, y, vars, K):
        return _shift_table(N, 1, K, x, vars) - RegionSeries.monomial(
            vars, K, 1, tuple(1 if v == y else 0 for v in vars))

    def b_fn(x, y, vars, K):
        return RegionSeries.monomial(
            vars, K, 1, tuple(1 if v == x else 0 for v in vars)) \
            - _shift_table(N, 1, K, y, vars)

    return ExchangeRule(a_fn, b_fn, f"master N={N}")


# ---------------------------------------------------------------------------
# normal ordering


def normal_order(prod, rule, K, window):
    """Rewrite a FieldProduct into the canonical variable order.

    Each disordered adjacent pair x(u)x(v) is replaced through the rule
    instance at (u, v): the coefficient picks up invert(a(u,v)) * b(u,v),
    expanded in the canonical region.  Idempotent on ordered input."""
    vars = prod.coefficient.vars
    rank = {v: i for i, v in enumerate(vars)}
    factors = list(prod.factors)
    coeff = prod.coefficient
    box = {v: (-window, window) for v in vars}
    changed = True
    while changed:
        changed = False
        for i in range(len(factors) - 1):
            u, v = factors[i][1], factors[i + 1][1]
            if rank[u] > rank[v]:
                try:
                    mult = invert_unit(rule.a(u, v, vars, K), box) \
                        * rule.b(u, v, vars, K)
                except NotInvertibleError as exc:
                    raise RewriteError(f"{rule.name}: {exc}") from exc
                coeff = (coeff * mult).trimmed(box)
                factors[i], factors[i + 1] = factors[i + 1], factors[i]
                changed = True
                break
    return FieldProduct(tuple(factors), coeff)


def swap_adjacent(prod, i, rule, K, window):
    """One rewrite step at position i, regardless of order (used by the
    round-trip gate and confluence tests).

    The coefficient is NOT trimmed here: different reduction routes multiply
    the same multiplier tables in different orders, and leaving the products
    untrimmed keeps route-independence an exact ring identity."""
    vars = prod.coefficient.vars
    box = {v: (-window, window) for v in vars}
    factors = list(prod.factors)
    u, v = factors[i][1], factors[i + 1][1]
    try:
        mult = invert_unit(rule.a(u, v, vars, K), box) * rule.b(u, v, vars, K)
    except NotInvertibleError as exc:
        raise RewriteError(f"{rule.name}: {exc}") from exc
    coeff = prod.coefficient * mult
    factors[i], factors[i + 1] = factors[i + 1], factors[i]
    return FieldProduct(tuple(factors), coeff)


def pbw_symmetry_check(rule, K=4, window=8):
    """Exact check of a(z,w) a(w,z) = b(z,w) b(w,z).

    Returns (ok, residual series)."""
    vars = ZW
    a_zw = rule.a("z", "w", vars, K)
    a_wz = rule.a("w", "z", vars, K)
    b_zw = rule.b("z", "w", vars, K)
    b_wz = rule.b("w", "z", vars, K)
    res = a_zw * a_wz - b_zw * b_wz
    box = {"z": (-window, window), "w": (-window, window)}
    ok = res.is_zero_on(box)
    return ok, res


# ---------------------------------------------------------------------------
# the carry relation family (X:Y)


def emit_XY_relation(N, p, q, K, window=8):
    """Both sides of the carry relation for (p, q), as FieldProducts in the
    component variables Z, W.

    lhs: (Z - W + N hbar) sum_a Z^r(N-p-a,a) (W + N hbar)^r(p+a-1,q-a)
         E^(a)(Z) E^(q-a)(W)
    rhs: (Z - W - N hbar) sum_a (Z + N hbar)^r(N-p-a,a) W^r(p+a-1,q-a)
         E^(q-a)(W) E^(a)(Z)

    (Both carry exponents use N - p - a: the variant with n = (N-1)/2 in the
    right-hand exponent fails the equivalence test and is not emitted.)
    """
    lhs, rhs = [], []
    vars_lw = ("Z", "W")
    zmw_p = RegionSeries.from_terms(vars_lw, K, {0: {(1, 0): 1, (0, 1): -1},
                                                 1: {(0, 0): N}})
    zmw_m = RegionSeries.from_terms(vars_lw, K, {0: {(1, 0): 1, (0, 1): -1},
                                                 1: {(0, 0): -N}})
    for al in range(N):
        r1 = carry(N, N - p - al, al)
        r2 = carry(N, p + al - 1, q - al)
        cl = zmw_p
        if r1:
            cl = cl * RegionSeries.monomial(vars_lw, K, 1, (1, 0))
        if r2:
            cl = cl * RegionSeries.from_terms(
                vars_lw, K, {0: {(0, 1): 1}, 1: {(0, 0): N}})
        lhs.append(FieldProduct(
            ((f"E({al})", "Z"), (f"E({(q - al) % N})", "W")), cl))
        cr = zmw_m
        if r1:
            cr = cr * RegionSeries.from_terms(
                vars_lw, K, {0: {(1, 0): 1}, 1: {(0, 0): N}})
        if r2:
            cr = cr * RegionSeries.monomial(vars_lw, K, 1, (0, 1))
        rhs.append(FieldProduct(
            ((f"E({(q - al) % N})", "W"), (f"E({al})", "Z")), cr))
    return lhs, rhs


def _zw_stretch(series, N):
    """Reinterpret a (Z, W)-series in the z-world: Z = z^N, W = w^N."""
    from .hseries import INF, NEG_INF
    terms = {}
    for k, tab in series.terms.items():
        terms[k] = {(e[0] * N, e[1] * N): c for e, c in tab.items()}
    prof = []
    for m in series.prof:
        if m is None:
            prof.append(None)
            continue
        quads = []
        for slo, wlo, whi, shi in m:
            quads.append(tuple(x * N if x not in (INF, NEG_INF) else x
                               for x in (slo, wlo, whi, shi)))
        prof.append(tuple(quads))
    return RegionSeries(ZW, series.K, terms, tuple(prof))


def component_rewrite(N, K, window):
    """The rewrite E^(b)(W) E^(a)(Z) -> ordered words, derived from the
    master relation through the isotypic decomposition.

    Returns {(b, a): {(a', b'): RegionSeries}} in z-world coefficients; all
    cyclotomic character sums must collapse to rationals."""
    box = {"z": (-window, window), "w": (-window, window)}
    one = Cyclotomic.from_rational(N, 1)
    # m(zeta, xi) = (xi w - zeta z_1) * invert(xi w_1 - zeta z)
    z1 = _shift_table(N, 1, K, "z", ZW)
    w1 = _shift_table(N, 1, K, "w", ZW)
    zmono = RegionSeries.monomial(ZW, K, 1, (1, 0))
    wmono = RegionSeries.monomial(ZW, K, 1, (0, 1))
    mults = {}
    for r in range(N):
        for s in range(N):
            zr = Cyclotomic.root_power(N, r)
            xs = Cyclotomic.root_power(N, s)
            top = wmono * xs - z1 * zr
            bot = w1 * xs - zmono * zr
            mults[(r, s)] = invert_unit(bot, box) * top
    out = {}
    inv_n2 = Fraction(1, N * N)
    for b in range(N):
        for a in range(N):
            row = {}
            for ap in range(N):
                for bp in range(N):
                    acc = RegionSeries.zero(ZW, K)
                    for r in range(N):
                        for s in range(N):
                            wgt = Cyclotomic.root_power(N, (r * (ap - a)) % N) \
                                * Cyclotomic.root_power(N, (s * (bp - b)) % N)
                            acc = acc + mults[(r, s)] * wgt
                    ser = _rationalize(acc) * inv_n2
                    pre = RegionSeries.monomial(
                        ZW, K, 1, ((ap % N) - (a % N), (bp % N) - (b % N)))
                    ser = ser * pre
                    if any(ser.terms.values()):
                        row[(ap, bp)] = ser
            out[(b, a)] = row
    return out


def _rationalize(series):
    """Convert cyclotomic coefficients that are in fact rational."""
    def conv(c):
        if isinstance(c, Cyclotomic):
            r = c.rational_part()
            if r is None:
                raise StructuralError("character sum failed to collapse")
            return r
        return c
    return series.map_coeffs(conv)


def xy_bridge_units(N, p, q, K):
    """Per-term unit factors connecting the displayed carry family to the
    exact isotypic components of the master relation.

    The isotypic projection produces, on the ordered side, powers of the
    shifted variable w_1 that the display rounds to (W + N hbar)^r; the gap
    is the unit (w_1/w)^e with e = (p+a-1)bar - N r(p+a-1, q-a), and its
    mirror (z_1/z)^e' with e' = (N-p-a)bar - N r(N-p-a, a) on the swapped
    side.  All of them are 1 + O(hbar) and vanish identically for N = 1.

    Returns ({a: lhs unit}, {a: rhs unit}) as z-world tables."""
    lhs_units, rhs_units = {}, {}
    for al in range(N):
        e = (p + al - 1) % N - N * carry(N, p + al - 1, q - al)
        ep = (N - p - al) % N - N * carry(N, N - p - al, al)
        lhs_units[al] = _unit_ratio_power(N, K, "w", e)
        rhs_units[al] = _unit_ratio_power(N, K, "z", ep)
    return lhs_units, rhs_units


def _unit_ratio_power(N, K, var, e):
    """(v_1 / v)^e as a z-world table (exact; e may be negative)."""
    from .hseries import substitute
    img = shift_image(N, 1, K, var)
    mono = RegionSeries.monomial((var,), K, 1, (e,))
    shifted = substitute(mono, img)  # v_1^e
    back = RegionSeries.monomial((var,), K, 1, (-e,))
    return (shifted * back).extended(ZW)


def verify_plantes_equivalence(N, K=4, window=8):
    """Equivalence of the carry family with the master relation, both ways.

    Forward: for every (p, q), rewrite the right side of the (p,q) relation
    through the master-derived component rewrite and subtract the left side;
    the residual must vanish identically.  The displayed polynomial
    coefficients enter through the exact unit bridge of xy_bridge_units
    (the naive unbridged reading leaves nonzero hbar^1 residuals for N > 1;
    at N = 1 the bridge is trivial).

    Reverse: for each q, solve the bridged carry family as a linear system
    for the swapped words E^(b)(W)E^(a)(Z) (exact Gauss over series) and
    require the solution to coincide with the master-derived rewrite, which
    reconstructs the master relation from the family.

    Returns a list of (description, ok, witness)."""
    zwin = N * window  # the window is stated in the component variables Z, W
    wide = zwin + 4 * N * K + 8
    box = {"z": (-zwin, zwin), "w": (-zwin, zwin)}
    wide_box = {"z": (-wide, wide), "w": (-wide, wide)}
    R = component_rewrite(N, K, wide)
    results = []
    sides = {}
    for p in range(N):
        for q in range(N):
            lhs, rhs = emit_XY_relation(N, p, q, K)
            lu, ru = xy_bridge_units(N, p, q, K)
            acc = {}
            blhs, brhs = [], []
            for fp in lhs:
                al = int(fp.factors[0][0][2:-1])
                be = int(fp.factors[1][0][2:-1])
                c = _zw_stretch(fp.coefficient, N) * lu[al]
                blhs.append(((al, be), c))
                acc[(al, be)] = acc.get((al, be), RegionSeries.zero(ZW, K)) + c
            for fp in rhs:
                be = int(fp.factors[0][0][2:-1])
                al = int(fp.factors[1][0][2:-1])
                c = _zw_stretch(fp.coefficient, N) * ru[al]
                brhs.append(((be, al), c))
                for (ap, bp), ser in R[(be, al)].items():
                    acc[(ap, bp)] = acc.get(
                        (ap, bp), RegionSeries.zero(ZW, K)) - c * ser
            sides[(p, q)] = (blhs, brhs)
            bad = None
            for word, ser in acc.items():
                if not ser.is_zero_on(box):
                    bad = (word, ser.nonzero_witness_on(box))
                    break
            results.append((f"XY({p},{q}) == master N={N}", bad is None, bad))

    # reverse direction: solve the family for the swapped words per q
    for q in range(N):
        mat = []   # rows over p, columns over alpha
        rhsv = []  # rows over p: word-vector of the ordered side
        for p in range(N):
            blhs, brhs = sides[(p, q)]
            row = {}
            for (be, al), c in brhs:
                row[al] = row.get(al, RegionSeries.zero(ZW, K)) + c
            mat.append([row[al] for al in range(N)])
            vec = {}
            for word, c in blhs:
                vec[word] = vec.get(word, RegionSeries.zero(ZW, K)) + c
            rhsv.append(vec)
        try:
            sol = _solve_series_system(mat, rhsv, wide_box)
        except NotInvertibleError as exc:
            results.append((f"master from XY family q={q} N={N}", False,
                            str(exc)))
            continue
        ok = True
        witness = None
        for al in range(N):
            be = (q - al) % N
            want = R[(be, al)]
            got = sol[al]
            keys = set(want) | set(got)
            for key in keys:
                dw = want.get(key, RegionSeries.zero(ZW, K))
                dg = got.get(key, RegionSeries.zero(ZW, K))
                if not (dw - dg).is_zero_on(box):
                    ok = False
                    witness = (al, key, (dw - dg).nonzero_witness_on(box))
                    break
            if not ok:
                break
        results.append((f"master from XY family q={q} N={N}", ok, witness))
    return results


def _solve_series_system(mat, rhsv, box):
    """Gauss elimination for sum_alpha mat[p][alpha] * X[alpha] = rhsv[p],
    where X[alpha] are word-vectors {word: series}."""
    n = len(mat)
    mat = [row[:] for row in mat]
    rhsv = [dict(v) for v in rhsv]
    for col in range(n):
        piv = None
        for rix in range(col, n):
            try:
                inv = invert_unit(mat[rix][col], box)
                piv = (rix, inv)
                break
            except NotInvertibleError:
                continue
        if piv is None:
            raise NotInvertibleError(f"no invertible pivot in column {col}")
        rix, inv = piv
        mat[col], mat[rix] = mat[rix], mat[col]
        rhsv[col], rhsv[rix] = rhsv[rix], rhsv[col]
        mat[col] = [(inv * e).trimmed(box) for e in mat[col]]
        rhsv[col] = {k: (inv * s).trimmed(box) for k, s in rhsv[col].items()}
        for r2 in range(n):
            if r2 == col:
                continue
            f = mat[r2][col]
            if not any(f.terms.values()):
                continue
            mat[r2] = [(e2 - f * e1).trimmed(box)
                       for e2, e1 in zip(mat[r2], mat[col])]
            newv = dict(rhsv[r2])
            for k, s in rhsv[col].items():
                cur = newv.get(k)
                prod = (f * s).trimmed(box)
                newv[k] = (cur - prod) if cur is not None else -prod
            rhsv[r2] = newv
    return [{k: s.certified_only() for k, s in rhsv[i].items()
             if any(s.certified_only().terms.values())} for i in range(n)]


# ---------------------------------------------------------------------------
# text DSL


def field_product_dsl(fp, ref):
    parts = [f"COEFF {ref}"]
    for sym, var in fp.factors:
        parts.append(f"FIELD {sym} AT {var}")
    return " ".join(parts)


def relation_dsl(name, lhs, rhs):
    """Emit one relation in the text DSL, with a trailing table of the
    referenced coefficient series in canonical form."""
    lines = [f"RELATION {name}"]
    table = []
    for side, fps in (("LHS", lhs), ("RHS", rhs)):
        for fp in fps:
            ref = f"s{len(table)}"
            table.append((ref, fp.coefficient))
            lines.append(f"{side} {field_product_dsl(fp, ref)}")
    lines.append("TABLE")
    for ref, ser in table:
        lines.append(f"[{ref}]")
        lines.append(serialize(ser).rstrip("\n"))
    return "\n".join(lines) + "\n"
