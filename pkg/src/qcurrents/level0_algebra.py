"""Level-zero machinery: residue pairing, the structure operator B and
V = B_R o B_Lambda^(-1), relation and coproduct emission for the two-parameter
current algebras, Hopf pairing tables, and the windowed classical twist check.

The algebra is handled relationally: "verification" always means an exact
residual of concrete series or structure constants, never a module action.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .hseries import (
    IdentityViolationError,
    RegionSeries,
    WindowUnderflowError,
    invert_unit,
    transcendental,
)
from .rational_kernel import (
    ResidualReport,
    ZW,
    build_green,
    compute_U,
    hbar_del_op,
    leg_offsets,
    op_table_odd_shift_over_del,
    sym_box,
)
from .zn_vertex import FieldProduct


# ---------------------------------------------------------------------------
# residue pairing


def residue_pairing(f, g, N):
    """<f, g> = res_0(f g z^(N-1) dz) for finite Laurent polynomials given
    as {exponent: coefficient} dictionaries."""
    out = Fraction(0)
    for a, ca in f.items():
        cb = g.get(-N - a)
        if cb:
            out += Fraction(ca) * Fraction(cb)
    return out


def pairing_gram(N, M):
    """<e^i, e_j> for i, j < M (the delta identity, testable)."""
    a, b = leg_offsets(N)
    return {(i, j): residue_pairing({-a - 1 - i: 1}, {j - b: 1}, N)
            for i in range(M) for j in range(M)}


# ---------------------------------------------------------------------------
# the structure operator B and V


class DegeneracyError(ArithmeticError):
    """B_Lambda is not invertible at first order in hbar."""


@dataclass
class StructureOperatorB:
    N: int
    M: int
    K: int
    B_R: dict = field(repr=False)      # (i, j) -> [hbar coefficients]
    B_Lambda: dict = field(repr=False)
    V: dict = field(repr=False)
    log_q: RegionSeries = field(repr=False)

    def b_lambda_order(self, k):
        return {(i, j): col[k] for (i, j), col in self.B_Lambda.items()
                if k < len(col) and col[k]}


def _mat_zero(M):
    return [[Fraction(0)] * M for _ in range(M)]


def _mat_inv(mat):
    n = len(mat)
    a = [row[:] + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise DegeneracyError("B_Lambda hbar-linear block is singular")
        a[col], a[piv] = a[piv], a[col]
        d = a[col][col]
        a[col] = [x / d for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _mat_mul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), Fraction(0))
             for j in range(n)] for i in range(n)]


def check_ab_admissible(a, b, N, window):
    """Structural admissibility: a = 1 + O(hbar), b = O(hbar), and the hbar
    tails supported at nonpositive exponents on the window (the unital
    closure of R (x) R; plain R (x) R would exclude the constant series the
    suite itself uses, e.g. b = hbar)."""
    if a.certified_only().terms.get(0) != {(0, 0): Fraction(1)}:
        raise IdentityViolationError("a must equal 1 at hbar^0")
    if b.certified_only().terms.get(0):
        raise IdentityViolationError("b must vanish at hbar^0")
    for name, s in (("a", a), ("b", b)):
        for k, tab in s.certified_only().terms.items():
            if k == 0:
                continue
            for e in tab:
                if max(abs(e[0]), abs(e[1])) > window:
                    continue
                if e[0] > 0 or e[1] > 0:
                    raise IdentityViolationError(
                        f"{name}: hbar^{k} term {e} has a positive exponent")


def log_q_ab(a, b, N, K, window):
    """log q_{a,b} = log((a + b G^(21)) / (a^(21) - b^(21) G^(21)))."""
    box = sym_box(window)
    aoff, _ = leg_offsets(N)
    _, G = build_green(N, window + aoff + 2, K, window)
    G21 = G.swapped()
    num = a + b * G21
    den = a.swapped() - b.swapped() * G21
    return (transcendental("log", num * invert_unit(den, box))).trimmed(box)


def compute_B_V(a=None, b=None, N=3, M=8, K=4, window=None, logq=None):
    """Build B(e_j) = <log q_{a,b}, id (x) e_j> column by column, split into
    the R/Lambda projections by exponent range, and invert B_Lambda order by
    order in hbar; V = B_R o B_Lambda^(-1).

    Either (a, b) series or a precomputed ``logq`` table may be given."""
    aoff, boff = leg_offsets(N)
    if window is None:
        window = M + aoff + 2
    if logq is None:
        check_ab_admissible(a, b, N, window)
        logq = log_q_ab(a, b, N, K, window)
    K = logq.K
    BR = {}
    BL = {}
    for k, tab in logq.terms.items():
        for (ez, ew), c in tab.items():
            if not logq.certified_on(k, (ez, ew)):
                continue
            j = -aoff - 1 - ew
            if not (0 <= j < M):
                continue
            if ez <= -aoff - 1:
                i = -aoff - 1 - ez
                if i < M:
                    BR.setdefault((i, j), [Fraction(0)] * K)[k] = c
            else:
                i = ez + boff
                if 0 <= i < M:
                    BL.setdefault((i, j), [Fraction(0)] * K)[k] = c
    # order-by-order inversion of B_Lambda = hbar (B1 + hbar B2 + ...)
    Bk = []
    for k in range(1, K):
        mat = _mat_zero(M)
        for (i, j), col in BL.items():
            mat[i][j] = col[k]
        Bk.append(mat)
    if not Bk:
        raise DegeneracyError("K too small to see B_Lambda")
    C0 = _mat_inv(Bk[0])
    C = [C0]
    for m in range(1, K - 1):
        acc = _mat_zero(M)
        for j in range(1, m + 1):
            if j < len(Bk):
                prod = _mat_mul(Bk[j], C[m - j])
                for r in range(M):
                    for s in range(M):
                        acc[r][s] += prod[r][s]
        C.append([[-sum((C0[r][t] * acc[t][s] for t in range(M)), Fraction(0))
                   for s in range(M)] for r in range(M)])
    # V = (sum_k hbar^(k-1) R_k) o (sum_m hbar^m C_m), truncated at K-1
    Rk = []
    for k in range(1, K):
        mat = _mat_zero(M)
        for (i, j), col in BR.items():
            mat[i][j] = col[k]
        Rk.append(mat)
    V = {}
    for k0, R in enumerate(Rk):       # hbar^(k0) after shifting
        for m, Cm in enumerate(C):
            order = k0 + m
            if order >= K - 1:
                continue
            prod = _mat_mul(R, Cm)
            for i in range(M):
                for j in range(M):
                    if prod[i][j]:
                        V.setdefault((i, j), [Fraction(0)] * (K - 1))[order] \
                            += prod[i][j]
    V = {k: v for k, v in V.items() if any(v)}
    return StructureOperatorB(N, M, K, BR, BL, V, logq)


def paper_normalized_log_q(N, M, K, window=None):
    """log q of the rational structure function, scaled so that the
    hbar-linear block of B_Lambda is the identity.

    The operator pipeline produces (1 (x) ((q^d - q^-d)/del + U)) G, whose
    hbar^1 part is 2 G; the level-zero pairing reads the Cartan multiplier
    with its R-leg second, so the table is transposed, and the factor 1/2
    normalizes B_Lambda to hbar id + o(hbar) as the level-zero display
    requires."""
    aoff, _ = leg_offsets(N)
    if window is None:
        window = M + aoff + 2
    _, G = build_green(N, max(M, window + aoff + 2), K, window)
    _, S = compute_U(N, max(M + 2, window + aoff), K, window)
    lhs = hbar_del_op(G, "w", N, op_table_odd_shift_over_del(K)) + S
    return (lhs * Fraction(1, 2)).swapped()


# ---------------------------------------------------------------------------
# relation emission


@dataclass
class RelationSet:
    N: int
    M: int
    K: int
    relations: list = field(repr=False)  # (name, lhs [FieldProduct], rhs [...])
    mode_form: dict = field(repr=False)  # i -> P_i(w) series for [h[e^i], e(w)]

    def names(self):
        return [r[0] for r in self.relations]


def _ratio(num, den, box):
    return (num * invert_unit(den, box)).trimmed(box)


def emit_relation_set(a, b, N=3, M=8, K=4, window=None, alpha_exps=(0, 1)):
    """All eight defining families with concrete series coefficients, plus
    the rewritten Cartan-nilpotent mode form [h[e^i], e(w)] = P_i(w) e(w).

    The (e:e)/(f:f) families are emitted once per sample alpha = z^m."""
    aoff, boff = leg_offsets(N)
    if window is None:
        window = M + aoff + 2
    box = sym_box(window)
    check_ab_admissible(a, b, N, window)
    _, G = build_green(N, window + aoff + 2, K, window)
    G21 = G.swapped()
    a21, b21 = a.swapped(), b.swapped()
    delta = (G + G21).trimmed(box)

    q_pp = _ratio(a + b * G21, a21 - b21 * G21, box)      # K+ on e
    q_mp = _ratio(a21 + b21 * G, a - b * G, box)          # K- on e
    q_pf = _ratio(a21 - b21 * G21, a + b * G21, box)      # K+ on f
    q_mf = _ratio(a - b * G, a21 + b21 * G, box)          # K- on f

    one = RegionSeries.one(ZW, K)
    rels = []
    for i in range(min(M, 3)):
        for j in range(min(M, 3)):
            rels.append((f"h:h[{i},{j}]",
                         [FieldProduct(((f"h[eps_{i}]", "z"),
                                        (f"h[eps_{j}]", "w")), one),
                          FieldProduct(((f"h[eps_{j}]", "w"),
                                        (f"h[eps_{i}]", "z")), -one)],
                         []))
    rels.append(("K+:e", [FieldProduct((("K+", "z"), ("e", "w")), one)],
                 [FieldProduct((("e", "w"), ("K+", "z")), q_pp)]))
    rels.append(("K-:e", [FieldProduct((("K-", "z"), ("e", "w")), one)],
                 [FieldProduct((("e", "w"), ("K-", "z")), q_mp)]))
    rels.append(("K+:f", [FieldProduct((("K+", "z"), ("f", "w")), one)],
                 [FieldProduct((("f", "w"), ("K+", "z")), q_pf)]))
    rels.append(("K-:f", [FieldProduct((("K-", "z"), ("f", "w")), one)],
                 [FieldProduct((("f", "w"), ("K-", "z")), q_mf)]))
    for m in alpha_exps:
        alpha_diff = RegionSeries.from_terms(ZW, K, {0: {(m, 0): 1, (0, m): -1}}) \
            if m else RegionSeries.zero(ZW, K)
        lhs_c = (alpha_diff * (a.swapped() + b.swapped() * G)).trimmed(box)
        rhs_c = (alpha_diff * (a - b * G)).trimmed(box)
        rels.append((f"e:e[alpha=z^{m}]",
                     [FieldProduct((("e", "z"), ("e", "w")), lhs_c)],
                     [FieldProduct((("e", "w"), ("e", "z")), rhs_c)]))
        rels.append((f"f:f[alpha=z^{m}]",
                     [FieldProduct((("f", "z"), ("f", "w")), rhs_c)],
                     [FieldProduct((("f", "w"), ("f", "z")), lhs_c)]))
    rels.append(("e:f",
                 [FieldProduct((("e", "z"), ("f", "w")), one),
                  FieldProduct((("f", "w"), ("e", "z")), -one)],
                 [FieldProduct((("K+", "z"),), delta),
                  FieldProduct((("K-inv", "z"),), -delta)]))

    logq = log_q_ab(a, b, N, K, window)
    mode = _first_leg_rows(logq, N, M, lam_side=True)
    return RelationSet(N, M, K, rels, mode)


def _first_leg_rows(logq, N, M, lam_side=True):
    """P_i(w) (first-leg e_i components) or Q_i(w) (e^i components)."""
    aoff, boff = leg_offsets(N)
    rows = {}
    for k, tab in logq.terms.items():
        for (ez, ew), c in tab.items():
            if not logq.certified_on(k, (ez, ew)):
                continue
            if lam_side and ez > -aoff - 1:
                i = ez + boff
            elif not lam_side and ez <= -aoff - 1:
                i = -aoff - 1 - ez
            else:
                continue
            if 0 <= i < M:
                rows.setdefault(i, {}).setdefault(k, {})[(0, ew)] = c
    K = logq.K
    return {i: RegionSeries.from_terms(ZW, K, t) for i, t in rows.items()}


def mode_form_consistency(a, b, N=3, M=8, K=4, window=None):
    """The two forms of the K+ -- e relation agree: Q = V P as series rows,
    where log q = sum_i e_i(z) P_i(w) + sum_i e^i(z) Q_i(w)."""
    aoff, _ = leg_offsets(N)
    if window is None:
        window = M + aoff + 2
    op = compute_B_V(a, b, N, M, K, window)
    P = _first_leg_rows(op.log_q, N, M, lam_side=True)
    Q = _first_leg_rows(op.log_q, N, M, lam_side=False)
    box = {"z": (0, 0), "w": (-window + aoff + 1, window - aoff - 1)}
    KK = op.K
    for k0 in range(M):
        acc = RegionSeries.zero(ZW, KK)
        for i in range(M):
            col = op.V.get((k0, i))
            if not col:
                continue
            for kk, c in enumerate(col):
                if c and i in P:
                    acc = acc + P[i].hbar_shifted(kk).map_coeffs(
                        lambda x, cc=c: x * cc)
        want = Q.get(k0, RegionSeries.zero(ZW, KK))
        res = (acc - want).truncated(KK - 1)
        if not res.is_zero_on(box, orders=range(1, KK - 1)):
            return ResidualReport("mode-form consistency", False,
                                  f"row {k0} mismatch",
                                  res.nonzero_witness_on(box))
    return ResidualReport("mode-form consistency", True,
                          "Q = V P exactly on window")


# ---------------------------------------------------------------------------
# coproducts (symbolic layer)


def _tensor_exp(arg, slots, D, K):
    """exp of an h-linear element in the h-degree-truncated tensor model.

    ``arg`` maps (degree tuple per slot) -> one-variable z-series; degrees
    index the h[e^i] symbols.  Truncation at total degree D makes the
    exponential a finite sum."""
    one = RegionSeries.one(("z",), K)
    zero = RegionSeries.zero(("z",), K)
    one_key = tuple(((),) * slots)
    out = {one_key: one}
    power = {one_key: one}
    fact = Fraction(1)
    for m in range(1, D + 1):
        fact = fact / m
        newp = {}
        for key1, v1 in power.items():
            for key2, v2 in arg.items():
                deg = tuple(_dmerge(d1, d2) for d1, d2 in zip(key1, key2))
                if sum(sum(d) for d in deg) > D:
                    continue
                newp[deg] = newp.get(deg, zero) + v1 * v2
        power = newp
        if not power:
            break
        for key, v in power.items():
            scaled = v.map_coeffs(lambda c, f=fact: c * f)
            out[key] = out.get(key, zero) + scaled
    return out


def _dmerge(d1, d2):
    n = max(len(d1), len(d2))
    return tuple((d1[i] if i < len(d1) else 0) + (d2[i] if i < len(d2) else 0)
                 for i in range(n))


def cartan_group_like_check(op, D=3, window=6):
    """K+(z) = exp(sum_i h[e^i] (1+V)e_i(z)) is group-like for the primitive
    coproduct on the h's: Delta(K+) = K+ (x) K+ exactly, order by order in
    the h-degree truncation."""
    N, M, K = op.N, op.M, op.K
    aoff, boff = leg_offsets(N)
    # c_i(z) = e_i(z) + sum_k V[k][i]-hbar-series * e^k(z), as z-tables
    cs = {}
    for i in range(M):
        terms = {0: {(i - boff,): Fraction(1)}}
        for (kk, ii), col in op.V.items():
            if ii != i:
                continue
            for k, c in enumerate(col):
                if c:
                    terms.setdefault(k, {})[(-aoff - 1 - kk,)] = \
                        terms.get(k, {}).get((-aoff - 1 - kk,), Fraction(0)) + c
        cs[i] = RegionSeries.from_terms(("z",), K, terms)

    # Delta(sum h_i c_i) = sum (h_i (x) 1 + 1 (x) h_i) c_i
    arg2 = {}
    for i in range(M):
        d = tuple(1 if t == i else 0 for t in range(i + 1))
        arg2[(d, ())] = cs[i]
        arg2[((), d)] = cs[i]
    lhs = _tensor_exp(arg2, 2, D, K)

    arg1 = {(tuple(1 if t == i else 0 for t in range(i + 1)),): cs[i]
            for i in range(M)}
    kplus = _tensor_exp(arg1, 1, D, K)
    zero = RegionSeries.zero(("z",), K)
    rhs = {}
    for k1, v1 in kplus.items():
        for k2, v2 in kplus.items():
            deg = (k1[0], k2[0])
            if sum(sum(d) for d in deg) > D:
                continue
            rhs[deg] = rhs.get(deg, zero) + v1 * v2
    box = {"z": (-window, window)}
    for key in set(lhs) | set(rhs):
        diff = lhs.get(key, zero) - rhs.get(key, zero)
        if not diff.is_zero_on(box):
            return ResidualReport("K+ group-like", False, f"degree {key}")
    return ResidualReport("K+ group-like", True,
                          f"exact to h-degree {D}")


# symbolic coassociativity/counit over atomic generator symbols
_DELTA = {
    "e": ((("e", "K+"), 1), (("1", "e"), 1)),
    "f": ((("f", "1"), 1), (("K-inv", "f"), 1)),
    "h": ((("h", "1"), 1), (("1", "h"), 1)),
    "K+": ((("K+", "K+"), 1),),
    "K-inv": ((("K-inv", "K-inv"), 1),),
    "1": ((("1", "1"), 1),),
}

_DELTA_BAR = {
    "e": ((("e", "1"), 1), (("K-inv", "e"), 1)),
    "f": ((("f", "K+"), 1), (("1", "f"), 1)),
    "h": ((("h", "1"), 1), (("1", "h"), 1)),
    "K+": ((("K+", "K+"), 1),),
    "K-inv": ((("K-inv", "K-inv"), 1),),
    "1": ((("1", "1"), 1),),
}

_COUNIT = {"e": 0, "f": 0, "h": 0, "K+": 1, "K-inv": 1, "1": 1}


def _apply_delta(elt, slot, rules):
    out = {}
    for word, c in elt.items():
        for img, c2 in rules[word[slot]]:
            new = word[:slot] + img + word[slot + 1:]
            out[new] = out.get(new, 0) + c * c2
    return {w: c for w, c in out.items() if c}


def coassociativity_check(rules=_DELTA):
    """(Delta (x) 1) Delta = (1 (x) Delta) Delta on e, f, h, exactly, in the
    atomic-symbol model (group-likeness of K+- supplies their rule)."""
    for gen in ("e", "f", "h"):
        start = {(gen,): 1}
        once = _apply_delta(start, 0, rules)
        left = _apply_delta(once, 0, rules)
        right = _apply_delta(once, 1, rules)
        if left != right:
            return ResidualReport(f"coassociativity on {gen}", False,
                                  f"{left} != {right}")
    return ResidualReport("coassociativity", True, "exact on e, f, h")


def counit_check(rules=_DELTA):
    """(eps (x) id) Delta = id = (id (x) eps) Delta on all generators."""
    for gen in ("e", "f", "h", "K+", "K-inv"):
        once = _apply_delta({(gen,): 1}, 0, rules)
        lhs = {}
        for (x, y), c in once.items():
            if _COUNIT[x]:
                lhs[(y,)] = lhs.get((y,), 0) + c * _COUNIT[x]
        rhs = {}
        for (x, y), c in once.items():
            if _COUNIT[y]:
                rhs[(x,)] = rhs.get((x,), 0) + c * _COUNIT[y]
        expect = {(gen,): 1}
        if lhs != expect or rhs != expect:
            return ResidualReport(f"counit on {gen}", False,
                                  f"{lhs} / {rhs}")
    return ResidualReport("counit", True, "exact on generators")


def check_coproduct(a, b, N=3, M=6, K=4, window=None, D=3):
    """Group-likeness of K+-, coassociativity and counit laws for both
    coproducts; every residual must vanish exactly."""
    op = compute_B_V(a, b, N, M, K, window)
    bar_coassoc = coassociativity_check(_DELTA_BAR)
    bar_counit = counit_check(_DELTA_BAR)
    return [
        cartan_group_like_check(op, D=D),
        coassociativity_check(_DELTA),
        counit_check(_DELTA),
        ResidualReport("coassociativity (bar coproduct)", bar_coassoc.ok,
                       bar_coassoc.detail, bar_coassoc.witness),
        ResidualReport("counit (bar coproduct)", bar_counit.ok,
                       bar_counit.detail, bar_counit.witness),
    ]


# ---------------------------------------------------------------------------
# Hopf pairing table


@dataclass
class PairingTable:
    N: int
    M: int
    hh: dict = field(repr=False)   # (i, j) -> [hbar coefficients]
    ef: dict = field(repr=False)   # (i, j) over [-M, M) -> 0/1

    def ef_is_antidiagonal(self):
        return all(v == (1 if i == -j - 1 else 0)
                   for (i, j), v in self.ef.items())


def q_ab_invariance_checks(N=3, K=4, window=10):
    """The invariance classes of q_{a,b}: q_{sa,sb} = q_{a,b} for symmetric
    invertible s, and q_{a-cG21, b+c} = q_{a,b} for c vanishing on the
    diagonal (for odd N the table identity (z-w)(G + G21) = 0 makes the
    cancellation exact).  Exact checks on sampled s and c."""
    wide = window + 3 * N * K  # products and the inversion eat window
    box = sym_box(wide)
    aoff, _ = leg_offsets(N)
    _, G = build_green(N, wide + aoff + 2, K, wide)
    G21 = G.swapped()

    def q_of(a, b):
        num = a + b * G21
        den = a.swapped() - b.swapped() * G21
        return (num * invert_unit(den, box)).trimmed(box)

    one = RegionSeries.one(ZW, K)
    a0 = one
    b0 = RegionSeries.monomial(ZW, K, 1, (0, 0), hbar=1)
    base = q_of(a0, b0)

    s = one + RegionSeries.monomial(ZW, K, 1, (-1, -1), hbar=1)  # symmetric
    scaled = q_of(s * a0, s * b0)
    rep1 = ResidualReport("q_{sa,sb} = q_{a,b}",
                          (scaled - base).is_zero_on(sym_box(window)),
                          "exact on window")

    # (a - cG21, b + c): the numerator is unchanged identically, and the
    # denominator changes by c21 (G + G21), which vanishes as a table for c
    # divisible by z - w (odd N): that annihilation identity IS the
    # invariance, so it is what gets asserted.
    c = RegionSeries.from_terms(ZW, K, {1: {(-1, -2): 1, (-2, -1): -1}})
    num_shift = (a0 - c * G21) + (b0 + c) * G21 - (a0 + b0 * G21)
    den_shift = c.swapped() * (G + G21)
    ok = num_shift.is_zero_on(sym_box(window)) \
        and den_shift.is_zero_on(sym_box(window))
    rep2 = ResidualReport("q_{a-cG,b+c} = q_{a,b}", ok,
                          "numerator unchanged and c21 (G + G21) = 0 "
                          "on window, c vanishing on the diagonal")
    return [rep1, rep2]


# ---------------------------------------------------------------------------
# classical twist check (windowed Lie bialgebra computation)
#
# Basis symbols: ("e"|"f"|"h", m) for x (x) z^m, plus ("K",) and ("D",).
# The bracket carries the cocycle <x,y> <z^m, d z^l> K and the derivation D.


_SL2 = {("h", "e"): ("e", 2), ("e", "h"): ("e", -2),
        ("h", "f"): ("f", -2), ("f", "h"): ("f", 2),
        ("e", "f"): ("h", 1), ("f", "e"): ("h", -1)}
_FORM = {("e", "f"): 1, ("f", "e"): 1, ("h", "h"): 2}


def _bracket(s1, s2, N):
    """[s1, s2] as {symbol: Fraction}."""
    if s1 == ("K",) or s2 == ("K",):
        return {}
    if s1 == ("D",) and s2 == ("D",):
        return {}
    if s1 == ("D",):
        x, m = s2
        return {(x, m - N): Fraction(m)} if m else {}
    if s2 == ("D",):
        x, m = s1
        return {(x, m - N): Fraction(-m)} if m else {}
    (x, m), (y, l) = s1, s2
    out = {}
    lie = _SL2.get((x, y))
    if lie:
        sym, c = lie
        out[(sym, m + l)] = Fraction(c)
    form = _FORM.get((x, y))
    if form and m + l == 0:
        # <z^m, d z^l> = l res(z^(m+l-1) dz) = l delta_{m+l,0}
        co = Fraction(form * l)
        if co:
            out[("K",)] = out.get(("K",), Fraction(0)) + co
    return {k: v for k, v in out.items() if v}


def _proj_ok(sym, window):
    return len(sym) == 1 or abs(sym[1]) <= window


def _ad_tensor(xi, pairs, N, window):
    """[xi (x) 1 + 1 (x) xi, sum pairs] projected to the mode window."""
    out = {}
    for u, v, c in pairs:
        for s, cu in _bracket(xi, u, N).items():
            if _proj_ok(s, window) and _proj_ok(v, window):
                key = (s, v)
                out[key] = out.get(key, Fraction(0)) + c * cu
        for s, cv in _bracket(xi, v, N).items():
            if _proj_ok(u, window) and _proj_ok(s, window):
                key = (u, s)
                out[key] = out.get(key, Fraction(0)) + c * cv
    return {k: v for k, v in out.items() if v}


def _r_pairs(N, kind, bound):
    """Window-truncated dual-basis sums: 'std', 'bar', 'R', 'f1', 'f2'."""
    a, b = leg_offsets(N)
    pairs = []
    if kind in ("std", "bar", "R"):
        for i in range(bound):
            pairs.append((("h", -a - 1 - i), ("h", i - b), Fraction(1, 2)))
        pairs.append((("D",), ("K",), Fraction(1)))
    if kind == "std":
        for m in range(-bound, bound):
            em = m - b if m >= 0 else m - a
            pairs.append((("e", em), ("f", -N - em), Fraction(1)))
    elif kind == "bar":
        for m in range(-bound, bound):
            em = m - b if m >= 0 else m - a
            pairs.append((("f", em), ("e", -N - em), Fraction(1)))
    elif kind == "R":
        for i in range(bound):
            pairs.append((("e", -a - 1 - i), ("f", i - b), Fraction(1)))
            pairs.append((("f", -a - 1 - i), ("e", i - b), Fraction(1)))
    elif kind == "f1":
        # the classical twist lives in the exterior square: e ^ f
        for i in range(bound):
            pairs.append((("e", i - b), ("f", -a - 1 - i), Fraction(1)))
            pairs.append((("f", -a - 1 - i), ("e", i - b), Fraction(-1)))
    elif kind == "f2":
        for i in range(bound):
            pairs.append((("e", -a - 1 - i), ("f", i - b), Fraction(1)))
            pairs.append((("f", i - b), ("e", -a - 1 - i), Fraction(-1)))
    return pairs


def classical_twist_check(N, M_window, xi):
    """The classical twist identities on the mode window:

        delta_R(xi) = delta(xi) + [f_1, xi (x) 1 + 1 (x) xi],
        delta_bar(xi) = delta_R(xi) + [f_2, xi (x) 1 + 1 (x) xi],

    with delta, delta_bar, delta_R the cobrackets of the two Manin triples
    and the Manin pair, each computed as [xi (x) 1 + 1 (x) xi, r] for the
    corresponding window-truncated dual-basis tensor.  The twists f_1, f_2
    are read in the exterior square (e ^ f = e (x) f - f (x) e), the home of
    classical twists; with plain tensors no sign convention closes the
    identities, which the engine confirms by exhaustive search.

    xi is ("K",), ("D",) or (x, m).  The truncation bound is
    M_window + |m| + N + a + b + 2: beyond it every dual-basis term has both
    legs outside the window after bracketing (the surviving leg's exponent
    moves by at most |m| + N), which is the certificate that the window
    projection is exact.  Returns a list of ResidualReports."""
    a, b = leg_offsets(N)
    shift = abs(xi[1]) if len(xi) == 2 else 0
    bound = M_window + shift + N + a + b + 2
    delta = _ad_tensor(xi, _r_pairs(N, "std", bound), N, M_window)
    delta_bar = _ad_tensor(xi, _r_pairs(N, "bar", bound), N, M_window)
    delta_R = _ad_tensor(xi, _r_pairs(N, "R", bound), N, M_window)
    tw1 = _ad_tensor(xi, _r_pairs(N, "f1", bound), N, M_window)
    tw2 = _ad_tensor(xi, _r_pairs(N, "f2", bound), N, M_window)

    def diff(x, y, z):
        out = dict(x)
        for k, v in y.items():
            out[k] = out.get(k, Fraction(0)) - v
        for k, v in z.items():
            out[k] = out.get(k, Fraction(0)) - v
        return {k: v for k, v in out.items() if v}

    # [f, xi x 1 + 1 x xi] = -[xi x 1 + 1 x xi, f]
    r1 = diff(delta_R, delta, {k: -v for k, v in tw1.items()})
    r2 = diff(delta_bar, delta_R, {k: -v for k, v in tw2.items()})
    reports = [
        ResidualReport(f"twist delta_R = delta + [f1, -] xi={xi}",
                       not r1, "residual exactly zero" if not r1
                       else f"residual {sorted(r1.items())[:3]}",
                       (bound,)),
        ResidualReport(f"twist delta_bar = delta_R + [f2, -] xi={xi}",
                       not r2, "residual exactly zero" if not r2
                       else f"residual {sorted(r2.items())[:3]}",
                       (bound,)),
    ]
    if xi == ("K",):
        for name, d in (("delta", delta), ("delta_R", delta_R),
                        ("delta_bar", delta_bar)):
            reports.append(ResidualReport(
                f"{name}(K) = 0", not d,
                "central element has zero cobracket" if not d else f"{d}"))
    return reports


def hopf_pairing_table(a=None, b=None, N=3, M=8, K=4, window=None, op=None):
    """<h[e^i], h[e_{-j-1}]> = <e^i, B_Lambda e_j> (= the B_Lambda matrix in
    the dual-basis normalization) and <e[eps_i], f[eps_j]> = delta_{i,-j-1}."""
    if op is None:
        op = compute_B_V(a, b, N, M, K, window)
    hh = dict(op.B_Lambda)
    ef = {(i, j): (1 if i == -j - 1 else 0)
          for i in range(-M, M) for j in range(-M, M)}
    table = PairingTable(N, M, hh, ef)
    if not table.ef_is_antidiagonal():
        raise IdentityViolationError("e/f block is not the anti-diagonal")
    return table
