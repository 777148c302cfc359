from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from qcurrents.hseries import (
    DomainError,
    GammaPolySeries,
    NotInvertibleError,
    RegionSeries,
    StructuralError,
    WindowUnderflowError,
    apply_derivation,
    invert_unit,
    nth_root_shift,
    region_expand_reciprocal,
    ring_op,
    serialize,
    substitute,
    transcendental,
)

ZW = ("z", "w")
BOX8 = {"z": (-8, 8), "w": (-8, 8)}


def hbar(vars=ZW, K=3):
    return RegionSeries.monomial(vars, K, 1, (0,) * len(vars), hbar=1)


def test_add_identity_trivial():
    a = RegionSeries.from_terms(ZW, 3, {0: {(1, 0): 1, (0, 1): -1}})
    z = RegionSeries.zero(ZW, 3)
    assert (a + z).spec_equal(a)


def test_mul_polynomial_exact():
    # (1 + hbar)(1 - hbar) = 1 - hbar^2 at K=3
    one = RegionSeries.one(ZW, 3)
    p = one + hbar()
    m = one - hbar()
    prod = ring_op("mul", p, m)
    assert prod.coeff(0, (0, 0)) == 1
    assert prod.coeff(1, (0, 0)) == 0
    assert prod.coeff(2, (0, 0)) == -1


def test_mul_window_rule_matches_spec():
    # windows [lo,hi] combine as [lo_a+lo_b, min(hi_a+lo_b, hi_b+lo_a)]:
    # the certified interval must contain that and stop exactly at the top
    a = RegionSeries.from_terms(("w",), 2, {0: {(0,): 1, (1,): 2, (2,): 1}})
    a = a.trimmed({"w": (0, 1)})  # support floor 0, known to 1
    b = a
    prod = a * b
    lo, hi = prod.window("w")
    assert hi == 1  # min(1+0, 0+1); exponent 2 needs the unknown tail
    assert lo <= 0  # [0+0, ...] is certified (below the floor: known zeros)
    assert prod.coeff(0, (1,)) == 4  # 1*2 + 2*1 complete
    assert prod.is_zero_on({"w": (-3, -1)})


def test_variable_mismatch_is_structural_error():
    a = RegionSeries.one(("z", "w"), 2)
    b = RegionSeries.one(("w", "z"), 2)
    with pytest.raises(StructuralError):
        ring_op("add", a, b)


def test_geometric_expansion_basic():
    # 1/(z-w) for |w|<|z| = sum z^{-1-k} w^k
    g = region_expand_reciprocal(ZW, 2, (1, (0, 0)), 1, "z", -1, "w", BOX8)
    for k in range(8):
        assert g.coeff(0, (-1 - k, k)) == 1
    assert g.coeff(0, (-1, 1)) == 0


def test_geometric_expansion_green_shape():
    # (zw)^{-1}/(z-w) = sum z^{-2-i} w^{i-1}
    g = region_expand_reciprocal(ZW, 2, (1, (-1, -1)), 1, "z", -1, "w", BOX8)
    for i in range(6):
        assert g.coeff(0, (-2 - i, i - 1)) == 1


def test_geometric_expansion_scaled_root():
    # 1/(-z - w)  (the zeta = -1 case): -sum (-1)^k z^{-k-1} w^k
    g = region_expand_reciprocal(ZW, 2, (1, (0, 0)), -1, "z", -1, "w", BOX8)
    for k in range(5):
        assert g.coeff(0, (-1 - k, k)) == -((-1) ** k)


def test_degenerate_root_rejected():
    with pytest.raises(DomainError):
        region_expand_reciprocal(ZW, 2, (1, (0, 0)), 0, "z", 1, "w", BOX8)


def test_invert_scalar():
    two = RegionSeries.monomial(ZW, 3, 2, (0, 0))
    inv = invert_unit(two, BOX8)
    assert inv.coeff(0, (0, 0)) == Fraction(1, 2)


def test_invert_one_plus_hbar():
    a = RegionSeries.one(ZW, 3) + hbar()
    inv = invert_unit(a, BOX8)
    assert inv.coeff(0, (0, 0)) == 1
    assert inv.coeff(1, (0, 0)) == -1
    assert inv.coeff(2, (0, 0)) == 1


def test_invert_z_minus_w_matches_expansion():
    zmw = RegionSeries.from_terms(ZW, 2, {0: {(1, 0): 1, (0, 1): -1}})
    inv = invert_unit(zmw, BOX8)
    g = region_expand_reciprocal(ZW, 2, (1, (0, 0)), 1, "z", -1, "w", BOX8)
    assert (inv - g).is_zero_on({"z": (-6, 6), "w": (-6, 6)})


def test_invert_non_unit_rejected():
    # w + w^{-1}: the would-be inverse has unbounded w-exponents below
    a = RegionSeries.from_terms(ZW, 2, {0: {(0, 1): 1, (0, -1): 1}})
    with pytest.raises(NotInvertibleError):
        invert_unit(a, BOX8)


def test_exp_log_small_cases():
    z = RegionSeries.zero(ZW, 4)
    assert transcendental("exp", z).spec_equal(RegionSeries.one(ZW, 4))
    a = RegionSeries.one(ZW, 4) + hbar(K=4)
    lg = transcendental("log", a)
    assert lg.coeff(1, (0, 0)) == 1
    assert lg.coeff(2, (0, 0)) == Fraction(-1, 2)
    assert lg.coeff(3, (0, 0)) == Fraction(1, 3)


def test_exp_log_roundtrip_with_kernel_factor():
    g = region_expand_reciprocal(ZW, 4, (1, (-1, -1)), 1, "z", -1, "w", BOX8)
    a = RegionSeries.one(ZW, 4) + hbar(K=4) * g
    back = transcendental("exp", transcendental("log", a))
    assert (back - a).is_zero_on({"z": (-5, 5), "w": (-5, 5)})


def test_exp_precondition():
    with pytest.raises(DomainError):
        transcendental("exp", RegionSeries.one(ZW, 3))
    with pytest.raises(DomainError):
        transcendental("log", RegionSeries.zero(ZW, 3))


def test_nth_root_shift_example_n3():
    s = nth_root_shift(3, 1, 3)
    img = s.image
    assert img.coeff(0, (1,)) == 1
    assert img.coeff(1, (-2,)) == 1
    assert img.coeff(2, (-5,)) == -1


def test_nth_root_shift_cube_law():
    # (z_1)^3 = z^3 + 3 hbar exactly mod hbar^3
    s = nth_root_shift(3, 1, 3)
    z3 = RegionSeries.monomial(("z",), 3, 1, (3,))
    cubed = substitute(z3, s)
    expect = RegionSeries.from_terms(("z",), 3, {0: {(3,): 1}, 1: {(0,): 3}})
    assert (cubed - expect).is_zero_on({"z": (-12, 12)})


def test_nth_root_shift_n2():
    s = nth_root_shift(2, 1, 2)
    sq = substitute(RegionSeries.monomial(("z",), 2, 1, (2,)), s)
    assert sq.coeff(0, (2,)) == 1
    assert sq.coeff(1, (0,)) == 2


def test_nth_root_shift_composition_law():
    # z_lam then shift by mu equals z_{lam+mu}
    K = 4
    s1 = nth_root_shift(3, Fraction(1, 2), K)
    s2 = nth_root_shift(3, Fraction(1, 3), K)
    s12 = nth_root_shift(3, Fraction(5, 6), K)
    composed = substitute(s1.image, s2)
    assert (composed - s12.image).is_zero_on({"z": (-15, 15)})


def test_identity_substitution():
    s = nth_root_shift(3, 0, 3)
    a = RegionSeries.from_terms(("z",), 3, {0: {(2,): 5, (-1,): 7}})
    assert substitute(a, s).spec_equal(a)


def test_substitute_roundtrip_shrinks_but_agrees():
    K = 3
    a = RegionSeries.from_terms(("z",), K, {0: {(2,): 1, (-3,): 4}})
    fwd = substitute(a, nth_root_shift(3, 1, K))
    back = substitute(fwd, nth_root_shift(3, -1, K))
    assert (back - a).is_zero_on({"z": (-9, 9)})


def test_cross_variable_substitution_annihilates_difference():
    # z - w vanishes under z -> w (the trivial locus case):
    # build z - w_0 with w_0 = w under nth_root_shift(N, 0)
    a = RegionSeries.from_terms(ZW, 3, {0: {(1, 0): 1, (0, 1): -1}})
    s = nth_root_shift(3, 0, 3, var="w")
    sub = substitute(a, type(s)("z", s.image))
    assert sub.is_zero_on({"z": (0, 0), "w": (-9, 9)})


def test_apply_derivation_examples():
    z = RegionSeries.monomial(("z", "w"), 2, 1, (1, 0))
    dz = apply_derivation(3, z, "z")
    assert dz.coeff(0, (-2, 0)) == 1
    zN = RegionSeries.monomial(("z", "w"), 2, 1, (3, 0))
    assert apply_derivation(3, zN, "z").coeff(0, (0, 0)) == 3


def test_derivation_unknown_variable():
    with pytest.raises(StructuralError):
        apply_derivation(3, RegionSeries.one(ZW, 2), "q")


def test_derivation_leibniz_on_kernel():
    g = region_expand_reciprocal(ZW, 2, (1, (-1, -1)), 1, "z", -1, "w", BOX8)
    h = RegionSeries.from_terms(ZW, 2, {0: {(2, 0): 1, (0, 0): 3}})
    lhs = apply_derivation(3, g * h, "z")
    rhs = apply_derivation(3, g, "z") * h + g * apply_derivation(3, h, "z")
    assert (lhs - rhs).is_zero_on({"z": (-5, 5), "w": (-5, 5)})


small_coeffs = st.integers(min_value=-3, max_value=3)


@st.composite
def series_strategy(draw, K=3):
    n = draw(st.integers(min_value=1, max_value=4))
    terms = {}
    for _ in range(n):
        k = draw(st.integers(min_value=0, max_value=K - 1))
        e = (draw(st.integers(min_value=-3, max_value=3)),
             draw(st.integers(min_value=-3, max_value=3)))
        c = draw(small_coeffs)
        if c:
            terms.setdefault(k, {})[e] = terms.get(k, {}).get(e, 0) + c
    return RegionSeries.from_terms(ZW, K, terms)


@given(series_strategy(), series_strategy(), series_strategy())
@settings(max_examples=60, deadline=None)
def test_ring_axioms(a, b, c):
    box = {"z": (-6, 6), "w": (-6, 6)}
    assert ((a + b) + c - (a + (b + c))).is_zero_on(box)
    assert ((a * b) * c - (a * (b * c))).is_zero_on(box)
    assert (a * (b + c) - (a * b + a * c)).is_zero_on(box)
    assert (a * b - b * a).is_zero_on(box)


@given(series_strategy(), series_strategy())
@settings(max_examples=40, deadline=None)
def test_derivation_leibniz_random(a, b):
    box = {"z": (-6, 6), "w": (-6, 6)}
    lhs = apply_derivation(3, a * b, "z")
    rhs = apply_derivation(3, a, "z") * b + a * apply_derivation(3, b, "z")
    assert (lhs - rhs).is_zero_on(box)


def test_gamma_poly_shift_operator():
    # D(gamma_0^2) = 2 gamma_0 gamma_1
    g = GammaPolySeries(3, {0: {(2,): 1}})
    d = g.shift_operator()
    assert d.coeff(0, (1, 1)) == 2


def test_serialize_is_stable_and_sorted():
    a = RegionSeries.from_terms(ZW, 2, {0: {(1, 0): 1, (0, 1): Fraction(-1, 2)}})
    s1 = serialize(a)
    s2 = serialize(a)
    assert s1 == s2
    assert s1.splitlines()[0].startswith("vars=z,w K=2")
    assert "0;0,1;-1/2" in s1


def test_window_underflow_reported():
    # multiplying truncated windows: the certified top collapses to the
    # known floor plus the partner's certified top
    a = RegionSeries.from_terms(("w",), 1, {0: {(0,): 1, (5,): 1}})
    a = a.trimmed({"w": (0, 0)})  # support reaches 5, certified only at 0
    b = a
    out = a * b
    lo, hi = out.window("w")
    assert hi == 0 and lo <= 0
    with pytest.raises(WindowUnderflowError):
        out.is_zero_on({"w": (1, 4)})  # uncertified region refuses to answer
