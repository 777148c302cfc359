from fractions import Fraction

import pytest

from qcurrents.hseries import RegionSeries
from qcurrents.level0_algebra import (
    check_ab_admissible,
    check_coproduct,
    classical_twist_check,
    compute_B_V,
    emit_relation_set,
    hopf_pairing_table,
    mode_form_consistency,
    pairing_gram,
    paper_normalized_log_q,
    q_ab_invariance_checks,
    residue_pairing,
)
from qcurrents.rational_kernel import ZW, build_green

K = 4
ONE = RegionSeries.one(ZW, K)
HBAR = RegionSeries.monomial(ZW, K, 1, (0, 0), hbar=1)


def test_residue_pairing_duality_n3():
    # <z^(-2-i), z^(j-1)> = delta_ij
    for i in range(5):
        for j in range(5):
            v = residue_pairing({-2 - i: 1}, {j - 1: 1}, 3)
            assert v == (1 if i == j else 0)


def test_residue_pairing_constant_vanishes():
    assert residue_pairing({0: 1}, {0: 1}, 3) == 0


def test_residue_pairing_symmetric_bilinear():
    f = {2: Fraction(3), -5: Fraction(1, 2)}
    g = {-5: Fraction(7), 2: Fraction(-1)}
    assert residue_pairing(f, g, 3) == residue_pairing(g, f, 3)
    h2 = {when: 2 * c for when, c in g.items()}
    assert residue_pairing(f, h2, 3) == 2 * residue_pairing(f, g, 3)


def test_gram_identity_m16():
    assert all(v == (1 if i == j else 0)
               for (i, j), v in pairing_gram(3, 16).items())


def test_admissibility_guard():
    from qcurrents.hseries import IdentityViolationError
    bad = RegionSeries.monomial(ZW, K, 1, (1, 0), hbar=1)
    with pytest.raises(IdentityViolationError):
        check_ab_admissible(ONE + bad, HBAR, 3, 8)


def test_B_for_one_hbar_is_2hbar_identity():
    op = compute_B_V(ONE, HBAR, 3, 8, K)
    b1 = op.b_lambda_order(1)
    for i in range(8):
        assert b1.get((i, i)) == 2
    assert all(i == j for (i, j) in b1)
    # B(e_j) = 2 hbar e_j + O(hbar^3): nothing at hbar^2
    assert not op.b_lambda_order(2)


def test_V_vanishes_at_hbar0_for_one_hbar():
    op = compute_B_V(ONE, HBAR, 3, 8, K)
    assert all(col[0] == 0 for col in op.V.values())


def test_paper_normalized_B_lambda_is_identity():
    logq = paper_normalized_log_q(3, 8, K)
    op = compute_B_V(N=3, M=8, K=K, logq=logq)
    b1 = op.b_lambda_order(1)
    for i in range(8):
        assert b1.get((i, i)) == 1
    assert all(i == j for (i, j) in b1)


def test_relation_set_families_present():
    rs = emit_relation_set(ONE, HBAR, 3, 6, K)
    names = rs.names()
    for fam in ("K+:e", "K-:e", "K+:f", "K-:f", "e:f"):
        assert fam in names
    assert any(n.startswith("h:h") for n in names)
    assert any(n.startswith("e:e") for n in names)
    assert any(n.startswith("f:f") for n in names)
    assert rs.mode_form  # derived Cartan-nilpotent relations


def test_delta_is_two_region_formal_delta():
    # G(z,w) + G(w,z) equals the two-region sum z^k w^(-k-1) (zw)^(-n)
    N, n = 3, 1
    _, G = build_green(N, 30, 2, 10)
    delta = G + G.swapped()
    for k in range(-6, 7):
        e = (k - n, -k - 1 - n)
        assert delta.coeff(0, e) == 1
    assert delta.coeff(0, (0, 0)) == 0


def test_coproduct_checks_exact():
    for rep in check_coproduct(ONE, HBAR, 3, 4, K, D=3):
        assert rep.ok, (rep.name, rep.detail)


def test_hopf_pairing_table():
    tab = hopf_pairing_table(ONE, HBAR, 3, 6, K)
    assert tab.ef_is_antidiagonal()
    # h/h block for (1, hbar) = 2 hbar Gram
    for (i, j), col in tab.hh.items():
        assert col[1] == (2 if i == j else 0)


def test_mode_form_agreement():
    assert mode_form_consistency(ONE, HBAR, 3, 6, K).ok


def test_q_ab_invariances():
    for rep in q_ab_invariance_checks(3, K, 10):
        assert rep.ok, rep.name


@pytest.mark.parametrize("xi", [("K",), ("h", 0), ("e", -2), ("f", -2),
                                ("D",), ("h", 3)])
def test_classical_twist(xi):
    for rep in classical_twist_check(3, 8, xi):
        assert rep.ok, (rep.name, rep.detail)


def test_twist_certificate_reported():
    reps = classical_twist_check(3, 8, ("e", -2))
    assert all(r.witness for r in reps[:2])  # truncation bound recorded
