from fractions import Fraction

import pytest

from qcurrents.hseries import IdentityViolationError, RegionSeries, apply_derivation
from qcurrents.rational_kernel import (
    DualBasisWindow,
    build_bundle,
    build_green,
    compute_q_closed,
    compute_tau,
    compute_U,
    gamma_closed,
    gamma_kernel,
    generating_identity_check,
    green_sum_route,
    hanukah_check,
    leg_offsets,
    q_oracle_operator_route,
    scaling_covariance,
    simply_laced_locus_check,
    solve_phi_psi,
    sym_box,
    verify_vanishing_locus,
)

BOX10 = {"z": (-10, 10), "w": (-10, 10)}


def test_leg_offsets_duality_exponents():
    # <e^i, e_j> = res_0 z^(-a-1-i) z^(j-b) z^(N-1) dz = delta_ij
    for N in (2, 3, 4, 5, 6, 7):
        a, b = leg_offsets(N)
        for i in range(4):
            for j in range(4):
                total = (-a - 1 - i) + (j - b) + (N - 1)
                assert (total == -1) == (i == j)


def test_green_basis_coefficients_n3():
    _, G = build_green(3, 40, 4, 12)
    assert G.coeff(0, (-2, -1)) == 1  # i = 0 basis product
    assert G.coeff(0, (-1, -1)) == 0  # no such product
    assert G.coeff(0, (-5, 2)) == 1   # i = 3


def test_green_two_routes_agree_window12():
    _, G = build_green(3, 40, 6, 12)
    Gs = green_sum_route(3, 40, 6, 12)
    assert (G - Gs).is_zero_on({"z": (-12, 12), "w": (-12, 12)})


def test_green_window_guard():
    from qcurrents.hseries import WindowUnderflowError
    with pytest.raises(WindowUnderflowError):
        build_green(3, 4, 3, 12)  # 4 basis pairs cannot certify window 12


def test_gamma_closed_n3_is_single_monomial():
    g = gamma_closed(3, 4)
    assert dict(g.terms) == {0: {(-4, -2): Fraction(1)}}


def test_gamma_membership_violation_for_even_n():
    # for even N the R (x) R membership Lemma genuinely fails
    _, G = build_green(2, 30, 3, 10)
    with pytest.raises(IdentityViolationError):
        gamma_kernel(G, 2)


def test_gamma_leg_swap_identities():
    _, G = build_green(3, 40, 4, 12)
    g = gamma_closed(3, 4)
    # (1 x d)G = G^2 - gamma^(21)
    lhs = apply_derivation(3, G, "w")
    assert (lhs - (G * G - g.swapped())).is_zero_on({"z": (-8, 8), "w": (-8, 8)})
    # (d x 1 + 1 x d)G = gamma - gamma^(21)
    both = apply_derivation(3, G, "z") + apply_derivation(3, G, "w")
    assert (both - (g - g.swapped())).is_zero_on({"z": (-8, 8), "w": (-8, 8)})


def test_phi_psi_leading_orders():
    phi, psi = solve_phi_psi(4)
    assert psi.coeff(1, ()) == -1
    assert psi.coeff(2, ()) == 0
    assert psi.coeff(3, (1,)) == Fraction(-1, 3)
    assert phi.coeff(1, ()) == 0
    assert phi.coeff(2, (1,)) == Fraction(1, 2)


def test_phi_psi_coefficients_are_low_index_polynomials():
    phi, psi = solve_phi_psi(6)
    for series in (phi, psi):
        for k, tab in series.terms.items():
            for d in tab:
                assert len(d) <= max(k - 1, 0)  # only g_0 .. g_{k-2}


def test_generating_identity_exact():
    assert generating_identity_check(3, 5, 8).ok


def test_tau_symmetric_and_odd():
    tau = compute_tau(3, 5, 10)
    assert not tau.terms.get(0)  # hbar^0 part is 0
    assert (tau - tau.swapped()).is_zero_on({"z": (-8, 8), "w": (-8, 8)})


def test_compute_U_columns_start_at_hbar():
    U, S = compute_U(3, 12, 4)
    for (i, j), col in U.items():
        assert 0 not in col  # U = O(hbar)
    assert U  # some columns are nonzero


def test_hanukah_exact_small():
    assert hanukah_check(3, 16, 4, check_window=6).ok


def test_q_closed_leading_orders_n3():
    q = compute_q_closed(3, 5, 10)
    assert q.coeff(0, (0, 0)) == 1
    for e in [(-2, -1), (-3, 0), (-7, 4)]:
        assert q.coeff(1, e) == 2  # hbar^1 row is 2G (golden, oracle-checked)
    assert q.coeff(2, (-4, -2)) == 2
    assert q.coeff(2, (-5, -1)) == 4


def test_q_closed_matches_operator_oracle():
    q1 = compute_q_closed(3, 4, 8)
    q2 = q_oracle_operator_route(3, 24, 4, 8)
    assert (q1 - q2).is_zero_on({"z": (-8, 8), "w": (-8, 8)})


@pytest.mark.parametrize("N", [2, 3, 5])
def test_vanishing_locus(N):
    reps = verify_vanishing_locus(N, 5, 10)
    for rep in reps:
        assert rep.ok, (rep.name, rep.detail, rep.witness)


def test_simply_laced_locus_n3():
    assert simply_laced_locus_check(3, 5, 8).ok


@pytest.mark.parametrize("alpha", [1, 2, -1, Fraction(1, 2)])
def test_scaling_covariance(alpha):
    assert scaling_covariance(3, alpha, 4, 8).ok


def test_bundle_serialization_roundtrip_header():
    b = build_bundle(3, 14, 3, 8)
    s = b.serialized()
    assert s.startswith("N=3 K=3 M=14 window=8\n")
    assert "[G]" in s and "[q]" in s
