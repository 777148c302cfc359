"""Acceptance suite: one test per criterion, each printing a pass/fail line.

All formal-identity criteria demand residuals that are exactly zero in exact
arithmetic on certified windows; the theta criteria are tolerance-bounded
floating point.  Stated runtime limits are asserted with time.monotonic().
"""

import cmath
import json
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

ROOT = os.path.join(os.path.dirname(__file__), "..")
FIXTURE = os.path.join(ROOT, "fixtures", "g2_tabulated.fx")


def _line(num, name, ok, extra=""):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:2d}] {status}  {name}{'  ' + extra if extra else ''}")
    return ok


def test_criterion_01_vanishing_locus():
    from qcurrents.rational_kernel import verify_vanishing_locus

    ok = True
    for N in (2, 3, 5):
        t0 = time.monotonic()
        reps = verify_vanishing_locus(N, 6, 12)
        dt = time.monotonic() - t0
        good = all(r.ok for r in reps) and dt < 60
        _line(1, f"q vanishes at z=q^-d w (N={N}, K=6, window 12)", good,
              f"{dt:.1f}s")
        ok = ok and good
    assert ok


def test_criterion_02_simply_laced():
    from qcurrents.rational_kernel import simply_laced_locus_check

    ok = True
    for N in (3, 5):
        t0 = time.monotonic()
        rep = simply_laced_locus_check(N, 6, 8)
        dt = time.monotonic() - t0
        good = rep.ok and dt < 60
        _line(2, f"z-w+(z-w)G psi vanishes at the locus (N={N}, K=6)", good,
              f"{dt:.1f}s")
        ok = ok and good
    assert ok


def test_criterion_03_hanukah():
    from qcurrents.rational_kernel import hanukah_check

    t0 = time.monotonic()
    rep = hanukah_check(3, 40, 5)
    dt = time.monotonic() - t0
    ok = rep.ok and dt < 120
    assert _line(3, "shift-operator identity with computed U "
                    "(N=3, K=5, M=40)", ok, f"{dt:.1f}s")


def test_criterion_04_generating_identity():
    from qcurrents.rational_kernel import generating_identity_check

    rep = generating_identity_check(3, 6, 8)
    assert _line(4, "generating identity phi - ln(1+G psi) (N=3, K=6)",
                 rep.ok)


def test_criterion_05_plantes_equivalence():
    from qcurrents.zn_vertex import verify_plantes_equivalence

    t0 = time.monotonic()
    ok = True
    for N in (1, 2, 3):
        results = verify_plantes_equivalence(N, 4, 8)
        ok = ok and all(good for _, good, _ in results)
    dt = time.monotonic() - t0
    ok = ok and dt < 120
    assert _line(5, "carry-family equivalence, both directions "
                    "(N in {1,2,3}, K=4, window 8)", ok, f"{dt:.1f}s")


def test_criterion_06_root_of_unity_partial_fraction():
    from qcurrents.zn_vertex import mu_projection

    ok = all(mu_projection(N, p, 16)[2]
             for N in range(1, 7) for p in range(N))
    assert _line(6, "root-of-unity partial fraction exact (N<=6, window 16)",
                 ok)


def test_criterion_07_pbw_gate():
    from qcurrents.hseries import RegionSeries
    from qcurrents.zn_vertex import (FieldProduct, adversarial_rule,
                                     master_rule, pbw_symmetry_check,
                                     swap_adjacent)

    ok_pass, _ = pbw_symmetry_check(master_rule(3))
    ok_fail, res = pbw_symmetry_check(adversarial_rule())
    # the exact residual of (z-w+h)(w-z+h) - (z-w)(w-z) is h^2
    stated = dict(res.terms) == {2: {(0, 0): Fraction(1)}}

    rule = master_rule(3)
    one3 = RegionSeries.one(("z", "w", "v"), 4)
    w0 = FieldProduct((("x", "v"), ("x", "w"), ("x", "z")), one3)

    def reduce(prod, pick):
        rank = {v: i for i, v in enumerate(prod.coefficient.vars)}
        while True:
            fs = prod.factors
            pos = [i for i in range(len(fs) - 1)
                   if rank[fs[i][1]] > rank[fs[i + 1][1]]]
            if not pos:
                return prod
            prod = swap_adjacent(prod, pick(pos), rule, 4, 16)

    a = reduce(w0, lambda p: p[0])
    b = reduce(w0, lambda p: p[-1])
    diff = a.coefficient - b.coefficient
    confluent = (a.factors == b.factors and not any(diff.terms.values())
                 and sum(len(t) for t in a.coefficient.terms.values()) > 0)
    ok = ok_pass and (not ok_fail) and stated and confluent
    assert _line(7, "PBW gate: rational passes, adversarial fails (residual "
                    "hbar^2), length-3 confluence exact", ok)


def test_criterion_08_scaling_law():
    from qcurrents.rational_kernel import scaling_covariance

    ok = all(scaling_covariance(3, alpha, 6, 8).ok
             for alpha in (2, -1, Fraction(1, 2)))
    assert _line(8, "scaling law q_{a^N hbar}(az,aw) = q(z,w) "
                    "(N=3, a in {2,-1,1/2})", ok)


def test_criterion_09_level0():
    from qcurrents.hseries import RegionSeries
    from qcurrents.level0_algebra import (check_coproduct, compute_B_V,
                                          hopf_pairing_table, pairing_gram,
                                          paper_normalized_log_q)
    from qcurrents.rational_kernel import ZW

    duality = all(v == (1 if i == j else 0)
                  for (i, j), v in pairing_gram(3, 16).items())

    logq = paper_normalized_log_q(3, 16, 4)
    op = compute_B_V(N=3, M=16, K=4, logq=logq)
    b1 = op.b_lambda_order(1)
    blam = all(v == (1 if i == j else 0) for (i, j), v in b1.items()) \
        and all((i, i) in b1 for i in range(16))

    one = RegionSeries.one(ZW, 4)
    hb = RegionSeries.monomial(ZW, 4, 1, (0, 0), hbar=1)
    cop = all(r.ok for r in check_coproduct(one, hb, 3, 4, 4, D=3))
    tab = hopf_pairing_table(one, hb, 3, 8, 4)
    anti = tab.ef_is_antidiagonal()
    ok = duality and blam and cop and anti
    assert _line(9, "level-0: duality M=16, B_Lambda = hbar id (paper-"
                    "normalized), coproduct residuals zero, anti-diagonal "
                    "pairing", ok)


def test_criterion_10_classical_twist():
    from qcurrents.level0_algebra import classical_twist_check

    t0 = time.monotonic()
    ok = True
    for xi in (("K",), ("h", 0), ("e", -2), ("f", -2)):
        reps = classical_twist_check(3, 8, xi)
        ok = ok and all(r.ok for r in reps)
        ok = ok and all(r.witness for r in reps[:2])  # truncation certificate
    dt = time.monotonic() - t0
    ok = ok and dt < 60
    assert _line(10, "classical twist identities on window 8 "
                     "(xi in {K, h[1], e[z^-2], f[z^-2]}, N=3)", ok,
                 f"{dt:.1f}s")


def test_criterion_11_theta_suite():
    import qcurrents.theta_kernel as tk

    t0 = time.monotonic()
    results = []

    def run_on(data, point, pts):
        z, w, P = pts["z"], pts["w"], pts["P"]
        v0, _ = tk.theta_eval(np.zeros(data.g, dtype=complex), data)
        results.append(abs(v0) < 1e-12)

        v, _ = tk.theta_eval(z, data)
        m = np.zeros(data.g)
        m[0] = 1.0
        vs, _ = tk.theta_eval(z + data.omega @ m, data)
        mult = cmath.exp(complex(-1j * math.pi * (m @ data.omega @ m)
                                 - 2j * math.pi
                                 * (m @ (z + np.array(data.beta)))))
        results.append(abs(vs - mult * v) / abs(vs) < 1e-10)

        u = z - w
        g1 = tk.green_h_eval(u, data, point)
        results.append(abs(g1 + tk.green_h_eval(-u, data, point))
                       / abs(g1) < 1e-10)
        gs = tk.green_h_eval(u + data.omega[:, 0], data, point)
        results.append(abs(gs - g1 + 2j * math.pi * point.h[0])
                       / abs(g1) < 1e-9)

        V = pts["ray"]
        zero = np.zeros(data.g, dtype=complex)
        target = tk.theta_dir(zero, data, point.h) / tk.theta_dir(zero, data, V)
        ts = [1e-2, 5e-3, 2.5e-3]
        vals = [t * tk.green_h_eval(t * V, data, point) for t in ts]
        r1 = [2 * vals[i + 1] - vals[i] for i in range(2)]
        rich = (4 * r1[1] - r1[0]) / 3
        results.append(abs(rich - target) / abs(target) < 1e-6)

        _, _, reports = tk.q0_decompose(z, w, P, data, point, ray=V)
        results.extend(ok for _, _, _, ok in reports)

    data, point, pts = tk.read_fixture(FIXTURE)
    run_on(data, point, pts)

    rng = np.random.default_rng(7)
    aa = rng.normal(size=(2, 2))
    sym = rng.normal(size=(2, 2))
    om2 = (sym + sym.T) / 2 + 1j * (aa @ aa.T + 0.6 * np.eye(2))
    data2 = tk.ThetaData(om2, data.alpha, data.beta)
    run_on(data2, point, pts)

    dt = time.monotonic() - t0
    ok = all(results) and dt < 120
    assert _line(11, f"theta suite on tabulated + random g=2 fixtures "
                     f"({len(results)} checks)", ok, f"{dt:.1f}s")


def test_criterion_12_cli_determinism():
    t0 = time.monotonic()

    def run(path):
        proc = subprocess.run(
            [sys.executable, "-m", "qcurrents.qgcli", "suite", "all",
             "--out", path],
            capture_output=True, text=True, cwd=ROOT)
        return proc.returncode

    p1, p2 = "/tmp/qcv_all_1.json", "/tmp/qcv_all_2.json"
    rc1 = run(p1)
    rc2 = run(p2)
    dt = time.monotonic() - t0
    same = open(p1, "rb").read() == open(p2, "rb").read()
    summary = json.load(open(p1))["summary"]
    ok = rc1 == 0 and rc2 == 0 and same and dt < 600 \
        and summary["fail"] == 0
    assert _line(12, "qcv suite all: exit 0, byte-identical JSON twice, "
                     "< 10 min", ok, f"{dt:.1f}s for both runs")
