"""qcv: batch verification CLI.

Runs the exact-arithmetic suites (rational, zn, level0), the floating-point
theta suite, or all of them, and emits machine-readable reports.

    qcv suite <name> [--N <int>]... [--K <int>] [--window <int>] [--M <int>]
        [--fixture <path>] [--out <path>] [--format json|text]
        [--config <path>]

Exit codes: 0 all-pass, 1 any-fail, 2 usage, 3 engine error, 4 I/O error.
Reports are byte-stable across runs with the same config and engine version:
records are canonically sorted and wall-clock times are serialized as null
(determinism would be impossible otherwise; measured times go to stderr).
``QCV_THREADS`` caps the worker pool; results never depend on it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__

SUITES = ("rational", "zn", "level0", "theta", "all")


class UsageError(ValueError):
    pass


@dataclass
class SuiteConfig:
    suite: str
    N_list: tuple = (3,)
    K: int = 6
    window: int = 12
    M: int = 40
    fixture: str = None
    out: str = None
    format: str = "json"

    def validate(self):
        if self.suite not in SUITES:
            raise UsageError(f"unknown suite {self.suite!r}")
        if self.K < 2:
            raise UsageError("K must be >= 2")
        if self.window < 2:
            raise UsageError("window must be >= 2")
        if self.M < 1:
            raise UsageError("M must be >= 1")
        if self.format not in ("json", "text"):
            raise UsageError("format must be json or text")
        if any(n < 1 for n in self.N_list):
            raise UsageError("N values must be >= 1")
        return self

    def echo(self):
        return {
            "suite": self.suite,
            "N": list(self.N_list),
            "K": self.K,
            "window": self.window,
            "M": self.M,
            "fixture": self.fixture,
            "format": self.format,
        }


@dataclass
class CheckRecord:
    module: str
    operation: str
    params: str
    residual: str     # "0" for exact zero, else a %.6e magnitude
    status: str       # pass | fail | inconclusive
    wall: float = 0.0

    def key(self):
        return (self.module, self.operation, self.params)


@dataclass
class SuiteReport:
    config: dict
    records: list = field(default_factory=list)
    engine_version: str = __version__

    def summary(self):
        out = {"pass": 0, "fail": 0, "inconclusive": 0}
        for r in self.records:
            out[r.status] += 1
        return out

    def exit_code(self):
        return 1 if self.summary()["fail"] else 0

    def to_json(self):
        payload = {
            "engine_version": self.engine_version,
            "config": self.config,
            "records": [
                {
                    "module": r.module,
                    "operation": r.operation,
                    "params": r.params,
                    "residual": r.residual,
                    "status": r.status,
                    "wall_s": None,
                }
                for r in sorted(self.records, key=CheckRecord.key)
            ],
            "summary": self.summary(),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_text(self):
        rows = [(r.module, r.operation, r.params, r.residual, r.status)
                for r in sorted(self.records, key=CheckRecord.key)]
        widths = [max(len(row[i]) for row in rows + [
            ("module", "operation", "params", "residual", "status")])
            for i in range(5)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        lines = [fmt.format("module", "operation", "params", "residual",
                            "status"),
                 fmt.format(*("-" * w for w in widths))]
        lines += [fmt.format(*row) for row in rows]
        s = self.summary()
        lines.append(f"engine {self.engine_version}  pass={s['pass']} "
                     f"fail={s['fail']} inconclusive={s['inconclusive']}")
        return "\n".join(lines) + "\n"


def _record(module, operation, params, ok, residual="0", inconclusive=False):
    status = "inconclusive" if inconclusive else ("pass" if ok else "fail")
    return CheckRecord(module, operation, params, residual, status)


def _from_report(module, operation, params, rep):
    return _record(module, operation, params, rep.ok,
                   "0" if rep.ok else f"witness:{rep.witness}")


# ---------------------------------------------------------------------------
# suite item lists (each item is a zero-argument callable -> [CheckRecord])


def _rational_items(cfg):
    from . import rational_kernel as rk

    items = []
    for N in cfg.N_list:
        if N < 2:
            continue

        def routes(N=N):
            _, G = rk.build_green(N, cfg.M, cfg.K, cfg.window)
            Gs = rk.green_sum_route(N, cfg.M, cfg.K, cfg.window)
            box = rk.sym_box(cfg.window)
            ok = (G - Gs).is_zero_on(box)
            return [_record("rational_kernel", "build_green",
                            f"N={N} routes", ok)]
        items.append(routes)

        def vanishing(N=N):
            reps = rk.verify_vanishing_locus(N, cfg.K, min(cfg.window, 12))
            return [_from_report("rational_kernel", "verify_vanishing_locus",
                                 f"N={N} {r.name}", r) for r in reps]
        items.append(vanishing)

        def scaling(N=N):
            out = []
            for alpha in (2, -1, Fraction(1, 2)):
                r = rk.scaling_covariance(N, alpha, min(cfg.K, 5), 8)
                out.append(_from_report("rational_kernel",
                                        "scaling_covariance",
                                        f"N={N} alpha={alpha}", r))
            return out
        items.append(scaling)

        if N % 2 == 1:
            def gamma(N=N):
                g = rk.gamma_closed(N, cfg.K)
                ok = bool(g.terms)
                return [_record("rational_kernel", "gamma_kernel",
                                f"N={N} membership", ok)]
            items.append(gamma)

            def gen_identity(N=N):
                r = rk.generating_identity_check(N, min(cfg.K, 6), 8)
                return [_from_report("rational_kernel", "solve_phi_psi",
                                     f"N={N} generating-identity", r)]
            items.append(gen_identity)

            def tau(N=N):
                t = rk.compute_tau(N, cfg.K, min(cfg.window, 10))
                ok = not t.terms.get(0)
                return [_record("rational_kernel", "compute_tau",
                                f"N={N} id-tau", ok)]
            items.append(tau)

    def hanukah():
        r = rk.hanukah_check(3, cfg.M, min(cfg.K, 5))
        return [_from_report("rational_kernel", "compute_U",
                             f"N=3 M={cfg.M} hanukah", r)]
    items.append(hanukah)

    def q_oracle():
        q1 = rk.compute_q_closed(3, 4, 8)
        q2 = rk.q_oracle_operator_route(3, 24, 4, 8)
        ok = (q1 - q2).is_zero_on(rk.sym_box(8))
        return [_record("rational_kernel", "compute_q_closed",
                        "N=3 closed-vs-operator", ok)]
    items.append(q_oracle)
    return items


def _zn_items(cfg):
    from . import zn_vertex as zn
    from .hseries import RegionSeries

    items = []

    def carries():
        ok = True
        for N in range(1, 9):
            for a in range(N):
                for b in range(N):
                    for c in range(N):
                        t = a + b + c - ((a + b + c) % N)
                        ok &= t == N * (zn.carry(N, a, b) + zn.carry(N, a + b, c))
                        ok &= t == N * (zn.carry(N, b, c) + zn.carry(N, a, b + c))
        return [_record("zn_vertex", "carry", "associativity N<=8", ok)]
    items.append(carries)

    def mu():
        out = []
        for N in range(1, 7):
            ok = all(zn.mu_projection(N, p, 16)[2] for p in range(N))
            out.append(_record("zn_vertex", "mu_projection",
                               f"N={N} all p window=16", ok))
        return out
    items.append(mu)

    for N in cfg.N_list:
        if N > 3:
            continue

        def plantes(N=N):
            res = zn.verify_plantes_equivalence(N, min(cfg.K, 4), 8)
            return [_record("zn_vertex", "verify_plantes_equivalence",
                            f"{name}", ok, "0" if ok else f"witness:{wit}")
                    for name, ok, wit in res]
        items.append(plantes)

    def pbw():
        out = []
        ok, _ = zn.pbw_symmetry_check(zn.master_rule(3))
        out.append(_record("zn_vertex", "pbw_symmetry_check",
                           "master N=3", ok))
        ok_bad, res = zn.pbw_symmetry_check(zn.adversarial_rule())
        stated = dict(res.terms) == {2: {(0, 0): Fraction(1)}}
        out.append(_record("zn_vertex", "pbw_symmetry_check",
                           "adversarial fails with hbar^2",
                           (not ok_bad) and stated))
        return out
    items.append(pbw)

    def confluence():
        rule = zn.master_rule(3)
        one3 = RegionSeries.one(("z", "w", "v"), 4)
        w0 = zn.FieldProduct((("x", "v"), ("x", "w"), ("x", "z")), one3)

        def reduce(prod, pick):
            rank = {v: i for i, v in enumerate(prod.coefficient.vars)}
            while True:
                fs = prod.factors
                pos = [i for i in range(len(fs) - 1)
                       if rank[fs[i][1]] > rank[fs[i + 1][1]]]
                if not pos:
                    return prod
                prod = zn.swap_adjacent(prod, pick(pos), rule, 4, 16)

        a = reduce(w0, lambda p: p[0])
        b = reduce(w0, lambda p: p[-1])
        diff = a.coefficient - b.coefficient
        ok = (a.factors == b.factors and not any(diff.terms.values())
              and sum(len(t) for t in a.coefficient.terms.values()) > 0)
        return [_record("zn_vertex", "normal_order", "length-3 confluence", ok)]
    items.append(confluence)
    return items


def _level0_items(cfg):
    from . import level0_algebra as l0
    from .hseries import RegionSeries
    from .rational_kernel import ZW

    M = min(cfg.M, 16)
    K = min(cfg.K, 4)
    one = RegionSeries.one(ZW, K)
    hb = RegionSeries.monomial(ZW, K, 1, (0, 0), hbar=1)
    items = []

    def duality():
        ok = all(v == (1 if i == j else 0)
                 for (i, j), v in l0.pairing_gram(3, 16).items())
        return [_record("level0_algebra", "residue_pairing",
                        "duality M=16", ok)]
    items.append(duality)

    def blambda():
        logq = l0.paper_normalized_log_q(3, M, K)
        op = l0.compute_B_V(N=3, M=M, K=K, logq=logq)
        b1 = op.b_lambda_order(1)
        ok = all(v == (1 if i == j else 0) for (i, j), v in b1.items()) \
            and all((i, i) in b1 for i in range(M))
        return [_record("level0_algebra", "compute_B_V",
                        f"paper-normalized B_Lambda=hbar id M={M}", ok)]
    items.append(blambda)

    def b_oracle():
        op = l0.compute_B_V(one, hb, 3, 8, K)
        b1 = op.b_lambda_order(1)
        ok = all(v == (2 if i == j else 0) for (i, j), v in b1.items())
        ok &= all(col[0] == 0 for col in op.V.values())
        return [_record("level0_algebra", "compute_B_V",
                        "(1,hbar) B=2hbar id, V=O(hbar)", ok)]
    items.append(b_oracle)

    def coproducts():
        return [_from_report("level0_algebra", "check_coproduct", r.name, r)
                for r in l0.check_coproduct(one, hb, 3, 4, K, D=3)]
    items.append(coproducts)

    def pairing():
        tab = l0.hopf_pairing_table(one, hb, 3, 8, K)
        ok = tab.ef_is_antidiagonal()
        ok &= all(col[1] == (2 if i == j else 0)
                  for (i, j), col in tab.hh.items())
        return [_record("level0_algebra", "hopf_pairing_table",
                        "anti-diagonal + 2hbar Gram", ok)]
    items.append(pairing)

    def mode_form():
        r = l0.mode_form_consistency(one, hb, 3, 6, K)
        return [_from_report("level0_algebra", "emit_relation_set",
                             "mode form Q=VP", r)]
    items.append(mode_form)

    def invariances():
        return [_from_report("level0_algebra", "compute_B_V", r.name, r)
                for r in l0.q_ab_invariance_checks(3, K, 10)]
    items.append(invariances)

    def twists():
        out = []
        for xi in (("K",), ("h", 0), ("e", -2), ("f", -2)):
            for r in l0.classical_twist_check(3, 8, xi):
                out.append(_from_report("level0_algebra",
                                        "classical_twist_check", r.name, r))
        return out
    items.append(twists)
    return items


def _theta_items(cfg):
    import cmath
    import math

    import numpy as np

    from . import theta_kernel as tk

    fixture = cfg.fixture or os.path.join(
        os.path.dirname(__file__), "..", "..", "fixtures", "g2_tabulated.fx")
    items = []

    def run():
        out = []
        data, point, pts = tk.read_fixture(fixture)

        v0, _ = tk.theta_eval(np.zeros(data.g, dtype=complex), data)
        out.append(_record("theta_kernel", "theta_eval", "oddness at 0",
                           abs(v0) < 1e-12, f"{abs(v0):.6e}"))

        z = pts["z"]
        v, _ = tk.theta_eval(z, data)
        vm, _ = tk.theta_eval(z + np.array([1.0] + [0.0] * (data.g - 1)), data)
        fac = cmath.exp(2j * math.pi * data.alpha[0])
        r = abs(vm - fac * v) / abs(v)
        out.append(_record("theta_kernel", "theta_eval",
                           "integer-shift invariance", r < 1e-10, f"{r:.6e}"))

        m = np.zeros(data.g)
        m[0] = 1.0
        vs, _ = tk.theta_eval(z + data.omega @ m, data)
        mult = cmath.exp(complex(-1j * math.pi * (m @ data.omega @ m)
                                 - 2j * math.pi
                                 * (m @ (z + np.array(data.beta)))))
        r = abs(vs - mult * v) / abs(vs)
        out.append(_record("theta_kernel", "theta_eval",
                           "quasi-periodicity Omega-shift", r < 1e-10,
                           f"{r:.6e}"))

        u = pts["z"] - pts["w"]
        g1 = tk.green_h_eval(u, data, point)
        g2 = tk.green_h_eval(-u, data, point)
        r = abs(g1 + g2) / abs(g1)
        out.append(_record("theta_kernel", "green_h_eval", "antisymmetry",
                           r < 1e-10, f"{r:.6e}"))

        gs = tk.green_h_eval(u + data.omega[:, 0], data, point)
        r = abs(gs - g1 + 2j * math.pi * point.h[0]) / abs(g1)
        out.append(_record("theta_kernel", "green_h_eval",
                           "Omega-shift law -2 pi i h_i", r < 1e-9,
                           f"{r:.6e}"))

        V = pts["ray"]
        zero = np.zeros(data.g, dtype=complex)
        target = tk.theta_dir(zero, data, point.h) / tk.theta_dir(zero, data, V)
        ts = [1e-2, 5e-3, 2.5e-3]
        vals = [t * tk.green_h_eval(t * V, data, point) for t in ts]
        r1 = [2 * vals[i + 1] - vals[i] for i in range(2)]
        rich = (4 * r1[1] - r1[0]) / 3
        r = abs(rich - target) / abs(target)
        out.append(_record("theta_kernel", "green_h_eval",
                           "pole limit (Richardson)", r < 1e-6, f"{r:.6e}"))

        rep = tk.c_linear_form(data, [point.h, pts["Vdelta1"]])
        ok = 1 in rep["kernel_indices"] and 0 not in rep["kernel_indices"]
        out.append(_record("theta_kernel", "c_linear_form",
                           "fixture tangent in kernel", ok))

        _, _, reports = tk.q0_decompose(pts["z"], pts["w"], pts["P"], data,
                                        point, ray=pts["ray"])
        for name, residual, tol, ok in reports:
            out.append(_record("theta_kernel", "q0_decompose", name, ok,
                               f"{residual:.6e}"))

        for kind, mm, mmp, tol in (("q", [1, 0], None, 1e-10),
                                   ("q", None, [1, 0], 1e-8)):
            r = tk.single_valuedness_check(kind, pts["z"], pts["w"], pts["P"],
                                           data, point, m=mm, mp=mmp)
            shift = "integer" if mm else "Omega"
            out.append(_record("theta_kernel", "single_valuedness_check",
                               f"{kind} {shift}-shift", r < tol, f"{r:.6e}"))
        r = tk.single_valuedness_check("q0_raw", pts["z"], pts["w"], pts["P"],
                                       data, point, mp=[1, 0])
        out.append(_record("theta_kernel", "single_valuedness_check",
                           "q0 unnormalized Omega-shift (expected failure)",
                           r > 1e-3, f"{r:.6e}"))

        # a second, random-but-seeded Omega exercises the same laws
        rng = np.random.default_rng(7)
        aa = rng.normal(size=(data.g, data.g))
        sym = rng.normal(size=(data.g, data.g))
        om2 = (sym + sym.T) / 2 + 1j * (aa @ aa.T + 0.6 * np.eye(data.g))
        d2 = tk.ThetaData(om2, data.alpha, data.beta)
        v0, _ = tk.theta_eval(np.zeros(data.g, dtype=complex), d2)
        out.append(_record("theta_kernel", "theta_eval",
                           "oddness at 0 (random Omega)",
                           abs(v0) < 1e-12, f"{abs(v0):.6e}"))
        z2 = np.array([0.2 - 0.1j, -0.15 + 0.12j])
        v, _ = tk.theta_eval(z2, d2)
        vs, _ = tk.theta_eval(z2 + d2.omega @ m, d2)
        mult = cmath.exp(complex(-1j * math.pi * (m @ d2.omega @ m)
                                 - 2j * math.pi
                                 * (m @ (z2 + np.array(d2.beta)))))
        r = abs(vs - mult * v) / abs(vs)
        out.append(_record("theta_kernel", "theta_eval",
                           "quasi-periodicity (random Omega)", r < 1e-10,
                           f"{r:.6e}"))
        return out

    items.append(run)
    return items


# ---------------------------------------------------------------------------


def run_suite(config):
    """Execute all checks of the named suite; deterministic output order."""
    config.validate()
    items = []
    if config.suite in ("rational", "all"):
        items += _rational_items(config)
    if config.suite in ("zn", "all"):
        items += _zn_items(config)
    if config.suite in ("level0", "all"):
        items += _level0_items(config)
    if config.suite in ("theta", "all"):
        items += _theta_items(config)

    threads = max(1, int(os.environ.get("QCV_THREADS", "1")))
    records = []
    if threads == 1:
        for item in items:
            t0 = time.monotonic()
            recs = item()
            dt = time.monotonic() - t0
            for r in recs:
                r.wall = dt / max(len(recs), 1)
            records.extend(recs)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for recs in pool.map(lambda f: f(), items):
                records.extend(recs)
    records.sort(key=CheckRecord.key)
    return SuiteReport(config.echo(), records)


def emit_report(report, format=None, out=None):
    """Serialize the report (byte-stable) and write it to ``out`` or stdout."""
    text = report.to_json() if format == "json" else report.to_text()
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise IOError(str(exc)) from exc
    else:
        sys.stdout.write(text)
    return text


def _load_config_file(path):
    """Flat key = value lines; '#' comments; N may be a comma list."""
    out = {}
    try:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line or line.startswith("["):
                    continue
                if "=" not in line:
                    raise UsageError(f"bad config line: {line!r}")
                key, val = (x.strip() for x in line.split("=", 1))
                out[key] = val
    except OSError as exc:
        raise IOError(str(exc)) from exc
    return out


def build_config(argv):
    parser = argparse.ArgumentParser(prog="qcv", add_help=True)
    sub = parser.add_subparsers(dest="command")
    sp = sub.add_parser("suite")
    sp.add_argument("name", choices=SUITES)
    sp.add_argument("--N", action="append", type=int, default=None)
    sp.add_argument("--K", type=int, default=None)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--fixture", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("json", "text"), default=None)
    sp.add_argument("--config", default=None)
    ns = parser.parse_args(argv)
    if ns.command != "suite":
        raise UsageError("expected: qcv suite <name> [...]")

    base = {"N": None, "K": 6, "window": 12, "M": 40,
            "fixture": None, "out": None, "format": "json"}
    if ns.config:
        fc = _load_config_file(ns.config)
        if "N" in fc:
            base["N"] = [int(x) for x in fc["N"].split(",")]
        for key in ("K", "window", "M"):
            if key in fc:
                base[key] = int(fc[key])
        for key in ("fixture", "out", "format"):
            if key in fc:
                base[key] = fc[key]
    if ns.N is not None:
        base["N"] = ns.N
    for key in ("K", "window", "M", "fixture", "out", "format"):
        val = getattr(ns, key)
        if val is not None:
            base[key] = val
    if base["N"] is None:
        base["N"] = {"rational": [2, 3, 5], "zn": [1, 2, 3]}.get(
            ns.name, [1, 2, 3, 5] if ns.name == "all" else [3])
    return SuiteConfig(ns.name, tuple(base["N"]), base["K"], base["window"],
                       base["M"], base["fixture"], base["out"],
                       base["format"])


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = build_config(argv)
        config.validate()
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        t0 = time.monotonic()
        report = run_suite(config)
        print(f"suite {config.suite}: {len(report.records)} checks in "
              f"{time.monotonic() - t0:.1f}s", file=sys.stderr)
    except (UsageError,) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # engine failure: diagnostic record, exit 3
        print(f"engine error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    try:
        emit_report(report, config.format, config.out)
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
