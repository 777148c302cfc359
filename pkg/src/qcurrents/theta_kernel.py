"""Riemann theta functions with characteristics and the genus > 1 Green
kernels, in ordinary floating point with certified-by-bound truncation.

Convention (fixed here once and used everywhere):

    theta[a,b](z) = sum_n exp(i pi (n+a)^T Omega (n+a) + 2 pi i (n+a).(z+b))

Under z -> z + m (integer m) the value picks up exp(2 pi i a.m); under
z -> z + Omega m it picks up exp(-i pi m^T Omega m - 2 pi i m.(z+b)).  The
log-derivative kernel G_h therefore satisfies G_h(u + Omega e_i) = G_h(u)
- 2 pi i h_i; sources that absorb 2 pi i into the variable write the same
shift as -h_i.  All identities verified here are stated in this convention.

Inputs are Jacobian-level (Omega, characteristics, points in C^g); nothing
here computes period matrices or Abel maps.  Lattice sums run in a fixed
deterministic order with compensated (math.fsum) accumulation, so results
are reproducible bit for bit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np


class ThetaDomainError(ValueError):
    """Omega fails symmetry/positivity requirements."""


class PrecisionError(ArithmeticError):
    """The requested tolerance cannot be certified at the radius cap."""


class PoleProximityError(ArithmeticError):
    def __init__(self, distance):
        super().__init__(f"evaluation within {distance:.3e} of the theta divisor")
        self.distance = distance


@dataclass
class ThetaData:
    omega: np.ndarray
    alpha: tuple
    beta: tuple
    tol: float = 1e-12
    radius_cap: int = 40

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=complex)
        g = self.omega.shape[0]
        if self.omega.shape != (g, g):
            raise ThetaDomainError("Omega must be square")
        if np.max(np.abs(self.omega - self.omega.T)) > 1e-14:
            raise ThetaDomainError("Omega must be symmetric (1e-14)")
        Y = self.omega.imag
        try:
            self._chol = np.linalg.cholesky(Y)
        except np.linalg.LinAlgError as exc:
            raise ThetaDomainError("Im Omega must be positive definite") from exc
        self.g = g
        self.alpha = tuple(float(x) for x in self.alpha)
        self.beta = tuple(float(x) for x in self.beta)
        self._lam_min = float(np.linalg.eigvalsh(Y)[0])

    def parity(self):
        """(-1)^(4 a.b): -1 on odd characteristics."""
        s = 4 * sum(a * b for a, b in zip(self.alpha, self.beta))
        return -1 if int(round(s)) % 2 else 1

    def half_period(self):
        """e = Omega a + b, the point the characteristic shifts to."""
        return self.omega @ np.array(self.alpha) + np.array(self.beta)


@dataclass
class KernelPoint:
    h: np.ndarray
    s: np.ndarray = None

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        if self.s is None:
            self.s = np.zeros_like(self.h)
        self.s = np.asarray(self.s, dtype=complex)


def _lattice(g, B):
    """All integer vectors with entries in [-B, B], in lexicographic order."""
    if g == 1:
        return [(n,) for n in range(-B, B + 1)]
    inner = _lattice(g - 1, B)
    return [(n,) + rest for n in range(-B, B + 1) for rest in inner]


def _radius_for(data, z):
    """Ellipsoidal radius with a certified Gaussian tail bound below tol.

    |term| = exp(-pi (nu + c)^T Y (nu + c) + pi y^T Y^-1 y) with nu = n+a,
    y = Im(z+b), c = Y^-1 y; we take B so that every omitted n has
    lam_min (|n|_inf - shift)^2 large enough."""
    Y = data.omega.imag
    y = np.array([zi.imag for zi in z]) + np.array([0.0] * data.g)
    y = y + np.array(data.beta) * 0  # beta is real; only Im(z) matters
    c = np.linalg.solve(Y, y)
    shift = float(np.max(np.abs(c))) + max(abs(a) for a in data.alpha) + 1.0
    boost = math.pi * float(y @ np.linalg.solve(Y, y))
    lam = data._lam_min
    B = 2
    while B <= data.radius_cap:
        # everything with |n|_inf > B sits at Y-distance >= lam*(B-shift)^2
        if B > shift:
            count = (2 * B + 3) ** data.g
            log_tail = boost + math.log(count) \
                - math.pi * lam * (B - shift) ** 2
            if log_tail < math.log(data.tol) - 1:
                return B, math.exp(log_tail)
        B += 1
    raise PrecisionError(f"tail bound unreachable at radius cap "
                         f"{data.radius_cap}")


def theta_eval(z, data):
    """theta[a,b](z) with an error estimate covering both the certified
    Gaussian tail bound and the roundoff of the compensated sum.

    Returns (value, error_estimate)."""
    z = np.asarray(z, dtype=complex)
    B, err = _radius_for(data, z)
    alpha = np.array(data.alpha)
    zb = z + np.array(data.beta)
    om = data.omega
    re_parts, im_parts = [], []
    mag = 0.0
    for n in _lattice(data.g, B):
        nu = np.array(n, dtype=float) + alpha
        expo = 1j * math.pi * (nu @ om @ nu) + 2j * math.pi * (nu @ zb)
        v = cmath.exp(complex(expo))
        re_parts.append(v.real)
        im_parts.append(v.imag)
        mag += abs(v)
    val = complex(math.fsum(re_parts), math.fsum(im_parts))
    return val, err + 8e-16 * mag


def theta_grad(z, data):
    """Gradient of theta[a,b] at z (term-wise differentiated lattice sum)."""
    z = np.asarray(z, dtype=complex)
    B, _ = _radius_for(data, z)
    alpha = np.array(data.alpha)
    zb = z + np.array(data.beta)
    om = data.omega
    comps = [([], []) for _ in range(data.g)]
    for n in _lattice(data.g, B):
        nu = np.array(n, dtype=float) + alpha
        expo = 1j * math.pi * (nu @ om @ nu) + 2j * math.pi * (nu @ zb)
        v = cmath.exp(complex(expo))
        for k in range(data.g):
            t = 2j * math.pi * nu[k] * v
            comps[k][0].append(t.real)
            comps[k][1].append(t.imag)
    return np.array([complex(math.fsum(re), math.fsum(im))
                     for re, im in comps])


def theta_dir(z, data, h):
    """Directional derivative of theta[a,b] along h at z."""
    return complex(np.asarray(h, dtype=complex) @ theta_grad(z, data))


def green_h_eval(u, data, point):
    """G_h(u) = (d_h theta / theta)[a,b](u); raises near the divisor."""
    val, err = theta_eval(u, data)
    grad = theta_grad(u, data)
    scale = float(np.max(np.abs(grad))) or 1.0
    if abs(val) < max(10 * err, 1e-13 * scale):
        raise PoleProximityError(abs(val) / scale)
    return complex(point.h @ grad) / val


def c_linear_form(data, directions, tol=1e-10):
    """h -> d_h theta(e): values on the supplied directions, numerical rank,
    and which directions lie in the kernel within tol.

    Directions are curve-level input (tangents of the theta divisor when
    supplied by a fixture); nothing here derives them from a curve."""
    grad0 = theta_grad(np.zeros(data.g, dtype=complex), data)
    vals = [complex(np.asarray(v, dtype=complex) @ grad0) for v in directions]
    scale = float(np.max(np.abs(grad0))) or 1.0
    kernel = [i for i, v in enumerate(vals) if abs(v) <= tol * scale]
    mat = np.array([list(np.asarray(v, dtype=complex)) for v in directions])
    rank = int(np.linalg.matrix_rank(mat, tol=1e-10)) if len(directions) else 0
    return {"values": vals, "kernel_indices": kernel,
            "direction_rank": rank, "scale": scale}


# ---------------------------------------------------------------------------
# structure functions on the Jacobian


def q0_plus(z, w, data, point):
    """q_{0+}(z, w) = theta[c](z - w - s) / theta[c](z - w)."""
    u = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
    num, _ = theta_eval(u - point.s, data)
    den, err = theta_eval(u, data)
    if abs(den) < 10 * max(err, 1e-300):
        raise PoleProximityError(abs(den))
    return num / den


def q0_ratio(z, w, data, point):
    """q_0(z, w) = theta[c](z - w + s) / theta[c](z - w - s)."""
    u = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
    num, _ = theta_eval(u + point.s, data)
    den, err = theta_eval(u - point.s, data)
    if abs(den) < 10 * max(err, 1e-300):
        raise PoleProximityError(abs(den))
    return num / den


def q_pm(z, w, data, point, sign):
    u = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
    val, _ = theta_eval(u + sign * point.s, data)
    return val


def green_R(z, w, P, data, point):
    """G_R(z,w) = G_h(z-w) - G_h(z-P) + G_h(w-P)."""
    z, w, P = (np.asarray(x, dtype=complex) for x in (z, w, P))
    return (green_h_eval(z - w, data, point)
            - green_h_eval(z - P, data, point)
            + green_h_eval(w - P, data, point))


def q0_decompose(z, w, P, data, point, ray=None, ts=(1e-2, 1e-3, 1e-4)):
    """Split q_{0+}(z,w)/(q_{0+}(z,P) q_{0+}(P,w)) as a + b G_R.

    b(z,w) = [theta[c](-s)/d_h theta[c](0)] / (q_{0+}(z,P) q_{0+}(P,z)); the
    scalar bracket is the Jacobian-level form of the reported normalization
    theta(hbar h)/(C(h) kappa).  Returns (a, b, reports) where the reports
    record (i) boundedness of a along a ray z -> w and (ii) monodromy
    triviality of a and b under z -> z + Omega e_i."""
    z, w, P = (np.asarray(x, dtype=complex) for x in (z, w, P))
    s = point.s

    def b_of(z1):
        num, _ = theta_eval(-s, data)
        den = theta_dir(np.zeros(data.g, dtype=complex), data, point.h)
        return (num / den) / (q0_plus(z1, P, data, point)
                              * q0_plus(P, z1, data, point))

    def Q_of(z1, w1):
        return q0_plus(z1, w1, data, point) / (
            q0_plus(z1, P, data, point) * q0_plus(P, w1, data, point))

    def a_of(z1, w1):
        return Q_of(z1, w1) - b_of(z1) * green_R(z1, w1, P, data, point)

    a_val = a_of(z, w)
    b_val = b_of(z)
    reports = []

    # (i) boundedness of a near the diagonal along a ray
    V = ray if ray is not None else np.ones(data.g, dtype=complex)
    vals = [a_of(w + t * V, w) for t in ts]
    scale = max(abs(v) for v in vals) or 1.0
    spread = max(abs(v1 - v2) for v1 in vals for v2 in vals) / scale
    reports.append(("a bounded near diagonal", spread, 1e-3, spread < 1e-3))

    # (ii) monodromy triviality under z -> z + Omega e_i
    for i in range(data.g):
        shift = data.omega[:, i]
        ra = abs(a_of(z + shift, w) - a_val) / (abs(a_val) or 1.0)
        rb = abs(b_of(z + shift) - b_val) / (abs(b_val) or 1.0)
        reports.append((f"a monodromy b_{i}", ra, 1e-8, ra < 1e-8))
        reports.append((f"b monodromy b_{i}", rb, 1e-8, rb < 1e-8))

    # the raw ratio alone is NOT monodromy-trivial (detects the need for
    # the P-normalization)
    raw = q0_plus(z, w, data, point)
    raw_shift = q0_plus(z + data.omega[:, 0], w, data, point)
    expected = cmath.exp(2j * math.pi * complex(point.s[0]))
    raw_res = abs(raw_shift / raw - expected)
    reports.append(("raw ratio multiplier = e^{2 pi i s_0}", raw_res, 1e-8,
                    raw_res < 1e-8))
    return a_val, b_val, reports


def single_valuedness_check(kind, z, w, P, data, point, m=None, mp=None):
    """Relative deviation of the P-normalized structure function under the
    lattice shift z -> z + m + Omega m'.

    kind: 'q' (the normalized theta ratio; single-valued under both shift
    types), 'q_plus'/'q_minus' (bare thetas: integer shifts only), or
    'q0_raw' (unnormalized ratio: the Omega-shift residual is the
    non-trivial multiplier itself, reported as the expected failure)."""
    z, w, P = (np.asarray(x, dtype=complex) for x in (z, w, P))
    m = np.zeros(data.g) if m is None else np.asarray(m, dtype=float)
    mp_ = np.zeros(data.g) if mp is None else np.asarray(mp, dtype=float)
    shift = m + data.omega @ mp_

    def norm(f):
        def g(z1, w1):
            return f(z1, w1) / (f(z1, P) * f(P, w1))
        return g

    if kind == "q":
        f = norm(lambda a, b: q0_ratio(a, b, data, point))
    elif kind == "q_plus":
        f = norm(lambda a, b: q_pm(a, b, data, point, +1))
    elif kind == "q_minus":
        f = norm(lambda a, b: q_pm(a, b, data, point, -1))
    elif kind == "q0_raw":
        f = lambda a, b: q0_ratio(a, b, data, point)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    base = f(z, w)
    moved = f(z + shift, w)
    return abs(moved - base) / (abs(base) or 1.0)


# ---------------------------------------------------------------------------
# fixtures and reports


def write_fixture(path, data, point, points):
    """Plain-text fixture: Omega entries row-major as 're im' pairs, the
    characteristic, h, e, and named test points."""
    def pair(v):
        c = complex(v)
        return f"{c.real!r} {c.imag!r}"

    lines = [f"genus {data.g}"]
    for row in np.asarray(data.omega):
        lines.append("omega " + " ".join(pair(v) for v in row))
    lines.append("alpha " + " ".join(repr(float(a)) for a in data.alpha))
    lines.append("beta " + " ".join(repr(float(b)) for b in data.beta))
    lines.append("h " + " ".join(pair(v) for v in point.h))
    lines.append("s " + " ".join(pair(v) for v in point.s))
    lines.append("e " + " ".join(pair(v) for v in data.half_period()))
    for name, vec in points.items():
        lines.append(f"point {name} " + " ".join(pair(v) for v in vec))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_fixture(path):
    omega_rows, points = [], {}
    alpha = beta = h = s = None
    g = None
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            key = parts[0]
            if key == "genus":
                g = int(parts[1])
            elif key == "omega":
                vals = [float(x) for x in parts[1:]]
                omega_rows.append([complex(vals[2 * i], vals[2 * i + 1])
                                   for i in range(len(vals) // 2)])
            elif key == "alpha":
                alpha = tuple(float(x) for x in parts[1:])
            elif key == "beta":
                beta = tuple(float(x) for x in parts[1:])
            elif key in ("h", "s", "e"):
                vals = [float(x) for x in parts[1:]]
                vec = np.array([complex(vals[2 * i], vals[2 * i + 1])
                                for i in range(len(vals) // 2)])
                if key == "h":
                    h = vec
                elif key == "s":
                    s = vec
            elif key == "point":
                vals = [float(x) for x in parts[2:]]
                points[parts[1]] = np.array(
                    [complex(vals[2 * i], vals[2 * i + 1])
                     for i in range(len(vals) // 2)])
    data = ThetaData(np.array(omega_rows), alpha, beta)
    return data, KernelPoint(h, s), points


def report_rows(checks):
    """rows 'check,name,residual,tolerance,pass' for a list of
    (check, name, residual, tolerance, ok)."""
    out = []
    for check, name, residual, tol, ok in checks:
        out.append(f"{check},{name},{residual:.6e},{tol:.1e},"
                   f"{'pass' if ok else 'fail'}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# high-precision oracle (mpmath)


def theta_eval_mp(z, data, dps=35, B=None):
    """Extended-precision theta evaluation (oracle for the fixtures)."""
    from mpmath import mp, mpc, exp as mpexp, pi as mppi, fsum as mpfsum

    old = mp.dps
    mp.dps = dps
    try:
        if B is None:
            B, _ = _radius_for(data, np.asarray(z, dtype=complex))
            B += 6
        alpha = data.alpha
        om = [[mpc(data.omega[i, j]) for j in range(data.g)]
              for i in range(data.g)]
        zb = [mpc(complex(z[i]) + data.beta[i]) for i in range(data.g)]
        terms = []
        for n in _lattice(data.g, B):
            nu = [n[i] + alpha[i] for i in range(data.g)]
            quad = mpc(0)
            for i in range(data.g):
                for j in range(data.g):
                    quad += nu[i] * om[i][j] * nu[j]
            lin = mpc(0)
            for i in range(data.g):
                lin += nu[i] * zb[i]
            terms.append(mpexp(1j * mppi * quad + 2j * mppi * lin))
        re = mpfsum([t.real for t in terms])
        im = mpfsum([t.imag for t in terms])
        return mpc(re, im)
    finally:
        mp.dps = old
