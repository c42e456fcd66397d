"""Integer-order cylinder functions J_q, H_q^(2) and derivatives.

Accurate through the transition region (order comparable to argument) and
safe at order far above argument, where J underflows and Y overflows the
double range by thousands of decades.  Values are carried as mantissa /
binary-exponent pairs.

Algorithm
---------
* J_q by backward (Miller-type) three-term recurrence started above the
  turning point, normalized with the Neumann sum J_0 + 2*sum J_{2m} = 1
  (an entire identity, valid for complex argument).
* H_q^(2) by forward recurrence from order-0/1 seeds: power series for
  |z| <= 12, large-argument asymptotic expansion otherwise.
* Derivatives from J'_q = J_{q-1} - (q/z) J_q (and the same for H).
* Every order is screened with the Wronskian sentinel
  J_q H_q^(2)' - J'_q H_q^(2) = -2i/(pi z).

Arguments must satisfy Im(z) <= 0 (outgoing second-kind convention with
exp(+j omega t) time dependence; complexified wavenumbers have negative
imaginary part).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AccuracyError, DomainError
from .scaled import ScaledComplex, _norm

MAX_ORDER = 100_000

_EULER_GAMMA = 0.5772156649015328606

# Magnitude threshold triggering a rescale inside the recurrences.
_RESCALE_AT = 2.0**512
_RESCALE_SHIFT = 1024
_RESCALE_FACTOR = 2.0**-1024


@dataclass(frozen=True)
class CylPair:
    """J_q, H_q^(2) and their z-derivatives at one (order, argument)."""

    q: int
    z: complex
    j: ScaledComplex
    h2: ScaledComplex
    jp: ScaledComplex
    h2p: ScaledComplex


class CylTables:
    """Vectorized cylinder-function table for orders 0..max_order at one z.

    Mantissa arrays are complex128, exponent arrays int64; entry nu holds
    value = m[nu] * 2**e[nu].
    """

    def __init__(self, z, j_m, j_e, h_m, h_e, jp_m, jp_e, hp_m, hp_e):
        self.z = z
        self.j_m, self.j_e = j_m, j_e
        self.h_m, self.h_e = h_m, h_e
        self.jp_m, self.jp_e = jp_m, jp_e
        self.hp_m, self.hp_e = hp_m, hp_e

    @property
    def max_order(self) -> int:
        return len(self.j_m) - 1

    def product(self, a: str, b: str, orders=None) -> np.ndarray:
        """Collapse value_a * value_b to plain complex at the given orders.

        Valid only for products that are O(poly(order)), e.g. j*h pairs.
        """
        am, ae = getattr(self, a + "_m"), getattr(self, a + "_e")
        bm, be = getattr(self, b + "_m"), getattr(self, b + "_e")
        if orders is not None:
            idx = np.asarray(orders)
            am, ae, bm, be = am[idx], ae[idx], bm[idx], be[idx]
        prod = am * bm
        e = (ae + be).astype(np.float64)
        scale = np.exp2(np.clip(e, -1060, 1023))
        return prod * scale

    def pair(self, q: int) -> CylPair:
        return CylPair(
            q=q,
            z=self.z,
            j=ScaledComplex(complex(self.j_m[q]), int(self.j_e[q])),
            h2=ScaledComplex(complex(self.h_m[q]), int(self.h_e[q])),
            jp=ScaledComplex(complex(self.jp_m[q]), int(self.jp_e[q])),
            h2p=ScaledComplex(complex(self.hp_m[q]), int(self.hp_e[q])),
        )


def _validate_argument(z: complex, max_order: int) -> complex:
    z = complex(z)
    if z == 0:
        raise DomainError("argument must be nonzero")
    if z.imag > 0:
        raise DomainError("Im(z) must be <= 0 for the outgoing H^(2) convention")
    if max_order < 0:
        raise DomainError("max_order must be nonnegative")
    if max_order > MAX_ORDER:
        raise DomainError(f"max_order {max_order} exceeds cap {MAX_ORDER}")
    return z


def _start_order(max_order: int, z: complex) -> int:
    az = abs(z)
    margin = max(20, math.ceil(10.0 * az ** (1.0 / 3.0)))
    # The backward recurrence only damps contamination above the turning
    # point, so the start must clear |z| regardless of the requested order.
    return max(max_order, math.ceil(az)) + margin


def _normalize_arrays(m: np.ndarray, e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vector renormalization so |mantissa| in [0.5, 2) (zeros untouched)."""
    r = np.abs(m)
    nz = r > 0.0
    _, ee = np.frexp(np.where(nz, r, 1.0))
    ee = np.where(nz, ee, 0).astype(np.int64)
    out = np.empty_like(m)
    out.real = np.ldexp(m.real, -ee)
    out.imag = np.ldexp(m.imag, -ee)
    return out, e + ee


def _miller_j(max_order: int, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Backward recurrence for J_0..J_max_order, Neumann-sum normalized."""
    M = _start_order(max_order, z)
    n_keep = max_order + 1
    raw = np.zeros(n_keep, dtype=np.complex128)
    exps = np.zeros(n_keep, dtype=np.int64)

    two_over_z = 2.0 / z
    # Run nu from M down to 0; f_n is the (arbitrarily scaled) value at the
    # current order, f_np1 one order above.
    f_np1 = 0.0j
    f_n = 1.0 + 0.0j
    exp_run = 0
    # Neumann sum accumulator, kept normalized (|acc| in [0.5, 2)) so that
    # exponent comparisons reflect true magnitudes across rescales.
    acc = 0.0j
    acc_e = 0
    if M % 2 == 0:
        acc, acc_e = _norm(2.0 * f_n, exp_run)
    for nu in range(M - 1, -1, -1):
        f_nm1 = (nu + 1) * two_over_z * f_n - f_np1
        f_np1 = f_n
        f_n = f_nm1
        if abs(f_n.real) > _RESCALE_AT or abs(f_n.imag) > _RESCALE_AT:
            f_n *= _RESCALE_FACTOR
            f_np1 *= _RESCALE_FACTOR
            exp_run += _RESCALE_SHIFT
        if nu <= max_order:
            raw[nu] = f_n
            exps[nu] = exp_run
        if nu % 2 == 0:
            w = 1.0 if nu == 0 else 2.0
            tm, te = _norm(w * f_n, exp_run)
            if tm != 0:
                d = te - acc_e
                if acc == 0 or d > 120:
                    acc, acc_e = tm, te
                elif d >= -120:
                    if d >= 0:
                        acc, acc_e = _norm(acc * math.ldexp(1.0, -d) + tm, te)
                    else:
                        acc, acc_e = _norm(acc + tm * math.ldexp(1.0, d), acc_e)

    if acc == 0:
        raise AccuracyError("Neumann normalization sum vanished")
    j_m = raw / acc
    j_e = exps - acc_e
    return _normalize_arrays(j_m, j_e)


def _harmonic(n: int) -> float:
    return sum(1.0 / l for l in range(1, n + 1))


def _h2_seeds_series(z: complex) -> tuple[complex, complex]:
    """H^(2)_0(z), H^(2)_1(z) by power series; for |z| <= ~12."""
    w = 0.25 * z * z
    lg = np.log(z / 2.0) + _EULER_GAMMA  # principal branch; Re z > 0 or Im z < 0

    # J_0 and the Y_0 correction series share term magnitudes.
    j0 = 1.0 + 0.0j
    y0s = 0.0j
    term = 1.0 + 0.0j
    for m in range(1, 200):
        term *= -w / (m * m)
        j0 += term
        y0s += -term * _harmonic(m)  # (-1)^{m+1} H_m w^m/(m!)^2
        if abs(term) < 1e-20 * abs(j0) and m > 4:
            break

    j1 = 1.0 + 0.0j
    term = 1.0 + 0.0j
    for m in range(1, 200):
        term *= -w / (m * (m + 1))
        j1 += term
        if abs(term) < 1e-20 * abs(j1) and m > 4:
            break
    j1 *= 0.5 * z

    y1s = 0.0j
    term = 1.0 + 0.0j
    for m in range(0, 200):
        if m > 0:
            term *= -w / (m * (m + 1))
        contrib = term * (_harmonic(m) + _harmonic(m + 1))
        y1s += contrib
        if abs(contrib) < 1e-20 * max(abs(y1s), 1.0) and m > 4:
            break

    two_over_pi = 2.0 / math.pi
    y0 = two_over_pi * (lg * j0 + y0s)
    y1 = two_over_pi * (lg * j1 - 1.0 / z - 0.25 * z * y1s)
    return j0 - 1j * y0, j1 - 1j * y1


def _h2_seeds_asymptotic(z: complex) -> tuple[complex, complex]:
    """H^(2)_0(z), H^(2)_1(z) by the large-argument expansion; |z| > ~12."""
    pref = np.sqrt(2.0 / (math.pi * z))
    out = []
    for nu in (0, 1):
        fournu2 = 4.0 * nu * nu
        s = 1.0 + 0.0j
        term = 1.0 + 0.0j
        last = math.inf
        for m in range(1, 200):
            term *= (fournu2 - (2 * m - 1) ** 2) / (8.0 * m * z)
            t = (-1j) ** m * term
            mag = abs(t)
            if mag >= last:  # divergent tail reached; stop at smallest term
                break
            s += t
            last = mag
            if mag < 1e-18 * abs(s):
                break
        omega = z - nu * (math.pi / 2.0) - math.pi / 4.0
        out.append(pref * np.exp(-1j * omega) * s)
    return out[0], out[1]


def _forward_h2(max_order: int, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Forward recurrence for H^(2)_0..max_order (dominant direction)."""
    if abs(z) <= 12.0:
        h0, h1 = _h2_seeds_series(z)
    else:
        h0, h1 = _h2_seeds_asymptotic(z)
    n_keep = max_order + 1
    raw = np.zeros(n_keep, dtype=np.complex128)
    exps = np.zeros(n_keep, dtype=np.int64)
    raw[0] = h0
    if max_order >= 1:
        raw[1] = h1
    prev, cur = complex(h0), complex(h1)
    exp_run = 0
    two_over_z = 2.0 / z
    for nu in range(1, max_order):
        nxt = nu * two_over_z * cur - prev
        prev, cur = cur, nxt
        if abs(cur.real) > _RESCALE_AT or abs(cur.imag) > _RESCALE_AT:
            prev *= _RESCALE_FACTOR
            cur *= _RESCALE_FACTOR
            exp_run += _RESCALE_SHIFT
        raw[nu + 1] = cur
        exps[nu + 1] = exp_run
    return _normalize_arrays(raw, exps)


def _derivative_tables(m, e, z):
    """vp_nu = v_{nu-1} - (nu/z) v_nu in mantissa/exponent arithmetic."""
    n = len(m)
    orders = np.arange(n)
    dp_m = np.empty_like(m)
    dp_e = np.empty_like(e)
    # vp_0 = -v_1
    dp_m[0], dp_e[0] = -m[1], e[1]
    d = (e[:-1] - e[1:]).astype(np.float64)
    scale = np.exp2(np.clip(d, -1060, 1023))
    shifted = m[:-1] * scale  # v_{nu-1} expressed at exponent e[nu]
    dp_m[1:] = shifted - (orders[1:] / z) * m[1:]
    dp_e[1:] = e[1:]
    return _normalize_arrays(dp_m, dp_e)


def wronskian_residual_arrays(t: CylTables) -> np.ndarray:
    """Relative Wronskian residual for every order in the table."""
    jhp = t.product("j", "hp")
    jph = t.product("jp", "h")
    target = -2j / (math.pi * t.z)
    return np.abs(jhp - jph - target) / abs(target)


def cyl_tables(max_order: int, z: complex) -> CylTables:
    """Build J/H^(2)/derivative tables for orders 0..max_order at z.

    Raises AccuracyError if any order fails the Wronskian sentinel at 1e-8.
    """
    z = _validate_argument(z, max_order)
    n = max(max_order, 1)
    j_m, j_e = _miller_j(n, z)
    h_m, h_e = _forward_h2(n, z)
    jp_m, jp_e = _derivative_tables(j_m, j_e, z)
    hp_m, hp_e = _derivative_tables(h_m, h_e, z)
    t = CylTables(z, j_m, j_e, h_m, h_e, jp_m, jp_e, hp_m, hp_e)
    res = wronskian_residual_arrays(t)
    worst = float(np.max(res))
    if worst > 1e-8:
        raise AccuracyError(
            f"Wronskian residual {worst:.3e} at order {int(np.argmax(res))} "
            f"for z={z!r}: seed or recurrence failure"
        )
    return t


def cyl_sequence(max_order: int, z: complex) -> list[CylPair]:
    """CylPair list for q = 0..max_order at argument z."""
    t = cyl_tables(max_order, z)
    return [t.pair(q) for q in range(max_order + 1)]


def wronskian_residual(pair: CylPair) -> float:
    """|J H2' - J' H2 + 2i/(pi z)| * |pi z / 2| for one pair."""
    lhs = pair.j * pair.h2p - pair.jp * pair.h2
    target = ScaledComplex.from_complex(-2j / (math.pi * pair.z))
    diff = lhs - target
    return diff.magnitude() * abs(math.pi * pair.z / 2.0)


# ---------------------------------------------------------------------------
# Reference table (high-precision oracle values, checked in under data/)
# ---------------------------------------------------------------------------

REFERENCE_CSV = Path(__file__).parent / "data" / "bessel_reference.csv"

REFERENCE_ORDERS = [0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 200]
REFERENCE_REAL_ARGS = [0.5, 1.0, 2.5, 5.0, 11.0, 12.5, 20.0, 50.0, 120.0, 300.0]
REFERENCE_COMPLEX_BASE = [1.0, 5.0, 20.0, 100.0, 300.0]
REFERENCE_COMPLEX_ORDERS = [0, 1, 5, 21, 89, 200]


def reference_grid() -> list[tuple[int, complex]]:
    pts = [(q, complex(x, 0.0)) for q in REFERENCE_ORDERS for x in REFERENCE_REAL_ARGS]
    for x in REFERENCE_COMPLEX_BASE:
        zc = complex(x, -0.4 * x ** (1.0 / 3.0))
        pts.extend((q, zc) for q in REFERENCE_COMPLEX_ORDERS)
    return pts


def _mp_scaled(val) -> tuple[float, float, int]:
    """Split an mpmath complex into (Re mant, Im mant, exp2)."""
    import mpmath as mp

    mag = abs(val)
    if mag == 0:
        return 0.0, 0.0, 0
    _, e = mp.frexp(mag)
    e = int(e)
    scaled = val * mp.mpf(2.0) ** (-e)
    return float(scaled.real), float(scaled.imag), e


def generate_reference_table(path: Path | str = REFERENCE_CSV, dps: int = 50) -> int:
    """Regenerate the checked-in oracle CSV with mpmath; returns row count."""
    import mpmath as mp

    rows = []
    with mp.workdps(dps):
        for q, z in reference_grid():
            zm = mp.mpc(z.real, z.imag)
            jv = mp.besselj(q, zm)
            hv = mp.hankel2(q, zm)
            jr, ji, je = _mp_scaled(jv)
            hr, hi, he = _mp_scaled(hv)
            rows.append((q, z.real, z.imag, jr, ji, je, hr, hi, he))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "re_z", "im_z", "re_j", "im_j", "exp2_j", "re_h2", "im_h2", "exp2_h2"])
        for q, zr, zi, jr, ji, je, hr, hi, he in rows:
            w.writerow([q, f"{zr:.17g}", f"{zi:.17g}", f"{jr:.17g}", f"{ji:.17g}",
                        je, f"{hr:.17g}", f"{hi:.17g}", he])
    return len(rows)


def load_reference_table(path: Path | str = REFERENCE_CSV):
    """Rows of (q, z, J as ScaledComplex, H2 as ScaledComplex)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            q = int(rec["q"])
            z = complex(float(rec["re_z"]), float(rec["im_z"]))
            j = ScaledComplex(complex(float(rec["re_j"]), float(rec["im_j"])), int(rec["exp2_j"]))
            h = ScaledComplex(complex(float(rec["re_h2"]), float(rec["im_h2"])), int(rec["exp2_h2"]))
            out.append((q, z, j, h))
    return out
