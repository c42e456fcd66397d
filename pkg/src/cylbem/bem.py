"""Galerkin boundary-element assembly and solves on the circle.

This module is the measurement side of the package: matrices are built by
numerical quadrature of the layer-potential kernels, right-hand sides by
testing incident-field traces, and currents by dense direct solves.  It
shares no code path with the folded-eigenvalue predictions in
`discretization`, so agreement between the two is a genuine cross-check.

Geometry and bases
------------------
Elements are exact circular arcs between vertices phi_n = 2 pi n / N.
Basis functions are vertex-centered B-splines in arc length (p=0 pulse of
one element width, p=1 hat over two elements), identical for test and
source.  All kernels depend only on the angle difference, so each matrix
is circulant and one row of distinct interactions suffices:

    C(d) = (a^2/h) Int K(Delta) R(Delta + 2 pi d / N) dDelta,

with R the test/source correlation (triangle for pulses, cubic B-spline
for hats; for the derivative terms of the hypersingular form, the
correlation of the basis derivatives).

Singular quadrature
-------------------
Kernels split as K(Delta) = A(Delta) * 2 ln|Delta| + B(Delta) with A, B
analytic; B is evaluated by subtraction away from zero and by its closed
diagonal limit at zero.  On subintervals touching Delta = 0 the log part
is integrated with exact shifted-Legendre log moments
( Int_0^1 P_n(2u-1) ln u du = -1 for n=0, (-1)^{n+1}/(n(n+1)) otherwise )
and the smooth part with Gauss-Legendre; plain Gauss handles everything
else.  Rules are doubled until the row stabilizes.

The hypersingular operator uses the integration-by-parts bilinear form

    <t, N f> = (1/k) Int G t' f' - k Int G (n.n') t f      (arc-length
    derivatives), whose sign is pinned by the circle Calderon identity and
    frozen by a regression test.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import circulant, lu_factor, lu_solve
from scipy.special import hankel2, jv, roots_legendre

from .discretization import BasisSpec, fourier_coeff
from .errors import (
    DomainError,
    NearSingularWarning,
    NotCirculantError,
    PreconditionError,
    QuadratureError,
    TruncationWarning,
)
from .spectra import (
    Composite,
    FormulationId,
    OperatorId,
    OperatorKind,
    Polarization,
    ProblemConfig,
    WavenumberTag,
    tables_for,
)

_EULER_GAMMA = 0.5772156649015328606


@dataclass(frozen=True)
class Mesh:
    """Uniform closed mesh of the circle: N arc elements, radius a."""

    N: int
    a: float

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise DomainError("N must be even and >= 4")
        if self.a <= 0:
            raise DomainError("radius must be positive")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.a / self.N

    @property
    def h_theta(self) -> float:
        return 2.0 * math.pi / self.N

    def vertex_angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.N) / self.N

    @staticmethod
    def for_config(cfg: ProblemConfig) -> "Mesh":
        return Mesh(cfg.N, cfg.a)


@dataclass(frozen=True)
class QuadratureSpec:
    n_gauss: int = 16
    target: float = 1e-10
    max_doublings: int = 2


@dataclass
class DenseOperatorMatrix:
    matrix: np.ndarray
    op: OperatorId
    n_gauss: int
    singular_split: bool
    quad_error_estimate: float

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def first_row(self) -> np.ndarray:
        return self.matrix[0]


@dataclass
class CurrentSolution:
    coefficients: np.ndarray
    vertex_values: np.ndarray
    formulation: FormulationId
    residual: float
    cond_estimate: float


# ---------------------------------------------------------------------------
# basis correlation functions (angle variable, element width h = 2 pi / N)
# ---------------------------------------------------------------------------


def _corr_value(p: int, h: float, psi: np.ndarray) -> np.ndarray:
    """R(psi): correlation of two identical vertex-centered bases."""
    u = np.abs(psi) / h
    if p == 0:
        return h * np.clip(1.0 - u, 0.0, None)
    out = np.zeros_like(u)
    m1 = u < 1.0
    m2 = (u >= 1.0) & (u < 2.0)
    out[m1] = h * (2.0 / 3.0 - u[m1] ** 2 + 0.5 * u[m1] ** 3)
    out[m2] = h * ((2.0 - u[m2]) ** 3 / 6.0)
    return out


def _corr_deriv_value(h: float, psi: np.ndarray) -> np.ndarray:
    """R'(psi): correlation of the two hat-basis angle derivatives (p=1)."""
    u = np.abs(psi) / h
    out = np.zeros_like(u)
    m1 = u < 1.0
    m2 = (u >= 1.0) & (u < 2.0)
    out[m1] = (2.0 - 3.0 * u[m1]) / h
    out[m2] = (u[m2] - 2.0) / h
    return out


def _corr_halfwidth(p: int, h: float) -> float:
    return (p + 1) * h


# ---------------------------------------------------------------------------
# kernels and their log splits
# ---------------------------------------------------------------------------


class _Kernel:
    """Convolution kernel K(Delta) with split K = A * 2 ln|Delta| + B."""

    def __init__(self, k: complex, a: float, kind: str):
        self.k = complex(k)
        self.a = a
        self.kind = kind  # 'S', 'D', or 'G'

    def _r(self, delta: np.ndarray) -> np.ndarray:
        return 2.0 * self.a * np.abs(np.sin(0.5 * delta))

    def full(self, delta: np.ndarray) -> np.ndarray:
        r = self._r(delta)
        if self.kind == "D":
            return 0.25j * self.k * hankel2(1, self.k * r) * np.abs(np.sin(0.5 * delta))
        g = -0.25j * hankel2(0, self.k * r)
        return self.k * g if self.kind == "S" else g

    def log_factor(self, delta: np.ndarray) -> np.ndarray:
        """A(Delta): analytic coefficient of 2 ln|Delta|."""
        r = self._r(delta)
        if self.kind == "D":
            return (self.k / (4.0 * math.pi)) * jv(1, self.k * r) * np.abs(np.sin(0.5 * delta))
        a0 = -jv(0, self.k * r) / (4.0 * math.pi)
        return self.k * a0 if self.kind == "S" else a0

    def smooth(self, delta: np.ndarray) -> np.ndarray:
        """B(Delta) = K - A * 2 ln|Delta| with the exact diagonal limit."""
        delta = np.asarray(delta, dtype=float)
        out = np.empty(delta.shape, dtype=complex)
        tiny = np.abs(delta) < 1e-14
        reg = ~tiny
        out[reg] = self.full(delta[reg]) - self.log_factor(delta[reg]) * 2.0 * np.log(np.abs(delta[reg]))
        if np.any(tiny):
            out[tiny] = self._diagonal()
        return out

    def _diagonal(self) -> complex:
        if self.kind == "D":
            return -1.0 / (4.0 * math.pi * self.a)
        g0 = -0.25j - (_EULER_GAMMA + np.log(self.k * self.a / 2.0)) / (2.0 * math.pi)
        return self.k * g0 if self.kind == "S" else g0


# ---------------------------------------------------------------------------
# quadrature rules
# ---------------------------------------------------------------------------


_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GAUSS_CACHE:
        x, w = roots_legendre(n)
        _GAUSS_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GAUSS_CACHE[n]


def _log_moments(n: int) -> np.ndarray:
    """mu_j = Int_0^1 P_j(2u - 1) ln u du for j = 0..n-1."""
    mu = np.empty(n)
    mu[0] = -1.0
    for j in range(1, n):
        mu[j] = (-1.0) ** (j + 1) / (j * (j + 1))
    return mu


def _int_log_side(g, L: float, sign: int, n: int) -> complex:
    """Int over [0, L] (sign=+1) or [-L, 0] (sign=-1) of g(Delta) 2 ln|Delta|.

    Expands g in shifted Legendre polynomials and pairs coefficients with
    the exact log moments.
    """
    u, w = _gauss01(n)
    vals = g(sign * L * u)
    from numpy.polynomial.legendre import legvander

    V = legvander(2.0 * u - 1.0, n - 1)  # (n, n)
    coef = (2.0 * np.arange(n) + 1.0) * (w[:, None] * V).T.dot(vals)
    mu = _log_moments(n)
    int_ln_u = coef.dot(mu)
    int_plain = w.dot(vals)
    return 2.0 * L * (int_ln_u + math.log(L) * int_plain)


def _int_gauss(f, lo: float, hi: float, n: int) -> complex:
    u, w = _gauss01(n)
    x = lo + (hi - lo) * u
    return (hi - lo) * w.dot(f(x))


# ---------------------------------------------------------------------------
# matrix assembly
# ---------------------------------------------------------------------------


def _entry_integral(kernel: _Kernel, weight, knots: np.ndarray, n: int) -> complex:
    """Integrate kernel * weight over the support broken at the knots.

    Subintervals with an endpoint at Delta = 0 get the log-split treatment;
    everything else is plain Gauss on the full kernel.
    """
    total = 0.0 + 0.0j
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi - lo < 1e-15:
            continue
        touches_zero = abs(lo) < 1e-15 or abs(hi) < 1e-15
        if touches_zero:
            L = hi - lo
            sign = 1 if abs(lo) < 1e-15 else -1

            def g_log(d):
                return kernel.log_factor(d) * weight(d)

            def g_smooth(d):
                return kernel.smooth(d) * weight(d)

            total += _int_log_side(g_log, L, sign, n)
            total += _int_gauss(g_smooth, lo, hi, n)
        else:
            total += _int_gauss(lambda d: kernel.full(d) * weight(d), lo, hi, n)
    return total


def _row_for(kernel: _Kernel, mesh: Mesh, b: BasisSpec, n: int,
             deriv_weight: bool = False, cos_factor: bool = False) -> np.ndarray:
    """Distinct circulant interactions C(d), d = 0..N-1 (up to prefactors).

    Returns the plain integrals Int K(Delta) W(Delta + phi_d) dDelta.
    """
    N = mesh.N
    h = mesh.h_theta
    w_half = _corr_halfwidth(b.p, h)

    def weight_at(delta: np.ndarray, shift: float) -> np.ndarray:
        psi = delta + shift
        base = _corr_deriv_value(h, psi) if deriv_weight else _corr_value(b.p, h, psi)
        if cos_factor:
            base = base * np.cos(delta)
        return base

    out = np.zeros(N, dtype=complex)
    half = N // 2
    for d in range(0, half + 1):
        shift = 2.0 * math.pi * d / N
        if shift > math.pi:
            shift -= 2.0 * math.pi
        lo, hi = -shift - w_half, -shift + w_half
        # knots of the shifted correlation, plus 0 if interior
        kn = [-shift + m * h for m in range(-(b.p + 1), b.p + 2)]
        kn = sorted(set(round(v, 15) for v in kn))
        knots = np.array(kn)
        val = _entry_integral(kernel, lambda dd, s=shift: weight_at(dd, s), knots, n)
        out[d] = val
        if 0 < d < half or (d == half and N % 2):
            pass
    # symmetry C(d) = C(N - d); fill the mirrored half
    for d in range(half + 1, N):
        out[d] = out[N - d]
    return out


def _assemble_row(op: OperatorId, mesh: Mesh, b: BasisSpec, cfg: ProblemConfig,
                  n: int) -> np.ndarray:
    """First-column circulant generator for one operator at one rule size."""
    N = mesh.N
    pref = mesh.a ** 2 / mesh.h
    k = cfg.k if op.wavenumber_tag is WavenumberTag.K else cfg.k_tilde
    if op.kind is OperatorKind.IDENTITY:
        d = np.arange(N)
        shift = 2.0 * math.pi * np.minimum(d, N - d) / N
        return _corr_value(b.p, mesh.h_theta, shift) * (mesh.a / mesh.h)
    if op.kind is OperatorKind.SINGLE_LAYER:
        ker = _Kernel(k, mesh.a, "S")
        return pref * _row_for(ker, mesh, b, n)
    if op.kind in (OperatorKind.DOUBLE_LAYER, OperatorKind.ADJ_DOUBLE_LAYER):
        ker = _Kernel(k, mesh.a, "D")
        return pref * _row_for(ker, mesh, b, n)
    if op.kind is OperatorKind.HYPERSINGULAR:
        if b.p < 1:
            raise PreconditionError("hypersingular assembly requires basis order p >= 1")
        g = _Kernel(k, mesh.a, "G")
        grad = _row_for(g, mesh, b, n, deriv_weight=True) / k
        mass = _row_for(g, mesh, b, n, cos_factor=True) * (k * mesh.a ** 2)
        return (grad - mass) / mesh.h
    raise DomainError(f"unknown operator kind {op.kind}")


def assemble(op: OperatorId, mesh: Mesh, b: BasisSpec, cfg: ProblemConfig,
             quad: QuadratureSpec = QuadratureSpec()) -> DenseOperatorMatrix:
    """Quadrature-assembled Galerkin matrix (1/h normalized).

    The rule size doubles until the row change falls below quad.target
    relative to the row magnitude; failure raises QuadratureError.
    """
    n = quad.n_gauss
    row = _assemble_row(op, mesh, b, cfg, n)
    est = math.inf
    for _ in range(quad.max_doublings):
        n *= 2
        row2 = _assemble_row(op, mesh, b, cfg, n)
        scale = float(np.max(np.abs(row2)))
        est = float(np.max(np.abs(row2 - row))) / scale
        row = row2
        if est < quad.target:
            break
    if op.kind is not OperatorKind.IDENTITY and est > 1e-9:
        raise QuadratureError(
            f"assembly of {op} did not converge: relative change {est:.2e}")
    mat = circulant(row)
    return DenseOperatorMatrix(mat, op, n, op.kind is not OperatorKind.IDENTITY, est)


def circulant_eigs(mat: DenseOperatorMatrix | np.ndarray) -> np.ndarray:
    """Eigenvalues of a circulant matrix on the index grid [-N/2, N/2).

    eig[q] = sum_m row_m exp(-2 pi i q m / N); the result array is indexed
    so that position j corresponds to q = j - N/2.
    """
    A = mat.matrix if isinstance(mat, DenseOperatorMatrix) else np.asarray(mat)
    N = A.shape[0]
    dev = float(np.max(np.abs(A - np.roll(np.roll(A, 1, axis=0), 1, axis=1))))
    if dev > 1e-7 * float(np.max(np.abs(A))):
        raise NotCirculantError(f"circulant deviation {dev:.2e}")
    lam = np.fft.fft(A[0])
    return np.fft.fftshift(lam) if N % 2 == 0 else lam


def eig_at(lams: np.ndarray, q: int) -> complex:
    """Pick the eigenvalue at signed index q from a circulant_eigs array."""
    N = len(lams)
    j = (q + N // 2) % N
    return complex(lams[j])


# ---------------------------------------------------------------------------
# incident traces, right-hand sides, currents
# ---------------------------------------------------------------------------


def qmax_for(ka: float) -> int:
    """Series order covering the superexponential tail of the harmonics."""
    return int(round(ka + 12.0 * ka ** (1.0 / 3.0) + 40.0))


def _jpow_minus(q: np.ndarray) -> np.ndarray:
    """j^{-q} for signed integer q."""
    return np.exp(-0.5j * math.pi * np.asarray(q, dtype=float))


def _bessel_j_values(ka: float, qmax: int) -> tuple[np.ndarray, np.ndarray]:
    """J_q(ka) and J'_q(ka) for q = 0..qmax as plain complex (underflow ok)."""
    t = tables_for(complex(ka), qmax)
    sl = slice(0, qmax + 1)

    def collapse(m, e):
        ee = np.clip(e[sl].astype(float), -1060, 1023)
        return m[sl] * np.exp2(ee)

    return collapse(t.j_m, t.j_e), collapse(t.jp_m, t.jp_e)


def trace_coefficients(f: FormulationId, cfg: ProblemConfig, qmax: int,
                       incidence: float = 0.0) -> np.ndarray:
    """Fourier coefficients (on exp(+j q phi)) of the tested-field trace.

    Unit-amplitude plane wave propagating at angle `incidence` (default +x)
    with exp(+j omega t) time convention.  Indexing runs q = -qmax..qmax.
    """
    ka = cfg.ka
    q = np.arange(-qmax, qmax + 1)
    jq, jpq = _bessel_j_values(ka, qmax)
    # J_{-q} = (-1)^q J_q
    j_all = np.empty(2 * qmax + 1, dtype=complex)
    jp_all = np.empty(2 * qmax + 1, dtype=complex)
    j_all[qmax:] = jq
    jp_all[qmax:] = jpq
    alt = np.where(np.arange(1, qmax + 1) % 2 == 0, 1.0, -1.0)
    j_all[:qmax] = (jq[1:] * alt)[::-1]
    jp_all[:qmax] = (jpq[1:] * alt)[::-1]

    phase = _jpow_minus(q) * np.exp(-1j * q * incidence)
    inv_jeta = 1.0 / (1j * cfg.eta)
    tm = f.polarization is Polarization.TM
    if f.composite in (Composite.EFIO, Composite.CEFIO):
        g = inv_jeta * phase * (j_all if tm else -jp_all)
    elif f.composite in (Composite.MFIO, Composite.CMFIO):
        g = inv_jeta * phase * (jp_all if tm else -j_all)
    else:
        raise DomainError("CCFIE traces are operator-applied; use assemble_rhs")
    tail = max(abs(g[0]), abs(g[-1])) / max(float(np.max(np.abs(g))), 1e-300)
    if tail > 1e-12:
        warnings.warn(f"incident-trace series tail ~{tail:.2e}", TruncationWarning,
                      stacklevel=2)
    return g


def _tested_vector(g: np.ndarray, qmax: int, mesh: Mesh, b: BasisSpec) -> np.ndarray:
    """b_m = sum_q g_q T_{-q} exp(j q phi_m) with T the basis coefficient."""
    q = np.arange(-qmax, qmax + 1)
    T = np.array([fourier_coeff(b, -int(qq)) for qq in q])
    phi = mesh.vertex_angles()
    return (g * T) @ np.exp(1j * np.outer(q, phi))


def assemble_rhs(f: FormulationId, mesh: Mesh, b: BasisSpec, cfg: ProblemConfig,
                 incidence: float = 0.0,
                 mats: dict | None = None,
                 quad: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Tested right-hand side vector of one formulation (1/h normalized).

    For the Calderon-combined equation the vector is built by applying the
    assembled discrete operators (with inverse Gram) to the plain tested
    traces, exactly as the system matrix is formed.
    """
    qmax = qmax_for(cfg.ka)
    comp = f.composite
    pol = f.polarization
    if comp in (Composite.EFIO, Composite.MFIO):
        g = trace_coefficients(f, cfg, qmax, incidence)
        return _tested_vector(g, qmax, mesh, b)
    if comp is not Composite.CCFIO:
        raise DomainError(f"no standalone right-hand side for {comp}")
    b_e = assemble_rhs(FormulationId(Composite.EFIO, pol), mesh, b, cfg, incidence)
    b_h = assemble_rhs(FormulationId(Composite.MFIO, pol), mesh, b, cfg, incidence)
    m = mats if mats is not None else operator_matrices(f, mesh, b, cfg, quad)
    gram_lu = lu_factor(m["I"].matrix)
    if pol is Polarization.TM:
        lead = m["N~"].matrix
        mf = 0.5 * m["I"].matrix - m["D~"].matrix
    else:
        lead = m["S~"].matrix
        mf = 0.5 * m["I"].matrix + m["D~"].matrix
    return lead @ lu_solve(gram_lu, b_e) + mf @ lu_solve(gram_lu, b_h)


def operator_matrices(f: FormulationId, mesh: Mesh, b: BasisSpec, cfg: ProblemConfig,
                      quad: QuadratureSpec = QuadratureSpec()) -> dict:
    """Assemble the operator blocks a formulation needs, keyed by short tag."""
    K, KT = WavenumberTag.K, WavenumberTag.K_TILDE
    tm = f.polarization is Polarization.TM
    need: dict[str, OperatorId] = {}
    if f.composite is Composite.EFIO:
        kind = OperatorKind.SINGLE_LAYER if tm else OperatorKind.HYPERSINGULAR
        need["A"] = OperatorId(kind, K)
    elif f.composite is Composite.MFIO:
        need["I"] = OperatorId(OperatorKind.IDENTITY, K)
        dkind = OperatorKind.ADJ_DOUBLE_LAYER if tm else OperatorKind.DOUBLE_LAYER
        need["D"] = OperatorId(dkind, K)
    elif f.composite is Composite.CCFIO:
        need["I"] = OperatorId(OperatorKind.IDENTITY, K)
        if tm:
            need["A"] = OperatorId(OperatorKind.SINGLE_LAYER, K)
            need["N~"] = OperatorId(OperatorKind.HYPERSINGULAR, KT)
            need["D"] = OperatorId(OperatorKind.ADJ_DOUBLE_LAYER, K)
            need["D~"] = OperatorId(OperatorKind.ADJ_DOUBLE_LAYER, KT)
        else:
            need["A"] = OperatorId(OperatorKind.HYPERSINGULAR, K)
            need["S~"] = OperatorId(OperatorKind.SINGLE_LAYER, KT)
            need["D"] = OperatorId(OperatorKind.DOUBLE_LAYER, K)
            need["D~"] = OperatorId(OperatorKind.DOUBLE_LAYER, KT)
    else:
        raise DomainError(f"{f.composite} is not a solvable formulation")
    return {tag: assemble(op, mesh, b, cfg, quad) for tag, op in need.items()}


def system_matrix(f: FormulationId, mats: dict, pol: Polarization) -> np.ndarray:
    """Dense system matrix of a formulation from its operator blocks."""
    if f.composite is Composite.EFIO:
        return mats["A"].matrix
    if f.composite is Composite.MFIO:
        sign = 1.0 if pol is Polarization.TM else -1.0
        return 0.5 * mats["I"].matrix + sign * mats["D"].matrix
    # Calderon-combined: lead G^{-1} A + (G/2 -+ D~) G^{-1} (G/2 +- D)
    gram_lu = lu_factor(mats["I"].matrix)
    if pol is Polarization.TM:
        lead = mats["N~"].matrix
        left = 0.5 * mats["I"].matrix - mats["D~"].matrix
        right = 0.5 * mats["I"].matrix + mats["D"].matrix
    else:
        lead = mats["S~"].matrix
        left = 0.5 * mats["I"].matrix + mats["D~"].matrix
        right = 0.5 * mats["I"].matrix - mats["D"].matrix
    return lead @ lu_solve(gram_lu, mats["A"].matrix) + left @ lu_solve(gram_lu, right)


def solve_current(f: FormulationId, mesh: Mesh, b: BasisSpec, cfg: ProblemConfig,
                  incidence: float = 0.0,
                  quad: QuadratureSpec = QuadratureSpec(),
                  compute_cond: bool = True) -> CurrentSolution:
    """Direct dense solve of one formulation; coefficients = vertex samples.

    Emits NearSingularWarning when the 1-norm condition estimate exceeds
    1e12 (expected at spurious resonances of EFIE/MFIE).
    """
    if f.composite not in (Composite.EFIO, Composite.MFIO, Composite.CCFIO):
        raise DomainError(f"{f.composite} is not a solvable formulation")
    mats = operator_matrices(f, mesh, b, cfg, quad)
    A = system_matrix(f, mats, f.polarization)
    rhs = assemble_rhs(f, mesh, b, cfg, incidence, mats=mats, quad=quad)
    lu = lu_factor(A)
    x = lu_solve(lu, rhs)
    # one refinement step keeps the residual at rounding level near resonances
    r = rhs - A @ x
    x = x + lu_solve(lu, r)
    r = rhs - A @ x
    residual = float(np.linalg.norm(r) / max(np.linalg.norm(rhs), 1e-300))
    cond = math.nan
    if compute_cond:
        try:
            cond = float(np.linalg.norm(A, 1) * np.linalg.norm(np.linalg.inv(A), 1))
        except np.linalg.LinAlgError:
            cond = math.inf
        if cond > 1e12:
            warnings.warn(f"condition estimate {cond:.2e} for {f}",
                          NearSingularWarning, stacklevel=2)
    return CurrentSolution(x, x.copy(), f, residual, cond)


def current_coefficients(pol: Polarization, cfg: ProblemConfig, qmax: int) -> np.ndarray:
    """U_q for q = 0..qmax: Fourier coefficients of the exact current.

    U_q = 2 j^{-q} / (pi eta ka H_q2(ka))  for the axial (TM) current and
    the same with H_q2'(ka) for the transverse (TE) current.
    """
    ka = cfg.ka
    t = tables_for(complex(ka), qmax)
    sl = slice(0, qmax + 1)
    if pol is Polarization.TM:
        hm, he = t.h_m[sl], t.h_e[sl]
    else:
        hm, he = t.hp_m[sl], t.hp_e[sl]
    inv = (1.0 / hm) * np.exp2(np.clip(-he.astype(float), -1060, 1023))
    pref = 2.0 / (math.pi * cfg.eta * ka)
    return pref * _jpow_minus(np.arange(qmax + 1)) * inv


def exact_current(pol: Polarization, cfg: ProblemConfig, angles: np.ndarray,
                  incidence: float = 0.0) -> np.ndarray:
    """Analytic-series current samples J(phi) = sum_q U_q e^{-j q phi}."""
    qmax = qmax_for(cfg.ka)
    U = current_coefficients(pol, cfg, qmax)
    umax = float(np.max(np.abs(U)))
    if abs(U[-1]) > 1e-12 * umax:
        warnings.warn("current series tail above 1e-12", TruncationWarning,
                      stacklevel=2)
    phi = np.asarray(angles, dtype=float) - incidence
    q = np.arange(1, qmax + 1)
    # U_{-q} = U_q, so the series collapses to a cosine sum
    return U[0] + 2.0 * np.cos(np.outer(phi, q)) @ U[1:]
