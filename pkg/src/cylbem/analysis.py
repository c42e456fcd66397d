"""Predicted current-error spectra, error norms, frequency sweeps and
scaling-exponent fits.

The discrete solution of a circulant Galerkin system reproduces the exact
current harmonics up to a per-index factor: at the mesh vertices

    (Jhat_n - J_n)/J_n = sum_q U_q v_q e^{-j q phi_n} / sum_q U_q e^{-j q phi_n}

where U_q are the exact current coefficients and the predicted error
factor v_q compresses to

    1 + v_q = T_{-q} lambda_q / lambdahat_q

for each plain formulation (single-operator or half-plus-double-layer),
with lambdahat the folded discrete eigenvalue (N-periodic in q).  The
Calderon-combined factor is the discrete-eigenvalue weighted average of
the electric and magnetic factors.  Error sizes are reported in the plain
L2 ratio and in Sobolev-weighted ratios with weights (1+q^2)^s and
((ka)^2+q^2)^s, s = -1/2 for the axial (TM) and +1/2 for the transverse
(TE) current space.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import jn_zeros, jnp_zeros
from scipy.stats import t as student_t

from .bem import Mesh, QuadratureSpec, current_coefficients, exact_current, qmax_for, solve_current
from .discretization import BasisSpec, fourier_coeff, gram_eigenvalue, _alias_sum
from .errors import DomainError, InsufficientDataError
from .spectra import (
    Composite,
    FormulationId,
    OperatorKind,
    Polarization,
    ProblemConfig,
    WavenumberTag,
    eig_elementary_array,
    mesh_count_for,
)


class Measure(enum.Enum):
    L2 = "L2"
    HS = "Hs"
    HKS = "Hks"


def sobolev_exponent(pol: Polarization) -> float:
    """Current-space smoothness index: -1/2 axial, +1/2 transverse."""
    return -0.5 if pol is Polarization.TM else 0.5


def _weights(measure: Measure, pol: Polarization, ka: float, q: np.ndarray) -> np.ndarray:
    if measure is Measure.L2:
        return np.ones_like(q, dtype=float)
    s = sobolev_exponent(pol)
    if measure is Measure.HS:
        return (1.0 + q.astype(float) ** 2) ** s
    return (ka * ka + q.astype(float) ** 2) ** s


def formulation_from_name(name: str, pol: Polarization) -> FormulationId:
    comp = {"EFIE": Composite.EFIO, "MFIE": Composite.MFIO, "CCFIE": Composite.CCFIO}.get(name.upper())
    if comp is None:
        raise DomainError(f"unknown formulation name {name!r}")
    return FormulationId(comp, pol)


def formulation_name(f: FormulationId) -> str:
    return {Composite.EFIO: "EFIE", Composite.MFIO: "MFIE", Composite.CCFIO: "CCFIE"}[f.composite]


# ---------------------------------------------------------------------------
# prediction model: folded eigenvalues and error factors, cached per config
# ---------------------------------------------------------------------------


class SpectralModel:
    """Half-spectrum tables for one (config, basis, smax) triple.

    Folded eigenvalues are N-periodic and even in q, so arrays over
    q = 0..N/2 serve every integer index through fold().
    """

    def __init__(self, cfg: ProblemConfig, b: BasisSpec, smax: int = 64):
        self.cfg = cfg
        self.b = b
        self.smax = smax
        self._hat: dict = {}

    def fold(self, q: np.ndarray) -> np.ndarray:
        N = self.b.N
        return np.abs(((np.asarray(q) + N // 2) % N) - N // 2)

    def lam_hat_elementary(self, kind: OperatorKind, tag: WavenumberTag) -> np.ndarray:
        key = (kind, tag)
        if key not in self._hat:
            N2 = self.b.N // 2
            if kind is OperatorKind.IDENTITY:
                vals = np.array([gram_eigenvalue(self.b, q) for q in range(N2 + 1)],
                                dtype=complex)
            else:
                vals = np.array(
                    [_alias_sum(kind, tag, q, self.cfg, self.b, self.smax).value
                     for q in range(N2 + 1)])
            self._hat[key] = vals
        return self._hat[key]

    def lam_hat_mfio(self, sign: float, tag: WavenumberTag) -> np.ndarray:
        gram = self.lam_hat_elementary(OperatorKind.IDENTITY, WavenumberTag.K)
        d = self.lam_hat_elementary(OperatorKind.DOUBLE_LAYER, tag)
        return 0.5 * gram + sign * d

    def lam_hat_formulation(self, f: FormulationId) -> np.ndarray:
        """Folded eigenvalues of a solvable formulation on q = 0..N/2."""
        tm = f.polarization is Polarization.TM
        K, KT = WavenumberTag.K, WavenumberTag.K_TILDE
        if f.composite is Composite.EFIO:
            kind = OperatorKind.SINGLE_LAYER if tm else OperatorKind.HYPERSINGULAR
            return self.lam_hat_elementary(kind, K)
        if f.composite is Composite.MFIO:
            return self.lam_hat_mfio(+1.0 if tm else -1.0, K)
        if f.composite is Composite.CEFIO:
            gram = self.lam_hat_elementary(OperatorKind.IDENTITY, K)
            if tm:
                return (self.lam_hat_elementary(OperatorKind.HYPERSINGULAR, KT)
                        * self.lam_hat_elementary(OperatorKind.SINGLE_LAYER, K) / gram)
            return (self.lam_hat_elementary(OperatorKind.SINGLE_LAYER, KT)
                    * self.lam_hat_elementary(OperatorKind.HYPERSINGULAR, K) / gram)
        if f.composite is Composite.CMFIO:
            gram = self.lam_hat_elementary(OperatorKind.IDENTITY, K)
            if tm:
                return self.lam_hat_mfio(-1.0, KT) * self.lam_hat_mfio(+1.0, K) / gram
            return self.lam_hat_mfio(+1.0, KT) * self.lam_hat_mfio(-1.0, K) / gram
        if f.composite is Composite.CCFIO:
            return (self.lam_hat_formulation(FormulationId(Composite.CEFIO, f.polarization))
                    + self.lam_hat_formulation(FormulationId(Composite.CMFIO, f.polarization)))
        raise DomainError(f"unknown composite {f.composite}")

    def lam_cont_formulation(self, f: FormulationId, qmax: int) -> np.ndarray:
        """Continuous eigenvalues of EFIO/MFIO on the true index 0..qmax."""
        ka = self.cfg.ka
        tm = f.polarization is Polarization.TM
        if f.composite is Composite.EFIO:
            kind = OperatorKind.SINGLE_LAYER if tm else OperatorKind.HYPERSINGULAR
            return eig_elementary_array(kind, complex(ka), qmax)
        if f.composite is Composite.MFIO:
            d = eig_elementary_array(OperatorKind.DOUBLE_LAYER, complex(ka), qmax)
            return 0.5 + (d if tm else -d)
        raise DomainError("continuous factors are needed only for EFIO/MFIO")

    def upsilon_half(self, f: FormulationId, qmax: int) -> tuple[np.ndarray, np.ndarray]:
        """(v_q, flagged) for q = 0..qmax; v is even in q."""
        q = np.arange(qmax + 1)
        folded = self.fold(q)
        if f.composite in (Composite.EFIO, Composite.MFIO):
            lam = self.lam_cont_formulation(f, qmax)
            lam_hat = self.lam_hat_formulation(f)[folded]
            T = np.array([fourier_coeff(self.b, int(v)) for v in q])
            scale = float(np.max(np.abs(lam_hat)))
            flagged = np.abs(lam_hat) < 1e-13 * scale
            safe = np.where(flagged, 1.0, lam_hat)
            ups = (T * lam - lam_hat) / safe
            return np.where(flagged, np.nan + 0j, ups), flagged
        if f.composite is Composite.CCFIO:
            ups_e, fl_e = self.upsilon_half(FormulationId(Composite.EFIO, f.polarization), qmax)
            ups_m, fl_m = self.upsilon_half(FormulationId(Composite.MFIO, f.polarization), qmax)
            w_e = self.lam_hat_formulation(FormulationId(Composite.CEFIO, f.polarization))[folded]
            w_m = self.lam_hat_formulation(FormulationId(Composite.CMFIO, f.polarization))[folded]
            den = w_e + w_m
            scale = float(np.max(np.abs(den)))
            flagged = fl_e | fl_m | (np.abs(den) < 1e-13 * scale)
            safe = np.where(flagged, 1.0, den)
            ups = (w_e * ups_e + w_m * ups_m) / safe
            return np.where(flagged, np.nan + 0j, ups), flagged
        raise DomainError(f"{f.composite} has no current-error factor")


def upsilon(f: FormulationId, q: int, cfg: ProblemConfig, b: BasisSpec,
            smax: int = 64) -> complex:
    """Predicted per-harmonic current error factor v_q."""
    model = SpectralModel(cfg, b, smax)
    ups, _ = model.upsilon_half(f, abs(q))
    return complex(ups[abs(q)])


@dataclass
class UpsilonTable:
    """Exact current coefficients and error factors for q = 0..qmax."""

    formulation: FormulationId
    q: np.ndarray
    U: np.ndarray
    upsilon: np.ndarray
    flagged: np.ndarray


def upsilon_table(f: FormulationId, cfg: ProblemConfig, b: BasisSpec,
                  smax: int = 64, qmax: int | None = None) -> UpsilonTable:
    if qmax is None:
        qmax = qmax_for(cfg.ka)
    model = SpectralModel(cfg, b, smax)
    ups, flagged = model.upsilon_half(f, qmax)
    U = current_coefficients(f.polarization, cfg, qmax)
    return UpsilonTable(f, np.arange(qmax + 1), U, ups, flagged)


def pointwise_current_error(f: FormulationId, cfg: ProblemConfig, b: BasisSpec,
                            smax: int = 64) -> np.ndarray:
    """Predicted relative vertex errors (Jhat_n - J_n)/J_n, length N."""
    tab = upsilon_table(f, cfg, b, smax)
    phi = Mesh.for_config(cfg).vertex_angles()
    qpos = tab.q[1:]
    cos = 2.0 * np.cos(np.outer(phi, qpos))
    ups = np.where(tab.flagged, 0.0, tab.upsilon)
    num = tab.U[0] * ups[0] + cos @ (tab.U[1:] * ups[1:])
    den = tab.U[0] + cos @ tab.U[1:]
    small = np.abs(den) < 1e-12 * float(np.max(np.abs(den)))
    if np.any(small):
        warnings.warn("current magnitude below division floor at some vertices")
    return num / np.where(small, np.nan, den)


@dataclass
class ErrorNormResult:
    r_predicted: float
    r_measured: float | None
    resonance_flag: bool
    cond_estimate: float = math.nan
    spike_share: float = math.nan


def _predicted_norm(measure: Measure, tab: UpsilonTable, cfg: ProblemConfig) -> tuple[float, bool, float]:
    w = _weights(measure, tab.formulation.polarization, cfg.ka, tab.q)
    mult = np.where(tab.q == 0, 1.0, 2.0)  # symmetric +-q pairs
    U2 = np.abs(tab.U) ** 2
    contrib = mult * w * U2
    # flagged rows only matter if they carry visible weight
    visible = contrib > 1e-20 * float(np.max(contrib))
    flag = bool(np.any(tab.flagged & visible))
    ups2 = np.where(tab.flagged, 0.0, np.abs(tab.upsilon) ** 2)
    num_terms = contrib * ups2
    num = float(np.sum(num_terms))
    den = float(np.sum(contrib))
    # fraction of the squared error carried by the largest single harmonic;
    # near a discrete resonance one q dominates and this approaches 1
    share = float(np.max(num_terms) / num) if num > 0 else 0.0
    return math.sqrt(num / den), flag, share


def measured_norm_from_solution(measure: Measure, sol, cfg: ProblemConfig) -> float:
    """Sobolev-weighted relative error of BEM vertex samples against the
    analytic series, via DFT on the index grid [-N/2, N/2)."""
    mesh = Mesh.for_config(cfg)
    phi = mesh.vertex_angles()
    j_exact = exact_current(sol.formulation.polarization, cfg, phi)
    d = sol.vertex_values - j_exact
    D = np.fft.fft(d) / cfg.N
    Jc = np.fft.fft(j_exact) / cfg.N
    q = np.fft.fftfreq(cfg.N, 1.0 / cfg.N).astype(int)
    w = _weights(measure, sol.formulation.polarization, cfg.ka, q)
    return math.sqrt(float(np.sum(w * np.abs(D) ** 2) / np.sum(w * np.abs(Jc) ** 2)))


def _measured_norm(measure: Measure, f: FormulationId, cfg: ProblemConfig,
                   b: BasisSpec, quad: QuadratureSpec,
                   compute_cond: bool) -> tuple[float, float]:
    mesh = Mesh.for_config(cfg)
    sol = solve_current(f, mesh, b, cfg, quad=quad, compute_cond=compute_cond)
    return measured_norm_from_solution(measure, sol, cfg), sol.cond_estimate


def error_norm(measure: Measure, f: FormulationId, cfg: ProblemConfig, b: BasisSpec,
               smax: int = 64, with_measured: bool = True,
               quad: QuadratureSpec = QuadratureSpec(),
               compute_cond: bool = True) -> ErrorNormResult:
    """Predicted (and optionally BEM-measured) relative current error."""
    tab = upsilon_table(f, cfg, b, smax)
    r_pred, flag, share = _predicted_norm(measure, tab, cfg)
    r_meas = None
    cond = math.nan
    if with_measured:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r_meas, cond = _measured_norm(measure, f, cfg, b, quad, compute_cond)
        if compute_cond and cond > 1e10:
            flag = True
    return ErrorNormResult(r_pred, r_meas, flag, cond, share)


# ---------------------------------------------------------------------------
# resonances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Resonance:
    ka: float
    q: int


def _resonance_family(f: FormulationId) -> str | None:
    """'J' zeros, "J'" zeros, or None (resonance-free)."""
    tm = f.polarization is Polarization.TM
    if f.composite is Composite.EFIO:
        return "J" if tm else "Jp"
    if f.composite is Composite.MFIO:
        return "Jp" if tm else "J"
    return None


def resonance_locator(f: FormulationId, ka_range: tuple[float, float]) -> list[Resonance]:
    """Interior-resonance frequencies of a formulation inside ka_range.

    EFIE/MFIE singularities sit at zeros of J_q (axial-electric family) or
    J'_q (axial-magnetic family); the Calderon-combined equation has none.
    """
    lo, hi = ka_range
    if lo > hi:
        raise DomainError("empty ka range")
    fam = _resonance_family(f)
    if fam is None:
        return []
    out: list[Resonance] = []
    q = 0
    while True:
        nt = max(4, int((hi - (q if fam == "J" else max(q - 1, 0))) / math.pi) + 3)
        zeros = jn_zeros(q, nt) if fam == "J" else jnp_zeros(q, nt)
        zeros = zeros[(zeros >= lo) & (zeros <= hi)]
        out.extend(Resonance(float(z), q) for z in zeros)
        first = (jn_zeros(q, 1) if fam == "J" else jnp_zeros(q, 1))[0]
        if first > hi:
            break
        q += 1
    return sorted(out, key=lambda r: r.ka)


def nearest_resonance_distance(f: FormulationId, ka: float, pad: float = 3.0) -> float:
    res = resonance_locator(f, (max(ka - pad, 1e-6), ka + pad))
    if not res:
        return math.inf
    return min(abs(r.ka - ka) for r in res)


# ---------------------------------------------------------------------------
# sweeps and fits
# ---------------------------------------------------------------------------


@dataclass
class ErrorReport:
    ka: float
    N: int
    formulation: str
    polarization: str
    measure: str
    r_predicted: float
    r_measured: float | None
    resonance_flag: bool
    # diagnostic only (not part of the CSV schema): fraction of the squared
    # predicted error in the single largest harmonic
    spike_share: float = math.nan


def sweep_samples(ka_range: tuple[float, float], points: int, seed: int = 0,
                  jitter: float = 0.25) -> np.ndarray:
    """Log-spaced ka samples with seeded multiplicative jitter.

    Jitter keeps samples from systematically landing on resonances; 'jitter'
    is the fraction of the local log spacing used as the uniform half-width.
    """
    lo, hi = ka_range
    if not (0 < lo < hi):
        raise DomainError("ka range must satisfy 0 < lo < hi")
    base = np.log(np.geomspace(lo, hi, points))
    if points > 1 and jitter > 0:
        step = (base[-1] - base[0]) / (points - 1)
        rng = np.random.default_rng(seed)
        base = base + rng.uniform(-jitter, jitter, size=points) * step
        base[0] = math.log(lo)
        base[-1] = math.log(hi)
    return np.exp(np.sort(base))


def frequency_sweep(f: FormulationId, measure: Measure,
                    ka_range: tuple[float, float], points: int,
                    a: float = 1.0, eta: float = 1.0, p: int = 1,
                    smax: int = 64, seed: int = 0, jitter: float = 0.25,
                    mask_radius: float = 0.05,
                    with_measured: bool = True,
                    quad: QuadratureSpec = QuadratureSpec()) -> list[ErrorReport]:
    """Fixed points-per-wavelength sweep: one ErrorReport per ka sample.

    N follows the four-elements-per-wavelength rule N = 2 round(2 ka).
    Individual failures flag their point; the sweep itself never aborts.
    """
    if ka_range[1] > 300.0:
        raise DomainError("sweep limited to ka <= 300 at desk scale")
    out: list[ErrorReport] = []
    for ka in sweep_samples(ka_range, points, seed, jitter):
        ka = float(ka)
        N = mesh_count_for(ka)
        cfg = ProblemConfig(a=a, k=ka / a, eta=eta, N=N, p=p)
        b = BasisSpec(p, N)
        near = nearest_resonance_distance(f, ka) <= mask_radius
        try:
            res = error_norm(measure, f, cfg, b, smax=smax,
                             with_measured=with_measured, quad=quad)
            flag = res.resonance_flag or near
            out.append(ErrorReport(ka, N, formulation_name(f), f.polarization.value,
                                   measure.value, res.r_predicted, res.r_measured, flag,
                                   res.spike_share))
        except Exception:
            out.append(ErrorReport(ka, N, formulation_name(f), f.polarization.value,
                                   measure.value, math.nan, math.nan, True))
    return out


@dataclass
class ScalingFit:
    slope: float
    half_width_95: float
    n_used: int


def fit_scaling_exponent(reports: list[ErrorReport] | tuple[np.ndarray, np.ndarray],
                         mask: np.ndarray | None = None,
                         use_measured: bool = False,
                         spike_threshold: float = 0.6) -> ScalingFit:
    """OLS slope of log r against log ka with a 95% confidence half-width.

    `mask` marks points to include.  The default resonance masking prefers
    the spike-share diagnostic (drop points whose squared error is
    majority-owned by one harmonic); the proximity flag is the fallback for
    reports lacking it.  Proximity alone over-masks at high frequency,
    where interior resonances are spaced more closely than their own spike
    widths.  Raises InsufficientDataError below 8 usable points.
    """
    if isinstance(reports, tuple):
        ka = np.asarray(reports[0], dtype=float)
        r = np.asarray(reports[1], dtype=float)
        base_mask = np.isfinite(r) & (r > 0)
    else:
        ka = np.array([rep.ka for rep in reports])
        vals = [(rep.r_measured if use_measured else rep.r_predicted) for rep in reports]
        r = np.array([math.nan if v is None else v for v in vals], dtype=float)
        shares = np.array([rep.spike_share for rep in reports], dtype=float)
        if np.all(np.isfinite(shares)):
            base_mask = shares < spike_threshold
        else:
            base_mask = np.array([not rep.resonance_flag for rep in reports])
        base_mask &= np.isfinite(r) & (r > 0)
    if mask is not None:
        base_mask &= np.asarray(mask, dtype=bool)
    x = np.log(ka[base_mask])
    y = np.log(r[base_mask])
    n = len(x)
    if n < 8:
        raise InsufficientDataError(f"only {n} unmasked points (need >= 8)")
    X = np.vstack([x, np.ones_like(x)]).T
    beta, res_ss, *_ = np.linalg.lstsq(X, y, rcond=None)
    yhat = X @ beta
    dof = n - 2
    s2 = float(np.sum((y - yhat) ** 2)) / dof
    sx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(s2 / sx) if sx > 0 else math.inf
    half = float(student_t.ppf(0.975, dof)) * se
    return ScalingFit(float(beta[0]), half, n)
