"""Basis Fourier coefficients, folded (aliased) discrete eigenvalues, and
the projection/aliasing split of relative spectral errors.

A Galerkin discretization on a uniform N-element mesh with shift-invariant
test/source bases produces circulant matrices whose eigenvalue at index q
is the folded sum over all integers s of

    lambda_{q+sN} * T_{-(q+sN)} * F_{q+sN},

where T and F are the (unit-normalized) Fourier coefficients of the test
and source functions.  For the symmetric B-spline bases used here
T_q = F_q = [sin(pi q / N) / (pi q / N)]^(p+1), so the relative error of
the eigenvalue splits into the projection factor T_{-q} F_q - 1 and a pure
aliasing remainder.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError, SingularGramError, TruncationWarning
from .specfun import MAX_ORDER
from .spectra import (
    Composite,
    FormulationId,
    OperatorId,
    OperatorKind,
    Polarization,
    ProblemConfig,
    WavenumberTag,
    eig_elementary_array,
)

DEFAULT_SMAX = 64

# Stop the folded sum once a term falls below this fraction of the partial sum.
_STOP_REL = 1e-12
# Warn when the estimated tail exceeds this relative size.
_TAIL_REL = 1e-9

# Threshold below which a continuous eigenvalue counts as resonant relative
# to the discretization perturbation.
_RESONANT_REL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    """Uniform B-spline basis family: p=0 pulse, p=1 hat; N elements."""

    p: int
    N: int
    role: str = "galerkin"  # identical test/source pair

    def __post_init__(self):
        if self.p not in (0, 1):
            raise DomainError("basis order p must be 0 or 1")
        if self.N < 4:
            raise DomainError("N must be >= 4")


def fourier_coeff(b: BasisSpec, q: int) -> float:
    """Unit-normalized Fourier coefficient F_q = sinc(pi q/N)^(p+1).

    Exactly 1 at q = 0 and exactly 0 at every other multiple of N (where
    floating-point sin(pi k) would leave a ~1e-16 residue).
    """
    if q % b.N == 0:
        return 1.0 if q == 0 else 0.0
    x = math.pi * q / b.N
    s = math.sin(x) / x
    return s ** (b.p + 1)


def _fourier_coeff_array(b: BasisSpec, q: np.ndarray) -> np.ndarray:
    x = np.pi * q / b.N
    with np.errstate(invalid="ignore"):
        s = np.where(q == 0, 1.0, np.sin(x) / np.where(x == 0.0, 1.0, x))
    return s ** (b.p + 1)


def gram_eigenvalue(b: BasisSpec, q: int) -> float:
    """Closed-form discrete identity (mass) eigenvalue.

    The folded sums of sinc^2 and sinc^4 have exact values: 1 for the pulse
    basis (disjoint supports) and (2 + cos(2 pi q/N))/3 for the hat basis
    (circulant mass row 1/6, 2/3, 1/6).
    """
    if b.p == 0:
        return 1.0
    return (2.0 + math.cos(2.0 * math.pi * q / b.N)) / 3.0


@dataclass
class _AliasResult:
    value: complex        # full folded sum (s = 0 included)
    s0: complex           # the s = 0 term  lambda_q * T_{-q} F_q
    tail_estimate: float
    levels_used: int


def _alias_sum(kind: OperatorKind, tag: WavenumberTag, q: int, cfg: ProblemConfig,
               b: BasisSpec, smax: int) -> _AliasResult:
    """Folded eigenvalue sum with adaptive truncation at |s| <= smax."""
    N = b.N
    if kind is OperatorKind.HYPERSINGULAR and b.p == 0:
        raise DivergenceError(
            "hypersingular aliasing sum diverges for pulse bases: eigenvalues "
            "grow linearly in order while sinc^2 coefficients decay as 1/q^2"
        )
    if smax < 1:
        raise DomainError("smax must be >= 1")
    # Clamp so required orders stay within the table cap; the tail estimate
    # reports the consequence if this truncates too early.
    s_cap = min(smax, max(1, (MAX_ORDER - abs(q)) // N))
    z = cfg.argument(tag)
    lam = eig_elementary_array(kind, z, abs(q) + s_cap * N)

    def term(qq: int) -> complex:
        return lam[abs(qq)] * fourier_coeff(b, -qq) * fourier_coeff(b, qq)

    s0 = term(q)
    total = s0
    last_mag = abs(s0)
    levels = 0
    for s in range(1, s_cap + 1):
        t_plus = term(q + s * N)
        t_minus = term(q - s * N)
        total += t_plus + t_minus
        last_mag = max(abs(t_plus), abs(t_minus))
        levels = s
        if last_mag < _STOP_REL * abs(total):
            break
    # Conservative tail bound: decay is at least 1/s^2 for every admissible
    # operator/basis pair, so the remainder is below last * levels.
    tail = last_mag * levels
    return _AliasResult(total, s0, tail, levels)


def _warn_tail(res: _AliasResult, what: str) -> None:
    if res.tail_estimate > _TAIL_REL * max(abs(res.value), 1e-300):
        warnings.warn(
            f"folded eigenvalue sum for {what} truncated with relative tail "
            f"~{res.tail_estimate / max(abs(res.value), 1e-300):.2e}",
            TruncationWarning,
            stacklevel=3,
        )


def discrete_eig_elementary(op: OperatorId, q: int, cfg: ProblemConfig,
                            b: BasisSpec, smax: int = DEFAULT_SMAX) -> complex:
    """Discrete (Galerkin-matrix) eigenvalue of one elementary operator."""
    if op.kind is OperatorKind.IDENTITY:
        return complex(gram_eigenvalue(b, q))
    res = _alias_sum(op.kind, op.wavenumber_tag, q, cfg, b, smax)
    _warn_tail(res, str(op))
    return res.value


def _mfio_hat(sign: float, tag: WavenumberTag, q: int, cfg: ProblemConfig,
              b: BasisSpec, smax: int) -> complex:
    d = discrete_eig_elementary(OperatorId(OperatorKind.DOUBLE_LAYER, tag), q, cfg, b, smax)
    return 0.5 * gram_eigenvalue(b, q) + sign * d


def discrete_eig_composite(f: FormulationId, q: int, cfg: ProblemConfig,
                           b: BasisSpec, smax: int = DEFAULT_SMAX) -> complex:
    """Discrete eigenvalue of a composite formulation.

    Operator products carry an explicit inverse-Gram factor, mirroring the
    matrix products  A G^{-1} B  of the assembled formulations.
    """
    tm = f.polarization is Polarization.TM
    K, KT = WavenumberTag.K, WavenumberTag.K_TILDE
    S, N = OperatorKind.SINGLE_LAYER, OperatorKind.HYPERSINGULAR
    gram = gram_eigenvalue(b, q)
    if abs(gram) < 1e-14:
        raise SingularGramError(f"Gram eigenvalue {gram!r} at q={q} too small")

    if f.composite is Composite.EFIO:
        kind = S if tm else N
        return discrete_eig_elementary(OperatorId(kind, K), q, cfg, b, smax)
    if f.composite is Composite.MFIO:
        return _mfio_hat(+1.0 if tm else -1.0, K, q, cfg, b, smax)
    if f.composite is Composite.CEFIO:
        if tm:
            lo = discrete_eig_elementary(OperatorId(N, KT), q, cfg, b, smax)
            hi = discrete_eig_elementary(OperatorId(S, K), q, cfg, b, smax)
        else:
            lo = discrete_eig_elementary(OperatorId(S, KT), q, cfg, b, smax)
            hi = discrete_eig_elementary(OperatorId(N, K), q, cfg, b, smax)
        return lo * hi / gram
    if f.composite is Composite.CMFIO:
        if tm:
            lo = _mfio_hat(-1.0, KT, q, cfg, b, smax)
            hi = _mfio_hat(+1.0, K, q, cfg, b, smax)
        else:
            lo = _mfio_hat(+1.0, KT, q, cfg, b, smax)
            hi = _mfio_hat(-1.0, K, q, cfg, b, smax)
        return lo * hi / gram
    if f.composite is Composite.CCFIO:
        return (discrete_eig_composite(FormulationId(Composite.CEFIO, f.polarization), q, cfg, b, smax)
                + discrete_eig_composite(FormulationId(Composite.CMFIO, f.polarization), q, cfg, b, smax))
    raise DomainError(f"unknown composite {f.composite}")


def continuous_eig(target: OperatorId | FormulationId, q: int, cfg: ProblemConfig) -> complex:
    from .spectra import eig_composite, eig_elementary

    if isinstance(target, OperatorId):
        return eig_elementary(target, q, cfg)
    return eig_composite(target, q, cfg)


def discrete_eig(target: OperatorId | FormulationId, q: int, cfg: ProblemConfig,
                 b: BasisSpec, smax: int = DEFAULT_SMAX) -> complex:
    if isinstance(target, OperatorId):
        return discrete_eig_elementary(target, q, cfg, b, smax)
    return discrete_eig_composite(target, q, cfg, b, smax)


@dataclass(frozen=True)
class SpectrumRow:
    """One Fourier index of a spectral-error table.

    For resonant rows (|lambda_cont| below threshold) proj_err keeps its
    usual meaning but alias_err/total_err hold ABSOLUTE errors
    (lambda_disc - lambda_cont * T F and lambda_disc - lambda_cont).
    """

    q: int
    lambda_cont: complex
    lambda_disc: complex
    proj_err: complex
    alias_err: complex
    total_err: complex
    resonant: bool = False


def spectral_error(target: OperatorId | FormulationId, q: int, cfg: ProblemConfig,
                   b: BasisSpec, smax: int = DEFAULT_SMAX) -> SpectrumRow:
    """Projection / aliasing error split at one index.

    total_err = proj_err + alias_err and
    lambda_disc = lambda_cont * (1 + total_err) hold by construction.
    """
    lam = continuous_eig(target, q, cfg)
    lam_hat = discrete_eig(target, q, cfg, b, smax)
    tf = fourier_coeff(b, -q) * fourier_coeff(b, q)
    proj = complex(tf - 1.0)
    abs_total = lam_hat - lam
    if abs(lam) < _RESONANT_REL * abs(abs_total):
        return SpectrumRow(q, lam, lam_hat, proj,
                           alias_err=lam_hat - lam * tf,
                           total_err=abs_total, resonant=True)
    total = abs_total / lam
    return SpectrumRow(q, lam, lam_hat, proj, alias_err=total - proj,
                       total_err=total, resonant=False)


class SpectrumTable:
    """Spectral-error rows for q in [-N/2, N/2), stored as a symmetric half.

    All quantities are even in q, and folded eigenvalues are N-periodic; the
    row at q = -N/2 therefore equals the one at +N/2.
    """

    def __init__(self, target, cfg: ProblemConfig, b: BasisSpec, rows_half: list[SpectrumRow]):
        self.target = target
        self.cfg = cfg
        self.basis = b
        self._half = rows_half  # indices 0 .. N/2

    def row(self, q: int) -> SpectrumRow:
        qa = abs(q)
        if qa > self.basis.N // 2:
            raise DomainError(f"q={q} outside [-N/2, N/2)")
        base = self._half[qa]
        return base if q == base.q else SpectrumRow(
            q, base.lambda_cont, base.lambda_disc, base.proj_err,
            base.alias_err, base.total_err, base.resonant)

    def rows(self) -> list[SpectrumRow]:
        N = self.basis.N
        return [self.row(q) for q in range(-N // 2, N // 2)]


def spectral_table(target: OperatorId | FormulationId, cfg: ProblemConfig,
                   b: BasisSpec, smax: int = DEFAULT_SMAX) -> SpectrumTable:
    half = [spectral_error(target, q, cfg, b, smax) for q in range(b.N // 2 + 1)]
    return SpectrumTable(target, cfg, b, half)
