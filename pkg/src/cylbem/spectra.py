"""Closed-form eigenvalues of the boundary integral operators on a circle.

On a circle of radius a the single layer, double layer, adjoint double
layer, hypersingular and identity operators are all diagonalized by the
Fourier harmonics exp(j q phi).  Their eigenvalues are products of J_q and
H_q^(2) at argument k*a (or at the complexified argument ktilde*a used by
the Calderon-combined formulation):

    single layer   -(j k pi a / 2) J_q(ka) H_q2(ka)
    double layers  -(j k pi a / 4) [J_q(ka) H_q2(ka)]'   (d/d(ka) of product)
    hypersingular  +(j k pi a / 2) J'_q(ka) H_q2'(ka)
    identity        1

The derivative in the double-layer eigenvalue is fixed as the derivative of
the product; that reading is the one consistent with the exact circle
identity  lamS*lamN + lamD^2 = 1/4  implied by the Bessel Wronskian.
"""

from __future__ import annotations

import enum
import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .specfun import MAX_ORDER, CylTables, cyl_tables


class OperatorKind(enum.Enum):
    SINGLE_LAYER = "S"
    DOUBLE_LAYER = "D"
    ADJ_DOUBLE_LAYER = "Dstar"
    HYPERSINGULAR = "N"
    IDENTITY = "I"


class WavenumberTag(enum.Enum):
    K = "k"
    K_TILDE = "ktilde"


@dataclass(frozen=True)
class OperatorId:
    kind: OperatorKind
    wavenumber_tag: WavenumberTag = WavenumberTag.K

    def __str__(self) -> str:
        suffix = "" if self.wavenumber_tag is WavenumberTag.K else "~"
        return self.kind.value + suffix


class Composite(enum.Enum):
    EFIO = "EFIO"
    MFIO = "MFIO"
    CEFIO = "CEFIO"
    CMFIO = "CMFIO"
    CCFIO = "CCFIO"


class Polarization(enum.Enum):
    TM = "TM"
    TE = "TE"


@dataclass(frozen=True)
class FormulationId:
    composite: Composite
    polarization: Polarization

    def __str__(self) -> str:
        return f"{self.polarization.value}-{self.composite.value}"


@dataclass(frozen=True)
class ProblemConfig:
    """Scattering problem parameters for a PEC circular cylinder.

    a     : radius (meters)
    k     : real wavenumber (rad/m), > 0
    eta   : exterior impedance (relative errors are independent of it)
    N     : uniform mesh element count (even, >= 4)
    p     : basis polynomial order, 0 (pulse) or 1 (hat)
    """

    a: float = 1.0
    k: float = 1.0
    eta: float = 1.0
    N: int = 16
    p: int = 1

    def __post_init__(self):
        if not (self.k > 0 and self.a > 0):
            raise DomainError("require k > 0 and a > 0")
        if self.N < 4:
            raise DomainError("mesh element count N must be >= 4")
        if self.N % 2 != 0:
            raise DomainError("N must be even (unambiguous DFT index grid)")
        if self.p not in (0, 1):
            raise DomainError("basis order p must be 0 or 1")

    @property
    def ka(self) -> float:
        return self.k * self.a

    @property
    def k_tilde(self) -> complex:
        return self.k - 0.4j * self.k ** (1.0 / 3.0) * self.a ** (-2.0 / 3.0)

    @property
    def h(self) -> float:
        """Element arc length 2 pi a / N."""
        return 2.0 * math.pi * self.a / self.N

    def argument(self, tag: WavenumberTag) -> complex:
        if tag is WavenumberTag.K:
            return complex(self.ka)
        return self.k_tilde * self.a

    @staticmethod
    def for_ka(ka: float, a: float = 1.0, eta: float = 1.0,
               N: int | None = None, p: int = 1) -> "ProblemConfig":
        """Config at given ka; N defaults to the four-per-wavelength rule."""
        if N is None:
            N = mesh_count_for(ka)
        return ProblemConfig(a=a, k=ka / a, eta=eta, N=N, p=p)


def mesh_count_for(ka: float) -> int:
    """Even element count closest to four points per wavelength."""
    return max(4, 2 * round(2.0 * ka))


# ---------------------------------------------------------------------------
# Cylinder-function table cache (tables are pure data; rebuildable anytime)
# ---------------------------------------------------------------------------

_CACHE: "OrderedDict[complex, CylTables]" = OrderedDict()
_CACHE_SLOTS = 8


def tables_for(z: complex, max_order: int) -> CylTables:
    z = complex(z)
    t = _CACHE.get(z)
    if t is not None and t.max_order >= max_order:
        _CACHE.move_to_end(z)
        return t
    want = max_order if t is None else max(max_order, min(2 * t.max_order, MAX_ORDER))
    t = cyl_tables(want, z)
    _CACHE[z] = t
    _CACHE.move_to_end(z)
    while len(_CACHE) > _CACHE_SLOTS:
        _CACHE.popitem(last=False)
    return t


def eig_elementary_array(kind: OperatorKind, z: complex, max_order: int) -> np.ndarray:
    """Eigenvalues for orders 0..max_order at argument z, as complex128."""
    if kind is OperatorKind.IDENTITY:
        return np.ones(max_order + 1, dtype=np.complex128)
    t = tables_for(z, max_order)
    sl = slice(0, max_order + 1)
    if kind is OperatorKind.SINGLE_LAYER:
        jh = t.product("j", "h")[sl]
        return -0.5j * math.pi * z * jh
    if kind in (OperatorKind.DOUBLE_LAYER, OperatorKind.ADJ_DOUBLE_LAYER):
        jph = t.product("jp", "h")[sl]
        jhp = t.product("j", "hp")[sl]
        return -0.25j * math.pi * z * (jph + jhp)
    if kind is OperatorKind.HYPERSINGULAR:
        jphp = t.product("jp", "hp")[sl]
        return 0.5j * math.pi * z * jphp
    raise DomainError(f"unknown operator kind {kind}")


def eig_elementary(op: OperatorId, q: int, cfg: ProblemConfig) -> complex:
    """Continuous eigenvalue of one elementary operator at Fourier index q."""
    z = cfg.argument(op.wavenumber_tag)
    return complex(eig_elementary_array(op.kind, z, abs(q))[abs(q)])


def _half_plus_minus(sign: float, kind_tag: WavenumberTag, q: int, cfg: ProblemConfig) -> complex:
    d = eig_elementary(OperatorId(OperatorKind.DOUBLE_LAYER, kind_tag), q, cfg)
    return 0.5 + sign * d


def eig_composite(f: FormulationId, q: int, cfg: ProblemConfig) -> complex:
    """Continuous eigenvalue of a composite formulation operator."""
    tm = f.polarization is Polarization.TM
    K, KT = WavenumberTag.K, WavenumberTag.K_TILDE
    S, N = OperatorKind.SINGLE_LAYER, OperatorKind.HYPERSINGULAR
    if f.composite is Composite.EFIO:
        kind = S if tm else N
        return eig_elementary(OperatorId(kind, K), q, cfg)
    if f.composite is Composite.MFIO:
        return _half_plus_minus(+1.0 if tm else -1.0, K, q, cfg)
    if f.composite is Composite.CEFIO:
        if tm:
            return (eig_elementary(OperatorId(N, KT), q, cfg)
                    * eig_elementary(OperatorId(S, K), q, cfg))
        return (eig_elementary(OperatorId(S, KT), q, cfg)
                * eig_elementary(OperatorId(N, K), q, cfg))
    if f.composite is Composite.CMFIO:
        if tm:
            return (_half_plus_minus(-1.0, KT, q, cfg)
                    * _half_plus_minus(+1.0, K, q, cfg))
        return (_half_plus_minus(+1.0, KT, q, cfg)
                * _half_plus_minus(-1.0, K, q, cfg))
    if f.composite is Composite.CCFIO:
        return (eig_composite(FormulationId(Composite.CEFIO, f.polarization), q, cfg)
                + eig_composite(FormulationId(Composite.CMFIO, f.polarization), q, cfg))
    raise DomainError(f"unknown composite {f.composite}")
