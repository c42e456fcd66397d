"""Complex floating-point values with a separate binary exponent.

Cylinder-function sequences span magnitudes far outside the double range:
J_q(x) underflows for q a few hundred orders above x and Y_q overflows
symmetrically.  A ScaledComplex keeps a complex mantissa with magnitude in
[0.5, 2) together with an integer power of two, so products and ratios of
enormously scaled values stay exact to working precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Exponent gap beyond which the smaller addend cannot affect the sum.
_ADD_CUTOFF = 120


def _norm(mantissa: complex, exp2: int) -> tuple[complex, int]:
    """Renormalize so |mantissa| lies in [0.5, 2), or (0, 0) for zero."""
    r = abs(mantissa)
    if r == 0.0:
        return 0j, 0
    if not (r == r) or r == math.inf:  # NaN / inf: leave as-is
        return mantissa, exp2
    _, e = math.frexp(r)  # r = m * 2**e with m in [0.5, 1)
    if e != 0:
        mantissa = complex(math.ldexp(mantissa.real, -e), math.ldexp(mantissa.imag, -e))
        exp2 += e
    return mantissa, exp2


@dataclass(frozen=True)
class ScaledComplex:
    """value = mantissa * 2**exp2, with |mantissa| in [0.5, 2) or zero."""

    mantissa: complex
    exp2: int = 0

    @staticmethod
    def from_complex(z: complex) -> "ScaledComplex":
        m, e = _norm(complex(z), 0)
        return ScaledComplex(m, e)

    @staticmethod
    def zero() -> "ScaledComplex":
        return ScaledComplex(0j, 0)

    def is_zero(self) -> bool:
        return self.mantissa == 0j

    def __mul__(self, other: "ScaledComplex | complex | float") -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        m, e = _norm(self.mantissa * other.mantissa, self.exp2 + other.exp2)
        return ScaledComplex(m, e)

    __rmul__ = __mul__

    def __truediv__(self, other: "ScaledComplex | complex | float") -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        m, e = _norm(self.mantissa / other.mantissa, self.exp2 - other.exp2)
        return ScaledComplex(m, e)

    def __add__(self, other: "ScaledComplex | complex | float") -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        d = other.exp2 - self.exp2
        if d > _ADD_CUTOFF:
            return other
        if d < -_ADD_CUTOFF:
            return self
        if d >= 0:
            m = complex(math.ldexp(self.mantissa.real, -d), math.ldexp(self.mantissa.imag, -d))
            m, e = _norm(m + other.mantissa, other.exp2)
        else:
            m = complex(math.ldexp(other.mantissa.real, d), math.ldexp(other.mantissa.imag, d))
            m, e = _norm(self.mantissa + m, self.exp2)
        return ScaledComplex(m, e)

    __radd__ = __add__

    def __sub__(self, other: "ScaledComplex | complex | float") -> "ScaledComplex":
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex.from_complex(other)
        return self + ScaledComplex(-other.mantissa, other.exp2)

    def __neg__(self) -> "ScaledComplex":
        return ScaledComplex(-self.mantissa, self.exp2)

    def abs2(self) -> "ScaledComplex":
        """|value|^2 as a ScaledComplex (real mantissa)."""
        m = self.mantissa.real * self.mantissa.real + self.mantissa.imag * self.mantissa.imag
        mm, e = _norm(complex(m, 0.0), 2 * self.exp2)
        return ScaledComplex(mm, e)

    def magnitude(self) -> float:
        """|value| as a plain float; 0.0 / inf on under/overflow."""
        r = abs(self.mantissa)
        if r == 0.0:
            return 0.0
        try:
            return math.ldexp(r, self.exp2)
        except OverflowError:
            return math.inf

    def to_complex(self) -> complex:
        """Collapse to a plain complex; over/underflows saturate."""
        try:
            return complex(
                math.ldexp(self.mantissa.real, self.exp2),
                math.ldexp(self.mantissa.imag, self.exp2),
            )
        except OverflowError:
            re = math.copysign(math.inf, self.mantissa.real) if self.mantissa.real else 0.0
            im = math.copysign(math.inf, self.mantissa.imag) if self.mantissa.imag else 0.0
            return complex(re, im)

    def __complex__(self) -> complex:
        return self.to_complex()
