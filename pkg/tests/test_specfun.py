"""Cylinder-function accuracy: frozen oracle values, the checked-in
high-precision table, and the Wronskian sentinel."""

import numpy as np
import pytest

from cylbem.errors import AccuracyError, DomainError
from cylbem.scaled import ScaledComplex
from cylbem.specfun import (
    CylPair,
    cyl_sequence,
    cyl_tables,
    load_reference_table,
    wronskian_residual,
    wronskian_residual_arrays,
)

# 50-digit series values (generated once with mpmath, dps=40)
J0_1 = 0.76519768655796655145
Y0_1 = 0.088256964215676957983


def test_j0_at_one_matches_series_oracle():
    seq = cyl_sequence(0, 1.0)
    assert abs(seq[0].j.to_complex() - J0_1) < 1e-12


def test_h2_at_one_matches_series_oracle():
    seq = cyl_sequence(0, 1.0)
    want = complex(J0_1, -Y0_1)
    assert abs(seq[0].h2.to_complex() - want) < 1e-11


def test_small_argument_leading_term():
    # J_1(z) ~ z/2 for z -> 0
    seq = cyl_sequence(1, 1e-8)
    assert abs(seq[1].j.to_complex() - 5e-9) < 1e-22


def test_wronskian_residual_small_real():
    seq = cyl_sequence(100, 50.0)
    assert max(wronskian_residual(p) for p in seq) <= 1e-10


def test_wronskian_residual_small_complex():
    t = cyl_tables(40, 30.0 - 0.5j)
    assert wronskian_residual(t.pair(40)) <= 1e-10


def test_wronskian_linear_sensitivity():
    p = cyl_sequence(10, 7.0)[3]
    bumped = CylPair(p.q, p.z, p.j * (1.0 + 1e-6), p.h2, p.jp, p.h2p)
    res = wronskian_residual(bumped)
    assert 1e-7 < res < 1e-4  # ~1e-6 up to the O(1) factor J*H2'/W


def test_reference_table_agreement():
    rows = load_reference_table()
    assert len(rows) >= 100
    by_z = {}
    for q, z, j, h in rows:
        by_z.setdefault(z, []).append((q, j, h))
    worst_j = worst_h = 0.0
    for z, items in by_z.items():
        t = cyl_tables(max(q for q, _, _ in items), z)
        for q, j, h in items:
            p = t.pair(q)
            worst_j = max(worst_j, ((p.j - j) / j).magnitude())
            worst_h = max(worst_h, ((p.h2 - h) / h).magnitude())
    assert worst_j <= 1e-11
    assert worst_h <= 1e-10


def test_extension_leaves_shared_orders_unchanged():
    a = cyl_tables(50, 23.7)
    b = cyl_tables(200, 23.7)
    for q in (0, 7, 23, 50):
        pa, pb = a.pair(q), b.pair(q)
        assert ((pa.j - pb.j) / pb.j).magnitude() <= 1e-13
        assert ((pa.h2 - pb.h2) / pb.h2).magnitude() <= 1e-13


def test_derivative_identity():
    t = cyl_tables(60, 13.4)
    z = 13.4
    for q in (1, 10, 35, 60):
        want = t.pair(q - 1).j - (q / z) * t.pair(q).j
        got = t.pair(q).jp
        assert ((got - want) / want).magnitude() <= 1e-12


def test_underflow_orders_are_finite_scaled():
    t = cyl_tables(3000, 10.0)
    p = t.pair(3000)
    assert p.j.exp2 < -5000  # far below double range
    assert p.h2.exp2 > 5000
    assert np.isfinite(p.j.mantissa.real)


def test_domain_errors():
    with pytest.raises(DomainError):
        cyl_sequence(10, 0.0)
    with pytest.raises(DomainError):
        cyl_sequence(10, 1.0 + 0.5j)
    with pytest.raises(DomainError):
        cyl_sequence(200_000, 5.0)
