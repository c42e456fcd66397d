"""Continuous operator eigenvalues: closed-form checks, the circle
Calderon identity, resonance pairing and transition scaling."""

import numpy as np
import pytest

from cylbem.errors import DomainError
from cylbem.spectra import (
    Composite,
    FormulationId,
    OperatorId,
    OperatorKind,
    Polarization,
    ProblemConfig,
    WavenumberTag,
    eig_composite,
    eig_elementary,
    eig_elementary_array,
)

J0_FIRST_ZERO = 2.404825557695773
J1P_FIRST_ZERO = 1.8411837813406593

S = OperatorKind.SINGLE_LAYER
D = OperatorKind.DOUBLE_LAYER
N = OperatorKind.HYPERSINGULAR
I = OperatorKind.IDENTITY


def test_single_layer_zero_at_bessel_zero():
    cfg = ProblemConfig.for_ka(J0_FIRST_ZERO)
    assert abs(eig_elementary(OperatorId(S), 0, cfg)) < 1e-10


def test_identity_eigenvalue():
    cfg = ProblemConfig.for_ka(3.7)
    assert eig_elementary(OperatorId(I), 5, cfg) == 1.0


def test_single_layer_value_at_ka_one():
    # -(i pi/2) J_0(1) H2_0(1), evaluated with mpmath at 40 digits
    want = -0.10608219815307811436 - 0.91974444547346406613j
    cfg = ProblemConfig.for_ka(1.0)
    assert abs(eig_elementary(OperatorId(S), 0, cfg) - want) < 1e-10


def test_mfio_zeros_at_resonances():
    cfg = ProblemConfig.for_ka(J1P_FIRST_ZERO)
    tm_mfio = eig_composite(FormulationId(Composite.MFIO, Polarization.TM), 1, cfg)
    assert abs(tm_mfio) < 1e-10
    cfg = ProblemConfig.for_ka(J0_FIRST_ZERO)
    te_mfio = eig_composite(FormulationId(Composite.MFIO, Polarization.TE), 0, cfg)
    assert abs(te_mfio) < 1e-10


def test_ccfio_is_sum_of_parts():
    cfg = ProblemConfig.for_ka(8.3)
    for pol in Polarization:
        for q in (0, 3, 9):
            ce = eig_composite(FormulationId(Composite.CEFIO, pol), q, cfg)
            cm = eig_composite(FormulationId(Composite.CMFIO, pol), q, cfg)
            cc = eig_composite(FormulationId(Composite.CCFIO, pol), q, cfg)
            assert cc == ce + cm


@pytest.mark.parametrize("ka", [10.0, 50.0])
def test_calderon_identity(ka):
    qmax = int(3 * ka)
    lam_s = eig_elementary_array(S, ka, qmax)
    lam_d = eig_elementary_array(D, ka, qmax)
    lam_n = eig_elementary_array(N, ka, qmax)
    res = np.abs(lam_s * lam_n + lam_d**2 - 0.25) / 0.25
    assert res.max() <= 1e-9


def test_calderon_identity_complex_argument():
    cfg = ProblemConfig.for_ka(25.0)
    z = cfg.k_tilde * cfg.a
    lam_s = eig_elementary_array(S, z, 60)
    lam_d = eig_elementary_array(D, z, 60)
    lam_n = eig_elementary_array(N, z, 60)
    res = np.abs(lam_s * lam_n + lam_d**2 - 0.25) / 0.25
    assert res.max() <= 1e-9


def test_index_symmetry():
    cfg = ProblemConfig.for_ka(6.9)
    for kind in (S, D, N):
        for q in (1, 4, 11):
            assert eig_elementary(OperatorId(kind), q, cfg) == \
                eig_elementary(OperatorId(kind), -q, cfg)


def test_resonance_pairing():
    # at a J_q zero both TM-EFIO and TE-MFIO vanish; at a J'_q zero both
    # TE-EFIO and TM-MFIO vanish
    from scipy.special import jn_zeros, jnp_zeros

    q = 2
    cfg = ProblemConfig.for_ka(float(jn_zeros(q, 1)[0]))
    assert abs(eig_composite(FormulationId(Composite.EFIO, Polarization.TM), q, cfg)) < 1e-9
    assert abs(eig_composite(FormulationId(Composite.MFIO, Polarization.TE), q, cfg)) < 1e-9
    cfg = ProblemConfig.for_ka(float(jnp_zeros(q, 1)[0]))
    assert abs(eig_composite(FormulationId(Composite.EFIO, Polarization.TE), q, cfg)) < 1e-9
    assert abs(eig_composite(FormulationId(Composite.MFIO, Polarization.TM), q, cfg)) < 1e-9


def test_transition_region_scaling():
    kas = np.linspace(20.0, 200.0, 25)
    vs, vn = [], []
    for ka in kas:
        q = round(ka)
        vs.append(abs(eig_elementary_array(S, float(ka), q)[q]))
        vn.append(abs(eig_elementary_array(N, float(ka), q)[q]))
    slope_s = np.polyfit(np.log(kas), np.log(vs), 1)[0]
    slope_n = np.polyfit(np.log(kas), np.log(vn), 1)[0]
    assert abs(slope_s - 1.0 / 3.0) <= 0.08
    assert abs(slope_n + 1.0 / 3.0) <= 0.08


def test_problem_config_invariants():
    cfg = ProblemConfig(a=2.0, k=3.0, N=16, p=1)
    kt = cfg.k_tilde
    assert kt.imag < 0
    assert abs(kt - (3.0 - 0.4j * 3.0 ** (1 / 3) * 2.0 ** (-2 / 3))) < 1e-15
    with pytest.raises(DomainError):
        ProblemConfig(a=1.0, k=-1.0, N=16, p=1)
    with pytest.raises(DomainError):
        ProblemConfig(a=1.0, k=1.0, N=2, p=1)
    with pytest.raises(DomainError):
        ProblemConfig(a=1.0, k=1.0, N=15, p=1)
    with pytest.raises(DomainError):
        ProblemConfig(a=1.0, k=1.0, N=16, p=2)
