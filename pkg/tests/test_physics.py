import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.constants import physical_constants

from phonon_gate import hilbert as hs
from phonon_gate.errors import ExpansionInvalidError, PhysicsError, SingularSeparationError, TrapDestabilizedError
from phonon_gate.physics import (
    HBAR,
    H_atom_drive,
    H_ion_atom_coupling,
    H_red_sideband,
    PhysicalParams,
    convert_C4,
    effective_sideband_block,
    expansion_terms,
    full_potential,
    interaction_picture,
    lamb_dicke_warning,
    mhz,
    phonon_coupling,
    sideband_coupling,
    to_mhz,
    total_potential,
    trap_shift,
)

AU_C4 = physical_constants["Hartree energy"][0] * physical_constants["Bohr radius"][0] ** 4


def test_c4_unit_conversion():
    assert convert_C4(1, 1) == pytest.approx(3.4197e-59, rel=1e-4)
    assert convert_C4(1, 1) == pytest.approx(AU_C4, rel=1e-12)
    assert abs(convert_C4(160, 5.07e10)) == pytest.approx(2.77e-46, rel=2e-3)


def test_default_c4_is_attractive(params):
    assert params.C4 < 0
    assert params.C4_eff == pytest.approx(160 * 5.07e10 * AU_C4)


def test_ground_state_width_and_beta(params):
    lam = math.sqrt(HBAR / (params.m_i * params.omega_i))
    assert params.lambda_i == pytest.approx(lam)
    assert params.lambda_i == pytest.approx(10.0e-9, rel=0.01)
    assert params.beta == pytest.approx(4 * math.sqrt(2) * lam / 2.57e-6)
    assert params.beta == pytest.approx(0.022, rel=0.01)


def test_shifted_frequency_at_working_point(params):
    s = trap_shift(params)
    assert to_mhz(s.omega_bar) == pytest.approx(10.61, rel=0.01)
    assert s.equilibrium_offset == pytest.approx(1.5e-7, rel=0.01)
    assert s.Delta == pytest.approx(params.omega_i - s.omega_bar)
    assert to_mhz(s.Delta) == pytest.approx(0.59, abs=0.02)


def _curvature(f, x, h):
    return (f(x + h) - 2 * f(x) + f(x - h)) / h**2


def test_curvature_at_shifted_minimum_matches_omega_bar(params):
    s = trap_shift(params)
    h = params.lambda_i / 100
    k = _curvature(lambda x: total_potential(params, x, "expanded"), s.equilibrium_offset, h)
    assert k == pytest.approx(params.m_i * s.omega_bar**2, rel=1e-3)


def test_force_vanishes_at_shifted_minimum(params):
    s = trap_shift(params)
    h = params.lambda_i / 100
    x = s.equilibrium_offset
    force = (total_potential(params, x + h, "expanded") - total_potential(params, x - h, "expanded")) / (2 * h)
    scale = params.m_i * params.omega_i**2 * x
    assert abs(force) < 1e-6 * scale


def test_exact_potential_curvature_matches_taylor_coefficient(params):
    taylor = params.with_(expansion_order2_coeff="taylor")
    h = params.lambda_i / 100
    k = _curvature(lambda x: total_potential(params, x, "exact"), 0.0, h)
    assert k == pytest.approx(params.m_i * trap_shift(taylor).omega_bar ** 2, rel=1e-3)


def test_expansion_residual_is_third_order(params):
    taylor = params.with_(expansion_order2_coeff="taylor")
    x = np.linspace(-3, 3, 61) * params.lambda_i
    resid = full_potential(taylor, x, "exact") - full_potential(taylor, x, "expanded")
    # leading remainder of (1 - u)^-4 is 20 u^3
    cubic = 20 * (x / params.x_a) ** 3 * params.V0
    assert np.allclose(resid, cubic, rtol=0.05, atol=1e-3 * np.max(np.abs(cubic)))
    assert np.max(np.abs(resid)) < params.beta**3 * abs(params.V0) * 3.5


def test_potential_rejects_atom_position(params):
    with pytest.raises(SingularSeparationError):
        full_potential(params, params.x_a)


def test_far_distance_recovers_bare_trap(params):
    s = trap_shift(params, 10e-6)
    assert s.omega_bar == pytest.approx(params.omega_i, rel=1e-3)


@given(st.floats(1.8e-6, 4.9e-6))
def test_shift_monotone_in_distance(d):
    p = PhysicalParams()
    near, far = trap_shift(p, d), trap_shift(p, d * 1.02)
    assert near.omega_bar < far.omega_bar < p.omega_i
    assert near.equilibrium_offset > far.equilibrium_offset > 0


def test_close_distance_destabilizes_trap(params):
    with pytest.raises(TrapDestabilizedError):
        trap_shift(params, 1.5e-6)
    with pytest.raises(PhysicsError):
        PhysicalParams(x_a=1.5e-6)


def test_expansion_validity_guard():
    with pytest.raises(ExpansionInvalidError):
        PhysicalParams(x_a=0.2e-6)


@pytest.mark.parametrize("bad", [dict(N_cutoff=1), dict(m_i=-1.0), dict(expansion_order2_coeff="x"),
                                 dict(ladder_normalization="x")])
def test_parameter_validation(bad):
    with pytest.raises(PhysicsError):
        PhysicalParams(**bad)


def test_expansion_coefficients(params):
    t = expansion_terms(params)
    assert t.V0 == pytest.approx(params.C4 / params.x_a**4)
    assert t.U1_0 == pytest.approx(t.V0 * t.beta)
    assert t.U2_0 == pytest.approx(t.V0 * t.beta**2 / 8)
    taylor = expansion_terms(params.with_(expansion_order2_coeff="taylor"))
    assert taylor.U2_0 == pytest.approx(2.5 * t.U2_0)


@pytest.mark.parametrize("coeff", ["paper", "taylor"])
def test_position_normalization_is_potential_at_position_operator(params, coeff):
    p = params.with_(N_cutoff=8, expansion_order2_coeff=coeff)
    a = hs.annihilation(8)
    x = p.lambda_i / math.sqrt(2) * (a + a.conj().T)
    w, v = np.linalg.eigh(x)
    vx = (v * (full_potential(p, w, "expanded") - p.V0)) @ v.conj().T
    assert np.allclose(phonon_coupling(p, 0.0), vx, atol=1e-12 * abs(p.V0))


def test_printed_normalization_ladder_element(params):
    p = params.with_(N_cutoff=8, ladder_normalization="printed")
    t = expansion_terms(p)
    u = phonon_coupling(p, 0.0)  # U2 has no n -> n+1 element
    for n in range(7):
        assert u[n, n + 1].real == pytest.approx(t.U1_0 * math.sqrt(n + 1) / math.sqrt(2), rel=1e-12)


def test_atom_drive_structure(params):
    p = params.with_(N_cutoff=4)
    assert p.delta_a == 0
    h = H_atom_drive(p)
    assert hs.is_hermitian(h)
    blocks = h.reshape(3, 8, 3, 8)
    assert np.allclose(blocks[1], 0) and np.allclose(blocks[:, :, 1], 0)
    assert blocks[2, 0, 0, 0] == pytest.approx(0.5 * HBAR * p.Omega_a)


def test_detuned_drive_has_rydberg_energy(params):
    p = params.with_(N_cutoff=4, delta_r=params.V0 / HBAR + mhz(3))
    assert p.delta_a == pytest.approx(mhz(3))
    h = H_atom_drive(p)
    i = hs.flatten(2, 0, 0, 4)
    assert h[i, i].real == pytest.approx(-HBAR * mhz(3))


def test_ion_atom_coupling_acts_only_on_rydberg(params):
    p = params.with_(N_cutoff=5)
    h = H_ion_atom_coupling(p, 3e-9)
    assert hs.is_hermitian(h, tol=1e-12 * np.max(np.abs(h)), relative=False)
    m = hs.ION_DIM * 5
    assert np.allclose(h[: 2 * m], 0) and np.allclose(h[:, : 2 * m], 0)


def test_sideband_coupling_elements(params):
    p = params.with_(N_cutoff=6)
    h = sideband_coupling(p)
    assert hs.is_hermitian(h)
    g = 0.5 * HBAR * p.eta_LD * p.Omega_i
    for n in range(1, 6):
        # <1_i, n-1| H |0_i, n>
        assert h[6 + n - 1, n] == pytest.approx(g * math.sqrt(n))
    assert h[6 + 2, 2] == 0


@given(st.floats(1e3, 1e8), st.floats(-1e8, 1e8))
def test_effective_block_eigenvalues(om, delta):
    w = np.linalg.eigvalsh(effective_sideband_block(om, delta))
    r = 0.5 * math.hypot(om, delta)
    assert np.allclose(w, [-r, r], rtol=1e-12, atol=1e-12 * r)


def test_sideband_frames_agree_at_t0(params):
    s = trap_shift(params)
    p = params.with_(N_cutoff=4)
    eff = H_red_sideband(p, s, "effective")
    lab = H_red_sideband(p, s, "lab")
    assert not eff.time_dependent and lab.time_dependent
    assert np.allclose(lab(0.0), sideband_coupling(p))


def test_lamb_dicke_warning():
    assert lamb_dicke_warning(PhysicalParams()) is None
    p = PhysicalParams(eta_LD=0.2, N_cutoff=12)
    assert lamb_dicke_warning(p)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        h = H_red_sideband(p)
    assert h.warnings and rec


@given(st.floats(0, 1e-6))
def test_interaction_picture_is_unitary_conjugation(t):
    n = 5
    a = hs.annihilation(n)
    w = 2 * math.pi * 1e6
    u = np.diag(np.exp(1j * w * t * np.arange(n)))
    assert np.allclose(interaction_picture(a, w, t), u @ a @ u.conj().T)
    assert np.allclose(interaction_picture(a, w, t), a * np.exp(-1j * w * t))
