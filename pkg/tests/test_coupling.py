import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from couplinglab.circuits import (
    ChargeLattice,
    FluxQubitParams,
    HamiltonianMatrix,
    OperatorKind,
    PhaseQubitParams,
    build_flux_qubit_hamiltonian,
    build_operator,
)
from couplinglab.coupling import (
    CouplingFactors,
    CriticalCurrent,
    Dipole,
    FluxFluctuator,
    TLSParams,
    coupling_factors,
    dipole_coupling_flux,
    matrix_elements,
    model_prefactor,
    pauli_coupling,
    phase_m_element,
)
from couplinglab.errors import IncompatibleBasisError, InvalidParameterError
from couplinglab.spectral import solve_flux_qubit, solve_phase_qubit
from couplinglab.sweeps import phase_point

# 30-digit hand calculations (mpmath)
CC_PREFACTOR_1NA = -0.4966835107766755  # -1 nA * phi0 / (2 pi h), GHz
FF_PREFACTOR_FLUX = 4.272566008882119e-4  # 2 pi * 0.68 * 100 GHz * 1e-6


class TestTLS:
    def test_angle_and_splitting(self):
        tls = TLSParams(epsilon=3.0, delta=4.0)
        assert tls.omega_t == pytest.approx(5.0)
        assert math.tan(tls.theta) == pytest.approx(0.75)

    def test_pure_asymmetry(self):
        tls = TLSParams(epsilon=-2.0, delta=0.0)
        assert tls.theta == pytest.approx(-math.pi / 2)

    def test_rejects_negative_tunneling(self):
        with pytest.raises(InvalidParameterError):
            TLSParams(1.0, -0.1)

    def test_rejects_zero_splitting(self):
        with pytest.raises(InvalidParameterError):
            TLSParams(0.0, 0.0)

    @given(st.floats(-10, 10), st.floats(0.01, 10))
    def test_theta_range(self, eps, delta):
        theta = TLSParams(eps, delta).theta
        assert -math.pi / 2 < theta < math.pi / 2
        assert math.cos(theta) > 0


class TestFactors:
    def test_identity_gives_zero(self, flux_sol_505):
        eye = HamiltonianMatrix(np.eye(flux_sol_505.basis.dim), flux_sol_505.basis)
        f = coupling_factors(flux_sol_505, eye)
        assert f.o_x < 1e-12 and f.o_z < 1e-12

    def test_hamiltonian_itself(self, flux_sol_505):
        h = build_flux_qubit_hamiltonian(FluxQubitParams(f=0.505))
        f = coupling_factors(flux_sol_505, h)
        assert f.o_x < 1e-10
        assert f.o_z == pytest.approx(flux_sol_505.omega_q / 2, rel=1e-10)

    def test_charge_has_no_longitudinal_part(self, phase_sol_058):
        f = coupling_factors(phase_sol_058, build_operator(OperatorKind.CHARGE, phase_sol_058.basis))
        assert f.o_z < 1e-10
        assert f.o_x > 1

    def test_degeneracy_zeros(self, flux_sol_degenerate):
        lat = flux_sol_degenerate.basis
        cos3 = coupling_factors(flux_sol_degenerate, build_operator(OperatorKind.COS_J3, lat, 0.5))
        sin3 = coupling_factors(flux_sol_degenerate, build_operator(OperatorKind.SIN_J3, lat, 0.5))
        assert cos3.o_x < 1e-8
        assert sin3.o_z < 1e-8
        assert cos3.o_z > 0.1 and sin3.o_x > 0.5

    @pytest.mark.parametrize("flip", [(1, -1), (-1, 1), (-1, -1), (1j, -1j)])
    def test_gauge_invariance(self, flux_sol_505, flip):
        lat = flux_sol_505.basis
        states = flux_sol_505.states.copy()
        states[:, 0] *= flip[0]
        states[:, 1] *= flip[1]
        rotated = replace(flux_sol_505, states=states)
        for kind in (OperatorKind.COS_J3, OperatorKind.SIN_J3, OperatorKind.CHARGE_M):
            op = build_operator(kind, lat, 0.505)
            a, b = coupling_factors(flux_sol_505, op), coupling_factors(rotated, op)
            assert a.o_x == pytest.approx(b.o_x, rel=1e-12)
            assert a.o_z == pytest.approx(b.o_z, rel=1e-12)

    def test_real_operator_transverse_is_off_diagonal(self, flux_sol_degenerate):
        op = build_operator(OperatorKind.COS_J3, flux_sol_degenerate.basis, 0.5)
        block = matrix_elements(flux_sol_degenerate, op)
        f = coupling_factors(flux_sol_degenerate, op)
        assert f.o_x == pytest.approx(abs(block[0, 1]), abs=1e-15)
        assert f.o_x == pytest.approx(abs(block[0, 1] + block[1, 0]) / 2, abs=1e-12)

    def test_operator_kind_recorded(self, flux_sol_505):
        f = coupling_factors(flux_sol_505, build_operator(OperatorKind.SIN_J3, flux_sol_505.basis, 0.505))
        assert f.operator_kind is OperatorKind.SIN_J3

    def test_basis_mismatch(self, flux_sol_505):
        other = build_operator(OperatorKind.CHARGE_M, ChargeLattice(8, 8))
        with pytest.raises(IncompatibleBasisError):
            coupling_factors(flux_sol_505, other)

    def test_junction_location_variant(self, flux_sol_degenerate, flux_sol_505):
        # a critical-current TLS in an outer junction also has o_x = 0 at degeneracy
        lat = flux_sol_degenerate.basis
        at_half = coupling_factors(flux_sol_degenerate, build_operator(OperatorKind.COS_J1, lat))
        off = coupling_factors(flux_sol_505, build_operator(OperatorKind.COS_J1, lat))
        assert at_half.o_x < 1e-8
        assert off.o_x > 1e-3


class TestPhaseEquivalence:
    @pytest.mark.parametrize("phi_e", [0.55, 0.575, 0.595])
    def test_cos_and_phase_factors_agree(self, phi_e):
        _, factors = phase_point(PhaseQubitParams(phi_e=phi_e), n_points=2048)
        ox_i, oz_i = factors["critical_current"]
        ox_f, oz_f = factors["flux_fluctuator"]
        assert abs(ox_i - ox_f) / ox_f < 0.2
        assert abs(oz_i - oz_f) / max(oz_f, 1e-6) < 0.3


class TestPrefactors:
    def test_zero_fluctuation(self):
        assert model_prefactor(CriticalCurrent(0.0), PhaseQubitParams()) == 0.0

    def test_critical_current_phase(self):
        v = model_prefactor(CriticalCurrent(1e-9), PhaseQubitParams())
        assert v == pytest.approx(CC_PREFACTOR_1NA, rel=1e-12)

    def test_flux_fluctuator_flux(self):
        v = model_prefactor(FluxFluctuator(1e-6), FluxQubitParams(alpha=0.68, ej_ghz=100))
        assert v == pytest.approx(FF_PREFACTOR_FLUX, rel=1e-12)

    def test_critical_current_flux_scales_with_alpha(self):
        v = model_prefactor(CriticalCurrent(1e-9), FluxQubitParams(alpha=0.68))
        assert v == pytest.approx(0.68 * CC_PREFACTOR_1NA, rel=1e-12)

    def test_flux_fluctuator_phase_sign(self):
        assert model_prefactor(FluxFluctuator(1e-6), PhaseQubitParams()) < 0

    def test_dipole_orientation(self):
        p = PhaseQubitParams()
        straight = model_prefactor(Dipole(1e-10, 2e-9), p)
        tilted = model_prefactor(Dipole(1e-10, 2e-9, eta=math.pi / 3), p)
        assert tilted == pytest.approx(straight / 2, rel=1e-12)

    def test_flux_dipole_needs_states(self):
        with pytest.raises(InvalidParameterError):
            model_prefactor(Dipole(1e-10, 2e-9), FluxQubitParams())

    def test_dipole_validation(self):
        with pytest.raises(InvalidParameterError):
            Dipole(1e-10, 0.0)
        with pytest.raises(InvalidParameterError):
            Dipole(-1e-10, 1e-9)


class TestPauliCoupling:
    def test_worked_example(self):
        tls = TLSParams(epsilon=1.0, delta=1.0)
        g = pauli_coupling(CriticalCurrent(1e-9), CouplingFactors(0.3, 0.1), tls, 1.0)
        assert g.g_x == pytest.approx(0.3 / math.sqrt(2), rel=1e-12)
        assert g.g_z == pytest.approx(0.1 / math.sqrt(2), rel=1e-12)
        assert round(g.g_x, 4) == 0.2121 and round(g.g_z, 4) == 0.0707

    def test_no_asymmetry_no_longitudinal(self):
        g = pauli_coupling(FluxFluctuator(1e-6), CouplingFactors(0.3, 0.4), TLSParams(0.0, 5.0), 2.0)
        assert g.g_z == 0.0

    def test_no_tunneling_no_transverse(self):
        g = pauli_coupling(FluxFluctuator(1e-6), CouplingFactors(0.3, 0.4), TLSParams(5.0, 0.0), 2.0)
        assert abs(g.g_x) < 1e-15

    def test_dipole_has_no_longitudinal_term(self):
        g = pauli_coupling(Dipole(1e-10, 2e-9), CouplingFactors(0.3, 0.4), TLSParams(1.0, 1.0), 1.0)
        assert g.g_z == 0.0

    def test_operator_model_mismatch(self):
        factors = CouplingFactors(0.3, 0.1, OperatorKind.CHARGE)
        with pytest.raises(InvalidParameterError):
            pauli_coupling(CriticalCurrent(1e-9), factors, TLSParams(1, 1), 1.0)


class TestFluxDipole:
    def test_zero_length(self, flux_sol_505):
        g = dipole_coupling_flux(flux_sol_505, FluxQubitParams(f=0.505), Dipole(0.0, 2e-9),
                                 TLSParams(0, 5))
        assert g.g_x == 0.0 and g.g_z == 0.0

    def test_perpendicular(self, flux_sol_505):
        g = dipole_coupling_flux(flux_sol_505, FluxQubitParams(f=0.505),
                                 Dipole(1e-10, 2e-9, eta=math.pi / 2), TLSParams(0, 5))
        assert abs(g.g_x) < 1e-15 and g.g_z == 0.0

    @pytest.mark.parametrize("f", [0.5, 0.505, 0.51])
    def test_purely_transverse(self, f):
        p = FluxQubitParams(f=f)
        g = dipole_coupling_flux(solve_flux_qubit(p), p, Dipole(1e-10, 2e-9), TLSParams(2, 3))
        assert g.g_z == 0.0
        assert g.g_x > 0

    def test_ehrenfest_cross_check(self, flux_sol_505):
        p = FluxQubitParams(f=0.505)
        lhs = flux_sol_505.omega_q * abs(phase_m_element(flux_sol_505))
        n_m = build_operator(OperatorKind.CHARGE_M, flux_sol_505.basis)
        rhs = 2 * p.em * abs(matrix_elements(flux_sol_505, n_m)[0, 1])
        assert abs(lhs - rhs) / rhs < 0.01

    def test_needs_charge_basis(self, phase_sol_058):
        with pytest.raises(IncompatibleBasisError):
            dipole_coupling_flux(phase_sol_058, FluxQubitParams(), Dipole(1e-10, 2e-9), TLSParams(0, 5))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 0.52))
def test_factors_non_negative(f):
    p = FluxQubitParams(f=f)
    sol = solve_flux_qubit(p, ChargeLattice(10, 10))
    for kind in (OperatorKind.COS_J3, OperatorKind.SIN_J3, OperatorKind.CHARGE_M):
        cf = coupling_factors(sol, build_operator(kind, sol.basis, f))
        assert cf.o_x >= 0 and cf.o_z >= 0
