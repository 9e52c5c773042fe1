"""Gauge unitaries, spectral-equivalence reports, and the coupling-grid scan."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugecraft import (COULOMB, MULTIPOLAR, GaugeParam, ambiguity_scan, build_dipole,
                        build_naive, converged_spectral_equivalence, couplings,
                        gauge_unitary, tls_single_mode_modeset,
                        verify_spectral_equivalence)
from gaugecraft.gaugecheck import converged_ground_energy
from gaugecraft.hilbert import HermitianGenerator, max_abs


def _setup(eta=0.5, cutoff=30, chi=1.0, omega0=1.0):
    ms, em = tls_single_mode_modeset(chi, eta, omega0)
    cs = couplings(ms, em)
    b = build_dipole(ms, em, COULOMB, max(cutoff, 12))
    return ms, em, cs, b.space


class TestGaugeUnitary:
    def test_identity_for_equal_endpoints(self):
        _, _, cs, space = _setup()
        w = gauge_unitary(space, cs, 0.3, 0.3)
        assert max_abs(w.matrix - np.eye(space.dim)) < 1e-14

    def test_multipolar_matter_transform_is_trivial(self):
        # the matter-side unitary of the multipolar member has zero generator
        _, _, cs, space = _setup()
        gen = HermitianGenerator(cs.generator_matrix(space), space)
        u_mp = gen.unitary(1.0 - MULTIPOLAR.theta)
        assert max_abs(u_mp.matrix - np.eye(space.dim)) < 1e-14

    def test_exact_unitarity_strong_coupling(self):
        _, _, cs, space = _setup(eta=0.8, cutoff=60)
        w = gauge_unitary(space, cs, 0.0, 1.0)
        assert max_abs(w.matrix.conj().T @ w.matrix - np.eye(space.dim)) < 1e-12

    def test_composition(self):
        _, _, cs, space = _setup(eta=1.0, cutoff=60)
        w_full = gauge_unitary(space, cs, 0.0, 1.0).matrix
        w_half1 = gauge_unitary(space, cs, 0.0, 0.5).matrix
        w_half2 = gauge_unitary(space, cs, 0.5, 1.0).matrix
        assert max_abs(w_full - w_half2 @ w_half1) < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(t0=st.floats(0, 1), t1=st.floats(0, 1), t2=st.floats(0, 1),
           eta_im=st.floats(-0.5, 0.5))
    def test_composition_property(self, t0, t1, t2, eta_im):
        from gaugecraft import ModeSet, tls

        em = tls(1.0, (0.4, 0.0, 0.0))
        f = (complex(0.5, eta_im), 0.0, 0.0)
        ms = ModeSet.single_mode(1.0, {"emitter": f})
        cs = couplings(ms, em)
        space = build_dipole(ms, em, COULOMB, 12).space
        lhs = gauge_unitary(space, cs, t0, t2).matrix
        rhs = gauge_unitary(space, cs, t1, t2).matrix @ gauge_unitary(space, cs, t0, t1).matrix
        assert max_abs(lhs - rhs) < 1e-12

    def test_space_coupling_mismatch(self):
        from gaugecraft import HilbertSpec, matter_levels, photon

        _, _, cs, _ = _setup()
        two_mode_space = HilbertSpec([photon(5), photon(5), matter_levels(2)])
        with pytest.raises(ValueError):
            gauge_unitary(two_mode_space, cs, 0.0, 1.0)
        three_level_space = HilbertSpec([photon(5), matter_levels(3)])
        with pytest.raises(ValueError):
            gauge_unitary(three_level_space, cs, 0.0, 1.0)


class TestVerifySpectralEquivalence:
    def test_identical_inputs_give_zero(self):
        ms, em, cs, _ = _setup()
        b = build_dipole(ms, em, COULOMB, 25)
        rep = verify_spectral_equivalence(b, b, k=6, cs=cs)
        assert rep.max_abs_diff == 0.0
        assert np.all(rep.per_level == 0.0)
        assert rep.operator_residual < 1e-12

    def test_correct_endpoints_agree(self):
        ms, em, cs, _ = _setup(eta=0.5)
        b0 = build_dipole(ms, em, COULOMB, 40)
        b1 = build_dipole(ms, em, MULTIPOLAR, 40)
        rep = verify_spectral_equivalence(b0, b1, k=5, tol=1e-6, cs=cs)
        assert rep.max_abs_diff < 1e-6
        assert rep.operator_residual < 1e-10
        assert rep.converged

    def test_naive_versus_correct_disagrees(self):
        ms, em, cs, _ = _setup(eta=0.5)
        naive = build_naive(ms, em, COULOMB, 40, order=1)
        correct = build_dipole(ms, em, MULTIPOLAR, 40)
        rep = verify_spectral_equivalence(naive, correct, k=5, tol=1e-6, cs=cs)
        assert rep.max_abs_diff > 1e-2
        assert not rep.converged

    def test_symmetry(self):
        ms, em, cs, _ = _setup(eta=0.3)
        b0 = build_dipole(ms, em, COULOMB, 30)
        b1 = build_dipole(ms, em, MULTIPOLAR, 30)
        rep_ab = verify_spectral_equivalence(b0, b1, k=4)
        rep_ba = verify_spectral_equivalence(b1, b0, k=4)
        assert np.allclose(rep_ab.per_level, rep_ba.per_level)

    def test_k_exceeding_dimension_rejected(self):
        ms, em, _, _ = _setup(eta=0.0, cutoff=3)
        b = build_dipole(ms, em, COULOMB, 3)
        with pytest.raises(ValueError):
            verify_spectral_equivalence(b, b, k=b.space.dim + 1)

    def test_report_reproducible_bit_identically(self):
        ms, em, cs, _ = _setup(eta=0.4)
        b0 = build_dipole(ms, em, COULOMB, 20)
        b1 = build_dipole(ms, em, MULTIPOLAR, 20)
        r1 = verify_spectral_equivalence(b0, b1, k=5, cs=cs)
        r2 = verify_spectral_equivalence(b0, b1, k=5, cs=cs)
        assert r1.max_abs_diff == r2.max_abs_diff
        assert r1.operator_residual == r2.operator_residual
        assert np.array_equal(r1.per_level, r2.per_level)


class TestConvergenceProtocol:
    def test_doubling_protocol_converges(self):
        ms, em = tls_single_mode_modeset(1.0, 0.5, 1.0)

        def pair(n):
            return (build_dipole(ms, em, COULOMB, n),
                    build_dipole(ms, em, MULTIPOLAR, n))

        rep = converged_spectral_equivalence(pair, k=5, tol=1e-6, start_cutoff=16)
        assert rep.converged
        assert rep.max_abs_diff < 1e-6

    def test_ground_energy_doubling(self):
        ms, em = tls_single_mode_modeset(1.0, 0.5, 1.0)
        e0, cutoff = converged_ground_energy(
            lambda n: build_dipole(ms, em, MULTIPOLAR, n), tol=1e-7)
        e_ref = build_dipole(ms, em, MULTIPOLAR, 4 * cutoff).eigenvalues(1)[0]
        assert abs(e0 - e_ref) < 1e-6


class TestAmbiguityScan:
    def test_zero_coupling_row(self):
        rows = ambiguity_scan(1.0, 1.0, [0.0])
        assert rows[0].naive_gap < 1e-10
        assert rows[0].correct_gap < 1e-10

    def test_gap_growth_and_correct_flatness(self):
        rows = ambiguity_scan(1.0, 1.0, [0.1, 0.3, 0.5, 1.0])
        naive = [r.naive_gap for r in rows]
        assert all(naive[i + 1] > naive[i] for i in range(3))
        assert all(r.correct_gap < 1e-6 for r in rows)
        assert all(r.converged for r in rows)
