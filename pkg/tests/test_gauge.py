import numpy as np
import pytest

from optwannier import (
    GaugePhases,
    NoReliableComponent,
    PerturbedGauge,
    apply_gauge,
    apply_perturbed_gauge,
    extract_phases,
    extract_realty_phase,
    extract_zak_phase,
)
from optwannier.eigen import BandState
from optwannier.gauge import berry_connection, right_shift, shift_residual, zak_phase_spread
from optwannier.transport import integrate_band
from optwannier.wannier import assemble_alpha, compute_center, compute_moments, orient
from oracles import asym_exp, discrete_berry_phase, gaussian5
from runs import run, workspace


def _random_vec(seed, n=9):
    rng = np.random.default_rng(seed)
    return rng.normal(size=n) + 1j * rng.normal(size=n)


class TestZakPhase:
    def test_periodic_is_zero(self):
        y0 = _random_vec(0)
        y_end = np.roll(y0, -1)  # y_end[m] = y0[m+1]
        assert extract_zak_phase(y0, y_end) == pytest.approx(0, abs=1e-15)

    def test_pure_phase_jump(self):
        y_end = _random_vec(1)
        y0 = np.zeros_like(y_end)
        y0[1:] = 1j * y_end[:-1]  # y_start[m+1] = i y_end[m]
        assert extract_zak_phase(y0, y_end) == pytest.approx(-np.pi / 2, abs=1e-14)

    def test_range(self):
        y_end = _random_vec(2)
        y0 = np.zeros_like(y_end)
        y0[1:] = -y_end[:-1]
        assert extract_zak_phase(y0, y_end) == pytest.approx(np.pi, abs=1e-14)

    def test_no_reliable_component(self):
        y = np.zeros(5, complex)
        y[0] = 1.0
        with pytest.raises(NoReliableComponent):
            extract_zak_phase(y, y)

    @pytest.mark.parametrize("band,expect", [(1, 0.0), (2, np.pi), (3, 0.0)])
    def test_gaussian_quantized(self, band, expect):
        K = {1: 201, 2: 801, 3: 3201}[band]
        phi = run("gaussian5", band, K).phases.phi_zak
        assert abs(np.angle(np.exp(1j * (phi - expect)))) <= 1e-6
        oracle = discrete_berry_phase(gaussian5, 2 * np.pi, 10, band)
        assert abs(np.angle(np.exp(1j * (phi - oracle)))) <= 1e-6

    @pytest.mark.parametrize("band,K", [(1, 201), (3, 1601)])
    def test_asym_against_berry_oracle(self, band, K):
        phi = run("asym-exp", band, K).phases.phi_zak
        oracle = discrete_berry_phase(asym_exp, 2 * np.pi, 15, band, n_k=800)
        assert abs(np.angle(np.exp(1j * (phi - oracle)))) <= 1e-6


class TestRealtyPhase:
    def test_real_symmetric(self):
        y = np.array([0.1, 0.5, 1.0, 0.5, 0.1], complex)
        assert extract_realty_phase(y, y) == 0.0

    def test_constructed_phase(self):
        y = np.array([0.1, 0.5, 1.0, 0.3, 0.2], complex)
        y_end = y[::-1].copy()
        ph = np.exp(1j * np.pi / 4)
        assert extract_realty_phase(ph * y, ph * y_end) == pytest.approx(np.pi / 4, abs=1e-14)

    def test_branch(self):
        y = np.array([0.1, 0.5, 1.0, 0.5, 0.1], complex)
        phi = extract_realty_phase(1j * y, 1j * y)
        assert -np.pi / 2 < phi <= np.pi / 2
        assert phi == pytest.approx(np.pi / 2)

    def test_no_reliable_component(self):
        with pytest.raises(NoReliableComponent):
            extract_realty_phase(np.zeros(3), np.zeros(3))


class TestApplyGauge:
    def test_identity(self):
        tr = run("gaussian5", 1, 51).traj
        g = apply_gauge(tr, GaugePhases(phi_zak=0.0, phi_0=0.0))
        np.testing.assert_array_equal(g.y, tr.y)
        np.testing.assert_array_equal(g.dy, tr.dy)

    def test_norms_unchanged(self):
        r = run("asym-exp", 1, 201)
        np.testing.assert_allclose(np.linalg.norm(r.gauged.y, axis=1), np.linalg.norm(r.traj.y, axis=1), rtol=1e-15)

    @pytest.mark.parametrize("name", ["gaussian5", "asym-exp"])
    def test_shift_periodic(self, name):
        r = run(name, 1, 201)
        assert shift_residual(r.gauged) <= 10 * r.err

    @pytest.mark.parametrize("name", ["gaussian5", "asym-exp"])
    def test_shift_periodic_interior(self, name):
        # Without the zero-filled truncation mode only transport error is left.
        r = run(name, 1, 201)
        assert shift_residual(r.gauged, interior=True) <= 10 * r.err
        edge = abs(r.gauged.y[0, 0]) / np.linalg.norm(r.gauged.y[0])
        assert shift_residual(r.gauged) == pytest.approx(np.hypot(edge, shift_residual(r.gauged, interior=True)))

    def test_right_shift(self):
        np.testing.assert_array_equal(right_shift(np.array([1, 2, 3])), [0, 1, 2])

    @pytest.mark.parametrize("name,band,K", [("gaussian5", 2, 801), ("asym-exp", 1, 201)])
    def test_berry_connection(self, name, band, K):
        r = run(name, band, K)
        conn = berry_connection(r.gauged)[1:-1]
        target = r.phases.phi_zak / (r.traj.Omega * r.traj.a)
        assert np.abs(conn - target).max() <= 10 * r.err

    def test_spread(self):
        r = run("asym-exp", 2, 401)
        assert r.phases.per_component_spread <= 1e-6
        assert zak_phase_spread(r.traj.y[0], r.traj.y[-1], r.phases.phi_zak) == r.phases.per_component_spread


class TestPerturbedGauge:
    def test_hermitian_required(self):
        with pytest.raises(ValueError):
            PerturbedGauge(c={1: 0.1j, -1: 0.1j})
        with pytest.raises(ValueError):
            PerturbedGauge(c={0: 1.0})
        assert PerturbedGauge(c={2: 0.1 + 0.2j, -2: 0.1 - 0.2j}).penalty == pytest.approx(0.1)

    def test_reduces_to_optimal(self):
        r = run("asym-exp", 1, 201)
        g = apply_perturbed_gauge(r.traj, r.phases, PerturbedGauge())
        np.testing.assert_allclose(g.y, r.gauged.y, atol=1e-15)

    def test_branch_shifts_center(self):
        r = run("asym-exp", 1, 201)
        g = apply_perturbed_gauge(r.traj, r.phases, PerturbedGauge(n=1))
        m0, m1 = compute_moments(r.gauged), compute_moments(g)
        # Exact up to the 1e-10 norm drift allowed between renormalizations.
        assert m1.center - m0.center == pytest.approx(r.traj.a, abs=1e-9 * r.traj.a)
        assert compute_center(r.phases, r.traj.a, n=1) - compute_center(r.phases, r.traj.a) == pytest.approx(r.traj.a)

    def test_still_shift_periodic(self):
        r = run("gaussian5", 1, 201)
        g = apply_perturbed_gauge(r.traj, r.phases, PerturbedGauge(c={1: 0.1, -1: 0.1}))
        # The periodic part of the phase returns to its start value at the zone edge.
        assert shift_residual(g) == pytest.approx(shift_residual(r.gauged), abs=1e-13)

    @pytest.mark.parametrize("name", ["gaussian5", "asym-exp"])
    def test_variance_penalty(self, name):
        r = run(name, 1, 201)
        pert = PerturbedGauge(c={1: 0.1, -1: 0.1})
        g = apply_perturbed_gauge(r.traj, r.phases, pert)
        delta = compute_moments(g).variance - compute_moments(r.gauged).variance
        assert delta == pytest.approx(0.02, rel=0.05)
        assert pert.penalty == pytest.approx(0.02)


class TestGaugeInvariance:
    def test_initial_phase_irrelevant(self):
        ws = workspace("asym-exp")
        base = run("asym-exp", 1, 201)
        y0 = base.traj.y[0] * np.exp(1.234j)
        tr = integrate_band(ws, 1, 200, initial=BandState(k=-0.5, E=float(base.traj.E[0]), y=y0))
        ph = extract_phases(tr)
        assert ph.phi_zak == pytest.approx(base.phases.phi_zak, abs=1e-10)
        rep = orient(assemble_alpha(apply_gauge(tr, ph)))
        np.testing.assert_allclose(np.abs(rep.alpha), np.abs(base.rep.alpha), atol=1e-10)
        np.testing.assert_allclose(rep.alpha, base.rep.alpha, atol=1e-10)
