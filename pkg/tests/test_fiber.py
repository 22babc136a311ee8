import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperfiber.errors import NonPositiveInput, ParamOutOfRange, UnsupportedStateShape
from hyperfiber.fiber import (
    FiberParams,
    beta,
    branch_phases,
    detect_period,
    favorable_fraction,
    fidelity_vs_distance_sweep,
    propagate,
    survival_probability,
)
from hyperfiber.states import hybrid_state, hyperentangled_state

FLAT = FiberParams(delta_n=0.0, theta1=0.0, phi1=0.0)


def test_beta_examples():
    assert beta(1.448, 1550e-9) == pytest.approx(5.8697e6, rel=1e-4)
    assert beta(1.0, 2 * np.pi) == pytest.approx(1.0)
    with pytest.raises(NonPositiveInput):
        beta(1.448, 0)


def test_propagate_at_origin_without_offsets():
    out = propagate(hybrid_state(0.8), 0.0, FLAT)
    assert out.fidelity_vs_input == pytest.approx(1.0, abs=1e-12)
    assert out.survival_probability == 1.0


def test_degenerate_indices_give_global_phase():
    fp = FiberParams(delta_n=0.0, theta1=0.4, phi1=0.4)
    for z in (0.0, 1.7, 95.0, 200.0):
        assert propagate(hybrid_state(0.8), z, fp).fidelity_vs_input == pytest.approx(1.0, abs=1e-12)


def test_trough_fidelity_for_alpha_08():
    # relative branch phase pi: |0.64 - 0.36|^2
    fp = FiberParams(delta_n=0.0, theta1=np.pi, phi1=0.0)
    assert propagate(hybrid_state(0.8), 3.0, fp).fidelity_vs_input == pytest.approx(0.0784, abs=1e-12)
    assert propagate(hybrid_state(1 / np.sqrt(2)), 3.0, fp).fidelity_vs_input == pytest.approx(0.0, abs=1e-12)


def test_offsets_alone_reduce_fidelity():
    fp = FiberParams()
    a, b2 = 0.8, 0.36
    want = abs(a * a * np.exp(1.02j * np.pi) + b2 * np.exp(0.98j * np.pi)) ** 2
    assert fidelity_vs_distance_sweep(a, fp, 0.0, 1.0)[0][1] == pytest.approx(want, abs=1e-12)
    assert want < 1


def test_survival_and_norm():
    fp = FiberParams()
    assert survival_probability(10.0, fp) == pytest.approx(10 ** (-0.36))
    out = propagate(hybrid_state(0.8), 57.3, fp)
    assert out.state.norm == pytest.approx(1.0, abs=1e-12)
    assert out.survival_probability == pytest.approx(10 ** (-0.36 * 5.73))


def test_propagate_six_qubit_state():
    fp = FiberParams()
    four = propagate(hybrid_state(0.8), 12.0, fp).fidelity_vs_input
    six = propagate(hyperentangled_state(0.8), 12.0, fp).fidelity_vs_input
    assert six == pytest.approx(four, abs=1e-12)


def test_propagate_validation():
    with pytest.raises(ParamOutOfRange):
        propagate(hybrid_state(0.8), -1.0, FiberParams())
    with pytest.raises(UnsupportedStateShape):
        from hyperfiber.core import HilbertLabel, StateVector

        lab = HilbertLabel.of("polarization", "polarization", "oam", "oam")
        propagate(StateVector(lab, np.ones(16) / 4), 1.0, FiberParams())
    with pytest.raises(ParamOutOfRange):
        FiberParams(delta_n=-1e-9)


def test_sweep_matches_propagate():
    fp = FiberParams()
    rows = fidelity_vs_distance_sweep(0.8, fp, 40.0, 0.5)
    for z, f, s in rows[::9]:
        out = propagate(hybrid_state(0.8), z, fp)
        assert f == pytest.approx(out.fidelity_vs_input, abs=1e-12)
        assert s == pytest.approx(out.survival_probability, rel=1e-12)


def test_sweep_flat_without_splitting():
    fp = FiberParams(delta_n=0.0, theta1=0.98 * np.pi, phi1=0.98 * np.pi)
    rows = fidelity_vs_distance_sweep(0.707, fp, 200.0, 0.1)
    assert len(rows) == 2001
    assert max(abs(f - 1.0) for _, f, _ in rows) < 1e-12
    assert any(abs(z - 95.0) < 1e-9 for z, _, _ in rows)


def test_sweep_rejects_bad_step():
    with pytest.raises(ParamOutOfRange):
        fidelity_vs_distance_sweep(0.8, FiberParams(), 10.0, 0.0)


def test_period_formula():
    fp = FiberParams(delta_n=1e-7)
    # two photons: 2 pi / (2 * 2 pi dn / lambda) = lambda / (2 dn) meters
    assert fp.period_km() == pytest.approx(1550e-9 / (2 * 1e-7) / 1000)
    single = FiberParams(delta_n=1e-7, two_photon_phase=False)
    assert single.period_km() == pytest.approx(2 * fp.period_km())
    assert np.isinf(FiberParams(delta_n=0.0).period_km())


def test_relative_phase_stays_accurate_far_out():
    fp = FiberParams()
    dp, dm = branch_phases(np.array([0.0, 150.0]), fp)
    rel = (dp - dm) - (fp.theta1 - fp.phi1)
    want = 2 * fp.delta_beta() * np.array([0.0, 150e3])
    assert np.allclose(np.mod(rel - want + np.pi, 2 * np.pi) - np.pi, 0, atol=1e-9)


@pytest.mark.parametrize("delta_n", [5e-11, 2e-10, 1e-10])
@pytest.mark.parametrize("alpha", [0.707, 0.8])
def test_autocorrelation_recovers_period(alpha, delta_n):
    fp = FiberParams(delta_n=delta_n)
    dz = 0.1
    f = [r[1] for r in fidelity_vs_distance_sweep(alpha, fp, 200.0, dz)]
    assert abs(detect_period(f, dz) - fp.period_km()) < dz


def test_detect_period_on_constant_signal():
    assert np.isinf(detect_period(np.ones(50), 0.1))


def test_favorable_fraction_grows_with_alpha():
    fp = FiberParams()
    lo = favorable_fraction(0.707, fp)
    hi = favorable_fraction(0.8, fp)
    assert hi > lo
    # closed form: F = 1 - 4 a^2 b^2 sin^2(x/2) > 0.5 on a fraction of the phase circle
    for a, got in ((0.707, lo), (0.8, hi)):
        k = 4 * a * a * (1 - a * a)
        want = (2 / np.pi) * np.arcsin(np.sqrt(0.5 / k)) if k > 0.5 else 1.0
        assert got == pytest.approx(want, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 500))
def test_phase_evolution_preserves_norm(alpha, z):
    out = propagate(hybrid_state(alpha), z, FiberParams())
    assert out.state.norm == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= out.fidelity_vs_input <= 1.0 + 1e-12


def test_autocorrelation_at_large_splitting_with_fine_sampling():
    # delta_n = 1e-7 gives a 7.75 m period, resolved here with 1 m steps
    fp = FiberParams(delta_n=1e-7)
    dz = 0.001
    f = [r[1] for r in fidelity_vs_distance_sweep(0.8, fp, 0.2, dz)]
    assert abs(detect_period(f, dz) - fp.period_km()) < dz
