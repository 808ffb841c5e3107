import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from resonet.exceptions import (
    InvalidArgument,
    InvalidSchedule,
    InvalidState,
    OutOfRange,
    PhaseUndefined,
    UnsupportedTopology,
)
from resonet.model import CouplingSpec, Network, Schedule, Segment, fixture_resonators
from resonet.rwa import (
    CouplingMatrix,
    EnvelopePropagator,
    apply_damping_envelope,
    basis_state,
    build_coupling_matrix,
    evolve_envelope,
    evolve_schedule,
    normalize_snapshot,
    normalize_trajectory,
    phase_at,
    transfer_fidelity,
    wrap_phase,
)
from resonet.synthesis import mirror_index, parity_phase, pst_couplings, pst_network, pst_segment, transfer_period

from conftest import random_symmetric

TWO_PI = 2 * math.pi
GAMMA = TWO_PI * 8.17


def pst_matrix(n, c0):
    return CouplingMatrix.tridiagonal(pst_couplings(n, c0).couplings)


def expm_oracle(h, x0, t):
    return scipy.linalg.expm(-0.5j * np.asarray(h) * t) @ x0


# -- coupling matrices ----------------------------------------------------------------


def test_four_site_matrix_from_profile():
    h = build_coupling_matrix(pst_network(4, TWO_PI * 52, (2, 4, 6, 8)))
    c = pst_couplings(4, TWO_PI * 52).couplings
    assert np.array_equal(h.entries, np.diag(c, 1) + np.diag(c, -1))
    assert h.sites == (2, 4, 6, 8)
    assert [h.logical(s) for s in (2, 4, 6, 8)] == [1, 2, 3, 4]


def test_two_site_matrix():
    res = fixture_resonators((1, 2))
    h = build_coupling_matrix(Network(res, (CouplingSpec(1, 2, 3.0),)))
    assert np.array_equal(h.entries, [[0.0, 3.0], [3.0, 0.0]])


def test_invalid_networks_rejected():
    res = fixture_resonators((1, 2, 3, 4))
    star = Network(res, (CouplingSpec(1, 2, 1.0), CouplingSpec(1, 3, 1.0), CouplingSpec(1, 4, 1.0)))
    with pytest.raises(UnsupportedTopology):
        build_coupling_matrix(star)
    with pytest.raises(InvalidArgument):
        build_coupling_matrix(Network(res[:2], (CouplingSpec(1, 2, -1.0),)))


def test_matrix_needs_zero_diagonal_and_symmetry():
    with pytest.raises(InvalidArgument):
        CouplingMatrix(np.eye(2))
    with pytest.raises(ValueError):
        CouplingMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]))


# -- exact evolution -----------------------------------------------------------------


def test_zero_time_is_identity():
    x0 = np.array([0.3, 0.4j, -0.5, 0.1])
    assert np.array_equal(evolve_envelope(pst_matrix(4, 3.0), x0, 0.0).amplitudes, x0)


@given(n=st.integers(2, 12), seed=st.integers(0, 10_000), t=st.floats(-3.0, 3.0))
def test_matches_matrix_exponential(n, seed, t):
    rng = np.random.default_rng(seed)
    h = random_symmetric(rng, n, zero_diag=True)
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    got = evolve_envelope(CouplingMatrix(h), x0, t).amplitudes
    assert np.allclose(got, expm_oracle(h, x0, t), atol=1e-11 * np.linalg.norm(x0))


def test_eight_site_transfer_at_period():
    c0 = TWO_PI * 30
    x = evolve_envelope(pst_matrix(8, c0), basis_state(8, 1), transfer_period(c0)).amplitudes
    assert abs(abs(x[7]) - 1.0) < 1e-6
    assert np.all(np.abs(x[:7]) < 1e-6)


def test_two_site_closed_form():
    c = TWO_PI * 40
    x = evolve_envelope(pst_matrix(2, 2 * c), basis_state(2, 1), math.pi / c).amplitudes
    # exp(-i sigma_x pi / 2) e1 = -i e2
    assert np.allclose(x, [0.0, -1j], atol=1e-14)


@given(n=st.integers(2, 16), seed=st.integers(0, 10_000))
def test_unitarity(n, seed):
    rng = np.random.default_rng(seed)
    h = CouplingMatrix(random_symmetric(rng, n, zero_diag=True))
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    prop = EnvelopePropagator().fit(h)
    xs = prop.propagate(x0, np.linspace(0, 10, 50))
    norms = np.linalg.norm(xs, axis=1)
    assert np.max(np.abs(norms / np.linalg.norm(x0) - 1)) < 1e-12


@given(n=st.integers(2, 16), seed=st.integers(0, 10_000), t1=st.floats(0, 2), t2=st.floats(0, 2))
def test_semigroup(n, seed, t1, t2):
    rng = np.random.default_rng(seed)
    h = CouplingMatrix(random_symmetric(rng, n, zero_diag=True))
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    direct = evolve_envelope(h, x0, t1 + t2).amplitudes
    stepped = evolve_envelope(h, evolve_envelope(h, x0, t1), t2).amplitudes
    assert np.allclose(direct, stepped, atol=1e-12 * np.linalg.norm(x0))


@given(n=st.integers(2, 16), seed=st.integers(0, 10_000), t=st.floats(0, 5))
def test_time_reversal(n, seed, t):
    rng = np.random.default_rng(seed)
    h = CouplingMatrix(random_symmetric(rng, n, zero_diag=True))
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    prop = EnvelopePropagator().fit(h)
    forward = prop.propagate(x0, t)
    assert np.allclose(prop.propagate(forward, -t), x0, atol=1e-12 * np.linalg.norm(x0))
    assert np.allclose(prop.matrix(-t), prop.matrix(t).conj().T, atol=1e-12)


@pytest.mark.parametrize("n", range(2, 17))
def test_mirror_property_every_launch(n):
    c0 = TWO_PI * 30
    prop = EnvelopePropagator().fit(pst_matrix(n, c0))
    u = prop.matrix(transfer_period(c0))
    for j in range(1, n + 1):
        assert abs(abs(u[mirror_index(j, n) - 1, j - 1]) - 1.0) < 1e-9


@pytest.mark.parametrize("n", range(2, 11))
def test_round_trip_phase_every_launch(n):
    c0 = TWO_PI * 52
    period = transfer_period(c0)
    for j in range(1, n + 1):
        traj = evolve_schedule(pst_segment(n, c0, duration=2 * period), basis_state(n, j), period / 10)
        assert abs(wrap_phase(phase_at(traj, j, 2 * period) - parity_phase(n))) < 1e-9


@given(n=st.integers(2, 16))
def test_equidistant_eigenvalues(n):
    c0 = 1.7
    lam = EnvelopePropagator().fit(pst_matrix(n, c0)).eigenvalues_
    expected = c0 * (np.arange(n) - (n - 1) / 2)
    assert np.allclose(lam, expected, rtol=0, atol=1e-9 * c0 * n)


def test_propagator_params_and_unfitted():
    prop = EnvelopePropagator()
    assert prop.get_params() == {}
    with pytest.raises(Exception):
        prop.propagate([1.0], 0.0)


# -- schedules -----------------------------------------------------------------------


def test_reconfigured_round_trip():
    sites = (2, 4, 6, 8)
    s1 = pst_segment(4, TWO_PI * 52, sites)
    s2 = pst_segment(4, TWO_PI * 30, sites)
    traj = evolve_schedule(Schedule((s1, s2)), basis_state(4, 1), 1e-4, chain=sites)
    assert transfer_fidelity(traj, 1, 4, s1.duration) >= 1 - 1e-6
    end = s1.duration + s2.duration
    assert transfer_fidelity(traj, 1, 1, end) >= 1 - 1e-6
    # the sampled launch amplitude peaks again close to the end
    late = traj.times > s1.duration + 0.5 * s2.duration
    k = np.argmax(np.abs(traj.amplitudes[late, 0]))
    assert abs(traj.times[late][k] - end) <= 1e-4


def test_single_segment_matches_direct_evolution():
    c0 = TWO_PI * 30
    seg = pst_segment(8, c0)
    traj = evolve_schedule(seg, basis_state(8, 3), 1e-3)
    direct = evolve_envelope(pst_matrix(8, c0), basis_state(8, 3), seg.duration).amplitudes
    assert np.allclose(traj.state_at(seg.duration).amplitudes, direct, atol=1e-13)


def test_two_halves_equal_whole():
    c0 = TWO_PI * 30
    period = transfer_period(c0)
    whole = evolve_schedule(pst_segment(8, c0, duration=period), basis_state(8, 1), 1e-3)
    halves = evolve_schedule(
        Schedule((pst_segment(8, c0, duration=period / 2), pst_segment(8, c0, duration=period / 2))),
        basis_state(8, 1),
        1e-3,
    )
    assert np.allclose(whole.amplitudes, halves.amplitudes, atol=1e-12)
    assert np.allclose(whole.state_at(period).amplitudes, halves.state_at(period).amplitudes, atol=1e-12)


def test_schedule_errors():
    seg4 = pst_segment(4, 3.0)
    with pytest.raises(InvalidSchedule):
        evolve_schedule(seg4, basis_state(3, 1), 0.1)
    with pytest.raises(InvalidSchedule):
        evolve_schedule(Schedule(()), basis_state(4, 1), 0.1)
    with pytest.raises(InvalidSchedule):
        evolve_schedule(Schedule((seg4, pst_segment(5, 3.0))), basis_state(4, 1), 0.1)
    with pytest.raises(InvalidSchedule):
        evolve_schedule(Segment(seg4.couplings, 0.0), basis_state(4, 1), 0.1)


def test_state_at_outside_span():
    traj = evolve_schedule(pst_segment(4, 3.0), basis_state(4, 1), 0.1)
    with pytest.raises(OutOfRange):
        traj.state_at(traj.duration * 1.01)


# -- damping and normalisation ------------------------------------------------------------


def test_damping_factor_value():
    c0 = TWO_PI * 30
    period = transfer_period(c0)
    traj = apply_damping_envelope(evolve_schedule(pst_segment(8, c0), basis_state(8, 1), 1e-4), GAMMA)
    norm_at_t = np.linalg.norm(traj.state_at(period).amplitudes)
    assert norm_at_t == pytest.approx(math.exp(-math.pi * 8.17 * period), rel=1e-12)
    assert math.exp(-math.pi * 8.17 * 0.0333) == pytest.approx(0.425, abs=5e-4)


def test_zero_damping_is_noop_and_double_damping_rejected():
    traj = evolve_schedule(pst_segment(4, 3.0), basis_state(4, 1), 0.1)
    same = apply_damping_envelope(traj, 0.0)
    assert np.array_equal(same.amplitudes, traj.amplitudes)
    damped = apply_damping_envelope(traj, 1.0)
    with pytest.raises(InvalidState):
        apply_damping_envelope(damped, 1.0)


def test_damped_snapshots_normalise_to_lossless():
    c0 = TWO_PI * 30
    traj = evolve_schedule(pst_segment(8, c0), basis_state(8, 2), 1e-4)
    damped = apply_damping_envelope(traj, GAMMA)
    assert np.max(np.abs(normalize_trajectory(damped) - normalize_trajectory(traj))) < 1e-12
    scale = np.exp(-0.5 * GAMMA * traj.times)[:, None]
    assert np.max(np.abs(damped.amplitudes - traj.amplitudes * scale)) < 1e-9


def test_normalize_snapshot_examples():
    assert np.array_equal(normalize_snapshot(basis_state(3, 2)).amplitudes, basis_state(3, 2))
    assert np.allclose(normalize_snapshot(np.array([3.0, 4j])).amplitudes, [0.6, 0.8j], atol=1e-15)
    with pytest.raises(ZeroDivisionError):
        normalize_snapshot(np.zeros(2))


# -- fidelity and phase ------------------------------------------------------------------


def test_fidelity_examples():
    c0 = TWO_PI * 30
    traj = evolve_schedule(pst_segment(8, c0), basis_state(8, 1), 1e-4)
    assert transfer_fidelity(traj, 1, 8, transfer_period(c0)) > 0.999999
    assert transfer_fidelity(traj, 1, 1, 0.0) == 1.0
    two = evolve_schedule(pst_segment(2, c0), basis_state(2, 1), 1e-4)
    half = transfer_period(c0) / 2
    assert transfer_fidelity(two, 1, 1, half) == pytest.approx(0.5, abs=1e-12)
    assert transfer_fidelity(two, 1, 2, half) == pytest.approx(0.5, abs=1e-12)


def test_phase_examples():
    c0 = TWO_PI * 52
    period = transfer_period(c0)
    for n, expected in ((4, math.pi), (5, 0.0)):
        traj = evolve_schedule(pst_segment(n, c0, duration=2 * period), basis_state(n, 1), 1e-4)
        assert abs(wrap_phase(phase_at(traj, 1, 2 * period) - expected)) < 1e-9
        assert phase_at(traj, 1, 0.0) == 0.0


def test_phase_undefined_at_node():
    c0 = TWO_PI * 52
    traj = evolve_schedule(pst_segment(4, c0), basis_state(4, 1), 1e-4)
    with pytest.raises(PhaseUndefined):
        phase_at(traj, 1, transfer_period(c0))


def test_wrap_phase_interval():
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_phase(0.5) == 0.5
