import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiabatica import madelung as mad
from adiabatica import phases as ph
from adiabatica.errors import LinkError, UnwrapAmbiguity
from adiabatica.grid import make_grid, normalize
from adiabatica.hamiltonian import HamiltonianSpec
from adiabatica.propagate import evolve
from adiabatica.scenario import Segment, segment_path
from adiabatica.spectrum import SpectrumSlice, solve_at, track_level

GRID = make_grid(-10, 10, 512, order=4)
OSC = HamiltonianSpec.from_strings("0.5*(x-R1)^2", grid=GRID)
COH = HamiltonianSpec.from_strings("0.5*(x-R1)^2", "R2", grid=GRID, m=2)

SQUARE = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]


def square_loop(per_edge):
    path = segment_path([0.0, 0.0], [Segment(c, per_edge, "linear") for c in SQUARE], 1.0)
    return path, track_level(COH, path, 0, 4).tracked()


@pytest.fixture(scope="module")
def loop16():
    return square_loop(16)


def test_unwrap_strict_follows_a_ramp():
    a = np.linspace(0, 20, 101)
    assert np.allclose(ph.unwrap_strict(np.angle(np.exp(1j * a))), a, atol=1e-12)


def test_unwrap_strict_refuses_large_increments():
    with pytest.raises(UnwrapAmbiguity) as info:
        ph.unwrap_strict(np.array([0.0, 0.1, 2.0, 2.1]))
    assert info.value.sample == 2


def test_dynamical_phase_constant_and_linear_energy():
    t = np.linspace(0, 2, 21)
    assert ph.dynamical_phase(np.ones_like(t), t)[-1] == pytest.approx(-2.0, abs=1e-14)
    s = np.linspace(0, 1, 11)
    assert ph.dynamical_phase(s, s)[-1] == pytest.approx(-0.5, abs=1e-14)
    assert ph.dynamical_phase(np.ones_like(t), t, hbar=2.0)[-1] == pytest.approx(-1.0)


def test_real_states_have_no_connection():
    path = segment_path([0.0], [Segment((1.0,), 32)], 1.0)
    pairs = ph.link_pairs(track_level(OSC, path, 0, 4).tracked())
    Ao = [c.A for c in ph.connection_overlap(pairs)]
    Ab, skipped = ph.connection_bohm(pairs)
    assert not skipped
    assert np.max(np.abs(Ao)) <= 1e-8
    assert np.max(np.abs([c.A for c in Ab])) <= 1e-8


def _edge_sums(conn, per_edge):
    phases = np.array([c.phase for c in conn])
    return phases.reshape(4, per_edge).sum(axis=1)


def _peak_node(R1):
    # gauge_fix makes the peak real; the peak sits on the node nearest R1,
    # first index on a tie
    d = np.abs(GRID.x - R1)
    return GRID.x[np.flatnonzero(d <= d.min() + 1e-12)[0]]


def test_coherent_connection_per_edge(loop16):
    # in this gauge A = (R2, x_p(R1) - R1) with x_p the peak node, so each
    # edge picks up the hops of the peak rather than a smooth -1 on one edge
    path, slices = loop16
    edges = _edge_sums(ph.connection_overlap(ph.link_pairs(slices)), 16)
    p0, p1 = _peak_node(0.0), _peak_node(1.0)
    expected = [0.0, p1 - 1.0, p0 - p1, -p0]
    assert np.allclose(edges, expected, atol=1e-4)
    assert edges.sum() == pytest.approx(-1.0, abs=1e-2)


def test_connection_routes_agree_link_by_link(loop16):
    _, slices = loop16
    pairs = ph.link_pairs(slices)
    Ao = ph.connection_overlap(pairs)
    Ab, skipped = ph.connection_bohm(pairs)
    assert not skipped
    assert max(abs(a.phase - b.phase) for a, b in zip(Ao, Ab)) <= 1e-4


def test_loop_phase_matches_integrated_connection(loop16):
    path, slices = loop16
    gamma = ph.geometric_phase(ph.connection_overlap(ph.link_pairs(slices)), path)
    assert ph.loop_phase_pancharatnam(slices) == pytest.approx(gamma[-1], abs=1e-10)
    assert gamma[-1] == pytest.approx(-1.0, abs=1e-2)


def _rotated(slices, angles):
    return [SpectrumSlice(s.R, s.energies, s.states * np.exp(1j * a), s.residual, s.grid)
            for s, a in zip(slices, angles)]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_loop_phase_is_gauge_invariant(loop16, seed):
    _, slices = loop16
    angles = np.random.default_rng(seed).uniform(-np.pi, np.pi, len(slices))
    a = ph.loop_phase_pancharatnam(slices)
    b = ph.loop_phase_pancharatnam(_rotated(slices, angles))
    assert abs(mad.principal(a - b)) <= 1e-12


def test_loop_phase_reference_selects_branch(loop16):
    _, slices = loop16
    g = ph.loop_phase_pancharatnam(slices)
    assert ph.loop_phase_pancharatnam(slices, reference=2 * np.pi) == pytest.approx(g + 2 * np.pi)


def test_loop_needs_three_slices(loop16):
    with pytest.raises(LinkError):
        ph.loop_phase_pancharatnam(loop16[1][:2])


def test_zero_step_link_is_rejected():
    sl = solve_at(OSC, [0.0], 1)
    with pytest.raises(LinkError):
        ph.connection_overlap([(sl, sl)])


def test_orthogonal_link_is_rejected():
    sl = solve_at(OSC, [0.0], 2)
    a = sl.level(0)
    b = SpectrumSlice(np.array([0.1]), sl.energies[1:], sl.states[1:], 0.0, GRID)
    with pytest.raises(LinkError):
        ph.connection_overlap([(a, b)])


def test_misaligned_node_structure_is_skipped():
    sl = solve_at(OSC, [0.0], 2)
    a = sl.level(0)
    b = SpectrumSlice(np.array([0.1]), sl.energies[1:], sl.states[1:], 0.0, GRID)
    samples, skipped = ph.connection_bohm([(7, a, b)])
    assert samples == [] and skipped == [7]


def test_phase_rate_reduces_to_energy_for_real_states():
    a, b = solve_at(OSC, [0.0], 1), solve_at(OSC, [0.05], 1)
    assert ph.phase_rate_bohm(a, b, 0.5, [1.0]) == pytest.approx(-0.5, abs=1e-10)
    assert ph.phase_rate_bohm(a, b, 0.5, [0.0]) == -0.5


def test_phase_rate_carries_the_connection():
    a, b = solve_at(COH, [0.5, 1.0], 1), solve_at(COH, [0.45, 1.0], 1)
    dR = b.R - a.R
    A = ph.connection_bohm([(a, b)])[0][0].A
    rate = ph.phase_rate_bohm(a, b, 0.0, dR / 0.1)
    assert rate == pytest.approx(np.dot(A, dR) / 0.1, rel=1e-12)


def test_static_separability_and_drift():
    path = segment_path([0.0], [Segment((0.0,), 16, "linear")], 10.0)
    tr = track_level(OSC, path, 0, 4)
    traj = evolve(OSC, path, tr.states[0], 16)
    f0 = mad.decompose(tr.states[0], GRID)
    delta = ph.dynamical_phase(tr.energies, path.times)
    assert np.max(ph.separability_check(traj, f0, delta)) <= 1e-6
    l1, qd = ph.rho_q_drift(traj, OSC)
    assert np.max(l1) <= 1e-8 and np.max(qd) <= 1e-8


def _moving_well(T):
    path = segment_path([0.0], [Segment((1.0,), 64)], T)
    tr = track_level(OSC, path, 0, 4)
    traj = evolve(OSC, path, tr.states[0], 16)
    f0 = mad.decompose(tr.states[0], GRID)
    return np.max(ph.separability_check(traj, f0, ph.dynamical_phase(tr.energies, path.times)))


def test_separability_tightens_with_slower_transport():
    fast, mid, slow = _moving_well(1.0), _moving_well(10.0), _moving_well(40.0)
    assert slow <= 0.05
    assert slow <= 0.5 * mid
    assert fast >= 5 * slow


def test_wkb_index_of_a_plane_wave_is_zero():
    g = make_grid(0, 2 * np.pi, 128, "periodic", 4)
    free = HamiltonianSpec.from_strings("0", grid=g)
    psi = normalize(np.exp(3j * g.x), g)
    assert ph.wkb_index(psi, free, [0.0]) == pytest.approx(0.0, abs=1e-12)


def test_wkb_index_of_the_oscillator_ground_state():
    psi = solve_at(OSC, [0.0], 1).states[0]
    assert 0.3 < ph.wkb_index(psi, OSC, [0.0]) < 0.7


def test_wkb_index_falls_with_momentum():
    free = HamiltonianSpec.from_strings("0", grid=GRID)
    values = [ph.wkb_index(normalize(np.exp(-GRID.x**2 / 2 + 1j * k * GRID.x), GRID), free, [0.0])
              for k in (5, 10, 20)]
    assert values[0] > values[1] > values[2]
