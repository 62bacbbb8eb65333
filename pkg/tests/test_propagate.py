import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiabatica.grid import inner, make_grid, norm, normalize
from adiabatica.hamiltonian import HamiltonianSpec, build
from adiabatica.propagate import evolve, step
from adiabatica.scenario import Segment, segment_path
from adiabatica.spectrum import ParameterPath, solve_at, track_level

GRID = make_grid(-10, 10, 512, order=4)
OSC = HamiltonianSpec.from_strings("0.5*(x-R1)^2", grid=GRID)
H0 = build(OSC, [0.0])


def packet(x0=1.5, k=0.8, width=1.0, grid=GRID):
    return normalize(np.exp(-((grid.x - x0) / width) ** 2 / 2 + 1j * k * grid.x), grid)


def moving_well(T):
    path = segment_path([0.0], [Segment((1.0,), 64)], T)
    tr = track_level(OSC, path, 0, 4)
    return tr, evolve(OSC, path, tr.states[0], 16)


@settings(max_examples=25, deadline=None)
@given(x0=st.floats(-3, 3), k=st.floats(-3, 3), dt=st.floats(1e-3, 0.5))
def test_single_step_preserves_norm(x0, k, dt):
    psi = packet(x0, k)
    assert abs(norm(step(psi, H0, dt), GRID) - 1.0) <= 1e-10


def test_periodic_step_preserves_norm():
    g = make_grid(0, 2 * np.pi, 128, "periodic", 4)
    H = build(HamiltonianSpec.from_strings("cos(x)", "0.4", grid=g), [0.0])
    psi = normalize(np.exp(1j * g.x) + 0.3 * np.exp(-2j * g.x), g)
    for _ in range(50):
        psi = step(psi, H, 0.1)
    assert abs(norm(psi, g) - 1.0) <= 1e-10


def test_eigenstate_picks_up_cayley_phase():
    # CN maps an eigenstate to exp(-2i atan(E dt / 2)) times itself, exactly
    sl = solve_at(OSC, [0.0], 1)
    E, psi0 = sl.energies[0], sl.states[0]
    dt, steps = 0.01, 1000
    psi = psi0
    for _ in range(steps):
        psi = step(psi, H0, dt)
    amp = inner(psi0, psi, GRID)
    cayley = -2 * steps * np.arctan(E * dt / 2)
    assert abs(amp) == pytest.approx(1.0, abs=1e-10)
    assert np.angle(amp * np.exp(-1j * cayley)) == pytest.approx(0.0, abs=1e-10)
    # and the exact stationary phase -E t to within the CN error
    assert np.angle(amp * np.exp(1j * 0.5 * dt * steps)) == pytest.approx(0.0, abs=1e-4)


def test_phase_error_is_second_order_in_dt():
    sl = solve_at(OSC, [0.0], 1)
    psi0, T = sl.states[0], 4.0
    errs = []
    for steps in (40, 80, 160):
        path = ParameterPath.constant([0.0], T, 2)
        traj = evolve(OSC, path, psi0, steps)
        amp = inner(psi0, traj.states[-1], GRID)
        errs.append(abs(np.angle(amp * np.exp(1j * sl.energies[0] * T))))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.8 <= coarse / fine <= 4.2


def test_static_energy_drift_over_ten_thousand_steps():
    psi = packet()
    e0 = H0.expectation(psi)
    for _ in range(10_000):
        psi = step(psi, H0, 0.01)
    assert abs(H0.expectation(psi) - e0) / abs(e0) <= 1e-8


def test_evolve_records_every_sample():
    path = segment_path([0.0], [Segment((1.0,), 9)], 2.0)
    traj = evolve(OSC, path, solve_at(OSC, [0.0], 1).states[0], 3)
    # a segment's samples follow the start point
    assert traj.states.shape == (10, GRID.n)
    assert traj.steps == 9 * 3
    assert np.array_equal(traj.times, path.times)
    assert traj.max_norm_step <= 1e-10
    assert np.all(np.abs(traj.norms - 1) <= 1e-9)


def test_slow_transport_is_adiabatic():
    tr, traj = moving_well(40.0)
    fid = abs(inner(tr.states[-1], traj.states[-1], GRID))
    assert fid >= 0.999


def test_fast_transport_is_not():
    tr, traj = moving_well(1.0)
    assert abs(inner(tr.states[-1], traj.states[-1], GRID)) < 0.9


def test_infidelity_falls_as_transport_slows():
    infid = []
    for T in (10.0, 20.0, 40.0):
        tr, traj = moving_well(T)
        infid.append(1 - abs(inner(tr.states[-1], traj.states[-1], GRID)))
    assert infid[0] > infid[1] > infid[2]


def test_bad_arguments():
    psi = packet()
    with pytest.raises(ValueError):
        step(psi, H0, 0.0)
    with pytest.raises(ValueError):
        evolve(OSC, ParameterPath.constant([0.0], 1.0, 2), psi, 0)
