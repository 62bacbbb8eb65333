"""Crank-Nicolson integration of the Schroedinger equation along a parameter path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import PropagationError
from .grid import SpatialGrid, norm
from .hamiltonian import HamiltonianSpec, HermitianOperator, build
from .spectrum import ParameterPath

NORM_STEP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (K, n), psi at every path sample
    norms: np.ndarray
    path: ParameterPath
    grid: SpatialGrid
    max_norm_step: float  # largest | ||psi_{j+1}|| - ||psi_j|| | over all steps
    steps: int


def step(psi: np.ndarray, H_mid: HermitianOperator, dt: float, hbar: float = 1.0) -> np.ndarray:
    """One Crank-Nicolson step (I + i dt H/2hbar) psi' = (I - i dt H/2hbar) psi."""
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    c = 0.5j * dt / hbar
    rhs = psi - c * H_mid.matvec(psi)
    if H_mid.grid.periodic:
        M = sp.identity(H_mid.grid.n, dtype=complex, format="csc") + c * H_mid.to_sparse().tocsc()
        out = spla.splu(M).solve(rhs)
    else:
        u = H_mid.bandwidth
        ab = c * H_mid.band_full()
        ab[u] += 1.0
        try:
            out = sla.solve_banded((u, u), ab, rhs, check_finite=False)
        except sla.LinAlgError as err:
            raise PropagationError(f"singular Crank-Nicolson system: {err}") from err
    if not np.all(np.isfinite(out)):
        raise PropagationError("Crank-Nicolson step produced non-finite values")
    return out


def evolve(spec: HamiltonianSpec, path: ParameterPath, psi0: np.ndarray,
           steps_per_sample: int, norm_tol: float = NORM_STEP_TOL) -> Trajectory:
    """Propagate ``psi0`` along ``path``, recording the state at every sample time.

    R is interpolated linearly between samples; each segment is split into
    ``steps_per_sample`` equal steps and H is built at the step midpoint.
    """
    if steps_per_sample < 1:
        raise ValueError("steps_per_sample must be at least 1")
    grid = spec.grid
    psi = grid.check(psi0).astype(complex)
    hbar = spec.hbar
    states = [psi.copy()]
    norms = [norm(psi, grid)]
    last = norms[0]
    worst = 0.0
    count = 0
    for k in range(len(path) - 1):
        t0, t1 = path.times[k], path.times[k + 1]
        R0, R1 = path.points[k], path.points[k + 1]
        dt = (t1 - t0) / steps_per_sample
        for j in range(steps_per_sample):
            frac = (j + 0.5) / steps_per_sample
            H = build(spec, R0 + frac * (R1 - R0), t0 + (j + 0.5) * dt)
            psi = step(psi, H, dt, hbar)
            count += 1
            now = norm(psi, grid)
            drift = abs(now - last)
            worst = max(worst, drift)
            if drift > norm_tol:
                raise PropagationError(
                    f"norm changed by {drift:.2e} in one step (t={t0 + (j + 1) * dt:.6g})"
                )
            last = now
        states.append(psi.copy())
        norms.append(last)
    return Trajectory(path.times.copy(), np.array(states), np.array(norms), path, grid,
                      worst, count)
