"""Polar decomposition psi = sqrt(rho) exp(iS/hbar) and the Bohm-form equations.

Node convention
---------------
A point is masked when ``rho < eps_node`` (grown by ``half_width - 1``
points) or when its stencil would straddle a *phase slip*: a neighbour pair
whose principal phase difference exceeds pi/2, i.e. a sign change of a
real-like amplitude between grid points.  S is unwrapped independently on
every contiguous unmasked run and each run starts at the principal value of
its first point.  All residuals are rho-weighted over unmasked points only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import NodeError
from .grid import SpatialGrid, central_weights, deriv1, deriv2, segment_derivative
from .hamiltonian import HamiltonianSpec, as_point, classical_field

SLIP = np.pi / 2
REL_EPS_NODE = 1e-10


def principal(a):
    """Map angles to [-pi, pi)."""
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class MadelungFields:
    grid: SpatialGrid
    rho: np.ndarray
    S: np.ndarray  # zero where masked
    mask: np.ndarray
    runs: tuple[np.ndarray, ...]
    hbar: float = 1.0
    winding: float = 0.0  # S increment across the seam of a fully unmasked periodic grid
    Q: np.ndarray | None = None
    J: np.ndarray | None = None

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(~self.mask))

    @property
    def amplitude(self) -> np.ndarray:
        return np.sqrt(self.rho)


class Residual(NamedTuple):
    field: np.ndarray
    rms: float


def _runs(mask: np.ndarray, periodic: bool) -> list[np.ndarray]:
    n = len(mask)
    if mask.all():
        return [np.arange(n)]
    if not mask.any():
        return []
    # start scanning just after a masked point so wrapped runs stay whole
    start = int(np.flatnonzero(~mask)[0]) if periodic else 0
    order = (np.arange(n) + start) % n if periodic else np.arange(n)
    runs, cur = [], []
    for j in order:
        if mask[j]:
            cur.append(j)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs


def decompose(psi, grid: SpatialGrid, eps_node: float | None = None, hbar: float = 1.0,
              rel_eps: float = REL_EPS_NODE) -> MadelungFields:
    """Split ``psi`` into density, unwrapped action and node mask."""
    psi = grid.check(psi).astype(complex)
    rho = np.abs(psi) ** 2
    peak = rho.max()
    if not peak > 0:
        raise NodeError("cannot decompose the zero function")
    eps = rel_eps * peak if eps_node is None else eps_node
    if not eps > 0:
        raise ValueError("eps_node must be positive")
    n, half = grid.n, grid.half_width
    mask = rho >= eps
    # a zero sitting on a node: wide stencils must not reach across it
    for _ in range(half - 1):
        below = ~mask
        grown = below | np.roll(below, 1) | np.roll(below, -1)
        if not grid.periodic:
            grown[0], grown[-1] = below[0] | below[1], below[-1] | below[-2]
        mask = ~grown
    theta = np.angle(psi)

    pairs = np.arange(n if grid.periodic else n - 1)
    nxt = (pairs + 1) % n
    jump = np.abs(principal(theta[nxt] - theta[pairs]))
    slips = pairs[mask[pairs] & mask[nxt] & (jump > SLIP)]
    for p in slips:
        halo = np.arange(p - half + 1, p + half + 1)
        if grid.periodic:
            mask[halo % n] = False
        else:
            mask[halo[(halo >= 0) & (halo < n)]] = False

    min_run = grid.order + 2
    runs = []
    for r in _runs(mask, grid.periodic):
        if len(r) < min_run:
            mask[r] = False
        else:
            runs.append(r)
    if not runs:
        raise NodeError("every grid point is masked")

    S = np.zeros(n)
    winding = 0.0
    for r in runs:
        th = theta[r]
        S[r] = th[0] + np.concatenate(([0.0], np.cumsum(principal(np.diff(th)))))
    if grid.periodic and len(runs) == 1 and len(runs[0]) == n:
        winding = S[-1] + principal(theta[0] - theta[-1]) - S[0]
    return MadelungFields(grid, rho, hbar * S, mask, tuple(runs), hbar, hbar * winding)


def action_gradient(fields: MadelungFields) -> np.ndarray:
    """dS/dx on every run (one-sided at run ends), zero where masked."""
    grid = fields.grid
    out = np.zeros(grid.n)
    for r in fields.runs:
        if grid.periodic and len(r) == grid.n:
            out[:] = _seamed_derivative(fields.S, fields.winding, grid)
        else:
            out[r] = segment_derivative(fields.S[r], grid.h, 1, grid.order)
    return out


def _seamed_derivative(S: np.ndarray, winding: float, grid: SpatialGrid) -> np.ndarray:
    n, half = grid.n, grid.half_width
    w = central_weights(1, grid.order)
    out = np.zeros(n)
    idx = np.arange(n)
    for k, wk in zip(range(-half, half + 1), w):
        if wk == 0.0:
            continue
        j = idx + k
        shifted = S[j % n] + winding * np.floor_divide(j, n)
        out += wk * shifted
    return out / grid.h


def quantum_potential(fields: MadelungFields, g: float) -> np.ndarray:
    """Q = -hbar^2 g (sqrt rho)'' / (2 sqrt rho); zero on masked points."""
    a = fields.amplitude
    d2 = deriv2(a, fields.grid)
    Q = np.zeros(fields.grid.n)
    m = fields.mask
    Q[m] = -(fields.hbar**2) * g * d2[m] / (2.0 * a[m])
    return Q


def current(fields: MadelungFields, A, g: float) -> np.ndarray:
    """J = rho g (dS/dx - A); zero on masked points."""
    A = np.broadcast_to(np.asarray(A, dtype=float), (fields.grid.n,))
    J = fields.rho * g * (action_gradient(fields) - A)
    J[~fields.mask] = 0.0
    return J


def complete(fields: MadelungFields, spec: HamiltonianSpec, R, t: float = 0.0) -> MadelungFields:
    """Attach Q and J evaluated with the metric and vector potential of ``spec`` at ``R``."""
    R = as_point(R, spec.m)
    g = spec.metric(R, t)
    return replace(fields, Q=quantum_potential(fields, g),
                   J=current(fields, spec.vector_potential(R, t), g))


def weighted_rms(r: np.ndarray, fields: MadelungFields, weight: np.ndarray | None = None) -> float:
    w = fields.grid.weights * (fields.rho if weight is None else weight)
    w = np.where(fields.mask, w, 0.0)
    return float(np.sqrt(np.dot(w, np.abs(r) ** 2) / np.sum(w)))


def qhj_residual(fields: MadelungFields, spec: HamiltonianSpec, R, *, dtS=None,
                 energy: float | None = None, t: float = 0.0) -> Residual:
    """Quantum Hamilton-Jacobi residual.

    Pass ``dtS`` for the time-dependent form ``dS/dt + H(x, S') + Q`` or
    ``energy`` for the eigenstate form ``H(x, S') + Q - E``.
    """
    if (dtS is None) == (energy is None):
        raise ValueError("give exactly one of dtS or energy")
    R = as_point(R, spec.m)
    Q = fields.Q if fields.Q is not None else quantum_potential(fields, spec.metric(R, t))
    H = classical_field(spec, R, action_gradient(fields), t)
    r = H + Q + (np.asarray(dtS) if dtS is not None else -energy)
    r = np.where(fields.mask, r, 0.0)
    return Residual(r, weighted_rms(r, fields))


def continuity_residual(fields: MadelungFields, A, g: float, dtRho=0.0) -> Residual:
    """dRho/dt + dJ/dx; the eigenstate form passes ``dtRho = 0``."""
    J = fields.J if fields.J is not None else current(fields, A, g)
    r = np.asarray(dtRho) + deriv1(J, fields.grid)
    r = np.where(fields.mask, r, 0.0)
    return Residual(r, weighted_rms(r, fields))


def phase_time_derivative(psi_before, psi_after, span: float, hbar: float = 1.0) -> np.ndarray:
    """Central difference of S in time from two states ``span`` apart."""
    return hbar * np.angle(psi_after * np.conj(psi_before)) / span


def reconstruct(fields: MadelungFields) -> np.ndarray:
    psi = np.sqrt(fields.rho) * np.exp(1j * fields.S / fields.hbar)
    return np.where(fields.mask, psi, 0.0)
