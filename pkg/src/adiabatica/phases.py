"""Adiabatic phases by three routes, plus separability and WKB diagnostics.

Routes to the phase of a tracked level n:

* overlap: alpha(t) = arg <n;t|psi(t)>, with the Berry connection from
  link overlaps ``-arg <n;R|n;R+dR> / |dR|``;
* Bohmian: the connection ``-(1/hbar) int rho_n dS_n/dR``, with the phase
  rate ``-E_n/hbar - (1/hbar) int rho_n dS_n/dt``;
* closed loops: the gauge-invariant Pancharatnam product.

All routes read the same gauge-fixed slices, so pointwise comparisons of
the two connections are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import madelung as mad
from .errors import DegenerateDenominator, LinkError, RunAlignmentError, UnwrapAmbiguity
from .grid import inner, integrate
from .hamiltonian import HamiltonianSpec, as_point, classical_field
from .propagate import Trajectory
from .spectrum import ParameterPath, SpectrumSlice

MIN_LINK_OVERLAP = 1e-8


@dataclass(frozen=True, eq=False)
class PhaseRecord:
    times: np.ndarray
    alpha: np.ndarray | None = None
    delta: np.ndarray | None = None
    gamma: np.ndarray | None = None
    fidelity: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class ConnectionSample:
    R: np.ndarray  # link midpoint
    A: np.ndarray  # connection projected on the link direction
    dR: np.ndarray
    link: int | None = None

    @property
    def phase(self) -> float:
        """Line-integral contribution A . dR of this link."""
        return float(np.dot(self.A, self.dR))


def unwrap_strict(angles: np.ndarray, limit: float = np.pi / 2) -> np.ndarray:
    """Accumulate principal-value increments; refuse increments beyond ``limit``."""
    angles = np.asarray(angles, dtype=float)
    inc = mad.principal(np.diff(angles))
    bad = np.flatnonzero(np.abs(inc) > limit)
    if len(bad):
        raise UnwrapAmbiguity(int(bad[0]) + 1, float(inc[bad[0]]))
    return angles[0] + np.concatenate(([0.0], np.cumsum(inc)))


def overlap_phase(traj: Trajectory, states: np.ndarray) -> PhaseRecord:
    """alpha(t_k) = unwrapped arg <n;t_k|psi(t_k)> and fidelity |<n;t_k|psi(t_k)>|."""
    states = np.asarray(states)
    if states.shape != traj.states.shape:
        raise ValueError("eigenstates are not aligned with the trajectory samples")
    amps = np.einsum("kj,kj->k", np.conj(states) * traj.grid.weights, traj.states)
    alpha = unwrap_strict(np.angle(amps))
    fid = np.clip(np.abs(amps), 0.0, 1.0)
    return PhaseRecord(traj.times, alpha=alpha, fidelity=fid)


def dynamical_phase(energies, times, hbar: float = 1.0) -> np.ndarray:
    """delta(t) = -(1/hbar) int_0^t E dt' by the trapezoid rule."""
    energies = np.asarray(energies, dtype=float)
    return -cumulative_trapezoid(energies, np.asarray(times, dtype=float), initial=0.0) / hbar


def link_pairs(slices: Sequence[SpectrumSlice]) -> list[tuple[int, SpectrumSlice, SpectrumSlice]]:
    """Consecutive slice pairs with a non-zero parameter step."""
    out = []
    for k in range(len(slices) - 1):
        a, b = slices[k], slices[k + 1]
        if np.any(b.R != a.R):
            out.append((k, a, b))
    return out


def _step(a: SpectrumSlice, b: SpectrumSlice) -> np.ndarray:
    dR = np.asarray(b.R, dtype=float) - np.asarray(a.R, dtype=float)
    if not np.any(dR):
        raise LinkError(f"zero parameter step at R = {list(a.R)}")
    return dR


def _sample(a, b, dR, phase, link) -> ConnectionSample:
    A = phase * dR / np.dot(dR, dR)
    return ConnectionSample(0.5 * (np.asarray(a.R) + np.asarray(b.R)), A, dR, link)


def _pairs(pairs):
    for item in pairs:
        if len(item) == 3:
            yield item
        else:
            yield (None, item[0], item[1])


def connection_overlap(pairs, level: int = 0) -> list[ConnectionSample]:
    """Berry connection from link overlaps, ``A . dR = -arg <n;R|n;R+dR>``.

    ``pairs`` holds ``(slice_a, slice_b)`` or ``(link, slice_a, slice_b)``.
    """
    out = []
    for link, a, b in _pairs(pairs):
        dR = _step(a, b)
        ov = inner(a.states[level], b.states[level], a.grid)
        if abs(ov) < MIN_LINK_OVERLAP:
            raise LinkError(f"vanishing overlap between R = {list(a.R)} and {list(b.R)}")
        out.append(_sample(a, b, dR, -np.angle(ov), link))
    return out


def aligned_action_difference(fa: mad.MadelungFields, fb: mad.MadelungFields):
    """S_b - S_a on jointly unmasked points with runs paired by overlap.

    Each paired run is shifted by the multiple of 2 pi hbar that brings its
    rho-weighted mean closest to zero.  Returns ``(dS, joint_mask)``.
    """
    if len(fa.runs) != len(fb.runs):
        raise RunAlignmentError(f"run count changed from {len(fa.runs)} to {len(fb.runs)}")
    n = fa.grid.n
    label_a = np.full(n, -1)
    for i, r in enumerate(fa.runs):
        label_a[r] = i
    used = set()
    dS = np.zeros(n)
    joint = np.zeros(n, bool)
    two_pi = 2 * np.pi * fa.hbar
    w = fa.grid.weights * 0.5 * (fa.rho + fb.rho)
    for rb in fb.runs:
        labels = label_a[rb]
        labels = labels[labels >= 0]
        if len(labels) == 0:
            raise RunAlignmentError("a run has no partner at the neighbouring parameter point")
        ia = int(np.bincount(labels).argmax())
        if ia in used:
            raise RunAlignmentError("two runs map onto the same neighbouring run")
        used.add(ia)
        idx = np.intersect1d(rb, fa.runs[ia])
        d = fb.S[idx] - fa.S[idx]
        shift = two_pi * np.round(np.dot(w[idx], d) / np.sum(w[idx]) / two_pi)
        dS[idx] = d - shift
        joint[idx] = True
    return dS, joint


def _bohm_phase(a: SpectrumSlice, b: SpectrumSlice, level: int, hbar: float,
                rel_eps: float) -> float:
    fa = mad.decompose(a.states[level], a.grid, hbar=hbar, rel_eps=rel_eps)
    fb = mad.decompose(b.states[level], b.grid, hbar=hbar, rel_eps=rel_eps)
    dS, joint = aligned_action_difference(fa, fb)
    rho_mid = np.where(joint, 0.5 * (fa.rho + fb.rho), 0.0)
    return -float(integrate(rho_mid * dS, a.grid)) / hbar


def connection_bohm(pairs, level: int = 0, hbar: float = 1.0,
                    rel_eps: float = mad.REL_EPS_NODE) -> tuple[list[ConnectionSample], list]:
    """Bohmian connection ``A . dR = -(1/hbar) int rho_n dS_n``.

    dS_n is the run-aligned action difference between the two slices and
    rho_n their average, i.e. a central difference about the link midpoint.
    Returns ``(samples, skipped)`` where ``skipped`` lists the links whose
    node structure could not be aligned.
    """
    out, skipped = [], []
    for link, a, b in _pairs(pairs):
        dR = _step(a, b)
        try:
            phase = _bohm_phase(a, b, level, hbar, rel_eps)
        except RunAlignmentError:
            skipped.append(link)
            continue
        out.append(_sample(a, b, dR, phase, link))
    return out, skipped


def geometric_phase(connection: Sequence[ConnectionSample], path: ParameterPath) -> np.ndarray:
    """gamma(t_k) = sum over links before t_k of A(midpoint) . dR."""
    contrib = np.zeros(len(path) - 1)
    for i, c in enumerate(connection):
        k = i if c.link is None else c.link
        contrib[k] += c.phase
    return np.concatenate(([0.0], np.cumsum(contrib)))


def loop_phase_pancharatnam(slices: Sequence[SpectrumSlice], level: int = 0,
                            reference: float | None = None) -> float:
    """-arg prod_k <n;R_k|n;R_{k+1}> around a closed loop.

    Returned in (-pi, pi]; with ``reference`` the branch closest to it is
    chosen instead.
    """
    slices = list(slices)
    if len(slices) < 3:
        raise LinkError("a loop needs at least three slices")
    if np.all(np.abs(np.asarray(slices[-1].R) - np.asarray(slices[0].R)) <= 1e-12):
        slices = slices[:-1]
    grid = slices[0].grid
    prod = 1.0 + 0.0j
    for a, b in zip(slices, slices[1:] + slices[:1]):
        ov = inner(a.states[level], b.states[level], grid)
        if abs(ov) < MIN_LINK_OVERLAP:
            raise LinkError(f"vanishing overlap between R = {list(a.R)} and {list(b.R)}")
        prod *= ov / abs(ov)
    gamma = -float(np.angle(prod))
    if gamma <= -np.pi:
        gamma += 2 * np.pi
    if reference is not None:
        gamma += 2 * np.pi * np.round((reference - gamma) / (2 * np.pi))
    return gamma


def phase_rate_bohm(before: SpectrumSlice, after: SpectrumSlice, energy: float, dR_dt,
                    hbar: float = 1.0, level: int = 0,
                    rel_eps: float = mad.REL_EPS_NODE) -> float:
    """d alpha/dt = -E/hbar - (1/hbar) int rho_n dS_n/dt.

    dS_n/dt is (dS_n/dR) . dR/dt with dS_n/dR from the two slices, which
    should straddle the evaluation point along the direction of ``dR_dt``.
    """
    dR_dt = np.asarray(dR_dt, dtype=float)
    if not np.any(dR_dt):
        return -energy / hbar
    dR = _step(before, after)
    scale = np.dot(dR_dt, dR) / np.dot(dR, dR)
    return -energy / hbar + _bohm_phase(before, after, level, hbar, rel_eps) * scale


def separability_check(traj: Trajectory, madelung0: mad.MadelungFields, f,
                       rel_eps: float = mad.REL_EPS_NODE) -> np.ndarray:
    """rho-weighted spread of S(x;t) - S_n(x;0) - f(t), in units of hbar.

    A constant offset on every jointly unmasked run is projected out.
    """
    hbar = madelung0.hbar
    f = np.asarray(f, dtype=float)
    out = np.zeros(len(traj.times))
    grid = madelung0.grid
    for k, psi in enumerate(traj.states):
        ft = mad.decompose(psi, grid, hbar=hbar, rel_eps=rel_eps)
        joint = ft.mask & madelung0.mask
        d = (ft.S - madelung0.S - f[k]) / hbar
        w = grid.weights * ft.rho
        num = den = 0.0
        for run in mad._runs(joint, grid.periodic):
            wr, dr = w[run], d[run]
            mean = np.dot(wr, dr) / np.sum(wr)
            num += np.dot(wr, (dr - mean) ** 2)
            den += np.sum(wr)
        out[k] = np.sqrt(num / den) if den > 0 else np.nan
    return out


def rho_q_drift(traj: Trajectory, spec: HamiltonianSpec, reference=None,
                rel_eps: float = mad.REL_EPS_NODE) -> tuple[np.ndarray, np.ndarray]:
    """Per sample: L1 distance of rho(t) from a reference density and the
    rho-weighted RMS difference of the quantum potentials.

    The reference defaults to the initial state; pass one state per sample
    (e.g. the instantaneous eigenstates) to compare against those instead.
    """
    grid, hbar = spec.grid, spec.hbar
    K = len(traj.times)
    if reference is None:
        reference = np.broadcast_to(traj.states[0], traj.states.shape)
    l1 = np.zeros(K)
    qd = np.zeros(K)
    for k in range(K):
        R = traj.path.points[k]
        g = spec.metric(R, traj.times[k])
        ft = mad.decompose(traj.states[k], grid, hbar=hbar, rel_eps=rel_eps)
        fr = mad.decompose(reference[k], grid, hbar=hbar, rel_eps=rel_eps)
        l1[k] = integrate(np.abs(ft.rho - fr.rho), grid)
        joint = ft.mask & fr.mask
        dq = mad.quantum_potential(ft, g) - mad.quantum_potential(fr, g)
        w = np.where(joint, grid.weights * ft.rho, 0.0)
        qd[k] = np.sqrt(np.dot(w, dq**2) / np.sum(w))
    return l1, qd


def wkb_index(psi, spec: HamiltonianSpec, R, t: float = 0.0,
              rel_eps: float = mad.REL_EPS_NODE) -> float:
    """int rho|Q| / (int rho|Q| + int rho|H_cl|), H_cl evaluated at p = S'."""
    R = as_point(R, spec.m)
    fields = mad.decompose(psi, spec.grid, hbar=spec.hbar, rel_eps=rel_eps)
    Q = mad.quantum_potential(fields, spec.metric(R, t))
    H = classical_field(spec, R, mad.action_gradient(fields), t)
    w = np.where(fields.mask, spec.grid.weights * fields.rho, 0.0)
    q = float(np.dot(w, np.abs(Q)))
    c = float(np.dot(w, np.abs(H)))
    if q + c == 0.0:
        raise DegenerateDenominator("quantum and classical integrals both vanish")
    return q / (q + c)
