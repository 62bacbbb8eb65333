"""Eigenpairs at parameter points, gauge fixing and level tracking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import EigensolverError, GapAlarm, TrackingLoss
from .grid import SpatialGrid
from .hamiltonian import HamiltonianSpec, HermitianOperator, as_point, build


@dataclass(frozen=True, eq=False)
class SpectrumSlice:
    R: np.ndarray
    energies: np.ndarray
    states: np.ndarray  # shape (k, n), rows gauge-fixed and normalised
    residual: float
    grid: SpatialGrid

    @property
    def k(self) -> int:
        return len(self.energies)

    def state(self, i: int = 0) -> np.ndarray:
        return self.states[i]

    def level(self, i: int) -> "SpectrumSlice":
        """Single-level view holding only state ``i``."""
        return SpectrumSlice(self.R, self.energies[i:i + 1], self.states[i:i + 1],
                             self.residual, self.grid)


@dataclass(frozen=True, eq=False)
class ParameterPath:
    times: np.ndarray
    points: np.ndarray  # shape (K, m)
    closed: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        R = np.asarray(self.points, dtype=float)
        if R.ndim == 1:
            R = R[:, None]
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", R)
        if t.ndim != 1 or len(t) < 1 or len(R) != len(t):
            raise ValueError("a path needs matching, non-empty time and point arrays")
        if t[0] != 0.0:
            raise ValueError(f"path must start at t=0, starts at {t[0]}")
        if np.any(np.diff(t) <= 0):
            raise ValueError("path times must be strictly increasing")
        if not np.all(np.isfinite(R)):
            raise ValueError("path points must be finite")
        returns = len(t) > 1 and bool(np.all(np.abs(R[-1] - R[0]) <= 1e-12))
        if self.closed != returns:
            raise ValueError(
                "closed path must end where it starts" if self.closed
                else "path ends at its start point; declare it closed"
            )

    @property
    def m(self) -> int:
        return self.points.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return len(self.times)

    def at(self, t: float) -> np.ndarray:
        """Piecewise-linear interpolation of R(t)."""
        return np.array([np.interp(t, self.times, self.points[:, j]) for j in range(self.m)])

    def scaled(self, T: float) -> "ParameterPath":
        return ParameterPath(self.times * (T / self.T), self.points, self.closed)

    @classmethod
    def constant(cls, R, T: float, samples: int) -> "ParameterPath":
        R = as_point(R)
        return cls(np.linspace(0.0, T, samples), np.tile(R, (samples, 1)), closed=samples > 1)


TIE_BAND = 16 * np.finfo(float).eps


def gauge_fix(psi: np.ndarray) -> np.ndarray:
    """Rotate ``psi`` so its largest-modulus entry is real and positive.

    Moduli within ``TIE_BAND`` (relative) of the maximum count as ties and
    go to the smallest index, so rounding in a previous rotation cannot move
    the peak.  The peak entry is written exactly, which makes the map
    idempotent bit for bit; the unit phase is formed with real divisions so
    quarter-turn rotations of the input give identical output.
    """
    psi = np.asarray(psi, dtype=complex)
    mod = np.abs(psi)
    top = mod.max() if len(mod) else 0.0
    if top == 0.0:
        return psi.copy()
    j = int(np.flatnonzero(mod >= top * (1.0 - TIE_BAND))[0])
    c, s = psi[j].real / mod[j], psi[j].imag / mod[j]
    re, im = psi.real, psi.imag
    out = (re * c + im * s) + 1j * (im * c - re * s)
    out[j] = mod[j]
    return out


def _normalise(vecs: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    norms = np.sqrt(np.abs(vecs) ** 2 @ grid.weights)
    return vecs / norms[:, None]


def eigensolve(H: HermitianOperator, k: int, lower_bound: float | None = None) -> SpectrumSlice:
    """Lowest ``k`` eigenpairs of ``H``, normalised and gauge-fixed.

    With ``lower_bound`` (any value at or below the ground energy, e.g. min V,
    since the discrete kinetic form is positive semidefinite) a shift-invert
    Lanczos solve is used; otherwise a dense or banded LAPACK driver.
    """
    grid = H.grid
    if not 1 <= k <= grid.n:
        raise ValueError(f"k={k} outside 1..{grid.n}")
    try:
        if lower_bound is not None and k < grid.n // 4:
            sigma = lower_bound - 1e-2 * (1.0 + abs(lower_bound))
            mat = H.to_sparse().tocsc()
            if H.is_real:
                mat = mat.real
            w, v = spla.eigsh(mat, k=k, sigma=sigma, which="LM", v0=np.ones(grid.n),
                              tol=1e-13)
            # Rayleigh-Ritz on the Krylov output restores orthogonality
            # inside near-degenerate clusters
            q, _ = np.linalg.qr(v)
            w, z = np.linalg.eigh(q.conj().T @ (mat @ q))
            v = q @ z
        elif grid.periodic:
            mat = H.to_dense()
            if H.is_real:
                mat = mat.real
            w, v = sla.eigh(mat, subset_by_index=[0, k - 1])
        else:
            ab = H.band_upper()
            if H.is_real:
                ab = ab.real
            w, v = sla.eig_banded(ab, lower=False, select="i", select_range=(0, k - 1))
    except (sla.LinAlgError, ValueError, spla.ArpackError) as err:
        raise EigensolverError(f"eigensolver did not converge: {err}") from err
    states = _normalise(v.T.astype(complex), grid)
    states = np.array([gauge_fix(s) for s in states])
    res = max(
        float(np.sqrt(np.abs(H.matvec(s) - e * s) ** 2 @ grid.weights)) for e, s in zip(w, states)
    )
    return SpectrumSlice(np.array([]), np.asarray(w, dtype=float), states, res, grid)


def solve_at(spec: HamiltonianSpec, R, k: int, t: float = 0.0) -> SpectrumSlice:
    R = as_point(R, spec.m)
    floor = float(np.min(spec.potential(R, t)))
    sl = eigensolve(build(spec, R, t), k, lower_bound=floor)
    return SpectrumSlice(R, sl.energies, sl.states, sl.residual, sl.grid)


@dataclass(frozen=True, eq=False)
class LevelTrack:
    slices: list[SpectrumSlice]
    index: np.ndarray
    overlaps: np.ndarray
    gaps: np.ndarray

    def __len__(self) -> int:
        return len(self.slices)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energies[i] for s, i in zip(self.slices, self.index)])

    @property
    def states(self) -> np.ndarray:
        return np.array([s.states[i] for s, i in zip(self.slices, self.index)])

    def tracked(self) -> list[SpectrumSlice]:
        return [s.level(int(i)) for s, i in zip(self.slices, self.index)]

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gaps))


def _gap(energies: np.ndarray, i: int) -> float:
    others = np.delete(energies, i)
    return float(np.min(np.abs(others - energies[i]))) if len(others) else float("inf")


def track_level(spec: HamiltonianSpec, path: ParameterPath, n: int, k_buffer: int,
                gap_threshold: float = 0.0) -> LevelTrack:
    """Follow level ``n`` along ``path`` by maximal overlap with the previous pick."""
    if not 0 <= n < k_buffer:
        raise ValueError(f"level {n} must lie below k_buffer={k_buffer}")
    slices: list[SpectrumSlice] = []
    index, overlaps, gaps = [], [], []
    prev = None
    for s, (t, R) in enumerate(zip(path.times, path.points)):
        sl = solve_at(spec, R, k_buffer, t)
        if prev is None:
            i, ov = n, 1.0
        else:
            amps = np.abs(np.conj(sl.states) @ (sl.grid.weights * prev))
            i = int(np.argmax(amps))
            ov = float(amps[i])
            if ov < 0.5:
                raise TrackingLoss(s, ov)
        gap = _gap(sl.energies, i)
        if gap < gap_threshold:
            raise GapAlarm(s, gap, gap_threshold)
        slices.append(sl)
        index.append(i)
        overlaps.append(ov)
        gaps.append(gap)
        prev = sl.states[i]
    return LevelTrack(slices, np.array(index), np.array(overlaps), np.array(gaps))


def solve_path(spec: HamiltonianSpec, points: Sequence, k: int) -> list[SpectrumSlice]:
    return [solve_at(spec, R, k) for R in points]
