"""Discretised H = g(R)/2 (p - A(x;R))^2 + V(x;R) on a 1D grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import expr as ex
from .errors import HamiltonianError
from .grid import SpatialGrid, central_weights


@dataclass(frozen=True)
class PhysicsConfig:
    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise HamiltonianError(f"hbar must be positive, got {self.hbar}")


def as_point(R, m: int | None = None) -> np.ndarray:
    R = np.atleast_1d(np.asarray(R, dtype=float))
    if R.ndim != 1 or len(R) < 1:
        raise HamiltonianError("a parameter point needs at least one coordinate")
    if m is not None and len(R) != m:
        raise HamiltonianError(f"parameter point has {len(R)} coordinates, expected {m}")
    if not np.all(np.isfinite(R)):
        raise HamiltonianError(f"non-finite parameter point {R}")
    return R


@dataclass(frozen=True)
class HamiltonianSpec:
    V: ex.Expr
    A: ex.Expr
    g: ex.Expr
    grid: SpatialGrid
    m: int = 1
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    sources: tuple[str, str, str] = ("", "", "")

    def __post_init__(self):
        if "x" in ex.identifiers(self.g):
            raise HamiltonianError("the metric g may depend on R and t only, not on x")

    @classmethod
    def from_strings(cls, V: str, A: str = "0", g: str = "1", *, grid: SpatialGrid,
                     m: int = 1, hbar: float = 1.0) -> "HamiltonianSpec":
        return cls(
            V=ex.parse(V, m),
            A=ex.parse(A, m),
            g=ex.parse(g, m, variables=ex.variables_for(m, x=False)),
            grid=grid,
            m=m,
            physics=PhysicsConfig(hbar),
            sources=(V, A, g),
        )

    @property
    def hbar(self) -> float:
        return self.physics.hbar

    def metric(self, R, t: float = 0.0) -> float:
        g = ex.evaluate(self.g, 0.0, as_point(R, self.m), t)
        if not g > 0:
            raise HamiltonianError(f"metric g(R) = {g} is not positive at R = {list(R)}")
        return g

    def vector_potential(self, R, t: float = 0.0) -> np.ndarray:
        return ex.evaluate(self.A, self.grid.x, as_point(R, self.m), t)

    def potential(self, R, t: float = 0.0) -> np.ndarray:
        return ex.evaluate(self.V, self.grid.x, as_point(R, self.m), t)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian band operator.

    ``upper[k, j] = H[j, j+k]`` for ``k = 0..u``; the column index wraps on
    periodic grids and entries past the edge are zero on Dirichlet grids.
    The lower triangle is implied by Hermiticity.
    """

    grid: SpatialGrid
    upper: np.ndarray

    @property
    def bandwidth(self) -> int:
        return self.upper.shape[0] - 1

    @cached_property
    def is_real(self) -> bool:
        return not np.any(self.upper.imag)

    def matvec(self, psi: np.ndarray) -> np.ndarray:
        out = self.upper[0] * psi
        for k in range(1, self.bandwidth + 1):
            out = out + self.upper[k] * np.roll(psi, -k)
            out = out + np.roll(np.conj(self.upper[k]) * psi, k)
        return out

    __matmul__ = matvec

    def to_sparse(self) -> sp.csr_matrix:
        n = self.grid.n
        idx = np.arange(n)
        rows, cols, vals = [idx], [idx], [self.upper[0]]
        for k in range(1, self.bandwidth + 1):
            j = idx + k
            keep = np.ones(n, bool) if self.grid.periodic else j < n
            jj = j[keep] % n
            rows += [idx[keep], jj]
            cols += [jj, idx[keep]]
            vals += [self.upper[k][keep], np.conj(self.upper[k][keep])]
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def band_upper(self) -> np.ndarray:
        """LAPACK upper band storage ``ab[u + i - j, j] = H[i, j]`` (Dirichlet only)."""
        if self.grid.periodic:
            raise ValueError("periodic operators have corner entries; no band form")
        u, n = self.bandwidth, self.grid.n
        ab = np.zeros((u + 1, n), dtype=self.upper.dtype)
        for k in range(u + 1):
            ab[u - k, k:] = self.upper[k, : n - k]
        return ab

    def band_full(self) -> np.ndarray:
        """``solve_banded`` storage with ``l = u = bandwidth`` (Dirichlet only)."""
        if self.grid.periodic:
            raise ValueError("periodic operators have corner entries; no band form")
        u, n = self.bandwidth, self.grid.n
        ab = np.zeros((2 * u + 1, n), dtype=complex)
        for k in range(u + 1):
            ab[u - k, k:] = self.upper[k, : n - k]
            if k:
                ab[u + k, : n - k] = np.conj(self.upper[k, : n - k])
        return ab

    def expectation(self, psi: np.ndarray) -> float:
        w = self.grid.weights
        return float(np.real(np.dot(w, np.conj(psi) * self.matvec(psi))) / np.dot(w, np.abs(psi) ** 2))


def assemble(grid: SpatialGrid, g: float, A: np.ndarray, V: np.ndarray, hbar: float) -> HermitianOperator:
    """Band coefficients of (g/2)[-hbar^2 D2 + i hbar (D1 A + A D1) + A^2] + V."""
    n, u, h = grid.n, grid.half_width, grid.h
    c1 = central_weights(1, grid.order)[u:]
    c2 = central_weights(2, grid.order)[u:]
    A = np.asarray(A, dtype=float)
    V = np.asarray(V, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(V))):
        raise HamiltonianError("non-finite potential values on the grid")
    upper = np.zeros((u + 1, n), dtype=complex)
    upper[0] = 0.5 * g * (-(hbar**2) * c2[0] / h**2 + A**2) + V
    for k in range(1, u + 1):
        Ak = np.roll(A, -k)
        upper[k] = 0.5 * g * (-(hbar**2) * c2[k] / h**2 + 1j * hbar * c1[k] * (A + Ak) / h)
        if not grid.periodic:
            upper[k, n - k:] = 0.0
    return HermitianOperator(grid, upper)


def build(spec: HamiltonianSpec, R, t: float = 0.0) -> HermitianOperator:
    R = as_point(R, spec.m)
    g = spec.metric(R, t)
    return assemble(spec.grid, g, spec.vector_potential(R, t), spec.potential(R, t), spec.hbar)


def classical_field(spec: HamiltonianSpec, R, p, t: float = 0.0) -> np.ndarray:
    """Pointwise classical energy g/2 (p - A)^2 + V."""
    p = spec.grid.check(p)
    R = as_point(R, spec.m)
    return 0.5 * spec.metric(R, t) * (p - spec.vector_potential(R, t)) ** 2 + spec.potential(R, t)
