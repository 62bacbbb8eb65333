"""Uniform 1D grids, finite-difference derivatives and quadrature.

Two stencil families are available: ``order=2`` (3-point central) and
``order=4`` (5-point central).  Derivatives of *fields* use one-sided
stencils of matching order at Dirichlet edges so that diagnostics stay
defined up to the boundary.  The *operator* matrices returned by
:func:`derivative_matrix` instead treat the wavefunction as zero outside a
Dirichlet grid, which keeps them exactly (anti)symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Literal, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import BindingError, GridError

Boundary = Literal["dirichlet", "periodic"]

MIN_POINTS = 8


def fd_weights(z: float, nodes: Sequence[float], m: int) -> np.ndarray:
    """Finite-difference weights for the ``m``-th derivative at ``z``.

    Fornberg's recursion; ``nodes`` are in units of the grid spacing.
    """
    x = np.asarray(nodes, dtype=float)
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


@lru_cache(maxsize=None)
def central_weights(m: int, order: int) -> tuple[float, ...]:
    half = order // 2
    w = fd_weights(0.0, range(-half, half + 1), m)
    # exact rationals for the stencils we use; kills 1-ulp asymmetries
    w = np.round(w * 12.0) / 12.0
    return tuple(float(v) for v in w)


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n: int
    boundary: Boundary = "dirichlet"
    order: int = 2

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise GridError("grid bounds must be finite")
        if self.x_min >= self.x_max:
            raise GridError(f"x_min={self.x_min} must be below x_max={self.x_max}")
        if int(self.n) != self.n or self.n < MIN_POINTS:
            raise GridError(f"n={self.n} is below the minimum of {MIN_POINTS} points")
        if self.boundary not in ("dirichlet", "periodic"):
            raise GridError(f"unknown boundary {self.boundary!r}")
        if self.order not in (2, 4):
            raise GridError(f"stencil order must be 2 or 4, got {self.order}")

    @property
    def h(self) -> float:
        span = self.x_max - self.x_min
        return span / (self.n - 1) if self.boundary == "dirichlet" else span / self.n

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def half_width(self) -> int:
        return self.order // 2

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.h * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.h)
        if not self.periodic:
            w[0] = w[-1] = 0.5 * self.h
        w.setflags(write=False)
        return w

    def check(self, f) -> np.ndarray:
        f = np.asarray(f)
        if f.shape != (self.n,):
            raise BindingError(f"field of shape {f.shape} is not bound to a grid of {self.n} points")
        return f


def make_grid(x_min: float, x_max: float, n: int, boundary: Boundary = "dirichlet",
              order: int = 2) -> SpatialGrid:
    return SpatialGrid(float(x_min), float(x_max), int(n), boundary, int(order))


@lru_cache(maxsize=64)
def derivative_matrix(grid: SpatialGrid, m: int) -> sp.csr_matrix:
    """Central-difference operator matrix for the ``m``-th derivative.

    Periodic grids wrap; Dirichlet grids truncate the stencil (zero
    extension), so D1 is antisymmetric and D2 symmetric in both cases.
    """
    n, half = grid.n, grid.half_width
    w = central_weights(m, grid.order)
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for k, wk in zip(range(-half, half + 1), w):
        if wk == 0.0:
            continue
        j = idx + k
        if grid.periodic:
            keep = np.ones(n, bool)
            j = j % n
        else:
            keep = (j >= 0) & (j < n)
        rows.append(idx[keep])
        cols.append(j[keep])
        vals.append(np.full(keep.sum(), wk / grid.h**m))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return mat


def segment_derivative(f: np.ndarray, h: float, m: int, order: int) -> np.ndarray:
    """Derivative on an open segment: central inside, one-sided at the ends."""
    n = len(f)
    half = order // 2
    npts = order + m  # one-sided stencil keeping the interior order
    if n < npts:
        raise GridError(f"segment of {n} points too short for a {npts}-point edge stencil")
    out = np.empty(n, dtype=np.result_type(f, float))
    w = np.asarray(central_weights(m, order))
    interior = slice(half, n - half)
    acc = np.zeros(n - 2 * half, dtype=out.dtype)
    for k, wk in zip(range(-half, half + 1), w):
        if wk != 0.0:
            acc = acc + wk * f[half + k: n - half + k]
    out[interior] = acc
    for i in range(half):
        wl = fd_weights(i, range(npts), m)
        out[i] = wl @ f[:npts]
        wr = fd_weights(npts - 1 - i, range(npts), m)
        out[n - 1 - i] = wr @ f[n - npts:]
    return out / h**m


def periodic_derivative(f: np.ndarray, h: float, m: int, order: int) -> np.ndarray:
    half = order // 2
    w = central_weights(m, order)
    out = np.zeros(len(f), dtype=np.result_type(f, float))
    for k, wk in zip(range(-half, half + 1), w):
        if wk != 0.0:
            out = out + wk * np.roll(f, -k)
    return out / h**m


def derivative(f, grid: SpatialGrid, m: int) -> np.ndarray:
    f = grid.check(f)
    if grid.periodic:
        return periodic_derivative(f, grid.h, m, grid.order)
    return segment_derivative(f, grid.h, m, grid.order)


def deriv1(f, grid: SpatialGrid) -> np.ndarray:
    return derivative(f, grid, 1)


def deriv2(f, grid: SpatialGrid) -> np.ndarray:
    return derivative(f, grid, 2)


def integrate(f, grid: SpatialGrid):
    """Trapezoid rule on Dirichlet grids, rectangle rule on periodic ones."""
    f = grid.check(f)
    return np.dot(grid.weights, f)


def inner(psi, phi, grid: SpatialGrid) -> complex:
    """``<psi|phi> = integral of conj(psi)*phi``."""
    psi = grid.check(psi)
    phi = grid.check(phi)
    return complex(np.dot(grid.weights, np.conj(psi) * phi))


def norm(psi, grid: SpatialGrid) -> float:
    psi = grid.check(psi)
    return float(np.sqrt(np.dot(grid.weights, np.abs(psi) ** 2)))


def normalize(psi, grid: SpatialGrid) -> np.ndarray:
    return np.asarray(psi) / norm(psi, grid)
