"""JIT-compiled inner loops for exact pairwise sums over the torus.

The exact contrast force and contrast energy are full double sums: for
every pixel of the original block, a weighted sum over every lattice point
of the (2H, 2W) mirror-extended block.  These loops are the O(N^2)
reference paths, so they are written for speed on a single core:

- outer iteration over displacement, inner over contiguous pixel runs
  (the wrap of each axis splits a run in at most two pieces), which keeps
  memory access sequential and lets LLVM vectorize;
- the variant kind and regularizer family are frozen into the compiled
  closure, so the per-pair formula has no runtime dispatch;
- accumulation order is a fixed function of the inputs, making results
  bitwise reproducible.

Each specialization is compiled once per process and cached.
"""

from __future__ import annotations

import numpy as np
from numba import njit

KIND_ID = 1
KIND_LOG = 2
KIND_MICH = 3

FAM_LIMIT = 0
FAM_SQRT = 1
FAM_ARCTAN = 2

_FIELD_CACHE: dict = {}
_ENERGY_CACHE: dict = {}


def _make_pair_force(kind: int, family: int, gamma_on: bool):
    """Pointwise contrast-force summand r(a, b) with frozen dispatch."""

    @njit(inline="always")
    def pair(a, b, eps, gamma, c0):
        z = a - b
        if family == FAM_LIMIT:
            if z == 0.0:
                return 0.0
            s = 1.0 if z > 0.0 else -1.0
            A = z if z > 0.0 else -z
        elif family == FAM_SQRT:
            rt = np.sqrt(eps * eps + z * z)
            s = z / rt
            A = rt - eps
        else:
            s = np.arctan(z / eps) / c0
            A = z * s - (eps / (2.0 * c0)) * np.log1p(z * z / (eps * eps))

        if kind == KIND_LOG:
            if gamma_on:
                return gamma * s
            return s
        if kind == KIND_ID:
            if gamma_on:
                mn = 0.5 * (a + b - A)
                mx = 0.5 * (a + b + A)
                return (mn / mx) ** gamma * s
            mx = 0.5 * (a + b + A)
            return a * b / (mx * mx) * s
        # KIND_MICH
        if gamma_on:
            mn = 0.5 * (a + b - A)
            mx = 0.5 * (a + b + A)
            mg = mn**gamma
            xg = mx**gamma
            return 2.0 * mg * xg / ((mg + xg) * (mg + xg)) * s
        return 2.0 * a * b / ((a + b) * (a + b)) * s

    return pair


def _make_pair_energy(kind: int, family: int, gamma_on: bool):
    """Pointwise contrast-energy summand (kernel weight excluded)."""

    @njit(inline="always")
    def a_eps(z, eps, c0):
        if family == FAM_SQRT:
            return np.sqrt(eps * eps + z * z) - eps
        return z * np.arctan(z / eps) / c0 - (eps / (2.0 * c0)) * np.log1p(
            z * z / (eps * eps)
        )

    @njit(inline="always")
    def pair(a, b, eps, gamma, c0):
        A = a_eps(a - b, eps, c0)
        if kind == KIND_MICH:
            if gamma_on:
                ag = a**gamma
                bg = b**gamma
                return -0.25 / gamma * a_eps(ag - bg, eps, c0) / (ag + bg)
            return -0.25 * A / (a + b)
        mn = 0.5 * (a + b - A)
        mx = 0.5 * (a + b + A)
        if kind == KIND_ID:
            if gamma_on:
                return 0.25 / gamma * (mn / mx) ** gamma
            return 0.25 * mn / mx
        # KIND_LOG: the gamma transform is an overall factor
        if gamma_on:
            return 0.25 * gamma * np.log(mn / mx)
        return 0.25 * np.log(mn / mx)

    return pair


def _make_field_kernel(kind: int, family: int, gamma_on: bool):
    pair = _make_pair_force(kind, family, gamma_on)

    @njit(nogil=True)
    def field(ext, weights, height, width, eps, gamma, c0, out):
        eh = ext.shape[0]
        ew = ext.shape[1]
        for dy in range(eh):
            for dx in range(ew):
                w = weights[dy, dx]
                if w == 0.0:
                    continue
                split = ew - dx
                if split > width:
                    split = width
                for xr in range(height):
                    yr = xr + dy
                    if yr >= eh:
                        yr -= eh
                    for xc in range(split):
                        out[xr, xc] += w * pair(
                            ext[xr, xc], ext[yr, xc + dx], eps, gamma, c0
                        )
                    for xc in range(split, width):
                        out[xr, xc] += w * pair(
                            ext[xr, xc], ext[yr, xc + dx - ew], eps, gamma, c0
                        )

    return field


def _make_energy_kernel(kind: int, family: int, gamma_on: bool):
    pair = _make_pair_energy(kind, family, gamma_on)

    @njit(nogil=True)
    def energy(ext, weights, height, width, eps, gamma, c0):
        eh = ext.shape[0]
        ew = ext.shape[1]
        total = 0.0
        for dy in range(eh):
            for dx in range(ew):
                w = weights[dy, dx]
                if w == 0.0:
                    continue
                split = ew - dx
                if split > width:
                    split = width
                part = 0.0
                for xr in range(height):
                    yr = xr + dy
                    if yr >= eh:
                        yr -= eh
                    for xc in range(split):
                        part += pair(ext[xr, xc], ext[yr, xc + dx], eps, gamma, c0)
                    for xc in range(split, width):
                        part += pair(ext[xr, xc], ext[yr, xc + dx - ew], eps, gamma, c0)
                total += w * part
        return total

    return energy


def _prefactor(family: int, eps: float) -> float:
    if family == FAM_ARCTAN:
        return float(np.arctan(1.0 / eps))
    return 1.0


def pair_force_field(
    ext: np.ndarray,
    weights: np.ndarray,
    height: int,
    width: int,
    kind: int,
    family: int,
    eps: float,
    gamma: float,
) -> np.ndarray:
    """Exact force field R(x) = sum_y w(x, y) r(I(x), I(y)) on the block."""
    key = (kind, family, gamma != 1.0)
    fn = _FIELD_CACHE.get(key)
    if fn is None:
        fn = _make_field_kernel(*key)
        _FIELD_CACHE[key] = fn
    out = np.zeros((height, width), dtype=np.float64)
    fn(ext, weights, height, width, eps, gamma, _prefactor(family, eps), out)
    return out


def pair_energy_sum(
    ext: np.ndarray,
    weights: np.ndarray,
    height: int,
    width: int,
    kind: int,
    family: int,
    eps: float,
    gamma: float,
) -> float:
    """Exact contrast energy: block pixels against the full extended block."""
    if family == FAM_LIMIT:
        raise ValueError("contrast energy requires a smooth regularizer family")
    key = (kind, family, gamma != 1.0)
    fn = _ENERGY_CACHE.get(key)
    if fn is None:
        fn = _make_energy_kernel(*key)
        _ENERGY_CACHE[key] = fn
    return float(fn(ext, weights, height, width, eps, gamma, _prefactor(family, eps)))
