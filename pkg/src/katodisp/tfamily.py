"""The spherical-means family ``T(rho) f(x) = V(x)/(4 pi rho) * int_{|x-y|=rho} f(y) dS(y)``.

Its Fourier transform in ``rho`` is the Birman-Schwinger operator
``V R0^-(lambda^2)``, and its rho-integrated L1 norm is bounded by
``||V||_K / (4 pi)``.  Everything here works on a Cartesian grid: the sphere
integral is a fixed stencil of lattice weights applied by convolution.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.signal import fftconvolve

from .errors import InvalidInputError, ResolutionError
from .grids import QuadratureGrid
from .potential import Potential
from .resolvent import kernel_matrix

log = logging.getLogger(__name__)

ORDER_FACTOR = 12  # polar nodes per unit of rho/h


@dataclass(frozen=True)
class RhoGrid:
    """Midpoint grid ``rho_k = (k + 1/2) h_rho`` covering ``(0, rho_max]``."""

    h_rho: float
    rho_max: float

    def __post_init__(self):
        if not (self.h_rho > 0 and self.rho_max > 0):
            raise InvalidInputError("rho grid: spacing and rho_max must be positive")

    @property
    def rho_values(self) -> NDArray[np.float64]:
        n = int(np.ceil(self.rho_max / self.h_rho - 1e-9))
        return (np.arange(n) + 0.5) * self.h_rho

    def halved(self) -> "RhoGrid":
        return RhoGrid(self.h_rho / 2.0, self.rho_max)


@dataclass
class TSlice:
    rho: float
    image: NDArray[np.complex128]


@lru_cache(maxsize=256)
def sphere_stencil(rho_over_h: float, order_factor: int = ORDER_FACTOR) -> NDArray[np.float64]:
    """Lattice weights ``K`` with ``int_{|y|=rho} f(x+y) dS ~ sum_k K_k f(x + k h)`` (``h = 1``).

    Product Gauss-Legendre (in ``cos theta``) times uniform azimuthal rule,
    with ``order_factor * rho/h + 4`` polar nodes, splatted onto the lattice
    with trilinear weights.  Multiply by ``h^2`` for physical spacing ``h``.
    """
    q = float(rho_over_h)
    nt = int(np.ceil(order_factor * q)) + 4
    nphi = 2 * nt
    ct, wt = np.polynomial.legendre.leggauss(nt)
    phi = (np.arange(nphi) + 0.5) * 2.0 * np.pi / nphi
    st = np.sqrt(1.0 - ct**2)
    om = np.stack([
        st[:, None] * np.cos(phi)[None],
        st[:, None] * np.sin(phi)[None],
        np.repeat(ct[:, None], nphi, axis=1),
    ], axis=-1).reshape(-1, 3)
    ww = np.repeat(wt, nphi) * (2.0 * np.pi / nphi) * q**2
    pts = om * q
    m = int(np.ceil(q)) + 1
    sz = 2 * m + 1
    base = np.floor(pts).astype(np.int64)
    fr = pts - base
    K = np.zeros(sz**3)
    for dx in (0, 1):
        wx = fr[:, 0] if dx else 1.0 - fr[:, 0]
        for dy in (0, 1):
            wy = fr[:, 1] if dy else 1.0 - fr[:, 1]
            for dz in (0, 1):
                wz = fr[:, 2] if dz else 1.0 - fr[:, 2]
                flat = ((base[:, 0] + dx + m) * sz + base[:, 1] + dy + m) * sz + base[:, 2] + dz + m
                K += np.bincount(flat, weights=ww * wx * wy * wz, minlength=sz**3)
    K = K.reshape(sz, sz, sz)
    K.setflags(write=False)
    return K


def _check_lattice(grid: QuadratureGrid):
    if not grid.is_lattice:
        raise InvalidInputError("tfamily: needs a cartesian lattice grid")


def _sphere_sums(grid: QuadratureGrid, rho: float, f: NDArray, order_factor: int) -> NDArray:
    """``int_{|x-y|=rho} f(y) dS`` at every node, ``f`` given at nodes (zero elsewhere)."""
    h = grid.spacing
    K = sphere_stencil(round(rho / h, 12), order_factor) * h**2
    nz = np.flatnonzero(f)
    if len(nz) == 0:
        return np.zeros(len(grid), dtype=np.result_type(f, float))
    lo, shape = grid.lattice_box()
    if len(nz) <= 27:
        # sparse input: place shifted copies of the stencil directly
        m = (K.shape[0] - 1) // 2
        box = np.zeros(shape, dtype=np.result_type(f, float))
        shp = np.array(shape)
        for j in nz:
            c = grid.lattice[j] - lo
            a, b = c - m, c + m + 1
            sa = np.maximum(-a, 0)
            sb = K.shape[0] - np.maximum(b - shp, 0)
            ga, gb = np.maximum(a, 0), np.minimum(b, shp)
            if np.any(gb <= ga):
                continue
            box[ga[0]:gb[0], ga[1]:gb[1], ga[2]:gb[2]] += f[j] * K[sa[0]:sb[0], sa[1]:sb[1], sa[2]:sb[2]]
        return grid.from_box(box)
    fb = grid.to_box(f)
    if np.iscomplexobj(fb):
        conv = fftconvolve(fb.real, K, mode="same") + 1j * fftconvolve(fb.imag, K, mode="same")
    else:
        conv = fftconvolve(fb, K, mode="same")
    return grid.from_box(conv)


def apply_T(V: Potential, grid: QuadratureGrid, rho: float, f, order_factor: int = ORDER_FACTOR,
            values: NDArray | None = None) -> TSlice:
    """One slice ``T(rho) f`` sampled at the grid nodes."""
    if not rho > 0:
        raise InvalidInputError("apply_T: rho must be positive")
    _check_lattice(grid)
    f = np.asarray(f)
    if f.shape != (len(grid),) or not np.all(np.isfinite(f)):
        raise InvalidInputError("apply_T: f must be a finite field on the grid nodes")
    v = V.sample(grid) if values is None else values
    image = v / (4.0 * np.pi * rho) * _sphere_sums(grid, rho, f, order_factor)
    return TSlice(float(rho), image.astype(complex))


def l1(grid: QuadratureGrid, g) -> float:
    return float(np.sum(grid.weights * np.abs(g)))


def _slices(V, grid, rhos, f, order_factor, threads):
    v = V.sample(grid)
    work = lambda r: apply_T(V, grid, r, f, order_factor, values=v).image  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            yield from pool.map(work, rhos)
    else:
        for r in rhos:
            yield work(r)


def slice_norms(V, grid, rho_grid: RhoGrid, f, order_factor=ORDER_FACTOR, threads=1) -> list[tuple[float, float]]:
    """``(rho, ||T(rho) f||_1)`` for each rho node."""
    rhos = rho_grid.rho_values
    return [(float(r), l1(grid, s)) for r, s in zip(rhos, _slices(V, grid, rhos, f, order_factor, threads))]


def delta_probe(grid: QuadratureGrid, point) -> NDArray[np.float64]:
    """Unit-mass field concentrated on the node nearest ``point``."""
    f = np.zeros(len(grid))
    j = grid.node_index(point)
    f[j] = 1.0 / grid.weights[j]
    return f


def bump_probe(grid: QuadratureGrid, center=(0.0, 0.0, 0.0), width: float = 0.3) -> NDArray[np.float64]:
    """Unit-mass Gaussian bump sampled at the nodes."""
    r2 = np.sum((grid.nodes - np.asarray(center, float)) ** 2, axis=1)
    f = np.exp(-0.5 * r2 / width**2)
    return f / l1(grid, f)


def default_probes(V: Potential, grid: QuadratureGrid, argmax_center=(0.0, 0.0, 0.0)) -> list[NDArray]:
    """Near-deltas at the Kato argmax and six axis points, plus one smooth bump."""
    a = 0.5 * V.support_radius
    pts = [np.asarray(argmax_center, float)]
    for axis in range(3):
        for s in (1.0, -1.0):
            p = np.zeros(3)
            p[axis] = s * a
            pts.append(p)
    probes = [delta_probe(grid, p) for p in pts]
    probes.append(bump_probe(grid, width=max(a / 2.0, 2.0 * grid.spacing)))
    return probes


def wiener_norm(V, grid, rho_grid: RhoGrid, probes, order_factor=ORDER_FACTOR, threads=1) -> float:
    """``max_f sum_rho h_rho ||T(rho) f||_1 / ||f||_1`` over the probe set."""
    probes = list(probes)
    if not probes:
        raise InvalidInputError("wiener_norm: empty probe set")
    best = 0.0
    for f in probes:
        mass = l1(grid, f)
        if mass == 0:
            raise InvalidInputError("wiener_norm: probe with zero mass")
        tot = sum(n for _, n in slice_norms(V, grid, rho_grid, f, order_factor, threads))
        best = max(best, rho_grid.h_rho * tot / mass)
    return best


def interaction_reach(V: Potential, grid: QuadratureGrid, f) -> float:
    """Largest rho for which ``T(rho) f`` can be nonzero on the grid."""
    nz = np.flatnonzero(np.abs(f) > 0)
    if len(nz) == 0:
        return 0.0
    fr = np.linalg.norm(grid.nodes[nz], axis=1).max()
    return V.support_radius + fr + 2.0 * grid.spacing


def _bs_apply(V, grid, lam, f) -> NDArray[np.complex128]:
    """``V R0^-(lam^2) f`` by the Nystrom rule, chunked over rows."""
    v = V.sample(grid)
    rows = np.flatnonzero(v)
    cols = np.flatnonzero(f)
    out = np.zeros(len(grid), dtype=complex)
    if len(rows) == 0 or len(cols) == 0:
        return out
    wf = grid.weights[cols] * f[cols]
    step = max(1, 2**22 // len(cols))
    for s in range(0, len(rows), step):
        r = rows[s:s + step]
        out[r] = v[r] * (kernel_matrix(grid, -lam, rows=r, cols=cols) @ wf)
    return out


def fourier_sum(V, grid, rho_grid: RhoGrid, lam: float, f, order_factor=ORDER_FACTOR, threads=1):
    """``sum_rho h_rho exp(-i lam rho) T(rho) f``."""
    rhos = rho_grid.rho_values
    acc = np.zeros(len(grid), dtype=complex)
    for r, s in zip(rhos, _slices(V, grid, rhos, f, order_factor, threads)):
        acc += rho_grid.h_rho * np.exp(-1j * lam * r) * s
    return acc


def fourier_consistency(V, grid, rho_grid: RhoGrid, lam: float, f, order_factor=ORDER_FACTOR, threads=1) -> float:
    """Relative L1 gap between the rho-Fourier sum of ``T(rho) f`` and ``V R0^-(lam^2) f``.

    Refuses (ResolutionError) when ``|lam| h_rho >= 1/4`` or when ``rho_max``
    stops short of the interaction reach of ``V`` and ``f``.  For the
    compactly supported presets the slices vanish beyond that reach, so no
    additional guard band is needed; Gaussians add one wavelength.
    """
    _check_lattice(grid)
    f = np.asarray(f)
    mass = l1(grid, f)
    if mass == 0 or V.is_zero:
        return 0.0
    if abs(lam) * rho_grid.h_rho >= 0.25:
        raise ResolutionError(f"fourier_consistency: |lambda| h_rho = {abs(lam) * rho_grid.h_rho:.3g} >= 1/4")
    need = interaction_reach(V, grid, f)
    if V.kind == "gaussian" and lam != 0:
        need += 2.0 * np.pi / abs(lam)
    if rho_grid.rho_max < need:
        raise ResolutionError(f"fourier_consistency: rho_max = {rho_grid.rho_max:.3g} < required {need:.3g}")
    acc = fourier_sum(V, grid, rho_grid, lam, f, order_factor, threads)
    return l1(grid, acc - _bs_apply(V, grid, lam, f)) / mass


def locality_tail(V, grid, rho_grid: RhoGrid, R: float, probes, order_factor=ORDER_FACTOR, threads=1) -> float:
    """``max_f sum_{rho > R} h_rho ||T(rho) f||_1 / ||f||_1``."""
    if not R < rho_grid.rho_max:
        raise InvalidInputError("locality_tail: R must be below rho_max")
    probes = list(probes)
    if not probes:
        raise InvalidInputError("locality_tail: empty probe set")
    rhos = rho_grid.rho_values
    tail_grid = rhos[rhos > R]
    best = 0.0
    for f in probes:
        tot = sum(l1(grid, s) for s in _slices(V, grid, tail_grid, f, order_factor, threads))
        best = max(best, rho_grid.h_rho * tot / l1(grid, f))
    return best


def as_wiener_element(V: Potential, grid: QuadratureGrid, h_rho: float, rho_max: float,
                      order_factor: int = ORDER_FACTOR):
    """Matrix samples of ``T(rho)`` on the nodes where ``V != 0``, at ``rho = k h_rho``.

    Column ``j`` is the L1-mass image of the unit-mass delta at node ``j``, so
    the W-norm of the element is the discrete ``sup_y`` of the rho-integrated
    mass.  The rho grid starts at ``h_rho`` (``rho = 0`` is excluded).
    """
    from .wiener import WienerElement

    _check_lattice(grid)
    v = V.sample(grid)
    act = np.flatnonzero(v)
    if len(act) == 0:
        raise InvalidInputError("as_wiener_element: V vanishes on the grid")
    h = grid.spacing
    n = int(np.floor(rho_max / h_rho + 1e-9))
    mats = np.zeros((n, len(act), len(act)), dtype=complex)
    lat = grid.lattice[act]
    for k in range(1, n + 1):
        rho = k * h_rho
        K = sphere_stencil(round(rho / h, 12), order_factor) * h**2
        m = (K.shape[0] - 1) // 2
        off = lat[:, None, :] - lat[None, :, :] + m  # (i, j) -> stencil index of x_i - x_j
        ok = np.all((off >= 0) & (off < K.shape[0]), axis=-1)
        vals = np.zeros(ok.shape)
        vals[ok] = K[off[ok][:, 0], off[ok][:, 1], off[ok][:, 2]]
        # (T delta_j / w_j)(x_i) * w_i with uniform weights
        mats[k - 1] = v[act][:, None] / (4.0 * np.pi * rho) * vals
    return WienerElement(0.0, 1, h_rho, mats)
