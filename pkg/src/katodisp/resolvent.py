"""Free resolvent kernels and the Birman-Schwinger family ``V R0(lambda^2 -/+ i0)``.

Operators are discretized by the Nystrom rule on a :class:`QuadratureGrid`:
``(A f)_i = sum_j A(x_i, x_j) w_j f_j``.  The diagonal of the singular
kernel uses the ball-average value ``3 / (2 r_cell) / (4 pi)``.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg, special
from scipy.optimize import minimize_scalar

from .errors import InvalidInputError, SingularPointError
from .grids import QuadratureGrid, cartesian_grid, radial_line
from .potential import Potential

log = logging.getLogger(__name__)

SIGNS = ("plus", "minus")


def _wavenumber(z=None, lam=None, sign="minus") -> complex:
    """The ``k`` in ``exp(i k |x-y|)``."""
    if z is not None:
        z = complex(z)
        if z.imag == 0 and z.real >= 0:
            raise InvalidInputError("resolvent: z must lie off [0, inf); pass lam and sign instead")
        k = np.sqrt(z)
        return k if k.imag > 0 else -k
    if lam is None or not np.isfinite(lam):
        raise InvalidInputError("resolvent: need a complex z or a finite real lam")
    if sign not in SIGNS:
        raise InvalidInputError(f"resolvent: sign must be one of {SIGNS}")
    return complex(lam if sign == "plus" else -lam)


def free_resolvent_kernel(x, y, z=None, lam=None, sign="minus") -> complex:
    """``R0(x, y) = exp(i k |x-y|) / (4 pi |x-y|)``.

    With ``z`` off the half-line, ``k = sqrt(z)`` with positive imaginary
    part.  With real ``lam``, ``k = +lam`` for ``sign='plus'`` and ``-lam`` for
    ``'minus'``.
    """
    k = _wavenumber(z, lam, sign)
    d = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if d == 0.0:
        raise SingularPointError("resolvent: kernel is singular at x = y; use the cell-average rule")
    return complex(np.exp(1j * k * d) / (4.0 * np.pi * d))


def kernel_matrix(grid: QuadratureGrid, k: complex, rows=None, cols=None) -> NDArray[np.complex128]:
    """Point kernel ``exp(ikd)/(4 pi d)`` between nodes; ball average on the diagonal."""
    xi = grid.nodes if rows is None else grid.nodes[rows]
    xj = grid.nodes if cols is None else grid.nodes[cols]
    rc = grid.cell_radius if cols is None else grid.cell_radius[cols]
    d = np.linalg.norm(xi[:, None, :] - xj[None], axis=-1)
    diag = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.exp(1j * k * d) / (4.0 * np.pi * d)
    if diag.any():
        G[diag] = np.broadcast_to(1.5 / rc / (4.0 * np.pi), d.shape)[diag]
    return G


@dataclass
class OperatorSample:
    """Nystrom matrix of one discretized integral operator."""

    matrix: NDArray[np.complex128]
    lam: float
    sign: str
    weights: NDArray[np.float64]
    norm_convention: str = "L1-induced"

    def __post_init__(self):
        if self.matrix.shape != (len(self.weights),) * 2:
            raise InvalidInputError("operator: matrix size must equal node count")
        if not np.all(np.isfinite(self.matrix)):
            raise InvalidInputError("operator: non-finite matrix entries")

    @property
    def n(self) -> int:
        return len(self.weights)

    def norm(self, convention: str | None = None) -> float:
        """``L1-induced``: max_j sum_i w_i |M_ij| / w_j.  ``L2-weighted``: ||W^1/2 M W^-1/2||_2."""
        conv = convention or self.norm_convention
        w = self.weights
        if conv == "L1-induced":
            return float(((w[:, None] * np.abs(self.matrix)).sum(axis=0) / w).max())
        if conv == "L2-weighted":
            s = np.sqrt(w)
            return float(linalg.norm(s[:, None] * self.matrix / s[None], 2))
        raise InvalidInputError(f"operator: unknown norm convention {conv!r}")

    def apply(self, f) -> NDArray[np.complex128]:
        return self.matrix @ np.asarray(f)


def birman_schwinger(V: Potential, grid: QuadratureGrid, lam: float, sign: str = "minus",
                     values: NDArray | None = None) -> OperatorSample:
    """``M_ij = V(x_i) R0^sign(lam^2)(x_i, x_j) w_j``."""
    k = _wavenumber(lam=lam, sign=sign)
    v = V.sample(grid) if values is None else np.asarray(values, dtype=float)
    M = v[:, None] * kernel_matrix(grid, k) * grid.weights[None]
    return OperatorSample(M, float(lam), sign, grid.weights)


def nystrom_grid(V: Potential, h: float = 0.2, max_nodes: int = 4000, rel: float = 1e-3) -> QuadratureGrid:
    """Cartesian lattice over the (truncated) support of ``V``.

    Gaussian tails are cut where ``|v|`` drops below ``rel`` of the peak.  The
    spacing grows by 25% steps until the node count fits ``max_nodes``, so
    dense matrices stay affordable.
    """
    a = V.truncation_radius(rel)
    while True:
        grid = cartesian_grid(a + h, h, mask_radius=a)
        if len(grid) <= max_nodes:
            return grid
        log.warning("nystrom_grid: %d nodes at h=%.3g exceed %d; coarsening", len(grid), h, max_nodes)
        h *= 1.25


# ---------------------------------------------------------------------------
# invertibility scans


def _active(V: Potential, grid: QuadratureGrid):
    """Rows with ``V != 0``; the rest of ``I + T`` is block-triangular identity."""
    v = V.sample(grid)
    idx = np.flatnonzero(v != 0.0)
    return idx, v[idx]


def _min_sv_and_det(A: NDArray, sw: NDArray) -> tuple[float, float]:
    B = sw[:, None] * A / sw[None]
    smin = float(linalg.svdvals(B)[-1])
    _, logdet = np.linalg.slogdet(A)
    return smin, float(np.exp(logdet)) if logdet < 700 else float("inf")


@dataclass
class ScanReport:
    lambdas: list[float]
    min_singular: list[float]
    det_modulus: list[float]
    flagged: list[tuple[float, float]]
    threshold: float = 1e-3
    sign: str = "minus"

    @property
    def flags(self) -> list[bool]:
        return [s < self.threshold for s in self.min_singular]

    def csv_rows(self):
        return [(l, s, d, int(f)) for l, s, d, f in
                zip(self.lambdas, self.min_singular, self.det_modulus, self.flags)]

    def summary(self) -> dict:
        return {"threshold": self.threshold, "sign": self.sign,
                "flagged_intervals": [list(iv) for iv in self.flagged],
                "min_of_min_singular": float(min(self.min_singular))}


def _intervals(lams, flags) -> list[tuple[float, float]]:
    out, start = [], None
    for l, f in zip(lams, flags):
        if f and start is None:
            start = l
        if f:
            end = l
        if not f and start is not None:
            out.append((start, end))
            start = None
    if start is not None:
        out.append((start, end))
    return out


def resonance_scan(
    V: Potential,
    grid: QuadratureGrid,
    lambdas=None,
    threshold: float = 1e-3,
    sign: str = "minus",
    refine: bool = True,
    threads: int = 1,
) -> ScanReport:
    """Min singular value and ``|det|`` of ``I + T(lam)`` along ``lambdas``.

    Singular values are taken in the weighted-L2 frame ``W^1/2 A W^-1/2`` on
    the nodes where ``V != 0``.  Sub-threshold runs are flagged, and with
    ``refine`` each flagged run is resampled at 4x density between its
    unflagged neighbours.
    """
    if not threshold > 0:
        raise InvalidInputError("resonance_scan: threshold must be positive")
    lams = np.linspace(0.0, 20.0, 400) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lams.ndim != 1 or len(lams) == 0 or np.any(np.diff(lams) <= 0):
        raise InvalidInputError("resonance_scan: lambdas must be a non-empty ascending list")
    idx, v = _active(V, grid)
    if len(idx) == 0:
        n = len(lams)
        return ScanReport(list(map(float, lams)), [1.0] * n, [1.0] * n, [], threshold, sign)
    x = grid.nodes[idx]
    w = grid.weights[idx]
    sub = QuadratureGrid(x, w, grid.cell_radius[idx], grid.support_radius, grid.kind, grid.spacing)
    d0 = kernel_matrix(sub, 0.0).real  # 1/(4 pi d) with diagonal rule
    dist = np.linalg.norm(x[:, None] - x[None], axis=-1)
    sw = np.sqrt(w)

    def one(lam):
        k = lam if sign == "plus" else -lam
        A = v[:, None] * d0 * np.exp(1j * k * dist) * w[None]
        A[np.diag_indices_from(A)] += 1.0
        return _min_sv_and_det(A, sw)

    def run(ls):
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                return list(pool.map(one, ls))
        return [one(l) for l in ls]

    res = dict(zip(lams.tolist(), run(lams)))
    if refine:
        flags = [res[l][0] < threshold for l in lams]
        extra = []
        for a, b in _intervals(lams.tolist(), flags):
            i, j = np.searchsorted(lams, a), np.searchsorted(lams, b)
            lo, hi = lams[max(i - 1, 0)], lams[min(j + 1, len(lams) - 1)]
            step = (lams[1] - lams[0]) / 4.0 if len(lams) > 1 else 0.0
            if step > 0:
                extra.extend(l for l in np.arange(lo, hi + 0.5 * step, step).tolist() if l not in res)
        res.update(zip(extra, run(extra)))
    ls = sorted(res)
    smin = [res[l][0] for l in ls]
    return ScanReport(ls, smin, [res[l][1] for l in ls],
                      _intervals(ls, [s < threshold for s in smin]), threshold, sign)


@dataclass
class DepthSweep:
    depths: NDArray[np.float64]
    min_singular: NDArray[np.float64]
    threshold_depth: float
    threshold_min_singular: float


def depth_sweep(shape: Potential, grid: QuadratureGrid, depths, lam: float = 0.0,
                sign: str = "minus") -> DepthSweep:
    """Scan ``min sv(I + T_{c V}(lam))`` over multipliers ``c`` and locate the dip.

    The coarse minimum is polished with a bounded scalar minimisation between
    its neighbours.
    """
    depths = np.asarray(depths, dtype=float)
    if depths.ndim != 1 or len(depths) < 3:
        raise InvalidInputError("depth_sweep: need at least three depths")
    idx, v = _active(shape, grid)
    if len(idx) == 0:
        raise InvalidInputError("depth_sweep: shape potential vanishes on the grid")
    M = birman_schwinger(shape, grid, lam, sign, values=shape.sample(grid)).matrix[np.ix_(idx, idx)]
    sw = np.sqrt(grid.weights[idx])
    B = sw[:, None] * M / sw[None]
    eye = np.eye(len(idx))

    def smin(c):
        return float(linalg.svdvals(eye + c * B)[-1])

    s = np.array([smin(c) for c in depths])
    i = int(np.argmin(s))
    lo, hi = depths[max(i - 1, 0)], depths[min(i + 1, len(depths) - 1)]
    lo, hi = min(lo, hi), max(lo, hi)
    opt = minimize_scalar(smin, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6 * max(1.0, abs(hi))})
    best = (float(opt.x), float(opt.fun)) if opt.fun <= s[i] else (float(depths[i]), float(s[i]))
    return DepthSweep(depths, s, best[0], best[1])


# ---------------------------------------------------------------------------
# weighted resolvent decay (partial waves)


def _partial_wave_kernel(ell: int, lam: float, r: NDArray) -> NDArray[np.complex128]:
    """Radial kernel of ``R0^-(lam^2)`` in the ``ell``-th partial wave."""
    rl = np.minimum.outer(r, r)
    rg = np.maximum.outer(r, r)
    static = rl**ell / rg ** (ell + 1) / (2 * ell + 1)
    if lam == 0.0:
        return static.astype(complex)
    with np.errstate(all="ignore"):
        j = special.spherical_jn(ell, lam * rl)
        h2 = special.spherical_jn(ell, lam * rg) - 1j * special.spherical_yn(ell, lam * rg)
        K = -1j * lam * j * h2
    bad = ~np.isfinite(K)
    K[bad] = static[bad]
    return K


def weighted_resolvent_decay(
    grid: QuadratureGrid | None = None,
    alpha: float = 1.0,
    lambdas=(0.0, 1.0, 5.0, 20.0),
    max_ell: int = 64,
) -> list[tuple[float, float]]:
    """``||<x>^-a R0^-(lam^2) <x>^-a||_{L2 -> L2}`` per ``lam``.

    The operator commutes with rotations, so its norm is the max over angular
    momenta ``ell`` of the radial blocks.  ``grid`` must be a ``radial-line``
    grid; the default covers ``r <= 15``.  The ``ell`` loop stops after eight
    consecutive blocks below a quarter of the running max.
    """
    if not alpha > 0.5:
        raise InvalidInputError("weighted_resolvent_decay: alpha must exceed 1/2")
    grid = radial_line(15.0, 256) if grid is None else grid
    if grid.kind != "radial-line":
        raise InvalidInputError("weighted_resolvent_decay: needs a radial-line grid")
    r = grid.shell_radii
    s = np.sqrt(grid.shell_weights / (4.0 * np.pi)) * (1.0 + r**2) ** (-alpha / 2.0)
    out = []
    for lam in lambdas:
        lam = abs(float(lam))
        best, quiet = 0.0, 0
        for ell in range(max_ell + 1):
            B = s[:, None] * _partial_wave_kernel(ell, lam, r) * s[None]
            val = float(linalg.svdvals(B)[0])
            if val > best:
                best = val
            quiet = quiet + 1 if val < 0.25 * best else 0
            if quiet >= 8:
                break
        out.append((lam, best))
    return out


def compensated_ratio(profile) -> list[tuple[float, float]]:
    """``(lam, norm * (1 + lam))``."""
    return [(l, n * (1.0 + l)) for l, n in profile]


# ---------------------------------------------------------------------------
# resolvent identity


def resolvent_identity_residual(V: Potential, grid: QuadratureGrid, z: complex) -> float:
    """L1-induced norm of ``(I + R0 V)^-1 R0 - R0 (I + V R0)^-1`` on ``grid``.

    Returns ``inf`` (with a warning) when either solve is numerically singular.
    """
    k = _wavenumber(z=z)
    w = grid.weights
    R = kernel_matrix(grid, k) * w[None]
    v = V.sample(grid)
    eye = np.eye(len(grid))
    A = eye + R * v[None]  # I + R0 V
    B = eye + v[:, None] * R  # I + V R0
    if not v.any():
        return 0.0
    try:
        if max(np.linalg.cond(A), np.linalg.cond(B)) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        lhs = np.linalg.solve(A, R)
        rhs = np.linalg.solve(B.T, R.T).T
    except np.linalg.LinAlgError as exc:
        msg = f"resolvent_identity_residual: I + R0 V not invertible at z={z} ({exc})"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        log.warning(msg)
        return float("inf")
    D = lhs - rhs
    return float(((w[:, None] * np.abs(D)).sum(axis=0) / w).max())
