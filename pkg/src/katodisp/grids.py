"""Spatial quadrature grids used by every integral operator in the package.

Three layouts are provided:

* ``radial``   -- a ball around the origin cell followed by geometric shells,
                  each carrying a Lebedev sphere rule.  Used for Kato norms.
* ``cartesian`` -- a cubic lattice with spacing ``h``; supports trilinear
                  interpolation and FFT convolution.  Used for Nystrom
                  matrices and the spherical-means family.
* ``radial-line`` -- Gauss-Legendre panels along a ray, carrying the radial
                  measure ``4 pi r^2 dr``.  Used for partial-wave reductions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import lebedev_rule

from .errors import InvalidInputError

# volume-equivalent ball radius of a unit cube
_CUBE_BALL = (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes, positive volume weights and per-node singular-cell radii.

    Attributes
    ----------
    nodes : (n, 3) array
    weights : (n,) array
        Volume weights; they sum to the covered volume.
    cell_radius : (n,) array
        Radius of the ball with the same volume as the node's cell.  The
        ``1/|x-y|`` singularity inside that cell is replaced by the ball
        average of the kernel.
    support_radius : float
        Radius of the region the grid was built to cover.
    kind : {'radial', 'cartesian', 'radial-line'}
    spacing : float
        Lattice spacing for Cartesian grids, ``nan`` otherwise.
    lattice : (n, 3) int array or None
        Integer lattice coordinates (Cartesian grids only).
    shell_radii, shell_weights : arrays or None
        Radial nodes and radial weights ``4 pi r^2 dr`` (radial layouts).
    """

    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    cell_radius: NDArray[np.float64]
    support_radius: float
    kind: str = "radial"
    spacing: float = float("nan")
    lattice: NDArray[np.int64] | None = None
    shell_radii: NDArray[np.float64] | None = None
    shell_weights: NDArray[np.float64] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3 or len(nodes) == 0:
            raise InvalidInputError("grid: nodes must be a non-empty (n, 3) array")
        w = np.asarray(self.weights, dtype=float)
        rc = np.asarray(self.cell_radius, dtype=float)
        if w.shape != (len(nodes),) or rc.shape != (len(nodes),):
            raise InvalidInputError("grid: weights/cell_radius length mismatch")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(w))):
            raise InvalidInputError("grid: non-finite nodes or weights")
        if np.any(w <= 0) or np.any(rc <= 0):
            raise InvalidInputError("grid: weights and cell radii must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "cell_radius", rc)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    @property
    def is_lattice(self) -> bool:
        return self.kind == "cartesian" and self.lattice is not None

    # -- lattice helpers ---------------------------------------------------
    def lattice_box(self) -> tuple[NDArray[np.int64], tuple[int, int, int]]:
        """Lower lattice corner and the shape of the bounding box."""
        if not self.is_lattice:
            raise InvalidInputError("grid: lattice operations need a cartesian grid")
        lo = self.lattice.min(axis=0)
        hi = self.lattice.max(axis=0)
        return lo, tuple(int(v) for v in hi - lo + 1)

    def to_box(self, values: NDArray) -> NDArray:
        """Scatter node values into the dense bounding box (zeros elsewhere)."""
        lo, shape = self.lattice_box()
        values = np.asarray(values)
        box = np.zeros(shape, dtype=values.dtype)
        idx = self.lattice - lo
        box[idx[:, 0], idx[:, 1], idx[:, 2]] = values
        return box

    def from_box(self, box: NDArray) -> NDArray:
        lo, _ = self.lattice_box()
        idx = self.lattice - lo
        return box[idx[:, 0], idx[:, 1], idx[:, 2]]

    def scaled(self, factor: float) -> "QuadratureGrid":
        """The same grid with all lengths multiplied by ``factor``."""
        f = float(factor)
        return QuadratureGrid(
            nodes=self.nodes * f,
            weights=self.weights * f**3,
            cell_radius=self.cell_radius * f,
            support_radius=self.support_radius * f,
            kind=self.kind,
            spacing=self.spacing * f,
            lattice=self.lattice,
            shell_radii=None if self.shell_radii is None else self.shell_radii * f,
            shell_weights=None if self.shell_weights is None else self.shell_weights * f**3,
            meta=dict(self.meta),
        )

    def node_index(self, point) -> int:
        return int(np.argmin(np.linalg.norm(self.nodes - np.asarray(point, float), axis=1)))


def _sphere_rule(degree: int) -> tuple[NDArray, NDArray]:
    x, w = lebedev_rule(degree)
    return x.T.copy(), w / w.sum()


def _segment_edges(knots: list[float], n_shells: int) -> NDArray:
    """Geometric shell edges through every knot, shells shared by log-length."""
    knots = np.asarray(knots, dtype=float)
    logs = np.diff(np.log(knots))
    counts = np.maximum(1, np.round(n_shells * logs / logs.sum()).astype(int))
    # fix rounding so the total is exactly n_shells
    while counts.sum() > n_shells and counts.max() > 1:
        counts[np.argmax(counts)] -= 1
    while counts.sum() < n_shells:
        counts[np.argmax(logs / counts)] += 1
    edges = [knots[:1]]
    for a, b, m in zip(knots[:-1], knots[1:], counts):
        edges.append(np.geomspace(a, b, m + 1)[1:])
    return np.concatenate(edges)


def radial_grid(
    support_radius: float,
    n_shells: int = 256,
    extent: float = 1.5,
    degree: int = 17,
    inner_fraction: float = 1e-3,
    breakpoints=(),
) -> QuadratureGrid:
    """Origin ball plus geometric shells out to ``extent * support_radius``.

    Every breakpoint (radius where the potential jumps) becomes a shell edge.
    Node radii are placed at ``int r^2 dr / int r dr`` over the shell so the
    Kato integral about the origin is exact for piecewise-constant radial
    potentials.
    """
    a = float(support_radius)
    if not a > 0 or n_shells < 2:
        raise InvalidInputError("radial_grid: need support_radius > 0 and n_shells >= 2")
    r0 = inner_fraction * a
    outer = extent * a
    knots = sorted({r0, outer, *(float(b) for b in breakpoints if r0 < b < outer)})
    edges = _segment_edges(knots, n_shells)
    lo, hi = edges[:-1], edges[1:]
    vol = 4.0 * np.pi * (hi**3 - lo**3) / 3.0
    r = (hi**3 - lo**3) / 3.0 / ((hi**2 - lo**2) / 2.0)
    dirs, wdir = _sphere_rule(degree)
    nodes = (r[:, None, None] * dirs[None]).reshape(-1, 3)
    weights = (vol[:, None] * wdir[None]).reshape(-1)
    cell = (3.0 * weights / (4.0 * np.pi)) ** (1.0 / 3.0)
    nodes = np.vstack([np.zeros((1, 3)), nodes])
    weights = np.concatenate([[4.0 * np.pi * r0**3 / 3.0], weights])
    cell = np.concatenate([[r0], cell])
    return QuadratureGrid(
        nodes=nodes,
        weights=weights,
        cell_radius=cell,
        support_radius=a,
        kind="radial",
        shell_radii=np.concatenate([[0.0], r]),
        shell_weights=np.concatenate([[weights[0]], vol]),
        meta={"n_dirs": len(wdir), "degree": degree, "edges": edges},
    )


def cartesian_grid(half_width: float, h: float, mask_radius: float | None = None) -> QuadratureGrid:
    """Cubic lattice ``h * Z^3`` inside ``[-half_width, half_width]^3``.

    With ``mask_radius`` only cells that can meet the ball of that radius are
    kept, which is what Nystrom matrices of compactly supported potentials
    need.
    """
    if not (h > 0 and half_width > 0):
        raise InvalidInputError("cartesian_grid: need h > 0 and half_width > 0")
    m = int(np.ceil(half_width / h - 1e-9))
    k = np.arange(-m, m + 1)
    lat = np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1).reshape(-1, 3)
    nodes = lat * h
    if mask_radius is not None:
        keep = np.linalg.norm(nodes, axis=1) <= mask_radius + 0.5 * np.sqrt(3.0) * h
        lat, nodes = lat[keep], nodes[keep]
    n = len(nodes)
    return QuadratureGrid(
        nodes=nodes,
        weights=np.full(n, h**3),
        cell_radius=np.full(n, _CUBE_BALL * h),
        support_radius=float(mask_radius if mask_radius is not None else half_width),
        kind="cartesian",
        spacing=float(h),
        lattice=lat.astype(np.int64),
    )


def radial_line(radius: float, n: int = 256, order: int = 8) -> QuadratureGrid:
    """Composite Gauss-Legendre panels on ``[0, radius]`` with weights ``4 pi r^2 dr``."""
    if n < order or radius <= 0:
        raise InvalidInputError("radial_line: need radius > 0 and n >= order")
    x, w = np.polynomial.legendre.leggauss(order)
    npan = n // order
    e = np.linspace(0.0, radius, npan + 1)
    half = 0.5 * np.diff(e)
    mid = 0.5 * (e[:-1] + e[1:])
    r = (mid[:, None] + half[:, None] * x[None]).ravel()
    dr = (half[:, None] * w[None]).ravel()
    wr = 4.0 * np.pi * r**2 * dr
    nodes = np.zeros((len(r), 3))
    nodes[:, 0] = r
    return QuadratureGrid(
        nodes=nodes,
        weights=wr,
        cell_radius=(3.0 * wr / (4.0 * np.pi)) ** (1.0 / 3.0),
        support_radius=float(radius),
        kind="radial-line",
        shell_radii=r,
        shell_weights=wr,
    )


def save_grid(grid: QuadratureGrid, path) -> None:
    rows = np.column_stack([grid.nodes, grid.weights, grid.cell_radius])
    doc = {
        "kind": grid.kind,
        "support_radius": grid.support_radius,
        "spacing": None if np.isnan(grid.spacing) else grid.spacing,
        "nodes": rows.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_grid(path) -> QuadratureGrid:
    doc = json.loads(Path(path).read_text())
    rows = np.asarray(doc["nodes"], dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 5:
        raise InvalidInputError(f"{path}: grid rows must be [x, y, z, weight, cell_radius]")
    h = doc.get("spacing")
    lattice = None
    if doc.get("kind") == "cartesian" and h:
        lattice = np.rint(rows[:, :3] / h).astype(np.int64)
    return QuadratureGrid(
        nodes=rows[:, :3],
        weights=rows[:, 3],
        cell_radius=rows[:, 4],
        support_radius=float(doc["support_radius"]),
        kind=doc.get("kind", "radial"),
        spacing=float(h) if h else float("nan"),
        lattice=lattice,
    )
