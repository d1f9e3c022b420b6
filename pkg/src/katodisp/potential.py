"""Potentials and their Kato functionals.

A :class:`Potential` is a real radial field given by a preset.  Its size is
measured by the global Kato norm

    ||V||_K = sup_y  int |V(x)| / |x - y| dx,

and by the local (``|x-y| < delta``) and distal (``|x-y| > R``) restrictions
of the same integral.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad

from .errors import InvalidInputError
from .grids import QuadratureGrid, radial_grid

log = logging.getLogger(__name__)

KINDS = ("square-well", "gaussian", "radial-table", "sum")

# a Gaussian is treated as supported where it exceeds 1e-8 of its peak
_GAUSS_CUT = float(np.sqrt(2.0 * np.log(1e8)))


@dataclass(frozen=True)
class Potential:
    """Radial potential ``V(x) = v(|x|)``.

    Use the constructors :meth:`square_well`, :meth:`gaussian`,
    :meth:`radial_table`, :meth:`sum` and :meth:`zero` rather than the
    raw fields.
    """

    kind: str
    depth: float = 0.0
    radius: float = 1.0
    amplitude: float = 0.0
    width: float = 1.0
    table: tuple[tuple[float, float], ...] = ()
    components: tuple["Potential", ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"potential: unknown kind {self.kind!r}")
        if self.kind == "square-well":
            if not (np.isfinite(self.depth) and self.radius > 0):
                raise InvalidInputError("potential: square-well needs finite depth and radius > 0")
        elif self.kind == "gaussian":
            if not (np.isfinite(self.amplitude) and self.width > 0):
                raise InvalidInputError("potential: gaussian needs finite amplitude and width > 0")
        elif self.kind == "radial-table":
            if len(self.table) < 2:
                raise InvalidInputError("potential: radial-table needs at least two samples")
            r, v = np.asarray(self.table, dtype=float).T
            if np.any(r < 0) or np.any(np.diff(r) <= 0):
                raise InvalidInputError("potential: radial-table radii must be >= 0 and strictly increasing")
            if not np.all(np.isfinite(v)):
                raise InvalidInputError("potential: radial-table values must be finite")
        elif not self.components:
            raise InvalidInputError("potential: sum needs at least one component")

    # -- constructors ------------------------------------------------------
    @classmethod
    def square_well(cls, depth: float, radius: float = 1.0) -> "Potential":
        return cls("square-well", depth=float(depth), radius=float(radius))

    @classmethod
    def gaussian(cls, amplitude: float, width: float = 1.0) -> "Potential":
        return cls("gaussian", amplitude=float(amplitude), width=float(width))

    @classmethod
    def radial_table(cls, samples) -> "Potential":
        return cls("radial-table", table=tuple((float(r), float(v)) for r, v in samples))

    @classmethod
    def sum(cls, *components: "Potential") -> "Potential":
        return cls("sum", components=tuple(components))

    @classmethod
    def zero(cls) -> "Potential":
        return cls.square_well(0.0, 1.0)

    @classmethod
    def from_dict(cls, spec: dict) -> "Potential":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        allowed = {
            "square-well": {"depth", "radius"},
            "gaussian": {"amplitude", "width"},
            "radial-table": {"samples"},
            "sum": {"components"},
            "zero": set(),
        }
        if kind not in allowed:
            raise InvalidInputError(f"potential: unknown kind {kind!r}")
        extra = set(spec) - allowed[kind]
        if extra:
            raise InvalidInputError(f"potential: unknown keys {sorted(extra)} for kind {kind!r}")
        try:
            if kind == "zero":
                return cls.zero()
            if kind == "square-well":
                return cls.square_well(spec["depth"], spec.get("radius", 1.0))
            if kind == "gaussian":
                return cls.gaussian(spec["amplitude"], spec.get("width", 1.0))
            if kind == "radial-table":
                return cls.radial_table(spec["samples"])
            return cls.sum(*(cls.from_dict(c) for c in spec["components"]))
        except KeyError as exc:
            raise InvalidInputError(f"potential: missing key {exc.args[0]!r} for kind {kind!r}") from None

    def to_dict(self) -> dict:
        if self.kind == "square-well":
            return {"kind": self.kind, "depth": self.depth, "radius": self.radius}
        if self.kind == "gaussian":
            return {"kind": self.kind, "amplitude": self.amplitude, "width": self.width}
        if self.kind == "radial-table":
            return {"kind": self.kind, "samples": [list(p) for p in self.table]}
        return {"kind": "sum", "components": [c.to_dict() for c in self.components]}

    # -- transformations ---------------------------------------------------
    def rescaled(self, r: float) -> "Potential":
        """The critically rescaled potential ``V_r(x) = r^2 V(r x)``."""
        r = float(r)
        if not r > 0:
            raise InvalidInputError("potential: scale factor must be positive")
        if self.kind == "square-well":
            return Potential.square_well(self.depth * r**2, self.radius / r)
        if self.kind == "gaussian":
            return Potential.gaussian(self.amplitude * r**2, self.width / r)
        if self.kind == "radial-table":
            return Potential.radial_table((a / r, v * r**2) for a, v in self.table)
        return Potential.sum(*(c.rescaled(r) for c in self.components))

    def scaled(self, c: float) -> "Potential":
        """``c * V``."""
        c = float(c)
        if self.kind == "square-well":
            return Potential.square_well(self.depth * c, self.radius)
        if self.kind == "gaussian":
            return Potential.gaussian(self.amplitude * c, self.width)
        if self.kind == "radial-table":
            return Potential.radial_table((a, v * c) for a, v in self.table)
        return Potential.sum(*(p.scaled(c) for p in self.components))

    def __add__(self, other: "Potential") -> "Potential":
        return Potential.sum(self, other)

    # -- metadata ----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        if self.kind == "square-well":
            return self.depth == 0.0
        if self.kind == "gaussian":
            return self.amplitude == 0.0
        if self.kind == "radial-table":
            return all(v == 0.0 for _, v in self.table)
        return all(c.is_zero for c in self.components)

    @property
    def support_radius(self) -> float:
        """Radius of the (numerical) support."""
        if self.kind == "square-well":
            return self.radius
        if self.kind == "gaussian":
            return _GAUSS_CUT * self.width
        if self.kind == "radial-table":
            return self.table[-1][0]
        return max(c.support_radius for c in self.components)

    @property
    def integration_radius(self) -> float:
        """Radius beyond which ``|v|`` is negligible even in 1-D quadrature."""
        if self.kind == "gaussian":
            return 10.0 * self.width
        if self.kind == "sum":
            return max(c.integration_radius for c in self.components)
        return self.support_radius

    def truncation_radius(self, rel: float = 1e-3) -> float:
        """Radius outside which ``|v|`` stays below ``rel`` times its peak (Gaussian tails only)."""
        if self.kind == "gaussian":
            return self.width * float(np.sqrt(2.0 * np.log(1.0 / rel)))
        if self.kind == "sum":
            return max(c.truncation_radius(rel) for c in self.components)
        return self.support_radius

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Radii where ``v`` or its derivative jumps."""
        if self.kind == "square-well":
            return (self.radius,)
        if self.kind == "gaussian":
            return ()
        if self.kind == "radial-table":
            return tuple(r for r, _ in self.table if r > 0)
        return tuple(sorted({b for c in self.components for b in c.breakpoints}))

    # -- evaluation ----------------------------------------------------------
    def radial(self, r) -> NDArray[np.float64]:
        """Profile ``v(r)``; the well includes its boundary."""
        r = np.asarray(r, dtype=float)
        if self.kind == "square-well":
            return np.where(r <= self.radius, self.depth, 0.0)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * (r / self.width) ** 2)
        if self.kind == "radial-table":
            rr, vv = np.asarray(self.table, dtype=float).T
            return np.interp(r, rr, vv, left=vv[0], right=0.0)
        return sum(c.radial(r) for c in self.components)

    def __call__(self, x) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        return self.radial(np.linalg.norm(x, axis=-1))

    def cell_average(self, nodes, h: float, sub: int = 4) -> NDArray[np.float64]:
        """Mean of ``V`` over the cubes of side ``h`` centred at ``nodes``.

        Midpoint rule with ``sub**3`` samples per cube; this smooths the jump
        of a well across the lattice instead of sampling it pointwise.
        """
        nodes = np.asarray(nodes, dtype=float)
        o = (np.arange(sub) + 0.5) / sub - 0.5
        off = np.stack(np.meshgrid(o, o, o, indexing="ij"), -1).reshape(-1, 3) * h
        out = np.empty(len(nodes))
        step = max(1, 2**18 // len(off))
        for s in range(0, len(nodes), step):
            pts = nodes[s:s + step, None, :] + off[None]
            out[s:s + step] = self(pts).mean(axis=1)
        return out

    def sample(self, grid: QuadratureGrid) -> NDArray[np.float64]:
        """Node values used by every Nystrom discretization on ``grid``."""
        if grid.kind == "cartesian":
            v = self.cell_average(grid.nodes, grid.spacing)
        else:
            v = self(grid.nodes)
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("potential: non-finite sample on grid")
        return v


# ---------------------------------------------------------------------------
# Kato functionals


def ball_average_inverse_distance(d, a):
    """Mean of ``1/|x - y|`` over ``x`` in the ball of radius ``a`` centred ``d`` from ``y``."""
    d = np.asarray(d, dtype=float)
    a = np.asarray(a, dtype=float)
    inside = (3.0 * a**2 - d**2) / (2.0 * a**3)
    return np.where(d >= a, 1.0 / np.maximum(d, 1e-300), inside)


def default_grid(V: Potential, **kw) -> QuadratureGrid:
    return radial_grid(V.support_radius, breakpoints=V.breakpoints, **kw)


def default_centers(grid: QuadratureGrid, per_shell: int = 3) -> NDArray[np.float64]:
    """Origin plus a few node directions on every shell.

    All presets are radial, so a handful of directions per shell spans the
    support; using every node would cost ~20x more for the same sup.
    """
    if grid.kind == "radial" and "n_dirs" in grid.meta:
        nd = grid.meta["n_dirs"]
        nsh = (len(grid) - 1) // nd
        pick = np.linspace(0, nd - 1, per_shell).astype(int)
        idx = 1 + (np.arange(nsh)[:, None] * nd + pick[None]).ravel()
        return np.vstack([np.zeros((1, 3)), grid.nodes[idx]])
    return np.vstack([np.zeros((1, 3)), grid.nodes])


def kato_integrals(
    V: Potential,
    grid: QuadratureGrid,
    centers,
    threads: int = 1,
    values: NDArray | None = None,
) -> NDArray[np.float64]:
    """Quadrature of ``int |V(x)|/|x-y| dx`` for each center ``y``.

    The node whose cell contains ``y`` contributes the ball average of the
    kernel over its volume-equivalent ball (``3/(2 r_cell)`` when ``y`` is
    the node itself); all other nodes use the point value.
    """
    if len(grid) == 0:
        raise InvalidInputError("kato: empty grid")
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[1] != 3 or len(centers) == 0:
        raise InvalidInputError("kato: centers must be a non-empty (m, 3) array")
    v = np.abs(V.sample(grid) if values is None else np.asarray(values))
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("kato: non-finite potential sample")
    nz = v > 0
    if not nz.any():
        return np.zeros(len(centers))
    x, mass, rc = grid.nodes[nz], (v * grid.weights)[nz], grid.cell_radius[nz]

    def chunk(ys):
        d = np.linalg.norm(ys[:, None, :] - x[None], axis=-1)
        k = 1.0 / np.maximum(d, 1e-300)
        j = np.argmin(d, axis=1)
        rows = np.arange(len(ys))
        dj = d[rows, j]
        own = dj < rc[j]
        k[rows[own], j[own]] = ball_average_inverse_distance(dj[own], rc[j[own]])
        return k @ mass

    step = max(1, 2**21 // len(x))
    parts = [centers[s:s + step] for s in range(0, len(centers), step)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(chunk, parts))
    else:
        out = [chunk(p) for p in parts]
    return np.concatenate(out)


def kato_norm(V: Potential, grid: QuadratureGrid | None = None, centers=None, threads: int = 1) -> float:
    """Discrete global Kato norm: max over ``centers`` of :func:`kato_integrals`."""
    if grid is None:
        grid = default_grid(V)
    if centers is None:
        centers = default_centers(grid)
    return float(kato_integrals(V, grid, centers, threads=threads).max())


def radial_kato_integral(V: Potential, b: float, inner: float = 0.0, outer: float = np.inf) -> float:
    """``int_{inner < |x-y| < outer} |V(x)|/|x-y| dx`` for ``|y| = b``, by 1-D quadrature.

    For radial ``V`` the angular integral is closed form: the shell ``|x| = s``
    meets the annulus in a band whose ``|x-y|``-length gives a factor
    ``2 pi s / b`` times the overlap of ``[|s-b|, s+b]`` with ``[inner, outer]``.
    """
    S = V.integration_radius
    if V.is_zero or inner >= outer:
        return 0.0
    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-11)
    if b <= 1e-12:
        lo, hi = inner, min(outer, S)
        if hi <= lo:
            return 0.0
        pts = [p for p in V.breakpoints if lo < p < hi]
        val, _ = quad(lambda r: abs(float(V.radial(r))) * r, lo, hi, points=pts or None, **opts)
        return 4.0 * np.pi * val

    def overlap(s):
        return max(0.0, min(s + b, outer) - max(abs(s - b), inner))

    lo = max(0.0, inner - b)
    hi = min(S, outer + b)
    if hi <= lo:
        return 0.0
    kinks = {b, inner - b, inner + b, b - inner, outer - b, outer + b, b - outer, *V.breakpoints}
    pts = sorted(p for p in kinks if np.isfinite(p) and lo < p < hi)
    val, _ = quad(lambda s: abs(float(V.radial(s))) * s * overlap(s), lo, hi, points=pts or None, **opts)
    return 2.0 * np.pi / b * val


def _center_radii(V: Potential, centers) -> NDArray[np.float64]:
    if centers is None:
        return np.linspace(0.0, V.support_radius, 33)
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    return np.unique(np.linalg.norm(c, axis=1))


def local_kato_profile(V: Potential, deltas, centers=None) -> list[tuple[float, float]]:
    """``(delta, sup_y int_{|x-y|<delta} |V|/|x-y|)`` for each delta."""
    deltas = [float(d) for d in deltas]
    if any(not d > 0 for d in deltas):
        raise InvalidInputError("local_kato_profile: deltas must be positive")
    bs = _center_radii(V, centers)
    return [(d, max(radial_kato_integral(V, b, 0.0, d) for b in bs)) for d in deltas]


def distal_kato_profile(V: Potential, radii, centers=None) -> list[tuple[float, float]]:
    """``(R, sup_y int_{|x-y|>R} |V|/|x-y|)`` for each R."""
    radii = [float(r) for r in radii]
    if any(not r > 0 for r in radii):
        raise InvalidInputError("distal_kato_profile: radii must be positive")
    bs = _center_radii(V, centers)
    return [(R, max(radial_kato_integral(V, b, R, np.inf) for b in bs)) for R in radii]


@dataclass
class KatoReport:
    global_norm: float
    local_profile: list[tuple[float, float]]
    distal_profile: list[tuple[float, float]]
    argmax_center: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "global_norm": self.global_norm,
            "local_profile": [list(p) for p in self.local_profile],
            "distal_profile": [list(p) for p in self.distal_profile],
            "argmax_center": list(self.argmax_center),
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(self.local_profile) + list(self.distal_profile)


def kato_report(
    V: Potential,
    grid: QuadratureGrid | None = None,
    centers=None,
    deltas=(2.0, 1.0, 0.5, 0.25, 0.1),
    radii=(0.5, 1.0, 2.0, 3.0, 5.0),
    threads: int = 1,
) -> KatoReport:
    if grid is None:
        grid = default_grid(V)
    if centers is None:
        centers = default_centers(grid)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    vals = kato_integrals(V, grid, centers, threads=threads)
    k = int(np.argmax(vals))  # first maximum, index order
    prof_centers = centers if len(centers) <= 64 else None
    return KatoReport(
        global_norm=float(vals[k]),
        local_profile=local_kato_profile(V, sorted(deltas, reverse=True), prof_centers),
        distal_profile=distal_kato_profile(V, sorted(radii), prof_centers),
        argmax_center=tuple(float(c) for c in centers[k]),
    )
