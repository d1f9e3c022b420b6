"""Time evolution ``exp(-itH)`` for ``H = -Laplacian + V`` in a Dirichlet box.

Two box geometries are supported:

``cartesian``
    the 7-point Laplacian on ``points_per_axis^3`` interior nodes of a cube.
    ``V = 0`` is diagonalised exactly by the type-I sine transform; small
    boxes use a dense eigensolver; large boxes with ``V != 0`` find the bound
    states with LOBPCG and evolve with a Krylov matrix exponential.
``radial``
    the s-wave reduction ``u = r psi`` on ``(0, R)`` with ``u(0) = u(R) = 0``,
    a tridiagonal problem that fits far larger boxes (and hence later times)
    than the Cartesian cube.

The module also carries the free kernel and the ``K`` / ``K-check`` pair that
appear in the Stone-formula representation of the propagator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.fft import dstn, idstn
from scipy.integrate import trapezoid
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator, expm_multiply, lobpcg

from .errors import InvalidInputError, ResolutionError, WindowError
from .potential import Potential
from .resolvent import resolvent_identity_residual as resolvent_identity_offaxis  # noqa: F401

log = logging.getLogger(__name__)

FREE_PREFACTOR = (4.0 * np.pi) ** -1.5


# ---------------------------------------------------------------------------
# kernels


def free_propagator_kernel(t: float, x, y) -> complex:
    """``(-4 pi i t)^(-3/2) exp(i |x-y|^2 / 4t)``."""
    if t == 0:
        raise InvalidInputError("free_propagator_kernel: t must be nonzero")
    d2 = float(np.sum((np.asarray(x, float) - np.asarray(y, float)) ** 2))
    return complex((-4j * np.pi * t) ** -1.5 * np.exp(1j * d2 / (4.0 * t)))


def K_kernel(t: float, lam, d):
    """``K(lam, x, y) = (-4 pi i)^-1 exp(-i t lam^2 + i lam |x-y|)``."""
    lam = np.asarray(lam, dtype=float)
    return np.exp(-1j * t * lam**2 + 1j * lam * d) / (-4j * np.pi)


def K_check_kernel(t: float, rho, d):
    """Inverse Fourier transform ``(1/2pi) int K exp(i lam rho) dlam`` in closed form.

    Equals ``exp(i pi/4) exp(i (rho+d)^2 / 4t) / (8 pi^(3/2) sqrt(t))`` for
    ``t > 0``; its modulus is ``(64 pi^3 |t|)^(-1/2)`` for every argument.
    """
    if t == 0:
        raise InvalidInputError("K_check_kernel: t must be nonzero")
    s = np.asarray(rho, dtype=float) + d
    return 1j / (8.0 * np.pi**1.5) * (1j * t) ** -0.5 * np.exp(1j * s**2 / (4.0 * t))


def K_check_modulus(t: float) -> float:
    return (64.0 * np.pi**3 * abs(t)) ** -0.5


def _regularised_inverse_ft(t, rho, d, eps, dlam):
    lam_max = np.sqrt(40.0 / eps)
    n = int(np.ceil(lam_max / dlam))
    lam = np.arange(-n, n + 1) * dlam
    vals = K_kernel(t, lam, d) * np.exp(-eps * lam**2 + 1j * lam * rho)
    return trapezoid(vals, lam) / (2.0 * np.pi)


def k_kernel_pair_check(t: float, samples, eps=(1e-2, 1e-3), dlam: float | None = None) -> dict:
    """Compare a numerical inverse Fourier transform of ``K`` with ``K-check``.

    For each ``(rho, d)`` the transform of ``K exp(-eps lam^2)`` is computed
    by the trapezoid rule for both ``eps`` values and extrapolated linearly to
    ``eps = 0``.  Returns the modulus error of the closed form (exactly zero up
    to rounding) and the max relative deviation of the numerical transform.
    """
    if t == 0:
        raise InvalidInputError("k_kernel_pair_check: t must be nonzero")
    samples = [(float(r), float(d)) for r, d in samples]
    e1, e2 = sorted(eps, reverse=True)
    fresnel = np.sqrt(np.pi / abs(t)) / 8.0
    reach = max(abs(r) + abs(d) for r, d in samples)
    phase = 2.0 * abs(t) * np.sqrt(40.0 / e2) + reach
    need = min(fresnel, 2.0 * np.pi / (16.0 * phase))
    if dlam is None:
        dlam = need
    elif dlam > need:
        raise ResolutionError(f"k_kernel_pair_check: dlam={dlam:.3g} does not resolve the phase (need <= {need:.3g})")
    rel, mod = [], []
    for rho, d in samples:
        a = _regularised_inverse_ft(t, rho, d, e1, dlam)
        b = _regularised_inverse_ft(t, rho, d, e2, dlam)
        extrap = (e1 * b - e2 * a) / (e1 - e2)
        ref = complex(K_check_kernel(t, rho, d))
        rel.append(abs(extrap - ref) / abs(ref))
        mod.append(abs(abs(ref) - K_check_modulus(t)) / K_check_modulus(t))
    return {"t": t, "max_relative_deviation": float(max(rel)), "modulus_error": float(max(mod)),
            "per_sample": [float(r) for r in rel], "dlam": float(dlam)}


# ---------------------------------------------------------------------------
# boxes and spectral splits


@dataclass(frozen=True)
class BoxSpec:
    """Dirichlet box.  For ``geometry='radial'`` ``side`` is the outer radius."""

    side: float = 16.0
    points_per_axis: int = 64
    dirichlet: bool = True
    geometry: str = "cartesian"
    max_points: int = 2**21

    def __post_init__(self):
        if not self.dirichlet:
            raise InvalidInputError("box: only Dirichlet walls are implemented")
        if self.geometry not in ("cartesian", "radial"):
            raise InvalidInputError(f"box: unknown geometry {self.geometry!r}")
        if not (self.side > 0 and self.points_per_axis >= 4):
            raise InvalidInputError("box: need side > 0 and points_per_axis >= 4")

    @property
    def h(self) -> float:
        return self.side / (self.points_per_axis + 1)

    @property
    def n_points(self) -> int:
        n = self.points_per_axis
        return n**3 if self.geometry == "cartesian" else n

    def axis(self) -> NDArray[np.float64]:
        i = np.arange(1, self.points_per_axis + 1) * self.h
        return i - self.side / 2.0 if self.geometry == "cartesian" else i

    def scaled(self, factor: float) -> "BoxSpec":
        return BoxSpec(self.side * factor, self.points_per_axis, True, self.geometry, self.max_points)

    def to_dict(self) -> dict:
        return {"side": self.side, "points_per_axis": self.points_per_axis, "dirichlet": True,
                "geometry": self.geometry}

    def mode_spacing(self) -> float:
        """Gap between the two lowest free Dirichlet modes."""
        n, h = self.points_per_axis, self.h
        ev = (2.0 - 2.0 * np.cos(np.pi * np.arange(1, 3) / (n + 1))) / h**2
        return float(ev[1] - ev[0])


@dataclass
class SpectralSplit:
    """Discrete ``H`` with its point-spectrum indices.

    ``eigenvectors`` is ``None`` for the sine-transform and Krylov methods,
    where the full basis is never formed; ``eigenvalues`` then holds the
    free spectrum (sine transform) or only the computed lowest states.
    """

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64] | None
    pp_indices: NDArray[np.int64]
    projector_rank: int
    box: BoxSpec
    method: str
    eps_box: float
    weights: NDArray[np.float64] | float
    potential: NDArray[np.float64] = field(repr=False, default=None)
    _H: object = field(repr=False, default=None)

    @property
    def pp_eigenvalues(self) -> NDArray[np.float64]:
        return self.eigenvalues[self.pp_indices]

    def coords(self) -> NDArray[np.float64]:
        ax = self.box.axis()
        if self.box.geometry == "radial":
            return ax
        X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.stack([X, Y, Z], axis=-1).reshape(-1, 3)

    def radius(self) -> NDArray[np.float64]:
        c = self.coords()
        return c if c.ndim == 1 else np.linalg.norm(c, axis=1)

    def inner(self, a, b) -> complex:
        return complex(np.sum(self.weights * np.conj(a) * b))

    def project_out(self, f) -> NDArray:
        """``(I - P_pp) f`` with the weighted inner product."""
        f = np.asarray(f)
        if self.projector_rank == 0:
            return f.copy()
        P = self._pp_vectors()
        return f - P @ (P.T @ (self.weights * f))

    def _pp_vectors(self) -> NDArray:
        if self.method == "krylov":
            return self.eigenvectors
        return self.eigenvectors[:, self.pp_indices]

    def evolve(self, f, times, project: bool = True) -> NDArray[np.complex128]:
        """``exp(-i t H) g`` for each time, ``g = (I - P_pp) f`` or ``f``; rows are times."""
        g = self.project_out(f) if project else np.asarray(f, dtype=float)
        times = np.asarray(times, dtype=float)
        if self.method == "dst":
            n = self.box.points_per_axis
            E = _free_symbol(self.box)
            c = dstn(g.reshape(n, n, n), type=1)
            return np.array([idstn(c * np.exp(-1j * E * t), type=1).ravel() for t in times])
        if self.method in ("dense", "radial"):
            Q = self.eigenvectors
            c = Q.T @ (self.weights * g)
            lam = self.eigenvalues
            keep = np.ones(len(lam), bool)
            if project:
                keep[self.pp_indices] = False
            out = np.array([Q[:, keep] @ (c[keep] * np.exp(-1j * lam[keep] * t)) for t in times])
            return out
        # krylov: march between consecutive times
        H = self._H
        out = np.empty((len(times), len(g)), dtype=complex)
        order = np.argsort(np.abs(times))
        u, t_prev = g.astype(complex), 0.0
        for i in order:
            u = expm_multiply(-1j * (times[i] - t_prev) * H, u)
            out[i] = u
            t_prev = times[i]
        return out

    def physical(self, u) -> NDArray:
        """Wavefunction values: ``u / r`` in the radial geometry, ``u`` otherwise."""
        return u / self.box.axis() if self.box.geometry == "radial" else u


def _free_symbol(box: BoxSpec) -> NDArray[np.float64]:
    n, h = box.points_per_axis, box.h
    ev = (2.0 - 2.0 * np.cos(np.pi * np.arange(1, n + 1) / (n + 1))) / h**2
    return ev[:, None, None] + ev[None, :, None] + ev[None, None, :]


def _box_potential(V: Potential, box: BoxSpec) -> NDArray[np.float64]:
    if box.geometry == "radial":
        r, h = box.axis(), box.h
        o = (np.arange(16) + 0.5) / 16 - 0.5
        return V.radial(np.abs(r[:, None] + h * o[None])).mean(axis=1)
    ax = box.axis()
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    pts = np.stack([X, Y, Z], -1).reshape(-1, 3)
    v = np.zeros(len(pts))
    near = np.linalg.norm(pts, axis=1) <= V.integration_radius + box.h
    if near.any() and not V.is_zero:
        v[near] = V.cell_average(pts[near], box.h)
    return v


def _laplacian(box: BoxSpec):
    n, h = box.points_per_axis, box.h
    D = sparse.diags([np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)], [-1, 0, 1]) / h**2
    eye = sparse.identity(n)
    return (sparse.kron(sparse.kron(D, eye), eye) + sparse.kron(sparse.kron(eye, D), eye)
            + sparse.kron(sparse.kron(eye, eye), D)).tocsr()


def discretize_H(V: Potential, box: BoxSpec | None = None, dense_limit: int = 4096,
                 eps_box: float | None = None, seed: int = 0) -> SpectralSplit:
    """Assemble and (partially) diagonalise ``H = -Laplacian + V`` in ``box``.

    Eigenvalues below ``-eps_box`` (default three times the lowest free mode
    gap) are classed as point spectrum.
    """
    box = box or BoxSpec()
    if box.n_points > box.max_points:
        raise InvalidInputError(f"discretize_H: {box.n_points} grid points exceed the cap {box.max_points}")
    if box.side < 8.0 * V.support_radius and not V.is_zero:
        log.warning("discretize_H: box side %.3g is below 8x the support radius %.3g", box.side, V.support_radius)
    eps = 3.0 * box.mode_spacing() if eps_box is None else float(eps_box)
    h = box.h
    if box.geometry == "radial":
        v = _box_potential(V, box)
        n = box.points_per_axis
        lam, Q = eigh_tridiagonal(2.0 / h**2 + v, np.full(n - 1, -1.0 / h**2))
        w = 4.0 * np.pi * h
        Q = Q / np.sqrt(w)
        pp = np.flatnonzero(lam < -eps)
        return SpectralSplit(lam, Q, pp, len(pp), box, "radial", eps, w, v)
    w = h**3
    if V.is_zero:
        lam = np.sort(_free_symbol(box).ravel())
        return SpectralSplit(lam, None, np.array([], dtype=np.int64), 0, box, "dst", eps, w,
                             np.zeros(box.n_points))
    v = _box_potential(V, box)
    H = _laplacian(box) + sparse.diags(v)
    if box.n_points <= dense_limit:
        lam, Q = eigh(H.toarray())
        Q = Q / np.sqrt(w)
        pp = np.flatnonzero(lam < -eps)
        return SpectralSplit(lam, Q, pp, len(pp), box, "dense", eps, w, v, H)
    lam, Q = _lowest_states(H, box, v, eps, seed)
    pp = np.flatnonzero(lam < -eps)
    Q = Q[:, pp] / np.sqrt(w)
    return SpectralSplit(lam, Q, pp, len(pp), box, "krylov", eps, w, v, H.tocsr())


def _lowest_states(H, box: BoxSpec, v, eps, seed, k: int = 4):
    """LOBPCG with a shifted free-Laplacian preconditioner; grows ``k`` until a
    computed eigenvalue lies above ``-eps`` (so every bound state is caught)."""
    n = box.points_per_axis
    E = _free_symbol(box)
    shift = float(max(0.0, -v.min())) + 1.0

    def prec(x):
        x = np.asarray(x)
        xx = x.reshape(n, n, n, -1)
        out = np.empty_like(xx)
        for j in range(xx.shape[-1]):
            out[..., j] = idstn(dstn(xx[..., j], type=1) / (E + shift), type=1)
        return out.reshape(x.shape)

    M = LinearOperator(H.shape, matvec=prec, matmat=prec, dtype=float)
    rng = np.random.default_rng(seed)
    while True:
        X0 = rng.standard_normal((H.shape[0], k))
        lam, Q = lobpcg(H, X0, M=M, largest=False, tol=1e-9, maxiter=400)
        order = np.argsort(lam)
        lam, Q = lam[order], Q[:, order]
        if lam[-1] >= -eps or k >= 64:
            return lam, Q
        k *= 2


# ---------------------------------------------------------------------------
# decay measurement


@dataclass
class DecayReport:
    times: list[float]
    sup_norms: list[float]
    fitted_slope: float
    fit_window: tuple[float, float]
    residual: float
    prefactor: float
    pp_rank: int
    l2_norms: list[float] = field(default_factory=list)

    def csv_rows(self):
        return list(zip(self.times, self.sup_norms))

    def summary(self) -> dict:
        return {"fitted_slope": self.fitted_slope, "fit_window": list(self.fit_window),
                "residual": self.residual, "pp_rank": self.pp_rank, "prefactor": self.prefactor,
                "prefactor_over_free": self.prefactor / FREE_PREFACTOR}


def default_bump_width(split: SpectralSplit) -> float:
    return split.box.h if split.box.geometry == "cartesian" else 5.0 * split.box.h


def initial_bump(split: SpectralSplit, width: float | None = None) -> NDArray[np.float64]:
    """Gaussian centred at the origin, normalised to unit L1 mass on the grid."""
    width = default_bump_width(split) if width is None else width
    r = split.radius()
    f = np.exp(-0.5 * (r / width) ** 2)
    if split.box.geometry == "radial":
        return f * r / (4.0 * np.pi * np.sum(f * r**2) * split.box.h)  # stored as u = r psi
    return f / (f.sum() * split.box.h**3)


def validity_window(split: SpectralSplit, width: float, support_radius: float = 0.0) -> tuple[float, float]:
    """Times after the bump has dispersed and before wall echoes return.

    Lower end: ``2 w^2`` (and ``(2a)^2`` for a potential of support radius
    ``a``, once waves have crossed the well).  Upper end: ``w * side / 6``
    for the cube and ``w * R / 8`` for the radial box.
    """
    box = split.box
    t_min = 2.0 * width**2
    if support_radius > 0:
        t_min = max(t_min, (2.0 * support_radius) ** 2)
    t_max = width * box.side / 6.0 if box.geometry == "cartesian" else width * box.side / 8.0
    return t_min, t_max


def evolve_and_fit(
    split: SpectralSplit,
    f=None,
    times=None,
    project: bool = True,
    width: float | None = None,
    support_radius: float | None = None,
    n_times: int = 16,
) -> DecayReport:
    """Evolve ``(I - P_pp) f`` and fit ``log sup|u(t)|`` against ``log t``.

    With ``times=None`` a 16-point geometric ladder spanning the validity
    window is used; explicit times are filtered to the window.
    """
    width = default_bump_width(split) if width is None else width
    if f is None:
        f = initial_bump(split, width)
    f = np.asarray(f, dtype=float)
    if support_radius is None:
        support_radius = 0.0 if not np.any(split.potential) else _support_of(split)
    t_lo, t_hi = validity_window(split, width, support_radius)
    if t_hi <= t_lo:
        raise WindowError(f"evolve_and_fit: empty validity window [{t_lo:.3g}, {t_hi:.3g}] "
                          "(enlarge the box or use geometry 'radial')")
    if times is None:
        times = np.geomspace(t_lo, t_hi, n_times)
    else:
        times = np.asarray(times, dtype=float)
        times = times[(np.abs(times) >= t_lo * (1 - 1e-12)) & (np.abs(times) <= t_hi * (1 + 1e-12))]
    if len(times) < 3:
        raise WindowError("evolve_and_fit: fewer than three times survive the validity window")
    times = np.sort(times)
    U = split.evolve(f, times, project=project)
    phys = split.physical(U)
    sup = np.abs(phys).max(axis=1)
    l2 = np.sqrt(np.sum(split.weights * np.abs(U) ** 2, axis=1))
    mass = float(np.sum(np.abs(split.physical(f)) * _l1_weights(split)))
    A = np.vstack([np.log(np.abs(times)), np.ones(len(times))]).T
    coef, *_ = np.linalg.lstsq(A, np.log(sup / mass), rcond=None)
    res = np.log(sup / mass) - A @ coef
    return DecayReport(
        times=times.tolist(), sup_norms=sup.tolist(), fitted_slope=float(coef[0]),
        fit_window=(float(times[0]), float(times[-1])), residual=float(np.sqrt(np.mean(res**2))),
        prefactor=float(np.exp(coef[1])), pp_rank=split.projector_rank if project else 0,
        l2_norms=l2.tolist())


def _l1_weights(split: SpectralSplit):
    if split.box.geometry == "radial":
        r = split.box.axis()
        return 4.0 * np.pi * r**2 * split.box.h
    return split.box.h**3


def _support_of(split: SpectralSplit) -> float:
    r = split.radius()
    nz = np.flatnonzero(split.potential)
    return float(r[nz].max()) if len(nz) else 0.0
