"""Matrix-valued Wiener algebra on a uniform rho-grid.

An element ``z*1 + T`` is an identity coefficient ``z`` plus samples
``T(rho_k)`` (``d x d`` matrices) at ``rho_k = (k0 + m) h``.  Products are
convolution-compositions

    (S * T)(rho) = int S(rho - s) T(s) ds      ~  h sum_m S_{k-m} T_m,

the Fourier transform is ``T^(lam) = z I + h sum_k exp(-i lam rho_k) T_k``,
and the W-norm is the largest rho-integrated L1 column mass.

:func:`invert` builds ``(1 + T)^-1`` constructively: a high-frequency
Neumann series, window-local Neumann series around frozen symbols glued
by a partition of unity, and a power factorisation as a fallback.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from scipy import fft as sfft

from .errors import DivergenceError, InvalidInputError, ResolutionError, SpectralObstructionError

log = logging.getLogger(__name__)

MAX_TERMS = 200
MAX_PERIODIC_ENTRIES = 2**24


@dataclass(eq=False)
class WienerElement:
    """``identity_coeff * 1 + T`` with ``T`` sampled at ``(k0 + m) * h``."""

    identity_coeff: complex
    k0: int
    h: float
    samples: NDArray[np.complex128]

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[1] == 0:
            raise InvalidInputError("wiener: samples must have shape (n, d, d)")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise InvalidInputError("wiener: spacing h must be positive")
        if not np.all(np.isfinite(s)) or not np.isfinite(complex(self.identity_coeff)):
            raise InvalidInputError("wiener: non-finite entries")
        if len(s) == 0:
            s = np.zeros((1,) + s.shape[1:], dtype=complex)
        self.samples = s
        self.identity_coeff = complex(self.identity_coeff)
        self.k0 = int(self.k0)
        self.h = float(self.h)

    # -- construction --------------------------------------------------------
    @classmethod
    def from_function(cls, func, h: float, rho_min: float, rho_max: float, d: int | None = None,
                      identity_coeff: complex = 0.0) -> "WienerElement":
        """Sample ``func(rho) -> (d, d)`` (or scalar) at the multiples of ``h`` in ``[rho_min, rho_max]``."""
        k0 = int(np.ceil(rho_min / h - 1e-9))
        k1 = int(np.floor(rho_max / h + 1e-9))
        rhos = np.arange(k0, k1 + 1) * h
        vals = np.array([np.atleast_2d(func(r)) for r in rhos], dtype=complex)
        if d is not None and vals.shape[1] != d:
            raise InvalidInputError("wiener: function output does not match d")
        return cls(identity_coeff, k0, h, vals)

    @classmethod
    def zero(cls, d: int, h: float) -> "WienerElement":
        return cls(0.0, 0, h, np.zeros((1, d, d)))

    @classmethod
    def identity(cls, d: int, h: float) -> "WienerElement":
        return cls(1.0, 0, h, np.zeros((1, d, d)))

    # -- basic properties ------------------------------------------------------
    @property
    def d(self) -> int:
        return self.samples.shape[1]

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def rho_values(self) -> NDArray[np.float64]:
        return (self.k0 + np.arange(self.n)) * self.h

    def wnorm(self) -> float:
        """``max_j sum_k h sum_i |T_k[i, j]|`` (identity part excluded)."""
        return float(self.h * np.abs(self.samples).sum(axis=(0, 1)).max())

    def norm(self) -> float:
        """``|z| + W-norm(T)``."""
        return abs(self.identity_coeff) + self.wnorm()

    def copy(self) -> "WienerElement":
        return WienerElement(self.identity_coeff, self.k0, self.h, self.samples.copy())

    def without_identity(self) -> "WienerElement":
        return WienerElement(0.0, self.k0, self.h, self.samples)

    def trimmed(self, tol: float = 0.0) -> "WienerElement":
        """Drop end samples whose combined column mass is at most ``tol``."""
        mass = self.h * np.abs(self.samples).sum(axis=1)  # (n, d)
        if not mass.any():
            return WienerElement(self.identity_coeff, 0, self.h, np.zeros((1, self.d, self.d)))
        fwd = np.cumsum(mass, axis=0).max(axis=1)
        bwd = np.cumsum(mass[::-1], axis=0).max(axis=1)[::-1]
        half = tol / 2.0
        lo = int(np.searchsorted(fwd, half, side="right")) if tol > 0 else int(np.argmax(mass.any(axis=1)))
        hi_candidates = np.flatnonzero(bwd > half) if tol > 0 else np.flatnonzero(mass.any(axis=1))
        hi = int(hi_candidates.max()) if len(hi_candidates) else lo
        lo = min(lo, hi)
        return WienerElement(self.identity_coeff, self.k0 + lo, self.h, self.samples[lo:hi + 1])

    def _check(self, other: "WienerElement"):
        if self.d != other.d:
            raise InvalidInputError(f"wiener: dimension mismatch ({self.d} vs {other.d})")
        if not np.isclose(self.h, other.h, rtol=1e-12, atol=0):
            raise InvalidInputError(f"wiener: spacing mismatch ({self.h} vs {other.h})")

    def _aligned(self, other: "WienerElement"):
        self._check(other)
        lo = min(self.k0, other.k0)
        hi = max(self.k0 + self.n, other.k0 + other.n)
        a = np.zeros((hi - lo, self.d, self.d), dtype=complex)
        b = np.zeros_like(a)
        a[self.k0 - lo:self.k0 - lo + self.n] = self.samples
        b[other.k0 - lo:other.k0 - lo + other.n] = other.samples
        return lo, a, b

    def __add__(self, other: "WienerElement") -> "WienerElement":
        lo, a, b = self._aligned(other)
        return WienerElement(self.identity_coeff + other.identity_coeff, lo, self.h, a + b)

    def __sub__(self, other: "WienerElement") -> "WienerElement":
        return self + other * (-1.0)

    def __mul__(self, c) -> "WienerElement":
        c = complex(c)
        return WienerElement(self.identity_coeff * c, self.k0, self.h, self.samples * c)

    __rmul__ = __mul__

    def __neg__(self) -> "WienerElement":
        return self * (-1.0)

    def matmul_const(self, A, side: str = "right") -> "WienerElement":
        """``T A`` (side='right') or ``A T`` (side='left') for a constant matrix ``A``."""
        A = np.asarray(A, dtype=complex)
        if side == "right":
            s = self.samples @ A
        else:
            s = A @ self.samples
        z = self.identity_coeff
        out = WienerElement(0.0, self.k0, self.h, s)
        if z != 0:
            # z*1 times a matrix is not a scalar multiple of 1; callers keep z = 0
            raise InvalidInputError("wiener: matmul_const needs a zero identity coefficient")
        return out

    def shifted(self, steps: int) -> "WienerElement":
        """``rho -> T(rho - steps*h)``."""
        return WienerElement(self.identity_coeff, self.k0 + int(steps), self.h, self.samples)

    # -- serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        z = self.identity_coeff
        return {
            "d": self.d,
            "h_rho": self.h,
            "identity_coeff": [z.real, z.imag],
            "rho_values": self.rho_values.tolist(),
            "matrices": np.stack([self.samples.real, self.samples.imag], axis=-1).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WienerElement":
        try:
            h = float(doc["h_rho"])
            d = int(doc["d"])
            rhos = np.asarray(doc["rho_values"], dtype=float)
            m = np.asarray(doc["matrices"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"wiener: malformed element document ({exc})") from None
        if m.shape != (len(rhos), d, d, 2):
            raise InvalidInputError("wiener: matrices must be a list of d x d arrays of [re, im] pairs")
        k = np.rint(rhos / h)
        if len(k) and (not np.allclose(k * h, rhos, atol=1e-9 * max(1.0, h)) or np.any(np.diff(k) != 1)):
            raise InvalidInputError("wiener: rho_values must be consecutive multiples of h_rho")
        z = doc.get("identity_coeff", [0.0, 0.0])
        return cls(complex(z[0], z[1]), int(k[0]) if len(k) else 0, h, m[..., 0] + 1j * m[..., 1])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "WienerElement":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# algebra operations


def convolve(S: WienerElement, T: WienerElement) -> WienerElement:
    """``(z1 1 + S)(z2 1 + T) = z1 z2 1 + z1 T + z2 S + S * T``."""
    S._check(T)
    n = S.n + T.n - 1
    nf = sfft.next_fast_len(n)
    Sf = sfft.fft(S.samples, nf, axis=0)
    Tf = sfft.fft(T.samples, nf, axis=0)
    st = sfft.ifft(Sf @ Tf, axis=0)[:n] * S.h
    out = WienerElement(S.identity_coeff * T.identity_coeff, S.k0 + T.k0, S.h, st)
    if T.identity_coeff != 0:
        out = out + WienerElement(0.0, S.k0, S.h, S.samples * T.identity_coeff)
    if S.identity_coeff != 0:
        out = out + WienerElement(0.0, T.k0, T.h, T.samples * S.identity_coeff)
    return out


def power(T: WienerElement, N: int) -> WienerElement:
    """N-fold convolution product; the rho-support grows as needed."""
    if int(N) != N or N < 1:
        raise InvalidInputError("wiener: power needs an integer N >= 1")
    out = T
    for _ in range(int(N) - 1):
        out = convolve(out, T)
    return out


def fourier(T: WienerElement, lam) -> NDArray[np.complex128]:
    """``z I + h sum_k exp(-i lam rho_k) T_k``; vectorised over ``lam``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(np.abs(lam_arr) * T.h >= np.pi):
        raise ResolutionError(f"wiener: |lambda| h = {np.abs(lam_arr).max() * T.h:.3g} violates the Nyquist guard")
    ph = np.exp(-1j * np.outer(lam_arr, T.rho_values)) * T.h
    out = np.einsum("lk,kij->lij", ph, T.samples) + T.identity_coeff * np.eye(T.d)
    return out[0] if np.ndim(lam) == 0 else out


def l1_operator_norm(A) -> float:
    """Operator norm on ``l1``: max column sum."""
    return float(np.abs(np.asarray(A)).sum(axis=-2).max())


def check_C1(T: WienerElement, deltas) -> list[tuple[float, float]]:
    """``(delta, W-norm(T - T(. - delta)))``; deltas must be multiples of ``h``."""
    out = []
    for dlt in deltas:
        s = dlt / T.h
        if abs(s - round(s)) > 1e-9 * max(1.0, abs(s)):
            raise InvalidInputError(f"check_C1: delta={dlt} is not a multiple of h={T.h}")
        diff = T.without_identity() - T.without_identity().shifted(int(round(s)))
        out.append((float(dlt), diff.wnorm()))
    return out


def check_C2(T: WienerElement, radii) -> list[tuple[float, float]]:
    """``(R, W-norm(T chi_{|rho| >= R}))``."""
    rho = np.abs(T.rho_values)
    out = []
    for R in radii:
        mask = rho >= R - 1e-12 * max(1.0, abs(R))
        out.append((float(R), float(T.h * np.abs(T.samples[mask]).sum(axis=(0, 1)).max()) if mask.any() else 0.0))
    return out


def residual(S: WienerElement, T: WienerElement) -> tuple[float, float]:
    """Two-sided ``W-norm((1+S)(1+T) - 1)`` and ``W-norm((1+T)(1+S) - 1)``."""
    one = WienerElement.identity(T.d, T.h)
    A, B = one + S.without_identity(), one + T.without_identity()
    r1 = convolve(A, B) - one
    r2 = convolve(B, A) - one
    return r1.norm(), r2.norm()


# ---------------------------------------------------------------------------
# cutoff profile


def smoothstep(u):
    """Quintic ``6u^5 - 15u^4 + 10u^3`` clamped to ``[0, 1]`` (C^2 at both ends)."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


@dataclass
class CutoffProfile:
    """``eta(lam / L)`` with ``eta = 1`` on ``[-1/2, 1/2]`` and ``0`` outside ``[-1, 1]``."""

    L: float = 1.0
    kind: str = "quintic"
    table_points: int = 257
    lam_table: NDArray = field(init=False, repr=False)
    eta_table: NDArray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidInputError("cutoff: L must be positive")
        if self.kind != "quintic":
            raise InvalidInputError(f"cutoff: unknown kind {self.kind!r}")
        self.lam_table = np.linspace(-1.25 * self.L, 1.25 * self.L, self.table_points)
        self.eta_table = self(self.lam_table)

    @staticmethod
    def eta(x):
        x = np.abs(np.asarray(x, dtype=float))
        return 1.0 - smoothstep(2.0 * x - 1.0)

    def __call__(self, lam):
        return self.eta(np.asarray(lam, dtype=float) / self.L)

    def with_scale(self, L: float) -> "CutoffProfile":
        return CutoffProfile(L, self.kind, self.table_points)

    def kernel(self, n: int, h: float) -> NDArray[np.float64]:
        """``L eta^(L rho)`` tabulated on the periodic grid ``rho = k h`` (index ``k mod n``)."""
        lam = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
        return np.fft.ifft(self(lam)).real / h


def partition_bump(u):
    """``1 - smoothstep(|u|)``; its integer translates sum to one."""
    return 1.0 - smoothstep(np.abs(np.asarray(u, dtype=float)))


# ---------------------------------------------------------------------------
# constructive inversion


class _Periodic:
    """Elements on the periodic grid ``k h``, ``k`` in ``[-n/2, n/2)``, stored at ``k mod n``."""

    def __init__(self, n: int, h: float, d: int):
        self.n, self.h, self.d = n, h, d
        self.lam = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
        self.dlam = 2.0 * np.pi / (n * h)

    def embed(self, T: WienerElement) -> NDArray:
        a = np.zeros((self.n, self.d, self.d), dtype=complex)
        idx = (T.k0 + np.arange(T.n)) % self.n
        np.add.at(a, idx, T.samples)
        return a

    def symbol(self, a: NDArray) -> NDArray:
        return self.h * sfft.fft(a, axis=0)

    def samples(self, sym: NDArray) -> NDArray:
        return sfft.ifft(sym, axis=0) / self.h

    def wnorm_sym(self, sym: NDArray) -> float:
        return float(self.h * np.abs(self.samples(sym)).sum(axis=(0, 1)).max())

    def element(self, sym: NDArray) -> WienerElement:
        a = self.samples(sym)
        half = self.n // 2
        a = np.concatenate([a[half:], a[:half]])  # k = -n/2 .. n/2-1
        return WienerElement(0.0, -half, self.h, a)


def _neumann(P: _Periodic, first: NDArray, Q: NDArray, eps: float, label: str) -> tuple[NDArray, int]:
    """``sum_{k>=1} first Q^{k-1}`` in the symbol domain, stopping at W-norm < eps/10."""
    term = first
    acc = np.zeros_like(first)
    for k in range(1, MAX_TERMS + 1):
        acc += term
        if P.wnorm_sym(term) < eps / 10.0:
            return acc, k
        term = term @ Q
    raise DivergenceError(f"wiener.invert: {label} Neumann series did not converge in {MAX_TERMS} terms")


def _stage1(P: _Periodic, That: NDArray, cutoff: CutoffProfile, L_floor: float, L_cap: float, eps: float):
    """Find ``L1`` with W-norm(S_L) < 1/2; return it and the high-frequency symbol part."""
    L = L_floor
    while True:
        SL = (1.0 - cutoff.with_scale(L)(P.lam))[:, None, None] * That
        w = P.wnorm_sym(SL)
        log.debug("stage1: L=%.4g  W(S_L)=%.4g", L, w)
        if w < 0.5:
            break
        if L >= L_cap:
            return None, None, None
        L = min(2.0 * L, L_cap)
    # (1 - eta(lam/2L)) * (I + S_L)^-1 - (1 - eta(lam/2L)) I, as  Y - eta_2L Y  with Y = sum (-S_L)^k
    Y, terms = _neumann(P, -SL, -SL, eps, "high-frequency")
    high = (1.0 - cutoff.with_scale(2.0 * L)(P.lam))[:, None, None]
    eye = np.eye(P.d)
    return L, high * (eye + Y) - high * eye, terms


def _stage2(P: _Periodic, That: NDArray, T: WienerElement, cutoff: CutoffProfile, L1: float, eps: float):
    """Local Neumann series on windows covering ``[-2 L1, 2 L1]``; returns the summed symbol."""
    nyq = np.pi / P.h
    span = min(2.0 * L1, nyq)
    s = span / 2.0
    eye = np.eye(P.d)
    outer = cutoff.with_scale(2.0 * L1)(P.lam)
    while True:
        if s < 4.0 * P.dlam:
            raise ResolutionError(
                f"wiener.invert: window width {s:.3g} fell below 4 x lambda resolution {P.dlam:.3g}")
        m = int(np.ceil(span / s))
        centers = s * np.arange(-m, m + 1)
        windows, pieces, ok = [], np.zeros_like(That), True
        for c in centers:
            phi = outer * partition_bump((P.lam - c) / s)
            if not phi.any():
                continue
            A = eye + (fourier(T, c) if abs(c) * P.h < np.pi else That[np.argmin(np.abs(P.lam - c))])
            Ainv = np.linalg.inv(A)
            ainv_norm = l1_operator_norm(Ainv)
            Sj = cutoff.with_scale(2.0 * s)(P.lam - c)[:, None, None] * (That - (A - eye))
            wj = P.wnorm_sym(Sj)
            if wj * ainv_norm >= 0.5:
                ok = False
                break
            Q = -Sj @ Ainv
            tail, terms = _neumann(P, Ainv @ Q, Q, eps, f"window {c:.4g}")
            pieces += phi[:, None, None] * (Ainv + tail)
            windows.append({"center": float(c), "width": float(s), "neumann_terms": int(terms),
                            "a0_cond": float(l1_operator_norm(A) * ainv_norm)})
        if ok:
            return pieces, windows
        s /= 2.0


def _symbol_floor(P: _Periodic, That: NDArray, T: WienerElement, lam_grid, sv_floor: float):
    eye = np.eye(P.d)
    sv = np.linalg.svd(eye + That, compute_uv=False)[:, -1]
    i = int(np.argmin(sv))
    worst_lam, worst = float(P.lam[i]), float(sv[i])
    if lam_grid is not None:
        lg = np.asarray(lam_grid, dtype=float)
        lg = lg[np.abs(lg) * T.h < np.pi]
        if len(lg):
            sv2 = np.linalg.svd(eye + fourier(T, lg), compute_uv=False)[:, -1]
            j = int(np.argmin(sv2))
            if sv2[j] < worst:
                worst_lam, worst = float(lg[j]), float(sv2[j])
    if worst < sv_floor:
        raise SpectralObstructionError(
            f"wiener.invert: I + T^(lambda) is singular to tolerance at lambda={worst_lam:.6g} "
            f"(min singular value {worst:.3g})", lam=worst_lam)
    return worst


def _default_n(T: WienerElement, n_fft: int | None) -> int:
    span = max(abs(T.k0), abs(T.k0 + T.n - 1)) + 1
    need = max(8 * span, 4096) if n_fft is None else max(int(n_fft), 4 * span)
    return 1 << int(np.ceil(np.log2(need)))


def _invert_core(T, cutoff, lam_grid, tol, sv_floor, n_fft, allow_power, max_power):
    P = _Periodic(_default_n(T, n_fft), T.h, T.d)
    That = P.symbol(P.embed(T))
    min_sv = _symbol_floor(P, That, T, lam_grid, sv_floor)
    rho_max = max(np.abs(T.rho_values).max(), T.h)
    L_floor = 1.0 / rho_max
    L_cap = min(2.0**16 / rho_max, np.pi / T.h)
    L1, high, hterms = _stage1(P, That, cutoff, L_floor, L_cap, tol)
    info = {"min_singular": min_sv, "n_fft": P.n}
    if L1 is None:
        if not allow_power:
            raise ResolutionError("wiener.invert: high-frequency stage found no L with W(S_L) < 1/2")
        for N in range(2, max_power + 1):
            U = power(T, N) * (-1.0) ** (N + 1)
            U = U.trimmed(1e-3 * tol)
            try:
                SU, sub = _invert_core(U, cutoff, None, tol, sv_floor, n_fft, False, 1)
            except ResolutionError:
                continue
            # (1 + T)^-1 = (1 + S_U) * sum_{k<N} (-T)^k
            one = WienerElement.identity(T.d, T.h)
            series, term = one, one
            for _ in range(1, N):
                term = convolve(term, -T.without_identity())
                series = series + term
            full = convolve(one + SU, series)
            S = (full - one).without_identity().trimmed(1e-3 * tol)
            info.update(sub)
            info["power"] = N
            return S, info
        raise ResolutionError(f"wiener.invert: no power N <= {max_power} made the high-frequency stage contract")
    while True:
        try:
            local, windows = _stage2(P, That, T, cutoff, L1, tol)
            break
        except ResolutionError:
            # finer lambda resolution needs a longer periodic rho-domain
            if P.n * P.d * P.d >= MAX_PERIODIC_ENTRIES:
                raise
            P = _Periodic(2 * P.n, T.h, T.d)
            That = P.symbol(P.embed(T))
            L1, high, hterms = _stage1(P, That, cutoff, L_floor, L_cap, tol)
            if L1 is None:
                raise
    info.update({"L1": float(L1), "high_frequency_terms": int(hterms), "windows": windows, "power": 1})
    sym = high + local - np.eye(T.d) * cutoff.with_scale(2.0 * L1)(P.lam)[:, None, None]
    S = P.element(sym).trimmed(1e-3 * tol)
    return S, info


def invert(
    T: WienerElement,
    cutoff: CutoffProfile | None = None,
    lam_grid=None,
    tol: float = 1e-6,
    sv_floor: float = 1e-6,
    n_fft: int | None = None,
    max_power: int = 8,
    return_log: bool = False,
):
    """Return ``S`` with ``1 + S ~ (1 + T)^-1`` (the identity coefficient of ``T`` is folded in).

    Stages: (1) double ``L`` from ``1/rho_max`` until the high-pass part
    ``S_L`` of ``T`` has W-norm below 1/2 and sum its Neumann series;
    (2) cover ``[-2 L1, 2 L1]`` with windows of width ``s`` (halved until
    ``W(S_j) ||A_j^-1|| < 1/2``) and sum a local Neumann series in each;
    (3) glue the pieces with a partition of unity; (4) if (1) fails, apply
    the same to ``(-1)^(N+1) T^N`` for ``N <= max_power`` and multiply by
    ``sum_{k<N} (-T)^k``.

    Raises
    ------
    SpectralObstructionError
        ``I + T^(lam)`` has min singular value below ``sv_floor``.
    ResolutionError
        window width underflow, or no contracting power.
    DivergenceError
        a Neumann series needs more than 200 terms.
    """
    cutoff = cutoff or CutoffProfile()
    z = T.identity_coeff
    if z != 0:
        c = 1.0 + z
        if c == 0:
            raise SpectralObstructionError("wiener.invert: element has no identity part to invert around")
        scaled = WienerElement(0.0, T.k0, T.h, T.samples / c)
        S1, info = invert(scaled, cutoff, lam_grid, tol, sv_floor, n_fft, max_power, return_log=True)
        # (c(1 + T/c))^-1 = (1 + S1)/c  ->  S = (1 + S1)/c - 1
        S = WienerElement(1.0 / c - 1.0, S1.k0, S1.h, S1.samples / c)
        return (S, info) if return_log else S
    if not np.any(T.samples):
        S = WienerElement.zero(T.d, T.h)
        info = {"L1": None, "windows": [], "residual": 0.0, "power": 0}
        return (S, info) if return_log else S
    S, info = _invert_core(T, cutoff, lam_grid, tol, sv_floor, n_fft, True, max_power)
    r1, r2 = residual(S, T)
    info["residual"] = max(r1, r2)
    info["residual_left"], info["residual_right"] = r1, r2
    log.info("wiener.invert: L1=%s windows=%d residual=%.3g", info.get("L1"), len(info.get("windows", [])),
             info["residual"])
    return (S, info) if return_log else S
