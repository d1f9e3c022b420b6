"""Independent reference computations.

Nothing here imports the package: each oracle solves its problem by a
different route (1-D quadrature, shooting, closed forms) so agreement is
evidence rather than tautology.
"""
import numpy as np
from scipy import integrate, optimize


def well_kato_at_origin(radius=1.0, depth=1.0):
    """4 pi |c| int_0^a r dr."""
    return 4 * np.pi * abs(depth) * integrate.quad(lambda r: r, 0, radius)[0]


def local_kato_at_origin(vfun, delta):
    return 4 * np.pi * integrate.quad(lambda r: abs(vfun(r)) * r, 0, delta, limit=200)[0]


def distal_kato_at_origin(vfun, R, upper=np.inf):
    return 4 * np.pi * integrate.quad(lambda r: abs(vfun(r)) * r, R, upper, limit=400)[0]


def ball_newton(b, a=1.0):
    """int_{|x|<a} dx / |x - y| at |y| = b (uniform ball, classical closed form)."""
    if b <= a:
        return 2 * np.pi * a * a - 2 * np.pi * b * b / 3
    return 4 * np.pi * a**3 / (3 * b)


def zero_energy_threshold_depth():
    """Smallest c with cos(sqrt c) = 0: u'' + c u = 0, u(0) = 0, u'(1) = 0."""
    return optimize.brentq(lambda c: np.cos(np.sqrt(c)), 1.0, 4.0)


def shoot_zero_energy(c, n=20001):
    """u'(1) for u'' = -c u, u(0)=0, u'(0)=1, integrated with solve_ivp."""
    sol = integrate.solve_ivp(lambda r, y: [y[1], -c * y[0]], (0, 1), [0.0, 1.0], rtol=1e-11, atol=1e-13)
    return sol.y[1, -1]


def s_wave_ground_state(depth, radius=1.0):
    """Bound-state energy of the attractive well V = depth (< 0) on |x| < radius.

    Inside: u = sin(k r), k^2 = |depth| + E; outside: u ~ exp(-kappa r), E = -kappa^2.
    Matching: k cot(k a) = -kappa.
    """
    c = -depth

    def f(kappa):
        k = np.sqrt(c - kappa**2)
        return k / np.tan(k * radius) + kappa

    kap = optimize.brentq(f, 1e-9, np.sqrt(c) - 1e-12)
    return -kap**2


def n_bound_states(depth, radius=1.0):
    """Number of s-wave bound states: count of (n - 1/2) pi below sqrt(|depth|) a."""
    return int(np.floor(np.sqrt(-depth) * radius / np.pi + 0.5))


def gaussian_symbol(lam, sigma, center=0.0, mass=1.0):
    """Fourier transform int g(rho) e^{-i lam rho} d rho of a Gaussian normalised to L1 mass."""
    return mass * np.exp(-0.5 * (sigma * lam) ** 2 - 1j * lam * center)


def free_box_modes(side, n, count):
    """Lowest eigenvalues of the 7-point Dirichlet Laplacian on an n^3 interior grid."""
    h = side / (n + 1)
    mu = (4 / h**2) * np.sin(np.arange(1, n + 1) * np.pi / (2 * (n + 1))) ** 2
    tot = (mu[:, None, None] + mu[None, :, None] + mu[None, None, :]).ravel()
    return np.sort(tot)[:count]


def regularised_K_check(t, rho, d, eps):
    """(1/2pi) int (-4 pi i)^-1 exp(-(eps + i t) lam^2 + i (rho + d) lam) dlam as a complex Gaussian integral."""
    a = eps + 1j * t
    return np.sqrt(np.pi / a) * np.exp(-((rho + d) ** 2) / (4 * a)) / (2 * np.pi) / (-4j * np.pi)
