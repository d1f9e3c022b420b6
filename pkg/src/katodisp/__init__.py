"""Dispersive-estimate operator toolkit.

Kato norms of 3-D potentials, Birman-Schwinger resolvent operators, the
spherical-means family ``T(rho)``, an operator-valued Wiener algebra with a
constructive inverse, and Schrodinger evolution in a finite box.
"""
from .errors import (
    ConfigError,
    DivergenceError,
    InvalidInputError,
    KatoDispError,
    ResolutionError,
    SingularPointError,
    SpectralObstructionError,
    WindowError,
)
from .grids import QuadratureGrid, cartesian_grid, load_grid, radial_grid, radial_line, save_grid
from .potential import KatoReport, Potential, kato_norm, kato_report, local_kato_profile, distal_kato_profile
from .resolvent import (
    OperatorSample,
    ScanReport,
    birman_schwinger,
    depth_sweep,
    free_resolvent_kernel,
    nystrom_grid,
    resonance_scan,
    weighted_resolvent_decay,
)
from .tfamily import RhoGrid, apply_T, as_wiener_element, fourier_consistency, slice_norms, wiener_norm
from .wiener import CutoffProfile, WienerElement, convolve, fourier, invert
from .propagator import BoxSpec, DecayReport, SpectralSplit, discretize_H, evolve_and_fit

__version__ = "0.1.0"

__all__ = [
    "BoxSpec", "ConfigError", "CutoffProfile", "DecayReport", "DivergenceError", "InvalidInputError",
    "KatoDispError", "KatoReport", "OperatorSample", "Potential", "QuadratureGrid", "ResolutionError",
    "RhoGrid", "ScanReport", "SingularPointError", "SpectralObstructionError", "SpectralSplit",
    "WienerElement", "WindowError", "apply_T", "as_wiener_element", "birman_schwinger", "cartesian_grid",
    "convolve", "depth_sweep", "discretize_H", "distal_kato_profile", "evolve_and_fit", "fourier",
    "fourier_consistency", "free_resolvent_kernel", "invert", "kato_norm", "kato_report", "load_grid",
    "local_kato_profile", "nystrom_grid", "radial_grid", "radial_line", "resonance_scan", "save_grid",
    "slice_norms", "weighted_resolvent_decay", "wiener_norm",
]
