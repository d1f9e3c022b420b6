"""Run configuration: a versioned JSON document validated before any computation."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, InvalidInputError
from .potential import Potential

SCHEMA = "katodisp-run/1"


def _build(cls, doc, where: str):
    if doc is None:
        return cls()
    if not isinstance(doc, dict):
        raise ConfigError(f"config: section {where!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(doc) - names)
    if extra:
        raise ConfigError(f"config: unknown keys {extra} in section {where!r}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: section {where!r}: {exc}") from None


def _positive(where: str, **vals):
    for k, v in vals.items():
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"config: {where}.{k} must be a positive number (got {v!r})")


@dataclass
class GridSection:
    n_shells: int = 256
    extent: float = 1.5
    degree: int = 17
    cartesian_h: float = 0.25
    max_nodes: int = 4000

    def __post_init__(self):
        _positive("grid", n_shells=self.n_shells, extent=self.extent, degree=self.degree,
                  cartesian_h=self.cartesian_h, max_nodes=self.max_nodes)


@dataclass
class KatoSection:
    deltas: list = field(default_factory=lambda: [2.0, 1.0, 0.5, 0.25, 0.1])
    radii: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 3.0, 5.0])

    def __post_init__(self):
        if any(not (isinstance(d, (int, float)) and d > 0) for d in self.deltas + self.radii):
            raise ConfigError("config: kato.deltas and kato.radii must be positive numbers")


@dataclass
class RhoSection:
    h_rho: float = 0.05
    rho_max: float | None = None
    spatial_h: float = 0.1
    order_factor: int = 12
    lambdas: list = field(default_factory=lambda: [0.0, 1.0, 4.0])

    def __post_init__(self):
        _positive("rho_grid", h_rho=self.h_rho, rho_max=self.rho_max, spatial_h=self.spatial_h,
                  order_factor=self.order_factor)


@dataclass
class ScanSection:
    lambda_max: float = 20.0
    n_lambda: int = 400
    sign: str = "minus"
    refine: bool = True
    depth_sweep: list | None = None
    alpha: float = 1.0
    decay_lambdas: list = field(default_factory=lambda: [0.0, 1.0, 2.0, 5.0, 10.0, 20.0])

    def __post_init__(self):
        _positive("scan", lambda_max=self.lambda_max, n_lambda=self.n_lambda)
        if self.sign not in ("plus", "minus"):
            raise ConfigError("config: scan.sign must be 'plus' or 'minus'")
        if self.depth_sweep is not None and (len(self.depth_sweep) != 3 or int(self.depth_sweep[2]) < 3):
            raise ConfigError("config: scan.depth_sweep must be [a, b, n] with n >= 3")
        if not self.alpha > 0.5:
            raise ConfigError("config: scan.alpha must exceed 1/2")


@dataclass
class BoxSection:
    side: float = 16.0
    points_per_axis: int = 64
    dirichlet: bool = True
    geometry: str = "cartesian"

    def __post_init__(self):
        _positive("box", side=self.side, points_per_axis=self.points_per_axis)
        if self.dirichlet is not True:
            raise ConfigError("config: box.dirichlet must be true")
        if self.geometry not in ("cartesian", "radial"):
            raise ConfigError("config: box.geometry must be 'cartesian' or 'radial'")


@dataclass
class EvolveSection:
    project: bool = True
    n_times: int = 16
    bump_width: float | None = None

    def __post_init__(self):
        _positive("evolve", n_times=self.n_times, bump_width=self.bump_width)


@dataclass
class WienerSection:
    element: str | None = None
    n_random: int = 100
    n_lambda: int = 64


@dataclass
class Tolerances:
    scan_threshold: float = 1e-3
    wiener_eps: float = 1e-6
    sv_floor: float = 1e-6

    def __post_init__(self):
        _positive("tolerances", scan_threshold=self.scan_threshold, wiener_eps=self.wiener_eps,
                  sv_floor=self.sv_floor)


SECTIONS = {
    "grid": GridSection,
    "kato": KatoSection,
    "rho_grid": RhoSection,
    "scan": ScanSection,
    "box": BoxSection,
    "evolve": EvolveSection,
    "wiener": WienerSection,
    "tolerances": Tolerances,
}


@dataclass
class RunConfig:
    potential: dict = field(default_factory=lambda: {"kind": "square-well", "depth": 1.0, "radius": 1.0})
    seed: int = 0
    threads: int = 1
    output_dir: str = "out"
    grid: GridSection = field(default_factory=GridSection)
    kato: KatoSection = field(default_factory=KatoSection)
    rho_grid: RhoSection = field(default_factory=RhoSection)
    scan: ScanSection = field(default_factory=ScanSection)
    box: BoxSection = field(default_factory=BoxSection)
    evolve: EvolveSection = field(default_factory=EvolveSection)
    wiener: WienerSection = field(default_factory=WienerSection)
    tolerances: Tolerances = field(default_factory=Tolerances)
    schema: str = SCHEMA

    def __post_init__(self):
        if self.schema != SCHEMA:
            raise ConfigError(f"config: unsupported schema {self.schema!r} (expected {SCHEMA!r})")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("config: seed must be an integer in [0, 2^64)")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("config: threads must be a positive integer")
        self.build_potential()

    def build_potential(self) -> Potential:
        try:
            return Potential.from_dict(self.potential)
        except InvalidInputError as exc:
            raise ConfigError(f"config: potential: {exc}") from None

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config: top level must be an object")
        names = {f.name for f in dataclasses.fields(cls)}
        extra = sorted(set(doc) - names)
        if extra:
            raise ConfigError(f"config: unknown top-level keys {extra}")
        if "schema" not in doc:
            raise ConfigError("config: missing 'schema' field")
        kw = {k: v for k, v in doc.items() if k not in SECTIONS}
        for name, sec in SECTIONS.items():
            kw[name] = _build(sec, doc.get(name), name)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
