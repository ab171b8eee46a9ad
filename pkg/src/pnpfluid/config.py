"""Configuration schema, YAML parsing, and validation.

A configuration is one human-readable YAML file with the nested sections
grid / shape / physics / boundary / initial / run.  ``parse_config`` either
returns a fully resolved SimConfig or raises ConfigError carrying *every*
violation found (each tagged with its key path), not just the first.

No environment variables are consulted; everything lives in the file or in
explicit CLI flags, so identical inputs give identical runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .fluid import BodyInertia
from .geometry import RigidPose, ShapeSpec, gap_to_wall
from .grid import Grid
from .nernst_planck import SpeciesParams
from .poisson import ElectrostaticBC

_KNOWN_TOP = {"grid", "shape", "physics", "boundary", "initial", "run"}


@dataclass
class GridConfig:
    nx: int = 64
    ny: int = 64
    h: float | None = None
    x0: float = 0.0
    y0: float = 0.0
    x1: float | None = None
    y1: float | None = None


@dataclass
class ShapeConfig:
    kind: str = "disk"
    radius: float = 0.2
    center: list = field(default_factory=lambda: [0.5, 0.5])
    vertices: list | None = None


@dataclass
class SpeciesConfig:
    Z: int = 1
    d: float = 1.0


@dataclass
class PhysicsConfig:
    kappa1: float = 1.0
    kappa2: float = 1.0
    eta: float = 1.0
    mu_p: float = 1.0
    mu_f: float = 1.0
    e: float = 1.0
    kB_theta: float = 1.0
    species: list = field(default_factory=lambda: [SpeciesConfig()])


@dataclass
class BoundaryConfig:
    type: str = "constant"          # constant | linear | tabulated
    value: float = 0.0
    gx: float = 0.0
    gy: float = 0.0
    c: float = 0.0
    left: list | None = None
    right: list | None = None
    bottom: list | None = None
    top: list | None = None


@dataclass
class BumpConfig:
    """Compactly supported C^2 bump  A (1 - (r/R)^2)^3  about a center."""

    amplitude: float = 0.0
    radius: float = 0.1
    center: list | None = None      # absolute; rho0 uses center_offset instead
    center_offset: list = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class SpeciesInitConfig:
    type: str = "uniform"           # uniform | bump
    value: float = 0.0
    amplitude: float = 0.0
    radius: float = 0.1
    center: list = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class InitialConfig:
    rho0: BumpConfig | None = None
    species: list = field(default_factory=list)
    v0: list = field(default_factory=lambda: [0.0, 0.0])
    w0: float = 0.0


@dataclass
class RunConfig:
    t_end: float = 1.0
    snapshot_every: float | None = None
    tol: float = 1e-7
    max_iter: int = 25
    safety: float = 0.9
    gamma_min: float | None = None   # default resolves to 2 h
    force_convention: str = "force_per_mass"
    seed: int = 0                    # reserved; the core draws no randomness
    picard_damping: float = 1.0
    poisson_tol: float = 1e-10
    projection_tol: float = 1e-8
    max_dt_halvings: int = 8


@dataclass
class SimConfig:
    grid: GridConfig
    shape: ShapeConfig
    physics: PhysicsConfig
    boundary: BoundaryConfig
    initial: InitialConfig
    run: RunConfig

    # derived objects, built by resolve()
    grid_obj: Grid = None
    shape_obj: ShapeSpec = None
    bc_obj: ElectrostaticBC = None
    species_params: list = None
    inertia_obj: BodyInertia = None

    def initial_pose(self) -> RigidPose:
        c = np.asarray(self.shape.center, dtype=float)
        return RigidPose(x_c=c, theta=0.0,
                         v_c=np.asarray(self.initial.v0, dtype=float),
                         w=float(self.initial.w0))

    def resolved_dict(self) -> dict:
        """Fully resolved configuration (all defaults filled), echo-stable."""
        g = self.grid_obj
        out = {
            "grid": {"nx": g.nx, "ny": g.ny, "h": g.h, "x0": g.x0, "y0": g.y0},
            "shape": {"kind": self.shape.kind, "radius": self.shape.radius,
                      "center": [float(v) for v in self.shape.center]},
            "physics": {
                "kappa1": self.physics.kappa1, "kappa2": self.physics.kappa2,
                "eta": self.physics.eta, "mu_p": self.physics.mu_p,
                "mu_f": self.physics.mu_f, "e": self.physics.e,
                "kB_theta": self.physics.kB_theta,
                "species": [{"Z": s.Z, "d": s.d} for s in self.physics.species],
            },
            "boundary": _boundary_dict(self.boundary),
            "initial": _initial_dict(self.initial),
            "run": {
                "t_end": self.run.t_end,
                "snapshot_every": self.run.snapshot_every,
                "tol": self.run.tol,
                "max_iter": self.run.max_iter,
                "safety": self.run.safety,
                "gamma_min": self.run.gamma_min,
                "force_convention": self.run.force_convention,
                "seed": self.run.seed,
                "picard_damping": self.run.picard_damping,
                "poisson_tol": self.run.poisson_tol,
                "projection_tol": self.run.projection_tol,
                "max_dt_halvings": self.run.max_dt_halvings,
            },
        }
        if self.shape.kind == "polygon":
            out["shape"]["vertices"] = [[float(a), float(b)]
                                        for a, b in self.shape.vertices]
            del out["shape"]["radius"]
        return out

    def echo_yaml(self) -> str:
        return yaml.safe_dump(self.resolved_dict(), sort_keys=True,
                              default_flow_style=False)


def _boundary_dict(b: BoundaryConfig) -> dict:
    if b.type == "constant":
        return {"type": "constant", "value": b.value}
    if b.type == "linear":
        return {"type": "linear", "gx": b.gx, "gy": b.gy, "c": b.c}
    return {"type": "tabulated",
            "left": [float(v) for v in b.left],
            "right": [float(v) for v in b.right],
            "bottom": [float(v) for v in b.bottom],
            "top": [float(v) for v in b.top]}


def _initial_dict(ic: InitialConfig) -> dict:
    out = {"v0": [float(v) for v in ic.v0], "w0": ic.w0, "species": []}
    if ic.rho0 is not None:
        out["rho0"] = {"amplitude": ic.rho0.amplitude, "radius": ic.rho0.radius,
                       "center_offset": [float(v) for v in ic.rho0.center_offset]}
    else:
        out["rho0"] = None
    for s in ic.species:
        if s.type == "uniform":
            out["species"].append({"type": "uniform", "value": s.value})
        else:
            out["species"].append({"type": "bump", "amplitude": s.amplitude,
                                   "radius": s.radius,
                                   "center": [float(v) for v in s.center]})
    return out


def _get(d: dict, key: str, default, typ, path: str, errors: list):
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if typ is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            errors.append(f"{path}.{key}: expected a number, got {type(v).__name__}")
            return default
        return float(v)
    if typ is int:
        if isinstance(v, bool) or not isinstance(v, int):
            errors.append(f"{path}.{key}: expected an integer, got {type(v).__name__}")
            return default
        return int(v)
    if typ is str:
        if not isinstance(v, str):
            errors.append(f"{path}.{key}: expected a string, got {type(v).__name__}")
            return default
        return v
    if typ is list:
        if not isinstance(v, (list, tuple)):
            errors.append(f"{path}.{key}: expected a list, got {type(v).__name__}")
            return default
        return list(v)
    return v


def _check_unknown(d: dict, known: set, path: str, errors: list):
    for k in d:
        if k not in known:
            errors.append(f"{path}.{k}: unknown key")


def config_from_dict(raw: dict) -> SimConfig:
    """Build and validate a SimConfig from a parsed mapping."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a mapping"])
    for k in raw:
        if k not in _KNOWN_TOP:
            errors.append(f"{k}: unknown section")

    # --- grid ---------------------------------------------------------------
    g = raw.get("grid") or {}
    _check_unknown(g, {"nx", "ny", "h", "x0", "y0", "x1", "y1"}, "grid", errors)
    gc = GridConfig(
        nx=_get(g, "nx", 64, int, "grid", errors),
        ny=_get(g, "ny", 64, int, "grid", errors),
        h=_get(g, "h", None, float, "grid", errors),
        x0=_get(g, "x0", 0.0, float, "grid", errors),
        y0=_get(g, "y0", 0.0, float, "grid", errors),
        x1=_get(g, "x1", None, float, "grid", errors),
        y1=_get(g, "y1", None, float, "grid", errors),
    )
    if gc.nx < 2 or gc.ny < 2:
        errors.append("grid.nx/grid.ny: need at least 2 cells per direction")
    h = gc.h
    if h is None and gc.x1 is not None:
        h = (gc.x1 - gc.x0) / gc.nx
        if gc.y1 is not None and abs((gc.y1 - gc.y0) / gc.ny - h) > 1e-12 * abs(h):
            errors.append("grid: extents imply non-square cells (uniform h required)")
    if h is None:
        h = 1.0 / gc.nx
    if not h > 0:
        errors.append("grid.h: spacing must be positive")

    # --- shape ----------------------------------------------------------------
    s = raw.get("shape") or {}
    _check_unknown(s, {"kind", "radius", "center", "vertices"}, "shape", errors)
    sc = ShapeConfig(
        kind=_get(s, "kind", "disk", str, "shape", errors),
        radius=_get(s, "radius", 0.2, float, "shape", errors),
        center=_get(s, "center", [gc.x0 + gc.nx * h / 2, gc.y0 + gc.ny * h / 2],
                    list, "shape", errors),
        vertices=_get(s, "vertices", None, list, "shape", errors),
    )
    if sc.kind not in ("disk", "polygon"):
        errors.append(f"shape.kind: must be 'disk' or 'polygon', got {sc.kind!r}")
    if sc.kind == "disk" and not sc.radius > 0:
        errors.append("shape.radius: must be positive")
    if sc.kind == "polygon" and (sc.vertices is None or len(sc.vertices) < 3):
        errors.append("shape.vertices: polygon needs at least 3 vertices")
    if len(sc.center) != 2:
        errors.append("shape.center: expected [x, y]")

    # --- physics ---------------------------------------------------------------
    p = raw.get("physics") or {}
    _check_unknown(p, {"kappa1", "kappa2", "eta", "mu_p", "mu_f", "e",
                       "kB_theta", "species"}, "physics", errors)
    species_raw = p.get("species") or [{"Z": 1, "d": 1.0}]
    species = []
    if not isinstance(species_raw, list) or len(species_raw) < 1:
        errors.append("physics.species: need at least one species")
        species_raw = [{"Z": 1, "d": 1.0}]
    for i, srow in enumerate(species_raw):
        srow = srow or {}
        _check_unknown(srow, {"Z", "d"}, f"physics.species[{i}]", errors)
        Z = _get(srow, "Z", 1, int, f"physics.species[{i}]", errors)
        d = _get(srow, "d", 1.0, float, f"physics.species[{i}]", errors)
        if not d > 0:
            errors.append(f"physics.species[{i}].d: diffusivity must be positive")
            d = 1.0
        species.append(SpeciesConfig(Z=Z, d=d))
    pc = PhysicsConfig(
        kappa1=_get(p, "kappa1", 1.0, float, "physics", errors),
        kappa2=_get(p, "kappa2", 1.0, float, "physics", errors),
        eta=_get(p, "eta", 1.0, float, "physics", errors),
        mu_p=_get(p, "mu_p", 1.0, float, "physics", errors),
        mu_f=_get(p, "mu_f", 1.0, float, "physics", errors),
        e=_get(p, "e", 1.0, float, "physics", errors),
        kB_theta=_get(p, "kB_theta", 1.0, float, "physics", errors),
        species=species,
    )
    for name in ("kappa1", "kappa2", "eta", "mu_p", "mu_f", "kB_theta"):
        if not getattr(pc, name) > 0:
            errors.append(f"physics.{name}: must be positive")

    # --- boundary ---------------------------------------------------------------
    b = raw.get("boundary") or {}
    _check_unknown(b, {"type", "value", "gx", "gy", "c",
                       "left", "right", "bottom", "top"}, "boundary", errors)
    bc = BoundaryConfig(
        type=_get(b, "type", "constant", str, "boundary", errors),
        value=_get(b, "value", 0.0, float, "boundary", errors),
        gx=_get(b, "gx", 0.0, float, "boundary", errors),
        gy=_get(b, "gy", 0.0, float, "boundary", errors),
        c=_get(b, "c", 0.0, float, "boundary", errors),
        left=_get(b, "left", None, list, "boundary", errors),
        right=_get(b, "right", None, list, "boundary", errors),
        bottom=_get(b, "bottom", None, list, "boundary", errors),
        top=_get(b, "top", None, list, "boundary", errors),
    )
    if bc.type not in ("constant", "linear", "tabulated"):
        errors.append(f"boundary.type: unknown type {bc.type!r}")
    if bc.type == "tabulated":
        for side, n in (("left", gc.ny), ("right", gc.ny),
                        ("bottom", gc.nx), ("top", gc.nx)):
            arr = getattr(bc, side)
            if arr is None or len(arr) != n:
                errors.append(f"boundary.{side}: tabulated trace needs {n} values")

    # --- initial -----------------------------------------------------------------
    ic_raw = raw.get("initial") or {}
    _check_unknown(ic_raw, {"rho0", "species", "v0", "w0"}, "initial", errors)
    rho0 = None
    if ic_raw.get("rho0") is not None:
        r = ic_raw["rho0"]
        _check_unknown(r, {"amplitude", "radius", "center_offset"},
                       "initial.rho0", errors)
        rho0 = BumpConfig(
            amplitude=_get(r, "amplitude", 0.0, float, "initial.rho0", errors),
            radius=_get(r, "radius", 0.1, float, "initial.rho0", errors),
            center_offset=_get(r, "center_offset", [0.0, 0.0], list,
                               "initial.rho0", errors),
        )
        if not rho0.radius > 0:
            errors.append("initial.rho0.radius: must be positive")
    sp_init = []
    for i, srow in enumerate(ic_raw.get("species") or []):
        srow = srow or {}
        _check_unknown(srow, {"type", "value", "amplitude", "radius", "center"},
                       f"initial.species[{i}]", errors)
        t = _get(srow, "type", "uniform", str, f"initial.species[{i}]", errors)
        if t not in ("uniform", "bump"):
            errors.append(f"initial.species[{i}].type: unknown type {t!r}")
            t = "uniform"
        entry = SpeciesInitConfig(
            type=t,
            value=_get(srow, "value", 0.0, float, f"initial.species[{i}]", errors),
            amplitude=_get(srow, "amplitude", 0.0, float,
                           f"initial.species[{i}]", errors),
            radius=_get(srow, "radius", 0.1, float, f"initial.species[{i}]", errors),
            center=_get(srow, "center", list(sc.center), list,
                        f"initial.species[{i}]", errors),
        )
        if entry.value < 0 or entry.amplitude < 0:
            errors.append(f"initial.species[{i}]: concentrations must be nonnegative")
        sp_init.append(entry)
    while len(sp_init) < len(species):
        sp_init.append(SpeciesInitConfig(type="uniform", value=0.0))
    if len(sp_init) > len(species):
        errors.append("initial.species: more initial entries than physics.species")
        sp_init = sp_init[: len(species)]
    ic = InitialConfig(
        rho0=rho0,
        species=sp_init,
        v0=_get(ic_raw, "v0", [0.0, 0.0], list, "initial", errors),
        w0=_get(ic_raw, "w0", 0.0, float, "initial", errors),
    )

    # --- run -----------------------------------------------------------------------
    r = raw.get("run") or {}
    _check_unknown(r, {"t_end", "snapshot_every", "tol", "max_iter", "safety",
                       "gamma_min", "force_convention", "seed", "picard_damping",
                       "poisson_tol", "projection_tol", "max_dt_halvings"},
                   "run", errors)
    rc = RunConfig(
        t_end=_get(r, "t_end", 1.0, float, "run", errors),
        snapshot_every=_get(r, "snapshot_every", None, float, "run", errors),
        tol=_get(r, "tol", 1e-7, float, "run", errors),
        max_iter=_get(r, "max_iter", 25, int, "run", errors),
        safety=_get(r, "safety", 0.9, float, "run", errors),
        gamma_min=_get(r, "gamma_min", None, float, "run", errors),
        force_convention=_get(r, "force_convention", "force_per_mass", str,
                              "run", errors),
        seed=_get(r, "seed", 0, int, "run", errors),
        picard_damping=_get(r, "picard_damping", 1.0, float, "run", errors),
        poisson_tol=_get(r, "poisson_tol", 1e-10, float, "run", errors),
        projection_tol=_get(r, "projection_tol", 1e-8, float, "run", errors),
        max_dt_halvings=_get(r, "max_dt_halvings", 8, int, "run", errors),
    )
    if rc.t_end < 0:
        errors.append("run.t_end: must be nonnegative")
    if not rc.tol > 0:
        errors.append("run.tol: must be positive")
    if rc.max_iter < 1:
        errors.append("run.max_iter: must be at least 1")
    if not (0 < rc.safety <= 1):
        errors.append("run.safety: must lie in (0, 1]")
    if rc.snapshot_every is not None and not rc.snapshot_every > 0:
        errors.append("run.snapshot_every: must be positive when given")
    if rc.force_convention not in ("force_per_mass", "force_per_volume"):
        errors.append("run.force_convention: must be force_per_mass or force_per_volume")
    if not (0 < rc.picard_damping <= 1):
        errors.append("run.picard_damping: must lie in (0, 1]")

    cfg = SimConfig(grid=GridConfig(gc.nx, gc.ny, h, gc.x0, gc.y0),
                    shape=sc, physics=pc, boundary=bc, initial=ic, run=rc)

    # --- derived objects and cross-field checks ------------------------------
    if not errors:
        cfg.grid_obj = Grid(gc.nx, gc.ny, h, gc.x0, gc.y0)
        if sc.kind == "disk":
            cfg.shape_obj = ShapeSpec(kind="disk", radius=sc.radius,
                                      center=np.asarray(sc.center, float))
        else:
            cfg.shape_obj = ShapeSpec(kind="polygon",
                                      vertices=np.asarray(sc.vertices, float),
                                      center=np.asarray(sc.center, float))
        if rc.gamma_min is None:
            cfg.run.gamma_min = 2.0 * h
        cfg.species_params = [SpeciesParams(Z=s.Z, d=s.d) for s in pc.species]
        cfg.bc_obj = _build_bc(cfg)
        cfg.inertia_obj = BodyInertia.from_shape(cfg.shape_obj, pc.mu_p)

        pose = cfg.initial_pose()
        gap = gap_to_wall(pose, cfg.shape_obj, cfg.grid_obj)
        if gap <= 0:
            errors.append("shape: initial gap violation, the body must sit "
                          "strictly inside the enclosure")
        elif gap <= cfg.run.gamma_min:
            errors.append(
                f"shape: initial gap {gap:.4g} does not exceed "
                f"gamma_min {cfg.run.gamma_min:.4g}")
        if rho0 is not None and sc.kind == "disk":
            off = float(np.hypot(*rho0.center_offset))
            if off + rho0.radius >= sc.radius:
                errors.append("initial.rho0: support must lie strictly inside "
                              "the body")
    if errors:
        raise ConfigError(errors)
    return cfg


def _build_bc(cfg: SimConfig) -> ElectrostaticBC:
    b = cfg.boundary
    grid = cfg.grid_obj
    if b.type == "constant":
        return ElectrostaticBC.constant(grid, b.value)
    if b.type == "linear":
        return ElectrostaticBC.linear(grid, b.gx, b.gy, b.c)
    return ElectrostaticBC(grid,
                           np.asarray(b.left, float), np.asarray(b.right, float),
                           np.asarray(b.bottom, float), np.asarray(b.top, float))


def parse_config(path) -> SimConfig:
    """Parse and validate a YAML configuration file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError([f"{p}: file not found"])
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"{p}: YAML parse error: {exc}"]) from exc
    if raw is None:
        raw = {}
    return config_from_dict(raw)
