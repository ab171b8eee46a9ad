"""Snapshot container format and run output emission.

Snapshot files are self-describing: an 8-byte magic, a little-endian uint32
format version, a length-prefixed JSON header (dimension, grid, shape,
physics constants, pose, diagnostic accumulators, and the array directory),
followed by the raw little-endian float64 array payloads in directory order.
Write -> read round-trips are bit-identical; short files raise SnapshotError.

A run directory contains::

    config.resolved        fully resolved configuration echo (YAML)
    diagnostics.csv        one row per step (RFC 4180, CRLF)
    snapshots/NNNNNN.snap  state snapshots at the configured cadence
    events.json            separation event, fixed-point failures, errors

Diagnostic rows are pure functions of the snapshot state (the accumulated
energy integrals ride inside the state), so recomputing a row from a
snapshot reproduces the run's row exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from .errors import SnapshotError
from .fluid import BodyInertia
from .geometry import RigidPose, ShapeSpec, build_phase_map
from .grid import Grid, VelocityField
from .nernst_planck import SpeciesParams
from .poisson import ElectrostaticBC
from .stepper import DiagAccum, SimState

MAGIC = b"PNPFSNAP"
VERSION = 1

CSV_EOL = "\r\n"


def csv_columns(n_species: int) -> list[str]:
    cols = ["t", "E_k", "E_d", "E_p", "E_el", "residual"]
    cols += [f"moles_{i}" for i in range(n_species)]
    cols += ["total_fixed_charge", "gap", "x_c", "y_c", "theta",
             "v_cx", "v_cy", "w", "picard_iters", "E_d_strain"]
    return cols


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_snapshot(state: SimState, path, config=None) -> None:
    """Serialize a SimState; physics metadata comes from the phase map and
    the optional config (boundary trace arrays are stored as payload)."""
    path = Path(path)
    phase = state.phase
    grid = phase.grid
    shape = phase.shape

    arrays: list[tuple[str, np.ndarray]] = [
        ("psi", state.psi), ("rho0", state.rho0), ("p", state.p),
        ("u", state.vel.u), ("v", state.vel.v),
    ]
    for i, Ni in enumerate(state.N):
        arrays.append((f"N_{i}", Ni))
    if config is not None:
        bc = config.bc_obj
        arrays += [("bc_left", bc.left), ("bc_right", bc.right),
                   ("bc_bottom", bc.bottom), ("bc_top", bc.top)]
        species = [{"Z": sp.Z, "d": sp.d} for sp in config.species_params]
        eta = config.physics.eta
        e = config.physics.e
        kB_theta = config.physics.kB_theta
    else:
        species = []
        eta, e, kB_theta = 1.0, 1.0, 1.0

    header = {
        "format": "pnpfluid-snapshot",
        "dim": 2,
        "endianness": "little",
        "t": state.t,
        "grid": {"nx": grid.nx, "ny": grid.ny, "h": grid.h,
                 "x0": grid.x0, "y0": grid.y0},
        "shape": _shape_meta(shape),
        "pose": {
            "x_c": [state.pose.x_c[0], state.pose.x_c[1]],
            "theta": state.pose.theta,
            "v_c": [state.pose.v_c[0], state.pose.v_c[1]],
            "w": state.pose.w,
            "x_c0": [state.pose.x_c0[0], state.pose.x_c0[1]],
        },
        "physics": {"kappa1": phase.kappa1, "kappa2": phase.kappa2,
                    "mu_p": phase.mu_p, "mu_f": phase.mu_f,
                    "eta": eta, "e": e, "kB_theta": kB_theta},
        "species": species,
        "diag": {"E_d": state.diag.E_d, "E_d_strain": state.diag.E_d_strain,
                 "E_p": state.diag.E_p, "residual": state.diag.residual,
                 "picard_iters": state.diag.picard_iters},
        "arrays": [{"name": n, "shape": list(a.shape), "dtype": "<f8"}
                   for n, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _shape_meta(shape: ShapeSpec | None) -> dict | None:
    if shape is None:
        return None
    meta = {"kind": shape.kind, "center": [shape.center[0], shape.center[1]]}
    if shape.kind == "disk":
        meta["radius"] = shape.radius
    else:
        meta["vertices"] = [[float(a), float(b)] for a, b in shape.vertices]
    return meta


def read_snapshot(path):
    """Read a snapshot; returns (SimState, ReplayContext).

    The context carries the same attributes the stepper's diagnostics need
    (grid_obj, shape_obj, bc_obj, species_params, physics), so a snapshot is
    enough to recompute its diagnostics row.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 20 or data[:8] != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    (version,) = struct.unpack("<I", data[8:12])
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported snapshot version {version}")
    (hlen,) = struct.unpack("<Q", data[12:20])
    if len(data) < 20 + hlen:
        raise SnapshotError(f"{path}: truncated header")
    try:
        header = json.loads(data[20:20 + hlen].decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: corrupt header: {exc}") from exc

    offset = 20 + hlen
    arrays = {}
    for meta in header["arrays"]:
        n = int(np.prod(meta["shape"])) if meta["shape"] else 1
        nbytes = n * 8
        if len(data) < offset + nbytes:
            raise SnapshotError(f"{path}: truncated payload at {meta['name']}")
        arr = np.frombuffer(data[offset:offset + nbytes], dtype="<f8").copy()
        arrays[meta["name"]] = arr.reshape(meta["shape"])
        offset += nbytes

    g = header["grid"]
    grid = Grid(int(g["nx"]), int(g["ny"]), float(g["h"]),
                float(g["x0"]), float(g["y0"]))
    sh = header["shape"]
    if sh is None:
        shape = None
    elif sh["kind"] == "disk":
        shape = ShapeSpec(kind="disk", radius=float(sh["radius"]),
                          center=np.asarray(sh["center"], float))
    else:
        shape = ShapeSpec(kind="polygon",
                          vertices=np.asarray(sh["vertices"], float),
                          center=np.asarray(sh["center"], float))
    po = header["pose"]
    pose = RigidPose(x_c=np.asarray(po["x_c"], float), theta=float(po["theta"]),
                     v_c=np.asarray(po["v_c"], float), w=float(po["w"]),
                     x_c0=np.asarray(po["x_c0"], float))
    ph = header["physics"]
    phase = build_phase_map(pose, shape, grid, ph["kappa1"], ph["kappa2"],
                            ph["mu_p"], ph["mu_f"])
    species = [SpeciesParams(Z=int(s["Z"]), d=float(s["d"]))
               for s in header["species"]]
    N = [arrays[f"N_{i}"] for i in range(len(species))]
    vel = VelocityField(arrays["u"], arrays["v"], grid)
    d = header["diag"]
    from .geometry import transport_fixed_charge
    rho = transport_fixed_charge(arrays["rho0"], pose, grid, shape=shape)
    state = SimState(
        t=float(header["t"]), pose=pose, phase=phase, psi=arrays["psi"],
        N=N, rho0=arrays["rho0"], rho=rho, vel=vel, p=arrays["p"],
        diag=DiagAccum(E_d=float(d["E_d"]), E_d_strain=float(d["E_d_strain"]),
                       E_p=float(d["E_p"]), residual=float(d["residual"]),
                       picard_iters=int(d["picard_iters"])),
    )
    bc = ElectrostaticBC(grid, arrays.get("bc_left"), arrays.get("bc_right"),
                         arrays.get("bc_bottom"), arrays.get("bc_top"))
    ctx = SimpleNamespace(
        grid_obj=grid,
        shape_obj=shape,
        bc_obj=bc,
        species_params=species,
        inertia_obj=(BodyInertia.from_shape(shape, ph["mu_p"])
                     if shape is not None else None),
        physics=SimpleNamespace(**ph),
    )
    return state, ctx


class RunWriter:
    """Incremental emission of a run directory."""

    def __init__(self, out_dir, config):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        (self.dir / "snapshots").mkdir(exist_ok=True)
        self.config = config
        (self.dir / "config.resolved").write_text(config.echo_yaml())
        self.columns = csv_columns(len(config.species_params))
        self._csv = open(self.dir / "diagnostics.csv", "w", newline="")
        self._csv.write(",".join(self.columns) + CSV_EOL)
        self._snap_index = 0

    def write_row(self, row: dict) -> None:
        self._csv.write(",".join(format_value(row[c]) for c in self.columns)
                        + CSV_EOL)

    def write_snapshot(self, state: SimState) -> None:
        path = self.dir / "snapshots" / f"{self._snap_index:06d}.snap"
        write_snapshot(state, path, config=self.config)
        self._snap_index += 1

    def finish(self, events: list[dict], status: str) -> None:
        self._csv.close()
        payload = {"status": status, "events": events}
        (self.dir / "events.json").write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n")
