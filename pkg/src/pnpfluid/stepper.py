"""Coupled time stepping: per-step fixed-point sweep and the run loop.

Each step freezes the geometry and iterates three linearized solves to
self-consistency (a damped Picard realization of the fixed-point
construction):

    1. electrostatics with the current ion iterate,
    2. ion transport with the frozen potential and frozen velocity iterate,
    3. momentum: explicit advection/diffusion with the frozen advecting
       velocity iterate, pressure projection, rigidity projection.

The residual is the largest relative L2 change of (u, psi, N_i) between
sweeps.  After convergence the body pose advances once with the converged
rigid velocities, the phase fields are rebuilt, the fixed charge is
re-sampled from its reference distribution, and ion content of newly covered
cells is redistributed conservatively.

The step controller combines the species stability bounds, the fluid CFL
and viscous limits, and a deformation bound dt <= 1/(3 max|grad u|) that
keeps the per-step Lagrangian flow close to the identity.  A run terminates
at t_end or at the separation event: a step whose advanced pose would bring
the particle-wall gap below gamma_min is rejected and the run stops there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import (EnergyLedger, dissipation_rate, electric_power,
                          kinetic_energy, viscous_drain)
from .errors import PicardError, PnpFluidError, StabilityError
from .fluid import (BodyInertia, advect_diffuse, electric_force_density,
                    enforce_rigidity, project_incompressible)
from .geometry import (PhaseMap, RigidPose, ShapeSpec, advance_pose,
                       build_phase_map, gap_to_wall, transport_fixed_charge)
from .grid import Grid, VelocityField
from .nernst_planck import (SpeciesParams, np_stable_dt, redistribute_covered,
                            step_np, total_moles)
from .poisson import (ElectrostaticBC, assemble_rhs, electrostatic_energy,
                      solve_poisson)


class TStarReached(PnpFluidError):
    """The advanced pose would violate the separation floor gamma_min."""

    def __init__(self, t: float, gap: float, gamma_min: float):
        super().__init__(f"separation event at t={t}: gap {gap:.4g} < {gamma_min:.4g}")
        self.t = t
        self.gap = gap
        self.gamma_min = gamma_min


@dataclass
class DiagAccum:
    """Accumulated diagnostics carried inside the state (snapshot-replayable)."""

    E_d: float = 0.0
    E_d_strain: float = 0.0
    E_p: float = 0.0
    residual: float = 0.0
    picard_iters: int = 0


@dataclass
class SimState:
    """The full coupled state at one time."""

    t: float
    pose: RigidPose
    phase: PhaseMap
    psi: np.ndarray
    N: list[np.ndarray]
    rho0: np.ndarray                 # reference fixed charge (constant)
    rho: np.ndarray                  # transported fixed charge at this pose
    vel: VelocityField
    p: np.ndarray
    diag: DiagAccum = field(default_factory=DiagAccum)


@dataclass
class PicardReport:
    iterations: int
    final_residual: float
    converged: bool
    residuals: list[float] = field(default_factory=list)


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    diff = float(np.linalg.norm((new - old).ravel()))
    if diff == 0.0:
        return 0.0
    return diff / max(float(np.linalg.norm(new.ravel())), 1e-300)


def _max_grad(vel: VelocityField) -> float:
    h = vel.grid.h
    vals = [
        np.max(np.abs(np.diff(vel.u, axis=0))) if vel.u.size else 0.0,
        np.max(np.abs(np.diff(vel.u, axis=1))) if vel.u.shape[1] > 1 else 0.0,
        np.max(np.abs(np.diff(vel.v, axis=0))) if vel.v.shape[0] > 1 else 0.0,
        np.max(np.abs(np.diff(vel.v, axis=1))) if vel.v.size else 0.0,
    ]
    return float(max(vals)) / h


def choose_dt(state: SimState, config, safety: float | None = None) -> float:
    """Stability-limited step: species bounds, fluid CFL/viscous, deformation."""
    phys = config.physics
    grid = config.grid_obj
    if safety is None:
        safety = config.run.safety
    bounds = []
    e_over = phys.e / phys.kB_theta
    for sp in config.species_params:
        bounds.append(np_stable_dt(state.vel, state.psi, sp, grid,
                                   safety=1.0, e_over_kBtheta=e_over))
    nu_max = phys.eta / min(phys.mu_p, phys.mu_f)
    bounds.append(grid.h * grid.h / (4.0 * nu_max))
    speed = state.vel.max_speed()
    if speed > 0:
        bounds.append(grid.h / speed)
        nu_min = phys.eta / max(phys.mu_p, phys.mu_f)
        bounds.append(2.0 * nu_min / (speed * speed))
    g = _max_grad(state.vel)
    if g > 0:
        bounds.append(1.0 / (3.0 * g))
    return safety * min(bounds)


def picard_step(state: SimState, config, dt: float,
                tol: float | None = None, max_iter: int | None = None,
                gamma_min: float | None = None):
    """One coupled step; returns (new_state, PicardReport).

    Raises PicardError if the sweep does not contract within max_iter, and
    TStarReached if gamma_min is given and the advanced pose violates it.
    """
    run_cfg = config.run
    phys = config.physics
    grid = config.grid_obj
    tol = run_cfg.tol if tol is None else tol
    max_iter = run_cfg.max_iter if max_iter is None else max_iter
    damping = run_cfg.picard_damping
    species = config.species_params
    bc = config.bc_obj
    e_over = phys.e / phys.kB_theta
    phase = state.phase
    inertia = config.inertia_obj

    psi_k = state.psi
    N_k = [Ni for Ni in state.N]
    u_k = state.vel
    pose_k = state.pose
    F_k = None
    p_k = state.p
    residuals: list[float] = []
    converged = False

    for _ in range(max_iter):
        rhs = assemble_rhs(N_k, species, state.rho, phase.chi_fluid, phys.e)
        psi_new = solve_poisson((phase.kappa_x, phase.kappa_y), rhs, bc,
                                tol=run_cfg.poisson_tol, x0=psi_k)
        N_new = [
            step_np(state.N[i], u_k, psi_new, species[i], phase, dt,
                    e_over_kBtheta=e_over)
            for i in range(len(species))
        ]
        F_k = electric_force_density(N_new, psi_new, species, phase.chi_fluid,
                                     phys.e, grid)
        u_star = advect_diffuse(state.vel, phase.mu, F_k, phys.eta, dt,
                                u_adv=u_k, convention=run_cfg.force_convention)
        u_proj, p_new = project_incompressible(
            u_star, grid, tol=run_cfg.projection_tol,
            pressure_scale=phys.mu_f / dt)
        u_new, pose_k = enforce_rigidity(u_proj, phase, inertia, state.pose)

        if damping != 1.0:
            th = damping
            psi_new = th * psi_new + (1 - th) * psi_k
            N_new = [th * a + (1 - th) * b for a, b in zip(N_new, N_k)]
            u_mix = u_new.copy()
            u_mix.u = th * u_new.u + (1 - th) * u_k.u
            u_mix.v = th * u_new.v + (1 - th) * u_k.v
            u_new = u_mix

        res = max(
            [_rel_change(psi_new, psi_k), _rel_change(u_new.u, u_k.u),
             _rel_change(u_new.v, u_k.v)]
            + [_rel_change(a, b) for a, b in zip(N_new, N_k)]
        )
        residuals.append(res)
        psi_k, N_k, u_k, p_k = psi_new, N_new, u_new, p_new
        if res <= tol:
            converged = True
            break

    report = PicardReport(
        iterations=len(residuals),
        final_residual=residuals[-1] if residuals else 0.0,
        converged=converged,
        residuals=residuals,
    )
    if not converged:
        raise PicardError(
            f"picard sweep stalled at residual {report.final_residual:.3e} "
            f"after {report.iterations} iterations",
            residual_trace=residuals,
        )

    # --- energy increments for this step (exact discrete bookkeeping) ------
    dE_d = dt * viscous_drain(state.vel, phys.eta)
    dE_d_strain = dt * dissipation_rate(state.vel, phase, phys.eta)
    u_mid = state.vel.copy()
    u_mid.u = 0.5 * (state.vel.u + u_k.u)
    u_mid.v = 0.5 * (state.vel.v + u_k.v)
    dE_p = dt * electric_power(F_k, u_mid, phase)

    # --- advance geometry once with the converged rigid velocities ---------
    pose_new = advance_pose(pose_k, dt)
    if gamma_min is not None:
        gap = gap_to_wall(pose_new, config.shape_obj, grid)
        if gap < gamma_min:
            raise TStarReached(state.t, gap, gamma_min)
    phase_new = build_phase_map(pose_new, config.shape_obj, grid,
                                phys.kappa1, phys.kappa2, phys.mu_p, phys.mu_f)
    rho_new = transport_fixed_charge(state.rho0, pose_new, grid,
                                     shape=config.shape_obj)
    if not np.array_equal(phase_new.fluid_mask, phase.fluid_mask):
        N_k = [redistribute_covered(Ni, phase.fluid_mask, phase_new.fluid_mask,
                                    grid) for Ni in N_k]

    new_diag = DiagAccum(
        E_d=state.diag.E_d + dE_d,
        E_d_strain=state.diag.E_d_strain + dE_d_strain,
        E_p=state.diag.E_p + dE_p,
        residual=report.final_residual,
        picard_iters=report.iterations,
    )
    new_state = SimState(
        t=state.t + dt,
        pose=pose_new,
        phase=phase_new,
        psi=psi_k,
        N=N_k,
        rho0=state.rho0,
        rho=rho_new,
        vel=u_k,
        p=p_k,
        diag=new_diag,
    )
    return new_state, report


def ledger_row(state: SimState, config) -> dict:
    """Diagnostic scalars recomputable from a state alone (replay contract)."""
    phys = config.physics
    E_k = kinetic_energy(state.vel, state.phase.mu)
    E_el = electrostatic_energy(state.psi, state.phase, state.N,
                                config.species_params, state.rho,
                                config.bc_obj, phys.e)
    row = {
        "t": state.t,
        "E_k": E_k,
        "E_d": state.diag.E_d,
        "E_p": state.diag.E_p,
        "E_el": E_el,
        "residual": state.diag.residual,
    }
    for i, Ni in enumerate(state.N):
        row[f"moles_{i}"] = total_moles(Ni, state.phase)
    row["total_fixed_charge"] = float(np.sum(state.rho) * config.grid_obj.cell_area)
    row["gap"] = gap_to_wall(state.pose, config.shape_obj, config.grid_obj)
    row["x_c"] = float(state.pose.x_c[0])
    row["y_c"] = float(state.pose.x_c[1])
    row["theta"] = float(state.pose.theta)
    row["v_cx"] = float(state.pose.v_c[0])
    row["v_cy"] = float(state.pose.v_c[1])
    row["w"] = float(state.pose.w)
    row["picard_iters"] = state.diag.picard_iters
    row["E_d_strain"] = state.diag.E_d_strain
    return row


@dataclass
class RunResult:
    status: str                      # "completed" | "tstar" | "error"
    state: SimState | None
    steps: int
    events: list[dict]
    ledger: EnergyLedger
    rows: list[dict]
    out_dir: str | None = None
    error: str | None = None


def build_initial_state(config) -> SimState:
    """Assemble the t=0 coupled state from a resolved configuration."""
    from .initial import initial_fields   # local import to avoid a cycle
    return initial_fields(config)


def run(config, out_dir: str | None = None, until: float | None = None,
        snapshot_every: float | None = None, quiet: bool = True) -> RunResult:
    """Run the coupled simulation; emits snapshots/diagnostics if out_dir set.

    Stops at t_end or at the separation event (whichever first); the emitted
    snapshots never violate gap >= gamma_min.  Identical configurations
    produce byte-identical diagnostic files.
    """
    from . import snapshot_io

    t_end = config.run.t_end if until is None else float(until)
    snap_dt = config.run.snapshot_every if snapshot_every is None else float(snapshot_every)
    gamma_min = config.run.gamma_min

    state = build_initial_state(config)
    ledger = EnergyLedger()
    events: list[dict] = []
    rows: list[dict] = []

    writer = None
    if out_dir is not None:
        writer = snapshot_io.RunWriter(out_dir, config)

    def emit_row(st: SimState):
        row = ledger_row(st, config)
        rows.append(row)
        if writer is not None:
            writer.write_row(row)

    def emit_snapshot(st: SimState):
        if writer is not None:
            writer.write_snapshot(st)

    def ledger_append(st: SimState, prev: DiagAccum | None):
        E_k = kinetic_energy(st.vel, st.phase.mu)
        E_el_val = rows[-1]["E_el"] if rows else 0.0
        d = st.diag
        dE_d = d.E_d - (prev.E_d if prev else 0.0)
        dE_ds = d.E_d_strain - (prev.E_d_strain if prev else 0.0)
        dE_p = d.E_p - (prev.E_p if prev else 0.0)
        ledger.append(st.t, E_k, dE_d, dE_ds, dE_p, E_el_val)

    status = "completed"
    error_msg = None
    steps = 0
    try:
        emit_row(state)
        ledger_append(state, None)
        emit_snapshot(state)
        next_snap = state.t + snap_dt if snap_dt else math.inf
        last_emitted_t = state.t

        while state.t < t_end - 1e-14 * max(1.0, abs(t_end)):
            dt = min(choose_dt(state, config), t_end - state.t)
            attempt = 0
            while True:
                try:
                    prev_diag = state.diag
                    new_state, report = picard_step(
                        state, config, dt, gamma_min=gamma_min)
                    break
                except TStarReached as ev:
                    events.append({
                        "type": "tstar", "t": state.t,
                        "gap": ev.gap, "gamma_min": ev.gamma_min,
                    })
                    status = "tstar"
                    new_state = None
                    break
                except (PicardError, StabilityError) as exc:
                    attempt += 1
                    events.append({
                        "type": "picard_failure", "t": state.t,
                        "dt": dt, "message": str(exc),
                    })
                    if attempt > config.run.max_dt_halvings:
                        raise
                    dt = 0.5 * dt
            if new_state is None:
                break
            state = new_state
            steps += 1
            emit_row(state)
            ledger_append(state, prev_diag)
            if state.t >= next_snap - 1e-12:
                emit_snapshot(state)
                last_emitted_t = state.t
                next_snap += snap_dt
            if not quiet:
                print(f"t={state.t:.6g} dt={dt:.3g} iters={report.iterations} "
                      f"gap={rows[-1]['gap']:.4g}")
        if last_emitted_t != state.t:
            emit_snapshot(state)
    except PnpFluidError as exc:
        status = "error"
        error_msg = f"{type(exc).__name__}: {exc}"
        events.append({"type": "error", "t": state.t, "message": error_msg})

    if writer is not None:
        writer.finish(events, status)
    return RunResult(status=status, state=state, steps=steps, events=events,
                     ledger=ledger, rows=rows, out_dir=out_dir, error=error_msg)
