"""Energy functionals and the per-run conservation ledger.

The mechanical balance being monitored is

    d/dt E_k + dissipation - electric power = 0,

with E_k the density-weighted kinetic energy.  Two dissipation quadratures
are tracked:

  * ``E_d``        accumulates the exact drain of the discrete viscous
                   operator, -eta <u, Lap u> h^2 (the eta |grad u|^2 form);
                   this is the variant the per-step residual is measured
                   against, so the residual is purely a time-discretization
                   error,
  * ``E_d_strain`` accumulates 2 eta int_fluid D(u):D(u), the strain form.

Both converge to each other for solenoidal no-slip fields.  The electric
work increments use the midpoint velocity so the budget stays on the
dissipative side from the very first step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fluid import strain_rate_centers, viscous_drain
from .geometry import PhaseMap
from .grid import VelocityField


def _face_weights(vel: VelocityField):
    """Trapezoid face weights (wall faces count half) for field quadratures."""
    wu = np.ones_like(vel.u)
    wu[0, :] = 0.5
    wu[-1, :] = 0.5
    wv = np.ones_like(vel.v)
    wv[:, 0] = 0.5
    wv[:, -1] = 0.5
    return wu, wv


def kinetic_energy(vel: VelocityField, mu: np.ndarray) -> float:
    """1/2 int mu |u|^2 by face-midpoint quadrature."""
    from .fluid import _mu_at_faces
    mu_u, mu_v = _mu_at_faces(mu, vel.grid)
    wu, wv = _face_weights(vel)
    h2 = vel.grid.cell_area
    return 0.5 * h2 * (
        float(np.sum(wu * mu_u * vel.u**2)) + float(np.sum(wv * mu_v * vel.v**2))
    )


def dissipation_rate(vel: VelocityField, phase: PhaseMap, eta: float) -> float:
    """Instantaneous 2 eta int_fluid D(u):D(u), interface cells chi-weighted."""
    Dxx, Dxy, Dyy = strain_rate_centers(vel)
    contraction = Dxx**2 + 2.0 * Dxy**2 + Dyy**2
    w = 1.0 - phase.chi_body
    return 2.0 * eta * float(np.sum(w * contraction)) * phase.grid.cell_area


def dissipation_rate_gradient(vel: VelocityField, eta: float) -> float:
    """Instantaneous eta |grad u|^2 form: the exact discrete viscous drain."""
    return viscous_drain(vel, eta)


def electric_power(F, vel: VelocityField, phase: PhaseMap) -> float:
    """int mu_f F . u over the solvent (face quadrature)."""
    Fu, Fv = F
    wu, wv = _face_weights(vel)
    h2 = phase.grid.cell_area
    return phase.mu_f * h2 * (
        float(np.sum(wu * Fu * vel.u)) + float(np.sum(wv * Fv * vel.v))
    )


@dataclass
class EnergyLedger:
    """Per-step energy series of a run."""

    t: list[float] = field(default_factory=list)
    E_k: list[float] = field(default_factory=list)
    E_d: list[float] = field(default_factory=list)          # accumulated, grad form
    E_d_strain: list[float] = field(default_factory=list)   # accumulated, strain form
    E_p: list[float] = field(default_factory=list)          # accumulated electric work
    E_el: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)

    def append(self, t: float, E_k: float, dE_d: float, dE_d_strain: float,
               dE_p: float, E_el: float):
        if E_k < 0:
            raise ValueError("kinetic energy cannot be negative")
        prev_d = self.E_d[-1] if self.E_d else 0.0
        prev_ds = self.E_d_strain[-1] if self.E_d_strain else 0.0
        prev_p = self.E_p[-1] if self.E_p else 0.0
        self.t.append(t)
        self.E_k.append(E_k)
        self.E_d.append(prev_d + dE_d)
        self.E_d_strain.append(prev_ds + dE_d_strain)
        self.E_p.append(prev_p + dE_p)
        self.E_el.append(E_el)
        if len(self.E_k) == 1:
            self.residual.append(0.0)
        else:
            self.residual.append(energy_residual(self, len(self.E_k) - 1))

    def __len__(self) -> int:
        return len(self.t)


def energy_residual(ledger: EnergyLedger, step: int) -> float:
    """Budget defect  dE_k + dE_d - dE_p  over one recorded step."""
    if step < 1 or step >= len(ledger):
        raise IndexError("step out of range (needs a predecessor)")
    return (
        (ledger.E_k[step] - ledger.E_k[step - 1])
        + (ledger.E_d[step] - ledger.E_d[step - 1])
        - (ledger.E_p[step] - ledger.E_p[step - 1])
    )


def mechanical_bound_slack(ledger: EnergyLedger, step: int) -> float:
    """Signed defect of  E_k(t) + E_d(t) <= E_k(0) + E_p(t)  (negative = satisfied)."""
    return (
        ledger.E_k[step] + ledger.E_d[step]
        - ledger.E_k[0] - ledger.E_p[step]
    )
