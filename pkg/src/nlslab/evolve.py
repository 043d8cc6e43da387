"""Time integration of the equation and of its linear flow.

One Strang step is A(dt/2) B(dt) A(dt/2): A is the exact free flow
(Fourier multiplier on Cartesian grids, Crank-Nicolson on radial ones)
and B is the exact pointwise phase rotation by the potential plus the
nonlinearity, which commute pointwise and are applied in one exponential.
Both sub-flows are unitary, so discrete mass is conserved to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.linalg import solve_banded

from .equation import EquationSpec, glassey_delta_negative_energy
from .grid import (
    Field,
    Grid,
    InvalidFieldError,
    PotentialSpec,
    boundary_shell_mass_fraction,
    gradient_norm_sq,
)
from . import observables

__all__ = [
    "EvolveConfig",
    "TrajectoryOutcome",
    "SplitStepper",
    "step_strang",
    "evolve",
    "evolve_linear",
    "glassey_upper_bound",
]


@dataclass
class EvolveConfig:
    dt0: float
    t_end: float
    adaptivity: str = "fixed"  # "fixed" | "cfl-nonlinear"
    blowup_grad_factor: float = 100.0
    blowup_dt_floor: float = 1e-9
    checkpoint_stride: int = 0
    record_stride: int = 1
    cfl_constant: float = 0.1
    phi_r_list: tuple = ()
    epsilon_reg: float = 0.0
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.dt0 <= 0 or self.t_end <= 0:
            raise ValueError("dt0 and t_end must be positive")
        if self.blowup_grad_factor <= 1.0:
            raise ValueError("blowup_grad_factor must exceed 1")
        if self.adaptivity not in ("fixed", "cfl-nonlinear"):
            raise ValueError(f"unknown adaptivity {self.adaptivity!r}")


@dataclass
class TrajectoryOutcome:
    status: str  # "completed" | "blowup-detected" | "invalid"
    t_reached: float
    tstar_estimate: float | None
    glassey_bound: float | None
    records: list
    final_field: Field | None
    warnings: list = dataclass_field(default_factory=list)
    max_boundary_mass_fraction: float = 0.0


class SplitStepper:
    """Cached multipliers / banded operators for one (grid, spec) pair."""

    def __init__(self, grid: Grid, spec: EquationSpec, epsilon_reg=0.0):
        self.grid = grid
        self.spec = spec
        self.potential = PotentialSpec(spec.c, spec.sigma, epsilon_reg).sample(grid)
        self._half_cache = (None, None)
        self._cn_cache = (None, None)

    # -- A: exact (Cartesian) or Crank-Nicolson (radial) free flow -----

    def _linear_half(self, u, dt):
        g = self.grid
        if g.mode == "cartesian":
            tau = 0.5 * dt
            if self._half_cache[0] != tau:
                arg = tau * g.k_squared()
                self._half_cache = (tau, np.cos(arg) - 1j * np.sin(arg))
            return np.fft.ifftn(self._half_cache[1] * np.fft.fftn(u))
        return self._cn_step(u, 0.5 * dt)

    def _cn_step(self, u, tau):
        # (I - i tau/2 L) u+ = (I + i tau/2 L) u; unitary in the weighted
        # discrete inner product for the symmetric radial Laplacian L
        g = self.grid
        if self._cn_cache[0] != tau:
            z = 0.5j * tau
            n = g.n_r
            ab = np.zeros((3, n), dtype=np.complex128)
            ab[0, 1:] = -z * g._lap_upper
            ab[1, :] = 1.0 - z * g._lap_diag
            ab[2, :-1] = -z * g._lap_lower
            self._cn_cache = (tau, ab)
        z = 0.5j * tau
        rhs = u + z * self._apply_lap(u)
        return solve_banded((1, 1), self._cn_cache[1], rhs)

    def _apply_lap(self, u):
        g = self.grid
        out = g._lap_diag * u
        out[1:] = out[1:] + g._lap_lower * u[:-1]
        out[:-1] = out[:-1] + g._lap_upper * u[1:]
        return out

    # -- B: exact phase rotation (potential and nonlinearity commute) --

    def _phase(self, u, dt, nonlinear):
        phase = self.potential.copy()
        if nonlinear:
            phase += self.spec.nonlinearity_sign * np.abs(u) ** self.spec.alpha
        arg = dt * phase
        return u * (np.cos(arg) - 1j * np.sin(arg))

    def step(self, u, dt, nonlinear=True):
        u = self._linear_half(u, dt)
        u = self._phase(u, dt, nonlinear)
        return self._linear_half(u, dt)


def step_strang(u: Field, spec: EquationSpec, dt: float, stepper=None) -> Field:
    """Advance one Strang step; raises InvalidFieldError on NaN output."""
    if dt == 0.0:
        raise ValueError("dt must be nonzero")
    u.require_finite()
    if stepper is None:
        stepper = SplitStepper(u.grid, spec)
    values = stepper.step(u.values, dt)
    out = Field(u.grid, values, u.time + dt)
    out.require_finite()
    return out


def glassey_upper_bound(v0: float, vdot0: float, delta: float) -> float:
    """Blow-up time bound: positive root of v0 + vdot0 t - delta t^2 / 2.

    The variance obeys d^2 V / dt^2 <= -delta, so V reaches zero (and the
    solution must break down) no later than this root.
    """
    if v0 <= 0 or delta <= 0:
        raise ValueError("need v0 > 0 and delta > 0")
    return (vdot0 + np.sqrt(vdot0**2 + 2.0 * delta * v0)) / delta


def evolve(
    u0: Field,
    spec: EquationSpec,
    cfg: EvolveConfig,
    checkpoint_cb=None,
    glassey_delta=None,
) -> TrajectoryOutcome:
    """Integrate to t_end or to detected blow-up, recording observables.

    Blow-up detection requires both the gradient-growth and the dt-collapse
    criteria; either alone only produces a warning.  On a NaN the run stops
    with status "invalid" and the last good recorded field.
    """
    u0.require_finite()
    grid = u0.grid
    stepper = SplitStepper(grid, spec, cfg.epsilon_reg)
    phi_r = tuple(cfg.phi_r_list)
    rec0 = observables.record(u0, spec, phi_r=phi_r, epsilon_reg=cfg.epsilon_reg)
    records = [rec0]
    grad0 = np.sqrt(rec0.kinetic)
    warnings = []

    delta = glassey_delta
    if delta is None:
        delta = glassey_delta_negative_energy(spec, rec0.energy)
    bound = None
    if delta is not None and delta > 0 and rec0.virial > 0:
        vdot0 = observables.morawetz_action(u0, "quadratic")
        bound = float(glassey_upper_bound(rec0.virial, vdot0, delta))

    u = u0.values.copy()
    t = 0.0
    status = "completed"
    tstar = None
    shell_max = boundary_shell_mass_fraction(u0)
    last_good = u0.copy()
    warned_grad = warned_dt = False

    fixed = cfg.adaptivity == "fixed"
    if fixed:
        n_steps = max(1, int(round(cfg.t_end / cfg.dt0)))
        dt_fixed = cfg.t_end / n_steps

    step = 0
    while True:
        if fixed:
            if step >= n_steps:
                break
            dt = dt_fixed
        else:
            if t >= cfg.t_end * (1.0 - 1e-12):
                break
            sup = float(np.max(np.abs(u)))
            dt = cfg.dt0
            if sup > 0.0:
                raw = cfg.cfl_constant / sup**spec.alpha
                if raw < dt:
                    # power-of-two subdivision of dt0: keeps the cached
                    # linear multiplier valid across consecutive steps
                    dt = cfg.dt0 * 2.0 ** (-np.ceil(np.log2(cfg.dt0 / raw)))
            if dt < cfg.blowup_dt_floor:
                grad_now = np.sqrt(gradient_norm_sq(Field(grid, u, t)))
                if grad0 > 0 and grad_now >= cfg.blowup_grad_factor * grad0:
                    status = "blowup-detected"
                    tstar = t
                    break
                if not warned_dt:
                    warnings.append(
                        f"adaptive dt {dt:.3e} fell below the floor at t={t:.6g} "
                        "without gradient growth; clamped"
                    )
                    warned_dt = True
                dt = cfg.blowup_dt_floor
            dt = min(dt, cfg.t_end - t)

        with np.errstate(all="ignore"):  # overflow near blow-up produces the
            u = stepper.step(u, dt)      # NaNs the status check looks for
        step += 1
        t = step * dt_fixed if fixed else t + dt

        if not np.all(np.isfinite(u.view(np.float64))):
            status = "invalid"
            warnings.append(f"non-finite field after step {step} (t={t:.6g})")
            break

        at_end = (fixed and step == n_steps) or (
            not fixed and t >= cfg.t_end * (1.0 - 1e-12)
        )
        if step % cfg.record_stride == 0 or at_end:
            f = Field(grid, u, t)
            try:
                records.append(
                    observables.record(
                        f, spec, phi_r=phi_r, epsilon_reg=cfg.epsilon_reg
                    )
                )
            except InvalidFieldError as exc:
                status = "invalid"
                warnings.append(str(exc))
                break
            shell_max = max(shell_max, boundary_shell_mass_fraction(f))
            grad_now = np.sqrt(records[-1].kinetic)
            if grad0 > 0 and grad_now >= cfg.blowup_grad_factor * grad0 and not warned_grad:
                warnings.append(
                    f"gradient grew {grad_now / grad0:.1f}x at t={t:.6g} "
                    "without dt collapse"
                )
                warned_grad = True
            last_good = f.copy()
        if checkpoint_cb is not None and cfg.checkpoint_stride > 0:
            if step % cfg.checkpoint_stride == 0 or at_end:
                checkpoint_cb(Field(grid, u.copy(), t))
        if step >= cfg.max_steps:
            status = "invalid"
            warnings.append(f"max_steps={cfg.max_steps} exceeded at t={t:.6g}")
            break

    if status == "invalid":
        final_field = last_good
    else:
        final_field = Field(grid, u.copy(), t)
    if status == "blowup-detected" and bound is not None and tstar > 1.2 * bound:
        warnings.append(
            f"Tstar estimate {tstar:.6g} exceeds the Glassey bound {bound:.6g} by >20%"
        )
    return TrajectoryOutcome(
        status=status,
        t_reached=t,
        tstar_estimate=tstar,
        glassey_bound=bound,
        records=records,
        final_field=final_field,
        warnings=warnings,
        max_boundary_mass_fraction=shell_max,
    )


def evolve_linear(u0: Field, spec: EquationSpec, duration: float, dt: float) -> Field:
    """Propagate under the linear flow (potential kept, nonlinearity off).

    duration may be negative (backward propagation); both sub-flows are
    exactly invertible.  With c = 0 on a Cartesian grid this is the exact
    free propagator.
    """
    u0.require_finite()
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration == 0.0:
        return u0.copy()
    stepper = SplitStepper(u0.grid, spec)
    n_steps = max(1, int(round(abs(duration) / dt)))
    h = duration / n_steps
    u = u0.values.copy()
    for _ in range(n_steps):
        u = stepper.step(u, h, nonlinear=False)
    out = Field(u0.grid, u, u0.time + duration)
    out.require_finite()
    return out
