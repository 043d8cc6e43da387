"""Problem statement, criticality arithmetic, and static threshold tests.

The equation is  i u_t + Lap u - c|x|^(-sigma) u = sign |u|^alpha u  with
sign = +1 (defocusing) or -1 (focusing).  Threshold tests compare scale-
invariant quantities of the initial data against ground-state (or bubble)
quantities and return which branch of the global/blow-up dichotomy the
data falls on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "EquationSpec",
    "CriticalityInfo",
    "ThresholdVerdict",
    "RegimeNotCoveredError",
    "MASS_SUBCRITICAL",
    "MASS_CRITICAL",
    "INTERCRITICAL",
    "ENERGY_CRITICAL",
    "ENERGY_SUPERCRITICAL",
    "GLOBAL_BRANCH",
    "BLOWUP_BRANCH",
    "NEITHER",
    "classify_criticality",
    "threshold_test",
    "glassey_delta_negative_energy",
    "negativity_margin",
]

MASS_SUBCRITICAL = "mass-subcritical"
MASS_CRITICAL = "mass-critical"
INTERCRITICAL = "intercritical"
ENERGY_CRITICAL = "energy-critical"
ENERGY_SUPERCRITICAL = "energy-supercritical"

GLOBAL_BRANCH = "global-branch"
BLOWUP_BRANCH = "blowup-branch"
NEITHER = "neither"


class RegimeNotCoveredError(ValueError):
    """The requested test has no defined branch in this regime."""


@dataclass(frozen=True)
class EquationSpec:
    """Full problem statement: dimension, potential, nonlinearity, sign."""

    d: int
    c: float
    sigma: float
    alpha: float
    sign: str  # "focusing" | "defocusing"

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension d={self.d} not supported (need 1, 2 or 3)")
        if not 0.0 < self.sigma < min(2.0, float(self.d)):
            raise ValueError(
                f"sigma={self.sigma} outside (0, min(2, d)) for d={self.d}"
            )
        if self.alpha <= 0.0:
            raise ValueError(f"alpha={self.alpha} must be positive")
        if self.sign not in ("focusing", "defocusing"):
            raise ValueError(f"sign={self.sign!r} must be focusing or defocusing")
        if self.d == 3 and self.alpha == 4.0 / (self.d - 2) and self.sigma >= 1.5:
            # energy-critical d=3 statements require sigma < 3/2
            raise ValueError(
                f"energy-critical d=3 requires sigma < 3/2, got sigma={self.sigma}"
            )

    @property
    def repulsive(self) -> bool:
        return self.c > 0.0

    @property
    def outside_dichotomy_theory(self) -> bool:
        """c <= 0 runs are accepted for exploration, but the global/blow-up
        dichotomy classification (threshold_test) does not apply to them."""
        return self.c <= 0.0

    @property
    def nonlinearity_sign(self) -> float:
        return 1.0 if self.sign == "defocusing" else -1.0


@dataclass(frozen=True)
class CriticalityInfo:
    """Scaling exponents and regime label for a given (d, alpha)."""

    gamma_c: float
    beta_c: float  # +inf at mass-critical, never used arithmetically there
    regime: str
    # the radial intercritical blow-up statement carries an extra
    # assumption alpha <= 4; recorded here, sharpness unknown
    radial_blowup_alpha_ok: bool


def classify_criticality(spec: EquationSpec) -> CriticalityInfo:
    """Regime label plus gamma_c = d/2 - 2/alpha and beta_c = (1-gamma_c)/gamma_c.

    Boundaries sit exactly at alpha = 4/d (mass-critical) and, for d = 3,
    alpha = 4/(d-2) (energy-critical); comparisons are in floating point so
    data constructed as alpha=4/d lands exactly on the boundary.
    """
    d, alpha = spec.d, spec.alpha
    gamma_c = d / 2.0 - 2.0 / alpha
    mass_crit_alpha = 4.0 / d
    if alpha < mass_crit_alpha:
        regime = MASS_SUBCRITICAL
    elif alpha == mass_crit_alpha:
        regime = MASS_CRITICAL
    elif d <= 2 or alpha < 4.0 / (d - 2):
        regime = INTERCRITICAL
    elif alpha == 4.0 / (d - 2):
        regime = ENERGY_CRITICAL
    else:
        regime = ENERGY_SUPERCRITICAL
    if regime == MASS_CRITICAL:
        beta_c = math.inf
    elif gamma_c != 0.0:
        beta_c = (1.0 - gamma_c) / gamma_c
    else:
        beta_c = math.inf
    return CriticalityInfo(
        gamma_c=gamma_c,
        beta_c=beta_c,
        regime=regime,
        radial_blowup_alpha_ok=(alpha <= 4.0),
    )


def beta_c_rational(d: int, alpha: float) -> float:
    """Equivalent form (4 - (d-2) alpha) / (d alpha - 4) of beta_c."""
    return (4.0 - (d - 2) * alpha) / (d * alpha - 4.0)


@dataclass(frozen=True)
class ThresholdVerdict:
    """Outcome of the static dichotomy test.

    quantity_em / bound_em: the energy-side comparison. Intercritical:
    E(u0) M^beta vs the ground-state product; energy-critical: E(u0) vs
    the bubble energy; mass-critical: E(u0) vs 0 (blow-up side).
    quantity_gm / bound_gm: the gradient-side (mass-critical: L2-norm)
    comparison against the ground state / bubble.
    """

    regime: str
    quantity_em: float
    bound_em: float
    quantity_gm: float
    bound_gm: float
    verdict: str
    radial_blowup_alpha_ok: bool = True


def _strictly_less(x, y, scale, rel_tol):
    return x < y - rel_tol * scale


def threshold_test(
    spec: EquationSpec,
    mass: float,
    energy: float,
    gradnorm: float,
    ground_state,
    rel_tol: float = 1e-9,
) -> ThresholdVerdict:
    """Classify initial data against the global/blow-up threshold conditions.

    mass = ||u0||_L2^2, energy = E(u0) (with the potential term), gradnorm
    = ||grad u0||_L2.  ground_state is a GroundState for the mass-critical
    and intercritical regimes and a Bubble for the energy-critical one.
    Comparisons within rel_tol of the bound return "neither" (the extremal
    object itself sits exactly on the boundary).
    """
    if spec.c < 0:
        raise RegimeNotCoveredError(
            "attractive potential (c < 0): outside the dichotomy classification"
        )
    info = classify_criticality(spec)
    if info.regime in (MASS_SUBCRITICAL, ENERGY_SUPERCRITICAL):
        raise RegimeNotCoveredError(f"regime-not-covered: {info.regime}")
    d, alpha = spec.d, spec.alpha

    if info.regime == MASS_CRITICAL:
        q_gm = math.sqrt(mass)
        b_gm = math.sqrt(ground_state.mass)
        e_scale = abs(energy) + gradnorm**2 + 1e-300
        if _strictly_less(q_gm, b_gm, b_gm, rel_tol):
            verdict = GLOBAL_BRANCH
        elif _strictly_less(energy, 0.0, e_scale, rel_tol):
            verdict = BLOWUP_BRANCH
        else:
            verdict = NEITHER
        return ThresholdVerdict(
            regime=info.regime,
            quantity_em=energy,
            bound_em=0.0,
            quantity_gm=q_gm,
            bound_gm=b_gm,
            verdict=verdict,
            radial_blowup_alpha_ok=info.radial_blowup_alpha_ok,
        )

    if info.regime == INTERCRITICAL:
        beta = info.beta_c
        q_gm = gradnorm * mass ** (beta / 2.0)
        b_gm = math.sqrt(ground_state.kinetic) * ground_state.mass ** (beta / 2.0)
        q_em = energy * mass**beta
        # E0(Q) M^beta(Q) = (d alpha - 4)/(2 d alpha) (||grad Q|| ||Q||^beta)^2
        b_em = (d * alpha - 4.0) / (2.0 * d * alpha) * b_gm**2
    else:  # energy-critical, ground_state is a Bubble
        q_em = energy
        b_em = ground_state.energy
        q_gm = gradnorm
        b_gm = math.sqrt(ground_state.kinetic)

    em_below = _strictly_less(q_em, b_em, abs(b_em) + 1e-300, rel_tol)
    gm_below = _strictly_less(q_gm, b_gm, b_gm, rel_tol)
    gm_above = _strictly_less(b_gm, q_gm, b_gm, rel_tol)
    if em_below and gm_below:
        verdict = GLOBAL_BRANCH
    elif em_below and gm_above:
        verdict = BLOWUP_BRANCH
    else:
        verdict = NEITHER
    return ThresholdVerdict(
        regime=info.regime,
        quantity_em=q_em,
        bound_em=b_em,
        quantity_gm=q_gm,
        bound_gm=b_gm,
        verdict=verdict,
        radial_blowup_alpha_ok=info.radial_blowup_alpha_ok,
    )


def glassey_delta_negative_energy(spec: EquationSpec, energy: float):
    """Convexity rate delta with d^2/dt^2 ||xu||^2 <= -delta for E(u0) < 0.

    Valid for the focusing equation with d*alpha >= 4 (mass-critical and
    above): the virial identity bounds the second derivative by
    4 d alpha E(u0).  Returns None when no such bound applies.
    """
    if spec.sign != "focusing" or energy >= 0 or spec.c < 0:
        return None
    if spec.d * spec.alpha < 4.0:
        return None
    return -4.0 * spec.d * spec.alpha * energy


def negativity_margin(spec: EquationSpec, mass: float, energy: float, ground_state):
    """Convexity rate delta for intercritical focusing data with E >= 0 on
    the blow-up branch: delta = 2(d alpha - 4) rho ||grad Q||^2 (M_Q/M_0)^beta
    with rho = 1 - E M^beta / (E0(Q) M_Q^beta).  None if not applicable."""
    if spec.sign != "focusing" or spec.c < 0:
        return None
    info = classify_criticality(spec)
    if info.regime != INTERCRITICAL:
        return None
    beta = info.beta_c
    d, alpha = spec.d, spec.alpha
    b_gm = math.sqrt(ground_state.kinetic) * ground_state.mass ** (beta / 2.0)
    bound_em = (d * alpha - 4.0) / (2.0 * d * alpha) * b_gm**2
    rho = 1.0 - (energy * mass**beta) / bound_em
    if rho <= 0:
        return None
    return (
        2.0
        * (d * alpha - 4.0)
        * rho
        * ground_state.kinetic
        * (ground_state.mass / mass) ** beta
    )
