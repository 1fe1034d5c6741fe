"""Assembly of the four-pulse mechanical squeezer.

Three forms are built from analytic pulse-strength selection rules:

* the ideal three-pulse sequence (X-X, P-P, X-X), which needs a
  momentum-momentum interaction not natively available;
* the pulsed four-pulse approximation, which replaces the P-P interaction
  with two X-X pulses wrapped in optical rotations plus a short mechanical
  rotation phi, and cancels the residual Kerr term with an extra optical
  rotation theta;
* the lossy variant, with beamsplitter loss in the optical delay line and
  damped thermal evolution of the mechanics during the delay.

Momentum is rescaled by mu (P' = mu P, X' = X / mu): mu < 1 squeezes
momentum, mu > 1 squeezes position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .channels import (GaussianChannel, LinearMap, NoiseTerm, beamsplitter_loss,
                       compose, damped_evolution, qnd_pp, qnd_xx, quadrature_scaling,
                       rotation, sigma_factor)
from .modes import MECH, MECH_OPT, ModeLayout, OPT
from .states import GaussianState, apply_channel, fidelity_zero_mean, squeezed, vacuum


@dataclass(frozen=True)
class PulseSchedule:
    """The four pulse strengths plus rotation angles and ancilla squeezing spec.

    ``chi2_second_pulse`` is the strength of the second X-X pulse,
    -lam / cos(phi). ``theta`` cancels the Kerr term for analytic schedules
    (tan(theta) = -lam^2 tan(phi)) but is left free so the numerical
    re-optimizer can adjust it.
    """

    chi1: float
    lam: float
    chi2_second_pulse: float
    chi3: float
    phi: float
    theta: float
    ancilla_vsq: float = 0.5
    ancilla_angle: float = 0.0

    def __post_init__(self):
        vals = (self.chi1, self.lam, self.chi2_second_pulse, self.chi3,
                self.phi, self.theta, self.ancilla_vsq, self.ancilla_angle)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("schedule contains non-finite entries")
        if self.ancilla_vsq <= 0:
            raise ValueError("ancilla squeezed variance must be positive")
        if 1.0 + self.lam * self.chi1 * math.tan(self.phi) <= 0:
            raise ValueError("schedule has no positive squeeze factor mu")

    @property
    def mu(self) -> float:
        """Momentum rescaling factor (1 + lam chi1 tan(phi))^-1."""
        return 1.0 / (1.0 + self.lam * self.chi1 * math.tan(self.phi))

    def kerr_cancellation_defect(self) -> float:
        """|tan(theta) + lam^2 tan(phi)|; zero for analytic schedules."""
        return abs(math.tan(self.theta) + self.lam ** 2 * math.tan(self.phi))


@dataclass(frozen=True)
class LossConfig:
    """Loss model: mechanical damping/bath plus delay-line beamsplitter loss."""

    gamma: float = 0.0
    omega_m: float = 1.0
    nbar_m: float = 0.0
    epsilon: float = 0.0
    nbar_l: float = 0.0

    def __post_init__(self):
        if min(self.gamma, self.nbar_m, self.epsilon, self.nbar_l) < 0:
            raise ValueError("loss parameters must be nonnegative")
        if self.omega_m <= 0:
            raise ValueError("mechanical frequency must be positive")
        if self.gamma >= 2.0 * self.omega_m:
            raise ValueError("overdamped mechanics not supported")
        if self.epsilon > 1.0:
            raise ValueError("loss fraction above 1")

    @classmethod
    def from_q(cls, q: float, nbar_m: float = 0.0, epsilon: float = 0.0,
               nbar_l: float = 0.0, omega_m: float = 1.0) -> "LossConfig":
        if q <= 0:
            raise ValueError("quality factor must be positive")
        return cls(gamma=omega_m / q, omega_m=omega_m, nbar_m=nbar_m,
                   epsilon=epsilon, nbar_l=nbar_l)

    @property
    def lossless(self) -> bool:
        return self.gamma == 0.0 and self.epsilon == 0.0


LOSSLESS = LossConfig()


# ---------------------------------------------------------------------------
# analytic selection rules
# ---------------------------------------------------------------------------

def chi2_for(chi1: float, chi3: float) -> float:
    """P-P strength -(1/chi1 + 1/chi3) that diagonalizes the three-pulse map
    and cancels the mechanical momentum's optical pickup."""
    if chi1 == 0 or chi3 == 0:
        raise ValueError("zero pulse strength has no matching chi2")
    return -(1.0 / chi1 + 1.0 / chi3)


def chi3_for(chi1: float, lam: float, phi: float) -> float:
    """Final-pulse strength that brings the four-pulse map into squeezer form."""
    t = math.tan(phi)
    denom = math.cos(phi) + lam * chi1 * math.sin(phi)
    if abs(denom) < 1e-12:
        raise ValueError("unreachable mu: singular chi3 denominator")
    return -chi1 * math.sqrt(1.0 + lam ** 4 * t * t) / denom


def theta_for(lam: float, phi: float) -> float:
    """Optical rotation angle cancelling the Kerr term: arctan(-lam^2 tan(phi))."""
    return math.atan(-lam ** 2 * math.tan(phi))


def schedule_for_mu(mu: float, phi: float, ancilla_vsq: float = 0.5) -> PulseSchedule:
    """Noise-optimal analytic schedule for a target squeeze factor.

    Uses |lam| = |chi1| with chi1 >= 0: lam = +chi1 squeezes momentum
    (mu < 1), lam = -chi1 squeezes position (mu > 1).  The ancilla squeezing
    angle is sign(1 - mu) * pi / 4.  mu = 1 returns the identity schedule
    (all strengths zero, the mechanical rotation phi still elapses).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not 0.0 < phi < math.pi / 2:
        raise ValueError("phi must lie in (0, pi/2)")
    t = math.tan(phi)
    chi1 = math.sqrt(abs(1.0 / mu - 1.0) / t)
    lam = math.copysign(chi1, 1.0 - mu) if mu != 1.0 else 0.0
    if mu == 1.0:
        chi1 = 0.0
    chi3 = chi3_for(chi1, lam, phi)
    sign = 0.0 if mu == 1.0 else math.copysign(1.0, 1.0 - mu)
    return PulseSchedule(chi1=chi1, lam=lam, chi2_second_pulse=-lam / math.cos(phi),
                         chi3=chi3, phi=phi, theta=theta_for(lam, phi),
                         ancilla_vsq=ancilla_vsq, ancilla_angle=sign * math.pi / 4.0)


# ---------------------------------------------------------------------------
# squeezer assembly
# ---------------------------------------------------------------------------

def build_ideal_squeezer(chi1: float, chi3: float,
                         layout: ModeLayout = MECH_OPT) -> LinearMap:
    """Three-pulse sequence XX(chi3) PP(chi2) XX(chi1) with chi2 from
    :func:`chi2_for`; the mechanical block is diag(-chi1/chi3, -chi3/chi1)."""
    chi2 = chi2_for(chi1, chi3)
    return qnd_xx(chi3, layout=layout) @ qnd_pp(chi2, layout=layout) @ qnd_xx(chi1, layout=layout)


def _pulsed_stages(schedule: PulseSchedule, layout: ModeLayout,
                   mech: str, opt: str) -> list[LinearMap]:
    """Temporal order of the four-pulse protocol (delay sits between stages 3 and 4)."""
    return [
        qnd_xx(schedule.chi1, mech, opt, layout),
        rotation(opt, math.pi / 2.0, layout),
        qnd_xx(schedule.lam, mech, opt, layout),
        rotation(mech, schedule.phi, layout),
        qnd_xx(schedule.chi2_second_pulse, mech, opt, layout),
        rotation(opt, schedule.theta - math.pi / 2.0, layout),
        qnd_xx(schedule.chi3, mech, opt, layout),
    ]


def build_pulsed_squeezer(schedule: PulseSchedule, layout: ModeLayout = MECH_OPT,
                          mech: str = "mech", opt: str = "opt") -> LinearMap:
    """Lossless four-pulse squeezer map.

    Its mechanical rows equal the mechanical rotation through phi applied to
    the plain squeezer form X' = X/mu + (1-mu) tan(phi) P + optical noise,
    P' = mu P.
    """
    stages = _pulsed_stages(schedule, layout, mech, opt)
    m = stages[0]
    for stage in stages[1:]:
        m = stage @ m
    return m


def build_lossy_squeezer(schedule: PulseSchedule, loss: LossConfig,
                         layout: ModeLayout = MECH_OPT, mech: str = "mech",
                         opt: str = "opt") -> GaussianChannel:
    """Four-pulse squeezer with delay-line loss and mechanical damping.

    During the delay the mechanics evolves under the damped propagator for
    t = phi / (sigma * omega_m) while the light takes beamsplitter loss
    epsilon with bath occupancy nbar_l.  Reduces exactly to
    :func:`build_pulsed_squeezer` (zero noise) when gamma = epsilon = 0.
    """
    sig = sigma_factor(loss.gamma, loss.omega_m)
    t_delay = schedule.phi / (sig * loss.omega_m)
    stages = [
        qnd_xx(schedule.chi1, mech, opt, layout).as_channel(),
        rotation(opt, math.pi / 2.0, layout).as_channel(),
        qnd_xx(schedule.lam, mech, opt, layout).as_channel(),
        beamsplitter_loss(loss.epsilon, loss.nbar_l, opt, layout),
        damped_evolution(loss.gamma, loss.omega_m, loss.nbar_m, t_delay, mech, layout),
        qnd_xx(schedule.chi2_second_pulse, mech, opt, layout).as_channel(),
        rotation(opt, schedule.theta - math.pi / 2.0, layout).as_channel(),
        qnd_xx(schedule.chi3, mech, opt, layout).as_channel(),
    ]
    return compose(stages)


def ideal_target_map(mu: float, phi: float, mode: str = "mech",
                     layout: ModeLayout = MECH) -> LinearMap:
    """Unitary image the squeezer aims for: diag(1/mu, mu) followed by the
    mechanical rotation through phi (outputs are compared in that frame)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return rotation(mode, phi, layout) @ quadrature_scaling(1.0 / mu, mu, mode, layout)


def ideal_target_state(state: GaussianState, mu: float, phi: float) -> GaussianState:
    if state.layout.mode_count != 1:
        raise ValueError("target comparison is single-mode")
    m = ideal_target_map(mu, phi, state.layout.labels[0], state.layout)
    return apply_channel(state, m.as_channel())


def ancilla_state(schedule: PulseSchedule) -> GaussianState:
    """Squeezed optical ancilla matching the schedule's squeezing spec."""
    return squeezed(schedule.ancilla_vsq, schedule.ancilla_angle, OPT)


def mechanical_reduced_channel(channel: GaussianChannel, ancilla: GaussianState,
                               mech: str = "mech", opt: str = "opt") -> GaussianChannel:
    """Marginalize the optical ancilla out of a two-mode channel.

    Valid for product inputs (mechanical state independent of the ancilla):
    the ancilla's covariance feeds the mechanical output through the
    mech-from-optical block and is absorbed into the channel noise.
    """
    layout = channel.layout
    if layout.mode_count != 2:
        raise ValueError("reduction expects a two-mode channel")
    if ancilla.layout.mode_count != 1:
        raise ValueError("ancilla must be single-mode")
    i = layout.x_index(mech)
    j = layout.x_index(opt)
    m = channel.map.matrix
    m_mm = m[i:i + 2, i:i + 2]
    m_mo = m[i:i + 2, j:j + 2]
    cov = m_mo @ ancilla.cov @ m_mo.T + channel.noise.cov[i:i + 2, i:i + 2]
    mean = m_mo @ ancilla.mean + channel.noise.mean[i:i + 2]
    out_layout = ModeLayout((mech,))
    return GaussianChannel(LinearMap(m_mm, out_layout), NoiseTerm(mean, cov))


def squeezer_output(schedule: PulseSchedule, loss: LossConfig,
                    input_state: GaussianState) -> GaussianState:
    """Apply the (lossy) squeezer to a single-mode mechanical input using the
    schedule's own ancilla."""
    channel = build_lossy_squeezer(schedule, loss)
    reduced = mechanical_reduced_channel(channel, ancilla_state(schedule))
    return apply_channel(input_state, reduced)


# ---------------------------------------------------------------------------
# budgets and regime diagnostics
# ---------------------------------------------------------------------------

def photon_budget(schedule: PulseSchedule) -> float:
    """Sum of squared pulse strengths chi1^2 + lam^2 + lam2^2 + chi3^2.

    In physical terms this is the total pulse photon number scaled by
    64 g0^2 / kappa^2 (equivalently, N ~ budget * (kappa / g0)^2 up to that
    factor-64 normalization, depending on the reading).
    """
    return (schedule.chi1 ** 2 + schedule.lam ** 2
            + schedule.chi2_second_pulse ** 2 + schedule.chi3 ** 2)


def approx_photon_budget(mu: float, phi: float) -> float:
    """Small-phi closed-form estimate |1 - 1/mu| (3 + (1 + (1 - 1/mu)^2) / mu^2) / tan(phi).

    Kept as the documented interface even though it tracks the exact
    pulse-strength sum only near mu = 1; for strong squeezing the two diverge
    (the exact sum is nearly symmetric under mu <-> 1/mu, the estimate is not).
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    r = 1.0 - 1.0 / mu
    return abs(r) * (3.0 + (1.0 + r * r) / (mu * mu)) / math.tan(phi)


def chi_from_physical(g0: float, n_photons: float, kappa: float) -> float:
    """Pulse strength -8 g0 sqrt(N) / kappa from physical drive parameters."""
    if kappa <= 0:
        raise ValueError("cavity linewidth must be positive")
    if n_photons < 0:
        raise ValueError("photon number must be nonnegative")
    return -8.0 * g0 * math.sqrt(n_photons) / kappa


def photons_for_chi(chi: float, g0: float, kappa: float) -> float:
    """Pulse photon number needed for strength ``chi``; inverse of
    :func:`chi_from_physical`."""
    if g0 <= 0 or kappa <= 0:
        raise ValueError("rates must be positive")
    return (chi * kappa / (8.0 * g0)) ** 2


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    ok: bool
    ratio: float
    margin: float


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple[RegimeCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]


def regime_check(g0: float, omega_m: float, kappa: float, pulse_bandwidth: float,
                 margin: float = 10.0) -> RegimeReport:
    """Non-fatal diagnostic of the pulsed-QND validity inequalities.

    Each 'a << b' check passes when b / a >= margin: weak single-photon
    coupling (g0 << omega_m), pulse shorter than the period
    (omega_m << bandwidth), no cavity distortion of the pulse
    (bandwidth << kappa), and the unresolved-sideband condition
    (omega_m << kappa).
    """
    if min(g0, omega_m, kappa, pulse_bandwidth) <= 0:
        raise ValueError("all rates must be positive")

    def check(name, small, big):
        ratio = big / small
        return RegimeCheck(name, ratio >= margin, ratio, margin)

    return RegimeReport((
        check("weak-coupling", g0, omega_m),
        check("sub-period-pulse", omega_m, pulse_bandwidth),
        check("pulse-distortion", pulse_bandwidth, kappa),
        check("unresolved-sideband", omega_m, kappa),
    ))


# ---------------------------------------------------------------------------
# numerical re-optimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleOptimization:
    schedule: PulseSchedule
    objective: float
    seed_objective: float
    converged: bool
    n_evaluations: int


def optimize_schedule(mu_target: float, phi: float, loss: LossConfig = LOSSLESS,
                      ancilla_vsq: float = 0.5, objective: str = "infidelity-to-target",
                      include_angles: bool = False,
                      max_iter: int = 2000) -> ScheduleOptimization:
    """Local derivative-free re-optimization of the pulse strengths.

    Minimizes the infidelity between the squeezer output on vacuum and the
    ideal target over (chi1, lam, chi3), seeded at and box-bounded around the
    analytic schedule, with theta and the ancilla angle tied to their analytic
    rules.  ``include_angles=True`` frees those two as well; with the extra
    freedom the lossless problem admits exactly unitary solutions even for a
    finitely squeezed ancilla, so the tied mode is the default to keep the
    optimum comparable to the analytic schedule.  Never returns anything worse
    than the seed; ``converged`` is False if the simplex hit max_iter.
    """
    if objective != "infidelity-to-target":
        raise ValueError(f"unsupported objective {objective!r}")
    seed = schedule_for_mu(mu_target, phi, ancilla_vsq)
    target = ideal_target_state(vacuum(MECH), mu_target, phi)
    cos_phi = math.cos(phi)

    def make(params) -> PulseSchedule:
        if include_angles:
            chi1, lam, chi3, theta, angle = params
        else:
            chi1, lam, chi3 = params
            theta, angle = theta_for(lam, phi), seed.ancilla_angle
        return PulseSchedule(chi1=chi1, lam=lam, chi2_second_pulse=-lam / cos_phi,
                             chi3=chi3, phi=phi, theta=theta,
                             ancilla_vsq=ancilla_vsq, ancilla_angle=angle)

    def infidelity(params) -> float:
        try:
            out = squeezer_output(make(params), loss, vacuum(MECH))
            return 1.0 - fidelity_zero_mean(out, target)
        except ValueError:
            return 1e6  # outside the physical branch

    x0 = np.array([seed.chi1, seed.lam, seed.chi3])
    if include_angles:
        x0 = np.append(x0, [seed.theta, seed.ancilla_angle])
    seed_objective = infidelity(x0)
    span = np.maximum(0.5 * np.abs(x0), 0.5)
    bounds = optimize.Bounds(x0 - span, x0 + span)
    res = optimize.minimize(infidelity, x0, method="Nelder-Mead", bounds=bounds,
                            options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-14})
    n_eval = int(res.nfev)
    if res.fun <= seed_objective:
        best, best_obj = make(res.x), float(res.fun)
    else:
        best, best_obj = seed, seed_objective
    return ScheduleOptimization(schedule=best, objective=best_obj,
                                seed_objective=seed_objective,
                                converged=bool(res.success), n_evaluations=n_eval)
