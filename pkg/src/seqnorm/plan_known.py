"""Known-variance multistage plans: construction, decisions, OC/ASN bounds.

A plan runs stages of cumulative sample sizes n_1 < ... < n_s.  At stage l
the statistic T_l = sqrt(n_l) (mean_{n_l} - gamma) / sigma is compared with
an accept threshold a_l (accept at or below) and a reject threshold b_l
(reject above); between them sampling continues.  Stage sizes follow a
geometric ladder whose top size makes the two thresholds meet, so the last
stage always decides.

The rejection envelope phi(theta) adds, over stages, the probability that
stage l-1 sat in the continue band while stage l crossed the reject line.
Conditioning on the fresh-sample direction turns each summand into the
Gaussian measure of a cone region, evaluated in closed form by the geometry
module.  phi taken at the indifference-zone endpoint equals the plan's
total boundary-crossing rate there, which is what calibration pins to the
error budget.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import DomainError, InsufficientDataError
from .geometry import ConeRegion, cone_prob
from .special import std_normal_cdf, std_normal_critical


class Decision(enum.IntEnum):
    """Stage outcome; integer values follow the 0/1/2 decision-variable coding."""

    CONTINUE = 0
    ACCEPT = 1
    REJECT = 2


@dataclass(frozen=True)
class Stage:
    """One checkpoint: cumulative size n, accept threshold a, reject threshold b."""

    n: int
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"stage size must be >= 1, got {self.n}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("stage thresholds must be finite")
        if self.a > self.b:
            raise DomainError(f"stage thresholds inverted: a={self.a} > b={self.b}")


def _validate_design_inputs(alpha, beta, epsilon, zeta, rho, tau):
    for name, val in (("alpha", alpha), ("beta", beta)):
        if not (0.0 < val < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {val}")
    for name, val in (("epsilon", epsilon), ("zeta", zeta), ("rho", rho)):
        if not (val > 0.0 and math.isfinite(val)):
            raise DomainError(f"{name} must be positive and finite, got {val}")
    if tau != int(tau) or tau < 1:
        raise DomainError(f"tau must be a positive integer, got {tau}")
    if zeta * alpha >= 1.0 or zeta * beta >= 1.0:
        raise DomainError(
            f"scaled tail masses zeta*alpha={zeta * alpha}, zeta*beta={zeta * beta} "
            "must stay below 1"
        )


@dataclass(frozen=True)
class KnownVarPlan:
    alpha: float
    beta: float
    epsilon: float
    gamma: float
    sigma: float
    zeta: float
    rho: float
    tau: int
    theta_star: float
    stages: tuple[Stage, ...]
    certified: bool = False

    kind = "known"

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.n for s in self.stages)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def with_certified(self, certified: bool) -> "KnownVarPlan":
        return replace(self, certified=certified)


def build_known_plan(
    alpha: float,
    beta: float,
    epsilon: float,
    gamma: float,
    sigma: float,
    zeta: float,
    rho: float,
    tau: int,
) -> KnownVarPlan:
    """Construct the known-variance plan for the given design parameters.

    Stage sizes are the distinct values of
    ceil((z_a + z_b)^2 / (4 eps^2) * (1 + rho)^(i - tau)), i = 1..tau,
    with z_a, z_b the upper-tail normal critical values at zeta*alpha and
    zeta*beta; duplicates collapse, so the plan may have fewer than tau
    stages.  Thresholds: a_l = min(theta*, eps sqrt(n_l) - z_b) and
    b_l = max(theta*, z_a - eps sqrt(n_l)) with theta* = (z_a - z_b) / 2.
    """
    _validate_design_inputs(alpha, beta, epsilon, zeta, rho, tau)
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma}")
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma}")
    tau = int(tau)

    z_a = std_normal_critical(zeta * alpha)
    z_b = std_normal_critical(zeta * beta)
    base = (z_a + z_b) ** 2 / (4.0 * epsilon * epsilon)
    sizes = sorted({max(1, math.ceil(base * (1.0 + rho) ** (i - tau))) for i in range(1, tau + 1)})
    theta_star = 0.5 * (z_a - z_b)

    stages = []
    for n in sizes:
        root = epsilon * math.sqrt(n)
        a = min(theta_star, root - z_b)
        b = max(theta_star, z_a - root)
        stages.append(Stage(n=n, a=a, b=b))
    return KnownVarPlan(
        alpha=float(alpha),
        beta=float(beta),
        epsilon=float(epsilon),
        gamma=float(gamma),
        sigma=float(sigma),
        zeta=float(zeta),
        rho=float(rho),
        tau=tau,
        theta_star=theta_star,
        stages=tuple(stages),
    )


def mirror_known_plan(plan: KnownVarPlan) -> KnownVarPlan:
    """Rebuild the plan with the roles of alpha and beta swapped.

    Stage sizes are unchanged by the swap; thresholds negate and exchange,
    which is what the acceptance-side bound evaluates.
    """
    return build_known_plan(
        alpha=plan.beta,
        beta=plan.alpha,
        epsilon=plan.epsilon,
        gamma=plan.gamma,
        sigma=plan.sigma,
        zeta=plan.zeta,
        rho=plan.rho,
        tau=plan.tau,
    )


def decide_stage(statistic: float, stage: Stage) -> Decision:
    """Accept at or below a, reject strictly above b, continue between."""
    if statistic <= stage.a:
        return Decision.ACCEPT
    if statistic > stage.b:
        return Decision.REJECT
    return Decision.CONTINUE


def statistic_known(
    samples: Sequence[float], n: int, gamma: float, sigma: float
) -> float:
    """sqrt(n) * (mean of the first n samples - gamma) / sigma."""
    if sigma <= 0.0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if len(samples) < n:
        raise InsufficientDataError(
            f"statistic needs {n} samples, only {len(samples)} supplied"
        )
    mean = math.fsum(samples[:n]) / n
    return math.sqrt(n) * (mean - gamma) / sigma


def _phi_terms(theta: float, stages: Sequence[Stage]):
    """Cone regions whose measures sum to phi(theta) beyond the first term."""
    for prev, cur in zip(stages[:-1], stages[1:]):
        ratio = cur.n / prev.n
        k = math.sqrt(ratio - 1.0)
        root = math.sqrt(cur.n) * theta
        h = cur.b - root
        g_b = -root + math.sqrt(ratio) * prev.b
        g_a = -root + math.sqrt(ratio) * prev.a
        yield ConeRegion(h=h, g=g_b, k=k), ConeRegion(h=h, g=g_a, k=k)


def oc_upper_phi(theta: float, plan: KnownVarPlan) -> float:
    """Rejection envelope phi(theta) for the plan's own thresholds.

    First stage contributes Phi(sqrt(n_1) theta - b_1); every later stage
    contributes the measure of a cone pair (continue band at l-1 crossed by
    the reject line at l).
    """
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    stages = plan.stages
    total = std_normal_cdf(math.sqrt(stages[0].n) * theta - stages[0].b)
    for region_b, region_a in _phi_terms(theta, stages):
        total += cone_prob(region_b) - cone_prob(region_a)
    return total


def oc_bounds_known(mu: float, plan: KnownVarPlan) -> tuple[float, float]:
    """Certified (lower, upper) bounds on Pr{accept | mean = mu}.

    Only stated outside the indifference zone: below it the acceptance
    probability exceeds 1 - phi(theta); above it, it stays below the
    mirror-plan envelope at -theta.
    """
    theta = (mu - plan.gamma) / plan.sigma
    if abs(theta) < plan.epsilon:
        raise DomainError(
            f"mu={mu} lies inside the indifference zone; no bound is stated there"
        )
    if theta <= -plan.epsilon:
        # phi may exceed 1 for uncalibrated designs; the bound floors at 0
        return min(1.0, max(0.0, 1.0 - oc_upper_phi(theta, plan))), 1.0
    mirrored = mirror_known_plan(plan)
    return 0.0, min(1.0, max(0.0, oc_upper_phi(-theta, mirrored)))


def sample_tail_known(ell: int, theta: float, plan: KnownVarPlan) -> float:
    """Bound on Pr{sampling continues past stage ell}: the continue-band mass."""
    s = plan.num_stages
    if not (1 <= ell <= s - 1):
        raise DomainError(
            f"stage index must lie in [1, {s - 1}] (sampling always stops at stage {s})"
        )
    stage = plan.stages[ell - 1]
    root = math.sqrt(stage.n) * theta
    value = std_normal_cdf(stage.b - root) - std_normal_cdf(stage.a - root)
    return max(0.0, value)
