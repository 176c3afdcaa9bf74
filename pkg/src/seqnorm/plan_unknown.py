"""Unknown-variance multistage plans: construction, decisions, interval OC
bounds via chi-square space partitioning, and ASN tails via noncentral t.

Stage sizes scale down geometrically from the smallest n at which the
accept and reject thresholds of the t-statistic meet.  The stage-l
statistic is the usual one-sample t against gamma at cumulative size n_l.

The rejection envelope for stage l >= 2 conditions on the pair (Y, Z) of
independent chi-square variables carrying the earlier-sample and
fresh-sample variability.  At a fixed (y, z) the conditional event is a
hyperbola-cone region in the (U, V) plane, monotone in y and z, so a
rectangle of (y, z) values yields certified upper and lower bounds from
the rectangle corners.  Truncating the chi-square tails and refining the
rectangle partition where the bound gap is largest gives an interval
that provably brackets the envelope; the truncated tail mass is added to
the upper end.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .errors import DomainError, DegenerateSampleError, InsufficientDataError, SeqnormError
from .geometry import ConeRegion, HyperbolaConeRegion, cone_prob, hyperbola_cone_prob
from .plan_known import Stage, _validate_design_inputs
from .special import (
    chi_square_cdf,
    chi_square_quantile,
    noncentral_t_cdf,
    student_t_critical,
)

_SIZE_SEARCH_LIMIT = 10**7


@dataclass(frozen=True)
class UnknownVarPlan:
    alpha: float
    beta: float
    epsilon: float
    gamma: float
    zeta: float
    rho: float
    tau: int
    theta_star: float
    n_star: int
    stages: tuple[Stage, ...]
    certified: bool = False

    kind = "unknown"

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.n for s in self.stages)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def with_certified(self, certified: bool) -> "UnknownVarPlan":
        return replace(self, certified=certified)


def min_stage_size(alpha: float, beta: float, epsilon: float, zeta: float) -> int:
    """Smallest n with t_{n-1, zeta*alpha} + t_{n-1, zeta*beta} <= 2 eps sqrt(n-1).

    The left side shrinks and the right side grows in n, so the predicate
    is monotone; a doubling search brackets the crossover and bisection
    pins it.
    """
    _validate_design_inputs(alpha, beta, epsilon, zeta, rho=1.0, tau=1)

    def ok(n: int) -> bool:
        dof = n - 1
        return (
            student_t_critical(dof, zeta * alpha) + student_t_critical(dof, zeta * beta)
            <= 2.0 * epsilon * math.sqrt(dof)
        )

    if ok(2):
        return 2
    lo = 2  # known to fail
    hi = 4
    while not ok(hi):
        lo = hi
        hi *= 2
        if hi > _SIZE_SEARCH_LIMIT:
            raise DomainError(
                f"no stage size up to {_SIZE_SEARCH_LIMIT} meets the threshold-closure "
                f"inequality; epsilon={epsilon} is too small for zeta={zeta}"
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def build_unknown_plan(
    alpha: float,
    beta: float,
    epsilon: float,
    gamma: float,
    zeta: float,
    rho: float,
    tau: int,
) -> UnknownVarPlan:
    """Construct the unknown-variance plan for the given design parameters.

    Stage sizes are the distinct values of ceil(n* (1+rho)^(i-tau)), floored
    at 2 so the sample deviation exists; thresholds use stage-specific t
    critical values:
    a_l = min(theta* sqrt(n_l - 1), eps sqrt(n_l - 1) - t_{n_l-1, zeta*beta}),
    b_l = max(theta* sqrt(n_l - 1), t_{n_l-1, zeta*alpha} - eps sqrt(n_l - 1)),
    theta* = (t_{n_s-1, zeta*alpha} - t_{n_s-1, zeta*beta}) / (2 sqrt(n_s - 1)).
    """
    _validate_design_inputs(alpha, beta, epsilon, zeta, rho, tau)
    if not math.isfinite(gamma):
        raise DomainError(f"gamma must be finite, got {gamma}")
    tau = int(tau)

    n_star = min_stage_size(alpha, beta, epsilon, zeta)
    raw = [math.ceil(n_star * (1.0 + rho) ** (i - tau)) for i in range(1, tau + 1)]
    if any(n < 2 for n in raw):
        warnings.warn(
            "stage sizes below 2 were clipped to 2 (sample variance needs two points)",
            RuntimeWarning,
            stacklevel=2,
        )
    sizes = sorted({max(2, n) for n in raw})

    dof_final = sizes[-1] - 1
    theta_star = (
        student_t_critical(dof_final, zeta * alpha) - student_t_critical(dof_final, zeta * beta)
    ) / (2.0 * math.sqrt(dof_final))

    stages = []
    for n in sizes:
        dof = n - 1
        root = math.sqrt(dof)
        a = min(theta_star * root, epsilon * root - student_t_critical(dof, zeta * beta))
        b = max(theta_star * root, student_t_critical(dof, zeta * alpha) - epsilon * root)
        stages.append(Stage(n=n, a=a, b=b))
    return UnknownVarPlan(
        alpha=float(alpha),
        beta=float(beta),
        epsilon=float(epsilon),
        gamma=float(gamma),
        zeta=float(zeta),
        rho=float(rho),
        tau=tau,
        theta_star=theta_star,
        n_star=n_star,
        stages=tuple(stages),
    )


def mirror_unknown_plan(plan: UnknownVarPlan) -> UnknownVarPlan:
    """Rebuild the plan with the roles of alpha and beta swapped."""
    return build_unknown_plan(
        alpha=plan.beta,
        beta=plan.alpha,
        epsilon=plan.epsilon,
        gamma=plan.gamma,
        zeta=plan.zeta,
        rho=plan.rho,
        tau=plan.tau,
    )


def statistic_unknown(samples: Sequence[float], n: int, gamma: float) -> float:
    """t-statistic sqrt(n) (mean - gamma) / sd over the first n samples."""
    if n < 2:
        raise DomainError(f"n must be >= 2 for a sample deviation, got {n}")
    if len(samples) < n:
        raise InsufficientDataError(
            f"statistic needs {n} samples, only {len(samples)} supplied"
        )
    window = samples[:n]
    mean = math.fsum(window) / n
    ss = math.fsum((x - mean) ** 2 for x in window)
    if ss <= 0.0:
        raise DegenerateSampleError("all samples equal; sample deviation is zero")
    sd = math.sqrt(ss / (n - 1))
    return math.sqrt(n) * (mean - gamma) / sd


# ---------------------------------------------------------------------------
# Partition machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionCell:
    """Rectangle in (y, z) space with mass-weighted bound contributions."""

    y_lo: float
    y_hi: float
    z_lo: float
    z_hi: float
    p_lower: float
    p_upper: float

    def __post_init__(self):
        if self.y_lo > self.y_hi or self.z_lo > self.z_hi:
            raise DomainError("cell bounds inverted")
        if self.p_lower > self.p_upper + 1e-12:
            raise SeqnormError(
                f"cell bound inversion: lower={self.p_lower} > upper={self.p_upper}"
            )

    @property
    def gap(self) -> float:
        return self.p_upper - self.p_lower


def refine_partition(
    cells: list[PartitionCell],
    budget: int,
    evaluate: Callable[[float, float, float, float], tuple[float, float]],
    spans: tuple[float, float],
) -> list[PartitionCell]:
    """Bisect the widest-gap cell until budget cells exist.

    evaluate(y_lo, y_hi, z_lo, z_hi) returns the (p_lower, p_upper)
    contribution of a rectangle.  The split axis is the side that is longer
    after normalizing by the initial rectangle's spans; equal gaps split
    the lowest-index cell, so the refinement path is deterministic and a
    larger budget extends the path of a smaller one.
    """
    if budget < len(cells):
        warnings.warn(
            f"cell budget {budget} below current cell count {len(cells)}; not refining",
            RuntimeWarning,
            stacklevel=2,
        )
        return cells
    y_span, z_span = spans
    cells = list(cells)
    while len(cells) < budget:
        best = max(range(len(cells)), key=lambda i: (cells[i].gap, -i))
        cell = cells[best]
        ny = (cell.y_hi - cell.y_lo) / y_span if y_span > 0.0 else 0.0
        nz = (cell.z_hi - cell.z_lo) / z_span if z_span > 0.0 else 0.0
        if ny <= 0.0 and nz <= 0.0:
            break  # nothing splittable (degenerate rectangle)
        if ny >= nz:
            mid = 0.5 * (cell.y_lo + cell.y_hi)
            lo_geom = (cell.y_lo, mid, cell.z_lo, cell.z_hi)
            hi_geom = (mid, cell.y_hi, cell.z_lo, cell.z_hi)
        else:
            mid = 0.5 * (cell.z_lo + cell.z_hi)
            lo_geom = (cell.y_lo, cell.y_hi, cell.z_lo, mid)
            hi_geom = (cell.y_lo, cell.y_hi, mid, cell.z_hi)
        children = []
        for geom in (lo_geom, hi_geom):
            p_lo, p_hi = evaluate(*geom)
            children.append(PartitionCell(*geom, p_lower=p_lo, p_upper=p_hi))
        cells[best] = children[0]
        cells.append(children[1])
    return cells


class _StageTermEvaluator:
    """Corner-bound evaluator for one envelope term's (y, z) rectangles.

    Bounds Pr{scale sqrt(V^2 + y + z) <= U - off <= k V + omega sqrt(y)}
    differences between two omega values using monotonicity: the radicand
    grows with y + z (shrinking the region) and the line intercept grows
    with omega sqrt(y).
    """

    def __init__(self, scale, off, k, omega_plus, omega_minus, dof_y, dof_z, negate):
        self.scale = scale
        self.off = off
        self.k = k
        self.omega_plus = omega_plus  # event entering the difference with +
        self.omega_minus = omega_minus  # event entering with -
        self.dof_y = dof_y
        self.dof_z = dof_z
        self.negate = negate  # True when the difference is nonpositive

    def event_prob(self, sum_yz: float, y_for_line: float, omega: float) -> float:
        g = omega * math.sqrt(y_for_line)
        if self.scale == 0.0:
            return cone_prob(ConeRegion(h=self.off, g=self.off + g, k=self.k))
        region = HyperbolaConeRegion(
            offset=self.off,
            lam=self.scale * self.scale,
            h=self.scale * self.scale * sum_yz,
            g=g,
            k=self.k,
        )
        return hyperbola_cone_prob(region)

    def _corner_bounds(self, y_lo, y_hi, z_lo, z_hi, omega):
        y_for_hi = y_hi if omega >= 0.0 else y_lo
        y_for_lo = y_lo if omega >= 0.0 else y_hi
        p_hi = self.event_prob(y_lo + z_lo, y_for_hi, omega)
        p_lo = self.event_prob(y_hi + z_hi, y_for_lo, omega)
        return p_lo, p_hi

    def mass(self, y_lo, y_hi, z_lo, z_hi) -> float:
        m = chi_square_cdf(y_hi, self.dof_y) - chi_square_cdf(y_lo, self.dof_y)
        if self.dof_z > 0:
            m *= chi_square_cdf(z_hi, self.dof_z) - chi_square_cdf(z_lo, self.dof_z)
        return max(0.0, m)

    def __call__(self, y_lo, y_hi, z_lo, z_hi) -> tuple[float, float]:
        a_lo, a_hi = self._corner_bounds(y_lo, y_hi, z_lo, z_hi, self.omega_plus)
        b_lo, b_hi = self._corner_bounds(y_lo, y_hi, z_lo, z_hi, self.omega_minus)
        if self.negate:
            diff_hi = min(0.0, a_hi - b_lo)
            diff_lo = max(-1.0, a_lo - b_hi)
        else:
            diff_hi = min(1.0, max(0.0, a_hi - b_lo))
            diff_lo = max(0.0, a_lo - b_hi)
        diff_lo = min(diff_lo, diff_hi)
        m = self.mass(y_lo, y_hi, z_lo, z_hi)
        return m * diff_lo, m * diff_hi


def _initial_cells(evaluator, y_lo, y_hi, z_lo, z_hi) -> list[PartitionCell]:
    y_mid = 0.5 * (y_lo + y_hi)
    if z_hi > z_lo:
        z_mid = 0.5 * (z_lo + z_hi)
        geoms = [
            (y_lo, y_mid, z_lo, z_mid),
            (y_mid, y_hi, z_lo, z_mid),
            (y_lo, y_mid, z_mid, z_hi),
            (y_mid, y_hi, z_mid, z_hi),
        ]
    else:
        geoms = [(y_lo, y_mid, z_lo, z_hi), (y_mid, y_hi, z_lo, z_hi)]
    cells = []
    for geom in geoms:
        p_lo, p_hi = evaluator(*geom)
        cells.append(PartitionCell(*geom, p_lower=p_lo, p_upper=p_hi))
    return cells


def stage_term_cells(
    theta: float, plan: UnknownVarPlan, ell: int, tail_budget: float, cell_budget: int
) -> tuple[list[PartitionCell], _StageTermEvaluator, tuple[float, float]]:
    """Partition cells bounding the stage-ell envelope term (ell >= 2, 1-based)."""
    prev = plan.stages[ell - 2]
    cur = plan.stages[ell - 1]
    dof_y = prev.n - 1
    dof_z = cur.n - prev.n - 1
    k = math.sqrt(cur.n / prev.n - 1.0)
    scale_prev = math.sqrt(cur.n / prev.n)
    c_prev = prev.a / math.sqrt(prev.n - 1)
    d_prev = prev.b / math.sqrt(prev.n - 1)
    d_cur = cur.b / math.sqrt(cur.n - 1)

    if d_cur >= 0.0:
        evaluator = _StageTermEvaluator(
            scale=d_cur,
            off=-math.sqrt(cur.n) * theta,
            k=k,
            omega_plus=scale_prev * d_prev,
            omega_minus=scale_prev * c_prev,
            dof_y=dof_y,
            dof_z=dof_z,
            negate=False,
        )
    else:
        evaluator = _StageTermEvaluator(
            scale=-d_cur,
            off=math.sqrt(cur.n) * theta,
            k=k,
            omega_plus=-scale_prev * d_prev,
            omega_minus=-scale_prev * c_prev,
            dof_y=dof_y,
            dof_z=dof_z,
            negate=True,
        )

    quarter = tail_budget / 4.0
    y_lo = chi_square_quantile(quarter, dof_y)
    y_hi = chi_square_quantile(1.0 - quarter, dof_y)
    if dof_z > 0:
        z_lo = chi_square_quantile(quarter, dof_z)
        z_hi = chi_square_quantile(1.0 - quarter, dof_z)
    else:
        z_lo = z_hi = 0.0

    cells = _initial_cells(evaluator, y_lo, y_hi, z_lo, z_hi)
    spans = (y_hi - y_lo, z_hi - z_lo)
    cells = refine_partition(cells, cell_budget, evaluator, spans)
    return cells, evaluator, spans


def _continue_band_prob(theta: float, stage: Stage) -> float:
    ncp = math.sqrt(stage.n) * theta
    dof = stage.n - 1
    value = noncentral_t_cdf(stage.b, dof, ncp) - noncentral_t_cdf(stage.a, dof, ncp)
    return max(0.0, value)


def oc_upper_P(
    theta: float,
    plan: UnknownVarPlan,
    tail_mass: float = 1e-4,
    cell_budget: int = 256,
) -> tuple[float, float]:
    """Interval [lower, upper] certified to bracket the rejection envelope.

    The first-stage term is a single noncentral-t tail and enters both ends
    exactly.  Each later term is bracketed by partition cells; the chi-square
    tail truncation budget is split evenly over those terms, so the total
    truncation slack absorbed into the interval is at most tail_mass.
    """
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    if not (0.0 < tail_mass < 1.0):
        raise DomainError(f"tail_mass must lie in (0, 1), got {tail_mass}")
    if cell_budget < 4:
        raise DomainError(f"cell_budget must be >= 4, got {cell_budget}")

    first = plan.stages[0]
    p1 = 1.0 - noncentral_t_cdf(first.b, first.n - 1, math.sqrt(first.n) * theta)
    lower = p1
    upper = p1
    s = plan.num_stages
    if s == 1:
        return lower, upper

    tail_budget = tail_mass / (s - 1)
    for ell in range(2, s + 1):
        cells, evaluator, _ = stage_term_cells(theta, plan, ell, tail_budget, cell_budget)
        cell_lo = math.fsum(c.p_lower for c in cells)
        cell_hi = math.fsum(c.p_upper for c in cells)
        if evaluator.negate:
            nct = _continue_band_prob(theta, plan.stages[ell - 2])
            term_lo = max(0.0, nct + cell_lo - tail_budget)
            term_hi = min(nct, nct + cell_hi)
        else:
            term_lo = max(0.0, cell_lo)
            term_hi = cell_hi + tail_budget
        if term_lo > term_hi + 1e-12:
            raise SeqnormError(
                f"stage {ell} interval inverted: [{term_lo}, {term_hi}]"
            )
        lower += term_lo
        upper += term_hi

    return lower, upper


def oc_bounds_unknown(
    theta: float,
    plan: UnknownVarPlan,
    tail_mass: float = 1e-4,
    cell_budget: int = 256,
) -> tuple[float, float]:
    """Certified (lower, upper) bounds on Pr{accept | mean = gamma + theta sigma}.

    Stated only outside the indifference zone, as for the known-variance
    plans; the acceptance-side bound evaluates the mirror plan at -theta.
    """
    if abs(theta) < plan.epsilon:
        raise DomainError(
            f"theta={theta} lies inside the indifference zone; no bound is stated there"
        )
    if theta <= -plan.epsilon:
        _, envelope_hi = oc_upper_P(theta, plan, tail_mass, cell_budget)
        return min(1.0, max(0.0, 1.0 - envelope_hi)), 1.0
    mirrored = mirror_unknown_plan(plan)
    _, envelope_hi = oc_upper_P(-theta, mirrored, tail_mass, cell_budget)
    return 0.0, min(1.0, max(0.0, envelope_hi))


def sample_tail_unknown(ell: int, theta: float, plan: UnknownVarPlan) -> float:
    """Bound on Pr{sampling continues past stage ell}: the continue-band mass."""
    s = plan.num_stages
    if not (1 <= ell <= s - 1):
        raise DomainError(
            f"stage index must lie in [1, {s - 1}] (sampling always stops at stage {s})"
        )
    return _continue_band_prob(theta, plan.stages[ell - 1])
