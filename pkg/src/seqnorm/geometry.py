"""Gaussian measure of planar cone and hyperbola-cone domains.

For independent standard normals (U, V), the probability of a convex domain
is reduced to one-dimensional integrals over the polar angle by decomposing
the boundary into visible pieces (reachable from the origin by a straight
segment outside the domain) and invisible pieces.  A domain containing the
origin contributes 1 - (1/2pi) * integral of exp(-B(phi)^2/2) over its
boundary; a domain excluding the origin contributes the signed difference
of the visible and invisible boundary integrals.

Two closed-form region families drive the multistage test bounds:

- ``ConeRegion``          {(u, v) : h <= u <= k v + g}
- ``HyperbolaConeRegion`` {(u, v) : sqrt(lam v^2 + h) <= u - offset <= k v + g}

The cone evaluator splits into three configurations on the signs of h and
g.  The hyperbola-cone evaluator first classifies the parameters into four
feasible families (or an empty zero branch) and then, within each family,
dispatches on the position of the origin relative to the tangent-line
intercepts, the vertex, and the line intercept, for 16 leaf formulas in
total.  All integrals are signed, which lets one printed expression cover
configurations where an angle pair swaps order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolationError, DomainError, InconsistentBoundaryError
from .quadrature import integrate

_TWO_PI = 2.0 * math.pi
_INV_TWO_PI = 1.0 / _TWO_PI
_HALF_PI = 0.5 * math.pi


# ---------------------------------------------------------------------------
# Region families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeRegion:
    """Wedge {h <= u <= k v + g} bounded left by a vertical barrier."""

    h: float
    g: float
    k: float

    def __post_init__(self):
        for name in ("h", "g", "k"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.k <= 0.0:
            raise DomainError(f"k must be > 0, got {self.k}")

    def contains(self, u, v):
        return (u >= self.h) & (u <= self.k * v + self.g)

    def u_interval(self, v):
        """Per-v section [lo, hi]; empty where lo > hi."""
        v = np.asarray(v, dtype=float)
        lo = np.full_like(v, self.h)
        hi = self.k * v + self.g
        return lo, hi


@dataclass(frozen=True)
class HyperbolaConeRegion:
    """Domain {sqrt(lam v^2 + h) <= u - offset <= k v + g}."""

    offset: float
    lam: float
    h: float
    g: float
    k: float

    def __post_init__(self):
        for name in ("offset", "lam", "h", "g", "k"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.lam <= 0.0:
            raise DomainError(f"lam must be > 0, got {self.lam}")
        if self.h < 0.0:
            raise DomainError(f"h must be >= 0, got {self.h}")
        if self.k <= 0.0:
            raise DomainError(f"k must be > 0, got {self.k}")

    def contains(self, u, v):
        z = u - self.offset
        return (np.sqrt(self.lam * v * v + self.h) <= z) & (z <= self.k * v + self.g)

    def u_interval(self, v):
        v = np.asarray(v, dtype=float)
        lo = self.offset + np.sqrt(self.lam * v * v + self.h)
        hi = self.offset + self.k * v + self.g
        return lo, hi


# ---------------------------------------------------------------------------
# Integrands
# ---------------------------------------------------------------------------


def _barrier_exponent(phi: np.ndarray, level: float) -> np.ndarray:
    """exp(-level^2 / (2 cos^2 phi)) / (2 pi), elementwise, 0 where cos = 0."""
    if level == 0.0:
        return np.full_like(phi, _INV_TWO_PI)
    c2 = np.cos(phi) ** 2
    out = np.zeros_like(phi)
    nz = c2 > 0.0
    with np.errstate(over="ignore", under="ignore"):
        out[nz] = _INV_TWO_PI * np.exp(-(level * level) / (2.0 * c2[nz]))
    return out


def psi_barrier_integrand(phi, h: float):
    """Polar integrand of the vertical barrier u = h."""
    phi = np.asarray(phi, dtype=float)
    return _barrier_exponent(phi, float(h))


def psi_line_integrand(phi, g: float, k: float, offset: float = 0.0):
    """Polar integrand of the line u = k v + (g + offset)."""
    if k <= 0.0:
        raise DomainError(f"k must be > 0, got {k}")
    phi = np.asarray(phi, dtype=float)
    level = abs(g + offset) / math.sqrt(1.0 + k * k)
    return _barrier_exponent(phi, level)


def _hyperbola_polar_sq_radius(
    phi: np.ndarray, offset: float, lam: float, h: float, strict: bool
) -> np.ndarray:
    """Squared radius of the near root of the hyperbola's polar quadratic.

    The polar points of {(u - offset)^2 - lam v^2 = h} solve
    (cos^2 - lam sin^2) r^2 - 2 offset cos(phi) r + eta = 0 with
    eta = offset^2 - h.  The near root eta / (offset cos + sqrt(rad)) is the
    one the case tables integrate; the far root enters the tables through a
    half-turn shift of the angle.  At eta = 0 the ratio is 0/0 and the root
    continues to 0 where the denominator stays away from zero and to
    2 offset cos(phi) / (cos^2 - lam sin^2) where it vanishes.
    """
    eta = offset * offset - h
    c = np.cos(phi)
    s = np.sin(phi)
    rad = h * c * c + lam * eta * s * s
    scale = abs(h) + lam * abs(eta) + 1e-300
    bad = rad < -1e-10 * scale
    if np.any(bad):
        if strict:
            raise DomainError(
                "negative radicand in hyperbola polar root: angle outside the "
                "branch's admissible interval"
            )
        rad = np.where(bad, np.inf, rad)  # forces the integrand to 0
    rad = np.maximum(rad, 0.0)
    sq = np.sqrt(rad)
    num = offset * c
    # two algebraically equal forms of the near root; each cancels on the
    # opposite sign of offset*cos(phi), so pick per element
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        den = num + sq
        ratio = np.where(
            den != 0.0,
            eta / np.where(den != 0.0, den, 1.0),
            0.0 if eta == 0.0 else np.inf,
        )
        aq = c * c - lam * s * s
        stable = np.where(
            aq != 0.0,
            (num - sq) / np.where(aq != 0.0, aq, 1.0),
            np.inf,
        )
    r = np.where(num >= 0.0, ratio, stable)
    return r * r


def upsilon_integrand(phi, offset: float, lam: float, h: float):
    """Polar integrand of the right hyperbola branch (strict-domain variant)."""
    if lam <= 0.0:
        raise DomainError(f"lam must be > 0, got {lam}")
    if h < 0.0:
        raise DomainError(f"h must be >= 0, got {h}")
    phi = np.asarray(phi, dtype=float)
    r2 = _hyperbola_polar_sq_radius(phi, float(offset), float(lam), float(h), strict=True)
    with np.errstate(over="ignore", under="ignore"):
        return _INV_TWO_PI * np.exp(-0.5 * r2)


def _upsilon_lenient(offset: float, lam: float, h: float) -> Callable[[np.ndarray], np.ndarray]:
    def f(phi: np.ndarray) -> np.ndarray:
        r2 = _hyperbola_polar_sq_radius(phi, offset, lam, h, strict=False)
        with np.errstate(over="ignore", under="ignore"):
            return _INV_TWO_PI * np.exp(-0.5 * r2)

    return f


# ---------------------------------------------------------------------------
# General polar boundaries (origin inside / outside)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPiece:
    """One boundary arc: radius(phi) over [start, end], visible or not."""

    start: float
    end: float
    radius: Callable[[np.ndarray], np.ndarray]
    visible: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise DomainError("piece angles must be finite")
        if self.end <= self.start:
            raise DomainError("piece must have end > start")
        if self.end - self.start > _TWO_PI + 1e-9:
            raise DomainError("piece spans more than a full turn")


@dataclass(frozen=True)
class PolarBoundary:
    pieces: tuple[BoundaryPiece, ...]

    def __init__(self, pieces: Sequence[BoundaryPiece]):
        object.__setattr__(self, "pieces", tuple(pieces))


def _normalized_intervals(pieces: Sequence[BoundaryPiece]) -> list[tuple[float, float]]:
    """Shift each interval so its start lies in [0, 2pi), sorted by start."""
    out = []
    for p in pieces:
        shift = math.floor(p.start / _TWO_PI) * _TWO_PI
        out.append((p.start - shift, p.end - shift))
    return sorted(out)


def _check_disjoint(intervals: list[tuple[float, float]], tol: float = 1e-9) -> None:
    # wrapped tails (beyond 2pi) are compared against the leading intervals
    events = []
    for a, b in intervals:
        if b <= _TWO_PI + tol:
            events.append((a, min(b, _TWO_PI)))
        else:
            events.append((a, _TWO_PI))
            events.append((0.0, b - _TWO_PI))
    events.sort()
    for (a1, b1), (a2, b2) in zip(events, events[1:]):
        if a2 < b1 - tol:
            raise ContractViolationError(
                f"boundary pieces overlap near angle {a2:.6f}"
            )


def _piece_integral(piece: BoundaryPiece, tol: float = 1e-12) -> float:
    def f(phi: np.ndarray) -> np.ndarray:
        r = np.asarray(piece.radius(phi), dtype=float)
        if np.any(r < 0.0):
            raise DomainError("boundary radius must be nonnegative")
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(-0.5 * r * r)

    return integrate(f, piece.start, piece.end, tol=tol)


def origin_domain_prob(boundary: PolarBoundary) -> float:
    """Probability of a convex domain containing the origin.

    Angles not covered by any piece are directions in which the domain is
    unbounded; they contribute nothing to the boundary integral.
    """
    if not boundary.pieces:
        raise ContractViolationError("boundary has no pieces")
    if not all(p.visible for p in boundary.pieces):
        raise ContractViolationError("a domain containing the origin has no invisible boundary")
    intervals = _normalized_intervals(boundary.pieces)
    if sum(b - a for a, b in intervals) > _TWO_PI + 1e-9:
        raise ContractViolationError("boundary pieces wind more than a full turn")
    _check_disjoint(intervals)
    total = sum(_piece_integral(p) for p in boundary.pieces)
    return _clamp_unit(1.0 - _INV_TWO_PI * total, slack=1e-9)


def offset_domain_prob(boundary: PolarBoundary) -> float:
    """Probability of a convex domain not containing the origin.

    Signed difference of the visible and invisible boundary integrals.
    Every invisible arc must sit behind a visible one, so the invisible
    angle set must be covered by the visible angle set.
    """
    visible = [p for p in boundary.pieces if p.visible]
    invisible = [p for p in boundary.pieces if not p.visible]
    if not visible:
        raise ContractViolationError("no visible pieces supplied")
    vis_ints = _normalized_intervals(visible)
    _check_disjoint(vis_ints)
    if invisible:
        _check_disjoint(_normalized_intervals(invisible))
        _check_covered(_normalized_intervals(invisible), vis_ints)
    total_v = sum(_piece_integral(p) for p in visible)
    total_i = sum(_piece_integral(p) for p in invisible)
    value = _INV_TWO_PI * (total_v - total_i)
    if value < -1e-9 or value > 1.0 + 1e-9:
        raise InconsistentBoundaryError(
            f"visible/invisible decomposition gives probability {value}"
        )
    return _clamp_unit(value, slack=1e-9)


def _check_covered(
    inner: list[tuple[float, float]], outer: list[tuple[float, float]], tol: float = 1e-9
) -> None:
    def unwrap(ints):
        flat = []
        for a, b in ints:
            if b <= _TWO_PI + tol:
                flat.append((a, min(b, _TWO_PI)))
            else:
                flat.append((a, _TWO_PI))
                flat.append((0.0, b - _TWO_PI))
        return sorted(flat)

    outer_flat = unwrap(outer)
    for a, b in unwrap(inner):
        pos = a
        for oa, ob in outer_flat:
            if oa <= pos + tol and ob >= pos:
                pos = max(pos, ob)
            if pos >= b - tol:
                break
        if pos < b - tol:
            raise ContractViolationError(
                "invisible boundary angles are not covered by visible ones"
            )


def _clamp_unit(value: float, slack: float) -> float:
    if value < 0.0:
        if value < -slack:
            raise InconsistentBoundaryError(f"probability {value} below 0")
        return 0.0
    if value > 1.0:
        if value > 1.0 + slack:
            raise InconsistentBoundaryError(f"probability {value} above 1")
        return 1.0
    return float(value)


# ---------------------------------------------------------------------------
# Cone evaluator
# ---------------------------------------------------------------------------


def cone_prob(region: ConeRegion, tol: float = 1e-12) -> float:
    """Pr{h <= U <= k V + g} by the three-configuration boundary split."""
    h, g, k = region.h, region.g, region.k
    phi_k = math.atan(k)
    if h != 0.0:
        phi_r = math.atan((h - g) / (k * h))
    else:
        # barrier through the origin: the corner recedes to infinity and its
        # angle tends to a quarter turn; +pi/2 is the limit consistent with
        # both branch formulas that can receive h = 0 (at g = 0 the angle
        # cancels out entirely)
        phi_r = _HALF_PI

    level_line = abs(g) / math.sqrt(1.0 + k * k)

    def psi_h(phi):
        return _barrier_exponent(phi, h)

    def psi_line(phi):
        return _barrier_exponent(phi, level_line)

    if max(g, h) < 0.0:
        value = integrate(psi_line, _HALF_PI, math.pi + phi_k + phi_r, tol=tol) - integrate(
            psi_h, _HALF_PI, math.pi + phi_r, tol=tol
        )
    elif h <= 0.0 <= g:
        value = (
            1.0
            - integrate(psi_h, _HALF_PI, math.pi + phi_r, tol=tol)
            - integrate(psi_line, phi_k + phi_r, 1.5 * math.pi, tol=tol)
        )
    else:
        value = integrate(psi_h, phi_r, _HALF_PI, tol=tol) - integrate(
            psi_line, phi_k + phi_r, _HALF_PI, tol=tol
        )
    return _clamp_unit(value, slack=1e-7)


# ---------------------------------------------------------------------------
# Hyperbola-cone evaluator
# ---------------------------------------------------------------------------


def _abs_polar_angle(u: float, v: float) -> float:
    norm = math.hypot(u, v)
    if norm == 0.0:
        return 0.0
    return math.acos(min(1.0, max(-1.0, u / norm)))


@dataclass(frozen=True)
class _BranchData:
    leaf: str  # "zero", "np1".."np5", "pp1".."pp3", "n1".."n5", "p1".."p3"
    lam: float  # possibly nudged off the degenerate surface
    phi_a: float = 0.0
    phi_b: float = 0.0
    phi_k: float = 0.0
    phi_lam: float = 0.0
    phi_m: float = 0.0


def _branch_geometry(region: HyperbolaConeRegion) -> _BranchData:
    off = region.offset
    lam = region.lam
    h = region.h
    g = region.g
    k = region.k
    k2 = k * k

    if abs(k2 - lam) <= 1e-9 * max(k2, lam):
        warnings.warn(
            "hyperbola shape coincides with the squared line slope; nudging "
            "the shape parameter off the degenerate surface",
            RuntimeWarning,
            stacklevel=3,
        )
        lam = k2 * (1.0 + 1e-8) if lam >= k2 else k2 * (1.0 - 1e-8)

    sqrt_h = math.sqrt(h)
    delta = h * (k2 - lam) + lam * g * g

    if k2 < lam:
        if g > sqrt_h:
            family = "np"
        elif g > 0.0 and delta >= 0.0:
            family = "pp"
        else:
            return _BranchData(leaf="zero", lam=lam)
    else:
        family = "n" if g * k > math.sqrt(max(delta, 0.0)) else "p"

    sqd = math.sqrt(max(delta, 0.0))
    denom = lam - k2
    z_a = (lam * g - k * sqd) / denom
    z_b = (lam * g + k * sqd) / denom
    u_a = off + z_a
    u_b = off + z_b
    v_a = (g * k - sqd) / denom
    v_b = (g * k + sqd) / denom

    phi_a = _abs_polar_angle(u_a, v_a)
    phi_b = _abs_polar_angle(u_b, v_b)
    eta = off * off - h
    if eta == 0.0:
        phi_m = _HALF_PI
    elif h == 0.0:
        phi_m = 0.0
    else:
        phi_m = math.atan(math.sqrt(h / (lam * abs(eta))))

    # special points on the u-axis: Q and P are the tangent intercepts from
    # B and A, C is the vertex, R the line intercept, M the center (u = off)
    u_p = off + (h / z_a if z_a != 0.0 else 0.0)
    u_q = off + (h / z_b if z_b != 0.0 else 0.0)
    u_c = off + sqrt_h
    u_r = off + g

    if family == "np":
        if u_q >= 0.0:
            idx = 1
        elif u_p >= 0.0:
            idx = 2
        elif u_c >= 0.0:
            idx = 3
        elif u_r >= 0.0:
            idx = 4
        else:
            idx = 5
    elif family == "pp":
        idx = 1 if u_q >= 0.0 else (2 if u_p >= 0.0 else 3)
    elif family == "n":
        if off >= 0.0:
            idx = 1
        elif u_p >= 0.0:
            idx = 2
        elif u_c >= 0.0:
            idx = 3
        elif u_r >= 0.0:
            idx = 4
        else:
            idx = 5
    else:
        idx = 1 if off >= 0.0 else (2 if u_p >= 0.0 else 3)

    return _BranchData(
        leaf=f"{family}{idx}",
        lam=lam,
        phi_a=phi_a,
        phi_b=phi_b,
        phi_k=math.atan(k),
        phi_lam=math.atan(1.0 / math.sqrt(lam)),
        phi_m=phi_m,
    )


def classify_branch(region: HyperbolaConeRegion) -> str:
    """Name of the closed-form leaf the region dispatches to ("zero" if empty)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return _branch_geometry(region).leaf


def hyperbola_cone_prob(region: HyperbolaConeRegion, tol: float = 1e-12) -> float:
    """Pr{(U, V) in region} via the 16-leaf closed-form dispatch."""
    data = _branch_geometry(region)
    if data.leaf == "zero":
        return 0.0
    off = region.offset
    lam = data.lam
    h = region.h
    g = region.g
    k = region.k

    phi_a = data.phi_a
    phi_b = data.phi_b
    phi_k = data.phi_k
    phi_lam = data.phi_lam
    phi_m = data.phi_m

    level_line = abs(off + g) / math.sqrt(1.0 + k * k)

    def psi(phi):
        return _barrier_exponent(phi, level_line)

    ups = _upsilon_lenient(off, lam, h)
    pi = math.pi

    def iv(f, a, b):
        return integrate(f, a, b, tol=tol)

    leaf = data.leaf
    if leaf == "np1":
        value = iv(ups, pi - phi_a, pi + phi_b) - iv(psi, phi_k - phi_a, phi_k + phi_b)
    elif leaf == "np2":
        value = (
            iv(ups, pi - phi_a, pi + phi_m)
            - iv(ups, phi_b, phi_m)
            - iv(psi, phi_k - phi_a, phi_k + phi_b)
        )
    elif leaf == "np3":
        value = (
            iv(ups, pi - phi_m, pi + phi_m)
            - iv(ups, phi_b, phi_m)
            - iv(ups, phi_a, phi_m)
            - iv(psi, phi_k - phi_a, phi_k + phi_b)
        )
    elif leaf == "np4":
        value = (
            1.0
            - iv(psi, phi_k - phi_a, phi_k + phi_b)
            - iv(ups, phi_b, _TWO_PI - phi_a)
        )
    elif leaf == "np5":
        value = iv(psi, phi_k + phi_b, phi_k - phi_a + _TWO_PI) - iv(
            ups, phi_b, _TWO_PI - phi_a
        )
    elif leaf == "pp1":
        value = iv(ups, pi + phi_a, pi + phi_b) - iv(psi, phi_k + phi_a, phi_k + phi_b)
    elif leaf == "pp2":
        value = (
            iv(ups, pi + phi_a, pi + phi_m)
            - iv(ups, phi_b, phi_m)
            - iv(psi, phi_k + phi_a, phi_k + phi_b)
        )
    elif leaf == "pp3":
        value = iv(psi, phi_k + phi_b, phi_k + phi_a) - iv(ups, phi_b, phi_a)
    elif leaf == "n1":
        value = iv(ups, pi - phi_a, pi + phi_lam) - iv(psi, phi_k - phi_a, _HALF_PI)
    elif leaf == "n2":
        value = (
            iv(ups, pi - phi_a, pi + phi_m)
            - iv(ups, phi_lam, phi_m)
            - iv(psi, phi_k - phi_a, _HALF_PI)
        )
    elif leaf == "n3":
        value = (
            iv(ups, pi - phi_m, pi + phi_m)
            - iv(ups, phi_lam, phi_m)
            - iv(ups, phi_a, phi_m)
            - iv(psi, phi_k - phi_a, _HALF_PI)
        )
    elif leaf == "n4":
        value = (
            1.0
            - iv(psi, phi_k - phi_a, _HALF_PI)
            - iv(ups, phi_lam, _TWO_PI - phi_a)
        )
    elif leaf == "n5":
        value = iv(psi, _HALF_PI, phi_k - phi_a + _TWO_PI) - iv(
            ups, phi_lam, _TWO_PI - phi_a
        )
    elif leaf == "p1":
        value = iv(psi, _HALF_PI, phi_k + phi_a) + iv(ups, pi + phi_a, pi + phi_lam)
    elif leaf == "p2":
        value = (
            iv(psi, _HALF_PI, phi_k + phi_a)
            + iv(ups, pi + phi_a, pi + phi_m)
            - iv(ups, phi_lam, phi_m)
        )
    else:  # p3
        value = iv(psi, _HALF_PI, phi_k + phi_a) - iv(ups, phi_lam, phi_a)

    return _clamp_unit(value, slack=1e-7)
