"""Achievable interactive coding scheme driven by a rate-allocation curve.

Both terminals describe their source by progressively shrinking a
rectangle in the unit square of uniform seeds (V_x, V_y): odd messages
move the left edge to alpha(s_i), even messages move the bottom edge to
beta(s_i).  Each message rate is an exact conditional mutual
information with a closed-form expression; as the partition of the
curve parameter refines, the sum of rates decreases to a two-region
weighted-area integral that depends only on the curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import binary_entropy

_EDGE_TOL = 1e-12


class SingularityError(ValueError):
    """A rectangle edge crossed into the region where the rates diverge."""


@dataclass(frozen=True)
class RateAllocationCurve:
    """Monotone piecewise-linear curve (alpha(s), beta(s)) in [0,1]^2.

    Starts at (0, 0); ends at alpha = 1-p with beta <= 1-q (and exactly
    1-q when the curve drives the compute-at-both-terminals variant).
    Parameterized by normalized chord length over its vertices; only the
    image matters for rates, so any monotone reparameterization is
    equivalent.
    """

    vertices: tuple[tuple[float, float], ...]
    p: float
    q: float
    for_both_terminals: bool = False

    def __post_init__(self):
        verts = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(verts) < 2:
            raise ValueError("curve needs at least two vertices")
        alphas = np.array([v[0] for v in verts])
        betas = np.array([v[1] for v in verts])
        if np.any(np.diff(alphas) < -_EDGE_TOL) or np.any(np.diff(betas) < -_EDGE_TOL):
            raise ValueError("alpha and beta must be non-decreasing along the curve")
        if abs(verts[0][0]) > _EDGE_TOL or abs(verts[0][1]) > _EDGE_TOL:
            raise ValueError("curve must start at (0, 0)")
        if abs(verts[-1][0] - (1.0 - self.p)) > 1e-9:
            raise ValueError(f"curve must end at alpha = 1 - p = {1.0 - self.p}")
        beta_end = verts[-1][1]
        if self.for_both_terminals:
            if abs(beta_end - (1.0 - self.q)) > 1e-9:
                raise ValueError("both-terminals curve must end at beta = 1 - q")
        elif beta_end < -_EDGE_TOL or beta_end > 1.0 - self.q + 1e-9:
            raise ValueError("curve must end with beta in [0, 1 - q]")
        object.__setattr__(self, "vertices", verts)

    def point_at(self, s: float) -> tuple[float, float]:
        """Curve point at normalized chord-length parameter s in [0, 1]."""
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"parameter must lie in [0, 1], got {s}")
        pts = np.asarray(self.vertices)
        seg = np.sqrt(((pts[1:] - pts[:-1]) ** 2).sum(axis=1))
        total = seg.sum()
        if total == 0.0:
            return tuple(pts[0])
        target = s * total
        acc = 0.0
        for k, length in enumerate(seg):
            if length > 0.0 and target <= acc + length + 1e-15:
                t = min(max((target - acc) / length, 0.0), 1.0)
                return (
                    pts[k, 0] * (1 - t) + pts[k + 1, 0] * t,
                    pts[k, 1] * (1 - t) + pts[k + 1, 1] * t,
                )
            acc += length
        return tuple(pts[-1])


@dataclass(frozen=True)
class Partition:
    """Breakpoints 0 = s_0 < s_1 < ... < s_m = 1 of the curve parameter."""

    breakpoints: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(s) for s in self.breakpoints)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must run from 0.0 to 1.0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)

    @staticmethod
    def uniform(m: int) -> "Partition":
        if m < 1:
            raise ValueError("need at least one interval")
        return Partition(tuple(np.linspace(0.0, 1.0, m + 1)))

    @property
    def mesh(self) -> float:
        return float(np.diff(self.breakpoints).max())

    @property
    def intervals(self) -> int:
        return len(self.breakpoints) - 1


def gamma1(p: float, q: float) -> RateAllocationCurve:
    """Optimal curve for 0 < p <= q <= 1/2 (first move along alpha)."""
    if not (0.0 < p <= q <= 0.5):
        raise ValueError(f"gamma1 needs 0 < p <= q <= 1/2, got ({p}, {q})")
    verts = ((0.0, 0.0), (1 - p / q, 0.0), (1 - 2 * p, 1 - 2 * q), (1 - p, 1 - 2 * q))
    return RateAllocationCurve(verts, p=p, q=q)


def gamma2(p: float, q: float) -> RateAllocationCurve:
    """Optimal curve for 0 < q <= p <= 1/2 (first move along beta)."""
    if not (0.0 < q <= p <= 0.5):
        raise ValueError(f"gamma2 needs 0 < q <= p <= 1/2, got ({p}, {q})")
    verts = ((0.0, 0.0), (0.0, 1 - q / p), (1 - 2 * p, 1 - 2 * q), (1 - p, 1 - 2 * q))
    return RateAllocationCurve(verts, p=p, q=q)


def _clipped_entropy_mass(v: float, r: float) -> float:
    """-(1 - v) h2(r / (1 - v)): antiderivative of log2((1-v)/(1-r-v)).

    Finite on [0, 1 - r]; the limit at v = 1 - r is 0.
    """
    room = 1.0 - v
    if room < r - _EDGE_TOL:
        raise SingularityError(f"edge {v} beyond 1 - {r}")
    if room <= r + _EDGE_TOL:
        return 0.0
    return -room * binary_entropy(r / room)


def _edge_advance(v0: float, v1: float, r: float) -> float:
    """Integral of the weight log2((1-v)/(1-r-v)) from v0 to v1."""
    return _clipped_entropy_mass(v1, r) - _clipped_entropy_mass(v0, r)


def strip_rate_B(
    curve: RateAllocationCurve, p: float, q: float, i: int, partition: Partition
) -> float:
    """Rate of message 2i (sent by B): the horizontal-bar closed form.

    Equals (1 - alpha(s_i)) * [(1-b0) h2(q/(1-b0)) - (1-b1) h2(q/(1-b1))]
    with b0 = beta(s_{i-1}), b1 = beta(s_i).
    """
    if not 1 <= i <= partition.intervals:
        raise ValueError(f"message index {i} outside 1..{partition.intervals}")
    a1, b1 = curve.point_at(partition.breakpoints[i])
    _, b0 = curve.point_at(partition.breakpoints[i - 1])
    if b1 > 1.0 - q + _EDGE_TOL:
        raise SingularityError(f"beta = {b1} reaches 1 - q = {1.0 - q}")
    return (1.0 - a1) * _edge_advance(b0, b1, q)


def strip_rate_A(
    curve: RateAllocationCurve, p: float, q: float, i: int, partition: Partition
) -> float:
    """Rate of message 2i-1 (sent by A): the vertical-bar closed form."""
    if not 1 <= i <= partition.intervals:
        raise ValueError(f"message index {i} outside 1..{partition.intervals}")
    a1, _ = curve.point_at(partition.breakpoints[i])
    a0, b0 = curve.point_at(partition.breakpoints[i - 1])
    if a1 > 1.0 - p + _EDGE_TOL:
        raise SingularityError(f"alpha = {a1} reaches 1 - p = {1.0 - p}")
    return (1.0 - b0) * _edge_advance(a0, a1, p)


def scheme_sum_rate(
    curve: RateAllocationCurve, p: float, q: float, partition: Partition
) -> tuple[list[float], float]:
    """Per-message rates and total for the 2m-message scheme on a partition.

    Message order alternates A, B, A, B, ...; the total decreases under
    partition refinement and converges to integral_sum_rate as the mesh
    goes to zero.
    """
    rates: list[float] = []
    for i in range(1, partition.intervals + 1):
        rates.append(strip_rate_A(curve, p, q, i, partition))
        rates.append(strip_rate_B(curve, p, q, i, partition))
    return rates, float(sum(rates))


def integral_sum_rate(curve: RateAllocationCurve, p: float, q: float) -> float:
    """Infinite-message sum-rate of the scheme: the two-region weighted area.

    Processed segment by segment.  Where one coordinate is constant the
    closed-form antiderivative gives the exact contribution; where both
    advance, integration by parts leaves a bounded smooth integrand for
    adaptive quadrature (abs tol 1e-9), so the edge singularities of the
    raw weights never enter.
    """
    if q <= 0.0:
        raise ValueError("integral requires q > 0")
    beta_max = max(v[1] for v in curve.vertices)
    if beta_max > 1.0 - 2.0 * q + 1e-9:
        raise SingularityError(
            f"beta reaches {beta_max} > 1 - 2q; the weight is unbounded there"
        )
    total = 0.0
    for (a0, b0), (a1, b1) in zip(curve.vertices[:-1], curve.vertices[1:]):
        da, db = a1 - a0, b1 - b0
        if da > _EDGE_TOL:
            if db <= _EDGE_TOL:
                total += (1.0 - b0) * _edge_advance(a0, a1, p)
            else:
                # int (1 - beta(v)) w(v, p) dv  by parts: beta linear in v
                slope = db / da
                boundary = (1.0 - b1) * _clipped_entropy_mass(a1, p) - (
                    1.0 - b0
                ) * _clipped_entropy_mass(a0, p)
                bulk, _ = quad(
                    _clipped_entropy_mass, a0, a1, args=(p,), epsabs=1e-12, limit=200
                )
                total += boundary + slope * bulk
        if db > _EDGE_TOL:
            if da <= _EDGE_TOL:
                total += (1.0 - a0) * _edge_advance(b0, b1, q)
            else:
                slope = da / db
                boundary = (1.0 - a1) * _clipped_entropy_mass(b1, q) - (
                    1.0 - a0
                ) * _clipped_entropy_mass(b0, q)
                bulk, _ = quad(
                    _clipped_entropy_mass, b0, b1, args=(q,), epsabs=1e-12, limit=200
                )
                total += boundary + slope * bulk
    return total


@dataclass(frozen=True)
class SchemeCheckReport:
    """Monte Carlo audit of the scheme's defining properties."""

    samples: int
    p2_error_rate: float  # fraction with U_t AND Y != X AND Y
    p1_violations: int  # draws where the U chain failed to be non-increasing


def monte_carlo_p2_check(
    p: float,
    q: float,
    curve: RateAllocationCurve,
    partition: Partition,
    samples: int,
    seed: int = 0,
) -> SchemeCheckReport:
    """Sample the seed square and verify the scheme computes AND exactly.

    Draws (V_x, V_y) uniform on [0,1]^2, realizes X, Y and the nested
    rectangle indicators U_1..U_t, and counts samples where the last
    message AND Y differs from X AND Y (must be none) and where the
    U chain is not monotone non-increasing (must be none).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    vx = rng.random(samples)
    vy = rng.random(samples)
    x = vx >= 1.0 - p
    y = vy >= 1.0 - q
    prev_u = np.ones(samples, dtype=bool)
    p1_bad = np.zeros(samples, dtype=bool)
    u = prev_u
    for i in range(1, partition.intervals + 1):
        a_i, b_i = curve.point_at(partition.breakpoints[i])
        _, b_prev = curve.point_at(partition.breakpoints[i - 1])
        odd = (vx >= a_i) & (vy >= b_prev)
        even = (vx >= a_i) & (vy >= b_i)
        p1_bad |= odd > prev_u
        p1_bad |= even > odd
        prev_u = even
        u = even
    errors = (u & y) != (x & y)
    return SchemeCheckReport(
        samples=samples,
        p2_error_rate=float(errors.mean()),
        p1_violations=int(p1_bad.sum()),
    )
