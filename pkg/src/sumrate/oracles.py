"""Closed-form reference surfaces and the optimality (family-membership) test.

The two AND examples admit exact infinite-message minimum sum-rate
surfaces R*(p, q); their rate-reduction counterparts rho* = h2(p) +
h2(q) - R* are the converged targets of the grid iteration.  A
functional is optimal iff it majorizes the zero-message rate reduction
and is concave on every row and column of the product-pmf square; the
verifier checks exactly that, numerically, on a grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    BOTTOM,
    FunctionSpec,
    ProductPmfGrid,
    RateField,
    binary_entropy,
    rho0_field,
)

_LOG2E = float(np.log2(np.e))
_SEAM_TOL = 1e-9


class ClosedForm(Enum):
    AND_BOTH = "and-both"
    AND_AT_B = "and-at-b"


def _edge_term_both(p: float, q: float) -> float:
    # valid for 0 < p <= q, q > 0
    return (
        binary_entropy(p)
        + p * binary_entropy(q)
        + p * np.log2(q)
        + p * (1.0 - q) * _LOG2E
    )


def _edge_term_at_b(p: float, q: float) -> float:
    # valid for 0 < p <= q <= 1/2
    return (
        binary_entropy(p)
        + p * binary_entropy(q)
        + p * np.log2(q)
        + p * (1.0 - 2.0 * q) * _LOG2E
    )


def r_star_and_both(p: float, q: float) -> float:
    """Optimal sum-rate for AND at both terminals, Ber(p) x Ber(q) sources.

    Piecewise in (p, q) with the symmetric branch for q <= p; evaluates
    to 0 on the axes p = 0 or q = 0 (nothing needs to be sent).  On the
    seam p = q both branches are evaluated and must agree.
    """
    _check_unit_square(p, q)
    if p == 0.0 or q == 0.0:
        return 0.0
    lo, hi = min(p, q), max(p, q)
    value = _edge_term_both(lo, hi)
    if p == q:
        _assert_seam(value, _edge_term_both(q, p), "p=q")
    return float(value)


def r_star_and_at_b(p: float, q: float) -> float:
    """Optimal sum-rate for AND at terminal B only, Ber(p) x Ber(q) sources.

    Four branches: the direct expression for 0 <= p <= q <= 1/2, its
    p/q swap for q <= p <= 1/2, the reflection p -> 1-p for p >= 1/2,
    and h2(p) once q >= 1/2.  Branch seams are cross-checked to agree
    within 1e-9 before returning.
    """
    _check_unit_square(p, q)
    if p == 0.0 or q == 0.0:
        return 0.0
    if q >= 0.5:
        value = binary_entropy(p)
        if q == 0.5:
            pp = 1.0 - p if p > 0.5 else p
            _assert_seam(value, _edge_term_at_b(min(pp, 0.5), 0.5), "q=1/2")
        return float(value)
    if p >= 0.5:
        value = _r_star_at_b_low(1.0 - p, q)
        if p == 0.5:
            _assert_seam(value, _r_star_at_b_low(p, q), "p=1/2")
        return float(value)
    return float(_r_star_at_b_low(p, q))


def _r_star_at_b_low(p: float, q: float) -> float:
    # both arguments in [0, 1/2], q > 0
    if p == 0.0:
        return 0.0
    lo, hi = min(p, q), max(p, q)
    value = _edge_term_at_b(lo, hi)
    if p == q:
        _assert_seam(value, _edge_term_at_b(q, p), "p=q")
    return value


def _check_unit_square(p: float, q: float) -> None:
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"({p}, {q}) outside the unit square")


def _assert_seam(a: float, b: float, seam: str) -> None:
    if abs(a - b) > _SEAM_TOL:
        raise AssertionError(f"branch mismatch at seam {seam}: {a} vs {b}")


def r_star(which: ClosedForm, p: float, q: float) -> float:
    if which is ClosedForm.AND_BOTH:
        return r_star_and_both(p, q)
    return r_star_and_at_b(p, q)


def rho_star_field(grid: ProductPmfGrid, which: ClosedForm) -> RateField:
    """Rate-reduction surface h2(p) + h2(q) - R*(p, q) on the grid."""
    ax = grid.axis
    hsum = binary_entropy(ax)[:, None] + binary_entropy(ax)[None, :]
    rs = np.empty((grid.n, grid.n))
    for i, p in enumerate(ax):
        for j, q in enumerate(ax):
            rs[i, j] = r_star(which, p, q)
    return RateField(grid=grid, values=hsum - rs, label=f"rho_star_{which.value}")


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    worst_node: tuple[int, int] | None
    worst_violation: float


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of the three-part optimality test."""

    majorizes_rho0: ConditionReport
    row_concave: ConditionReport
    column_concave: ConditionReport

    @property
    def passed(self) -> bool:
        return (
            self.majorizes_rho0.passed
            and self.row_concave.passed
            and self.column_concave.passed
        )


def _concavity_along(values: np.ndarray, axis: int, slack: float) -> ConditionReport:
    """Midpoint concavity test along rows (axis 0 varies) or columns.

    For consecutive finite triples v[k-1], v[k], v[k+1] on a line the
    middle value must be at least the chord midpoint minus slack.  A
    BOTTOM node lying between finite nodes on its line counts as an
    (infinite) violation; lines with fewer than 3 finite consecutive
    nodes contribute nothing.
    """
    v = values if axis == 0 else values.T
    worst = 0.0
    worst_node: tuple[int, int] | None = None
    passed = True
    n = v.shape[0]
    for j in range(v.shape[1]):
        line = v[:, j]
        finite = np.isfinite(line)
        if finite.any():
            lo, hi = np.flatnonzero(finite)[[0, -1]]
            interior_bottom = np.flatnonzero(~finite[lo : hi + 1])
            if interior_bottom.size:
                k = int(interior_bottom[0]) + int(lo)
                node = (k, j) if axis == 0 else (j, k)
                return ConditionReport(False, node, float("inf"))
        for k in range(1, n - 1):
            if finite[k - 1] and finite[k] and finite[k + 1]:
                violation = 0.5 * (line[k - 1] + line[k + 1]) - line[k]
                if violation > worst:
                    worst = float(violation)
                    worst_node = (k, j) if axis == 0 else (j, k)
                    if violation > slack:
                        passed = False
    return ConditionReport(passed, worst_node, worst)


def verify_family_membership(
    rho: RateField, f: FunctionSpec, slack: float
) -> MembershipReport:
    """Test whether a rate-reduction surface is optimal (least-element) shaped.

    Checks (1) rho >= rho0 - slack at every node, (2) midpoint concavity
    along every row of fixed q, (3) the same along every column of fixed
    p.  All three passing certifies the surface against the optimality
    criterion; rho0's BOTTOM nodes are majorized by anything.
    """
    if slack < 0:
        raise ValueError("slack must be >= 0")
    rho0 = rho0_field(rho.grid, f)
    fin0 = np.isfinite(rho0.values)
    finr = np.isfinite(rho.values)
    deficit = np.full(rho.values.shape, BOTTOM)
    both = fin0 & finr
    deficit[both] = rho0.values[both] - rho.values[both]
    deficit[fin0 & ~finr] = np.inf  # BOTTOM below a finite rho0 node
    worst = float(deficit.max())
    node = tuple(int(x) for x in np.unravel_index(int(deficit.argmax()), deficit.shape))
    majorizes = ConditionReport(worst <= slack, node if worst > 0 else None, max(worst, 0.0))
    rows = _concavity_along(rho.values, axis=0, slack=slack)
    cols = _concavity_along(rho.values, axis=1, slack=slack)
    return MembershipReport(majorizes_rho0=majorizes, row_concave=rows, column_concave=cols)


@dataclass(frozen=True)
class Landmark:
    """A known finite-message operating point: expected minimum sum-rate."""

    p: float
    q: float
    messages: int
    initial_terminal: str
    expected_sum_rate: float
    note: str


def landmark_values() -> list[Landmark]:
    """Known finite-t sum-rate values for AND computed at terminal B.

    One message from A costs exactly 1 bit at p = 1/2 whenever
    0 < q < 1/2; two messages starting at B already reach the
    infinite-message optimum h2(q) on that line; and for q >= 1/2 a
    single message from A achieving h2(p) is optimal.
    """
    marks = [
        Landmark(0.5, 0.25, 1, "A", 1.0, "one A message costs log2(2)"),
        Landmark(0.3, 0.7, 1, "A", binary_entropy(0.3), "q >= 1/2: send X, rate h2(p)"),
        Landmark(0.5, 0.7, 1, "A", binary_entropy(0.5), "q >= 1/2: send X, rate h2(p)"),
    ]
    for q in (0.1, 0.2, 0.3, 0.4):
        marks.append(
            Landmark(0.5, q, 2, "B", binary_entropy(q), "two messages reach the optimum")
        )
    for q in (0.1, 0.2, 0.3, 0.4):
        marks.append(Landmark(0.5, q, 1, "A", 1.0, "one A message costs log2(2)"))
    return marks
