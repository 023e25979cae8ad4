"""Domain types and basic information quantities for the sum-rate engine.

Everything here works on product pmfs of two binary sources: X ~ Ber(p),
Y ~ Ber(q), independent, so a joint pmf is a point (p, q) in the unit
square.  Rate-reduction surfaces over a discretized unit square are held
in immutable RateField objects whose entries are either finite bits or
the BOTTOM sentinel (-inf) marking pmfs where the zero-message problem
is infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Sentinel for "undefined / infeasible" rate-reduction values.  BOTTOM
# compares below every finite float; it is only compared and propagated,
# never used in arithmetic.
BOTTOM = float("-inf")

_LN2 = np.log(2.0)


def is_bottom(values) -> np.ndarray | bool:
    """Elementwise test for the BOTTOM sentinel."""
    return np.isneginf(values)


def binary_entropy(r):
    """Entropy (bits) of a Ber(r) variable, with the 0*log(0) = 0 convention.

    Accepts a scalar or an ndarray; raises ValueError outside [0, 1].
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"probability out of [0, 1]: {r!r}")
    out = np.zeros_like(arr)
    interior = (arr > 0.0) & (arr < 1.0)
    ri = arr[interior]
    # natural log / ln 2; the 0 log 0 convention is enforced by the mask,
    # never by floating-point accident
    out[interior] = -(ri * np.log(ri) + (1.0 - ri) * np.log(1.0 - ri)) / _LN2
    if np.isscalar(r) or arr.ndim == 0:
        return float(out)
    return out


def conditional_entropy_sum(p: float, q: float) -> float:
    """H(X|Y) + H(Y|X) for independent Ber(p), Ber(q): just h2(p) + h2(q)."""
    return binary_entropy(p) + binary_entropy(q)


def _support(r: float) -> tuple[int, ...]:
    """Support of Ber(r).  Grid endpoints are exact, so compare exactly."""
    if r == 0.0:
        return (0,)
    if r == 1.0:
        return (1,)
    return (0, 1)


@dataclass(frozen=True)
class FunctionSpec:
    """Truth tables of the two desired functions on {0,1} x {0,1}.

    f_a is what terminal A must compute, f_b what terminal B must
    compute.  Output symbols may come from any finite alphabet; only
    equality of outputs is ever tested.
    """

    f_a: tuple[tuple[object, object], tuple[object, object]]
    f_b: tuple[tuple[object, object], tuple[object, object]]
    name: str = "custom"

    @staticmethod
    def and_at_b() -> "FunctionSpec":
        """AND computed at terminal B only (terminal A needs nothing)."""
        return FunctionSpec(
            f_a=((0, 0), (0, 0)),
            f_b=((0, 0), (0, 1)),
            name="and-at-b",
        )

    @staticmethod
    def and_both() -> "FunctionSpec":
        """AND computed at both terminals."""
        return FunctionSpec(
            f_a=((0, 0), (0, 1)),
            f_b=((0, 0), (0, 1)),
            name="and-both",
        )

    @staticmethod
    def from_string(code: str) -> "FunctionSpec":
        """Decode an 8-character truth-table string.

        Characters give f_a(0,0), f_a(0,1), f_a(1,0), f_a(1,1) followed
        by the same order for f_b; each character is one output symbol.
        """
        if len(code) != 8:
            raise ValueError(f"function code must have 8 characters, got {code!r}")
        c = list(code)
        return FunctionSpec(
            f_a=((c[0], c[1]), (c[2], c[3])),
            f_b=((c[4], c[5]), (c[6], c[7])),
            name=f"custom:{code}",
        )


@dataclass(frozen=True)
class ProductPmfGrid:
    """Uniform N x N discretization of the product-pmf square [0,1]^2.

    Node (i, j) is the pmf (p_i, q_j) = (i/(N-1), j/(N-1)).  A row of
    fixed q is the discretized X-marginal perturbation set; a column of
    fixed p is the discretized Y-marginal perturbation set.
    """

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid size must be >= 2, got {self.n}")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)


@dataclass(frozen=True)
class RateField:
    """Immutable grid of rate-reduction values (bits), BOTTOM where undefined.

    values[i, j] is the value at pmf (p_i, q_j); axis 0 indexes p, axis 1
    indexes q.
    """

    grid: ProductPmfGrid
    values: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"values shape {vals.shape} does not match grid {self.grid.n}"
            )
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)


def zero_message_feasible(p: float, q: float, f: FunctionSpec) -> bool:
    """True iff both functions are computable with zero messages at (p, q).

    Over the support of the product pmf, f_a(x, .) must be constant in y
    for each supported x, and f_b(., y) constant in x for each supported
    y; that is exactly H(f_a|X) = H(f_b|Y) = 0.
    """
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"({p}, {q}) outside the unit square")
    sx, sy = _support(p), _support(q)
    for x in sx:
        vals = {f.f_a[x][y] for y in sy}
        if len(vals) > 1:
            return False
    for y in sy:
        vals = {f.f_b[x][y] for x in sx}
        if len(vals) > 1:
            return False
    return True


def rho0_field(grid: ProductPmfGrid, f: FunctionSpec) -> RateField:
    """Zero-message rate reduction: h2(p) + h2(q) where feasible, else BOTTOM.

    Feasibility only depends on which of {0, 1, interior} each marginal
    falls in, so it is evaluated on 3 x 3 support cases and broadcast.
    """
    ax = grid.axis
    # representative points per support case: 0.0, interior, 1.0
    reps = (0.0, 0.5, 1.0)
    feas_case = np.array(
        [[zero_message_feasible(rp, rq, f) for rq in reps] for rp in reps]
    )
    case = np.where(ax == 0.0, 0, np.where(ax == 1.0, 2, 1))
    feasible = feas_case[np.ix_(case, case)]
    hsum = binary_entropy(ax)[:, None] + binary_entropy(ax)[None, :]
    values = np.where(feasible, hsum, BOTTOM)
    return RateField(grid=grid, values=values, label="rho0")
