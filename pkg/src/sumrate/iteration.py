"""Alternating concave-envelope iteration over the product-pmf grid.

Starting from the zero-message rate reduction, each half-step replaces
the field by its upper concave envelope along every X-marginal
perturbation set (rows of fixed q, the A step) or every Y-marginal
perturbation set (columns of fixed p, the B step).  Step t therefore
yields the t-message rate reduction for the protocol whose first
message leaves the terminal matching the step's label.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import FunctionSpec, ProductPmfGrid, RateField, binary_entropy, rho0_field
from .envelope import envelope_values_1d


@dataclass(frozen=True)
class IterationConfig:
    grid_size: int
    max_messages: int
    tolerance: float = 1e-6
    track_history: bool = False
    start_terminal: str = "A"

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError(f"grid size must be >= 2, got {self.grid_size}")
        if self.max_messages < 1:
            raise ValueError(f"max_messages must be >= 1, got {self.max_messages}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.start_terminal not in ("A", "B"):
            raise ValueError(f"start_terminal must be 'A' or 'B', got {self.start_terminal!r}")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    terminal: str
    sup_change: float  # vs the previous same-terminal field
    max_oracle_gap: float  # nan when no oracle was supplied
    seconds: float


@dataclass
class IterationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    converged: bool = False

    def rows(self) -> list[tuple]:
        return [
            (r.step, r.terminal, r.sup_change, r.max_oracle_gap, r.seconds)
            for r in self.records
        ]


@dataclass
class IterationResult:
    final: RateField
    trace: IterationTrace
    history: list[RateField] | None = None


def sup_change(a: np.ndarray, b: np.ndarray) -> float:
    """Sup-norm distance with BOTTOM semantics.

    BOTTOM vs BOTTOM counts as zero change; BOTTOM vs finite as +inf.
    """
    fa = np.isfinite(a)
    fb = np.isfinite(b)
    if np.any(fa != fb):
        return float("inf")
    if not fa.any():
        return 0.0
    return float(np.abs(a[fa] - b[fa]).max())


def max_oracle_gap(values: np.ndarray, oracle: np.ndarray) -> float:
    """Largest |oracle - value| over nodes, +inf if sentinels disagree."""
    fv = np.isfinite(values)
    fo = np.isfinite(oracle)
    if np.any(fv != fo):
        return float("inf")
    if not fv.any():
        return 0.0
    return float(np.abs(oracle[fv] - values[fv]).max())


def _envelope_rows(values: np.ndarray, axis_coords: np.ndarray, along_p: bool,
                   max_workers: int = 1) -> np.ndarray:
    """Envelope every line of the field: along p (columns of fixed q) or along q."""
    out = np.empty_like(values)
    n = values.shape[0]

    def one(j: int) -> None:
        if along_p:
            out[:, j] = envelope_values_1d(axis_coords, values[:, j])
        else:
            out[j, :] = envelope_values_1d(axis_coords, values[j, :])

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(one, range(n)))
    else:
        for j in range(n):
            one(j)
    return out


def half_step_A(prev: RateField, step: int | None = None, max_workers: int = 1) -> RateField:
    """Envelope along every row of fixed q (X-marginal perturbation sets)."""
    label = f"rho{step}_A" if step is not None else "rho_A"
    values = _envelope_rows(prev.values, prev.grid.axis, along_p=True, max_workers=max_workers)
    return RateField(grid=prev.grid, values=values, label=label)


def half_step_B(prev: RateField, step: int | None = None, max_workers: int = 1) -> RateField:
    """Envelope along every column of fixed p (Y-marginal perturbation sets)."""
    label = f"rho{step}_B" if step is not None else "rho_B"
    values = _envelope_rows(prev.values, prev.grid.axis, along_p=False, max_workers=max_workers)
    return RateField(grid=prev.grid, values=values, label=label)


def iterate(
    f: FunctionSpec,
    cfg: IterationConfig,
    oracle: RateField | None = None,
    max_workers: int = 1,
) -> IterationResult:
    """Run the alternating envelope iteration from the zero-message field.

    Stops at max_messages, or earlier once the sup-norm change between
    consecutive same-terminal fields drops to cfg.tolerance or below.
    The trace also lets the caller watch the fixed-point test (step t vs
    step t+1 agree), since consecutive steps alternate terminals.
    Nodes can only gain finite values; a finite node never reverts to
    BOTTOM.
    """
    grid = ProductPmfGrid(cfg.grid_size)
    if oracle is not None and oracle.grid.n != grid.n:
        raise ValueError("oracle grid does not match the iteration grid")

    current = rho0_field(grid, f)
    history: list[RateField] | None = [current] if cfg.track_history else None
    trace = IterationTrace()
    last_same_terminal: dict[str, np.ndarray] = {}

    first_is_a = cfg.start_terminal == "A"
    for step in range(1, cfg.max_messages + 1):
        t0 = time.perf_counter()
        a_turn = (step % 2 == 1) == first_is_a
        if a_turn:
            nxt = half_step_A(current, step=step, max_workers=max_workers)
            terminal = "A"
        else:
            nxt = half_step_B(current, step=step, max_workers=max_workers)
            terminal = "B"
        if np.any(np.isfinite(current.values) & ~np.isfinite(nxt.values)):
            raise AssertionError("finite node reverted to BOTTOM")
        change = (
            sup_change(nxt.values, last_same_terminal[terminal])
            if terminal in last_same_terminal
            else float("inf")
        )
        last_same_terminal[terminal] = nxt.values
        gap = max_oracle_gap(nxt.values, oracle.values) if oracle is not None else float("nan")
        trace.records.append(
            TraceRecord(
                step=step,
                terminal=terminal,
                sup_change=change,
                max_oracle_gap=gap,
                seconds=time.perf_counter() - t0,
            )
        )
        current = nxt
        if history is not None:
            history.append(current)
        if change <= cfg.tolerance:
            trace.converged = True
            break

    return IterationResult(final=current, trace=trace, history=history)


def sum_rate_field(rho: RateField) -> RateField:
    """Minimum sum-rate h2(p) + h2(q) - rho; +inf marker where rho is BOTTOM."""
    ax = rho.grid.axis
    hsum = binary_entropy(ax)[:, None] + binary_entropy(ax)[None, :]
    finite = np.isfinite(rho.values)
    values = np.where(finite, hsum - np.where(finite, rho.values, 0.0), np.inf)
    label = rho.label.replace("rho", "Rsum", 1) if rho.label else "Rsum"
    return RateField(grid=rho.grid, values=values, label=label)
