"""Rate-distortion extension with a single active distortion coordinate.

Terminal B must reconstruct within expected distortion D under a
bounded single-letter distortion table d_b; terminal A's distortion is
identically zero, which keeps every envelope two-dimensional: one pmf
perturbation parameter crossed with the distortion axis.  Covered
special cases: the Wyner-Ziv function (one message, decoder side
information), the single-terminal rate-distortion function (degenerate
side information), and an exact reduction to the function-computation
iteration at D = 0 with Hamming distortion on the desired function.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import BOTTOM, FunctionSpec, binary_entropy
from .envelope import PointCloud2D, upper_concave_envelope_2d
from .iteration import IterationConfig, IterationTrace, TraceRecord, sup_change

PRODUCT_ROW = "product-row"
FIXED_CONDITIONAL = "fixed-conditional"

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class DistortionModel:
    """Distortion table d_b(x, y, zhat) >= 0 over binary x, y.

    Terminal A's distortion d_a is identically zero (one-sided
    restriction), so only d_b is stored.  d_max bounds the table and
    caps the distortion axis by default.
    """

    d_b: np.ndarray = field(repr=False)  # shape (2, 2, K)
    d_max: float = None  # type: ignore[assignment]

    def __post_init__(self):
        table = np.asarray(self.d_b, dtype=float)
        if table.ndim != 3 or table.shape[:2] != (2, 2):
            raise ValueError("d_b must have shape (2, 2, K)")
        if np.any(table < 0.0):
            raise ValueError("distortion values must be >= 0")
        object.__setattr__(self, "d_b", table)
        cap = float(table.max()) if self.d_max is None else float(self.d_max)
        if table.max() > cap + _FEAS_TOL:
            raise ValueError("d_max below the largest table entry")
        object.__setattr__(self, "d_max", cap)

    @staticmethod
    def hamming_on_function(f: FunctionSpec) -> "DistortionModel":
        """d_b = 1{zhat != f_b(x, y)}: zero distortion means computing f_b."""
        symbols = sorted({f.f_b[x][y] for x in (0, 1) for y in (0, 1)}, key=str)
        table = np.array(
            [
                [[0.0 if z == f.f_b[x][y] else 1.0 for z in symbols] for y in (0, 1)]
                for x in (0, 1)
            ]
        )
        return DistortionModel(d_b=table)

    @staticmethod
    def hamming_on_source() -> "DistortionModel":
        """d_b = 1{zhat != x}: terminal B reproduces X itself."""
        table = np.array(
            [[[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]]], dtype=float
        )
        return DistortionModel(d_b=table)


@dataclass(frozen=True)
class RDDomain:
    """Discretized pmf-family x distortion-level domain.

    family PRODUCT_ROW: independent Ber(p) x Ber(q) pmfs on an
    n_param x n_param grid; rows of fixed q are the X-marginal
    perturbation sets, columns of fixed p the Y-marginal ones.  Fields
    are indexed [p, q, D].

    family FIXED_CONDITIONAL: joint pmfs Ber(theta) * channel with the
    2x2 conditional p_{Y|X} fixed; the whole family is one X-marginal
    perturbation set.  Fields are indexed [theta, D].
    """

    family: str
    n_param: int
    n_dist: int
    d_cap: float
    channel: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self):
        if self.family not in (PRODUCT_ROW, FIXED_CONDITIONAL):
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_param < 2 or self.n_dist < 1:
            raise ValueError("need n_param >= 2 and n_dist >= 1")
        if self.d_cap < 0:
            raise ValueError("d_cap must be >= 0")
        if self.family == FIXED_CONDITIONAL:
            if self.channel is None:
                raise ValueError("fixed-conditional domain needs a channel")
            w = np.asarray(self.channel, dtype=float)
            if w.shape != (2, 2) or np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1) > 1e-12):
                raise ValueError("channel rows must be pmfs on {0, 1}")
            object.__setattr__(self, "channel", tuple(map(tuple, w)))
        elif self.channel is not None:
            raise ValueError("product-row domain takes no channel")

    @property
    def param_axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_param)

    @property
    def dist_axis(self) -> np.ndarray:
        if self.n_dist == 1:
            return np.array([0.0])
        return np.linspace(0.0, self.d_cap, self.n_dist)

    def joint(self, theta: float, q: float | None = None) -> np.ndarray:
        """Joint pmf p_XY as a 2x2 array for a family member."""
        px = np.array([1.0 - theta, theta])
        if self.family == FIXED_CONDITIONAL:
            return px[:, None] * np.asarray(self.channel)
        return px[:, None] * np.array([1.0 - q, q])[None, :]


def conditional_entropy_pair(joint: np.ndarray) -> float:
    """H(X|Y) + H(Y|X) in bits for a 2x2 joint pmf."""
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            m = joint[x, y]
            if m > 0.0:
                total += -m * (np.log2(m / py[y]) + np.log2(m / px[x]))
    return float(total)


def min_zero_message_distortion(joint: np.ndarray, model: DistortionModel) -> float:
    """Best expected d_b over decoders that see Y only."""
    # for each y pick the reconstruction minimizing sum_x p(x, y) d_b(x, y, .)
    per_y = np.einsum("xy,xyz->yz", joint, model.d_b)
    return float(per_y.min(axis=1).sum())


def rho0_distortion(
    param_point, d: float, domain: RDDomain, model: DistortionModel
) -> float:
    """Zero-message rate reduction at one (pmf, D) point; BOTTOM if infeasible.

    Feasible when some decoder using Y alone meets E[d_b] <= D (the
    terminal-A side is free since d_a is identically zero).  param_point
    is theta for FIXED_CONDITIONAL and a (p, q) pair for PRODUCT_ROW.
    """
    if domain.family == FIXED_CONDITIONAL:
        joint = domain.joint(float(param_point))
        base = conditional_entropy_pair(joint)
    else:
        p, q = param_point
        joint = domain.joint(p, q)
        base = binary_entropy(p) + binary_entropy(q)
    if min_zero_message_distortion(joint, model) <= d + _FEAS_TOL:
        return base
    return BOTTOM


def rho0_distortion_field(domain: RDDomain, model: DistortionModel) -> np.ndarray:
    """rho0 over the full domain grid; shape matches the family layout."""
    ds = domain.dist_axis
    params = domain.param_axis
    if domain.family == FIXED_CONDITIONAL:
        out = np.full((domain.n_param, domain.n_dist), BOTTOM)
        for i, th in enumerate(params):
            joint = domain.joint(th)
            base = conditional_entropy_pair(joint)
            dmin = min_zero_message_distortion(joint, model)
            out[i, dmin <= ds + _FEAS_TOL] = base
        return out
    out = np.full((domain.n_param, domain.n_param, domain.n_dist), BOTTOM)
    for i, p in enumerate(params):
        for j, q in enumerate(params):
            joint = domain.joint(p, q)
            dmin = min_zero_message_distortion(joint, model)
            if dmin <= ds[-1] + _FEAS_TOL:
                base = binary_entropy(p) + binary_entropy(q)
                out[i, j, dmin <= ds + _FEAS_TOL] = base
    return out


def _envelope_planes(
    field: np.ndarray, us: np.ndarray, vs: np.ndarray
) -> np.ndarray:
    """2-D envelope of a (len(us), len(vs)) slab, evaluated at its own grid."""
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    finite = np.isfinite(field)
    queries = np.column_stack([uu.ravel(), vv.ravel()])
    if not finite.any():
        return np.full_like(field, BOTTOM)
    pts = np.column_stack([uu[finite], vv[finite], field[finite]])
    rect = ((float(us.min()), float(us.max())), (float(vs.min()), float(vs.max())))
    cloud = PointCloud2D(points=pts, rect=rect)
    return upper_concave_envelope_2d(cloud, queries).reshape(field.shape)


@dataclass
class RDIterationResult:
    final: np.ndarray
    trace: IterationTrace
    history: list[np.ndarray] | None = None


def rd_iterate(
    domain: RDDomain,
    model: DistortionModel,
    cfg: IterationConfig,
    max_workers: int = 1,
) -> RDIterationResult:
    """Alternating envelope iteration over (pmf parameter x distortion).

    PRODUCT_ROW: the A step envelopes each (p, D) plane at fixed q, the
    B step each (q, D) plane at fixed p.  FIXED_CONDITIONAL: the A step
    envelopes the single (theta, D) plane; the family contains no
    Y-marginal perturbations beyond each pmf itself, so the B step
    reduces to envelopes along the D axis alone.
    """
    if cfg.grid_size != domain.n_param:
        raise ValueError("cfg.grid_size must equal domain.n_param")
    params = domain.param_axis
    ds = domain.dist_axis
    current = rho0_distortion_field(domain, model)
    history: list[np.ndarray] | None = [current] if cfg.track_history else None
    trace = IterationTrace()
    last_same: dict[str, np.ndarray] = {}
    first_is_a = cfg.start_terminal == "A"

    for step in range(1, cfg.max_messages + 1):
        t0 = time.perf_counter()
        a_turn = (step % 2 == 1) == first_is_a
        terminal = "A" if a_turn else "B"
        nxt = np.empty_like(current)
        if domain.family == PRODUCT_ROW:
            if a_turn:
                def one(j):
                    nxt[:, j, :] = _envelope_planes(current[:, j, :], params, ds)
            else:
                def one(j):
                    nxt[j, :, :] = _envelope_planes(current[j, :, :], params, ds)
            if max_workers > 1:
                from concurrent.futures import ThreadPoolExecutor

                with ThreadPoolExecutor(max_workers=max_workers) as pool:
                    list(pool.map(one, range(domain.n_param)))
            else:
                for j in range(domain.n_param):
                    one(j)
        else:
            if a_turn:
                nxt = _envelope_planes(current, params, ds)
            else:
                from .envelope import envelope_values_1d

                for i in range(domain.n_param):
                    nxt[i, :] = envelope_values_1d(ds, current[i, :])
        if np.any(np.isfinite(current) & ~np.isfinite(nxt)):
            raise AssertionError("finite node reverted to BOTTOM")
        change = (
            sup_change(nxt, last_same[terminal]) if terminal in last_same else float("inf")
        )
        last_same[terminal] = nxt
        trace.records.append(
            TraceRecord(
                step=step,
                terminal=terminal,
                sup_change=change,
                max_oracle_gap=float("nan"),
                seconds=time.perf_counter() - t0,
            )
        )
        current = nxt
        if history is not None:
            history.append(current)
        if change <= cfg.tolerance:
            trace.converged = True
            break
    return RDIterationResult(final=current, trace=trace, history=history)


def sum_rate_from_rho(domain: RDDomain, rho: np.ndarray) -> np.ndarray:
    """H(X|Y) + H(Y|X) - rho with +inf where rho is BOTTOM."""
    params = domain.param_axis
    if domain.family == FIXED_CONDITIONAL:
        base = np.array([conditional_entropy_pair(domain.joint(th)) for th in params])
        base = base[:, None]
    else:
        h = binary_entropy(params)
        base = (h[:, None] + h[None, :])[:, :, None]
    finite = np.isfinite(rho)
    return np.where(finite, base - np.where(finite, rho, 0.0), np.inf)


def wyner_ziv_rate(
    domain: RDDomain, model: DistortionModel, p_x: float
) -> np.ndarray:
    """One-message rate-distortion curve R(D) at the target X-marginal.

    A single A half-step of the envelope iteration on the
    fixed-conditional family evaluates the one-message optimum; with
    d_a = 0 that is exactly the decoder-side-information problem, and
    with degenerate side information the single-terminal function.
    Returns one rate per distortion-grid node (+inf where infeasible).
    """
    if domain.family != FIXED_CONDITIONAL:
        raise ValueError("wyner_ziv_rate needs a fixed-conditional domain")
    params = domain.param_axis
    idx = int(np.argmin(np.abs(params - p_x)))
    if abs(params[idx] - p_x) > 1e-9:
        raise ValueError(f"p_x = {p_x} is not a grid node")
    cfg = IterationConfig(
        grid_size=domain.n_param, max_messages=1, tolerance=1e-15, track_history=False
    )
    result = rd_iterate(domain, model, cfg)
    rates = sum_rate_from_rho(domain, result.final)
    return rates[idx, :]


def _channel_batch_stats(joint: np.ndarray, model: DistortionModel, pu_x: np.ndarray):
    """I(X;U|Y) and best-decoder distortion for a batch of test channels.

    pu_x has shape (B, 2, K): conditional pmfs of U given X.  The
    decoder that minimizes expected d_b for a fixed channel is the
    greedy per-(u, y) choice, and feasibility of a channel depends only
    on that minimum, so rate and distortion separate cleanly.
    """
    jxyu = joint[None, :, :, None] * pu_x[:, :, None, :]  # (B, 2, 2, K)
    per_uy = np.einsum("bxyu,xyz->byuz", jxyu, model.d_b)
    dist = per_uy.min(axis=3).sum(axis=(1, 2))
    py = jxyu.sum(axis=(1, 3))  # (B, 2)
    px_y = jxyu.sum(axis=3)  # (B, 2, 2)
    pu_y = jxyu.sum(axis=1)  # (B, 2, K)
    denom = px_y[:, :, :, None] * pu_y[:, None, :, :]
    ratio = np.where(denom > 0, jxyu * py[:, None, :, None] / np.where(denom > 0, denom, 1.0), 1.0)
    info = np.where(jxyu > 0, jxyu * np.log2(np.where(ratio > 0, ratio, 1.0)), 0.0)
    return info.sum(axis=(1, 2, 3)), dist


def _simplex_grid(k: int, res: int) -> np.ndarray:
    """All pmfs on k letters with entries that are multiples of 1/res."""
    if k == 2:
        a = np.linspace(0.0, 1.0, res + 1)
        return np.column_stack([1.0 - a, a])
    pts = []
    for i in range(res + 1):
        for j in range(res + 1 - i):
            pts.append((i / res, j / res, 1.0 - (i + j) / res))
    return np.array(pts)


def brute_force_wz(
    p_x: float,
    channel,
    model: DistortionModel,
    d: float,
    u_card: int = 2,
    seeds: int = 12,
    rounds: int = 200,
) -> float:
    """Direct search for the one-message rate at distortion level d.

    Minimizes I(X;U|Y) over test channels p_{U|X} subject to the best
    decoder gh_B(U, Y) meeting E[d_b] <= d.  Candidates come from a
    dense binary grid (resolution 1/64) plus, for u_card = 3, a coarser
    per-letter simplex grid; the best few are refined by coordinate
    descent with a shrinking step.  Heuristic by construction: it can
    sit slightly above the true minimum, never meaningfully below.
    Returns +inf when no channel meets the distortion level.
    """
    if u_card not in (2, 3):
        raise ValueError("u_card must be 2 or 3")
    joint = np.array([1.0 - p_x, p_x])[:, None] * np.asarray(channel, dtype=float)

    grids = []
    bin_grid = _simplex_grid(2, 64)
    pu2 = np.zeros((len(bin_grid) ** 2, 2, u_card))
    ii, jj = np.meshgrid(np.arange(len(bin_grid)), np.arange(len(bin_grid)), indexing="ij")
    pu2[:, 0, :2] = bin_grid[ii.ravel()]
    pu2[:, 1, :2] = bin_grid[jj.ravel()]
    grids.append(pu2)
    if u_card == 3:
        tri = _simplex_grid(3, 16)
        pu3 = np.zeros((len(tri) ** 2, 2, 3))
        ii, jj = np.meshgrid(np.arange(len(tri)), np.arange(len(tri)), indexing="ij")
        pu3[:, 0, :] = tri[ii.ravel()]
        pu3[:, 1, :] = tri[jj.ravel()]
        grids.append(pu3)
    candidates = np.concatenate(grids)
    info, dist = _channel_batch_stats(joint, model, candidates)
    feasible = dist <= d + _FEAS_TOL
    if not feasible.any():
        return float("inf")
    order = np.argsort(np.where(feasible, info, np.inf))[:seeds]

    best = float("inf")
    for s in order:
        if not feasible[s]:
            continue
        pu = candidates[s].copy()
        current = float(info[s])
        step = 1.0 / 16.0
        for _ in range(rounds):
            moves = []
            for x in (0, 1):
                for u in range(u_card):
                    for sign in (1.0, -1.0):
                        cand = pu.copy()
                        cand[x, u] = max(0.0, cand[x, u] + sign * step)
                        total = cand[x].sum()
                        if total <= 0:
                            continue
                        cand[x] /= total
                        moves.append(cand)
            m_info, m_dist = _channel_batch_stats(joint, model, np.array(moves))
            ok = m_dist <= d + _FEAS_TOL
            if ok.any() and m_info[ok].min() < current - 1e-12:
                k = int(np.argmin(np.where(ok, m_info, np.inf)))
                pu = moves[k]
                current = float(m_info[k])
            else:
                step /= 2.0
                if step < 1e-7:
                    break
        best = min(best, current)
    return best
