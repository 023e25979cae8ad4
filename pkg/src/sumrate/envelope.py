"""Upper concave envelopes in one and two dimensions.

The 1-D routine is a monotone-chain upper hull over the finite points
of a profile, re-sampled at the profile's own coordinates.  The 2-D
routine lifts a finite point cloud to 3-D, takes the convex hull, and
evaluates the piecewise-linear upper boundary at query points.  In both
cases, coordinates outside the convex hull of the finite support map to
BOTTOM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BOTTOM

# Orientation / degeneracy tolerances.  Grid-aligned inputs produce
# massive coplanarity; qhull's deterministic tie handling plus these
# fixed tolerances keep runs reproducible.
_DET_TOL = 1e-12
_PLANE_TOL = 1e-11
_INSIDE_TOL = 1e-9


@dataclass(frozen=True)
class Profile1D:
    """Values along a line of pmfs: strictly increasing xs, matching ys.

    ys entries may be BOTTOM (-inf) where the value is undefined.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
            raise ValueError("xs and ys must be equal-length 1-D arrays")
        if xs.size > 1 and np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)


@dataclass(frozen=True)
class PointCloud2D:
    """Finite-valued points (u, v, rho) inside a bounding rectangle."""

    points: np.ndarray = field(repr=False)  # shape (M, 3)
    rect: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0))

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.shape[1] != 3:
            raise ValueError("points must have shape (M, 3)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud stores finite values only; omit BOTTOM nodes")
        (u0, u1), (v0, v1) = self.rect
        if pts.size and (
            pts[:, 0].min() < u0 - 1e-12
            or pts[:, 0].max() > u1 + 1e-12
            or pts[:, 1].min() < v0 - 1e-12
            or pts[:, 1].max() > v1 + 1e-12
        ):
            raise ValueError("cloud points outside the stated rectangle")
        object.__setattr__(self, "points", pts)


def envelope_values_1d(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Upper concave envelope of (xs, ys) evaluated back at xs.

    ys may contain BOTTOM; those points are excluded from the hull and
    the output is BOTTOM outside [first finite x, last finite x].  This
    is the hot path of the iteration, so it works on raw arrays.
    """
    finite = np.flatnonzero(np.isfinite(ys))
    out = np.full(ys.shape, BOTTOM)
    if finite.size == 0:
        return out
    if finite.size == 1:
        out[finite[0]] = ys[finite[0]]
        return out
    hx: list[float] = []
    hy: list[float] = []
    for k in finite:
        x = xs[k]
        y = ys[k]
        # pop while the previous vertex lies on or below the new chord
        while len(hx) >= 2:
            cross = (hx[-1] - hx[-2]) * (y - hy[-2]) - (hy[-1] - hy[-2]) * (x - hx[-2])
            if cross >= 0.0:
                hx.pop()
                hy.pop()
            else:
                break
        hx.append(x)
        hy.append(y)
    lo, hi = finite[0], finite[-1]
    out[lo : hi + 1] = np.interp(xs[lo : hi + 1], hx, hy)
    # guard against interpolation rounding dipping below an input point
    np.maximum(out[finite], ys[finite], out=out[finite])
    return out


def upper_concave_envelope_1d(profile: Profile1D) -> Profile1D:
    """Least concave majorant of the profile's finite points, at the same xs."""
    return Profile1D(profile.xs, envelope_values_1d(profile.xs, profile.ys))


def _dedupe_keep_max(pts: np.ndarray) -> np.ndarray:
    """Drop points sharing an exact (u, v) location, keeping the largest rho."""
    order = np.lexsort((-pts[:, 2], pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = (np.diff(pts[:, 0]) != 0.0) | (np.diff(pts[:, 1]) != 0.0)
    return pts[keep]


def _envelope_on_line(pts: np.ndarray, queries: np.ndarray, out: np.ndarray) -> None:
    """Collinear cloud: 1-D envelope along the carrier line, in place."""
    uv = pts[:, :2]
    ctr = uv.mean(axis=0)
    rel = uv - ctr
    k = np.argmax((rel**2).sum(axis=1))
    norm = np.linalg.norm(rel[k])
    if norm == 0.0:
        # all points coincide; dedupe left a single location
        m = np.abs(queries - uv[0]).max(axis=1) <= _INSIDE_TOL
        out[m] = pts[:, 2].max()
        return
    direction = rel[k] / norm
    t = rel @ direction
    tq = (queries - ctr) @ direction
    off = np.linalg.norm((queries - ctr) - np.outer(tq, direction), axis=1)
    idx = np.argsort(t)
    env = envelope_values_1d(t[idx], pts[idx, 2])
    on = (off <= _INSIDE_TOL) & (tq >= t.min() - _INSIDE_TOL) & (tq <= t.max() + _INSIDE_TOL)
    if np.any(on):
        finite = np.isfinite(env)
        out[on] = np.interp(tq[on], t[idx][finite], env[finite])


def upper_concave_envelope_2d(cloud: PointCloud2D, query_nodes) -> np.ndarray:
    """Evaluate the least concave majorant of a 2-D cloud at query nodes.

    Returns one value per query; BOTTOM where the query lies outside the
    convex hull of the cloud's (u, v) projections.  The general case
    builds the 3-D convex hull of the lifted points and takes, at each
    query, the minimum over upper facets of the facet-plane value: every
    upper facet plane majorizes the envelope on the whole shadow, and
    the facet supporting the query attains it.  Degenerate clouds
    (single point, collinear, exactly affine) are dispatched to reduced
    forms instead of qhull.
    """
    from scipy.spatial import ConvexHull

    queries = np.atleast_2d(np.asarray(query_nodes, dtype=float))
    out = np.full(len(queries), BOTTOM)
    pts = cloud.points
    if len(pts) == 0:
        return out
    pts = _dedupe_keep_max(pts)
    if len(pts) == 1:
        m = np.abs(queries - pts[0, :2]).max(axis=1) <= _INSIDE_TOL
        out[m] = pts[0, 2]
        return out

    uv = pts[:, :2]
    rel = uv - uv.mean(axis=0)
    svals = np.linalg.svd(rel, compute_uv=False)
    if svals[-1] <= _DET_TOL * max(1.0, svals[0]):
        _envelope_on_line(pts, queries, out)
        return _restore_input_points(pts, queries, out)

    hull2 = ConvexHull(uv)
    inside = (queries @ hull2.equations[:, :2].T + hull2.equations[:, 2]).max(
        axis=1
    ) <= _INSIDE_TOL

    # exactly (numerically) affine data: the envelope is the fitted plane
    design = np.column_stack([uv, np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(design, pts[:, 2], rcond=None)
    if np.abs(design @ coef - pts[:, 2]).max() <= _PLANE_TOL:
        out[inside] = queries[inside] @ coef[:2] + coef[2]
        return _restore_input_points(pts, queries, out)

    hull = ConvexHull(pts)
    eqs = hull.equations  # n . x + d <= 0 inside, n outward
    upper = eqs[eqs[:, 2] > _DET_TOL]
    if len(upper) == 0:  # cannot happen for non-flat data, but stay safe
        out[inside] = pts[:, 2].max()
        return _restore_input_points(pts, queries, out)
    plane_vals = (-upper[:, 3][None, :] - queries @ upper[:, :2].T) / upper[:, 2][None, :]
    out[inside] = plane_vals.min(axis=1)[inside]
    return _restore_input_points(pts, queries, out)


def _restore_input_points(pts: np.ndarray, queries: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Clamp envelope values from below at queries that coincide with cloud points.

    The envelope majorizes the input by definition; this removes the
    last-ulp dips that facet-plane evaluation can introduce.
    """
    lookup = {(u, v): r for u, v, r in pts}
    for idx, (u, v) in enumerate(map(tuple, queries)):
        r = lookup.get((u, v))
        if r is not None and out[idx] < r:
            out[idx] = r
    return out
