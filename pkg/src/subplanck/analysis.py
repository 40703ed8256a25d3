"""Grid evaluation and phase-space feature extraction.

Grids hold ``values[ip, ix]`` with x along columns and p along rows. For
Wigner grids the point (x, p) maps to beta = (x + i p) / sqrt(2); for
sensitivity grids it is read as (dx, dp) with delta = (dx + i dp) / sqrt(2).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import closedform
from .exceptions import NoCentralContourError, SubPlanckError

__all__ = [
    "GridSpec",
    "PhaseGrid",
    "Contour",
    "FeatureReport",
    "ZeroProfile",
    "MIN_POINTS",
    "CHUNK_ROWS",
    "eval_grid",
    "marching_squares",
    "extract_contours",
    "central_feature",
    "zero_profile",
    "isotropy_trend",
    "worker_count",
]

MIN_POINTS = 33
CHUNK_ROWS = 8
SQRT2 = math.sqrt(2.0)
QUANTITIES = ("wigner", "sensitivity")


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    p_min: float
    p_max: float
    nx: int
    np: int

    def __post_init__(self):
        for name in ("x_min", "x_max", "p_min", "p_max"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not (self.x_min < self.x_max and self.p_min < self.p_max):
            raise ValueError("grid bounds must satisfy min < max")
        for name in ("nx", "np"):
            v = getattr(self, name)
            if int(v) != v or v < MIN_POINTS:
                raise ValueError(f"{name} must be an integer >= {MIN_POINTS}, got {v!r}")
            object.__setattr__(self, name, int(v))

    @classmethod
    def square(cls, lo: float, hi: float, n: int) -> "GridSpec":
        return cls(lo, hi, lo, hi, n, n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nx": self.nx,
            "np": self.np,
        }


@dataclass(frozen=True)
class PhaseGrid:
    """Real samples on a rectangular (x, p) lattice, ``values[ip, ix]``."""

    spec: GridSpec
    values: np.ndarray
    quantity: str = "wigner"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.spec.np, self.spec.nx):
            raise ValueError(f"values shape {vals.shape} does not match grid ({self.spec.np}, {self.spec.nx})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    x_min = property(lambda self: self.spec.x_min)
    x_max = property(lambda self: self.spec.x_max)
    p_min = property(lambda self: self.spec.p_min)
    p_max = property(lambda self: self.spec.p_max)
    nx = property(lambda self: self.spec.nx)
    np = property(lambda self: self.spec.np)

    @property
    def x(self) -> np.ndarray:
        return self.spec.x

    @property
    def p(self) -> np.ndarray:
        return self.spec.p


def worker_count(requested: int | None = None) -> int:
    """Worker threads for grid filling, capped by SUBPLANCK_THREADS."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("SUBPLANCK_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"SUBPLANCK_THREADS must be an integer, got {cap!r}") from None
    return max(1, int(n))


def _evaluator(quantity: str):
    if quantity == "wigner":
        return closedform.wigner
    if quantity == "sensitivity":
        return closedform.sensitivity
    raise ValueError(f"quantity must be one of {QUANTITIES}, got {quantity!r}")


def eval_grid(state, quantity: str, spec: GridSpec, workers: int | None = None) -> PhaseGrid:
    """Fill a grid with closed-form Wigner or sensitivity values.

    Rows are processed in fixed blocks of CHUNK_ROWS, so the result does not
    depend on the number of workers.
    """
    fn = _evaluator(quantity)
    x, p = spec.x, spec.p
    out = np.empty((spec.np, spec.nx))
    blocks = [(i, min(i + CHUNK_ROWS, spec.np)) for i in range(0, spec.np, CHUNK_ROWS)]

    def fill(block):
        i0, i1 = block
        pts = (x[None, :] + 1j * p[i0:i1, None]) / SQRT2
        try:
            out[i0:i1] = fn(state, pts)
        except SubPlanckError as exc:
            raise type(exc)(f"{exc} [grid rows p in [{p[i0]:.6g}, {p[i1 - 1]:.6g}]]") from exc

    n = min(worker_count(workers), len(blocks))
    if n == 1:
        for b in blocks:
            fill(b)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            list(pool.map(fill, blocks))
    return PhaseGrid(spec, out, quantity)


# --- contours ---------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """Polyline in (x, p) coordinates; closed loops are counterclockwise."""

    points: np.ndarray
    closed: bool

    @property
    def area(self) -> float:
        """Shoelace area (positive for counterclockwise loops)."""
        if not self.closed:
            return 0.0
        return _signed_area(self.points)

    def contains(self, x: float, p: float) -> bool:
        if not self.closed:
            return False
        return _point_in_polygon(self.points, x, p)


def _signed_area(pts: np.ndarray) -> float:
    xs, ps = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(xs * np.roll(ps, -1) - np.roll(xs, -1) * ps))


def _point_in_polygon(pts: np.ndarray, x: float, p: float) -> bool:
    xs, ps = pts[:, 0], pts[:, 1]
    xn, pn = np.roll(xs, -1), np.roll(ps, -1)
    crosses = (ps > p) != (pn > p)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = xs + (p - ps) * (xn - xs) / (pn - ps)
    return bool(np.count_nonzero(crosses & (x < xi)) % 2)


# edges of a cell: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
_SADDLE_SEGMENTS = {
    # (case, center_above): pairs of edges joined
    (5, True): ((0, 1), (2, 3)),
    (5, False): ((3, 0), (1, 2)),
    (10, True): ((3, 0), (1, 2)),
    (10, False): ((0, 1), (2, 3)),
}


def marching_squares(x, p, values, level: float) -> list[Contour]:
    """Level-set polylines of ``values[ip, ix]`` by marching squares.

    Crossings are placed by linear interpolation along cell edges. Saddle
    cells are split by comparing the mean of the four corners to the level.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    v = np.asarray(values, dtype=float)
    level = float(level)
    above = v > level
    c0, c1, c2, c3 = above[:-1, :-1], above[:-1, 1:], above[1:, 1:], above[1:, :-1]
    case = c0.astype(int) | (c1.astype(int) << 1) | (c2.astype(int) << 2) | (c3.astype(int) << 3)
    cells = np.argwhere((case != 0) & (case != 15))

    def edge_key(ip, ix, e):
        # horizontal edges ('h', row, col) and vertical edges ('v', row, col), shared between cells
        if e == 0:
            return ("h", ip, ix)
        if e == 2:
            return ("h", ip + 1, ix)
        if e == 3:
            return ("v", ip, ix)
        return ("v", ip, ix + 1)

    def edge_point(key):
        kind, ip, ix = key
        if kind == "h":
            va, vb = v[ip, ix], v[ip, ix + 1]
            t = (level - va) / (vb - va)
            return (x[ix] + t * (x[ix + 1] - x[ix]), p[ip])
        va, vb = v[ip, ix], v[ip + 1, ix]
        t = (level - va) / (vb - va)
        return (x[ix], p[ip] + t * (p[ip + 1] - p[ip]))

    segments = []
    for ip, ix in cells:
        k = case[ip, ix]
        if k in (5, 10):
            centre = 0.25 * (v[ip, ix] + v[ip, ix + 1] + v[ip + 1, ix + 1] + v[ip + 1, ix])
            pairs = _SADDLE_SEGMENTS[(int(k), bool(centre > level))]
        else:
            corners = (c0[ip, ix], c1[ip, ix], c2[ip, ix], c3[ip, ix])
            crossed = [e for e, (a, b) in enumerate(((0, 1), (1, 2), (3, 2), (0, 3))) if corners[a] != corners[b]]
            pairs = (tuple(crossed),)
        for ea, eb in pairs:
            segments.append((edge_key(ip, ix, ea), edge_key(ip, ix, eb)))

    # join segments through shared edge crossings
    by_key: dict = {}
    for s, (a, b) in enumerate(segments):
        by_key.setdefault(a, []).append(s)
        by_key.setdefault(b, []).append(s)
    used = [False] * len(segments)

    def walk(start_seg, start_key):
        chain = [start_key]
        seg, key = start_seg, start_key
        while True:
            used[seg] = True
            a, b = segments[seg]
            key = b if a == key else a
            chain.append(key)
            nxt = [s for s in by_key[key] if not used[s]]
            if not nxt:
                return chain
            seg = nxt[0]

    contours = []
    # open polylines start at boundary crossings (keys seen once)
    for key in sorted(k for k, segs in by_key.items() if len(segs) == 1):
        seg = by_key[key][0]
        if used[seg]:
            continue
        chain = walk(seg, key)
        contours.append(Contour(np.array([edge_point(k) for k in chain]), closed=False))
    for s in range(len(segments)):
        if used[s]:
            continue
        chain = walk(s, segments[s][0])
        pts = np.array([edge_point(k) for k in chain[:-1]])
        if _signed_area(pts) < 0:
            pts = pts[::-1]
        contours.append(Contour(pts, closed=True))
    return contours


def extract_contours(grid: PhaseGrid, level: float) -> list[Contour]:
    """Contours of the grid at ``level``; empty if the level is never crossed."""
    return marching_squares(grid.x, grid.p, grid.values, level)


# --- central feature --------------------------------------------------------


@dataclass(frozen=True)
class FeatureReport:
    area: float
    x_extent: float
    p_extent: float
    isotropy: float
    planck_ratio: float
    threshold_used: float
    threshold_frac: float
    contour: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "area": self.area,
            "x_extent": self.x_extent,
            "p_extent": self.p_extent,
            "isotropy": self.isotropy,
            "planck_ratio": self.planck_ratio,
            "threshold_used": self.threshold_used,
            "threshold_frac": self.threshold_frac,
        }


def _ray_extents(pts: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Largest distance from the origin at which each ray meets the polygon."""
    a = pts
    b = np.roll(pts, -1, axis=0)
    d = b - a
    ux, uy = np.cos(angles)[:, None], np.sin(angles)[:, None]
    # solve t*u = a + s*d for t >= 0, s in [0, 1]
    den = ux * d[None, :, 1] - uy * d[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (a[None, :, 0] * d[None, :, 1] - a[None, :, 1] * d[None, :, 0]) / den
        s = (a[None, :, 0] * uy - a[None, :, 1] * ux) / den
    ok = (den != 0) & (s >= 0) & (s <= 1) & (t >= 0)
    return np.max(np.where(ok, t, 0.0), axis=1)


def central_feature(grid: PhaseGrid, threshold_frac: float = 1e-2, n_rays: int = 360) -> FeatureReport:
    """Measure the contour |W| = threshold_frac * max|W| around the origin.

    The contour is traced on sign(W(0)) * W, which equals |W| on the central
    lobe; tracing |W| itself would miss sign changes that fall between grid
    samples and merge the lobe with its neighbours. The reference area for
    ``planck_ratio`` is the coherent-state contour at the same relative threshold, pi * ln(1/threshold_frac).
    """
    if not 0 < threshold_frac < 1:
        raise ValueError("threshold_frac must lie in (0, 1)")
    if not (grid.x_min < 0 < grid.x_max and grid.p_min < 0 < grid.p_max):
        raise NoCentralContourError("the grid does not contain the origin")
    mag = np.abs(grid.values)
    level = threshold_frac * float(mag.max())
    ix0 = int(np.argmin(np.abs(grid.x)))
    ip0 = int(np.argmin(np.abs(grid.p)))
    centre = grid.values[ip0, ix0]
    if abs(centre) <= level:
        raise NoCentralContourError(f"|W| near the origin ({abs(centre):.3g}) is below the threshold {level:.3g}")
    signed = np.sign(centre) * grid.values
    contours = extract_contours(PhaseGrid(grid.spec, signed, grid.quantity), level)
    enclosing = [c for c in contours if c.contains(0.0, 0.0)]
    if not enclosing:
        touching = any(not c.closed for c in contours)
        why = "the origin contour touches the grid boundary" if touching else "no contour encloses the origin"
        raise NoCentralContourError(f"no closed central contour at level {level:.3g}: {why}")
    best = min(enclosing, key=lambda c: c.area)
    pts = best.points
    radii = _ray_extents(pts, np.linspace(0.0, 2 * math.pi, n_rays, endpoint=False))
    area = best.area
    return FeatureReport(
        area=area,
        x_extent=float(pts[:, 0].max() - pts[:, 0].min()),
        p_extent=float(pts[:, 1].max() - pts[:, 1].min()),
        isotropy=float(radii.min() / radii.max()),
        planck_ratio=area / (math.pi * math.log(1.0 / threshold_frac)),
        threshold_used=level,
        threshold_frac=float(threshold_frac),
        contour=pts,
    )


def isotropy_trend(states, spec: GridSpec | None = None, threshold_frac: float = 1e-2) -> list[float]:
    """Central-feature isotropy of each state, in input order."""
    spec = spec or GridSpec.square(-4.0, 4.0, 201)
    return [central_feature(eval_grid(s, "wigner", spec), threshold_frac).isotropy for s in states]


# --- sensitivity zeros ------------------------------------------------------


@dataclass(frozen=True)
class ZeroProfile:
    angles: list
    first_zero_radius: list  # None where no zero was found below r_max
    zero_tolerance: float
    r_max: float

    def __post_init__(self):
        if len(self.angles) != len(self.first_zero_radius):
            raise ValueError("angles and radii must have equal length")

    @property
    def max_radius(self) -> float | None:
        """Largest first-zero radius over all angles; None if some ray has none."""
        if any(r is None for r in self.first_zero_radius):
            return None
        return max(self.first_zero_radius)

    def to_dict(self) -> dict:
        return {
            "angles": list(self.angles),
            "first_zero_radius": ["none-found" if r is None else r for r in self.first_zero_radius],
            "zero_tolerance": self.zero_tolerance,
            "r_max": self.r_max,
        }


def _first_zero_on_ray(f, radii: np.ndarray, values: np.ndarray, floor: float, xtol: float):
    """Smallest radius with f <= floor, refining sampled minima and crossings."""
    hit = np.flatnonzero(values <= floor)
    stop = hit[0] if hit.size else len(values)
    # interior local minima before the first sampled hit may still dip below the floor
    for k in range(1, min(stop, len(values) - 1)):
        if values[k] <= values[k - 1] and values[k] <= values[k + 1] and values[k] < 1e3 * floor:
            res = minimize_scalar(f, bounds=(radii[k - 1], radii[k + 1]), method="bounded", options={"xatol": 1e-10})
            if res.fun <= floor:
                lo = radii[k - 1]
                r = brentq(lambda t: f(t) - floor, lo, res.x, xtol=xtol)
                return float(r)
    if not hit.size:
        return None
    k = hit[0]
    if k == 0:
        return float(radii[0])
    return float(brentq(lambda t: f(t) - floor, radii[k - 1], radii[k], xtol=xtol))


def zero_profile(
    state,
    n_angles: int = 64,
    r_max: float = 2.0,
    zero_tol: float = 1e-4,
    n_samples: int = 2001,
    xtol: float = 1e-5,
) -> ZeroProfile:
    """First radius along each direction where S drops to zero_tol * S(0).

    Directions are delta = |delta| e^{i theta} with theta = 2 pi k / n_angles.
    Rays are sampled on ``n_samples`` radii and each candidate is refined by
    root bracketing to better than 1e-4.
    """
    if n_angles < 16:
        raise ValueError("n_angles must be at least 16")
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    s0 = float(closedform.sensitivity(state, 0.0))
    floor = zero_tol * s0
    angles = [2 * math.pi * k / n_angles for k in range(n_angles)]
    radii = np.linspace(0.0, r_max, n_samples)
    out = []
    for th in angles:
        u = complex(math.cos(th), math.sin(th))
        vals = np.asarray(closedform.sensitivity(state, radii * u))
        f = lambda t, u=u: float(closedform.sensitivity(state, t * u))  # noqa: E731
        out.append(_first_zero_on_ray(f, radii, vals, floor, xtol))
    return ZeroProfile(angles, out, float(zero_tol), float(r_max))
