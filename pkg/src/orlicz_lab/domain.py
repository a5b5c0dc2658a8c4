"""Geometry and measure: balls, cubes, axis-aligned boxes and nonnegative
simple functions on box cells.

Box/box and cube/box intersections are exact products of interval overlaps.
Ball/box intersections are exact in dimension 1, closed form in dimension 2
and computed by one-dimensional slicing (adaptive quadrature over the
breakpoints of the slice volume) in dimension 3 and up.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, UsageError
from .specs import as_extended, jsonable, load_spec
from .young import YoungFunction, eval_young


def unit_ball_volume(n: int) -> float:
    """``v_n = |B(0, 1)|`` in R^n."""
    return math.pi ** (n / 2.0) / special.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius**self.dim

    @property
    def scale(self) -> float:
        """The argument fed to the growth function: the radius."""
        return self.radius


@dataclass(frozen=True)
class Cube:
    """``Q(a, r) = {x : max_i |x_i - a_i| <= r}``; ``r`` is the half side."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("cube half-side must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def side_length(self) -> float:
        return 2.0 * self.radius

    @property
    def volume(self) -> float:
        return self.side_length**self.dim

    @property
    def scale(self) -> float:
        """The argument fed to the growth function: the side length."""
        return self.side_length

    def as_box(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


def _interval_overlap(lo1, hi1, lo2, hi2):
    with np.errstate(invalid="ignore"):
        out = np.minimum(hi1, hi2) - np.maximum(lo1, lo2)
    return np.maximum(np.nan_to_num(out, nan=0.0, posinf=np.inf), 0.0)


def _product(lengths: np.ndarray) -> np.ndarray:
    """Product over the last axis with the convention 0 * inf = 0."""
    zero = np.any(lengths == 0.0, axis=-1)
    with np.errstate(invalid="ignore"):
        prod = np.prod(lengths, axis=-1)
    return np.where(zero, 0.0, prod)


def box_overlap(lo1, hi1, lo2, hi2) -> np.ndarray:
    """Volumes of pairwise intersections; broadcasting over leading axes."""
    return _product(_interval_overlap(lo1, hi1, lo2, hi2))


# ---------------------------------------------------------------------------
# ball / box intersection volumes

def _disk_primitive(x, r):
    """Antiderivative of ``sqrt(r^2 - x^2)`` on ``[-r, r]``."""
    x = np.clip(x, -r, r)
    s = np.sqrt(np.maximum(r * r - x * x, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        ang = np.arcsin(np.clip(x / r, -1.0, 1.0))
    return 0.5 * (x * s + r * r * ang)


def _quadrant_area(u, v, r):
    """Area of the disk ``|x| < r`` (centred at 0) intersected with
    ``{x_1 <= u, x_2 <= v}``."""
    U = np.clip(u, -r, r)
    whole = _disk_primitive(U, r) - _disk_primitive(-r, r)
    vv = np.clip(v, -r, r)
    s = np.sqrt(np.maximum(r * r - vv * vv, 0.0))
    inner = np.maximum(np.minimum(U, s) + s, 0.0)
    outer = (_disk_primitive(np.minimum(U, -s), r) - _disk_primitive(-r, r)) + (
        _disk_primitive(np.maximum(U, s), r) - _disk_primitive(s, r))
    clipped = vv * inner + np.sign(vv) * outer
    clipped = np.where(vv >= r, whole, np.where(vv <= -r, -whole, clipped))
    return np.maximum(clipped + whole, 0.0)


def _prim_scalar(x: float, r: float) -> float:
    x = min(max(x, -r), r)
    return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(min(max(x / r, -1.0), 1.0)))


def _quadrant_scalar(u: float, v: float, r: float) -> float:
    """Scalar twin of :func:`_quadrant_area` (used inside quadrature loops)."""
    U = min(max(u, -r), r)
    base = _prim_scalar(-r, r)
    whole = _prim_scalar(U, r) - base
    if v >= r:
        return max(2.0 * whole, 0.0)
    if v <= -r:
        return 0.0
    s = math.sqrt(max(r * r - v * v, 0.0))
    inner = max(min(U, s) + s, 0.0)
    outer = (_prim_scalar(min(U, -s), r) - base) + (_prim_scalar(max(U, s), r) - _prim_scalar(s, r))
    sign = math.copysign(1.0, v) if v != 0 else 0.0
    return max(v * inner + sign * outer + whole, 0.0)


def _disk_box_area_centered(r: float, lo, hi) -> float:
    x0, y0 = lo
    x1, y1 = hi
    if x1 <= x0 or y1 <= y0:
        return 0.0
    area = (_quadrant_scalar(x1, y1, r) - _quadrant_scalar(x0, y1, r)
            - _quadrant_scalar(x1, y0, r) + _quadrant_scalar(x0, y0, r))
    return min(max(area, 0.0), math.pi * r * r)


def disk_box_area(center, r, lo, hi) -> np.ndarray:
    """Exact area of ``B(center, r) ∩ [lo, hi]`` in the plane.

    ``center`` has shape ``(..., 2)``, ``r`` broadcasts against ``(...)``,
    ``lo``/``hi`` have shape ``(..., 2)``; infinite bounds are allowed.
    """
    c = np.asarray(center, dtype=float)
    lo = np.asarray(lo, dtype=float) - c
    hi = np.asarray(hi, dtype=float) - c
    r = np.asarray(r, dtype=float)
    x0, x1 = lo[..., 0], hi[..., 0]
    y0, y1 = lo[..., 1], hi[..., 1]
    with np.errstate(invalid="ignore"):
        area = (_quadrant_area(x1, y1, r) - _quadrant_area(x0, y1, r)
                - _quadrant_area(x1, y0, r) + _quadrant_area(x0, y0, r))
    empty = (x1 <= x0) | (y1 <= y0)
    cap = math.pi * r * r
    return np.where(empty, 0.0, np.clip(area, 0.0, cap))


def _slice_breakpoints(r: float, lo: np.ndarray, hi: np.ndarray) -> list[float]:
    """Abscissae in the first coordinate where the slice volume may kink."""
    bounds = []
    for l, h in zip(lo[1:], hi[1:]):
        bounds.append([0.0] + [abs(v) for v in (l, h) if math.isfinite(v)])
    pts = set()
    for combo in itertools.product(*bounds):
        rem = r * r - sum(b * b for b in combo)
        if rem > 0:
            x = math.sqrt(rem)
            pts.update((x, -x))
    return sorted(pts)


def ball_box_volume_centered(r: float, lo, hi, epsrel: float = 1e-11) -> float:
    """Volume of ``B(0, r) ∩ [lo, hi]`` in any dimension."""
    lo = tuple(float(v) for v in lo)
    hi = tuple(float(v) for v in hi)
    return _ball_box_rec(float(r), lo, hi, epsrel)


def _ball_box_rec(r: float, lo: tuple, hi: tuple, epsrel: float) -> float:
    n = len(lo)
    if n == 1:
        return max(min(hi[0], r) - max(lo[0], -r), 0.0)
    if n == 2:
        return _disk_box_area_centered(r, lo, hi)
    if any(h <= l or h <= -r or l >= r for l, h in zip(lo, hi)):
        return 0.0
    a, b = max(lo[0], -r), min(hi[0], r)
    # fully contained box: exact product
    corners = [max(abs(l), abs(h)) for l, h in zip(lo, hi)]
    if all(math.isfinite(c) for c in corners) and sum(c * c for c in corners) <= r * r:
        return math.prod(h - l for l, h in zip(lo, hi))
    sub_lo, sub_hi = lo[1:], hi[1:]

    def slice_vol(x):
        rho = math.sqrt(max(r * r - x * x, 0.0))
        if rho == 0.0:
            return 0.0
        return _ball_box_rec(rho, sub_lo, sub_hi, epsrel)

    pts = [p for p in _slice_breakpoints(r, lo, hi) if a < p < b]
    edges = [a] + pts + [b]
    total = 0.0
    for s0, t0 in zip(edges, edges[1:]):
        val, _ = integrate.quad(slice_vol, s0, t0, epsabs=epsrel * 1e-2 * r**n,
                                epsrel=epsrel, limit=200)
        total += val
    return total


def ball_box_volume(center, r: float, lo, hi) -> float:
    c = np.asarray(center, dtype=float)
    return ball_box_volume_centered(float(r), np.asarray(lo, float) - c, np.asarray(hi, float) - c)


def ball_box_volume_bounds(center, r: float, lo, hi, depth: int = 8) -> tuple[float, float]:
    """Two-sided bound by dyadic subdivision of the (clipped) box.

    Sub-boxes entirely inside the ball count towards both bounds, those
    straddling the sphere only towards the upper bound.
    """
    c = np.asarray(center, dtype=float)
    lo = np.maximum(np.asarray(lo, float) - c, -r)
    hi = np.minimum(np.asarray(hi, float) - c, r)
    if np.any(hi <= lo):
        return 0.0, 0.0
    inside = 0.0
    straddle = 0.0
    stack = [(lo, hi, 0)]
    while stack:
        l, h, d = stack.pop()
        near = np.where((l <= 0) & (h >= 0), 0.0, np.minimum(np.abs(l), np.abs(h)))
        far = np.maximum(np.abs(l), np.abs(h))
        vol = float(np.prod(h - l))
        if float(np.sum(far**2)) <= r * r:
            inside += vol
        elif float(np.sum(near**2)) >= r * r:
            continue
        elif d >= depth:
            straddle += vol
        else:
            m = 0.5 * (l + h)
            for choice in itertools.product((0, 1), repeat=l.size):
                sel = np.asarray(choice, dtype=bool)
                stack.append((np.where(sel, m, l), np.where(sel, h, m), d + 1))
    return inside, inside + straddle


# ---------------------------------------------------------------------------
# boxes and simple functions

def _as_box_array(boxes, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    lows, highs = [], []
    for box in boxes:
        lo = [as_extended(iv[0]) for iv in box]
        hi = [as_extended(iv[1]) for iv in box]
        lows.append(lo)
        highs.append(hi)
    if not lows:
        if n is None:
            raise UsageError("cannot infer dimension of an empty box list")
        return np.zeros((0, n)), np.zeros((0, n))
    lo, hi = np.asarray(lows, dtype=float), np.asarray(highs, dtype=float)
    if lo.ndim != 2 or (n is not None and lo.shape[1] != n):
        raise UsageError("boxes have inconsistent dimensions")
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(hi < lo):
        raise UsageError("each box interval needs lo <= hi")
    return lo, hi


def _check_disjoint(lo: np.ndarray, hi: np.ndarray) -> None:
    m = lo.shape[0]
    if m < 2:
        return
    ov = np.minimum(hi[:, None, :], hi[None, :, :]) - np.maximum(lo[:, None, :], lo[None, :, :])
    with np.errstate(invalid="ignore"):
        meets = np.all(ov > 0, axis=-1)
    np.fill_diagonal(meets, False)
    if np.any(meets):
        i, j = np.argwhere(meets)[0]
        raise UsageError(f"cells {i} and {j} overlap in a set of positive measure")


@dataclass(frozen=True)
class BoxRegion:
    """A finite union of disjoint axis-aligned boxes."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_boxes(cls, boxes, n: int | None = None, check: bool = True) -> "BoxRegion":
        lo, hi = _as_box_array(boxes, n)
        if check:
            _check_disjoint(lo, hi)
        return cls(lo, hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[1]

    @property
    def measure(self) -> float:
        return float(np.sum(_product(self.hi - self.lo)))

    def boxes(self) -> list:
        return [list(zip(l, h)) for l, h in zip(self.lo.tolist(), self.hi.tolist())]

    def indicator(self) -> "SimpleFunction":
        return SimpleFunction(self.lo, self.hi, np.ones(self.lo.shape[0]))


class SimpleFunction:
    """``f = sum_j v_j chi_{cell_j}`` with disjoint box cells and ``v_j >= 0``.

    Cells with value 0 are dropped on construction.
    """

    def __init__(self, lo, hi, values, check: bool = True):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if lo.shape != hi.shape or lo.shape[0] != values.size:
            raise UsageError("cell bounds and values have inconsistent shapes")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise UsageError("simple function values must be finite and nonnegative")
        if np.any(hi < lo):
            raise UsageError("each cell interval needs lo <= hi")
        keep = (values > 0) & np.all(hi > lo, axis=1)
        self.lo, self.hi, self.values = lo[keep], hi[keep], values[keep]
        self.n = lo.shape[1]
        if check:
            _check_disjoint(self.lo, self.hi)
        for arr in (self.lo, self.hi, self.values):
            arr.setflags(write=False)

    # construction ---------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "SimpleFunction":
        return cls(np.zeros((0, n)), np.zeros((0, n)), np.zeros(0))

    @classmethod
    def indicator(cls, box, value: float = 1.0) -> "SimpleFunction":
        lo, hi = _as_box_array([box])
        return cls(lo, hi, [value])

    @classmethod
    def from_cells(cls, cells: Iterable[tuple[Any, float]], n: int | None = None,
                   check: bool = True) -> "SimpleFunction":
        cells = list(cells)
        lo, hi = _as_box_array([c[0] for c in cells], n)
        return cls(lo, hi, [float(c[1]) for c in cells], check=check)

    @classmethod
    def from_json(cls, spec: Any, n: int | None = None) -> "SimpleFunction":
        data = load_spec(spec)
        if isinstance(data, dict):
            n = data.get("n", n)
            data = data.get("cells", [])
        if not isinstance(data, list):
            raise UsageError("simple function JSON must be a list of {box, value} cells")
        try:
            cells = [(c["box"], c["value"]) for c in data]
        except (KeyError, TypeError):
            raise UsageError("each simple function cell needs 'box' and 'value'") from None
        return cls.from_cells(cells, n)

    def to_json(self) -> list:
        return [{"box": jsonable([[l, h] for l, h in zip(lo, hi)]), "value": float(v)}
                for lo, hi, v in zip(self.lo.tolist(), self.hi.tolist(), self.values)]

    # basic quantities ---------------------------------------------------------
    @property
    def num_cells(self) -> int:
        return self.values.size

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    def cell_measures(self) -> np.ndarray:
        return _product(self.hi - self.lo)

    def sup_norm(self) -> float:
        return float(self.values.max(initial=0.0))

    def lp_norm(self, p: float) -> float:
        if self.is_zero:
            return 0.0
        if math.isinf(p):
            return self.sup_norm()
        meas = self.cell_measures()
        if np.any(np.isinf(meas)):
            return math.inf
        return float(np.sum(self.values**p * meas)) ** (1.0 / p)

    def levels(self) -> np.ndarray:
        """Distinct positive values in decreasing order."""
        return np.unique(self.values)[::-1]

    def scaled(self, c: float) -> "SimpleFunction":
        if not c >= 0:
            raise DomainError("scale factor must be nonnegative")
        return SimpleFunction(self.lo, self.hi, self.values * c, check=False)

    def superlevel(self, v: float) -> "SimpleFunction":
        """Indicator of ``{f >= v}``."""
        sel = self.values >= v
        return SimpleFunction(self.lo[sel], self.hi[sel], np.ones(int(sel.sum())), check=False)

    def corner_coords(self) -> list[np.ndarray]:
        """Sorted finite cell endpoints along each axis."""
        out = []
        for i in range(self.n):
            c = np.concatenate([self.lo[:, i], self.hi[:, i]])
            out.append(np.unique(c[np.isfinite(c)]))
        return out

    def __call__(self, x) -> np.ndarray:
        """Pointwise values (cells are treated as half-open ``[lo, hi)``)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.all((x[:, None, :] >= self.lo[None]) & (x[:, None, :] < self.hi[None]), axis=-1)
        return inside.astype(float) @ self.values

    def __repr__(self) -> str:
        return f"SimpleFunction(n={self.n}, cells={self.num_cells})"


def discretize(fn: Callable[[np.ndarray], np.ndarray], box, cells_per_axis: int) -> SimpleFunction:
    """Approximate ``|fn|`` on ``box`` by its values at cell midpoints.

    This is an approximation (not exact), intended for analytic test inputs.
    """
    lo, hi = _as_box_array([box])
    lo, hi = lo[0], hi[0]
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
        raise UsageError("discretization needs a bounded box")
    n = lo.size
    edges = [np.linspace(lo[i], hi[i], cells_per_axis + 1) for i in range(n)]
    grids = np.meshgrid(*[np.arange(cells_per_axis)] * n, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    clo = np.stack([edges[i][idx[:, i]] for i in range(n)], axis=1)
    chi = np.stack([edges[i][idx[:, i] + 1] for i in range(n)], axis=1)
    vals = np.abs(np.asarray(fn(0.5 * (clo + chi)), dtype=float))
    return SimpleFunction(clo, chi, vals, check=False)


def random_staircase(rng: np.random.Generator, n: int, cells_per_axis: int = 2,
                     extent: tuple[float, float] = (-2.0, 2.0),
                     value_range: tuple[float, float] = (0.1, 2.0)) -> SimpleFunction:
    """Seeded random simple function on a random tensor grid of boxes."""
    a, b = extent
    edges = [np.sort(rng.uniform(a, b, cells_per_axis + 1)) for _ in range(n)]
    grids = np.meshgrid(*[np.arange(cells_per_axis)] * n, indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    clo = np.stack([edges[i][idx[:, i]] for i in range(n)], axis=1)
    chi = np.stack([edges[i][idx[:, i] + 1] for i in range(n)], axis=1)
    vals = rng.uniform(*value_range, idx.shape[0])
    return SimpleFunction(clo, chi, vals, check=False)


# ---------------------------------------------------------------------------
# intersections with cells

Region = Ball | Cube | BoxRegion | None


def cell_overlaps(f: SimpleFunction, region: Region) -> np.ndarray:
    """``|cell_j ∩ region|`` for every cell (``region=None`` means R^n)."""
    if region is None:
        return f.cell_measures()
    if isinstance(region, Cube):
        lo, hi = region.as_box()
        return box_overlap(f.lo, f.hi, lo[None], hi[None])
    if isinstance(region, BoxRegion):
        if region.lo.shape[0] == 0:
            return np.zeros(f.num_cells)
        return box_overlap(f.lo[:, None], f.hi[:, None], region.lo[None], region.hi[None]).sum(axis=1)
    if isinstance(region, Ball):
        return batch_ball_overlaps(f, np.asarray([region.center]), np.asarray([region.radius]))[0]
    raise UsageError(f"unsupported region {region!r}")


def batch_cube_overlaps(f: SimpleFunction, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Fractions ``|cell_j ∩ Q(a_k, r_k)| / |Q|`` with shape ``(K, m)``.

    Computed per axis as relative overlap so that huge cubes do not overflow.
    Dividing by the rounded width ``(c + r) - (c - r)`` keeps every fraction
    at most 1 even when ``r`` is far below the spacing of floats near ``c``.
    """
    c = np.asarray(centers, dtype=float)[:, None, :]
    r = np.asarray(radii, dtype=float)[:, None, None]
    lo, hi = c - r, c + r
    lengths = _interval_overlap(f.lo[None], f.hi[None], lo, hi) / (hi - lo)
    return np.prod(lengths, axis=-1)


def batch_ball_overlaps(f: SimpleFunction, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Volumes ``|cell_j ∩ B(a_k, r_k)|`` with shape ``(K, m)``."""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    K, m, n = centers.shape[0], f.num_cells, f.n
    if m == 0:
        return np.zeros((K, 0))
    if n == 1:
        c = centers[:, None, 0]
        r = radii[:, None]
        return _interval_overlap(f.lo[None, :, 0], f.hi[None, :, 0], c - r, c + r)
    if n == 2:
        return disk_box_area(centers[:, None, :], radii[:, None], f.lo[None], f.hi[None])
    out = np.zeros((K, m))
    for k in range(K):
        for j in range(m):
            out[k, j] = ball_box_volume(centers[k], radii[k], f.lo[j], f.hi[j])
    return out


def batch_ball_fractions(f: SimpleFunction, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    n = f.n
    vol = unit_ball_volume(n) * np.asarray(radii, dtype=float) ** n
    W = batch_ball_overlaps(f, centers, radii) / vol[:, None]
    # cells are disjoint, so the fractions sum to at most 1; quadrature and
    # rounding can overshoot by a few ulps
    total = W.sum(axis=1, keepdims=True)
    return W / np.maximum(total, 1.0)


def distribution(f: SimpleFunction, region: Region, t: float) -> float:
    """``m(A, f, t) = |{x in A : f(x) > t}|``."""
    if not t > 0:
        raise DomainError("distribution function needs t > 0")
    sel = f.values > t
    if not np.any(sel):
        return 0.0
    ov = cell_overlaps(f, region)
    return float(np.sum(ov[sel]))


def modular(f: SimpleFunction, region: Ball | Cube, lam: float, phi: YoungFunction) -> float:
    """``(1/|B|) * integral over B of Phi(f / lam)`` (with ``0 * inf = 0``)."""
    if not lam > 0:
        raise DomainError("modular needs lambda > 0")
    if f.is_zero:
        return 0.0
    ov = cell_overlaps(f, region)
    phis = np.atleast_1d(eval_young(phi, f.values / lam))
    with np.errstate(invalid="ignore"):
        terms = np.where(ov == 0.0, 0.0, phis * ov)
    return float(np.sum(terms) / region.volume)


@lru_cache(maxsize=None)
def _monte_carlo_points(n: int, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(samples, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = rng.random(samples) ** (1.0 / n)
    return g * rad[:, None]


def monte_carlo_overlap(f: SimpleFunction, region: Ball | Cube, samples: int = 200_000,
                        seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of cell overlaps and their standard errors."""
    c = np.asarray(region.center)
    if isinstance(region, Ball):
        pts = c + region.radius * _monte_carlo_points(f.n, samples, seed)
    else:
        rng = np.random.default_rng(seed)
        pts = c + region.radius * (2.0 * rng.random((samples, f.n)) - 1.0)
    inside = np.all((pts[:, None, :] >= f.lo[None]) & (pts[:, None, :] < f.hi[None]), axis=-1)
    frac = inside.mean(axis=0)
    se = np.sqrt(frac * (1 - frac) / samples)
    return frac * region.volume, se * region.volume
