"""Luxemburg norms on balls and cubes, and (weak) Orlicz-Morrey norms.

The Orlicz-Morrey norm is a supremum over all balls (or cubes).  It is
estimated from below by maximising over an explicit candidate family:

* radii: the dyadic grid ``2^j`` plus half and full gaps between cell corner
  coordinates, followed by golden-section refinement around local maxima;
* centers "anchored" to the function: each coordinate is ``c_i + s r`` with
  ``c_i`` a corner coordinate of a cell (or a midpoint between consecutive
  ones) and ``s`` in ``{-1, 0, 1}``.

For cubes the anchored family ``c_i +- r`` is exhaustive at every fixed
radius: the modular is multilinear in the center on each cell of the
breakpoint lattice ``{c_i +- r}``, so its maximum is attained at a lattice
vertex.  Only the supremum over ``r`` is then approximate.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .domain import (Ball, Cube, SimpleFunction, batch_ball_fractions,
                     batch_cube_overlaps, cell_overlaps, unit_ball_volume)
from .errors import DomainError, PreconditionError, UsageError
from .growth import GrowthFunction
from .specs import load_spec
from .young import YoungFunction, eval_young, inverse_at_one_lower, inverse_brackets

LUX_RTOL = 1e-11
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# batched gauge solvers

def _bisect_gauge(modfn: Callable[[np.ndarray, np.ndarray], np.ndarray], vmax: np.ndarray,
                  phi: YoungFunction, rtol: float):
    """``inf{lam : modfn(lam) <= 1}`` for a batch of nonincreasing modulars.

    ``modfn(idx, lam)`` evaluates the modular of the rows ``idx`` at ``lam``.
    Returns ``(lo, hi)`` with ``modfn(lo) > 1 >= modfn(hi)``.
    """
    K = vmax.size
    inv_lo = inverse_at_one_lower(phi)
    start = vmax / inv_lo if inv_lo > 0 else vmax.copy()
    hi = start.copy()
    idx = np.arange(K)
    # galloping: the step factor squares after every unsuccessful probe
    lo = np.zeros(K)
    step = np.full(K, 2.0)
    bad = modfn(idx, hi) > 1.0
    for _ in range(2100):
        if not np.any(bad):
            break
        lo[bad] = hi[bad]
        hi[bad] *= step[bad]
        step[bad] = np.minimum(step[bad] ** 2, 2.0**64)
        bad[bad] = modfn(idx[bad], hi[bad]) > 1.0
        bad &= np.isfinite(hi)
    hi[~np.isfinite(hi) | (hi > 1e300)] = np.inf
    fresh = np.isfinite(hi) & (lo == 0.0)
    step[:] = 2.0
    lo[fresh] = hi[fresh] / 2.0
    ok = fresh & (modfn(idx, np.where(fresh, lo, 1.0)) <= 1.0)
    for _ in range(2100):
        if not np.any(ok):
            break
        hi[ok] = lo[ok]
        step[ok] = np.minimum(step[ok] ** 2, 2.0**64)
        lo[ok] /= step[ok]
        ok[ok] = (lo[ok] > 0) & (modfn(idx[ok], np.maximum(lo[ok], 1e-300)) <= 1.0)
    active = np.isfinite(hi) & (lo > 0)
    _secant_refine(modfn, idx, lo, hi, active, rtol)
    for _ in range(400):
        todo = active & (hi > lo * (1.0 + rtol))
        if not np.any(todo):
            break
        sel = idx[todo]
        mid = np.sqrt(lo[sel] * hi[sel])
        above = modfn(sel, mid) > 1.0
        lo[sel[above]] = mid[above]
        hi[sel[~above]] = mid[~above]
    return lo, hi


def _secant_refine(modfn, idx, lo, hi, active, rtol, iters: int = 12) -> None:
    """Shrink ``[lo, hi]`` in place by secant steps on ``log modular`` vs
    ``log lam``, probing just below and just above each secant point so that
    a good guess closes the bracket to ``rtol`` in one step.

    Brackets stay certified: only points with modular > 1 replace ``lo`` and
    only points with modular <= 1 replace ``hi``.  The Illinois rule (halve
    the stale endpoint's value when the same side moves twice) keeps strongly
    curved modulars from stalling.  Rows that do not close are left for the
    bisection that follows.
    """
    eps = 0.25 * rtol
    f_lo = np.full(lo.shape, np.nan)
    f_hi = np.full(lo.shape, np.nan)
    last = np.zeros(lo.shape, dtype=np.int8)  # 1: lo moved, 2: hi moved
    sel = idx[active]
    if sel.size == 0:
        return
    with np.errstate(divide="ignore"):
        both = modfn(np.concatenate([sel, sel]), np.concatenate([lo[sel], hi[sel]]))
        f_lo[sel] = np.log(both[:sel.size])
        f_hi[sel] = np.log(both[sel.size:])
    for _ in range(iters):
        todo = active & (hi > lo * (1.0 + rtol))
        if not np.any(todo):
            return
        sel = idx[todo]
        a, b = np.log(lo[sel]), np.log(hi[sel])
        fa, fb = f_lo[sel], f_hi[sel]
        with np.errstate(invalid="ignore", divide="ignore"):
            x = a + fa * (b - a) / (fa - fb)
        # clamp just inside the bracket (the probes then straddle a root
        # sitting at either end); midpoint when the secant is undefined
        delta = 0.5 * math.log1p(rtol)
        x = np.where(np.isfinite(x), np.clip(x, a + delta, b - delta), 0.5 * (a + b))
        s = np.exp(x)
        probes = np.concatenate([s * (1.0 - eps), s * (1.0 + eps)])
        with np.errstate(divide="ignore"):
            vals = modfn(np.concatenate([sel, sel]), probes)
        moved_lo = np.zeros(sel.size, dtype=bool)
        moved_hi = np.zeros(sel.size, dtype=bool)
        for part in (slice(0, sel.size), slice(sel.size, 2 * sel.size)):
            lam, m = probes[part], vals[part]
            above = (m > 1.0) & (lam > lo[sel])
            below = (m <= 1.0) & (lam < hi[sel])
            with np.errstate(divide="ignore"):
                logm = np.log(m)
            lo[sel[above]] = lam[above]
            f_lo[sel[above]] = logm[above]
            hi[sel[below]] = lam[below]
            f_hi[sel[below]] = logm[below]
            moved_lo |= above
            moved_hi |= below
        only_lo = moved_lo & ~moved_hi
        only_hi = moved_hi & ~moved_lo
        f_hi[sel[only_lo & (last[sel] == 1)]] *= 0.5
        f_lo[sel[only_hi & (last[sel] == 2)]] *= 0.5
        last[sel] = np.where(only_lo, 1, np.where(only_hi, 2, 0))


def _strong_modfn(W: np.ndarray, v: np.ndarray, phi: YoungFunction):
    def modfn(idx, lam):
        t = v[None, :] / lam[:, None]
        P = np.atleast_2d(eval_young(phi, t))
        w = W[idx]
        with np.errstate(invalid="ignore"):
            terms = np.where(w == 0.0, 0.0, w * P)
        return terms.sum(axis=1)
    return modfn


def luxemburg_batch(W: np.ndarray, v: np.ndarray, phi: YoungFunction, rtol: float = LUX_RTOL):
    """Luxemburg norms for rows of occupancy fractions ``W`` (shape ``(K, m)``).

    ``W[k, j] = |cell_j ∩ B_k| / |B_k|``.  Returns ``(lo, hi)``.
    """
    K = W.shape[0]
    lo, hi = np.zeros(K), np.zeros(K)
    occupied = W > 0
    rows = np.flatnonzero(occupied.any(axis=1))
    if rows.size == 0:
        return lo, hi
    Wr = W[rows]
    if phi.kind == "power" and phi.domain_cap is None:
        q = phi.params["q"]
        val = (Wr @ v**q) ** (1.0 / q)
        lo[rows], hi[rows] = val, val
        return lo, hi
    vmax = np.where(Wr > 0, v[None, :], 0.0).max(axis=1)
    l, h = _bisect_gauge(_strong_modfn(Wr, v, phi), vmax, phi, rtol)
    lo[rows], hi[rows] = l, h
    return lo, hi


def _level_masses(W: np.ndarray, v: np.ndarray):
    """Distinct levels (descending) and ``mu[k, i] = frac of B_k where f >= level_i``."""
    levels = np.unique(v)[::-1]
    order = np.argsort(-v, kind="stable")
    csum = np.cumsum(W[:, order], axis=1)
    sorted_v = v[order]
    last = np.searchsorted(-sorted_v, -levels, side="right") - 1
    return levels, csum[:, last]


def weak_luxemburg_batch(W: np.ndarray, v: np.ndarray, phi: YoungFunction,
                         rtol: float = LUX_RTOL):
    """Weak Luxemburg norms: ``inf{lam : sup_t Phi(t) m(B, f/lam, t) <= |B|}``.

    For a simple function the inner supremum is attained as ``t`` increases
    to a level ``v_i / lam``, where it equals ``Phi(v_i/lam) |{f >= v_i} ∩ B|``.
    """
    K = W.shape[0]
    lo, hi = np.zeros(K), np.zeros(K)
    rows = np.flatnonzero((W > 0).any(axis=1))
    if rows.size == 0:
        return lo, hi
    levels, mu = _level_masses(W[rows], v)
    if phi.kind == "power" and phi.domain_cap is None:
        q = phi.params["q"]
        val = (levels[None, :] * mu ** (1.0 / q)).max(axis=1)
        lo[rows], hi[rows] = val, val
        return lo, hi

    def modfn(idx, lam):
        P = np.atleast_2d(eval_young(phi, levels[None, :] / lam[:, None]))
        m = mu[idx]
        with np.errstate(invalid="ignore"):
            terms = np.where(m == 0.0, 0.0, m * P)
        return terms.max(axis=1)

    vmax = np.where(mu > 0, levels[None, :], 0.0).max(axis=1)
    l, h = _bisect_gauge(modfn, vmax, phi, rtol)
    lo[rows], hi[rows] = l, h
    return lo, hi


def weak_luxemburg_closed_form(W: np.ndarray, v: np.ndarray, phi: YoungFunction) -> np.ndarray:
    """``max_i v_i / Phi^{-1}(1 / mu_i)``: the weak gauge without bisection."""
    K = W.shape[0]
    out = np.zeros(K)
    rows = np.flatnonzero((W > 0).any(axis=1))
    if rows.size == 0:
        return out
    levels, mu = _level_masses(W[rows], v)
    with np.errstate(divide="ignore"):
        u = np.where(mu > 0, 1.0 / mu, np.inf)
    lo, hi, _ = inverse_brackets(phi, u.ravel(), rtol=1e-13, atol=1e-300)
    inv = (0.5 * (lo + hi)).reshape(u.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mu > 0, levels[None, :] / inv, 0.0)
    out[rows] = ratio.max(axis=1)
    return out


# ---------------------------------------------------------------------------
# results

@dataclass
class NormEstimate:
    value: float
    lo: float
    hi: float
    witness: dict | None = None
    search_spec: dict | None = None
    converged: bool = True
    upper_certified: bool = False
    diagnostic: str = ""
    evaluations: int = 0

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "lo": self.lo,
            "hi": self.hi,
            "witness": self.witness,
            "converged": self.converged,
            "upper_certified": self.upper_certified,
            "search": self.search_spec,
            "evaluations": self.evaluations,
            "diagnostic": self.diagnostic,
        }


def _region_fractions(f: SimpleFunction, region: Ball | Cube) -> np.ndarray:
    if isinstance(region, Cube):
        return batch_cube_overlaps(f, np.asarray([region.center]), np.asarray([region.radius]))
    return batch_ball_fractions(f, np.asarray([region.center]), np.asarray([region.radius]))


def _single(f: SimpleFunction, region: Ball | Cube, phi: YoungFunction, tol: float,
            solver) -> NormEstimate:
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    if len(region.center) != f.n:
        raise UsageError("region and function dimensions differ")
    witness = {"center": list(region.center), "radius": region.radius,
               "region": "cube" if isinstance(region, Cube) else "ball"}
    if f.is_zero:
        return NormEstimate(0.0, 0.0, 0.0, witness, upper_certified=True)
    W = _region_fractions(f, region)
    lo, hi = solver(W, f.values, phi, min(tol, 1e-3))
    lo, hi = float(lo[0]), float(hi[0])
    diag = "" if math.isfinite(hi) else "modular exceeds 1 for every lambda"
    value = math.sqrt(lo * hi) if math.isfinite(hi) else math.inf
    return NormEstimate(value, lo, hi, witness, upper_certified=True, diagnostic=diag)


def luxemburg_norm(f: SimpleFunction, region: Ball | Cube, phi: YoungFunction,
                   tol: float = 1e-10) -> NormEstimate:
    """``inf{lam > 0 : (1/|B|) int_B Phi(|f|/lam) <= 1}``."""
    return _single(f, region, phi, tol, luxemburg_batch)


def weak_luxemburg_norm(f: SimpleFunction, region: Ball | Cube, phi: YoungFunction,
                        tol: float = 1e-10) -> NormEstimate:
    """``inf{lam > 0 : sup_t Phi(t) m(B, f/lam, t) <= |B|}``."""
    return _single(f, region, phi, tol, weak_luxemburg_batch)


# ---------------------------------------------------------------------------
# supremum search

@dataclass
class SearchSpec:
    region: str = "ball"
    j_min: int = -20
    j_max: int = 20
    refine_depth: int = 3
    golden_iters: int = 16
    refine_top: int = 6
    corner_radii: bool = True
    max_corner_radii: int = 2000
    max_candidates_per_radius: int = 20000
    tol: float = 1e-9

    def __post_init__(self):
        if self.region not in ("ball", "cube"):
            raise UsageError("search region must be 'ball' or 'cube'")
        if self.j_min > self.j_max:
            raise UsageError("search needs j_min <= j_max")
        if self.refine_depth < 0 or self.golden_iters < 0:
            raise UsageError("refinement settings must be nonnegative")

    @classmethod
    def from_spec(cls, spec: Any) -> "SearchSpec":
        if spec is None:
            return cls()
        if isinstance(spec, SearchSpec):
            return spec
        d = load_spec(spec)
        if not isinstance(d, dict):
            raise UsageError("search spec must be a JSON object")
        d = {k: v for k, v in d.items() if k != "kind"}
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise UsageError(f"unknown search spec field(s): {sorted(extra)}")
        return cls(**d)

    def to_json(self) -> dict:
        return asdict(self)


def _axis_patterns(coords: Sequence[np.ndarray], region: str, n: int):
    """Per-axis (base, slope) pairs; the center coordinate is ``base + slope*r``."""
    out = []
    for i in range(n):
        c = coords[i] if i < len(coords) else np.zeros(0)
        if c.size == 0:
            out.append((np.zeros(1), np.zeros(1)))
            continue
        if region == "cube" or n == 1:
            base = np.concatenate([c, c])
            slope = np.concatenate([-np.ones(c.size), np.ones(c.size)])
        else:
            mids = 0.5 * (c[1:] + c[:-1])
            b = np.concatenate([c, mids])
            base = np.repeat(b, 3)
            slope = np.tile([-1.0, 0.0, 1.0], b.size)
        out.append((base, slope))
    return out


def _product_pattern(patterns):
    idx = np.array(list(itertools.product(*[range(p[0].size) for p in patterns])), dtype=int)
    base = np.stack([patterns[i][0][idx[:, i]] for i in range(len(patterns))], axis=1)
    slope = np.stack([patterns[i][1][idx[:, i]] for i in range(len(patterns))], axis=1)
    return base, slope


def _corner_radii(coords: Sequence[np.ndarray], cap: int) -> np.ndarray:
    gaps = []
    for c in coords:
        if c.size > 1:
            d = np.abs(c[:, None] - c[None, :])
            gaps.append(d[d > 0])
    if not gaps:
        return np.zeros(0)
    g = np.unique(np.concatenate(gaps))
    r = np.unique(np.concatenate([g / 2.0, g]))
    if r.size > cap:
        r = r[np.linspace(0, r.size - 1, cap).round().astype(int)]
    return r


class _Searcher:
    """Evaluates ``max over anchored centers`` of the normalised gauge at given radii."""

    def __init__(self, f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                 spec: SearchSpec, solver, coords=None):
        self.f, self.phi_y, self.phi_g, self.spec, self.solver = f, phi_y, phi_g, spec, solver
        self.cube = spec.region == "cube"
        coords = f.corner_coords() if coords is None else [np.asarray(c, float) for c in coords]
        self.coords = coords
        self.base, self.slope = _product_pattern(_axis_patterns(coords, spec.region, f.n))
        self.evaluations = 0
        self.best = None  # (value, lo, hi, r, center)

    def _consider(self, vals, los, his, radii, centers):
        """Deterministic reduction: max value, then smallest r, then lexicographic center."""
        top = np.max(vals)
        cand = np.flatnonzero(vals == top)
        if cand.size > 1:
            keys = [centers[cand, i] for i in range(centers.shape[1] - 1, -1, -1)]
            order = np.lexsort(keys + [radii[cand]])
            cand = cand[order]
        k = int(cand[0])
        entry = (float(vals[k]), float(los[k]), float(his[k]), float(radii[k]),
                 tuple(float(x) for x in centers[k]))
        if self.best is None or self._better(entry, self.best):
            self.best = entry
        self.max_hi = max(getattr(self, "max_hi", 0.0), float(np.max(his)))

    @staticmethod
    def _better(a, b) -> bool:
        if a[0] != b[0]:
            return a[0] > b[0]
        if a[3] != b[3]:
            return a[3] < b[3]
        return a[4] < b[4]

    def evaluate_pairs(self, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
        """Objective at explicit (center, radius) pairs."""
        f = self.f
        if self.cube:
            W = batch_cube_overlaps(f, centers, radii)
            scale = 2.0 * radii
        else:
            W = batch_ball_fractions(f, centers, radii)
            scale = radii
        lo, hi = self.solver(W, f.values, self.phi_y, min(self.spec.tol, 1e-3) * 0.1)
        norm_phi = self.phi_g(scale)
        with np.errstate(invalid="ignore"):
            mid = np.where(np.isfinite(hi), np.sqrt(lo * hi), np.inf)
        vals, los, his = mid / norm_phi, lo / norm_phi, hi / norm_phi
        self.evaluations += radii.size
        if radii.size:
            self._consider(vals, los, his, radii, centers)
        return vals

    def evaluate_radii(self, radii: np.ndarray) -> np.ndarray:
        """``g(r) = max over anchored centers`` for each radius."""
        radii = np.asarray(radii, dtype=float)
        P = self.base.shape[0]
        per_chunk = max(1, self.spec.max_candidates_per_radius * 8 // max(P, 1))
        out = np.empty(radii.size)
        for s in range(0, radii.size, per_chunk):
            R = radii[s:s + per_chunk]
            centers = (self.base[None] + self.slope[None] * R[:, None, None]).reshape(-1, self.f.n)
            rr = np.repeat(R, P)
            vals = self.evaluate_pairs(centers, rr)
            out[s:s + per_chunk] = vals.reshape(R.size, P).max(axis=1)
        return out


def _search(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
            search: Any, tol: float, solver, coords=None, extra=None) -> NormEstimate:
    spec = SearchSpec.from_spec(search)
    if tol is not None:
        spec = SearchSpec(**{**asdict(spec), "tol": float(tol)})
    if not spec.tol > 0:
        raise DomainError("tolerance must be positive")
    spec_json = spec.to_json()
    if f.is_zero:
        return NormEstimate(0.0, 0.0, 0.0, None, spec_json, True, False)
    s = _Searcher(f, phi_y, phi_g, spec, solver, coords)
    if s.base.shape[0] > spec.max_candidates_per_radius:
        raise UsageError(f"anchored center family has {s.base.shape[0]} points per radius; "
                         "raise max_candidates_per_radius or simplify the function")
    dyadic = 2.0 ** np.arange(spec.j_min, spec.j_max + 1, dtype=float)
    parts = [dyadic]
    if spec.corner_radii:
        parts.append(_corner_radii(s.coords, spec.max_corner_radii))
    radii = np.unique(np.concatenate(parts))
    radii = radii[radii > 0]
    if radii.size == 0:
        raise UsageError("empty candidate set")
    g = s.evaluate_radii(radii)
    if extra:
        cs = np.asarray([c for c, _ in extra], dtype=float).reshape(-1, f.n)
        rs = np.asarray([r for _, r in extra], dtype=float)
        s.evaluate_pairs(cs, rs)

    history = [s.best[0]]
    converged = spec.refine_depth == 0
    brackets = _local_max_brackets(radii, g, spec.refine_top)
    if brackets and spec.refine_depth > 0 and spec.golden_iters > 0:
        a = np.log([b[0] for b in brackets])
        b = np.log([b[1] for b in brackets])
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        g1 = s.evaluate_radii(np.exp(x1))
        g2 = s.evaluate_radii(np.exp(x2))
        for _level in range(spec.refine_depth):
            for _ in range(spec.golden_iters):
                left = g1 >= g2
                b = np.where(left, x2, b)
                a = np.where(left, a, x1)
                nx1 = np.where(left, b - GOLDEN * (b - a), x2)
                nx2 = np.where(left, x1, a + GOLDEN * (b - a))
                new_x = np.where(left, nx1, nx2)
                new_g = s.evaluate_radii(np.exp(new_x))
                ng1 = np.where(left, new_g, g2)
                ng2 = np.where(left, g1, new_g)
                x1, x2, g1, g2 = nx1, nx2, ng1, ng2
            history.append(s.best[0])
            if len(history) >= 2 and abs(history[-1] - history[-2]) <= spec.tol * max(abs(history[-1]), 1e-300):
                converged = True
                break
    value, lo, hi, r, center = s.best
    witness = {"center": list(center), "radius": r, "region": spec.region}
    return NormEstimate(value, lo, s.max_hi, witness, spec_json, converged, False,
                        evaluations=s.evaluations)


def _local_max_brackets(radii: np.ndarray, g: np.ndarray, top: int):
    """Brackets ``[r_{i-1}, r_{i+1}]`` around the ``top`` largest local maxima."""
    M = radii.size
    if M < 2:
        return []
    finite = np.where(np.isfinite(g), g, -np.inf)
    left = np.concatenate([[-np.inf], finite[:-1]])
    right = np.concatenate([finite[1:], [-np.inf]])
    peaks = np.flatnonzero((finite >= left) & (finite >= right) & np.isfinite(finite))
    if peaks.size == 0:
        return []
    order = peaks[np.lexsort((peaks, -finite[peaks]))][:top]
    out = []
    for i in order:
        lo = radii[max(i - 1, 0)]
        hi = radii[min(i + 1, M - 1)]
        if hi > lo:
            out.append((lo, hi))
    return out


def orlicz_morrey_norm(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                       search: Any = None, tol: float | None = None, *, coords=None,
                       extra_candidates=None) -> NormEstimate:
    """Lower estimate of ``sup_{a, r} ||f||_{Phi, B(a, r)} / phi(r)``.

    For cubes the normalisation is ``phi(side length) = phi(2r)``.
    ``extra_candidates`` is an optional list of ``(center, radius)`` pairs
    added to the candidate family.
    """
    return _search(f, phi_y, phi_g, search, tol, luxemburg_batch, coords, extra_candidates)


def weak_orlicz_morrey_norm(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                            search: Any = None, tol: float | None = None, *, coords=None,
                            extra_candidates=None) -> NormEstimate:
    """As :func:`orlicz_morrey_norm` with the weak gauge on each ball."""
    return _search(f, phi_y, phi_g, search, tol, weak_luxemburg_batch, coords, extra_candidates)


def _witness_pair(est: NormEstimate):
    if est.witness is None:
        return []
    return [(est.witness["center"], est.witness["radius"])]


# ---------------------------------------------------------------------------
# identities and comparisons

@dataclass
class IdentityReport:
    weak_norm: float
    level_formula: float
    relative_gap: float
    per_level: list[dict]
    passed: bool
    tol: float

    def to_json(self) -> dict:
        return asdict(self)


def weak_norm_identity(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                       search: Any = None, tol: float = 1e-6) -> IdentityReport:
    """Compare the weak norm with ``sup_lam lam ||chi_{f > lam}||``.

    For a simple function the right-hand side is a maximum over the levels
    ``v``: ``v * ||chi_{f >= v}||`` (``lam`` increasing to ``v``).  The two
    sides are computed by separate searches; each search is also evaluated at
    the other's witnesses so that both estimates share a candidate set.
    """
    if f.is_zero:
        return IdentityReport(0.0, 0.0, 0.0, [], True, tol)
    coords = f.corner_coords()
    weak = weak_orlicz_morrey_norm(f, phi_y, phi_g, search, coords=coords)
    per_level = []
    witnesses = _witness_pair(weak)
    for v in f.levels():
        est = orlicz_morrey_norm(f.superlevel(v), phi_y, phi_g, search, coords=coords,
                                 extra_candidates=witnesses)
        per_level.append({"level": float(v), "indicator_norm": est.value,
                          "product": float(v) * est.value, "witness": est.witness})
    extra = witnesses + [(p["witness"]["center"], p["witness"]["radius"]) for p in per_level]
    weak = weak_orlicz_morrey_norm(f, phi_y, phi_g, search, coords=coords, extra_candidates=extra)
    rhs = max(p["product"] for p in per_level)
    gap = abs(weak.value - rhs) / max(abs(rhs), 1e-300)
    return IdentityReport(weak.value, rhs, gap, per_level, gap <= tol, tol)


@dataclass
class ComparabilityReport:
    ball_norm: float
    cube_norm: float
    ratio: float
    lower_bound: float
    upper_bound: float
    dimensional_constant: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def cube_ball_comparability(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                            search: Any = None, tol: float | None = None,
                            C1: float = 1.0, C2: float = 1.0) -> ComparabilityReport:
    """Ball-based versus cube-based supremum.

    With ``B(a,r) ⊂ Q(a,r) ⊂ B(a, sqrt(n) r)`` and ``phi`` almost decreasing
    (constant ``C1``) and submultiplicative (``C2``):

        ball <= C1 2^n / v_n * cube,
        cube <= C2 phi(sqrt(n)/2) v_n n^{n/2} / 2^n * ball.
    """
    base = SearchSpec.from_spec(search)
    ball = orlicz_morrey_norm(f, phi_y, phi_g, SearchSpec(**{**asdict(base), "region": "ball"}), tol)
    cube = orlicz_morrey_norm(f, phi_y, phi_g, SearchSpec(**{**asdict(base), "region": "cube"}), tol)
    n = f.n
    vn = unit_ball_volume(n)
    upper = C1 * 2.0**n / vn
    lower = 1.0 / (C2 * float(phi_g(math.sqrt(n) / 2.0)) * vn * n ** (n / 2.0) / 2.0**n)
    dim_const = (2.0 * math.sqrt(n)) ** n
    if cube.value == 0.0 and ball.value == 0.0:
        return ComparabilityReport(0.0, 0.0, 1.0, lower, upper, dim_const, True)
    ratio = ball.value / cube.value if cube.value > 0 else math.inf
    slack = 1e-9
    ok = lower * (1 - slack) <= ratio <= upper * (1 + slack)
    return ComparabilityReport(ball.value, cube.value, ratio, lower, upper, dim_const, ok)


@dataclass
class EmbeddingReport:
    norm: float
    lp_norm: float
    C1: float
    C2: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def lp_constants(p: float, n: int, phi_y: YoungFunction, phi_g: GrowthFunction,
                 t_grid=None, r_grid=None, cap: float = 1e6) -> tuple[float, float]:
    """Grid constants with ``Phi(t) <= C1^p t^p`` (t >= 1) and ``r^{-n/p} <= C2 phi(r)``."""
    t = np.geomspace(1.0, 1e6, 400) if t_grid is None else np.asarray(t_grid, float)
    t = t[t >= 1.0]
    r = np.geomspace(1e-6, 1e6, 400) if r_grid is None else np.asarray(r_grid, float)
    if t.size == 0 or r.size == 0:
        raise UsageError("embedding grids are empty")
    ratio_t = np.atleast_1d(eval_young(phi_y, t)) / t**p
    ratio_r = r ** (-n / p) / phi_g(r)
    c1 = float(np.max(ratio_t)) ** (1.0 / p)
    c2 = float(np.max(ratio_r))
    half_t = ratio_t[: max(2, t.size // 2)]
    mid = slice(r.size // 4, max(r.size // 4 + 2, 3 * r.size // 4))
    grow_t = c1 > 1.0 and math.log(c1 ** p) > 1.5 * math.log(max(float(np.max(half_t)), 1.0)) + 1e-9
    grow_r = c2 > 1.0 and math.log(c2) > 1.5 * math.log(max(float(np.max(ratio_r[mid])), 1.0)) + 1e-9
    if not math.isfinite(c1) or c1 > cap or grow_t:
        raise PreconditionError("no certified constant with Phi(t) <= C1^p t^p for t >= 1")
    if not math.isfinite(c2) or c2 > cap or grow_r:
        raise PreconditionError("no certified constant with r^{-n/p} <= C2 phi(r)")
    return c1, c2


def lp_embedding_check(f: SimpleFunction, p: float, phi_y: YoungFunction, phi_g: GrowthFunction,
                       search: Any = None, t_grid=None, r_grid=None,
                       slack: float = 1e-9) -> EmbeddingReport:
    """``||f||_{M_Phi^phi} <= C1 C2 ||f||_{L^p}`` with grid-certified constants."""
    c1, c2 = lp_constants(p, f.n, phi_y, phi_g, t_grid, r_grid)
    lp = f.lp_norm(p)
    est = orlicz_morrey_norm(f, phi_y, phi_g, search)
    bound = c1 * c2 * lp
    return EmbeddingReport(est.value, lp, c1, c2, bound, est.value <= bound * (1 + slack))


@dataclass
class ComparisonReport:
    lhs: float
    rhs: float
    c1: float
    c2: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def norm_comparison(f: SimpleFunction, pair1: tuple[YoungFunction, GrowthFunction],
                    pair2: tuple[YoungFunction, GrowthFunction], search: Any = None,
                    t_grid=None, r_grid=None, slack: float = 1e-8) -> ComparisonReport:
    """``||f||_{(Phi1, phi1)} <= c1 c2 ||f||_{(Phi2, phi2)}`` where
    ``phi2 <= c1 phi1`` and ``Phi1(t) <= Phi2(c2 t)`` on the grids."""
    (Y1, g1), (Y2, g2) = pair1, pair2
    t = np.geomspace(1e-6, 1e6, 400) if t_grid is None else np.asarray(t_grid, float)
    r = np.geomspace(1e-6, 1e6, 400) if r_grid is None else np.asarray(r_grid, float)
    c1 = float(np.max(g2(r) / g1(r)))
    _, hi, _ = inverse_brackets(Y2, np.atleast_1d(eval_young(Y1, t)), rtol=1e-13)
    c2 = float(np.max(hi / t))
    lhs = orlicz_morrey_norm(f, Y1, g1, search)
    rhs = orlicz_morrey_norm(f, Y2, g2, search, extra_candidates=_witness_pair(lhs))
    return ComparisonReport(lhs.value, rhs.value, c1, c2,
                            lhs.value <= c1 * c2 * rhs.value * (1 + slack))


def thread_cap() -> int:
    """Parallelism cap from ``ORLICZ_LAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("ORLICZ_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError("ORLICZ_LAB_THREADS must be an integer") from None
    return os.cpu_count() or 1
