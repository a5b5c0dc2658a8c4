"""Composition operators ``C_psi f = f o psi`` for affine ``psi(x) = Ax + b``.

Exact composition is available for box-preserving maps, i.e. when ``A`` is a
generalized permutation matrix (one nonzero per row and column): pre-images
of boxes are then boxes.  Rotations go through a rasterisation fallback.

Norm ratios are computed with cube-based searches by default.  Where a
theoretical bound is compared against a ratio of two *estimates*, the
denominator search is also evaluated at the image of the numerator's witness
(``psi(Q(a, r)) ⊂ Q(psi(a), L r)``), which makes the comparison follow from
the per-cube inequality rather than from the quality of the search.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .domain import BoxRegion, SimpleFunction
from .errors import (PreconditionError, RankDeficiencyError, UnsupportedMapError,
                     UsageError)
from .growth import ClassCertificate, GrowthFunction, certify_class, log_grid
from .norms import (NormEstimate, SearchSpec, _axis_patterns, _corner_radii, _product_pattern,
                    _Searcher, lp_constants, luxemburg_batch, orlicz_morrey_norm)
from .specs import load_spec
from .young import YoungFunction

DEFAULT_SEARCH = {"region": "cube"}
RANK_RTOL = 1e-12


# ---------------------------------------------------------------------------
# SVD by one-sided Jacobi rotations

@dataclass
class SvdResult:
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        return self.U @ np.diag(self.sigma) @ self.V


def svd_small(A, max_sweeps: int = 60) -> SvdResult:
    """``A = U diag(sigma) V`` with orthogonal ``U, V`` and ascending ``sigma``.

    One-sided Jacobi (Hestenes): column pairs of ``A V^T`` are rotated until
    mutually orthogonal; the column norms are then the singular values.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise UsageError("svd_small needs a square matrix")
    n = A.shape[0]
    if n == 0 or n > 8:
        raise UsageError("svd_small supports 1 <= n <= 8")
    if not np.all(np.isfinite(A)):
        raise UsageError("matrix entries must be finite")
    G = A.copy()
    Vt = np.eye(n)
    eps = np.finfo(float).eps
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(G[:, p] @ G[:, p])
                beta = float(G[:, q] @ G[:, q])
                gamma = float(G[:, p] @ G[:, q])
                if abs(gamma) <= eps * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                gp, gq = G[:, p].copy(), G[:, q].copy()
                G[:, p], G[:, q] = c * gp - s * gq, s * gp + c * gq
                vp, vq = Vt[:, p].copy(), Vt[:, q].copy()
                Vt[:, p], Vt[:, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            break
    sigma = np.linalg.norm(G, axis=0)
    smax = float(sigma.max())
    if smax == 0.0 or float(sigma.min()) < RANK_RTOL * smax:
        raise RankDeficiencyError("matrix is numerically singular")
    order = np.argsort(sigma, kind="stable")
    sigma = sigma[order]
    U = G[:, order] / sigma[None, :]
    V = Vt[:, order].T
    return SvdResult(U, sigma, V, sweeps)


# ---------------------------------------------------------------------------
# affine maps

@dataclass(frozen=True)
class AffineMap:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise UsageError("affine map needs a square matrix")
        b = np.zeros(A.shape[0]) if self.b is None else np.array(self.b, dtype=float).ravel()
        if b.size != A.shape[0]:
            raise UsageError("shift has the wrong dimension")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        svd_small(A)  # raises on singular matrices

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def linear(cls, A) -> "AffineMap":
        return cls(np.asarray(A, dtype=float), None)

    @classmethod
    def diag(cls, d: Sequence[float], b=None) -> "AffineMap":
        return cls(np.diag(np.asarray(d, dtype=float)), b)

    @classmethod
    def from_spec(cls, spec: Any) -> "AffineMap":
        d = load_spec(spec)
        if not isinstance(d, dict) or "kind" not in d:
            raise UsageError("map spec needs a 'kind' field")
        kind = d["kind"]
        if kind == "diag":
            if "d" not in d:
                raise UsageError("diag map needs field 'd'")
            return cls.diag(d["d"], d.get("b"))
        if kind == "perm":
            if "perm" not in d:
                raise UsageError("perm map needs field 'perm' (image index of each coordinate)")
            perm = [int(i) for i in d["perm"]]
            n = len(perm)
            if sorted(perm) != list(range(n)):
                raise UsageError("'perm' must be a permutation of 0..n-1")
            signs = d.get("signs", [1.0] * n)
            scale = d.get("scale", [1.0] * n)
            A = np.zeros((n, n))
            for i, j in enumerate(perm):
                A[i, j] = float(signs[i]) * float(scale[i])
            return cls(A, d.get("b"))
        if kind == "affine":
            if "A" not in d:
                raise UsageError("affine map needs field 'A'")
            return cls(np.asarray(d["A"], dtype=float), d.get("b"))
        raise UsageError(f"unknown map kind {kind!r}")

    def to_json(self) -> dict:
        return {"kind": "affine", "A": self.A.tolist(), "b": self.b.tolist()}

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.A.T + self.b

    def svd(self) -> SvdResult:
        return svd_small(self.A)

    @property
    def singular_values(self) -> np.ndarray:
        return self.svd().sigma

    @property
    def lipschitz(self) -> float:
        """``L``: the largest singular value."""
        return float(self.singular_values[-1])

    @property
    def abs_det(self) -> float:
        pattern = self.box_pattern()
        if pattern is not None:
            return float(np.prod(np.abs(pattern[1])))
        return float(np.prod(self.singular_values))

    def box_pattern(self) -> tuple[np.ndarray, np.ndarray] | None:
        """``(cols, d)`` with ``(Ax)_i = d_i x_{cols[i]}``, or None if ``A`` is
        not a generalized permutation matrix."""
        nz = self.A != 0.0
        if not (np.all(nz.sum(axis=1) == 1) and np.all(nz.sum(axis=0) == 1)):
            return None
        cols = np.argmax(nz, axis=1)
        d = self.A[np.arange(self.n), cols]
        return cols, d

    @property
    def is_box_preserving(self) -> bool:
        return self.box_pattern() is not None

    def inverse(self) -> "AffineMap":
        Ainv = np.linalg.inv(self.A)
        pattern = self.box_pattern()
        if pattern is not None:
            cols, d = pattern
            Ainv = np.zeros_like(self.A)
            Ainv[cols, np.arange(self.n)] = 1.0 / d
        return AffineMap(Ainv, -Ainv @ self.b)


def measure_dilation_constant(psi: AffineMap) -> float:
    """``K = 1/|det A|``: ``|psi^{-1}(E)| = K |E|`` for every measurable ``E``."""
    return 1.0 / psi.abs_det


def preimage_boxes(psi: AffineMap, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boxes ``psi^{-1}([lo, hi])`` for a box-preserving ``psi`` (rows are boxes)."""
    pattern = psi.box_pattern()
    if pattern is None:
        raise UnsupportedMapError("exact pre-images need a generalized permutation matrix")
    cols, d = pattern
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    with np.errstate(invalid="ignore"):
        e1 = (lo - psi.b[None]) / d[None]
        e2 = (hi - psi.b[None]) / d[None]
    new_lo = np.empty_like(lo)
    new_hi = np.empty_like(hi)
    new_lo[:, cols] = np.minimum(e1, e2)
    new_hi[:, cols] = np.maximum(e1, e2)
    return new_lo, new_hi


def compose(f: SimpleFunction, psi: AffineMap) -> SimpleFunction:
    """``f o psi`` for a box-preserving ``psi``."""
    if psi.n != f.n:
        raise UsageError("map and function dimensions differ")
    lo, hi = preimage_boxes(psi, f.lo, f.hi)
    return SimpleFunction(lo, hi, f.values, check=False)


def compose_region(region: BoxRegion, psi: AffineMap) -> BoxRegion:
    lo, hi = preimage_boxes(psi, region.lo, region.hi)
    return BoxRegion(lo, hi)


def _search_spec(search) -> SearchSpec:
    return SearchSpec.from_spec(DEFAULT_SEARCH if search is None else search)


def _transported(psi: AffineMap, est: NormEstimate, spec: SearchSpec):
    """Image of the witness of ``||f o psi||``, enlarged to contain ``psi(Q)``."""
    if est.witness is None:
        return []
    a = np.asarray(est.witness["center"], dtype=float)
    r = float(est.witness["radius"])
    return [(psi(a).tolist(), psi.lipschitz * r)]


def composition_ratio(f: SimpleFunction, psi: AffineMap, phi_y: YoungFunction,
                      phi_g: GrowthFunction, search=None) -> dict:
    """``||f o psi|| / ||f||`` with the denominator also probed at the image
    of the numerator's witness."""
    spec = _search_spec(search)
    fpsi = compose(f, psi)
    num = orlicz_morrey_norm(fpsi, phi_y, phi_g, spec)
    den = orlicz_morrey_norm(f, phi_y, phi_g, spec, extra_candidates=_transported(psi, num, spec))
    ratio = num.value / den.value if den.value > 0 else (0.0 if num.value == 0 else math.inf)
    return {"numerator": num.value, "denominator": den.value, "ratio": ratio,
            "numerator_witness": num.witness, "denominator_witness": den.witness}


# ---------------------------------------------------------------------------
# sufficiency bound

def _class_cert(phi_g: GrowthFunction, cert: ClassCertificate | None) -> ClassCertificate:
    return certify_class(phi_g, log_grid(1e-6, 1e6, 121)) if cert is None else cert


@dataclass
class SufficiencyReport:
    K: float
    L: float
    C1: float
    C2: float
    bound: float
    ratios: list[float]
    max_ratio: float
    violations: list[int]
    details: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def sufficiency_constant(psi: AffineMap, phi_g: GrowthFunction, cert: ClassCertificate) -> float:
    """``K (C1 + C2 phi(L) L^n)``."""
    if cert.almost_decreasing_C1 is None or cert.submultiplicative_C2 is None:
        raise PreconditionError("the sufficiency bound needs phi certified almost decreasing "
                                "and submultiplicative")
    K = measure_dilation_constant(psi)
    L = psi.lipschitz
    return K * (cert.almost_decreasing_C1 + cert.submultiplicative_C2 * float(phi_g(L)) * L**psi.n)


def sufficiency_bound(psi: AffineMap, phi_y: YoungFunction, phi_g: GrowthFunction,
                      test_functions: Sequence[SimpleFunction], cert: ClassCertificate | None = None,
                      search=None, slack: float = 1e-9) -> SufficiencyReport:
    """Empirical ``||f o psi|| / ||f||`` against ``K (C1 + C2 phi(L) L^n)``."""
    cert = _class_cert(phi_g, cert)
    bound = sufficiency_constant(psi, phi_g, cert)
    ratios, details, bad = [], [], []
    for i, f in enumerate(test_functions):
        if f.is_zero:
            ratios.append(0.0)
            details.append({"note": "zero test function skipped"})
            continue
        d = composition_ratio(f, psi, phi_y, phi_g, search)
        ratios.append(d["ratio"])
        details.append(d)
        if not d["ratio"] <= bound * (1 + slack):
            bad.append(i)
    return SufficiencyReport(measure_dilation_constant(psi), psi.lipschitz,
                             cert.almost_decreasing_C1, cert.submultiplicative_C2, bound,
                             ratios, max(ratios, default=0.0), bad, details)


# ---------------------------------------------------------------------------
# dilations

@dataclass
class DilationReport:
    c: float
    lower: float
    upper: float
    phi_c: float
    class_lower: float | None = None
    class_upper: float | None = None
    within_class_bounds: bool | None = None

    def to_json(self) -> dict:
        return asdict(self)


def dilation_opnorm(phi_g: GrowthFunction, c: float, r_grid=None,
                    cert: ClassCertificate | None = None) -> DilationReport:
    """Grid ``inf`` and ``sup`` of ``phi(c r)/phi(r)`` and the comparator ``phi(c)``.

    With a certificate carrying ``C2`` and ``C3`` the report also checks
    ``phi(c)/(C2 C3) <= lower <= upper <= C2 phi(c)``.
    """
    if not c > 0:
        raise UsageError("dilation factor must be positive")
    r = log_grid(1e-6, 1e6, 241) if r_grid is None else np.asarray(r_grid, dtype=float)
    if r.size < 2 or np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise UsageError("radius grid must be positive and strictly increasing")
    if math.log10(r[-1] / r[0]) < 8 - 1e-9:
        raise UsageError("radius grid must span at least 8 decades")
    ratio = phi_g(c * r) / phi_g(r)
    rep = DilationReport(float(c), float(np.min(ratio)), float(np.max(ratio)), float(phi_g(c)))
    if cert is not None and cert.submultiplicative_C2 is not None and cert.reciprocal_C3 is not None:
        C2, C3 = cert.submultiplicative_C2, cert.reciprocal_C3
        rep.class_lower = rep.phi_c / (C2 * C3)
        rep.class_upper = C2 * rep.phi_c
        eps = 1e-12
        rep.within_class_bounds = bool(rep.class_lower * (1 - eps) <= rep.lower
                                       and rep.upper <= rep.class_upper * (1 + eps))
    return rep


# ---------------------------------------------------------------------------
# orthogonal maps

@dataclass
class OrthogonalReport:
    path: str
    norm_f: float
    norm_fw: float
    ratio: float
    tol: float
    passed: bool
    discretization_error: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def _check_orthogonal(W: np.ndarray) -> None:
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise PreconditionError("W must be square")
    if np.max(np.abs(W.T @ W - np.eye(W.shape[0]))) > 1e-10:
        raise PreconditionError("W is not orthogonal")


def rasterize_composition(f: SimpleFunction, W: np.ndarray, h: float) -> tuple[SimpleFunction, float]:
    """Approximate ``f(W x)`` (n = 2) on a grid of mesh ``h`` by midpoint
    sampling, merging runs along each row into boxes.

    Returns the raster and the relative error of its support measure.
    """
    if f.n != 2:
        raise UnsupportedMapError("rasterised composition is implemented for n = 2")
    if np.any(~np.isfinite(f.lo)) or np.any(~np.isfinite(f.hi)):
        raise UnsupportedMapError("rasterisation needs bounded cells")
    corners = []
    for lo, hi in zip(f.lo, f.hi):
        for cx in (lo[0], hi[0]):
            for cy in (lo[1], hi[1]):
                corners.append((cx, cy))
    pre = np.asarray(corners) @ W  # W^T applied to row vectors
    lo = np.floor(pre.min(axis=0) / h) * h - h
    hi = np.ceil(pre.max(axis=0) / h) * h + h
    nx = int(round((hi[0] - lo[0]) / h))
    ny = int(round((hi[1] - lo[1]) / h))
    xs = lo[0] + h * (np.arange(nx) + 0.5)
    cells_lo, cells_hi, vals = [], [], []
    for iy in range(ny):
        y = lo[1] + h * (iy + 0.5)
        pts = np.stack([xs, np.full(nx, y)], axis=1) @ W.T
        row = f(pts)
        change = np.flatnonzero(np.diff(np.concatenate([[0.0], row, [0.0]])) != 0)
        for s, e in zip(change[:-1], change[1:]):
            v = row[s] if s < nx else 0.0
            if v > 0:
                cells_lo.append((lo[0] + h * s, y - 0.5 * h))
                cells_hi.append((lo[0] + h * e, y + 0.5 * h))
                vals.append(v)
    g = SimpleFunction(np.asarray(cells_lo).reshape(-1, 2), np.asarray(cells_hi).reshape(-1, 2),
                       np.asarray(vals), check=False)
    exact = float(np.sum(f.cell_measures() * f.values))
    approx = float(np.sum(g.cell_measures() * g.values))
    return g, abs(approx - exact) / exact if exact > 0 else 0.0


def orthogonal_invariance_check(W, f: SimpleFunction, phi_y: YoungFunction,
                                phi_g: GrowthFunction, tol: float | None = None,
                                search=None, raster_h: float = 2.0**-10) -> OrthogonalReport:
    """``||f o W|| = ||f||`` for orthogonal ``W``.

    Signed permutations are handled exactly.  Other orthogonal maps (n = 2)
    use a rasterised ``f o W`` and ball-based norms; the raster is evaluated
    on the candidate balls of ``f`` transported by ``W^T``
    (``||f o W||_{B(a, r)} = ||f||_{B(W a, r)}``), so the ratio isolates the
    rasterisation error.
    """
    W = np.asarray(W, dtype=float)
    _check_orthogonal(W)
    psi = AffineMap.linear(W)
    if psi.is_box_preserving:
        tol = 1e-6 if tol is None else tol
        spec = _search_spec(search)
        nf = orlicz_morrey_norm(f, phi_y, phi_g, spec).value
        nfw = orlicz_morrey_norm(compose(f, psi), phi_y, phi_g, spec).value
        ratio = nfw / nf if nf > 0 else 1.0
        return OrthogonalReport("exact", nf, nfw, ratio, tol, abs(ratio - 1.0) <= tol)
    tol = 1e-2 if tol is None else tol
    spec = SearchSpec.from_spec({"region": "ball"} if search is None else search)
    if spec.region != "ball":
        spec = SearchSpec(**{**asdict(spec), "region": "ball"})
    est = orlicz_morrey_norm(f, phi_y, phi_g, spec)
    g, err = rasterize_composition(f, W, raster_h)
    if g.is_zero:
        return OrthogonalReport("raster", est.value, 0.0, 0.0, tol, est.value == 0.0, err)
    cands = _ball_candidates(f, spec, est)
    centers = cands[0] @ W  # rows: W^T a
    s = _Searcher(g, phi_y, phi_g, spec, luxemburg_batch, coords=[np.zeros(0)] * 2)
    chunk = max(1, 400_000 // max(g.num_cells, 1))
    for i in range(0, centers.shape[0], chunk):
        s.evaluate_pairs(centers[i:i + chunk], cands[1][i:i + chunk])
    nfw = s.best[0]
    ratio = nfw / est.value if est.value > 0 else 1.0
    return OrthogonalReport("raster", est.value, nfw, ratio, tol, abs(ratio - 1.0) <= tol, err)


def _ball_candidates(f: SimpleFunction, spec: SearchSpec, est: NormEstimate, keep: int = 64):
    """Candidate balls of ``f`` near the optimum: the anchored centers at the
    radii closest (in log scale) to the witness radius."""
    base, slope = _product_pattern(_axis_patterns(f.corner_coords(), "ball", f.n))
    dyadic = 2.0 ** np.arange(spec.j_min, spec.j_max + 1, dtype=float)
    radii = np.unique(np.concatenate([dyadic, _corner_radii(f.corner_coords(), spec.max_corner_radii),
                                      [est.witness["radius"]]]))
    r0 = est.witness["radius"]
    radii = radii[np.argsort(np.abs(np.log(radii / r0)), kind="stable")[:keep]]
    centers = (base[None] + slope[None] * radii[:, None, None]).reshape(-1, f.n)
    rr = np.repeat(radii, base.shape[0])
    centers = np.vstack([centers, np.asarray(est.witness["center"])[None]])
    rr = np.concatenate([rr, [r0]])
    return centers, rr


# ---------------------------------------------------------------------------
# diagonal maps

def cyclic_shift(n: int) -> np.ndarray:
    """``W e_l = e_{l-1}`` (indices mod n): ``(x_1..x_n) -> (x_2..x_n, x_1)``."""
    W = np.zeros((n, n))
    for l in range(n):
        W[(l - 1) % n, l] = 1.0
    return W


@dataclass
class DiagLowerReport:
    lower_bound: float
    empirical: float | None
    slack: float | None
    passed: bool | None
    chain: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def diag_chain_estimate(d: Sequence[float], phi_y: YoungFunction, phi_g: GrowthFunction,
                        family: Sequence[SimpleFunction], search=None) -> tuple[float, list[dict]]:
    """Lower estimate of ``||C_D||`` from the cyclic-conjugate chain.

    With ``T_k = W^{-k} D W^k`` the product ``T_1 ... T_n`` is ``(prod d) I``.
    Starting from ``g_0 = f`` and ``g_k = g_{k-1} o T_k``, each step ratio
    ``||g_k|| / ||g_{k-1}||`` equals ``||h o D|| / ||h||`` for
    ``h = g_{k-1} o W^{-k}``, a genuine test of ``C_D``; the steps multiply
    to ``||f((prod d) .)|| / ||f||``.
    """
    d = np.asarray(d, dtype=float)
    n = d.size
    W = cyclic_shift(n)
    D = AffineMap.diag(d)
    spec = _search_spec(search)
    best, chain = 0.0, []
    for fi, f in enumerate(family):
        if f.is_zero:
            continue
        g = f
        for k in range(1, n + 1):
            Wk = np.linalg.matrix_power(W, k)
            h = compose(g, AffineMap.linear(Wk.T))  # g o W^{-k}
            r = composition_ratio(h, D, phi_y, phi_g, spec)
            chain.append({"function": fi, "step": k, "ratio": r["ratio"]})
            best = max(best, r["ratio"])
            T = AffineMap.linear(Wk.T @ np.diag(d) @ Wk)
            g = compose(g, T)
    return best, chain


def diag_opnorm_lower(phi_g: GrowthFunction, d: Sequence[float],
                      empirical_opnorm: float | None = None,
                      cert: ClassCertificate | None = None, rtol: float = 1e-6) -> DiagLowerReport:
    """``phi(prod d)^{1/n}``; if an empirical estimate of ``||C_D||`` is given,
    also check ``phi(prod d)^{1/n} <= (C2 C3)^{1/n} * empirical``."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.size == 0 or np.any(~(d > 0)):
        raise UsageError("diagonal entries must be positive")
    n = d.size
    lower = float(phi_g(float(np.prod(d)))) ** (1.0 / n)
    if empirical_opnorm is None:
        return DiagLowerReport(lower, None, None, None)
    cert = _class_cert(phi_g, cert)
    if cert.submultiplicative_C2 is None or cert.reciprocal_C3 is None:
        raise PreconditionError("slack needs certified C2 and C3")
    slack = (cert.submultiplicative_C2 * cert.reciprocal_C3) ** (1.0 / n)
    ok = lower <= empirical_opnorm * slack * (1 + rtol)
    return DiagLowerReport(lower, float(empirical_opnorm), slack, bool(ok))


# ---------------------------------------------------------------------------
# necessity certificate

@dataclass
class DiffeoSample:
    x0: np.ndarray
    jacobian: np.ndarray


def samples_from_spec(spec: Any) -> list[DiffeoSample]:
    data = load_spec(spec)
    if isinstance(data, dict):
        data = data.get("samples", [])
    if not isinstance(data, list):
        raise UsageError("samples must be a list of {x0, jacobian}")
    out = []
    for item in data:
        try:
            out.append(DiffeoSample(np.asarray(item["x0"], float), np.asarray(item["jacobian"], float)))
        except (KeyError, TypeError):
            raise UsageError("each sample needs 'x0' and 'jacobian'") from None
    return out


@dataclass
class NecessityReport:
    band: float
    per_sample: list[dict]
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def default_band(cert: ClassCertificate) -> float:
    """``10 * C1 * C2 * C3`` from a certificate."""
    consts = [cert.almost_decreasing_C1, cert.submultiplicative_C2, cert.reciprocal_C3]
    if any(c is None for c in consts):
        raise PreconditionError("the default band needs phi certified in G2dec")
    return 10.0 * math.prod(consts)


def necessity_certificate(samples: Sequence[DiffeoSample], phi_g: GrowthFunction,
                          band: float | None = None,
                          cert: ClassCertificate | None = None) -> NecessityReport:
    """Per sample, ``v = phi(prod of singular values of Dpsi(x0))``; pass iff
    every ``v`` lies in ``[1/band, band]``.  Also reports ``phi(alpha_1)``."""
    if band is None:
        band = default_band(_class_cert(phi_g, cert))
    if not band >= 1:
        raise UsageError("band must be >= 1")
    rows, ok_all = [], True
    for i, s in enumerate(samples):
        try:
            res = svd_small(s.jacobian)
        except (RankDeficiencyError, UsageError) as exc:
            rows.append({"index": i, "x0": np.asarray(s.x0).tolist(), "error": str(exc)})
            ok_all = False
            continue
        prod = float(np.prod(res.sigma))
        v = float(phi_g(prod))
        small = float(phi_g(float(res.sigma[0])))
        ok = 1.0 / band <= v <= band
        ok_all &= ok
        rows.append({"index": i, "x0": np.asarray(s.x0).tolist(), "sigma": res.sigma.tolist(),
                     "product": prod, "v": v, "passed": ok,
                     "phi_alpha1": small, "alpha1_condition": small <= band})
    return NecessityReport(float(band), rows, ok_all)


# ---------------------------------------------------------------------------
# rescaling bound

@dataclass
class RescalingReport:
    ratios: list[dict]
    max_ratio: float
    reference: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def rescaling_bound_check(f: SimpleFunction, samples: Sequence[DiffeoSample], phi_y: YoungFunction,
                          phi_g: GrowthFunction, p: float, multiple: float = 1.0,
                          cert: ClassCertificate | None = None, search=None) -> RescalingReport:
    """``||f(Dpsi(x0) .)|| / ||f||`` for samples whose Jacobian is a
    generalized permutation matrix.

    Each ratio is compared with ``multiple`` times the sufficiency constant of
    the linear map ``Dpsi(x0)``; for Jacobians ``c I`` it is also checked
    against the dilation sandwich.
    """
    lp_constants(p, f.n, phi_y, phi_g)  # raises PreconditionError if uncertified
    cert = _class_cert(phi_g, cert)
    rows, ok = [], True
    max_ratio, reference = 0.0, 0.0
    for i, s in enumerate(samples):
        J = AffineMap.linear(s.jacobian)
        if not J.is_box_preserving:
            rows.append({"index": i, "skipped": "jacobian is not a generalized permutation"})
            continue
        d = composition_ratio(f, J, phi_y, phi_g, search)
        bound = sufficiency_constant(J, phi_g, cert)
        row = {"index": i, "ratio": d["ratio"], "reference": multiple * bound,
               "passed": d["ratio"] <= multiple * bound * (1 + 1e-9)}
        diag = np.diag(s.jacobian)
        if np.array_equal(s.jacobian, np.diag(diag)) and np.all(diag == diag[0]) and diag[0] > 0:
            dil = dilation_opnorm(phi_g, float(diag[0]))
            row["dilation_upper"] = dil.upper
            row["within_dilation"] = d["ratio"] <= dil.upper * (1 + 1e-9)
            row["passed"] = row["passed"] and row["within_dilation"]
        ok &= row["passed"]
        rows.append(row)
        if d["ratio"] >= max_ratio:
            max_ratio, reference = d["ratio"], multiple * bound
    return RescalingReport(rows, max_ratio, reference, ok)


# ---------------------------------------------------------------------------
# indicator transfer (weak spaces)

@dataclass
class TransferReport:
    ratios: list[float]
    max_ratio: float
    K: float
    sufficiency_bound: float
    within_sufficiency_bound: bool
    notes: list[str]

    def to_json(self) -> dict:
        return asdict(self)


def indicator_transfer_check(psi: AffineMap, regions: Sequence[BoxRegion], phi_y: YoungFunction,
                             phi_g: GrowthFunction, cert: ClassCertificate | None = None,
                             search=None) -> TransferReport:
    """``max_A ||chi_{psi^{-1}(A)}|| / ||chi_A||`` over box regions ``A``:
    a lower estimate of the weak-space operator norm of ``C_psi``."""
    if not psi.is_box_preserving:
        raise UnsupportedMapError("indicator transfer needs a box-preserving map")
    cert = _class_cert(phi_g, cert)
    bound = sufficiency_constant(psi, phi_g, cert)
    ratios, notes = [], []
    for i, A in enumerate(regions):
        chi = A.indicator()
        if chi.is_zero:
            notes.append(f"region {i} is empty; skipped")
            continue
        d = composition_ratio(chi, psi, phi_y, phi_g, search)
        if d["denominator"] == 0.0:
            notes.append(f"region {i} has zero norm; skipped")
            continue
        ratios.append(d["ratio"])
    mx = max(ratios, default=0.0)
    return TransferReport(ratios, mx, measure_dilation_constant(psi), bound,
                          mx <= bound * (1 + 1e-9), notes)


def random_box_preserving(rng: np.random.Generator, n: int, scale_range: tuple[float, float] = (0.25, 4.0),
                          shift: float = 1.0) -> AffineMap:
    """Seeded random ``x -> P D x + b`` with ``P`` a signed permutation and
    ``D`` diagonal with log-uniform entries."""
    lo, hi = math.log(scale_range[0]), math.log(scale_range[1])
    d = np.exp(rng.uniform(lo, hi, n)) * rng.choice([-1.0, 1.0], n)
    A = np.zeros((n, n))
    A[np.arange(n), rng.permutation(n)] = d
    return AffineMap(A, rng.uniform(-shift, shift, n))
