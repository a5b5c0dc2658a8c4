"""Growth functions ``phi: (0, inf) -> (0, inf)`` and empirical class certificates.

Membership in the classes (limits at 0 and infinity, almost decreasing,
submultiplicative, reciprocal bound) is certified on finite log-spaced grids.
Every constant reported is the smallest one valid on the grid; a constant is
accepted only if it stays below ``cap`` *and* does not keep growing when the
grid is widened (a function like ``r**0.01`` has a finite empirical constant
on any finite grid but is not almost decreasing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, UsageError
from .specs import load_spec
from .young import YoungFunction, inverse_values

DEFAULT_CAP = 1e6
DEFAULT_EPS = 1e-3
# log K on the full grid may exceed log K on the central half-grid by at most
# this factor before the constant is declared to be growing without bound.
GROWTH_FACTOR = 1.5
LOG_FLOOR = 1e-9


@dataclass(frozen=True)
class GrowthFunction:
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    kind: str
    params: dict = field(default_factory=dict, compare=False)
    name: str = ""

    def __call__(self, r):
        arr = np.asarray(r, dtype=float)
        if np.any(~(arr > 0)):
            raise DomainError("growth functions are defined on (0, inf)")
        with np.errstate(over="ignore", divide="ignore"):
            out = np.asarray(self.evaluator(arr), dtype=float)
        return float(out) if out.ndim == 0 else out

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.params}

    def __str__(self) -> str:
        return self.name or self.kind


def power_law(exponent: float, coeff: float = 1.0) -> GrowthFunction:
    """``phi(r) = coeff * r**exponent``."""
    e, c = float(exponent), float(coeff)
    if not c > 0:
        raise UsageError("growth coefficient must be positive")
    return GrowthFunction(lambda r: c * np.power(r, e), "power-exponent",
                          {"exponent": e, "coeff": c}, name=f"{c:g}*r^{e:g}")


def morrey(p: float, n: int, coeff: float = 1.0) -> GrowthFunction:
    """``phi(r) = r**(-n/p)`` (optionally scaled)."""
    g = power_law(-float(n) / float(p), coeff)
    params = {"p": float(p), "n": int(n)}
    if coeff != 1.0:
        params["coeff"] = float(coeff)
    return GrowthFunction(g.evaluator, "power", params, name=f"r^(-{n}/{p:g})")


def constant(value: float = 1.0) -> GrowthFunction:
    v = float(value)
    return GrowthFunction(lambda r: np.full_like(r, v, dtype=float), "constant",
                          {"value": v}, name=f"const {v:g}")


def oscillating(exponent: float = -1.0, base: float = 2.0, amplitude: float = 1.0) -> GrowthFunction:
    """``phi(r) = r**exponent * (base + amplitude * sin(log r))``."""
    e, b, a = float(exponent), float(base), float(amplitude)
    if not b > abs(a):
        raise UsageError("oscillating growth needs base > |amplitude| to stay positive")
    return GrowthFunction(lambda r: np.power(r, e) * (b + a * np.sin(np.log(r))),
                          "oscillating", {"exponent": e, "base": b, "amplitude": a},
                          name=f"r^{e:g}({b:g}+{a:g}sin log r)")


def log_corrected(exponent: float = -0.5) -> GrowthFunction:
    """``phi(r) = r**exponent * (1 + |log r|)``."""
    e = float(exponent)
    return GrowthFunction(lambda r: np.power(r, e) * (1.0 + np.abs(np.log(r))),
                          "log-power", {"exponent": e}, name=f"r^{e:g}(1+|log r|)")


def opaque(fn: Callable[[float], float], name: str = "opaque") -> GrowthFunction:
    vec = np.vectorize(lambda x: float(fn(float(x))), otypes=[float])
    return GrowthFunction(lambda r: vec(r), "opaque", {}, name=name)


def from_spec(spec: Any) -> GrowthFunction:
    d = load_spec(spec)
    if not isinstance(d, dict) or "kind" not in d:
        raise UsageError("growth function spec needs a 'kind' field")
    kind = d["kind"]
    try:
        if kind == "power":
            if "exponent" in d:
                return power_law(d["exponent"], d.get("coeff", 1.0))
            return morrey(d["p"], d["n"], d.get("coeff", 1.0))
        if kind == "power-exponent":
            return power_law(d["exponent"], d.get("coeff", 1.0))
        if kind == "constant":
            return constant(d.get("value", 1.0))
        if kind == "oscillating":
            return oscillating(d.get("exponent", -1.0), d.get("base", 2.0), d.get("amplitude", 1.0))
        if kind == "log-power":
            return log_corrected(d.get("exponent", -0.5))
    except KeyError as exc:
        raise UsageError(f"growth function spec of kind {kind!r} is missing field {exc}") from None
    raise UsageError(f"unknown growth function kind {kind!r}")


def log_grid(lo: float = 1e-6, hi: float = 1e6, points: int = 40) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def _validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size < 2:
        raise UsageError("grid needs at least two points")
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise UsageError("grid must be positive and strictly increasing")
    return g


def _central_half(g: np.ndarray) -> np.ndarray:
    lg = np.log(g)
    lo, hi = lg[0], lg[-1]
    quarter = 0.25 * (hi - lo)
    sel = (lg >= lo + quarter - 1e-12) & (lg <= hi - quarter + 1e-12)
    return sel


def _bounded(log_full: float, log_half: float, cap: float, growth: float) -> bool:
    """Accept a log-constant if it is below the cap and has saturated."""
    if not math.isfinite(log_full) or log_full > math.log(cap):
        return False
    if log_full <= LOG_FLOOR:
        return True
    return log_full <= growth * log_half + LOG_FLOOR


def _max_rise(logv: np.ndarray) -> float:
    """``max_{i <= j} logv[j] - logv[i]`` (0 for a nonincreasing sequence)."""
    running = np.minimum.accumulate(logv)
    return float(np.max(logv - running))


@dataclass
class ClassCertificate:
    in_G0: bool
    g0_evidence: dict
    almost_decreasing_C1: float | None
    submultiplicative_C2: float | None
    reciprocal_C3: float | None
    doubling_pair: tuple[float, float] | None
    grid_spec: dict
    empirical: dict
    phi_at_half: float

    @property
    def in_Gdec(self) -> bool:
        return self.almost_decreasing_C1 is not None

    @property
    def in_G1dec(self) -> bool:
        return self.in_Gdec and self.submultiplicative_C2 is not None

    @property
    def in_G2dec(self) -> bool:
        return self.in_G0 and self.in_G1dec and self.reciprocal_C3 is not None

    def to_json(self) -> dict:
        return {
            "in_G0": self.in_G0,
            "g0_evidence": self.g0_evidence,
            "C1": self.almost_decreasing_C1,
            "C2": self.submultiplicative_C2,
            "C3": self.reciprocal_C3,
            "in_Gdec": self.in_Gdec,
            "in_G1dec": self.in_G1dec,
            "in_G2dec": self.in_G2dec,
            "doubling_pair": None if self.doubling_pair is None else list(self.doubling_pair),
            "empirical": self.empirical,
            "grid": self.grid_spec,
        }


def _class_constants(phi: GrowthFunction, g: np.ndarray) -> tuple[float, float, float]:
    """Log of the empirical C1, C2, C3 on the grid ``g``."""
    logv = np.log(phi(g))
    c1 = _max_rise(logv)
    rs = np.multiply.outer(g, g)
    c2 = float(np.max(np.log(phi(rs)) - logv[:, None] - logv[None, :]))
    c3 = float(np.max(np.log(phi(1.0 / g)) + logv))
    return c1, c2, c3


def certify_class(phi: GrowthFunction, grid, eps: float = DEFAULT_EPS,
                  cap: float = DEFAULT_CAP, growth: float = GROWTH_FACTOR) -> ClassCertificate:
    """Empirical class certificate.

    C1 = max_{r<=s} phi(s)/phi(r), C2 = max_{r,s} phi(rs)/(phi(r)phi(s)),
    C3 = max_r phi(1/r)phi(r), each floored at 1.  ``in_G0`` checks
    ``phi(min grid) >= 1/eps`` and ``phi(max grid) <= eps``.
    """
    g = _validate_grid(grid)
    vals = phi(g)
    if np.any(~(vals > 0)) or np.any(~np.isfinite(vals)):
        raise DomainError("growth function must be finite and positive on the grid")
    full = _class_constants(phi, g)
    sel = _central_half(g)
    half = _class_constants(phi, g[sel]) if sel.sum() >= 2 else full

    consts = []
    for lf, lh in zip(full, half):
        lf_c, lh_c = max(lf, 0.0), max(lh, 0.0)
        consts.append(math.exp(lf_c) if _bounded(lf_c, lh_c, cap, growth) else None)
    c1, c2, c3 = consts

    head, tail = float(vals[0]), float(vals[-1])
    in_g0 = head >= 1.0 / eps and tail <= eps
    phi_half = float(phi(0.5))
    doubling = None
    if c1 is not None and c2 is not None:
        doubling = (1.0 / c1, c2 * phi_half)
    return ClassCertificate(
        in_G0=bool(in_g0),
        g0_evidence={"phi_at_min": head, "phi_at_max": tail, "eps": eps},
        almost_decreasing_C1=c1,
        submultiplicative_C2=c2,
        reciprocal_C3=c3,
        doubling_pair=doubling,
        grid_spec={"points": int(g.size), "min": float(g[0]), "max": float(g[-1]),
                   "spacing": "log", "cap": cap},
        empirical={"C1": math.exp(max(full[0], 0.0)), "C2": math.exp(max(full[1], 0.0)),
                   "C3": math.exp(max(full[2], 0.0))},
        phi_at_half=phi_half,
    )


def doubling_constants(cert: ClassCertificate) -> tuple[float, float]:
    """``(1/C1, C2 phi(1/2))``: ``lower*phi(2r) <= phi(r) <= upper*phi(2r)``."""
    if cert.almost_decreasing_C1 is None or cert.submultiplicative_C2 is None:
        raise PreconditionError("doubling constants need certified C1 and C2")
    return (1.0 / cert.almost_decreasing_C1, cert.submultiplicative_C2 * cert.phi_at_half)


# ---------------------------------------------------------------------------
# Psi_k profiles

@dataclass
class PsiProfile:
    k: int
    C_grid: list[float]
    direction: str
    almost_increasing: bool
    almost_decreasing: bool
    empirical_constant: float
    per_C: list[dict]
    diagnostic: str = ""

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "direction": self.direction,
            "almost_increasing": self.almost_increasing,
            "almost_decreasing": self.almost_decreasing,
            "empirical_constant": self.empirical_constant,
            "C_grid": self.C_grid,
            "per_C": self.per_C,
            "diagnostic": self.diagnostic,
        }


def psi_values(phi_g: GrowthFunction, phi_y: YoungFunction, k: int, C: float,
               r) -> np.ndarray:
    """``r -> 1 / (phi(r) * Phi^{-1}(C r^k))``."""
    r = np.asarray(r, dtype=float)
    inv = inverse_values(phi_y, C * np.power(r, k), rtol=1e-12, atol=1e-300)
    with np.errstate(divide="ignore"):
        return 1.0 / (phi_g(r) * inv)


def psi_monotonicity(phi_g: GrowthFunction, phi_y: YoungFunction, k: int,
                     C_grid: Sequence[float], r_grid, cap: float = DEFAULT_CAP,
                     growth: float = GROWTH_FACTOR) -> PsiProfile:
    """Classify ``r -> 1/(phi(r) Phi^{-1}(C r^k))`` on ``r_grid`` for each C.

    ``direction`` is ``"constant"`` when both almost-monotonicity tests pass,
    the single passing direction otherwise, or ``"neither"``.
    """
    if k < 0:
        raise UsageError("k must be >= 0")
    g = _validate_grid(r_grid)
    Cs = [float(c) for c in C_grid]
    if not Cs or any(not c > 0 for c in Cs):
        raise UsageError("C_grid must be a nonempty list of positive constants")
    sel = _central_half(g)
    per_C = []
    inc_all, dec_all = True, True
    k_inc_max, k_dec_max = 1.0, 1.0
    diagnostic = ""
    for C in Cs:
        vals = psi_values(phi_g, phi_y, k, C, g)
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            diagnostic = f"Psi undefined on grid for C={C:g} (inverse vanished or overflowed)"
            inc_all = dec_all = False
            per_C.append({"C": C, "defined": False})
            continue
        logv = np.log(vals)
        dec_full, inc_full = _max_rise(logv), _max_rise(-logv)
        dec_half, inc_half = _max_rise(logv[sel]), _max_rise(-logv[sel])
        dec_ok = _bounded(dec_full, dec_half, cap, growth)
        inc_ok = _bounded(inc_full, inc_half, cap, growth)
        inc_all &= inc_ok
        dec_all &= dec_ok
        k_dec_max = max(k_dec_max, math.exp(dec_full))
        k_inc_max = max(k_inc_max, math.exp(inc_full))
        per_C.append({"C": C, "defined": True, "decreasing_constant": math.exp(dec_full),
                      "increasing_constant": math.exp(inc_full),
                      "almost_decreasing": dec_ok, "almost_increasing": inc_ok})
    if inc_all and dec_all:
        direction, const = "constant", max(k_inc_max, k_dec_max)
    elif dec_all:
        direction, const = "almost-decreasing", k_dec_max
    elif inc_all:
        direction, const = "almost-increasing", k_inc_max
    else:
        direction, const = "neither", math.inf
    return PsiProfile(k, Cs, direction, inc_all, dec_all, const, per_C, diagnostic)


def morrey_window(n: int, p: float, q: float, k: int) -> bool:
    """``n q / k < p < n q / (k - 1)`` (upper bound infinite for k = 1)."""
    upper = math.inf if k == 1 else n * q / (k - 1)
    return n * q / k < p < upper


def window_from_profiles(phi_g: GrowthFunction, phi_y: YoungFunction, k: int,
                         C_grid: Sequence[float], r_grid) -> bool:
    """Psi_{k-1} strictly almost increasing and Psi_k strictly almost decreasing.

    "Strictly" excludes the constant profile, which is both.
    """
    lower = psi_monotonicity(phi_g, phi_y, k - 1, C_grid, r_grid)
    upper = psi_monotonicity(phi_g, phi_y, k, C_grid, r_grid)
    return lower.direction == "almost-increasing" and upper.direction == "almost-decreasing"
