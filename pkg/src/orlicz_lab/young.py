"""Young functions, their generalized (right-continuous) inverses, and grid
certificates for the Young-function axioms.

A Young function is a convex ``Phi: [0, inf) -> [0, inf]`` with ``Phi(0) = 0``
that tends to infinity.  All evaluators here are vectorised over numpy arrays.
The generalized inverse is

    Phi^{-1}(u) = inf{t >= 0 : Phi(t) > u},    Phi^{-1}(inf) = inf,

computed by exponential bracketing followed by bisection on the monotone
predicate ``Phi(t) > u``.  Using the strict predicate means that on a flat
piece of ``Phi`` the inverse returns the right end of the flat piece.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import DomainError, UsageError
from .specs import load_spec

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
# Bracket growth stops here; anything larger is reported as +inf.
OVERFLOW_GUARD = 2.0**1000
UNDERFLOW_GUARD = 2.0**-1000


@dataclass(frozen=True)
class YoungFunction:
    """A Young function given by a vectorised evaluator.

    ``kind`` is one of ``"power"``, ``"piecewise"``, ``"appendix-exp"`` or
    ``"opaque"``; ``params`` holds whatever is needed to rebuild it from JSON.
    """

    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    kind: str
    params: dict = field(default_factory=dict, compare=False)
    domain_cap: float | None = None
    name: str = ""

    def __call__(self, t):
        return eval_young(self, t)

    def to_json(self) -> dict:
        out = {"kind": self.kind, **self.params}
        if self.domain_cap is not None:
            out["domain_cap"] = self.domain_cap
        return out

    def __str__(self) -> str:
        return self.name or self.kind


@dataclass(frozen=True)
class InverseResult:
    value: float
    lo: float
    hi: float
    overflow: bool = False

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.lo, self.hi)


def eval_young(phi: YoungFunction, t):
    """Evaluate ``Phi(t)``; scalars in, float out, arrays in, arrays out."""
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("Young functions are defined on [0, inf)")
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.asarray(phi.evaluator(arr), dtype=float)
    out = np.where(arr == 0.0, 0.0, out)
    if phi.domain_cap is not None:
        out = np.where(arr > phi.domain_cap, np.inf, out)
    out = np.where(np.isinf(arr), np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# constructors

def power(q: float) -> YoungFunction:
    """``Phi(t) = t**q`` with ``q >= 1``."""
    q = float(q)
    if not q >= 1.0:
        raise UsageError(f"power Young function needs q >= 1, got {q}")
    return YoungFunction(lambda t: np.power(t, q), "power", {"q": q}, name=f"t^{q:g}")


def piecewise(pieces: Sequence[dict], domain_cap: float | None = None) -> YoungFunction:
    """Piecewise polynomial Young function.

    Each piece is ``{"from": t0, "coeffs": [c0, c1, ...]}`` and means
    ``c0 + c1 (t - t0) + c2 (t - t0)**2 + ...`` on ``[t0, next t0)``.
    The first piece must start at 0.
    """
    if not pieces:
        raise UsageError("piecewise Young function needs at least one piece")
    starts = [float(p["from"]) for p in pieces]
    coeffs = [tuple(float(c) for c in p["coeffs"]) for p in pieces]
    if starts[0] != 0.0 or any(b <= a for a, b in zip(starts, starts[1:])):
        raise UsageError("piece starts must begin at 0 and strictly increase")
    brk = np.asarray(starts)

    def evaluate(t):
        idx = np.searchsorted(brk, t, side="right") - 1
        idx = np.clip(idx, 0, len(brk) - 1)
        out = np.zeros_like(t, dtype=float)
        for i, cs in enumerate(coeffs):
            sel = idx == i
            if not np.any(sel):
                continue
            x = t[sel] - brk[i]
            out[sel] = np.polynomial.polynomial.polyval(x, cs)
        return out

    params = {"pieces": [{"from": s, "coeffs": list(c)} for s, c in zip(starts, coeffs)]}
    return YoungFunction(evaluate, "piecewise", params, domain_cap, name="piecewise")


def flat_then_linear(knee: float = 1.0) -> YoungFunction:
    """``Phi(t) = max(t - knee, 0)``: the standard flat-segment example."""
    return piecewise([{"from": 0.0, "coeffs": [0.0]}, {"from": knee, "coeffs": [0.0, 1.0]}])


def appendix_exp(n: int) -> YoungFunction:
    """The exponential-type example ``(phi, Phi)`` pair's Young function.

    ``Phi(t) = 2^{2n} exp(-1/t)`` on ``(0, 1/2]`` and
    ``Phi(t) = 2^{4n} e^{-2} t^{2n}`` on ``[1/2, inf)``.

    The second coefficient is the one that makes ``Phi`` continuous at 1/2;
    the exponential branch is convex exactly up to ``t = 1/2`` and the power
    branch has the larger slope there, so ``Phi`` is convex.
    """
    n = int(n)
    if n < 1:
        raise UsageError("appendix-exp needs dimension n >= 1")
    lead = 2.0 ** (2 * n)
    tail = 2.0 ** (4 * n) * math.exp(-2.0)

    def evaluate(t):
        with np.errstate(divide="ignore", over="ignore"):
            small = lead * np.exp(-1.0 / np.where(t > 0, t, 1.0))
            big = tail * np.power(t, 2 * n)
        return np.where(t <= 0.5, small, big)

    return YoungFunction(evaluate, "appendix-exp", {"n": n}, name=f"appendix-exp(n={n})")


def opaque(fn: Callable[[float], float], name: str = "opaque",
           domain_cap: float | None = None) -> YoungFunction:
    """Wrap an arbitrary callable; it is applied elementwise."""
    vec = np.vectorize(lambda x: float(fn(float(x))), otypes=[float])
    return YoungFunction(lambda t: vec(t), "opaque", {}, domain_cap, name=name)


def from_spec(spec: Any) -> YoungFunction:
    """Build a Young function from JSON / shorthand configuration."""
    d = load_spec(spec)
    if not isinstance(d, dict) or "kind" not in d:
        raise UsageError("Young function spec needs a 'kind' field")
    kind = d["kind"]
    cap = d.get("domain_cap")
    if kind == "power":
        if "q" not in d:
            raise UsageError("power Young function spec needs field 'q'")
        phi = power(d["q"])
        return phi if cap is None else YoungFunction(phi.evaluator, "power", phi.params,
                                                     float(cap), phi.name)
    if kind == "piecewise":
        if "pieces" not in d:
            raise UsageError("piecewise Young function spec needs field 'pieces'")
        return piecewise(d["pieces"], None if cap is None else float(cap))
    if kind in ("appendix-exp", "preset"):
        name = d.get("name", "appendix-exp")
        if name != "appendix-exp":
            raise UsageError(f"unknown Young preset {name!r}")
        return appendix_exp(d.get("n", 1))
    if kind == "flat":
        return flat_then_linear(d.get("knee", 1.0))
    raise UsageError(f"unknown Young function kind {kind!r}")


# ---------------------------------------------------------------------------
# generalized inverse

def inverse_brackets(phi: YoungFunction, u, rtol: float = DEFAULT_RTOL,
                     atol: float = DEFAULT_ATOL):
    """Vectorised generalized inverse.

    Returns ``(lo, hi, overflow)`` arrays with ``Phi(lo) <= u < Phi(hi)`` and
    ``hi - lo <= max(rtol * hi, atol)``; for ``u = inf`` or overflow both ends
    are ``inf``.  When the infimum is 0 the bracket is ``[0, hi]``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(np.isnan(u)) or np.any(u < 0):
        raise DomainError("generalized inverse needs u in [0, inf]")
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    overflow = np.zeros(u.shape, dtype=bool)
    finite = np.isfinite(u)

    # grow: find hi with Phi(hi) > u
    grow = finite & ~(eval_young(phi, hi) > u)
    while np.any(grow):
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, hi * 2.0, hi)
        over = grow & (hi > OVERFLOW_GUARD)
        overflow |= over
        grow &= ~over
        grow &= ~(eval_young(phi, hi) > u)

    # shrink: for the rest, halve hi while Phi(hi/2) > u
    shrink = finite & ~overflow & (lo == 0.0)
    cand = hi / 2.0
    shrink &= eval_young(phi, cand) > u
    while np.any(shrink):
        hi = np.where(shrink, cand, hi)
        cand = hi / 2.0
        tiny = shrink & (cand < UNDERFLOW_GUARD)
        shrink &= ~tiny
        shrink &= eval_young(phi, cand) > u
    lo = np.where(finite & ~overflow & (lo == 0.0) & (hi >= 2 * UNDERFLOW_GUARD), hi / 2.0, lo)
    lo = np.where(hi < 2 * UNDERFLOW_GUARD, 0.0, lo)

    active = finite & ~overflow
    for _ in range(4000):
        width = hi - lo
        todo = active & (width > np.maximum(rtol * hi, atol))
        if not np.any(todo):
            break
        mid = 0.5 * (lo + hi)
        gt = eval_young(phi, mid) > u
        hi = np.where(todo & gt, mid, hi)
        lo = np.where(todo & ~gt, mid, lo)

    lo = np.where(active, lo, np.inf)
    hi = np.where(active, hi, np.inf)
    return lo, hi, overflow


def inverse_values(phi: YoungFunction, u, rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL) -> np.ndarray:
    """Midpoints of :func:`inverse_brackets` (``inf`` stays ``inf``)."""
    lo, hi, _ = inverse_brackets(phi, u, rtol, atol)
    with np.errstate(invalid="ignore"):
        return np.where(np.isinf(hi), np.inf, 0.5 * (lo + hi))


def inverse_at_one_lower(phi: YoungFunction) -> float:
    """Lower bracket end of ``Phi^{-1}(1)``, cached on the instance."""
    cached = phi.__dict__.get("_inv_one_lo")
    if cached is None:
        cached = float(inverse_brackets(phi, [1.0])[0][0])
        object.__setattr__(phi, "_inv_one_lo", cached)
    return cached


def generalized_inverse(phi: YoungFunction, u: float, tol: float | None = None) -> InverseResult:
    """``inf{t >= 0 : Phi(t) > u}`` bracketed to ``tol`` (relative, with an
    absolute floor of 1e-12)."""
    rtol = DEFAULT_RTOL if tol is None else float(tol)
    if not rtol > 0:
        raise DomainError("tolerance must be positive")
    lo, hi, over = inverse_brackets(phi, [u], rtol, min(DEFAULT_ATOL, rtol))
    lo, hi = float(lo[0]), float(hi[0])
    value = math.inf if math.isinf(hi) else 0.5 * (lo + hi)
    return InverseResult(value, lo, hi, bool(over[0]))


# ---------------------------------------------------------------------------
# checks

@dataclass
class SandwichReport:
    n_checked: int
    violations: list[dict]
    rtol: float

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_inverse_sandwich(phi: YoungFunction, u_grid, rtol: float = 1e-9,
                            atol: float = 1e-12) -> SandwichReport:
    """Check ``Phi(Phi^{-1}(u)) <= u <= Phi^{-1}(Phi(u))`` on a grid.

    The left inequality is checked at the upper bracket end of ``Phi^{-1}(u)``
    and the right one at the lower bracket end of ``Phi^{-1}(Phi(u))``, so the
    bisection error can only make the check harder.
    """
    u = np.asarray(u_grid, dtype=float).ravel()
    if np.any(~np.isfinite(u)) or np.any(u < 0):
        raise DomainError("sandwich grid must be finite and nonnegative")
    _, hi1, _ = inverse_brackets(phi, u, rtol=1e-14, atol=1e-300)
    left = eval_young(phi, np.where(np.isfinite(hi1), hi1, 0.0))
    left = np.atleast_1d(left)
    left_ok = np.isfinite(hi1) & (left <= u * (1 + rtol) + atol)

    phi_u = np.atleast_1d(eval_young(phi, u))
    lo2, _, _ = inverse_brackets(phi, phi_u, rtol=1e-14, atol=1e-300)
    right_ok = u <= lo2 * (1 + rtol) + atol

    violations = []
    for i in np.flatnonzero(~(left_ok & right_ok)):
        violations.append({
            "u": float(u[i]),
            "phi_of_inverse": float(left[i]),
            "inverse_of_phi": float(lo2[i]),
            "left_ok": bool(left_ok[i]),
            "right_ok": bool(right_ok[i]),
        })
    return SandwichReport(int(u.size), violations, rtol)


@dataclass
class YoungCertificate:
    zero_at_origin: bool
    monotone: bool
    convex: bool
    unbounded: bool
    worst_convexity_defect: float
    worst_monotonicity_drop: float
    grid_spec: dict

    @property
    def passed(self) -> bool:
        return self.zero_at_origin and self.monotone and self.convex and self.unbounded

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "zero_at_origin": self.zero_at_origin,
            "monotone": self.monotone,
            "convex": self.convex,
            "unbounded": self.unbounded,
            "worst_convexity_defect": self.worst_convexity_defect,
            "worst_monotonicity_drop": self.worst_monotonicity_drop,
            "grid": self.grid_spec,
        }


def certify_young(phi: YoungFunction, grid, abs_tol: float = 1e-12,
                  rel_tol: float = 1e-12) -> YoungCertificate:
    """Grid certificate for the four Young-function axioms.

    Convexity is checked by the midpoint test over all grid pairs; the
    tolerance is ``abs_tol + rel_tol * |average|``.
    """
    t = np.asarray(grid, dtype=float).ravel()
    if t.size == 0:
        raise UsageError("certification grid is empty")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise UsageError("certification grid must start at 0 and strictly increase")
    vals = np.atleast_1d(eval_young(phi, t))
    zero_ok = vals[0] == 0.0
    drops = vals[:-1] - vals[1:]
    worst_drop = float(max(drops.max(initial=0.0), 0.0))
    mono_ok = bool(np.all(drops <= abs_tol + rel_tol * np.abs(vals[1:])))

    worst = -math.inf
    convex_ok = True
    for start in range(0, t.size, 512):
        i = np.arange(start, min(start + 512, t.size))[:, None]
        j = np.arange(t.size)[None, :]
        mask = j > i
        ii, jj = np.broadcast_arrays(i, j)
        ii, jj = ii[mask], jj[mask]
        if ii.size == 0:
            continue
        mid = eval_young(phi, 0.5 * (t[ii] + t[jj]))
        avg = 0.5 * (vals[ii] + vals[jj])
        with np.errstate(invalid="ignore"):
            defect = np.where(np.isinf(avg), -np.inf, mid - avg)
        worst = max(worst, float(np.max(defect)))
        tolv = abs_tol + rel_tol * np.abs(np.where(np.isinf(avg), 0.0, avg))
        if np.any(defect > tolv):
            convex_ok = False
    unbounded_ok = bool(vals[-1] > 1.0)
    return YoungCertificate(
        zero_at_origin=bool(zero_ok),
        monotone=mono_ok,
        convex=convex_ok,
        unbounded=unbounded_ok,
        worst_convexity_defect=max(worst, 0.0) if t.size > 1 else 0.0,
        worst_monotonicity_drop=worst_drop,
        grid_spec={"points": int(t.size), "min": float(t[0]), "max": float(t[-1])},
    )
