"""Two worked examples: an embedding of a Morrey space into the
Orlicz-Morrey space of the exponential-type Young function, and the
``L^infinity`` sandwich for bounded growth functions.

Embedding.  Let ``Phi`` be the ``appendix-exp`` preset in dimension ``n``,
``phi(r) = r^{-1/4}`` and ``Psi(t) = 2^{2n} max(t^2, t^{2n})``.  Then
``Phi <= M Psi`` with ``M = 2^{2n} e^{-2}``, ``Psi(et) <= 2^{-2n} Psi(e) Psi(t)``,
and for ``0 <= f < 2^{-n}`` every ball or cube ``B`` of scale ``s`` satisfies

    ||f||_{Phi,B} / phi(s) <= 2 max(M^{1/(2n)}, M^{1/2}) * (s^{n/4} ||f||_{2,B})^{1/n},

where ``||f||_{2,B}`` is the ``L^2``-average gauge, i.e. the ``t^2`` Luxemburg
norm.  Taking suprema gives ``||f||_{M_Phi^phi} <= C ||f||_{M_2^4}^{1/n}``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .domain import SimpleFunction
from .errors import PreconditionError, UsageError
from .growth import GrowthFunction, _bounded, _central_half, log_grid, morrey, power_law
from .norms import SearchSpec, orlicz_morrey_norm
from .young import YoungFunction, appendix_exp, inverse_values, power


def majorant_constant(n: int) -> float:
    """Smallest ``M`` with ``Phi <= M * 2^{2n} max(t^2, t^{2n})``."""
    return 2.0 ** (2 * n) * math.exp(-2.0)


def embedding_constant(n: int) -> float:
    M = majorant_constant(n)
    return 2.0 * max(M ** (1.0 / (2 * n)), M ** 0.5)


@dataclass
class EmbeddingReport:
    n: int
    orlicz_morrey_norm: float
    morrey_norm: float
    constant: float
    bound: float
    ratio: float
    passed: bool
    note: str = ("the exponential-type Young function uses the branch "
                 "2^{4n} e^{-2} t^{2n} for t >= 1/2, which makes it continuous")

    def to_json(self) -> dict:
        return asdict(self)


def appendix_a_embedding(f: SimpleFunction, n: int | None = None, search=None,
                         slack: float = 1e-9) -> EmbeddingReport:
    """Check ``||f||_{M_Phi^phi} <= C ||f||_{M_2^4}^{1/n}`` for ``0 <= f < 2^{-n}``."""
    n = f.n if n is None else int(n)
    if n != f.n:
        raise UsageError("dimension does not match the function")
    if not f.sup_norm() < 2.0 ** (-n):
        raise PreconditionError(f"the embedding estimate needs sup |f| < 2^-{n}")
    C = embedding_constant(n)
    if f.is_zero:
        return EmbeddingReport(n, 0.0, 0.0, C, 0.0, 0.0, True)
    spec = SearchSpec.from_spec(search)
    lhs = orlicz_morrey_norm(f, appendix_exp(n), power_law(-0.25), spec)
    extra = [(lhs.witness["center"], lhs.witness["radius"])]
    rhs = orlicz_morrey_norm(f, power(2), morrey(4, n), spec, extra_candidates=extra)
    bound = C * rhs.value ** (1.0 / n)
    ratio = lhs.value / bound if bound > 0 else math.inf
    return EmbeddingReport(n, lhs.value, rhs.value, C, bound, ratio, lhs.value <= bound * (1 + slack))


@dataclass
class SandwichReport:
    lhs: float
    mid: float
    rhs: float
    slack: dict
    inf_phi: float
    sup_phi: float
    inverse_at_one: float
    norm: float
    passed: bool

    def to_json(self) -> dict:
        return asdict(self)


def appendix_b_sandwich(f: SimpleFunction, phi_y: YoungFunction, phi_g: GrowthFunction,
                        search=None, r_grid=None, cap: float = 1e6,
                        rtol: float = 1e-9) -> SandwichReport:
    """``Phi^{-1}(1) inf phi ||f|| <= ||f||_inf <= Phi^{-1}(1) sup phi ||f||``.

    ``inf``/``sup`` of ``phi`` are taken over a log grid together with every
    scale the norm search can use (the dyadic scales and the witness scale),
    so the inequalities hold candidate by candidate.
    """
    spec = SearchSpec.from_spec(search)
    r = log_grid(1e-6, 1e6, 241) if r_grid is None else np.asarray(r_grid, dtype=float)
    vals = np.log(phi_g(r))
    spread = float(vals.max() - vals.min())
    sel = _central_half(r)
    half = float(vals[sel].max() - vals[sel].min()) if sel.sum() >= 2 else spread
    if not _bounded(spread, half, cap, 1.5):
        raise PreconditionError("phi is not certified bounded above and below on the grid")
    mid = f.sup_norm()
    inv1 = float(inverse_values(phi_y, [1.0], rtol=1e-14, atol=1e-300)[0])
    if f.is_zero:
        return SandwichReport(0.0, 0.0, 0.0, {"left": 0.0, "right": 0.0}, float(np.exp(vals.min())),
                              float(np.exp(vals.max())), inv1, 0.0, True)
    est = orlicz_morrey_norm(f, phi_y, phi_g, spec)
    factor = 2.0 if spec.region == "cube" else 1.0
    dyadic = factor * 2.0 ** np.arange(spec.j_min, spec.j_max + 1, dtype=float)
    scales = np.concatenate([r, dyadic, [factor * est.witness["radius"]]])
    phis = phi_g(scales)
    lo_phi, hi_phi = float(np.min(phis)), float(np.max(phis))
    lhs = inv1 * lo_phi * est.value
    rhs = inv1 * hi_phi * est.value
    ok = lhs <= mid * (1 + rtol) and mid <= rhs * (1 + rtol)
    slack = {"left": (mid - lhs) / mid, "right": (rhs - mid) / mid}
    return SandwichReport(lhs, mid, rhs, slack, lo_phi, hi_phi, inv1, est.value, ok)
