"""Estimating quadruple constants.

Three ratio functionals are searched over parametrized configurations that
satisfy the quad2 condition:

* ``L``: quad_lhs / (qp * tau'(yz)) (``dtran``) or quad_lhs / (qp * yz^(a-1)) (``power``)
* ``K``: quad_lhs / tau(sqrt(qp * yz))
* ``J``: quad_lhs / (tau(qp) + tau(yz))

For tau(x) = x^a the ``power`` and ``dtran`` normalizations of ``L`` differ
by the factor a.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, PreconditionError, SearchError
from .geometry import (
    ParamFour,
    QuadConfig,
    WitnessFamily,
    feasible_params,
    four_point_array,
    witness_config,
)
from .inequalities import check_quad2, quad_lhs
from .transforms import Transform, deriv_at_zero, power

SKIP_FLOOR = 1e-12
QUAD2_SEARCH_TOL = 1e-12
# searches skip cells whose denominator is this small relative to the largest
# tau term in the numerator: rounding there would dominate the ratio
CONDITIONING_FLOOR = 1e-5


@dataclass(frozen=True)
class RatioSpec:
    kind: str
    normalization: str
    transform: Transform

    def __post_init__(self):
        if self.kind not in ("L", "K", "J"):
            raise DomainError(f"unknown ratio kind {self.kind!r}")
        if self.normalization not in ("dtran", "power"):
            raise DomainError(f"unknown normalization {self.normalization!r}")
        if self.kind in ("K", "J") and "zero_at_zero" not in self.transform.claims:
            raise DomainError("K and J ratios need a transform with tau(0) = 0")
        if self.normalization == "power" and "alpha" not in self.transform.params:
            raise DomainError("power normalization needs a power transform")

    @classmethod
    def for_power(cls, kind: str, alpha: float, normalization: str = "power") -> "RatioSpec":
        return cls(kind, normalization, power(alpha))

    @property
    def alpha(self) -> float:
        return float(self.transform.params["alpha"])

    def to_json(self) -> dict:
        return {"kind": self.kind, "normalization": self.normalization, "transform": self.transform.to_spec()}


def _denominator(spec: RatioSpec, qp: np.ndarray, yz: np.ndarray) -> np.ndarray:
    t = spec.transform
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if spec.kind == "L":
            if spec.normalization == "power":
                a = spec.alpha
                return qp * (np.ones_like(yz) if a == 1 else yz ** (a - 1))
            d = np.asarray(t.deriv(yz, 1), dtype=float)
            if (yz == 0).any():
                d = np.where(yz == 0, deriv_at_zero(t), d)
            return qp * d
        if spec.kind == "K":
            if spec.normalization == "power":
                return (qp * yz) ** (spec.alpha / 2)
            return t.eval(np.sqrt(qp * yz))
        if spec.normalization == "power":
            return qp**spec.alpha + yz**spec.alpha
        return t.eval(qp) + t.eval(yz)


def ratio_array(spec: RatioSpec, configs: np.ndarray) -> np.ndarray:
    """Ratios for rows of distances; NaN where the denominator is below the floor."""
    D = np.asarray(configs, dtype=float)
    den = _denominator(spec, D[..., 4], D[..., 5])
    num = quad_lhs(spec.transform, D)
    ok = np.abs(den) >= SKIP_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(ok, num / np.where(ok, den, 1.0), np.nan)


def ratio(spec: RatioSpec, cfg: QuadConfig) -> float | None:
    """The ratio on one configuration, or ``None`` when skipped."""
    if not check_quad2(cfg).holds:
        raise PreconditionError("configuration violates the quad2 condition")
    v = float(ratio_array(spec, cfg.as_array()[None, :])[0])
    return None if math.isnan(v) else v


def search_ratios(spec: RatioSpec, configs: np.ndarray) -> np.ndarray:
    """ratio_array with ill-conditioned cells also skipped."""
    D = np.asarray(configs, dtype=float)
    vals = ratio_array(spec, D)
    den = np.abs(_denominator(spec, D[..., 4], D[..., 5]))
    terms = np.max(np.abs(spec.transform.eval(D[..., :4])), axis=-1)
    return np.where(den >= CONDITIONING_FLOOR * terms, vals, np.nan)


def _admissible(params: np.ndarray, configs: np.ndarray, constraints: bool = True) -> np.ndarray:
    """Constraint-feasible rows satisfying quad2 in parameter form.

    In parameters quad2 reads b (ra - sc) <= b * yz, which avoids the
    cancellation of the squared-distance form.
    """
    a, b, c, r, s = (params[:, i] for i in range(5))
    yz = configs[:, 5]
    lhs = b * (r * a - s * c)
    rhs = b * yz
    tol = QUAD2_SEARCH_TOL * np.maximum(np.abs(lhs), np.abs(rhs))
    ok = lhs <= rhs + tol
    return feasible_params(params) & ok if constraints else ok


@dataclass(frozen=True)
class SearchReport:
    spec: RatioSpec
    best_ratio: float
    best_params: ParamFour
    best_config: QuadConfig
    resolution: int
    scale: float
    grid_points_evaluated: int
    feasible_points: int
    skipped_points: int
    refinement_steps: int
    seed: int
    top_params: tuple[tuple[float, ...], ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "kind": self.spec.kind,
            "normalization": self.spec.normalization,
            "transform": self.spec.transform.to_spec(),
            "best_ratio": self.best_ratio,
            "best_params": self.best_params.as_dict(),
            "best_config": self.best_config.as_dict(),
            "grid": {
                "resolution": self.resolution,
                "scale": self.scale,
                "points_evaluated": self.grid_points_evaluated,
                "feasible_points": self.feasible_points,
                "skipped_points": self.skipped_points,
            },
            "refinement_steps": self.refinement_steps,
            "seed": self.seed,
        }


def _axes(resolution: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    lengths = scale * np.arange(1, resolution + 1) / resolution
    cosines = np.linspace(-1.0, 1.0, resolution)
    return lengths, cosines


def _rank(ratios: np.ndarray, params: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k best rows: ratio descending, then params ascending."""
    keys = tuple(params[:, j] for j in range(5, -1, -1)) + (-ratios,)
    return np.lexsort(keys)[:k]


def _partition(spec: RatioSpec, lengths, cosines, ia: int, ib: int, k: int):
    c, r, s, t = np.meshgrid(lengths, cosines, cosines, cosines, indexing="ij")
    n = c.size
    P = np.column_stack(
        [np.full(n, lengths[ia]), np.full(n, lengths[ib]), c.ravel(), r.ravel(), s.ravel(), t.ravel()]
    )
    ok = feasible_params(P)
    P = P[ok]
    D = four_point_array(P)
    adm = _admissible(P, D, constraints=False)
    P, D = P[adm], D[adm]
    vals = search_ratios(spec, D)
    fin = np.isfinite(vals)
    skipped = int((~fin).sum())
    P, vals = P[fin], vals[fin]
    idx = _rank(vals, P, k)
    return vals[idx], P[idx], int(adm.sum()), skipped


def grid_search(
    spec: RatioSpec,
    resolution: int = 17,
    scale: float = 4.0,
    seed: int = 42,
    threads: int = 1,
    keep: int = 10,
) -> SearchReport:
    """Exhaustive search over a product grid in (a, b, c, r, s, t).

    Work is split into fixed (a, b) partitions so that the result, including
    tie-breaking by the lexicographically smallest parameter tuple, does not
    depend on ``threads``.
    """
    if resolution < 2:
        raise DomainError("resolution must be at least 2")
    if not scale > 0:
        raise DomainError("scale must be positive")
    lengths, cosines = _axes(resolution, scale)
    jobs = [(ia, ib) for ia in range(resolution) for ib in range(resolution)]

    def run(job):
        return _partition(spec, lengths, cosines, job[0], job[1], keep)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    vals = np.concatenate([p[0] for p in parts])
    P = np.concatenate([p[1] for p in parts]).reshape(-1, 6)
    feasible = sum(p[2] for p in parts)
    skipped = sum(p[3] for p in parts)
    if vals.size == 0:
        raise SearchError("no feasible grid cell produced a ratio")
    idx = _rank(vals, P, keep)
    best = P[idx[0]]
    return SearchReport(
        spec=spec,
        best_ratio=float(vals[idx[0]]),
        best_params=ParamFour(*map(float, best)),
        best_config=QuadConfig.from_sequence(four_point_array(best)),
        resolution=resolution,
        scale=float(scale),
        grid_points_evaluated=resolution**6,
        feasible_points=feasible,
        skipped_points=skipped,
        refinement_steps=0,
        seed=seed,
        top_params=tuple(tuple(map(float, P[i])) for i in idx),
    )


def _objective(spec: RatioSpec, lo: np.ndarray, hi: np.ndarray):
    def f(x):
        x = np.clip(x, lo, hi)[None, :]
        D = four_point_array(x)
        if not _admissible(x, D)[0]:
            return math.inf
        v = search_ratios(spec, D)[0]
        return math.inf if math.isnan(v) else -float(v)

    return f


def refine_local(spec: RatioSpec, report: SearchReport, iterations: int = 200, restarts: int = 10) -> SearchReport:
    """Nelder-Mead from the best grid cells, projected onto the parameter box.

    Infeasible points score as -inf.  The returned report is never worse
    than the input.
    """
    if iterations <= 0 or not report.top_params:
        return report
    step = report.scale / report.resolution
    lo = np.array([0.0, 0.0, 0.0, -1.0, -1.0, -1.0])
    hi = np.array([report.scale] * 3 + [1.0] * 3)
    f = _objective(spec, lo, hi)
    best_val, best_x = report.best_ratio, np.array(report.best_params.as_tuple())
    steps = 0
    for start in report.top_params[:restarts]:
        x0 = np.array(start)
        widths = np.array([step] * 3 + [2.0 / (report.resolution - 1)] * 3) / 2
        simplex = [x0]
        for i in range(6):
            e = x0.copy()
            e[i] += widths[i] if x0[i] + widths[i] <= hi[i] else -widths[i]
            simplex.append(e)
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"maxiter": iterations, "initial_simplex": np.array(simplex), "xatol": 1e-13, "fatol": 1e-15},
        )
        steps += int(res.nit)
        if math.isfinite(res.fun) and -res.fun > best_val:
            best_val, best_x = -float(res.fun), np.clip(res.x, lo, hi)
    return replace(
        report,
        best_ratio=float(best_val),
        best_params=ParamFour(*map(float, best_x)),
        best_config=QuadConfig.from_sequence(four_point_array(best_x)),
        refinement_steps=report.refinement_steps + steps,
    )


# --- analytic witnesses ----------------------------------------------------


@dataclass(frozen=True)
class LowerBounds:
    """Closed-form lower bounds (i)-(iv) with their witness configurations.

    ``values`` entries are ``None`` where the denominator vanishes.
    """

    values: tuple[float | None, float | None, float | None, float | None]
    configs: dict[str, QuadConfig]
    witness_ratios: dict[str, float | None]

    def to_json(self) -> dict:
        return {
            "values": list(self.values),
            "configs": {k: v.as_dict() for k, v in self.configs.items()},
            "witness_ratios": self.witness_ratios,
        }


def _safe_div(num: float, den: float) -> float | None:
    return None if abs(den) < SKIP_FLOOR else num / den


def lower_bound_witnesses(t: Transform, u: float, v: float, eps: float) -> LowerBounds:
    """Lower bounds on the optimal constant from collinear constructions.

    (i)   2 (tau(u) - tau(0)) / (u tau'(u))        from z = q = 0, p = u/2, y = u
    (ii)  (tau(2u) - tau(0)) / (2u tau'(u))        from z = q = 0, p = 2u, y = u
    (iii) (tau'(u) - tau'(v)) / tau'(|u - v|)      limit of q = 0, p = eps, y = u, z = v
    (iv)  (tau'(u) + tau'(v)) / tau'(u + v)        limit of q = 0, p = eps, y = u, z = -v
    """
    if not (u > 0 and v > 0 and eps > 0):
        raise DomainError("u, v and eps must be positive")
    d = lambda x: float(t.deriv(x, 1)) if x > 0 else deriv_at_zero(t)  # noqa: E731
    tau0 = float(t.eval(0.0))
    vals = (
        _safe_div(2 * (t.eval(u) - tau0), u * d(u)),
        _safe_div(t.eval(2 * u) - tau0, 2 * u * d(u)),
        _safe_div(d(u) - d(v), d(abs(u - v))),
        _safe_div(d(u) + d(v), d(u + v)),
    )
    configs = {
        "i": witness_config(WitnessFamily("triple_line", {"u": u})),
        "ii": witness_config(WitnessFamily("triple_line", {"u": u, "p": 2 * u})),
    }
    if eps < min(u, v):
        configs["iii"] = witness_config(WitnessFamily("collinear_gap", {"u": u, "v": v, "eps": eps}))
        configs["iv"] = witness_config(WitnessFamily("collinear_sum", {"u": u, "v": v, "eps": eps}))
    spec = RatioSpec("L", "dtran", t)
    ratios = {}
    for k, cfg in configs.items():
        r = float(ratio_array(spec, cfg.as_array()[None, :])[0])
        ratios[k] = None if math.isnan(r) else r
    return LowerBounds(vals, configs, ratios)


@dataclass(frozen=True)
class UnitBound:
    bound: float
    eps: tuple[float, ...]
    quotients: tuple[float, ...]

    @property
    def final_gap(self) -> float:
        return abs(self.quotients[-1] - 1.0)


def unit_lower_bound(t: Transform, u: float, eps: Sequence[float] | None = None) -> UnitBound:
    """The universal bound 1, with (tau(u) - tau(u-e)) / (e tau'(u)) along shrinking e.

    The quotient is the constant ratio on z = q = 0, p = e, y = u.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    du = float(t.deriv(u, 1))
    if du <= 0:
        raise PreconditionError("tau'(u) must be positive")
    if eps is None:
        eps = [10.0**-k for k in range(1, 7)]
    eps = tuple(float(e) for e in eps if 0 < e < u)
    if not eps:
        raise DomainError("need at least one eps in (0, u)")
    q = tuple((float(t.eval(u)) - float(t.eval(u - e))) / (e * du) for e in eps)
    return UnitBound(1.0, eps, q)


def divergence_probe(alpha_or_t: float | Transform, eps: float) -> tuple[float, float]:
    """(K, J) ratios on the thin rectangle with sides 1 and eps.

    Numerator 2 (tau(sqrt(1 + eps^2)) - tau(1)); denominators tau(eps) for K
    and 2 tau(eps) for J.  For powers the numerator uses expm1/log1p.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    if isinstance(alpha_or_t, Transform):
        t = alpha_or_t
        num = 2 * (float(t.eval(math.sqrt(1 + eps * eps))) - float(t.eval(1.0)))
        den = float(t.eval(eps))
    else:
        a = float(alpha_or_t)
        num = 2 * math.expm1(0.5 * a * math.log1p(eps * eps))
        den = eps**a
    return num / den, num / (2 * den)
