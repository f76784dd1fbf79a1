"""tau-Frechet means of Euclidean samples and an empirical convergence-rate experiment."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ExperimentError, PreconditionError
from .transforms import Transform, deriv_at_zero

DIST_FLOOR = 1e-12
SNAP_CANDIDATES = 32
STALL_PROBE = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 10_000
    step_tol: float = 1e-12
    armijo: float = 1e-4


@dataclass(frozen=True)
class FrechetProblem:
    samples: np.ndarray
    transform: Transform
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        Y = np.asarray(self.samples, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
            raise DomainError("samples must be a nonempty (n, d) array")
        if not np.isfinite(Y).all():
            raise DomainError("samples must be finite")
        if not {"zero_at_zero", "nondecreasing"} <= self.transform.claims:
            raise PreconditionError(f"{self.transform.name} must be nondecreasing with tau(0) = 0")
        object.__setattr__(self, "samples", Y)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class FrechetSolution:
    minimizer: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    method: str

    def to_json(self) -> dict:
        return {
            "minimizer": [float(x) for x in self.minimizer],
            "objective_value": float(self.objective_value),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "method": self.method,
        }


def _point(p: FrechetProblem, q) -> np.ndarray:
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if q.shape != (p.dim,):
        raise DomainError(f"point has shape {q.shape}, expected ({p.dim},)")
    if not np.isfinite(q).all():
        raise DomainError("point must be finite")
    return q


def _dists(Y: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.linalg.norm(Y - q, axis=1)


def objective(p: FrechetProblem, q) -> float:
    """(1/n) sum_i tau(|Y_i - q|)."""
    q = _point(p, q)
    return float(np.mean(p.transform.eval(_dists(p.samples, q))))


def _gradient(p: FrechetProblem, q: np.ndarray) -> np.ndarray:
    diff = q - p.samples
    d = np.linalg.norm(diff, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(d > 0, p.transform.deriv(d, 1) / d, 0.0)
    return (w[:, None] * diff).mean(axis=0)


def _locally_minimal(p: FrechetProblem, q: np.ndarray, f: float) -> bool:
    """No coordinate step of relative size STALL_PROBE lowers the objective.

    Used when the line search finds no representable decrease, which happens
    near minimizers sitting close to a sample point where tau'' blows up.
    """
    h = STALL_PROBE * (1.0 + float(np.linalg.norm(q)))
    floor = f - 1e-13 * (1.0 + abs(f))
    for k in range(p.dim):
        for sgn in (-1.0, 1.0):
            e = np.zeros(p.dim)
            e[k] = sgn * h
            if objective(p, q + e) < floor:
                return False
    return True


def _gradient_descent(p: FrechetProblem, q: np.ndarray) -> tuple[np.ndarray, int, bool]:
    opts = p.solver
    f = objective(p, q)
    step = 1.0
    for it in range(1, opts.max_iter + 1):
        g = _gradient(p, q)
        gn2 = float(g @ g)
        if gn2 == 0.0:
            return q, it, True
        step *= 2.0
        for _ in range(120):
            qn = q - step * g
            fn = objective(p, qn)
            # Strict decrease: at roundoff level Armijo alone accepts zero progress.
            if fn < f and fn <= f - opts.armijo * step * gn2:
                break
            step *= 0.5
        else:
            return q, it, _locally_minimal(p, q, f)
        move = step * np.sqrt(gn2)
        q, f = qn, fn
        if move <= opts.step_tol * (1.0 + float(np.linalg.norm(q))):
            return q, it, True
    return q, opts.max_iter, False


def _weiszfeld(p: FrechetProblem, q: np.ndarray, d0: float) -> tuple[np.ndarray, int, bool]:
    """Reweighting with weights tau'(d)/d, modified at sample points.

    At a sample point the iterate stays put when the pull of the other
    samples is dominated by tau'(0) times the multiplicity there; otherwise
    it leaves along the modified step of Vardi and Zhang.
    """
    Y, t, opts = p.samples, p.transform, p.solver
    f = objective(p, q)
    for it in range(1, opts.max_iter + 1):
        d = _dists(Y, q)
        j = int(np.argmin(d))
        fj = objective(p, Y[j])
        if d[j] > 0 and fj <= f:
            q, f = Y[j].copy(), fj
            d = _dists(Y, q)
        at = d <= DIST_FLOOR * (1.0 + float(np.linalg.norm(q)))
        dd = np.maximum(d, DIST_FLOOR)
        w = np.where(at, 0.0, t.deriv(dd, 1) / dd)
        if not (w > 0).any():
            return q, it, True
        target = (w[:, None] * Y).sum(axis=0) / w.sum()
        if at.any():
            pull = (w[:, None] * (Y - q)).sum(axis=0)
            r = float(np.linalg.norm(pull))
            eta = d0 * int(at.sum())
            if r <= eta * (1.0 + 1e-12):
                return q, it, True
            lam = eta / r
            qn = (1.0 - lam) * target + lam * q
        else:
            qn = target
        move = float(np.linalg.norm(qn - q))
        q = qn
        f = objective(p, q)
        if move <= opts.step_tol * (1.0 + float(np.linalg.norm(q))):
            return q, it, True
    return q, opts.max_iter, False


def solve_mean(p: FrechetProblem) -> FrechetSolution:
    """Minimize the tau-Frechet objective starting from the coordinatewise median.

    Uses gradient descent with Armijo backtracking when tau'(0) = 0 and the
    reweighting iteration otherwise.  The result is never worse than the
    nearest sample points, which are checked explicitly.
    """
    q0 = np.median(p.samples, axis=0)
    d0 = deriv_at_zero(p.transform)
    if abs(d0) <= 1e-12:
        q, its, ok = _gradient_descent(p, q0)
        method = "gradient_descent"
    else:
        q, its, ok = _weiszfeld(p, q0, d0)
        method = "weiszfeld"
    f = objective(p, q)
    near = np.argsort(_dists(p.samples, q), kind="stable")[:SNAP_CANDIDATES]
    for j in near:
        fj = objective(p, p.samples[j])
        if fj < f:
            q, f = p.samples[j].copy(), fj
    return FrechetSolution(q, f, its, ok, method)


# --- rate experiment --------------------------------------------------------

DISTRIBUTIONS = ("gaussian", "gaussian_contaminated")
CONTAMINATION = 0.1
CONTAMINATION_SCALE = 10.0
PILOT_N = 20_000
PILOT_TOL = 0.05
PILOT_REP = 2**32 - 1


def draw_samples(dist: str, n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Samples centred at the origin; the contaminated mixture is symmetric."""
    if dist == "gaussian":
        return rng.standard_normal((n, dim))
    if dist == "gaussian_contaminated":
        x = rng.standard_normal((n, dim))
        wild = rng.random(n) < CONTAMINATION
        x[wild] *= CONTAMINATION_SCALE
        return x
    raise DomainError(f"unknown distribution {dist!r}; expected one of {DISTRIBUTIONS}")


@dataclass(frozen=True)
class RateRow:
    n: int
    mean_error: float
    sd: float


@dataclass(frozen=True)
class RateResult:
    transform: str
    dist: str
    slope: float
    rows: list[RateRow]
    failures: int
    runs: int
    seed: int


def _one_run(t: Transform, dist: str, n: int, rep: int, seed: int, dim: int, opts: SolverOptions):
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, rep]))
    sol = solve_mean(FrechetProblem(draw_samples(dist, n, dim, rng), t, opts))
    return float(np.linalg.norm(sol.minimizer)), sol.converged


def pilot_center_check(t: Transform, dist: str, seed: int = 42, dim: int = 2) -> float:
    """Distance of a large-sample tau-mean to the centre; raises if not small."""
    err, ok = _one_run(t, dist, PILOT_N, PILOT_REP, seed, dim, SolverOptions())
    if not ok or err > PILOT_TOL:
        raise ExperimentError(f"pilot run: tau-mean of {dist} is {err:.3g} away from the centre")
    return err


def rate_experiment(t: Transform, dist: str, n_list, reps: int, seed: int = 42, dim: int = 2,
                    threads: int = 1, options: SolverOptions | None = None,
                    pilot: bool = True) -> RateResult:
    """Slope of log mean error against log n for the tau-Frechet mean.

    The population minimizer is the centre of the symmetric distribution.
    Each (n, rep) pair has its own random stream, so results do not depend
    on ``threads``.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise DomainError("n_list must contain at least two increasing positive sizes")
    if reps < 8:
        raise DomainError("reps must be at least 8")
    if dist not in DISTRIBUTIONS:
        raise DomainError(f"unknown distribution {dist!r}")
    opts = options or SolverOptions()
    if pilot and dist == "gaussian_contaminated":
        pilot_center_check(t, dist, seed, dim)
    jobs = [(n, r) for n in n_list for r in range(reps)]
    run = lambda job: _one_run(t, dist, job[0], job[1], seed, dim, opts)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(run, jobs))
    else:
        out = [run(j) for j in jobs]
    failures = sum(not ok for _, ok in out)
    if failures > 0.1 * len(out):
        raise ExperimentError(f"{failures} of {len(out)} solves did not converge")
    errs = np.array([e for e, _ in out]).reshape(len(n_list), reps)
    rows = [RateRow(n, float(e.mean()), float(e.std(ddof=1))) for n, e in zip(n_list, errs)]
    slope = float(np.polyfit(np.log(n_list), np.log([r.mean_error for r in rows]), 1)[0])
    return RateResult(t.name, dist, slope, rows, failures, len(out), seed)
