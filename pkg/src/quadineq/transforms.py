"""Transforms: nondecreasing convex functions with a concave derivative.

A :class:`Transform` bundles a function ``tau`` on ``[0, inf)`` with optional
closed-form derivatives up to order three and metadata describing which of
the defining properties it claims.  All evaluation is vectorized over numpy
arrays; scalar input gives a Python float back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import CapabilityError, DomainError, NumericError

ArrayFn = Callable[[np.ndarray], np.ndarray]

CLAIMS = ("nondecreasing", "convex", "concave_derivative", "zero_at_zero")
CLASS_S = frozenset(CLAIMS[:3])
CLASS_S0 = frozenset(CLAIMS)

FD_BASE_STEP = np.finfo(float).eps ** (1.0 / 3.0)
MEMBERSHIP_TOL = 1e-9


def _domain(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if np.isnan(arr).any() or (arr < 0).any():
        raise DomainError("transforms are defined on [0, inf) only")
    return arr, arr.ndim == 0


def _out(values: np.ndarray, scalar: bool):
    return float(values) if scalar else values


@dataclass(frozen=True, eq=False)
class Transform:
    """A function tau on the nonnegative reals plus derivative metadata.

    ``derivs`` holds closed-form first, second and third derivatives (``None``
    where unavailable).  ``quad_constant`` is a known valid constant for the
    quadruple inequality, if any.  ``kinks`` lists points where the second
    derivative jumps; quadrature splits there.
    """

    name: str
    params: Mapping[str, float]
    f: ArrayFn
    derivs: tuple[ArrayFn | None, ArrayFn | None, ArrayFn | None]
    smoothness_order: int
    claims: frozenset[str]
    spec: Mapping
    quad_constant: float | None = None
    kinks: tuple[float, ...] = field(default=())

    def eval(self, x):
        arr, scalar = _domain(x)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _out(np.asarray(self.f(arr), dtype=float), scalar)

    __call__ = eval

    def has_closed_form(self, order: int) -> bool:
        return order <= self.smoothness_order and self.derivs[order - 1] is not None

    def deriv(self, x, order: int = 1, fallback: bool = False):
        """Derivative of the given order, closed form when available.

        Without ``fallback`` an order beyond ``smoothness_order`` raises
        :class:`CapabilityError`.  With it, nested central differences are
        taken starting from the highest closed-form derivative below
        ``order``.
        """
        if order not in (1, 2, 3):
            raise DomainError(f"derivative order must be 1, 2 or 3, got {order}")
        arr, scalar = _domain(x)
        if self.has_closed_form(order):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                return _out(np.asarray(self.derivs[order - 1](arr), dtype=float), scalar)
        if not fallback:
            raise CapabilityError(
                f"{self.name} has no closed-form derivative of order {order}"
            )
        base = 0
        for k in range(order - 1, 0, -1):
            if self.has_closed_form(k):
                base = k
                break
        g = self.f if base == 0 else self.derivs[base - 1]
        return _out(_nested_fd(g, arr, order - base), scalar)

    def sqrt_comp(self, x):
        """tau(sqrt(x))."""
        return self.eval(np.sqrt(x))

    def to_spec(self) -> dict:
        return dict(self.spec)


def _fd1(g: ArrayFn, x: np.ndarray) -> np.ndarray:
    h = FD_BASE_STEP * np.maximum(1.0, np.abs(x))
    central = x - h >= 0
    xm = np.where(central, x - h, x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        c = (g(x + h) - g(xm)) / (2 * h)
        fwd = (-3 * g(x) + 4 * g(x + h) - g(x + 2 * h)) / (2 * h)
    return np.where(central, c, fwd)


def _nested_fd(g: ArrayFn, x: np.ndarray, depth: int) -> np.ndarray:
    if depth == 0:
        return g(x)
    inner = lambda y: _nested_fd(g, y, depth - 1)  # noqa: E731
    return _fd1(inner, x)


def finite_difference(t: Transform, x, order: int = 1):
    """Nested central finite difference of tau itself, ignoring closed forms."""
    arr, scalar = _domain(x)
    return _out(_nested_fd(t.f, arr, order), scalar)


# --- built-ins -------------------------------------------------------------


def _power_coeff(alpha: float, k: int) -> float:
    c = 1.0
    for j in range(k):
        c *= alpha - j
    return c


def _power_deriv(alpha: float, k: int) -> ArrayFn:
    coeff = _power_coeff(alpha, k)
    if coeff == 0.0:
        return lambda x: np.zeros_like(x)
    if alpha == k:
        return lambda x: np.full_like(x, coeff)
    return lambda x: coeff * np.power(x, alpha - k)


def power(alpha: float) -> Transform:
    """x**alpha; in the class exactly when 1 <= alpha <= 2."""
    alpha = float(alpha)
    if not alpha > 0 or not math.isfinite(alpha):
        raise DomainError("power exponent must be positive and finite")
    claims = {"nondecreasing", "zero_at_zero"}
    if alpha >= 1:
        claims.add("convex")
    if 1 <= alpha <= 2:
        claims.add("concave_derivative")
    return Transform(
        name=f"power({alpha:g})",
        params={"alpha": alpha},
        f=lambda x: np.power(x, alpha),
        derivs=(_power_deriv(alpha, 1), _power_deriv(alpha, 2), _power_deriv(alpha, 3)),
        smoothness_order=3,
        claims=frozenset(claims),
        spec={"kind": "power", "alpha": alpha},
        quad_constant=2.0 ** (2.0 - alpha) if 1 <= alpha <= 2 else None,
    )


def linear() -> Transform:
    return Transform(
        name="linear",
        params={},
        f=lambda x: x.copy(),
        derivs=(np.ones_like, np.zeros_like, np.zeros_like),
        smoothness_order=3,
        claims=CLASS_S0,
        spec={"kind": "linear"},
        quad_constant=2.0,
    )


def constant(c: float = 0.0) -> Transform:
    c = float(c)
    claims = set(CLASS_S) | ({"zero_at_zero"} if c == 0 else set())
    return Transform(
        name=f"constant({c:g})",
        params={"c": c},
        f=lambda x: np.full_like(x, c),
        derivs=(np.zeros_like, np.zeros_like, np.zeros_like),
        smoothness_order=3,
        claims=frozenset(claims),
        spec={"kind": "constant", "c": c},
        quad_constant=0.0,
    )


def huber(delta: float = 1.0) -> Transform:
    """x**2/2 below delta, linear with slope delta above.  Only C^1."""
    d = float(delta)
    if not d > 0:
        raise DomainError("huber delta must be positive")
    return Transform(
        name=f"huber({d:g})",
        params={"delta": d},
        f=lambda x: np.where(x <= d, 0.5 * x * x, d * (x - 0.5 * d)),
        derivs=(lambda x: np.minimum(x, d), None, None),
        smoothness_order=1,
        claims=CLASS_S0,
        spec={"kind": "huber", "delta": d},
        quad_constant=2.0,
        kinks=(d,),
    )


def pseudo_huber(delta: float = 1.0) -> Transform:
    d = float(delta)
    if not d > 0:
        raise DomainError("pseudo-huber delta must be positive")

    def root(x):
        return np.sqrt(1.0 + (x / d) ** 2)

    return Transform(
        name=f"pseudo_huber({d:g})",
        params={"delta": d},
        # delta^2 (sqrt(1 + x^2/delta^2) - 1), rewritten to avoid cancellation
        f=lambda x: x * x / (root(x) + 1.0),
        derivs=(
            lambda x: x / root(x),
            lambda x: root(x) ** -3,
            lambda x: -3.0 * x / (d * d) * root(x) ** -5,
        ),
        smoothness_order=3,
        claims=CLASS_S0,
        spec={"kind": "pseudo_huber", "delta": d},
        quad_constant=2.0,
    )


def _sech2(x):
    e = np.exp(-2.0 * x)
    return 4.0 * e / (1.0 + e) ** 2


def log_cosh() -> Transform:
    return Transform(
        name="log_cosh",
        params={},
        f=lambda x: x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0),
        derivs=(np.tanh, _sech2, lambda x: -2.0 * np.tanh(x) * _sech2(x)),
        smoothness_order=3,
        claims=CLASS_S0,
        spec={"kind": "log_cosh"},
        quad_constant=2.0,
    )


def sum_of(terms: Sequence[Transform], weights: Sequence[float]) -> Transform:
    """Nonnegative linear combination; derivatives combine linearly."""
    if len(terms) != len(weights) or not terms:
        raise DomainError("terms and weights must be nonempty and of equal length")
    w = [float(v) for v in weights]
    if any(not (v >= 0) or not math.isfinite(v) for v in w):
        raise DomainError("weights must be finite and nonnegative")
    active = [(t, v) for t, v in zip(terms, w) if v > 0]
    if not active:
        return constant(0.0)

    def combine(fns):
        return lambda x: sum(v * g(x) for g, v in fns)

    derivs = []
    for k in range(3):
        fns = [(t.derivs[k], v) for t, v in active]
        ok = all(g is not None for g, _ in fns)
        derivs.append(combine(fns) if ok else None)
    smooth = min(t.smoothness_order for t, _ in active)
    claims = frozenset.intersection(*(t.claims for t, _ in active))
    consts = [t.quad_constant for t, _ in active]
    quad = None if any(c is None for c in consts) else sum(c * v for c, (_, v) in zip(consts, active))
    kinks = tuple(sorted({k for t, _ in active for k in t.kinks}))
    name = " + ".join(f"{v:g}*{t.name}" for t, v in active)
    return Transform(
        name=name,
        params={f"w{i}": v for i, v in enumerate(w)},
        f=combine([(t.f, v) for t, v in active]),
        derivs=tuple(derivs),
        smoothness_order=smooth,
        claims=claims,
        spec={"kind": "sum", "terms": [t.to_spec() for t in terms], "weights": w},
        quad_constant=quad,
        kinks=kinks,
    )


def scale_and_add(t1: Transform, a1: float, t2: Transform, a2: float) -> Transform:
    """a1*t1 + a2*t2 for nonnegative a1, a2."""
    return sum_of([t1, t2], [a1, a2])


def builtin_transforms() -> list[Transform]:
    """The standard members of S0 exercised by the test suites."""
    return [power(a) for a in (1.0, 1.25, 1.5, 1.75, 2.0)] + [
        huber(1.0),
        pseudo_huber(1.0),
        log_cosh(),
    ]


def from_spec(spec: Mapping) -> Transform:
    """Build a transform from its JSON description."""
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise DomainError("transform spec must be an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "power":
            return power(spec["alpha"])
        if kind == "huber":
            return huber(spec.get("delta", 1.0))
        if kind == "pseudo_huber":
            return pseudo_huber(spec.get("delta", 1.0))
        if kind == "log_cosh":
            return log_cosh()
        if kind == "linear":
            return linear()
        if kind == "constant":
            return constant(spec.get("c", 0.0))
        if kind == "sum":
            return sum_of([from_spec(s) for s in spec["terms"]], spec["weights"])
        if kind == "mollified":
            return mollify(
                from_spec(spec["base"]), int(spec["n"]), int(spec.get("quadrature_order", 64))
            )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed transform spec: {exc}") from exc
    raise DomainError(f"unknown transform kind {kind!r}")


# --- membership ------------------------------------------------------------


@dataclass(frozen=True)
class MembershipReport:
    nondecreasing_ok: bool
    convex_ok: bool
    concave_deriv_ok: bool
    zero_at_zero_ok: bool
    worst_violation: float
    worst_point: float

    @property
    def ok(self) -> bool:
        return self.nondecreasing_ok and self.convex_ok and self.concave_deriv_ok and self.zero_at_zero_ok

    @property
    def in_s(self) -> bool:
        return self.nondecreasing_ok and self.convex_ok and self.concave_deriv_ok


def default_grid(n: int = 1000, lo: float = 1e-4, hi: float = 1e4) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


def check_membership(
    t: Transform, sample_grid: Sequence[float] | None = None, tol: float = MEMBERSHIP_TOL
) -> MembershipReport:
    """Grid test of monotonicity, convexity of tau and concavity of tau'.

    Violations are measured relative to the largest magnitude involved in
    each local comparison.  Never raises on failure.
    """
    x = default_grid() if sample_grid is None else np.asarray(sample_grid, dtype=float)
    if x.size == 0 or (x <= 0).any() or (np.diff(x) <= 0).any():
        raise DomainError("grid must be nonempty, positive and strictly increasing")
    lo, hi = x[:-1], x[1:]
    mid = 0.5 * (lo + hi)
    f_lo, f_hi, f_mid = t.eval(lo), t.eval(hi), t.eval(mid)
    d_lo, d_hi, d_mid = (t.deriv(v, 1, fallback=True) for v in (lo, hi, mid))

    def rel(slack, *parts):
        scale = np.maximum.reduce([np.abs(p) for p in parts])
        scale = np.maximum(scale, 1e-300)
        return np.maximum(-slack / scale, 0.0)

    viol_mono = rel(f_hi - f_lo, f_lo, f_hi)
    viol_conv = rel(0.5 * (f_lo + f_hi) - f_mid, f_lo, f_hi, f_mid)
    viol_cc = rel(d_mid - 0.5 * (d_lo + d_hi), d_lo, d_hi, d_mid)
    zero = abs(t.eval(0.0))
    worst = 0.0
    worst_point = float(x[0])
    for v in (viol_mono, viol_conv, viol_cc):
        if v.size and v.max() > worst:
            worst = float(v.max())
            worst_point = float(mid[int(v.argmax())])
    if zero > worst:
        worst, worst_point = zero, 0.0
    return MembershipReport(
        nondecreasing_ok=bool(viol_mono.max(initial=0.0) <= tol),
        convex_ok=bool(viol_conv.max(initial=0.0) <= tol),
        concave_deriv_ok=bool(viol_cc.max(initial=0.0) <= tol),
        zero_at_zero_ok=bool(zero <= tol),
        worst_violation=worst,
        worst_point=worst_point,
    )


def extend_zero(t: Transform, max_exponent: int = 300) -> tuple[float, float]:
    """Right limits of tau and tau' at 0 along x = 10**-k."""
    prev = None
    for k in range(1, max_exponent + 1):
        x = 10.0 ** -k
        cur = (t.eval(x), t.deriv(x, 1, fallback=True))
        if not all(math.isfinite(v) for v in cur):
            break
        if prev is not None and all(
            abs(c - p) <= 1e-15 + 1e-12 * abs(c) for c, p in zip(cur, prev)
        ):
            return (0.0 if abs(cur[0]) < 1e-300 else cur[0], 0.0 if abs(cur[1]) < 1e-300 else cur[1])
        prev = cur
    raise NumericError(f"values of {t.name} near 0 did not stabilize")


def deriv_at_zero(t: Transform) -> float:
    """tau'(0), from the closed form when it is finite, else the right limit."""
    if t.has_closed_form(1):
        d = float(t.deriv(0.0, 1))
        if math.isfinite(d):
            return d
    return extend_zero(t)[1]


# --- mollification ---------------------------------------------------------


def _bump(u: np.ndarray) -> np.ndarray:
    """exp(-1/(1-u^2)) on |u|<1 and its first two derivatives in u."""
    inside = np.abs(u) < 1
    v = np.where(inside, 1.0 - u * u, 1.0)
    k = np.where(inside, np.exp(-1.0 / v), 0.0)
    # g = -1/v, g' = -2u/v^2, g'' = -(2/v^2 + 8u^2/v^3)
    g1 = -2.0 * u / v**2
    g2 = -(2.0 / v**2 + 8.0 * u * u / v**3)
    return k, k * g1, k * (g1 * g1 + g2)


@dataclass(frozen=True)
class _Mollifier:
    n: int
    order: int
    base: Transform
    norm: float

    def nodes(self, y: np.ndarray):
        """Quadrature nodes in t over the support, split at base kinks.

        Returns nodes of shape (len(y), m) plus weights for the kernel and
        its first and second t-derivatives.
        """
        lo, hi = -1.0 / self.n, 1.0 / self.n
        cuts = [np.full(y.shape, lo)]
        with np.errstate(divide="ignore"):
            for kink in self.base.kinks:
                cuts.append(np.clip(np.log(np.maximum(y, 1e-300) / kink), lo, hi))
        cuts.append(np.full(y.shape, hi))
        cuts = np.sort(np.stack(cuts, axis=-1), axis=-1)
        x, w = leggauss(self.order)
        ts, ws = [], []
        for j in range(cuts.shape[-1] - 1):
            a, b = cuts[:, j : j + 1], cuts[:, j + 1 : j + 2]
            ts.append(0.5 * (b - a) * x + 0.5 * (a + b))
            ws.append(0.5 * (b - a) * w)
        t = np.concatenate(ts, axis=1)
        wq = np.concatenate(ws, axis=1)
        k0, k1, k2 = _bump(self.n * t)
        c = self.norm
        return t, wq * k0 * c, wq * k1 * c * self.n, wq * k2 * c * self.n**2

    def f(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.atleast_1d(arr).ravel()
        t, k0, _, _ = self.nodes(y)
        tau0 = float(self.base.eval(0.0))
        vals = self.base.eval(y[:, None] * np.exp(-t)) - tau0
        out = tau0 + np.sum(k0 * np.exp(t) * vals, axis=1)
        return out.reshape(arr.shape)

    def _dprime(self, y, t):
        return self.base.deriv(y[:, None] * np.exp(-t), 1)

    def d1(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.atleast_1d(arr).ravel()
        t, k0, _, _ = self.nodes(y)
        return np.sum(k0 * self._dprime(y, t), axis=1).reshape(arr.shape)

    def d2(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.atleast_1d(arr).ravel()
        t, _, k1, _ = self.nodes(y)
        s1 = np.sum(k1 * self._dprime(y, t), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(y > 0, s1 / y, self._at_zero(2))
        return out.reshape(arr.shape)

    def d3(self, x):
        arr = np.asarray(x, dtype=float)
        y = np.atleast_1d(arr).ravel()
        t, _, k1, k2 = self.nodes(y)
        dp = self._dprime(y, t)
        s1 = np.sum(k1 * dp, axis=1)
        s2 = np.sum(k2 * dp, axis=1)
        # d/ds [e^s tau_n''(e^s)] = kernel'' * tau', so tau_n''' = (s2 - s1)/y^2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(y > 0, (s2 - s1) / (y * y), self._at_zero(3))
        return out.reshape(arr.shape)

    def _at_zero(self, order: int) -> float:
        if self.base.has_closed_form(order):
            t, k0, _, _ = self.nodes(np.array([1.0]))
            scale = float(np.sum(k0 * np.exp(-(order - 1) * t)))
            return float(self.base.deriv(0.0, order)) * scale
        return math.nan


def mollify(t: Transform, n: int, quadrature_order: int = 64, tol: float = 1e-8) -> Transform:
    """Smooth tau' by multiplicative convolution with a bump supported on [e^-1/n, e^1/n].

    The result is C^3.  tau_n(x) is evaluated through the exchanged-order
    form tau(0) + int phi(t) e^t (tau(x e^-t) - tau(0)) dt, which is the exact
    antiderivative of the quadrature rule used for tau_n'; see
    :func:`mollified_value_adaptive` for the nested-integral cross-check.
    """
    if not CLASS_S <= t.claims:
        raise DomainError(f"{t.name} does not claim membership in S")
    if int(n) != n or n < 1:
        raise DomainError("mollifier index n must be a positive integer")
    if quadrature_order < 2:
        raise DomainError("quadrature order must be at least 2")
    if not t.has_closed_form(1):
        raise CapabilityError("mollification needs a closed-form first derivative")
    n = int(n)
    x, w = leggauss(quadrature_order)
    k0, _, _ = _bump(x)
    norm = float(1.0 / (np.sum(w * k0) / n))
    m = _Mollifier(n=n, order=quadrature_order, base=t, norm=norm)

    probe = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
    fine = _Mollifier(n=n, order=2 * quadrature_order, base=t, norm=_fine_norm(n, 2 * quadrature_order))
    coarse_v, fine_v = m.d1(probe), fine.d1(probe)
    change = np.abs(coarse_v - fine_v) / np.maximum(np.abs(fine_v), 1e-300)
    if change.max() > tol:
        raise NumericError(
            f"mollifier quadrature did not converge (relative change {change.max():.2e})"
        )

    return Transform(
        name=f"mollified({t.name},{n})",
        params={"n": float(n), "quadrature_order": float(quadrature_order)},
        f=m.f,
        derivs=(m.d1, m.d2, m.d3),
        smoothness_order=3,
        claims=t.claims,
        spec={"kind": "mollified", "base": t.to_spec(), "n": n, "quadrature_order": quadrature_order},
        quad_constant=t.quad_constant,
    )


def _fine_norm(n: int, order: int) -> float:
    x, w = leggauss(order)
    k0, _, _ = _bump(x)
    return float(1.0 / (np.sum(w * k0) / n))


def mollified_value_adaptive(t: Transform, n: int, x: float, quadrature_order: int = 64,
                             epsrel: float = 1e-8) -> float:
    """tau_n(x) as tau(0) plus an adaptive outer integral of tau_n'."""
    from scipy.integrate import quad

    m = mollify(t, n, quadrature_order)
    tau0 = float(t.eval(0.0))
    if x == 0:
        return tau0
    val, _ = quad(lambda y: float(m.deriv(y, 1)), 0.0, float(x), epsrel=epsrel, limit=200)
    return tau0 + val


def mollifier_power_scale(n: int, alpha: float, quadrature_order: int = 64) -> float:
    """The constant c with (x^alpha)_n' = c * alpha x^(alpha-1)."""
    m = mollify(power(alpha), n, quadrature_order)
    return float(m.deriv(1.0, 1)) / alpha
