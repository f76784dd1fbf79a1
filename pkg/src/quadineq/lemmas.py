"""Sampled numerical checks of the auxiliary inequalities behind the main theorem.

Each lemma is an inequality ``lhs <= rhs`` (possibly several) in a few real
variables, valid under side conditions.  :func:`sample_lemma` draws admissible
inputs by rejection sampling and reports the worst residual ``lhs - rhs``
relative to ``max(1, |lhs|, |rhs|)``.

Notation used below, for a transform tau:

    S(x)  = tau(sqrt(x))
    S1(x) = S'(x)  = tau'(sqrt x) / (2 sqrt x)
    S2(x) = S''(x) = (tau''(sqrt x) - tau'(sqrt x) / sqrt x) / (4x)
    ell(a,b,c,r,s) = tau(a) - tau(c) - S(a^2 - 2rab + b^2) + S(c^2 - 2scb + b^2)
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, PreconditionError, SamplingError
from .transforms import CLASS_S0, Transform, _nested_fd, huber, log_cosh, power, pseudo_huber

RESIDUAL_TOL = 1e-8
HYPOTHESIS_TOL = 1e-12
ARG_TOL = 1e-12
DDR_STEP = 1e-3
BOX = 4.0
COSINES = frozenset("rst")


class Calculus:
    """Vectorized tau, its derivatives and those of tau(sqrt(.)).

    Arguments that should be nonnegative but come out as tiny negatives from
    rounding are clamped to zero.
    """

    def __init__(self, t: Transform):
        self.t = t

    @staticmethod
    def _arg(x):
        x = np.asarray(x, dtype=float)
        floor = -ARG_TOL * np.maximum(1.0, np.abs(x))
        if (x < floor).any():
            raise DomainError(f"negative argument {x.min():.3e} in lemma evaluation")
        return np.maximum(x, 0.0)

    def T(self, x):
        return self.t.eval(self._arg(x))

    def D1(self, x):
        return self.t.deriv(self._arg(x), 1)

    def D2(self, x):
        return self.t.deriv(self._arg(x), 2)

    def S(self, x):
        return self.T(np.sqrt(self._arg(x)))

    def S1(self, x):
        r = np.sqrt(self._arg(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.D1(r) / (2 * r)

    def S2(self, x):
        x = self._arg(x)
        r = np.sqrt(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.D2(r) - self.D1(r) / r) / (4 * x)

    def ell(self, a, b, c, r, s):
        return self.T(a) - self.T(c) - self.S(a * a - 2 * r * a * b + b * b) + self.S(c * c - 2 * s * c * b + b * b)


Hypothesis = tuple[str, Callable[[SimpleNamespace], np.ndarray]]
Parts = Callable[[Calculus, SimpleNamespace], list]


@dataclass(frozen=True)
class Lemma:
    """An inequality with its variables, side conditions and smoothness need.

    ``order`` is the highest derivative of tau the check needs.  Each
    hypothesis maps inputs to a slack that must be nonnegative.
    """

    lemma_id: str
    variables: tuple[str, ...]
    order: int
    hypotheses: tuple[Hypothesis, ...]
    parts: Parts
    box: Mapping[str, tuple[float, float]]
    summary: str

    def bounds(self, var: str) -> tuple[float, float]:
        if var in self.box:
            return self.box[var]
        return (-1.0, 1.0) if var in COSINES else (0.0, BOX)

    def is_length(self, var: str) -> bool:
        return var not in COSINES and var not in self.box


REGISTRY: dict[str, Lemma] = {}


def _register(lemma_id: str, variables: str, order: int, *hyps: Hypothesis,
              box: Mapping[str, tuple[float, float]] | None = None):
    def deco(fn: Parts) -> Parts:
        REGISTRY[lemma_id] = Lemma(
            lemma_id, tuple(variables.split()), order, tuple(hyps), fn, dict(box or {}),
            (fn.__doc__ or "").strip(),
        )
        return fn

    return deco


def _q(v, x, y, cos):
    """x^2 - 2 cos x y + y^2."""
    return x * x - 2 * cos * x * y + y * y


# --- parametrized main inequality and its reductions ------------------------


@_register("main_param", "a b c r s", 1)
def _main_param(X, v):
    """ell(a,b,c,r,s) <= 2b tau'(max(ra - sc, |a - c|))."""
    return [(X.ell(v.a, v.b, v.c, v.r, v.s), 2 * v.b * X.D1(np.maximum(v.r * v.a - v.s * v.c, np.abs(v.a - v.c))))]


@_register("first_reduction_a", "a b c s", 1, ("(s+1)c <= 2a", lambda v: 2 * v.a - (v.s + 1) * v.c))
def _first_reduction_a(X, v):
    """tau(a) - tau(c) - tau(|a-b|) + S(c^2 - 2scb + b^2) <= 2b tau'(a - sc)."""
    lhs = X.T(v.a) - X.T(v.c) - X.T(np.abs(v.a - v.b)) + X.S(_q(v, v.c, v.b, v.s))
    return [(lhs, 2 * v.b * X.D1(v.a - v.s * v.c))]


def _reduction_b(X, v):
    """tau(a) - tau(c) - S((a-b)^2 + 4cb) + tau(c+b) <= 2b tau'(a - c)."""
    lhs = X.T(v.a) - X.T(v.c) - X.S((v.a - v.b) ** 2 + 4 * v.c * v.b) + X.T(v.c + v.b)
    return [(lhs, 2 * v.b * X.D1(v.a - v.c))]


_register("first_reduction_b", "a b c", 1, ("a >= c", lambda v: v.a - v.c))(_reduction_b)
_register("reduii", "a b c", 1, ("a >= c", lambda v: v.a - v.c))(_reduction_b)


def _F(X, a, b, c, r, s):
    return X.ell(a, b, c, r, s) - 2 * b * X.D1(r * a - s * c)


@_register(
    "ddr",
    "a b c r s",
    3,
    ("ra - sc >= 0 on [r-h, r+h]", lambda v: (v.r - DDR_STEP) * v.a - v.s * v.c),
    ("r + h <= 1", lambda v: 1 - v.r - DDR_STEP),
)
def _ddr(X, v):
    """F(a,b,c,r,s) = ell - 2b tau'(ra - sc) is convex in r where ra - sc >= 0.

    Checked as a nonnegative second central difference with step h.
    """
    h = DDR_STEP
    f = lambda r: _F(X, v.a, v.b, v.c, r, v.s)  # noqa: E731
    return [(-(f(v.r + h) - 2 * f(v.r) + f(v.r - h)), np.zeros_like(v.a))]


def _in_max_case(v):
    return np.abs(v.a - v.c) - (v.r * v.a - v.s * v.c)


@_register(
    "maxlhs_i", "a b c r s", 0,
    ("a >= c", lambda v: v.a - v.c),
    ("a^2 <= c^2 + 2ab - 2cb", lambda v: v.c**2 + 2 * v.a * v.b - 2 * v.c * v.b - v.a**2),
    ("|a-c| >= ra - sc", _in_max_case),
)
def _maxlhs_i(X, v):
    """ell <= tau(a) - tau(c) - tau(|a-b|) + tau(|c-b|)."""
    rhs = X.T(v.a) - X.T(v.c) - X.T(np.abs(v.a - v.b)) + X.T(np.abs(v.c - v.b))
    return [(X.ell(v.a, v.b, v.c, v.r, v.s), rhs)]


@_register(
    "maxlhs_ii", "a b c r s", 0,
    ("a >= c", lambda v: v.a - v.c),
    ("a^2 >= c^2 + 2ab - 2cb", lambda v: v.a**2 - v.c**2 - 2 * v.a * v.b + 2 * v.c * v.b),
    ("|a-c| >= ra - sc", _in_max_case),
)
def _maxlhs_ii(X, v):
    """ell <= tau(a) - tau(c) - S((a-b)^2 + 4cb) + tau(c+b)."""
    rhs = X.T(v.a) - X.T(v.c) - X.S((v.a - v.b) ** 2 + 4 * v.c * v.b) + X.T(v.c + v.b)
    return [(X.ell(v.a, v.b, v.c, v.r, v.s), rhs)]


@_register(
    "maxlhs_iii", "a b c r s", 0,
    ("c >= a", lambda v: v.c - v.a),
    ("|a-c| >= ra - sc", _in_max_case),
)
def _maxlhs_iii(X, v):
    """ell <= tau(a) - tau(c) - tau(|a-b|) + S((c+b)^2 - 4ab)."""
    rhs = X.T(v.a) - X.T(v.c) - X.T(np.abs(v.a - v.b)) + X.S((v.c + v.b) ** 2 - 4 * v.a * v.b)
    return [(X.ell(v.a, v.b, v.c, v.r, v.s), rhs)]


def _case_lhs(X, v):
    return X.T(v.a) - X.T(v.c) - X.T(np.abs(v.a - v.b)) + X.S(_q(v, v.c, v.b, v.s))


def _full_rhs(X, v):
    return 2 * v.b * X.D1(v.a - v.s * v.c)


def _half_rhs(X, v):
    return 2 * v.b * X.D1((v.a - v.s * v.c) / 2)


_S_CAP = ("(s+1)c <= 2a", lambda v: 2 * v.a - (v.s + 1) * v.c)


@_register(
    "gaGbGsc", "a b c s", 1, _S_CAP,
    ("c >= a", lambda v: v.c - v.a), ("a >= b", lambda v: v.a - v.b), ("b >= sc", lambda v: v.b - v.s * v.c),
)
def _ga_gb_gsc(X, v):
    """tau(a) - tau(c) - tau(a-b) + S(c^2 - 2scb + b^2) <= 2b tau'(a - sc)."""
    return [(_case_lhs(X, v), _full_rhs(X, v))]


@_register(
    "gaGbLsc", "a b c s", 1, _S_CAP,
    ("c >= a", lambda v: v.c - v.a), ("a >= b", lambda v: v.a - v.b), ("b <= sc", lambda v: v.s * v.c - v.b),
)
def _ga_gb_lsc(X, v):
    """tau(a) - tau(c) - tau(a-b) + S(c^2 - 2scb + b^2) <= 2b tau'(a - sc)."""
    return [(_case_lhs(X, v), _full_rhs(X, v))]


@_register("gaLb", "a b c s", 1, _S_CAP, ("c >= a", lambda v: v.c - v.a), ("b >= a", lambda v: v.b - v.a))
def _ga_lb(X, v):
    """tau(a) - tau(c) - tau(b-a) + S(c^2 - 2scb + b^2) <= 2b tau'(a - sc)."""
    return [(_case_lhs(X, v), _full_rhs(X, v))]


@_register(
    "laLb_scb", "a b c s", 1,
    ("b/2 <= sc", lambda v: v.s * v.c - v.b / 2),
    ("sc >= a - b", lambda v: v.s * v.c - v.a + v.b),
    ("a >= c", lambda v: v.a - v.c),
)
def _la_lb_scb(X, v):
    """tau(a) - tau(c) - tau(|a-b|) + S(c^2 - 2scb + b^2) <= 2b tau'((a - sc)/2)."""
    return [(_case_lhs(X, v), _half_rhs(X, v))]


@_register("labGsc", "a b c s", 1, ("b >= 2sc", lambda v: v.b - 2 * v.s * v.c), ("a >= sc", lambda v: v.a - v.s * v.c))
def _lab_gsc(X, v):
    """tau(a) - tau(c) - tau(|a-b|) + S(c^2 - 2scb + b^2) <= 2b tau'((a - sc)/2)."""
    return [(_case_lhs(X, v), _half_rhs(X, v))]


@_register(
    "laGb_scb", "a b c s", 1,
    ("b/2 <= sc", lambda v: v.s * v.c - v.b / 2),
    ("sc <= a - b", lambda v: v.a - v.b - v.s * v.c),
    ("a >= c", lambda v: v.a - v.c),
)
def _la_gb_scb(X, v):
    """tau(a) - tau(c) - tau(a-b) + S(c^2 - 2scb + b^2) <= 2b tau'((a - sc)/2)."""
    return [(_case_lhs(X, v), _half_rhs(X, v))]


def _g_directional(X, b, c, s):
    """d/db g + d/dc g for g = tau(kc) - tau(c) - tau(kc - b) + S(Q) - 2b tau'(mc).

    k = (1+s)/2, m = (1-s)/2 and Q = c^2 - 2scb + b^2.
    """
    k, m = (1 + s) / 2, (1 - s) / 2
    Q = _q(None, c, b, s)
    return (
        m * X.D1(k * c - b)
        + 2 * (1 - s) * (b + c) * X.S1(Q)
        - 2 * X.D1(m * c)
        + k * X.D1(k * c)
        - X.D1(c)
        - (1 - s) * b * X.D2(m * c)
    )


@_register("gbcs", "b c s", 2, ("b <= sc", lambda v: v.s * v.c - v.b))
def _gbcs(X, v):
    """(d/db + d/dc) [tau(kc) - tau(c) - tau(kc-b) + S(c^2-2scb+b^2) - 2b tau'(mc)] <= 0."""
    return [(_g_directional(X, v.b, v.c, v.s), np.zeros_like(v.b))]


@_register(
    "xabc", "x b c", 0,
    ("b <= 2x", lambda v: 2 * v.x - v.b), ("x + b >= c", lambda v: v.x + v.b - v.c), ("x <= c", lambda v: v.c - v.x),
)
def _xabc(X, v):
    """tau(x+b) + S(c^2 - 2xb + b^2) <= tau(c) + tau(x) + 2 tau(b)."""
    return [(X.T(v.x + v.b) + X.S(v.c**2 - 2 * v.x * v.b + v.b**2), X.T(v.c) + X.T(v.x) + 2 * X.T(v.b))]


# --- mechanical steps -------------------------------------------------------


def _zero(v):
    return np.zeros_like(next(iter(vars(v).values())))


def _mech(lemma_id, variables, order, *hyps):
    def deco(expr):
        def parts(X, v):
            return [(expr(X, v), _zero(v))]

        parts.__doc__ = expr.__doc__
        _register(lemma_id, variables, order, *hyps)(parts)
        return expr

    return deco


@_mech("mech_1", "a b c", 1, ("a >= c", lambda v: v.a - v.c), ("a - b - 2c >= 0", lambda v: v.a - v.b - 2 * v.c))
def _m1(X, v):
    """2(a-b-2c) S1((a-b)^2 + 4cb) + tau'(c+b) - 2 tau'(a-c) <= 0."""
    return 2 * (v.a - v.b - 2 * v.c) * X.S1((v.a - v.b) ** 2 + 4 * v.c * v.b) + X.D1(v.c + v.b) - 2 * X.D1(v.a - v.c)


@_mech("mech_2", "a b c", 1, ("a >= c", lambda v: v.a - v.c), ("a - b - 2c <= 0", lambda v: v.b + 2 * v.c - v.a))
def _m2(X, v):
    """-2(b+2c-a) S1((a-b)^2 + 4cb) + tau'(c+b) - 2 tau'(a-c) <= 0."""
    return -2 * (v.b + 2 * v.c - v.a) * X.S1((v.a - v.b) ** 2 + 4 * v.c * v.b) + X.D1(v.c + v.b) - 2 * X.D1(v.a - v.c)


@_mech("mech_3", "a b c s", 1, ("a >= b", lambda v: v.a - v.b), ("b >= sc", lambda v: v.b - v.s * v.c))
def _m3(X, v):
    """tau'(a-b) + 2(b-sc) S1(c^2 - 2scb + b^2) - 2 tau'(a-sc) <= 0."""
    return X.D1(v.a - v.b) + 2 * (v.b - v.s * v.c) * X.S1(_q(v, v.c, v.b, v.s)) - 2 * X.D1(v.a - v.s * v.c)


@_mech("mech_5", "u v", 1, ("u >= v", lambda v: v.u - v.v))
def _m5(X, v):
    """tau'(u) - tau'(u+v) + 4v S1(4uv) - 2 tau'(v) <= 0."""
    return X.D1(v.u) - X.D1(v.u + v.v) + 4 * v.v * X.S1(4 * v.u * v.v) - 2 * X.D1(v.v)


@_mech("mech_6", "a b c s", 1, _S_CAP, ("a <= b", lambda v: v.b - v.a))
def _m6(X, v):
    """-tau'(b-a) + 2(b-sc) S1(c^2 - 2scb + b^2) - 2 tau'(a-sc) <= 0."""
    return -X.D1(v.b - v.a) + 2 * (v.b - v.s * v.c) * X.S1(_q(v, v.c, v.b, v.s)) - 2 * X.D1(v.a - v.s * v.c)


@_mech("mech_7", "a c s", 2, ("a >= sc", lambda v: v.a - v.s * v.c))
def _m7(X, v):
    """tau'(a) + 2(a-sc) S1(c^2 - 2sca + a^2) - 2 tau'(a-sc) - 2a tau''(a-sc) <= 0."""
    d = v.a - v.s * v.c
    return X.D1(v.a) + 2 * d * X.S1(_q(v, v.c, v.a, v.s)) - 2 * X.D1(d) - 2 * v.a * X.D2(d)


@_mech("mech_8", "u v", 1)
def _m8(X, v):
    """tau'(u) - tau'(u+v) + 4v S1(4uv + v^2) - 2 tau'(v) <= 0."""
    return X.D1(v.u) - X.D1(v.u + v.v) + 4 * v.v * X.S1(4 * v.u * v.v + v.v**2) - 2 * X.D1(v.v)


@_mech("mech_9", "a b c s", 2, ("a >= sc", lambda v: v.a - v.s * v.c), ("sc >= b", lambda v: v.s * v.c - v.b))
def _m9(X, v):
    """tau'(a) - tau'(a-b) - 2b tau''(a-sc) <= 0."""
    return X.D1(v.a) - X.D1(v.a - v.b) - 2 * v.b * X.D2(v.a - v.s * v.c)


@_mech("mech_10", "b c", 1, ("2c >= 3b", lambda v: 2 * v.c - 3 * v.b))
def _m10(X, v):
    """tau'(c) - tau'(c-b) - 2b S1(c^2 - 2(c-b)b + b^2) <= 0."""
    return X.D1(v.c) - X.D1(v.c - v.b) - 2 * v.b * X.S1(v.c**2 - 2 * (v.c - v.b) * v.b + v.b**2)


@_mech("mech_11", "b c", 0, ("c >= b", lambda v: v.c - v.b))
def _m11(X, v):
    """S((c-b)^2 + 2b^2) - tau(c-b) - 2 tau(b) <= 0."""
    return X.S((v.c - v.b) ** 2 + 2 * v.b**2) - X.T(v.c - v.b) - 2 * X.T(v.b)


@_mech("mech_12", "b c", 1, ("2c <= 3b", lambda v: 3 * v.b - 2 * v.c))
def _m12(X, v):
    """tau'(3b/2) - tau'(b/2) - 2b S1(c^2) <= 0."""
    return X.D1(1.5 * v.b) - X.D1(0.5 * v.b) - 2 * v.b * X.S1(v.c**2)


@_mech("mech_13", "b", 0)
def _m13(X, v):
    """tau(3b/2) - tau(b/2) - 2 tau(b) <= 0."""
    return X.T(1.5 * v.b) - X.T(0.5 * v.b) - 2 * X.T(v.b)


@_mech("mech_14", "x b c", 2, ("x <= c", lambda v: v.c - v.x))
def _m14(X, v):
    """tau''(x+b) - tau''(x) + 4b^2 S2(c^2 - 2xb + b^2) <= 0."""
    return X.D2(v.x + v.b) - X.D2(v.x) + 4 * v.b**2 * X.S2(v.c**2 - 2 * v.x * v.b + v.b**2)


@_mech("mech_15", "u c", 2)
def _m15(X, v):
    """2 tau'(u) - 2 tau'(u/2) - (u/2) tau''(c) - u tau''(u/2) <= 0."""
    return 2 * X.D1(v.u) - 2 * X.D1(v.u / 2) - v.u / 2 * X.D2(v.c) - v.u * X.D2(v.u / 2)


@_mech("mech_16", "u", 1)
def _m16(X, v):
    """u tau'(u) - 2u tau'(u/2) <= 0."""
    return v.u * X.D1(v.u) - 2 * v.u * X.D1(v.u / 2)


@_register("mech_17", "b c s", 2, ("b <= sc", lambda v: v.s * v.c - v.b))
def _m17(X, v):
    """Bound on the directional derivative of g by its value at the extreme b and s.

    With k = (1+s)/2 and m = (1-s)/2:
    m tau'(kc-b) + 2(1-s)(b+c) S1(c^2-2scb+b^2) - 2 tau'(mc) + k tau'(kc) - tau'(c) - (1-s)b tau''(mc)
      <= m tau'(c-b) + 2(1-s)(b+c) S1((c-b)^2) - 2 tau'(mc) - m tau'(c) - (1-s)b tau''((c-b)/2)
    """
    b, c, s = v.b, v.c, v.s
    k, m = (1 + s) / 2, (1 - s) / 2
    rhs = (
        m * X.D1(c - b)
        + 2 * (1 - s) * (b + c) * X.S1((c - b) ** 2)
        - 2 * X.D1(m * c)
        - m * X.D1(c)
        - (1 - s) * b * X.D2((c - b) / 2)
    )
    return [(_g_directional(X, b, c, s), rhs)]


# --- auxiliary facts about concave and convex functions ---------------------


@_register(
    "aux_redistri", "a b x y", 1,
    ("a >= b", lambda v: v.a - v.b), ("y >= x", lambda v: v.y - v.x), ("b >= y", lambda v: v.b - v.y),
)
def _aux_redistri(X, v):
    """Moving mass outward: x -> f(a+x) + f(b-x) for a >= b.

    Nonincreasing for concave f (checked with tau'), nondecreasing for convex
    f (checked with tau), and S is subadditive.
    """
    a, b, x, y = v.a, v.b, v.x, v.y
    return [
        (X.D1(a + y) + X.D1(b - y), X.D1(a + x) + X.D1(b - x)),
        (X.T(a + x) + X.T(b - x), X.T(a + y) + X.T(b - y)),
        (X.S(a + b), X.S(a) + X.S(b)),
    ]


@_register(
    "aux_six", "x1 x2 x3 x4 x5 x6", 0,
    ("max(x1..x4) <= max(x5, x6)", lambda v: np.maximum(v.x5, v.x6) - np.maximum.reduce([v.x1, v.x2, v.x3, v.x4])),
    ("x1+x2+x3+x4 >= x5+x6", lambda v: v.x1 + v.x2 + v.x3 + v.x4 - v.x5 - v.x6),
)
def _aux_six(X, v):
    """S(x5) + S(x6) <= S(x1) + S(x2) + S(x3) + S(x4) for the concave S = tau(sqrt(.))."""
    return [(X.S(v.x5) + X.S(v.x6), X.S(v.x1) + X.S(v.x2) + X.S(v.x3) + X.S(v.x4))]


@_register(
    "aux_extreme", "a b c d", 1,
    ("a >= b", lambda v: v.a - v.b), ("b >= c", lambda v: v.b - v.c), ("c >= d", lambda v: v.c - v.d),
    ("a + d <= b + c", lambda v: v.b + v.c - v.a - v.d),
)
def _aux_extreme(X, v):
    """tau'(a) + tau'(d) <= tau'(b) + tau'(c)."""
    return [(X.D1(v.a) + X.D1(v.d), X.D1(v.b) + X.D1(v.c))]


def _four_s(X, v):
    return X.S(v.a) - X.S(v.b) - X.S(v.c) + X.S(v.d)


@_register("f1", "a b c d", 0, ("a >= b", lambda v: v.a - v.b), ("d >= c", lambda v: v.d - v.c))
def _f1(X, v):
    """S(a) - S(b) - S(c) + S(d) <= 2 S((a - b + d - c)/2)."""
    return [(_four_s(X, v), 2 * X.S((v.a - v.b + v.d - v.c) / 2))]


@_register(
    "f2", "a b c d", 0,
    ("a >= b", lambda v: v.a - v.b), ("b >= c", lambda v: v.b - v.c), ("c >= d", lambda v: v.c - v.d),
    ("a + d >= b + c", lambda v: v.a + v.d - v.b - v.c),
)
def _f2(X, v):
    """S(a) - S(b) - S(c) + S(d) <= S(a - b - c + d)."""
    return [(_four_s(X, v), X.S(v.a - v.b - v.c + v.d))]


@_register("merging_simple", "a b c", 0, box={"a": (-BOX, BOX), "c": (-BOX, BOX)})
def _merging_simple(X, v):
    """tau(|a|) - tau(|c|) - tau(|a-b|) + tau(|c-b|) <= 2(tau((a-c+b)/2) - tau(|a-c-b|/2)) [a > c]."""
    a, b, c = v.a, v.b, v.c
    lhs = X.T(np.abs(a)) - X.T(np.abs(c)) - X.T(np.abs(a - b)) + X.T(np.abs(c - b))
    gap = np.maximum((a - c + b) / 2, 0.0)
    rhs = np.where(a > c, 2 * (X.T(gap) - X.T(np.abs(a - c - b) / 2)), 0.0)
    return [(lhs, rhs)]


# --- calculus facts for tau -------------------------------------------------


@_register("ccdiff_i", "x y", 1, ("x >= y", lambda v: v.x - v.y))
def _ccdiff_i(X, v):
    """(x-y)/2 (tau'(x) + tau'(y)) <= tau(x) - tau(y) <= (x-y) tau'((x+y)/2)."""
    x, y = v.x, v.y
    diff = X.T(x) - X.T(y)
    return [((x - y) / 2 * (X.D1(x) + X.D1(y)), diff), (diff, (x - y) * X.D1((x + y) / 2))]


@_register("ccdiff_ii", "x y", 1)
def _ccdiff_ii(X, v):
    """tau(x+y) - tau(|x-y|) <= 2 min(x,y) tau'(max(x,y))."""
    x, y = v.x, v.y
    return [(X.T(x + y) - X.T(np.abs(x - y)), 2 * np.minimum(x, y) * X.D1(np.maximum(x, y)))]


@_register("ccpoly_i", "x y", 2)
def _ccpoly_i(X, v):
    """tau(x) + y tau'(x) <= tau(x+y) <= tau(x) + y tau'(x) + y^2 tau''(x)/2."""
    x, y = v.x, v.y
    lin = X.T(x) + y * X.D1(x)
    return [(lin, X.T(x + y)), (X.T(x + y), lin + 0.5 * y * y * X.D2(x))]


@_register("ccpoly_ii", "x y", 2)
def _ccpoly_ii(X, v):
    """tau'(x) <= tau'(x+y) <= tau'(x) + y tau''(x)."""
    x, y = v.x, v.y
    return [(X.D1(x), X.D1(x + y)), (X.D1(x + y), X.D1(x) + y * X.D2(x))]


@_register("tranconcave_i", "x y", 1)
def _tranconcave_i(X, v):
    """tau'(x+y) <= tau'(x) + tau'(y) <= 2 tau'((x+y)/2)."""
    x, y = v.x, v.y
    mid = X.D1(x) + X.D1(y)
    return [(X.D1(x + y), mid), (mid, 2 * X.D1((x + y) / 2))]


@_register("tranconcave_ii", "x lam", 1, box={"lam": (0.0, BOX)})
def _tranconcave_ii(X, v):
    """tau'(lam x) >= lam tau'(x) for lam <= 1 and <= for lam >= 1."""
    x, lam = v.x, v.lam
    scaled, direct = lam * X.D1(x), X.D1(lam * x)
    small = lam <= 1
    return [(np.where(small, scaled, direct), np.where(small, direct, scaled))]


@_register("tranconcave_iii", "x y", 1, ("y >= x", lambda v: v.y - v.x))
def _tranconcave_iii(X, v):
    """x tau'(y) <= y tau'(x) for y >= x."""
    return [(v.x * X.D1(v.y), v.y * X.D1(v.x))]


@_register("transdtran", "x y", 1, ("x >= y", lambda v: v.x - v.y))
def _transdtran(X, v):
    """tau(sqrt(xy)) <= x tau'(y/2) for x >= y."""
    return [(X.T(np.sqrt(v.x * v.y)), v.x * X.D1(v.y / 2))]


@_register("ccsqrtprop", "x y", 0, ("y >= x", lambda v: v.y - v.x))
def _ccsqrtprop(X, v):
    """S = tau(sqrt(.)) is nonnegative, nondecreasing and midpoint concave."""
    sx, sy = X.S(v.x), X.S(v.y)
    return [(-sx, np.zeros_like(sx)), (sx, sy), ((sx + sy) / 2, X.S((v.x + v.y) / 2))]


LEMMA_IDS = tuple(REGISTRY)


# --- running ----------------------------------------------------------------


def get_lemma(lemma_id: str) -> Lemma:
    try:
        return REGISTRY[lemma_id]
    except KeyError:
        raise DomainError(f"unknown lemma {lemma_id!r}") from None


def _check_transform(lemma: Lemma, t: Transform):
    if not CLASS_S0 <= t.claims:
        raise PreconditionError(f"{t.name} does not claim membership in S0")
    if lemma.order > t.smoothness_order:
        raise CapabilityError(
            f"{lemma.lemma_id} needs derivatives of order {lemma.order}; {t.name} provides {t.smoothness_order}"
        )


def applicable(lemma_id: str, t: Transform) -> bool:
    lemma = get_lemma(lemma_id)
    return CLASS_S0 <= t.claims and lemma.order <= t.smoothness_order


def _hypothesis_mask(lemma: Lemma, v: SimpleNamespace) -> tuple[np.ndarray, list[np.ndarray]]:
    scale = np.maximum.reduce([np.abs(getattr(v, n)) for n in lemma.variables] + [np.ones_like(getattr(v, lemma.variables[0]))])
    oks = [fn(v) >= -HYPOTHESIS_TOL * scale for _, fn in lemma.hypotheses]
    mask = np.logical_and.reduce(oks) if oks else np.ones_like(scale, dtype=bool)
    return mask, oks


def _evaluate(lemma: Lemma, t: Transform, v: SimpleNamespace) -> tuple[np.ndarray, np.ndarray]:
    """Worst raw residual and worst scaled residual over the parts."""
    X = Calculus(t)
    raw, scaled = None, None
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        for lhs, rhs in lemma.parts(X, v):
            lhs = np.asarray(lhs, dtype=float)
            rhs = np.asarray(rhs, dtype=float)
            r = lhs - rhs
            sc = r / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
            sc = np.where(np.isnan(r), np.nan, sc)
            raw = r if raw is None else np.fmax(raw, r)
            scaled = sc if scaled is None else np.fmax(scaled, sc)
    return raw, scaled


def run_lemma(lemma_id: str, t: Transform, inputs: Mapping[str, float]) -> float:
    """lhs - rhs of the lemma at one input (maximum over its parts)."""
    lemma = get_lemma(lemma_id)
    _check_transform(lemma, t)
    missing = set(lemma.variables) - set(inputs)
    if missing:
        raise DomainError(f"{lemma_id} needs inputs {sorted(missing)}")
    v = SimpleNamespace(**{n: np.array([float(inputs[n])]) for n in lemma.variables})
    for n in lemma.variables:
        lo, hi = lemma.bounds(n)
        val = float(getattr(v, n)[0])
        if lemma.is_length(n) and val < 0:
            raise DomainError(f"{lemma_id}: {n} must be nonnegative")
        if n in COSINES and not lo <= val <= hi:
            raise DomainError(f"{lemma_id}: {n} must lie in [{lo}, {hi}]")
    _, oks = _hypothesis_mask(lemma, v)
    for (label, _), ok in zip(lemma.hypotheses, oks):
        if not ok[0]:
            raise DomainError(f"{lemma_id}: hypothesis '{label}' violated")
    raw, _ = _evaluate(lemma, t, v)
    return float(raw[0])


@dataclass(frozen=True)
class SampleReport:
    lemma_id: str
    transform: str
    n: int
    seed: int
    worst_residual: float
    worst_raw_residual: float
    worst_inputs: dict[str, float]
    draws: int
    nonfinite: int

    @property
    def passed(self) -> bool:
        return self.worst_residual <= RESIDUAL_TOL


def lemma_rng(seed: int, lemma_id: str, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, lemma, stream)."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(lemma_id.encode()), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def draw_inputs(lemma: Lemma, n: int, seed: int, scale: float = 1.0,
                max_rejection: float = 0.999) -> tuple[SimpleNamespace, int]:
    """n admissible inputs by rejection sampling from the lemma's box."""
    rng = lemma_rng(seed, lemma.lemma_id)
    batch = max(4 * n, 10_000)
    max_draws = int(np.ceil(n / (1 - max_rejection)))
    chunks: dict[str, list[np.ndarray]] = {k: [] for k in lemma.variables}
    got, drawn = 0, 0
    while got < n:
        if drawn >= max_draws:
            raise SamplingError(
                f"{lemma.lemma_id}: acceptance {got}/{drawn} is below {1 - max_rejection:.1e}"
            )
        cols = {}
        for name in lemma.variables:
            lo, hi = lemma.bounds(name)
            col = rng.uniform(lo, hi, batch)
            if lemma.is_length(name):
                col = np.where(col == 0.0, hi, col) * scale
            cols[name] = col
        drawn += batch
        v = SimpleNamespace(**cols)
        mask, _ = _hypothesis_mask(lemma, v)
        for name in lemma.variables:
            chunks[name].append(cols[name][mask])
        got += int(mask.sum())
    out = SimpleNamespace(**{k: np.concatenate(c)[:n] for k, c in chunks.items()})
    return out, drawn


def sample_lemma(lemma_id: str, t: Transform, n: int = 10_000, seed: int = 42, scale: float = 1.0) -> SampleReport:
    """Worst residual of the lemma over n admissible random inputs.

    Inputs where the residual is not a number (for instance 0 * inf at a
    degenerate radicand) are counted in ``nonfinite`` and excluded.
    """
    if n < 1:
        raise DomainError("n must be positive")
    lemma = get_lemma(lemma_id)
    _check_transform(lemma, t)
    v, drawn = draw_inputs(lemma, n, seed, scale)
    raw, scaled = _evaluate(lemma, t, v)
    bad = np.isnan(scaled)
    ranked = np.where(bad, -np.inf, scaled)
    i = int(np.argmax(ranked))
    return SampleReport(
        lemma_id=lemma_id,
        transform=t.name,
        n=n,
        seed=seed,
        worst_residual=float(ranked[i]),
        worst_raw_residual=float(raw[i]),
        worst_inputs={k: float(getattr(v, k)[i]) for k in lemma.variables},
        draws=drawn,
        nonfinite=int(bad.sum()),
    )


def suite_transforms() -> list[Transform]:
    return [power(1.0), power(1.5), power(2.0), huber(1.0), pseudo_huber(1.0), log_cosh()]


def run_suite(n: int = 10_000, seed: int = 42, transforms: Sequence[Transform] | None = None,
              lemma_ids: Sequence[str] | None = None) -> list[SampleReport]:
    """sample_lemma for every applicable (lemma, transform) pair."""
    transforms = suite_transforms() if transforms is None else list(transforms)
    ids = LEMMA_IDS if lemma_ids is None else tuple(lemma_ids)
    return [sample_lemma(lid, t, n, seed) for lid in ids for t in transforms if applicable(lid, t)]


# --- derivative consistency -------------------------------------------------


@dataclass(frozen=True)
class DerivativeReport:
    transform: str
    max_rel_error: dict[int, float]
    second_nonneg: bool
    second_nonincreasing: bool
    third_nonpos: bool
    tol: float

    @property
    def pattern_ok(self) -> bool:
        return self.second_nonneg and self.second_nonincreasing and self.third_nonpos

    @property
    def consistent(self) -> bool:
        return all(e <= self.tol for e in self.max_rel_error.values())


def derivative_consistency(t: Transform, n: int = 1000, seed: int = 42, lo: float = 0.05,
                           hi: float = BOX, tol: float = 1e-7) -> DerivativeReport:
    """Closed forms against central differences of the next lower closed form.

    Also checks the sign pattern tau'' >= 0 nonincreasing and tau''' <= 0 on
    the samples, using finite differences where closed forms are missing.
    """
    if not t.has_closed_form(1):
        raise CapabilityError(f"{t.name} has no closed-form derivatives")
    rng = lemma_rng(seed, "derivative_consistency", zlib.crc32(t.name.encode()))
    x = np.sort(rng.uniform(lo, hi, n))
    x = x[np.all(np.abs(x[:, None] - np.array(t.kinks or [np.inf])[None, :]) > 1e-3, axis=1)]
    errors = {}
    for k in (1, 2, 3):
        if not t.has_closed_form(k):
            continue
        lower = t.f if k == 1 else t.derivs[k - 2]
        if k > 1 and not t.has_closed_form(k - 1):
            continue
        fd = _nested_fd(lower, x, 1)
        exact = np.asarray(t.deriv(x, k))
        errors[k] = float(np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))))
    d2 = np.asarray(t.deriv(x, 2, fallback=True))
    d3 = np.asarray(t.deriv(x, 3, fallback=True))
    s2 = max(1.0, float(np.max(np.abs(d2))))
    return DerivativeReport(
        transform=t.name,
        max_rel_error=errors,
        second_nonneg=bool(np.all(d2 >= -1e-6 * s2)),
        second_nonincreasing=bool(np.all(np.diff(d2) <= 1e-6 * s2)),
        third_nonpos=bool(np.all(d3 <= 1e-6 * max(1.0, float(np.max(np.abs(d3)))))),
        tol=tol,
    )
