"""Inequalities evaluated on four-point configurations.

Every check accepts a single :class:`QuadConfig` or a batch as an ``(n, 6)``
array in column order ``yq, yp, zq, zp, qp, yz``.  For batches the fields of
the returned :class:`CheckResult` are arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import CapabilityError, DomainError, PreconditionError
from .geometry import QuadConfig
from .transforms import Transform, extend_zero

Configs = Union[QuadConfig, np.ndarray]

REL_TOL = 1e-9
ABS_TOL = 1e-12


@dataclass(frozen=True)
class CheckResult:
    holds: bool | np.ndarray
    lhs: float | np.ndarray
    rhs: float | np.ndarray
    margin: float | np.ndarray
    tolerance_used: float | np.ndarray
    applicable: bool = True

    @property
    def all_hold(self) -> bool:
        return bool(np.all(self.holds))

    @property
    def worst_margin(self) -> float:
        return float(np.min(self.margin))


def _cols(cfg: Configs) -> tuple[tuple[np.ndarray, ...], bool]:
    if isinstance(cfg, QuadConfig):
        return tuple(np.float64(v) for v in cfg.as_tuple()), True
    D = np.asarray(cfg, dtype=float)
    if D.shape[-1] != 6:
        raise DomainError("configurations need six columns")
    if (D < 0).any():
        raise DomainError("distances must be nonnegative")
    return tuple(D[..., i] for i in range(6)), False


def tolerance(lhs, rhs, rel: float = REL_TOL):
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)
    return np.maximum(rel * scale, ABS_TOL)


def _result(lhs, rhs, scalar: bool, rel: float = REL_TOL) -> CheckResult:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margin = rhs - lhs
    tol = tolerance(lhs, rhs, rel)
    holds = margin >= -tol
    if scalar:
        return CheckResult(bool(holds), float(lhs), float(rhs), float(margin), float(tol))
    return CheckResult(holds, lhs, rhs, margin, tol)


def quad_lhs(t: Transform, cfg: Configs):
    """tau(yq) - tau(yp) - tau(zq) + tau(zp)."""
    (yq, yp, zq, zp, _, _), scalar = _cols(cfg)
    out = t.eval(yq) - t.eval(yp) - t.eval(zq) + t.eval(zp)
    return float(out) if scalar else out


def check_quad2(cfg: Configs) -> CheckResult:
    """yq^2 - yp^2 - zq^2 + zp^2 <= 2 qp yz."""
    (yq, yp, zq, zp, qp, yz), scalar = _cols(cfg)
    return _result(yq**2 - yp**2 - zq**2 + zp**2, 2 * qp * yz, scalar)


def _tau_prime(t: Transform, x):
    """Closed-form tau'; the right limit at 0 is used where the closed form is not finite."""
    if not t.has_closed_form(1):
        raise CapabilityError(f"{t.name} has no closed-form first derivative")
    x = np.asarray(x, dtype=float)
    out = np.asarray(t.deriv(x, 1), dtype=float)
    bad = (x == 0) & ~np.isfinite(out)
    if bad.any():
        out = np.where(bad, extend_zero(t)[1], out)
    return out


def check_quadtran(t: Transform, cfg: Configs, L: float) -> CheckResult:
    """Quadruple inequality: quad_lhs <= L * qp * tau'(yz)."""
    if not L >= 0:
        raise DomainError("L must be nonnegative")
    (_, _, _, _, qp, yz), scalar = _cols(cfg)
    return _result(quad_lhs(t, cfg), L * qp * _tau_prime(t, yz), scalar)


def check_power_sharp(alpha: float, cfg: Configs) -> CheckResult:
    """quad_lhs for x^alpha against alpha 2^(2-alpha) qp yz^(alpha-1)."""
    from .transforms import power

    (_, _, _, _, qp, yz), scalar = _cols(cfg)
    t = power(alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = alpha * 2.0 ** (2.0 - alpha) * qp * np.where(yz > 0, yz ** (alpha - 1.0), 1.0 if alpha == 1 else 0.0)
    return _result(quad_lhs(t, cfg), rhs, scalar)


def _require_zero(t: Transform):
    if "zero_at_zero" not in t.claims:
        raise PreconditionError(f"{t.name} does not claim tau(0) = 0")


def check_symmetric(t: Transform, cfg: Configs) -> CheckResult:
    """quad_lhs <= tau(qp) + tau(yz), valid in inner-product spaces."""
    _require_zero(t)
    (_, _, _, _, qp, yz), scalar = _cols(cfg)
    return _result(quad_lhs(t, cfg), t.eval(qp) + t.eval(yz), scalar)


def check_parallelogram(t: Transform, u_norm, v_norm, sum_norm, diff_norm) -> CheckResult:
    """tau(|u+v|) + tau(|u-v|) <= 2 tau(|u|) + 2 tau(|v|)."""
    _require_zero(t)
    scalar = np.ndim(u_norm) == 0
    lhs = t.eval(sum_norm) + t.eval(diff_norm)
    rhs = 2 * t.eval(u_norm) + 2 * t.eval(v_norm)
    return _result(lhs, rhs, scalar)


def check_ptolemy(cfg: Configs, form: str = "classical") -> CheckResult:
    """Ptolemy's inequality with diagonals yq, zp.

    ``as_printed`` evaluates yq*zp + yp*zq <= qp*yz, which fails already on the
    regular simplex and is kept only for comparison.
    """
    (yq, yp, zq, zp, qp, yz), scalar = _cols(cfg)
    if form == "classical":
        return _result(yq * zp, yp * zq + qp * yz, scalar)
    if form == "as_printed":
        return _result(yq * zp + yp * zq, qp * yz, scalar)
    raise DomainError(f"unknown Ptolemy form {form!r}")


def check_roundness(cfg: Configs, alpha: float) -> CheckResult:
    """yq^a - yp^a - zq^a + zp^a <= qp^a + yz^a."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    (yq, yp, zq, zp, qp, yz), scalar = _cols(cfg)
    return _result(yq**alpha - yp**alpha - zq**alpha + zp**alpha, qp**alpha + yz**alpha, scalar)


def check_karamata(f: Transform, a: Sequence[float], b: Sequence[float]) -> CheckResult:
    """Karamata's inequality for nondecreasing convex f under weak majorization.

    When some partial sum of ``a`` exceeds that of ``b`` the inequality is not
    applicable; the result then has ``applicable=False`` and ``holds=True``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("sequences must be one-dimensional of equal length")
    if (np.diff(a) > 0).any() or (np.diff(b) > 0).any():
        raise DomainError("sequences must be sorted in descending order")
    if not {"nondecreasing", "convex"} <= f.claims:
        raise PreconditionError(f"{f.name} is not claimed nondecreasing and convex")
    pa, pb = np.cumsum(a), np.cumsum(b)
    lhs, rhs = float(np.sum(f.eval(a))), float(np.sum(f.eval(b)))
    res = _result(lhs, rhs, True)
    if np.any(pa > pb + tolerance(pa, pb)):
        return CheckResult(True, lhs, rhs, res.margin, res.tolerance_used, applicable=False)
    return res


def karamata_from_config(f: Transform, cfg: QuadConfig) -> CheckResult:
    """Karamata applied to (yq, zp, 0, 0) against (qp, yz, yp, zq), both sorted."""
    a = sorted([cfg.yq, cfg.zp, 0.0, 0.0], reverse=True)
    b = sorted([cfg.qp, cfg.yz, cfg.yp, cfg.zq], reverse=True)
    return check_karamata(f, a, b)


def rhs_bound_chain(t: Transform, qp, yz, beta: float = 0.5) -> list:
    """The eight upper bounds (i)-(viii) on the quadruple left-hand side.

    (i)    2 min(qp,yz) tau'(max(qp,yz))
    (ii)   2 qp^b yz^(1-b) tau'(qp^(1-b) yz^b)
    (iii)  2 (b qp + (1-b) yz) tau'((1-b) qp + b yz)
    (iv)   2 sqrt(qp yz) tau'(sqrt(qp yz))
    (v)    (qp + yz) tau'((qp + yz)/2)
    (vi)   4 tau(sqrt(qp yz))
    (vii)  4 tau((qp + yz)/2)
    (viii) 2 tau(qp) + 2 tau(yz)
    """
    _require_zero(t)
    if not 0 <= beta <= 1:
        raise DomainError("beta must lie in [0, 1]")
    qp = np.asarray(qp, dtype=float)
    yz = np.asarray(yz, dtype=float)
    if (qp < 0).any() or (yz < 0).any():
        raise DomainError("distances must be nonnegative")
    d = lambda x: _tau_prime(t, x)  # noqa: E731
    g = np.sqrt(qp * yz)
    m = 0.5 * (qp + yz)
    vals = [
        2 * np.minimum(qp, yz) * d(np.maximum(qp, yz)),
        2 * qp**beta * yz ** (1 - beta) * d(qp ** (1 - beta) * yz**beta),
        2 * (beta * qp + (1 - beta) * yz) * d((1 - beta) * qp + beta * yz),
        2 * g * d(g),
        (qp + yz) * d(m),
        4 * t.eval(g),
        4 * t.eval(m),
        2 * t.eval(qp) + 2 * t.eval(yz),
    ]
    if qp.ndim == 0 and yz.ndim == 0:
        return [float(v) for v in vals]
    return [np.asarray(v, dtype=float) for v in vals]


CHAIN_ORDERINGS = ((0, 1), (1, 2), (3, 5), (5, 7), (4, 6), (6, 7))
