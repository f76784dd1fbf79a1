"""Four-point metric configurations.

Points are always labelled y, z, q, p.  A configuration is stored as its six
pairwise distances in the fixed column order ``yq, yp, zq, zp, qp, yz``.
The (a, b, c, r, s, t) parametrization places p at the origin of three
Euclidean triangles glued along the segments to p:

    zp = a, yp = c, qp = b,
    yz^2 = a^2 + c^2 - 2tac,  yq^2 = c^2 + b^2 - 2scb,  zq^2 = a^2 + b^2 - 2rab.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ConstructionError, DomainError

COLUMNS = ("yq", "yp", "zq", "zp", "qp", "yz")
RADICAND_TOL = 1e-12
TRIANGLE_TOL = 1e-9

# (long side, short side, short side) index triples into COLUMNS for the
# twelve triangle inequalities of the four faces y-z-q, y-z-p, y-q-p, z-q-p.
_FACES = {
    "yzq": (5, 0, 2),
    "yzp": (5, 1, 3),
    "yqp": (0, 1, 4),
    "zqp": (2, 3, 4),
}
_TRIANGLES = [
    (face[i], face[(i + 1) % 3], face[(i + 2) % 3]) for face in _FACES.values() for i in range(3)
]


@dataclass(frozen=True)
class QuadConfig:
    yq: float
    yp: float
    zq: float
    zp: float
    qp: float
    yz: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise DomainError(f"distances must be finite and nonnegative: {vals}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.yq, self.yp, self.zq, self.zp, self.qp, self.yz)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    def as_dict(self) -> dict[str, float]:
        return dict(zip(COLUMNS, self.as_tuple()))

    @classmethod
    def from_sequence(cls, values: Iterable[float]) -> "QuadConfig":
        vals = [float(v) for v in values]
        if len(vals) != 6:
            raise DomainError("a configuration has exactly six distances")
        return cls(*vals)

    def swap_yz(self) -> "QuadConfig":
        """Exchange the labels y and z."""
        return QuadConfig(self.zq, self.zp, self.yq, self.yp, self.qp, self.yz)

    def swap_diagonals(self) -> "QuadConfig":
        """Exchange the pairs (y, z) and (q, p): y->q, z->p, q->y, p->z."""
        return QuadConfig(self.yq, self.zq, self.yp, self.zp, self.yz, self.qp)


@dataclass(frozen=True)
class ParamFour:
    a: float
    b: float
    c: float
    r: float
    s: float
    t: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v}")
        for name in ("r", "s", "t"):
            v = getattr(self, name)
            if not math.isfinite(v) or abs(v) > 1:
                raise DomainError(f"{name} must lie in [-1, 1], got {v}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c, self.r, self.s, self.t)

    def as_dict(self) -> dict[str, float]:
        return dict(zip("abcrst", self.as_tuple()))


def clamped_sqrt(radicand, scale=1.0):
    """sqrt with small negative radicands (floating-point noise) clamped to 0."""
    r = np.asarray(radicand, dtype=float)
    floor = -RADICAND_TOL * np.maximum(1.0, np.asarray(scale, dtype=float))
    if (r < floor).any():
        raise DomainError(f"negative radicand {r.min():.3e}")
    out = np.sqrt(np.maximum(r, 0.0))
    return float(out) if out.ndim == 0 else out


def cosine_side(a, b, s):
    """Third side of a triangle with sides a, b enclosing an angle of cosine s."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    # scale by the longer side so tiny or huge lengths neither underflow nor overflow
    m = np.maximum(a, b)
    safe = np.where(m > 0, m, 1.0)
    x, y = a / safe, b / safe
    out = m * np.asarray(clamped_sqrt(x * x + y * y - 2.0 * s * x * y, x * x + y * y))
    return float(out) if out.ndim == 0 else out


def three_point(a: float, b: float, s: float) -> tuple[float, float, float]:
    """(yp, qp, yq) for yp = a, qp = b and cosine s of the angle at p."""
    if not (a >= 0 and b >= 0) or not -1 <= s <= 1:
        raise DomainError("three_point needs a, b >= 0 and s in [-1, 1]")
    return float(a), float(b), float(cosine_side(a, b, s))


def constraint_margins(params: np.ndarray) -> np.ndarray:
    """RHS - LHS of the three gluing constraints for rows of (a,b,c,r,s,t)."""
    P = np.asarray(params, dtype=float)
    a, b, c, r, s, t = (P[..., i] for i in range(6))
    zq = cosine_side(a, b, r)
    yq = cosine_side(c, b, s)
    yz = cosine_side(a, c, t)
    m1 = b * b - r * a * b - s * c * b + zq * yq + t * a * c
    m2 = c * c - t * a * c - s * c * b + yz * yq + r * a * b
    m3 = a * a - r * a * b - t * a * c + zq * yz + s * c * b
    return np.stack([m1, m2, m3], axis=-1)


def _constraint_scale(params: np.ndarray) -> np.ndarray:
    P = np.asarray(params, dtype=float)
    return np.max(P[..., :3] ** 2, axis=-1)


def feasible_params(params: np.ndarray) -> np.ndarray:
    """Boolean mask of rows satisfying all three constraints within tolerance."""
    m = constraint_margins(params)
    tol = TRIANGLE_TOL * _constraint_scale(params)
    return np.all(m >= -tol[..., None], axis=-1)


def check_param_constraints(p: ParamFour) -> tuple[bool, float]:
    """Whether the parameters glue to a semimetric, and the worst margin."""
    P = np.array(p.as_tuple())
    m = constraint_margins(P)
    return bool(feasible_params(P)), float(m.min())


def four_point_array(params: np.ndarray) -> np.ndarray:
    """Distances (n, 6) for parameter rows (n, 6); no constraint check."""
    P = np.asarray(params, dtype=float)
    a, b, c, r, s, t = (P[..., i] for i in range(6))
    return np.stack(
        [cosine_side(c, b, s), c, cosine_side(a, b, r), a, b, cosine_side(a, c, t)], axis=-1
    )


def four_point(p: ParamFour) -> QuadConfig:
    P = np.array(p.as_tuple())
    m = constraint_margins(P)
    tol = TRIANGLE_TOL * _constraint_scale(P)
    bad = np.flatnonzero(m < -tol)
    if bad.size:
        i = int(bad[0])
        raise ConstructionError(
            f"constraint {i + 1} violated by {-m[i]:.3e} for {p.as_dict()}", index=i + 1
        )
    return QuadConfig.from_sequence(four_point_array(P))


def params_from_config(cfg: QuadConfig) -> ParamFour:
    """Invert the parametrization via the cosine law (cosines clipped to [-1, 1])."""
    a, c, b = cfg.zp, cfg.yp, cfg.qp

    def cosine(x, y, opposite):
        if x == 0 or y == 0:
            return 1.0
        return float(np.clip((x * x + y * y - opposite * opposite) / (2 * x * y), -1.0, 1.0))

    return ParamFour(a, b, c, cosine(a, b, cfg.zq), cosine(c, b, cfg.yq), cosine(a, c, cfg.yz))


def triangle_slacks(configs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slacks (n, 12) of the triangle inequalities and the per-face scales."""
    D = np.asarray(configs, dtype=float)
    slack = np.stack([D[..., j] + D[..., k] - D[..., i] for i, j, k in _TRIANGLES], axis=-1)
    scale = np.stack([np.maximum.reduce([D[..., i], D[..., j], D[..., k]]) for i, j, k in _TRIANGLES], axis=-1)
    return slack, scale


def valid_metric_mask(configs: np.ndarray) -> np.ndarray:
    slack, scale = triangle_slacks(configs)
    return np.all(slack >= -TRIANGLE_TOL * scale, axis=-1) & np.all(np.asarray(configs) >= 0, axis=-1)


def validate_metric(cfg: QuadConfig) -> tuple[bool, float]:
    """All twelve triangle inequalities, and the smallest slack."""
    D = cfg.as_array()
    slack, _ = triangle_slacks(D)
    return bool(valid_metric_mask(D)), float(slack.min())


def euclidean_configs(points: np.ndarray) -> np.ndarray:
    """Distances (n, 6) for point arrays of shape (n, 4, d) ordered y, z, q, p."""
    X = np.asarray(points, dtype=float)
    if not np.isfinite(X).all():
        raise DomainError("coordinates must be finite")
    y, z, q, p = (X[..., i, :] for i in range(4))

    def dist(u, v):
        return np.linalg.norm(u - v, axis=-1)

    return np.stack([dist(y, q), dist(y, p), dist(z, q), dist(z, p), dist(q, p), dist(y, z)], axis=-1)


def config_from_euclidean_points(points) -> QuadConfig:
    """Configuration of four points y, z, q, p in R^d."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != 4 or X.ndim != 2 or X.shape[1] < 1:
        raise DomainError("expected four points of a common dimension d >= 1")
    return QuadConfig.from_sequence(euclidean_configs(X))


def random_euclidean_points(n: int, dim: int = 3, seed: int = 42) -> np.ndarray:
    """n standard-normal quadruples in R^dim, shape (n, 4, dim)."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 4, dim))


def random_parallelograms(n: int, seed: int = 42) -> np.ndarray:
    """Parallelograms in R^2 with y - z = p - q, shape (n, 4, 2).

    yz and qp are parallel sides of equal length and yq, zp are the
    diagonals; the symmetric inequality is an identity for tau(x) = x^2 here.
    """
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, 2))
    u = rng.standard_normal((n, 2))
    v = rng.standard_normal((n, 2))
    return np.stack([q + u + v, q + v, q, q + u], axis=1)


# --- witness constructions -------------------------------------------------

FAMILIES = (
    "square",
    "kite",
    "triple_line",
    "collinear_gap",
    "collinear_sum",
    "rectangle_eps",
    "degenerate_pair",
)


@dataclass(frozen=True)
class WitnessFamily:
    family_id: str
    params: Mapping[str, float] = field(default_factory=dict)

    def to_spec(self) -> dict:
        return {"family": self.family_id, "params": dict(self.params)}

    @classmethod
    def from_spec(cls, spec: Mapping) -> "WitnessFamily":
        try:
            return cls(spec["family"], {k: float(v) for k, v in spec.get("params", {}).items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed witness spec: {exc}") from exc


def _need(params: Mapping[str, float], name: str, default: float | None = None) -> float:
    if name in params:
        return float(params[name])
    if default is None:
        raise DomainError(f"missing witness parameter {name!r}")
    return default


def _line(*coords: float) -> QuadConfig:
    return config_from_euclidean_points(np.array(coords, dtype=float)[:, None])


def witness_config(w: WitnessFamily) -> QuadConfig:
    """Named point constructions used as extremal examples.

    square(x): side x/sqrt(2), diagonals yz, qp of length x.
    kite(u, v): yq = yp = zp = u, zq = v with 0 < v <= 3u, placed symmetrically.
    triple_line(u, p=u/2): z = q = 0, y = u on a line.
    collinear_gap(u, v, eps): q = 0, p = eps, y = u, z = v.
    collinear_sum(u, v, eps): q = 0, p = eps, y = u, z = -v.
    rectangle_eps(eps): y=(0,0), z=(0,eps), q=(1,eps), p=(1,0).
    degenerate_pair(a): y = p and z = q at distance a.
    """
    fid, prm = w.family_id, w.params
    if fid == "square":
        x = _need(prm, "x", 1.0)
        if x < 0:
            raise DomainError("square needs x >= 0")
        h = x / math.sqrt(2.0)
        # y, q, z, p around the square so that yz and qp are diagonals
        pts = np.array([[0.0, 0.0], [h, h], [h, 0.0], [0.0, h]])
        return config_from_euclidean_points(pts)
    if fid == "kite":
        u, v = _need(prm, "u", 1.0), _need(prm, "v")
        if not (u > 0 and 0 < v <= 3 * u):
            raise DomainError("kite needs u > 0 and 0 < v <= 3u")
        cphi = (v - u) / (2 * u)
        sphi = math.sqrt(max(0.0, 1 - cphi * cphi))
        y = (-u / 2, 0.0)
        p = (u / 2, 0.0)
        q = (-u / 2 - u * cphi, u * sphi)
        z = (u / 2 + u * cphi, u * sphi)
        return config_from_euclidean_points(np.array([y, z, q, p]))
    if fid == "triple_line":
        u = _need(prm, "u", 1.0)
        pp = _need(prm, "p", u / 2)
        if not (u > 0 and pp >= 0):
            raise DomainError("triple_line needs u > 0 and p >= 0")
        return _line(u, 0.0, 0.0, pp)
    if fid in ("collinear_gap", "collinear_sum"):
        u, v, eps = _need(prm, "u"), _need(prm, "v"), _need(prm, "eps")
        if not (u > 0 and v > 0 and eps > 0):
            raise DomainError(f"{fid} needs u, v, eps > 0")
        if eps >= min(u, v):
            raise DomainError(f"{fid} needs eps < min(u, v)")
        z = v if fid == "collinear_gap" else -v
        return _line(u, z, 0.0, eps)
    if fid == "rectangle_eps":
        eps = _need(prm, "eps")
        if not eps > 0:
            raise DomainError("rectangle_eps needs eps > 0")
        return config_from_euclidean_points(np.array([[0.0, 0.0], [0.0, eps], [1.0, eps], [1.0, 0.0]]))
    if fid == "degenerate_pair":
        a = _need(prm, "a", 1.0)
        if not a >= 0:
            raise DomainError("degenerate_pair needs a >= 0")
        return _line(0.0, a, a, 0.0)
    raise DomainError(f"unknown witness family {fid!r}")


# --- CSV I/O ---------------------------------------------------------------


def read_config_csv(path) -> np.ndarray:
    """Rows of yq,yp,zq,zp,qp,yz; a header row is optional."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if [c.strip() for c in row] == list(COLUMNS):
                continue
            if len(row) != 6:
                raise DomainError(f"line {lineno}: expected 6 values, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DomainError(f"line {lineno}: {exc}") from exc
            QuadConfig.from_sequence(vals)
            rows.append(vals)
    if not rows:
        raise DomainError(f"{path}: no configurations")
    return np.array(rows)
