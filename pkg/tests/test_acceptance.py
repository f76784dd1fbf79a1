"""Acceptance criteria, one test each.

Every test prints a ``CRITERION k: PASS`` or ``CRITERION k: FAIL`` line to the
terminal (also under output capture).  Thresholds are the stated ones.
"""

import contextlib
import json
from decimal import Decimal, getcontext

import numpy as np
import pytest

from quadineq import constants as C
from quadineq import frechet as F
from quadineq import geometry as G
from quadineq import inequalities as I
from quadineq import lemmas as L
from quadineq import transforms as T
from quadineq.cli import dispatch

ALPHAS = (1.0, 1.25, 1.5, 1.75, 2.0)
BUILTINS = T.builtin_transforms()


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(k: int, title: str):
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  {title}")
    return run


@pytest.fixture(scope="module")
def corpus():
    return G.euclidean_configs(G.random_euclidean_points(100_000, 3, seed=42))


def test_criterion_01_power_constant(criterion):
    with criterion(1, "power quadruple constant alpha 2^(2-alpha)"):
        for alpha in ALPHAS:
            spec = C.RatioSpec.for_power("L", alpha)
            rep = C.refine_local(spec, C.grid_search(spec, resolution=17, scale=4.0, threads=4))
            bound = alpha * 2 ** (2 - alpha)
            assert rep.best_ratio <= bound * (1 + 1e-9), (alpha, rep.best_ratio, bound)
            witnesses = C.lower_bound_witnesses(T.power(alpha), 1.0, 1.0, 1e-3).configs.values()
            best = max(C.ratio(spec, cfg) or 0.0 for cfg in witnesses)
            assert best >= 2 - 1e-6
            if alpha in (1.0, 2.0):
                assert best == pytest.approx(2.0, abs=1e-12)


def test_criterion_02_main_theorem(criterion, corpus):
    with criterion(2, "quadruple inequality with L = 2 on 1e5 R^3 quadruples"):
        for t in BUILTINS:
            res = I.check_quadtran(t, corpus, 2.0)
            assert np.all(res.margin >= -1e-9), (t.name, float(res.margin.min()))


def test_criterion_03_symmetric(criterion, corpus):
    with criterion(3, "symmetric inequality; parallelogram equality for tau_2"):
        for t in BUILTINS:
            assert np.all(I.check_symmetric(t, corpus).holds), t.name
        para = G.euclidean_configs(G.random_parallelograms(10_000, seed=42))
        res = I.check_symmetric(T.power(2.0), para)
        assert np.all(res.holds)
        assert np.max(np.abs(res.margin)) <= 1e-10


def test_criterion_04_witnesses(criterion):
    with criterion(4, "lower-bound witness values and unit bound"):
        assert C.lower_bound_witnesses(T.power(1), 1.0, 1.0, 1e-3).values[0] == pytest.approx(2, abs=1e-10)
        v = C.lower_bound_witnesses(T.power(2), 1.0, 1.0, 1e-3).values
        assert v[0] == pytest.approx(1, abs=1e-10) and v[3] == pytest.approx(1, abs=1e-10)
        for alpha in ALPHAS:
            for u in (0.5, 1.0, 3.0):
                iv = C.lower_bound_witnesses(T.power(alpha), u, u, 1e-3).values[3]
                assert iv == pytest.approx(2 ** (2 - alpha), abs=1e-10)
        for t in BUILTINS:
            ub = C.unit_lower_bound(t, 1.0, eps=[1e-1, 1e-2, 1e-3, 1e-4])
            assert abs(ub.quotients[-1] - 1) <= 1e-3, t.name


def _probe_oracle(alpha: float, eps: float) -> float:
    """J for the rectangle family in 50-digit decimal arithmetic."""
    getcontext().prec = 50
    e = Decimal(eps)
    a = Decimal(alpha)
    num = (1 + e * e) ** (a / 2) - 1
    return float(num / e**a)


def test_criterion_05_divergence(criterion):
    with criterion(5, "divergence probe for alpha = 2.5 exceeds 1e3 at eps = 1e-4"):
        eps = [0.1 / 2**k for k in range(10)] + [1e-4]
        js = [C.divergence_probe(2.5, e)[1] for e in eps]
        for e, j in zip(eps, js):
            assert j == pytest.approx(_probe_oracle(2.5, e), rel=1e-9)
        assert all(b > a for a, b in zip(js, js[1:]))
        for e in eps:
            assert C.divergence_probe(2.0, e)[1] <= 1 + 1e-12
        # J(2.5, eps) behaves like 1.25 / sqrt(eps), about 125 here.
        assert js[-1] > 1e3, f"J(2.5, 1e-4) = {js[-1]:.6g}"


def test_criterion_06_lemma_suite(criterion):
    with criterion(6, "all lemmas, n = 1e4 per pair, residual <= 1e-8"):
        reports = L.run_suite(n=10_000, seed=42)
        assert len(reports) > len(L.LEMMA_IDS)
        bad = [(r.lemma_id, r.transform, r.worst_residual) for r in reports if not r.passed]
        assert not bad


def test_criterion_07_mollifier(criterion):
    with criterion(7, "mollified tau_1.5: membership, convergence, power scale"):
        t = T.power(1.5)
        x = np.geomspace(1e-2, 1e2, 81)
        for n in (1, 4, 16):
            assert T.check_membership(T.mollify(t, n)).ok, n
        dists = [float(np.max(np.abs(T.mollify(t, n)(x) - t(x)))) for n in (1, 2, 4, 8, 16)]
        assert all(b < a for a, b in zip(dists, dists[1:])), dists
        for n in (1, 2, 4, 8, 16):
            c = T.mollifier_power_scale(n, 1.5)
            assert np.exp(-1 / n) <= c <= np.exp(1 / n)


def test_criterion_08_bound_chain(criterion):
    with criterion(8, "right-hand-side bound chain orderings"):
        g = np.linspace(0.0, 4.0, 50)
        qp, yz = np.meshgrid(g, g)
        for t in BUILTINS:
            for beta in np.linspace(0, 1, 11):
                vals = I.rhs_bound_chain(t, qp, yz, beta)
                for i, j in I.CHAIN_ORDERINGS:
                    tol = 1e-10 * np.maximum(1.0, np.abs(vals[j]))
                    assert np.all(vals[i] <= vals[j] + tol), (t.name, beta, i, j)


def test_criterion_09_frechet(criterion):
    with criterion(9, "tau_2 mean identity and Gaussian rate slopes"):
        r = np.random.default_rng(2024)
        for _ in range(100):
            Y = r.normal(0, 2, (int(r.integers(2, 80)), int(r.integers(1, 4))))
            s = F.solve_mean(F.FrechetProblem(Y, T.power(2)))
            assert np.max(np.abs(s.minimizer - Y.mean(axis=0))) <= 1e-8
        for alpha in (2.0, 1.0):
            res = F.rate_experiment(T.power(alpha), "gaussian", [100, 400, 1600], reps=16, seed=42)
            assert -0.7 <= res.slope <= -0.3, (alpha, res.slope)


def test_criterion_10_determinism(criterion, tmp_path):
    with criterion(10, "byte-identical reports and thread-independent searches"):
        for cmd in (["lemmas", "--lemma", "reduii", "--n", "2000"],
                    ["verify", "--n", "2000", "--transform", "log_cosh"],
                    ["rate", "--n-list", "50,200", "--reps", "8"]):
            blobs = []
            out = tmp_path / f"{cmd[0]}.txt"
            for _ in range(2):
                assert dispatch([*cmd, "--seed", "7", "--output", str(out)]) == 0
                blobs.append(out.read_bytes())
            assert blobs[0] == blobs[1], cmd
        spec = C.RatioSpec.for_power("L", 1.5)
        one = C.refine_local(spec, C.grid_search(spec, resolution=9, threads=1), iterations=50)
        many = C.refine_local(spec, C.grid_search(spec, resolution=9, threads=4), iterations=50)
        assert json.dumps(one.to_json(), sort_keys=True) == json.dumps(many.to_json(), sort_keys=True)
