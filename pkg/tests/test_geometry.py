import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadineq import geometry as G
from quadineq.errors import ConstructionError, DomainError
from quadineq.inequalities import check_quad2

SQ2 = math.sqrt(2.0)

lengths = st.floats(0.0, 10.0)
cosines = st.floats(-1.0, 1.0)


def test_three_point_examples():
    assert G.three_point(3, 4, 0)[2] == pytest.approx(5.0)
    assert G.three_point(2.5, 1.0, 1)[2] == pytest.approx(1.5)
    assert G.three_point(1, 1, -1)[2] == pytest.approx(2.0)


def test_three_point_rejects_bad_cosine():
    with pytest.raises(DomainError):
        G.three_point(1, 1, 1.5)


def test_cosine_side_extreme_scales():
    assert G.cosine_side(1e-200, 2e-200, -1.0) == pytest.approx(3e-200)
    assert G.cosine_side(1e200, 1e200, 0.0) == pytest.approx(math.sqrt(2) * 1e200)


def test_radicand_clamp():
    assert G.clamped_sqrt(-1e-13) == 0.0
    with pytest.raises(DomainError):
        G.clamped_sqrt(-1e-6)


def test_four_point_examples():
    cfg = G.four_point(G.ParamFour(1, 1, 1, 0, 0, 0))
    np.testing.assert_allclose(cfg.as_tuple(), (SQ2, 1, SQ2, 1, 1, SQ2))
    cfg = G.four_point(G.ParamFour(1, 0, 1, 0.3, -0.7, 0))
    np.testing.assert_allclose(cfg.as_tuple(), (1, 1, 1, 1, 0, SQ2))
    cfg = G.four_point(G.ParamFour(1, 1, 1, 1, 1, 1))
    np.testing.assert_allclose(cfg.as_tuple(), (0, 1, 0, 1, 1, 0), atol=1e-15)


def test_param_constraints():
    ok, margin = G.check_param_constraints(G.ParamFour(1, 1, 1, 0, 0, 0))
    assert ok and margin > 0
    assert G.constraint_margins(np.array([1, 1, 1, 0, 0, 0.0]))[0] == pytest.approx(3.0)
    assert G.check_param_constraints(G.ParamFour(1, 1, 1, 1, 1, 1))[0]
    ok, margin = G.check_param_constraints(G.ParamFour(1, 0.1, 1, 1, 1, -1))
    assert not ok and margin < 0


def test_four_point_reports_violated_constraint():
    with pytest.raises(ConstructionError) as exc:
        G.four_point(G.ParamFour(1, 0.1, 1, 1, 1, -1))
    assert exc.value.index in (1, 2, 3)


def test_param_validation():
    with pytest.raises(DomainError):
        G.ParamFour(-1, 1, 1, 0, 0, 0)
    with pytest.raises(DomainError):
        G.ParamFour(1, 1, 1, 0, 2, 0)
    with pytest.raises(DomainError):
        G.QuadConfig(1, 1, 1, 1, 1, -1)


def test_euclidean_examples():
    sq = G.config_from_euclidean_points([[0, 0], [0, 1], [1, 1], [1, 0]])
    np.testing.assert_allclose(sq.as_tuple(), (SQ2, 1, 1, SQ2, 1, 1))
    line = G.config_from_euclidean_points([[0], [1], [3], [2]])
    np.testing.assert_allclose(line.as_tuple(), (3, 2, 2, 1, 1, 1))
    same = G.config_from_euclidean_points(np.zeros((4, 3)))
    assert same.as_tuple() == (0,) * 6


def test_euclidean_rejects_nonfinite():
    with pytest.raises(DomainError):
        G.config_from_euclidean_points([[0, 0], [0, np.nan], [1, 1], [1, 0]])


def test_validate_metric_examples():
    assert G.validate_metric(G.QuadConfig(1, 1, 1, 1, 1, 1))[0]
    ok, margin = G.validate_metric(G.QuadConfig(3, 1, 1, 1, 1, 1))
    assert not ok and margin == pytest.approx(-1.0)


@given(lengths, lengths, lengths, cosines, cosines, cosines)
def test_four_point_output_is_metric(a, b, c, r, s, t):
    p = G.ParamFour(a, b, c, r, s, t)
    if not G.check_param_constraints(p)[0]:
        return
    assert G.validate_metric(G.four_point(p))[0]


def test_four_point_metric_bulk(rng):
    P = np.column_stack([rng.uniform(0, 4, (100_000, 3)), rng.uniform(-1, 1, (100_000, 3))])
    P = P[G.feasible_params(P)]
    assert len(P) > 10_000
    assert G.valid_metric_mask(G.four_point_array(P)).all()


@given(st.lists(st.floats(-5, 5), min_size=12, max_size=12))
def test_round_trip_through_parameters(coords):
    cfg = G.config_from_euclidean_points(np.array(coords).reshape(4, 3))
    back = G.four_point_array(np.array(G.params_from_config(cfg).as_tuple()))
    np.testing.assert_allclose(back, cfg.as_array(), atol=1e-6 * max(1.0, max(cfg.as_tuple())))


def test_round_trip_precise(rng):
    D = G.euclidean_configs(G.random_euclidean_points(2000, 3, seed=5))
    for row in D[:200]:
        cfg = G.QuadConfig.from_sequence(row)
        back = G.four_point_array(np.array(G.params_from_config(cfg).as_tuple()))
        # cosines are recovered through arccos-free formulas, so well-separated points round trip tightly
        if min(cfg.yp, cfg.qp, cfg.zp) > 0.05:
            np.testing.assert_allclose(back, row, atol=1e-10)


def test_euclidean_corpus_satisfies_quad2():
    D = G.euclidean_configs(G.random_euclidean_points(100_000, 3, seed=42))
    assert G.valid_metric_mask(D).all()
    assert check_quad2(D).all_hold


def test_random_corpus_is_deterministic():
    a = G.random_euclidean_points(10, seed=7)
    b = G.random_euclidean_points(10, seed=7)
    np.testing.assert_array_equal(a, b)


def test_parallelograms_are_parallelograms():
    pts = G.random_parallelograms(1000, seed=3)
    y, z, q, p = (pts[:, i] for i in range(4))
    np.testing.assert_allclose(y - z, p - q, atol=1e-12)
    D = G.euclidean_configs(pts)
    np.testing.assert_allclose(D[:, 5], D[:, 4], rtol=1e-12)


def test_swaps():
    cfg = G.QuadConfig(1, 2, 3, 4, 5, 6)
    assert cfg.swap_yz().swap_yz() == cfg
    assert cfg.swap_diagonals().swap_diagonals() == cfg


# --- witnesses --------------------------------------------------------------


def test_square_witness():
    cfg = G.witness_config(G.WitnessFamily("square", {"x": 1.0}))
    h = 1 / SQ2
    np.testing.assert_allclose(cfg.as_tuple(), (h, h, h, h, 1, 1))


def test_rectangle_witness():
    cfg = G.witness_config(G.WitnessFamily("rectangle_eps", {"eps": 1.0}))
    np.testing.assert_allclose(sorted(cfg.as_tuple()), sorted((SQ2, 1, 1, SQ2, 1, 1)))
    cfg = G.witness_config(G.WitnessFamily("rectangle_eps", {"eps": 0.25}))
    # short sides qp, yz; diagonals yq, zp
    assert cfg.qp == pytest.approx(0.25) and cfg.yz == pytest.approx(0.25)
    assert cfg.yp == pytest.approx(1.0) and cfg.zq == pytest.approx(1.0)
    assert cfg.yq == pytest.approx(math.sqrt(1 + 0.25**2))
    assert cfg.zp == pytest.approx(math.sqrt(1 + 0.25**2))


def test_degenerate_pair_witness():
    cfg = G.witness_config(G.WitnessFamily("degenerate_pair", {"a": 1.0}))
    assert cfg.as_tuple() == (1, 0, 0, 1, 1, 1)


def test_collinear_witnesses():
    gap = G.witness_config(G.WitnessFamily("collinear_gap", {"u": 2, "v": 1, "eps": 0.1}))
    np.testing.assert_allclose(gap.as_tuple(), (2, 1.9, 1, 0.9, 0.1, 1))
    s = G.witness_config(G.WitnessFamily("collinear_sum", {"u": 2, "v": 1, "eps": 0.1}))
    np.testing.assert_allclose(s.as_tuple(), (2, 1.9, 1, 1.1, 0.1, 3))
    tl = G.witness_config(G.WitnessFamily("triple_line", {"u": 2}))
    np.testing.assert_allclose(tl.as_tuple(), (2, 1, 0, 1, 1, 2))


@pytest.mark.parametrize(
    "family, params",
    [
        ("rectangle_eps", {"eps": 0.0}),
        ("collinear_gap", {"u": 1, "v": 1, "eps": 2}),
        ("kite", {"u": 1, "v": 4}),
        ("square", {"x": -1}),
        ("nope", {}),
    ],
)
def test_witness_param_errors(family, params):
    with pytest.raises(DomainError):
        G.witness_config(G.WitnessFamily(family, params))


@given(
    st.sampled_from(G.FAMILIES),
    st.floats(0.05, 5.0),
    st.floats(0.05, 5.0),
    st.floats(0.001, 0.04),
)
def test_every_witness_is_metric(family, u, v, eps):
    params = {"x": u, "u": u, "v": min(v, 3 * u), "eps": eps, "a": u}
    cfg = G.witness_config(G.WitnessFamily(family, params))
    assert G.validate_metric(cfg)[0]


def test_witness_spec_round_trip():
    w = G.WitnessFamily("kite", {"u": 1.0, "v": 2.0})
    assert G.WitnessFamily.from_spec(w.to_spec()) == w


def test_read_config_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("yq,yp,zq,zp,qp,yz\n3,2,2,1,1,1\n1,1,1,1,1,1\n")
    np.testing.assert_array_equal(G.read_config_csv(p), [[3, 2, 2, 1, 1, 1], [1, 1, 1, 1, 1, 1]])
    p.write_text("3,2,2,1,1\n")
    with pytest.raises(DomainError):
        G.read_config_csv(p)
    p.write_text("3,2,2,1,1,-1\n")
    with pytest.raises(DomainError):
        G.read_config_csv(p)
