import numpy as np
import pytest

from massart_online.core import seeded_rng
from massart_online.optimizer import OgdState, ogd_update, project_ball, step_size
from massart_online.oracles import check_ogd_feasibility, check_ogd_regret


@pytest.mark.parametrize(
    "diameter,grad_bound,t,expected",
    [(2.0, 1.0, 100, 0.2), (2.0, 10.0, 4, 0.1), (1.0, 1.0, 1, 1.0)],
)
def test_step_size_values(diameter, grad_bound, t, expected):
    assert step_size(diameter, grad_bound, t) == pytest.approx(expected)


@pytest.mark.parametrize("diameter,grad_bound", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_step_size_rejects_nonpositive(diameter, grad_bound):
    with pytest.raises(ValueError):
        step_size(diameter, grad_bound, 10)


def test_project_ball_scales_outside_points():
    assert project_ball(np.array([3.0, 4.0]), 1.0) == pytest.approx(np.array([0.6, 0.8]))


def test_project_ball_identity_inside():
    w = np.array([0.1, -0.2])
    assert project_ball(w, 1.0) is w
    zero = np.zeros(3)
    assert project_ball(zero, 0.5) is zero


def test_project_ball_idempotent_and_closest():
    rng = seeded_rng(0)
    for _ in range(200):
        d = int(rng.integers(1, 6))
        w = rng.standard_normal(d) * 3
        radius = rng.uniform(0.2, 2.0)
        p = project_ball(w, radius)
        assert np.linalg.norm(p) <= radius + 1e-12
        assert project_ball(p, radius) == pytest.approx(p, abs=1e-15)
        # no feasible point is closer than the projection
        for _ in range(20):
            u = rng.standard_normal(d)
            u = u / max(np.linalg.norm(u), 1e-12) * rng.uniform(0, radius)
            assert np.linalg.norm(w - p) <= np.linalg.norm(w - u) + 1e-9


def test_ogd_update_plain_step():
    state = OgdState(w=np.zeros(2), step=0.5)
    out = ogd_update(state, np.array([1.0, 0.0]))
    assert out.w == pytest.approx(np.array([-0.5, 0.0]))
    assert out.round == 1


def test_ogd_update_zero_gradient_keeps_iterate():
    state = OgdState(w=np.array([0.3, 0.4]), step=0.5)
    out = ogd_update(state, np.zeros(2))
    assert out.w == pytest.approx(state.w)


def test_ogd_update_projection_fires():
    state = OgdState(w=np.array([1.0, 0.0]), step=1.0, radius=1.0)
    out = ogd_update(state, np.array([-2.0, 0.0]))
    assert out.w == pytest.approx(np.array([1.0, 0.0]))


def test_ogd_update_dimension_mismatch():
    state = OgdState(w=np.zeros(3), step=0.1)
    with pytest.raises(ValueError):
        ogd_update(state, np.zeros(2))


def test_ogd_update_accumulates_loss_and_rounds():
    state = OgdState(w=np.zeros(2), step=0.1)
    state = ogd_update(state, np.zeros(2), loss_value=1.5)
    state = ogd_update(state, np.zeros(2), loss_value=-0.5)
    assert state.round == 2
    assert state.cumulative_loss == pytest.approx(1.0)


def test_feasibility_oracle():
    assert check_ogd_feasibility(seed=1, n_runs=20, t_steps=100).passed


def test_regret_oracle_small_horizons():
    result = check_ogd_regret(horizons=(100, 1_000, 10_000))
    assert result.passed, result.detail
