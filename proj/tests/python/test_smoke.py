import math

import numpy as np
import pytest

import flowplan


def test_transform_round_trip_and_sum():
    assert flowplan.harmonic(1.0) == 0.5
    assert flowplan.harmonic_inverse(flowplan.harmonic(3.0)) == pytest.approx(3.0, rel=1e-14)
    assert flowplan.harmonic_shift(flowplan.harmonic(2.0), 5.0) == pytest.approx(flowplan.harmonic(7.0), abs=1e-15)
    assert flowplan.harmonic_convex(flowplan.harmonic(4.0), flowplan.harmonic(2.0), 0.25) == pytest.approx(
        flowplan.harmonic(2.5), abs=1e-15
    )
    assert flowplan.kruzkov(math.inf) == 1.0
    with pytest.raises(ValueError):
        flowplan.harmonic(-1.0)


def test_nsga_helpers():
    assert flowplan.fast_non_dominated_sort([(1, 1), (2, 2), (0, 3)]) == [0, 1, 0]
    d = flowplan.crowding_distance([(0, 2), (1, 1), (2, 0)])
    assert d[0] == math.inf and d[1] == 2.0 and d[2] == math.inf
    assert flowplan.pareto_filter([(1, 2), (2, 1), (3, 3)]) == [0, 1]
    alphas = flowplan.log_spaced_alphas(3, 0.01, 1.0)
    assert alphas[0] == pytest.approx(0.01) and alphas[1] == pytest.approx(0.1) and alphas[2] == 1.0


def test_builtin_scenarios_and_errors():
    names = flowplan.builtin_scenarios()
    assert "ex3_vortex" in names and len(names) == 5
    assert '"ex1_obstacles"' in flowplan.scenario_json("ex1_obstacles")
    with pytest.raises(flowplan.ConfigError, match="ex3_vortex"):
        flowplan.Planner("no_such_scenario")
    with pytest.raises(ValueError):
        flowplan.Planner("ex3_vortex", grid_counts=[5, 5])


@pytest.fixture(scope="module")
def vortex():
    return flowplan.Planner("ex3_vortex", target_count=300)


def test_value_and_policy_iteration_agree(vortex):
    vi = vortex.solve("time")
    pi = vortex.solve("time", method="policy_iteration")
    assert vi["converged"] and pi["converged"]
    assert np.max(np.abs(vi["values"] - pi["values"])) <= 1e-7
    goal = vortex.goal_indices[0]
    assert vi["values"][goal] == 0.0
    mask = np.array(vortex.obstacle_mask)
    assert np.all(np.isinf(vi["cost_to_go"][mask]))
    assert vi["controls"].shape == (vortex.size, 2)


def test_evaluate_matches_solver(vortex):
    vi = vortex.solve(0.5)
    ev = vortex.evaluate(vi["controls"])
    assert ev["converged"]
    assert 0.0 < ev["avg_time"] < 1.0 and 0.0 < ev["avg_energy"] < 1.0


def test_cpi_front_and_rollout(vortex):
    result = vortex.cpi(alphas=[0.05, 0.3, 1.0])
    assert result["converged"]
    assert result["evaluations"] == 6 * (result["iterations"] + 1)
    members = result["members"]
    assert [m["alpha"] for m in members] == [0.05, 0.3, 1.0]
    fastest = members[-1]
    traj = vortex.rollout(fastest["controls"], [0.0, 0.9], time_field=fastest["time"])
    assert traj["reached_goal"] and not traj["hit_obstacle"]
    assert traj["states"].shape[1] == 2
    assert traj["t"][-1] == pytest.approx(traj["total_time"])


def test_mepi_is_seeded(vortex):
    a = vortex.mepi(population=6, generations=2, n_cp=2, seed=3)
    b = vortex.mepi(population=6, generations=2, n_cp=2, seed=3)
    assert [m["avg_time"] for m in a["population"]] == [m["avg_time"] for m in b["population"]]
    assert len(a["progress"]) == 3
    ranks = [a["population"][i]["rank"] for i in a["archive"]]
    assert ranks and all(r == 0 for r in ranks)


def test_rollout_from_goal_is_empty(vortex):
    controls = np.zeros((vortex.size, 2))
    traj = vortex.rollout(controls, [-0.5, 0.6], t_max=1.0)
    assert traj["reached_goal"] and len(traj["t"]) == 0 and traj["total_time"] == 0.0
    with pytest.raises(ValueError):
        vortex.rollout(np.zeros((3, 2)), [0.0, 0.9], t_max=1.0)
