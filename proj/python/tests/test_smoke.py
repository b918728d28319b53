import numpy as np
import pytest

import mcs


def test_region_roundtrip_and_geometry():
    r = mcs.Region("kind=ball\ncenter=0,0\nradius=1")
    assert r.kind == "ball"
    assert r.dimension == 2
    assert r.contains(np.array([0.5, 0.0]))
    assert not r.contains(np.array([2.0, 0.0]))
    assert r.dist_to_complement(np.array([0.0, 0.0])) == pytest.approx(1.0)
    b = r.boundary_point()
    assert not r.interior_contains(b)
    assert mcs.Region(str(r)).kind == "ball"
    assert mcs.task_region(1, 10).kind == "orthant"


def test_p_values_and_bh():
    p = mcs.conformal_p_values([0.0, 1.0, 2.0], [1.5, 3.0], seed=1)
    assert len(p) == 2
    assert all(0.0 < v <= 1.0 for v in p)
    # two of three calibration scores lie below 1.5
    assert 2 / 4 < p[0] <= 3 / 4
    assert p[1] == pytest.approx(1.0) or p[1] > 3 / 4
    selected, k, threshold = mcs.bh_select([0.01, 0.02, 0.9], 0.1)
    assert selected == [0, 1]
    assert k == 2
    assert threshold == pytest.approx(0.1 * 2 / 3)


def test_soft_rank_limits():
    r = mcs.soft_rank([0.3, -1.0, 2.0], 1e-6)
    assert np.allclose(r, [2.0, 1.0, 3.0])
    assert sum(mcs.soft_rank([0.3, -1.0, 2.0], 10.0)) == pytest.approx(6.0)


def test_simulate_then_select():
    data = mcs.simulate(setting=1, task=1, d=5, n_train=200, n_cal=200, m=40, seed=3)
    assert data["train"]["x"].shape == (200, 10)
    assert data["cal"]["y"].shape == (200, 5)
    out = mcs.select(
        data["train"]["x"], data["train"]["y"], data["cal"]["x"], data["cal"]["y"],
        data["test"]["x"], data["region"], q=0.3, seed=1,
    )
    assert len(out["p_values"]) == 40
    assert out["k_star"] == len(out["selected"])
    again = mcs.select(
        data["train"]["x"], data["train"]["y"], data["cal"]["x"], data["cal"]["y"],
        data["test"]["x"], data["region"], q=0.3, seed=1,
    )
    assert again["selected"] == out["selected"]


def test_select_rejects_bad_input():
    x = np.zeros((5, 1))
    with pytest.raises(ValueError):
        mcs.select(x, np.zeros((4, 2)), x, np.zeros((5, 2)), x, mcs.Region("kind=orthant\ncutoffs=0,0"))
    with pytest.raises(ValueError):
        mcs.select(x, np.zeros((5, 2)), x, np.zeros((5, 2)), x, mcs.Region("kind=orthant\ncutoffs=0,0"),
                   method="magic")


def test_benchmark_rows():
    rows = mcs.benchmark(d=2, methods=["mcs_dist", "oracle"], reps=3, n_train=100, n_cal=100, m=20)
    assert [r["method"] for r in rows] == ["mcs_dist", "oracle"]
    assert rows[1]["mean_fdr"] == 0.0
    assert rows[1]["mean_power"] == 1.0
    assert all(r["reps"] == 3 for r in rows)
