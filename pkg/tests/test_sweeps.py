import pytest

from dimilp import sweeps
from dimilp.netsim import diameter


def test_aggregate_flags_outliers():
    stats = sweeps.aggregate([1, 2, 3, 4, 100])
    assert stats["median"] == 3
    assert stats["q1"] == 2 and stats["q3"] == 4
    assert stats["outliers"] == [100]
    assert sweeps.aggregate([None]) == {"count": 0}


def test_spearman():
    assert sweeps.spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert sweeps.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)


def test_grid_positions():
    pts, spacing = sweeps.grid_positions(9, (0, 0), (10, 10))
    assert len(pts) == 9 and spacing == 5
    assert (0.0, 0.0) in pts and (10.0, 10.0) in pts


def test_assignment_setup_is_connected():
    setup = sweeps.assignment_setup(sweeps.loss_scenario())
    assert diameter(setup.model) >= 1
    assert sum(len(p) for p in setup.parts) >= setup.instance.n


def test_summarize_groups_in_order():
    rows = [{"k": 2, "rounds": 5}, {"k": 1, "rounds": 3}, {"k": 2, "rounds": 7}]
    table = sweeps.summarize(rows, "k")
    assert [t["k"] for t in table] == [2, 1]
    assert table[0]["median"] == 6


def test_loss_sweep_smoke():
    rows = list(sweeps.loss_sweep(reps=1, p_values=(0.0, 0.5)))
    assert all(r["status"] == "converged" for r in rows)
    assert all(0 <= r["final_cost"] - r["oracle_cost"] < 0.1 for r in rows)
