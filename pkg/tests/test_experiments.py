import itertools

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plsagent.abm import SimConfig
from plsagent.experiments import (
    FACTORS,
    ReplicationStats,
    bin_link_chance,
    eta_squared,
    generate_design,
    replicate,
    run_factorial,
    run_many,
    stabilization_analysis,
    sweep,
    sweep_summary,
    stabilization_table,
)

SMALL = SimConfig(grid_side=9)


def test_design_sizes():
    assert len(generate_design()) == 81
    assert len(generate_design(["a"])) == 3
    d = generate_design(["a", "b"])
    assert len(d) == 9
    assert d.points[0] == {"a": 2.0, "b": 2.0}
    assert d.points[1] == {"a": 2.0, "b": 5.0}
    assert d.points[-1] == {"a": 8.0, "b": 8.0}
    assert list(d.to_frame().columns) == ["a", "b"]


def test_design_errors():
    with pytest.raises(ValueError, match="duplicate"):
        generate_design(["a", "a"])
    with pytest.raises(ValueError):
        generate_design([])


def test_replication_stats():
    s = ReplicationStats.from_rates({}, [0.4, 0.6])
    assert s.mean == pytest.approx(0.5)
    assert s.sd == pytest.approx(0.141421356, abs=1e-6)
    assert s.cv == pytest.approx(0.282842712, abs=1e-6)
    c = ReplicationStats.from_rates({}, [0.3] * 7)
    assert c.sd == 0.0 and c.cv == 0.0
    z = ReplicationStats.from_rates({}, [0.0, 0.0])
    assert z.cv is None
    one = ReplicationStats.from_rates({}, [0.5])
    assert np.isnan(one.sd) and one.cv is None
    with pytest.raises(ValueError):
        ReplicationStats.from_rates({}, [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=40))
def test_replication_stats_match_pandas(rates):
    s = ReplicationStats.from_rates({}, rates)
    assert s.sd == pytest.approx(pd.Series(rates).std(ddof=1), abs=1e-12)


def test_eta_squared_extremes():
    df = pd.DataFrame({"a": [2, 2, 5, 5, 8, 8], "b": [2, 5, 8, 2, 5, 8], "diffusion_rate": [0.1, 0.1, 0.5, 0.5, 0.9, 0.9]})
    eta = eta_squared(df, ["a", "b"])
    assert eta["a"] == pytest.approx(1.0)
    const = df.assign(diffusion_rate=0.4)
    assert all(np.isnan(v) for v in eta_squared(const, ["a", "b"]).values())
    flat = pd.DataFrame(
        {"a": [2, 5, 8] * 2, "diffusion_rate": [0.2, 0.2, 0.2, 0.6, 0.6, 0.6]}
    )
    assert eta_squared(flat, ["a"])["a"] == pytest.approx(0.0, abs=1e-15)


def test_eta_squared_brute_force():
    rng = np.random.default_rng(4)
    rows = []
    for a, b in itertools.product([2, 5, 8], repeat=2):
        for r in range(4):
            rows.append({"a": a, "b": b, "diffusion_rate": 0.05 * a + 0.01 * b + rng.normal(0, 0.05)})
    df = pd.DataFrame(rows)
    y = df.diffusion_rate.to_numpy()
    ss_t = sum((v - y.mean()) ** 2 for v in y)
    for f in ("a", "b"):
        ss_b = 0.0
        for lvl in (2, 5, 8):
            grp = y[df[f].to_numpy() == lvl]
            ss_b += len(grp) * (grp.mean() - y.mean()) ** 2
        assert eta_squared(df, ["a", "b"])[f] == pytest.approx(ss_b / ss_t, rel=1e-12)


def test_degenerate_sweep_is_replicate():
    tbl = sweep("link_chance", [0.5], n_runs=6, base_seed=3, base=SMALL)
    rep = replicate(dict.fromkeys(FACTORS, 8.0) | {"link_chance": 0.5}, 6, 3, SMALL)
    np.testing.assert_array_equal(tbl.diffusion_rate.to_numpy(), rep.rates)


def test_humanization_sweep_cells():
    tbl = sweep("humanization", [2, 5, 8], n_runs=2, base=SMALL)
    summary = sweep_summary(tbl)
    assert len(summary) == 9
    assert set(summary.covariate) == {2.0, 5.0, 8.0}
    with pytest.raises(ValueError):
        sweep("gravity", [1], n_runs=1)
    with pytest.raises(ValueError):
        sweep("pbl", [], n_runs=1)


def test_link_chance_sweep_monotone():
    tbl = sweep("link_chance", [0.3, 0.5, 0.7], n_runs=60, base=SimConfig(grid_side=15))
    s = sweep_summary(tbl)
    m, se = s["mean"].to_numpy(), s["se"].to_numpy()
    for i in range(2):
        assert m[i + 1] >= m[i] - 2 * np.hypot(se[i], se[i + 1])


def test_worker_count_does_not_change_results():
    a = run_many(SMALL, 12, 5, workers=1)
    b = run_many(SMALL, 12, 5, workers=3)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_stabilization_nested_prefixes():
    stab = stabilization_analysis(run_counts=(1, 5, 10), base_seed=2, base=SMALL)
    assert len(stab) == 9
    full = replicate(dict.fromkeys(FACTORS, 5.0), 10, 2, SMALL)
    row = stab[(stab.design_point == "medium") & (stab.runs == 5)].iloc[0]
    assert row["mean"] == pytest.approx(full.rates[:5].mean())
    wide = stabilization_table(stab)
    assert wide.shape == (9, 5)
    with pytest.raises(ValueError):
        stabilization_analysis(run_counts=(5, 5), base=SMALL)


def test_factorial_table():
    d = generate_design(["cooperation", "pbl"])
    tbl = run_factorial(d, n_runs=3, base=SMALL)
    assert len(tbl) == 27
    assert list(tbl.columns) == ["point", "cooperation", "pbl", "run", "link_chance", "diffusion_rate"]
    assert tbl.link_chance.between(0.3, 0.7).all()


def test_bins():
    df = pd.DataFrame({"link_chance": [0.3, 0.39, 0.4, 0.7, 0.2]})
    out = bin_link_chance(df)
    assert out.bin_index.tolist() == [0, 0, 1, 3, -1]
