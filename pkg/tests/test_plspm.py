import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plsagent.plspm import (
    ModelSpecError,
    PathModel,
    SingularMatrixError,
    composite_reliability,
    fit,
    load_model,
    ols,
    paper_model,
    total_effects,
    validate,
)
from plsagent.survey import ResponseMatrix
from plsagent.synthetic import chain_data, survey_responses


def reference_pls(frame, model, tol=1e-12, max_iter=1000):
    """Textbook loop implementation: lstsq, corrcoef, explicit sums."""
    x = frame[list(model.items)].to_numpy(float)
    x = (x - x.mean(0)) / x.std(0)
    items = list(model.items)
    blocks = [[items.index(i) for i in b] for _, b in model.expanded_blocks()]
    names = model.latents
    q = len(names)
    pred = {j: [i for i in range(q) if (names[i], names[j]) in model.structural_paths] for j in range(q)}
    succ = {j: [k for k in range(q) if (names[j], names[k]) in model.structural_paths] for j in range(q)}

    def score(k, w):
        s = x[:, blocks[k]] @ w
        s = (s - s.mean()) / s.std()
        if np.corrcoef(s, x[:, blocks[k]].sum(1))[0, 1] < 0:
            s = -s
        return s

    w = [np.ones(len(b)) for b in blocks]
    w = [wk / (x[:, blocks[k]] @ wk).std() for k, wk in enumerate(w)]
    for _ in range(max_iter):
        v = [score(k, w[k]) for k in range(q)]
        new = []
        for j in range(q):
            z = np.zeros(len(x))
            if pred[j]:
                coef = np.linalg.lstsq(np.column_stack([v[i] for i in pred[j]]), v[j], rcond=None)[0]
                for c, i in zip(coef, pred[j]):
                    z += c * v[i]
            for k in succ[j]:
                z += np.corrcoef(v[j], v[k])[0, 1] * v[k]
            z = (z - z.mean()) / z.std()
            wk = np.array([np.mean(x[:, p] * z) for p in blocks[j]])
            if np.corrcoef(x[:, blocks[j]] @ wk, x[:, blocks[j]].sum(1))[0, 1] < 0:
                wk = -wk
            new.append(wk / (x[:, blocks[j]] @ wk).std())
        done = max(np.abs(a - b).max() for a, b in zip(new, w)) < tol
        w = new
        if done:
            break
    v = np.column_stack([score(k, w[k]) for k in range(q)])
    paths = {}
    for j in range(q):
        if pred[j]:
            coef = np.linalg.lstsq(v[:, pred[j]], v[:, j], rcond=None)[0]
            for c, i in zip(coef, pred[j]):
                paths[(names[i], names[j])] = c
    return w, paths


def test_perfect_correlation_single_indicators():
    x = np.arange(20.0) % 7
    frame = pd.DataFrame({"a": x, "b": x})
    model = PathModel((("A", ("a",)), ("B", ("b",))), (("A", "B"),))
    est = fit(frame, model)
    assert est.path("A", "B") == pytest.approx(1.0, abs=1e-12)
    assert est.loadings[0][0] == pytest.approx(1.0)
    assert est.loadings[1][0] == pytest.approx(1.0)
    rep = validate(est, frame)
    assert rep.ave["A"] == pytest.approx(1.0)
    assert rep.passes["A"]["a"]


def test_matches_reference_on_paper_model():
    data = survey_responses(n=162, seed=11)
    frame = data.to_frame()
    model = paper_model()
    est = fit(data, model, tol=1e-12, max_iter=1000)
    w_ref, p_ref = reference_pls(frame, model)
    for a, b in zip(est.outer_weights, w_ref):
        np.testing.assert_allclose(a, b, atol=1e-8)
    for key, val in p_ref.items():
        assert est.path(*key) == pytest.approx(val, abs=1e-8)


def test_paper_topology_has_five_paths():
    est = fit(survey_responses(seed=2), paper_model())
    assert set(est.paths) == {
        ("Humanization", "SelfEsteem"),
        ("Humanization", "SelfRealization"),
        ("Humanization", "Cooperation"),
        ("Humanization", "PBL"),
        ("PBL", "Learning"),
    }
    nonzero = np.argwhere(est.path_coefficients != 0)
    assert len(nonzero) == 5
    assert est.converged
    hum = dict(est.model.expanded_blocks())["Humanization"]
    assert len(hum) == 15


def test_scores_standardized_and_deterministic():
    frame, model = chain_data(n=300, seed=4)
    a, b = fit(frame, model), fit(frame, model)
    assert np.all(np.abs(a.scores.mean(0)) < 1e-8)
    assert np.all(np.abs(a.scores.std(0) - 1) < 1e-8)
    assert a.weight_history == b.weight_history
    np.testing.assert_array_equal(a.scores, b.scores)


def test_single_predictor_beta_is_correlation():
    frame, model = chain_data(n=250, seed=9)
    est = fit(frame, model)
    r = np.corrcoef(est.scores[:, 0], est.scores[:, 1])[0, 1]
    assert abs(est.path("X", "Y") - r) < 1e-10
    assert est.r_squared["Y"] == pytest.approx(r**2)


def test_monte_carlo_recovery():
    betas = [fit(*chain_data(n=2000, seed=s)).path("X", "Y") for s in range(20)]
    assert abs(np.mean(betas) - 0.6) <= 0.05


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["X", "Y"]))
def test_sign_flip_of_block(seed, block):
    frame, model = chain_data(n=120, seed=seed)
    est = fit(frame, model)
    flipped = frame.copy()
    cols = dict(model.blocks)[block]
    flipped[list(cols)] *= -1
    est2 = fit(flipped, model)
    assert abs(est2.path("X", "Y")) == pytest.approx(abs(est.path("X", "Y")), abs=1e-10)
    assert est2.path("X", "Y") == pytest.approx(-est.path("X", "Y"), abs=1e-10)


def test_total_effects_examples():
    b = np.zeros((3, 3))
    b[0, 1], b[1, 2] = 0.733, 0.725
    t = total_effects(b)
    assert t[0, 2] == pytest.approx(0.531425, abs=1e-12)
    assert abs(t[0, 2] - 0.532) < 1e-3
    single = np.array([[0, 0.5], [0, 0]])
    assert total_effects(single)[0, 1] == 0.5
    assert total_effects(np.zeros((2, 2)))[0, 1] == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_chain_total_effect_is_product(x, y):
    b = np.zeros((3, 3))
    b[0, 1], b[1, 2] = x, y
    assert abs(total_effects(b)[0, 2] - x * y) < 1e-12


def test_total_effects_diamond_sums_paths():
    b = np.zeros((4, 4))
    b[0, 1], b[0, 2], b[1, 3], b[2, 3], b[0, 3] = 0.5, 0.4, 0.3, 0.2, 0.1
    assert total_effects(b)[0, 3] == pytest.approx(0.1 + 0.5 * 0.3 + 0.4 * 0.2)


def test_composite_reliability_hand_value():
    # (4.5)^2 / ((4.5)^2 + 5 * 0.19)
    assert composite_reliability([0.9] * 5) == pytest.approx(20.25 / 21.2)
    assert round(composite_reliability([0.9] * 5), 4) == 0.9552


def test_validation_flags_uncorrelated_indicator(rng):
    n = 500
    lv = rng.standard_normal(n)
    frame = pd.DataFrame(
        {
            "a1": lv + 0.3 * rng.standard_normal(n),
            "a2": lv + 0.3 * rng.standard_normal(n),
            "a3": rng.standard_normal(n),
            "b1": lv + 0.5 * rng.standard_normal(n),
        }
    )
    model = PathModel((("A", ("a1", "a2", "a3")), ("B", ("b1",))), (("A", "B"),))
    rep = validate(fit(frame, model), frame)
    assert rep.passes["A"] == {"a1": True, "a2": True, "a3": False}
    assert rep.failing_indicators == [("A", "a3")]
    for lv_name in rep.latents:
        assert 0 <= rep.ave[lv_name] <= 1
        assert rep.fornell_larcker[rep.latents.index(lv_name), rep.latents.index(lv_name)] == pytest.approx(np.sqrt(rep.ave[lv_name]))
    assert set(rep.cross_loadings) == {"a1", "a2", "a3", "b1"}


def test_missing_rows_dropped_listwise():
    data = survey_responses(n=150, seed=3)
    rows = np.array(data.rows)
    rows[[0, 5], [2, 9]] = np.nan
    est = fit(ResponseMatrix(data.items, rows), paper_model())
    assert est.n_obs == 148


def test_nonconvergence_reported():
    est = fit(*chain_data(n=200, seed=1), max_iter=1, tol=1e-15)
    assert not est.converged
    assert est.iterations == 1


def test_singular_regression():
    x = np.arange(10.0)
    with pytest.raises(SingularMatrixError):
        ols(np.column_stack([x, 2 * x]), x)


def test_model_validation():
    with pytest.raises(ModelSpecError, match="cyclic"):
        PathModel((("A", ("a",)), ("B", ("b",))), (("A", "B"), ("B", "A")))
    with pytest.raises(ModelSpecError, match="self-path"):
        PathModel((("A", ("a",)),), (("A", "A"),))
    with pytest.raises(ModelSpecError, match="unknown"):
        PathModel((("A", ("a",)),), (("A", "Z"),))
    with pytest.raises(ModelSpecError, match="no indicators"):
        PathModel((("A", ()),), ())


def test_load_model_file(tmp_path):
    import yaml

    path = tmp_path / "m.yaml"
    path.write_text(yaml.safe_dump(paper_model().to_mapping(), sort_keys=False))
    assert load_model(path) == paper_model()
    path.write_text("blocks: {A: [a]}\nextra: 1\n")
    with pytest.raises(ModelSpecError):
        load_model(path)
