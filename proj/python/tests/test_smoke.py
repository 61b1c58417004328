"""Smoke tests for the flowcast extension module."""

import math

import numpy as np
import pytest

import flowcast as fc


@pytest.fixture(scope="module")
def field():
    return fc.gen_dataset(days=6, sensors=7, seed=5)


def test_version():
    assert fc.__version__


def test_synth_shapes(field):
    assert field.n_sensors() == 7
    assert field.n_times() == 6 * 288
    assert field.n_days() == 6
    speeds = np.asarray(field.speeds)
    assert speeds.shape == (7, 6 * 288)
    assert speeds.min() >= 0.0


def test_csv_round_trip(tmp_path, field):
    path = str(tmp_path / "speeds.csv")
    fc.export_speed_csv(field, path)
    loaded = fc.load_speed_csv(path)
    assert loaded.sensor_ids == field.sensor_ids
    np.testing.assert_array_equal(np.asarray(loaded.speeds),
                                  np.asarray(field.speeds))


def test_lag_design_and_split(field):
    design = fc.build_lag_design(field, 4, 2, [3], True)
    assert design.rows() == 6 * (288 - 3 - 2)
    assert design.cols() == 7 * 4
    X = np.asarray(design.X)
    np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose((X**2).mean(axis=0), 1.0, atol=1e-9)
    pairs = design.column_map
    assert len(set(pairs)) == 7 * 4
    train, test = fc.split_train_test(design)
    assert train.rows() + test.rows() == design.rows()


def test_filters():
    series = [0.0, 0.0, 0.0, 100.0, 0.0, 0.0, 0.0]
    assert fc.median_filter(series, 3) == [0.0] * 7
    assert fc.ewma([0.0, 10.0], 0.5) == [0.0, 5.0]
    with pytest.raises(ValueError):
        fc.ewma([1.0], 2.0)


def test_trend_filter():
    rng = np.random.default_rng(1)
    series = list(50 + 10 * np.sin(np.arange(80) * 0.2) + rng.normal(size=80))
    fit0 = fc.trend_filter(series, 0.0, 2)
    assert fit0.fitted == series
    lam = fc.trend_filter_lambda_max(series, 2)
    fit = fc.trend_filter(series, lam * 1.01, 2)
    second_diff = np.diff(np.asarray(fit.fitted), n=2)
    assert np.abs(second_diff).max() < 1e-6


def test_lasso_and_var(field):
    design = fc.build_lag_design(field, 3, 2, [3], True)
    X = np.asarray(design.X)
    y = np.asarray(design.y)[:, 0]
    lam = fc.lambda_max(X, y)
    coef, intercept = fc.lasso_fit(X, y, lam * 1.001)
    assert np.all(coef == 0.0)
    assert intercept == pytest.approx(y.mean())

    model = fc.fit_sparse_var(design, lam * 0.05)
    entries = model.support(3, 0.0)
    assert len(entries) >= 1
    pred = fc.var_predict(model, design)
    assert np.asarray(pred).shape == (design.rows(), 1)


def test_deepnet_training(field):
    design = fc.build_lag_design(field, 3, 2, [3], True)
    train, valid = fc.split_train_test(design)
    cfg = fc.NetConfig(input_dim=design.cols(), hidden=[8], epochs=5, seed=3)
    net = fc.sgd_train(fc.init_network(cfg), train, valid)
    assert len(net.valid_trace) == 5
    pred = fc.net_predict(net, np.asarray(train.X))
    assert pred.shape[0] == train.rows()
    # determinism
    net2 = fc.sgd_train(fc.init_network(cfg), train, valid)
    assert net.valid_trace == net2.valid_trace


def test_dropout_ridge_penalty():
    X = np.eye(3)
    w = np.array([1.0, 2.0, 3.0])
    assert fc.dropout_ridge_penalty(X, w, 0.0) == 0.0
    assert fc.dropout_ridge_penalty(X, w, 0.5) == pytest.approx(0.25 * 14.0)


def test_diagnostics():
    rng = np.random.default_rng(2)
    resid = list(rng.normal(size=2000))
    lb = fc.ljung_box(resid, 24)
    assert 0.0 <= lb["p_value"] <= 1.0
    acf = fc.acf(resid, 10)
    assert acf[0] == pytest.approx(1.0)
    ks = fc.ks_normality(resid)
    assert ks["p_value"] > 0.01
    walk = list(np.cumsum(rng.normal(size=800)))
    adf = fc.adf(walk, 2)
    assert adf["p_value"] > 0.05


def test_metrics():
    assert fc.mse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert fc.r2([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 1.0
    with pytest.raises(RuntimeError):
        fc.r2([1.0, 1.0], [1.0, 2.0])


def test_eval_pipeline(field):
    spec = ('{"label":"naive","model":{"kind":"naive"},'
            '"lags":3,"horizon":4,"target":"s04"}')
    row = fc.eval_pipeline(field, spec)
    assert row["label"] == "naive"
    assert row["os_mse"] > 0.0
    assert row["os_mse"] == pytest.approx(
        fc.mse(row["test_y"], row["test_yhat"]))
