import math

import numpy as np
import pytest

import monogp


def point(h, t, i=0, ti=0):
    return monogp.InputPoint([h, 0.1, -0.2, 0.3, 0.4, t], i, ti)


def test_kernel_values():
    hp = monogp.Hyperparameters(2.0, [1.0] * 5, 0.1)
    x = point(0.0, 1.0)
    assert monogp.se_ard_cov(x, x, hp) == pytest.approx(4.0)
    y = point(1.0, 1.0)
    assert monogp.se_ard_cov(x, y, hp) == pytest.approx(4.0 * math.exp(-0.5))
    # d/dx_0 k(x, y) = -k (x0 - y0) / rho^2
    assert monogp.cov_deriv_value(x, 0, y, hp) == pytest.approx(4.0 * math.exp(-0.5))


def test_kronecker_shape():
    hp = monogp.Hyperparameters(1.0, [1.0] * 5, 0.1)
    k = monogp.kronecker_cov([[0.0] * 5, [1.0] * 5], [0.0, 1.0, 2.0], hp)
    assert k.shape == (6, 6)
    assert np.allclose(k, k.T)


def test_sign_likelihood_and_errors():
    assert monogp.log_lik_sign([1], [0.0], 1e-4) == pytest.approx(math.log(0.5))
    assert math.isfinite(monogp.log_lik_sign([-1], [1.0], 1e-4))
    with pytest.raises(monogp.DomainError):
        monogp.log_lik_sign([1], [1.0], 0.0)
    with pytest.raises(monogp.Error):
        monogp.log_lik_gaussian([1.0], [1.0, 2.0], 1.0)


def test_simulate_and_virtual_sets():
    raw = monogp.simulate(3)
    assert len(raw) == 143
    again = monogp.parse_csv(raw.to_csv())
    assert again.to_csv() == raw.to_csv()
    obs = monogp.build_virtual_sets(monogp.standardize(raw))
    assert (obs.regular_count, obs.zero_start_count, obs.sign_count) == (130, 13, 26)
    with pytest.raises(monogp.ConfigError):
        monogp.build_virtual_sets(monogp.standardize(raw), monotone_times=[12.0])


def test_exact_conditioning_at_anchor():
    raw = monogp.simulate(4, locations=3, time_points=4)
    obs = monogp.build_virtual_sets(monogp.standardize(raw), monotone_times=[])
    hp = monogp.Hyperparameters(1.0, [2.0] * 5, 0.3)
    ds = monogp.standardize(raw)
    mean, cov = monogp.condition_gaussian(obs, [monogp.InputPoint([0.0] * 6)], hp)
    assert mean.shape == (1,) and cov.shape == (1, 1)
    assert cov[0, 0] > 0.0
    assert len(ds) == 12


def test_fit_predict_small():
    raw = monogp.simulate(5, locations=3, time_points=5)
    ds = monogp.standardize(raw)
    obs = monogp.build_virtual_sets(ds, monotone_times=[2.0])
    samples = monogp.fit(obs, chains=2, warmup=100, draws=100, seed=2)
    assert samples.chain_count == 2
    assert samples.draw_count == 200
    summary = samples.summary()
    assert [p["name"] for p in summary][0] == "alpha"
    assert len(summary) == 7
    start, later = ds.points[0], ds.points[3]
    assert start.time_index == 0
    pred = monogp.predict(samples, obs, [start, later], latent=True, max_draws=50)
    assert abs(pred["mean"][0]) < 1e-3
    assert pred["lower95"][1] <= pred["mean"][1] <= pred["upper95"][1]


def test_diagnostics():
    rng = np.random.default_rng(0)
    chains = [list(rng.normal(size=500)), list(rng.normal(size=500))]
    assert monogp.split_rhat(chains) < 1.05
    assert monogp.split_rhat([[5.0 + x for x in chains[0]], [x - 5.0 for x in chains[1]]]) > 1.5
    grid = [(k + 0.5) / 100 for k in range(100)]
    assert monogp.ks_distance_uniform(grid) == pytest.approx(0.005)
