import json
import math

import pytest

from errors import OversaturatedModelError, SelectionFailureError
from evaluation import mape
from exog import build_design
from models import REGIONS, Candidate, DifferencingOrders, ExogSpec, SarimaParams, SarimaSpec, TimeSeries
from sarima import fit, forecast, simulate
from selection import _exog_key, _order_key, _rank, aicc, enumerate_orders, format_report, report_to_json
from selection import select_exog, select_sarima
from synthetic import weekly_scenario


def test_aicc_formula():
    assert aicc(-100.0, 3, 50) == pytest.approx(200 + 6 + 24 / 46)
    with pytest.raises(OversaturatedModelError):
        aicc(-100.0, 4, 5)


def test_order_enumeration():
    plain = enumerate_orders(1, 0, 0, 1)
    assert [(s.p, s.q) for s in plain] == [(0, 0), (0, 1), (1, 0)]
    assert all(s.include_intercept for s in plain)

    seasonal = enumerate_orders(2, 1, 1, 4)
    assert len(seasonal) == 15
    assert (seasonal[0].p, seasonal[0].q, seasonal[0].P, seasonal[0].Q) == (0, 0, 0, 0)
    assert all(s.order_sum <= 2 and not s.include_intercept for s in seasonal)
    assert not any(s.include_intercept for s in enumerate_orders(1, 0, 0, 1, include_intercept=False))


def _candidate(p, q, value, exog=ExogSpec()):
    return Candidate(spec=SarimaSpec(p=p, q=q), exog_spec=exog, k=p + q + 2, loglik=-value / 2,
                     aicc=value, converged=True)


def test_ties_prefer_fewer_orders():
    results = [(_candidate(2, 0, 100.0), "ar2"), (_candidate(1, 0, 100.0 + 5e-7), "ar1"),
               (_candidate(0, 1, 101.0), "ma1")]
    winner, report = _rank("orders", results, _order_key)
    assert winner == "ar1"
    assert report.best == 1
    assert report.ties == (0,)


def test_ties_prefer_fewer_regressors():
    linear, quadratic = ExogSpec(max_temp="linear"), ExogSpec(max_temp="quadratic")
    results = [(_candidate(1, 0, 50.0, quadratic), "quadratic"), (_candidate(1, 0, 50.0, linear), "linear")]
    winner, _ = _rank("exog", results, _exog_key)
    assert winner == "linear"


def test_unconverged_candidates_are_excluded():
    failed = Candidate(spec=SarimaSpec(p=3), k=5, loglik=0.0, aicc=1.0, converged=False)
    winner, report = _rank("orders", [(failed, "bad"), (_candidate(1, 0, 80.0), "ok")], _order_key)
    assert winner == "ok"
    assert report.best == 1


def test_no_usable_candidate():
    broken = Candidate(spec=SarimaSpec(p=1), k=3, error="non-positive variance")
    with pytest.raises(SelectionFailureError) as info:
        _rank("orders", [(broken, None)], _order_key)
    assert "non-positive variance" in info.value.diagnostics[0]
    assert info.value.exit_code == 3


def test_sarima_search_report():
    spec = SarimaSpec(p=1, include_intercept=False)
    x = simulate(spec, SarimaParams(phi=(0.7,)), 300, seed=4)
    model, report = select_sarima(x, DifferencingOrders(S=1), 2, include_intercept=False)
    assert len(report.candidates) == 6
    best = report.candidates[report.best]
    assert best.aicc == pytest.approx(min(c.aicc for c in report.candidates if c.converged), abs=1e-6)
    assert model.aicc == pytest.approx(best.aicc)
    text = format_report(report)
    assert text.splitlines()[2].startswith("   1*")
    assert json.loads(report_to_json(report))["best"] == report.best


def test_parallel_search_matches_serial():
    spec = SarimaSpec(p=1, include_intercept=False)
    x = simulate(spec, SarimaParams(phi=(0.5,)), 200, seed=8)
    serial = select_sarima(x, DifferencingOrders(S=1), 2, workers=1)[1]
    parallel = select_sarima(x, DifferencingOrders(S=1), 2, workers=2)[1]
    assert parallel.model_dump() == serial.model_dump()


@pytest.mark.slow
def test_ar2_is_found_on_most_seeds():
    spec = SarimaSpec(p=2, include_intercept=False)
    params = SarimaParams(phi=(0.6, -0.4))
    found = 0
    for seed in range(50):
        x = simulate(spec, params, 600, seed=seed)
        model, report = select_sarima(x, DifferencingOrders(S=1), 3, include_intercept=False)
        found += model.spec.p == 2 and model.spec.q == 0
        best = min(c.aicc for c in report.candidates if c.converged)
        assert model.aicc == pytest.approx(best, abs=1e-6)
    assert found >= 30


def test_regression_search_finds_temperature_response():
    wpd, (max_t, min_t, sol_t) = weekly_scenario("NSW", 260, seed=3)
    spec = SarimaSpec(p=1, orders=DifferencingOrders(S=1))
    orders = DifferencingOrders(S=1)
    crude = select_sarima(wpd, orders, 0)[0]
    hybrid, report = select_exog(wpd, orders, spec, (max_t, min_t, sol_t))
    assert len(report.candidates) == 27
    assert hybrid.exog_spec.max_temp == "quadratic"
    assert hybrid.aicc < crude.aicc


@pytest.mark.slow
def test_regression_search_direction_across_seeds():
    spec = SarimaSpec(p=1, orders=DifferencingOrders(S=1))
    planted = 0
    for seed in range(25):
        wpd, env = weekly_scenario("SA", 260, seed=seed)
        hybrid, _ = select_exog(wpd, DifferencingOrders(S=1), spec, env)
        chosen = hybrid.exog_spec
        planted += (chosen.max_temp, chosen.min_temp, chosen.solar) == ("quadratic", "quadratic", "none")
    assert planted >= 18


def _split(series, n_train):
    return series.slice(0, n_train), series.slice(n_train, series.n)


@pytest.mark.slow
def test_hybrid_beats_crude_out_of_sample():
    orders = DifferencingOrders(S=1)
    wins = 0
    for seed in range(20):
        better = True
        for region in REGIONS:
            wpd, env = weekly_scenario(region, 260, seed=seed)
            train, test = _split(wpd, 208)
            train_env, test_env = zip(*(_split(s, 208) for s in env))
            crude = select_sarima(train, orders, 1)[0]
            hybrid, _ = select_exog(train, orders, crude.spec, train_env)
            future = (build_design(hybrid.exog_spec, *test_env, centering=hybrid.exog.centering)
                      if hybrid.is_hybrid else None)
            crude_mape = mape(forecast(crude, 52).point, test.values)
            hybrid_mape = mape(forecast(hybrid, 52, future).point, test.values)
            better = better and hybrid_mape < crude_mape
        wins += better
    assert wins >= 18


def test_exog_search_on_new_differencing_drops_the_intercept():
    spec = SarimaSpec(p=1)
    assert spec.include_intercept
    moved = spec.with_orders(DifferencingOrders(d=1, S=1))
    assert moved.p == 1 and not moved.include_intercept

    wpd, env = weekly_scenario("SA", 104, seed=2)
    model, report = select_exog(wpd, DifferencingOrders(d=1, S=1), SarimaSpec(), env)
    assert not any(c.spec.include_intercept for c in report.candidates)
    assert not model.spec.include_intercept


@pytest.mark.parametrize("max_sum", range(7))
def test_order_count_is_stars_and_bars(max_sum):
    specs = enumerate_orders(max_sum, 0, 0, 4)
    brute = [(p, q, P, Q) for p in range(7) for q in range(7) for P in range(7) for Q in range(7)
             if p + q + P + Q <= max_sum]
    assert len(specs) == math.comb(max_sum + 4, 4) == len(brute)
    assert len({(s.p, s.q, s.P, s.Q) for s in specs}) == len(specs)
    if max_sum == 5:
        assert len(specs) == 126


@pytest.mark.slow
def test_white_noise_selects_the_empty_model(rng):
    empty = 0
    for _ in range(30):
        x = TimeSeries.from_array(rng.normal(size=200), period=1)
        model, _ = select_sarima(x, DifferencingOrders(S=1), 1, include_intercept=False)
        empty += model.spec.order_sum == 0
    assert empty >= 16


@pytest.mark.slow
def test_true_order_beats_an_overfit_order():
    wins = 0
    for seed in range(25):
        x = simulate(SarimaSpec(p=1, include_intercept=False), SarimaParams(phi=(0.6,)), 300, seed=seed)
        true = fit(x, SarimaSpec(p=1, include_intercept=False))
        overfit = fit(x, SarimaSpec(p=5, include_intercept=False))
        wins += true.aicc < overfit.aicc
    assert wins >= 13
