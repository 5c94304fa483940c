import numpy as np
import pytest

from errors import AlignmentError, RangeError
from exog import build_design, climatology, enumerate_specs
from models import ExogSpec, TimeSeries


def _env(n=10, start="2014-W01"):
    t = np.arange(n, dtype=float)
    return (TimeSeries.from_array(20 + t, start=start),
            TimeSeries.from_array(10 + 0.5 * t, start=start),
            TimeSeries.from_array(15 - t, start=start))


def test_all_27_combinations():
    specs = enumerate_specs()
    assert len(specs) == 27
    assert len({s.label for s in specs}) == 27
    assert specs[0].label == "none"
    assert specs[-1].column_names == ["max", "max^2", "min", "min^2", "sol", "sol^2"]
    assert sorted({s.n_columns for s in specs}) == [0, 1, 2, 3, 4, 5, 6]


def test_design_columns_are_centered_and_ordered():
    max_t, min_t, sol_t = _env()
    design = build_design(ExogSpec(max_temp="quadratic", solar="linear"), max_t, min_t, sol_t)
    assert design.names == ("max", "max^2", "sol")
    centered = max_t.array() - max_t.array().mean()
    np.testing.assert_allclose(design.columns[0], centered)
    np.testing.assert_allclose(design.columns[1], centered ** 2)
    np.testing.assert_allclose(np.mean(design.columns[2]), 0.0, atol=1e-12)
    assert design.centering["max"] == pytest.approx(24.5)
    assert design.start == "2014-W01"


def test_design_reuses_training_centering():
    max_t, min_t, sol_t = _env(4)
    design = build_design(ExogSpec(min_temp="quadratic"), max_t, min_t, sol_t,
                          centering={"max": 0.0, "min": 10.0, "sol": 0.0})
    np.testing.assert_allclose(design.columns[0], [0.0, 0.5, 1.0, 1.5])
    np.testing.assert_allclose(design.columns[1], [0.0, 0.25, 1.0, 2.25])


def test_empty_spec_gives_empty_design():
    design = build_design(ExogSpec(), *_env())
    assert design.k == 0
    assert design.array().shape == (10, 0)


def test_misaligned_inputs():
    max_t, min_t, sol_t = _env()
    with pytest.raises(AlignmentError):
        build_design(ExogSpec(max_temp="linear"), max_t, min_t.slice(0, 9), sol_t)
    with pytest.raises(AlignmentError):
        build_design(ExogSpec(max_temp="linear"), max_t, TimeSeries(values=min_t.values, start="2014-W02"), sol_t)


def test_climatology_averages_the_same_week():
    values = np.concatenate([np.arange(52.0), np.arange(52.0) + 2])
    history = TimeSeries.from_array(values, start="2010-W01")
    clim = climatology(history, 3)
    assert clim.start == "2012-W01"
    np.testing.assert_allclose(clim.values, [1.0, 2.0, 3.0])
    shifted = climatology(history, 2, start="2012-W52")
    np.testing.assert_allclose(shifted.values, [52.0, 1.0])
    with pytest.raises(RangeError):
        climatology(history, 0)
