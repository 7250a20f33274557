import numpy as np
import pytest

from spurcheck.errors import InputError
from spurcheck.simgen import (
    CALIBRATION_TARGETS,
    CLASSES,
    DEFAULT_LENGTH,
    GeneratorSpec,
    derive_seed,
    gen_batch,
    gen_series,
)
from spurcheck.tscore import diagnose, kendall_tau, trend_correlation


@pytest.mark.parametrize("cls", CLASSES)
def test_series_determined_by_spec_and_index(cls):
    spec = GeneratorSpec(cls, master_seed=5)
    a, b = gen_series(spec, 17), gen_series(GeneratorSpec(cls, master_seed=5), 17)
    assert a == b
    assert a.values.tobytes() == b.values.tobytes()
    assert len(a) == DEFAULT_LENGTH
    assert a.source.cls == cls and a.source.seed == derive_seed(5, cls, 17)
    assert gen_series(spec, 18) != a
    assert gen_series(GeneratorSpec(cls, master_seed=6), 17) != a


def test_batch_equals_individual_calls():
    spec = GeneratorSpec("rw_drift", length=50, master_seed=3)
    batch = gen_batch(spec, 12)
    assert batch == [gen_series(spec, i) for i in range(12)]
    # later slices do not depend on the earlier ones
    assert gen_batch(spec, 4, start=8) == batch[8:]
    assert gen_batch(spec, 1) == batch[:1]


def test_seed_derivation_separates_classes():
    seeds = {derive_seed(0, c, i) for c in CLASSES for i in range(100)}
    assert len(seeds) == 100 * len(CLASSES)


def test_zero_noise_linear_trend_is_affine():
    spec = GeneratorSpec("linear_trend", length=80, params={"noise_scale": 1e-300})
    for i in range(5):
        s = gen_series(spec, i)
        second = np.diff(s.values, 2)
        assert np.max(np.abs(second)) <= 1e-12 * np.max(np.abs(s.values))
        assert abs(trend_correlation(s)) == 1.0


def test_start_year_and_length():
    s = gen_series(GeneratorSpec("white_noise", length=30, start_year=1950), 0)
    assert s.years[0] == 1950 and s.years[-1] == 1979


@pytest.mark.parametrize("bad", [
    dict(cls="pink_noise"),
    dict(cls="white_noise", length=1),
    dict(cls="white_noise", params={"drift_low": 0.1}),
    dict(cls="rw_drift", params={"drift_low": 0.5, "drift_high": 0.1}),
    dict(cls="linear_trend", params={"noise_ar": 1.0}),
    dict(cls="nonlinear_trend", params={"noise_scale": 0.0}),
])
def test_invalid_specs(bad):
    with pytest.raises(InputError):
        GeneratorSpec(**bad)


def test_negative_index():
    with pytest.raises(InputError):
        gen_series(GeneratorSpec("white_noise"), -1)
    with pytest.raises(InputError):
        gen_batch(GeneratorSpec("white_noise"), 0)


def _medians(cls, count=1000, seed=1):
    d = [diagnose(s) for s in gen_batch(GeneratorSpec(cls, master_seed=seed), count)]
    return (float(np.median([abs(x.tau_Y) for x in d])),
            float(np.median([x.tau_L for x in d])),
            float(np.median([x.tau_Y for x in d])))


@pytest.mark.parametrize("cls", CLASSES)
def test_calibration_medians(cls):
    ty, tl, _ = _medians(cls)
    target_y, target_l = CALIBRATION_TARGETS[cls]
    assert ty == pytest.approx(target_y, abs=0.08)
    assert tl == pytest.approx(target_l, abs=0.08)


def test_negative_drift_gives_negative_trend():
    assert _medians("rw_drift", count=300)[2] < 0


def test_white_noise_lag_median_near_zero():
    # the sample median of ~N(0, 1/n) lag-1 taus has s.d. about 1.25/sqrt(n*count)
    _, tl, _ = _medians("white_noise")
    assert abs(tl) < 4 * 1.25 / np.sqrt(200 * 1000)


def test_plain_walk_pairs_are_often_significant():
    spec = GeneratorSpec("rw_plain", master_seed=2)
    batch = gen_batch(spec, 200)
    target = batch[0]
    p = [kendall_tau(s.values, target.values).p_two_sided for s in batch[1:]]
    assert np.mean(np.array(p) < 0.05) > 0.5
