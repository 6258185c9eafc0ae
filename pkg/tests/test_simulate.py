import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopt.presets import (
    MarketSimConfig,
    build_scenario,
    daily_probability_profiles,
    default_demand_config,
    demand_history,
    synthetic_market_history,
    synthetic_price_history,
)
from coopt.scenario import HubSpec
from coopt.simulate import (
    BidStack,
    ClearingOutcome,
    DemandGenConfig,
    MarketRecord,
    clear_reserve_market,
    estimate_probabilities,
    generate_demand,
    percentile_profiles,
)


def demand_cfg(**overrides):
    base = dict(
        traffic=(1000.0,) * 4,
        ev_share=0.25,
        public_charge_share=0.42,
        charge_prob=(0.1,) * 4,
        battery_sizes=((50.0, 0.3), (75.0, 0.4), (100.0, 0.3)),
        soc_bounds=(0.05, 0.95),
        seed=0,
    )
    base.update(overrides)
    return DemandGenConfig(**base)


# ------------------------------------------------------------- demand


def test_zero_ev_share_gives_zero_demand():
    profile = generate_demand(demand_cfg(ev_share=0.0))
    assert all(v == 0.0 for v in profile.ev_load)


def test_degenerate_soc_and_single_size():
    cfg = demand_cfg(
        charge_prob=(1.0,) * 4,
        battery_sizes=((100.0, 1.0),),
        soc_bounds=(0.5, 0.5 + 1e-12),
    )
    profile = generate_demand(cfg)
    for t, v in enumerate(profile.ev_load):
        # every charging EV draws exactly 50 kWh, so the hourly load is 50 * n_t
        assert v == pytest.approx(50.0 * round(v / 50.0), rel=1e-9)
        assert v > 0.0


def test_demand_mean_matches_compound_expectation():
    cfg = demand_cfg(traffic=(1000.0,), charge_prob=(0.1,))
    total = 0.0
    n_days = 4000
    for day in range(n_days):
        total += generate_demand(cfg, day=day).ev_load[0]
    mean = total / n_days
    expect = 0.25 * 0.42 * 1000.0 * 0.1 * 75.0 * 0.5 * (0.05 + 0.95)
    assert mean == pytest.approx(expect, rel=0.02)


def test_demand_clipped_by_hub_capacity():
    hub = HubSpec((0.0,) * 4, station_count=1, station_rate=10.0)
    profile = generate_demand(demand_cfg(charge_prob=(1.0,) * 4), hub)
    assert all(v <= 10.0 for v in profile.ev_load)


def test_demand_deterministic_in_seed():
    a = generate_demand(demand_cfg(seed=5))
    b = generate_demand(demand_cfg(seed=5))
    c = generate_demand(demand_cfg(seed=6))
    assert a.ev_load == b.ev_load
    assert a.ev_load != c.ev_load


def test_config_validation():
    with pytest.raises(ValueError):
        demand_cfg(ev_share=1.5)
    with pytest.raises(ValueError):
        demand_cfg(battery_sizes=((50.0, 0.5), (75.0, 0.4)))
    with pytest.raises(ValueError):
        demand_cfg(soc_bounds=(0.9, 0.1))


# ------------------------------------------------------------- clearing


def test_single_offer_partial_acceptance():
    out = clear_reserve_market(BidStack(((5.0, 10.0),), 4.0))
    assert out.clearing_price == 5.0
    assert out.accepted == (4.0,)
    assert out.accepted_quantity == 4.0
    assert not out.shortfall


def test_merit_order_hand_example():
    stack = BidStack(((1.0, 10.0), (2.0, 10.0), (3.0, 10.0)), 15.0)
    out = clear_reserve_market(stack)
    assert out.accepted == (10.0, 5.0, 0.0)
    assert out.clearing_price == 2.0


def test_zero_requirement():
    out = clear_reserve_market(BidStack(((5.0, 10.0),), 0.0))
    assert out.clearing_price is None
    assert out.accepted_quantity == 0.0


def test_shortfall_flagged():
    out = clear_reserve_market(BidStack(((5.0, 10.0),), 25.0))
    assert out.shortfall
    assert out.accepted_quantity == 10.0


def test_descending_order_for_down_procurement():
    stack = BidStack(((1.0, 10.0), (3.0, 10.0)), 10.0)
    out = clear_reserve_market(stack, descending=True)
    assert out.accepted == (0.0, 10.0)
    assert out.clearing_price == 3.0


offers_strategy = st.lists(
    st.tuples(
        st.floats(0.01, 50.0, allow_nan=False),
        st.floats(0.1, 100.0, allow_nan=False),
    ),
    min_size=1,
    max_size=8,
)


@given(offers_strategy, st.floats(0.0, 1000.0))
@settings(max_examples=100, deadline=None)
def test_clearing_conservation(offers, requirement):
    stack = BidStack(tuple(offers), requirement)
    out = clear_reserve_market(stack)
    assert out.accepted_quantity == pytest.approx(
        min(requirement, stack.total_offered), abs=1e-9
    )
    assert sum(out.accepted) == pytest.approx(out.accepted_quantity, abs=1e-9)


@given(offers_strategy, st.floats(0.0, 400.0), st.floats(0.0, 400.0))
@settings(max_examples=100, deadline=None)
def test_raising_requirement_never_reduces_acceptance(offers, req1, req2):
    lo, hi = sorted((req1, req2))
    first = clear_reserve_market(BidStack(tuple(offers), lo))
    second = clear_reserve_market(BidStack(tuple(offers), hi))
    for a, b in zip(first.accepted, second.accepted):
        assert b >= a - 1e-9


# ------------------------------------------------------------- probabilities


def record(hour, side, offers, requirement, deployed):
    stack = BidStack(tuple(offers), requirement)
    out = clear_reserve_market(stack)
    out = ClearingOutcome(
        out.clearing_price, out.accepted, out.accepted_quantity, deployed, out.shortfall
    )
    return MarketRecord(hour, side, stack, out)


def test_everything_accepted_and_deployed():
    records = []
    for side in ("up", "dn"):
        records.append(record(0, side, ((1.0, 5.0), (2.0, 5.0)), 10.0, 10.0))
    probs = estimate_probabilities(records, horizon=1)
    assert probs.acc_up == (1.0,)
    assert probs.acc_dn == (1.0,)
    assert probs.dep_up == (1.0,)
    assert probs.dep_dn == (1.0,)


def test_partial_counts():
    offers = ((1.0, 4.0), (2.0, 4.0), (3.0, 4.0), (4.0, 4.0))
    records = [
        record(0, "up", offers, 12.0, 6.0),  # 3 of 4 offers accepted, half deployed
        record(0, "dn", offers, 16.0, 16.0),
    ]
    probs = estimate_probabilities(records, horizon=1)
    assert probs.acc_up == (0.75,)
    assert probs.dep_up == (0.5,)


def test_zero_acceptance_warns():
    records = [
        record(0, "up", ((1.0, 5.0),), 0.0, 0.0),
        record(0, "dn", ((1.0, 5.0),), 5.0, 0.0),
    ]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        probs = estimate_probabilities(records, horizon=1)
    assert probs.dep_up == (0.0,)
    assert any("deployment rate" in str(w.message) for w in caught)


def test_empty_hour_bucket_is_error():
    records = [record(0, "up", ((1.0, 5.0),), 5.0, 0.0)]
    with pytest.raises(ValueError):
        estimate_probabilities(records, horizon=1)


# ------------------------------------------------------------- percentiles


def test_single_day_percentile_is_identity():
    history = [[3.0, 5.0, 7.0]]
    for p in (0.0, 35.0, 50.0, 100.0):
        assert list(percentile_profiles(history, p)) == [3.0, 5.0, 7.0]


def test_median_of_constant_days():
    history = [[float(d)] * 3 for d in range(1, 10)]
    assert list(percentile_profiles(history, 50.0)) == [5.0, 5.0, 5.0]


def test_percentile_extremes_are_min_max():
    rng = np.random.default_rng(0)
    history = rng.random((6, 4))
    assert percentile_profiles(history, 0.0) == pytest.approx(history.min(axis=0))
    assert percentile_profiles(history, 100.0) == pytest.approx(history.max(axis=0))


def test_percentile_validation():
    with pytest.raises(ValueError):
        percentile_profiles([[1.0]], 120.0)
    with pytest.raises(ValueError):
        percentile_profiles(np.zeros((0, 3)), 50.0)


# ------------------------------------------------------------- presets


def test_price_history_deterministic_and_positive():
    a_da, a_rt = synthetic_price_history(5, seed=3)
    b_da, b_rt = synthetic_price_history(5, seed=3)
    assert np.array_equal(a_da, b_da)
    assert np.array_equal(a_rt, b_rt)
    assert (a_da > 0).all() and (a_rt > 0).all()


def test_market_history_feeds_probability_estimation():
    records, up_prices, dn_prices = synthetic_market_history(MarketSimConfig(seed=1), days=3)
    probs = estimate_probabilities(records)
    for series in (probs.acc_up, probs.acc_dn, probs.dep_up, probs.dep_dn):
        assert len(series) == 24
        assert all(0.0 <= v <= 1.0 for v in series)
    assert np.isfinite(up_prices).all() and np.isfinite(dn_prices).all()
    daily = daily_probability_profiles(records)
    assert daily["acc_up"].shape == (3, 24)


def test_build_scenario_shapes_and_determinism():
    scn = build_scenario(K=2, seed=11, days=4)
    assert scn.horizon == 24
    assert scn.bss.k == 2
    assert scn.joint is not None
    again = build_scenario(K=2, seed=11, days=4)
    assert scn == again
    assert scn.hub.da_cap == tuple(2.0 * v for v in scn.demand.ev_load)


def test_demand_history_extension_keeps_earlier_days():
    cfg = default_demand_config(seed=2)
    short = demand_history(cfg, days=3)
    long = demand_history(cfg, days=5)
    assert np.array_equal(short, long[:3])
