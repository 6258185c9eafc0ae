"""Synthetic case-study inputs: traffic, prices, reserve-market history.

The shipped profiles stand in for the proprietary traffic counts, electricity
prices, and reserve-bid archives behind the original study; they reproduce the
qualitative shapes (commuter traffic peaks, cheap overnight day-ahead power,
spiky real-time evening prices) so the full pipeline runs end to end.  All of
them are deterministic in the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .scenario import (
    BssSpec,
    CompartmentSpec,
    DemandProfile,
    HubSpec,
    JointTerms,
    PriceProfiles,
    ReserveProbabilities,
    ScenarioInputs,
)
from .simulate import (
    BidStack,
    ClearingOutcome,
    DemandGenConfig,
    MarketRecord,
    clear_reserve_market,
    generate_demand,
    percentile_profiles,
    stream,
)

HOURS = 24

# commuter double peak, vehicles per hour
_TRAFFIC_SHAPE = (
    220, 160, 130, 120, 150, 320, 700, 1050, 1200, 950, 780, 760,
    800, 820, 860, 980, 1180, 1320, 1250, 980, 720, 540, 400, 290,
)

# day-ahead price shape, $/kWh: deep overnight trough, high daytime plateau
_DA_SHAPE = (
    0.030, 0.028, 0.027, 0.026, 0.027, 0.032, 0.075, 0.108, 0.124, 0.130, 0.132, 0.130,
    0.128, 0.130, 0.132, 0.132, 0.132, 0.132, 0.128, 0.120, 0.104, 0.080, 0.052, 0.036,
)

# real-time deviation factor per hour: spiky in the evening ramp
_RT_FACTOR = (
    0.92, 0.90, 0.89, 0.90, 0.92, 0.96, 1.00, 1.02, 1.03, 1.03, 1.02, 1.02,
    1.03, 1.04, 1.05, 1.06, 1.10, 1.26, 1.28, 1.12, 1.04, 0.99, 0.95, 0.92,
)

# up capacity is scarce (and priced) around the evening ramp, nearly free at
# night; down capacity mirrors it, wanted when the system is long overnight
_UP_PRICE_SHAPE = (
    0.002, 0.001, 0.001, 0.001, 0.001, 0.002, 0.006, 0.012, 0.014, 0.012, 0.011, 0.011,
    0.012, 0.013, 0.016, 0.022, 0.034, 0.050, 0.046, 0.034, 0.018, 0.009, 0.004, 0.002,
)

_DN_PRICE_SHAPE = (
    0.010, 0.012, 0.013, 0.013, 0.012, 0.009, 0.005, 0.003, 0.002, 0.002, 0.002, 0.002,
    0.002, 0.002, 0.002, 0.002, 0.001, 0.001, 0.001, 0.001, 0.002, 0.004, 0.006, 0.008,
)

# deployment is rare relative to acceptance except on the evening ramp, where
# up calls are concentrated; standby pays, calls are sparse
_DEP_UP_TARGET = (
    0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.02, 0.02, 0.02, 0.02, 0.02,
    0.02, 0.02, 0.02, 0.03, 0.06, 0.10, 0.10, 0.06, 0.03, 0.02, 0.01, 0.01,
)

_DEP_DN_TARGET = (
    0.03, 0.03, 0.03, 0.03, 0.03, 0.02, 0.02, 0.01, 0.01, 0.01, 0.01, 0.01,
    0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.02, 0.02, 0.03,
)


def default_traffic_profile(scale: float = 1.0) -> tuple[float, ...]:
    return tuple(scale * v for v in _TRAFFIC_SHAPE)


def default_charge_probability() -> tuple[float, ...]:
    """Flat placeholder for the per-hour charging propensity (synthetic)."""
    return (0.1,) * HOURS


def default_demand_config(seed: int = 0, traffic_scale: float = 1.0) -> DemandGenConfig:
    return DemandGenConfig(
        traffic=default_traffic_profile(traffic_scale),
        ev_share=0.25,
        public_charge_share=0.42,
        charge_prob=default_charge_probability(),
        battery_sizes=((50.0, 0.3), (75.0, 0.4), (100.0, 0.3)),
        soc_bounds=(0.05, 0.95),
        seed=seed,
    )


def default_compartment(initial_level: float = 500.0) -> CompartmentSpec:
    return CompartmentSpec(
        cap=4000.0,
        min_level=500.0,
        max_charge=3000.0,
        max_discharge=3000.0,
        unit_cost=1_200_000.0,
        battery_capacity=4000.0,
        life_slope=-0.005,
        initial_level=initial_level,
    )


def synthetic_price_history(days: int = 30, seed: int = 0):
    """(days, 24) day-ahead and real-time price paths, $/kWh."""
    da = np.empty((days, HOURS))
    rt = np.empty((days, HOURS))
    for day in range(days):
        for t in range(HOURS):
            rng = stream(seed, t, day, 0)
            day_level = 0.8 + 0.5 * rng.random()
            da[day, t] = _DA_SHAPE[t] * day_level * (0.95 + 0.1 * rng.random())
            spike = rng.random()
            rt_mult = _RT_FACTOR[t] * (0.75 + 0.5 * rng.random())
            if spike > 0.96:  # occasional scarcity spike
                rt_mult *= 2.5
            rt[day, t] = da[day, t] * rt_mult
    return da, rt


def demand_history(cfg: DemandGenConfig, days: int = 30, hub: HubSpec | None = None):
    """(days, T) demand paths drawn from per-(hour, day) streams."""
    rows = [generate_demand(cfg, hub, day=day).ev_load for day in range(days)]
    return np.array(rows)


@dataclass(frozen=True)
class MarketSimConfig:
    """Synthetic reserve-market generator: offers, requirement, deployment."""

    participants: int = 6
    qty_range: tuple[float, float] = (500.0, 3000.0)
    requirement_range: tuple[float, float] = (0.25, 0.65)  # fraction of total offered
    price_spread: float = 0.5
    seed: int = 0


def synthetic_market_history(cfg: MarketSimConfig, days: int = 30):
    """Cleared up/down records plus (days, 24) clearing-price paths per side."""
    records: list[MarketRecord] = []
    up_prices = np.full((days, HOURS), np.nan)
    dn_prices = np.full((days, HOURS), np.nan)
    for day in range(days):
        for t in range(HOURS):
            for side, shape, dep_target, out in (
                ("up", _UP_PRICE_SHAPE, _DEP_UP_TARGET, up_prices),
                ("dn", _DN_PRICE_SHAPE, _DEP_DN_TARGET, dn_prices),
            ):
                rng = stream(cfg.seed, t, day, 1 if side == "up" else 2)
                offers = []
                for _ in range(cfg.participants):
                    price = shape[t] * (1.0 - cfg.price_spread / 2 + cfg.price_spread * rng.random())
                    qty = rng.uniform(*cfg.qty_range)
                    offers.append((price, qty))
                stack = BidStack(tuple(offers), 0.0)
                req = rng.uniform(*cfg.requirement_range) * stack.total_offered
                stack = BidStack(stack.offers, req)
                outcome = clear_reserve_market(stack)
                deployed = outcome.accepted_quantity if rng.random() < dep_target[t] else 0.0
                outcome = ClearingOutcome(
                    outcome.clearing_price,
                    outcome.accepted,
                    outcome.accepted_quantity,
                    deployed,
                    outcome.shortfall,
                )
                records.append(MarketRecord(t, side, stack, outcome))
                out[day, t] = outcome.clearing_price
    return records, up_prices, dn_prices


def daily_probability_profiles(records, horizon: int = HOURS):
    """Per-day acceptance/deployment rate paths, for percentile levels."""
    acc = {"up": {}, "dn": {}}
    dep = {"up": {}, "dn": {}}
    counters: dict[tuple[str, int], int] = {}
    for rec in records:
        day = counters.get((rec.side, rec.hour), 0)
        counters[(rec.side, rec.hour)] = day + 1
        n_offers = len(rec.stack.offers)
        n_acc = sum(1 for q in rec.outcome.accepted if q > 0)
        acc[rec.side].setdefault(day, [0.0] * horizon)[rec.hour] = n_acc / n_offers
        rate = (
            rec.outcome.deployed_quantity / rec.outcome.accepted_quantity
            if rec.outcome.accepted_quantity > 0
            else 0.0
        )
        dep[rec.side].setdefault(day, [0.0] * horizon)[rec.hour] = min(rate, 1.0)

    def matrix(tab):
        return np.array([tab[d] for d in sorted(tab)])

    return {
        "acc_up": matrix(acc["up"]),
        "acc_dn": matrix(acc["dn"]),
        "dep_up": matrix(dep["up"]),
        "dep_dn": matrix(dep["dn"]),
    }


def build_scenario(
    *,
    K: int = 2,
    seed: int = 7,
    days: int = 30,
    percentile: float = 50.0,
    station_count: int = 150,
    station_rate: float = 100.0,
    traffic_scale: float = 4.0,
    lease_markup: float = 1.0,
    compartment: CompartmentSpec | None = None,
    commit_cap_factor: float = 2.0,
    compartment_spread: float = 0.0,
) -> ScenarioInputs:
    """Assemble a full synthetic scenario at one percentile level.

    Demand and both price curves are the per-hour percentile over ``days``
    simulated days; reserve probabilities are the empirical rates over the
    same horizon.  The day-ahead commitment cap is ``commit_cap_factor`` times
    the demand profile.  A nonzero ``compartment_spread`` shrinks successive
    compartments by that fraction, which removes interchangeable-compartment
    symmetry from the search trees.
    """
    comp = compartment or default_compartment()
    hub_probe = HubSpec((0.0,) * HOURS, station_count, station_rate)

    cfg = default_demand_config(seed, traffic_scale)
    dem = percentile_profiles(demand_history(cfg, days, hub_probe), percentile)
    da_hist, rt_hist = synthetic_price_history(days, seed)
    lam_da = percentile_profiles(da_hist, percentile)
    lam_rt = percentile_profiles(rt_hist, percentile)

    records, up_hist, dn_hist = synthetic_market_history(MarketSimConfig(seed=seed), days)
    lam_up = percentile_profiles(up_hist, percentile)
    lam_dn = percentile_profiles(dn_hist, percentile)
    from .simulate import estimate_probabilities

    probs = estimate_probabilities(records, HOURS)

    prices = PriceProfiles(tuple(lam_da), tuple(lam_rt), tuple(lam_up), tuple(lam_dn))
    demand = DemandProfile(tuple(dem))
    hub = HubSpec(tuple(commit_cap_factor * v for v in dem), station_count, station_rate)
    compartments = []
    for k in range(K):
        shrink = 1.0 - compartment_spread * k
        compartments.append(
            replace(
                comp,
                cap=comp.cap * shrink,
                max_charge=comp.max_charge * shrink,
                max_discharge=comp.max_discharge * shrink,
                battery_capacity=comp.battery_capacity * shrink,
                unit_cost=comp.unit_cost * shrink,
            )
        )
    bss = BssSpec(tuple(compartments))
    from .models import marginal_degradation_rate

    joint = JointTerms(lease_markup, marginal_degradation_rate(comp))
    return ScenarioInputs(prices, demand=demand, probabilities=probs, hub=hub, bss=bss, joint=joint)
