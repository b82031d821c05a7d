import random
from decimal import Decimal

import pytest

from rebalplan import (
    Broker,
    FeeTable,
    LedgerState,
    Market,
    Security,
    TimeGrid,
    TradeRules,
    apply_rebalance,
    liquidate_all,
    rebalance_amount,
    wealth,
)
from rebalplan.errors import (
    InactiveSecurityError,
    InadmissibleTradeError,
    ShortCapExceededError,
)

D = Decimal


def two_security_market():
    grid = TimeGrid((1, 2, 3))
    a = Security("A", 1, 2, {1: D("10.00"), 2: D("11.50"), 3: D("12.00")}, {})
    m = Security("M", 1, 0, {1: D("5.00")}, {})  # matures immediately after t=1
    return Market(grid, (a, m))


def flat_fees(fee):
    quotes = {}
    for sid, times in (("A", (1, 2, 3)), ("M", (1,))):
        for t in times:
            quotes[(sid, t)] = D(fee)
    return FeeTable((Broker("b1", quotes),))


MARKET = two_security_market()
FEES = flat_fees("0.50")


def test_wealth_marks_holdings_to_market():
    state = LedgerState(0, {"A": 5}, D("100.00"))
    assert wealth(state, MARKET, 1) == D("150.00")


def test_wealth_of_pure_cash():
    state = LedgerState(0, {}, D("100.00"))
    assert wealth(state, MARKET, 1) == D("100.00")


def test_wealth_ignores_matured_positions():
    state = LedgerState(1, {"M": 5}, D("50.00"))
    assert wealth(state, MARKET, 2) == D("50.00")


def test_rebalance_amount_signs():
    assert rebalance_amount({"A": 2}, MARKET, 1) == D("20.00")
    assert rebalance_amount({"A": -3}, MARKET, 1) == D("-30.00")
    assert rebalance_amount({}, MARKET, 1) == D("0.00")


def test_rebalance_amount_rejects_inactive():
    with pytest.raises(InactiveSecurityError):
        rebalance_amount({"M": 1}, MARKET, 2)


def test_apply_rebalance_charges_price_plus_fee():
    state = LedgerState(0, {}, D("100.00"))
    after = apply_rebalance(state, {"A": 2}, MARKET, FEES)
    assert after.cash == D("79.00")
    assert dict(after.holdings) == {"A": 2}
    assert after.time_index == 1


def test_apply_rebalance_reports_the_deficit():
    state = LedgerState(0, {}, D("10.00"))
    with pytest.raises(InadmissibleTradeError) as info:
        apply_rebalance(state, {"A": 2}, MARKET, FEES)
    assert info.value.deficit == D("11.00")


def test_zero_trade_is_always_admissible():
    state = LedgerState(0, {"A": 2}, D("79.00"))
    after = apply_rebalance(state, {}, MARKET, FEES)
    assert after.cash == D("79.00")
    assert dict(after.holdings) == {"A": 2}


def test_apply_rebalance_enforces_the_position_floor():
    state = LedgerState(0, {"A": 1}, D("100.00"))
    with pytest.raises(ShortCapExceededError):
        apply_rebalance(state, {"A": -2}, MARKET, FEES)
    rules = TradeRules(allow_short=True, short_cap=3)
    after = apply_rebalance(state, {"A": -2}, MARKET, FEES, rules)
    assert dict(after.holdings) == {"A": -1}
    with pytest.raises(ShortCapExceededError):
        apply_rebalance(state, {"A": -5}, MARKET, FEES, rules)


def test_apply_rebalance_rejects_unissued_or_matured():
    state = LedgerState(1, {}, D("100.00"))
    with pytest.raises(InactiveSecurityError):
        apply_rebalance(state, {"M": 1}, MARKET, FEES)


def test_expiring_positions_are_forfeited_on_advance():
    state = LedgerState(0, {"M": 4}, D("10.00"))
    after = apply_rebalance(state, {}, MARKET, FEES)
    assert dict(after.holdings) == {}  # M's window closed before t=2


def test_liquidate_all_books_proceeds_minus_fees():
    grid = TimeGrid((1, 2, 3))
    a = Security("A", 1, 2, {1: D("10.00"), 2: D("12.00"), 3: D("12.00")}, {})
    market = Market(grid, (a,))
    state = LedgerState(1, {"A": 2}, D("79.00"))
    # 79.00 + 2 * 12.00 - 2 * 0.50
    assert liquidate_all(state, market, FEES, 2) == D("102.00")


def test_liquidate_all_with_nothing_to_sell():
    state = LedgerState(1, {}, D("100.00"))
    assert liquidate_all(state, MARKET, FEES, 2) == D("100.00")


def test_liquidate_all_forfeits_matured_positions():
    state = LedgerState(1, {"M": 3}, D("50.00"))
    assert liquidate_all(state, MARKET, FEES, 2) == D("50.00")


def test_fractional_lot_size_scales_cash_flows():
    rules = TradeRules(lot_size=D("0.5"))
    state = LedgerState(0, {}, D("100.00"))
    after = apply_rebalance(state, {"A": 3}, MARKET, FEES, rules)
    # 3 half-lots at 10.00 plus 0.50 fee per unit: 1.5 * 10.50
    assert after.cash == D("100.00") - D("15.75")


# ---------------------------------------------------------------------------
# properties


def random_state_and_trade(rng, fees):
    cash = D(rng.randint(0, 20000)) / 100
    holdings = {"A": rng.randint(0, 8)}
    state = LedgerState(0, holdings, cash)
    delta = rng.randint(-holdings["A"], 6)
    return state, {"A": delta}


def test_self_financing_identity_with_zero_fees():
    rng = random.Random(7)
    zero_fees = flat_fees("0.00")
    checked = 0
    for _ in range(300):
        state, trade = random_state_and_trade(rng, zero_fees)
        try:
            after = apply_rebalance(state, trade, MARKET, zero_fees)
        except InadmissibleTradeError:
            continue
        assert wealth(after, MARKET, 1) == wealth(state, MARKET, 1)
        checked += 1
    assert checked > 100


def test_fees_only_ever_reduce_cash():
    rng = random.Random(8)
    cheap = flat_fees("0.10")
    costly = flat_fees("0.30")
    for _ in range(200):
        state, trade = random_state_and_trade(rng, cheap)
        try:
            after_cheap = apply_rebalance(state, trade, MARKET, cheap)
        except InadmissibleTradeError:
            continue
        try:
            after_costly = apply_rebalance(state, trade, MARKET, costly)
        except InadmissibleTradeError:
            continue
        assert after_costly.cash <= after_cheap.cash


def test_inverse_trade_leaks_exactly_the_fees():
    rng = random.Random(9)
    for _ in range(200):
        qty = rng.randint(1, 5)
        state = LedgerState(0, {"A": 3}, D("500.00"))
        trade = {"A": qty}
        mid = apply_rebalance(state, trade, MARKET, FEES)
        # undo at the same prices: rewind the clock but keep the new book
        mid_at_t1 = LedgerState(0, dict(mid.holdings), mid.cash)
        back = apply_rebalance(mid_at_t1, {"A": -qty}, MARKET, FEES)
        assert dict(back.holdings) == dict(state.holdings)
        leak = D("0.50") * 2 * qty
        assert back.cash == state.cash - leak


def test_successful_rebalances_never_go_negative():
    rng = random.Random(10)
    for _ in range(500):
        state, trade = random_state_and_trade(rng, FEES)
        try:
            after = apply_rebalance(state, trade, MARKET, FEES)
        except InadmissibleTradeError:
            continue
        assert after.cash >= 0
