"""Replaying a trade policy through the ledger step by step."""

from __future__ import annotations

from decimal import Decimal

from .dp import Policy
from .ledger import LedgerState, apply_rebalance
from .scenario import Scenario


def replay_policy(scenario: Scenario, policy: Policy) -> list[LedgerState]:
    """States visited by the policy, initial state first.

    Raises whatever the ledger raises if a trade is inadmissible on this
    scenario; the policy's trade times must match the grid step for step.
    """
    market = scenario.market
    fees = scenario.fees
    rules = scenario.trade_rules()
    state = scenario.initial_state()
    states = [state]
    for t, trade in policy.trades:
        if market.grid.points[state.time_index] != t:
            raise ValueError(
                f"policy trades at {t} but the next decision time is "
                f"{market.grid.points[state.time_index]}"
            )
        state = apply_rebalance(state, trade, market, fees, rules)
        states.append(state)
    return states


def replay_terminal_wealth(scenario: Scenario, policy: Policy) -> Decimal:
    """Ending cash after replaying the policy over the full horizon."""
    states = replay_policy(scenario, policy)
    final = states[-1]
    if final.time_index != len(scenario.market.grid) - 1:
        raise ValueError("policy does not cover every decision time")
    return final.cash
