import random

import pytest

from sky3dsim import cac
from sky3dsim.allocation import NrPool, SatPool
from sky3dsim.cac import (
    AssociationStrategy,
    ConnectionState,
    admit,
    ap_backhaul_check,
    attempt_handover,
    choose_ap,
    update_connection,
)
from sky3dsim.channel import LinkBudget
from sky3dsim.scenario import SatFrameConfig, builtin_paper_scenario


def budget(rx_dbm: float, visible: bool = True) -> LinkBudget:
    return LinkBudget(100.0, rx_dbm, -108.0, visible)


def fresh(ue: int = 0) -> ConnectionState:
    return ConnectionState(ue=ue, phase=cac.PHASE_REQUESTING)


class TestChooseAp:
    def test_user_centric_sorts_by_power(self):
        out = choose_ap({0: budget(-70.0), 1: budget(-80.0)}, {0: 0.9, 1: 0.0},
                        AssociationStrategy("user_centric"))
        assert out == [0, 1]

    def test_ran_controlled_sorts_by_load(self):
        out = choose_ap({0: budget(-70.0), 1: budget(-70.0)},
                        {0: 0.9, 1: 0.1},
                        AssociationStrategy("ran_controlled"))
        assert out == [1, 0]

    def test_ran_controlled_power_tiebreak(self):
        out = choose_ap({0: budget(-80.0), 1: budget(-70.0)},
                        {0: 0.5, 1: 0.5},
                        AssociationStrategy("ran_controlled"))
        assert out == [1, 0]

    def test_ran_assisted_filters_loaded_aps(self):
        out = choose_ap(
            {0: budget(-60.0), 1: budget(-90.0)}, {0: 0.85, 1: 0.2},
            AssociationStrategy("ran_assisted", assist_threshold=0.8))
        assert out == [1]

    def test_invisible_aps_never_appear(self):
        out = choose_ap({0: budget(-70.0, visible=False),
                         1: budget(-90.0)}, {0: 0.0, 1: 0.0},
                        AssociationStrategy("user_centric"))
        assert out == [1]

    def test_no_visibility_empty_list(self):
        out = choose_ap({0: budget(-200.0, visible=False)}, {0: 0.0},
                        AssociationStrategy("user_centric"))
        assert out == []

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            choose_ap({}, {}, AssociationStrategy("psychic"))


class TestAdmit:
    def test_first_candidate_with_full_grant_wins(self):
        pools = {0: NrPool(135, 720e3), 1: NrPool(135, 720e3)}
        state = admit(7, fresh(7), [0, 1], pools, {0: 4.793e6, 1: 4.793e6},
                      10e6, 5e6)
        assert state.connected and state.ap == 0
        assert state.achieved_bps == 10e6
        assert 7 in pools[0].allocations
        assert not pools[1].allocations  # untouched

    def test_spills_to_second_when_first_exhausted(self):
        pools = {0: NrPool(0, 720e3), 1: NrPool(135, 720e3)}
        state = admit(7, fresh(7), [0, 1], pools, {0: 4.793e6, 1: 4.793e6},
                      10e6, 5e6)
        assert state.connected and state.ap == 1

    def test_all_reject_increments_counter(self):
        pools = {0: NrPool(0, 720e3)}
        state = admit(7, fresh(7), [0], pools, {0: 4.793e6}, 10e6, 5e6)
        assert state.phase == cac.PHASE_REJECTED
        assert state.history.rejections == 1

    def test_below_minimum_grant_rolled_back(self):
        pools = {0: NrPool(1, 720e3)}  # 1 RB at 4 Mbps < 5 Mbps minimum
        state = admit(7, fresh(7), [0], pools, {0: 4e6}, 10e6, 5e6)
        assert state.phase == cac.PHASE_REJECTED
        assert pools[0].free == 1

    def test_degraded_grant_above_minimum_accepted(self):
        pools = {0: NrPool(2, 720e3)}
        state = admit(7, fresh(7), [0], pools, {0: 4.793e6}, 10e6, 5e6)
        assert state.connected
        assert state.achieved_bps == pytest.approx(9.586e6)

    def test_no_candidates_keeps_requesting(self):
        state = admit(7, fresh(7), [], {}, {}, 10e6, 5e6)
        assert state.phase == cac.PHASE_REQUESTING
        assert state.history.rejections == 0


class TestUpdateConnection:
    def test_healthy_quote_stays_connected(self):
        pool = NrPool(10, 720e3)
        q = pool.allocate(0, 10e6, 5e6)
        state = ConnectionState(0, cac.PHASE_CONNECTED, ap=0, quote=q,
                                achieved_bps=q.achievable_bps)
        updated, handover = update_connection(state, q, 5e6)
        assert not handover
        assert updated.connected and updated.achieved_bps == 10e6

    def test_degraded_quote_requests_handover(self):
        pool = NrPool(10, 720e3)
        pool.allocate(0, 10e6, 5e6)
        q = pool.reallocate(0, 0.4e6, 10e6)  # all 10 RBs: 4 Mbps < minimum
        state = ConnectionState(0, cac.PHASE_CONNECTED, ap=0, quote=q,
                                achieved_bps=10e6)
        _, handover = update_connection(state, q, 5e6)
        assert handover

    def test_requires_connected_state(self):
        with pytest.raises(ValueError):
            update_connection(fresh(), None, 5e6)


class TestAttemptHandover:
    def setup_method(self):
        self.budgets = {0: budget(-70.0), 1: budget(-75.0)}
        self.loads = {0: 0.0, 1: 0.0}
        self.strategy = AssociationStrategy("user_centric")

    def test_handover_to_alternative(self):
        pools = {0: NrPool(1, 720e3), 1: NrPool(135, 720e3)}
        q = pools[0].allocate(4, 10e6, 4e6)  # 4 Mbps, below min
        state = ConnectionState(4, cac.PHASE_CONNECTED, ap=0, quote=q,
                                achieved_bps=4e6)
        out = attempt_handover(4, state, self.budgets, self.loads, pools,
                               {0: 4e6, 1: 4.793e6}, 10e6, 5e6, self.strategy)
        assert out.connected and out.ap == 1
        assert out.history.handovers == 1
        assert out.history.drops == 0
        assert 4 not in pools[0].allocations

    def test_no_alternative_drops_and_releases(self):
        pools = {0: NrPool(1, 720e3)}
        q = pools[0].allocate(4, 10e6, 4e6)
        state = ConnectionState(4, cac.PHASE_CONNECTED, ap=0, quote=q,
                                achieved_bps=4e6)
        out = attempt_handover(4, state, {0: self.budgets[0]}, self.loads,
                               pools, {0: 4e6}, 10e6, 5e6, self.strategy)
        assert out.phase == cac.PHASE_DROPPED
        assert out.history.drops == 1
        assert pools[0].free == 1

    def test_current_ap_retried_last(self):
        # current AP can serve again (e.g. after its own re-plan freed
        # room): re-admission there counts no handover
        pools = {0: NrPool(135, 720e3)}
        q = pools[0].allocate(4, 10e6, 0.4e6)
        state = ConnectionState(4, cac.PHASE_CONNECTED, ap=0, quote=q,
                                achieved_bps=4e6)
        out = attempt_handover(4, state, {0: self.budgets[0]}, self.loads,
                               pools, {0: 4.793e6}, 10e6, 5e6, self.strategy)
        assert out.connected and out.ap == 0
        assert out.history.handovers == 0


class TestBackhaul:
    def test_builtin_always_true(self):
        sc = builtin_paper_scenario()
        assert all(ap_backhaul_check(ap, sc) for ap in sc.aps)

    def test_flagged_ap_reports_down(self):
        import dataclasses
        sc = builtin_paper_scenario()
        down = dataclasses.replace(sc.aps[1], backhaul_up=False)
        assert ap_backhaul_check(down, sc) is False

    def test_satellite_always_backhauled(self):
        import dataclasses
        sc = builtin_paper_scenario()
        sat_down = dataclasses.replace(sc.aps[0], backhaul_up=False)
        assert ap_backhaul_check(sat_down, sc) is True


class TestInvariants:
    def test_user_centric_argmax_invariance(self):
        rng = random.Random(11)
        for _ in range(50):
            budgets = {
                j: budget(rng.uniform(-100, -50),
                          visible=rng.random() < 0.8)
                for j in range(4)
            }
            pools = {j: NrPool(135, 720e3) for j in range(4)}
            rates = {j: 4.793e6 for j in range(4)}
            candidates = choose_ap(budgets, {j: 0.0 for j in range(4)},
                                   AssociationStrategy("user_centric"))
            state = admit(0, fresh(), candidates, pools, rates, 10e6, 5e6)
            visible = [j for j, b in budgets.items() if b.visible]
            if not visible:
                assert state.phase == cac.PHASE_REQUESTING
            else:
                best = max(visible, key=lambda j: budgets[j].rx_power_dbm)
                assert state.ap == best

    def test_single_association_and_conservation(self):
        rng = random.Random(23)
        pools = {0: NrPool(20, 720e3), 1: SatPool(SatFrameConfig())}
        budgets = {0: budget(-70.0), 1: budget(-120.0)}
        rates = {0: 4.793e6, 1: 682e3}
        strategy = AssociationStrategy("user_centric")
        states = {i: ConnectionState(ue=i) for i in range(12)}
        for _ in range(200):
            i = rng.randrange(12)
            st = states[i]
            if not st.connected:
                candidates = choose_ap(budgets, {0: 0.0, 1: 0.0}, strategy)
                states[i] = admit(i, st, candidates, pools, rates, 10e6, 5e6)
            elif rng.random() < 0.3:
                pools[st.ap].release(i)
                states[i] = ConnectionState(ue=i, phase=cac.PHASE_REQUESTING,
                                            history=st.history)
            # each connected UE appears in exactly one pool
            for i2, s2 in states.items():
                holdings = [j for j, p in pools.items()
                            if i2 in p.allocations]
                if s2.connected:
                    assert holdings == [s2.ap]
                else:
                    assert holdings == []
