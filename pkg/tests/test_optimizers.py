import numpy as np
import pytest

from secure_rsma import RisPhases, generate_channels, default_config
from secure_rsma.config import derive_trial_seed
from secure_rsma.metrics import eh_report, secrecy_report
from secure_rsma.optim import (SubproblemInfeasible, alternating_optimize, baseline_configure, check_design,
                               dinkelbach_precoders, initial_state, optimize_phases, precoder_subproblem,
                               restore_feasibility)
from secure_rsma.optim.common import eh_threshold
from secure_rsma.optim.precoder import _precoders_from


def feasible_start(cfg, trial, scheme="RSMA"):
    seed = derive_trial_seed(cfg.master_seed, trial)
    ch = generate_channels(cfg, seed)
    variant = baseline_configure(cfg, scheme, ch)
    rng = np.random.default_rng(seed)
    state = initial_state(ch, cfg, variant, RisPhases.random(ch.m_ris, rng), rng)
    return ch, variant, state


@pytest.fixture(scope="module")
def start(small_cfg):
    ch, variant, state = feasible_start(small_cfg, 0)
    assert state is not None
    return ch, variant, state


def test_initial_state_is_feasible(small_cfg):
    for t in range(4):
        ch, variant, state = feasible_start(small_cfg, t)
        if state is None:
            continue
        _, _, ok = check_design(ch, state.phases, state.prec, state.alloc, small_cfg, variant, state.r_c)
        assert ok


def test_sdma_has_no_common_stream(small_cfg):
    ch, variant, _ = feasible_start(small_cfg, 1, "SDMA")
    res = alternating_optimize(ch, small_cfg, variant, seed=1)
    assert res.status == "ok"
    assert np.array_equal(res.state.prec.p_c, np.zeros(small_cfg.n_t))


def test_noma_is_single_layer(small_cfg):
    ch, variant, _ = feasible_start(small_cfg, 1, "NOMA")
    res = alternating_optimize(ch, small_cfg, variant, seed=1)
    assert res.status == "ok"
    a = res.state.alloc.a
    assert np.sum(a == 1.0) == 1 and np.sum(a == 0.0) == small_cfg.k_users - 1
    weak = int(np.argmax(a))
    assert np.array_equal(res.state.prec.p_p[weak], np.zeros(small_cfg.n_t))


def test_noma_needs_channels(small_cfg):
    with pytest.raises(ValueError):
        baseline_configure(small_cfg, "NOMA")


def unclamped_value(ch, state, cfg):
    """Secrecy objective at a point with only the common term clamped, as the precoder program sees it."""
    rep = secrecy_report(ch, state.phases, state.prec, state.alloc, cfg)
    private = np.log2(1 + rep.gamma_p) - np.log2(1 + rep.gamma_p_eve.max(axis=0))
    return float(np.min(state.alloc.a * rep.r_c_sec + private))


def test_expansion_point_keeps_subproblems_feasible(small_cfg):
    # lower-bounding surrogates are tight at the expansion point, so a feasible
    # start must give a solvable program whose optimum is no worse than the start
    checked = 0
    for t in range(4):
        ch, variant, state = feasible_start(small_cfg, t)
        if state is None:
            continue
        res = precoder_subproblem(state, ch, small_cfg, variant, lam=0.0)
        assert res.ok
        assert res["zeta"] >= unclamped_value(ch, state, small_cfg) - 1e-6
        checked += 1
    assert checked >= 2


def test_large_lambda_moves_toward_eh_floor(small_cfg):
    threshold = eh_threshold(small_cfg)
    for t in range(4):
        ch, variant, state = feasible_start(small_cfg, t)
        if state is None:
            continue
        power, margin = [], []
        for lam in (0.0, 1e4):
            res = precoder_subproblem(state, ch, small_cfg, variant, lam)
            assert res.ok
            prec = _precoders_from(res, variant, small_cfg, state.prec.p_p.shape)
            power.append(prec.total_power)
            margin.append(eh_report(ch, state.phases, prec, small_cfg).p_eh_sum / threshold - 1)
        assert power[1] < power[0]
        assert 0 <= margin[1] <= margin[0]


def test_unreachable_eh_target_fails_cleanly():
    cfg = default_config().replace(n_t=2, m_ris=4, p_max_w=1e-6)
    ch, variant, state = feasible_start(cfg, 0)
    assert state is None
    res = alternating_optimize(ch, cfg, variant, seed=0)
    assert res.status == "failed" and "feasible" in res.reason
    assert np.isnan(res.see)


def test_single_dinkelbach_iteration_with_infinite_tolerance(start, small_cfg):
    ch, variant, state = start
    cfg = small_cfg.replace(tol_inner=float("inf"))
    trace = []
    dinkelbach_precoders(state, ch, cfg, variant, trace)
    assert len(trace) == 1


def test_dinkelbach_fixed_point_and_lambda_ascent(start, small_cfg):
    ch, variant, state = start
    trace = []
    out = dinkelbach_precoders(state, ch, small_cfg, variant, trace)
    lams = [r["lambda"] for r in trace]
    assert all(b >= a - 1e-6 for a, b in zip(lams, lams[1:]))
    last = trace[-1]
    if len(trace) < small_cfg.max_iters_inner:
        assert abs(last["objective"]) <= 10 * small_cfg.tol_inner
    _, _, ok = check_design(ch, out.phases, out.prec, out.alloc, small_cfg, variant, out.r_c)
    assert ok


def test_first_iteration_infeasibility_propagates(start, small_cfg):
    ch, variant, state = start
    tight = small_cfg.replace(e_h_joule=0.0239)  # just below saturation
    with pytest.raises(SubproblemInfeasible):
        dinkelbach_precoders(state, ch, tight, variant)
    assert restore_feasibility(state, ch, tight, variant) is None


def test_phases_unit_modulus_and_never_worse(start, small_cfg):
    ch, variant, state = start
    before = check_design(ch, state.phases, state.prec, state.alloc, small_cfg, variant, state.r_c)[0]
    out = optimize_phases(state, ch, small_cfg, variant, rng=np.random.default_rng(0))
    after, _, ok = check_design(ch, out.phases, out.prec, out.alloc, small_cfg, variant, out.r_c)
    assert ok
    assert after.r_sec_min >= before.r_sec_min
    # projection s/|s| is exact up to one rounding of the division
    assert np.max(np.abs(np.abs(out.phases.s) - 1)) <= 4e-16


def test_stationary_start_stops_after_one_iteration(start, small_cfg):
    ch, variant, state = start
    first = optimize_phases(state, ch, small_cfg, variant, screen=0)
    trace = []
    second = optimize_phases(first, ch, small_cfg, variant, trace, screen=0)
    assert len(trace) == 1
    v1 = check_design(ch, first.phases, first.prec, first.alloc, small_cfg, variant)[0].r_sec_min
    v2 = check_design(ch, second.phases, second.prec, second.alloc, small_cfg, variant)[0].r_sec_min
    assert v2 == pytest.approx(v1, abs=small_cfg.tol_inner)


def test_penalty_escalation_reaches_unit_circle(start, small_cfg):
    ch, variant, state = start
    trace = []
    optimize_phases(state, ch, small_cfg, variant, trace, screen=0)
    last = trace[-1]
    assert last["min_modulus"] >= 1 - 1e-3 or last["escalation"] == 5
    penalties = [r["penalty"] for r in trace]
    assert all(b >= a for a, b in zip(penalties, penalties[1:]))


def test_single_element_phase_matches_grid_search():
    cfg = default_config().replace(n_t=4, m_ris=1, p_max_w=0.1)
    grid = np.arange(0, 2 * np.pi, 0.01)
    checked = 0
    for t in range(10):
        ch, variant, state = feasible_start(cfg, t)
        if state is None:
            continue
        out = optimize_phases(state, ch, cfg, variant, rng=np.random.default_rng(t))
        got = check_design(ch, out.phases, out.prec, out.alloc, cfg, variant)[0].r_sec_min
        best = max((rep.r_sec_min for th in grid
                    for rep, _, ok in [check_design(ch, RisPhases.from_angles(np.array([th])), state.prec,
                                                    state.alloc, cfg, variant)] if ok), default=-np.inf)
        assert got >= best - 1e-3 * max(1.0, abs(best))
        checked += 1
    assert checked >= 5


def test_reported_see_matches_recomputation(small_cfg):
    ch, variant, _ = feasible_start(small_cfg, 2)
    res = alternating_optimize(ch, small_cfg, variant, seed=2)
    assert res.status == "ok"
    st = res.state
    fresh = secrecy_report(ch, st.phases, st.prec, st.alloc, small_cfg)
    assert res.see == pytest.approx(fresh.see, abs=1e-6)
    assert res.eh.p_eh_sum == pytest.approx(eh_report(ch, st.phases, st.prec, small_cfg).p_eh_sum, rel=1e-12)
    assert res.eh.p_eh_sum >= eh_threshold(small_cfg) * (1 - 1e-6)


def test_safeguard_reverts_injected_phases(small_cfg):
    ch, variant, _ = feasible_start(small_cfg, 0)
    injected = []

    def sabotage(phases):
        bad = RisPhases.random(phases.s.size, np.random.default_rng(len(injected)))
        injected.append(bad)
        return bad

    res = alternating_optimize(ch, small_cfg, variant, seed=0, phase_hook=sabotage)
    assert res.status == "ok"
    outer = [r for r in res.trace if r["stage"] == "ao"]
    assert any(r["reverted"] for r in outer)
    etas = [r["eta"] for r in outer]
    assert all(b >= a - small_cfg.tol_outer for a, b in zip(etas, etas[1:]))
    if outer[-1]["reverted"]:
        assert not np.array_equal(res.state.phases.s, injected[-1].s)


def test_ao_is_deterministic_per_seed(small_cfg):
    ch, variant, _ = feasible_start(small_cfg, 3)
    a = alternating_optimize(ch, small_cfg, variant, seed=3)
    b = alternating_optimize(ch, small_cfg, variant, seed=3)
    assert a.see == b.see
    assert np.array_equal(a.state.phases.s, b.state.phases.s)
