"""
How good are the RIS phases?
============================

Hold the precoders fixed and compare the penalty-based phase optimizer with
plain random search over unit-modulus phase vectors.
"""

import numpy as np

from secure_rsma import RisPhases, generate_channels, default_config
from secure_rsma.config import derive_trial_seed
from secure_rsma.optim import baseline_configure, check_design, initial_state, optimize_phases

cfg = default_config().replace(m_ris=8)
seed = derive_trial_seed(cfg.master_seed, 3)
ch = generate_channels(cfg, seed)
variant = baseline_configure(cfg, "RSMA", ch)
rng = np.random.default_rng(seed)
state = initial_state(ch, cfg, variant, RisPhases.random(cfg.m_ris, rng), rng)


def value(phases):
    rep, _, ok = check_design(ch, phases, state.prec, state.alloc, cfg, variant)
    return rep.r_sec_min if ok else -np.inf


print(f"starting phases:    {value(state.phases):.4f}")

###############################################################################
# Random search: the running best over 2000 draws.

draws = [value(RisPhases.random(cfg.m_ris, rng)) for _ in range(2000)]
running = np.maximum.accumulate(draws)
for n in (10, 100, 1000, 2000):
    print(f"best of {n:4d} random: {running[n - 1]:.4f}")

###############################################################################
# The optimizer, with its trace of penalized SCA steps.

trace = []
out = optimize_phases(state, ch, cfg, variant, trace, rng=np.random.default_rng(0))
print(f"optimized phases:   {value(out.phases):.4f}")
print(f"max ||s_m| - 1| = {np.max(np.abs(np.abs(out.phases.s) - 1)):.1e}")
for rec in trace[:8]:
    print(f"  [{rec['start']}] iter {rec['iter']} esc {rec['escalation']}  "
          f"surrogate {rec['zeta']:.4f}  projected {rec['projected_zeta']:.4f}  min|s| {rec['min_modulus']:.3f}")
