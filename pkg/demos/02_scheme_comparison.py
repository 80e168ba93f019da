"""
Rate splitting against SDMA and NOMA
====================================

Every trial draws one channel realization and runs all three schemes on it,
so the comparison is paired. Ten trials keep this demo to about a minute;
the command-line tool runs the full studies.
"""

from secure_rsma import default_config
from secure_rsma.experiments import median_see, run_sweep, summarize

cfg = default_config()
reports = run_sweep(cfg, {"n_t": [2, 4]}, trials=10, workers=1)

###############################################################################
# Median SEE per scheme and antenna count.

for n_t in (2, 4):
    line = "  ".join(f"{s}: {median_see(reports, s, n_t=n_t):.3f}" for s in ("RSMA", "SDMA", "NOMA"))
    print(f"N_t={n_t}  {line}")

###############################################################################
# How often rate splitting wins on the same channel draw.

by_key = {(r.params()["n_t"], r.trial, r.scheme): r for r in reports}
for n_t in (2, 4):
    pairs = [(by_key[n_t, t, "RSMA"], by_key[n_t, t, "SDMA"]) for t in range(10)]
    wins = sum(a.ok and b.ok and a.see >= b.see - 1e-9 for a, b in pairs)
    print(f"N_t={n_t}: RSMA >= SDMA on {wins}/10 draws")

###############################################################################
# The summary structure is what ``emit_results`` writes as JSON.

for group in summarize(reports)["groups"][:3]:
    print(group)
