"""Count messages of plain synchronous propagation against the interval schedule."""
# %%
import random
from collections import Counter

from ibpm.intervals import derive
from ibpm.fixtures import figure4
from ibpm.graph import Mode
from ibpm.propagation import (closed_form_messages, ibpm_bound, max_unit_diameter, run_ibpm_to_fixed_point,
                              run_to_fixed_point)
from ibpm.randgraphs import irreducible_cfg, reducible_cfg

g = figure4()
reach, ledger = run_to_fixed_point(g)
print("plain: rounds", reach.round, "diameter", g.diameter(Mode.SYMMETRIZED), "messages", ledger.total)

seq = derive(g)
ib = run_ibpm_to_fixed_point(seq)
print("interval schedule:", ib.total, "closed form:", closed_form_messages(seq), "bound:", ibpm_bound(seq, ib.total))
for part in ib.to_dict()["breakdown"]:
    where = "peak" if part["interval"] is None else f"interval headed by {part['interval']}"
    print(f"  level {part['level']}, {where}: {part['messages']}")

# %% Random CFGs: how much does the schedule save, and how large do intervals get?
rng = random.Random(7)
saved, taus = [], Counter()
for _ in range(300):
    g = reducible_cfg(rng, 5, 40) if rng.random() < 0.8 else irreducible_cfg(rng, 5, 30)
    seq = derive(g)
    plain = run_to_fixed_point(g)[1].total
    ib = run_ibpm_to_fixed_point(seq).total
    saved.append(ib / plain if plain else 1.0)
    taus[max_unit_diameter(seq)] += 1
saved.sort()
print(f"interval/plain message ratio: median {saved[len(saved) // 2]:.2f}, worst {saved[-1]:.2f}")
print("largest unit diameter:", dict(sorted(taus.items())))
