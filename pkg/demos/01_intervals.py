"""Walk the derived sequence of a small flow graph, then of a real method."""
# %%
from ibpm.intervals import derive
from ibpm.fixtures import SUBSTRING_SEARCH, figure4
from ibpm.minilang import build_cfg, parse

g = figure4()
print("edges:", sorted(g.proper_edges("ControlFlow")))

# %% Each level collapses its intervals into fresh nodes.
seq = derive(g)
for k, level in enumerate(seq.levels, 1):
    parts = [sorted(iv.members) for iv in level.partition.intervals]
    print(f"level {k}: {parts}")
print("terminal:", seq.terminal.value)

# %% Provenance: which lower nodes each new node absorbed.
for k, prov in enumerate(seq.provenance, 2):
    for node, iv in sorted(prov.items()):
        print(f"level {k} node {node} <- {sorted(iv.members)} (header {iv.header})")

# %% A nested loop in MiniLang needs several derivation steps.
mg = build_cfg(parse(SUBSTRING_SEARCH), "indexOf")
seq = derive(mg.graph)
print(f"{len(mg.nodes)} statements, {len(seq.levels)} levels, terminal {seq.terminal.value}")
for k, level in enumerate(seq.levels, 1):
    big = [sorted(iv.members) for iv in level.partition.intervals if len(iv) > 1]
    print(f"level {k}: non-trivial intervals {big}")
