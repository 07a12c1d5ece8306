"""Generate a few MiniLang methods, inject a bug, and confirm it with the interpreter."""
# %%
import copy
import random

from ibpm import corpus as cm
from ibpm.minilang import NULL_DEREF, build_cfg, generate_program, inject_bug, interpret, render

rng = random.Random(3)
program = generate_program(rng)
target = program.methods[0].name
print(render(program))

# %% Injection removes a guard or widens a bound; the trigger input is kept.
inj = inject_bug(program, target, NULL_DEREF, random.Random(11))
print("faulty line:", inj.line)
print("replay:", interpret(inj.program, target, copy.deepcopy(inj.trigger)))

# %% The labelled statement graph.
mg = build_cfg(inj.program, target).with_labels((inj.line,), NULL_DEREF)
for i in mg.rankable():
    mark = "*" if mg.labels[i] else " "
    print(f"{mark} {mg.nodes[i].line:3d}  {' '.join(mg.nodes[i].tokens)}")

# %% A small corpus: clean partners are picked by token-bigram similarity.
c = cm.generate(60, seed=5)
print(c.counts())
print("train/test collisions:", cm.split_collisions(c))
