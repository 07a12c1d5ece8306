"""Train standard and interval-based detectors on one corpus and compare them.

Takes a few minutes on one core. Pass a smaller --n for a quick look.
"""
# %%
import argparse
import json

from ibpm import corpus as cm
from ibpm import detector as dt
from ibpm.model import ModelConfig

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=400)
ap.add_argument("--epochs", type=int, default=10)
ap.add_argument("--seed", type=int, default=1970)
args = ap.parse_args()

c = cm.generate(args.n, seed=args.seed)
print(c.counts())

# %%
result = dt.ablate(c, ModelConfig(1, 32, 32), dt.TrainConfig(epochs=args.epochs, seed=args.seed), ks=(1, 3, 5))
print("always-buggy baseline F1:", round(result["baseline_always_buggy_f1"], 3))
for row in result["rows"]:
    rep = row["report"]["all"]
    top3 = rep["statement"]["3"]
    print(f"{row['mode']:>8}: method F1 {rep['method']['f1']:.3f}  top-3 F1 {top3['f1']:.3f}  "
          f"top-3 hit rate {top3['hit_rate_tp_methods']:.3f}  (best epoch {row['best_epoch']})")
print(json.dumps(result["gap_ibpm_minus_standard"], indent=2))
print(dt.ablation_csv(result))
