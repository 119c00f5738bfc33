"""
Benchmark: static segmentation against interactive correction
=============================================================

Train a grouping model at 0.3 px flow noise, run the default 20-scene
suite with up to three pushes, and print the mean scores per push for both
methods. Takes about a minute. The same run from a shell:

    riseg generate --count 20 --objects 4..6 --seed 0 --out suite
    riseg train-kde --episodes 40 --seed 7 --out model.riskde
    riseg run --suite suite --model model.riskde --out run
    riseg eval --run run
"""

from riseg.config import RunConfig
from riseg.episode import generate_suite, run_suite
from riseg.training import train_command

cfg = RunConfig()
model = train_command(40, seed=7, cfg=cfg)
_, _, summary = run_suite(generate_suite(20, (4, 6), 0), model, cfg)
print("push  static_acc  riseg_acc  static_F  riseg_F")
for k in range(cfg.max_pushes + 1):
    s, r = summary["per_push"]["static"][str(k)], summary["per_push"]["riseg"][str(k)]
    print(f"{k:4d}  {s['object_accuracy']:10.3f}  {r['object_accuracy']:9.3f}  {s['overlap_f']:8.3f}  {r['overlap_f']:7.3f}")
