"""
One interactive episode
=======================

Observe, push, re-observe, group and correct, up to three times. The
static segmenter keeps fusing the touching boxes; the accumulated mask
splits them after the first push.
"""

import numpy as np

from riseg.config import RunConfig
from riseg.episode import run_episode
from riseg.scene import RigidBody, SceneState
from riseg.training import train_command

cfg = RunConfig.from_dict(noise_sigma=0.0)
model = train_command(10, seed=1, cfg=cfg)
rect = np.array([[-0.025, -0.02], [0.025, -0.02], [0.025, 0.02], [-0.025, 0.02]])
scene = SceneState((RigidBody(1, rect, 0.0, -0.025, 0.0), RigidBody(2, rect, 0.0, 0.025, 0.0)))

rec = run_episode(scene, model, cfg, "pair")
for st in rec.steps:
    push = "start" if st.action is None else f"push at {st.action.contact_point}"
    print(f"step {st.index} ({push}): static accuracy {st.metrics_static.object_accuracy:.2f}, "
          f"interactive accuracy {st.metrics_riseg.object_accuracy:.2f}, groups {st.n_groups}")
