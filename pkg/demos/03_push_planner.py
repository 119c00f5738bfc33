"""
Choosing where to push
======================

The static segmenter reports a per-pixel uncertainty map. Confident pixels
and doubtful pixels are clustered separately with k-means (the cluster
count comes from an elbow rule). The push goes on the boundary of a
confident cluster, perpendicular to the axis joining it to a nearby one,
so a doubtful seam between two objects gets pulled apart.
"""

import numpy as np

from riseg.oracles import oracle_static_seg
from riseg.planner import PlannerConfig, find_action
from riseg.scene import RigidBody, SceneState

rect = np.array([[-0.02, -0.03], [0.02, -0.03], [0.02, 0.03], [-0.02, 0.03]])
scene = SceneState((RigidBody(1, rect, 0.0, -0.02, 0.0), RigidBody(2, rect, 0.0, 0.02, 0.0)))
labels, u = oracle_static_seg(scene, seed=0)
print("static labels seen:", np.unique(labels[labels > 0]).tolist(), "(two touching boxes fused into one)")
print("pixels at each uncertainty band:", {lvl: int(np.sum((u >= lo) & (u < hi))) for lvl, (lo, hi) in {"certain": (150, 256), "doubtful": (120, 150), "low": (1, 120)}.items()})

cfg = PlannerConfig()
action = find_action(u, cfg, seed=0)
print("push at pixel", action.contact_point, "direction", np.round(action.direction, 3), "distance", action.distance)

# with no doubtful band there is nothing to resolve
print("band switched off:", find_action(u, PlannerConfig(l_l=256), seed=0))
