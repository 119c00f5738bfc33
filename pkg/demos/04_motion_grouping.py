"""
Grouping frames by motion
=========================

Frames are sampled on the current mask, tracked through the flow, turned
into twists and linked whenever a kernel-density posterior says the pair
shares a body. A model trained on a few simulated pushes is enough.
"""

import numpy as np

from riseg.bfif import SamplerConfig, compute_bfifs, group_bfifs, sample_frames
from riseg.config import RunConfig
from riseg.oracles import oracle_flow, oracle_static_seg
from riseg.planner import find_action
from riseg.scene import RigidBody, SceneState, apply_push, render_labels
from riseg.training import train_command

cfg = RunConfig.from_dict(noise_sigma=0.0)
model = train_command(10, seed=1, cfg=cfg)
print("same-body prior", round(model.prior_same, 3))

rect = np.array([[-0.025, -0.02], [0.025, -0.02], [0.025, 0.02], [-0.025, 0.02]])
scene = SceneState((RigidBody(1, rect, 0.0, -0.025, 0.0), RigidBody(2, rect, 0.0, 0.025, 0.0)))
mask, u = oracle_static_seg(scene, 0)
after = apply_push(scene, find_action(u, cfg.planner, 0))
flow = oracle_flow(scene, after, 0.0)

sampler = SamplerConfig.for_noise(0.0)
ft, ft1 = sample_frames(mask, flow, sampler, seed=0)
twists = compute_bfifs(ft, ft1)
g = group_bfifs(twists, ft, model, 0.5, sampler.move_eps, sampler.pixel_pitch, sampler.feature)
truth = render_labels(scene)
print(f"{len(ft)} frames, {len(g.moving)} moving, {len(g.groups)} groups")
for n, members in enumerate(g.groups):
    bodies = {int(truth[tuple(np.rint(ft[i].anchor_pixels[0]).astype(int))]) for i in members}
    print(f"group {n}: {len(members)} frames on bodies {sorted(bodies)}")
