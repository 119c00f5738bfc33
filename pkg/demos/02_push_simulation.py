"""
Planar scenes and quasi-static pushes
=====================================

Random tabletop scenes are rendered to a 256 x 256 label image. A push
moves the contacted body and whatever it shoves along; bodies outside the
contact chain keep their pose exactly.
"""

import numpy as np

from riseg.scene import PushAction, apply_push, count_touching_pairs, generate_scene, render_labels

scene = generate_scene(seed=3, n_objects=5)
labels = render_labels(scene)
print("bodies:", [b.id for b in scene.bodies])
print("pixels per body:", {int(k): int(v) for k, v in zip(*np.unique(labels[labels > 0], return_counts=True))})
print("touching pairs:", count_touching_pairs(scene, 1e-3))

# push body 1 from a pixel on it, towards +column, by 2 cm
r, c = np.argwhere(labels == scene.bodies[0].id)[0]
after = apply_push(scene, PushAction((int(r), int(c)), (0.0, 1.0), 0.02))
for b0, b1 in zip(scene.bodies, after.bodies):
    moved = not b1.same_as(b0)
    print(f"body {b0.id}: moved={moved}  x {b0.x:+.4f} -> {b1.x:+.4f}  theta {b0.theta:+.4f} -> {b1.theta:+.4f}")
