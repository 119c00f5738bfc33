"""
Body frame-invariant features
=============================

Every frame glued to one rigid body reports the same spatial twist when
the body moves, wherever the frame sits. Frames on a second body report a
different twist. That is the whole idea behind grouping pixels by motion.
"""

import numpy as np

from riseg.se3 import Pose, frame_from_triplet, spatial_twist, twist_distance

# one displacement: a turn of 0.1 rad about the point (0.05, 0.02) plus a small slide
q = np.array([0.05, 0.02, 0.0])
move = Pose.from_translation(0.01, 0.0, 0.0) @ Pose.from_translation(*q) @ Pose.planar(0.1) @ Pose.from_translation(*-q)

# two frames built from pixel-like point triplets on the same body
f1 = frame_from_triplet([0.00, 0.00, 0], [0.01, 0.00, 0], [0.00, 0.01, 0])
f2 = frame_from_triplet([0.08, -0.03, 0], [0.085, -0.02, 0], [0.07, -0.025, 0])
t1 = spatial_twist(f1, move @ f1)
t2 = spatial_twist(f2, move @ f2)
print("frame 1 twist", np.round(t1.vector(), 6))
print("frame 2 twist", np.round(t2.vector(), 6))
print("difference   ", twist_distance(t1, t2))

# a frame on a body that moved differently
other = Pose.planar(-0.05, 0.0, 0.01)
t3 = spatial_twist(f1, other @ f1)
print("other body   ", np.round(t3.vector(), 6), "distance", round(twist_distance(t1, t3), 4))

# the finite-difference estimate drifts as the rotation grows
print("fd vs log at 0.1 rad", np.abs(spatial_twist(f1, move @ f1, method="fd").vector() - t1.vector()).max())
small = Pose.planar(0.02, 0.005, 0.0)
print("fd vs log at 0.02 rad", np.abs(spatial_twist(f1, small @ f1, method="fd").vector() - spatial_twist(f1, small @ f1).vector()).max())
