"""
Scoring instance masks
======================

Predicted labels are matched one-to-one to ground-truth labels so that the
summed overlap F is largest. Overlap and boundary P/R/F and the share of
objects matched with F >= 0.75 are then read off the matching.
"""

import numpy as np

from riseg.metrics import evaluate, match_objects, overlap_prf

gt = np.zeros((4, 4), dtype=int)
gt[0, :] = 1
pred = np.zeros_like(gt)
pred[0, :3] = 7
pred[1, 0] = 7
print("overlap P/R/F:", overlap_prf(pred, gt))

# an under-segmentation: one predicted label covering two objects
gt = np.zeros((20, 20), dtype=int)
gt[2:10, 2:18] = 1
gt[10:18, 2:18] = 2
merged = np.where(gt > 0, 5, 0)
print("matching:", match_objects(merged, gt))
print(evaluate(merged, gt))
print(evaluate(gt * 3, gt))
