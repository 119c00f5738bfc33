"""Interactive segmentation of rigid objects from pushes and optical flow.

A static segmenter under-segments touching objects; short pushes chosen on
its uncertainty map make the objects move, and the rigid-body twists
recovered from the flow split the merged regions apart.
"""

from .bfif import (
    FrameGrouping,
    PairFeature,
    SamplerConfig,
    compute_bfifs,
    group_bfifs,
    sample_frames,
)
from .config import RunConfig
from .correction import CorrectionConfig, correct_mask, project_mask, warp_flow
from .episode import EpisodeRecord, generate_suite, run_episode, run_suite
from .kde import GroupingModel, load_model, posterior_same, save_model
from .metrics import MetricsReport, boundary_prf, evaluate, match_objects, object_accuracy, overlap_prf
from .oracles import FlowField, OracleConfig, oracle_flow, oracle_static_seg
from .planner import PlannerConfig, find_action, kmeans_elbow, threshold_pixels
from .scene import PushAction, RigidBody, SceneState, apply_push, generate_scene, render_labels
from .se3 import BodyFrame, Pose, Twist, exp_se3, frame_from_triplet, log_se3, spatial_twist
from .training import train_command, train_grouping_model

__version__ = "0.1.0"
