"""Interactive segmentation episodes: observe, push, re-observe, correct.

Each episode starts from the static segmentation, then repeatedly plans a
push on the uncertainty map, executes it in the simulator and corrects the
accumulated mask from the observed motion, until the planner finds nothing
to push or the push budget is spent. The static segmentation of every
observation is scored alongside as the baseline.
"""

from __future__ import annotations

import csv
import io as _io
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .bfif import compute_bfifs, group_bfifs, sample_frames, FrameGrouping
from .config import RunConfig, save_config
from .correction import correct_mask, project_mask, warp_flow
from .errors import InsufficientFrames, RisegError
from .kde import GroupingModel
from .metrics import MetricsReport, evaluate
from .oracles import FlowField, oracle_flow, oracle_static_seg
from .planner import find_action
from .scene import PushAction, SceneState, generate_scene, render_labels, apply_push

METRIC_FIELDS = (
    "overlap_p", "overlap_r", "overlap_f", "boundary_p", "boundary_r", "boundary_f", "object_accuracy",
)
CSV_FIELDS = ("scene_id", "push_index", "method") + METRIC_FIELDS

# stream tags for derived seeds
ORACLE, PLAN, FLOW, SAMPLE = 1, 2, 3, 4


def derive_seed(master: int, scene_id: str, step: int, purpose: int) -> int:
    """Independent 32-bit seed for one (scene, step, purpose) stream."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(str(scene_id).encode()), int(step), int(purpose)])
    return int(ss.generate_state(1)[0])


@dataclass(eq=False)
class StepRecord:
    index: int
    scene: SceneState
    gt_mask: np.ndarray
    static_mask: np.ndarray
    uncertainty: np.ndarray
    action: PushAction | None
    flow: FlowField | None
    riseg_mask: np.ndarray
    metrics_static: MetricsReport
    metrics_riseg: MetricsReport
    n_frames: int = 0
    n_groups: int = 0


@dataclass(eq=False)
class EpisodeRecord:
    scene_id: str
    steps: list = field(default_factory=list)
    failure: str | None = None

    @property
    def n_pushes(self) -> int:
        return len(self.steps) - 1


def _observe(scene, cfg, oracle_seed):
    labels, u = oracle_static_seg(scene, oracle_seed, cfg.oracle)
    return render_labels(scene), labels, u


def run_episode(scene: SceneState, model: GroupingModel, cfg: RunConfig | None = None,
                scene_id: str = "scene") -> EpisodeRecord:
    """Run one episode and score both methods after every observation."""
    cfg = cfg or RunConfig()
    rec = EpisodeRecord(scene_id)
    oracle_seed = derive_seed(cfg.master_seed, scene_id, 0, ORACLE)
    tol = cfg.boundary_tol_px
    gt, static, u = _observe(scene, cfg, oracle_seed)
    acc = static.copy()
    rec.steps.append(StepRecord(0, scene, gt, static, u, None, None, acc, evaluate(static, gt, tol), evaluate(acc, gt, tol)))
    for k in range(1, cfg.max_pushes + 1):
        action = find_action(u, cfg.planner, derive_seed(cfg.master_seed, scene_id, k, PLAN))
        if action is None:
            break
        try:
            nxt = apply_push(scene, action, cfg.push)
            gt1, static1, u1 = _observe(nxt, cfg, oracle_seed)
            flow = oracle_flow(scene, nxt, cfg.noise_sigma, derive_seed(cfg.master_seed, scene_id, k, FLOW))
            try:
                ft, ft1 = sample_frames(acc, flow, cfg.sampler, derive_seed(cfg.master_seed, scene_id, k, SAMPLE))
                twists = compute_bfifs(ft, ft1, cfg.twist_method)
                grouping = group_bfifs(twists, ft, model, cfg.tau, cfg.sampler.move_eps, cfg.sampler.pixel_pitch,
                                       cfg.sampler.feature)
            except InsufficientFrames:
                ft, ft1, grouping = [], [], FrameGrouping((), (), ())
            reach = cfg.correction.hole_reach
            projected = project_mask(acc, flow, static1, reach)
            warped = warp_flow(acc, flow, static1, reach)
            acc = correct_mask(projected, static1, grouping, ft1, warped, cfg.correction)
        except RisegError as exc:
            rec.failure = f"push {k}: {type(exc).__name__}: {exc}"
            break
        scene, gt, static, u = nxt, gt1, static1, u1
        rec.steps.append(StepRecord(
            k, scene, gt, static, u, action, flow, acc,
            evaluate(static, gt, tol), evaluate(acc, gt, tol), len(ft), len(grouping.groups),
        ))
    return rec


def episode_rows(rec: EpisodeRecord) -> list:
    rows = []
    for st in rec.steps:
        for method, m in (("static", st.metrics_static), ("riseg", st.metrics_riseg)):
            row = {"scene_id": rec.scene_id, "push_index": st.index, "method": method}
            row.update({f: getattr(m, f) for f in METRIC_FIELDS})
            rows.append(row)
    return rows


def format_csv(rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r[f] if f in ("scene_id", "push_index", "method") else f"{r[f]:.6f}" for f in CSV_FIELDS])
    return buf.getvalue()


def read_metrics_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["push_index"] = int(r["push_index"])
        for f in METRIC_FIELDS:
            r[f] = float(r[f])
    return rows


def aggregate(rows, max_pushes: int) -> dict:
    """Per-push means for each method plus the final-state means.

    An episode that stopped early keeps contributing its last observation to
    the later push indices, so every index averages over all episodes.
    """
    by_ep = {}
    for r in rows:
        by_ep.setdefault((r["scene_id"], r["method"]), {})[r["push_index"]] = r
    out = {"n_episodes": len({k[0] for k in by_ep}), "per_push": {}, "final": {}}
    for method in ("static", "riseg"):
        eps = [v for k, v in sorted(by_ep.items()) if k[1] == method]
        if not eps:
            continue
        table = {}
        for k in range(max_pushes + 1):
            picked = [steps[min(k, max(steps))] for steps in eps]
            table[str(k)] = {f: float(np.mean([p[f] for p in picked])) for f in METRIC_FIELDS}
        out["per_push"][method] = table
        finals = [steps[max(steps)] for steps in eps]
        out["final"][method] = {f: float(np.mean([p[f] for p in finals])) for f in METRIC_FIELDS}
    return out


def save_episode(run_dir, rec: EpisodeRecord) -> None:
    """Masks, flow, actions and the ground truth of every step under ``run_dir/scene_id``."""
    d = Path(run_dir) / rec.scene_id
    d.mkdir(parents=True, exist_ok=True)
    for st in rec.steps:
        k = st.index
        io.write_label_pgm(d / f"mask_static_{k}.pgm", st.static_mask)
        io.write_label_pgm(d / f"mask_riseg_{k}.pgm", st.riseg_mask)
        io.write_label_pgm(d / f"gt_{k}.pgm", st.gt_mask)
        io.write_uncertainty_pgm(d / f"uncertainty_{k}.pgm", st.uncertainty)
        io.write_scene(d / f"scene_{k}.json", st.scene)
        if st.flow is not None:
            io.write_flow(d / f"flow_{k}.risflow", st.flow.du, st.flow.dv)
        if st.action is not None:
            (d / f"action_{k}.json").write_text(json.dumps(st.action.to_dict(k)) + "\n")
    if rec.failure:
        (d / "failure.txt").write_text(rec.failure + "\n")


def run_suite(scenes, model: GroupingModel, cfg: RunConfig | None = None, run_dir=None):
    """Run every ``(scene_id, scene)`` pair; returns ``(records, rows, summary)``.

    With ``run_dir`` the per-step artefacts, ``metrics.csv``, ``summary.json``
    and ``config_resolved.json`` are written there.
    """
    cfg = cfg or RunConfig()
    scenes = list(scenes)
    if not scenes:
        raise ValueError("suite is empty")
    records, rows = [], []
    for scene_id, scene in scenes:
        rec = run_episode(scene, model, cfg, scene_id)
        records.append(rec)
        rows.extend(episode_rows(rec))
    summary = aggregate(rows, cfg.max_pushes)
    summary["failures"] = {r.scene_id: r.failure for r in records if r.failure}
    summary["master_seed"] = cfg.master_seed
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        for rec in records:
            save_episode(run_dir, rec)
        (run_dir / "metrics.csv").write_text(format_csv(rows))
        (run_dir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        save_config(run_dir / "config_resolved.json", cfg)
    return records, rows, summary


def evaluate_run(run_dir, tol_px: int | None = None):
    """Recompute metrics from the masks stored in a run directory."""
    run_dir = Path(run_dir)
    cfg = json.loads((run_dir / "config_resolved.json").read_text())
    tol = cfg.get("boundary_tol_px", 1) if tol_px is None else tol_px
    rows = []
    for d in sorted(p for p in run_dir.iterdir() if p.is_dir()):
        k = 0
        while (d / f"gt_{k}.pgm").exists():
            gt = io.read_pgm(d / f"gt_{k}.pgm")
            for method in ("static", "riseg"):
                m = evaluate(io.read_pgm(d / f"mask_{method}_{k}.pgm"), gt, tol)
                row = {"scene_id": d.name, "push_index": k, "method": method}
                row.update({f: getattr(m, f) for f in METRIC_FIELDS})
                rows.append(row)
            k += 1
    return rows, aggregate(rows, int(cfg.get("max_pushes", 3)))


def generate_suite(count: int, n_objects=(4, 6), seed: int = 0, out_dir=None, config=None):
    """``count`` scenes with object counts drawn from the inclusive range ``n_objects``."""
    lo, hi = n_objects
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5017E]))
    scenes = []
    for i in range(count):
        n = int(rng.integers(lo, hi + 1))
        scenes.append((f"scene_{i:03d}", generate_scene(int(rng.integers(2**31)), n, config)))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for sid, sc in scenes:
            io.write_scene(out / f"{sid}.json", sc)
    return scenes


def load_suite(suite_dir):
    return [(p.stem, io.read_scene(p)) for p in sorted(Path(suite_dir).glob("*.json"))]
