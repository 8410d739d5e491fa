"""Command-line surface tying the pipeline together.

Subcommands: synth, merge, merge-baseline, eval-pq, uplift, render-labels,
fps, solve-qubo. Exit codes: 0 ok, 2 usage/validation error, 3 I/O or parse
error. Every command is deterministic given its inputs and flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as pio
from .keyframe import DEFAULT_NUM_KEYFRAMES, FrameDescriptors, fps_select
from .masks import PanopticMap, SoftMaskSet
from .merging import BaselineConfig, MergeConfig, merge_baseline, merge_qubo
from .metrics import dataset_pq, scene_pq
from .qubo import AnnealConfig, QuboInstance, solve_anneal, solve_exact
from .synthgen import CorruptionSpec, SceneSpec, generate_scene
from .uplift import SplatLabelField, render_labels, uplift_labels

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def _max_threads() -> int:
    raw = os.environ.get("PANOMERGE_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return os.cpu_count() or 1


def _anneal_config(args) -> AnnealConfig:
    return AnnealConfig(
        seed=args.seed,
        cooling_rate=args.cooling,
        sweeps=args.sweeps,
        restarts=args.restarts,
    )


def _add_anneal_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=300)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--cooling", type=float, default=0.97)


def _load_mask_set(masks_path: str, probs_path: str) -> SoftMaskSet:
    values = pio.read_tensor(masks_path)
    probs = pio.read_tensor(probs_path)
    table = pio.read_class_table(Path(probs_path).with_suffix(".json"))
    if values.ndim != 4:
        raise ValueError(
            f"mask tensor must be 4D (m, N, H, W), got ndim={values.ndim}"
        )
    if probs.ndim != 2 or probs.shape[0] != values.shape[0]:
        raise ValueError(
            f"class prob rows ({probs.shape[0]}) must match mask count "
            f"m={values.shape[0]}"
        )
    return SoftMaskSet(values.astype(np.float64), probs.astype(np.float64), table)


def cmd_synth(args) -> int:
    spec = SceneSpec(
        seed=args.seed,
        num_views=args.views,
        height=args.height,
        width=args.width,
        num_things=args.things,
        num_stuff=args.stuff,
        world_size=args.world,
        corruption=CorruptionSpec(
            duplicate_rate=args.duplicate_rate,
            duplicate_count=args.duplicate_count,
            fragment_rate=args.fragment_rate,
            boundary_noise_px=args.boundary_noise,
            softness=args.softness,
            class_noise=args.class_noise,
            view_gain_noise=args.view_gain_noise,
        ),
    )
    gt, proposals, splats = generate_scene(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pio.write_panoptic(out / "gt.pmt", gt)
    pio.write_tensor(out / "masks.pmt", proposals.values.astype(np.float32))
    pio.write_tensor(out / "classprobs.pmt", proposals.class_probs.astype(np.float32))
    pio.write_class_table(out / "classprobs.json", proposals.class_table)
    pio.write_splats(out / "splats.psw", splats)
    print(f"wrote scene with m={proposals.num_queries} proposals to {out}")
    return EXIT_OK


def cmd_merge(args) -> int:
    masks = _load_mask_set(args.masks, args.classprobs)
    if args.solver == "exact" and masks.num_queries > 24:
        raise ValueError(
            f"exact solver is guarded to m <= 24 variables, got m={masks.num_queries}"
        )
    cfg = MergeConfig(
        penalty=args.lambda_p,
        void_threshold=args.void_threshold,
        confidence_prefilter=args.prefilter,
        solver=args.solver,
        anneal=_anneal_config(args),
    )
    pmap = merge_qubo(masks, cfg)
    pio.write_panoptic(args.out, pmap)
    selected = sorted(pmap.instance_to_class)
    print(f"selected {len(selected)} proposals")
    return EXIT_OK


def cmd_merge_baseline(args) -> int:
    masks = _load_mask_set(args.masks, args.classprobs)
    cfg = BaselineConfig(
        confidence_threshold=args.conf_threshold,
        vote_support_threshold=args.vote_threshold,
    )
    pmap = merge_baseline(masks, cfg)
    pio.write_panoptic(args.out, pmap)
    print(f"kept {len(pmap.instance_to_class)} proposals")
    return EXIT_OK


def _upsample_nearest(pmap: PanopticMap, height: int, width: int) -> PanopticMap:
    if height % pmap.height or width % pmap.width:
        raise ValueError(
            f"height {pmap.height} and width {pmap.width} do not divide "
            f"target {height}x{width} by an exact integer factor"
        )
    fy, fx = height // pmap.height, width // pmap.width
    inst = np.repeat(np.repeat(pmap.instance_ids, fy, axis=1), fx, axis=2)
    return PanopticMap.from_instances(inst, pmap.instance_to_class, pmap.class_table)


def _eval_pair(pred_path, gt_path, void_exemption: bool):
    pred = pio.read_panoptic(pred_path)
    gt = pio.read_panoptic(gt_path)
    if pred.num_views != gt.num_views:
        raise ValueError(
            f"view count mismatch: pred N={pred.num_views} vs gt N={gt.num_views}"
        )
    if (pred.height, pred.width) != (gt.height, gt.width):
        if pred.height * pred.width < gt.height * gt.width:
            pred = _upsample_nearest(pred, gt.height, gt.width)
        else:
            gt = _upsample_nearest(gt, pred.height, pred.width)
    return scene_pq(pred, gt, gt.class_table, void_exemption=void_exemption)


def cmd_eval_pq(args) -> int:
    void_exemption = not args.no_void_exemption
    if args.dataset:
        pred_dir, gt_dir = Path(args.pred), Path(args.gt)
        stems = sorted(p.stem for p in pred_dir.glob("*.pmt"))
        pairs = [
            (pred_dir / f"{s}.pmt", gt_dir / f"{s}.pmt")
            for s in stems
            if (gt_dir / f"{s}.pmt").exists()
        ]
        if not pairs:
            raise ValueError("no matching scene pairs found")
        with ThreadPoolExecutor(max_workers=_max_threads()) as pool:
            reports = list(
                pool.map(lambda pg: _eval_pair(pg[0], pg[1], void_exemption), pairs)
            )
        summary = dataset_pq(reports)
        doc = {
            "pq": summary.pq,
            "pq_things": None if np.isnan(summary.pq_things) else summary.pq_things,
            "pq_stuff": None if np.isnan(summary.pq_stuff) else summary.pq_stuff,
            "num_scenes": summary.num_scenes,
            "scenes": [
                {"scene": s.stem, **r.to_json_dict()}
                for (s, _), r in zip(pairs, reports)
            ],
        }
    else:
        report = _eval_pair(args.pred, args.gt, void_exemption)
        doc = report.to_json_dict()
        if not args.per_class:
            doc.pop("per_class")
    text = json.dumps(doc, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def cmd_uplift(args) -> int:
    labels = pio.read_panoptic(args.labels)
    splats = pio.read_splats(args.splats)
    field = uplift_labels(labels, splats)
    pio.write_tensor(args.out, field.distributions.astype(np.float32))
    print(f"uplifted onto {int(field.observed.sum())} observed splats")
    return EXIT_OK


def cmd_render_labels(args) -> int:
    dist = pio.read_tensor(args.field).astype(np.float64)
    splats = pio.read_splats(args.splats)
    labels = pio.read_panoptic(args.labels)
    observed = dist.sum(axis=1) > 0.0
    field = SplatLabelField(dist, observed)
    views = range(splats.num_views) if args.view is None else [args.view]
    rendered = np.stack([render_labels(field, splats, v) for v in views])
    mapping = {
        i: labels.instance_to_class[i]
        for i in (set(np.unique(rendered).tolist()) - {0})
    }
    pmap = PanopticMap.from_instances(rendered, mapping, labels.class_table)
    pio.write_panoptic(args.out, pmap)
    print(f"rendered {rendered.shape[0]} view(s)")
    return EXIT_OK


def cmd_fps(args) -> int:
    vectors = pio.read_tensor(args.descriptors).astype(np.float64)
    if vectors.ndim != 2:
        raise ValueError(f"descriptors must be 2D (N, dim), got ndim={vectors.ndim}")
    selected = fps_select(
        FrameDescriptors(vectors), k=args.k, seed_index=args.seed_index,
        metric=args.metric,
    )
    text = " ".join(str(i) for i in selected)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_solve_qubo(args) -> int:
    try:
        doc = json.loads(Path(args.instance).read_text())
        q = QuboInstance(
            np.asarray(doc["linear"], dtype=np.float64),
            np.asarray(doc["quadratic"], dtype=np.float64),
            float(doc.get("penalty", 2.0)),
        )
    except (KeyError, json.JSONDecodeError) as exc:
        raise pio.FormatError(f"{args.instance}: bad QUBO instance: {exc}") from exc
    if args.exact or args.solver == "exact":
        result = solve_exact(q)
    else:
        result = solve_anneal(q, _anneal_config(args))
    print(f"u={[int(b) for b in result.bits]}")
    print(f"objective={result.objective}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panomerge",
        description="Multi-view panoptic mask merging, metrics, and uplifting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark scene")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--views", type=int, default=3)
    p.add_argument("--height", type=int, default=48)
    p.add_argument("--width", type=int, default=48)
    p.add_argument("--things", type=int, default=6)
    p.add_argument("--stuff", type=int, default=2)
    p.add_argument("--world", type=int, default=96)
    p.add_argument("--duplicate-rate", type=float, default=0.0)
    p.add_argument("--duplicate-count", type=int, default=2)
    p.add_argument("--fragment-rate", type=float, default=0.0)
    p.add_argument("--boundary-noise", type=int, default=0)
    p.add_argument("--softness", type=float, default=0.0)
    p.add_argument("--class-noise", type=float, default=0.0)
    p.add_argument("--view-gain-noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("merge", help="QUBO mask merging")
    p.add_argument("masks")
    p.add_argument("classprobs")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-p", type=float, default=2.0)
    p.add_argument("--void-threshold", type=float, default=0.5)
    p.add_argument("--prefilter", type=float, default=None)
    p.add_argument("--solver", choices=("anneal", "exact"), default="anneal")
    _add_anneal_flags(p)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("merge-baseline", help="standard voting-based merging")
    p.add_argument("masks")
    p.add_argument("classprobs")
    p.add_argument("--out", required=True)
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("--vote-threshold", type=float, default=0.8)
    p.set_defaults(func=cmd_merge_baseline)

    p = sub.add_parser("eval-pq", help="scene or dataset Panoptic Quality")
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--dataset", action="store_true", help="treat args as directories")
    p.add_argument("--per-class", action="store_true")
    p.add_argument("--no-void-exemption", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_pq)

    p = sub.add_parser("uplift", help="uplift labels onto splats")
    p.add_argument("labels")
    p.add_argument("splats")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_uplift)

    p = sub.add_parser("render-labels", help="render uplifted labels to views")
    p.add_argument("field")
    p.add_argument("splats")
    p.add_argument("labels", help="panoptic file providing classes for the labels")
    p.add_argument("--view", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render_labels)

    p = sub.add_parser("fps", help="farthest-point keyframe selection")
    p.add_argument("descriptors")
    p.add_argument("--k", type=int, default=DEFAULT_NUM_KEYFRAMES)
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fps)

    p = sub.add_parser("solve-qubo", help="solve a QUBO instance from JSON")
    p.add_argument("instance")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--solver", choices=("anneal", "exact"), default="anneal")
    _add_anneal_flags(p)
    p.set_defaults(func=cmd_solve_qubo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (pio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
