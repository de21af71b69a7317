"""``linea`` command line: match, interp, eval, synth, bench.

Exit codes: 0 success, 2 input/argument error, 3 numerical/solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .matchkit import (
    CorrespondenceFormatError,
    InsufficientMatchesError,
    MatchConfig,
    fallback_match,
    read_correspondences,
    write_correspondences,
)
from .metrics import WcdConfig, report
from .motion import VARIANTS, WarpConfig, frame_times, inbetween_variants
from .raster import DEFAULT_THRESHOLD, binarize, load_image, mask_to_image, save_image
from .synth import erase_random, render_circle, shift_mask, translating_scene
from .tps import CorrespondenceSet, TPSError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
CSV_COLUMNS = ["frame", "cd", "wcd", "emd", "cd_x1e5", "wcd_x1e4", "emd_x1e3"]
SCALED_COLUMNS = ["cd_x1e5", "wcd_x1e4", "emd_x1e3"]


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


@dataclass
class RunManifest:
    command: str
    inputs: list[str] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    tool_version: str = __version__
    outputs: list[str] = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _threads() -> int:
    env = os.environ.get("LINEA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"LINEA_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _natural_key(path: Path):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", path.name)]


def _list_frames(directory: str, pattern: str) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"not a directory: {directory}")
    return sorted((p for p in d.glob(pattern) if p.is_file()), key=_natural_key)


def _load(path) -> np.ndarray:
    try:
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc


# --- match -------------------------------------------------------------------

def cmd_match(args) -> int:
    y0, y1 = _load(args.frame0), _load(args.frame1)
    cfg = MatchConfig(
        max_keypoints=args.max_keypoints,
        patch_radius=args.patch_radius,
        ratio_threshold=args.ratio,
        max_displacement=args.max_disp,
    )
    try:
        corr = fallback_match(y0, y1, cfg)
    except InsufficientMatchesError as exc:
        print(f"linea match: {exc}; pass --corr to `linea interp` with an external matcher's output",
              file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_correspondences(corr, out)
    RunManifest(
        command="match",
        inputs=[args.frame0, args.frame1],
        parameters={k: v for k, v in asdict(cfg).items()},
        outputs=[str(out)],
    ).write(out.with_name(out.name + ".manifest.json"))
    print(f"wrote {len(corr)} correspondences to {out}")
    return EXIT_OK


# --- interp ------------------------------------------------------------------

def cmd_interp(args) -> int:
    y0, y1 = _load(args.frame0), _load(args.frame1)
    if y0.shape != y1.shape:
        raise InputError(f"key frames differ in size: {y0.shape} vs {y1.shape}")
    if args.corr is None or not Path(args.corr).is_file():
        raise InputError(f"correspondence file not found: {args.corr}")
    h, w = y0.shape
    try:
        corr = read_correspondences(args.corr, (w, h), (w, h))
    except CorrespondenceFormatError as exc:
        raise InputError(str(exc)) from exc
    emit = [v.strip() for v in args.emit.split(",") if v.strip()]
    bad = [v for v in emit if v not in VARIANTS]
    if bad or not emit:
        raise InputError(f"--emit takes a comma list of {','.join(VARIANTS)}; got {args.emit!r}")
    if args.gap < 1:
        raise InputError("--gap must be >= 1")
    cfg = WarpConfig(fill=args.fill, blend_mode=args.blend)
    try:
        variants = inbetween_variants(y0, y1, corr, args.gap, cfg, args.lam)
    except TPSError as exc:
        print(f"linea interp: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for k in range(1, args.gap + 1):
        for v in emit:
            path = outdir / f"t{k}_{v}.png"
            save_image(variants[v][k - 1], path)
            written.append(str(path))
    RunManifest(
        command="interp",
        inputs=[args.frame0, args.frame1, args.corr],
        parameters={"gap": args.gap, "lambda": args.lam, "blend": args.blend, "fill": args.fill,
                    "emit": ",".join(emit), "times": frame_times(args.gap)},
        outputs=written,
    ).write(outdir / "manifest.json")
    print(f"wrote {len(written)} frames to {outdir}")
    return EXIT_OK


# --- eval / bench ------------------------------------------------------------

def _pair_frames(pred_dir: str, gt_dir: str, pattern: str, gt_pattern: str = "*.png"):
    pred = _list_frames(pred_dir, pattern)
    gt = _list_frames(gt_dir, gt_pattern)
    if not pred or not gt or len(pred) != len(gt):
        extra = [p.name for p in pred[len(gt):]] + [g.name for g in gt[len(pred):]]
        raise InputError(
            f"frame count mismatch: {len(pred)} predicted vs {len(gt)} ground truth"
            + (f"; unpaired: {', '.join(extra)}" if extra else "")
        )
    return list(zip(pred, gt))


def _evaluate(pairs, threshold: float, wcd_cfg: WcdConfig) -> list[dict]:
    def one(pair):
        p, g = pair
        bp, bg = binarize(_load(p), threshold), binarize(_load(g), threshold)
        if bp.shape != bg.shape:
            return p.name, None, f"{p.name} {bp.shape} vs {g.name} {bg.shape}"
        try:
            rep = report(bp, bg, wcd_cfg)
        except ValueError as exc:
            return p.name, None, f"{p.name}: {exc}"
        return p.name, rep, None

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, pairs))
    problems = [msg for _, _, msg in results if msg]
    if problems:
        raise InputError("cannot evaluate: " + "; ".join(problems))
    rows = []
    for name, rep, _ in results:
        rows.append({"frame": name, **rep.as_dict()})
    return rows


def _mean_row(rows: list[dict], label: str = "mean") -> dict:
    out = {"frame": label}
    for col in CSV_COLUMNS[1:]:
        out[col] = float(np.mean([r[col] for r in rows]))
    return out


def _fmt(v) -> str:
    return v if isinstance(v, str) else f"{v:.10g}"


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def render_markdown(rows: list[dict], columns=CSV_COLUMNS, bold_best: bool = False) -> str:
    best = {}
    if bold_best and rows:
        for c in columns[1:]:
            best[c] = min(r[c] for r in rows)
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    for r in rows:
        cells = []
        for c in columns:
            cell = _fmt(r[c])
            if c in best and r[c] == best[c]:
                cell = f"**{cell}**"
            cells.append(cell)
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    pairs = _pair_frames(args.pred, args.gt, args.pattern, args.gt_pattern)
    rows = _evaluate(pairs, args.threshold, WcdConfig(zero_offset=not args.no_wcd_offset))
    rows.append(_mean_row(rows))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    text = render_csv(rows) if args.format == "csv" else render_markdown(rows)
    out.write_text(text, encoding="utf-8")
    RunManifest(
        command="eval",
        inputs=[str(p) for pair in pairs for p in pair],
        parameters={"threshold": args.threshold, "wcd_offset": not args.no_wcd_offset,
                    "format": args.format, "pattern": args.pattern},
        outputs=[str(out)],
    ).write(out.with_name(out.name + ".manifest.json"))
    return EXIT_OK


def _parse_methods(text: str) -> list[tuple[str, str]]:
    methods = []
    for item in text.split(","):
        if not item.strip():
            continue
        name, sep, path = item.partition("=")
        if not sep or not name.strip() or not path.strip():
            raise InputError(f"--methods entries must be name=dir, got {item!r}")
        methods.append((name.strip(), path.strip()))
    if not methods:
        raise InputError("--methods is empty")
    return methods


def cmd_bench(args) -> int:
    wcd_cfg = WcdConfig(zero_offset=not args.no_wcd_offset)
    table, inputs = [], []
    for name, directory in _parse_methods(args.methods):
        pairs = _pair_frames(directory, args.gt, args.pattern, args.gt_pattern)
        inputs.extend(str(p) for p, _ in pairs)
        mean = _mean_row(_evaluate(pairs, args.threshold, wcd_cfg), label=name)
        table.append({"method": name, **{c: mean[c] for c in SCALED_COLUMNS}})
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_markdown(table, ["method"] + SCALED_COLUMNS, bold_best=True), encoding="utf-8")
    RunManifest(
        command="bench",
        inputs=inputs,
        parameters={"methods": args.methods, "gt": args.gt, "threshold": args.threshold,
                    "wcd_offset": not args.no_wcd_offset},
        outputs=[str(out)],
    ).write(out.with_name(out.name + ".manifest.json"))
    return EXIT_OK


# --- synth -------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _tag(v: float) -> str:
    return f"{v:g}".replace("-", "m").replace(".", "p")


def _save_mask(mask, path: Path, written: list[str]) -> None:
    # mask files store effective pixels as white
    save_image(mask.astype(np.float64), path)
    written.append(str(path))


def _save_frame(img, path: Path, written: list[str]) -> None:
    save_image(img, path)
    written.append(str(path))


def cmd_synth(args) -> int:
    outdir = Path(args.output)
    written: list[str] = []
    size = args.size
    c = (size - 1) / 2.0
    try:
        gt = render_circle((c, c), args.radius, (size, size), args.stroke)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    if args.scenario == "circle-shift":
        for sub in ("gt", "pred", "masks", "corr"):
            (outdir / sub).mkdir(parents=True, exist_ok=True)
        for s in args.shift:
            if s != int(s):
                raise InputError(f"shifts must be whole pixels, got {s}")
            shifted = shift_mask(gt, (int(s), 0))
            if shifted.sum() != gt.sum():
                raise InputError(f"shift {s:g} pushes the circle off the {size}x{size} canvas")
            for f in args.erase:
                if not 0.0 <= f < 1.0:
                    raise InputError(f"erase fraction must be in [0, 1), got {f}")
                name = f"s{_tag(s)}_e{_tag(f)}"
                pred = erase_random(shifted, f, args.seed)
                _save_frame(mask_to_image(gt), outdir / "gt" / f"{name}.png", written)
                _save_frame(mask_to_image(pred), outdir / "pred" / f"{name}.png", written)
                _save_mask(gt, outdir / "masks" / f"gt_{name}.png", written)
                _save_mask(pred, outdir / "masks" / f"pred_{name}.png", written)
                ys, xs = np.nonzero(gt)
                src = np.stack([xs, ys], axis=1).astype(np.float64)
                corr = CorrespondenceSet(src, src + [s, 0.0], (size, size), (size, size))
                path = outdir / "corr" / f"{name}.json"
                write_correspondences(corr, path)
                written.append(str(path))
        params = {"size": size, "radius": args.radius, "stroke": args.stroke,
                  "shift": args.shift, "erase": args.erase, "seed": args.seed}
    else:
        if args.gap < 1:
            raise InputError("--gap must be >= 1")
        try:
            scene = translating_scene(gt, (args.dx, args.dy), args.gap)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        for sub in ("gt", "masks"):
            (outdir / sub).mkdir(parents=True, exist_ok=True)
        _save_frame(scene.frames[0], outdir / "frame0.png", written)
        _save_frame(scene.frames[-1], outdir / "frame1.png", written)
        for k, (img, m) in enumerate(zip(scene.frames, scene.masks)):
            if 0 < k <= args.gap:
                _save_frame(img, outdir / "gt" / f"t{k}.png", written)
            _save_mask(m, outdir / "masks" / f"frame{k}.png", written)
        path = outdir / "corr.json"
        write_correspondences(scene.exact_corr, path)
        written.append(str(path))
        params = {"size": size, "radius": args.radius, "stroke": args.stroke,
                  "dx": args.dx, "dy": args.dy, "gap": args.gap}
    RunManifest(command=f"synth {args.scenario}", parameters=params, outputs=written).write(outdir / "manifest.json")
    print(f"wrote {len(written)} files to {outdir}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linea", description="TPS line-art inbetweening and line-art metrics")
    parser.add_argument("--version", action="version", version=f"linea {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("match", help="fallback keypoint matching between two frames")
    p.add_argument("frame0")
    p.add_argument("frame1")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-keypoints", type=int, default=512)
    p.add_argument("--patch-radius", type=int, default=8)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--max-disp", type=float, default=None)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("interp", help="TPS-only inbetweening")
    p.add_argument("frame0")
    p.add_argument("frame1")
    p.add_argument("--corr")
    p.add_argument("--gap", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--blend", choices=["linear", "min-ink"], default="linear")
    p.add_argument("--emit", default="forward,backward,blend")
    p.add_argument("--fill", type=float, default=1.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("eval", help="per-frame CD / WCD / EMD report")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--pattern", default="*.png", help="glob selecting predicted frames")
    p.add_argument("--gt-pattern", default="*.png", help="glob selecting ground-truth frames")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--no-wcd-offset", action="store_true")
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="synthetic scenes with exact ground truth")
    p.add_argument("scenario", choices=["circle-shift", "translate"])
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--radius", type=float, default=20.0)
    p.add_argument("--stroke", type=float, default=2.0)
    p.add_argument("--shift", type=_float_list, default=[10.0])
    p.add_argument("--erase", type=_float_list, default=[0.0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap", type=int, default=1)
    p.add_argument("--dx", type=int, default=12)
    p.add_argument("--dy", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="Table-style comparison of several methods")
    p.add_argument("--gt", required=True)
    p.add_argument("--methods", required=True, help="name1=dir1,name2=dir2")
    p.add_argument("--pattern", default="*.png")
    p.add_argument("--gt-pattern", default="*.png")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--no-wcd-offset", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"linea {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TPSError as exc:
        print(f"linea {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
