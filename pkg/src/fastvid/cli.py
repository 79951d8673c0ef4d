"""Command-line interface: ``fastvid {prune,flops,synth,compare,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import flops as _flops
from .core import PruneConfig, retention_target
from .errors import FastVIDError, StageError
from .io import read_dump, synth_video, write_dump, write_result
from .io.synth import parse_scenes
from .stprune import Merger, Segmenter, compare_strategies


def _config_from(args) -> PruneConfig:
    return PruneConfig(
        min_segments=args.c,
        transition_threshold=args.tau,
        retention_ratio=args.r,
        dtm_fraction=args.d,
        anchor_interval=args.p,
        merge_weight=args.beta,
        knn_k=args.k,
        attention_source=args.attention,
        fixed_interval=args.fixed_interval,
        num_clusters=args.num_clusters,
    )


def _check_result(result, config) -> list[str]:
    problems = []
    want = retention_target(config.retention_ratio, result.frame_count, result.tokens_per_frame)
    if len(result) != want:
        problems.append(f"retained {len(result)} tokens, expected {want}")
    f = result.frame_index.astype(np.int64)
    s = result.spatial_index.astype(np.int64)
    key = f * result.tokens_per_frame + s
    if key.size > 1 and not np.all(np.diff(key) > 0):
        problems.append("retained positions are not strictly increasing")
    return problems


def _prune_one(job: tuple) -> dict:
    """Run one input; returns a summary dict (picklable for process pools)."""
    path, out, config, segmenter, merger, emit_svg, stats_json = job
    dump = read_dump(path)
    timings: dict = {}
    t0 = time.perf_counter()
    result = compare_strategies(dump, config, segmenter, merger, timings=timings)
    total = time.perf_counter() - t0
    problems = _check_result(result, config)
    out = Path(out)
    write_result(result, out, "binary")
    timing_ms = {
        "segmentation_ms": timings.get("segmentation", 0.0) * 1e3,
        "compression_ms": timings.get("compression", 0.0) * 1e3,
        "total_ms": total * 1e3,
    }
    if stats_json:
        write_result(
            result,
            out.with_suffix(".json"),
            "json-stats",
            extra={"timing": timing_ms, "segmenter": Segmenter(segmenter).value, "merger": Merger(merger).value},
        )
    if emit_svg:
        write_result(result, out.with_suffix(".svg"), "svg")
    return {"input": str(path), "output": str(out), "stats": result.stats, "timing": timing_ms, "problems": problems}


def cmd_prune(args) -> int:
    config = _config_from(args)
    inputs = args.input
    if len(inputs) > 1:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        outs = [outdir / (Path(p).stem + ".fvpr") for p in inputs]
    else:
        outs = [Path(args.out)]
    jobs = [
        (p, o, config, args.segmenter, args.merger, args.emit_svg, args.stats_json)
        for p, o in zip(inputs, outs)
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            summaries = list(ex.map(_prune_one, jobs))
    else:
        summaries = [_prune_one(j) for j in jobs]

    status = 0
    for sm in summaries:
        st, tm = sm["stats"], sm["timing"]
        print(
            f"{sm['input']}: retained {st['retained_tokens']}/{st['input_tokens']} "
            f"({st['retention_ratio']:.2%}), {st['segments']} segments, "
            f"segmentation {tm['segmentation_ms']:.2f} ms, compression {tm['compression_ms']:.2f} ms"
        )
        for prob in sm["problems"]:
            print(f"  invariant violated: {prob}", file=sys.stderr)
            status = 1
    return status


def cmd_flops(args) -> int:
    shape = _flops.get_preset(args.preset)
    counts = [int(t) for t in args.tokens.split(",") if t.strip()]
    base = _flops.tflops(counts[0], shape) if counts else 0.0
    print(f"{'tokens':>8}  {'TFLOPs':>8}  {'ratio':>7}")
    for n in counts:
        tf = _flops.tflops(n, shape)
        ratio = f"{tf / base:.1%}" if base else "-"
        print(f"{n:>8}  {_flops.format_tflops(tf):>8}  {ratio:>7}")
    return 0


def cmd_synth(args) -> int:
    scenes = parse_scenes(args.scenes, default_spread=args.spread)
    H, W = (int(v) for v in args.attn.lower().split("x"))
    dump = synth_video(
        scenes,
        seed=args.seed,
        tokens_per_frame=args.tokens,
        token_dim=args.dim,
        frame_feature_dim=args.feature_dim,
        attn_hw=(H, W),
        with_attention=not args.no_attention,
    )
    write_dump(dump, args.out)
    print(f"wrote {args.out}: F={dump.frame_count} N={dump.tokens_per_frame} D={dump.token_dim}")
    return 0


def compare_dump(dump, k=None, rtol: float = 1e-6, density_fn=None) -> tuple[float, bool]:
    """Fast density path vs the exhaustive oracle on every frame of ``dump``.

    Returns ``(max relative deviation, passed)``; index outputs must match exactly.
    """
    from . import dtm, oracle
    from .core import default_knn_k

    density_fn = density_fn or dtm.density_scores
    worst, ok = 0.0, True
    N = dump.tokens_per_frame
    kk = k or default_knn_k(N)
    for f in range(dump.frame_count):
        x = dump.tokens[f]
        fast = density_fn(x, kk)
        rho, delta, score = oracle.oracle_density(x, kk)
        for got, want in ((fast.rho, rho), (fast.delta, delta)):
            dev = float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-300)))
            worst = max(worst, dev)
            ok &= dev <= rtol
        ok &= bool(np.array_equal(np.argsort(-fast.score, kind="stable"), np.argsort(-score, kind="stable")))
    return worst, ok


def cmd_compare(args) -> int:
    worst, ok = 0.0, True
    n = 0
    if args.input:
        dumps = [read_dump(p) for p in args.input]
    else:
        dumps = [
            synth_video(
                [(2, "a", 0.1), (2, "b", 0.1)],
                seed=args.seed + i,
                tokens_per_frame=args.tokens,
                token_dim=args.dim,
            )
            for i in range(args.count)
        ]
    for dump in dumps:
        w, good = compare_dump(dump, args.k)
        worst, ok = max(worst, w), ok and good
        n += 1
    print(f"compared {n} dumps: max relative deviation {worst:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    from .bench import run_benchmark

    report = run_benchmark(frames=args.frames, tokens=args.tokens, dim=args.dim, repeats=args.repeats)
    print(json.dumps(report, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastvid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prune", help="prune one or more FVTD dumps")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output file, or directory for several inputs")
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--d", type=float, default=0.4)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--beta", type=float, default=0.6)
    p.add_argument("--c", type=int, default=8)
    p.add_argument("--tau", type=float, default=0.9)
    p.add_argument("--k", type=int, default=None, help="kNN size for density (default ceil(sqrt(N)))")
    p.add_argument("--segmenter", choices=[s.value for s in Segmenter], default="dyseg")
    p.add_argument("--merger", choices=[m.value for m in Merger], default="density")
    p.add_argument("--fixed-interval", type=int, default=4)
    p.add_argument("--num-clusters", type=int, default=None)
    p.add_argument("--attention", choices=["auto", "cls", "pseudo_cls"], default="auto")
    p.add_argument("--emit-svg", action="store_true")
    p.add_argument("--stats-json", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("flops", help="print prefill TFLOPs for token counts")
    p.add_argument("--preset", default="qwen2-7b")
    p.add_argument("--tokens", default="6272")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("synth", help="write a synthetic FVTD dump")
    p.add_argument("--scenes", required=True, help='e.g. "8:a,8:b:0.2" (length:label[:spread])')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="synth.fvtd")
    p.add_argument("--tokens", type=int, default=196)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--feature-dim", type=int, default=32)
    p.add_argument("--attn", default="27x27")
    p.add_argument("--spread", type=float, default=0.1)
    p.add_argument("--no-attention", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare", help="check the fast density path against the oracle")
    p.add_argument("--input", nargs="*")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tokens", type=int, default=16)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="time numba vs numpy kernels and the full pipeline")
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--tokens", type=int, default=196)
    p.add_argument("--dim", type=int, default=896)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FastVIDError, ValueError, KeyError, OSError) as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
