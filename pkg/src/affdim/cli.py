"""Command line front end: spec ingestion, analysis dispatch, JSON reports.

Subcommands: check, dimension, attractor, verify, furstenberg,
transversality. Reports are JSON documents with the fixed top-level
schema {version, command, inputs, results, timing}; numbers are written
with 17 significant digits so doubles round-trip exactly. Exit codes:
0 pass, 1 condition/verdict failure, 2 input error, 3 budget, 4 I/O.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from typing import Optional, Tuple

import numpy as np

from . import attractor as attr
from . import furstenberg as fb
from .errors import BudgetError, FitWindowError
from .fixtures import unit_circle_translations
from .ifs import AffineIFS, membership_margin, ssc_certificate
from .linalg import Subspace, as_generator
from .lyapunov import (
    domination_test,
    exponents_mc,
    lyapunov_dimension,
    pinching_twisting_search,
)
from .pressure import affinity_upper, dimension_bracket
from .words import StepMeasure, entropy

REPORT_VERSION = "affdim/1"

EXIT_PASS = 0
EXIT_CONDITION = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_IO = 4


class CliInputError(Exception):
    pass


# ---------------------------------------------------------------------------
# canonical JSON


def _format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    xf = float(x)
    if math.isnan(xf) or math.isinf(xf):
        raise ValueError("reports must not contain NaN or infinity")
    return format(xf, ".17g")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Serializer with fixed float formatting (17 significant digits)."""

    def emit(node, level):
        pad = " " * (indent * level)
        pad_in = " " * (indent * (level + 1))
        if node is None:
            return "null"
        if isinstance(node, bool):
            return "true" if node else "false"
        if isinstance(node, (int, float, np.integer, np.floating)):
            return _format_number(node)
        if isinstance(node, str):
            return json.dumps(node)
        if isinstance(node, (np.ndarray,)):
            node = node.tolist()
        if isinstance(node, (list, tuple)):
            if not node:
                return "[]"
            inner = ",\n".join(pad_in + emit(v, level + 1) for v in node)
            return "[\n" + inner + "\n" + pad + "]"
        if isinstance(node, dict):
            if not node:
                return "{}"
            inner = ",\n".join(
                pad_in + json.dumps(str(k)) + ": " + emit(v, level + 1) for k, v in node.items()
            )
            return "{\n" + inner + "\n" + pad + "}"
        raise TypeError(f"cannot serialize {type(node)!r}")

    return emit(obj, 0) + "\n"


# ---------------------------------------------------------------------------
# spec files


def parse_ifs_spec(data) -> Tuple[AffineIFS, dict]:
    """Validate a parsed spec document and build the system it describes."""
    if not isinstance(data, dict):
        raise CliInputError("spec root must be a JSON object")
    if "dimension" not in data:
        raise CliInputError("spec is missing the 'dimension' field")
    d = data["dimension"]
    if not isinstance(d, int) or d < 1:
        raise CliInputError(f"'dimension' must be a positive integer, got {d!r}")
    maps = data.get("maps")
    if not isinstance(maps, list) or len(maps) < 2:
        raise CliInputError("'maps' must be a list with at least 2 entries")
    matrices, translations, weights = [], [], []
    for idx, entry in enumerate(maps):
        where = f"maps[{idx}]"
        if not isinstance(entry, dict):
            raise CliInputError(f"{where} must be an object")
        matrix = entry.get("matrix")
        if not isinstance(matrix, list) or len(matrix) != d:
            raise CliInputError(f"{where}.matrix must have exactly {d} rows")
        for r, row in enumerate(matrix):
            if not isinstance(row, list) or len(row) != d:
                raise CliInputError(
                    f"{where}.matrix row {r} has {len(row) if isinstance(row, list) else 'no'} "
                    f"entries, expected {d}"
                )
            for c, val in enumerate(row):
                if not isinstance(val, (int, float)) or isinstance(val, bool):
                    raise CliInputError(f"{where}.matrix[{r}][{c}] is not a number")
        translation = entry.get("translation")
        if not isinstance(translation, list) or len(translation) != d:
            raise CliInputError(f"{where}.translation must have exactly {d} entries")
        matrices.append(matrix)
        translations.append(translation)
        if "weight" in entry:
            w = entry["weight"]
            if not isinstance(w, (int, float)) or isinstance(w, bool) or w <= 0:
                raise CliInputError(f"{where}.weight must be a positive number")
            weights.append(float(w))
    if weights and len(weights) != len(maps):
        raise CliInputError("either every map carries a weight or none does")
    weight_arr = None
    if weights:
        weight_arr = np.asarray(weights)
        total = weight_arr.sum()
        if abs(total - 1.0) > 1e-9:
            raise CliInputError(f"weights sum to {total!r}, expected 1 within 1e-9")
        weight_arr = weight_arr / total
    meta = data.get("meta", {})
    if meta and not isinstance(meta, dict):
        raise CliInputError("'meta' must be an object")
    try:
        ifs = AffineIFS(
            matrices=np.asarray(matrices, dtype=np.float64),
            translations=np.asarray(translations, dtype=np.float64),
            weights=weight_arr,
        )
    except ValueError as exc:
        raise CliInputError(str(exc)) from exc
    return ifs, dict(meta)


def ifs_to_spec(ifs: AffineIFS, meta: Optional[dict] = None) -> dict:
    doc = {"dimension": ifs.dim, "maps": []}
    for i in range(ifs.n_maps):
        entry = {
            "matrix": [[float(x) for x in row] for row in ifs.matrices[i]],
            "translation": [float(x) for x in ifs.translations[i]],
        }
        if ifs.weights is not None:
            entry["weight"] = float(ifs.weights[i])
        doc["maps"].append(entry)
    if meta:
        doc["meta"] = {str(k): str(v) for k, v in meta.items()}
    return doc


def load_ifs(path: str) -> Tuple[AffineIFS, dict, str]:
    """Parse a spec file; returns the system, meta, and the canonical hash."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliInputError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliInputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    ifs, meta = parse_ifs_spec(data)
    canonical = dumps_canonical(ifs_to_spec(ifs, meta))
    digest = hashlib.sha256(canonical.encode("ascii")).hexdigest()
    return ifs, meta, digest


def save_ifs(ifs: AffineIFS, path: str, meta: Optional[dict] = None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(ifs_to_spec(ifs, meta)))


# ---------------------------------------------------------------------------
# helpers


def _default_depth(ifs: AffineIFS) -> int:
    # truncation depth putting the projection tail below 1e-12 relative
    return min(64, max(8, math.ceil(-12.0 * math.log(10.0) / math.log(ifs.norm))))


def _spectrum_dict(spectrum) -> dict:
    return {
        "chi": spectrum.chi.tolist(),
        "stderr": spectrum.stderr.tolist(),
        "steps": spectrum.steps,
        "trials": spectrum.trials,
    }


def _check_results(ifs: AffineIFS, n_max: int, witness_len: int) -> Tuple[dict, bool]:
    report = membership_margin(ifs)
    results = {
        "contractive": ifs.is_contractive,
        "membership": {
            "margin": report.membership_margin,
            "threshold": report.threshold_used,
            "evaluated_max": report.evaluated_max,
            "member": report.is_member,
        },
        "ssc": {"gap": report.ssc_gap, "certified": report.ssc_gap > 0.0},
    }
    dom = domination_test(ifs, n_max=n_max)
    results["domination"] = {
        "n_max": n_max,
        "all_dominated": dom.all_dominated,
        "gaps": [
            {
                "gap": g.gap,
                "classification": g.classification,
                "decay_rate": g.decay_rate,
                "r2": g.r2,
                "min_ratio": g.min_ratio,
            }
            for g in dom.gaps
        ],
    }
    if ifs.dim == 2:
        wt = pinching_twisting_search(ifs, max_len=witness_len)
        results["pinching_twisting"] = {
            "max_len": witness_len,
            "pinching_word": list(wt.pinching_word) if wt.pinching_word else None,
            "twisting_word": list(wt.twisting_word) if wt.twisting_word else None,
            "found": wt.found,
        }
    else:
        results["pinching_twisting"] = None
    passed = report.is_member and report.ssc_gap > 0.0
    return results, passed


def cmd_check(args) -> Tuple[int, dict]:
    ifs, _, digest = load_ifs(args.spec)
    results, passed = _check_results(ifs, args.nmax, args.witness_len)
    results["input_sha256"] = digest
    return (EXIT_PASS if passed else EXIT_CONDITION), results


def cmd_dimension(args) -> Tuple[int, dict]:
    ifs, _, digest = load_ifs(args.spec)
    ifs.require_contractive()
    levels = sorted({2**k for k in range(1, 30) if 2**k < args.level} | {args.level})
    per_level = [
        {"n": n, "upper": affinity_upper(ifs, n, tol=args.tol)} for n in levels
    ]
    rng = as_generator(args.seed)
    bracket = dimension_bracket(
        ifs, args.level, mc_steps=args.mc_steps, trials=args.trials, rng=rng, tol=args.tol
    )
    results = {
        "input_sha256": digest,
        "levels": per_level,
        "bracket": {
            "n": bracket.n,
            "upper": bracket.upper,
            "lower": bracket.lower,
            "entropy_per_symbol": bracket.entropy,
            "chi": bracket.chi.tolist(),
            "chi_stderr": bracket.chi_stderr.tolist(),
            "subsystem_exponent": bracket.subsystem_exponent,
            "mc_steps": args.mc_steps,
            "trials": args.trials,
            "tol": args.tol,
        },
    }
    if ifs.weights is not None:
        measure = StepMeasure.bernoulli(ifs.weights)
        spectrum = exponents_mc(
            ifs, measure, steps=args.mc_steps, trials=args.trials, rng=rng
        )
        h = entropy(measure)
        results["bernoulli"] = {
            "entropy": h,
            "spectrum": _spectrum_dict(spectrum),
            "lyapunov_dimension": lyapunov_dimension(h, spectrum),
        }
    return EXIT_PASS, results


def _generate_cloud(ifs: AffineIFS, args, rng) -> attr.PointCloud:
    depth = args.depth if args.depth is not None else _default_depth(ifs)
    if args.points is not None:
        if args.points <= 0:
            raise CliInputError("--points must be positive (an empty cloud is not a cloud)")
        return attr.generate_random(ifs, args.points, depth, rng)
    return attr.generate_exhaustive(ifs, depth)


def cmd_attractor(args) -> Tuple[int, dict]:
    ifs, _, digest = load_ifs(args.spec)
    ifs.require_contractive()
    rng = as_generator(args.seed)
    cloud = _generate_cloud(ifs, args, rng)
    results = {
        "input_sha256": digest,
        "points": cloud.count,
        "depth": args.depth if args.depth is not None else _default_depth(ifs),
        "mode": "random" if args.points is not None else "exhaustive",
        "radius_bound": ifs.radius,
    }
    if args.csv:
        attr.save_csv(cloud, args.csv)
        results["csv"] = args.csv
    if args.render:
        attr.save_ppm(cloud, args.render, resolution=args.resolution, radius=ifs.radius)
        results["render"] = args.render
    if args.box_dim:
        curve = attr.box_dimension(cloud, radius=ifs.radius)
        results["box_dimension"] = {
            "slope": curve.slope,
            "r2": curve.r2,
            "scales": curve.scales.tolist(),
            "counts": curve.counts.tolist(),
        }
    return EXIT_PASS, results


def _verify_single(ifs: AffineIFS, args, rng, *, heavy: bool) -> Tuple[dict, bool]:
    results: dict = {}
    report = membership_margin(ifs)
    results["check"] = {
        "margin": report.membership_margin,
        "member": report.is_member,
        "ssc_gap": report.ssc_gap,
    }
    if not report.is_member:
        results["verdict"] = "REFUSED"
        return results, False

    level = args.level
    bracket = dimension_bracket(
        ifs, level, mc_steps=args.mc_steps, trials=args.trials, rng=rng
    )
    midpoint = 0.5 * (bracket.upper + bracket.lower)
    results["bracket"] = {
        "n": level,
        "upper": bracket.upper,
        "lower": bracket.lower,
        "midpoint": midpoint,
    }

    depth = args.depth if args.depth is not None else _default_depth(ifs)
    cloud = attr.generate_random(ifs, args.points, depth, rng)
    curve = attr.box_dimension(cloud, radius=ifs.radius)
    results["box_dimension"] = {
        "points": args.points,
        "depth": depth,
        "slope": curve.slope,
        "r2": curve.r2,
    }

    measure = StepMeasure.bernoulli(ifs.effective_weights())
    orbit_steps = args.orbit_steps if heavy else min(args.orbit_steps, 2000)
    orbit = fb.grassmann_orbit(ifs, measure, 1, orbit_steps, rng)
    spectrum = exponents_mc(
        ifs, measure, steps=max(10_000, args.mc_steps), trials=args.trials, rng=rng
    )
    residual = fb.furstenberg_limit_residual(orbit, spectrum)
    results["furstenberg"] = {
        "k": 1,
        "steps": orbit_steps,
        "final_residual": float(residual[-1]),
    }

    if ifs.dim == 2:
        samples = args.delta_samples if heavy else min(args.delta_samples, 2000)
        delta = fb.transversality_delta(ifs, samples, depth=40, rng=rng)
        results["transversality"] = {
            "samples": delta.samples,
            "depth": delta.depth,
            "delta": delta.delta,
        }
    else:
        results["transversality"] = None

    gap = abs(curve.slope - midpoint)
    passed = gap <= args.tol_verdict
    results["verdict"] = "PASS" if passed else "FAIL"
    results["verdict_gap"] = gap
    results["verdict_tolerance"] = args.tol_verdict
    return results, passed


def _ensemble_member(rng, n_maps: int, norm: float) -> AffineIFS:
    trans = unit_circle_translations(n_maps)
    for _ in range(64):
        mats = rng.standard_normal((n_maps, 2, 2))
        sv = np.linalg.svd(mats, compute_uv=False)
        mats = mats * (norm / sv[:, 0])[:, None, None]
        ifs = AffineIFS(matrices=mats, translations=trans)
        if membership_margin(ifs).is_member:
            return ifs
    raise CliInputError(
        f"could not draw a member at norm {norm}; lower --ensemble-norm"
    )


def cmd_verify(args) -> Tuple[int, dict]:
    rng = as_generator(args.seed)
    if args.random_ensemble is not None:
        if args.spec is not None:
            raise CliInputError("give either a spec file or --random-ensemble, not both")
        members = []
        passes = 0
        for i in range(args.random_ensemble):
            ifs = _ensemble_member(rng, args.ensemble_maps, args.ensemble_norm)
            member_results, ok = _verify_single(ifs, args, rng, heavy=False)
            passes += ok
            members.append({"index": i, "verdict": member_results["verdict"]})
        rate = passes / args.random_ensemble
        results = {
            "ensemble": {
                "count": args.random_ensemble,
                "norm": args.ensemble_norm,
                "maps": args.ensemble_maps,
                "pass_rate": rate,
                "members": members,
            }
        }
        return (EXIT_PASS if rate >= args.min_pass_rate else EXIT_CONDITION), results
    if args.spec is None:
        raise CliInputError("verify needs a spec file or --random-ensemble")
    ifs, _, digest = load_ifs(args.spec)
    results, passed = _verify_single(ifs, args, rng, heavy=True)
    results["input_sha256"] = digest
    return (EXIT_PASS if passed else EXIT_CONDITION), results


def cmd_furstenberg(args) -> Tuple[int, dict]:
    ifs, _, digest = load_ifs(args.spec)
    ifs.require_contractive()
    if not 1 <= args.k <= ifs.dim - 1:
        raise CliInputError(f"--k must be in 1..{ifs.dim - 1}")
    rng = as_generator(args.seed)
    measure = StepMeasure.bernoulli(ifs.effective_weights())
    orbit = fb.grassmann_orbit(ifs, measure, args.k, args.steps, rng)
    spectrum = exponents_mc(ifs, measure, steps=args.mc_steps, trials=args.trials, rng=rng)
    residual = fb.furstenberg_limit_residual(orbit, spectrum)
    v = fb.furstenberg_typical_subspace(
        ifs, measure, ifs.dim - args.k, steps=min(args.steps, 4000), rng=rng
    )
    projected = fb.projected_svf_limit_residual(ifs, measure, v, args.s, args.steps, rng)
    tail = slice(max(0, args.steps - max(1, args.steps // 10)), None)
    results = {
        "input_sha256": digest,
        "k": args.k,
        "steps": args.steps,
        "s": args.s,
        "spectrum": _spectrum_dict(spectrum),
        "limit_residual": {
            "final": float(residual[-1]),
            "tail_max_abs": float(np.abs(residual[tail]).max()),
        },
        "projected_residual": {
            "final": float(projected[-1]),
            "tail_max_abs": float(np.abs(projected[tail]).max()),
        },
    }
    return EXIT_PASS, results


def cmd_transversality(args) -> Tuple[int, dict]:
    ifs, _, digest = load_ifs(args.spec)
    ifs.require_contractive()
    rng = as_generator(args.seed)
    results: dict = {"input_sha256": digest}
    if ifs.dim == 2:
        delta = fb.transversality_delta(ifs, args.samples, depth=args.depth, rng=rng)
        results["delta"] = {
            "value": delta.delta,
            "raw_min": delta.raw_min,
            "correction": delta.correction,
            "samples": delta.samples,
            "depth": delta.depth,
        }
    else:
        results["delta"] = None
    if args.tail:
        depth = args.depth
        pair = (tuple([1] * depth), tuple([2] * depth))
        v = Subspace.coordinate(ifs.dim, [0])
        r = ifs.radius
        grid = (2.0 * r) * 2.0 ** -np.arange(0, 11, dtype=np.float64)
        tail = fb.transversality_tail(ifs, v, pair, grid, args.tail_samples, rng)
        results["tail"] = {
            "samples": tail.samples,
            "thresholds": tail.thresholds.tolist(),
            "probability": tail.probability.tolist(),
            "bound": tail.bound.tolist(),
            "c_hat": [x if math.isfinite(x) else None for x in tail.c_hat],
        }
    code = EXIT_PASS
    if results.get("delta") is not None and results["delta"]["value"] <= 0.0:
        code = EXIT_CONDITION
    return code, results


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("AFFDIM_THREADS", "1")),
        help="worker cap (default AFFDIM_THREADS or 1)",
    )
    sub.add_argument("--out", type=str, default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affdim",
        description="Dimension analysis of self-affine systems from JSON spec files.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("check", help="membership margin, separation certificate, domination")
    p.add_argument("spec")
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--witness-len", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = subs.add_parser("dimension", help="affinity dimension bracket and Lyapunov data")
    p.add_argument("spec")
    p.add_argument("--level", type=int, default=8)
    p.add_argument("--mc-steps", type=int, default=50_000)
    p.add_argument("--trials", type=int, default=6)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_dimension)

    p = subs.add_parser("attractor", help="point clouds, renders, box dimension")
    p.add_argument("spec")
    p.add_argument("--points", type=int, default=None, help="chaos-game count (exhaustive if omitted)")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--render", type=str, default=None, help="write a PPM image here")
    p.add_argument("--resolution", type=int, default=1024)
    p.add_argument("--csv", type=str, default=None, help="write the cloud as CSV here")
    p.add_argument("--box-dim", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_attractor)

    p = subs.add_parser("verify", help="end-to-end pipeline with a PASS/FAIL verdict")
    p.add_argument("spec", nargs="?", default=None)
    p.add_argument("--random-ensemble", type=int, default=None, metavar="COUNT")
    p.add_argument("--ensemble-norm", type=float, default=0.3)
    p.add_argument("--ensemble-maps", type=int, default=3)
    p.add_argument("--min-pass-rate", type=float, default=0.9)
    p.add_argument("--level", type=int, default=6)
    p.add_argument("--mc-steps", type=int, default=30_000)
    p.add_argument("--trials", type=int, default=6)
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--orbit-steps", type=int, default=10_000)
    p.add_argument("--delta-samples", type=int, default=10_000)
    p.add_argument("--tol-verdict", type=float, default=0.2)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("furstenberg", help="orbit residuals against the Lyapunov spectrum")
    p.add_argument("spec")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--mc-steps", type=int, default=50_000)
    p.add_argument("--trials", type=int, default=6)
    _add_common(p)
    p.set_defaults(func=cmd_furstenberg)

    p = subs.add_parser("transversality", help="sampled transversality constant and tail bound")
    p.add_argument("spec")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--tail", action="store_true")
    p.add_argument("--tail-samples", type=int, default=20_000)
    _add_common(p)
    p.set_defaults(func=cmd_transversality)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        code, results = args.func(args)
    except CliInputError as exc:
        print(f"affdim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetError as exc:
        print(f"affdim: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, FitWindowError, NotImplementedError) as exc:
        print(f"affdim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"affdim: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    report = {
        "version": REPORT_VERSION,
        "command": args.command,
        "inputs": {
            "argv": list(argv) if argv is not None else sys.argv[1:],
            "seed": args.seed,
            "threads": args.threads,
        },
        "results": results,
        "timing": {"wall_seconds": time.monotonic() - start},
    }
    text = dumps_canonical(report)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"affdim: i/o error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
