"""Command-line interface.

Exit codes: 0 ok, 2 usage or input error, 3 uneven padding/erosion found,
4 foveation oracle mismatch, 5 line artifacts flagged.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, convarith, foveation
from .netspec import NetworkSpecError, load_network, override_padding, serialize_network
from .padding import DISTRIBUTION, PARTIAL_CONV, PaddingError, parse_mode
from .pgm import upscale, write_pgm
from .presets import PRESETS, preset
from .tensor import format_csv
from .weights import WeightFormatError, check_weights, load_weights, random_weights

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNEVEN = 3
EXIT_MISMATCH = 4
EXIT_ARTIFACTS = 5


class InputError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("PADLENS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"PADLENS_SEED must be an integer, got {raw!r}") from None


def parse_hw(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise InputError(f"bad size {text!r}; expected HxW or N") from None
    if len(vals) == 1:
        vals *= 2
    if len(vals) != 2 or min(vals) < 1:
        raise InputError(f"bad size {text!r}; expected HxW or N")
    return vals[0], vals[1]


def parse_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        return int(lo), int(hi)
    except ValueError:
        raise InputError(f"bad range {text!r}; expected a..b") from None


def load_net(ref: str):
    """A JSON config path, or a preset name (optionally written ``preset:NAME``)."""
    name = ref[len("preset:"):] if ref.startswith("preset:") else ref
    if not Path(ref).exists() and name in PRESETS:
        return preset(name)
    try:
        return load_network(ref)
    except FileNotFoundError:
        raise InputError(f"no such network file or preset: {ref}") from None


def _weights(args, spec):
    if getattr(args, "weights", None):
        try:
            return load_weights(args.weights, spec)
        except FileNotFoundError:
            raise InputError(f"weights file not found: {args.weights}") from None
    seed = args.random_seed if args.random_seed is not None else default_seed()
    ws = random_weights(spec, seed)
    check_weights(spec, ws)
    return ws


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --- commands ----------------------------------------------------------------

def cmd_check(args) -> int:
    spec = load_net(args.net)
    report = convarith.check_even_padding(spec, parse_hw(args.input))
    print(report.format_table())
    if args.json:
        _write_text(Path(args.json), report.to_json() + "\n")
    return EXIT_OK if report.even else EXIT_UNEVEN


def cmd_suggest(args) -> int:
    spec = load_net(args.net)
    result = {}
    if args.range:
        lo, hi = parse_range(args.range)
        result["range"] = [lo, hi]
        result["admissible"] = {
            "height": convarith.admissible_sizes(spec, lo, hi, axis=0),
            "width": convarith.admissible_sizes(spec, lo, hi, axis=1),
        }
    if args.input:
        result["suggestion"] = convarith.suggest_size(spec, parse_hw(args.input))
    if not result:
        raise InputError("suggest needs --input and/or --range")
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_foveation(args) -> int:
    spec = load_net(args.net)
    shape = parse_hw(args.input)
    mode = parse_mode(args.padding) if args.padding else None
    net = override_padding(spec, mode) if mode else spec
    real_valued = any(layer.padding.mode in (PARTIAL_CONV, DISTRIBUTION) for layer in net.layers)
    exact = args.exact or (args.oracle and real_valued)
    fmap = foveation.foveation_map(net, shape, exact=exact)
    mismatch = None
    if args.oracle:
        oracle = foveation.oracle_foveation(net, shape, exact=exact)
        diff = fmap.counts != oracle.counts
        mismatch = int(diff.sum())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "fmap.csv", format_csv(fmap.counts))
    meta = foveation.uniformity_stats(fmap)
    meta = {"stats": meta, "exact": fmap.exact, "integral": fmap.is_integral,
            "network": spec.name, "input": list(shape),
            "padding": args.padding or "as-configured"}
    if mismatch is not None:
        meta["oracle_mismatches"] = mismatch
    write_pgm(out / "fmap.pgm", fmap.counts, extra=meta)
    s = meta["stats"]
    print(f"min {s['min']:.17g}  max {s['max']:.17g}  spread {s['relative_spread']:.6g}"
          + ("" if fmap.exact else "  (inexact)"))
    if mismatch:
        print(f"oracle mismatch at {mismatch} pixels", file=sys.stderr)
        return EXIT_MISMATCH
    if mismatch == 0:
        print("oracle agrees")
    return EXIT_OK


def cmd_probe(args) -> int:
    spec = load_net(args.net)
    mode = parse_mode(args.padding) if args.padding else None
    shape = parse_hw(args.input)
    weights = _weights(args, spec)
    seed = default_seed()
    try:
        analysis.parse_input_mode(args.mode)
    except ValueError as e:
        raise InputError(str(e)) from None
    report = analysis.artifact_probe(spec, weights, shape, args.mode, mode, seed=seed,
                                     z_threshold=args.z)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for la in report.layers:
        stem = f"layer_{la.index:03d}_{la.kind}"
        _write_text(out / f"{stem}.csv", format_csv(la.mean_map.data))
        write_pgm(out / f"{stem}.pgm", la.mean_map.data)
    flags = {str(la.index): {"rows": list(la.flags.rows), "cols": list(la.flags.cols)}
             for la in report.layers if la.flags}
    _write_json(out / "flags.json", flags)
    _write_json(out / "report.json", report.summary())
    for la in report.layers:
        if la.flags:
            print(f"layer {la.index} ({la.kind}): rows {list(la.flags.rows)} cols {list(la.flags.cols)}")
    if report.flagged:
        return EXIT_ARTIFACTS
    print("no line artifacts flagged")
    return EXIT_OK


def cmd_kernels(args) -> int:
    spec = load_net(args.net)
    weights = _weights(args, spec)
    rows = analysis.asymmetry_sweep(weights, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r in rows:
        k = analysis.mean_kernel(weights, r["layer"])
        stem = f"kernel_{r['layer']:03d}"
        write_pgm(out / f"{stem}.pgm", upscale(k, args.scale),
                  extra={"layer": r["layer"], "mean_kernel": k.tolist()})
    _write_text(out / "asymmetry.csv", analysis.format_asymmetry_csv(rows))
    for r in rows:
        print(f"layer {r['layer']:>3} {r['kh']}x{r['kw']}  horiz {r['horiz']:.4f}  vert {r['vert']:.4f}")
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.name is None:
        print("\n".join(sorted(PRESETS)))
        return EXIT_OK
    try:
        print(serialize_network(preset(args.name), indent=2))
    except NetworkSpecError as e:
        raise InputError(str(e)) from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="padlens",
                                description="Padding-induced spatial bias analysis for CNNs.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="audit downsampling layers for uneven padding/erosion")
    c.add_argument("net", help="network JSON file or preset name")
    c.add_argument("--input", required=True, help="input size HxW")
    c.add_argument("--json", help="also write the report as JSON to this file")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("suggest", help="input sizes that pad evenly everywhere")
    c.add_argument("net")
    c.add_argument("--input", help="desired size HxW")
    c.add_argument("--range", help="search range a..b")
    c.set_defaults(func=cmd_suggest)

    c = sub.add_parser("foveation", help="per-pixel path-count map")
    c.add_argument("net")
    c.add_argument("--input", required=True)
    c.add_argument("--padding", help="override the padding algorithm")
    c.add_argument("--oracle", action="store_true", help="verify against the one-hot oracle")
    c.add_argument("--exact", action="store_true", help="rational arithmetic (small inputs only)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_foveation)

    c = sub.add_parser("probe", help="averaged feature maps and line-artifact flags")
    c.add_argument("net")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--weights", help="PADW1 weight file")
    src.add_argument("--random-seed", type=int, help="seed for random weights")
    c.add_argument("--mode", default="zeros", help="zeros | const:c | random:n")
    c.add_argument("--padding")
    c.add_argument("--input", default="32x32")
    c.add_argument("--z", type=float, default=analysis.DEFAULT_Z, help="flag threshold")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_probe)

    c = sub.add_parser("kernels", help="mean kernels and their asymmetry")
    c.add_argument("net")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--weights")
    src.add_argument("--random-seed", type=int)
    c.add_argument("--scale", type=int, default=16, help="PGM upscale factor")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_kernels)

    c = sub.add_parser("preset", help="list presets or print one as JSON")
    c.add_argument("name", nargs="?")
    c.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, NetworkSpecError, PaddingError, WeightFormatError,
            convarith.ShapeError, OSError) as e:
        print(f"padlens: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
