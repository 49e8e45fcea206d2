"""Command-line front end.

Subcommands: characterize, gen-codebook, embed, extract, metrics, capacity,
roundtrip.  Human-readable summaries go to stdout; ``--emit csv|json``
switches to machine-readable output.  Errors go to stderr and map to the
exit codes below.

    0  success (outputs written and verified)
    1  unexpected error
    2  invalid arguments or parameters
    3  LIF characterization did not converge
    4  payload too large for the cover
    5  codebook does not match the key sidecar
    6  invalid, infeasible or unreadable codebook
    7  malformed or unsupported PNG / WAV / sidecar file
    8  decryption failure (corrupt stego image or keys)
    9  read-back verification failed
   10  metrics input error (size mismatch, image too small)
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import math
import os
import secrets
import sys
import tempfile
import warnings
from pathlib import Path

from . import codebook as cbmod
from . import lif, metrics, png, stego, wav
from .errors import CodebookParseError, SpikeStegoError, VerificationError

log = logging.getLogger("spikestego")


def _add_codebook(p):
    p.add_argument("--codebook", metavar="PATH", help="codebook JSON (default: built-in reference table)")


def _add_dither(p):
    p.add_argument("--dither-mode", choices=stego.DITHER_MODES, default="cyclic")
    p.add_argument("--dither-amp", type=int, choices=range(4), default=2, metavar="0..3")
    p.add_argument("--seed", type=int, help="seed for --dither-mode uniform (random if omitted)")


def _add_alpha(p, default="synthesize"):
    p.add_argument(
        "--alpha",
        choices=png.ALPHA_POLICIES,
        default=default,
        help="reject covers without alpha, or add an opaque alpha plane",
    )


def _add_emit(p):
    p.add_argument("--emit", choices=("csv", "json"), help="machine-readable output on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikestego", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="sweep DC current to find spike-count levels")
    p.add_argument("--i-start", type=float, default=370.0, help="first current, pA")
    p.add_argument("--di", type=float, default=1.0, help="current step, pA")
    p.add_argument("--target-levels", type=int, default=10)
    p.add_argument("--max-steps", type=int, default=5000)
    p.add_argument("--dt", type=float, default=0.1, help="integration step, ms")
    p.add_argument("--v-m0", type=float, default=-70.0, help="initial membrane potential, mV")
    p.add_argument("--csv", dest="csv_path", metavar="PATH", help="write the (current, count) sweep")
    p.add_argument("--levels", metavar="PATH", help="write the level table JSON")
    _add_emit(p)

    p = sub.add_parser("gen-codebook", help="derive, validate and write a codebook")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--canonical", action="store_true", help="write the built-in reference table")
    src.add_argument("--from-levels", metavar="PATH", help="simulate patterns from a level table JSON")
    src.add_argument("--from-patterns", metavar="PATH", help='JSON object {"digit": [ms, ...]}')
    p.add_argument("-o", "--output", required=True, metavar="PATH")

    p = sub.add_parser("embed", help="hide a WAV in a PNG cover")
    p.add_argument("cover")
    p.add_argument("audio")
    p.add_argument("-o", "--output", required=True, metavar="STEGO.png")
    p.add_argument("--sidecar", metavar="PATH", help="key sidecar path (default: OUTPUT + .ssnk)")
    _add_codebook(p)
    _add_dither(p)
    _add_alpha(p)
    _add_emit(p)

    p = sub.add_parser("extract", help="recover the WAV from a stego PNG and key sidecar")
    p.add_argument("stego")
    p.add_argument("sidecar")
    p.add_argument("-o", "--output", required=True, metavar="OUT.wav")
    _add_codebook(p)

    p = sub.add_parser("metrics", help="fidelity report for cover/stego pairs")
    p.add_argument("images", nargs="+", metavar="COVER STEGO")
    _add_alpha(p)
    _add_emit(p)

    p = sub.add_parser("capacity", help="payload capacity of a cover")
    p.add_argument("image", nargs="?")
    p.add_argument("--size", metavar="WxH", help="use dimensions instead of an image file")
    p.add_argument("--rate", type=int, default=48000)
    p.add_argument("--channels", type=int, choices=(1, 2), default=2)
    _add_emit(p)

    p = sub.add_parser("roundtrip", help="embed, extract and compare in a temporary directory")
    p.add_argument("cover")
    p.add_argument("audio")
    _add_codebook(p)
    _add_dither(p)
    _add_alpha(p)
    _add_emit(p)
    return parser


def _load_codebook(args):
    return cbmod.load(args.codebook) if args.codebook else cbmod.canonical()


def _dither(args, parser):
    if args.seed is not None and args.dither_mode != "uniform":
        parser.error("--seed only applies to --dither-mode uniform")
    seed = args.seed
    if seed is None:
        seed = secrets.randbits(64) if args.dither_mode == "uniform" else 0
    try:
        return stego.DitherConfig(args.dither_mode, args.dither_amp, seed)
    except ValueError as exc:
        parser.error(str(exc))


def _jsonable(d):
    return {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def _emit(kind, rows, fieldnames):
    if kind == "json":
        rows = [_jsonable(r) for r in rows]
        print(json.dumps(rows if len(rows) != 1 else rows[0], indent=2))
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


@contextlib.contextmanager
def _cleanup_on_failure(*paths):
    """Remove partially written outputs when the block raises."""
    try:
        yield
    except BaseException:
        for p in paths:
            with contextlib.suppress(OSError):
                os.remove(p)
        raise


def cmd_characterize(args, parser) -> int:
    try:
        params = lif.LifParams(dt=args.dt, v_m0=args.v_m0)
    except SpikeStegoError as exc:
        parser.error(str(exc))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        char = lif.characterize(params, args.i_start, args.di, args.target_levels, args.max_steps)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if args.csv_path:
        lif.save_sweep_csv(char, args.csv_path)
    if args.levels:
        lif.save_levels_json(char, args.levels)
    rows = [{"spike_count": n, "current_pA": c} for c, n in char.levels]
    if args.emit:
        _emit(args.emit, rows, ["spike_count", "current_pA"])
    else:
        print(f"{len(char.levels)} levels after {len(char.swept)} sweep steps")
        for c, n in char.levels:
            label = "highest silent" if n == 0 else "first"
            print(f"  {n} spikes: {c:8.1f} pA  ({label})")
    return 0


def cmd_gen_codebook(args, parser) -> int:
    if args.canonical:
        cb = cbmod.canonical()
    elif args.from_levels:
        char = lif.load_levels_json(args.from_levels)
        cb = cbmod.derive(lif.digit_patterns(char))
    elif args.from_patterns:
        try:
            with open(args.from_patterns) as fh:
                doc = json.load(fh)
            patterns = {int(k): [int(t) for t in v] for k, v in doc.items()}
        except (OSError, ValueError, TypeError, AttributeError) as exc:
            raise CodebookParseError(f"cannot read patterns {args.from_patterns}: {exc}") from exc
        patterns.setdefault(0, [])
        missing = [d for d in range(1, 10) if d not in patterns]
        if missing:
            raise CodebookParseError(f"patterns file lacks digits {missing}")
        cb = cbmod.derive(patterns)
    else:
        cb = cbmod.derive(cbmod.REFERENCE_PATTERNS)
    with _cleanup_on_failure(args.output):
        cbmod.save(cb, args.output)
        if cbmod.load(args.output) != cb:
            raise VerificationError("codebook read-back differs")
    print(f"wrote {args.output} (fingerprint {cb.fingerprint[:16]}...)")
    for e in cb.entries[1:]:
        print(f"  digit {e.digit}: ts {e.chosen_ts:2d} -> remainder {e.remainder:2d}, key {e.key_index}")
    return 0


def _embed_files(cover_path, audio_path, out_path, sidecar_path, cb, dither, alpha):
    cover = png.load_png(cover_path, alpha)
    clip = wav.load_wav(audio_path)
    log.info("cover %dx%d, audio %d samples (%d ch, %d Hz)", cover.width, cover.height,
             len(clip.samples), clip.channels, clip.sample_rate)
    stego_img, sidecar = stego.embed_audio(cover, clip, cb, dither)
    with _cleanup_on_failure(out_path, sidecar_path):
        png.save_png(stego_img, out_path)
        sidecar.save(sidecar_path)
        reloaded = png.load_png(out_path, "require")
        check = stego.extract_audio(reloaded, stego.KeySidecar.load(sidecar_path), cb)
        if check != clip:
            raise VerificationError("stego image does not decode back to the input audio")
    return cover, clip, stego_img, sidecar


def _summary_rows(cover, clip, stego_img):
    cap = stego.capacity(cover)
    used = stego.PIXELS_PER_SAMPLE * len(clip.samples)
    row = {
        "samples": len(clip.samples),
        "pixels_used": used,
        "pixels_available": cover.n_pixels,
        "fill_percent": round(100.0 * used / cover.n_pixels, 3),
        "max_samples": cap.max_samples,
    }
    if min(cover.width, cover.height) >= metrics.WINDOW:
        row.update(metrics.fidelity(cover, stego_img).as_dict())
    else:
        row.update(psnr_rgb=metrics.psnr(cover, stego_img, "rgb"),
                   psnr_rgba=metrics.psnr(cover, stego_img, "rgba"))
    return row


def _print_summary(row):
    for k, v in row.items():
        print(f"  {k:<18} {metrics._fmt(v) if isinstance(v, float) else v}")


def cmd_embed(args, parser) -> int:
    cb = _load_codebook(args)
    dither = _dither(args, parser)
    sidecar_path = args.sidecar or args.output + ".ssnk"
    cover, clip, stego_img, _ = _embed_files(
        args.cover, args.audio, args.output, sidecar_path, cb, dither, args.alpha
    )
    row = _summary_rows(cover, clip, stego_img)
    if args.emit:
        _emit(args.emit, [row], list(row))
    else:
        print(f"wrote {args.output} and key sidecar {sidecar_path}")
        _print_summary(row)
    return 0


def cmd_extract(args, parser) -> int:
    cb = _load_codebook(args)
    sidecar = stego.KeySidecar.load(args.sidecar)
    image = png.load_png(args.stego, "require")
    clip = stego.extract_audio(image, sidecar, cb)
    with _cleanup_on_failure(args.output):
        wav.save_wav(clip, args.output)
        if wav.load_wav(args.output) != clip:
            raise VerificationError("written WAV differs from decoded audio")
    print(
        f"wrote {args.output}: {clip.n_frames} frames, {clip.channels} ch, "
        f"{clip.sample_rate} Hz ({clip.duration:.3f} s)"
    )
    return 0


def cmd_metrics(args, parser) -> int:
    if len(args.images) % 2:
        parser.error("metrics takes COVER STEGO pairs")
    rows = []
    for cover_path, stego_path in zip(args.images[0::2], args.images[1::2]):
        a = png.load_png(cover_path, args.alpha)
        b = png.load_png(stego_path, args.alpha)
        report = metrics.fidelity(a, b)
        rows.append({"cover": cover_path, "stego": stego_path, **report.as_dict()})
        if not args.emit:
            print(f"{cover_path} vs {stego_path}")
            print("  " + report.format_text().replace("\n", "\n  "))
    if args.emit:
        fields = ["cover", "stego", *metrics.FidelityReport.FIELDS]
        _emit(args.emit, rows, fields)
    return 0


def capacity_row(cap: stego.Capacity, width: int, height: int, rate: int, channels: int) -> dict:
    return {
        "width": width,
        "height": height,
        "payload_bytes": cap.payload_bytes,
        "max_samples": cap.max_samples,
        "encoded_seconds": cap.max_seconds(rate, channels),
        "raw_byte_seconds": cap.raw_seconds(rate, channels),
        "sample_rate": rate,
        "channels": channels,
    }


def format_capacity(row: dict) -> str:
    return (
        f"{row['payload_bytes']:,} B; {row['max_samples']:,} samples; "
        f"{row['encoded_seconds']:.1f} s (encoded) / {row['raw_byte_seconds']:.1f} s (raw-byte)"
    )


def cmd_capacity(args, parser) -> int:
    if (args.image is None) == (args.size is None):
        parser.error("give exactly one of IMAGE or --size WxH")
    if args.size:
        try:
            w, h = (int(v) for v in args.size.lower().split("x"))
        except ValueError:
            parser.error(f"--size must look like 1920x1080, got {args.size!r}")
        image = stego.ImageBuffer.blank(w, h)
    else:
        image = png.load_png(args.image)
    row = capacity_row(stego.capacity(image), image.width, image.height, args.rate, args.channels)
    if args.emit:
        _emit(args.emit, [row], list(row))
    else:
        print(f"{image.width}x{image.height} @ {args.rate} Hz x {args.channels} ch")
        print(format_capacity(row))
    return 0


def cmd_roundtrip(args, parser) -> int:
    cb = _load_codebook(args)
    dither = _dither(args, parser)
    with tempfile.TemporaryDirectory(prefix="spikestego-") as tmp:
        stego_path = str(Path(tmp, "stego.png"))
        sidecar_path = stego_path + ".ssnk"
        out_path = str(Path(tmp, "out.wav"))
        cover, clip, stego_img, _ = _embed_files(
            args.cover, args.audio, stego_path, sidecar_path, cb, dither, args.alpha
        )
        recovered = stego.extract_audio(
            png.load_png(stego_path, "require"), stego.KeySidecar.load(sidecar_path), cb
        )
        wav.save_wav(recovered, out_path)
        identical = wav.load_wav(out_path) == clip
    row = {"bit_identical": identical, **_summary_rows(cover, clip, stego_img)}
    if args.emit:
        _emit(args.emit, [row], list(row))
    else:
        print("roundtrip: " + ("bit-identical" if identical else "MISMATCH"))
        _print_summary(row)
    if not identical:
        raise VerificationError("recovered audio differs from input")
    return 0


COMMANDS = {
    "characterize": cmd_characterize,
    "gen-codebook": cmd_gen_codebook,
    "embed": cmd_embed,
    "extract": cmd_extract,
    "metrics": cmd_metrics,
    "capacity": cmd_capacity,
    "roundtrip": cmd_roundtrip,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(message)s")
    try:
        return COMMANDS[args.command](args, parser)
    except SpikeStegoError as exc:
        print(f"spikestego: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"spikestego: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"spikestego: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
