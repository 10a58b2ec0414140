"""
Command-line entry point.

Subcommands: ``foveate``, ``render``, ``analyze`` and ``buffer-stats``.
Angles are in degrees, acuity in cycles per degree (cpd), positions and
sizes in pixels. A ``--config`` JSON file supplies defaults that explicit
flags override; its keys are the long option names (``device_cap`` or
``device-cap``).

Exit codes: 0 success, 2 invalid arguments or configuration, 3 file I/O
failure, 4 numeric domain error.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import acuity, baselines, foveate, lpbuffer, mapping, presets, raycast
from .errors import ConfigError, DomainError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 2, 3, 4


def _pair(text, kind=float, name="value"):
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).replace("x", ",").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"{name} must be two comma-separated numbers, got {text!r}")
    try:
        return kind(parts[0]), kind(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be two numbers, got {text!r}") from None


def _gaze(text):
    return _pair(text, float, "gaze")


def _resolution(text):
    try:
        return presets.parse_resolution(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    val = float(text)
    if not val > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def _add_model_args(p):
    g = p.add_argument_group("acuity model and mapping")
    g.add_argument("--acuity", metavar="PATH",
                   help="acuity model JSON with 'pivots' [[e_deg, cpd], ...] and optional 'e_max' (degrees); "
                        "default: built-in 5-pivot model, e_max 60 deg")
    g.add_argument("--device-cap", type=float, metavar="CPD",
                   help="cap acuity at the display's resolvable frequency in cycles per degree (e.g. 9)")
    g.add_argument("--delta", default="constant:1.0", metavar="SPEC",
                   help="tangential/radial rate ratio: 'constant:X' or a JSON table [[e_deg, ratio], ...] "
                        "(default constant:1.0)")
    g.add_argument("--c-r", dest="c_r", type=_positive, metavar="RATIO",
                   help="tan(eccentricity) per pixel of radius; default (film/focal)/height when "
                        "--film/--focal are given, else 1/height")
    g.add_argument("--film", type=float, metavar="MM", help="film (sensor) height in mm")
    g.add_argument("--focal", type=float, metavar="MM", help="focal length in mm")


def _add_common(p):
    p.add_argument("--config", metavar="JSON", help="JSON file of default option values")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, metavar="N",
                   help="worker threads (default: hardware concurrency); output does not depend on N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vafr",
        description="Acuity-driven log-polar foveation: image foveation, foveated ray casting, "
                    "buffer statistics and shading-rate curves. Angles in degrees, acuity in cpd, "
                    "positions in pixels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("foveate", help="foveate an image through the LP buffer",
                       description="Resample an image into the LP buffer and back. The display size is the "
                                   "input image size in pixels.")
    p.add_argument("--in", dest="input", required=True, metavar="PATH", help="input PNG or PPM")
    p.add_argument("--out", metavar="PATH", help="output image (default: <input stem>_foveated.png)")
    p.add_argument("--gaze", type=_gaze, metavar="X,Y", help="gaze point in pixels (default: image centre)")
    p.add_argument("--aa", choices=foveate.AA_MODES, default="lp_fxaa", help="anti-aliasing in LP space")
    p.add_argument("--outside", choices=foveate.OUTSIDE_POLICIES, default="clamp_ring",
                   help="pixels beyond e_max degrees: repeat the last ring, copy the source, or fill")
    p.add_argument("--fill", type=lambda s: tuple(int(c) for c in s.split(",")), default=(0, 0, 0, 255),
                   metavar="R,G,B[,A]", help="fill colour for --outside solid_color (0-255)")
    p.add_argument("--dump-lp", metavar="PATH", help="also write the LP buffer (invalid texels magenta)")
    _add_model_args(p)
    _add_common(p)

    p = sub.add_parser("render", help="ray cast a scene, foveated or at full resolution",
                       description="Ray cast a scene. vafr mode shades one ray per valid LP texel; gt mode one "
                                   "ray per pixel.")
    p.add_argument("--scene", required=True, metavar="PATH|fixture:N",
                   help="scene JSON, or fixture:N for the built-in scene with N lights")
    p.add_argument("--mode", choices=("vafr", "gt"), default="vafr")
    p.add_argument("--res", type=_resolution, default=(1920, 1080), metavar="WxH",
                   help=f"display size in pixels or a preset ({', '.join(presets.RESOLUTIONS)})")
    p.add_argument("--gaze", type=_gaze, metavar="X,Y", help="gaze point in pixels (default: centre)")
    p.add_argument("--aa", choices=foveate.AA_MODES, default="lp_fxaa")
    p.add_argument("--outside", choices=foveate.OUTSIDE_POLICIES, default="clamp_ring")
    p.add_argument("--out", metavar="PATH", default="render.png", help="output PNG")
    p.add_argument("--stats-out", metavar="PATH",
                   help="write ray counts and per-stage milliseconds as JSON")
    _add_model_args(p)
    _add_common(p)

    p = sub.add_parser("analyze", help="shading-rate curves of VaFR and log-polar baselines as CSV",
                       description="Sweep presets x resolutions x gaze positions x eccentricities. Rates are "
                                   "in cycles per degree, eccentricities in degrees. Samples outside a "
                                   "method's domain are left empty.")
    p.add_argument("--presets", choices=sorted(baselines.PRESET_GROUPS), default="full",
                   help="curve set; 'full' adds the retuned delta=8, alpha=0.78, beta=0.9 presets")
    p.add_argument("--method", action="append", metavar="NAME",
                   help=f"restrict to named curves (repeatable): {', '.join(baselines.PRESETS)}")
    p.add_argument("--res", type=_resolution, action="append", metavar="WxH",
                   help="display resolution(s) in pixels (repeatable; default: five standard sizes)")
    p.add_argument("--gaze-sweep", action="store_true", help="emit rows for both centre and corner gaze")
    p.add_argument("--e-step", type=_positive, default=0.5, metavar="DEG",
                   help="eccentricity step in degrees; the grid runs from one step to 55 degrees")
    p.add_argument("--fov", type=_positive, default=110.0, metavar="DEG",
                   help="vertical field of view in degrees used to derive c_r for the baselines")
    p.add_argument("--out", metavar="PATH", help="CSV output (default: stdout)")
    p.add_argument("--acuity", metavar="PATH", help="acuity model JSON for the VaFR rows")
    _add_common(p)

    p = sub.add_parser("buffer-stats", help="shading points per eye for each display preset",
                       description="Rays (shading points) per eye for VaFR, LaFR(2.2), LaFR(1.8) and full "
                                   "resolution over the 2K..retinal presets. LaFR(delta) shades "
                                   "W*H/delta^2 pixels.")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    _add_model_args(p)
    _add_common(p)
    return parser


def _apply_config(parser, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    path = known.config
    command = next((a for a in rest if not a.startswith("-")), None)
    if not path or command not in COMMANDS:
        return parser.parse_args(argv)
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    sub = parser._subparsers._group_actions[0].choices[command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, val in doc.items():
        dest = key.replace("-", "_")
        dest = {"in": "input", "c-r": "c_r"}.get(key, dest)
        if dest not in known:
            raise ConfigError(f"config {path}: unknown option {key!r} for {command}")
        action = known[dest]
        if isinstance(val, (list, dict)) and action.type is None:
            val = json.dumps(val)
        elif action.type is not None and not isinstance(val, bool):
            try:
                val = action.type(val if isinstance(val, (list, tuple)) else str(val))
            except argparse.ArgumentTypeError as exc:
                raise ConfigError(f"config {path}: {key}: {exc}") from None
        defaults[dest] = val
    sub.set_defaults(**defaults)
    # flags given on the command line still win
    for a in sub._actions:
        if a.dest in defaults and a.required:
            a.required = False
    return parser.parse_args(argv)


def _model(args):
    model = acuity.AcuityModel.from_json(args.acuity) if args.acuity else acuity.default_model()
    if getattr(args, "device_cap", None) is not None:
        model = acuity.adapt_to_device(model, args.device_cap)
    return model


def _delta(args):
    text = args.delta
    if isinstance(text, str) and text.lstrip().startswith("["):
        return mapping.parse_delta(json.loads(text))
    return mapping.parse_delta(text)


def _c_r(args, height):
    if args.c_r is not None:
        return args.c_r
    if (args.film is None) != (args.focal is None):
        raise ConfigError("--film and --focal must be given together")
    if args.film is not None:
        return mapping.compute_cr(args.film, args.focal, height)
    return 1.0 / height


def _context(args, w, h, gaze=None):
    return mapping.MappingContext(model=_model(args), c_r=_c_r(args, h), display_w=w, display_h=h,
                                  gaze=gaze, delta=_delta(args))


def cmd_foveate(args, out) -> int:
    src = Path(args.input)
    img = foveate.read_image(src)
    h, w = img.shape[:2]
    ctx = _context(args, w, h, args.gaze)
    params = foveate.FoveationParams(aa_mode=args.aa, outside_policy=args.outside,
                                     fill_color=tuple(args.fill))
    fov = foveate.Foveator(ctx, params, threads=args.threads)
    result = fov(img)
    dest = Path(args.out) if args.out else src.with_name(f"{src.stem}_foveated.png")
    foveate.write_image(dest, result)
    if args.dump_lp:
        lpbuffer.dump_png(fov.last_lp, args.dump_lp)
    print(f"valid_count {fov.buffer.valid_count}", file=out)
    print(f"lp_dims {fov.buffer.width}x{fov.buffer.height}", file=out)
    print(f"wrote {dest}", file=out)
    return EXIT_OK


def _scene(args, w, h):
    spec = args.scene
    if spec.startswith("fixture:"):
        try:
            n = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"fixture scene needs a light count, got {spec!r}") from None
        if n < 1:
            raise ConfigError("fixture scene needs at least one light")
        return raycast.fixture_scene(n, w, h)
    try:
        return raycast.load_scene(Path(spec), w, h)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"scene {spec}: {exc}") from None


def cmd_render(args, out) -> int:
    w, h = args.res
    scene, cam = _scene(args, w, h)
    if args.c_r is not None or args.film is not None:
        film, focal = (args.film, args.focal) if args.film is not None else (args.c_r * h, 1.0)
        cam = raycast.Camera(cam.position, cam.right, cam.up, cam.forward, film, focal, w, h)
    if args.mode == "gt":
        img, st = raycast.render_gt(scene, cam, threads=args.threads)
    else:
        ctx = mapping.MappingContext(model=_model(args), c_r=cam.c_r, display_w=w, display_h=h,
                                     gaze=args.gaze, delta=_delta(args))
        img, st = raycast.render_vafr(scene, cam, ctx, aa_mode=args.aa, outside_policy=args.outside,
                                      threads=args.threads)
    foveate.write_image(args.out, img)
    if args.stats_out:
        Path(args.stats_out).write_text(json.dumps(st.as_dict(), indent=2) + "\n")
    print(f"mode {st.mode} primary_rays {st.primary_rays} shadow_rays {st.shadow_rays}", file=out)
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


def cmd_analyze(args, out) -> int:
    names = baselines.PRESET_GROUPS[args.presets]
    if args.method:
        unknown = [m for m in args.method if m not in baselines.PRESETS]
        if unknown:
            raise ConfigError(f"unknown method(s) {unknown}")
        names = tuple(m for m in names if m in args.method) or tuple(args.method)
    grid = np.arange(1, int(np.floor(55.0 / args.e_step + 1e-9)) + 1) * args.e_step
    kw = {}
    if args.res:
        kw["resolutions"] = tuple(args.res)
    spec = baselines.SweepSpec(
        presets=names,
        gazes=("center", "corner") if args.gaze_sweep else ("center",),
        eccentricities=tuple(float(x) for x in np.round(grid, 9)),
        fov_deg=args.fov,
        model=acuity.AcuityModel.from_json(args.acuity) if args.acuity else None,
        **kw,
    )
    rows = baselines.analyze(spec)
    buf = io.StringIO()
    baselines.write_csv(rows, buf)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
        print(f"wrote {len(rows)} rows to {args.out}", file=out)
    else:
        out.write(buf.getvalue())
    return EXIT_OK


LAFR_TABLE = (("LaFR(2.2)", 2.2), ("LaFR(1.8)", 1.8))


def buffer_table(model=None, delta=None):
    """Shading points per eye over the table presets, one dict per resolution."""
    model = model or acuity.default_model()
    rows = []
    for name in presets.TABLE_PRESETS:
        W, H = presets.RESOLUTIONS[name]
        ctx = mapping.MappingContext(model=model, c_r=1.0 / H, display_w=W, display_h=H,
                                     delta=delta or mapping.ConstantDelta(1.0))
        st = lpbuffer.stats(lpbuffer.build(ctx, channels=1), ctx)
        row = {"preset": name, "resolution": f"{W}x{H}", "VaFR": st.valid_count}
        for label, d in LAFR_TABLE:
            row[label] = round(W * H / d**2)
        row["GT"] = st.gt_pixels
        row["lp_dims"] = [st.width, st.height]
        rows.append(row)
    return rows


def cmd_buffer_stats(args, out) -> int:
    rows = buffer_table(_model(args), _delta(args))
    if args.json:
        out.write(json.dumps(rows, indent=2) + "\n")
        return EXIT_OK
    cols = ("VaFR", "LaFR(2.2)", "LaFR(1.8)", "GT")
    out.write(f"{'resolution':<18}" + "".join(f"{c:>14}" for c in cols) + "\n")
    for r in rows:
        label = f"{r['preset']} {r['resolution']}"
        out.write(f"{label:<18}" + "".join(f"{r[c]:>14,}" for c in cols) + "\n")
    w, h = rows[0]["lp_dims"]
    out.write(f"LP buffer {w}x{h} at every resolution\n")
    return EXIT_OK


COMMANDS = {
    "foveate": cmd_foveate,
    "render": cmd_render,
    "analyze": cmd_analyze,
    "buffer-stats": cmd_buffer_stats,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
