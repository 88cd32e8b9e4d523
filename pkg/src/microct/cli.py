"""Command-line front end.

Exit codes: 0 success, 2 usage error, 1 runtime error (the message names
the module that failed).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

__all__ = ["main", "build_parser"]


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _line_set(text: str):
    from .xray import LineSet
    try:
        return LineSet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="microct", description="Microlocal tomography toolkit.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized test data")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("phantom", help="rasterize a phantom description")
    a.add_argument("--spec", required=True, help="phantom JSON file, or random:K for K random discs")
    a.add_argument("--grid", type=_positive_int, required=True)
    a.add_argument("--extent", type=float, default=1.5)
    a.add_argument("--out", required=True, help="output prefix (writes .json + .bin)")

    a = sub.add_parser("sinogram", help="simulate line-integral data")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--phantom", help="phantom JSON (exact line integrals)")
    src.add_argument("--image", help="image prefix (discrete Radon transform)")
    a.add_argument("--ns", type=_positive_int, default=256)
    a.add_argument("--nw", type=_positive_int, default=256)
    a.add_argument("--smax", type=float, default=1.5)
    a.add_argument("--mask", type=_line_set, default="full")
    a.add_argument("--out", required=True)

    a = sub.add_parser("recon", help="reconstruct an image from a sinogram")
    a.add_argument("--sino", required=True, help="sinogram prefix")
    a.add_argument("--method", choices=["fbp", "normal", "backprojection"], default="fbp")
    a.add_argument("--mask", type=_line_set, default="full")
    a.add_argument("--truth", help="phantom JSON for error reporting")
    a.add_argument("--grid", type=_positive_int, default=256)
    a.add_argument("--extent", type=float, default=None, help="defaults to the sinogram s_max")
    a.add_argument("--filter-alpha", type=float, default=1.0)
    a.add_argument("--filter-cutoff", type=float, default=None)
    a.add_argument("--pad", type=int, default=2)
    a.add_argument("--out", required=True)

    a = sub.add_parser("wavefront", help="edge visibility table")
    a.add_argument("--image", required=True)
    a.add_argument("--phantom", required=True)
    a.add_argument("--mask", type=_line_set, default="full")
    a.add_argument("--samples", type=_positive_int, default=64)
    a.add_argument("--out", required=True, help="CSV path")

    a = sub.add_parser("gelfand", help="X-ray recovery from wave quasimodes")
    a.add_argument("--q1", required=True, help="phantom JSON or image prefix")
    a.add_argument("--q2", required=True, help="phantom JSON, image prefix or 'zero'")
    a.add_argument("--segment", type=_floats, required=True, help="x0,y0,dx,dy")
    a.add_argument("--lambdas", type=_floats, default=[8, 16, 32, 64])
    a.add_argument("--grid", type=_positive_int, default=256)
    a.add_argument("--T", type=float, default=None, help="final time (default: exit parameter L + 1.8)")
    a.add_argument("--courant", type=float, default=0.5)
    a.add_argument("--out", required=True, help="CSV path")

    a = sub.add_parser("calderon", help="boundary determination from quasimodes")
    a.add_argument("--gamma1", required=True, help="number or expression in x, y")
    a.add_argument("--gamma2", required=True)
    a.add_argument("--x0", type=float, default=0.0)
    a.add_argument("--order", type=int, choices=[0, 1], default=0)
    a.add_argument("--lambdas", type=_floats, default=[8, 16, 32, 64])
    a.add_argument("--grid", type=_positive_int, default=256, help="nodes per unit half-width")
    a.add_argument("--width", type=float, default=0.5)
    a.add_argument("--out", required=True, help="CSV path")

    a = sub.add_parser("report", help="merge run directories into a summary")
    a.add_argument("runs", nargs="*", help="run directories")
    a.add_argument("--out", required=True, help="output directory")
    return p


def _manifest_path(out: Path) -> Path:
    from .report import MANIFEST_SUFFIX
    name = out.name[:-len(out.suffix)] if out.suffix else out.name
    return out.with_name(name + MANIFEST_SUFFIX)


def _flags(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if hasattr(v, "describe"):
            v = v.describe()
        out[k] = v
    return out


def _load_phantom_spec(spec: str, seed: int):
    from .phantom import Disc, Phantom, load_phantom
    if spec.startswith("random:"):
        k = int(spec.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        comps = []
        while len(comps) < k:
            r = rng.uniform(0.05, 0.25)
            c = rng.uniform(-0.7, 0.7, 2)
            cand = Disc(tuple(c), r, float(rng.uniform(0.5, 2.0)))
            if all(np.hypot(*(np.array(cand.center) - d.center)) > cand.axes[0] + d.axes[0] + 0.02
                   for d in comps):
                comps.append(cand)
        return Phantom(tuple(comps))
    return load_phantom(spec)


def _is_phantom_file(path: str) -> bool:
    p = Path(path)
    if p.suffix != ".json" or not p.is_file():
        return False
    data = json.loads(p.read_text())
    return isinstance(data, list) or (isinstance(data, dict) and "components" in data)


def _cmd_phantom(args) -> list[Path]:
    from .grid import Grid2, save_image
    from .phantom import rasterize
    ph = _load_phantom_spec(args.spec, args.seed)
    img = rasterize(ph, Grid2(args.grid, args.extent))
    return list(save_image(img, args.out))


def _cmd_sinogram(args) -> list[Path]:
    from .grid import load_image
    from .phantom import analytic_radon, load_phantom, rasterize
    from .xray import Sinogram, SinogramGeometry, check_support, mask, radon, save_sinogram
    geom = SinogramGeometry(args.ns, args.smax, args.nw)
    if args.phantom:
        ph = load_phantom(args.phantom)
        # support check on a fine rasterization, then exact line integrals
        from .grid import Grid2
        check_support(rasterize(ph, Grid2(257, max(args.smax * 1.25, 2.0))), args.smax)
        vals = np.stack([analytic_radon(ph, geom.s, geom.omega(k)) for k in range(geom.nw)], 1)
        sino = Sinogram(geom, vals)
    else:
        sino = radon(load_image(args.image), geom)
    if args.mask.kind != "full":
        sino = mask(sino, args.mask)
    return list(save_sinogram(sino, args.out))


def _cmd_recon(args) -> list[Path]:
    from .grid import Grid2, save_image
    from .phantom import load_phantom, rasterize
    from .recon import interior_mask, masked_recon
    from .spectral import FilterSpec
    from .xray import check_sinogram_support, load_sinogram
    sino = load_sinogram(args.sino)
    check_sinogram_support(sino)
    grid = Grid2(args.grid, args.extent if args.extent is not None else sino.geometry.s_max)
    spec = FilterSpec(args.filter_alpha, args.filter_cutoff, args.pad)
    truth = tmask = None
    if args.truth:
        ph = load_phantom(args.truth)
        truth = rasterize(ph, grid)
        X, Y = grid.mesh()
        tmask = interior_mask(ph, grid) & (np.hypot(X, Y) < sino.geometry.s_max)
    rep = masked_recon(sino, args.mask, grid, args.method, truth, tmask, spec)
    paths = list(save_image(rep.image, args.out))
    rpath = Path(str(args.out) + ".report.json")
    rpath.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    return paths + [rpath]


def _cmd_wavefront(args) -> list[Path]:
    from .grid import load_image
    from .microlocal import visibility_report
    from .phantom import load_phantom
    from .report import write_csv
    rows = visibility_report(load_phantom(args.phantom), args.mask, load_image(args.image), args.samples)
    cols = ["x0_1", "x0_2", "xi0_1", "xi0_2", "predicted", "decay_exponent", "magnitude", "alpha_star"]
    return [write_csv(args.out, [r.as_record() for r in rows], cols)]


def _load_potential(spec: str, grid):
    from .grid import Image, load_image
    from .phantom import load_phantom, rasterize
    from .wavelab import Potential
    if spec == "zero":
        return Potential.zero(grid)
    if _is_phantom_file(spec):
        return Potential(rasterize(load_phantom(spec), grid))
    img = load_image(spec)
    if img.grid != grid:
        raise ValueError(f"potential image grid (n={img.grid.n}, extent={img.grid.extent}) "
                         f"does not match the wave grid (n={grid.n}, extent=1)")
    return Potential(Image(grid, img.values.real))


def _cmd_gelfand(args) -> list[Path]:
    from .report import write_csv
    from .wavelab import Segment, omega_grid, xray_recovery_experiment
    if len(args.segment) != 4:
        raise ValueError("--segment needs four numbers x0,y0,dx,dy")
    grid = omega_grid(args.grid)
    q1, q2 = _load_potential(args.q1, grid), _load_potential(args.q2, grid)
    seg = Segment.from_ray(args.segment[:2], args.segment[2:])
    T = args.T if args.T is not None else seg.L + 1.8
    rows = xray_recovery_experiment(q1, q2, seg, args.lambdas, T, courant=args.courant)
    recs = [{"lambda": r.lam, "pairing_value": r.value.real, "pairing_imag": r.value.imag,
             "line_integral": r.line_integral, "abs_error": r.abs_error} for r in rows]
    out = Path(args.out)
    csv_path = write_csv(out, recs)
    meta = out.with_suffix(".meta.json")
    meta.write_text(json.dumps({"delta": seg.delta, "L": seg.L, "T": T, "grid": args.grid,
                                "courant": args.courant}, indent=2, sort_keys=True) + "\n")
    return [csv_path, meta]


_EXPR_NAMES = {k: getattr(np, k) for k in ("exp", "sin", "cos", "tanh", "sqrt", "pi", "abs", "cosh", "sinh")}


def _conductivity(spec: str, grid):
    from .calderon import Conductivity
    try:
        c = float(spec)
    except ValueError:
        code = compile(spec, "<gamma>", "eval")
        bad = [n for n in code.co_names if n not in _EXPR_NAMES and n not in ("x", "y")]
        if bad:
            raise ValueError(f"unknown names in conductivity expression: {bad}")

        def fn(x, y):
            return np.asarray(eval(code, {"__builtins__": {}}, dict(_EXPR_NAMES, x=x, y=y)), float) + 0 * x

        return Conductivity.from_function(grid, fn)
    return Conductivity.constant(grid, c)


def _cmd_calderon(args) -> list[Path]:
    from .calderon import HalfGrid, boundary_determination_experiment
    from .report import write_csv
    grid = HalfGrid(int(round(args.grid * args.width)), args.width)
    g1, g2 = _conductivity(args.gamma1, grid), _conductivity(args.gamma2, grid)
    rows = boundary_determination_experiment(g1, g2, args.x0, args.lambdas, args.order)
    cols = ["lambda", "k", "scaled_integral", "boundary_oracle", "rel_error"]
    return [write_csv(args.out, [r.as_record() for r in rows], cols)]


def _cmd_report(args) -> list[Path]:
    from .report import build_report
    res = build_report(args.runs, args.out)
    for s in res["skipped"]:
        print(f"skipped: {s}", file=sys.stderr)
    return [res["markdown"], res["csv"]]


_COMMANDS = {
    "phantom": _cmd_phantom,
    "sinogram": _cmd_sinogram,
    "recon": _cmd_recon,
    "wavefront": _cmd_wavefront,
    "gelfand": _cmd_gelfand,
    "calderon": _cmd_calderon,
    "report": _cmd_report,
}


def _planned_outputs(args) -> list[Path]:
    out = Path(args.out)
    if args.command in ("phantom", "sinogram"):
        return [out.with_suffix(".json"), out.with_suffix(".bin")]
    if args.command == "recon":
        return [out.with_suffix(".json"), out.with_suffix(".bin"), Path(str(out) + ".report.json")]
    if args.command == "gelfand":
        return [out, out.with_suffix(".meta.json")]
    if args.command == "report":
        return [out / "report.md", out / "report.csv"]
    return [out]


def _inputs(args) -> list[Path]:
    found = []
    for key in ("spec", "phantom", "truth", "q1", "q2"):
        v = getattr(args, key, None)
        if v and Path(v).is_file():
            found.append(Path(v))
    for key in ("image", "sino"):
        v = getattr(args, key, None)
        if v:
            found += [Path(v).with_suffix(".json"), Path(v).with_suffix(".bin")]
    return found


def _failing_module(exc: BaseException) -> str:
    name = "cli"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        mod = frame.f_globals.get("__name__", "")
        if mod.startswith("microct.") and mod != "microct.cli":
            name = mod.split(".", 1)[1]
    return name


def _thread_limit():
    n = os.environ.get("MICROCT_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(1, int(n)))


def _attach_values(argv: list[str]) -> list[str]:
    # "--segment -2.7,0,1,0" would otherwise be read as an unknown flag
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--segment":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _attach_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    from .report import RunManifest
    limiter = None
    try:
        limiter = _thread_limit()
        outputs = _planned_outputs(args)
        base = Path(args.out) / "run" if args.command == "report" else Path(args.out)
        manifest = RunManifest(_manifest_path(base), args.command, _flags(args), _inputs(args), outputs)
        manifest.start()
        _COMMANDS[args.command](args)
        manifest.complete()
    except Exception as exc:  # noqa: BLE001 - reported with the failing module
        print(f"microct: error in {_failing_module(exc)}: {exc}", file=sys.stderr)
        return 1
    finally:
        if limiter is not None:
            limiter.unregister()
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
