"""Command-line front end: ``dipunwrap simulate | unwrap | evaluate | bench``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, metrics
from .baselines import IrlsConfig, unwrap_goldstein, unwrap_irls, unwrap_itoh_1d, unwrap_ls_dct
from .core import WeightBounds, wrap
from .io import GridFormatError, read_grid, write_grid, write_manifest
from .pudip import NumericalError, desk_profile, paper_profile, unwrap_pudip

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

GENERATORS = ("sample-b", "sample-c", "sample-d", "sample-e", "phantom", "phasenet-data")
METHODS = ("itoh", "ls", "goldstein", "irls", "pudip")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# --------------------------------------------------------------------------- generation


def _float_or_random(text: str):
    return text if text == "random" else float(text)


def generate(name: str, params: dict) -> tuple[np.ndarray, np.ndarray, dict]:
    """Return (truth, wrapped, manifest extras) for generator ``name``.

    ``params`` holds already-parsed values; missing keys take generator defaults.
    """
    seed = int(params.get("seed", 0))
    h = int(params.get("height") or params.get("size") or 256)
    w = int(params.get("width") or params.get("size") or 256)
    extra: dict = {}
    if name in ("sample-b", "sample-e"):
        sigma = params.get("sigma", 0.45)
        sigma = datagen.sample_b_sigma(seed) if sigma == "random" else float(sigma)
        default_angle = 135.0 if name == "sample-e" else 0.0
        spec = datagen.EllipseSpec(
            radius_y=float(params.get("radius_y", 80.0)),
            radius_x=float(params.get("radius_x", 110.0)),
            amplitude=float(params.get("amplitude", 15.0)),
            sigma=sigma,
            crop_angle=float(params.get("angle", default_angle)),
        )
        truth = datagen.gen_sample_b(spec, h, w)
        extra.update(sigma=sigma, angle=spec.crop_angle)
        if name == "sample-e":
            snr = float(params.get("snr_db", 15.7))
            # metrics are taken against the perturbed phase, so it becomes the truth
            truth = datagen.add_speckle(truth, snr, seed)
            extra["snr_db"] = snr
    elif name == "sample-c":
        mx = float(params.get("max", 42.0))
        truth = datagen.gen_sample_c(mx, h, w, float(params.get("sigma", 0.45)))
        extra["max"] = mx
    elif name == "sample-d":
        spec = datagen.RandomSurfaceSpec(
            matrix_size=int(params.get("matrix_size", 5)),
            distribution=datagen.Distribution(params.get("distribution", "uniform")),
            scale=float(params.get("scale", 15.0)),
            target_size=int(params.get("size", 256)),
        )
        truth, _ = datagen.gen_sample_d(spec, seed)
        extra.update(matrix_size=spec.matrix_size, distribution=spec.distribution.value, scale=spec.scale)
    elif name == "phantom":
        r = float(params.get("radius", 5.0))
        spec = datagen.PhantomSpec(
            ellipsoids=(datagen.Ellipsoid((0.0, 0.0, 0.0), (r, r, r), float(params.get("n_inner", 1.38))),),
            shell_thickness=float(params.get("shell", 0.0)),
        )
        truth = datagen.straight_ray_phase(spec, h, w)
        extra.update(radius_um=r, n_inner=spec.ellipsoids[0].n_inner, n_medium=spec.n_medium)
    else:
        raise UsageError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
    return truth, wrap(truth), extra


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {k: v for k, v in vars(args).items() if v is not None}
    try:
        if args.generator == "phasenet-data":
            size = args.size or 256
            rows = []
            for i, s in enumerate(datagen.phasenet_samples(args.count, args.seed, size)):
                write_grid(out / f"wrapped_{i:04d}.phz", s.wrapped)
                write_grid(out / f"count_{i:04d}.phz", s.wrap_count.astype(np.float64))
                rows.append(
                    {
                        "index": i,
                        "seed": s.seed,
                        "scale": repr(s.scale),
                        "matrix_size": s.matrix_size,
                        "distribution": s.distribution.value,
                        "wrapped": f"wrapped_{i:04d}.phz",
                        "wrap_count": f"count_{i:04d}.phz",
                    }
                )
        else:
            truth, wrapped, extra = generate(args.generator, params)
            write_grid(out / "truth.phz", truth)
            write_grid(out / "wrapped.phz", wrapped)
            rows = [
                {
                    "generator": args.generator,
                    "seed": args.seed,
                    "height": truth.shape[0],
                    "width": truth.shape[1],
                    **{k: repr(v) if isinstance(v, float) else v for k, v in extra.items()},
                    "truth": "truth.phz",
                    "wrapped": "wrapped.phz",
                }
            ]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_manifest(out / "manifest.txt", rows)
    return EXIT_OK


# --------------------------------------------------------------------------- unwrapping


@dataclass
class MethodOptions:
    profile: str = "desk"
    iters: int | None = None
    eps_min: float = 0.1
    eps_max: float = 10.0
    seed: int = 0
    refresh_every: int | None = None


def run_method(method: str, psi: np.ndarray, opts: MethodOptions):
    """Unwrap ``psi``; returns (phi_tilde, loss list or None)."""
    bounds = WeightBounds(opts.eps_min, opts.eps_max)
    if method == "itoh":
        if min(psi.shape) != 1:
            raise UsageError("itoh needs a 1xN or Nx1 grid")
        return unwrap_itoh_1d(psi.ravel()).reshape(psi.shape), None
    if method == "ls":
        return unwrap_ls_dct(psi), None
    if method == "goldstein":
        return unwrap_goldstein(psi), None
    if method == "irls":
        return unwrap_irls(psi, IrlsConfig(bounds=bounds)), None
    if method == "pudip":
        profile = {"desk": desk_profile, "paper": paper_profile}[opts.profile]
        overrides = {"weight_bounds": bounds}
        if opts.refresh_every:
            overrides["refresh_every"] = opts.refresh_every
        kwargs = {"seed": opts.seed, **overrides}
        if opts.iters:
            kwargs["iterations"] = opts.iters
        gcfg, tcfg = profile(**kwargs)
        phi, report = unwrap_pudip(psi, gcfg, tcfg)
        return phi, report.losses
    raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def _load(path) -> np.ndarray:
    try:
        return read_grid(path)
    except FileNotFoundError as exc:
        raise DataError(f"no such file: {path}") from exc
    except GridFormatError as exc:
        raise DataError(f"{path}: {exc}") from exc


def cmd_unwrap(args) -> int:
    psi = _load(args.input)
    if not np.all(np.isfinite(psi)):
        raise DataError(f"{args.input}: non-finite values")
    opts = MethodOptions(args.profile, args.iters, args.eps_min, args.eps_max, args.seed, args.refresh_every)
    phi, losses = run_method(args.method, psi, opts)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_grid(out, phi)
    log = Path(args.log) if args.log else out.with_suffix(out.suffix + ".log")
    lines = [f"method {args.method}", f"shape {psi.shape[0]} {psi.shape[1]}"]
    if args.method == "pudip":
        lines += [f"profile {args.profile}", f"seed {args.seed}", f"bounds {args.eps_min!r} {args.eps_max!r}"]
        lines += [f"{i} {v!r}" for i, v in enumerate(losses)]
    lines.append(f"rewrap_error {metrics.rewrap_error(phi, psi)!r}" if np.any(psi) else "rewrap_error 0.0")
    log.write_text("\n".join(lines) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------- evaluation


def _csv_text(rows: list[dict], columns) -> str:
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def cmd_evaluate(args) -> int:
    est, truth = _load(args.estimate), _load(args.truth)
    if est.shape != truth.shape:
        raise DataError(f"shape mismatch: estimate {est.shape} vs truth {truth.shape}")
    psi = _load(args.wrapped) if args.wrapped else None
    if psi is not None and psi.shape != est.shape:
        raise DataError(f"shape mismatch: wrapped {psi.shape} vs estimate {est.shape}")
    try:
        row = metrics.metric_row(args.scenario, args.method, est, truth, psi if psi is not None else wrap(truth), args.seed, math.nan)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if psi is None:
        row["rewrap_error"] = "nan"
    row["wall_ms"] = "nan"  # timing lives in the unwrap log
    text = _csv_text([row], metrics.CSV_COLUMNS)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------- bench


@dataclass
class Scenario:
    name: str
    generator: str
    sweep: str
    values: list[str]
    methods: list[str]
    seeds: list[int]
    metric: str = "rsnr"
    params: dict = field(default_factory=dict)
    options: MethodOptions = field(default_factory=MethodOptions)


_SCENARIO_KEYS = {"name", "generator", "sweep", "values", "methods", "seeds", "metric"}
_OPTION_KEYS = {"profile", "iters", "eps_min", "eps_max", "refresh_every"}


def parse_scenario(text: str) -> Scenario:
    """Parse flat ``key=value`` lines; ``#`` starts a comment.

    Required: generator, sweep, values, methods, seeds. Other keys are passed
    to the generator (e.g. ``size=64``) or to the unwrappers (``iters``, ``eps_min`` ...).
    """
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"scenario line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key.replace("-", "_")] = value
    missing = {"generator", "sweep", "values", "methods", "seeds"} - kv.keys()
    if missing:
        raise UsageError(f"scenario missing keys: {', '.join(sorted(missing))}")
    split = lambda s: [p.strip() for p in s.split(",") if p.strip()]  # noqa: E731
    methods = split(kv["methods"])
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods in scenario: {', '.join(bad)}")
    if kv["generator"] not in GENERATORS or kv["generator"] == "phasenet-data":
        raise UsageError(f"generator {kv['generator']!r} cannot be benchmarked")
    seeds = [int(s) for s in split(kv["seeds"])]
    if not seeds:
        raise UsageError("scenario needs at least one seed")
    opts = MethodOptions()
    for key in _OPTION_KEYS & kv.keys():
        cast = str if key == "profile" else (float if key.startswith("eps") else int)
        setattr(opts, key, cast(kv[key]))
    params = {k: v for k, v in kv.items() if k not in _SCENARIO_KEYS | _OPTION_KEYS}
    return Scenario(
        name=kv.get("name", "scenario"),
        generator=kv["generator"],
        sweep=kv["sweep"].replace("-", "_"),
        values=split(kv["values"]),
        methods=methods,
        seeds=seeds,
        metric=kv.get("metric", "rsnr"),
        params=params,
        options=opts,
    )


def _bench_cell(job):
    """One (value, method, seed) run; returns a metric row dict or an error marker."""
    sc, value, method, seed = job
    params = dict(sc.params, seed=seed)
    params[sc.sweep] = value
    try:
        truth, psi, _ = generate(sc.generator, params)
        opts = MethodOptions(**{**vars(sc.options), "seed": seed})
        t0 = time.perf_counter()
        phi, _ = run_method(method, psi, opts)
        wall = 1000.0 * (time.perf_counter() - t0)
        row = metrics.metric_row(f"{sc.name}:{sc.sweep}={value}", method, phi, truth, psi, seed, wall)
    except (ValueError, NumericalError, UsageError) as exc:
        row = {"scenario": f"{sc.name}:{sc.sweep}={value}", "method": method, "seed": str(seed), "error": str(exc)}
    return row


def _worker_count(n_jobs: int) -> int:
    cap = os.environ.get("PHZ_THREADS")
    try:
        limit = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError as exc:
        raise UsageError(f"PHZ_THREADS must be an integer, got {cap!r}") from exc
    return max(1, min(limit, n_jobs))


def run_bench(sc: Scenario) -> tuple[list[dict], list[dict]]:
    """Run every cell; returns (per-run metric rows, aggregated table rows) in scenario order."""
    jobs = [(sc, v, m, s) for v in sc.values for m in sc.methods for s in sc.seeds]
    workers = _worker_count(len(jobs))
    if workers == 1:
        results = [_bench_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_cell, jobs))  # map keeps submission order
    column = {"rsnr": "rsnr_db", "ssim": "ssim", "rewrap": "rewrap_error"}.get(sc.metric)
    if column is None:
        raise UsageError(f"unknown metric {sc.metric!r}")
    table = []
    it = iter(results)
    for v in sc.values:
        for m in sc.methods:
            row = {sc.sweep: v, "method": m}
            vals = []
            for s in sc.seeds:
                r = next(it)
                cell = "error" if "error" in r else r[column]
                row[f"seed_{s}"] = cell
                vals.append(cell)
            if "error" in vals:
                row["mean"] = "error"
            else:
                mean = float(np.mean([float(x) for x in vals]))
                row["mean"] = metrics.format_db(mean) if column == "rsnr_db" else repr(mean)
            table.append(row)
    return results, table


def cmd_bench(args) -> int:
    try:
        sc = parse_scenario(Path(args.scenario).read_text())
    except FileNotFoundError as exc:
        raise DataError(f"no such scenario file: {args.scenario}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs, table = run_bench(sc)
    columns = [sc.sweep, "method"] + [f"seed_{s}" for s in sc.seeds] + ["mean"]
    (out / f"{sc.name}_table.csv").write_text(_csv_text(table, columns))
    run_cols = list(metrics.CSV_COLUMNS) + ["error"]
    (out / f"{sc.name}_runs.csv").write_text(_csv_text([{c: r.get(c, "") for c in run_cols} for r in runs], run_cols))
    failed = sum("error" in r for r in runs)
    if failed:
        print(f"{failed} run(s) failed; see {sc.name}_runs.csv", file=sys.stderr)
        if args.strict:
            return EXIT_NUMERICAL
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dipunwrap", description="2D phase unwrapping toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic (truth, wrapped) pair")
    s.add_argument("generator", choices=GENERATORS)
    s.add_argument("-o", "--out", default=".")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--size", type=int)
    s.add_argument("--height", type=int)
    s.add_argument("--width", type=int)
    s.add_argument("--angle", type=float, help="crop angle in degrees (sample-b, sample-e)")
    s.add_argument("--sigma", type=_float_or_random, help="Gaussian width, or 'random' to draw from the seed")
    s.add_argument("--amplitude", type=float)
    s.add_argument("--radius-y", type=float)
    s.add_argument("--radius-x", type=float)
    s.add_argument("--max", type=float, help="peak value (sample-c)")
    s.add_argument("--matrix-size", type=int)
    s.add_argument("--distribution", choices=[d.value for d in datagen.Distribution])
    s.add_argument("--scale", type=float)
    s.add_argument("--snr-db", type=float)
    s.add_argument("--radius", type=float, help="sphere radius in um (phantom)")
    s.add_argument("--n-inner", type=float)
    s.add_argument("--shell", type=float)
    s.add_argument("--count", type=int, default=8, help="tuples to write (phasenet-data)")
    s.set_defaults(func=cmd_simulate)

    u = sub.add_parser("unwrap", help="unwrap a grid file")
    u.add_argument("--method", required=True, choices=METHODS)
    u.add_argument("-i", "--input", required=True)
    u.add_argument("-o", "--output", required=True)
    u.add_argument("--log")
    u.add_argument("--profile", choices=("desk", "paper"), default="desk")
    u.add_argument("--iters", type=int)
    u.add_argument("--eps-min", type=float, default=0.1)
    u.add_argument("--eps-max", type=float, default=10.0)
    u.add_argument("--refresh-every", type=int)
    u.add_argument("--seed", type=int, default=0)
    u.set_defaults(func=cmd_unwrap)

    e = sub.add_parser("evaluate", help="score an estimate against a truth grid")
    e.add_argument("--estimate", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--wrapped")
    e.add_argument("--scenario", default="")
    e.add_argument("--method", default="")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_evaluate)

    b = sub.add_parser("bench", help="run a key=value scenario sweep")
    b.add_argument("scenario")
    b.add_argument("-o", "--out", default=".")
    b.add_argument("--strict", action="store_true", help="exit nonzero if any run failed")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad usage
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
