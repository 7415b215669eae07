"""Command-line front end.

Subcommands: ``phantoms``, ``simulate``, ``invert``, ``roundtrip``,
``identities`` and ``coeffs``. Exit codes: 0 success, 1 usage or
configuration error, 2 data/schema or file error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import inspect
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, load_config_file, resolve
from .forward import FullSphereData, SmtData
from .identities import exact_suite, numeric_suite, summarize
from .inversion import InversionError
from .io import (
    DataError,
    atomic_write_text,
    dumps_json,
    read_full_sphere,
    read_samples,
    write_full_sphere,
    write_json,
    write_samples,
)
from .numerics import SampledFn
from .phantoms import REGISTRY
from .pipeline import (
    base_report,
    build_phantom,
    data_summary,
    invert,
    roundtrip,
    score,
    simulate,
    truth_for,
)
from .specfun import mode_prefactor, ode_coeffs, radial_prefactor

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# argument handling


def _key_value(text: str) -> tuple[str, float]:
    key, sep, val = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), float(val)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key} needs a number, got {val!r}") from None


def _eps_prime(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--eps-prime takes 'auto' or a number, got {text!r}") from None


def _run_options(p: argparse.ArgumentParser):
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", metavar="FILE", help="JSON config file")
    g.add_argument("--preset", choices=sorted(PRESETS), help="figure preset")
    g.add_argument("--dim", type=int, help="odd dimension n >= 3")
    g.add_argument("--mode", choices=["radial", "modes"])
    g.add_argument("--qmax", dest="q_max", type=int, help="highest harmonic degree (modes)")
    g.add_argument("--phantom", choices=sorted(REGISTRY))
    g.add_argument("--param", action="append", type=_key_value, metavar="KEY=VALUE",
                   help="phantom parameter (repeatable)")
    g.add_argument("--tmin", type=float)
    g.add_argument("--tmax", type=float)
    g.add_argument("--nodes", type=int)
    g.add_argument("--quad-order", dest="quad_order", type=int)
    g.add_argument("--diff", metavar="METHOD[:PARAMS]",
                   help="e.g. polyfit, polyfit:degree=9,window=21, polyfit:align=trailing, central:width=9")
    g.add_argument("--eps", type=float, help="reconstruct on (eps, 1)")
    g.add_argument("--eps-prime", dest="eps_prime", type=_eps_prime, metavar="auto|VALUE")
    g.add_argument("--gap-threshold", dest="gap_threshold", type=float,
                   help="relative threshold for eps' detection")
    g.add_argument("--noise", type=float, metavar="AMP", help="uniform noise amplitude")
    g.add_argument("--seed", type=int)
    g.add_argument("--method", choices=["ode", "analytic"])
    g.add_argument("--interval", dest="intervals", action="append", nargs=2, type=float,
                   metavar=("A", "B"), help="metrics interval in r (repeatable)")
    g.add_argument("--near-origin", dest="near_origin", type=float)
    g.add_argument("--out", metavar="DIR", help="output directory")


_OVERRIDE_KEYS = ("dim", "mode", "q_max", "phantom", "tmin", "tmax", "nodes", "quad_order",
                  "diff", "eps", "eps_prime", "gap_threshold", "noise", "seed", "method",
                  "intervals", "near_origin", "out")


def config_from_args(args):
    file_values = load_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS if getattr(args, k) is not None}
    if args.param:
        overrides["phantom_params"] = dict(args.param)
    return resolve(args.preset, file_values, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="smtinv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"smtinv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("phantoms", help="list built-in phantoms")

    p = sub.add_parser("simulate", help="write synthetic SMT data")
    _run_options(p)

    p = sub.add_parser("invert", help="reconstruct from a data file")
    p.add_argument("--data", required=True, metavar="FILE", help="t,value or theta,phi,t,value CSV")
    _run_options(p)

    p = sub.add_parser("roundtrip", help="simulate, invert and score against the phantom")
    _run_options(p)

    p = sub.add_parser("identities", help="run the exact and numeric identity suites")
    p.add_argument("--max-k", dest="max_k", type=int, default=2)
    p.add_argument("--max-q", dest="max_q", type=int, default=2)
    p.add_argument("--exact-max-k", dest="exact_max_k", type=int, default=None,
                   help="index bound for the exact suite (default: max(8, max-k))")
    p.add_argument("--out", metavar="FILE", help="write the JSON report here instead of stdout")

    p = sub.add_parser("coeffs", help="dump the exact ODE coefficients as JSON")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--out", metavar="FILE")
    return parser


# --------------------------------------------------------------------------
# commands


def cmd_phantoms(args) -> int:
    for name, (factory, doc) in sorted(REGISTRY.items()):
        params = ", ".join(
            f"{p.name}={p.default}" for p in inspect.signature(factory).parameters.values()
        )
        print(f"{name:12s} {doc}")
        print(f"{'':12s} parameters: {params or '-'}")
    return EXIT_OK


def _write_data(path: Path, data):
    if isinstance(data, FullSphereData):
        write_full_sphere(path, data)
    else:
        write_samples(path, data.samples, "t")


def cmd_simulate(args) -> int:
    cfg = config_from_args(args)
    data = simulate(cfg)
    out = Path(cfg.out)
    path = out / "data.csv"
    _write_data(path, data)
    write_json(out / "simulate.json", {**base_report(cfg), "data": data_summary(data),
                                       "files": {"data": path.name}})
    print(f"wrote {path}")
    return EXIT_OK


def _read_data(path, cfg):
    if cfg.mode == "modes":
        return read_full_sphere(path)
    samples = read_samples(path, "t")
    if samples.points[-1] >= 1:
        raise DataError(f"{path}: t values must lie in (0, 1)")
    return SmtData(cfg.dim, samples, "radial")


def _profile_name(result, cfg, stem: str) -> str:
    return f"{stem}.csv" if cfg.mode == "radial" else f"{stem}_q{result.q}_s{result.s}.csv"


def _write_profiles(out: Path, cfg, results, phantom=None) -> dict:
    files = {"reconstruction": [], "truth": []}
    for res in results:
        name = _profile_name(res, cfg, "reconstruction")
        write_samples(out / name, res.profile, "r")
        files["reconstruction"].append(name)
        if phantom is not None:
            truth = truth_for(res, phantom)
            tname = _profile_name(res, cfg, "truth")
            r = res.profile.points
            write_samples(out / tname, SampledFn(res.profile.grid, np.asarray(truth(r), float)), "r")
            files["truth"].append(tname)
    return files


def _score_all(cfg, results, phantom) -> dict:
    if cfg.mode == "radial":
        return score(results[0], phantom, cfg)
    modes = [score(r, truth_for(r, phantom), cfg) for r in results]
    return {"modes": modes,
            "near_origin": {"degraded": any(m["near_origin"]["degraded"] for m in modes)}}


def cmd_invert(args) -> int:
    cfg = config_from_args(args)
    t0 = time.perf_counter()
    data = _read_data(args.data, cfg)
    results = invert(cfg, data)
    t1 = time.perf_counter()
    phantom = build_phantom(cfg)
    out = Path(cfg.out)
    report = base_report(cfg)
    report["data"] = {**data_summary(data), "file": str(args.data)}
    report["truth"] = {"phantom": cfg.phantom, "params": cfg.phantom_params}
    report.update(_score_all(cfg, results, phantom))
    report["files"] = _write_profiles(out, cfg, results)
    report["timing"] = {"invert_s": t1 - t0, "total_s": time.perf_counter() - t0}
    write_json(out / "report.json", report)
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def gnuplot_script(files: dict) -> str:
    lines = [
        "# gnuplot script written by smtinv; run with: gnuplot plot.gp",
        'set datafile separator ","',
        "set terminal pngcairo size 900,560",
        'set xlabel "r"',
        "set key top right",
    ]
    for rec, truth in zip(files["reconstruction"], files["truth"]):
        png = rec.replace("reconstruction", "roundtrip").replace(".csv", ".png")
        lines += [
            f'set output "{png}"',
            f'set title "{rec}"',
            f'plot "{truth}" using 1:2 skip 1 with lines lw 2 title "truth", \\',
            f'     "{rec}" using 1:2 skip 1 with points pt 7 ps 0.5 title "reconstruction"',
        ]
    return "\n".join(lines) + "\n"


def cmd_roundtrip(args) -> int:
    cfg = config_from_args(args)
    rt = roundtrip(cfg)
    out = Path(cfg.out)
    _write_data(out / "data.csv", rt.data)
    files = _write_profiles(out, cfg, rt.results, rt.phantom)
    atomic_write_text(out / "plot.gp", gnuplot_script(files))
    report = dict(rt.report)
    timing = report.pop("timing")
    report["files"] = {"data": "data.csv", **files, "plot": "plot.gp"}
    report["timing"] = timing
    write_json(out / "report.json", report)
    _print_summary(report)
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


def _print_summary(report: dict):
    entries = report.get("modes") or [report]
    for e in entries:
        tag = f"mode ({e['q']},{e['s']}) " if "q" in e else ""
        for m in e["metrics"]:
            rel = "n/a" if m["rel_l2"] is None else f"{m['rel_l2']:.3e}"
            print(f"{tag}r in [{m['interval'][0]:g}, {m['interval'][1]:g}]: rel L2 {rel}, "
                  f"max abs {m['max_abs']:.3e}")
    if report.get("near_origin", {}).get("degraded"):
        print("note: accuracy near the origin is degraded")


def cmd_identities(args) -> int:
    if args.max_k < 0 or args.max_q < 0:
        raise UsageError("--max-k and --max-q must be >= 0")
    exact_k = args.exact_max_k if args.exact_max_k is not None else max(8, args.max_k)
    t0 = time.perf_counter()
    exact = exact_suite(exact_k, args.max_q)
    t1 = time.perf_counter()
    numeric = numeric_suite(args.max_k, args.max_q)
    t2 = time.perf_counter()
    report = {
        "tool": {"name": "smtinv", "version": __version__},
        "bounds": {"max_k": args.max_k, "max_q": args.max_q, "exact_max_k": exact_k},
        "exact": summarize(exact),
        "numeric": summarize(numeric),
        "timing": {"exact_s": t1 - t0, "numeric_s": t2 - t1},
    }
    report["passed"] = report["exact"]["passed"] and report["numeric"]["passed"]
    _emit_json(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def cmd_coeffs(args) -> int:
    n, q = args.dim, args.q
    if n < 3 or n % 2 == 0:
        raise UsageError(f"--dim must be an odd integer >= 3, got {n}")
    if q < 0:
        raise UsageError("--q must be >= 0")
    k = (n - 3) // 2
    table = ode_coeffs(q + k)
    payload = table.to_dict(q, k)
    payload["n"] = n
    payload["laurent_radial" if q == 0 else "laurent_mode"] = [
        {"m": m, "terms": [{"pow_1mt": a, "pow_inv_t": b, "num": c.numerator, "den": c.denominator}
                           for (a, b), c in sorted(
                               table.laurent(m, _prefactor(q, k)).items())]}
        for m in range(table.K + 1)
    ]
    _emit_json(payload, args.out)
    return EXIT_OK


def _prefactor(q: int, k: int):
    return radial_prefactor(k) if q == 0 else mode_prefactor(q, k)


def _emit_json(obj, out):
    if out:
        write_json(out, obj)
    else:
        sys.stdout.write(dumps_json(obj))


COMMANDS = {
    "phantoms": cmd_phantoms,
    "simulate": cmd_simulate,
    "invert": cmd_invert,
    "roundtrip": cmd_roundtrip,
    "identities": cmd_identities,
    "coeffs": cmd_coeffs,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"smtinv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"smtinv: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InversionError, ValueError, ArithmeticError) as exc:
        print(f"smtinv: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
