"""Command-line front end: ``riesz energy|certify|optimize|classify|sweep|curve|gen``.

Exit codes: 0 success, 2 input error, 3 collision or kernel singularity,
4 theorem condition not met (``certify`` only). Data go to standard output
or files, warnings and errors to standard error.
"""

import argparse
import json
import logging
import math
import os
import struct
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .certifier import CertificateKind, certify_not_max, theorem_condition
from .energy import (
    Perturbation,
    RieszParams,
    averaged_second_variation,
    curve_energy,
    directional_derivative,
    energy,
    single_point_second_variation,
)
from .errors import KernelSingularityError, NoPositiveDirectionError, NotCriticalError
from .io import NAMED, ConfigFile, ConfigFileError, fmt_real, generate_named, read_config, write_csv
from .manifold import random_configuration, sample_equator
from .optimizer import OptimizerSettings, classify, minimize

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COLLISION = 3
EXIT_CONDITION = 4

log = logging.getLogger("riesz")


class InputError(ValueError):
    pass


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    return vals


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimals, got {text!r}") from None
    return vals


def _single(values, flag):
    if values is None:
        return None
    if len(values) != 1:
        raise InputError(f"{flag} takes a single value for this command")
    return values[0]


def _load(args, need_alpha=True):
    """Configuration and exponent from ``--input`` or ``--named``; the flag alpha wins."""
    alpha = _single(args.alpha, "--alpha")
    if getattr(args, "input", None):
        cf = read_config(args.input)
        config = cf.configuration()
        if alpha is None:
            alpha = cf.alpha
    elif getattr(args, "named", None):
        config = generate_named(args.named, _single(args.d, "--d"), _single(args.n, "--n"), args.seed)
    else:
        raise InputError("one of --input or --named is required")
    if need_alpha and alpha is None:
        raise InputError("alpha missing: give --alpha or put it in the configuration file")
    return config, (RieszParams(alpha) if alpha is not None else None)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_energy(args):
    config, params = _load(args)
    ev = energy(config, params)
    G = config.gram()
    off = G[~np.eye(config.n, dtype=bool)]
    lines = [
        f"n = {config.n}",
        f"d = {config.d}",
        f"alpha = {fmt_real(params.alpha)}",
        f"raw_energy = {fmt_real(ev.raw)}",
        f"scaled_energy = {fmt_real(ev.scaled)}",
        f"min_inner_product = {fmt_real(off.min())}",
        f"max_inner_product = {fmt_real(off.max())}",
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_certify(args):
    config, params = _load(args)
    cert = certify_not_max(config, params, np.random.default_rng(args.seed))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(cert.to_json())
    print(f"kind: {cert.kind.value}")
    print(f"alpha = {fmt_real(params.alpha)}, d = {config.d}, n = {config.n}")
    print(f"gradient norm: {cert.gradient_norm:.6e}")
    if cert.kind is CertificateKind.ASCENT_DIRECTION:
        print(f"point index: {cert.point_index}")
        print(f"f''(0) along direction: {cert.second_variation_value:.12g}")
        print(f"finite-difference check: {cert.fd_confirmation:.12g}")
        print(f"averaged terms (all positive): {len(cert.eq4_terms)}")
    elif cert.kind is CertificateKind.CONDITION_NOT_MET:
        print("alpha < d - 2: nothing is certified (exploratory regime)")
    if not args.out:
        sys.stdout.write(cert.to_json())
    return EXIT_CONDITION if cert.kind is CertificateKind.CONDITION_NOT_MET else EXIT_OK


def _settings(args):
    base = OptimizerSettings()
    return OptimizerSettings(
        max_iters=args.max_iters if args.max_iters is not None else base.max_iters,
        step_init=args.step_init if args.step_init is not None else base.step_init,
        grad_stop=args.grad_stop if args.grad_stop is not None else base.grad_stop,
        seed=args.seed if args.seed is not None else base.seed,
    )


def _spectrum_rows(values):
    return [(k, float(v)) for k, v in enumerate(values)]


def _sidecar(out, suffix):
    p = Path(out)
    stem = p.name[: -len(p.suffix)] if p.suffix else p.name
    return p.with_name(stem + suffix)


def cmd_optimize(args):
    config, params = _load(args)
    settings = _settings(args)
    res = minimize(config, params, settings)
    ev = energy(res.config, params)
    report = {
        "converged": res.converged,
        "step_collapsed": res.step_collapsed,
        "n_iter": res.n_iter,
        "n_polish": res.n_polish,
        "alpha": fmt_real(params.alpha),
        "energy_raw": fmt_real(ev.raw),
        "energy_scaled": fmt_real(ev.scaled),
        "gradient_norm": fmt_real(res.gradient_norm),
        "classification": None,
    }
    spectrum = None
    if res.converged:
        cp = classify(res.config, params, grad_stop=settings.grad_stop)
        report.update(cp.to_dict())
        report["gradient_norm"] = fmt_real(res.gradient_norm)
        spectrum = cp.hessian_eigenvalues
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        meta = {"converged": str(res.converged).lower(), "source": "riesz optimize"}
        ConfigFile.from_config(res.config, params.alpha, meta).write(args.out)
        with open(_sidecar(args.out, ".report.json"), "w") as fh:
            fh.write(text)
        if spectrum is not None:
            write_csv(_sidecar(args.out, ".spectrum.csv"), ["index", "eigenvalue"],
                      _spectrum_rows(spectrum),
                      [f"classification={report['classification']}",
                       f"zero_tol={report['zero_tol']}"])
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_classify(args):
    config, params = _load(args)
    grad_stop = args.grad_stop if args.grad_stop is not None else OptimizerSettings().grad_stop
    try:
        cp = classify(config, params, grad_stop=grad_stop)
    except NotCriticalError as exc:
        raise InputError(str(exc)) from None
    text = json.dumps(cp.to_dict(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        write_csv(_sidecar(args.out, ".spectrum.csv"), ["index", "eigenvalue"],
                  _spectrum_rows(cp.hessian_eigenvalues),
                  [f"classification={cp.classification.value}"])
    else:
        sys.stdout.write(text)
    return EXIT_OK


SWEEP_HEADER = [
    "row_type", "d", "n", "alpha", "restart", "theorem_condition", "converged", "n_iter",
    "energy_raw", "energy_scaled", "gradient_norm", "num_positive", "num_zero", "num_negative",
    "classification", "certificate_kind", "fd_confirmation", "note",
]


def _alpha_key(alpha):
    return int.from_bytes(struct.pack("<d", float(alpha)), "little")


def sweep_seed(seed, d, n, alpha, restart):
    """Independent, order-free seed material for one sweep run."""
    return np.random.SeedSequence([int(seed), int(d), int(n), _alpha_key(alpha), int(restart)])


def run_sweep_cell(task):
    """One (d, n, alpha, restart) run: optimize, classify, certify.

    Returns the CSV row and the optimized configuration (``None`` on failure).
    Failures are recorded in the row rather than raised.
    """
    seed, d, n, alpha, restart = task
    params = RieszParams(alpha)
    cond = theorem_condition(alpha, d)
    row = dict.fromkeys(SWEEP_HEADER, "")
    row.update(row_type="run", d=d, n=n, alpha=fmt_real(alpha), restart=restart,
               theorem_condition=str(cond).lower())
    ss = sweep_seed(seed, d, n, alpha, restart)
    start_rng, cert_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    try:
        config0 = random_configuration(d, n, start_rng)
        res = minimize(config0, params)
        ev = energy(res.config, params)
        row.update(converged=str(res.converged).lower(), n_iter=res.n_iter,
                   energy_raw=fmt_real(ev.raw), energy_scaled=fmt_real(ev.scaled),
                   gradient_norm=fmt_real(res.gradient_norm))
        if res.converged:
            cp = classify(res.config, params)
            row.update(num_positive=cp.num_positive, num_zero=cp.num_zero,
                       num_negative=cp.num_negative, classification=cp.classification.value)
        cert = certify_not_max(res.config, params, cert_rng)
        row["certificate_kind"] = cert.kind.value
        if cert.fd_confirmation is not None:
            row["fd_confirmation"] = fmt_real(cert.fd_confirmation)
        return [row[k] for k in SWEEP_HEADER], res.config
    except (ValueError, NoPositiveDirectionError, np.linalg.LinAlgError) as exc:
        row["note"] = f"error: {type(exc).__name__}: {exc}"
        return [row[k] for k in SWEEP_HEADER], None


def sweep_tasks(ds, ns, alphas, restarts, seed):
    return [(seed, d, n, a, k) for d in ds for n in ns for a in alphas for k in range(restarts)]


def aggregate_row(rows):
    idx = {k: i for i, k in enumerate(SWEEP_HEADER)}
    qualifying = [r for r in rows if r[idx["theorem_condition"]] == "true"]
    critical = [r for r in qualifying if r[idx["classification"]]]
    maxima = [r for r in critical if r[idx["classification"]] == "Maximum"]
    failures = [r for r in rows if r[idx["note"]].startswith("error")]
    row = dict.fromkeys(SWEEP_HEADER, "")
    row.update(
        row_type="aggregate",
        classification=f"maximum_count={len(maxima)}",
        note=(f"runs={len(rows)};qualifying={len(qualifying)};critical={len(critical)};"
              f"maximum_above_threshold={len(maxima)};errors={len(failures)};"
              f"status={'PASS' if not maxima else 'FAIL'}"),
    )
    return [row[k] for k in SWEEP_HEADER], len(maxima)


def cmd_sweep(args):
    ds, ns, alphas = args.d, args.n, args.alpha
    for flag, vals in (("--d", ds), ("--n", ns), ("--alpha", alphas)):
        if not vals:
            raise InputError(f"{flag} must list at least one value")
    if any(d < 1 for d in ds) or any(n < 2 for n in ns) or any(not a > 0 for a in alphas):
        raise InputError("need d >= 1, n >= 2 and alpha > 0")
    if args.restarts < 1:
        raise InputError("--restarts must be at least 1")
    seed = args.seed if args.seed is not None else 0
    tasks = sweep_tasks(ds, ns, alphas, args.restarts, seed)
    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_sweep_cell, tasks, chunksize=4))
    else:
        results = [run_sweep_cell(t) for t in tasks]
    rows = [r for r, _ in results]
    agg, n_max = aggregate_row(rows)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_dir = out_dir / "configs"
    cfg_dir.mkdir(exist_ok=True)
    for (s, d, n, a, k), (_, config) in zip(tasks, results):
        if config is not None:
            ConfigFile.from_config(config, a, {"restart": k, "seed": s}).write(
                cfg_dir / f"d{d}_n{n}_alpha{fmt_real(a)}_r{k}.json")
    meta = [
        f"d={','.join(map(str, ds))}",
        f"n={','.join(map(str, ns))}",
        f"alpha={','.join(fmt_real(a) for a in alphas)}",
        f"restarts={args.restarts}",
        f"seed={seed}",
    ]
    write_csv(out_dir / "sweep.csv", SWEEP_HEADER, rows + [agg], meta)
    print(f"{len(rows)} runs written to {out_dir / 'sweep.csv'}; {agg[-1]}")
    if n_max:
        print("a Maximum was classified above the threshold; investigate", file=sys.stderr)
        return 1
    return EXIT_OK


def curve_grid(t_min, t_max, samples):
    """Evenly spaced parameters; a value within rounding of zero is set to 0."""
    ts = [t_min + (t_max - t_min) * k / (samples - 1) for k in range(samples)]
    span = abs(t_max - t_min)
    return [0.0 if abs(t) <= 1e-12 * span else t for t in ts]


def cmd_curve(args):
    config, params = _load(args)
    if args.samples < 3:
        raise InputError("--samples must be at least 3")
    if not args.t_max > args.t_min:
        raise InputError("--t-max must exceed --t-min")
    i = args.index
    if not 0 <= i < config.n:
        raise InputError(f"--index must lie in [0, {config.n - 1}]")
    h = sample_equator(config.points[i], np.random.default_rng(args.seed))
    pert = Perturbation.one_hot(config, i, h)
    fp = directional_derivative(config, params, pert)
    fpp = 2.0 * single_point_second_variation(config, params, i, h)
    terms = averaged_second_variation(config, params, i).eq4_terms
    rows, collisions = [], 0
    for t in curve_grid(args.t_min, args.t_max, args.samples):
        try:
            f = curve_energy(config, params, pert, t).scaled
        except KernelSingularityError:
            f = math.nan
            collisions += 1
        rows.append((float(t), float(f)))
    meta = [
        f"alpha={fmt_real(params.alpha)}",
        f"d={config.d}",
        f"n={config.n}",
        f"index={i}",
        f"direction={';'.join(fmt_real(v) for v in h.direction)}",
        f"f_prime_0={fmt_real(fp)}",
        f"f_second_0={fmt_real(fpp)}",
        f"eq4_terms={';'.join(fmt_real(v) for v in terms)}",
        f"collisions={collisions}",
    ]
    write_csv(args.out or sys.stdout, ["t", "f"], rows, meta)
    if collisions:
        log.warning("%d sample(s) hit a collision and were written as NaN", collisions)
    return EXIT_OK


def cmd_gen(args):
    if not args.named:
        raise InputError("--named is required")
    config = generate_named(args.named, _single(args.d, "--d"), _single(args.n, "--n"), args.seed)
    alpha = _single(args.alpha, "--alpha")
    meta = {"named": args.named}
    if args.seed is not None:
        meta["seed"] = args.seed
    _emit(ConfigFile.from_config(config, 1.0 if alpha is None else alpha, meta).to_json(), args.out)
    return EXIT_OK


COMMANDS = {
    "energy": cmd_energy,
    "certify": cmd_certify,
    "optimize": cmd_optimize,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "curve": cmd_curve,
    "gen": cmd_gen,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="riesz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", help="configuration JSON file")
        p.add_argument("--named", choices=NAMED, help="named configuration instead of --input")
        p.add_argument("--d", type=_int_list, help="sphere dimension (list for sweep)")
        p.add_argument("--n", type=_int_list, help="number of points (list for sweep)")
        p.add_argument("--alpha", type=_float_list, help="Riesz exponent (list for sweep)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (directory for sweep)")
        if name in ("optimize", "classify"):
            p.add_argument("--grad-stop", type=float)
        if name == "optimize":
            p.add_argument("--max-iters", type=int)
            p.add_argument("--step-init", type=float)
        if name == "sweep":
            p.add_argument("--restarts", type=int, default=1)
            p.add_argument("--jobs", type=int, help="worker processes (default: CPU count)")
        if name == "curve":
            p.add_argument("--index", type=int, default=0, help="zero-based point index")
            p.add_argument("--t-min", type=float, default=-0.5)
            p.add_argument("--t-max", type=float, default=0.5)
            p.add_argument("--samples", type=int, default=101)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except KernelSingularityError as exc:
        print(f"riesz: {exc}", file=sys.stderr)
        return EXIT_COLLISION
    except (InputError, ConfigFileError, OSError, ValueError) as exc:
        print(f"riesz: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
