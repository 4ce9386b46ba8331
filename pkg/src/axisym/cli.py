"""
Batch command line: ingest, mean removal, variograms, fits, likelihoods, kriging.

Every subcommand reads and writes the file formats of the library modules,
so each output equals the corresponding library call on the same inputs.
Exit status: 0 success, 1 usage error, 2 data or numerical error.
Diagnostics go to stderr; results go to files or stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import (
    ExpChordalModel, HarmonicCovariance, effective_rank, load_model, model_from_blocks,
    model_to_dict, save_model, zero_y00,
)
from .fitting import (
    OptimizerConfig, WlsProblem, gamma_grid, harmonic_cov_matrix, loglik_dense, loglik_exp,
    loglik_lowrank, loglik_white_noise, mle_exp_nugget, mle_harmonic, mle_white_noise,
    wls_criterion, wls_fit_linear, wls_fit_psd, write_gamma_grid,
)
from .geom import DataError, read_observations, write_observations
from .kriging import GridSpec, krige_residuals, level25_product, write_product
from .mean import bin_average, fit_mean, load_mean_model, residuals, save_mean_model
from .simulate import simulate_observations, synthetic_orbits
from .variogram import PairConfig, cross_orbit_variogram, read_variogram, write_variogram

log = logging.getLogger("axisym")

MAX_N = 40


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_range(lo, hi=None):
    def conv(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            raise argparse.ArgumentTypeError(f"{v} outside [{lo}, {hi if hi is not None else 'inf'}]")
        return v
    return conv


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return v


def _ids(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated orbit ids: {text!r}") from None


def _need(*paths):
    """Validate inputs before any computation."""
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise DataError(f"{p}: no such file")


def _writable(*paths):
    for p in paths:
        if p is not None and not Path(p).resolve().parent.is_dir():
            raise DataError(f"{p}: output directory does not exist")


def _optimizer(args):
    return OptimizerConfig(max_iter=args.max_iter, gtol=args.gtol, ftol=args.ftol)


def _add_optimizer(p, max_iter=2000):
    p.add_argument("--max-iter", type=_int_range(1), default=max_iter, help="iteration budget")
    p.add_argument("--gtol", type=_positive, default=1e-6, help="projected gradient tolerance")
    p.add_argument("--ftol", type=_positive, default=1e-10, help="relative criterion change tolerance")


def _pair_config(args):
    return PairConfig(max_lat_offset=args.max_lat_offset, max_lon_offset=args.max_lon_offset)


def _fmt(v):
    return repr(float(v))


# --- reports -----------------------------------------------------------------


def fit_report(result, criterion_name) -> str:
    """Tab-separated report: summary lines, trace, frozen mask, parameters."""
    lines = [f"{criterion_name}\t{_fmt(result.value)}",
             f"converged\t{str(result.converged).lower()}",
             f"message\t{result.message}",
             f"n_iter\t{result.n_iter}",
             f"n_free\t{result.n_free}"]
    for k, v in result.extra.items():
        lines.append(f"{k}\t{_fmt(v)}")
    model = result.model
    if isinstance(model, HarmonicCovariance):
        per_m, real_rank = effective_rank(model)
        lines.append("effective_rank_per_m\t" + " ".join(map(str, per_m)))
        lines.append(f"effective_real_rank\t{real_rank}")
    lines.append("frozen\t" + (" ".join(f"A{m}[{i},{j}]" for m, i, j, _ in result.frozen) or "none"))
    lines.append("trace\t" + " ".join(_fmt(t) for t in result.trace))
    lines.append("")
    lines.extend(_parameter_table(model))
    return "\n".join(lines) + "\n"


def _parameter_table(model):
    doc = model_to_dict(model)
    if doc["kind"] == "exp_chordal":
        return ["parameter\tvalue"] + [f"{k}\t{_fmt(doc[k])}" for k in ("theta1", "theta2", "nugget")]
    out = ["m\trow\tcol\tre\tim"]
    out += [f"{m}\t{i}\t{j}\t{_fmt(re)}\t{_fmt(im)}" for m, i, j, re, im in doc["A"]]
    out.append(f"nugget\t\t\t{_fmt(doc['nugget'])}\t")
    return out


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- subcommands --------------------------------------------------------------


def cmd_ingest(args):
    _need(args.input)
    _writable(args.out)
    obs = read_observations(args.input)
    write_observations(args.out, obs, raw=args.raw)
    log.info("%d observations in %d orbits", len(obs), len(obs.orbits()))


def cmd_mean_fit(args):
    _need(args.obs)
    _writable(args.out)
    obs = read_observations(args.obs)
    model, report = fit_mean(bin_average(obs), obs, args.max_degree, args.max_order)
    save_mean_model(args.out, model, report)
    print(f"r2_bins\t{_fmt(report.r2_bins)}")
    print(f"r2_obs\t{_fmt(report.r2_obs)}")
    print(f"n_bins\t{report.n_bins}")


def cmd_residuals(args):
    _need(args.obs, args.mean)
    _writable(args.out)
    write_observations(args.out, residuals(read_observations(args.obs), load_mean_model(args.mean)))


def cmd_variogram(args):
    _need(args.obs, args.plot_model)
    _writable(args.out, args.plot)
    obs = read_observations(args.obs)
    cfg = _pair_config(args)
    recs = cross_orbit_variogram(obs, args.lag_orbits, cfg)
    write_variogram(args.out, recs)
    log.info("%d records from %d pairs", len(recs), sum(r.count for r in recs))
    if args.plot:
        from .plotting import plot_cross_orbit, plot_variogram_contours
        if args.lag_orbits == 0 and not args.cross_plot:
            model = load_model(args.plot_model) if args.plot_model else None
            plot_variogram_contours(args.plot, recs, model)
        else:
            lags = sorted({0, args.lag_orbits, -abs(args.lag_orbits) or -1, abs(args.lag_orbits) or 1})
            curves = {t: recs if t == args.lag_orbits else cross_orbit_variogram(obs, t, cfg)
                      for t in lags}
            plot_cross_orbit(args.plot, curves)


def cmd_wls_fit(args):
    _need(args.variogram, args.init)
    _writable(args.out, args.report, args.emit_gamma_grid, args.plot)
    recs = read_variogram(args.variogram)
    if not recs:
        raise DataError(f"{args.variogram}: no records")
    problem = WlsProblem.build(recs, args.n, freeze_y00=not args.no_mask)
    if args.linear:
        lin = wls_fit_linear(problem)
        model = model_from_blocks(args.n, lin.blocks.C, lin.blocks.nugget)
        lines = [f"linear_criterion\t{_fmt(lin.criterion)}",
                 f"projected_criterion\t{_fmt(wls_criterion(model, problem))}",
                 f"rank\t{lin.rank}",
                 f"n_params\t{lin.n_params}",
                 f"degenerate\t{str(lin.degenerate).lower()}",
                 f"condition\t{_fmt(lin.condition)}",
                 "min_eigenvalues\t" + " ".join(_fmt(v) for v in lin.min_eigenvalues),
                 "frozen\t" + ("A0 column 0 (C0 row/column 0)" if problem.freeze_y00 else "none"),
                 ""] + _parameter_table(model)
        text = "\n".join(lines) + "\n"
    else:
        init = load_model(args.init) if args.init else None
        result = wls_fit_psd(problem, init, _optimizer(args))
        model = result.model
        text = fit_report(result, "wls_criterion")
    save_model(args.out, model)
    _emit(text, args.report)
    if args.emit_gamma_grid or args.plot:
        bands = sorted({r.L0 for r in recs})
        if args.emit_gamma_grid:
            j0, j1 = min(r.j for r in recs), max(r.j for r in recs) + 1
            k0, k1 = min(r.k for r in recs), max(r.k for r in recs) + 1
            write_gamma_grid(args.emit_gamma_grid, gamma_grid(model, bands, (j0, j1), (k0, k1)))
        if args.plot:
            from .plotting import plot_variogram_contours
            plot_variogram_contours(args.plot, recs, model)


def model_loglik(model, obs, zero_y00_flag=False):
    """Log-likelihood of residuals under a stored model (the ``loglik`` value)."""
    if isinstance(model, ExpChordalModel):
        return loglik_exp(model, obs)
    if zero_y00_flag:
        model = zero_y00(model)
    if model.nugget > 0:
        return loglik_lowrank(model, obs)
    return loglik_dense(harmonic_cov_matrix(model, obs), obs.value)


def cmd_loglik(args):
    _need(args.model, args.obs)
    model = load_model(args.model)
    obs = read_observations(args.obs)
    print(_fmt(model_loglik(model, obs, args.zero_y00)))


def cmd_mle(args):
    _need(args.obs, args.init)
    _writable(args.out, args.report)
    obs = read_observations(args.obs)
    if args.kind == "white":
        v = mle_white_noise(obs)
        if args.out:
            save_model(args.out, ExpChordalModel(0.0, 1.0, v))
        _emit(f"loglik\t{_fmt(loglik_white_noise(obs))}\nnugget\t{_fmt(v)}\n", args.report)
        return
    init = load_model(args.init) if args.init else None
    if args.kind == "exp":
        if init is not None and not isinstance(init, ExpChordalModel):
            raise DataError(f"{args.init}: not an exponential model")
        result = mle_exp_nugget(obs, init, _optimizer(args))
    else:
        if init is not None and not isinstance(init, HarmonicCovariance):
            raise DataError(f"{args.init}: not a harmonic model")
        if init is not None and args.freeze_y00:
            init = zero_y00(init)
        result = mle_harmonic(obs, args.n, init, args.freeze_y00, config=_optimizer(args))
    if args.out:
        save_model(args.out, result.model)
    _emit(fit_report(result, "loglik"), args.report)


def _read_targets(path):
    with Path(path).open() as fh:
        header = fh.readline().replace(",", "\t").split()
        if header != ["lat_deg", "lon_deg"]:
            raise DataError(f"{path}: line 1: header must be lat_deg,lon_deg")
        lat, lon = [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.replace(",", "\t").split()
            try:
                a, b = (float(x) for x in parts)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: expected two numbers") from None
            if not abs(a) <= 90 or not np.isfinite(b):
                raise DataError(f"{path}: line {lineno}: invalid coordinates")
            lat.append(a)
            lon.append(b)
    return np.array(lat), np.array(lon)


def cmd_krige(args):
    _need(args.model, args.obs, args.targets)
    _writable(args.out)
    model = load_model(args.model)
    obs = read_observations(args.obs)
    lat, lon = _read_targets(args.targets)
    res = krige_residuals(model, obs, (lat, lon), dense=args.dense)
    with Path(args.out).open("w") as fh:
        fh.write("lat_deg\tlon_deg\tprediction\tvar_log\n")
        for row in zip(lat, lon, res.prediction, res.variance):
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def cmd_level25(args):
    _need(args.model, args.mean, args.obs)
    _writable(args.out, args.plot)
    if args.lat_window[0] >= args.lat_window[1]:
        raise UsageError("--lat-window needs LO < HI")
    model = load_model(args.model)
    mean_model = load_mean_model(args.mean)
    obs = read_observations(args.obs)
    grid = GridSpec(args.lat_min, args.lat_max, args.lat_step, args.lon_step, args.lon_origin)
    prods = level25_product(obs.orbits(), model, mean_model, grid, tuple(args.lat_window),
                            include=args.include, exclude=args.exclude or (),
                            threads=args.threads)
    write_product(args.out, prods)
    if args.plot:
        from .plotting import plot_level25
        plot_level25(args.plot, prods)


def cmd_simulate(args):
    _need(args.model, args.template, args.mean)
    _writable(args.out)
    model = load_model(args.model)
    if not isinstance(model, HarmonicCovariance):
        raise DataError(f"{args.model}: simulation needs a harmonic model")
    if args.template:
        template = read_observations(args.template)
    else:
        template = synthetic_orbits(args.orbits, args.scans, first_orbit=args.first_orbit,
                                    start_lon=args.start_lon)
    offset = 0.0
    if args.mean:
        offset = load_mean_model(args.mean).evaluate(template.lat, template.lon)
    if args.baseline_du is not None:
        offset = offset + np.log(args.baseline_du)
    sim = simulate_observations(model, template, args.seed, offset)
    write_observations(args.out, sim, raw=args.raw)


def cmd_verify(args):
    from .verify import run_all
    checks = run_all(args.seed)
    print("check\tvalue\ttolerance\tresult")
    for c in checks:
        print(f"{c.name}\t{c.value:.3e}\t{c.tol:.0e}\t{'pass' if c.passed else 'FAIL'}")
    if not all(c.passed for c in checks):
        return 2
    return 0


# --- parser --------------------------------------------------------------------


def build_parser():
    p = Parser(prog="axisym", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p.add_argument("--threads", type=_int_range(1, 256), default=1, help="worker cap")
    # also accepted after the subcommand name
    common = Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    common.add_argument("--threads", type=_int_range(1, 256), default=argparse.SUPPRESS,
                        help="worker cap")
    sub = p.add_subparsers(dest="command", required=True, metavar="command",
                           parser_class=lambda **kw: Parser(parents=[common], **kw))

    s = sub.add_parser("ingest", help="validate an observation file and rewrite it")
    s.add_argument("--in", dest="input", required=True, help="raw (ozone_du) or log (value) file")
    s.add_argument("--out", required=True)
    s.add_argument("--raw", action="store_true", help="write Dobson units instead of logs")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("mean-fit", help="fit the harmonic mean surface to bin averages")
    s.add_argument("--obs", required=True)
    s.add_argument("--out", required=True, help="mean model (JSON)")
    s.add_argument("--max-degree", type=_int_range(0, 60), default=12)
    s.add_argument("--max-order", type=_int_range(0, 60), default=3)
    s.set_defaults(func=cmd_mean_fit)

    s = sub.add_parser("residuals", help="subtract a mean model")
    s.add_argument("--obs", required=True)
    s.add_argument("--mean", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_residuals)

    s = sub.add_parser("variogram", help="binned empirical variogram")
    s.add_argument("--obs", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--lag-orbits", type=int, default=0, help="second point t orbits later")
    s.add_argument("--max-lat-offset", type=_positive, default=9.0)
    s.add_argument("--max-lon-offset", type=_positive, default=20.0)
    s.add_argument("--plot", help="figure file: contours, or lon-lag curves with --cross-plot")
    s.add_argument("--cross-plot", action="store_true", help="plot lag -1/0/+1 curves")
    s.add_argument("--plot-model", help="model to overlay on the contours")
    s.set_defaults(func=cmd_variogram)

    s = sub.add_parser("wls-fit", help="weighted least squares fit to a variogram")
    s.add_argument("--n", type=_int_range(0, MAX_N), required=True, help="truncation level")
    s.add_argument("--variogram", required=True)
    s.add_argument("--out", required=True, help="model file (JSON)")
    s.add_argument("--linear", action="store_true", help="closed-form fit over unconstrained blocks")
    s.add_argument("--no-mask", action="store_true", help="also fit the Y00 entries")
    s.add_argument("--init", help="starting model")
    s.add_argument("--report", help="report file (default stdout)")
    s.add_argument("--emit-gamma-grid", metavar="PATH", help="model semivariance at bin centers")
    s.add_argument("--plot", help="contour figure of empirical and fitted variograms")
    _add_optimizer(s)
    s.set_defaults(func=cmd_wls_fit)

    s = sub.add_parser("loglik", help="log-likelihood of residuals under a model")
    s.add_argument("--model", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--zero-y00", action="store_true", help="set the first column of A0 to zero")
    s.set_defaults(func=cmd_loglik)

    s = sub.add_parser("mle", help="maximum likelihood fit")
    s.add_argument("--kind", choices=("white", "exp", "harmonic"), required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--n", type=_int_range(0, MAX_N), default=7, help="truncation (harmonic)")
    s.add_argument("--init", help="starting model")
    s.add_argument("--freeze-y00", action="store_true",
                   help="hold the first column of A0 at zero (harmonic)")
    s.add_argument("--out", help="fitted model file")
    s.add_argument("--report", help="report file (default stdout)")
    _add_optimizer(s, max_iter=1000)
    s.set_defaults(func=cmd_mle)

    s = sub.add_parser("krige", help="simple kriging of residuals at target points")
    s.add_argument("--model", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--targets", required=True, help="file with lat_deg, lon_deg columns")
    s.add_argument("--out", required=True)
    s.add_argument("--dense", action="store_true", help="direct solve instead of low rank")
    s.set_defaults(func=cmd_krige)

    s = sub.add_parser("level25", help="per-orbit gridded product")
    s.add_argument("--model", required=True)
    s.add_argument("--mean", required=True)
    s.add_argument("--obs", required=True, help="observations (log scale or Dobson units)")
    s.add_argument("--out", required=True)
    s.add_argument("--include", type=_ids, help="orbit ids to use")
    s.add_argument("--exclude", type=_ids, help="orbit ids to skip")
    s.add_argument("--lat-window", type=float, nargs=2, default=(-65.0, -55.0), metavar=("LO", "HI"))
    s.add_argument("--lat-min", type=float, default=-62.5)
    s.add_argument("--lat-max", type=float, default=-57.5)
    s.add_argument("--lat-step", type=_positive, default=1.0)
    s.add_argument("--lon-step", type=_positive, default=5.0)
    s.add_argument("--lon-origin", type=float, default=0.0)
    s.add_argument("--plot", help="figure of predicted medians")
    s.set_defaults(func=cmd_level25)

    s = sub.add_parser("simulate", help="simulate observations from a harmonic model")
    s.add_argument("--model", required=True)
    s.add_argument("--seed", type=_int_range(0), required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--template", help="observation file supplying the geometry")
    s.add_argument("--orbits", type=_int_range(1, 1000), default=2, help="synthetic orbits")
    s.add_argument("--scans", type=_int_range(2), default=120, help="scans per synthetic orbit")
    s.add_argument("--first-orbit", type=_int_range(0), default=0)
    s.add_argument("--start-lon", type=float, default=0.0)
    s.add_argument("--mean", help="mean model added to the field")
    s.add_argument("--baseline-du", type=_positive, help="add log(baseline) to the field")
    s.add_argument("--raw", action="store_true", help="write Dobson units")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="run the oracle cross-checks")
    s.add_argument("--seed", type=_int_range(0), default=0)
    s.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        rc = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"axisym: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ValueError, KeyError, np.linalg.LinAlgError, OSError) as exc:
        print(f"axisym {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return int(rc or 0)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
