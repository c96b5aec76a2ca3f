"""
Command-line entry point.

    binverse sample-prior --method level_set --grid-size 128 --seed 3
    binverse perimeter-study --alphas 1.5 2 3 --sizes 64 128 256 512 1024
    binverse pcn-run --config runs/a.cfg --steps 20000
    binverse gp-run --truth B
    binverse gamma-check
    binverse p-delta --delta 0.01 --q 0.1 --r 1
    binverse score --recon runs/x/thresholded_mean.csv --truth runs/x/truth.csv

Every subcommand writes under $BINVERSE_OUT (or --output) and prints a JSON
summary on stdout. Errors are printed as JSON documents on stderr with a
non-zero exit status.
"""
import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from energy import Disc, gamma_check, interface_scaling_study, p_delta
from exceptions import BinverseError
from experiment_config import (
    GAMMA_EPS_LADDER,
    GAMMA_GRID_SIZE,
    GAMMA_PARAMS,
    INTERFACE_ALPHAS,
    INTERFACE_GRID_SIZES,
    LOG_LEVEL_ENV,
    METHODS,
    NOISE_REGIMES,
    PROFILE_HALF_WIDTH,
    PROFILE_NODES,
)
from experiments import classification_score, load_config, run_experiment
from field_io import output_root, read_field_csv, write_field, write_json, write_report_csv, write_rows_csv
from logging_config import configure_logging, log_operation, logger
from observation import TruthField
from posteriors import preset_params, resolve_scalings
from spectral_prior import FieldKind, GridField, PriorParams, sample_prior

EXIT_OK = 0
EXIT_ERROR = 1


def _subcommand_dir(args: argparse.Namespace, name: str) -> Path:
    return output_root(args.output) / name


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, default=str))


@log_operation("sample-prior")
def sample_prior_command(args: argparse.Namespace) -> Dict[str, Any]:
    params = preset_params(args.method, args.noise_regime, delta=args.delta, q=args.q,
                           tau=args.tau, alpha=args.alpha)
    field = sample_prior(params, args.grid_size, args.seed)
    directory = _subcommand_dir(args, "sample-prior")
    name = f"prior_{args.method}_n{args.grid_size}_seed{args.seed}"

    files = write_field(field, directory, name)
    files += write_field(field.sign(), directory, f"{name}_sign")
    write_json(directory / f"{name}_params.json", {"params": params.to_dict(), "seed": args.seed})
    return {"files": [str(path) for path in files], "params": params.to_dict()}


@log_operation("perimeter-study")
def perimeter_study_command(args: argparse.Namespace) -> Dict[str, Any]:
    study = interface_scaling_study(args.alphas, args.sizes, args.seed)
    directory = _subcommand_dir(args, "perimeter-study")

    rows = [{"alpha": alpha, "N": size, "length": length} for alpha, size, length in study.rows()]
    write_rows_csv(rows, directory / f"interface_lengths_seed{args.seed}.csv", ["alpha", "N", "length"])

    summary = {
        "seed": args.seed,
        "sizes": list(study.sizes),
        "slopes": {str(alpha): study.loglog_slope(alpha) for alpha in study.lengths},
        "differences": {str(alpha): study.successive_differences(alpha).tolist() for alpha in study.lengths},
    }
    write_json(directory / f"interface_summary_seed{args.seed}.json", summary)
    return summary


def _experiment_overrides(args: argparse.Namespace, method: str) -> Dict[str, Any]:
    keys = ("noise_regime", "truth", "truth_file", "grid_size", "truth_size", "steps", "burn_in",
            "beta", "thin", "seed", "data_seed", "layout", "observations", "window", "delta", "q",
            "tau", "r", "alpha", "chains", "workers", "prior_samples", "checkpoint_every")
    overrides: Dict[str, Any] = {key: getattr(args, key, None) for key in keys}
    overrides["method"] = method
    overrides["output_dir"] = args.output
    for flag in ("perimeter", "paper_scale", "progress"):
        if getattr(args, flag, False):
            overrides[flag] = True
    return overrides


@log_operation("pcn-run")
def pcn_run_command(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_config(args.config, _experiment_overrides(args, args.method))
    run_dir = run_experiment(config)
    with open(run_dir / "manifest.json") as handle:
        manifest = json.load(handle)
    return {"run_dir": str(run_dir), "classification_score": manifest["classification_score"]}


@log_operation("gp-run")
def gp_run_command(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_config(args.config, _experiment_overrides(args, "gp"))
    run_dir = run_experiment(config)
    with open(run_dir / "manifest.json") as handle:
        manifest = json.load(handle)
    return {"run_dir": str(run_dir), "classification_score": manifest["classification_score"]}


def _gamma_params(args: argparse.Namespace) -> PriorParams:
    a1, a2, a3, b = resolve_scalings(args.c, args.a)
    return PriorParams(delta=args.delta, tau=args.tau, q=args.q, r=args.r, c=args.c,
                       a1=a1, a2=a2, a3=a3, b=b, eps=max(args.eps))


@log_operation("gamma-check")
def gamma_check_command(args: argparse.Namespace) -> Dict[str, Any]:
    params = _gamma_params(args)
    profile = p_delta(params, args.half_width, args.intervals)
    report = gamma_check(Disc(radius=args.radius), args.eps, params, args.grid_size, profile)

    directory = _subcommand_dir(args, "gamma-check")
    flat = {"target": report.target, "p_delta": report.p_delta, "limit_estimate": report.limit_estimate}
    for eps, value, gap in zip(report.eps_list, report.i_eps_values, report.gaps):
        flat[f"i_eps[{eps}]"] = value
        flat[f"gap[{eps}]"] = gap
    write_report_csv(flat, directory / "gamma_check.csv")
    write_json(directory / "gamma_check.json", report.to_dict())
    return report.to_dict()


@log_operation("p-delta")
def p_delta_command(args: argparse.Namespace) -> Dict[str, Any]:
    params = PriorParams(delta=args.delta, tau=1.0, q=args.q, r=args.r)
    result = p_delta(params, args.half_width, args.intervals)

    directory = _subcommand_dir(args, "p-delta")
    summary = result.to_dict()
    write_report_csv({key: value for key, value in summary.items() if key != "start_energies"},
                     directory / "p_delta.csv")
    write_json(directory / "p_delta.json", summary)
    write_rows_csv(
        [{"t": float(t), "U": float(u)} for t, u in zip(result.profile.nodes, result.profile.values)],
        directory / "profile.csv",
        ["t", "U"],
    )
    return summary


@log_operation("score")
def score_command(args: argparse.Namespace) -> Dict[str, Any]:
    recon = read_field_csv(Path(args.recon))
    truth = read_field_csv(Path(args.truth))
    if truth.size > recon.size:
        reference = TruthField(GridField(truth.values, FieldKind.BINARY), "reference")
        score = classification_score(recon, reference)
    else:
        score = classification_score(recon, truth)
    return {"classification_score": score}


def _add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Flat key = value configuration file")
    parser.add_argument("--noise-regime", dest="noise_regime", choices=sorted(NOISE_REGIMES))
    parser.add_argument("--truth", choices=["A", "B", "C", "file"])
    parser.add_argument("--truth-file", dest="truth_file")
    parser.add_argument("--grid-size", dest="grid_size", type=int)
    parser.add_argument("--truth-size", dest="truth_size", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--burn-in", dest="burn_in", type=int)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--thin", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--data-seed", dest="data_seed", type=int)
    parser.add_argument("--layout", choices=["uniform", "random"])
    parser.add_argument("--observations", type=int)
    parser.add_argument("--window", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--q", type=float)
    parser.add_argument("--tau", type=float)
    parser.add_argument("--r", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--chains", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--prior-samples", dest="prior_samples", type=int)
    parser.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    parser.add_argument("--perimeter", action="store_true", help="Prior/posterior perimeter histograms")
    parser.add_argument("--paper-scale", dest="paper_scale", action="store_true",
                        help="Full-length runs (M = 1e6) instead of desk scale")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binverse", description="Bayesian inversion of binary fields")
    parser.add_argument("--output", help="Output root (default: $BINVERSE_OUT or ./runs)")
    parser.add_argument("--log-level", dest="log_level",
                        default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    prior = sub.add_parser("sample-prior", help="Draw one prior field")
    prior.add_argument("--method", choices=METHODS, default="level_set")
    prior.add_argument("--noise-regime", dest="noise_regime", choices=sorted(NOISE_REGIMES), default="small")
    prior.add_argument("--grid-size", dest="grid_size", type=int, default=128)
    prior.add_argument("--seed", type=int, default=0)
    prior.add_argument("--delta", type=float)
    prior.add_argument("--q", type=float)
    prior.add_argument("--tau", type=float)
    prior.add_argument("--alpha", type=float)
    prior.set_defaults(handler=sample_prior_command)

    study = sub.add_parser("perimeter-study", help="Level set length against grid size")
    study.add_argument("--alphas", type=float, nargs="+", default=list(INTERFACE_ALPHAS))
    study.add_argument("--sizes", type=int, nargs="+", default=list(INTERFACE_GRID_SIZES))
    study.add_argument("--seed", type=int, default=0)
    study.set_defaults(handler=perimeter_study_command)

    pcn = sub.add_parser("pcn-run", help="Phase-field or level set inversion by pCN")
    pcn.add_argument("--method", choices=["phase_field", "level_set"], default="level_set")
    _add_experiment_arguments(pcn)
    pcn.set_defaults(handler=pcn_run_command)

    gp = sub.add_parser("gp-run", help="Closed-form GP regression inversion")
    _add_experiment_arguments(gp)
    gp.set_defaults(handler=gp_run_command)

    gamma = sub.add_parser("gamma-check", help="I^eps on the recovery sequence of a disc")
    gamma.add_argument("--eps", type=float, nargs="+", default=list(GAMMA_EPS_LADDER))
    gamma.add_argument("--grid-size", dest="grid_size", type=int, default=GAMMA_GRID_SIZE)
    gamma.add_argument("--radius", type=float, default=0.25)
    for key in ("delta", "q", "tau", "r", "c", "a"):
        gamma.add_argument(f"--{key}", type=float, default=GAMMA_PARAMS[key])
    gamma.add_argument("--half-width", dest="half_width", type=float, default=PROFILE_HALF_WIDTH)
    gamma.add_argument("--intervals", type=int, default=PROFILE_NODES)
    gamma.set_defaults(handler=gamma_check_command)

    profile = sub.add_parser("p-delta", help="Minimal transition profile energy")
    for key in ("delta", "q", "r"):
        profile.add_argument(f"--{key}", type=float, default=GAMMA_PARAMS[key])
    profile.add_argument("--half-width", dest="half_width", type=float, default=PROFILE_HALF_WIDTH)
    profile.add_argument("--intervals", type=int, default=PROFILE_NODES)
    profile.set_defaults(handler=p_delta_command)

    score = sub.add_parser("score", help="Pixel agreement of a binary reconstruction")
    score.add_argument("--recon", required=True, help="Field CSV of the reconstruction")
    score.add_argument("--truth", required=True, help="Field CSV of the truth (same or finer grid)")
    score.set_defaults(handler=score_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        _emit(args.handler(args))
        return EXIT_OK
    except BinverseError as e:
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}", exception=e)
        print(json.dumps({"error": str(e), "error_code": "INTERNAL_ERROR"}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
