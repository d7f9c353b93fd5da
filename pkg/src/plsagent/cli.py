"""Command-line entry point: ``plsagent {fit,simulate,experiment,summarize,synth-survey}``.

Exit codes: 0 success, 1 usage, 2 I/O, 3 parse, 4 non-convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import secrets
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from . import __version__, experiments, probmap
from .abm import ConfigError, SimConfig, run
from .bootstrap import BootstrapError, bootstrap_bca
from .plspm import ModelSpecError, SingularMatrixError, fit, load_model, validate
from .probmap import EffectConstants
from .survey import SurveyError, SurveySpec, frequency_summary, load_responses, save_responses

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PARSE, EXIT_NONCONVERGED = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class NonConvergence(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- manifest -----------------------------------------------------------------


def config_digest(doc) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.sha256(canon.encode()).hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.isoformat(timespec="seconds")


class Manifest:
    def __init__(self, command: str, digest_doc, seed):
        self.doc = {
            "command": command,
            "config_digest": config_digest(digest_doc),
            "seed": seed,
            "version": __version__,
            "started": _timestamp(),
            "outputs": [],
        }

    def write(self, out: Path):
        self.doc["finished"] = _timestamp()
        _write_json(out / "manifest.json", self.doc)


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, frame: pd.DataFrame, index=False):
    frame.to_csv(path, index=index, float_format="%.10g", lineterminator="\n")


# -- shared option handling -----------------------------------------------------


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be a 64-bit unsigned integer")
    return args.seed


def _read_mapping(path) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping of config keys")
    return doc


def _constants_from_estimate(path) -> EffectConstants:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    te = doc.get("total_effects", {})

    def get(a, b):
        try:
            return float(te[a][b])
        except KeyError:
            raise ConfigError(f"estimate lacks total effect {a} -> {b}") from None

    c = EffectConstants.derived(
        self_esteem=get("Humanization", "SelfEsteem"),
        self_realization=get("Humanization", "SelfRealization"),
        cooperation=get("Humanization", "Cooperation"),
        humanization_pbl=get("Humanization", "PBL"),
        pbl_learning=get("PBL", "Learning"),
    )
    return replace(c, humanization_learning=get("Humanization", "Learning"))


def _sim_config(args) -> SimConfig:
    doc = _read_mapping(getattr(args, "config", None))
    cfg = SimConfig.from_mapping(doc)
    if args.seed is None and "seed" in doc:
        args.seed = cfg.seed
    if getattr(args, "estimate", None):
        cfg = replace(cfg, constants=_constants_from_estimate(args.estimate))
    if args.mode:
        cfg = replace(cfg, constants=replace(cfg.constants, mode=args.mode))
    return replace(cfg, seed=_seed(args))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands -------------------------------------------------------------------


def cmd_fit(args) -> int:
    model = load_model(args.model_spec)
    spec = SurveySpec(model.blocks)
    data = load_responses(args.survey_csv, spec)
    est = fit(data, model, tol=args.tol, max_iter=args.max_iter)
    doc = est.to_dict()
    doc["validation"] = validate(est, data).to_dict()
    if args.bootstrap:
        seed = _seed(args)
        doc["bootstrap"] = bootstrap_bca(
            data, model, n_boot=args.bootstrap, alpha=args.alpha, seed=seed,
            tol=args.tol, max_iter=args.max_iter, workers=args.threads,
        ).to_dict()
    out = _out_dir(args)
    _write_json(out / "estimate.json", doc)
    manifest = Manifest(
        "fit",
        {"model": model.to_mapping(), "tol": args.tol, "max_iter": args.max_iter,
         "bootstrap": args.bootstrap, "alpha": args.alpha,
         "data": hashlib.sha256(Path(args.survey_csv).read_bytes()).hexdigest()},
        args.seed,
    )
    manifest.doc["outputs"].append("estimate.json")
    manifest.write(out)
    print(out / "estimate.json")
    if not est.converged and not args.allow_nonconverged:
        raise NonConvergence(
            f"outer weights did not converge in {est.iterations} iterations "
            f"(last change {est.max_weight_change:.3g})"
        )
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    out = _out_dir(args)
    manifest = Manifest(
        "simulate", {"config": cfg.to_dict(), "runs": args.runs, "snapshot_every": args.snapshot_every}, cfg.seed
    )
    if args.runs > 1:
        rates, lcs = experiments.run_many(cfg, args.runs, cfg.seed, workers=args.threads)
        stats = experiments.ReplicationStats.from_rates({}, rates, lcs)
        _write_csv(
            out / "runs.csv",
            pd.DataFrame({"run": np.arange(args.runs), "link_chance": lcs, "diffusion_rate": rates}),
        )
        doc = {
            "config": cfg.to_dict(),
            "runs": args.runs,
            "mean": stats.mean,
            "sd": stats.sd,
            "cv": stats.cv,
        }
        manifest.doc["outputs"].append("runs.csv")
    else:
        result = run(cfg, snapshot_every=args.snapshot_every)
        doc = {"config": cfg.to_dict(), **result.to_dict()}
    _write_json(out / "result.json", doc)
    manifest.doc["outputs"].append("result.json")
    manifest.write(out)
    print(out / "result.json")
    return EXIT_OK


def _parse_values(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            lo, hi, step = map(float, text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + k * step, 12) for k in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse sweep values {text!r}") from None


def cmd_experiment(args) -> int:
    cfg = _sim_config(args)
    out = _out_dir(args)
    base_seed = cfg.seed
    params = {"config": cfg.to_dict(), "kind": args.kind, "runs": args.runs}
    written = []
    if args.kind == "factorial":
        table = experiments.run_factorial(n_runs=args.runs, base_seed=base_seed, base=cfg, workers=args.threads)
        _write_csv(out / "factorial.csv", table)
        summary = table.groupby(["point", *experiments.FACTORS], sort=True)["diffusion_rate"].agg(
            n="size", mean="mean", sd=lambda s: s.std(ddof=1)
        ).reset_index()
        summary["cv"] = summary["sd"] / summary["mean"].where(summary["mean"] > 0)
        _write_csv(out / "factorial_summary.csv", summary)
        written += ["factorial.csv", "factorial_summary.csv"]
    elif args.kind == "stabilization":
        counts = tuple(int(c) for c in args.run_counts.split(","))
        stab = experiments.stabilization_analysis(run_counts=counts, base_seed=base_seed, base=cfg, workers=args.threads)
        _write_csv(out / "stabilization.csv", stab)
        _write_csv(out / "stabilization_wide.csv", experiments.stabilization_table(stab))
        written += ["stabilization.csv", "stabilization_wide.csv"]
        params["run_counts"] = counts
    elif args.kind == "eta":
        if args.from_csv:
            table = pd.read_csv(args.from_csv)
            params["from"] = hashlib.sha256(Path(args.from_csv).read_bytes()).hexdigest()
        else:
            table = experiments.run_factorial(n_runs=args.runs, base_seed=base_seed, base=cfg, workers=args.threads)
            _write_csv(out / "factorial.csv", table)
            written.append("factorial.csv")
        eta = experiments.eta_squared(table)
        _write_csv(out / "eta_squared.csv", pd.DataFrame({"factor": list(eta), "eta_squared": list(eta.values())}))
        written.append("eta_squared.csv")
    elif args.kind == "sweep":
        values = _parse_values(args.values) if args.values else None
        if args.parameter == "link_chance":
            values = values or _parse_values("0.3:0.7:0.05")
        else:
            values = values or list(experiments.LEVELS)
        table = experiments.sweep(
            args.parameter, values, n_runs=args.runs, base_seed=base_seed, base=cfg, workers=args.threads
        )
        _write_csv(out / "sweep.csv", table)
        _write_csv(out / "sweep_summary.csv", experiments.sweep_summary(table))
        written += ["sweep.csv", "sweep_summary.csv"]
        params.update(parameter=args.parameter, values=values)
        if args.parameter == "link_chance":
            bins = experiments.link_chance_bins(n_runs=args.runs, base_seed=base_seed, base=cfg, workers=args.threads)
            _write_csv(out / "link_chance_bins.csv", bins)
            written.append("link_chance_bins.csv")
    else:  # argparse restricts choices; kept for direct callers
        raise UsageError(f"unknown experiment {args.kind!r}")
    manifest = Manifest("experiment " + args.kind, params, base_seed)
    manifest.doc["outputs"] = written
    manifest.write(out)
    for name in written:
        print(out / name)
    return EXIT_OK


def cmd_summarize(args) -> int:
    spec = SurveySpec(load_model(args.model_spec).blocks) if args.model_spec else _paper_spec()
    data = load_responses(args.survey_csv, spec)
    table = frequency_summary(data).to_frame()
    if args.out:
        out = _out_dir(args)
        _write_csv(out / "frequency.csv", table, index=True)
        print(out / "frequency.csv")
    else:
        table.to_csv(sys.stdout, lineterminator="\n")
    return EXIT_OK


def _paper_spec():
    from .survey import paper_survey_spec

    return paper_survey_spec()


def cmd_synth_survey(args) -> int:
    from .synthetic import survey_responses

    data = survey_responses(n=args.n, seed=_seed(args))
    save_responses(data, args.output)
    print(args.output)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="plsagent", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"plsagent {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, runs_default=None):
        sp.add_argument("--seed", type=int, default=None, help="64-bit seed; generated and printed if absent")
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        sp.add_argument("--threads", type=int, default=1, help="worker processes for independent runs")
        if runs_default is not None:
            sp.add_argument("--runs", type=int, default=runs_default)

    f = sub.add_parser("fit", help="estimate a PLS path model from a survey CSV")
    f.add_argument("survey_csv")
    f.add_argument("model_spec")
    f.add_argument("--tol", type=float, default=1e-4)
    f.add_argument("--max-iter", type=int, default=300)
    f.add_argument("--bootstrap", type=int, default=0, metavar="N", help="BCa bootstrap resamples (0 = skip)")
    f.add_argument("--alpha", type=float, default=0.05)
    f.add_argument("--allow-nonconverged", action="store_true")
    common(f)
    f.set_defaults(func=cmd_fit)

    mode_help = "probability constants: printed table values or derived from coefficients"
    s = sub.add_parser("simulate", help="run the classroom simulation")
    s.add_argument("config", nargs="?", help="YAML/JSON file with SimConfig keys")
    s.add_argument("--snapshot-every", type=int, default=0, metavar="K")
    s.add_argument("--mode", choices=[probmap.PAPER_CONSTANTS_MODE, probmap.DERIVED_MODE], help=mode_help)
    s.add_argument("--estimate", help="estimate.json whose total effects drive derived mode")
    common(s, runs_default=1)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="factorial, stabilization, eta-squared and sweep reports")
    e.add_argument("kind", choices=["factorial", "stabilization", "eta", "sweep"])
    e.add_argument("config", nargs="?", help="base SimConfig file")
    e.add_argument("--mode", choices=[probmap.PAPER_CONSTANTS_MODE, probmap.DERIVED_MODE], help=mode_help)
    e.add_argument("--estimate", help="estimate.json whose total effects drive derived mode")
    e.add_argument("--run-counts", default="1,50,100,300,500", help="stabilization run counts")
    e.add_argument("--from", dest="from_csv", help="eta: reuse a factorial.csv instead of simulating")
    e.add_argument("--parameter", choices=["link_chance", "humanization", "pbl"], default="link_chance")
    e.add_argument("--values", help="sweep grid, lo:hi:step or comma list")
    common(e, runs_default=300)
    e.set_defaults(func=cmd_experiment)

    m = sub.add_parser("summarize", help="Likert frequency table of a survey CSV")
    m.add_argument("survey_csv")
    m.add_argument("--model-spec", help="take item blocks from a model spec instead of the default survey")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)

    g = sub.add_parser("synth-survey", help="write a synthetic 25-item survey CSV")
    g.add_argument("output")
    g.add_argument("--n", type=int, default=162)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_synth_survey)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SurveyError, ModelSpecError, ConfigError, json.JSONDecodeError, yaml.YAMLError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NonConvergence, BootstrapError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except SingularMatrixError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
