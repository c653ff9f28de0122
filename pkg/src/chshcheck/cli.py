"""Command-line interface.

    chshcheck analyze counts.csv [--sidecar exact.json | --eta eta.txt]
    chshcheck simulate run.cfg -o counts.csv [--sidecar exact.json]
    chshcheck optimize run.cfg
    chshcheck bias-study run.cfg
    chshcheck bound --delta delta.txt | --eta eta.txt

Every command takes ``--format json|text``.  Exit status is 0 on success,
1 on invalid input and 2 when a file cannot be read or written.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .chsh import CLASSICAL_BOUND, DEFAULT_VERDICT_SIGMAS, EtaTable, bell_signal, correlators_from_state, eta_table
from .crosstalk import DELTA_LABELS, DeltaTable, asymmetry_index, crosstalk_parameters
from .formats import (
    RunConfig,
    format_density,
    load_config,
    pair_key,
    parse_counts_file,
    parse_pair_key,
    read_delta_file,
    read_eta_file,
    write_counts,
)
from .linalg import TOL_STRUCT
from .optimizer import OptimizationResult, bias_study, optimize
from .report import analyze, dumps, report_emit
from .simulation import RNG_NAME, run_experiment
from .states import SETTING_PAIRS, SIDE_A, SIDE_B, SettingsQuad

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
SIDECAR_SCHEMA = "chshcheck.sidecar/1"


def settings_to_dict(settings: SettingsQuad) -> dict:
    return {lab: {"theta": settings[lab].theta, "phi": settings[lab].phi} for lab in SIDE_A + SIDE_B}


def model_to_dict(model) -> dict:
    return {
        "kind": model.kind.value,
        "params": dict(sorted(model.params.items())),
        "per_setting": {pair_key(p): dict(sorted(v.items())) for p, v in sorted(model.per_setting.items())},
    }


def config_provenance(cfg: RunConfig) -> dict:
    prov = {
        "state": cfg.state_label,
        "model": model_to_dict(cfg.model),
        "settings": settings_to_dict(cfg.settings),
        "seed": cfg.seed,
        "rng": RNG_NAME,
    }
    if cfg.state_label == "explicit":
        prov["rho"] = format_density(cfg.rho)
    return prov


def sidecar_dict(cfg: RunConfig, result) -> dict:
    exact = correlators_from_state(cfg.rho, cfg.settings, cfg.model)
    ideal = correlators_from_state(cfg.rho, cfg.settings)
    etas = eta_table({p: (result.ideal_states[p], result.true_states[p]) for p in SETTING_PAIRS})
    deltas = crosstalk_parameters(exact)
    per_setting = {
        pair_key(p): {"E": exact[p].E, "mA": exact[p].mA, "mB": exact[p].mB, "eta": etas[p]} for p in SETTING_PAIRS
    }
    return {
        "schema": SIDECAR_SCHEMA,
        "provenance": {**config_provenance(cfg), "shots": cfg.shots},
        "exact": per_setting,
        "S_true": bell_signal(exact),
        "S_ideal": bell_signal(ideal),
        "delta": {**deltas.as_dict(), "total": deltas.total},
        "eta_total": etas.total,
    }


def etas_from_sidecar(path) -> EtaTable:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("schema") != SIDECAR_SCHEMA:
        raise ValueError(f"{path}: not a simulation sidecar")
    return EtaTable({parse_pair_key(k): v["eta"] for k, v in data["exact"].items()})


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- commands -----------------------------------------------------------------


def cmd_analyze(args) -> str:
    record = parse_counts_file(args.counts)
    etas = None
    provenance = {"input": str(args.counts), "sha256": _file_digest(args.counts)}
    if args.sidecar:
        etas = etas_from_sidecar(args.sidecar)
        provenance["eta_source"] = str(args.sidecar)
    elif args.eta:
        etas = EtaTable(read_eta_file(args.eta))
        provenance["eta_source"] = str(args.eta)
    report = analyze(record, etas=etas, provenance=provenance, noise_sigmas=args.sigmas)
    return report_emit(report, args.format)


def cmd_simulate(args) -> str:
    cfg = load_config(args.config, args.tolerance)
    result = run_experiment(cfg.rho, cfg.settings, cfg.model, cfg.shots, cfg.seed)
    comments = [
        f"simulated by chshcheck {__version__}",
        f"state={cfg.state_label} model={cfg.model.kind.value} shots={cfg.shots} seed={cfg.seed}",
        f"rng: {RNG_NAME}",
    ]
    out = Path(args.output)
    sidecar = Path(args.sidecar) if args.sidecar else out.with_suffix(".exact.json")
    out.write_text(write_counts(result.counts, comments), encoding="utf-8")
    side = sidecar_dict(cfg, result)
    sidecar.write_text(dumps(side), encoding="utf-8")
    if args.format == "json":
        return dumps({"counts": str(out), "sidecar": str(sidecar), "S_true": side["S_true"], "eta_total": side["eta_total"]})
    return (
        f"wrote {out} and {sidecar}\n"
        f"exact S = {side['S_true']:.6f}, sum(eta) = {side['eta_total']:.6f}, delta = {side['delta']['total']:.6f}\n"
    )


def optimization_dict(result: OptimizationResult) -> dict:
    return {
        "settings": settings_to_dict(result.settings),
        "S_best": result.S_best,
        "evaluations": result.evaluations,
        "restarts": len(result.restarts),
        "converged_restarts": sum(r.converged for r in result.restarts),
        "budget_exhausted": result.budget_exhausted,
    }


def _settings_text(settings: SettingsQuad) -> list[str]:
    return [f"  {lab:<8} theta = {settings[lab].theta:.6f}  phi = {settings[lab].phi:.6f}" for lab in SIDE_A + SIDE_B]


def cmd_optimize(args) -> str:
    cfg = load_config(args.config, args.tolerance)
    result = optimize(cfg.rho, cfg.model, cfg.optimizer)
    if args.format == "json":
        return dumps({"schema": "chshcheck.optimize/1", **optimization_dict(result), "provenance": config_provenance(cfg)})
    lines = [f"best S = {result.S_best:.10f} after {result.evaluations} evaluations"]
    lines += _settings_text(result.settings)
    if result.budget_exhausted:
        lines.append("warning: some restarts used their full evaluation budget without converging")
    return "\n".join(lines) + "\n"


def cmd_bias_study(args) -> str:
    cfg = load_config(args.config, args.tolerance)
    rep = bias_study(cfg.rho, cfg.model, cfg.optimizer, cfg.rough_factor)
    data = {
        "schema": "chshcheck.bias_study/1",
        "optimization": optimization_dict(rep.optimization),
        "S_optimized": rep.S_optimized,
        "delta": {**rep.deltas.as_dict(), "total": rep.delta_total},
        "eta": {**{pair_key(p): rep.etas[p] for p in SETTING_PAIRS}, "total": rep.eta_total},
        "delta_over_eta_bound": rep.ratios,
        "delta_total_over_eta_total": rep.delta_total / rep.eta_total if rep.eta_total > 0 else None,
        "asymmetry_index": rep.asymmetry,
        "rough_factor": rep.rough_factor,
        "rough_estimate_holds": rep.rough_estimate_holds,
        "provenance": config_provenance(cfg),
    }
    if args.format == "json":
        return dumps(data)
    lines = [f"optimized S = {rep.S_optimized:.6f}"]
    lines += _settings_text(rep.settings)
    lines.append("delta: " + ", ".join(f"{lab} = {rep.deltas[lab]:.6f}" for lab in DELTA_LABELS) + f"  (total {rep.delta_total:.6f})")
    lines.append(f"sum(eta) = {rep.eta_total:.6f}, asymmetry index = {rep.asymmetry:.3f}")
    if rep.rough_estimate_holds:
        lines.append(f"delta total agrees with sum(eta) within a factor {rep.rough_factor:g}")
    else:
        lines.append(f"delta total does NOT estimate sum(eta) within a factor {rep.rough_factor:g}: the rough estimate fails")
    return "\n".join(lines) + "\n"


def cmd_bound(args) -> str:
    if args.delta:
        values = read_delta_file(args.delta)
        deltas = DeltaTable(*(values[lab] for lab in DELTA_LABELS))
        data = {
            "kind": "rough",
            "delta": {**deltas.as_dict(), "total": deltas.total},
            "bound": CLASSICAL_BOUND + deltas.total,
            "asymmetry_index": asymmetry_index(deltas),
        }
        text = f"rough bound 2 + delta = {data['bound']:.6f} (heuristic, delta total {deltas.total:.6f})\n"
    else:
        etas = EtaTable(read_eta_file(args.eta))
        data = {
            "kind": "corrected",
            "eta": {**{pair_key(p): etas[p] for p in SETTING_PAIRS}, "total": etas.total},
            "bound": CLASSICAL_BOUND + etas.total,
        }
        text = f"corrected classical bound 2 + sum(eta) = {data['bound']:.6f}\n"
    return dumps(data) if args.format == "json" else text


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument(
        "--tolerance",
        type=float,
        default=TOL_STRUCT,
        help="validation tolerance for explicit density matrices in configs (default %(default)g)",
    )

    parser = argparse.ArgumentParser(prog="chshcheck", description="CHSH Bell-test error and crosstalk analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="analyze a counts file")
    p.add_argument("counts")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--sidecar", help="simulation sidecar carrying exact eta values")
    group.add_argument("--eta", help="key = value eta table")
    p.add_argument("--sigmas", type=float, default=DEFAULT_VERDICT_SIGMAS, help="significance threshold (default %(default)g)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="simulate counts from a config")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--sidecar")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", parents=[common], help="maximize the measured Bell signal over the angles")
    p.add_argument("config")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bias-study", parents=[common], help="optimize, then compare delta with eta at the optimum")
    p.add_argument("config")
    p.set_defaults(func=cmd_bias_study)

    p = sub.add_parser("bound", parents=[common], help="classical bound from a delta or eta table")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta")
    group.add_argument("--eta")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        output = args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
