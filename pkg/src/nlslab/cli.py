"""Command-line laboratory: groundstate | evolve | classify | sweep | check.

Every command takes a single config path.  Artifacts are written
atomically, embed the config hash, and are bit-reproducible for identical
configs (fixed quadrature reduction order, named seed).

Exit codes: 0 success, 2 invalid config, 3 resource problem,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .checkpoint import (
    atomic_write_text,
    ground_state_basename,
    load_ground_state,
    save_ground_state,
    write_field,
)
from .checks import run_invariant_suite
from .config import (
    ConfigError,
    DEFAULT_CONFIG_TEMPLATE,
    ExperimentConfig,
    build_grid,
    build_initial_field,
    config_hash,
    load_config,
)
from .equation import (
    RegimeNotCoveredError,
    classify_criticality,
    negativity_margin,
    threshold_test,
)
from .evolve import evolve
from .grid import Grid, GridError, InvalidFieldError
from .groundstate import GroundStateError, make_bubble, solve_ground_state
from .observables import virial_identity_check, virial_rhs_forms

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_NUMERICAL = 4

CSV_BASE_COLUMNS = [
    "t",
    "mass",
    "energy",
    "kinetic",
    "potential_term",
    "nonlinear_term",
    "virial",
    "morawetz_abs",
    "l4_density",
    "linfty",
]


def _fmt(v) -> str:
    return repr(float(v))


def csv_header(r_list):
    cols = CSV_BASE_COLUMNS[:7]
    cols += [f"virial_phiR_{R:g}" for R in r_list]
    cols += CSV_BASE_COLUMNS[7:]
    return ",".join(cols)


def records_to_csv(records, r_list, cfg_hash):
    lines = [f"# config_hash={cfg_hash}", csv_header(r_list)]
    for rec in records:
        row = [
            _fmt(rec.t),
            _fmt(rec.mass),
            _fmt(rec.energy),
            _fmt(rec.kinetic),
            _fmt(rec.potential_term),
            _fmt(rec.nonlinear_term),
            _fmt(rec.virial),
        ]
        row += [_fmt(rec.virial_phi_r[float(R)]) for R in r_list]
        row += [
            _fmt(rec.morawetz_abs),
            _fmt(rec.l4_density),
            _fmt(rec.linfty),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _groundstate_dir(cfg: ExperimentConfig):
    return cfg.groundstate.directory or os.path.join(
        cfg.output.directory, "groundstates"
    )


def _solve_artifact_groundstate(cfg: ExperimentConfig):
    """Load the (d, alpha) ground-state artifact, solving and saving if absent."""
    d, alpha = cfg.equation.d, cfg.equation.alpha
    gdir = _groundstate_dir(cfg)
    base = os.path.join(gdir, ground_state_basename(d, alpha))
    if os.path.exists(base + "_norms.json"):
        return load_ground_state(base)
    gc = cfg.groundstate
    if d == 1:
        grid = Grid(1, "cartesian", n=gc.n, L=gc.L)
    else:
        grid = Grid(d, "radial", n_r=gc.n_r, r_max=gc.r_max)
    gs = solve_ground_state(d, alpha, grid, tol=gc.tol, max_iter=gc.max_iter)
    save_ground_state(gdir, gs, config_hash=config_hash(cfg))
    return gs


def _threshold_for_field(cfg, u0, ground_state=None):
    """Static threshold verdict for u0, or None when the regime is uncovered."""
    from .observables import record

    spec = cfg.equation
    info = classify_criticality(spec)
    rec = record(u0, spec, epsilon_reg=cfg.epsilon_reg)
    if (
        info.regime in ("mass-subcritical", "energy-supercritical")
        or spec.c < 0
    ):
        return None, None, rec
    if info.regime == "energy-critical":
        grid = Grid(3, "radial", n_r=cfg.groundstate.n_r, r_max=128.0)
        reference = make_bubble(grid)
    else:
        reference = ground_state or _solve_artifact_groundstate(cfg)
    try:
        verdict = threshold_test(
            spec,
            mass=rec.mass,
            energy=rec.energy,
            gradnorm=float(np.sqrt(rec.kinetic)),
            ground_state=reference,
        )
    except RegimeNotCoveredError:
        return None, reference, rec
    return verdict, reference, rec


def _verdict_dict(verdict):
    if verdict is None:
        return {"verdict": "not-applicable"}
    return dataclasses.asdict(verdict)


def _identity_checks(outcome, cfg):
    """Cheap per-run identity checks serialized into the summary."""
    checks = []
    recs = outcome.records
    m0 = recs[0].mass
    if m0 > 0:
        drift = max(abs(r.mass / m0 - 1.0) for r in recs)
        checks.append(
            {
                "name": "mass-conservation",
                "rel_error": drift,
                "tol": cfg.observables.tolerance,
                "passed": drift <= cfg.observables.tolerance,
            }
        )
    forms_err = 0.0
    for r in recs:
        f1, f2, f3 = virial_rhs_forms(r, cfg.equation)
        scale = max(abs(f1), abs(f2), abs(f3), 1e-30)
        forms_err = max(forms_err, abs(f1 - f2) / scale, abs(f1 - f3) / scale)
    checks.append(
        {
            "name": "virial-rhs-forms-agree",
            "rel_error": forms_err,
            "tol": 1e-10,
            "passed": forms_err <= 1e-10,
        }
    )
    if len(recs) >= 3 and outcome.status == "completed":
        try:
            c = virial_identity_check(recs, cfg.equation)
            checks.append(
                {
                    "name": c.name,
                    "rel_error": c.rel_error,
                    "tol": c.tol,
                    "passed": c.passed,
                }
            )
        except ValueError:
            pass
    return checks


def _write_summary(path, payload):
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _run_experiment(cfg: ExperimentConfig, run_dir):
    """Shared evolve pipeline: returns (outcome, summary dict)."""
    started = time.perf_counter()
    os.makedirs(run_dir, exist_ok=True)
    chash = config_hash(cfg)
    grid = build_grid(cfg)
    ground_state = None
    if cfg.initial.kind == "groundstate-scaled":
        ground_state = solve_ground_state(
            cfg.equation.d, cfg.equation.alpha, grid, tol=cfg.groundstate.tol
        )
    u0 = build_initial_field(cfg, grid, ground_state)
    verdict, reference, rec0 = None, None, None
    try:
        verdict, reference, rec0 = _threshold_for_field(cfg, u0, None)
    except (RegimeNotCoveredError, GroundStateError):
        pass
    glassey_delta = None
    if (
        verdict is not None
        and verdict.verdict == "blowup-branch"
        and rec0 is not None
        and rec0.energy >= 0
    ):
        glassey_delta = negativity_margin(
            cfg.equation, rec0.mass, rec0.energy, reference
        )

    checkpoint_index = [0]

    def checkpoint_cb(f):
        base = os.path.join(run_dir, f"checkpoint_{checkpoint_index[0]:06d}")
        write_field(base, f, config_hash=chash)
        checkpoint_index[0] += 1

    cb = checkpoint_cb if cfg.evolve.checkpoint_stride > 0 else None
    outcome = evolve(u0, cfg.equation, cfg.evolve, checkpoint_cb=cb,
                     glassey_delta=glassey_delta)

    if "csv" in cfg.output.formats:
        atomic_write_text(
            os.path.join(run_dir, "series.csv"),
            records_to_csv(outcome.records, cfg.observables.r_list, chash),
        )
    if outcome.final_field is not None:
        write_field(os.path.join(run_dir, "final_state"), outcome.final_field,
                    config_hash=chash)
    summary = {
        "code_version": __version__,
        "config_hash": chash,
        "seed": cfg.output.seed,
        "status": outcome.status,
        "t_reached": outcome.t_reached,
        "tstar_estimate": outcome.tstar_estimate,
        "glassey_bound": outcome.glassey_bound,
        "max_boundary_mass_fraction": outcome.max_boundary_mass_fraction,
        "warnings": outcome.warnings,
        "n_records": len(outcome.records),
        "threshold": _verdict_dict(verdict),
        "identity_checks": _identity_checks(outcome, cfg),
        "wall_time_s": time.perf_counter() - started,
    }
    if "json" in cfg.output.formats:
        _write_summary(os.path.join(run_dir, "summary.json"), summary)
    return outcome, summary


def cmd_groundstate(cfg: ExperimentConfig) -> int:
    gs = _solve_artifact_groundstate(cfg)
    base = os.path.join(_groundstate_dir(cfg), ground_state_basename(gs.d, gs.alpha))
    e1, e2 = gs.pohozaev_errors()
    print(
        f"ground state d={gs.d} alpha={gs.alpha:g}: mass={gs.mass:.9g} "
        f"kinetic={gs.kinetic:.9g} C_GN={gs.gn_constant:.9g} "
        f"residual={gs.residual:.2e} pohozaev=({e1:.2e}, {e2:.2e})"
    )
    print(f"artifact: {base}_norms.json")
    return EXIT_OK


def cmd_evolve(cfg: ExperimentConfig) -> int:
    outcome, summary = _run_experiment(cfg, cfg.output.directory)
    print(
        f"status={outcome.status} t_reached={outcome.t_reached:.6g} "
        f"records={len(outcome.records)}"
    )
    if outcome.tstar_estimate is not None:
        bound = outcome.glassey_bound
        print(
            f"Tstar_estimate={outcome.tstar_estimate:.6g}"
            + (f" glassey_bound={bound:.6g}" if bound is not None else "")
        )
    for w in outcome.warnings:
        print(f"warning: {w}")
    if outcome.status == "invalid":
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_classify(cfg: ExperimentConfig) -> int:
    grid = build_grid(cfg)
    ground_state = None
    if cfg.initial.kind == "groundstate-scaled":
        ground_state = solve_ground_state(
            cfg.equation.d, cfg.equation.alpha, grid, tol=cfg.groundstate.tol
        )
    u0 = build_initial_field(cfg, grid, ground_state)
    verdict, _, rec0 = _threshold_for_field(cfg, u0, None)
    os.makedirs(cfg.output.directory, exist_ok=True)
    payload = {
        "code_version": __version__,
        "config_hash": config_hash(cfg),
        "regime": classify_criticality(cfg.equation).regime,
        "mass": rec0.mass,
        "energy": rec0.energy,
        "gradnorm": float(np.sqrt(rec0.kinetic)),
        "threshold": _verdict_dict(verdict),
    }
    _write_summary(os.path.join(cfg.output.directory, "classify.json"), payload)
    print(f"regime={payload['regime']} verdict={payload['threshold']['verdict']}")
    return EXIT_OK


def _sweep_override(cfg: ExperimentConfig, parameter, value) -> ExperimentConfig:
    section, key = parameter.split(".", 1)
    if section == "equation":
        eq = dataclasses.replace(cfg.equation, **{key: value})
        return dataclasses.replace(cfg, equation=eq)
    sub = getattr(cfg, section)
    cast = type(getattr(sub, key))
    sub = dataclasses.replace(sub, **{key: cast(value)})
    return dataclasses.replace(cfg, **{section: sub})


def _sweep_entry(args):
    cfg, parameter, value, run_dir = args
    sub_cfg = _sweep_override(cfg, parameter, value)
    sub_cfg = dataclasses.replace(
        sub_cfg, output=dataclasses.replace(sub_cfg.output, directory=run_dir)
    )
    outcome, summary = _run_experiment(sub_cfg, run_dir)
    return value, summary


def cmd_sweep(cfg: ExperimentConfig) -> int:
    sw = cfg.sweep
    if not sw.parameter or not sw.values:
        raise ConfigError("[sweep] needs parameter and values")
    try:
        _sweep_override(cfg, sw.parameter, sw.values[0])
    except (AttributeError, TypeError, ValueError) as exc:
        raise ConfigError(f"[sweep] parameter {sw.parameter!r}: {exc}") from exc
    os.makedirs(cfg.output.directory, exist_ok=True)
    jobs = [
        (cfg, sw.parameter, v, os.path.join(cfg.output.directory, f"run_{i:03d}"))
        for i, v in enumerate(sw.values)
    ]
    if sw.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=sw.workers) as pool:
            results = list(pool.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(j) for j in jobs]

    chash = config_hash(cfg)
    lines = [
        f"# config_hash={chash}",
        f"{sw.parameter},status,t_reached,tstar_estimate,glassey_bound,verdict",
    ]
    for value, summary in results:
        tstar = summary["tstar_estimate"]
        bound = summary["glassey_bound"]
        lines.append(
            ",".join(
                [
                    _fmt(value),
                    summary["status"],
                    _fmt(summary["t_reached"]),
                    "" if tstar is None else _fmt(tstar),
                    "" if bound is None else _fmt(bound),
                    summary["threshold"]["verdict"],
                ]
            )
        )
    atomic_write_text(
        os.path.join(cfg.output.directory, "sweep_table.csv"), "\n".join(lines) + "\n"
    )
    _write_summary(
        os.path.join(cfg.output.directory, "sweep_summary.json"),
        {
            "code_version": __version__,
            "config_hash": chash,
            "parameter": sw.parameter,
            "values": list(sw.values),
            "statuses": [s["status"] for _, s in results],
        },
    )
    for value, summary in results:
        print(f"{sw.parameter}={value:g}: {summary['status']}")
    return EXIT_OK


def _hash_consistency(cfg: ExperimentConfig) -> tuple[bool, str]:
    """Every artifact under the run directory must embed this config's hash."""
    want = config_hash(cfg)
    directory = cfg.output.directory
    if not os.path.isdir(directory):
        return True, "no run directory yet"
    seen = 0
    for root, _dirs, files in os.walk(directory):
        for name in files:
            path = os.path.join(root, name)
            found = None
            if name.endswith(".json"):
                with open(path, "r", encoding="utf-8") as fh:
                    found = json.load(fh).get("config_hash")
            elif name.endswith(".csv"):
                with open(path, "r", encoding="utf-8") as fh:
                    first = fh.readline().strip()
                if first.startswith("# config_hash="):
                    found = first.split("=", 1)[1]
            if found is not None:
                seen += 1
                if found != want:
                    return False, f"{path} embeds a different config hash"
    return True, f"{seen} artifacts consistent"


def cmd_check(cfg: ExperimentConfig) -> int:
    ok = run_invariant_suite(seed=cfg.output.seed)
    hash_ok, detail = _hash_consistency(cfg)
    print(f"{'PASS' if hash_ok else 'FAIL'} hash-consistency: {detail}")
    return EXIT_OK if (ok and hash_ok) else EXIT_NUMERICAL


COMMANDS = {
    "groundstate": cmd_groundstate,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="numerical laboratory for NLS with an inverse-power potential",
    )
    parser.add_argument("command", choices=sorted(COMMANDS) + ["template"])
    parser.add_argument("config", nargs="?", help="path to the experiment config")
    args = parser.parse_args(argv)
    if args.command == "template":
        print(DEFAULT_CONFIG_TEMPLATE, end="")
        return EXIT_OK
    if not args.config:
        print("error: config path required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config-invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config-invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GroundStateError, InvalidFieldError, GridError) as exc:
        print(f"numerical-failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"resource: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
