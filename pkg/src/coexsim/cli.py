"""Command-line front end.

Exit codes: 0 success, 2 unreadable input (bad arguments or files),
3 model error (for example truncation, infeasible targets or empty data).
The default seed comes from ``COEXSIM_SEED`` when set, else from the
scenario file.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import report
from .bsm import TruncationError
from .engine import experiments
from .engine.analytic import run_analytic
from .engine.scenario import ResultRecord, Scenario, ScenarioError, SweepSpec, with_parameter
from .qstate import TOMOGRAPHY_LABELS, PureState, StateError, analyzer, average_fidelity
from .scenario_file import ScenarioFileError, bundled_path, dumps, load, scenario_hash
from .sources import rng_stream
from .tomography import TomographyError, bootstrap_uncertainty, fidelity_statistic, mle_reconstruct

EXIT_OK, EXIT_PARSE, EXIT_MODEL = 0, 2, 3
TARGETS_HEADER = "# coexsim-targets v1"
FIDELITY_HEADER = "# coexsim-fidelity v1"


class ParseError(ValueError):
    """Input that could not be read; maps to exit code 2."""


def _default_seed() -> int | None:
    text = os.environ.get("COEXSIM_SEED")
    if text is None or not text.strip():
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"COEXSIM_SEED must be an integer, got {text!r}") from None


def _scenario(path: str) -> Scenario:
    return load(bundled_path() if path == "bundled" else path)


def _seeded(s: Scenario, seed: int | None) -> Scenario:
    seed = _default_seed() if seed is None else seed
    return s if seed is None else replace(s, run=replace(s.run, seed=int(seed)))


def _run(s: Scenario, backend: str, slots: int | None) -> ResultRecord:
    if backend == "analytic":
        rec = run_analytic(s, fringes=False)
        rec.seed = s.run.seed
        return rec
    from .engine.montecarlo import run_monte_carlo

    return run_monte_carlo(s, slots or s.run.n_slots, s.run.seed)


def _fmt(x: float, sd: float | None = None) -> str:
    if sd is None or math.isnan(sd):
        return f"{x:.6g}"
    return f"{x:.4f} +- {sd:.4f}"


def summary_table(rec: ResultRecord, title: str = "") -> str:
    lines = [title] if title else []
    lines.append(f"backend {rec.backend}  seed {rec.seed}")
    for d, v in rec.singles.items():
        lines.append(f"  singles {d:<4s} {v:14.6g} cps   (noise {rec.noise_rates.get(d, 0.0):.6g} cps)")
    lines.append(f"  fourfold max  {rec.max_fourfold:14.6g} cps")
    for k, (v, sd) in rec.visibilities.items():
        lines.append(f"  V_{k:<12s} {_fmt(v, sd)}")
    for k, (v, sd) in rec.fidelities.items():
        lines.append(f"  F_{k:<12s} {_fmt(v, sd)}")
    return "\n".join(lines)


def _write_outputs(out: str, rows, rho, meta, append: bool = False) -> None:
    report.write_report(out, rows, append=append)
    if rho is not None:
        Path(f"{out}.rho.csv").write_text(report.format_density(rho, meta))


def cmd_simulate(args) -> int:
    s = _seeded(_scenario(args.scenario), args.seed)
    rec = _run(s, args.backend, args.slots)
    h = scenario_hash(s)
    print(summary_table(rec, f"scenario {args.scenario} ({h})"))
    if args.out:
        row = report.ReportRow.from_record(rec, scenario_hash=h)
        _write_outputs(args.out, [row], rec.conditional_state, {"seed": rec.seed, "scenario_hash": h}, args.append)
    return EXIT_OK


def _values(text: str) -> list[float]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise ParseError("--values needs at least one number")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"--values must be comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    s = _seeded(_scenario(args.scenario), args.seed)
    values = _values(args.values)
    try:
        with_parameter(s, args.param, values[0])  # reject unknown paths before running
    except ScenarioError as exc:
        raise ParseError(str(exc)) from exc
    spec = SweepSpec(args.param, tuple(values), args.slots)
    rows = []
    print(f"{args.param:>16s} {'singles_d1':>12s} {'singles_d2':>12s} {'fourfold_max':>13s} {'V_ent_V':>9s} {'F_avg':>9s}")
    for v, rec in zip(values, experiments.sweep(s, spec, backend=args.backend)):
        rec.seed = s.run.seed
        sc = with_parameter(s, args.param, v)
        rows.append(report.ReportRow.from_record(rec, args.param, v, scenario_hash(sc)))
        print(
            f"{v:16.6g} {rec.singles['d1']:12.6g} {rec.singles['d2']:12.6g} {rec.max_fourfold:13.6g}"
            f" {rec.visibilities['ent_V'][0]:9.5f} {rec.f_avg:9.5f}"
        )
    if args.out:
        report.write_report(args.out, rows, append=args.append)
    return EXIT_OK


def _inputs(text: str) -> list[str]:
    labels = [p.strip().upper() for p in text.split(",") if p.strip()]
    if not labels:
        raise ParseError("--inputs needs at least one label")
    for lab in labels:
        if lab not in TOMOGRAPHY_LABELS:
            raise ParseError(f"unknown input label {lab!r}")
    return labels


def format_fidelities(fids: dict[str, tuple[float, float]], seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"{FIDELITY_HEADER}\n# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", "fidelity", "sigma"])
    for k, (f, sd) in fids.items():
        w.writerow([k, repr(float(f)), repr(float(sd))])
    return buf.getvalue()


def cmd_tomography(args) -> int:
    s = _seeded(_scenario(args.scenario), args.seed)
    labels = _inputs(args.inputs)
    exposure = s.run.exposure_s if args.exposure is None else args.exposure
    if not exposure > 0:
        raise ScenarioError("exposure must be positive")
    data = experiments.teleportation_experiment(
        s, [PureState.from_label(lab) for lab in labels], [analyzer(t) for t in TOMOGRAPHY_LABELS], exposure
    )
    h = scenario_hash(s)
    counts = {}
    for i, lab in enumerate(labels):
        c = data.tomography[lab]
        if not args.expected:
            c = c.replace_values(rng_stream(s.run.seed, 7, i).poisson(c.values))
        c.scenario_hash = h
        counts[lab] = c
    fids, rhos = {}, {}
    for i, lab in enumerate(labels):
        target = PureState.from_label(lab)
        res = mle_reconstruct(counts[lab], target)
        sd = bootstrap_uncertainty(
            counts[lab], fidelity_statistic(target), s.run.bootstrap_resamples, rng_stream(s.run.seed, 8, i)
        )
        fids[lab], rhos[lab] = (res.fidelity_to_target, sd), res.rho.entries
    if all(k in fids for k in ("H", "V", "D", "A")):
        poles = 0.5 * (fids["H"][0] + fids["V"][0])
        equator = 0.5 * (fids["D"][0] + fids["A"][0])
        sd = math.sqrt(sum((fids[k][1] / 6) ** 2 for k in "HV") + sum((fids[k][1] / 3) ** 2 for k in "DA"))
        fids["avg"] = (average_fidelity(poles, equator), sd)
    print(f"scenario {args.scenario} ({h})  exposure {exposure:g} s per setting  seed {s.run.seed}")
    for lab, c in counts.items():
        cells = "  ".join(f"{t}:{v:.6g}" for t, v in zip(TOMOGRAPHY_LABELS, c.values))
        print(f"  input {lab}  counts {cells}")
    for k, (f, sd) in fids.items():
        print(f"  F_{k:<6s} {_fmt(f, sd)}")
    if args.out:
        Path(args.out).write_text(report.format_counts(counts, s.run.seed))
        Path(f"{args.out}.fidelity.csv").write_text(format_fidelities(fids, s.run.seed))
        for lab, rho in rhos.items():
            meta = {"input": lab, "seed": s.run.seed, "scenario_hash": h}
            Path(f"{args.out}.rho.{lab}.csv").write_text(report.format_density(rho, meta))
    return EXIT_OK


def parse_targets(text: str):
    """Targets file: header line, then CSV ``observable,value,sigma,launch_power_mw``."""
    from .engine.calibration import Target

    lines = text.splitlines()
    if not lines or lines[0].strip() != TARGETS_HEADER:
        raise ParseError(f"missing or unsupported header line (expected {TARGETS_HEADER!r})")
    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("#")]
    out = []
    try:
        for r in csv.DictReader(body):
            out.append(
                Target(r["observable"].strip(), float(r["value"]), float(r["sigma"]), float(r.get("launch_power_mw") or 0))
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed targets file: {exc}") from exc
    if not out:
        raise ParseError("targets file lists no targets")
    return out


def format_targets(targets) -> str:
    lines = [TARGETS_HEADER, "observable,value,sigma,launch_power_mw"]
    lines += [f"{t.observable},{t.value!r},{t.sigma!r},{t.launch_power!r}" for t in targets]
    return "\n".join(lines) + "\n"


def cmd_calibrate(args) -> int:
    from .engine.calibration import FREE_PARAMETERS, calibrate

    try:
        text = Path(args.targets).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {args.targets}: {exc}") from exc
    targets = parse_targets(text)
    s = _scenario(args.scenario)
    free = [p.strip() for p in args.free.split(",") if p.strip()] if args.free else list(FREE_PARAMETERS)
    res = calibrate(s, targets, free)
    print(f"calibration {'converged' if res.success else 'FAILED'} after {res.evaluations} evaluations")
    for k, v in res.parameters.items():
        print(f"  {k:<40s} {v:.6g}")
    for k, r in res.residuals.items():
        print(f"  {k:<20s} model {res.model_values[k]:.6g}  pull {r:+.3g}")
    comments = {"": ["fitted by coexsim calibrate", *(f"{k} = {v!r}" for k, v in res.parameters.items())]}
    comments[""] += [f"residual {k}: {r:+.3e} sigma" for k, r in res.residuals.items()]
    if args.out:
        Path(args.out).write_text(dumps(res.scenario, comments))
    if not res.success:
        print(f"error: {res.message}", file=sys.stderr)
        return EXIT_MODEL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coexsim", description="Quantum teleportation over fiber shared with classical traffic.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mc=True):
        sp.add_argument("scenario", help="scenario file, or 'bundled' for the calibrated default")
        sp.add_argument("--seed", type=int, default=None, help="overrides COEXSIM_SEED and the scenario seed")
        sp.add_argument("--out", help="output file")
        if mc:
            sp.add_argument("--backend", choices=("analytic", "mc"), default="analytic")
            sp.add_argument("--slots", type=int, default=None, help="Monte Carlo slot budget per quantity")
            sp.add_argument("--append", action="store_true", help="append rows to an existing report")

    sp = sub.add_parser("simulate", help="one result record")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="one record per parameter value")
    common(sp)
    sp.add_argument("--param", required=True, help="parameter path, e.g. launch_power or links.target.extra_loss_db")
    sp.add_argument("--values", required=True, help="comma-separated values")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("tomography", help="simulated tomography counts and reconstructions")
    common(sp, mc=False)
    sp.add_argument("--inputs", default="H,V,D,A")
    sp.add_argument("--exposure", type=float, default=None, help="seconds per analyzer setting")
    sp.add_argument("--expected", action="store_true", help="use expected counts instead of Poisson draws")
    sp.set_defaults(func=cmd_tomography)

    sp = sub.add_parser("calibrate", help="fit free parameters to a targets file")
    sp.add_argument("targets")
    sp.add_argument("scenario")
    sp.add_argument("--out", help="fitted scenario file")
    sp.add_argument("--free", help="comma-separated parameter paths to fit")
    sp.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad arguments
    try:
        return args.func(args)
    except (ParseError, ScenarioFileError, report.ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ScenarioError, TruncationError, TomographyError, StateError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
