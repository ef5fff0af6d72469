"""Command-line experiment runner.

Subcommands::

    exact               exact sector energies (S0/T1/S1 style labels) per fixture
    run                 run the configured method on every fixture, serially
    sweep               same as run, with --jobs worker processes
    compare-optimizers  one fixture, several optimizer configs, gap to exact target
    taper-info          symmetry generators and reduced size of a Hamiltonian
    resources           gate/parameter counts of the configured circuits
    emit-gnuplot        write gnuplot scripts next to result CSVs

Outputs are CSV (header row, 12 significant digits).  The default output
directory is ``$EXCITED_VQE_OUTPUT`` or ``./results``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

from .config import ExperimentConfig
from .errors import ConfigError, FcidumpParseError
from .exact import spin_label
from .experiment import (PointResult, build_circuit, build_problem, compare_optimizers,
                         fixture_list, solve_point)
from .ansatz import resources
from .optimizers import OptimizerConfig

OUTPUT_ENV = "EXCITED_VQE_OUTPUT"


def fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    """Write atomically: render to memory, then replace the target."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    tmp.replace(path)


ENERGY_HEADER = ["molecule", "bond_length_angstrom", "method", "state", "energy_ha", "exact_ha",
                 "relative_error", "variance_ha2", "s2_exact", "iterations", "converged"]
RESOURCE_HEADER = ["molecule", "bond_length_angstrom", "state", "circuit", "n_qubits",
                   "one_qubit_gates", "two_qubit_gates", "depth", "n_params"]


def energy_rows(res: PointResult) -> list[list]:
    rows = []
    rec = res.record
    for k, e in enumerate(res.energies):
        if rec is None:
            iters, conv = 0, True
        elif len(rec.stage_iterations) == len(res.energies):
            iters, conv = rec.stage_iterations[k], rec.converged
        else:
            iters, conv = rec.iterations_used, rec.converged
        s2 = res.s2_labels[k] if k < len(res.s2_labels) else ""
        rows.append([res.molecule, float(res.bond_length), res.method, k, float(e),
                     float(res.exact[k]), float(res.relative_errors[k]), float(res.variances[k]),
                     float(s2) if s2 != "" else "", iters, conv])
    return rows


def trace_rows(res: PointResult) -> list[list]:
    rec = res.record
    if rec is None:
        return []
    rows, start = [], 0
    stages = rec.stage_iterations or (len(rec.loss_trace),)
    for stage, n in enumerate(stages):
        for i in range(n):
            rows.append([stage, i, float(rec.loss_trace[start + i])])
        start += n
    return rows


def resource_rows(res: PointResult) -> list[list]:
    return [[res.molecule, float(res.bond_length), k, name, res.n_qubits, r.one_qubit_gates,
             r.two_qubit_gates, r.depth, r.n_params]
            for k, (name, r) in enumerate(zip(res.circuit_names, res.resources))]


def _tag(res: PointResult) -> str:
    return f"{res.molecule}_{res.bond_length:g}"


def _solve(args):
    cfg, molecule, r, path = args
    return solve_point(cfg, molecule, r, path)


def check_failed(cfg: ExperimentConfig, results: list[PointResult]) -> list[str]:
    """Acceptance-style checks enabled by ``check_tolerance``."""
    if cfg.check_tolerance is None:
        return []
    bad = []
    for res in results:
        values = res.variances if res.method.startswith("fs_") else res.relative_errors
        for k, v in enumerate(values):
            if not v < cfg.check_tolerance:
                bad.append(f"{res.molecule} {res.bond_length:g} A state {k}: {v:.3e} "
                           f">= {cfg.check_tolerance:g}")
    return bad


def run_experiment(cfg: ExperimentConfig, out: Path, jobs: int = 1) -> tuple[int, list[PointResult]]:
    points = fixture_list(cfg)
    if not points:
        raise ConfigError("fixtures: empty fixture list")
    tasks = [(cfg, m, r, p) for m, r, p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_solve, tasks))
    else:
        results = [_solve(t) for t in tasks]
    results.sort(key=lambda r: (r.molecule, r.bond_length, r.method))
    rows, res_rows = [], []
    for res in results:
        rows += energy_rows(res)
        res_rows += resource_rows(res)
        if res.record is not None:
            write_csv(out / f"trace_{cfg.method}_{_tag(res)}.csv", ["stage", "iteration", "loss"],
                      trace_rows(res))
    write_csv(out / f"energies_{cfg.method}.csv", ENERGY_HEADER, rows)
    if res_rows:
        write_csv(out / f"resources_{cfg.method}.csv", RESOURCE_HEADER, res_rows)
    (out / f"config_{cfg.method}.json").write_text(cfg.to_json())
    status = 1 if any(r.aborted for r in results) else 0
    return status, results


# --------------------------------------------------------------------------
# argument handling


def _base_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {args.config} ({exc})") from exc
    if getattr(args, "method", None):
        data["method"] = args.method
    if getattr(args, "molecule", None):
        data["molecule"] = args.molecule
        data.pop("fixtures", None)
    if getattr(args, "bond_lengths", None):
        data["bond_lengths"] = [float(x) for x in args.bond_lengths.split(",")]
    if getattr(args, "fixture", None):
        data["fixtures"] = list(args.fixture)
        data.pop("molecule", None)
        data.pop("bond_lengths", None)
    if getattr(args, "ansatz", None):
        data["ansatz"] = args.ansatz
    if getattr(args, "layers", None):
        data["layers"] = [int(x) for x in args.layers.split(",")]
    if getattr(args, "omega", None) is not None:
        data["omega"] = args.omega
    if getattr(args, "tapering", None) is not None:
        data["tapering"] = args.tapering
    if getattr(args, "frozen", None) is not None:
        data["active_space"] = {"frozen_occupied": list(range(args.frozen)), "removed_virtual": []}
    return ExperimentConfig.from_dict(data)


def _output_dir(args, cfg: ExperimentConfig | None = None) -> Path:
    if getattr(args, "output_dir", None):
        return Path(args.output_dir)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def cmd_run(args) -> int:
    cfg = _base_config(args)
    out = _output_dir(args, cfg)
    status, results = run_experiment(cfg, out, getattr(args, "jobs", 1))
    for res in results:
        for row in energy_rows(res):
            print(",".join(fmt(v) for v in row))
    if args.check:
        failures = check_failed(cfg, results)
        for f in failures:
            print(f"CHECK FAILED: {f}", file=sys.stderr)
        if failures:
            status = 1
    return status


def cmd_exact(args) -> int:
    cfg = replace(_base_config(args), method="exact", n_states=args.states)
    out = _output_dir(args, cfg)
    status, results = run_experiment(cfg, out)
    for res in results:
        labels = ", ".join(f"{e:.8f} ({spin_label(s)})" for e, s in zip(res.energies, res.s2_labels))
        print(f"{res.molecule} {res.bond_length:g} A: {labels}")
    return status


def _optimizer_variants(args, cfg: ExperimentConfig) -> list[OptimizerConfig]:
    if args.variants:
        raw = json.loads(Path(args.variants).read_text())
        return [OptimizerConfig(**v) for v in raw]
    kinds = [k for k in args.optimizers.split(",") if k]
    return [replace(cfg.optimizer, kind=k) for k in kinds]


def cmd_compare(args) -> int:
    cfg = _base_config(args)
    variants = _optimizer_variants(args, cfg)
    if len(variants) < 2:
        raise ConfigError("optimizers: need at least two optimizer configs to compare")
    out = _output_dir(args, cfg)
    rows = []
    for opt, iters, final, target, gap, rec in compare_optimizers(cfg, variants):
        name = f"{opt.kind}_lr{opt.learning_rate:g}"
        trace = out / f"trace_compare_{name}.csv"
        write_csv(trace, ["stage", "iteration", "loss"],
                  [[0, i, float(v)] for i, v in enumerate(rec.loss_trace)])
        rows.append([opt.kind, opt.learning_rate, iters, float(final), float(target), float(gap),
                     rec.converged, trace.name])
        print(f"{name}: iterations={iters} final={final:.10g} gap={gap:.3e}")
    write_csv(out / "compare_optimizers.csv",
              ["optimizer", "learning_rate", "iterations", "final_loss", "target", "gap",
               "converged", "trace_file"], rows)
    return 0


def cmd_taper_info(args) -> int:
    cfg = replace(_base_config(args), tapering=True)
    for molecule, r, path in fixture_list(cfg):
        p = build_problem(cfg, molecule, r, path)
        print(f"{molecule} {r:g} A: {p.full.n_qubits} qubits ({len(p.full)} terms) -> "
              f"{p.hamiltonian.n_qubits} qubits ({len(p.hamiltonian)} terms)")
        for g, q, s in zip(p.symmetries.generators, p.symmetries.chosen_qubits, p.sector):
            print(f"  {g.label}  qubit {q}  sector {s:+d}")
    return 0


def cmd_resources(args) -> int:
    cfg = _base_config(args)
    out = _output_dir(args, cfg)
    rows = []
    for molecule, r, path in fixture_list(cfg):
        p = build_problem(cfg, molecule, r, path)
        for k, layers in enumerate(cfg.layers):
            rep = resources(build_circuit(cfg, p, layers))
            rows.append([molecule, r, k, f"{cfg.ansatz}x{layers}", p.hamiltonian.n_qubits,
                         rep.one_qubit_gates, rep.two_qubit_gates, rep.depth, rep.n_params])
            print(f"{molecule} {r:g} A {cfg.ansatz} x{layers}: " + ", ".join(
                f"{k2}={v}" for k2, v in asdict(rep).items()))
        break  # counts do not depend on bond length
    write_csv(out / "resources.csv", RESOURCE_HEADER, rows)
    return 0


_GNUPLOT_ENERGY = """set datafile separator ','
set key autotitle columnhead
set xlabel 'bond length (A)'
set ylabel 'energy (Ha)'
set terminal pngcairo size 900,600
set output '{stem}.png'
plot for [s=0:{last}] '{name}' using 2:($4==s ? $5 : 1/0) with linespoints title sprintf('state %d', s), \\
     for [s=0:{last}] '{name}' using 2:($4==s ? $6 : 1/0) with lines dashtype 2 title sprintf('exact %d', s)
"""
_GNUPLOT_TRACE = """set datafile separator ','
set key autotitle columnhead
set xlabel 'iteration'
set ylabel 'loss'
set logscale y
set terminal pngcairo size 900,600
set output '{stem}.png'
plot '{name}' using 0:3 with lines title '{stem}'
"""


def cmd_emit_gnuplot(args) -> int:
    root = Path(args.dir)
    written = 0
    for csv_path in sorted(root.glob("*.csv")):
        if csv_path.name.startswith("energies_"):
            with csv_path.open() as fh:
                states = {row["state"] for row in csv.DictReader(fh)}
            text = _GNUPLOT_ENERGY.format(stem=csv_path.stem, name=csv_path.name,
                                          last=max(len(states) - 1, 0))
        elif csv_path.name.startswith("trace_"):
            text = _GNUPLOT_TRACE.format(stem=csv_path.stem, name=csv_path.name)
        else:
            continue
        csv_path.with_suffix(".gp").write_text(text)
        written += 1
    print(f"wrote {written} gnuplot scripts to {root}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="excited-vqe", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, method=True):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--molecule", help="bundled fixture family (h2, h4, lih)")
        p.add_argument("--bond-lengths", help="comma-separated bond lengths in angstrom")
        p.add_argument("--fixture", action="append", help="FCIDUMP path (repeatable)")
        p.add_argument("--ansatz", help="qccsd, uccsd or se")
        p.add_argument("--layers", help="comma-separated layer counts, one per state")
        p.add_argument("--omega", type=float, help="folding energy in Ha")
        p.add_argument("--frozen", type=int, help="number of lowest orbitals to freeze")
        p.add_argument("--tapering", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
        if method:
            p.add_argument("--method", help="exact, vqe, vqd, ssvqe, fs_vqe, fs_vqd, fs_ssvqe")

    p = sub.add_parser("exact", help="exact sector energies")
    common(p, method=False)
    p.add_argument("--states", type=int, default=3)
    p.set_defaults(func=cmd_exact)

    for name, jobs in (("run", False), ("sweep", True)):
        p = sub.add_parser(name, help="run the configured method over the fixtures")
        common(p)
        p.add_argument("--check", action="store_true",
                       help="exit nonzero when a result misses check_tolerance")
        if jobs:
            p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare-optimizers", help="compare optimizers on one fixture")
    common(p)
    p.add_argument("--optimizers", default="gd,qng,adam", help="comma-separated kinds")
    p.add_argument("--variants", help="JSON list of optimizer configs (overrides --optimizers)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("taper-info", help="show Z2 symmetries and the reduced size")
    common(p, method=False)
    p.set_defaults(func=cmd_taper_info)

    p = sub.add_parser("resources", help="circuit resource counts")
    common(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("emit-gnuplot", help="write gnuplot scripts for result CSVs")
    p.add_argument("dir", help="directory holding result CSVs")
    p.set_defaults(func=cmd_emit_gnuplot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        ap.exit(2, f"excited-vqe: error: {exc}\n")
    except FcidumpParseError as exc:
        ap.exit(2, f"excited-vqe: error: {exc}\n")
    except FileNotFoundError as exc:
        ap.exit(2, f"excited-vqe: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
