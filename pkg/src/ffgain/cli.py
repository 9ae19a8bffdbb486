"""Command-line front end: ``ffgain <subcommand> [options] [files]``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import CampaignConfig, load_config, parse_quantity
from .core import Campaign, GainSolution, NumericalError, ValidationError, wavelength
from .extrapolate import compare_methods, extrapolate_campaign, smoothing_window
from .ffcrit import CRITERIA, criteria_table, delta_phi_max
from .io import (REPORT_COLUMNS, emit_report, format_csv, format_table, read_campaign,
                 report_rows, write_campaign)
from .linksim import CouplingModel, synthesize_campaign, true_gains_db
from .stats import gain_noise_std, reduce_campaign, tune_ripple_amplitude

FORMATS = ("aligned_table", "csv")
_CRITERION_HEADERS = {"d_ff": "d_FF", "d_ff_mil": "d_ff_Mil", "d_ff_uno": "d_ff_Uno", "d_ff_rev": "d_ff_Rev"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


# ---------------------------------------------------------------- workflows

def tuned_model(cfg: CampaignConfig) -> CouplingModel:
    """Coupling model of the config; ripple amplitude tuned if a sigma_f target is set."""
    model = cfg.coupling_model()
    s = cfg.simulator
    if s.include_ripple and s.target_sigma_f_db is not None:
        first = {p: cl[0].distances for p, cl in cfg.cluster_table().items()}
        noise = gain_noise_std(s.noise_sigma_db, s.runs)
        amp = tune_ripple_amplitude(s.target_sigma_f_db, first, list(cfg.antennas),
                                    cfg.ripple_period(), noise)
        model = replace(model, ripple_amplitude_db=amp, ripple_period=cfg.ripple_period())
    return model


def simulate_clusters(cfg: CampaignConfig, model: CouplingModel, clusters=None) -> dict:
    """``{cluster number (1-based): Campaign}``."""
    table = cfg.cluster_table()
    n = len(cfg.clusters.starts)
    wanted = range(1, n + 1) if clusters is None else clusters
    out = {}
    for k in wanted:
        if not 1 <= k <= n:
            raise ValidationError(f"cluster {k} does not exist; the config defines {n}")
        # one noise stream per cluster, so clusters are independent repetitions
        out[k] = synthesize_campaign(cfg.antenna_objects(), {p: c[k - 1] for p, c in table.items()},
                                     cfg.frequency_grid(), model, cfg.simulator.runs, stream=k)
    return out


def simulate_extrapolation(cfg: CampaignConfig, model: CouplingModel) -> Campaign:
    return synthesize_campaign(cfg.antenna_objects(), cfg.extrapolation_segments(),
                               cfg.frequency_grid(), model, cfg.simulator.runs)


def extrapolation_window(cfg: CampaignConfig) -> int:
    if not cfg.extrapolation.smoothing:
        return 1
    return smoothing_window(cfg.extrapolation.step, cfg.ripple_period())


def ffdist_rows(models, frequency_hz):
    """Far-field distance rows: one per model combination, distances in cm.

    ``models`` is a sequence of ``(label, diagonal_m)``; like pairs come
    first, then mixed pairs, in input order.
    """
    lam = wavelength(frequency_hz)
    combos = [(a, a) for a in models]
    combos += [(models[i], models[j]) for i in range(len(models)) for j in range(i + 1, len(models))]
    rows = []
    for (la, da), (lb, db) in combos:
        t = criteria_table(da, db, lam)
        rows.append({"pair": f"{la} to {lb}", **{c: t[c] for c in CRITERIA},
                     "mil_applicable": t["mil_applicable"]})
    return rows


def plan_rows(cfg: CampaignConfig, frequency_hz):
    lam = wavelength(frequency_hz)
    rows = []
    for pair, clusters in cfg.cluster_table().items():
        d1 = cfg.model_for(pair[0])
        d2 = cfg.model_for(pair[1])
        D1, D2 = math.hypot(d1.width, d1.height), math.hypot(d2.width, d2.height)
        crit = criteria_table(D1, D2, lam)
        for k, cl in enumerate(clusters, 1):
            rows.append({
                "pair": "-".join(pair), "models": cfg.pair_models(pair), "cluster": k,
                "start": cl.first, "stop": cl.last, "count": cl.count,
                "delta_phi_max_deg": math.degrees(delta_phi_max(D1, D2, lam, cl.midpoint)),
                **{c: "pass" if cl.first >= crit[c] * (1 - 1e-12) else "fail" for c in CRITERIA},
            })
    return rows


# ---------------------------------------------------------------- output

def _emit(args, header, rows, csv_rows=None, extra=""):
    """Print a table in the requested format; write CSV too when --out is set."""
    csv_rows = rows if csv_rows is None else csv_rows
    if args.format == "csv":
        text = format_csv(header, csv_rows)
    else:
        text = format_table(header, rows) + extra
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(format_csv(header, csv_rows), encoding="utf-8")


def _cm(x):
    return f"{x * 100:.1f}"


def _pick_frequency(solution: GainSolution, frequency):
    if frequency is None:
        return solution
    k = int(np.argmin(np.abs(solution.frequencies - frequency)))
    sl = slice(k, k + 1)
    return GainSolution(solution.frequencies[sl], {i: np.asarray(g)[sl] for i, g in solution.gain_db.items()},
                        {i: np.asarray(s)[sl] for i, s in solution.sigma_f.items()}, solution.method,
                        solution.ids)


def _load_single(args) -> Campaign:
    if len(args.inputs) != 1:
        raise ValidationError(f"{args.command} takes exactly one campaign file")
    return read_campaign(args.inputs[0])


# ---------------------------------------------------------------- subcommands

def cmd_ffdist(args, cfg):
    freq = args.frequency or cfg.report.frequency
    used = []
    for spec in cfg.antennas.values():
        if spec.model not in used:
            used.append(spec.model)
    order = [m for m in cfg.models if m in used]
    models = [(cfg.models[m].label, math.hypot(cfg.models[m].width, cfg.models[m].height)) for m in order]
    rows = ffdist_rows(models, freq)
    header = ["pair"] + [f"{_CRITERION_HEADERS[c]}_cm" for c in CRITERIA] + ["mil_applicable"]
    table = [[r["pair"]] + [_cm(r[c]) for c in CRITERIA] + ["yes" if r["mil_applicable"] else "no"]
             for r in rows]
    for r in rows:
        if not r["mil_applicable"]:
            print(f"warning: {r['pair']}: smaller aperture is below a tenth of the larger one; "
                  "the MIL criterion is outside its stated range", file=sys.stderr)
    _emit(args, header, table, extra=f"frequency: {freq / 1e9:g} GHz\n")
    return 0


def cmd_plan(args, cfg):
    freq = args.frequency or cfg.report.frequency
    rows = plan_rows(cfg, freq)
    header = ["pair", "models", "cluster", "start_cm", "stop_cm", "count", "delta_phi_max_deg"] + \
        [_CRITERION_HEADERS[c] for c in CRITERIA]
    table = [[r["pair"], r["models"], r["cluster"], _cm(r["start"]), _cm(r["stop"]), r["count"],
              f"{r['delta_phi_max_deg']:.1f}"] + [r[c] for c in CRITERIA] for r in rows]
    _emit(args, header, table, extra=f"frequency: {freq / 1e9:g} GHz\n")
    return 0


def cmd_simulate(args, cfg):
    if not args.out:
        raise ValidationError("simulate needs --out DIRECTORY")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = tuned_model(cfg)
    if cfg.simulator.include_ripple:
        print(f"ripple amplitude: {model.ripple_amplitude_db:.4f} dB", file=sys.stderr)
    written = []
    if args.sweep == "extrapolation":
        path = out / "extrapolation.ffc"
        write_campaign(path, simulate_extrapolation(cfg, model))
        written.append(path)
    else:
        clusters = [args.cluster] if args.cluster else None
        for k, camp in simulate_clusters(cfg, model, clusters).items():
            path = out / f"cluster{k}.ffc"
            write_campaign(path, camp)
            written.append(path)
    for p in written:
        print(p)
    return 0


def cmd_solve(args, cfg):
    camp = _load_single(args)
    sol, _, _ = reduce_campaign(camp, cfg.solver.mode, cfg.stats.average_domain, cfg.stats.std)
    sol = _pick_frequency(sol, args.frequency)
    rows = [r[:3] for r in report_rows(sol)]
    _emit(args, REPORT_COLUMNS[:3], rows)
    return 0


def cmd_stats(args, cfg):
    camp = _load_single(args)
    sol, _, _ = reduce_campaign(camp, cfg.solver.mode, cfg.stats.average_domain, cfg.stats.std)
    sol = _pick_frequency(sol, args.frequency)
    if args.format == "csv":
        text = emit_report(sol, "csv")
    else:
        rows = report_rows(sol)
        for i in sol.ids:
            rows.append((i, "mean", f"{np.nanmean(sol.gain_db[i]):.2f}", f"{np.nanmean(sol.sigma_f[i]):.2f}"))
        text = format_table(REPORT_COLUMNS, rows)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(emit_report(sol, "csv"), encoding="utf-8")
    return 0


def cmd_extrapolate(args, cfg):
    camp = _load_single(args)
    sol, fits = extrapolate_campaign(camp, cfg.extrapolation.order, extrapolation_window(cfg))
    sol = _pick_frequency(sol, args.frequency)
    rows = [r[:3] for r in report_rows(sol)]
    diag = [["-".join(f.pair), f"{f.span_ratio:.2f}", f"{np.mean(f.asymptote_gain_product_db):.2f}",
             f"{np.max(f.rms_residual_db):.4f}"] for f in fits]
    extra = "\n" + format_table(["pair", "span_ratio", "mean_asymptote_db", "max_rms_residual_db"], diag)
    _emit(args, REPORT_COLUMNS[:3], rows, extra=extra)
    return 0


def cmd_compare(args, cfg):
    if args.inputs and len(args.inputs) != 2:
        raise ValidationError("compare takes a cluster campaign and an extrapolation campaign, or no files")
    if args.inputs:
        ccm_camp, ext_camp = read_campaign(args.inputs[0]), read_campaign(args.inputs[1])
    else:
        model = tuned_model(cfg)
        ccm_camp = simulate_clusters(cfg, model, [args.cluster or 2])[args.cluster or 2]
        ext_camp = simulate_extrapolation(cfg, model)
    if ccm_camp.ids != ext_camp.ids or ccm_camp.grid != ext_camp.grid:
        raise ValidationError("the two campaigns must share antennas and frequency grid")
    ccm, _, _ = reduce_campaign(ccm_camp, cfg.solver.mode, cfg.stats.average_domain, cfg.stats.std)
    ext, _ = extrapolate_campaign(ext_camp, cfg.extrapolation.order, extrapolation_window(cfg))
    truth = true_gains_db(ccm_camp.antennas, ccm_camp.grid, cfg.coupling_model())
    rows = compare_methods(ccm, ext, truth)
    d = args.digits
    header = ["antenna_id", "ccm_dg_avg_db", "extrapolation_dg_avg_db", "method_difference_db"]
    table = [[r.antenna_id, f"{r.ccm_offset_db:.{d}f}", f"{r.extrapolation_offset_db:.{d}f}",
              f"{r.method_difference_db:.{d}f}"] for r in rows]
    _emit(args, header, table)
    return 0


COMMANDS = {
    "ffdist": (cmd_ffdist, "far-field distance criteria per model combination"),
    "plan": (cmd_plan, "cluster schedule with phase deviation and far-field verdicts"),
    "simulate": (cmd_simulate, "write synthetic campaign files from the coupling oracle"),
    "solve": (cmd_solve, "three-antenna gains of a cluster campaign"),
    "stats": (cmd_stats, "gains with per-frequency deviation sigma_f"),
    "extrapolate": (cmd_extrapolate, "gains from a stitched 1/d extrapolation sweep"),
    "compare": (cmd_compare, "compact-cluster versus extrapolation offsets per antenna"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="config file or preset name (config1, config2, config3)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. grid.count=21")
    common.add_argument("--out", help="output path (CSV copy of the table; directory for simulate)")
    common.add_argument("--seed", type=int, help="simulator seed")
    common.add_argument("--frequency", help="frequency, e.g. '170 GHz' or 1.7e11")
    common.add_argument("--format", choices=FORMATS, default="aligned_table")

    parser = _Parser(prog="ffgain", description="Compact-cluster three-antenna gain toolkit.")
    parser.add_argument("--version", action="version", version=f"ffgain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("solve", "stats", "extrapolate", "compare"):
            p.add_argument("inputs", nargs="*", help="campaign file(s)")
        if name in ("simulate", "compare"):
            p.add_argument("--cluster", type=int, help="cluster number (1-based)")
        if name == "simulate":
            p.add_argument("--sweep", choices=("clusters", "extrapolation"), default="clusters")
        if name == "compare":
            p.add_argument("--digits", type=int, default=2, help="decimals in the dB columns")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"simulator.seed={args.seed}")
        cfg = load_config(args.config, overrides)
        if args.frequency is not None:
            try:
                args.frequency = parse_quantity(args.frequency, "frequency")
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
            if not args.frequency > 0:
                raise ValidationError("frequency must be positive")
        return COMMANDS[args.command][0](args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
