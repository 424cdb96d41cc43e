"""Experiment orchestration and deterministic CSV reports.

Subcommands mirror the run modes:

    sublexp eval             --experiment iid-peng --out reports/
    sublexp clt-sweep        --experiment stationary-1dep --out reports/
    sublexp gnormal          --config cfg.yaml --out reports/
    sublexp rosenthal        --experiment stationary-1dep --out reports/
    sublexp blocking-inspect --experiment stationary-1dep --out reports/
    sublexp conditions       --experiment truncated-heavy --out reports/

All computation is exact and deterministic; reports are written only after
a run completes, with fixed column order and 12-significant-digit decimals,
so repeated runs produce byte-identical files.  Exit codes: 0 success,
1 configuration/validation error, 2 computation error (state cap exceeded,
scheme instability).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path
from typing import Sequence

from . import blocking as blk
from . import conditions as cond
from . import engine, gnormal, mdep
from .engine import SequenceModel
from .errors import (
    PDENumericsError,
    PDEStabilityError,
    StateCapError,
    ValidationError,
)
from .experiments import (
    ExperimentConfig,
    reference_experiments,
    resolve_config,
    with_overrides,
)

Row = list[object]
Table = tuple[tuple[str, ...], list[Row]]


def _fmt(v: object) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_csv(path: Path, table: Table) -> None:
    header, rows = table
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _functionals(cfg: ExperimentConfig) -> list[engine.Functional]:
    return [engine.catalog_by_name(name) for name in cfg.functionals]


def _grid(cfg: ExperimentConfig, gp: gnormal.GParams) -> gnormal.PDEGrid:
    return gnormal.default_grid(gp, half_width=cfg.gnormal.half_width, nx=cfg.gnormal.nx)


def _sweep_r(cfg: ExperimentConfig) -> float:
    """Variance-ratio plateau: full-prefix ratio at the largest n."""
    if cfg.gnormal.sigma_lo2 is not None:
        return cfg.gnormal.sigma_lo2
    n_max = cfg.n_list[-1]
    model = cfg.model_for(n_max)
    res = engine.eval_sum(model, engine.square(), x_clip=cfg.conditions.tau,
                          state_cap=cfg.state_cap)
    if res.upper <= 0.0:
        raise ValidationError("degenerate model: zero upper second moment")
    return res.lower / res.upper


def _normalizers(cfg: ExperimentConfig, model: SequenceModel, n: int) -> tuple[float, float]:
    """(B_n, b_n) under the configured normalization convention."""
    tau = cfg.conditions.tau
    if tau is None:
        return engine.Bn(model, state_cap=cfg.state_cap)
    up = cond.truncated_B2(model, n, tau)
    lo = sum(
        engine.eval_index(model, k, lambda x: x * x, x_clip=tau)[1]
        for k in range(1, n + 1)
    )
    return math.sqrt(up), math.sqrt(max(lo, 0.0))


# ---------------------------------------------------------------------------
# Runners: each returns {file suffix: table}
# ---------------------------------------------------------------------------

EVAL_HEADER = ("n", "functional", "B_n", "b_n", "upper", "lower", "state_count")


def run_eval(cfg: ExperimentConfig) -> dict[str, Table]:
    rows: list[Row] = []
    for n in cfg.n_list:
        model = cfg.model_for(n)
        B, b = engine.Bn(model, state_cap=cfg.state_cap)
        for f in _functionals(cfg):
            res = engine.eval_sum(model, f, state_cap=cfg.state_cap)
            rows.append([n, f.name, B, b, res.upper, res.lower, res.state_count])
    return {"eval": (EVAL_HEADER, rows)}


SWEEP_HEADER = (
    "n", "functional", "B_n", "b_n", "upper", "lower",
    "gnormal_upper", "gnormal_lower", "abs_err_upper", "abs_err_lower",
    "r", "mean_unc", "m2_ratio", "var_ratio_full",
    "lindeberg_q", "cap_tail_q", "mean_unc_flag",
)

#: The eps used for the per-row Lindeberg/capacity summary columns.
SWEEP_SUMMARY_EPS = 0.25


def run_clt_sweep(cfg: ExperimentConfig) -> dict[str, Table]:
    r = _sweep_r(cfg)
    gp = gnormal.GParams(r, cfg.gnormal.sigma_hi2)
    grid = _grid(cfg, gp)
    fs = _functionals(cfg)
    refs = {}
    for f in fs:
        up = gnormal.solve_gheat(f, gp, grid, cfg.gnormal.time)
        lo = -gnormal.solve_gheat(engine.negated(f), gp, grid, cfg.gnormal.time)
        refs[f.name] = (up, lo)

    rows: list[Row] = []
    for n in cfg.n_list:
        model = cfg.model_for(n)
        B, b = _normalizers(cfg, model, n)
        mean_unc = cond.mean_uncertainty(model, n)
        summary = (
            cond.m2_ratio(model, n),
            cond.variance_ratio(model, n, n),
            cond.lindeberg(model, n, SWEEP_SUMMARY_EPS),
            cond.capacity_tail(model, n, SWEEP_SUMMARY_EPS),
        )
        for f in fs:
            res = engine.eval_sum(model, engine.scaled(f, 1.0 / B),
                                  state_cap=cfg.state_cap)
            up_ref, lo_ref = refs[f.name]
            rows.append([
                n, f.name, B, b, res.upper, res.lower,
                up_ref, lo_ref, abs(res.upper - up_ref), abs(res.lower - lo_ref),
                r, mean_unc, *summary, mean_unc > cfg.mean_unc_flag,
            ])
    return {"clt_sweep": (SWEEP_HEADER, rows)}


def run_gnormal_eval(cfg: ExperimentConfig) -> dict[str, Table]:
    if cfg.gnormal.sigma_lo2 is None:
        raise ValidationError("gnormal_eval needs an explicit gnormal.sigma_lo2")
    gp = gnormal.GParams(cfg.gnormal.sigma_lo2, cfg.gnormal.sigma_hi2)
    grid = _grid(cfg, gp)
    header = (
        "functional", "sigma_lo2", "sigma_hi2", "pde_upper", "pde_lower",
        "quad_ref", *[f"peng@{n}" for n in cfg.peng_n],
    )
    rows: list[Row] = []
    for f in _functionals(cfg):
        up = gnormal.solve_gheat(f, gp, grid, cfg.gnormal.time)
        lo = -gnormal.solve_gheat(engine.negated(f), gp, grid, cfg.gnormal.time)
        try:
            quad = gnormal.gnormal_reference(f, gp, half_width=cfg.gnormal.half_width)
        except ValidationError:
            quad = math.nan
        pengs = [
            gnormal.peng_oracle(f, gp, n, state_cap=cfg.state_cap) for n in cfg.peng_n
        ]
        rows.append([f.name, gp.sigma_lo2, gp.sigma_hi2, up, lo, quad, *pengs])
    return {"gnormal": (header, rows)}


ROSENTHAL_HEADER = (
    "ident", "m", "p", "n", "zero_mean", "lhs",
    "term_moments", "term_variance", "term_means", "fitted_C",
)


def run_rosenthal(cfg: ExperimentConfig) -> dict[str, Table]:
    rows: list[Row] = []
    for inst in mdep.rosenthal_battery(cfg.rosenthal_seed):
        rep = mdep.rosenthal_check(inst.model, inst.p, inst.n, state_cap=cfg.state_cap)
        rows.append([
            inst.ident, inst.m, inst.p, inst.n, inst.zero_mean, rep.lhs,
            rep.term_moments, rep.term_variance, rep.term_means, rep.fitted_C,
        ])
    return {"rosenthal": (ROSENTHAL_HEADER, rows)}


BLOCKING_HEADER = (
    "n", "p_n", "h", "num_cuts", "sum_beta_cuts", "sum_delta_lo", "sum_delta_hi",
    "Btilde2_over_B2", "btilde2_over_B2", "removed_mass",
)
PLAN_HEADER = ("n", "kind", "ordinal", "start", "end")


def run_blocking_inspect(cfg: ExperimentConfig) -> dict[str, Table]:
    diag_rows: list[Row] = []
    plan_rows: list[Row] = []
    for i, n in enumerate(cfg.n_list):
        model = cfg.model_for(n)
        if cfg.blocking.pn_list is not None:
            p_n = cfg.blocking.pn_list[i]
        else:
            p_n = blk.choose_pn(model, n, tol=cfg.blocking.tol)
        plan = blk.build_plan(model, n, p_n)
        diag = blk.diagnostics(model, plan)
        diag_rows.append([
            n, p_n, plan.h, len(plan.cuts), diag.sum_beta_cuts,
            diag.sum_delta_lo, diag.sum_delta_hi,
            diag.Btilde2_over_B2, diag.btilde2_over_B2, diag.removed_mass,
        ])
        for ordinal, c in enumerate(plan.cuts, start=1):
            plan_rows.append([n, "cut", ordinal, c, c])
        for ordinal, blk_indices in enumerate(plan.blocks, start=1):
            if blk_indices:
                plan_rows.append([n, "block", ordinal, blk_indices[0], blk_indices[-1]])
            else:
                plan_rows.append([n, "block", ordinal, 0, 0])
    return {
        "blocking": (BLOCKING_HEADER, diag_rows),
        "blocking_plan": (PLAN_HEADER, plan_rows),
    }


CONDITIONS_HEADER = ("n", "quantity", "key", "value")
TRENDS_HEADER = ("quantity", "key", "slope_logn")


def run_conditions(cfg: ExperimentConfig) -> dict[str, Table]:
    rows: list[Row] = []
    series: dict[tuple[str, str], list[float]] = {}

    def emit(n: int, quantity: str, key: str, value: float, *, trend: bool = True) -> None:
        rows.append([n, quantity, key, value])
        if trend:
            series.setdefault((quantity, key), []).append(value)

    for n in cfg.n_list:
        model = cfg.model_for(n)
        M_grid = cfg.conditions.M if cfg.conditions.M is not None else cond.default_M_grid(n)
        rep = cond.build_report(
            model, n, eps_grid=cfg.conditions.eps, M_grid=M_grid,
            p_grid=cfg.conditions.p, tau=cfg.conditions.tau,
        )
        for eps, v in rep.lindeberg.items():
            emit(n, "lindeberg", f"{eps:g}", v)
        emit(n, "mean_unc", "", rep.mean_unc)
        emit(n, "m2_ratio", "", rep.m2_ratio)
        for M, v in rep.var_ratio.items():
            emit(n, "var_ratio", f"{M}", v, trend=False)
        emit(n, "var_ratio", "full", rep.var_ratio[max(rep.var_ratio)], trend=False)
        for p, v in rep.pth.items():
            emit(n, "pth", f"{p:g}", v)
        for eps, v in rep.cap_tail.items():
            emit(n, "cap_tail", f"{eps:g}", v)
        if rep.trunc is not None:
            emit(n, "trunc_B2", "", rep.trunc.B_n2, trend=False)
            emit(n, "trunc_mean_unc", "", rep.trunc.mean_unc)
            emit(n, "trunc_m2_ratio", "", rep.trunc.m2_ratio, trend=False)
            for M, v in rep.trunc.var_ratio.items():
                emit(n, "trunc_var_ratio", f"{M}", v, trend=False)

    trend_rows: list[Row] = [
        [quantity, key, cond.trend_slope(cfg.n_list, vals)]
        for (quantity, key), vals in series.items()
        if len(vals) == len(cfg.n_list)
    ]
    return {
        "conditions": (CONDITIONS_HEADER, rows),
        "condition_trends": (TRENDS_HEADER, trend_rows),
    }


RUNNERS = {
    "eval": run_eval,
    "clt_sweep": run_clt_sweep,
    "gnormal_eval": run_gnormal_eval,
    "rosenthal": run_rosenthal,
    "blocking_inspect": run_blocking_inspect,
    "conditions": run_conditions,
}


def run(cfg: ExperimentConfig, out_dir: str | Path, mode: str | None = None) -> list[Path]:
    """Execute one mode and write its CSV files; returns the written paths.

    Nothing is written until the whole computation has finished, so a
    failing run leaves no partial output behind.
    """
    mode = mode or cfg.mode
    if mode not in RUNNERS:
        raise ValidationError(f"unknown mode {mode!r}")
    tables = RUNNERS[mode](cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, table in sorted(tables.items()):
        path = out / f"{cfg.name}_{suffix}.csv"
        _write_csv(path, table)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

_SUBCOMMANDS = {
    "eval": "eval",
    "gnormal": "gnormal_eval",
    "clt-sweep": "clt_sweep",
    "rosenthal": "rosenthal",
    "blocking-inspect": "blocking_inspect",
    "conditions": "conditions",
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sublexp",
        description="Sub-linear expectation experiments with deterministic CSV reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="YAML experiment config")
        sp.add_argument(
            "--experiment", default=None,
            help=f"built-in experiment name ({', '.join(sorted(reference_experiments()))})",
        )
        sp.add_argument("--out", required=True, help="output directory for CSV reports")
        sp.add_argument("--grid-nx", type=int, default=None, help="PDE spatial points")
        sp.add_argument("--grid-L", type=float, default=None, help="PDE half width")
        sp.add_argument("--state-cap", type=int, default=None, help="DP state cap")
        sp.add_argument("--tol", type=float, default=None, help="block-size search tolerance")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args.config, args.experiment)
        cfg = with_overrides(
            cfg, grid_nx=args.grid_nx, grid_L=args.grid_L,
            state_cap=args.state_cap, tol=args.tol,
        )
        written = run(cfg, args.out, mode=_SUBCOMMANDS[args.command])
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StateCapError, PDEStabilityError, PDENumericsError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
